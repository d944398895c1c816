use semrad::hydro::*;
use semrad::radiation::*;
use semrad::mesh::*;
use semrad::refelem::ReferenceElement;

fn main() {
    let (radius, depth, length) = (0.5, 3.0, 5.0);
    let mesh = generate_cylinder_domain(radius, depth, length, 5, 1.15, true).unwrap();
    let re = ReferenceElement::new(3).unwrap();
    let curved = curve_body_elements(&mesh, &re, BodyCurve::Circle { radius }).unwrap();
    let dofs = semrad::assembly::DofMap::build(&curved, &re);
    let dxmax = dofs.fs_spacings().iter().copied().fold(0.0f64, f64::max);
    let imp = design_pseudo_impulse(dxmax, depth, Mode::Heave, 3.0, 1e-4, 1e-8).unwrap();

    for (name, abs) in [
        ("closed   ", AbsorptionConfig::grading_only()),
        ("relax    ", AbsorptionConfig { relaxation: true, sommerfeld: false, zone_length: None }),
        ("sommerfeld", AbsorptionConfig { relaxation: false, sommerfeld: true, zone_length: None }),
        ("both     ", AbsorptionConfig::zones()),
    ] {
        let cfg = RadiationRunConfig { courant: 0.8, absorption: abs, ..Default::default() };
        let mut prob = RadiationProblem::new(&curved, &re, imp, cfg.courant, abs).unwrap();
        match run_problem(&mut prob, &cfg) {
            Ok(rec) => {
                let force = body_force(&rec, &prob.factors, &prob.dofs, &re, Mode::Heave, DEFAULT_RHO).unwrap();
                let n = force.len();
                let peak = force.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
                let i_peak = (0..n).max_by(|&a, &b| force[a].abs().total_cmp(&force[b].abs())).unwrap();
                let fend = force[n-1].abs();
                // max |force| in the last quarter
                let tail = force[3*n/4..].iter().fold(0.0f64, |m, &v| m.max(v.abs()));
                println!("{name}: peak {:.3e} at t={:.2}, tail max/peak = {:.2e}, end/peak = {:.2e}",
                    peak, i_peak as f64 * rec.dt, tail/peak, fend/peak);
            }
            Err(e) => println!("{name}: ERROR {e}"),
        }
    }
}
