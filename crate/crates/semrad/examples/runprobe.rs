use semrad::hydro::*;
use semrad::radiation::*;
use semrad::mesh::*;
use semrad::refelem::ReferenceElement;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let (radius, depth, length) = (0.5, 3.0, 5.0);
    let mesh = generate_cylinder_domain(radius, depth, length, 5, 1.15, true).unwrap();
    let re = ReferenceElement::new(3).unwrap();
    let curved = curve_body_elements(&mesh, &re, BodyCurve::Circle { radius }).unwrap();
    println!("mesh: {} elements", curved.n_elements());

    let dofs_probe = semrad::assembly::DofMap::build(&curved, &re);
    let spacings = dofs_probe.fs_spacings();
    let dxmax = spacings.iter().copied().fold(0.0f64, f64::max);
    let dxmin = spacings.iter().copied().fold(f64::INFINITY, f64::min);
    println!("N_dof = {}, fs spacing in [{dxmin:.4}, {dxmax:.4}]", dofs_probe.n_dof);

    let imp = design_pseudo_impulse(dxmax, depth, Mode::Heave, 3.0, 1e-4, 1e-8).unwrap();
    println!("impulse: s={:.4} t0={:.3} omega_r={:.3} t_end={:.3}", imp.width, imp.peak_time, imp.max_omega, 3.0*imp.peak_time);

    let cfg = RadiationRunConfig { courant: 0.8, monitor_x: vec![radius], ..Default::default() };
    let mut prob = RadiationProblem::new(&curved, &re, imp, cfg.courant, cfg.absorption).unwrap();
    println!("dt = {:.5}, steps = {}", prob.dt, prob.n_steps);
    let rec = run_problem(&mut prob, &cfg).unwrap();
    println!("run took {:.2?}", t0.elapsed());

    let force = body_force(&rec, &prob.factors, &prob.dofs, &re, Mode::Heave, DEFAULT_RHO).unwrap();
    let fpeak = force.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let fend = force.last().unwrap().abs();
    println!("F33 peak = {:.4e}, |F(t_end)|/peak = {:.3e}", fpeak, fend / fpeak);
    // Shape: one main trough/peak pair then decay.
    let n = force.len();
    let i_min = (0..n).min_by(|&a, &b| force[a].total_cmp(&force[b])).unwrap();
    let i_max = (0..n).max_by(|&a, &b| force[a].total_cmp(&force[b])).unwrap();
    println!("trough at t={:.3} ({:.3e}), peak at t={:.3} ({:.3e}), t0={:.3}",
        i_min as f64 * rec.dt, force[i_min], i_max as f64 * rec.dt, force[i_max], imp.peak_time);

    let coeffs = added_mass_damping(&force, &rec.displacement, rec.dt, 8, imp.max_omega).unwrap();
    let band = coeffs.band_indices(0.1, 0.9);
    let bpeak = band.iter().map(|&i| coeffs.damping[i]).fold(0.0f64, f64::max);
    let bmin = band.iter().map(|&i| coeffs.damping[i]).fold(f64::INFINITY, f64::min);
    println!("damping on band: min = {:.3e}, peak = {:.3e} (passivity ratio {:.2e})", bmin, bpeak, bmin/bpeak);
    let a_top = band.last().map(|&i| coeffs.added_mass[i]).unwrap();
    println!("a33 at 0.9 cutoff = {:.4e}", a_top);

    let ainf = infinite_frequency_added_mass(&curved, &re, Mode::Heave, Mode::Heave, DEFAULT_RHO).unwrap();
    println!("rigid-lid a33(inf) = {:.4e}", ainf);
    // Reference: deep-water half-cylinder heave added mass at high freq ~ 0.5*pi*rho*R^2/2...
    println!("half-disk area*rho = {:.4e}", 0.5 * std::f64::consts::PI * DEFAULT_RHO * radius * radius / 2.0);

    // small-alpha run for the top-of-band comparison
    let imp2 = design_pseudo_impulse(dxmax, depth, Mode::Heave, 0.5, 1e-4, 1e-8).unwrap();
    let mut prob2 = RadiationProblem::new(&curved, &re, imp2, cfg.courant, cfg.absorption).unwrap();
    let rec2 = run_problem(&mut prob2, &cfg).unwrap();
    let force2 = body_force(&rec2, &prob2.factors, &prob2.dofs, &re, Mode::Heave, DEFAULT_RHO).unwrap();
    let coeffs2 = added_mass_damping(&force2, &rec2.displacement, rec2.dt, 8, imp2.max_omega).unwrap();
    let band2 = coeffs2.band_indices(0.1, 0.9);
    let a_top2 = band2.last().map(|&i| coeffs2.added_mass[i]).unwrap();
    let w_top2 = band2.last().map(|&i| coeffs2.omega[i]).unwrap();
    println!("alpha=0.5: omega_r = {:.3}, a33 at 0.9 cutoff (w={w_top2:.2}) = {:.4e}, vs ainf rel diff = {:.3}",
        imp2.max_omega, a_top2, (a_top2 - ainf).abs() / ainf);
    println!("total {:.2?}", t0.elapsed());
}
