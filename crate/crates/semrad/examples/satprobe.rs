use semrad::assembly::{assemble_stiffness, DofMap};
use semrad::mesh::*;
use semrad::refelem::ReferenceElement;
use sprs::CsMat;

fn build(mesh: &Mesh, p: usize, strength: usize) -> (CsMat<f64>, f64) {
    let re = ReferenceElement::with_cubature_strength(p, strength).unwrap();
    let curved = curve_body_elements(mesh, &re, BodyCurve::Circle { radius: 1.0 }).unwrap();
    let f = geometric_factors(&curved, &re).unwrap();
    let dofs = DofMap::build(&curved, &re);
    let sys = assemble_stiffness(&curved, &f, &re, &dofs).unwrap();
    let scale = sys.matrix.iter().map(|(&v, _)| v.abs()).fold(0.0, f64::max);
    (sys.matrix, scale)
}

fn diff(a: &CsMat<f64>, b: &CsMat<f64>) -> f64 {
    let mut m = 0.0f64;
    for (i, row) in a.outer_iterator().enumerate() {
        for (j, &v) in row.iter() {
            m = m.max((v - b.get(i, j).copied().unwrap_or(0.0)).abs());
        }
    }
    m
}

fn main() {
    for beta in [4usize, 6, 8] {
        let mesh = generate_cylinder_domain(1.0, 6.283, 10.0, beta, 1.3, true).unwrap();
        for p in [3usize, 4] {
            let (aref, scale) = build(&mesh, p, 40);
            for s in [2*p+2, 2*p+6, 2*p+10, 2*p+14, 2*p+18] {
                let (a, _) = build(&mesh, p, s);
                println!("beta={beta} P={p} strength={s}: rel diff to strength-40 = {:.3e}", diff(&a, &aref)/scale);
            }
        }
    }
}
