use nalgebra::DMatrix;
use semrad::mesh::generate_rectangle_basin;
use semrad::radiation::*;
use semrad::refelem::ReferenceElement;

fn spectrum(nx: usize, nz: usize, p: usize, sym: bool, rec: TraceRecovery) -> (f64, f64) {
    let (length, depth) = (10.0, 1.0);
    let mesh = generate_rectangle_basin(length, depth, nx, nz, sym).unwrap();
    let re = ReferenceElement::new(p).unwrap();
    let imp = design_pseudo_impulse(1.0, depth, Mode::Heave, 3.0, 1e-4, 1e-8)
        .unwrap()
        .with_amplitude(0.0);
    let mut prob = RadiationProblem::new(&mesh, &re, imp, 0.8, AbsorptionConfig::grading_only())
        .unwrap()
        .with_recovery(rec);
    let m = prob.dofs.fs_trace.len();
    let dim = 2 * m;
    let mut op = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..dim {
        let mut eta = vec![0.0; m];
        let mut phi = vec![0.0; m];
        if j < m { eta[j] = 1.0 } else { phi[j - m] = 1.0 }
        let (de, dp, _) = prob.rates(0.0, &eta, &phi).unwrap();
        for i in 0..m {
            op[(i, j)] = de[i];
            op[(m + i, j)] = dp[i];
        }
    }
    let eig = op.complex_eigenvalues();
    let maxabs = eig.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let maxre = eig.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
    (maxre, maxabs)
}

fn main() {
    for rec in [TraceRecovery::VariationalFlux, TraceRecovery::ElementLocalAverage] {
        for p in [1usize, 2, 3, 4, 6] {
            let (maxre, maxabs) = spectrum(10, 2, p, true, rec);
            println!("{rec:?} P={p}: max Re = {maxre:+.3e}  ratio = {:.2e}", maxre / maxabs);
        }
    }
}
