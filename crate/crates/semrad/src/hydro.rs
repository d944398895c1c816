//! Pressures, radiation forces, and frequency-dependent added-mass and
//! damping coefficients.
//!
//! The dynamic pressure is the linearized Bernoulli pressure
//! p = -rho d(phi)/dt, differentiated in time with 4th-order finite
//! difference stencils. Forces integrate p against the generalized normals
//! over the wetted body; the coefficient ratio in frequency space uses
//! zero-padded FFTs of the force and displacement signals with the
//! forward kernel exp(-i 2 pi f t), under which
//! omega^2 a - i omega b = F{F} / F{x}.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::assembly::DofMap;
use crate::mesh::{BoundaryTag, GeometricFactors};
use crate::radiation::{Mode, RadiationRecord};
use crate::refelem::ReferenceElement;
use crate::{Error, Result};

/// Default fluid density in kg/m^3.
pub const DEFAULT_RHO: f64 = 1000.0;

/// Finite-difference weights for the m-th derivative on integer offsets,
/// by the method of undetermined coefficients (moment conditions solved as
/// a small linear system).
pub fn fd_weights(offsets: &[i64], deriv: usize) -> Vec<f64> {
    let n = offsets.len();
    assert!(deriv < n, "stencil too short for the requested derivative");
    let a = DMatrix::from_fn(n, n, |row, col| (offsets[col] as f64).powi(row as i32));
    let mut rhs = nalgebra::DVector::zeros(n);
    let mut fact = 1.0;
    for k in 1..=deriv {
        fact *= k as f64;
    }
    rhs[deriv] = fact;
    let w = a.lu().solve(&rhs).expect("distinct offsets give a solvable system");
    w.iter().copied().collect()
}

/// 4th-order time derivative of a uniformly sampled series: centered
/// 5-point stencil in the interior, one-sided 5-point stencils at the ends.
pub fn fd_time_derivative(series: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 5 {
        return Err(Error::InvalidParameter {
            name: "series",
            message: format!("need at least 5 samples for the 4th-order stencil, got {n}"),
        });
    }
    let mut out = vec![0.0; n];
    for i in 0..n {
        let base: i64 = if i < 2 {
            -(i as i64)
        } else if i >= n - 2 {
            -(4 - (n - 1 - i) as i64)
        } else {
            -2
        };
        let offsets: Vec<i64> = (0..5).map(|k| base + k).collect();
        let w = fd_weights(&offsets, 1);
        let mut acc = 0.0;
        for (k, &o) in offsets.iter().enumerate() {
            acc += w[k] * series[(i as i64 + o) as usize];
        }
        out[i] = acc / dt;
    }
    Ok(out)
}

/// Radiation force history F_jk(t) in direction `j` from the recorded body
/// potentials of a mode-k run: p = -rho dphi/dt integrated against the
/// generalized normal n_j over the tagged body faces (the computational
/// half domain; no symmetry completion).
pub fn body_force(
    record: &RadiationRecord,
    factors: &GeometricFactors,
    dofs: &DofMap,
    re: &ReferenceElement,
    j: Mode,
    rho: f64,
) -> Result<Vec<f64>> {
    let nt = record.body_phi.len();
    let nb = record.body_trace.len();
    if nb == 0 {
        return Ok(vec![0.0; nt]);
    }
    // Pressure series per body node.
    let mut pressure = vec![vec![0.0; nb]; nt];
    let mut series = vec![0.0; nt];
    for b in 0..nb {
        for t in 0..nt {
            series[t] = record.body_phi[t][b];
        }
        let dphi = fd_time_derivative(&series, record.dt)?;
        for t in 0..nt {
            pressure[t][b] = -rho * dphi[t];
        }
    }
    // Face-wise quadrature with the generalized normal.
    let trace_pos: HashMap<usize, usize> = record
        .body_trace
        .iter()
        .enumerate()
        .map(|(k, &g)| (g, k))
        .collect();
    let slot = j.slot();
    let mut force = vec![0.0; nt];
    for fg in factors.faces.iter().filter(|f| f.face.tag == BoundaryTag::Body) {
        let globals = &dofs.elem_to_global[fg.face.element];
        let fnodes = &re.face_nodes[fg.face.edge];
        let local: Vec<usize> = fnodes
            .iter()
            .map(|&ln| trace_pos[&globals[ln]])
            .collect();
        for q in 0..fg.quad_w_sj.len() {
            let wn = fg.quad_w_sj[q] * fg.quad_gen_normals[slot][q];
            for (i, &bpos) in local.iter().enumerate() {
                let e = re.face_interp_quad[(q, i)] * wn;
                for t in 0..nt {
                    force[t] += e * pressure[t][bpos];
                }
            }
        }
    }
    Ok(force)
}

/// Frequency-dependent added mass and damping on the resolved band.
#[derive(Debug, Clone)]
pub struct HydroCoefficients {
    /// Angular frequencies (rad/s), ascending, 0 < omega <= cutoff.
    pub omega: Vec<f64>,
    /// Added mass a_jk(omega) (kg/m in 2D).
    pub added_mass: Vec<f64>,
    /// Damping b_jk(omega) (kg/(m s)).
    pub damping: Vec<f64>,
    /// Design cutoff omega_r.
    pub cutoff: f64,
    /// Start of the noise-prone band (0.9 cutoff).
    pub warn_band_start: f64,
}

impl HydroCoefficients {
    /// Indices within the trusted band [lo, hi] * cutoff.
    pub fn band_indices(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.omega.len())
            .filter(|&i| self.omega[i] >= lo * self.cutoff && self.omega[i] <= hi * self.cutoff)
            .collect()
    }

    /// Linear interpolation of (a, b) at an arbitrary frequency.
    pub fn sample(&self, w: f64) -> Option<(f64, f64)> {
        if self.omega.is_empty() || w < self.omega[0] || w > *self.omega.last().unwrap() {
            return None;
        }
        let i = match self.omega.binary_search_by(|x| x.total_cmp(&w)) {
            Ok(i) => return Some((self.added_mass[i], self.damping[i])),
            Err(i) => i,
        };
        let (w0, w1) = (self.omega[i - 1], self.omega[i]);
        let c = (w - w0) / (w1 - w0);
        Some((
            self.added_mass[i - 1] * (1.0 - c) + self.added_mass[i] * c,
            self.damping[i - 1] * (1.0 - c) + self.damping[i] * c,
        ))
    }
}

/// Forward transform F{x}(f_j) = dt * sum_i x_i exp(-i 2 pi j i / N) of a
/// zero-padded real series.
fn padded_fft(series: &[f64], dt: f64, n_pad: usize) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .map(|&v| Complex::new(v, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(n_pad)
        .collect();
    FftPlanner::new().plan_fft_forward(n_pad).process(&mut buf);
    for v in buf.iter_mut() {
        *v *= dt;
    }
    buf
}

/// Extract a_jk(omega), b_jk(omega) from the force and displacement series
/// via omega^2 a - i omega b = F{F} / F{x}.
///
/// Both series are zero-padded by `pad_factor` (rounded up to a power of
/// two) assuming the force has decayed to zero; frequencies above `cutoff`
/// or where the displacement spectrum falls below the division guard are
/// excluded.
pub fn added_mass_damping(
    force: &[f64],
    displacement: &[f64],
    dt: f64,
    pad_factor: usize,
    cutoff: f64,
) -> Result<HydroCoefficients> {
    if force.len() != displacement.len() {
        return Err(Error::InvalidParameter {
            name: "series",
            message: "force and displacement must share the sample grid".into(),
        });
    }
    let n = force.len();
    if n < 8 {
        return Err(Error::InvalidParameter {
            name: "series",
            message: "series too short for coefficient extraction".into(),
        });
    }
    let n_pad = (n * pad_factor.max(1)).next_power_of_two();
    let fhat = padded_fft(force, dt, n_pad);
    let xhat = padded_fft(displacement, dt, n_pad);
    let df = 1.0 / (n_pad as f64 * dt);
    let xmax = xhat.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let guard = 1e3 * f64::EPSILON * xmax;

    let mut omega = Vec::new();
    let mut added_mass = Vec::new();
    let mut damping = Vec::new();
    for jf in 1..n_pad / 2 {
        let w = 2.0 * std::f64::consts::PI * df * jf as f64;
        if w > cutoff {
            break;
        }
        if xhat[jf].norm() <= guard {
            continue;
        }
        let ratio = fhat[jf] / xhat[jf];
        omega.push(w);
        added_mass.push(ratio.re / (w * w));
        damping.push(-ratio.im / w);
    }
    Ok(HydroCoefficients {
        omega,
        added_mass,
        damping,
        cutoff,
        warn_band_start: 0.9 * cutoff,
    })
}

/// Body-shape normalization of the coefficients.
#[derive(Debug, Clone, Copy)]
pub enum Normalization {
    /// Half-submerged circular cylinder of the given radius.
    Cylinder { radius: f64 },
    /// Box of half-length a and draft d.
    Box { half_length: f64, draft: f64 },
}

/// Dimensionless (mu_jk, nu_jk) per frequency. Entries at omega = 0 cannot
/// occur (the zero bin is excluded from extraction).
pub fn normalize(
    coeffs: &HydroCoefficients,
    geometry: Normalization,
    rho: f64,
) -> (Vec<f64>, Vec<f64>) {
    let denom = match geometry {
        Normalization::Cylinder { radius } => 0.5 * std::f64::consts::PI * rho * radius * radius,
        Normalization::Box { half_length, draft } => 2.0 * rho * half_length * draft,
    };
    let mu: Vec<f64> = coeffs.added_mass.iter().map(|a| a / denom).collect();
    let nu: Vec<f64> = coeffs
        .damping
        .iter()
        .zip(&coeffs.omega)
        .map(|(b, w)| b / (denom * w))
        .collect();
    (mu, nu)
}

/// Rigid-lid (infinite-frequency) added mass: one static solve with phi = 0
/// on the free surface and unit generalized-normal flux on the body;
/// a_jk(inf) = rho * int phi n_j dGamma over the tagged body faces.
pub fn infinite_frequency_added_mass(
    mesh: &crate::mesh::Mesh,
    re: &ReferenceElement,
    j: Mode,
    k: Mode,
    rho: f64,
) -> Result<f64> {
    use crate::assembly::{assemble_stiffness, DofMap};
    let factors = crate::mesh::geometric_factors(mesh, re)?;
    let dofs = DofMap::build(mesh, re);
    let mut sys = assemble_stiffness(mesh, &factors, re, &dofs)?;
    let kslot = k.slot();
    sys.add_neumann_flux(&factors, &dofs, re, BoundaryTag::Body, |fg, q| {
        fg.quad_gen_normals[kslot][q]
    });
    let mut dnodes: Vec<usize> = dofs.fs_trace.clone();
    if k.antisymmetric() {
        if let Some(sym) = dofs.tag_nodes.get(&BoundaryTag::Symmetry) {
            dnodes.extend(sym.iter().copied());
        }
    }
    dnodes.sort_unstable();
    dnodes.dedup();
    sys.impose_dirichlet(&dnodes, &vec![0.0; dnodes.len()])?;
    let phi = sys.solve()?;

    let jslot = j.slot();
    let mut acc = 0.0;
    for fg in factors.faces.iter().filter(|f| f.face.tag == BoundaryTag::Body) {
        let globals = &dofs.elem_to_global[fg.face.element];
        let fnodes = &re.face_nodes[fg.face.edge];
        for q in 0..fg.quad_w_sj.len() {
            let mut phi_q = 0.0;
            for (i, &ln) in fnodes.iter().enumerate() {
                phi_q += re.face_interp_quad[(q, i)] * phi[globals[ln]];
            }
            acc += fg.quad_w_sj[q] * phi_q * fg.quad_gen_normals[jslot][q];
        }
    }
    Ok(rho * acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn centered_weights_match_undetermined_coefficients() {
        let w = fd_weights(&[-2, -1, 0, 1, 2], 1);
        let expect = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(&expect) {
            assert_relative_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn quartic_derivative_is_exact() {
        let dt = 0.1;
        let n = 30;
        let series: Vec<f64> = (0..n).map(|i| (i as f64 * dt).powi(4)).collect();
        let d = fd_time_derivative(&series, dt).unwrap();
        for i in 0..n {
            let t = i as f64 * dt;
            let exact = 4.0 * t.powi(3);
            assert!(
                (d[i] - exact).abs() < 1e-10 * (1.0 + exact.abs()),
                "i={i}: {} vs {exact}",
                d[i]
            );
        }
    }

    #[test]
    fn constant_series_has_zero_derivative() {
        let d = fd_time_derivative(&vec![3.7; 12], 0.05).unwrap();
        assert!(d.iter().all(|&v| v.abs() < 1e-11));
    }

    #[test]
    fn short_series_is_rejected() {
        assert!(fd_time_derivative(&[1.0, 2.0, 3.0], 0.1).is_err());
    }

    #[test]
    fn synthetic_gaussian_recovers_reaction_coefficients() {
        // Passive radiation reaction F = -(A xddot + B xdot) built from the
        // closed-form Gaussian; the extraction must return a = A, b = B flat
        // across the resolved band.
        let (a_true, b_true) = (2.5, 1.3);
        let s = 0.4;
        let t0 = 2.5;
        let dt = 0.004;
        let n = ((3.0 * t0) / dt) as usize + 1;
        let x = |t: f64| (-2.0 * PI * PI * s * s * (t - t0) * (t - t0)).exp();
        let xd = |t: f64| -4.0 * PI * PI * s * s * (t - t0) * x(t);
        let xdd = |t: f64| {
            let u = t - t0;
            (-4.0 * PI * PI * s * s + (4.0 * PI * PI * s * s * u) * (4.0 * PI * PI * s * s * u))
                * x(t)
        };
        let disp: Vec<f64> = (0..n).map(|i| x(i as f64 * dt)).collect();
        let force: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                -(a_true * xdd(t) + b_true * xd(t))
            })
            .collect();
        let fr = s * (-2.0f64 * (1e-4f64).ln()).sqrt();
        let cutoff = 2.0 * PI * fr;
        let coeffs = added_mass_damping(&force, &disp, dt, 8, cutoff).unwrap();
        let band = coeffs.band_indices(0.1, 0.9);
        assert!(band.len() > 20);
        for &i in &band {
            assert!(
                (coeffs.added_mass[i] - a_true).abs() / a_true < 5e-3,
                "a({}) = {}",
                coeffs.omega[i],
                coeffs.added_mass[i]
            );
            assert!(
                (coeffs.damping[i] - b_true).abs() / b_true < 5e-3,
                "b({}) = {}",
                coeffs.omega[i],
                coeffs.damping[i]
            );
        }
    }

    #[test]
    fn zero_force_gives_zero_coefficients() {
        let dt = 0.01;
        let n = 512;
        let s = 0.5;
        let disp: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                (-2.0 * PI * PI * s * s * (t - 2.0) * (t - 2.0)).exp()
            })
            .collect();
        let coeffs = added_mass_damping(&vec![0.0; n], &disp, dt, 8, 10.0).unwrap();
        assert!(coeffs.added_mass.iter().all(|&v| v == 0.0));
        assert!(coeffs.damping.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn padding_is_pure_interpolation() {
        let (a_true, b_true) = (1.7, 0.6);
        let s = 0.5;
        let t0 = 2.2;
        let dt = 0.005;
        let n = ((3.0 * t0) / dt) as usize + 1;
        let x = |t: f64| (-2.0 * PI * PI * s * s * (t - t0) * (t - t0)).exp();
        let xd = |t: f64| -4.0 * PI * PI * s * s * (t - t0) * x(t);
        let xdd = |t: f64| {
            let u = t - t0;
            (-4.0 * PI * PI * s * s + (4.0 * PI * PI * s * s * u).powi(2)) * x(t)
        };
        let disp: Vec<f64> = (0..n).map(|i| x(i as f64 * dt)).collect();
        let force: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                -(a_true * xdd(t) + b_true * xd(t))
            })
            .collect();
        let c1 = added_mass_damping(&force, &disp, dt, 8, 6.0).unwrap();
        let c2 = added_mass_damping(&force, &disp, dt, 16, 6.0).unwrap();
        // Every frequency of the coarser grid exists in the finer one.
        for (i, &w) in c1.omega.iter().enumerate() {
            let (a2, b2) = c2.sample(w).expect("common band");
            assert!(
                (c1.added_mass[i] - a2).abs() / a_true < 1e-6,
                "a at {w}: {} vs {a2}",
                c1.added_mass[i]
            );
            assert!((c1.damping[i] - b2).abs() / b_true < 1e-6);
        }
    }

    #[test]
    fn normalization_definitions() {
        let coeffs = HydroCoefficients {
            omega: vec![1.0, 2.0],
            added_mass: vec![0.5 * PI * 1000.0 * 0.25, 1.0],
            damping: vec![0.5 * PI * 1000.0 * 0.25 * 2.0, 2.0],
            cutoff: 3.0,
            warn_band_start: 2.7,
        };
        let (mu, nu) = normalize(&coeffs, Normalization::Cylinder { radius: 0.5 }, 1000.0);
        assert_relative_eq!(mu[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(nu[1], 2.0 / (0.5 * PI * 1000.0 * 0.25 * 2.0), epsilon = 1e-14);
        let coeffs_box = HydroCoefficients {
            omega: vec![1.0],
            added_mass: vec![2.0 * 1000.0],
            damping: vec![0.0],
            cutoff: 3.0,
            warn_band_start: 2.7,
        };
        let (mu, _) = normalize(&coeffs_box, Normalization::Box { half_length: 1.0, draft: 1.0 }, 1000.0);
        assert_relative_eq!(mu[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn division_guard_excludes_unresolved_frequencies() {
        // A compactly supported Gaussian decays below the guard well before
        // an absurdly high cutoff; those frequencies must be dropped rather
        // than amplified.
        let dt = 0.01;
        let n = 1001;
        let s = 0.5;
        let t0 = 5.0;
        let disp: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                (-2.0 * PI * PI * s * s * (t - t0) * (t - t0)).exp()
            })
            .collect();
        let force = disp.clone();
        let coeffs = added_mass_damping(&force, &disp, dt, 4, 1e6).unwrap();
        let w_max = coeffs.omega.last().copied().unwrap_or(0.0);
        // The guard (1e3 eps relative) trips near |xhat|/max ~ 2e-13, i.e.
        // f^2 = 2 s^2 ln(5e12), f ~ 3.8 Hz; far below the 1e6 cutoff.
        assert!(w_max < 2.0 * PI * 5.0, "kept up to {w_max}");
        assert!(w_max > 2.0 * PI * 2.0, "kept only up to {w_max}");
    }
}
