//! Operators on the reference simplex shared by every element.
//!
//! The reference domain is the triangle `(r, s) >= -1, r + s <= 0`. An
//! orthonormal modal basis of total order `P` is built from Jacobi
//! polynomials in collapsed coordinates, and a well-conditioned nodal set
//! (vertices, Gauss-Lobatto edge nodes, warp-and-blend interior nodes)
//! turns it into Lagrange operators through the generalized Vandermonde
//! matrix.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::gamma;

use crate::{Error, Result};

/// Largest polynomial order the nodal construction is validated for.
pub const MAX_ORDER: usize = 12;

/// Number of nodes of an order-`p` simplex element.
pub fn node_count(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

// ---------------------------------------------------------------------------
// 1D Jacobi machinery
// ---------------------------------------------------------------------------

fn check_weights(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > -1.0) || !(beta > -1.0) {
        return Err(Error::InvalidParameter {
            name: "jacobi weights",
            message: format!("require alpha, beta > -1, got ({alpha}, {beta})"),
        });
    }
    Ok(())
}

/// L2-orthonormal Jacobi polynomial of degree `n` with weights `(alpha, beta)`
/// evaluated at `x`.
pub fn jacobi_poly(n: usize, alpha: f64, beta: f64, x: f64) -> Result<f64> {
    check_weights(alpha, beta)?;
    Ok(jacobi_unchecked(n, alpha, beta, x))
}

/// Recurrence evaluation without precondition checks; used in inner loops.
fn jacobi_unchecked(n: usize, a: f64, b: f64, x: f64) -> f64 {
    // Normalized so that int_{-1}^{1} (1-x)^a (1+x)^b P_m P_n dx = delta_mn.
    let gamma0 = 2f64.powf(a + b + 1.0) / (a + b + 1.0) * gamma(a + 1.0) * gamma(b + 1.0)
        / gamma(a + b + 1.0);
    let mut pl_prev = 1.0 / gamma0.sqrt();
    if n == 0 {
        return pl_prev;
    }
    let gamma1 = (a + 1.0) * (b + 1.0) / (a + b + 3.0) * gamma0;
    let mut pl = ((a + b + 2.0) * x / 2.0 + (a - b) / 2.0) / gamma1.sqrt();
    if n == 1 {
        return pl;
    }
    let mut aold = 2.0 / (2.0 + a + b) * ((a + 1.0) * (b + 1.0) / (a + b + 3.0)).sqrt();
    for i in 1..n {
        let i = i as f64;
        let h1 = 2.0 * i + a + b;
        let anew = 2.0 / (h1 + 2.0)
            * ((i + 1.0) * (i + 1.0 + a + b) * (i + 1.0 + a) * (i + 1.0 + b)
                / (h1 + 1.0)
                / (h1 + 3.0))
                .sqrt();
        let bnew = -(a * a - b * b) / h1 / (h1 + 2.0);
        let pnext = (-aold * pl_prev + (x - bnew) * pl) / anew;
        pl_prev = pl;
        pl = pnext;
        aold = anew;
    }
    pl
}

/// Derivative of the orthonormal Jacobi polynomial.
fn grad_jacobi_unchecked(n: usize, a: f64, b: f64, x: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        let nf = n as f64;
        (nf * (nf + a + b + 1.0)).sqrt() * jacobi_unchecked(n - 1, a + 1.0, b + 1.0, x)
    }
}

/// Gauss quadrature points and weights for the Jacobi weight
/// `(1-x)^alpha (1+x)^beta` on `[-1, 1]`, exact for polynomials of degree
/// `2 n_points - 1`.
pub fn gauss_jacobi(n_points: usize, alpha: f64, beta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_weights(alpha, beta)?;
    if n_points == 0 {
        return Err(Error::InvalidParameter {
            name: "n_points",
            message: "need at least one quadrature point".into(),
        });
    }
    let (a, b) = (alpha, beta);
    if n_points == 1 {
        let x = (b - a) / (a + b + 2.0);
        let w = 2f64.powf(a + b + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(a + b + 2.0);
        return Ok((vec![x], vec![w]));
    }
    // Golub-Welsch: symmetric tridiagonal Jacobi matrix.
    let n = n_points;
    let mut mat = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let h1 = 2.0 * kf + a + b;
        let diag = if k == 0 && (a + b).abs() < 10.0 * f64::EPSILON {
            0.0
        } else {
            -(a * a - b * b) / (h1 + 2.0) / h1
        };
        mat[(k, k)] = diag;
        if k + 1 < n {
            let i = kf + 1.0;
            let off = 2.0 / (h1 + 2.0)
                * (i * (i + a + b) * (i + a) * (i + b) / (h1 + 1.0) / (h1 + 3.0)).sqrt();
            mat[(k, k + 1)] = off;
            mat[(k + 1, k)] = off;
        }
    }
    let eig = mat.symmetric_eigen();
    let mu0 = 2f64.powf(a + b + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(a + b + 2.0);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let x = eig.eigenvalues[k];
            let v0 = eig.eigenvectors[(0, k)];
            (x, v0 * v0 * mu0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(pairs.into_iter().unzip())
}

/// Gauss-Lobatto points (Legendre weight) on `[-1, 1]`; `n_points >= 2`.
pub fn gauss_lobatto(n_points: usize) -> Result<Vec<f64>> {
    if n_points < 2 {
        return Err(Error::InvalidParameter {
            name: "n_points",
            message: "Gauss-Lobatto needs at least the two endpoints".into(),
        });
    }
    let mut pts = Vec::with_capacity(n_points);
    pts.push(-1.0);
    if n_points > 2 {
        let (interior, _) = gauss_jacobi(n_points - 2, 1.0, 1.0)?;
        pts.extend(interior);
    }
    pts.push(1.0);
    Ok(pts)
}

/// 1D Vandermonde on the orthonormal Legendre basis.
fn vandermonde_1d(order: usize, points: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), order + 1, |i, j| {
        jacobi_unchecked(j, 0.0, 0.0, points[i])
    })
}

// ---------------------------------------------------------------------------
// Orthonormal basis on the simplex
// ---------------------------------------------------------------------------

/// Collapsed coordinates `(a, b)` of a simplex point `(r, s)`.
///
/// The collapse is singular at `s = 1`; there the analytic limit `a = -1`
/// is used (the basis values below are continuous across it).
pub fn collapsed_coords(r: f64, s: f64) -> (f64, f64) {
    let a = if (1.0 - s).abs() > 1e-14 {
        2.0 * (1.0 + r) / (1.0 - s) - 1.0
    } else {
        -1.0
    };
    (a, s)
}

/// Orthonormal simplex basis function with indices `(i, j)`, `i + j <= P`.
pub fn simplex_basis(i: usize, j: usize, r: f64, s: f64) -> f64 {
    let (a, b) = collapsed_coords(r, s);
    let h1 = jacobi_unchecked(i, 0.0, 0.0, a);
    let h2 = jacobi_unchecked(j, 2.0 * i as f64 + 1.0, 0.0, b);
    2f64.sqrt() * h1 * h2 * (1.0 - b).powi(i as i32)
}

/// Gradient `(d/dr, d/ds)` of the orthonormal simplex basis.
pub fn simplex_basis_grad(i: usize, j: usize, r: f64, s: f64) -> (f64, f64) {
    let (a, b) = collapsed_coords(r, s);
    let fa = jacobi_unchecked(i, 0.0, 0.0, a);
    let dfa = grad_jacobi_unchecked(i, 0.0, 0.0, a);
    let gb = jacobi_unchecked(j, 2.0 * i as f64 + 1.0, 0.0, b);
    let dgb = grad_jacobi_unchecked(j, 2.0 * i as f64 + 1.0, 0.0, b);
    let half_1mb = 0.5 * (1.0 - b);

    let mut dr = dfa * gb;
    if i > 0 {
        dr *= half_1mb.powi(i as i32 - 1);
    }
    let mut ds = dfa * gb * 0.5 * (1.0 + a);
    if i > 0 {
        ds *= half_1mb.powi(i as i32 - 1);
    }
    let mut tmp = dgb * half_1mb.powi(i as i32);
    if i > 0 {
        tmp -= 0.5 * i as f64 * gb * half_1mb.powi(i as i32 - 1);
    }
    ds += fa * tmp;

    let scale = 2f64.powf(i as f64 + 0.5);
    (scale * dr, scale * ds)
}

/// Modal index pairs `(i, j)` in the canonical ordering.
pub fn modal_indices(p: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(node_count(p));
    for i in 0..=p {
        for j in 0..=(p - i) {
            out.push((i, j));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Warp-and-blend nodal set
// ---------------------------------------------------------------------------

const ALPHA_OPT: [f64; 15] = [
    0.0, 0.0, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999, 1.2832, 1.3648, 1.4773, 1.4959, 1.5743,
    1.5770, 1.6223, 1.6258,
];

/// 1D edge warp moving equispaced nodes onto Gauss-Lobatto positions.
fn warp_factor(p: usize, rout: &[f64]) -> Vec<f64> {
    let lgl = gauss_lobatto(p + 1).expect("order >= 1");
    let req: Vec<f64> = (0..=p).map(|i| -1.0 + 2.0 * i as f64 / p as f64).collect();
    let veq = vandermonde_1d(p, &req);
    let veq_t = veq.transpose();
    let lu = veq_t.lu();

    let nr = rout.len();
    let mut warp = vec![0.0; nr];
    // Lagrange interpolation (on equispaced nodes) of the displacement
    // lgl - req, evaluated at rout.
    let pmat = DMatrix::from_fn(p + 1, nr, |i, k| jacobi_unchecked(i, 0.0, 0.0, rout[k]));
    let lmat = lu.solve(&pmat).expect("equispaced Vandermonde is invertible");
    for k in 0..nr {
        let mut acc = 0.0;
        for i in 0..=p {
            acc += lmat[(i, k)] * (lgl[i] - req[i]);
        }
        warp[k] = acc;
    }
    for k in 0..nr {
        let r = rout[k];
        let zerof = if r.abs() < 1.0 - 1e-10 { 1.0 } else { 0.0 };
        let sf = 1.0 - (zerof * r) * (zerof * r);
        warp[k] = warp[k] / sf + warp[k] * (zerof - 1.0);
    }
    warp
}

/// Interpolation nodes of order `p` on the reference simplex.
///
/// Vertices are included, edge nodes sit at Gauss-Lobatto positions, and
/// interior nodes follow the warp-and-blend construction.
pub fn nodal_set(p: usize) -> Vec<(f64, f64)> {
    assert!(p >= 1, "order must be at least 1");
    let alpha = if p < 16 { ALPHA_OPT[p - 1] } else { 5.0 / 3.0 };
    let np = node_count(p);

    // Equispaced barycentric coordinates.
    let mut l1 = Vec::with_capacity(np);
    let mut l3 = Vec::with_capacity(np);
    for n in 0..=p {
        for m in 0..=(p - n) {
            l1.push(n as f64 / p as f64);
            l3.push(m as f64 / p as f64);
        }
    }
    let l2: Vec<f64> = (0..np).map(|k| 1.0 - l1[k] - l3[k]).collect();

    let mut x: Vec<f64> = (0..np).map(|k| -l2[k] + l3[k]).collect();
    let mut y: Vec<f64> = (0..np)
        .map(|k| (-l2[k] - l3[k] + 2.0 * l1[k]) / 3f64.sqrt())
        .collect();

    let diffs: [Vec<f64>; 3] = [
        (0..np).map(|k| l3[k] - l2[k]).collect(),
        (0..np).map(|k| l1[k] - l3[k]).collect(),
        (0..np).map(|k| l2[k] - l1[k]).collect(),
    ];

    for (edge, diff) in diffs.iter().enumerate() {
        let warp = warp_factor(p, diff);
        let (cos_t, sin_t) = match edge {
            0 => (1.0, 0.0),
            1 => ((2.0 * std::f64::consts::PI / 3.0).cos(), (2.0 * std::f64::consts::PI / 3.0).sin()),
            _ => ((4.0 * std::f64::consts::PI / 3.0).cos(), (4.0 * std::f64::consts::PI / 3.0).sin()),
        };
        for k in 0..np {
            let blend = match edge {
                0 => 4.0 * l2[k] * l3[k],
                1 => 4.0 * l1[k] * l3[k],
                _ => 4.0 * l1[k] * l2[k],
            };
            let lopp = match edge {
                0 => l1[k],
                1 => l2[k],
                _ => l3[k],
            };
            let w = blend * warp[k] * (1.0 + (alpha * lopp).powi(2));
            x[k] += cos_t * w;
            y[k] += sin_t * w;
        }
    }

    // Equilateral (x, y) back to simplex (r, s).
    let sqrt3 = 3f64.sqrt();
    (0..np)
        .map(|k| {
            let b1 = (sqrt3 * y[k] + 1.0) / 3.0;
            let b2 = (-3.0 * x[k] - sqrt3 * y[k] + 2.0) / 6.0;
            let b3 = (3.0 * x[k] - sqrt3 * y[k] + 2.0) / 6.0;
            (-b2 + b3 - b1, -b2 - b3 + b1)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Cubature
// ---------------------------------------------------------------------------

/// Quadrature rule on the reference simplex.
#[derive(Debug, Clone)]
pub struct Cubature {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    /// All polynomials of total degree <= strength integrate exactly.
    pub strength: usize,
}

/// Simplex rule of the requested strength built from a tensorized
/// collapsed-coordinate Gauss rule (Legendre in `a`, Jacobi(1,0) in `b`).
pub fn simplex_cubature(strength: usize) -> Cubature {
    let n = strength / 2 + 1;
    let (pa, wa) = gauss_jacobi(n, 0.0, 0.0).expect("valid weights");
    let (pb, wb) = gauss_jacobi(n, 1.0, 0.0).expect("valid weights");
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (bq, wbq) in pb.iter().zip(&wb) {
        for (aq, waq) in pa.iter().zip(&wa) {
            let r = 0.5 * (1.0 + aq) * (1.0 - bq) - 1.0;
            points.push((r, *bq));
            weights.push(0.5 * waq * wbq);
        }
    }
    Cubature { points, weights, strength }
}

// ---------------------------------------------------------------------------
// Reference element
// ---------------------------------------------------------------------------

/// Discrete operators of one order-`P` simplex element.
///
/// Immutable after construction; all fields are plain data safe for
/// concurrent reads.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub order: usize,
    pub node_count: usize,
    /// Nodal `(r, s)` coordinates.
    pub nodes: Vec<(f64, f64)>,
    /// Generalized Vandermonde `V[i, m] = psi_m(node_i)` and its inverse.
    pub vandermonde: DMatrix<f64>,
    pub vandermonde_inv: DMatrix<f64>,
    /// Modal derivative evaluations at the nodes.
    pub grad_vandermonde_r: DMatrix<f64>,
    pub grad_vandermonde_s: DMatrix<f64>,
    /// Nodal differentiation operators.
    pub diff_r: DMatrix<f64>,
    pub diff_s: DMatrix<f64>,
    /// Reference mass matrix `(V V^T)^{-1}`.
    pub mass: DMatrix<f64>,
    /// Node indices of the three edges, ordered along the counter-clockwise
    /// element boundary: v0->v1, v1->v2, v2->v0.
    pub face_nodes: [Vec<usize>; 3],
    /// Local indices of the three vertices.
    pub vertex_nodes: [usize; 3],
    /// Gauss-Lobatto positions of the edge nodes on [-1, 1].
    pub face_nodes_1d: Vec<f64>,
    /// Reference 1D mass matrix of the edge trace.
    pub face_mass_1d: DMatrix<f64>,
    /// 1D differentiation on the edge nodes.
    pub face_diff_1d: DMatrix<f64>,
    /// Volume cubature of strength >= 2P+2 (super-collocation).
    pub cubature: Cubature,
    /// Nodal-to-cubature interpolation and differentiation.
    pub interp_cub: DMatrix<f64>,
    pub diff_r_cub: DMatrix<f64>,
    pub diff_s_cub: DMatrix<f64>,
    /// 1D Gauss rule used for edge integrals (same strength as `cubature`).
    pub face_quad_points: Vec<f64>,
    pub face_quad_weights: Vec<f64>,
    /// Edge-trace interpolation/differentiation evaluated at the face
    /// quadrature points.
    pub face_interp_quad: DMatrix<f64>,
    pub face_diff_quad: DMatrix<f64>,
}

impl ReferenceElement {
    /// Build the element with the default super-collocation strength.
    ///
    /// The curved-element metric integrands are rational in the Jacobian,
    /// so `2P+2` (exact for the polynomial part) leaves a measurable
    /// quadrature tail; `3P+12` pushes it below 1e-10 of the operator scale
    /// for the element curvatures produced by the built-in generators.
    pub fn new(order: usize) -> Result<Self> {
        Self::with_cubature_strength(order, (2 * order + 2).max(3 * order + 12))
    }

    /// Build with an explicit cubature strength (used to check that the
    /// default strength already exhausts aliasing).
    pub fn with_cubature_strength(order: usize, strength: usize) -> Result<Self> {
        if order < 1 || order > MAX_ORDER {
            return Err(Error::InvalidParameter {
                name: "order",
                message: format!("order must be in 1..={MAX_ORDER}, got {order}"),
            });
        }
        let p = order;
        let np = node_count(p);
        let nodes = nodal_set(p);
        let indices = modal_indices(p);

        let vandermonde = DMatrix::from_fn(np, np, |i, m| {
            let (mi, mj) = indices[m];
            simplex_basis(mi, mj, nodes[i].0, nodes[i].1)
        });
        let grad_vandermonde_r = DMatrix::from_fn(np, np, |i, m| {
            let (mi, mj) = indices[m];
            simplex_basis_grad(mi, mj, nodes[i].0, nodes[i].1).0
        });
        let grad_vandermonde_s = DMatrix::from_fn(np, np, |i, m| {
            let (mi, mj) = indices[m];
            simplex_basis_grad(mi, mj, nodes[i].0, nodes[i].1).1
        });

        let vandermonde_inv = vandermonde.clone().try_inverse().ok_or(Error::RefElem {
            order,
            message: "Vandermonde matrix is singular".into(),
        })?;
        let cond = vandermonde.norm() * vandermonde_inv.norm();
        if !cond.is_finite() || cond > 1e13 {
            return Err(Error::RefElem {
                order,
                message: format!("Vandermonde condition estimate {cond:e} too large"),
            });
        }

        let diff_r = &grad_vandermonde_r * &vandermonde_inv;
        let diff_s = &grad_vandermonde_s * &vandermonde_inv;
        let mass = &vandermonde_inv.transpose() * &vandermonde_inv;

        // Edge node bookkeeping. Edges are found geometrically and ordered
        // along the counter-clockwise boundary.
        let tol = 1e-10;
        let find_vertex = |r: f64, s: f64| -> usize {
            nodes
                .iter()
                .position(|&(nr, ns)| (nr - r).abs() < tol && (ns - s).abs() < tol)
                .expect("vertex missing from nodal set")
        };
        let vertex_nodes = [
            find_vertex(-1.0, -1.0),
            find_vertex(1.0, -1.0),
            find_vertex(-1.0, 1.0),
        ];
        let mut face_nodes: [Vec<usize>; 3] = Default::default();
        // Edge 0: s = -1, order by r. Edge 1: r + s = 0, order by s.
        // Edge 2: r = -1, order by -s.
        let mut e0: Vec<usize> = (0..np).filter(|&i| (nodes[i].1 + 1.0).abs() < tol).collect();
        e0.sort_by(|&a, &b| nodes[a].0.total_cmp(&nodes[b].0));
        let mut e1: Vec<usize> = (0..np)
            .filter(|&i| (nodes[i].0 + nodes[i].1).abs() < tol)
            .collect();
        e1.sort_by(|&a, &b| nodes[a].1.total_cmp(&nodes[b].1));
        let mut e2: Vec<usize> = (0..np).filter(|&i| (nodes[i].0 + 1.0).abs() < tol).collect();
        e2.sort_by(|&a, &b| nodes[b].1.total_cmp(&nodes[a].1));
        face_nodes[0] = e0;
        face_nodes[1] = e1;
        face_nodes[2] = e2;
        for f in &face_nodes {
            if f.len() != p + 1 {
                return Err(Error::RefElem {
                    order,
                    message: "edge node count mismatch (bad nodal set)".into(),
                });
            }
        }

        let face_nodes_1d = gauss_lobatto(p + 1)?;
        let v1d = vandermonde_1d(p, &face_nodes_1d);
        let v1d_inv = v1d.clone().try_inverse().ok_or(Error::RefElem {
            order,
            message: "1D Vandermonde singular".into(),
        })?;
        let face_mass_1d = &v1d_inv.transpose() * &v1d_inv;
        let gv1d = DMatrix::from_fn(p + 1, p + 1, |i, j| {
            grad_jacobi_unchecked(j, 0.0, 0.0, face_nodes_1d[i])
        });
        let face_diff_1d = &gv1d * &v1d_inv;

        // Volume cubature and nodal-to-cubature operators.
        let cubature = simplex_cubature(strength.max(2 * p + 2));
        let ncub = cubature.points.len();
        let vc = DMatrix::from_fn(ncub, np, |q, m| {
            let (mi, mj) = indices[m];
            simplex_basis(mi, mj, cubature.points[q].0, cubature.points[q].1)
        });
        let vcr = DMatrix::from_fn(ncub, np, |q, m| {
            let (mi, mj) = indices[m];
            simplex_basis_grad(mi, mj, cubature.points[q].0, cubature.points[q].1).0
        });
        let vcs = DMatrix::from_fn(ncub, np, |q, m| {
            let (mi, mj) = indices[m];
            simplex_basis_grad(mi, mj, cubature.points[q].0, cubature.points[q].1).1
        });
        let interp_cub = &vc * &vandermonde_inv;
        let diff_r_cub = &vcr * &vandermonde_inv;
        let diff_s_cub = &vcs * &vandermonde_inv;

        // 1D Gauss rule for edge integrals.
        let nq1 = cubature.strength / 2 + 1;
        let (face_quad_points, face_quad_weights) = gauss_jacobi(nq1, 0.0, 0.0)?;
        let vq = vandermonde_1d(p, &face_quad_points);
        let gq = DMatrix::from_fn(nq1, p + 1, |i, j| {
            grad_jacobi_unchecked(j, 0.0, 0.0, face_quad_points[i])
        });
        let face_interp_quad = &vq * &v1d_inv;
        let face_diff_quad = &gq * &v1d_inv;

        Ok(Self {
            order,
            node_count: np,
            nodes,
            vandermonde,
            vandermonde_inv,
            grad_vandermonde_r,
            grad_vandermonde_s,
            diff_r,
            diff_s,
            mass,
            face_nodes,
            vertex_nodes,
            face_nodes_1d,
            face_mass_1d,
            face_diff_1d,
            cubature,
            interp_cub,
            diff_r_cub,
            diff_s_cub,
            face_quad_points,
            face_quad_weights,
            face_interp_quad,
            face_diff_quad,
        })
    }

    /// Evaluate the order-P Lagrange interpolant with the given nodal values
    /// at an arbitrary point of the reference simplex.
    pub fn interpolate(&self, nodal: &[f64], r: f64, s: f64) -> f64 {
        let indices = modal_indices(self.order);
        let psi = DVector::from_fn(self.node_count, |m, _| {
            let (mi, mj) = indices[m];
            simplex_basis(mi, mj, r, s)
        });
        let modal = &self.vandermonde_inv * DVector::from_column_slice(nodal);
        psi.dot(&modal)
    }

    /// Row vectors evaluating the interpolant's `(d/dr, d/ds)` at a point.
    pub fn grad_rows(&self, r: f64, s: f64) -> (DVector<f64>, DVector<f64>) {
        let indices = modal_indices(self.order);
        let gr = DVector::from_fn(self.node_count, |m, _| {
            let (mi, mj) = indices[m];
            simplex_basis_grad(mi, mj, r, s).0
        });
        let gs = DVector::from_fn(self.node_count, |m, _| {
            let (mi, mj) = indices[m];
            simplex_basis_grad(mi, mj, r, s).1
        });
        (
            self.vandermonde_inv.transpose() * gr,
            self.vandermonde_inv.transpose() * gs,
        )
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn jacobi_low_order_values() {
        // Constant polynomial with unit L2 norm on [-1, 1].
        let v = jacobi_poly(0, 0.0, 0.0, 0.3).unwrap();
        assert_relative_eq!(v, 1.0 / 2f64.sqrt(), epsilon = 1e-14);
        // Legendre n=1 at x=1: sqrt(3/2).
        let v = jacobi_poly(1, 0.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(v, (1.5f64).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn jacobi_rejects_bad_weights() {
        assert!(jacobi_poly(2, -1.5, 0.0, 0.0).is_err());
        assert!(jacobi_poly(2, 0.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn jacobi_orthonormal_under_gauss_quadrature() {
        // High-order Gauss quadrature oracle: inner products of the
        // orthonormal family are the identity.
        let (x, w) = gauss_jacobi(12, 0.0, 0.0).unwrap();
        for m in 0..=8usize {
            for n in 0..=8usize {
                let mut acc = 0.0;
                for (xi, wi) in x.iter().zip(&w) {
                    acc += wi
                        * jacobi_poly(m, 0.0, 0.0, *xi).unwrap()
                        * jacobi_poly(n, 0.0, 0.0, *xi).unwrap();
                }
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((acc - expect).abs() < 1e-12, "({m},{n}) -> {acc}");
            }
        }
    }

    #[test]
    fn gauss_jacobi_integrates_weighted_monomials() {
        // (1-x)^1 weight, n=4 points: exact through degree 7.
        let (x, w) = gauss_jacobi(4, 1.0, 0.0).unwrap();
        for k in 0..=7u32 {
            let num: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(k as i32)).sum();
            // int_{-1}^{1} (1-x) x^k dx
            let k = k as f64;
            let exact = if (k as i64) % 2 == 0 {
                2.0 / (k + 1.0)
            } else {
                -2.0 / (k + 2.0)
            };
            assert_relative_eq!(num, exact, epsilon = 1e-13);
        }
    }

    #[test]
    fn simplex_basis_constant_mode() {
        // Unit L2 norm over the area-2 simplex: psi_00 = 1/sqrt(2).
        for &(r, s) in &[(-0.9, -0.9), (0.2, -0.7), (-1.0, 1.0), (-0.3, 0.1)] {
            assert_relative_eq!(simplex_basis(0, 0, r, s), 1.0 / 2f64.sqrt(), epsilon = 1e-14);
            let (gr, gs) = simplex_basis_grad(0, 0, r, s);
            assert!(gr.abs() < 1e-14 && gs.abs() < 1e-14);
        }
    }

    #[test]
    fn simplex_basis_orthonormal_under_cubature() {
        for p in 1..=6usize {
            let cub = simplex_cubature(2 * p + 2);
            let idx = modal_indices(p);
            for (a, &(ai, aj)) in idx.iter().enumerate() {
                for (b, &(bi, bj)) in idx.iter().enumerate() {
                    let mut acc = 0.0;
                    for (&(r, s), &w) in cub.points.iter().zip(&cub.weights) {
                        acc += w * simplex_basis(ai, aj, r, s) * simplex_basis(bi, bj, r, s);
                    }
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!(
                        (acc - expect).abs() < 1e-12,
                        "P={p} modes {a},{b}: {acc}"
                    );
                }
            }
        }
    }

    #[test]
    fn cubature_exact_on_monomials() {
        // int over simplex of r^a s^b by 1D reduction:
        // int_{-1}^{1} s^b [ ((-s)^{a+1} - (-1)^{a+1}) / (a+1) ] ds,
        // expanded termwise with int_{-1}^{1} s^n ds = 2/(n+1) for even n.
        let moment = |n: u32| -> f64 {
            if n % 2 == 0 {
                2.0 / (n as f64 + 1.0)
            } else {
                0.0
            }
        };
        let exact = |a: u32, b: u32| -> f64 {
            let sign = if (a + 1) % 2 == 0 { 1.0 } else { -1.0 };
            sign / (a as f64 + 1.0) * (moment(a + b + 1) - moment(b))
        };
        for strength in [4usize, 8, 14, 26] {
            let cub = simplex_cubature(strength);
            for a in 0..=strength as u32 {
                for b in 0..=(strength as u32 - a) {
                    let num: f64 = cub
                        .points
                        .iter()
                        .zip(&cub.weights)
                        .map(|(&(r, s), &w)| w * r.powi(a as i32) * s.powi(b as i32))
                        .sum();
                    assert!(
                        (num - exact(a, b)).abs() < 1e-12,
                        "strength {strength}, monomial r^{a} s^{b}: {num} vs {}",
                        exact(a, b)
                    );
                }
            }
        }
    }

    #[test]
    fn nodal_set_small_orders() {
        let n1 = nodal_set(1);
        assert_eq!(n1.len(), 3);
        let expect = [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];
        for e in expect {
            assert!(n1.iter().any(|&(r, s)| (r - e.0).abs() < 1e-12 && (s - e.1).abs() < 1e-12));
        }
        assert_eq!(nodal_set(3).len(), 10);
        // P=2 edge nodes at the midpoints.
        let n2 = nodal_set(2);
        for e in [(0.0, -1.0), (-1.0, 0.0), (0.0, 0.0)] {
            assert!(
                n2.iter().any(|&(r, s)| (r - e.0).abs() < 1e-12 && (s - e.1).abs() < 1e-12),
                "missing midpoint {e:?}"
            );
        }
    }

    #[test]
    fn nodes_inside_simplex_and_edges_at_gauss_lobatto() {
        for p in 1..=MAX_ORDER {
            let nodes = nodal_set(p);
            assert_eq!(nodes.len(), node_count(p));
            for &(r, s) in &nodes {
                assert!(r >= -1.0 - 1e-12 && s >= -1.0 - 1e-12 && r + s <= 1e-12);
            }
            // Bottom-edge nodes must be at Gauss-Lobatto positions.
            let gl = gauss_lobatto(p + 1).unwrap();
            let mut bottom: Vec<f64> = nodes
                .iter()
                .filter(|&&(_, s)| (s + 1.0).abs() < 1e-10)
                .map(|&(r, _)| r)
                .collect();
            bottom.sort_by(f64::total_cmp);
            assert_eq!(bottom.len(), p + 1);
            for (a, b) in bottom.iter().zip(&gl) {
                assert!((a - b).abs() < 1e-10, "P={p}: edge node {a} vs GL {b}");
            }
        }
    }

    #[test]
    fn reference_element_p1_mass_matrix() {
        let re = ReferenceElement::new(1).unwrap();
        // Analytic linear-element mass matrix on the area-2 simplex.
        let expect = [
            [2.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0],
            [1.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0],
            [1.0 / 6.0, 1.0 / 6.0, 2.0 / 6.0],
        ];
        // Node order may differ; vertices are symmetric so compare sorted
        // patterns per row instead: diagonal 1/3, off-diagonal 1/6.
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { expect[0][0] } else { expect[0][1] };
                assert_relative_eq!(re.mass[(i, j)], want, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn differentiation_is_exact_for_monomials() {
        for p in [1usize, 3, 4, 7, 10] {
            let re = ReferenceElement::new(p).unwrap();
            for a in 0..=p {
                for b in 0..=(p - a) {
                    let vals: Vec<f64> = re
                        .nodes
                        .iter()
                        .map(|&(r, s)| r.powi(a as i32) * s.powi(b as i32))
                        .collect();
                    let v = DVector::from_column_slice(&vals);
                    let dr = &re.diff_r * &v;
                    let ds = &re.diff_s * &v;
                    for (i, &(r, s)) in re.nodes.iter().enumerate() {
                        let dr_exact = if a == 0 {
                            0.0
                        } else {
                            a as f64 * r.powi(a as i32 - 1) * s.powi(b as i32)
                        };
                        let ds_exact = if b == 0 {
                            0.0
                        } else {
                            b as f64 * r.powi(a as i32) * s.powi(b as i32 - 1)
                        };
                        assert!(
                            (dr[i] - dr_exact).abs() < 1e-11,
                            "P={p} d/dr r^{a}s^{b} at node {i}: {} vs {dr_exact}",
                            dr[i]
                        );
                        assert!((ds[i] - ds_exact).abs() < 1e-11);
                    }
                }
            }
        }
    }

    #[test]
    fn p4_derivative_of_r_squared() {
        let re = ReferenceElement::new(4).unwrap();
        let vals: Vec<f64> = re.nodes.iter().map(|&(r, _)| r * r).collect();
        let d = &re.diff_r * DVector::from_column_slice(&vals);
        for (i, &(r, _)) in re.nodes.iter().enumerate() {
            assert!((d[i] - 2.0 * r).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_row_sums_vanish() {
        for p in 1..=MAX_ORDER {
            let re = ReferenceElement::new(p).unwrap();
            for i in 0..re.node_count {
                let sr: f64 = re.diff_r.row(i).iter().sum();
                let ss: f64 = re.diff_s.row(i).iter().sum();
                assert!(sr.abs() < 1e-11 && ss.abs() < 1e-11, "P={p} row {i}");
            }
        }
    }

    #[test]
    fn vandermonde_inverse_and_mass_spd() {
        for p in [2usize, 5, 8, 12] {
            let re = ReferenceElement::new(p).unwrap();
            let eye = &re.vandermonde * &re.vandermonde_inv;
            for i in 0..re.node_count {
                for j in 0..re.node_count {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((eye[(i, j)] - want).abs() < 1e-10);
                }
            }
            // Symmetric positive definite mass.
            for i in 0..re.node_count {
                for j in 0..i {
                    assert!((re.mass[(i, j)] - re.mass[(j, i)]).abs() < 1e-13);
                }
            }
            let chol = re.mass.clone().cholesky();
            assert!(chol.is_some(), "mass not SPD at P={p}");
        }
    }

    #[test]
    fn mass_matches_cubature_products() {
        // x^T M y equals the cubature integral of the interpolants' product
        // for polynomial data up to combined order 2P.
        let p = 4;
        let re = ReferenceElement::new(p).unwrap();
        let f: Vec<f64> = re.nodes.iter().map(|&(r, s)| 1.0 + r * r - 0.5 * s).collect();
        let g: Vec<f64> = re.nodes.iter().map(|&(r, s)| r * s + s * s).collect();
        let fv = DVector::from_column_slice(&f);
        let gv = DVector::from_column_slice(&g);
        let quad_form = fv.dot(&(&re.mass * &gv));
        let fc = &re.interp_cub * &fv;
        let gc = &re.interp_cub * &gv;
        let direct: f64 = (0..re.cubature.weights.len())
            .map(|q| re.cubature.weights[q] * fc[q] * gc[q])
            .sum();
        assert_relative_eq!(quad_form, direct, epsilon = 1e-12);
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let p = 5;
        let re = ReferenceElement::new(p).unwrap();
        let f = |r: f64, s: f64| 0.3 - r + 2.0 * r * s.powi(3) + s.powi(5) - r.powi(4) * s;
        let vals: Vec<f64> = re.nodes.iter().map(|&(r, s)| f(r, s)).collect();
        for &(r, s) in &[(-0.21, -0.37), (-0.9, 0.55), (0.1, -0.8)] {
            assert_relative_eq!(re.interpolate(&vals, r, s), f(r, s), epsilon = 1e-11);
        }
    }

    #[test]
    fn face_mass_1d_is_gauss_lobatto_exact() {
        // For P=1 the trace mass on [-1,1] is [[2/3,1/3],[1/3,2/3]].
        let re = ReferenceElement::new(1).unwrap();
        assert_relative_eq!(re.face_mass_1d[(0, 0)], 2.0 / 3.0, epsilon = 1e-13);
        assert_relative_eq!(re.face_mass_1d[(0, 1)], 1.0 / 3.0, epsilon = 1e-13);
    }

    #[test]
    fn order_out_of_range_rejected() {
        assert!(ReferenceElement::new(0).is_err());
        assert!(ReferenceElement::new(MAX_ORDER + 1).is_err());
    }
}
