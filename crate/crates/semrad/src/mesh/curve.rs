//! Body-fitted curving of elements through transfinite interpolation with
//! linear blending.
//!
//! Only elements owning a body face are touched. The body edge nodes are
//! projected onto the analytic contour; the deviation is blended into the
//! element so that the two straight edges keep their affine node positions
//! exactly, which preserves conformity with affine neighbors.

use super::{affine_map, BoundaryTag, Mesh};
use crate::refelem::ReferenceElement;
use crate::{Error, Result};

/// Analytic body contour.
#[derive(Debug, Clone, Copy)]
pub enum BodyCurve {
    /// Circle of the given radius centered at the origin.
    Circle { radius: f64 },
    /// Keep the straight chords (identity curving).
    Straight,
}

impl BodyCurve {
    /// Closest point on the contour.
    fn project(&self, p: (f64, f64)) -> (f64, f64) {
        match *self {
            BodyCurve::Circle { radius } => {
                let n = (p.0 * p.0 + p.1 * p.1).sqrt();
                (p.0 * radius / n, p.1 * radius / n)
            }
            BodyCurve::Straight => p,
        }
    }

    fn distance(&self, p: (f64, f64)) -> f64 {
        match *self {
            BodyCurve::Circle { radius } => ((p.0 * p.0 + p.1 * p.1).sqrt() - radius).abs(),
            BodyCurve::Straight => 0.0,
        }
    }
}

/// Barycentric coordinates of a reference point: (L0, L1, L2) vanish on the
/// edges opposite vertices v0, v1, v2.
fn barycentric(r: f64, s: f64) -> [f64; 3] {
    [-(r + s) / 2.0, (1.0 + r) / 2.0, (1.0 + s) / 2.0]
}

/// Vertex pair (local ids) bounding a local edge, plus the opposite vertex.
fn edge_topology(edge: usize) -> (usize, usize, usize) {
    match edge {
        0 => (0, 1, 2),
        1 => (1, 2, 0),
        2 => (2, 0, 1),
        _ => panic!("edge out of range"),
    }
}

/// Curve every element owning a Body face onto the analytic contour.
pub fn curve_body_elements(mesh: &Mesh, re: &ReferenceElement, body: BodyCurve) -> Result<Mesh> {
    let mut out = mesh.clone();
    out.curved_order = Some(re.order);
    out.curved = vec![None; mesh.n_elements()];

    for bf in mesh.boundary_faces.iter().filter(|bf| bf.tag == BoundaryTag::Body) {
        let e = bf.element;
        let verts = mesh.element_vertices(e);
        let mut coords: Vec<(f64, f64)> = out.curved[e].take().unwrap_or_else(|| {
            re.nodes
                .iter()
                .map(|&(r, s)| affine_map(verts[0], verts[1], verts[2], r, s))
                .collect()
        });

        let (va, vb, _vc) = edge_topology(bf.edge);
        let face = &re.face_nodes[bf.edge];

        // Deviation of the projected edge nodes from the straight chord,
        // as a 1D interpolant on the edge's Gauss-Lobatto parameter.
        let chord_tol = {
            let (p, q) = (verts[va], verts[vb]);
            0.2 * ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt()
        };
        let mut dev_x = Vec::with_capacity(face.len());
        let mut dev_z = Vec::with_capacity(face.len());
        for &ln in face {
            let p = coords[ln];
            if body.distance(p) > chord_tol {
                return Err(Error::Curving {
                    element: e,
                    message: format!(
                        "edge node ({}, {}) is {:.3e} away from the contour",
                        p.0,
                        p.1,
                        body.distance(p)
                    ),
                });
            }
            let proj = body.project(p);
            dev_x.push(proj.0 - p.0);
            dev_z.push(proj.1 - p.1);
        }

        // Blend into the interior: weight (La + Lb) is 1 on the curved edge
        // and the deviation itself vanishes at the edge ends, so the other
        // two edges stay put.
        let eval_dev = |tau: f64| -> (f64, f64) {
            let mut dx = 0.0;
            let mut dz = 0.0;
            for (k, (&vx, &vz)) in dev_x.iter().zip(&dev_z).enumerate() {
                let l = lagrange_1d(&re.face_nodes_1d, k, tau);
                dx += vx * l;
                dz += vz * l;
            }
            (dx, dz)
        };
        for (ln, &(r, s)) in re.nodes.iter().enumerate() {
            let l = barycentric(r, s);
            let (la, lb) = (l[va], l[vb]);
            let denom = la + lb;
            if denom < 1e-13 {
                continue; // opposite vertex
            }
            let tau = (lb - la) / denom;
            let (dx, dz) = eval_dev(tau);
            coords[ln].0 += denom * dx;
            coords[ln].1 += denom * dz;
        }
        out.curved[e] = Some(coords);
    }

    // Reject curving that inverts the map anywhere.
    let factors = super::geometric_factors(&out, re);
    if let Err(Error::InvalidGeometry { element, message }) = factors {
        return Err(Error::Curving { element, message });
    }
    factors?;
    Ok(out)
}

/// Lagrange basis k on the 1D node set, evaluated at x.
fn lagrange_1d(nodes: &[f64], k: usize, x: f64) -> f64 {
    let mut acc = 1.0;
    for (j, &nj) in nodes.iter().enumerate() {
        if j != k {
            acc *= (x - nj) / (nodes[k] - nj);
        }
    }
    acc
}
