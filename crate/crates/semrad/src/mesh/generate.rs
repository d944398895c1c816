//! Built-in generators for the two benchmark topologies and a closed basin.
//!
//! The cylinder domain is assembled from a polar annulus around the body, a
//! zipper ring out to a square contour, and three graded rectangular blocks.
//! All blocks share tick arrays bit-exactly, so vertex merging is exact.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use super::{BoundaryFace, BoundaryTag, Mesh};
use crate::{Error, Result};

/// Monotone coordinate ticks from `from` to `to`, starting at spacing
/// `start` and growing geometrically by `ratio` (>= 1). The final tick is
/// snapped to `to` exactly; spacings are rescaled to fit.
pub fn graded_ticks(from: f64, to: f64, start: f64, ratio: f64) -> Result<Vec<f64>> {
    let total = (to - from).abs();
    if !(start > 0.0) || !(ratio >= 1.0) {
        return Err(Error::MeshGeneration(format!(
            "invalid grading: start spacing {start}, ratio {ratio}"
        )));
    }
    if start > total * (1.0 + 1e-9) {
        return Err(Error::MeshGeneration(format!(
            "start spacing {start} exceeds the interval length {total}"
        )));
    }
    // Count of cells with geometric growth covering the interval.
    let n = if (ratio - 1.0).abs() < 1e-12 {
        (total / start).round().max(1.0) as usize
    } else {
        let raw = ((1.0 + total * (ratio - 1.0) / start).ln() / ratio.ln()).round();
        raw.max(1.0) as usize
    };
    // Rescale so the n spacings sum exactly to the interval.
    let geom_sum: f64 = (0..n).map(|k| ratio.powi(k as i32)).sum();
    let s0 = total / geom_sum;
    let dir = (to - from).signum();
    let mut ticks = Vec::with_capacity(n + 1);
    ticks.push(from);
    let mut acc = from;
    for k in 0..n {
        acc += dir * s0 * ratio.powi(k as i32);
        ticks.push(acc);
    }
    *ticks.last_mut().unwrap() = to;
    Ok(ticks)
}

/// Shared builder collecting vertices (deduplicated bit-exactly), triangles
/// and boundary edges.
struct Builder {
    vertices: Vec<(f64, f64)>,
    lookup: HashMap<(u64, u64), usize>,
    triangles: Vec<[usize; 3]>,
}

impl Builder {
    fn new() -> Self {
        Builder { vertices: Vec::new(), lookup: HashMap::new(), triangles: Vec::new() }
    }

    fn vertex(&mut self, p: (f64, f64)) -> usize {
        let key = (p.0.to_bits(), p.1.to_bits());
        *self.lookup.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            self.vertices.len() - 1
        })
    }

    fn triangle(&mut self, a: usize, b: usize, c: usize) -> Result<()> {
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let area2 = (pb.0 - pa.0) * (pc.1 - pa.1) - (pc.0 - pa.0) * (pb.1 - pa.1);
        if area2 > 0.0 {
            self.triangles.push([a, b, c]);
        } else if area2 < 0.0 {
            self.triangles.push([a, c, b]);
        } else {
            return Err(Error::MeshGeneration("degenerate triangle generated".into()));
        }
        Ok(())
    }

    /// Split a structured quad grid given by the tensor ticks into triangles.
    /// Diagonals alternate by cell parity when `alternate` is set.
    fn rect_block(&mut self, xticks: &[f64], zticks: &[f64], alternate: bool) -> Result<()> {
        for i in 0..xticks.len() - 1 {
            for j in 0..zticks.len() - 1 {
                let p00 = self.vertex((xticks[i], zticks[j]));
                let p10 = self.vertex((xticks[i + 1], zticks[j]));
                let p11 = self.vertex((xticks[i + 1], zticks[j + 1]));
                let p01 = self.vertex((xticks[i], zticks[j + 1]));
                let diag_up = !alternate || (i + j) % 2 == 0;
                if diag_up {
                    // diagonal p00-p11
                    self.triangle(p00, p10, p11)?;
                    self.triangle(p00, p11, p01)?;
                } else {
                    // diagonal p10-p01
                    self.triangle(p00, p10, p01)?;
                    self.triangle(p10, p11, p01)?;
                }
            }
        }
        Ok(())
    }

    /// Classify every untagged boundary edge with a geometric predicate.
    fn finish(
        self,
        depth: f64,
        length: f64,
        classify: impl Fn((f64, f64), (f64, f64)) -> Option<BoundaryTag>,
    ) -> Result<Mesh> {
        let n_elm = self.triangles.len();
        let mut mesh = Mesh {
            vertices: self.vertices,
            triangles: self.triangles,
            boundary_faces: Vec::new(),
            curved_order: None,
            curved: vec![None; n_elm],
            depth,
            length,
        };
        let edges = mesh.edge_map();
        for (_, sides) in edges.iter() {
            if sides.len() != 1 {
                continue;
            }
            let (e, edge) = sides[0];
            let (a, b) = mesh.edge_vertices(e, edge);
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let tag = classify(pa, pb).ok_or_else(|| {
                Error::MeshGeneration(format!(
                    "boundary edge {pa:?}-{pb:?} could not be classified"
                ))
            })?;
            mesh.boundary_faces.push(BoundaryFace { element: e, edge, tag });
        }
        // Deterministic ordering regardless of hash-map iteration.
        mesh.boundary_faces
            .sort_by_key(|bf| (bf.tag.physical_id(), bf.element, bf.edge));
        mesh.validate()?;
        Ok(mesh)
    }
}

/// Closed rectangular basin `[0, length] x [-depth, 0]` on an `nx` by `nz`
/// grid. Free surface on top, bed at the bottom, far-field side walls.
///
/// The alternating-diagonal split makes the discretization below every
/// interior free-surface node mirror symmetric; `symmetric_fs = false`
/// slants all diagonals the same way instead.
pub fn generate_rectangle_basin(
    length: f64,
    depth: f64,
    nx: usize,
    nz: usize,
    symmetric_fs: bool,
) -> Result<Mesh> {
    if !(length > 0.0) || !(depth > 0.0) || nx < 1 || nz < 1 {
        return Err(Error::MeshGeneration("basin needs positive size and counts".into()));
    }
    let xt: Vec<f64> = (0..=nx).map(|i| length * i as f64 / nx as f64).collect();
    let zt: Vec<f64> = (0..=nz).map(|j| -depth + depth * j as f64 / nz as f64).collect();
    let mut b = Builder::new();
    b.rect_block(&xt, &zt, symmetric_fs)?;
    let tol = 1e-9 * (length + depth);
    b.finish(depth, length, |pa, pb| {
        let on = |v: f64, t: f64| (v - t).abs() < tol;
        if on(pa.1, 0.0) && on(pb.1, 0.0) {
            Some(BoundaryTag::FreeSurface)
        } else if on(pa.1, -depth) && on(pb.1, -depth) {
            Some(BoundaryTag::Bed)
        } else if (on(pa.0, 0.0) && on(pb.0, 0.0)) || (on(pa.0, length) && on(pb.0, length)) {
            Some(BoundaryTag::FarField)
        } else {
            None
        }
    })
}

/// Quarter-cylinder radiation domain.
///
/// The body is a quarter arc of radius `radius` centered at the origin on
/// the undisturbed free surface, cut by the symmetry plane x = 0. `beta`
/// controls the number of faces on the arc (and thereby the near-body
/// resolution), `grading` the geometric edge growth toward the far field
/// and the bed.
pub fn generate_cylinder_domain(
    radius: f64,
    depth: f64,
    length: f64,
    beta: usize,
    grading: f64,
    symmetric_fs: bool,
) -> Result<Mesh> {
    if !(radius > 0.0) || !(radius < depth) || !(radius < length) {
        return Err(Error::MeshGeneration(format!(
            "need 0 < R < h and R < L, got R={radius}, h={depth}, L={length}"
        )));
    }
    if beta < 2 {
        return Err(Error::MeshGeneration("beta must be at least 2".into()));
    }
    if !(grading >= 1.0) {
        return Err(Error::MeshGeneration("grading ratio must be >= 1".into()));
    }

    let arc_spacing = radius * FRAC_PI_2 / beta as f64;
    // Outer square contour; the annulus ends at `c_mid` between body and square.
    let margin = depth.min(length);
    let c_sq = (2.2 * radius).min(radius + 0.55 * (margin - radius));
    let c_mid = radius + 0.55 * (c_sq - radius);
    if c_sq <= radius * 1.05 {
        return Err(Error::MeshGeneration(
            "domain too tight around the body for the structured layout".into(),
        ));
    }

    let mut b = Builder::new();

    // Polar annulus body -> c_mid. theta = 0 on the symmetry plane
    // (pointing straight down), theta = pi/2 at the waterline.
    let thetas: Vec<f64> = (0..=beta).map(|j| FRAC_PI_2 * j as f64 / beta as f64).collect();
    let n_layers = ((c_mid - radius) / arc_spacing).round().max(1.0) as usize;
    let mut rho: Vec<f64> = (0..=n_layers)
        .map(|i| radius + (c_mid - radius) * i as f64 / n_layers as f64)
        .collect();
    // Bit-exact endpoints so the ring's vertices merge with the annulus.
    rho[0] = radius;
    *rho.last_mut().unwrap() = c_mid;
    let polar = |r: f64, th: f64| (r * th.sin(), -r * th.cos());
    for i in 0..n_layers {
        for j in 0..beta {
            let p00 = b.vertex(polar(rho[i], thetas[j]));
            let p10 = b.vertex(polar(rho[i + 1], thetas[j]));
            let p11 = b.vertex(polar(rho[i + 1], thetas[j + 1]));
            let p01 = b.vertex(polar(rho[i], thetas[j + 1]));
            if !symmetric_fs || (i + j) % 2 == 0 {
                b.triangle(p00, p10, p11)?;
                b.triangle(p00, p11, p01)?;
            } else {
                b.triangle(p00, p10, p01)?;
                b.triangle(p10, p11, p01)?;
            }
        }
    }

    // Square contour nodes: ray projections of the annulus angles, with the
    // corner inserted when no ray hits it.
    #[derive(Clone, Copy)]
    struct PathNode {
        angle: f64,
        point: (f64, f64),
    }
    let mut path: Vec<PathNode> = Vec::new();
    for &th in &thetas {
        let p = if th <= std::f64::consts::FRAC_PI_4 {
            (c_sq * th.tan(), -c_sq)
        } else {
            (c_sq, -c_sq * (FRAC_PI_2 - th).tan())
        };
        path.push(PathNode { angle: th, point: p });
    }
    let quarter = std::f64::consts::FRAC_PI_4;
    let dth = FRAC_PI_2 / beta as f64;
    if !path.iter().any(|n| (n.angle - quarter).abs() < 0.25 * dth) {
        path.push(PathNode { angle: quarter, point: (c_sq, -c_sq) });
        path.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    }
    // Snap the node closest to the corner onto it when within tolerance
    // (square geometry must contain the corner as a vertex).
    for n in path.iter_mut() {
        if (n.angle - quarter).abs() < 0.25 * dth {
            n.point = (c_sq, -c_sq);
            n.angle = quarter;
        }
    }

    // Zipper ring between the annulus outer arc and the square contour.
    {
        let arc_ids: Vec<usize> =
            thetas.iter().map(|&th| b.vertex(polar(c_mid, th))).collect();
        let path_ids: Vec<usize> = path.iter().map(|n| b.vertex(n.point)).collect();
        let arc_angles = &thetas;
        let path_angles: Vec<f64> = path.iter().map(|n| n.angle).collect();
        let (mut i, mut k) = (0usize, 0usize);
        while i + 1 < arc_ids.len() || k + 1 < path_ids.len() {
            let advance_arc = if i + 1 >= arc_ids.len() {
                false
            } else if k + 1 >= path_ids.len() {
                true
            } else {
                arc_angles[i + 1] <= path_angles[k + 1]
            };
            if advance_arc {
                b.triangle(arc_ids[i], path_ids[k], arc_ids[i + 1])?;
                i += 1;
            } else {
                b.triangle(arc_ids[i], path_ids[k], path_ids[k + 1])?;
                k += 1;
            }
        }
    }

    // Rectangular blocks: below the square, right of it, and the corner.
    let mut xticks_inner: Vec<f64> = path
        .iter()
        .filter(|n| n.angle <= quarter + 1e-12)
        .map(|n| n.point.0)
        .collect();
    xticks_inner.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut zticks_inner: Vec<f64> = path
        .iter()
        .filter(|n| n.angle >= quarter - 1e-12)
        .map(|n| n.point.1)
        .collect();
    zticks_inner.sort_by(f64::total_cmp);
    zticks_inner.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let contour_spacing = c_sq * dth;
    let zticks_below =
        graded_ticks(-c_sq, -depth, contour_spacing.min(depth - c_sq), grading)?;
    let xticks_right =
        graded_ticks(c_sq, length, contour_spacing.min(length - c_sq), grading)?;

    b.rect_block(&xticks_inner, &zticks_below, symmetric_fs)?;
    b.rect_block(&xticks_right, &zticks_inner, symmetric_fs)?;
    b.rect_block(&xticks_right, &zticks_below, symmetric_fs)?;

    let tol = 1e-9 * (length + depth);
    b.finish(depth, length, |pa, pb| {
        let on = |v: f64, t: f64| (v - t).abs() < tol;
        let r2 = |p: (f64, f64)| (p.0 * p.0 + p.1 * p.1).sqrt();
        if on(pa.1, 0.0) && on(pb.1, 0.0) {
            Some(BoundaryTag::FreeSurface)
        } else if on(pa.1, -depth) && on(pb.1, -depth) {
            Some(BoundaryTag::Bed)
        } else if on(pa.0, length) && on(pb.0, length) {
            Some(BoundaryTag::FarField)
        } else if on(pa.0, 0.0) && on(pb.0, 0.0) {
            Some(BoundaryTag::Symmetry)
        } else if on(r2(pa), radius) && on(r2(pb), radius) {
            Some(BoundaryTag::Body)
        } else {
            None
        }
    })
}

/// Half floating box with symmetry plane at x = 0. Body faces: `n_bottom`
/// under the box, `n_side` on the vertical side. Affine elements only.
pub fn generate_box_domain(
    half_length: f64,
    draft: f64,
    depth: f64,
    length: f64,
    n_bottom: usize,
    n_side: usize,
    grading: f64,
) -> Result<Mesh> {
    if !(draft > 0.0) || !(draft < depth) {
        return Err(Error::MeshGeneration(format!(
            "draft must satisfy 0 < d < h, got d={draft}, h={depth}"
        )));
    }
    if !(half_length > 0.0) || !(half_length < length) {
        return Err(Error::MeshGeneration(format!(
            "half-length must satisfy 0 < a < L, got a={half_length}, L={length}"
        )));
    }
    if n_bottom < 1 || n_side < 1 {
        return Err(Error::MeshGeneration("need at least one face per body segment".into()));
    }
    if !(grading >= 1.0) {
        return Err(Error::MeshGeneration("grading ratio must be >= 1".into()));
    }

    let xt_bottom: Vec<f64> = (0..=n_bottom)
        .map(|i| half_length * i as f64 / n_bottom as f64)
        .collect();
    let zt_side: Vec<f64> = (0..=n_side).map(|j| -draft + draft * j as f64 / n_side as f64).collect();
    let s_bottom = half_length / n_bottom as f64;
    let s_side = draft / n_side as f64;
    let zt_below = graded_ticks(-draft, -depth, s_bottom.min(s_side), grading)?;
    let xt_right = graded_ticks(half_length, length, s_side.min(s_bottom), grading)?;

    let mut b = Builder::new();
    b.rect_block(&xt_bottom, &zt_below, true)?;
    b.rect_block(&xt_right, &zt_side, true)?;
    b.rect_block(&xt_right, &zt_below, true)?;

    let tol = 1e-9 * (length + depth);
    b.finish(depth, length, |pa, pb| {
        let on = |v: f64, t: f64| (v - t).abs() < tol;
        if on(pa.1, 0.0) && on(pb.1, 0.0) {
            Some(BoundaryTag::FreeSurface)
        } else if on(pa.1, -depth) && on(pb.1, -depth) {
            Some(BoundaryTag::Bed)
        } else if on(pa.0, length) && on(pb.0, length) {
            Some(BoundaryTag::FarField)
        } else if on(pa.0, 0.0) && on(pb.0, 0.0) {
            Some(BoundaryTag::Symmetry)
        } else if (on(pa.1, -draft) && on(pb.1, -draft) && pa.0 <= half_length + tol && pb.0 <= half_length + tol)
            || (on(pa.0, half_length) && on(pb.0, half_length) && pa.1 >= -draft - tol && pb.1 >= -draft - tol)
        {
            Some(BoundaryTag::Body)
        } else {
            None
        }
    })
}
