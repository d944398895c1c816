//! Metric terms, transformation Jacobians, boundary normals and surface
//! Jacobians, evaluated at the element nodes and at the super-collocation
//! cubature points.

use nalgebra::{DMatrix, DVector};

use super::{BoundaryFace, Mesh};
use crate::refelem::ReferenceElement;
use crate::{Error, Result};

/// Metric data of one element at a point set (nodes or cubature points).
#[derive(Debug, Clone)]
pub struct MetricSet {
    pub dr_dx: Vec<f64>,
    pub ds_dx: Vec<f64>,
    pub dr_dz: Vec<f64>,
    pub ds_dz: Vec<f64>,
    pub jacobian: Vec<f64>,
}

/// Per-element geometry.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    /// Physical nodal coordinates.
    pub coords: Vec<(f64, f64)>,
    pub nodal: MetricSet,
    /// Metric terms at cubature points plus premultiplied weights w*J.
    pub cub: MetricSet,
    pub cub_wj: Vec<f64>,
    pub cub_coords: Vec<(f64, f64)>,
    /// Constant-Jacobian affine element (no curved override).
    pub affine: bool,
}

/// Per-boundary-face geometry. Normals point out of the fluid domain.
#[derive(Debug, Clone)]
pub struct FaceGeometry {
    pub face: BoundaryFace,
    /// Physical coordinates of the P+1 face nodes.
    pub node_coords: Vec<(f64, f64)>,
    pub normals: Vec<(f64, f64)>,
    pub surf_jac: Vec<f64>,
    /// Generalized normals (surge, heave, pitch) at the face nodes.
    pub gen_normals: [Vec<f64>; 3],
    /// Quadrature data along the face: weight * surface Jacobian, normals,
    /// coordinates and generalized normals at the quadrature points.
    pub quad_w_sj: Vec<f64>,
    pub quad_normals: Vec<(f64, f64)>,
    pub quad_coords: Vec<(f64, f64)>,
    pub quad_gen_normals: [Vec<f64>; 3],
    /// Face mass matrix (P+1)^2 including the surface Jacobian.
    pub mass: DMatrix<f64>,
}

/// All geometric factors of a mesh at a given order.
#[derive(Debug, Clone)]
pub struct GeometricFactors {
    pub elements: Vec<ElementGeometry>,
    pub faces: Vec<FaceGeometry>,
}

/// Index of the generalized normal for a rigid-body mode (1, 3 or 5).
pub(crate) fn mode_slot(mode: usize) -> usize {
    match mode {
        1 => 0,
        3 => 1,
        5 => 2,
        _ => panic!("mode must be 1 (surge), 3 (heave) or 5 (pitch)"),
    }
}

fn metric_from_derivatives(
    xr: &DVector<f64>,
    xs: &DVector<f64>,
    zr: &DVector<f64>,
    zs: &DVector<f64>,
    element: usize,
    what: &str,
) -> Result<MetricSet> {
    let n = xr.len();
    let mut set = MetricSet {
        dr_dx: vec![0.0; n],
        ds_dx: vec![0.0; n],
        dr_dz: vec![0.0; n],
        ds_dz: vec![0.0; n],
        jacobian: vec![0.0; n],
    };
    for i in 0..n {
        let j = xr[i] * zs[i] - xs[i] * zr[i];
        if !(j > 0.0) {
            return Err(Error::InvalidGeometry {
                element,
                message: format!("non-positive Jacobian {j:e} at {what} point {i}"),
            });
        }
        set.jacobian[i] = j;
        set.dr_dx[i] = zs[i] / j;
        set.ds_dx[i] = -zr[i] / j;
        set.dr_dz[i] = -xs[i] / j;
        set.ds_dz[i] = xr[i] / j;
    }
    Ok(set)
}

/// Compute all metric terms, normals and surface Jacobians.
pub fn geometric_factors(mesh: &Mesh, re: &ReferenceElement) -> Result<GeometricFactors> {
    if let Some(order) = mesh.curved_order {
        if order != re.order {
            return Err(Error::MeshInvalid(format!(
                "curved data of order {order} does not match reference element order {}",
                re.order
            )));
        }
    }

    let mut elements = Vec::with_capacity(mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let coords = mesh.element_nodes(e, re);
        let x = DVector::from_iterator(coords.len(), coords.iter().map(|p| p.0));
        let z = DVector::from_iterator(coords.len(), coords.iter().map(|p| p.1));

        let nodal = metric_from_derivatives(
            &(&re.diff_r * &x),
            &(&re.diff_s * &x),
            &(&re.diff_r * &z),
            &(&re.diff_s * &z),
            e,
            "nodal",
        )?;
        let cub = metric_from_derivatives(
            &(&re.diff_r_cub * &x),
            &(&re.diff_s_cub * &x),
            &(&re.diff_r_cub * &z),
            &(&re.diff_s_cub * &z),
            e,
            "cubature",
        )?;
        let xc = &re.interp_cub * &x;
        let zc = &re.interp_cub * &z;
        let cub_wj: Vec<f64> = re
            .cubature
            .weights
            .iter()
            .zip(&cub.jacobian)
            .map(|(w, j)| w * j)
            .collect();
        let cub_coords: Vec<(f64, f64)> = (0..xc.len()).map(|q| (xc[q], zc[q])).collect();
        elements.push(ElementGeometry {
            coords,
            nodal,
            cub,
            cub_wj,
            cub_coords,
            affine: mesh.curved.get(e).map_or(true, |c| c.is_none()),
        });
    }

    let mut faces = Vec::with_capacity(mesh.boundary_faces.len());
    for bf in &mesh.boundary_faces {
        let eg = &elements[bf.element];
        let fnodes = &re.face_nodes[bf.edge];
        let node_coords: Vec<(f64, f64)> = fnodes.iter().map(|&ln| eg.coords[ln]).collect();
        let fx = DVector::from_iterator(node_coords.len(), node_coords.iter().map(|p| p.0));
        let fz = DVector::from_iterator(node_coords.len(), node_coords.iter().map(|p| p.1));

        // Tangent along the counter-clockwise element boundary; the outward
        // normal of the fluid domain is the tangent rotated by -90 degrees.
        let rotate = |tx: f64, tz: f64, element: usize| -> Result<((f64, f64), f64)> {
            let sj = (tx * tx + tz * tz).sqrt();
            if !(sj > 0.0) {
                return Err(Error::InvalidGeometry {
                    element,
                    message: "zero-length boundary tangent".into(),
                });
            }
            Ok(((tz / sj, -tx / sj), sj))
        };

        let dxn = &re.face_diff_1d * &fx;
        let dzn = &re.face_diff_1d * &fz;
        let mut normals = Vec::with_capacity(fnodes.len());
        let mut surf_jac = Vec::with_capacity(fnodes.len());
        for i in 0..fnodes.len() {
            let (n, sj) = rotate(dxn[i], dzn[i], bf.element)?;
            normals.push(n);
            surf_jac.push(sj);
        }

        let dxq = &re.face_diff_quad * &fx;
        let dzq = &re.face_diff_quad * &fz;
        let xq = &re.face_interp_quad * &fx;
        let zq = &re.face_interp_quad * &fz;
        let nq = re.face_quad_points.len();
        let mut quad_normals = Vec::with_capacity(nq);
        let mut quad_w_sj = Vec::with_capacity(nq);
        let mut quad_coords = Vec::with_capacity(nq);
        for q in 0..nq {
            let (n, sj) = rotate(dxq[q], dzq[q], bf.element)?;
            quad_normals.push(n);
            quad_w_sj.push(re.face_quad_weights[q] * sj);
            quad_coords.push((xq[q], zq[q]));
        }

        let gen = |coords: &[(f64, f64)], normals: &[(f64, f64)]| -> [Vec<f64>; 3] {
            let surge: Vec<f64> = normals.iter().map(|n| n.0).collect();
            let heave: Vec<f64> = normals.iter().map(|n| n.1).collect();
            // Pitch moment arm about the origin on the undisturbed surface:
            // scalar cross product r x n in the x-z plane.
            let pitch: Vec<f64> = coords
                .iter()
                .zip(normals)
                .map(|(p, n)| p.0 * n.1 - p.1 * n.0)
                .collect();
            [surge, heave, pitch]
        };
        let gen_normals = gen(&node_coords, &normals);
        let quad_gen_normals = gen(&quad_coords, &quad_normals);

        // Face mass with surface Jacobian: E^T diag(w sJ) E.
        let np1 = fnodes.len();
        let mut mass = DMatrix::zeros(np1, np1);
        for q in 0..nq {
            let w = quad_w_sj[q];
            for i in 0..np1 {
                let ei = re.face_interp_quad[(q, i)];
                for j in 0..np1 {
                    mass[(i, j)] += w * ei * re.face_interp_quad[(q, j)];
                }
            }
        }

        faces.push(FaceGeometry {
            face: *bf,
            node_coords,
            normals,
            surf_jac,
            gen_normals,
            quad_w_sj,
            quad_normals,
            quad_coords,
            quad_gen_normals,
            mass,
        });
    }

    Ok(GeometricFactors { elements, faces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{
        curve_body_elements, generate_cylinder_domain, BodyCurve, BoundaryTag, Mesh,
    };
    use approx::assert_relative_eq;

    fn single_triangle(verts: [(f64, f64); 3]) -> Mesh {
        Mesh {
            vertices: verts.to_vec(),
            triangles: vec![[0, 1, 2]],
            boundary_faces: vec![
                BoundaryFace { element: 0, edge: 0, tag: BoundaryTag::Bed },
                BoundaryFace { element: 0, edge: 1, tag: BoundaryTag::FarField },
                BoundaryFace { element: 0, edge: 2, tag: BoundaryTag::Symmetry },
            ],
            curved_order: None,
            curved: vec![None],
            depth: 1.0,
            length: 1.0,
        }
    }

    #[test]
    fn identity_map_has_unit_metrics() {
        let m = single_triangle([(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)]);
        let re = ReferenceElement::new(3).unwrap();
        let f = geometric_factors(&m, &re).unwrap();
        let eg = &f.elements[0];
        for i in 0..re.node_count {
            assert_relative_eq!(eg.nodal.jacobian[i], 1.0, epsilon = 1e-13);
            assert_relative_eq!(eg.nodal.dr_dx[i], 1.0, epsilon = 1e-13);
            assert_relative_eq!(eg.nodal.ds_dz[i], 1.0, epsilon = 1e-13);
            assert!(eg.nodal.ds_dx[i].abs() < 1e-13);
            assert!(eg.nodal.dr_dz[i].abs() < 1e-13);
        }
    }

    #[test]
    fn unit_right_triangle_jacobian() {
        // Legs of length 1 from the area-2 reference simplex: J = 1/4.
        let m = single_triangle([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        let re = ReferenceElement::new(2).unwrap();
        let f = geometric_factors(&m, &re).unwrap();
        for &j in &f.elements[0].nodal.jacobian {
            assert_relative_eq!(j, 0.25, epsilon = 1e-13);
        }
    }

    #[test]
    fn cylinder_body_normals_point_out_of_fluid() {
        // The face normal comes from the degree-P edge interpolant, so it
        // approaches the analytic circle normal -p/R at the interpolation
        // rate: direction at moderate order, 1e-10 at high order.
        for (order, beta, tol) in [(4usize, 6usize, 1e-4), (10, 10, 1e-10)] {
            let mesh = generate_cylinder_domain(1.0, 6.283, 10.0, beta, 1.2, true).unwrap();
            let re = ReferenceElement::new(order).unwrap();
            let curved =
                curve_body_elements(&mesh, &re, BodyCurve::Circle { radius: 1.0 }).unwrap();
            let f = geometric_factors(&curved, &re).unwrap();
            for fg in f.faces.iter().filter(|f| f.face.tag == BoundaryTag::Body) {
                for (p, n) in fg.node_coords.iter().zip(&fg.normals) {
                    assert!((n.0 + p.0).abs() < tol, "P={order}: {n:?} at {p:?}");
                    assert!((n.1 + p.1).abs() < tol, "P={order}: {n:?} at {p:?}");
                    assert_relative_eq!((n.0 * n.0 + n.1 * n.1).sqrt(), 1.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn far_field_normal_is_plus_x() {
        let mesh = generate_cylinder_domain(1.0, 6.283, 10.0, 4, 1.2, true).unwrap();
        let re = ReferenceElement::new(2).unwrap();
        let f = geometric_factors(&mesh, &re).unwrap();
        for fg in f.faces.iter().filter(|f| f.face.tag == BoundaryTag::FarField) {
            for n in &fg.normals {
                assert_relative_eq!(n.0, 1.0, epsilon = 1e-12);
                assert!(n.1.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn annulus_sector_jacobian_matches_polar_map() {
        // One element whose curved coordinates sample the analytic polar map
        // (r, s) -> (rho(s) sin(theta(r)), -rho(s) cos(theta(r))); the
        // interpolated metric must match the analytic Jacobian
        // J = rho * drho/ds * dtheta/dr at high order.
        let r0 = 1.0;
        let r1 = 1.3;
        let th0 = 0.1;
        let th1 = 0.1 + std::f64::consts::PI / 10.0;
        let rho = |r: f64| r0 + (r1 - r0) * (r + 1.0) / 2.0;
        let theta = |s: f64| th0 + (th1 - th0) * (s + 1.0) / 2.0;
        let map = |r: f64, s: f64| {
            let (rr, tt) = (rho(r), theta(s));
            (rr * tt.sin(), -rr * tt.cos())
        };
        let re = ReferenceElement::new(10).unwrap();
        let verts = [map(-1.0, -1.0), map(1.0, -1.0), map(-1.0, 1.0)];
        let mut mesh = single_triangle(verts);
        mesh.curved_order = Some(10);
        mesh.curved = vec![Some(re.nodes.iter().map(|&(r, s)| map(r, s)).collect())];
        let f = geometric_factors(&mesh, &re).unwrap();
        let jac_exact = |r: f64| rho(r) * ((r1 - r0) / 2.0) * ((th1 - th0) / 2.0);
        let eg = &f.elements[0];
        for (q, &(r, _s)) in re.cubature.points.iter().enumerate() {
            assert!(
                (eg.cub.jacobian[q] - jac_exact(r)).abs() < 1e-10,
                "J at cubature point {q}: {} vs {}",
                eg.cub.jacobian[q],
                jac_exact(r)
            );
        }
    }

    #[test]
    fn closed_boundary_normal_integral_vanishes() {
        // Discrete Gauss identity including curved body faces.
        let mesh = generate_cylinder_domain(1.0, 6.283, 10.0, 5, 1.3, true).unwrap();
        let re = ReferenceElement::new(4).unwrap();
        let curved = curve_body_elements(&mesh, &re, BodyCurve::Circle { radius: 1.0 }).unwrap();
        let f = geometric_factors(&curved, &re).unwrap();
        let (mut ix, mut iz) = (0.0, 0.0);
        for fg in &f.faces {
            for q in 0..fg.quad_w_sj.len() {
                ix += fg.quad_w_sj[q] * fg.quad_normals[q].0;
                iz += fg.quad_w_sj[q] * fg.quad_normals[q].1;
            }
        }
        assert!(ix.abs() < 1e-10 && iz.abs() < 1e-10, "({ix}, {iz})");
    }

    #[test]
    fn quarter_arc_heave_normal_integral_is_radius() {
        let mesh = generate_cylinder_domain(1.0, 6.283, 10.0, 5, 1.2, true).unwrap();
        let re = ReferenceElement::new(4).unwrap();
        let curved = curve_body_elements(&mesh, &re, BodyCurve::Circle { radius: 1.0 }).unwrap();
        let f = geometric_factors(&curved, &re).unwrap();
        let mut acc = 0.0;
        for fg in f.faces.iter().filter(|f| f.face.tag == BoundaryTag::Body) {
            let slot = mode_slot(3);
            for q in 0..fg.quad_w_sj.len() {
                acc += fg.quad_w_sj[q] * fg.quad_gen_normals[slot][q];
            }
        }
        assert_relative_eq!(acc, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn curved_order_mismatch_is_rejected() {
        let mesh = generate_cylinder_domain(1.0, 6.283, 10.0, 4, 1.2, true).unwrap();
        let re4 = ReferenceElement::new(4).unwrap();
        let curved = curve_body_elements(&mesh, &re4, BodyCurve::Circle { radius: 1.0 }).unwrap();
        let re3 = ReferenceElement::new(3).unwrap();
        assert!(geometric_factors(&curved, &re3).is_err());
    }
}
