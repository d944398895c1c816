//! Unstructured triangular meshes of the fluid domain.
//!
//! Meshes carry tagged boundary faces for the five boundary types of the
//! radiation problem and, optionally, per-element high-order node
//! coordinates for elements curved onto the body contour.

mod curve;
mod factors;
mod generate;
mod io;

pub use curve::{curve_body_elements, BodyCurve};
pub use factors::{geometric_factors, ElementGeometry, FaceGeometry, GeometricFactors};
pub use generate::{
    generate_box_domain, generate_cylinder_domain, generate_rectangle_basin, graded_ticks,
};
pub use io::{export_mesh, import_mesh, read_mesh, write_mesh};

use std::collections::HashMap;

use crate::refelem::ReferenceElement;
use crate::{Error, Result};

/// Boundary classification of the fluid domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    FreeSurface,
    Bed,
    FarField,
    Body,
    Symmetry,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 5] = [
        BoundaryTag::FreeSurface,
        BoundaryTag::Bed,
        BoundaryTag::FarField,
        BoundaryTag::Body,
        BoundaryTag::Symmetry,
    ];

    /// Physical tag used in the mesh exchange format.
    pub fn physical_id(self) -> usize {
        match self {
            BoundaryTag::FreeSurface => 1,
            BoundaryTag::Bed => 2,
            BoundaryTag::FarField => 3,
            BoundaryTag::Body => 4,
            BoundaryTag::Symmetry => 5,
        }
    }

    pub fn from_physical_id(id: usize) -> Option<Self> {
        match id {
            1 => Some(BoundaryTag::FreeSurface),
            2 => Some(BoundaryTag::Bed),
            3 => Some(BoundaryTag::FarField),
            4 => Some(BoundaryTag::Body),
            5 => Some(BoundaryTag::Symmetry),
            _ => None,
        }
    }
}

/// One tagged boundary edge: element index, local edge (0..3), tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub element: usize,
    pub edge: usize,
    pub tag: BoundaryTag,
}

/// Conforming triangular mesh with tagged boundary.
#[derive(Debug, Clone)]
pub struct Mesh {
    /// Vertex coordinates `(x, z)` in meters.
    pub vertices: Vec<(f64, f64)>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_faces: Vec<BoundaryFace>,
    /// Order of the curved node data, if any element is curved.
    pub curved_order: Option<usize>,
    /// Per-element high-order node coordinates overriding the affine map.
    pub curved: Vec<Option<Vec<(f64, f64)>>>,
    /// Water depth in meters.
    pub depth: f64,
    /// Domain length in meters.
    pub length: f64,
}

impl Mesh {
    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    /// Vertex coordinates of an element in local order.
    pub fn element_vertices(&self, e: usize) -> [(f64, f64); 3] {
        let t = self.triangles[e];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    /// Global vertex pair of a local edge, in boundary traversal order.
    pub fn edge_vertices(&self, e: usize, edge: usize) -> (usize, usize) {
        let t = self.triangles[e];
        match edge {
            0 => (t[0], t[1]),
            1 => (t[1], t[2]),
            2 => (t[2], t[0]),
            _ => panic!("edge index out of range"),
        }
    }

    /// Twice the signed area of an element's affine triangle.
    pub fn signed_area2(&self, e: usize) -> f64 {
        let [a, b, c] = self.element_vertices(e);
        (b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1)
    }

    /// Physical coordinates of all reference nodes of an element (affine map
    /// or the curved override).
    pub fn element_nodes(&self, e: usize, re: &ReferenceElement) -> Vec<(f64, f64)> {
        if let Some(c) = self.curved.get(e).and_then(|c| c.as_ref()) {
            return c.clone();
        }
        let [a, b, c] = self.element_vertices(e);
        re.nodes
            .iter()
            .map(|&(r, s)| affine_map(a, b, c, r, s))
            .collect()
    }

    /// Map of undirected vertex pairs to the (element, edge) sides that share
    /// them.
    pub fn edge_map(&self) -> HashMap<(usize, usize), Vec<(usize, usize)>> {
        let mut map: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for e in 0..self.triangles.len() {
            for edge in 0..3 {
                let (a, b) = self.edge_vertices(e, edge);
                let key = (a.min(b), a.max(b));
                map.entry(key).or_default().push((e, edge));
            }
        }
        map
    }

    /// Check conformity, orientation, tag coverage and curved-data shape.
    pub fn validate(&self) -> Result<()> {
        if self.curved.len() != self.triangles.len() {
            return Err(Error::MeshInvalid(
                "curved data length does not match element count".into(),
            ));
        }
        for (e, t) in self.triangles.iter().enumerate() {
            for &v in t {
                if v >= self.vertices.len() {
                    return Err(Error::MeshInvalid(format!(
                        "element {e} references missing vertex {v}"
                    )));
                }
            }
            if self.signed_area2(e) <= 0.0 {
                return Err(Error::MeshInvalid(format!(
                    "element {e} is degenerate or clockwise (signed area {})",
                    self.signed_area2(e) / 2.0
                )));
            }
        }
        let edges = self.edge_map();
        for (key, sides) in &edges {
            if sides.len() > 2 {
                return Err(Error::MeshInvalid(format!(
                    "edge {key:?} shared by {} elements",
                    sides.len()
                )));
            }
        }
        let mut tagged: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, bf) in self.boundary_faces.iter().enumerate() {
            if bf.element >= self.triangles.len() || bf.edge > 2 {
                return Err(Error::MeshInvalid(format!(
                    "boundary face {i} references invalid element/edge"
                )));
            }
            let (a, b) = self.edge_vertices(bf.element, bf.edge);
            let key = (a.min(b), a.max(b));
            if edges[&key].len() != 1 {
                return Err(Error::MeshInvalid(format!(
                    "boundary face {i} lies on an interior edge {key:?}"
                )));
            }
            if tagged.insert(key, i).is_some() {
                return Err(Error::MeshInvalid(format!(
                    "boundary edge {key:?} tagged more than once"
                )));
            }
        }
        for (key, sides) in &edges {
            if sides.len() == 1 && !tagged.contains_key(key) {
                return Err(Error::MeshInvalid(format!(
                    "boundary edge {key:?} carries no tag"
                )));
            }
        }
        Ok(())
    }

    /// Mirror the mesh about the plane x = 0, merging the shared column.
    ///
    /// Symmetry faces disappear (they become interior); every other tag is
    /// kept on both halves. Curved data is dropped; re-curve afterwards.
    pub fn mirrored(&self) -> Result<Mesh> {
        let nv = self.vertices.len();
        let tol = 1e-12 * (1.0 + self.length.abs());
        let mut map = vec![0usize; nv];
        let mut vertices = self.vertices.clone();
        for (i, &(x, z)) in self.vertices.iter().enumerate() {
            if x.abs() < tol {
                map[i] = i;
            } else {
                map[i] = vertices.len();
                vertices.push((-x, z));
            }
        }
        let mut triangles = self.triangles.clone();
        let mut mirror_elem = vec![0usize; self.triangles.len()];
        for (e, t) in self.triangles.iter().enumerate() {
            mirror_elem[e] = triangles.len();
            // Flip orientation to stay counter-clockwise.
            triangles.push([map[t[0]], map[t[2]], map[t[1]]]);
        }
        let mut boundary_faces = Vec::new();
        for bf in &self.boundary_faces {
            if bf.tag == BoundaryTag::Symmetry {
                continue;
            }
            boundary_faces.push(*bf);
            // Edge k (a->b) maps to the mirrored triangle [t0, t2, t1]:
            // 0:(0,1)->(t0,t1) becomes edge 2:(v2=t1 -> v0=t0) reversed; work
            // it out by vertex lookup instead.
            let (a, b) = self.edge_vertices(bf.element, bf.edge);
            let (ma, mb) = (map[a], map[b]);
            let me = mirror_elem[bf.element];
            let mt = triangles[me];
            let edge = (0..3)
                .find(|&k| {
                    let (p, q) = match k {
                        0 => (mt[0], mt[1]),
                        1 => (mt[1], mt[2]),
                        _ => (mt[2], mt[0]),
                    };
                    (p == ma && q == mb) || (p == mb && q == ma)
                })
                .expect("mirrored edge exists");
            boundary_faces.push(BoundaryFace { element: me, edge, tag: bf.tag });
        }
        let mesh = Mesh {
            vertices,
            curved_order: None,
            curved: vec![None; triangles.len()],
            triangles,
            boundary_faces,
            depth: self.depth,
            length: self.length,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Longest element edge (affine) in the mesh.
    pub fn max_edge_length(&self) -> f64 {
        let mut h = 0.0f64;
        for e in 0..self.triangles.len() {
            let [a, b, c] = self.element_vertices(e);
            for (p, q) in [(a, b), (b, c), (c, a)] {
                h = h.max(((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt());
            }
        }
        h
    }

    /// Lengths of the boundary faces with a tag (affine chord lengths).
    pub fn face_lengths(&self, tag: BoundaryTag) -> Vec<f64> {
        self.boundary_faces
            .iter()
            .filter(|bf| bf.tag == tag)
            .map(|bf| {
                let (a, b) = self.edge_vertices(bf.element, bf.edge);
                let (pa, pb) = (self.vertices[a], self.vertices[b]);
                ((pa.0 - pb.0).powi(2) + (pa.1 - pb.1).powi(2)).sqrt()
            })
            .collect()
    }
}

/// Affine map of the reference simplex onto a triangle.
pub fn affine_map(a: (f64, f64), b: (f64, f64), c: (f64, f64), r: f64, s: f64) -> (f64, f64) {
    let la = -(r + s) / 2.0;
    let lb = (1.0 + r) / 2.0;
    let lc = (1.0 + s) / 2.0;
    (la * a.0 + lb * b.0 + lc * c.0, la * a.1 + lb * b.1 + lc * c.1)
}
