//! Global continuous-Galerkin assembly of the Laplace/Poisson operator with
//! mixed boundary conditions.
//!
//! Local element contributions are `Dx^T M^n Dx + Dz^T M^n Dz`. Affine
//! elements use the exact constant-Jacobian mass `J (V V^T)^{-1}`; curved
//! elements evaluate the products by super-collocation cubature to keep the
//! spectral rate. Dirichlet conditions are imposed by symmetric elimination:
//! constrained rows become identities and the known columns move to the
//! right-hand side, so the reduced operator stays symmetric positive
//! definite for the direct solver.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};
use sprs::{CsMat, TriMat};

use crate::linsolve::{self, Factorization};
use crate::mesh::{BoundaryTag, FaceGeometry, GeometricFactors, Mesh};
use crate::refelem::ReferenceElement;
use crate::{Error, Result};

/// Global numbering of the continuous-Galerkin nodes.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub n_dof: usize,
    /// Global index of each (element, local node).
    pub elem_to_global: Vec<Vec<usize>>,
    /// Physical coordinates per global node.
    pub coords: Vec<(f64, f64)>,
    /// Global node sets per boundary tag (corner nodes appear in both sets).
    pub tag_nodes: BTreeMap<BoundaryTag, BTreeSet<usize>>,
    /// Free-surface trace ordered by x.
    pub fs_trace: Vec<usize>,
    /// Body trace in ascending global order.
    pub body_trace: Vec<usize>,
}

impl DofMap {
    /// Number a conforming mesh: vertices, then edge nodes, then interior
    /// nodes. Shared edge nodes match through the canonical low-to-high
    /// vertex orientation, so conformity is exact (no coordinate fuzz).
    pub fn build(mesh: &Mesh, re: &ReferenceElement) -> Self {
        let p = re.order;
        let n_vert = mesh.vertices.len();

        // Classify local nodes once: vertex / edge(k, slot) / interior.
        #[derive(Clone, Copy)]
        enum Kind {
            Vertex(usize),
            Edge(usize, usize),
            Interior,
        }
        let mut kind = vec![Kind::Interior; re.node_count];
        for (v, &ln) in re.vertex_nodes.iter().enumerate() {
            kind[ln] = Kind::Vertex(v);
        }
        for e in 0..3 {
            for (slot, &ln) in re.face_nodes[e][1..p].iter().enumerate() {
                kind[ln] = Kind::Edge(e, slot);
            }
        }
        let n_interior = (0..re.node_count)
            .filter(|&i| matches!(kind[i], Kind::Interior))
            .count();

        // Edge numbering.
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        for e in 0..mesh.n_elements() {
            for k in 0..3 {
                let (a, b) = mesh.edge_vertices(e, k);
                let key = (a.min(b), a.max(b));
                let next = edge_ids.len();
                edge_ids.entry(key).or_insert(next);
            }
        }
        let n_edges = edge_ids.len();
        let per_edge = p.saturating_sub(1);
        let interior_base = n_vert + n_edges * per_edge;
        let n_dof = interior_base + mesh.n_elements() * n_interior;

        let mut elem_to_global = Vec::with_capacity(mesh.n_elements());
        let mut coords = vec![(f64::NAN, f64::NAN); n_dof];
        for e in 0..mesh.n_elements() {
            let nodes = mesh.element_nodes(e, re);
            let tri = mesh.triangles[e];
            let mut globals = vec![0usize; re.node_count];
            let mut n_int_seen = 0usize;
            for ln in 0..re.node_count {
                let g = match kind[ln] {
                    Kind::Vertex(v) => tri[v],
                    Kind::Edge(k, slot) => {
                        let (a, b) = mesh.edge_vertices(e, k);
                        let key = (a.min(b), a.max(b));
                        let id = edge_ids[&key];
                        // Canonical direction: from min vertex to max vertex.
                        let slot = if a < b { slot } else { per_edge - 1 - slot };
                        n_vert + id * per_edge + slot
                    }
                    Kind::Interior => {
                        let g = interior_base + e * n_interior + n_int_seen;
                        n_int_seen += 1;
                        g
                    }
                };
                globals[ln] = g;
                coords[g] = nodes[ln];
            }
            elem_to_global.push(globals);
        }

        // Boundary tag sets and traces.
        let mut tag_nodes: BTreeMap<BoundaryTag, BTreeSet<usize>> = BTreeMap::new();
        for bf in &mesh.boundary_faces {
            let set = tag_nodes.entry(bf.tag).or_default();
            for &ln in &re.face_nodes[bf.edge] {
                set.insert(elem_to_global[bf.element][ln]);
            }
        }
        let mut fs_trace: Vec<usize> = tag_nodes
            .get(&BoundaryTag::FreeSurface)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();
        fs_trace.sort_by(|&a, &b| coords[a].0.total_cmp(&coords[b].0));
        let body_trace: Vec<usize> = tag_nodes
            .get(&BoundaryTag::Body)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default();

        DofMap {
            n_dof,
            elem_to_global,
            coords,
            tag_nodes,
            fs_trace,
            body_trace,
        }
    }

    /// Spacings between consecutive free-surface trace nodes.
    pub fn fs_spacings(&self) -> Vec<f64> {
        self.fs_trace
            .windows(2)
            .map(|w| {
                let (a, b) = (self.coords[w[0]], self.coords[w[1]]);
                ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
            })
            .collect()
    }
}

/// Dirichlet constraint bookkeeping plus the factorized reduced system.
#[derive(Debug)]
struct Constraints {
    /// Constrained nodes in ascending order and their current values.
    nodes: Vec<usize>,
    values: Vec<f64>,
    /// Position of each dof in the free list (None if constrained).
    free_pos: Vec<Option<usize>>,
    free: Vec<usize>,
    a_fc: CsMat<f64>,
    fact: Factorization,
}

/// Assembled discrete Laplacian with load vector and Dirichlet handling.
#[derive(Debug)]
pub struct DiscreteLaplacian {
    /// Symmetric operator before any Dirichlet modification.
    pub matrix: CsMat<f64>,
    /// Current load vector (flux and volume-source contributions).
    pub load: Vec<f64>,
    constraints: Option<Constraints>,
}

/// Assemble the global stiffness operator.
pub fn assemble_stiffness(
    mesh: &Mesh,
    factors: &GeometricFactors,
    re: &ReferenceElement,
    dofs: &DofMap,
) -> Result<DiscreteLaplacian> {
    let n = dofs.n_dof;
    let mut tri = TriMat::new((n, n));
    let np = re.node_count;
    for e in 0..mesh.n_elements() {
        let eg = &factors.elements[e];
        let local = if eg.affine {
            // Exact path: constant metrics, M^n = J (V V^T)^{-1}.
            let j = eg.nodal.jacobian[0];
            let dx = re.diff_r.scale(eg.nodal.dr_dx[0]) + re.diff_s.scale(eg.nodal.ds_dx[0]);
            let dz = re.diff_r.scale(eg.nodal.dr_dz[0]) + re.diff_s.scale(eg.nodal.ds_dz[0]);
            (dx.transpose() * &re.mass * &dx + dz.transpose() * &re.mass * &dz).scale(j)
        } else {
            // Super-collocation path: everything at cubature points.
            let nq = eg.cub_wj.len();
            let mut gx = DMatrix::zeros(nq, np);
            let mut gz = DMatrix::zeros(nq, np);
            for q in 0..nq {
                for i in 0..np {
                    gx[(q, i)] = eg.cub.dr_dx[q] * re.diff_r_cub[(q, i)]
                        + eg.cub.ds_dx[q] * re.diff_s_cub[(q, i)];
                    gz[(q, i)] = eg.cub.dr_dz[q] * re.diff_r_cub[(q, i)]
                        + eg.cub.ds_dz[q] * re.diff_s_cub[(q, i)];
                }
            }
            let mut local = DMatrix::zeros(np, np);
            for q in 0..nq {
                let w = eg.cub_wj[q];
                for i in 0..np {
                    let (gxi, gzi) = (gx[(q, i)], gz[(q, i)]);
                    for j in 0..np {
                        local[(i, j)] += w * (gxi * gx[(q, j)] + gzi * gz[(q, j)]);
                    }
                }
            }
            local
        };
        let globals = &dofs.elem_to_global[e];
        for i in 0..np {
            for j in 0..np {
                let v = local[(i, j)];
                if v != 0.0 {
                    tri.add_triplet(globals[i], globals[j], v);
                }
            }
        }
    }
    Ok(DiscreteLaplacian {
        matrix: tri.to_csr(),
        load: vec![0.0; n],
        constraints: None,
    })
}

impl DiscreteLaplacian {
    pub fn n_dof(&self) -> usize {
        self.load.len()
    }

    /// Zero the load vector (start of a new right-hand side).
    pub fn reset_load(&mut self) {
        self.load.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Accumulate Neumann flux on every face with the tag. The flux closure
    /// is sampled at the face quadrature points (use `quad_coords`,
    /// `quad_normals`, `quad_gen_normals` of the face), which keeps linear
    /// fields exact on curved faces. Returns the number of faces touched
    /// (zero means the tag had no faces).
    pub fn add_neumann_flux(
        &mut self,
        factors: &GeometricFactors,
        dofs: &DofMap,
        re: &ReferenceElement,
        tag: BoundaryTag,
        q: impl Fn(&FaceGeometry, usize) -> f64,
    ) -> usize {
        self.add_neumann_flux_indexed(factors, dofs, re, tag, |_, fg, qi| q(fg, qi))
    }

    /// As `add_neumann_flux`, additionally passing the face's index within
    /// `factors.faces` to the closure.
    pub fn add_neumann_flux_indexed(
        &mut self,
        factors: &GeometricFactors,
        dofs: &DofMap,
        re: &ReferenceElement,
        tag: BoundaryTag,
        q: impl Fn(usize, &FaceGeometry, usize) -> f64,
    ) -> usize {
        let mut count = 0;
        for (fi, fg) in factors.faces.iter().enumerate() {
            if fg.face.tag != tag {
                continue;
            }
            count += 1;
            let globals = &dofs.elem_to_global[fg.face.element];
            let fnodes = &re.face_nodes[fg.face.edge];
            for qi in 0..fg.quad_w_sj.len() {
                let w = fg.quad_w_sj[qi] * q(fi, fg, qi);
                for (i, &ln) in fnodes.iter().enumerate() {
                    self.load[globals[ln]] += w * re.face_interp_quad[(qi, i)];
                }
            }
        }
        count
    }

    /// Flux variant taking values at the P+1 face nodes; the nodal
    /// interpolant is integrated through the face mass matrix.
    pub fn add_neumann_flux_nodal(
        &mut self,
        factors: &GeometricFactors,
        dofs: &DofMap,
        re: &ReferenceElement,
        tag: BoundaryTag,
        q: impl Fn(&FaceGeometry, usize) -> f64,
    ) -> usize {
        let mut count = 0;
        for fg in factors.faces.iter().filter(|f| f.face.tag == tag) {
            count += 1;
            let np1 = fg.node_coords.len();
            let qv = DVector::from_fn(np1, |i, _| q(fg, i));
            let contrib = &fg.mass * qv;
            let globals = &dofs.elem_to_global[fg.face.element];
            for (i, &ln) in re.face_nodes[fg.face.edge].iter().enumerate() {
                self.load[globals[ln]] += contrib[i];
            }
        }
        count
    }

    /// Accumulate a volume source term by elementwise cubature of `f`
    /// against the test functions.
    pub fn add_volume_source(
        &mut self,
        factors: &GeometricFactors,
        dofs: &DofMap,
        re: &ReferenceElement,
        f: impl Fn(f64, f64) -> f64,
    ) {
        for (e, eg) in factors.elements.iter().enumerate() {
            let nq = eg.cub_wj.len();
            let globals = &dofs.elem_to_global[e];
            for i in 0..re.node_count {
                let mut acc = 0.0;
                for q in 0..nq {
                    let (x, z) = eg.cub_coords[q];
                    acc += eg.cub_wj[q] * re.interp_cub[(q, i)] * f(x, z);
                }
                self.load[globals[i]] += acc;
            }
        }
    }

    /// Impose Dirichlet values. On the first call (or when the node set
    /// changes) the reduced system is extracted, reordered and factorized;
    /// later calls with the same node set only swap the values.
    pub fn impose_dirichlet(&mut self, nodes: &[usize], values: &[f64]) -> Result<()> {
        assert_eq!(nodes.len(), values.len());
        // Deduplicate, rejecting conflicting values.
        let mut map: BTreeMap<usize, f64> = BTreeMap::new();
        for (&n, &v) in nodes.iter().zip(values) {
            if let Some(&prev) = map.get(&n) {
                if prev != v {
                    return Err(Error::ConflictingDirichlet { node: n, a: prev, b: v });
                }
            } else {
                map.insert(n, v);
            }
        }
        let sorted_nodes: Vec<usize> = map.keys().copied().collect();
        let sorted_values: Vec<f64> = map.values().copied().collect();

        if let Some(c) = &mut self.constraints {
            if c.nodes == sorted_nodes {
                c.values = sorted_values;
                return Ok(());
            }
        }

        let n = self.n_dof();
        let mut free_pos = vec![None; n];
        let mut constrained = vec![false; n];
        for &nd in &sorted_nodes {
            if nd >= n {
                return Err(Error::InvalidParameter {
                    name: "dirichlet nodes",
                    message: format!("node {nd} out of range (N_dof = {n})"),
                });
            }
            constrained[nd] = true;
        }
        let mut free = Vec::with_capacity(n - sorted_nodes.len());
        for i in 0..n {
            if !constrained[i] {
                free_pos[i] = Some(free.len());
                free.push(i);
            }
        }
        let mut cons_pos = vec![usize::MAX; n];
        for (k, &nd) in sorted_nodes.iter().enumerate() {
            cons_pos[nd] = k;
        }

        let nf = free.len();
        let nc = sorted_nodes.len();
        let mut tri_ff = TriMat::new((nf, nf));
        let mut tri_fc = TriMat::new((nf, nc));
        for (i, row) in self.matrix.outer_iterator().enumerate() {
            let Some(pi) = free_pos[i] else { continue };
            for (j, &v) in row.iter() {
                match free_pos[j] {
                    Some(pj) => tri_ff.add_triplet(pi, pj, v),
                    None => tri_fc.add_triplet(pi, cons_pos[j], v),
                }
            }
        }
        let a_ff: CsMat<f64> = tri_ff.to_csr();
        let a_fc: CsMat<f64> = tri_fc.to_csr();
        let perm = linsolve::rcm_permutation(&a_ff);
        let fact = linsolve::factorize(&a_ff, &perm)?;
        self.constraints = Some(Constraints {
            nodes: sorted_nodes,
            values: sorted_values,
            free_pos,
            free,
            a_fc,
            fact,
        });
        Ok(())
    }

    /// Update the values of the existing constraint set.
    pub fn set_dirichlet_values(&mut self, values: &[f64]) {
        let c = self
            .constraints
            .as_mut()
            .expect("impose_dirichlet must be called before set_dirichlet_values");
        assert_eq!(values.len(), c.values.len());
        c.values.copy_from_slice(values);
    }

    /// Constrained node list (ascending), if any.
    pub fn dirichlet_nodes(&self) -> Option<&[usize]> {
        self.constraints.as_ref().map(|c| c.nodes.as_slice())
    }

    /// Solve with the current load vector and Dirichlet values.
    pub fn solve(&self) -> Result<Vec<f64>> {
        let c = self.constraints.as_ref().ok_or(Error::InvalidParameter {
            name: "constraints",
            message: "a pure-Neumann system is singular; impose Dirichlet data first".into(),
        })?;
        // b_f = load_f - A_fc x_c.
        let mut bf: Vec<f64> = c.free.iter().map(|&i| self.load[i]).collect();
        for (i, row) in c.a_fc.outer_iterator().enumerate() {
            let mut acc = 0.0;
            for (j, &v) in row.iter() {
                acc += v * c.values[j];
            }
            bf[i] -= acc;
        }
        let xf = c.fact.solve(&bf);
        let mut x = vec![0.0; self.n_dof()];
        for (pos, &i) in c.free.iter().enumerate() {
            x[i] = xf[pos];
        }
        for (k, &nd) in c.nodes.iter().enumerate() {
            x[nd] = c.values[k];
        }
        Ok(x)
    }

    /// Reference to the factorization of the reduced system.
    pub fn factorization(&self) -> Option<&Factorization> {
        self.constraints.as_ref().map(|c| &c.fact)
    }

    /// Materialized effective matrix after symmetric Dirichlet imposition
    /// (identity rows/columns on constrained nodes). Dense; test-sized
    /// systems only.
    pub fn effective_matrix_dense(&self) -> DMatrix<f64> {
        let n = self.n_dof();
        let mut m = DMatrix::zeros(n, n);
        match &self.constraints {
            None => {
                for (i, row) in self.matrix.outer_iterator().enumerate() {
                    for (j, &v) in row.iter() {
                        m[(i, j)] = v;
                    }
                }
            }
            Some(c) => {
                for (i, row) in self.matrix.outer_iterator().enumerate() {
                    if c.free_pos[i].is_none() {
                        continue;
                    }
                    for (j, &v) in row.iter() {
                        if c.free_pos[j].is_some() {
                            m[(i, j)] = v;
                        }
                    }
                }
                for &nd in &c.nodes {
                    m[(nd, nd)] = 1.0;
                }
            }
        }
        m
    }
}

/// Assembled mass matrix of the free-surface trace (for surface integrals
/// such as wave energy). Dense over the trace index list of the DofMap.
pub fn fs_trace_mass(
    factors: &GeometricFactors,
    dofs: &DofMap,
    re: &ReferenceElement,
) -> DMatrix<f64> {
    let m = dofs.fs_trace.len();
    let pos: HashMap<usize, usize> = dofs
        .fs_trace
        .iter()
        .enumerate()
        .map(|(k, &g)| (g, k))
        .collect();
    let mut mass = DMatrix::zeros(m, m);
    for fg in factors
        .faces
        .iter()
        .filter(|f| f.face.tag == BoundaryTag::FreeSurface)
    {
        let globals = &dofs.elem_to_global[fg.face.element];
        let fnodes = &re.face_nodes[fg.face.edge];
        for (i, &li) in fnodes.iter().enumerate() {
            let Some(&pi) = pos.get(&globals[li]) else { continue };
            for (j, &lj) in fnodes.iter().enumerate() {
                if let Some(&pj) = pos.get(&globals[lj]) {
                    mass[(pi, pj)] += fg.mass[(i, j)];
                }
            }
        }
    }
    mass
}
