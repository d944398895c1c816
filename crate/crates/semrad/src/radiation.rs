//! Pseudo-impulsive time-domain radiation simulation.
//!
//! The body is driven by a Gaussian displacement whose spectrum is
//! band-limited to what the free-surface grid can resolve. The linear
//! free-surface conditions are integrated with the classical explicit
//! 4-stage Runge-Kutta scheme; each stage imposes the surface potential as
//! Dirichlet data, the body velocity flux as Neumann data, solves the
//! Laplace problem and recovers the vertical surface velocity by
//! element-local differentiation averaged at shared nodes.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::assembly::{assemble_stiffness, DiscreteLaplacian, DofMap};
use crate::mesh::{geometric_factors, BoundaryTag, GeometricFactors, Mesh};
use crate::refelem::ReferenceElement;
use crate::{Error, Result, GRAVITY};

/// Rigid-body mode of the 2D problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Surge,
    Heave,
    Pitch,
}

impl Mode {
    /// Conventional mode index (1, 3, 5).
    pub fn index(self) -> usize {
        match self {
            Mode::Surge => 1,
            Mode::Heave => 3,
            Mode::Pitch => 5,
        }
    }

    /// Slot into the generalized-normal arrays.
    pub fn slot(self) -> usize {
        match self {
            Mode::Surge => 0,
            Mode::Heave => 1,
            Mode::Pitch => 2,
        }
    }

    pub fn from_index(k: usize) -> Option<Mode> {
        match k {
            1 => Some(Mode::Surge),
            3 => Some(Mode::Heave),
            5 => Some(Mode::Pitch),
            _ => None,
        }
    }

    /// Anti-symmetric modes take a homogeneous Dirichlet condition on the
    /// symmetry plane; heave takes the natural Neumann condition.
    pub fn antisymmetric(self) -> bool {
        matches!(self, Mode::Surge | Mode::Pitch)
    }
}

/// Linear dispersion relation omega(k) in finite depth.
pub fn dispersion_omega(k: f64, depth: f64) -> f64 {
    (GRAVITY * k * (k * depth).tanh()).sqrt()
}

/// Gaussian pseudo-impulse displacement signal and its design parameters.
#[derive(Debug, Clone, Copy)]
pub struct PseudoImpulse {
    pub mode: Mode,
    pub amplitude: f64,
    /// Frequency-width parameter s in 1/s.
    pub width: f64,
    /// Peak time t0 in seconds.
    pub peak_time: f64,
    /// Spectral decay ratio between the cutoff and zero frequency.
    pub decay_ratio: f64,
    /// Start-value threshold: x(0) = amplitude * threshold.
    pub start_threshold: f64,
    /// Maximum resolvable design frequency f_r in Hz and derived scales.
    pub max_freq: f64,
    pub max_omega: f64,
    pub max_wavenumber: f64,
    pub min_wavelength: f64,
    /// Points-per-wavelength parameter when designed from the grid.
    pub alpha: Option<f64>,
}

impl PseudoImpulse {
    pub fn displacement(&self, t: f64) -> f64 {
        let u = t - self.peak_time;
        self.amplitude * (-2.0 * PI * PI * self.width * self.width * u * u).exp()
    }

    pub fn velocity(&self, t: f64) -> f64 {
        let u = t - self.peak_time;
        -4.0 * PI * PI * self.width * self.width * u * self.displacement(t)
    }

    /// Magnitude of the analytic Fourier transform of the displacement.
    pub fn spectrum_magnitude(&self, f: f64) -> f64 {
        self.amplitude / (self.width * (2.0 * PI).sqrt())
            * (-f * f / (2.0 * self.width * self.width)).exp()
    }

    pub fn with_peak_time(mut self, t0: f64) -> Self {
        self.peak_time = t0;
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }
}

fn impulse_common(
    mode: Mode,
    width: f64,
    max_freq: f64,
    max_wavenumber: f64,
    decay_ratio: f64,
    start_threshold: f64,
    alpha: Option<f64>,
) -> PseudoImpulse {
    let peak_time = (start_threshold.ln() / (-2.0 * PI * PI * width * width)).sqrt();
    PseudoImpulse {
        mode,
        amplitude: 1.0,
        width,
        peak_time,
        decay_ratio,
        start_threshold,
        max_freq,
        max_omega: 2.0 * PI * max_freq,
        max_wavenumber,
        min_wavelength: 2.0 * PI / max_wavenumber,
        alpha,
    }
}

/// Design the impulse from the coarsest free-surface node spacing: the
/// smallest design wave is `alpha` spacings long and carries the fraction
/// `decay_ratio` of the zero-frequency spectral amplitude.
pub fn design_pseudo_impulse(
    fs_max_spacing: f64,
    depth: f64,
    mode: Mode,
    alpha: f64,
    decay_ratio: f64,
    start_threshold: f64,
) -> Result<PseudoImpulse> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            message: format!("alpha must be positive, got {alpha}"),
        });
    }
    if !(decay_ratio > 0.0 && decay_ratio < 1.0)
        || !(start_threshold > 0.0 && start_threshold < 1.0)
    {
        return Err(Error::InvalidParameter {
            name: "impulse",
            message: "decay ratio and start threshold must lie in (0, 1)".into(),
        });
    }
    let min_wavelength = alpha * fs_max_spacing;
    let max_wavenumber = 2.0 * PI / min_wavelength;
    let max_omega = dispersion_omega(max_wavenumber, depth);
    let max_freq = max_omega / (2.0 * PI);
    let width = (-max_freq * max_freq / (2.0 * decay_ratio.ln())).sqrt();
    Ok(impulse_common(
        mode,
        width,
        max_freq,
        max_wavenumber,
        decay_ratio,
        start_threshold,
        Some(alpha),
    ))
}

/// Build an impulse from an explicit width parameter s; the cutoff follows
/// from the decay ratio and the wavenumber from the dispersion relation.
pub fn impulse_from_width(
    width: f64,
    depth: f64,
    mode: Mode,
    decay_ratio: f64,
    start_threshold: f64,
) -> Result<PseudoImpulse> {
    if !(width > 0.0) {
        return Err(Error::InvalidParameter {
            name: "width",
            message: "width parameter s must be positive".into(),
        });
    }
    let max_freq = width * (-2.0 * decay_ratio.ln()).sqrt();
    let max_omega = 2.0 * PI * max_freq;
    // Invert the dispersion relation for the cutoff wavenumber.
    let mut k = max_omega * max_omega / GRAVITY;
    for _ in 0..60 {
        let kh = k * depth;
        let f = GRAVITY * k * kh.tanh() - max_omega * max_omega;
        let df = GRAVITY * (kh.tanh() + kh / kh.cosh().powi(2));
        let step = f / df;
        k -= step;
        if step.abs() < 1e-14 * k.abs() {
            break;
        }
    }
    Ok(impulse_common(
        mode,
        width,
        max_freq,
        k,
        decay_ratio,
        start_threshold,
        None,
    ))
}

/// CFL-limited time step from the minimum free-surface node spacing and the
/// shallow-water speed.
pub fn cfl_timestep(fs_min_spacing: f64, courant: f64, depth: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&courant) {
        return Err(Error::InvalidParameter {
            name: "courant",
            message: format!("Courant number must be in [0.5, 1], got {courant}"),
        });
    }
    Ok(courant * fs_min_spacing / (GRAVITY * depth).sqrt())
}

/// Evolving free-surface unknowns.
#[derive(Debug, Clone)]
pub struct SimulationState {
    pub time: f64,
    pub eta: Vec<f64>,
    pub phi_fs: Vec<f64>,
}

impl SimulationState {
    pub fn rest(n: usize) -> Self {
        SimulationState { time: 0.0, eta: vec![0.0; n], phi_fs: vec![0.0; n] }
    }
}

/// Classical explicit 4-stage Runge-Kutta update of (eta, phi).
pub fn erk4_step<E>(state: &mut SimulationState, dt: f64, mut rates: E) -> Result<()>
where
    E: FnMut(f64, &[f64], &[f64]) -> Result<(Vec<f64>, Vec<f64>)>,
{
    let t = state.time;
    let n = state.eta.len();
    let lin =
        |a: &[f64], c: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + c * y).collect() };
    let (k1e, k1p) = rates(t, &state.eta, &state.phi_fs)?;
    let (k2e, k2p) = rates(
        t + dt / 2.0,
        &lin(&state.eta, dt / 2.0, &k1e),
        &lin(&state.phi_fs, dt / 2.0, &k1p),
    )?;
    let (k3e, k3p) = rates(
        t + dt / 2.0,
        &lin(&state.eta, dt / 2.0, &k2e),
        &lin(&state.phi_fs, dt / 2.0, &k2p),
    )?;
    let (k4e, k4p) = rates(
        t + dt,
        &lin(&state.eta, dt, &k3e),
        &lin(&state.phi_fs, dt, &k3p),
    )?;
    for i in 0..n {
        state.eta[i] += dt / 6.0 * (k1e[i] + 2.0 * k2e[i] + 2.0 * k3e[i] + k4e[i]);
        state.phi_fs[i] += dt / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
    }
    state.time = t + dt;
    Ok(())
}

/// Far-field absorption settings.
#[derive(Debug, Clone, Copy)]
pub struct AbsorptionConfig {
    /// Relaxation zone blending the surface fields toward zero.
    pub relaxation: bool,
    /// Sommerfeld radiation flux on the far-field boundary.
    pub sommerfeld: bool,
    /// Zone length override in meters (defaults to max(2 L_r, 2h), clamped
    /// to half the free-surface extent).
    pub zone_length: Option<f64>,
}

impl AbsorptionConfig {
    /// Both mechanisms active (zone + Sommerfeld).
    pub fn zones() -> Self {
        AbsorptionConfig { relaxation: true, sommerfeld: true, zone_length: None }
    }

    /// Reflective far field (rely on grid stretching only).
    pub fn grading_only() -> Self {
        AbsorptionConfig { relaxation: false, sommerfeld: false, zone_length: None }
    }
}

/// How the vertical free-surface velocity is recovered from the volume
/// potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceRecovery {
    /// Variationally consistent flux: w = M_fs^{-1} (A phi - b) restricted
    /// to the surface rows. Energy-conserving for every mesh and order.
    VariationalFlux,
    /// Element-local differentiation averaged at shared nodes. Matches the
    /// classical pointwise recovery; unstable for some orders on
    /// triangular meshes.
    ElementLocalAverage,
}

struct SommerfeldPlan {
    /// One entry per (far-field face, quadrature point): the element that
    /// contains the upstream sample point, the x-derivative row over its
    /// nodes, and the face normal x-component.
    samples: Vec<(usize, Vec<f64>, f64)>,
    /// Matching (face index, quad index) pairs, sorted, for flux assembly.
    keys: Vec<(usize, usize)>,
}

/// One radiation problem: assembled operators plus the stepping state.
/// Owns its data exclusively; independent problems run in parallel freely.
pub struct RadiationProblem {
    pub dofs: DofMap,
    pub factors: GeometricFactors,
    pub re: ReferenceElement,
    pub impulse: PseudoImpulse,
    pub dt: f64,
    pub t_end: f64,
    pub n_steps: usize,
    system: DiscreteLaplacian,
    /// Selected trace-derivative recovery.
    pub trace_recovery: TraceRecovery,
    /// Per-FS-node rows of the element-local recovery operator.
    recovery: Vec<Vec<(usize, f64)>>,
    /// Cholesky factor of the free-surface trace mass (variational path).
    fs_mass_chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    /// 1 - c(x) relaxation factor per FS node.
    relax: Option<Vec<f64>>,
    sommerfeld: Option<SommerfeldPlan>,
    /// Far-field flux held over the current step, then its replacement
    /// sampled from the first-stage solve.
    far_flux: Vec<f64>,
    pending_far_flux: Vec<f64>,
    /// Dirichlet value vector layout: position of each FS trace entry.
    dirichlet_values: Vec<f64>,
    dirichlet_fs_slots: Vec<usize>,
}

impl RadiationProblem {
    pub fn new(
        mesh: &Mesh,
        re: &ReferenceElement,
        impulse: PseudoImpulse,
        courant: f64,
        absorption: AbsorptionConfig,
    ) -> Result<Self> {
        let factors = geometric_factors(mesh, re)?;
        let dofs = DofMap::build(mesh, re);
        if dofs.fs_trace.is_empty() {
            return Err(Error::MeshInvalid("mesh has no free-surface faces".into()));
        }
        let mut system = assemble_stiffness(mesh, &factors, re, &dofs)?;

        // Dirichlet structure: free surface, plus the symmetry plane for
        // anti-symmetric modes.
        let mut dnodes: Vec<usize> = dofs.fs_trace.clone();
        if impulse.mode.antisymmetric() {
            if let Some(sym) = dofs.tag_nodes.get(&BoundaryTag::Symmetry) {
                dnodes.extend(sym.iter().copied());
            }
        }
        dnodes.sort_unstable();
        dnodes.dedup();
        system.impose_dirichlet(&dnodes, &vec![0.0; dnodes.len()])?;
        // Slot of each FS trace node in the ascending constrained list.
        let dirichlet_fs_slots: Vec<usize> = dofs
            .fs_trace
            .iter()
            .map(|g| dnodes.binary_search(g).expect("fs node constrained"))
            .collect();

        let spacings = dofs.fs_spacings();
        let min_spacing = spacings.iter().copied().fold(f64::INFINITY, f64::min);
        let dt = cfl_timestep(min_spacing, courant, mesh.depth)?;
        let t_end = 3.0 * impulse.peak_time;
        let n_steps = (t_end / dt).ceil().max(1.0) as usize;

        // Vertical-velocity recovery: element-local d/dz averaged over the
        // elements sharing each FS node.
        let fs_pos: HashMap<usize, usize> = dofs
            .fs_trace
            .iter()
            .enumerate()
            .map(|(k, &g)| (g, k))
            .collect();
        // Only elements that own a free-surface face contribute to the
        // trace derivative; elements merely touching a surface vertex from
        // below would break the local symmetry of the recovery.
        let mut fs_elements: Vec<usize> = mesh
            .boundary_faces
            .iter()
            .filter(|bf| bf.tag == BoundaryTag::FreeSurface)
            .map(|bf| bf.element)
            .collect();
        fs_elements.sort_unstable();
        fs_elements.dedup();
        let mut owners: Vec<Vec<(usize, usize)>> = vec![Vec::new(); dofs.fs_trace.len()];
        for &e in &fs_elements {
            for (ln, &g) in dofs.elem_to_global[e].iter().enumerate() {
                if let Some(&k) = fs_pos.get(&g) {
                    owners[k].push((e, ln));
                }
            }
        }
        let mut recovery = Vec::with_capacity(dofs.fs_trace.len());
        for own in &owners {
            let w = 1.0 / own.len() as f64;
            let mut row: HashMap<usize, f64> = HashMap::new();
            for &(e, ln) in own {
                let eg = &factors.elements[e];
                let (rz, sz) = (eg.nodal.dr_dz[ln], eg.nodal.ds_dz[ln]);
                for j in 0..re.node_count {
                    let v = rz * re.diff_r[(ln, j)] + sz * re.diff_s[(ln, j)];
                    if v != 0.0 {
                        *row.entry(dofs.elem_to_global[e][j]).or_insert(0.0) += w * v;
                    }
                }
            }
            let mut row: Vec<(usize, f64)> = row.into_iter().collect();
            row.sort_unstable_by_key(|&(g, _)| g);
            recovery.push(row);
        }

        // Relaxation ramp per FS node: cubic toward each far-field wall.
        // The per-step blend factor is 1 - c_eff with
        // c_eff = 1 - exp(-sigma0 xi^3 dt): the damping rate (not the
        // per-step factor) carries the spatial ramp, so the zone stays an
        // adiabatic absorber at CFL-sized steps instead of a hard sponge.
        // Wall nodes are pinned to zero exactly (c_eff = 1 on Gamma_inf).
        let relax = if absorption.relaxation {
            let mut walls: Vec<f64> = Vec::new();
            for fg in factors.faces.iter().filter(|f| f.face.tag == BoundaryTag::FarField) {
                let x = fg.node_coords[0].0;
                if !walls.iter().any(|&w| (w - x).abs() < 1e-9 * (1.0 + mesh.length)) {
                    walls.push(x);
                }
            }
            let fs_min_x = dofs.coords[dofs.fs_trace[0]].0;
            let fs_max_x = dofs.coords[*dofs.fs_trace.last().unwrap()].0;
            let extent = fs_max_x - fs_min_x;
            let len = absorption
                .zone_length
                .unwrap_or((2.0 * impulse.min_wavelength).max(2.0 * mesh.depth))
                .min(0.5 * extent)
                .max(1e-12);
            let sigma0 = 10.0 * (GRAVITY * mesh.depth).sqrt() / len;
            let wall_tol = 1e-9 * (1.0 + mesh.length);
            let factors_vec: Vec<f64> = dofs
                .fs_trace
                .iter()
                .map(|&g| {
                    let x = dofs.coords[g].0;
                    let mut xi_max = 0.0f64;
                    let mut on_wall = false;
                    for &w in &walls {
                        let d = (x - w).abs();
                        on_wall |= d < wall_tol;
                        xi_max = xi_max.max((1.0 - d / len).clamp(0.0, 1.0));
                    }
                    if on_wall {
                        0.0
                    } else {
                        (-sigma0 * xi_max.powi(3) * dt).exp()
                    }
                })
                .collect();
            Some(factors_vec)
        } else {
            None
        };

        // Sommerfeld sampling plan: upstream point one advection distance
        // inside the domain for every far-field quadrature point.
        let sommerfeld = if absorption.sommerfeld {
            let dx = dt * (GRAVITY * mesh.depth).sqrt();
            let mut samples = Vec::new();
            let mut keys = Vec::new();
            for (fi, fg) in factors.faces.iter().enumerate() {
                if fg.face.tag != BoundaryTag::FarField {
                    continue;
                }
                for q in 0..fg.quad_w_sj.len() {
                    let n = fg.quad_normals[q];
                    let p = (
                        fg.quad_coords[q].0 - dx * n.0,
                        fg.quad_coords[q].1 - dx * n.1,
                    );
                    let (e, r, s) = locate_point(mesh, p).ok_or_else(|| {
                        Error::MeshGeneration(format!(
                            "Sommerfeld sample point {p:?} lies outside the mesh"
                        ))
                    })?;
                    if mesh.curved[e].is_some() {
                        return Err(Error::MeshInvalid(
                            "far-field sampling inside curved elements is not supported".into(),
                        ));
                    }
                    let eg = &factors.elements[e];
                    let (gr, gs) = re.grad_rows(r, s);
                    let (rx, sx) = (eg.nodal.dr_dx[0], eg.nodal.ds_dx[0]);
                    let row: Vec<f64> =
                        (0..re.node_count).map(|j| rx * gr[j] + sx * gs[j]).collect();
                    samples.push((e, row, n.0));
                    keys.push((fi, q));
                }
            }
            Some(SommerfeldPlan { samples, keys })
        } else {
            None
        };
        let n_far = sommerfeld.as_ref().map_or(0, |p| p.samples.len());
        let n_dirichlet = dnodes.len();

        let fs_mass = crate::assembly::fs_trace_mass(&factors, &dofs, re);
        let fs_mass_chol = fs_mass.cholesky().ok_or_else(|| {
            Error::MeshInvalid("free-surface trace mass is not positive definite".into())
        })?;

        Ok(RadiationProblem {
            dofs,
            factors,
            re: re.clone(),
            impulse,
            dt,
            t_end,
            n_steps,
            system,
            trace_recovery: TraceRecovery::VariationalFlux,
            recovery,
            fs_mass_chol,
            relax,
            sommerfeld,
            far_flux: vec![0.0; n_far],
            pending_far_flux: vec![0.0; n_far],
            dirichlet_values: vec![0.0; n_dirichlet],
            dirichlet_fs_slots,
        })
    }

    /// Select the trace-derivative recovery.
    pub fn with_recovery(mut self, recovery: TraceRecovery) -> Self {
        self.trace_recovery = recovery;
        self
    }

    /// Extend the simulated time span (still at least 3 t0).
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end.max(3.0 * self.impulse.peak_time);
        self.n_steps = (self.t_end / self.dt).ceil().max(1.0) as usize;
        self
    }

    fn fs_len(&self) -> usize {
        self.dofs.fs_trace.len()
    }

    /// Solve the Laplace problem for the given surface trace at time `t`;
    /// returns the volume potential.
    fn solve_potential(&mut self, t: f64, phi_fs: &[f64]) -> Result<Vec<f64>> {
        let xdot = self.impulse.velocity(t);
        let slot = self.impulse.mode.slot();
        self.system.reset_load();
        let factors = &self.factors;
        let dofs = &self.dofs;
        let re = &self.re;
        if xdot != 0.0 {
            self.system
                .add_neumann_flux(factors, dofs, re, BoundaryTag::Body, |fg, q| {
                    xdot * fg.quad_gen_normals[slot][q]
                });
        }
        if let Some(plan) = &self.sommerfeld {
            let flux = &self.far_flux;
            let keys = &plan.keys;
            self.system
                .add_neumann_flux_indexed(factors, dofs, re, BoundaryTag::FarField, |fi, _, q| {
                    match keys.binary_search(&(fi, q)) {
                        Ok(pos) => flux[pos],
                        Err(_) => 0.0,
                    }
                });
        }
        for (k, &slot) in self.dirichlet_fs_slots.iter().enumerate() {
            self.dirichlet_values[slot] = phi_fs[k];
        }
        self.system.set_dirichlet_values(&self.dirichlet_values);
        self.system.solve()
    }

    /// Semi-discrete rates (eta_dot, phi_dot) plus the volume potential.
    pub fn rates(
        &mut self,
        t: f64,
        eta: &[f64],
        phi_fs: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let phi = self.solve_potential(t, phi_fs)?;
        let deta = match self.trace_recovery {
            TraceRecovery::ElementLocalAverage => {
                let mut deta = Vec::with_capacity(self.fs_len());
                for row in &self.recovery {
                    let mut acc = 0.0;
                    for &(g, v) in row {
                        acc += v * phi[g];
                    }
                    deta.push(acc);
                }
                deta
            }
            TraceRecovery::VariationalFlux => {
                // Residual of the unconstrained weak operator against the
                // surface test functions: M_fs w = (A phi - b)|_fs.
                let aphi = crate::linsolve::matvec(&self.system.matrix, &phi);
                let mut rhs = nalgebra::DVector::zeros(self.fs_len());
                for (k, &g) in self.dofs.fs_trace.iter().enumerate() {
                    rhs[k] = aphi[g] - self.system.load[g];
                }
                let w = self.fs_mass_chol.solve(&rhs);
                w.iter().copied().collect()
            }
        };
        let dphi: Vec<f64> = eta.iter().map(|&e| -GRAVITY * e).collect();
        Ok((deta, dphi, phi))
    }

    fn sample_line_velocity(&self, phi: &[f64]) -> Vec<f64> {
        let Some(plan) = &self.sommerfeld else { return Vec::new() };
        plan.samples
            .iter()
            .map(|(e, row, nx)| {
                let globals = &self.dofs.elem_to_global[*e];
                let u: f64 = row.iter().zip(globals).map(|(&w, &g)| w * phi[g]).sum();
                u * nx
            })
            .collect()
    }

    /// Advance one time step. Returns the body-trace potential at the step's
    /// start time (from the first-stage solve).
    pub fn step(&mut self, state: &mut SimulationState) -> Result<Vec<f64>> {
        let dt = self.dt;
        let t = state.time;
        let n = state.eta.len();
        let lin = |a: &[f64], c: f64, b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + c * y).collect()
        };

        let (k1e, k1p, phi1) = self.rates(t, &state.eta, &state.phi_fs)?;
        if self.sommerfeld.is_some() {
            self.pending_far_flux = self.sample_line_velocity(&phi1);
        }
        let body_phi: Vec<f64> = self.dofs.body_trace.iter().map(|&g| phi1[g]).collect();

        let (k2e, k2p, _) = self.rates(
            t + dt / 2.0,
            &lin(&state.eta, dt / 2.0, &k1e),
            &lin(&state.phi_fs, dt / 2.0, &k1p),
        )?;
        let (k3e, k3p, _) = self.rates(
            t + dt / 2.0,
            &lin(&state.eta, dt / 2.0, &k2e),
            &lin(&state.phi_fs, dt / 2.0, &k2p),
        )?;
        let (k4e, k4p, _) = self.rates(
            t + dt,
            &lin(&state.eta, dt, &k3e),
            &lin(&state.phi_fs, dt, &k3p),
        )?;
        for i in 0..n {
            state.eta[i] += dt / 6.0 * (k1e[i] + 2.0 * k2e[i] + 2.0 * k3e[i] + k4e[i]);
            state.phi_fs[i] += dt / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
        }
        state.time = t + dt;

        // Promote the sampled far-field velocity to the next step; relax
        // the surface fields toward zero inside the zone.
        if self.sommerfeld.is_some() {
            std::mem::swap(&mut self.far_flux, &mut self.pending_far_flux);
        }
        self.apply_relaxation_zone(state);
        Ok(body_phi)
    }

    /// Apply the relaxation ramp to a state (identity when disabled).
    pub fn apply_relaxation_zone(&self, state: &mut SimulationState) {
        if let Some(relax) = &self.relax {
            for i in 0..state.eta.len() {
                state.eta[i] *= relax[i];
                state.phi_fs[i] *= relax[i];
            }
        }
    }
}

/// Locate the element containing a point; returns (element, r, s). Affine
/// search only (sufficient away from the body).
fn locate_point(mesh: &Mesh, p: (f64, f64)) -> Option<(usize, f64, f64)> {
    let tol = 1e-9;
    for e in 0..mesh.n_elements() {
        let [a, b, c] = mesh.element_vertices(e);
        let det = (b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1);
        let lb = ((p.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (p.1 - a.1)) / det;
        let lc = ((b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1)) / det;
        let la = 1.0 - lb - lc;
        if la >= -tol && lb >= -tol && lc >= -tol {
            return Some((e, 2.0 * lb - 1.0, 2.0 * lc - 1.0));
        }
    }
    None
}

/// One monitored free-surface point.
#[derive(Debug, Clone)]
pub struct MonitorSeries {
    pub x_requested: f64,
    pub x_actual: f64,
    pub eta: Vec<f64>,
}

/// Full time history of one radiation run on the uniform grid t_i = i dt.
#[derive(Debug, Clone)]
pub struct RadiationRecord {
    pub dt: f64,
    pub mode: Mode,
    pub impulse: PseudoImpulse,
    pub t_end: f64,
    pub displacement: Vec<f64>,
    pub velocity: Vec<f64>,
    /// Body-trace potential snapshots, one row per time sample.
    pub body_phi: Vec<Vec<f64>>,
    /// Global indices of the body trace (ascending).
    pub body_trace: Vec<usize>,
    pub monitors: Vec<MonitorSeries>,
    pub warnings: Vec<String>,
    pub n_dof: usize,
}

impl RadiationRecord {
    pub fn n_samples(&self) -> usize {
        self.displacement.len()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_samples()).map(move |i| i as f64 * self.dt)
    }
}

/// Run configuration for a radiation simulation.
#[derive(Debug, Clone)]
pub struct RadiationRunConfig {
    pub courant: f64,
    pub absorption: AbsorptionConfig,
    /// Monitored free-surface x positions (nearest trace node is used).
    pub monitor_x: Vec<f64>,
    /// Minimum simulated time (raised to 3 t0 if smaller).
    pub t_end: Option<f64>,
}

impl Default for RadiationRunConfig {
    fn default() -> Self {
        RadiationRunConfig {
            courant: 0.8,
            absorption: AbsorptionConfig::zones(),
            monitor_x: Vec::new(),
            t_end: None,
        }
    }
}

/// Time-step the pseudo-impulsive radiation problem and record the series
/// needed for force and coefficient extraction.
pub fn run_radiation(
    mesh: &Mesh,
    re: &ReferenceElement,
    impulse: PseudoImpulse,
    cfg: &RadiationRunConfig,
) -> Result<RadiationRecord> {
    let mut problem = RadiationProblem::new(mesh, re, impulse, cfg.courant, cfg.absorption)?;
    if let Some(te) = cfg.t_end {
        problem = problem.with_t_end(te);
    }
    run_problem(&mut problem, cfg)
}

/// Step an already-built problem to completion.
pub fn run_problem(
    problem: &mut RadiationProblem,
    cfg: &RadiationRunConfig,
) -> Result<RadiationRecord> {
    let m = problem.fs_len();
    let mut state = SimulationState::rest(m);
    let impulse = problem.impulse;
    let guard = if impulse.amplitude.abs() > 0.0 {
        1e3 * impulse.amplitude.abs()
    } else {
        f64::INFINITY
    };

    let monitor_idx: Vec<(f64, usize)> = cfg
        .monitor_x
        .iter()
        .map(|&xr| {
            let k = problem
                .dofs
                .fs_trace
                .iter()
                .enumerate()
                .min_by(|(_, &a), (_, &b)| {
                    let (xa, xb) = (problem.dofs.coords[a].0, problem.dofs.coords[b].0);
                    (xa - xr).abs().total_cmp(&(xb - xr).abs())
                })
                .map(|(k, _)| k)
                .expect("fs trace nonempty");
            (xr, k)
        })
        .collect();

    let n_steps = problem.n_steps;
    let mut record = RadiationRecord {
        dt: problem.dt,
        mode: impulse.mode,
        impulse,
        t_end: problem.t_end,
        displacement: Vec::with_capacity(n_steps + 1),
        velocity: Vec::with_capacity(n_steps + 1),
        body_phi: Vec::with_capacity(n_steps + 1),
        body_trace: problem.dofs.body_trace.clone(),
        monitors: monitor_idx
            .iter()
            .map(|&(xr, k)| MonitorSeries {
                x_requested: xr,
                x_actual: problem.dofs.coords[problem.dofs.fs_trace[k]].0,
                eta: Vec::with_capacity(n_steps + 1),
            })
            .collect(),
        warnings: Vec::new(),
        n_dof: problem.dofs.n_dof,
    };

    for step in 0..n_steps {
        let t = state.time;
        record.displacement.push(impulse.displacement(t));
        record.velocity.push(impulse.velocity(t));
        for (mi, &(_, k)) in monitor_idx.iter().enumerate() {
            record.monitors[mi].eta.push(state.eta[k]);
        }
        let body_phi = problem.step(&mut state)?;
        record.body_phi.push(body_phi);

        let mag = state
            .eta
            .iter()
            .chain(&state.phi_fs)
            .fold(0.0f64, |m, &v| m.max(v.abs()));
        if !mag.is_finite() || mag > guard {
            return Err(Error::Diverged { step, magnitude: mag });
        }
    }
    // Final sample at t_end.
    let t = state.time;
    record.displacement.push(impulse.displacement(t));
    record.velocity.push(impulse.velocity(t));
    for (mi, &(_, k)) in monitor_idx.iter().enumerate() {
        record.monitors[mi].eta.push(state.eta[k]);
    }
    let (_, _, phi) = problem.rates(t, &state.eta, &state.phi_fs)?;
    record
        .body_phi
        .push(problem.dofs.body_trace.iter().map(|&g| phi[g]).collect());

    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::fs_trace_mass;
    use crate::mesh::generate_rectangle_basin;
    use approx::assert_relative_eq;

    #[test]
    fn impulse_design_closed_form() {
        // Hand-evaluated design for dx_max = 0.2 m, h = 3 m, alpha = 3,
        // r = 1e-4.
        let imp = design_pseudo_impulse(0.2, 3.0, Mode::Heave, 3.0, 1e-4, 1e-8).unwrap();
        assert_relative_eq!(imp.min_wavelength, 0.6, epsilon = 1e-14);
        assert_relative_eq!(imp.max_wavenumber, 10.471975511965978, epsilon = 1e-12);
        // Spec-quoted approximations.
        assert_relative_eq!(imp.max_wavenumber, 10.472, max_relative = 1e-4);
        assert_relative_eq!(imp.max_omega, 10.14, max_relative = 1e-3);
        assert_relative_eq!(imp.max_freq, 1.613, max_relative = 1e-3);
        assert_relative_eq!(imp.width, 0.3758, max_relative = 1e-3);
        // Closed-form width and peak time.
        let fr = imp.max_freq;
        assert_relative_eq!(
            imp.width,
            (-fr * fr / (2.0 * (1e-4f64).ln())).sqrt(),
            epsilon = 1e-15
        );
        assert_relative_eq!(imp.peak_time, 2.571, max_relative = 1e-3);
        // Start value equals the threshold exactly by construction.
        assert_relative_eq!(imp.displacement(0.0), 1e-8, max_relative = 1e-10);
    }

    #[test]
    fn impulse_signals_and_spectrum() {
        let imp = design_pseudo_impulse(0.2, 3.0, Mode::Heave, 3.0, 1e-4, 1e-8).unwrap();
        assert_relative_eq!(imp.displacement(imp.peak_time), 1.0, epsilon = 1e-14);
        assert!(imp.velocity(imp.peak_time).abs() < 1e-14);
        let s = imp.width;
        assert_relative_eq!(
            imp.spectrum_magnitude(0.0),
            1.0 / (s * (2.0 * PI).sqrt()),
            epsilon = 1e-14
        );
        let ratio = imp.spectrum_magnitude(imp.max_freq) / imp.spectrum_magnitude(0.0);
        assert_relative_eq!(ratio, 1e-4, max_relative = 1e-10);
    }

    #[test]
    fn impulse_rejects_bad_parameters() {
        assert!(design_pseudo_impulse(0.2, 3.0, Mode::Heave, 0.0, 1e-4, 1e-8).is_err());
        assert!(design_pseudo_impulse(0.2, 3.0, Mode::Heave, 3.0, 2.0, 1e-8).is_err());
    }

    #[test]
    fn fixed_width_impulse_matches_dispersion() {
        let imp = impulse_from_width(1.0, 6.283, Mode::Heave, 1e-4, 1e-8).unwrap();
        assert_relative_eq!(imp.width, 1.0, epsilon = 1e-14);
        let w = dispersion_omega(imp.max_wavenumber, 6.283);
        assert_relative_eq!(w, imp.max_omega, max_relative = 1e-10);
    }

    #[test]
    fn cfl_examples() {
        let dt = cfl_timestep(0.1, 1.0, 6.283).unwrap();
        assert_relative_eq!(dt, 0.1 / (GRAVITY * 6.283).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(dt, 0.01274, max_relative = 1e-3);
        let half = cfl_timestep(0.1, 0.5, 6.283).unwrap();
        assert_relative_eq!(half, dt / 2.0, epsilon = 1e-16);
        let refined = cfl_timestep(0.05, 1.0, 6.283).unwrap();
        assert_relative_eq!(refined, dt / 2.0, epsilon = 1e-16);
        assert!(cfl_timestep(0.1, 0.3, 6.283).is_err());
    }

    #[test]
    fn erk4_scalar_order() {
        // y' = lambda y on a single-component state; one step against the
        // exact exponential shows the O(dt^5) local error.
        let lambda = -0.7;
        let err_of = |dt: f64| -> f64 {
            let mut state = SimulationState { time: 0.0, eta: vec![1.0], phi_fs: vec![0.0] };
            erk4_step(&mut state, dt, |_, eta, _| Ok((vec![lambda * eta[0]], vec![0.0])))
                .unwrap();
            (state.eta[0] - (lambda * dt).exp()).abs()
        };
        let e1 = err_of(0.2);
        let e2 = err_of(0.1);
        let order = (e1 / e2).log2();
        assert!((order - 5.0).abs() < 0.2, "local order {order}");
    }

    #[test]
    fn zero_rates_leave_state_unchanged() {
        let mut state =
            SimulationState { time: 1.0, eta: vec![0.3, -0.2], phi_fs: vec![1.0, 2.0] };
        let before = state.clone();
        erk4_step(&mut state, 0.05, |_, e, _| Ok((vec![0.0; e.len()], vec![0.0; e.len()])))
            .unwrap();
        assert_eq!(state.eta, before.eta);
        assert_eq!(state.phi_fs, before.phi_fs);
    }

    #[test]
    fn dtn_rates_match_separable_basin_solution() {
        // phi_fs = cos(k x) with k = n pi / L has the exact vertical
        // velocity k tanh(k h) cos(k x); the recovery must converge
        // spectrally in P.
        let (length, depth) = (10.0, 1.0);
        let k = 2.0 * PI / length; // n = 2
        let mut last = f64::INFINITY;
        for p in [2usize, 4, 6] {
            let mesh = generate_rectangle_basin(length, depth, 10, 2, true).unwrap();
            let re = ReferenceElement::new(p).unwrap();
            let imp = design_pseudo_impulse(1.0, depth, Mode::Heave, 3.0, 1e-4, 1e-8)
                .unwrap()
                .with_amplitude(0.0);
            let mut prob =
                RadiationProblem::new(&mesh, &re, imp, 0.8, AbsorptionConfig::grading_only())
                    .unwrap();
            let m = prob.dofs.fs_trace.len();
            let phi: Vec<f64> = (0..m)
                .map(|i| (k * prob.dofs.coords[prob.dofs.fs_trace[i]].0).cos())
                .collect();
            let eta = vec![0.0; m];
            let (deta, dphi, _) = prob.rates(0.0, &eta, &phi).unwrap();
            let mut err = 0.0f64;
            for i in 0..m {
                let x = prob.dofs.coords[prob.dofs.fs_trace[i]].0;
                let exact = k * (k * depth).tanh() * (k * x).cos();
                err = err.max((deta[i] - exact).abs());
            }
            assert!(err < last, "P={p}: {err} !< {last}");
            last = err;
            if p == 6 {
                assert!(err < 1e-6, "P=6 error {err}");
            }
            assert!(dphi.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn rest_state_is_preserved_exactly() {
        let mesh = generate_rectangle_basin(10.0, 1.0, 8, 2, true).unwrap();
        let re = ReferenceElement::new(3).unwrap();
        let imp = design_pseudo_impulse(1.25, 1.0, Mode::Heave, 3.0, 1e-4, 1e-8)
            .unwrap()
            .with_amplitude(0.0);
        let cfg = RadiationRunConfig {
            t_end: Some(1.0),
            absorption: AbsorptionConfig::grading_only(),
            monitor_x: vec![5.0],
            ..Default::default()
        };
        let rec = run_radiation(&mesh, &re, imp, &cfg).unwrap();
        for row in &rec.body_phi {
            assert!(row.iter().all(|&v| v == 0.0));
        }
        for m in &rec.monitors {
            assert!(m.eta.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn standing_wave_energy_drift_is_tiny() {
        // Closed basin, lowest standing mode, Cr = 0.5, P = 4: the total
        // discrete energy 0.5 int (g eta^2 + phi w) over the surface drifts
        // less than 1e-6 relative per period.
        let (length, depth) = (10.0, 1.0);
        let mesh = generate_rectangle_basin(length, depth, 10, 2, true).unwrap();
        let re = ReferenceElement::new(4).unwrap();
        let imp = design_pseudo_impulse(1.0, depth, Mode::Heave, 3.0, 1e-4, 1e-8)
            .unwrap()
            .with_amplitude(0.0);
        let mut prob =
            RadiationProblem::new(&mesh, &re, imp, 0.5, AbsorptionConfig::grading_only())
                .unwrap();
        let factors = geometric_factors(&mesh, &re).unwrap();
        let mass = fs_trace_mass(&factors, &prob.dofs, &re);

        let k = PI / length;
        let omega = dispersion_omega(k, depth);
        let m = prob.dofs.fs_trace.len();
        let amp = 0.01;
        let mut state = SimulationState::rest(m);
        for i in 0..m {
            let x = prob.dofs.coords[prob.dofs.fs_trace[i]].0;
            state.eta[i] = amp * (k * x).cos();
        }

        let energy = |prob: &mut RadiationProblem, st: &SimulationState| -> f64 {
            let (w, _, _) = prob.rates(st.time, &st.eta, &st.phi_fs).unwrap();
            let mut e = 0.0;
            for i in 0..m {
                for j in 0..m {
                    e += 0.5
                        * mass[(i, j)]
                        * (GRAVITY * st.eta[i] * st.eta[j] + st.phi_fs[i] * w[j]);
                }
            }
            e
        };
        let e0 = energy(&mut prob, &state);
        let period = 2.0 * PI / omega;
        let n = (period / prob.dt).ceil() as usize;
        for _ in 0..n {
            prob.step(&mut state).unwrap();
        }
        let e1 = energy(&mut prob, &state);
        let drift = ((e1 - e0) / e0).abs();
        assert!(drift < 1e-6, "energy drift per period {drift:e}");
    }

    #[test]
    fn relaxation_zone_ramps_and_endpoints() {
        let mesh = generate_rectangle_basin(10.0, 1.0, 16, 2, true).unwrap();
        let re = ReferenceElement::new(3).unwrap();
        let imp = design_pseudo_impulse(0.625, 1.0, Mode::Heave, 3.0, 1e-4, 1e-8)
            .unwrap()
            .with_amplitude(0.0);
        let prob = RadiationProblem::new(
            &mesh,
            &re,
            imp,
            0.8,
            AbsorptionConfig { relaxation: true, sommerfeld: false, zone_length: Some(2.0) },
        )
        .unwrap();
        let m = prob.dofs.fs_trace.len();
        let mut state = SimulationState { time: 0.0, eta: vec![1.0; m], phi_fs: vec![1.0; m] };
        prob.apply_relaxation_zone(&mut state);
        // Wall nodes blend fully to zero (both basin walls are far-field);
        // mid-domain nodes are untouched; the ramp is monotone.
        assert!(state.eta[0].abs() < 1e-12);
        assert!(state.eta[m - 1].abs() < 1e-12);
        let mid = m / 2;
        assert_eq!(state.eta[mid], 1.0);
        for i in mid..m - 1 {
            assert!(state.eta[i + 1] <= state.eta[i] + 1e-15);
        }
    }
}
