//! Driven Tavis-Cummings Hamiltonian on spin (x) boson, and zero-state tracking.
//!
//! Composite index = spin_index * fock_dim + fock_index (boson fastest).

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::fock::{build_boson_operators, BosonOperators};
use crate::linalg::{self, c, kron, Csr, C64};
use crate::spin::{build_spin_operators, SpinOperators};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Below,
    Critical,
    Above,
}

impl Regime {
    pub fn of(x: f64) -> Regime {
        if x < 1.0 {
            Regime::Below
        } else if x == 1.0 {
            Regime::Critical
        } else {
            Regime::Above
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_ions: usize,
    /// Omega
    pub coupling: f64,
    /// E
    pub drive: f64,
    /// E / Omega
    pub chi: f64,
    /// 2E / (N Omega)
    pub x: f64,
}

impl ModelParams {
    pub fn new(n_ions: usize, coupling: f64, drive: f64) -> Result<Self> {
        Self::check(n_ions, coupling)?;
        if !(drive >= 0.0) || !drive.is_finite() {
            return Err(Error::InvalidArgument(format!("drive E must be finite and >= 0, got {drive}")));
        }
        let chi = drive / coupling;
        Ok(ModelParams { n_ions, coupling, drive, chi, x: 2.0 * chi / n_ions as f64 })
    }

    /// Parameters at scaled drive x (E = x N Omega / 2).
    pub fn from_x(n_ions: usize, coupling: f64, x: f64) -> Result<Self> {
        Self::check(n_ions, coupling)?;
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::InvalidArgument(format!("scaled drive x must be finite and >= 0, got {x}")));
        }
        let chi = x * n_ions as f64 / 2.0;
        Ok(ModelParams { n_ions, coupling, drive: chi * coupling, chi, x })
    }

    fn check(n_ions: usize, coupling: f64) -> Result<()> {
        if n_ions == 0 {
            return Err(Error::InvalidArgument("n_ions must be >= 1".into()));
        }
        if !(coupling > 0.0) || !coupling.is_finite() {
            return Err(Error::InvalidArgument(format!("coupling Omega must be finite and > 0, got {coupling}")));
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductSpace {
    pub spin_dim: usize,
    pub fock_dim: usize,
    pub total_dim: usize,
}

impl ProductSpace {
    pub fn new(n_ions: usize, n_max: usize) -> Self {
        let (spin_dim, fock_dim) = (n_ions + 1, n_max + 1);
        ProductSpace { spin_dim, fock_dim, total_dim: spin_dim * fock_dim }
    }

    pub fn index(&self, spin: usize, fock: usize) -> usize {
        spin * self.fock_dim + fock
    }

    pub fn embed_spin(&self, op: &ArrayView2<C64>) -> Array2<C64> {
        kron(op, &linalg::identity(self.fock_dim).view())
    }

    pub fn embed_boson(&self, op: &ArrayView2<C64>) -> Array2<C64> {
        kron(&linalg::identity(self.spin_dim).view(), op)
    }

    pub fn product_state(&self, spin: &ArrayView1<C64>, boson: &ArrayView1<C64>) -> Result<Array1<C64>> {
        check_dim(self.spin_dim, spin.len())?;
        check_dim(self.fock_dim, boson.len())?;
        let mut out = Array1::zeros(self.total_dim);
        for (i, a) in spin.iter().enumerate() {
            out.slice_mut(s![i * self.fock_dim..(i + 1) * self.fock_dim]).zip_mut_with(boson, |o, b| *o = a * b);
        }
        Ok(out)
    }

    /// |j,-j> (x) |0>
    pub fn ground_state(&self) -> Array1<C64> {
        let mut v = Array1::zeros(self.total_dim);
        v[0] = c(1.0);
        v
    }

    /// State vector as a spin_dim x fock_dim matrix.
    pub fn as_matrix<'a>(&self, psi: &'a ArrayView1<C64>) -> Result<ArrayView2<'a, C64>> {
        check_dim(self.total_dim, psi.len())?;
        Ok(psi.view().into_shape_with_order((self.spin_dim, self.fock_dim)).expect("contiguous state"))
    }

    /// Boson reduced density matrix of a pure state.
    pub fn boson_reduced(&self, psi: &ArrayView1<C64>) -> Result<Array2<C64>> {
        let m = self.as_matrix(psi)?;
        // rho_b[f, g] = sum_s psi[s, f] conj(psi[s, g])
        Ok(m.t().dot(&m.mapv(|z| z.conj())))
    }

    /// Spin reduced density matrix of a pure state.
    pub fn spin_reduced(&self, psi: &ArrayView1<C64>) -> Result<Array2<C64>> {
        let m = self.as_matrix(psi)?;
        Ok(m.dot(&m.t().mapv(|z| z.conj())))
    }

    /// Norm weight of `psi` on the top `band` Fock levels.
    pub fn top_band_weight(&self, psi: &ArrayView1<C64>, band: usize) -> Result<f64> {
        let m = self.as_matrix(psi)?;
        let lo = self.fock_dim.saturating_sub(band);
        Ok(m.slice(s![.., lo..]).iter().map(|z| z.norm_sqr()).sum())
    }

    /// Default width of the Fock band used to detect truncation leakage.
    pub fn default_band(&self) -> usize {
        (self.fock_dim / 10).max(2)
    }
}

/// Spin and boson operators sized for one (N, n_max) pair.
#[derive(Debug, Clone)]
pub struct Operators {
    pub space: ProductSpace,
    pub spin: SpinOperators,
    pub boson: BosonOperators,
}

impl Operators {
    pub fn new(n_ions: usize, n_max: usize) -> Result<Self> {
        Ok(Operators {
            space: ProductSpace::new(n_ions, n_max),
            spin: build_spin_operators(n_ions)?,
            boson: build_boson_operators(n_max)?,
        })
    }
}

/// The two drive-independent pieces: H = Omega * coupling_term + E * drive_term.
#[derive(Debug, Clone)]
pub struct HamiltonianParts {
    /// a J+ + a^dag J-
    pub coupling_term: Array2<C64>,
    /// a + a^dag
    pub drive_term: Array2<C64>,
}

impl HamiltonianParts {
    pub fn new(ops: &Operators) -> Self {
        let (sp, b) = (&ops.spin, &ops.boson);
        let coupling_term = kron(&sp.jp.view(), &b.a.view()) + kron(&sp.jm.view(), &b.adag.view());
        let drive_term = ops.space.embed_boson(&(&b.a + &b.adag).view());
        HamiltonianParts { coupling_term, drive_term }
    }

    pub fn assemble(&self, coupling: f64, drive: f64) -> Array2<C64> {
        let mut h = self.coupling_term.mapv(|z| z * coupling);
        h.scaled_add(c(drive), &self.drive_term);
        h
    }

    pub fn sparse(&self) -> (Csr, Csr) {
        (Csr::from_dense(&self.coupling_term.view()), Csr::from_dense(&self.drive_term.view()))
    }
}

fn ops_for(params: &ModelParams, n_max: usize) -> Result<Operators> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be >= 1".into()));
    }
    Operators::new(params.n_ions, n_max)
}

/// H = Omega (a J+ + a^dag J-) + E (a + a^dag), hbar = 1.
pub fn build_hamiltonian(params: &ModelParams, n_max: usize) -> Result<Array2<C64>> {
    let ops = ops_for(params, n_max)?;
    Ok(HamiltonianParts::new(&ops).assemble(params.coupling, params.drive))
}

/// H = X Jx - Y Jy + chi X, which is the physical H divided by sqrt(2) Omega.
pub fn build_scaled_hamiltonian(params: &ModelParams, n_max: usize) -> Result<Array2<C64>> {
    let ops = ops_for(params, n_max)?;
    Ok(scaled_hamiltonian_from(&ops, params.chi))
}

pub fn scaled_hamiltonian_from(ops: &Operators, chi: f64) -> Array2<C64> {
    let (sp, b) = (&ops.spin, &ops.boson);
    let mut h = kron(&sp.jx.view(), &b.x.view()) - kron(&sp.jy.view(), &b.y.view());
    h.scaled_add(c(chi), &ops.space.embed_boson(&b.x.view()));
    h
}

/// Brute-force check of the collective Hamiltonian against the per-ion
/// sideband Hamiltonian sum_i Omega (a s+_i + a^dag s-_i) + E (a + a^dag),
/// restricted to the symmetric subspace. Returns max |V^dag H_full V - H|.
pub fn symmetric_subspace_oracle(params: &ModelParams, n_max: usize) -> Result<f64> {
    let n = params.n_ions;
    if n > 3 {
        return Err(Error::OracleRefused(format!("per-ion oracle is limited to N <= 3, got {n}")));
    }
    if n_max > 20 {
        return Err(Error::OracleRefused(format!("per-ion oracle is limited to n_max <= 20, got {n_max}")));
    }
    let ops = ops_for(params, n_max)?;
    let b = &ops.boson;
    let full = 1usize << n;
    // single-ion basis: bit 0 = ground, bit 1 = excited
    let mut s_plus = Array2::<C64>::zeros((full, full));
    for state in 0..full {
        for ion in 0..n {
            if state & (1 << ion) == 0 {
                s_plus[[state | (1 << ion), state]] += c(1.0);
            }
        }
    }
    let s_minus = s_plus.t().to_owned();
    let id_f = linalg::identity(full);
    let mut h_full = kron(&s_plus.view(), &b.a.view()).mapv(|z| z * params.coupling)
        + kron(&s_minus.view(), &b.adag.view()).mapv(|z| z * params.coupling);
    h_full.scaled_add(c(params.drive), &kron(&id_f.view(), &(&b.a + &b.adag).view()));

    // Dicke state with k excitations = uniform superposition over popcount k
    let mut v_spin = Array2::<C64>::zeros((full, n + 1));
    for k in 0..=n {
        let members: Vec<usize> = (0..full).filter(|s| s.count_ones() as usize == k).collect();
        let amp = 1.0 / (members.len() as f64).sqrt();
        for s in members {
            v_spin[[s, k]] = c(amp);
        }
    }
    let v = kron(&v_spin.view(), &linalg::identity(b.dim()).view());
    let projected = linalg::dagger(&v.view()).dot(&h_full).dot(&v);
    let h = HamiltonianParts::new(&ops).assemble(params.coupling, params.drive);
    Ok(linalg::max_abs_diff(&projected.view(), &h.view()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackConfig {
    /// Largest allowed x increment between consecutive sweep points.
    pub max_step: f64,
    /// Continuation fails if the previous state's projection falls below this.
    pub min_overlap: f64,
    /// Eigenvalues closer than this times ||H||_inf form one cluster.
    pub degeneracy_tol: f64,
    /// Number of top Fock levels watched for truncation leakage (None: max(2, fock_dim/10)).
    pub leak_band: Option<usize>,
    /// Weight allowed in the watched band; the default matches
    /// `fock::SQUEEZE_TAIL_TOL`.
    pub leak_tol: f64,
}

impl Default for TrackConfig {
    fn default() -> Self {
        TrackConfig {
            max_step: 0.02,
            min_overlap: 0.5,
            degeneracy_tol: 1e-9,
            leak_band: None,
            leak_tol: crate::fock::SQUEEZE_TAIL_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrackedState {
    pub params: ModelParams,
    pub state: Array1<C64>,
    /// Rayleigh quotient <psi|H|psi> of the physical Hamiltonian.
    pub eigenvalue: f64,
    /// Norm of the previous state's projection onto the selected eigenspace.
    pub overlap: f64,
    /// Size of the degenerate cluster that contained the best match.
    pub cluster_dim: usize,
    /// Cluster directions kept after discarding those that reach the cutoff.
    pub retained_dim: usize,
    /// Weight in the top Fock band.
    pub leak: f64,
    pub truncation_warning: bool,
}

/// Follows the zero-energy eigenstate through a sequence of drives.
///
/// The zero eigenvalue is degenerate (the Hamiltonian anticommutes with
/// boson parity), so the best-overlap eigenvector is ambiguous. Inside a
/// degenerate cluster the previous state is projected onto the part of the
/// cluster that stays away from the Fock cutoff; eigenvectors piling weight
/// at n_max are truncation artefacts, not physical zero modes.
#[derive(Debug, Clone)]
pub struct ZeroStateTracker {
    ops: Operators,
    parts: HamiltonianParts,
    cfg: TrackConfig,
    state: Array1<f64>,
    last: Option<ModelParams>,
    last_eigenvalue: f64,
}

impl ZeroStateTracker {
    pub fn new(n_ions: usize, n_max: usize, cfg: TrackConfig) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidArgument("n_max must be >= 1".into()));
        }
        if !(cfg.max_step > 0.0) || !(cfg.min_overlap > 0.0 && cfg.min_overlap <= 1.0) {
            return Err(Error::InvalidArgument("track config needs max_step > 0 and 0 < min_overlap <= 1".into()));
        }
        let ops = Operators::new(n_ions, n_max)?;
        let parts = HamiltonianParts::new(&ops);
        let mut state = Array1::zeros(ops.space.total_dim);
        state[0] = 1.0;
        Ok(ZeroStateTracker { ops, parts, cfg, state, last: None, last_eigenvalue: 0.0 })
    }

    pub fn operators(&self) -> &Operators {
        &self.ops
    }

    pub fn config(&self) -> &TrackConfig {
        &self.cfg
    }

    pub fn last_params(&self) -> Option<&ModelParams> {
        self.last.as_ref()
    }

    fn band(&self) -> usize {
        self.cfg.leak_band.unwrap_or_else(|| self.ops.space.default_band()).min(self.ops.space.fock_dim)
    }

    fn leak_of(&self, v: &Array1<f64>) -> f64 {
        let sp = &self.ops.space;
        let lo = sp.fock_dim - self.band();
        (0..sp.spin_dim)
            .flat_map(|s| (lo..sp.fock_dim).map(move |f| (s, f)))
            .map(|(s, f)| v[sp.index(s, f)].powi(2))
            .sum()
    }

    fn finish(
        &mut self,
        params: ModelParams,
        overlap: f64,
        cluster_dim: usize,
        retained_dim: usize,
        clean: bool,
    ) -> TrackedState {
        let h = self.parts.assemble(params.coupling, params.drive).mapv(|z| z.re);
        let eigenvalue = self.state.dot(&h.dot(&self.state));
        let leak = self.leak_of(&self.state);
        let truncation_warning = !clean || leak > self.cfg.leak_tol;
        if truncation_warning {
            log::warn!(
                "x = {}: tracked state touches the Fock cutoff (band weight {leak:.2e}, clean subspace {})",
                params.x,
                if clean { "found" } else { "empty" }
            );
        }
        self.last = Some(params);
        self.last_eigenvalue = eigenvalue;
        TrackedState {
            params,
            state: self.state.mapv(c),
            eigenvalue,
            overlap,
            cluster_dim,
            retained_dim,
            leak,
            truncation_warning,
        }
    }

    /// Advance to `params`. The first call must be at E = 0.
    pub fn step(&mut self, params: ModelParams) -> Result<TrackedState> {
        if params.n_ions + 1 != self.ops.space.spin_dim {
            return Err(Error::DimensionMismatch { expected: self.ops.space.spin_dim - 1, got: params.n_ions });
        }
        let Some(prev) = self.last else {
            if params.drive != 0.0 {
                return Err(Error::InvalidArgument("zero-state tracking must start at E = 0".into()));
            }
            return Ok(self.finish(params, 1.0, 1, 1, true));
        };
        if (params.x - prev.x).abs() > self.cfg.max_step * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "sweep step {} -> {} exceeds max_step {}",
                prev.x, params.x, self.cfg.max_step
            )));
        }
        let h = self.parts.assemble(params.coupling, params.drive).mapv(|z| z.re);
        let scale = h.rows().into_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let tol = self.cfg.degeneracy_tol * scale.max(f64::MIN_POSITIVE);
        let eig = self.best_window(&h, scale)?;

        let overlaps = eig.vectors.t().dot(&self.state);
        let best = overlaps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(k, _)| k)
            .expect("non-empty window");
        let lam = eig.values[best];
        let members: Vec<usize> = (0..eig.values.len()).filter(|&k| (eig.values[k] - lam).abs() <= tol).collect();
        let mut basis = eig.vectors.select(Axis(1), &members);
        let cluster_dim = members.len();
        let mut clean = true;
        if cluster_dim > 1 {
            let (kept, ok) = self.clean_directions(&basis)?;
            clean = ok;
            if let Some(k) = kept {
                basis = k;
            }
        }
        let coeffs = basis.t().dot(&self.state);
        let projected = basis.dot(&coeffs);
        let overlap = projected.dot(&projected).sqrt();
        if !(overlap >= self.cfg.min_overlap) {
            return Err(Error::ContinuationFailure { x: params.x, overlap, min_overlap: self.cfg.min_overlap });
        }
        self.state = projected / overlap;
        let retained = basis.ncols();
        Ok(self.finish(params, overlap, cluster_dim, retained, clean))
    }

    /// Eigenpairs in a window around the previous eigenvalue, widened until
    /// the best overlap inside provably beats anything outside.
    fn best_window(&self, h: &Array2<f64>, scale: f64) -> Result<linalg::Eigh<f64>> {
        let n = h.nrows();
        let mut half = (0.5 * self.ops.spin.j.max(1.0)).min(scale.max(1e-300));
        let center = self.last_eigenvalue;
        loop {
            if half >= scale || n <= 64 {
                return linalg::eigh_real(&h.view());
            }
            let e = linalg::eigh_real_window(&h.view(), center - half, center + half)?;
            if e.values.len() * 4 > n {
                return linalg::eigh_real(&h.view());
            }
            if !e.values.is_empty() {
                let ov = e.vectors.t().dot(&self.state);
                let inside: f64 = ov.iter().map(|v| v * v).sum();
                let best = ov.iter().fold(0.0f64, |m, v| m.max(v * v));
                // anything outside has squared overlap <= 1 - inside
                if best > 1.0 - inside + 1e-12 {
                    return Ok(e);
                }
            }
            half *= 2.0;
        }
    }

    /// Splits the cluster into directions with negligible weight at the
    /// cutoff. Returns the clean basis (None if none qualify) and whether
    /// one was found.
    fn clean_directions(&self, basis: &Array2<f64>) -> Result<(Option<Array2<f64>>, bool)> {
        let sp = &self.ops.space;
        let lo = sp.fock_dim - self.band();
        let rows: Vec<usize> = (0..sp.spin_dim).flat_map(|s| (lo..sp.fock_dim).map(move |f| sp.index(s, f))).collect();
        let top = basis.select(Axis(0), &rows);
        let gram = top.t().dot(&top);
        let e = linalg::eigh_real(&gram.view())?;
        let keep: Vec<usize> = (0..e.values.len()).filter(|&k| e.values[k] <= self.cfg.leak_tol).collect();
        if keep.is_empty() {
            return Ok((None, false));
        }
        Ok((Some(basis.dot(&e.vectors.select(Axis(1), &keep))), true))
    }
}

/// Runs a tracker over a prepared sweep; the first point must have E = 0.
pub fn track_zero_state(sweep: &[ModelParams], n_max: usize, cfg: TrackConfig) -> Result<Vec<TrackedState>> {
    let first = sweep.first().ok_or_else(|| Error::InvalidArgument("empty sweep".into()))?;
    let mut tracker = ZeroStateTracker::new(first.n_ions, n_max, cfg)?;
    sweep.iter().map(|p| tracker.step(*p)).collect()
}

/// x points from 0 to `x_end` inclusive with spacing at most `max_step`,
/// passing through every value in `stops`.
pub fn continuation_grid(stops: &[f64], max_step: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut prev = 0.0;
    for &x in stops {
        if x <= prev {
            continue;
        }
        let n = ((x - prev) / max_step - 1e-9).ceil().max(1.0) as usize;
        for k in 1..n {
            out.push(prev + (x - prev) * k as f64 / n as f64);
        }
        out.push(x);
        prev = x;
    }
    out
}
