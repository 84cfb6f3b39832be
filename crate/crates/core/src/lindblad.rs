//! Density-matrix evolution with centre-of-mass heating:
//! dW/dt = -i[H, W] + (gamma/2)(D[a] + D[a^dag]) W.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, c, Csr, C64, I};
use crate::model::{HamiltonianParts, Operators, ProductSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOp {
    pub matrix: Array2<C64>,
}

impl DensityOp {
    pub fn new(matrix: Array2<C64>) -> Result<Self> {
        check_dim(matrix.nrows(), matrix.ncols())?;
        Ok(DensityOp { matrix })
    }

    /// |psi><psi|
    pub fn pure(psi: &ArrayView1<C64>) -> Self {
        let n = psi.len();
        let m = Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj());
        DensityOp { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.matrix.view())
    }

    /// tr(W^2), using Hermiticity: sum |W_ij|^2.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::hermiticity_error(&self.matrix.view())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        // symmetrize so the solver sees an exactly Hermitian input
        let h = (&self.matrix + &linalg::dagger(&self.matrix.view())).mapv(|z| z * 0.5);
        Ok(linalg::eigh(&h.view())?.values[0])
    }

    pub fn expectation(&self, op: &Csr) -> C64 {
        op.trace_product(&self.matrix.view())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatingParams {
    pub gamma: f64,
    pub coupling: f64,
    pub drive: f64,
    /// Add E (a + a^dag) to the Hamiltonian; off by default.
    pub include_drive: bool,
}

impl HeatingParams {
    pub fn new(gamma: f64, coupling: f64) -> Result<Self> {
        let hp = HeatingParams { gamma, coupling, drive: 0.0, include_drive: false };
        hp.validate()?;
        Ok(hp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("gamma must be finite and >= 0, got {}", self.gamma)));
        }
        if !self.coupling.is_finite() || !self.drive.is_finite() {
            return Err(Error::InvalidArgument("coupling and drive must be finite".into()));
        }
        Ok(())
    }

    /// 1e-3 / max(Omega, gamma, E)
    pub fn default_dt(&self) -> f64 {
        let drive = if self.include_drive { self.drive.abs() } else { 0.0 };
        let rate = self.coupling.abs().max(self.gamma).max(drive);
        if rate > 0.0 {
            1e-3 / rate
        } else {
            1e-3
        }
    }
}

/// D[A] rho = 2 A rho A^dag - A^dag A rho - rho A^dag A
pub fn dissipator(a: &ArrayView2<C64>, rho: &ArrayView2<C64>) -> Result<Array2<C64>> {
    check_dim(a.ncols(), rho.nrows())?;
    check_dim(rho.nrows(), rho.ncols())?;
    let ad = linalg::dagger(a);
    let ada = ad.dot(a);
    Ok(a.dot(rho).dot(&ad).mapv(|z| z * 2.0) - ada.dot(rho) - rho.dot(&ada))
}

/// Sparse operators for one master equation.
#[derive(Debug, Clone)]
pub struct MasterEquation {
    pub space: ProductSpace,
    pub params: HeatingParams,
    /// -i H - (gamma/2)(a^dag a + a a^dag)
    k_eff: Csr,
    k_eff_dag: Csr,
    a: Csr,
    adag: Csr,
    pub n_op: Csr,
    pub jz_op: Csr,
    pub h: Csr,
}

impl MasterEquation {
    pub fn new(n_ions: usize, n_max: usize, params: HeatingParams) -> Result<Self> {
        params.validate()?;
        let ops = Operators::new(n_ions, n_max)?;
        let parts = HamiltonianParts::new(&ops);
        let drive = if params.include_drive { params.drive } else { 0.0 };
        let h = parts.assemble(params.coupling, drive);
        let space = ops.space;
        let a = space.embed_boson(&ops.boson.a.view());
        let adag = space.embed_boson(&ops.boson.adag.view());
        let n_op = adag.dot(&a);
        let m_op = a.dot(&adag);
        let k_eff = h.mapv(|z| -I * z) - (&n_op + &m_op).mapv(|z| z * (0.5 * params.gamma));
        Ok(MasterEquation {
            space,
            params,
            k_eff_dag: Csr::from_dense(&linalg::dagger(&k_eff.view()).view()),
            k_eff: Csr::from_dense(&k_eff.view()),
            a: Csr::from_dense(&a.view()),
            adag: Csr::from_dense(&adag.view()),
            n_op: Csr::from_dense(&n_op.view()),
            jz_op: Csr::from_dense(&space.embed_spin(&ops.spin.jz.view()).view()),
            h: Csr::from_dense(&h.view()),
        })
    }

    pub fn a_op(&self) -> &Csr {
        &self.a
    }

    /// K W + W K^dag + gamma (a W a^dag + a^dag W a)
    pub fn rhs(&self, w: &ArrayView2<C64>) -> Array2<C64> {
        let mut out = self.k_eff.mul_dense(w);
        out += &self.k_eff_dag.dense_mul(w);
        if self.params.gamma != 0.0 {
            let g = c(self.params.gamma);
            let awad = self.a.mul_dense(&self.adag.dense_mul(w).view());
            let adwa = self.adag.mul_dense(&self.a.dense_mul(w).view());
            out.scaled_add(g, &awad);
            out.scaled_add(g, &adwa);
        }
        out
    }
}

pub fn master_rhs(w: &DensityOp, sys: &MasterEquation) -> Result<Array2<C64>> {
    check_dim(sys.space.total_dim, w.dim())?;
    Ok(sys.rhs(&w.matrix.view()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSample {
    pub t: f64,
    pub n_mean: f64,
    pub a_mean: C64,
    pub jz_mean: f64,
    pub trace: f64,
    pub purity: f64,
    pub min_eig: f64,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub samples: Vec<MomentSample>,
    pub final_state: DensityOp,
    /// max_t |tr W(t) - tr W(0)|
    pub trace_drift: f64,
    /// Most negative eigenvalue seen at the samples (0 if none).
    pub min_eig_excursion: f64,
    pub max_hermiticity_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub t_end: f64,
    /// None: `HeatingParams::default_dt`.
    pub dt: Option<f64>,
    /// Steps between recorded samples (>= 1).
    pub sample_every: usize,
    /// Compute the smallest eigenvalue at each sample (one dense
    /// diagonalization per sample).
    pub track_min_eig: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig { t_end: 1.0, dt: None, sample_every: 100, track_min_eig: true }
    }
}

pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;

/// Phonon number implied by the linear heating law, checked against the cutoff.
pub fn check_truncation(n0: f64, gamma: f64, t_end: f64, n_max: usize) -> Result<()> {
    let n_end = n0 + gamma * t_end;
    if n_end > n_max as f64 / 4.0 {
        return Err(Error::TruncationPrecondition {
            reason: format!("<n>(t_end) ~ n0 + gamma t = {n_end:.4} exceeds n_max/4 = {:.2}", n_max as f64 / 4.0),
            required_n_max: (4.0 * n_end).ceil() as usize,
        });
    }
    Ok(())
}

fn sample(sys: &MasterEquation, w: &DensityOp, t: f64, track_min_eig: bool) -> Result<MomentSample> {
    Ok(MomentSample {
        t,
        n_mean: w.expectation(&sys.n_op).re,
        a_mean: w.expectation(&sys.a),
        jz_mean: w.expectation(&sys.jz_op).re,
        trace: w.trace().re,
        purity: w.purity(),
        min_eig: if track_min_eig { w.min_eigenvalue()? } else { f64::NAN },
    })
}

/// Fixed-step RK4 of the master equation. The trace is never renormalized;
/// its drift is reported, and a drift above 1e-6 is an error.
pub fn evolve_master(w0: &DensityOp, sys: &MasterEquation, cfg: &EvolveConfig) -> Result<Evolution> {
    check_dim(sys.space.total_dim, w0.dim())?;
    let dt = cfg.dt.unwrap_or_else(|| sys.params.default_dt());
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
    }
    if !(cfg.t_end >= 0.0) || cfg.sample_every == 0 {
        return Err(Error::InvalidArgument("t_end must be >= 0 and sample_every >= 1".into()));
    }
    let n0 = w0.expectation(&sys.n_op).re;
    check_truncation(n0, sys.params.gamma, cfg.t_end, sys.space.fock_dim - 1)?;

    let n_steps = (cfg.t_end / dt).round() as usize;
    if ((n_steps as f64) * dt - cfg.t_end).abs() > 1e-9 * cfg.t_end.max(1.0) {
        return Err(Error::InvalidArgument(format!("t_end {} is not a multiple of dt {dt}", cfg.t_end)));
    }
    let tr0 = w0.trace().re;
    let mut w = w0.matrix.clone();
    let first = sample(sys, w0, 0.0, cfg.track_min_eig)?;
    let mut ev = Evolution {
        min_eig_excursion: first.min_eig.min(0.0),
        samples: vec![first],
        final_state: w0.clone(),
        trace_drift: 0.0,
        max_hermiticity_error: w0.hermiticity_error(),
    };
    let half = c(0.5 * dt);
    let full = c(dt);
    let sixth = c(dt / 6.0);
    for k in 1..=n_steps {
        let k1 = sys.rhs(&w.view());
        let k2 = sys.rhs(&(&w + &k1.mapv(|z| z * half)).view());
        let k3 = sys.rhs(&(&w + &k2.mapv(|z| z * half)).view());
        let k4 = sys.rhs(&(&w + &k3.mapv(|z| z * full)).view());
        let incr = k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4;
        w.scaled_add(sixth, &incr);

        let tr = linalg::trace(&w.view()).re;
        ev.trace_drift = ev.trace_drift.max((tr - tr0).abs());
        if ev.trace_drift > TRACE_DRIFT_LIMIT {
            return Err(Error::Accuracy(format!(
                "trace drift {:.3e} at t = {} exceeds {TRACE_DRIFT_LIMIT:e}; reduce dt (now {dt})",
                ev.trace_drift,
                k as f64 * dt
            )));
        }
        if k % cfg.sample_every == 0 || k == n_steps {
            let d = DensityOp { matrix: w.clone() };
            let s = sample(sys, &d, k as f64 * dt, cfg.track_min_eig)?;
            if cfg.track_min_eig {
                ev.min_eig_excursion = ev.min_eig_excursion.min(s.min_eig);
            }
            ev.max_hermiticity_error = ev.max_hermiticity_error.max(d.hermiticity_error());
            ev.samples.push(s);
        }
    }
    ev.final_state = DensityOp { matrix: w };
    Ok(ev)
}
