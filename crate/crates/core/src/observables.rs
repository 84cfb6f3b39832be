//! Expectation values, quadrature squeezing, phase-transition scans and
//! adiabatic ramps.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::ansatz::{analytic_scaled_moments, build_ansatz_state, solve_ansatz};
use crate::error::{check_dim, Error, Result};
use crate::fock::BosonOperators;
use crate::linalg::{self, c, Csr, C64, I};
use crate::model::{
    continuation_grid, HamiltonianParts, ModelParams, Operators, ProductSpace, Regime, TrackConfig, ZeroStateTracker,
};

/// <psi|op|psi>
pub fn expectation(op: &ArrayView2<C64>, psi: &ArrayView1<C64>) -> Result<C64> {
    check_dim(op.ncols(), psi.len())?;
    check_dim(op.nrows(), psi.len())?;
    Ok(linalg::vdot(psi, &op.dot(psi).view()))
}

/// tr(op W)
pub fn expectation_density(op: &ArrayView2<C64>, w: &ArrayView2<C64>) -> Result<C64> {
    check_dim(op.ncols(), w.nrows())?;
    check_dim(op.nrows(), w.ncols())?;
    Ok((0..op.nrows()).map(|i| op.row(i).dot(&w.column(i))).sum())
}

/// First and second moments of the oscillator quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadratures {
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    /// Symmetrized covariance <(XY + YX)/2> - <X><Y>.
    pub cov_xy: f64,
    pub mean_a: C64,
}

impl Quadratures {
    /// Moments of a boson density matrix.
    pub fn from_density(rho: &ArrayView2<C64>, b: &BosonOperators) -> Result<Self> {
        let e = |op: &Array2<C64>| expectation_density(&op.view(), rho);
        let mx = e(&b.x)?.re;
        let my = e(&b.y)?.re;
        let xx = e(&b.x.dot(&b.x))?.re;
        let yy = e(&b.y.dot(&b.y))?.re;
        let xy = e(&(b.x.dot(&b.y) + b.y.dot(&b.x)))?.re * 0.5;
        Ok(Quadratures {
            mean_x: mx,
            mean_y: my,
            var_x: xx - mx * mx,
            var_y: yy - my * my,
            cov_xy: xy - mx * my,
            mean_a: e(&b.a)?,
        })
    }

    /// Boson moments of a pure product-space state.
    pub fn from_state(psi: &ArrayView1<C64>, space: &ProductSpace, b: &BosonOperators) -> Result<Self> {
        let rho = space.boson_reduced(psi)?;
        Self::from_density(&rho.view(), b)
    }

    /// Var[X cos phi + Y sin phi]
    pub fn variance(&self, phi: f64) -> f64 {
        let (s, c) = phi.sin_cos();
        c * c * self.var_x + s * s * self.var_y + 2.0 * s * c * self.cov_xy
    }

    /// (phi, variance) at the minimum over phi, by golden-section search.
    pub fn min_variance(&self) -> (f64, f64) {
        // Var(phi) is a sinusoid of period pi; a coarse grid brackets the
        // minimum inside a unimodal window.
        let n = 16;
        let step = std::f64::consts::PI / n as f64;
        let k =
            (0..n).min_by(|&a, &b| self.variance(a as f64 * step).total_cmp(&self.variance(b as f64 * step))).unwrap();
        let phi = golden_section(|p| self.variance(p), (k as f64 - 1.0) * step, (k as f64 + 1.0) * step, 1e-10);
        (phi, self.variance(phi))
    }
}

/// Minimizer of a unimodal function on [a, b] to within `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while (b - a).abs() > tol {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Var[X cos phi + Y sin phi] of a pure product-space state.
pub fn quadrature_variance(psi: &ArrayView1<C64>, space: &ProductSpace, b: &BosonOperators, phi: f64) -> Result<f64> {
    Ok(Quadratures::from_state(psi, space, b)?.variance(phi))
}

/// <J>/(N/2) of a pure product-space state.
pub fn scaled_spin_moments(psi: &ArrayView1<C64>, ops: &Operators) -> Result<(f64, f64, f64)> {
    let rho = ops.space.spin_reduced(psi)?;
    let half = ops.spin.j;
    let e = |op: &Array2<C64>| -> Result<f64> { Ok(expectation_density(&op.view(), &rho.view())?.re / half) };
    Ok((e(&ops.spin.jx)?, e(&ops.spin.jy)?, e(&ops.spin.jz)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub x: f64,
    pub jx_num: Option<f64>,
    pub jy_num: Option<f64>,
    pub jz_num: Option<f64>,
    pub jx_an: f64,
    pub jy_an: f64,
    pub jz_an: f64,
    pub var_min: Option<f64>,
    /// None at and above threshold.
    pub r_ansatz: Option<f64>,
    /// ||H_scaled psi_ansatz||, below threshold only.
    pub residual: Option<f64>,
    pub eigenvalue: Option<f64>,
    pub overlap: Option<f64>,
    /// |<a>| of the tracked state.
    pub mean_a_abs: Option<f64>,
    pub truncation_warning: bool,
}

impl ScanRow {
    /// jx^2 + jy^2 + jz^2 <= 1 + 4/N
    pub fn casimir_ok(&self, n_ions: usize) -> bool {
        match (self.jx_num, self.jy_num, self.jz_num) {
            (Some(a), Some(b), Some(c)) => a * a + b * b + c * c <= 1.0 + 4.0 / n_ions as f64,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub n_ions: usize,
    pub omega: f64,
    /// Ascending, non-negative.
    pub x_grid: Vec<f64>,
    pub n_max: usize,
    pub track: TrackConfig,
}

#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub rows: Vec<ScanRow>,
    /// Continuation failure below threshold; rows stop just before it.
    pub failure: Option<Error>,
    /// First grid x at or above threshold whose numeric fields are unavailable.
    pub numeric_unavailable_from: Option<f64>,
}

/// Tracks the zero state along the grid and tabulates numeric against
/// analytic moments. Below threshold a continuation failure ends the scan;
/// at and above threshold numeric fields are left empty from the first
/// point where tracking fails or reaches the Fock cutoff.
pub fn scan_phase_transition(cfg: &ScanConfig) -> Result<ScanOutcome> {
    if cfg.x_grid.is_empty() {
        return Err(Error::InvalidArgument("empty x grid".into()));
    }
    if cfg.x_grid.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) || cfg.x_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("x grid must be finite, non-negative and strictly ascending".into()));
    }
    let mut tracker = ZeroStateTracker::new(cfg.n_ions, cfg.n_max, cfg.track)?;
    let ops = tracker.operators().clone();
    let parts = HamiltonianParts::new(&ops);
    let (c_sp, d_sp) = parts.sparse();

    let path = continuation_grid(&cfg.x_grid, cfg.track.max_step);
    let mut out = ScanOutcome { rows: Vec::new(), failure: None, numeric_unavailable_from: None };
    let mut pi = 0usize;
    let mut numeric_ok = true;
    for &x in &cfg.x_grid {
        let an = analytic_scaled_moments(x)?;
        let params = ModelParams::from_x(cfg.n_ions, cfg.omega, x)?;
        let mut row = ScanRow {
            x,
            jx_num: None,
            jy_num: None,
            jz_num: None,
            jx_an: an.jx,
            jy_an: an.jy,
            jz_an: an.jz,
            var_min: None,
            r_ansatz: None,
            residual: None,
            eigenvalue: None,
            overlap: None,
            mean_a_abs: None,
            truncation_warning: false,
        };
        if params.regime() == Regime::Below {
            let sol = solve_ansatz(&params)?;
            row.r_ansatz = Some(sol.squeeze.r);
            let psi = build_ansatz_state(&sol, &ops.spin, &ops.boson)?;
            row.residual = Some(scaled_residual(&c_sp, &d_sp, params.chi, &psi.view()));
        }
        if numeric_ok {
            // advance the tracker through the intermediate points up to x
            let mut tracked = None;
            let mut failed = None;
            while pi < path.len() && path[pi] <= x {
                let p = ModelParams::from_x(cfg.n_ions, cfg.omega, path[pi])?;
                pi += 1;
                match tracker.step(p) {
                    Ok(t) => tracked = Some(t),
                    Err(e) => {
                        failed = Some(e);
                        break;
                    }
                }
            }
            if let Some(e) = failed {
                if x < 1.0 {
                    out.failure = Some(e);
                    return Ok(out);
                }
                log::warn!("continuation lost above threshold: {e}");
                numeric_ok = false;
            } else if let Some(t) = tracked {
                if x >= 1.0 && t.truncation_warning {
                    numeric_ok = false;
                } else {
                    let (jx, jy, jz) = scaled_spin_moments(&t.state.view(), &ops)?;
                    let q = Quadratures::from_state(&t.state.view(), &ops.space, &ops.boson)?;
                    row.jx_num = Some(jx);
                    row.jy_num = Some(jy);
                    row.jz_num = Some(jz);
                    row.var_min = Some(q.min_variance().1);
                    row.eigenvalue = Some(t.eigenvalue);
                    row.overlap = Some(t.overlap);
                    row.mean_a_abs = Some(q.mean_a.norm());
                    row.truncation_warning = t.truncation_warning;
                }
            }
            if !numeric_ok && out.numeric_unavailable_from.is_none() {
                out.numeric_unavailable_from = Some(x);
            }
        }
        out.rows.push(row);
    }
    Ok(out)
}

/// ||(C + chi D) psi|| / sqrt 2, i.e. the scaled Hamiltonian's residual.
fn scaled_residual(c_sp: &Csr, d_sp: &Csr, chi: f64, psi: &ArrayView1<C64>) -> f64 {
    let v = c_sp.matvec(psi) + d_sp.matvec(psi).mapv(|z| z * chi);
    linalg::norm(&v.view()) / 2f64.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampConfig {
    pub n_ions: usize,
    pub omega: f64,
    pub x_final: f64,
    /// Time (units of 1/Omega) to ramp linearly from 0 to x_final.
    pub ramp_time: f64,
    /// Total simulated time; defaults to ramp_time when None.
    pub t_end: Option<f64>,
    pub dt: f64,
    pub n_max: usize,
    pub track: TrackConfig,
    /// Weight in the top Fock band that triggers a leakage warning.
    pub leak_tol: f64,
}

impl RampConfig {
    pub fn x_at(&self, t: f64) -> f64 {
        if self.ramp_time <= 0.0 {
            self.x_final
        } else {
            self.x_final * (t / self.ramp_time).min(1.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub t: f64,
    pub x: f64,
    /// |<tracked|psi>|^2
    pub fidelity: f64,
    /// <psi|H|psi>
    pub energy: f64,
    pub var_min: f64,
    /// Weight in the top Fock band.
    pub leak: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub samples: Vec<SweepSample>,
    /// Times at which leakage exceeded the tolerance.
    pub leak_warnings: Vec<f64>,
    pub failure: Option<Error>,
}

/// Schroedinger evolution under a linear drive ramp, compared at regular
/// samples with the instantaneous tracked zero state.
pub fn adiabatic_sweep(cfg: &RampConfig) -> Result<SweepOutcome> {
    let t_end = cfg.t_end.unwrap_or(cfg.ramp_time);
    if !(cfg.dt > 0.0) || !(t_end >= 0.0) || !(cfg.ramp_time >= 0.0) || !(cfg.x_final >= 0.0) {
        return Err(Error::InvalidArgument("dt must be > 0; t_end, ramp_time and x_final >= 0".into()));
    }
    let n_steps = (t_end / cfg.dt).round() as usize;
    if ((n_steps as f64) * cfg.dt - t_end).abs() > 1e-9 * t_end.max(1.0) {
        return Err(Error::InvalidArgument(format!("t_end {t_end} is not a multiple of dt {}", cfg.dt)));
    }
    let mut tracker = ZeroStateTracker::new(cfg.n_ions, cfg.n_max, cfg.track)?;
    let ops = tracker.operators().clone();
    let parts = HamiltonianParts::new(&ops);
    let (c_sp, d_sp) = parts.sparse();
    let half_n = cfg.n_ions as f64 / 2.0;
    let band = cfg.track.leak_band.unwrap_or_else(|| ops.space.default_band());

    // x moves by at most half the tracker's step between samples
    let n_samples = 100usize.max((cfg.x_final / (0.5 * cfg.track.max_step)).ceil() as usize).min(n_steps.max(1));
    let sample_steps: Vec<usize> = (0..=n_samples).map(|k| (k * n_steps + n_samples / 2) / n_samples).collect();

    let mut psi = ops.space.ground_state();
    let mut out = SweepOutcome { samples: Vec::new(), leak_warnings: Vec::new(), failure: None };
    let mut next = 0usize;
    let mut k1 = Array1::<C64>::zeros(psi.len());
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let apply = |x: f64, v: &ArrayView1<C64>, out: &mut Array1<C64>| {
        let mut tmp = Array1::zeros(v.len());
        c_sp.matvec_into(v, out);
        d_sp.matvec_into(v, &mut tmp);
        let e = x * half_n * cfg.omega;
        ndarray::Zip::from(out).and(&tmp).for_each(|o, t| *o = (*o * cfg.omega + *t * e) * (-I));
    };
    for step in 0..=n_steps {
        let t = step as f64 * cfg.dt;
        if next < sample_steps.len() && step == sample_steps[next] {
            while next < sample_steps.len() && sample_steps[next] == step {
                next += 1;
            }
            let x = cfg.x_at(t);
            let params = ModelParams::from_x(cfg.n_ions, cfg.omega, x)?;
            let tracked = match tracker.step(params) {
                Ok(tr) => tr,
                Err(e) => {
                    out.failure = Some(e);
                    return Ok(out);
                }
            };
            let fid = linalg::vdot(&tracked.state.view(), &psi.view()).norm_sqr();
            let mut hpsi = Array1::zeros(psi.len());
            apply(x, &psi.view(), &mut hpsi);
            // apply() returns -i H psi
            let energy = (linalg::vdot(&psi.view(), &hpsi.view()) * I).re;
            let q = Quadratures::from_state(&psi.view(), &ops.space, &ops.boson)?;
            let leak = ops.space.top_band_weight(&psi.view(), band)?;
            if leak > cfg.leak_tol {
                if out.leak_warnings.is_empty() {
                    log::warn!(
                        "t = {t}: state weight {leak:.2e} in the top {band} Fock levels exceeds {:e}",
                        cfg.leak_tol
                    );
                }
                out.leak_warnings.push(t);
            }
            out.samples.push(SweepSample { t, x, fidelity: fid, energy, var_min: q.min_variance().1, leak });
        }
        if step == n_steps {
            if out.leak_warnings.len() > 1 {
                log::warn!("Fock leakage above {:e} at {} samples", cfg.leak_tol, out.leak_warnings.len());
            }
            break;
        }
        // drive held at its mid-step value
        let xm = cfg.x_at(t + 0.5 * cfg.dt);
        let h = c(cfg.dt);
        apply(xm, &psi.view(), &mut k1);
        apply(xm, &(&psi + &k1.mapv(|z| z * h * 0.5)).view(), &mut k2);
        apply(xm, &(&psi + &k2.mapv(|z| z * h * 0.5)).view(), &mut k3);
        apply(xm, &(&psi + &k3.mapv(|z| z * h)).view(), &mut k4);
        ndarray::Zip::from(&mut psi).and(&k1).and(&k2).and(&k3).and(&k4).for_each(|p, a, b, cc, d| {
            *p += (*a + *b * 2.0 + *cc * 2.0 + *d) * (cfg.dt / 6.0);
        });
    }
    Ok(out)
}
