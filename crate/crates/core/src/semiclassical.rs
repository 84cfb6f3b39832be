//! Classical limit: oscillator (X, Y) coupled to a classical spin vector.
//!
//! H = X Jx - Y Jy + chi X in scaled time. The spin precesses about
//! (X, -Y, 0), so |J|^2 and H are both conserved.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigvals_general, C64};
use crate::model::ModelParams;
use crate::ode::{euler_step, AdaptiveConfig, Dop853, StepStats};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x_pos: f64,
    pub y_mom: f64,
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
}

impl PhasePoint {
    pub fn new(x_pos: f64, y_mom: f64, jx: f64, jy: f64, jz: f64) -> Self {
        PhasePoint { x_pos, y_mom, jx, jy, jz }
    }

    pub fn to_array(self) -> [f64; 5] {
        [self.x_pos, self.y_mom, self.jx, self.jy, self.jz]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        PhasePoint::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub fn spin_norm2(&self) -> f64 {
        self.jx * self.jx + self.jy * self.jy + self.jz * self.jz
    }

    pub fn energy(&self, chi: f64) -> f64 {
        self.x_pos * self.jx - self.y_mom * self.jy + chi * self.x_pos
    }

    pub fn max_abs_diff(&self, other: &PhasePoint) -> f64 {
        self.to_array().iter().zip(other.to_array()).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub chi: f64,
    /// N; the spin radius is N/2.
    pub n_ions_equiv: f64,
    pub t_end: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub seed: u64,
    pub gamma: f64,
    pub n_traj: usize,
    /// Euler-Maruyama step.
    pub dt: f64,
    /// Output spacing; None records every accepted step (deterministic)
    /// or 100 evenly spaced samples (ensembles).
    pub sample_dt: Option<f64>,
    /// Hold the spin at zero so only the oscillator moves.
    pub spin_frozen: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            chi: 0.0,
            n_ions_equiv: 2.0,
            t_end: 10.0,
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            seed: 0,
            gamma: 0.0,
            n_traj: 1,
            dt: 1e-3,
            sample_dt: None,
            spin_frozen: false,
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be > 0".into()));
        }
        if self.n_traj == 0 {
            return Err(Error::InvalidArgument("n_traj must be >= 1".into()));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::InvalidArgument("gamma must be >= 0".into()));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidArgument("t_end must be finite and >= 0".into()));
        }
        if let Some(s) = self.sample_dt {
            if !(s > 0.0) {
                return Err(Error::InvalidArgument("sample_dt must be > 0".into()));
            }
        }
        Ok(())
    }
}

/// Xdot = -Jy, Ydot = -Jx - chi, Jxdot = -Y Jz, Jydot = -X Jz, Jzdot = X Jy + Y Jx.
pub fn eom_rhs(p: &PhasePoint, chi: f64) -> PhasePoint {
    PhasePoint {
        x_pos: -p.jy,
        y_mom: -p.jx - chi,
        jx: -p.y_mom * p.jz,
        jy: -p.x_pos * p.jz,
        jz: p.x_pos * p.jy + p.y_mom * p.jx,
    }
}

fn rhs_array(chi: f64, frozen: bool) -> impl Fn(f64, &[f64; 5]) -> [f64; 5] + Copy {
    move |_t, y| {
        let d = eom_rhs(&PhasePoint::from_array(*y), chi).to_array();
        if frozen {
            [d[0], d[1], 0.0, 0.0, 0.0]
        } else {
            d
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    /// max_t |J(t)|^2 - |J(0)|^2| over every accepted step.
    pub max_spin_drift: f64,
    /// Same for the energy.
    pub max_energy_drift: f64,
    pub stats: StepStats,
}

/// Adaptive integration of the deterministic equations (gamma must be 0).
pub fn integrate(p0: &PhasePoint, cfg: &SweepConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if cfg.gamma != 0.0 {
        return Err(Error::InvalidArgument("integrate is deterministic; use sde_integrate for gamma > 0".into()));
    }
    let ode = AdaptiveConfig { rel_tol: cfg.rel_tol, abs_tol: cfg.abs_tol, h_max: f64::INFINITY };
    let f = rhs_array(cfg.chi, cfg.spin_frozen);
    let mut solver = Dop853::new(f, 0.0, p0.to_array(), ode)?;
    let (n0, e0) = (p0.spin_norm2(), p0.energy(cfg.chi));
    let mut tr = Trajectory {
        times: vec![0.0],
        points: vec![*p0],
        max_spin_drift: 0.0,
        max_energy_drift: 0.0,
        stats: StepStats::default(),
    };
    let chi = cfg.chi;
    let watch = |tr: &mut Trajectory, y: &[f64; 5]| {
        let p = PhasePoint::from_array(*y);
        tr.max_spin_drift = tr.max_spin_drift.max((p.spin_norm2() - n0).abs());
        tr.max_energy_drift = tr.max_energy_drift.max((p.energy(chi) - e0).abs());
        p
    };
    match cfg.sample_dt {
        None => {
            solver.advance_to(cfg.t_end, |t, y| {
                let p = watch(&mut tr, y);
                tr.times.push(t);
                tr.points.push(p);
            })?;
        }
        Some(dt) => {
            let n = (cfg.t_end / dt - 1e-9).ceil().max(0.0) as usize;
            for k in 1..=n {
                let t = (k as f64 * dt).min(cfg.t_end);
                solver.advance_to(t, |_, y| {
                    watch(&mut tr, y);
                })?;
                tr.times.push(t);
                tr.points.push(PhasePoint::from_array(*solver.y()));
            }
        }
    }
    tr.stats = solver.stats();
    Ok(tr)
}

/// (0, 0, -chi, 0, +sqrt(N^2/4 - chi^2)), the zero-energy fixed point.
pub fn fixed_point(chi: f64, n_ions_equiv: f64) -> Result<PhasePoint> {
    if !(n_ions_equiv > 0.0) {
        return Err(Error::InvalidArgument("N must be > 0".into()));
    }
    let half = n_ions_equiv / 2.0;
    let ratio = chi.abs() / half;
    if ratio > 1.0 {
        return Err(Error::NoFixedPoint { ratio });
    }
    let jz = ((half - chi.abs()) * (half + chi.abs())).sqrt();
    Ok(PhasePoint::new(0.0, 0.0, -chi, 0.0, jz))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    pub jacobian: [[f64; 5]; 5],
    pub eigenvalues: Vec<C64>,
    /// Largest real part among the eigenvalues.
    pub growth_rate: f64,
}

pub fn jacobian(p: &PhasePoint) -> [[f64; 5]; 5] {
    let PhasePoint { x_pos: x, y_mom: y, jx, jy, jz } = *p;
    [
        [0.0, 0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, -1.0, 0.0, 0.0],
        [0.0, -jz, 0.0, 0.0, -y],
        [-jz, 0.0, 0.0, 0.0, -x],
        [jy, jx, y, x, 0.0],
    ]
}

/// The Jacobian does not depend on chi; it is accepted for symmetry with eom_rhs.
pub fn linearize(p: &PhasePoint, _chi: f64) -> Result<Linearization> {
    let jac = jacobian(p);
    let m = ndarray::Array2::from_shape_fn((5, 5), |(i, j)| jac[i][j]);
    let eigenvalues = eigvals_general(&m.view())?;
    let growth_rate = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(Linearization { jacobian: jac, eigenvalues, growth_rate })
}

/// Barred variables: rotate (X, Y) and (Jx, Jy) together by theta.
/// Inverse of X = Xb cos + Yb sin, Y = Yb cos - Xb sin,
/// Jx = Jxb cos - Jyb sin, Jy = Jxb sin + Jyb cos.
pub fn canonical_transform(p: &PhasePoint, theta: f64) -> PhasePoint {
    let (s, c) = theta.sin_cos();
    PhasePoint {
        x_pos: p.x_pos * c - p.y_mom * s,
        y_mom: p.x_pos * s + p.y_mom * c,
        jx: p.jx * c + p.jy * s,
        jy: -p.jx * s + p.jy * c,
        jz: p.jz,
    }
}

pub fn inverse_canonical_transform(b: &PhasePoint, theta: f64) -> PhasePoint {
    let (s, c) = theta.sin_cos();
    PhasePoint {
        x_pos: b.x_pos * c + b.y_mom * s,
        y_mom: b.y_mom * c - b.x_pos * s,
        jx: b.jx * c - b.jy * s,
        jy: b.jx * s + b.jy * c,
        jz: b.jz,
    }
}

/// H written in barred variables: Xb (Jxb + chi cos) - Yb (Jyb - chi sin).
pub fn transformed_energy(b: &PhasePoint, theta: f64, chi: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    b.x_pos * (b.jx + chi * c) - b.y_mom * (b.jy - chi * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroEnergyFamily {
    /// Xb = 0 and Jyb = chi sin(theta).
    XbarZero,
    /// Yb = 0 and Jxb = -chi cos(theta).
    YbarZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroEnergyCurve {
    /// arccos(1/x)
    pub theta: f64,
    pub chi: f64,
    pub n_ions: usize,
    /// Jyb on the Xb = 0 family.
    pub jy_bar: f64,
    /// Jxb on the Yb = 0 family.
    pub jx_bar: f64,
}

impl ZeroEnergyCurve {
    /// A point of the family in original coordinates; `free_pos` is the
    /// unconstrained oscillator coordinate and `free_spin` the unconstrained
    /// in-plane spin component (both barred).
    pub fn point(&self, family: ZeroEnergyFamily, free_pos: f64, free_spin: f64, jz: f64) -> PhasePoint {
        let b = match family {
            ZeroEnergyFamily::XbarZero => PhasePoint::new(0.0, free_pos, free_spin, self.jy_bar, jz),
            ZeroEnergyFamily::YbarZero => PhasePoint::new(free_pos, 0.0, self.jx_bar, free_spin, jz),
        };
        inverse_canonical_transform(&b, self.theta)
    }
}

/// Zero-energy curve above threshold: cos(theta) = N Omega / 2E = 1/x.
pub fn zero_energy_curve(params: &ModelParams) -> Result<ZeroEnergyCurve> {
    if params.x < 1.0 {
        return Err(Error::BelowThreshold { x: params.x });
    }
    let theta = if params.x.is_infinite() { std::f64::consts::FRAC_PI_2 } else { (1.0 / params.x).acos() };
    let (s, c) = theta.sin_cos();
    Ok(ZeroEnergyCurve {
        theta,
        chi: params.chi,
        n_ions: params.n_ions,
        jy_bar: params.chi * s,
        jx_bar: -params.chi * c,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub mean_y: Vec<f64>,
    /// Unbiased sample variances.
    pub var_x: Vec<f64>,
    pub var_y: Vec<f64>,
    /// Standard errors of the means.
    pub stderr_x: Vec<f64>,
    pub stderr_y: Vec<f64>,
    /// Standard errors of the variances (from the fourth central moment).
    pub stderr_var_x: Vec<f64>,
    pub stderr_var_y: Vec<f64>,
    pub n_traj: usize,
}

struct Schedule {
    n_steps: usize,
    every: usize,
    dt: f64,
}

fn schedule(cfg: &SweepConfig) -> Result<Schedule> {
    if !(cfg.dt > 0.0) || !cfg.dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be > 0, got {}", cfg.dt)));
    }
    let n_steps = (cfg.t_end / cfg.dt).round() as usize;
    if ((n_steps as f64) * cfg.dt - cfg.t_end).abs() > 1e-9 * cfg.t_end.max(1.0) {
        return Err(Error::InvalidArgument(format!("t_end {} is not a multiple of dt {}", cfg.t_end, cfg.dt)));
    }
    let every = match cfg.sample_dt {
        Some(s) => ((s / cfg.dt).round() as usize).max(1),
        None => (n_steps / 100).max(1),
    };
    Ok(Schedule { n_steps, every, dt: cfg.dt })
}

fn sample_times(s: &Schedule) -> Vec<f64> {
    let mut t: Vec<f64> = (0..=s.n_steps).step_by(s.every).map(|k| k as f64 * s.dt).collect();
    if s.n_steps % s.every != 0 {
        t.push(s.n_steps as f64 * s.dt);
    }
    t
}

fn is_sample(k: usize, s: &Schedule) -> bool {
    k % s.every == 0 || k == s.n_steps
}

/// Fixed-step forward Euler without noise, sampled like `sde_integrate`.
pub fn euler_integrate(p0: &PhasePoint, cfg: &SweepConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let s = schedule(cfg)?;
    let mut f = rhs_array(cfg.chi, cfg.spin_frozen);
    let mut y = p0.to_array();
    let (n0, e0) = (p0.spin_norm2(), p0.energy(cfg.chi));
    let mut tr = Trajectory {
        times: vec![0.0],
        points: vec![*p0],
        max_spin_drift: 0.0,
        max_energy_drift: 0.0,
        stats: StepStats::default(),
    };
    for k in 1..=s.n_steps {
        y = euler_step(&mut f, (k - 1) as f64 * s.dt, &y, s.dt);
        let p = PhasePoint::from_array(y);
        tr.max_spin_drift = tr.max_spin_drift.max((p.spin_norm2() - n0).abs());
        tr.max_energy_drift = tr.max_energy_drift.max((p.energy(cfg.chi) - e0).abs());
        if is_sample(k, &s) {
            tr.times.push(k as f64 * s.dt);
            tr.points.push(p);
        }
    }
    tr.stats.accepted = s.n_steps;
    tr.stats.evaluations = s.n_steps;
    Ok(tr)
}

/// One Euler-Maruyama path; noise sqrt(gamma) dW on X and Y.
pub fn sde_path(p0: &PhasePoint, cfg: &SweepConfig, traj: u64) -> Result<Vec<PhasePoint>> {
    let s = schedule(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(traj);
    let mut f = rhs_array(cfg.chi, cfg.spin_frozen);
    let amp = (cfg.gamma * s.dt).sqrt();
    let mut y = p0.to_array();
    let mut out = vec![*p0];
    for k in 1..=s.n_steps {
        y = euler_step(&mut f, (k - 1) as f64 * s.dt, &y, s.dt);
        if cfg.gamma > 0.0 {
            let wx: f64 = StandardNormal.sample(&mut rng);
            let wy: f64 = StandardNormal.sample(&mut rng);
            y[0] += amp * wx;
            y[1] += amp * wy;
        }
        if is_sample(k, &s) {
            out.push(PhasePoint::from_array(y));
        }
    }
    Ok(out)
}

const CHUNK: usize = 64;

/// Ensemble statistics of X and Y under Euler-Maruyama. Trajectory k uses
/// ChaCha8 stream k of `cfg.seed`, and the reduction order is fixed, so the
/// result does not depend on the thread count.
pub fn sde_integrate(p0: &PhasePoint, cfg: &SweepConfig) -> Result<EnsembleStats> {
    cfg.validate()?;
    let s = schedule(cfg)?;
    let times = sample_times(&s);
    let m = times.len();
    let n = cfg.n_traj;
    let (x0, y0) = (p0.x_pos, p0.y_mom);
    let n_chunks = n.div_ceil(CHUNK);
    // per sample: sums of d, d^2, d^3, d^4 for dX and dY
    let partial: Vec<Result<Vec<[f64; 8]>>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![[0.0f64; 8]; m];
            for traj in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let path = sde_path(p0, cfg, traj as u64)?;
                for (a, p) in acc.iter_mut().zip(&path) {
                    let (dx, dy) = (p.x_pos - x0, p.y_mom - y0);
                    let (dx2, dy2) = (dx * dx, dy * dy);
                    a[0] += dx;
                    a[1] += dx2;
                    a[2] += dx2 * dx;
                    a[3] += dx2 * dx2;
                    a[4] += dy;
                    a[5] += dy2;
                    a[6] += dy2 * dy;
                    a[7] += dy2 * dy2;
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![[0.0f64; 8]; m];
    for chunk in partial {
        for (t, a) in total.iter_mut().zip(chunk?) {
            for i in 0..8 {
                t[i] += a[i];
            }
        }
    }
    let nf = n as f64;
    let moments = |s1: f64, s2: f64, s3: f64, s4: f64| {
        let mean = s1 / nf;
        let mu2 = (s2 / nf - mean * mean).max(0.0);
        let var = if n > 1 { mu2 * nf / (nf - 1.0) } else { 0.0 };
        let mu4 = s4 / nf - 4.0 * mean * s3 / nf + 6.0 * mean * mean * s2 / nf - 3.0 * mean.powi(4);
        let se_mean = (var / nf).sqrt();
        let se_var = ((mu4 - mu2 * mu2).max(0.0) / nf).sqrt();
        (mean, var, se_mean, se_var)
    };
    let mut st = EnsembleStats {
        times,
        mean_x: Vec::with_capacity(m),
        mean_y: Vec::with_capacity(m),
        var_x: Vec::with_capacity(m),
        var_y: Vec::with_capacity(m),
        stderr_x: Vec::with_capacity(m),
        stderr_y: Vec::with_capacity(m),
        stderr_var_x: Vec::with_capacity(m),
        stderr_var_y: Vec::with_capacity(m),
        n_traj: n,
    };
    for t in &total {
        let (mx, vx, sx, svx) = moments(t[0], t[1], t[2], t[3]);
        let (my, vy, sy, svy) = moments(t[4], t[5], t[6], t[7]);
        st.mean_x.push(x0 + mx);
        st.mean_y.push(y0 + my);
        st.var_x.push(vx);
        st.var_y.push(vy);
        st.stderr_x.push(sx);
        st.stderr_y.push(sy);
        st.stderr_var_x.push(svx);
        st.stderr_var_y.push(svy);
    }
    Ok(st)
}
