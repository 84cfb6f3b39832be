//! Small fixed-dimension ODE integrators: adaptive Dormand-Prince 8(5,3)
//! and classic fixed-step schemes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on the step size.
    pub h_max: f64,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig { rel_tol: 1e-9, abs_tol: 1e-12, h_max: f64::INFINITY }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C: [f64; 12] = [
    0.0,
    0.05260015195876773,
    0.0789002279381516,
    0.1183503419072274,
    0.2816496580927726,
    0.3333333333333333,
    0.25,
    0.3076923076923077,
    0.6512820512820513,
    0.6,
    0.8571428571428571,
    1.0,
];
const A: [[f64; 12]; 12] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.05260015195876773, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0197250569845379, 0.0591751709536137, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.02958758547680685, 0.0, 0.08876275643042054, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [
        0.03709200011850479,
        0.0,
        0.0,
        0.17038392571223998,
        0.10726203044637328,
        -0.015319437748624402,
        0.008273789163814023,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.6241109587160757,
        0.0,
        0.0,
        -3.3608926294469414,
        -0.868219346841726,
        27.59209969944671,
        20.154067550477894,
        -43.48988418106996,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.47766253643826434,
        0.0,
        0.0,
        -2.4881146199716677,
        -0.590290826836843,
        21.230051448181193,
        15.279233632882423,
        -33.28821096898486,
        -0.020331201708508627,
        0.0,
        0.0,
        0.0,
    ],
    [
        -0.9371424300859873,
        0.0,
        0.0,
        5.186372428844064,
        1.0914373489967295,
        -8.149787010746927,
        -18.52006565999696,
        22.739487099350505,
        2.4936055526796523,
        -3.0467644718982196,
        0.0,
        0.0,
    ],
    [
        2.273310147516538,
        0.0,
        0.0,
        -10.53449546673725,
        -2.0008720582248625,
        -17.9589318631188,
        27.94888452941996,
        -2.8589982771350235,
        -8.87285693353063,
        12.360567175794303,
        0.6433927460157636,
        0.0,
    ],
];
const B: [f64; 12] = [
    0.054293734116568765,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450312892752409,
    1.8915178993145003,
    -5.801203960010585,
    0.3111643669578199,
    -0.1521609496625161,
    0.20136540080403034,
    0.04471061572777259,
];
const E3: [f64; 13] = [
    -0.18980075407240762,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450312892752409,
    1.8915178993145003,
    -5.801203960010585,
    -0.4226823213237919,
    -0.1521609496625161,
    0.20136540080403034,
    0.02265179219836082,
    0.0,
];
const E5: [f64; 13] = [
    0.01312004499419488,
    0.0,
    0.0,
    0.0,
    0.0,
    -1.2251564463762044,
    -0.4957589496572502,
    1.6643771824549864,
    -0.35032884874997366,
    0.3341791187130175,
    0.08192320648511571,
    -0.022355307863886294,
    0.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

fn rms<const N: usize>(v: &[f64; N]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / N as f64).sqrt()
}

/// Adaptive 8th-order Dormand-Prince integrator with the combined 5th/3rd
/// order error estimate.
pub struct Dop853<const N: usize, F> {
    f: F,
    cfg: AdaptiveConfig,
    t: f64,
    y: [f64; N],
    dy: [f64; N],
    h: f64,
    stats: StepStats,
}

impl<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]> Dop853<N, F> {
    pub fn new(mut f: F, t0: f64, y0: [f64; N], cfg: AdaptiveConfig) -> Result<Self> {
        if !(cfg.rel_tol > 0.0 && cfg.abs_tol > 0.0 && cfg.h_max > 0.0) {
            return Err(Error::InvalidArgument("tolerances and h_max must be > 0".into()));
        }
        let dy = f(t0, &y0);
        let mut me =
            Dop853 { f, cfg, t: t0, y: y0, dy, h: 0.0, stats: StepStats { evaluations: 1, ..Default::default() } };
        me.h = me.initial_step().min(cfg.h_max);
        Ok(me)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    fn scale(&self, a: &[f64; N], b: &[f64; N]) -> [f64; N] {
        std::array::from_fn(|i| self.cfg.abs_tol + a[i].abs().max(b[i].abs()) * self.cfg.rel_tol)
    }

    fn initial_step(&mut self) -> f64 {
        let sc = self.scale(&self.y, &self.y);
        let ys: [f64; N] = std::array::from_fn(|i| self.y[i] / sc[i]);
        let fs: [f64; N] = std::array::from_fn(|i| self.dy[i] / sc[i]);
        let (d0, d1) = (rms(&ys), rms(&fs));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1: [f64; N] = std::array::from_fn(|i| self.y[i] + h0 * self.dy[i]);
        let f1 = (self.f)(self.t + h0, &y1);
        self.stats.evaluations += 1;
        let df: [f64; N] = std::array::from_fn(|i| (f1[i] - self.dy[i]) / sc[i]);
        let d2 = rms(&df) / h0;
        let h1 = if d1 <= 1e-15 && d2 <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(1.0 / 8.0) };
        (100.0 * h0).min(h1)
    }

    /// One trial step of size h; returns (y_new, f_new, error norm).
    fn trial(&mut self, h: f64) -> ([f64; N], [f64; N], f64) {
        let mut k = [[0.0f64; N]; 13];
        k[0] = self.dy;
        for s in 1..12 {
            let yi: [f64; N] = std::array::from_fn(|i| {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                self.y[i] + h * acc
            });
            k[s] = (self.f)(self.t + C[s] * h, &yi);
        }
        let y_new: [f64; N] = std::array::from_fn(|i| {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(12) {
                acc += B[j] * kj[i];
            }
            self.y[i] + h * acc
        });
        let f_new = (self.f)(self.t + h, &y_new);
        k[12] = f_new;
        self.stats.evaluations += 12;

        let sc = self.scale(&self.y, &y_new);
        let (mut e5, mut e3) = (0.0, 0.0);
        for i in 0..N {
            let (mut a5, mut a3) = (0.0, 0.0);
            for (j, kj) in k.iter().enumerate() {
                a5 += E5[j] * kj[i];
                a3 += E3[j] * kj[i];
            }
            e5 += (a5 / sc[i]).powi(2);
            e3 += (a3 / sc[i]).powi(2);
        }
        let err = if e5 == 0.0 && e3 == 0.0 { 0.0 } else { h.abs() * e5 / ((e5 + 0.01 * e3) * N as f64).sqrt() };
        (y_new, f_new, err)
    }

    /// Takes one accepted step, never past `t_bound`.
    pub fn step(&mut self, t_bound: f64) -> Result<()> {
        let min_step = 10.0 * (next_up(self.t.abs()) - self.t.abs());
        let mut h_abs = self.h.min(self.cfg.h_max).max(min_step);
        let mut rejected = false;
        loop {
            if h_abs < min_step {
                return Err(Error::StepUnderflow { t: self.t, h: h_abs });
            }
            let mut t_new = self.t + h_abs;
            if t_new > t_bound {
                t_new = t_bound;
            }
            let h = t_new - self.t;
            let (y_new, f_new, err) = self.trial(h);
            if err < 1.0 {
                let mut factor =
                    if err == 0.0 { MAX_FACTOR } else { MAX_FACTOR.min(SAFETY * err.powf(ERROR_EXPONENT)) };
                if rejected {
                    factor = factor.min(1.0);
                }
                self.t = t_new;
                self.y = y_new;
                self.dy = f_new;
                self.h = h.abs() * factor;
                // keep the natural size after a step that was clipped to t_bound
                if h_abs > h.abs() {
                    self.h = self.h.max(h_abs);
                }
                self.stats.accepted += 1;
                return Ok(());
            }
            if !err.is_finite() {
                h_abs *= MIN_FACTOR;
            } else {
                h_abs *= MIN_FACTOR.max(SAFETY * err.powf(ERROR_EXPONENT));
            }
            rejected = true;
            self.stats.rejected += 1;
        }
    }

    /// Integrates up to exactly `t_target`, calling `on_step` after each accepted step.
    pub fn advance_to(&mut self, t_target: f64, mut on_step: impl FnMut(f64, &[f64; N])) -> Result<()> {
        while self.t < t_target {
            self.step(t_target)?;
            on_step(self.t, &self.y);
        }
        Ok(())
    }
}

fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    f64::from_bits(x.to_bits() + 1)
}

/// Classic fourth-order Runge-Kutta step.
pub fn rk4_step<const N: usize>(
    f: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]));
    let k3 = f(t + 0.5 * h, &std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]));
    let k4 = f(t + h, &std::array::from_fn(|i| y[i] + h * k3[i]));
    std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Forward Euler step.
pub fn euler_step<const N: usize>(
    f: &mut impl FnMut(f64, &[f64; N]) -> [f64; N],
    t: f64,
    y: &[f64; N],
    h: f64,
) -> [f64; N] {
    let k = f(t, y);
    std::array::from_fn(|i| y[i] + h * k[i])
}
