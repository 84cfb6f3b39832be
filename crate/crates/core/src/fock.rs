//! Truncated Fock space of the centre-of-mass mode.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, expm_antihermitian, C64, I};

#[derive(Debug, Clone)]
pub struct BosonOperators {
    pub n_max: usize,
    pub a: Array2<C64>,
    pub adag: Array2<C64>,
    /// (a + a^dag)/sqrt 2
    pub x: Array2<C64>,
    /// -i (a - a^dag)/sqrt 2
    pub y: Array2<C64>,
    pub n: Array2<C64>,
}

impl BosonOperators {
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn vacuum(&self) -> Array1<C64> {
        let mut v = Array1::zeros(self.dim());
        v[0] = c(1.0);
        v
    }
}

pub fn build_boson_operators(n_max: usize) -> Result<BosonOperators> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be >= 1".into()));
    }
    let dim = n_max + 1;
    let mut a = Array2::zeros((dim, dim));
    for k in 1..dim {
        a[[k - 1, k]] = c((k as f64).sqrt());
    }
    let adag = a.t().to_owned();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&a + &adag).mapv(|z| z * s);
    let y = (&a - &adag).mapv(|z| -I * z * s);
    let n = Array2::from_diag(&Array1::from_iter((0..dim).map(|k| c(k as f64))));
    Ok(BosonOperators { n_max, a, adag, x, y, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    pub r: f64,
    pub mu: f64,
    pub nu: f64,
}

impl SqueezeParams {
    pub fn new(r: f64) -> Result<Self> {
        if !(r >= 0.0) {
            return Err(Error::InvalidArgument(format!("squeeze r must be >= 0, got {r}")));
        }
        Ok(SqueezeParams { r, mu: r.cosh(), nu: r.sinh() })
    }

    /// Mean phonon number of the squeezed vacuum.
    pub fn mean_n(&self) -> f64 {
        self.nu * self.nu
    }
}

/// Squeezed-vacuum probability allowed above the cutoff.
pub const SQUEEZE_TAIL_TOL: f64 = 1e-8;

/// Probability the untruncated squeezed vacuum puts above n_max.
pub fn squeeze_tail_mass(r: f64, n_max: usize) -> f64 {
    let t2 = r.tanh().powi(2);
    let mut p = 1.0 / r.cosh();
    let mut head = 0.0;
    let mut k = 0usize;
    while 2 * k <= n_max {
        head += p;
        p *= t2 * (2 * k + 1) as f64 / (2 * k + 2) as f64;
        k += 1;
    }
    // sum the tail directly while it still matters, which keeps it
    // accurate far below the rounding error of 1 - head
    let mut tail = 0.0f64;
    while p > 1e-18 * tail.max(1e-300) && k < 10_000_000 {
        tail += p;
        p *= t2 * (2 * k + 1) as f64 / (2 * k + 2) as f64;
        k += 1;
    }
    if k >= 10_000_000 {
        (1.0 - head).max(tail)
    } else {
        tail
    }
}

/// True when the truncated tail stays below `SQUEEZE_TAIL_TOL`. The cruder
/// rule sinh^2 r <= n_max/10 lets tails near 1e-5 through at n_max = 100.
pub fn squeeze_fits(r: f64, n_max: usize) -> bool {
    squeeze_tail_mass(r, n_max) <= SQUEEZE_TAIL_TOL
}

fn warn_if_tight(r: f64, n_max: usize) {
    if !squeeze_fits(r, n_max) {
        log::warn!(
            "squeeze r = {r:.4} leaves probability {:.2e} above n_max = {n_max}; truncation error likely",
            squeeze_tail_mass(r, n_max)
        );
    }
}

/// S(r) = exp((r/2)(a^dag^2 - a^2)), so that S^dag a S = cosh r a + sinh r a^dag
/// away from the cutoff.
pub fn squeeze_operator(r: f64, ops: &BosonOperators) -> Result<Array2<C64>> {
    SqueezeParams::new(r)?;
    warn_if_tight(r, ops.n_max);
    let gen = (ops.adag.dot(&ops.adag) - ops.a.dot(&ops.a)).mapv(|z| z * (0.5 * r));
    expm_antihermitian(&gen.view())
}

/// S(r)|0>, from the closed-form even-Fock amplitudes
/// c_{2k} = (tanh r)^k sqrt((2k)!)/(2^k k!) / sqrt(cosh r), renormalized after truncation.
pub fn squeezed_vacuum(r: f64, ops: &BosonOperators) -> Result<Array1<C64>> {
    SqueezeParams::new(r)?;
    warn_if_tight(r, ops.n_max);
    let t = r.tanh();
    let mut amp = vec![0.0f64; ops.dim()];
    amp[0] = 1.0 / r.cosh().sqrt();
    let mut k = 0usize;
    while 2 * k + 2 <= ops.n_max {
        let ratio = t * ((2 * k + 1) as f64 / (2 * k + 2) as f64).sqrt();
        amp[2 * k + 2] = amp[2 * k] * ratio;
        k += 1;
    }
    let nrm = amp.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(Array1::from_iter(amp.into_iter().map(|v| c(v / nrm))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{commutator, dagger, identity, max_abs_diff, norm, vdot};

    fn expect(op: &Array2<C64>, v: &Array1<C64>) -> C64 {
        vdot(&v.view(), &op.dot(v).view())
    }

    #[test]
    fn tail_mass_matches_series() {
        // reference values summed in extended precision outside this crate
        assert!((squeeze_tail_mass(1.5, 100) / 6.858953122929889e-6 - 1.0).abs() < 1e-9);
        assert!((squeeze_tail_mass(1.0, 100) / 1.0355728247020268e-13 - 1.0).abs() < 1e-6);
        assert_eq!(squeeze_tail_mass(0.0, 10), 0.0);
        assert!(squeeze_fits(1.2, 100) && !squeeze_fits(1.5, 100));
    }

    #[test]
    fn ladder_superdiagonal() {
        let b = build_boson_operators(2).unwrap();
        assert_eq!(b.a[[0, 1]], c(1.0));
        assert_eq!(b.a[[1, 2]], c(2f64.sqrt()));
        assert_eq!(b.a[[0, 2]], c(0.0));
    }

    #[test]
    fn zero_cutoff_rejected() {
        assert!(build_boson_operators(0).is_err());
    }

    #[test]
    fn commutator_with_truncation_artifact() {
        let b = build_boson_operators(7).unwrap();
        let cm = commutator(&b.a.view(), &b.adag.view());
        for m in 0..7 {
            assert!((cm[[m, m]] - c(1.0)).norm() < 1e-14);
        }
        assert!((cm[[7, 7]] - c(-7.0)).norm() < 1e-14);
        let xy = commutator(&b.x.view(), &b.y.view());
        for m in 0..7 {
            assert!((xy[[m, m]] - I).norm() < 1e-14);
        }
    }

    #[test]
    fn vacuum_properties() {
        let b = build_boson_operators(50).unwrap();
        let v = b.vacuum();
        assert!(b.a.dot(&v).iter().all(|z| *z == c(0.0)));
        assert!((expect(&b.x.dot(&b.x), &v).re - 0.5).abs() < 1e-15);
        assert_eq!(b.x, dagger(&b.x.view()));
        assert_eq!(b.y, dagger(&b.y.view()));
    }

    #[test]
    fn squeeze_params_identity() {
        for r in [0.0, 0.3, 1.1, 2.5] {
            let s = SqueezeParams::new(r).unwrap();
            assert!((s.mu * s.mu - s.nu * s.nu - 1.0).abs() < 1e-12);
            assert!(s.mu >= 1.0 && s.nu >= 0.0);
        }
        assert!(SqueezeParams::new(-0.1).is_err());
    }

    #[test]
    fn zero_squeeze_is_identity() {
        let b = build_boson_operators(10).unwrap();
        let s = squeeze_operator(0.0, &b).unwrap();
        assert!(max_abs_diff(&s.view(), &identity(11).view()) < 1e-15);
        assert_eq!(squeezed_vacuum(0.0, &b).unwrap(), b.vacuum());
    }

    #[test]
    fn bogoliubov_conjugation() {
        let r = 0.5;
        let b = build_boson_operators(120).unwrap();
        let s = squeeze_operator(r, &b).unwrap();
        let lhs = dagger(&s.view()).dot(&b.a).dot(&s);
        let rhs = b.a.mapv(|z| z * r.cosh()) + b.adag.mapv(|z| z * r.sinh());
        let top = ndarray::s![0..20, 0..20];
        assert!(max_abs_diff(&lhs.slice(top), &rhs.slice(top)) <= 1e-12);
    }

    #[test]
    fn squeezed_vacuum_matches_operator_and_is_even() {
        let r = 0.5;
        let b = build_boson_operators(80).unwrap();
        let s0 = squeeze_operator(r, &b).unwrap().dot(&b.vacuum());
        let closed = squeezed_vacuum(r, &b).unwrap();
        assert!((&s0 - &closed).iter().all(|z| z.norm() < 1e-12));
        for k in (1..=80).step_by(2) {
            assert!(s0[k].norm() < 1e-14);
        }
    }

    #[test]
    fn squeezed_vacuum_moments() {
        let r = 0.3;
        let b = build_boson_operators(60).unwrap();
        let v = squeezed_vacuum(r, &b).unwrap();
        assert!((norm(&v.view()) - 1.0).abs() < 1e-12);
        assert!((expect(&b.n, &v).re - r.sinh().powi(2)).abs() < 1e-6);
        assert!(expect(&b.a, &v).norm() < 1e-12);
        let vy = expect(&b.y.dot(&b.y), &v).re;
        let vx = expect(&b.x.dot(&b.x), &v).re;
        assert!((vy - (-2.0 * r).exp() / 2.0).abs() < 1e-6);
        assert!((vx - (2.0 * r).exp() / 2.0).abs() < 1e-6);
    }
}
