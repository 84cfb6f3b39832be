//! Squeezed-rotated product ansatz S(r) R(theta) |j,-j> (x) |0> for the
//! zero-energy state below threshold.
//!
//! Annihilating H with the ansatz needs N Omega sin 2theta / 2 = E and
//! nu (1 + cos 2theta) = mu (1 - cos 2theta), i.e. cos 2theta = exp(-2r).

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::fock::{squeezed_vacuum, BosonOperators, SqueezeParams};
use crate::linalg::{norm, C64};
use crate::model::{ModelParams, ProductSpace, Regime};
use crate::spin::{rotation_operator, SpinOperators};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSolution {
    pub theta: f64,
    /// r = +inf at the critical point.
    pub squeeze: SqueezeParams,
    pub regime: Regime,
    pub x: f64,
}

impl AnsatzSolution {
    pub fn cos2theta(&self) -> f64 {
        (2.0 * self.theta).cos()
    }

    /// mu (1 - cos 2theta) - nu (1 + cos 2theta)
    pub fn condition_mismatch(&self) -> f64 {
        let c2 = self.cos2theta();
        self.squeeze.mu * (1.0 - c2) - self.squeeze.nu * (1.0 + c2)
    }
}

pub fn solve_ansatz(params: &ModelParams) -> Result<AnsatzSolution> {
    let x = params.x;
    match params.regime() {
        Regime::Above => Err(Error::AboveThreshold { x }),
        Regime::Critical => Ok(AnsatzSolution {
            theta: std::f64::consts::FRAC_PI_4,
            squeeze: SqueezeParams { r: f64::INFINITY, mu: f64::INFINITY, nu: f64::INFINITY },
            regime: Regime::Critical,
            x,
        }),
        Regime::Below => {
            let theta = 0.5 * x.asin();
            let r = -0.5 * (1.0 - x * x).sqrt().ln();
            Ok(AnsatzSolution { theta, squeeze: SqueezeParams::new(r)?, regime: Regime::Below, x })
        }
    }
}

/// R(theta)|j,-j> (x) S(r)|0>, normalized.
pub fn build_ansatz_state(sol: &AnsatzSolution, spin: &SpinOperators, boson: &BosonOperators) -> Result<Array1<C64>> {
    if sol.regime != Regime::Below {
        return Err(Error::InvalidArgument(format!(
            "ansatz state only exists below threshold (x = {}, regime {:?})",
            sol.x, sol.regime
        )));
    }
    let spin_part = rotation_operator(sol.theta, spin)?.dot(&spin.lowest_state());
    let boson_part = squeezed_vacuum(sol.squeeze.r, boson)?;
    let space = ProductSpace::new(spin.n_ions, boson.n_max);
    let v = space.product_state(&spin_part.view(), &boson_part.view())?;
    let n = norm(&v.view());
    Ok(v.mapv(|z| z / n))
}

/// ||H psi||_2
pub fn residual(h: &ArrayView2<C64>, psi: &ArrayView1<C64>) -> Result<f64> {
    check_dim(h.ncols(), psi.len())?;
    Ok(norm(&h.dot(psi).view()))
}

/// Mean-field scaled moments <J>/(N/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledMoments {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
}

/// Below threshold: (jx, jy, jz) = (-x, 0, -sqrt(1-x^2)).
/// Above: (-1/x, -sqrt(1-1/x^2), 0), the Ybar = 0 branch of the
/// zero-energy curve with cos(theta) = 1/x.
pub fn analytic_scaled_moments(x: f64) -> Result<ScaledMoments> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("x must be finite and >= 0, got {x}")));
    }
    Ok(if x <= 1.0 { below_threshold_moments(x) } else { above_threshold_moments(x) })
}

/// The x <= 1 formulas, evaluated without a range check.
pub fn below_threshold_moments(x: f64) -> ScaledMoments {
    ScaledMoments { jx: -x, jy: 0.0, jz: -((1.0 - x) * (1.0 + x)).sqrt() }
}

/// The x >= 1 formulas, evaluated without a range check.
pub fn above_threshold_moments(x: f64) -> ScaledMoments {
    ScaledMoments { jx: -1.0 / x, jy: -((x - 1.0) * (x + 1.0)).sqrt() / x, jz: 0.0 }
}
