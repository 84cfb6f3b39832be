//! Collective angular momentum on the symmetric (Dicke) subspace.
//!
//! Basis index k holds |j, m = k - j>, so index 0 is the all-down state.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{c, expm_antihermitian, C64, I};

#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub n_ions: usize,
    pub j: f64,
    pub dim: usize,
    pub jp: Array2<C64>,
    pub jm: Array2<C64>,
    pub jx: Array2<C64>,
    pub jy: Array2<C64>,
    pub jz: Array2<C64>,
}

pub fn build_spin_operators(n_ions: usize) -> Result<SpinOperators> {
    if n_ions == 0 {
        return Err(Error::InvalidArgument("n_ions must be >= 1".into()));
    }
    let dim = n_ions + 1;
    let j = n_ions as f64 / 2.0;
    let m = |k: usize| k as f64 - j;
    let mut jp = Array2::zeros((dim, dim));
    for k in 0..dim - 1 {
        jp[[k + 1, k]] = c((j * (j + 1.0) - m(k) * (m(k) + 1.0)).sqrt());
    }
    let jm = jp.t().to_owned();
    let jx = (&jp + &jm).mapv(|z| z * 0.5);
    let jy = (&jp - &jm).mapv(|z| -I * z * 0.5);
    let jz = Array2::from_diag(&Array1::from_iter((0..dim).map(|k| c(m(k)))));
    Ok(SpinOperators { n_ions, j, dim, jp, jm, jx, jy, jz })
}

impl SpinOperators {
    /// |j, -j>
    pub fn lowest_state(&self) -> Array1<C64> {
        let mut v = Array1::zeros(self.dim);
        v[0] = c(1.0);
        v
    }

    /// Index of |j, m> in the basis.
    pub fn index_of(&self, m: f64) -> Option<usize> {
        let k = m + self.j;
        if k < -1e-9 || k > self.n_ions as f64 + 1e-9 || (k - k.round()).abs() > 1e-9 {
            None
        } else {
            Some(k.round() as usize)
        }
    }

    pub fn casimir(&self) -> f64 {
        self.j * (self.j + 1.0)
    }
}

/// R(theta) = exp(-theta (J+ - J-)) = exp(-2 i theta Jy).
///
/// Conjugation turns the spin about y by 2 theta in the sense
/// R^dag Jz R = cos 2t Jz - sin 2t Jx, so the rotated lowest state has
/// <Jx> = -j sin 2t.
pub fn rotation_operator(theta: f64, ops: &SpinOperators) -> Result<Array2<C64>> {
    let gen = (&ops.jp - &ops.jm).mapv(|z| -theta * z);
    expm_antihermitian(&gen.view())
}

/// U^dag A U
pub fn conjugate(u: &ArrayView2<C64>, a: &ArrayView2<C64>) -> Array2<C64> {
    crate::linalg::dagger(u).dot(a).dot(u)
}
