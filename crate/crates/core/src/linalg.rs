//! Thin dense/sparse linear algebra layer over LAPACK.
//!
//! Matrices are row-major `ndarray` values; LAPACK wants column-major, so
//! inputs are transposed on the way in (free for symmetric inputs).

use std::os::raw::c_char;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, LinalgScalar, ShapeBuilder};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending,
/// eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct Eigh<T> {
    pub values: Array1<f64>,
    pub vectors: Array2<T>,
}

fn to_i32(n: usize) -> i32 {
    i32::try_from(n).expect("matrix dimension exceeds LAPACK integer range")
}

fn lapack_check(routine: &'static str, info: i32) -> Result<()> {
    if info == 0 {
        Ok(())
    } else {
        Err(Error::Lapack { routine, info })
    }
}

fn square(a_rows: usize, a_cols: usize) -> Result<usize> {
    if a_rows != a_cols {
        return Err(Error::DimensionMismatch { expected: a_rows, got: a_cols });
    }
    Ok(a_rows)
}

/// Full spectrum of a real symmetric matrix (divide and conquer).
pub fn eigh_real(a: &ArrayView2<f64>) -> Result<Eigh<f64>> {
    let n = square(a.nrows(), a.ncols())?;
    if n == 0 {
        return Ok(Eigh { values: Array1::zeros(0), vectors: Array2::zeros((0, 0)) });
    }
    // symmetric: row-major data is already the column-major matrix
    let mut buf: Vec<f64> = a.iter().copied().collect();
    let mut w = vec![0.0f64; n];
    let ni = to_i32(n);
    let jobz = b'V' as c_char;
    let uplo = b'L' as c_char;
    let mut info = 0;
    let mut wq = [0.0f64];
    let mut iwq = [0i32];
    unsafe {
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &ni,
            buf.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            wq.as_mut_ptr(),
            &-1,
            iwq.as_mut_ptr(),
            &-1,
            &mut info,
        );
    }
    lapack_check("dsyevd", info)?;
    let lwork = wq[0] as i32;
    let liwork = iwq[0];
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &ni,
            buf.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    lapack_check("dsyevd", info)?;
    let vectors = Array2::from_shape_vec((n, n).f(), buf).expect("shape");
    Ok(Eigh { values: Array1::from(w), vectors })
}

/// Eigenpairs of a real symmetric matrix with eigenvalues in `(lo, hi]`.
pub fn eigh_real_window(a: &ArrayView2<f64>, lo: f64, hi: f64) -> Result<Eigh<f64>> {
    let n = square(a.nrows(), a.ncols())?;
    if n == 0 || lo >= hi {
        return Ok(Eigh { values: Array1::zeros(0), vectors: Array2::zeros((n, 0)) });
    }
    let mut buf: Vec<f64> = a.iter().copied().collect();
    let mut w = vec![0.0f64; n];
    let mut z = vec![0.0f64; n * n];
    let mut isuppz = vec![0i32; 2 * n];
    let ni = to_i32(n);
    let (jobz, range, uplo) = (b'V' as c_char, b'V' as c_char, b'L' as c_char);
    let (il, iu, abstol) = (0i32, 0i32, 0.0f64);
    let mut m = 0i32;
    let mut info = 0;
    let mut wq = [0.0f64];
    let mut iwq = [0i32];
    unsafe {
        lapack_sys::dsyevr_(
            &jobz,
            &range,
            &uplo,
            &ni,
            buf.as_mut_ptr(),
            &ni,
            &lo,
            &hi,
            &il,
            &iu,
            &abstol,
            &mut m,
            w.as_mut_ptr(),
            z.as_mut_ptr(),
            &ni,
            isuppz.as_mut_ptr(),
            wq.as_mut_ptr(),
            &-1,
            iwq.as_mut_ptr(),
            &-1,
            &mut info,
        );
    }
    lapack_check("dsyevr", info)?;
    let lwork = wq[0] as i32;
    let liwork = iwq[0];
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::dsyevr_(
            &jobz,
            &range,
            &uplo,
            &ni,
            buf.as_mut_ptr(),
            &ni,
            &lo,
            &hi,
            &il,
            &iu,
            &abstol,
            &mut m,
            w.as_mut_ptr(),
            z.as_mut_ptr(),
            &ni,
            isuppz.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    lapack_check("dsyevr", info)?;
    let m = m as usize;
    w.truncate(m);
    z.truncate(n * m);
    let vectors = Array2::from_shape_vec((n, m).f(), z).expect("shape");
    Ok(Eigh { values: Array1::from(w), vectors })
}

/// Full spectrum of a complex Hermitian matrix.
pub fn eigh_complex(a: &ArrayView2<C64>) -> Result<Eigh<C64>> {
    let n = square(a.nrows(), a.ncols())?;
    if n == 0 {
        return Ok(Eigh { values: Array1::zeros(0), vectors: Array2::zeros((0, 0)) });
    }
    let mut buf: Vec<C64> = a.t().iter().copied().collect();
    let mut w = vec![0.0f64; n];
    let ni = to_i32(n);
    let (jobz, uplo) = (b'V' as c_char, b'L' as c_char);
    let mut info = 0;
    let mut wq = [C64::new(0.0, 0.0)];
    let mut rwq = [0.0f64];
    let mut iwq = [0i32];
    unsafe {
        lapack_sys::zheevd_(
            &jobz,
            &uplo,
            &ni,
            buf.as_mut_ptr() as *mut _,
            &ni,
            w.as_mut_ptr(),
            wq.as_mut_ptr() as *mut _,
            &-1,
            rwq.as_mut_ptr(),
            &-1,
            iwq.as_mut_ptr(),
            &-1,
            &mut info,
        );
    }
    lapack_check("zheevd", info)?;
    let lwork = wq[0].re as i32;
    let lrwork = rwq[0] as i32;
    let liwork = iwq[0];
    let mut work = vec![C64::new(0.0, 0.0); lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::zheevd_(
            &jobz,
            &uplo,
            &ni,
            buf.as_mut_ptr() as *mut _,
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr() as *mut _,
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    lapack_check("zheevd", info)?;
    let vectors = Array2::from_shape_vec((n, n).f(), buf).expect("shape");
    Ok(Eigh { values: Array1::from(w), vectors })
}

/// Returns the real part if every imaginary part is exactly zero.
pub fn exactly_real(a: &ArrayView2<C64>) -> Option<Array2<f64>> {
    if a.iter().all(|z| z.im == 0.0) {
        Some(a.mapv(|z| z.re))
    } else {
        None
    }
}

/// Hermitian eigen-decomposition; takes the real symmetric path when possible.
pub fn eigh(a: &ArrayView2<C64>) -> Result<Eigh<C64>> {
    match exactly_real(a) {
        Some(re) => {
            let e = eigh_real(&re.view())?;
            Ok(Eigh { values: e.values, vectors: e.vectors.mapv(c) })
        }
        None => eigh_complex(a),
    }
}

/// Eigenvalues of a general real matrix.
pub fn eigvals_general(a: &ArrayView2<f64>) -> Result<Vec<C64>> {
    let n = square(a.nrows(), a.ncols())?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut buf: Vec<f64> = a.t().iter().copied().collect();
    let mut wr = vec![0.0f64; n];
    let mut wi = vec![0.0f64; n];
    let ni = to_i32(n);
    let no = b'N' as c_char;
    let mut dummy = [0.0f64];
    let one = 1i32;
    let mut info = 0;
    let mut wq = [0.0f64];
    unsafe {
        lapack_sys::dgeev_(
            &no,
            &no,
            &ni,
            buf.as_mut_ptr(),
            &ni,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            dummy.as_mut_ptr(),
            &one,
            dummy.as_mut_ptr(),
            &one,
            wq.as_mut_ptr(),
            &-1,
            &mut info,
        );
    }
    lapack_check("dgeev", info)?;
    let lwork = wq[0] as i32;
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    unsafe {
        lapack_sys::dgeev_(
            &no,
            &no,
            &ni,
            buf.as_mut_ptr(),
            &ni,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            dummy.as_mut_ptr(),
            &one,
            dummy.as_mut_ptr(),
            &one,
            work.as_mut_ptr(),
            &lwork,
            &mut info,
        );
    }
    lapack_check("dgeev", info)?;
    Ok(wr.into_iter().zip(wi).map(|(re, im)| C64::new(re, im)).collect())
}

pub fn dagger(a: &ArrayView2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// exp(G) for anti-Hermitian G, via the spectrum of the Hermitian iG.
pub fn expm_antihermitian(g: &ArrayView2<C64>) -> Result<Array2<C64>> {
    let k = g.mapv(|z| I * z);
    let e = eigh(&k.view())?;
    let phases = e.values.mapv(|l| (-I * l).exp());
    let scaled = &e.vectors * &phases.broadcast(e.vectors.raw_dim()).expect("broadcast");
    Ok(scaled.dot(&dagger(&e.vectors.view())))
}

pub fn kron<T: LinalgScalar + PartialEq>(a: &ArrayView2<T>, b: &ArrayView2<T>) -> Array2<T> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let s = a[[i, j]];
            if s == T::zero() {
                continue;
            }
            let mut blk = out.slice_mut(ndarray::s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
            blk.zip_mut_with(b, |o, &v| *o = s * v);
        }
    }
    out
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::eye(n)
}

pub fn commutator(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

pub fn max_abs(a: &ArrayView2<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn max_abs_diff(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

pub fn hermiticity_error(a: &ArrayView2<C64>) -> f64 {
    let mut m = 0.0f64;
    for ((i, j), z) in a.indexed_iter() {
        m = m.max((z - a[[j, i]].conj()).norm());
    }
    m
}

pub fn norm(v: &ArrayView1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// <u|v> with the first argument conjugated.
pub fn vdot(u: &ArrayView1<C64>, v: &ArrayView1<C64>) -> C64 {
    u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn trace(a: &ArrayView2<C64>) -> C64 {
    a.diag().sum()
}

/// Compressed sparse row matrix with complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl Csr {
    pub fn from_dense(a: &ArrayView2<C64>) -> Self {
        let (nrows, ncols) = a.dim();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for row in a.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v != C64::new(0.0, 0.0) {
                    indices.push(j);
                    data.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Csr { nrows, ncols, indptr, indices, data }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut out = Array2::zeros((self.nrows, self.ncols));
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                out[[i, self.indices[k]]] = self.data[k];
            }
        }
        out
    }

    pub fn adjoint(&self) -> Csr {
        Csr::from_dense(&dagger(&self.to_dense().view()).view())
    }

    pub fn scaled(&self, s: C64) -> Csr {
        Csr { data: self.data.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    /// tr(A W)
    pub fn trace_product(&self, w: &ArrayView2<C64>) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.data[k] * w[[self.indices[k], i]];
            }
        }
        acc
    }

    /// Entrywise sum of two matrices with the same shape.
    pub fn add(&self, other: &Csr) -> Csr {
        Csr::from_dense(&(self.to_dense() + other.to_dense()).view())
    }

    /// out = A v
    pub fn matvec_into(&self, v: &ArrayView1<C64>, out: &mut Array1<C64>) {
        debug_assert_eq!(v.len(), self.ncols);
        for i in 0..self.nrows {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.data[k] * v[self.indices[k]];
            }
            out[i] = acc;
        }
    }

    pub fn matvec(&self, v: &ArrayView1<C64>) -> Array1<C64> {
        let mut out = Array1::zeros(self.nrows);
        self.matvec_into(v, &mut out);
        out
    }

    /// A W
    pub fn mul_dense(&self, w: &ArrayView2<C64>) -> Array2<C64> {
        let mut out = Array2::zeros((self.nrows, w.ncols()));
        for i in 0..self.nrows {
            let mut orow = out.row_mut(i);
            for k in self.indptr[i]..self.indptr[i + 1] {
                let v = self.data[k];
                orow.zip_mut_with(&w.row(self.indices[k]), |o, &x| *o += v * x);
            }
        }
        out
    }

    /// W A
    pub fn dense_mul(&self, w: &ArrayView2<C64>) -> Array2<C64> {
        let mut out = Array2::zeros((w.nrows(), self.ncols));
        for (wrow, mut orow) in w.rows().into_iter().zip(out.rows_mut()) {
            for k in 0..self.nrows {
                let x = wrow[k];
                if x == C64::new(0.0, 0.0) {
                    continue;
                }
                for p in self.indptr[k]..self.indptr[k + 1] {
                    orow[self.indices[p]] += x * self.data[p];
                }
            }
        }
        out
    }
}
