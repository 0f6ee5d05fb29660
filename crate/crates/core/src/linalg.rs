//! Hermitian eigendecomposition shim.
//!
//! nalgebra's `SymmetricEigen` mispairs eigenvectors on complex matrices
//! with clustered spectra, which every Hamiltonian here has, so the
//! decomposition is delegated to faer and converted back.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian
/// matrix.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = m.nrows();
    let fm = faer::Mat::from_fn(n, n, |i, j| faer::c64::new(m[(i, j)].re, m[(i, j)].im));
    let eig = fm
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| CoreError::Eigendecomposition(format!("{e:?}")))?;
    let values: Vec<f64> = (0..n).map(|i| eig.S()[i].re).collect();
    let u = eig.U();
    let vectors = DMatrix::from_fn(n, n, |i, j| {
        let v = u[(i, j)];
        Complex64::new(v.re, v.im)
    });
    Ok((values, vectors))
}

/// a·b via faer's parallel GEMM; nalgebra's complex product is
/// single-threaded and dominates the encounter loop at the matrix sizes
/// used here.
pub fn matmul(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (m, k) = (a.nrows(), a.ncols());
    let n = b.ncols();
    debug_assert_eq!(k, b.nrows());
    let fa = faer::Mat::from_fn(m, k, |i, j| faer::c64::new(a[(i, j)].re, a[(i, j)].im));
    let fb = faer::Mat::from_fn(k, n, |i, j| faer::c64::new(b[(i, j)].re, b[(i, j)].im));
    let fc = fa * fb;
    DMatrix::from_fn(m, n, |i, j| {
        let v = fc[(i, j)];
        Complex64::new(v.re, v.im)
    })
}
