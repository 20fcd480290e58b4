//! Matrix helpers shared by the curvature code.
//!
//! Matrices live in the equilibrated monomial frame of a Gram matrix: with
//! log scales `s`, the true matrix is `D^{-1} M D^{-1}`, `D = diag(exp(-s/2))`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::ser::{SerializeSeq, Serializer};

use crate::error::{LabError, Result};

pub(crate) type CMat = DMatrix<Complex64>;

/// Lower Cholesky factor of a unit-diagonal Gram matrix.
pub(crate) fn cholesky_l(gram: &CMat) -> Result<CMat> {
    nalgebra::Cholesky::new(gram.clone())
        .map(|c| c.l())
        .ok_or_else(|| LabError::NotPositiveDefinite("Gram matrix".into()))
}

/// `L^{-1} M L^{-*}`: the operator `G^{-1} M` in a `G`-orthonormal frame.
pub(crate) fn orthonormal(l: &CMat, m: &CMat) -> Result<CMat> {
    let fail = || LabError::NotPositiveDefinite("triangular solve".into());
    let y = l.solve_lower_triangular(m).ok_or_else(fail)?;
    let z = l.solve_lower_triangular(&y.adjoint()).ok_or_else(fail)?;
    Ok(hermitian_part(&z.adjoint()))
}

pub(crate) fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `A* G^{-1} B`.
pub(crate) fn sandwich(l: &CMat, a: &CMat, b: &CMat) -> Result<CMat> {
    let fail = || LabError::NotPositiveDefinite("triangular solve".into());
    let ya = l.solve_lower_triangular(a).ok_or_else(fail)?;
    let yb = l.solve_lower_triangular(b).ok_or_else(fail)?;
    Ok(ya.adjoint() * yb)
}

/// Re-express a matrix from the frame with scales `from` in the frame `to`.
pub(crate) fn reframe(m: &CMat, from: &[f64], to: &[f64]) -> CMat {
    let r: Vec<f64> = from.iter().zip(to).map(|(f, t)| 0.5 * (t - f)).collect();
    CMat::from_fn(m.nrows(), m.ncols(), |j, k| m[(j, k)] * (r[j] + r[k]).exp())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub(crate) fn eigenvalues(m: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().cloned().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

pub(crate) fn trace(m: &CMat) -> f64 {
    (0..m.nrows()).map(|j| m[(j, j)].re).sum()
}

/// Coefficients in the monomial frame to the equilibrated frame.
pub(crate) fn equilibrate(a: &DVector<Complex64>, s: &[f64]) -> DVector<Complex64> {
    DVector::from_fn(a.len(), |j, _| a[j] * (0.5 * s[j]).exp())
}

/// Serialise a complex matrix as rows of `[re, im]` pairs.
pub(crate) fn ser_matrix<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for j in 0..m.nrows() {
        let row: Vec<[f64; 2]> = (0..m.ncols()).map(|k| [m[(j, k)].re, m[(j, k)].im]).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

pub(crate) fn ser_opt_matrix<S: Serializer>(m: &Option<CMat>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match m {
        Some(m) => ser_matrix(m, s),
        None => s.serialize_none(),
    }
}
