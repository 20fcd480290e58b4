use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::Moments;
use crate::error::{LabError, Result};
use crate::spectra::section::SectionSpace;

/// A Hilbert norm on a section space, `‖u‖² = a* G a` for coefficients `a`.
///
/// Dense storage is equilibrated: `G[j][k] = exp((s_j + s_k)/2) * U[j][k]`
/// with `U` of unit diagonal, so entries spanning hundreds of orders of
/// magnitude stay representable.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianForm {
    pub space: SectionSpace,
    pub storage: Storage,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    /// Diagonal matrix with entries `exp(log_diag[j])`.
    LogDiagonal(Vec<f64>),
    Dense { log_scale: Vec<f64>, unit: DMatrix<Complex64> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormFile {
    space: SectionSpace,
    storage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    log_diagonal: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    log_scale: Option<Vec<f64>>,
    /// Rows of `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<Vec<[f64; 2]>>>,
}

impl HermitianForm {
    pub fn log_diagonal(space: SectionSpace, log_diag: Vec<f64>) -> Result<Self> {
        if log_diag.len() != space.d {
            return Err(LabError::Dimension(format!("{} diagonal entries for dimension {}", log_diag.len(), space.d)));
        }
        Ok(HermitianForm { space, storage: Storage::LogDiagonal(log_diag) })
    }

    /// Wrap an explicit matrix; it is symmetrised and equilibrated.
    pub fn from_matrix(space: SectionSpace, m: &DMatrix<Complex64>) -> Result<Self> {
        let d = space.d;
        if m.nrows() != d || m.ncols() != d {
            return Err(LabError::Dimension(format!("{}x{} matrix for dimension {d}", m.nrows(), m.ncols())));
        }
        let diag: Vec<f64> = (0..d).map(|j| m[(j, j)].re).collect();
        if let Some(j) = diag.iter().position(|v| !(*v > 0.0)) {
            return Err(LabError::NotPositiveDefinite(format!("diagonal entry {j} is {:.3e}", diag[j])));
        }
        let log_scale: Vec<f64> = diag.iter().map(|v| v.ln()).collect();
        let mut unit = DMatrix::zeros(d, d);
        for j in 0..d {
            for k in 0..d {
                let v = 0.5 * (m[(j, k)] + m[(k, j)].conj());
                unit[(j, k)] = v / (diag[j] * diag[k]).sqrt();
            }
            unit[(j, j)] = Complex64::new(1.0, 0.0);
        }
        let f = HermitianForm { space, storage: Storage::Dense { log_scale, unit } };
        f.cholesky()?;
        Ok(f)
    }

    /// The Gram matrix carried by a set of moments.
    pub fn from_moments(mo: &Moments) -> Result<Self> {
        if mo.diagonal {
            Self::log_diagonal(mo.space, mo.log_scale.clone())
        } else {
            let f = HermitianForm {
                space: mo.space,
                storage: Storage::Dense { log_scale: mo.log_scale.clone(), unit: mo.gram.clone() },
            };
            f.cholesky()?;
            Ok(f)
        }
    }

    pub fn dim(&self) -> usize {
        self.space.d
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self.storage, Storage::LogDiagonal(_))
    }

    /// Per-element log scales `s_j` and the unit-diagonal matrix `U`.
    pub fn parts(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        match &self.storage {
            Storage::LogDiagonal(v) => (v.clone(), DMatrix::identity(v.len(), v.len())),
            Storage::Dense { log_scale, unit } => (log_scale.clone(), unit.clone()),
        }
    }

    pub fn log_scale(&self) -> &[f64] {
        match &self.storage {
            Storage::LogDiagonal(v) => v,
            Storage::Dense { log_scale, .. } => log_scale,
        }
    }

    /// Cholesky factor of the unit-diagonal part.
    pub fn cholesky(&self) -> Result<Cholesky<Complex64, Dyn>> {
        let (_, u) = self.parts();
        let ch = Cholesky::new(u).ok_or_else(|| LabError::NotPositiveDefinite("Cholesky factorisation failed".into()))?;
        // complex square roots never fail, so a negative pivot shows up as an imaginary diagonal
        let l = ch.l_dirty();
        for j in 0..l.nrows() {
            let v = l[(j, j)];
            if !(v.re > 0.0) || v.im.abs() > 1e-12 * v.re {
                return Err(LabError::NotPositiveDefinite(format!("pivot {j} is {:.3e}", (v * v).re)));
            }
        }
        Ok(ch)
    }

    /// `log det G`.
    pub fn log_det(&self) -> Result<f64> {
        match &self.storage {
            Storage::LogDiagonal(v) => Ok(v.iter().sum()),
            Storage::Dense { log_scale, .. } => {
                let ch = self.cholesky()?;
                let l = ch.l_dirty();
                let ld: f64 = (0..self.dim()).map(|j| 2.0 * l[(j, j)].re.ln()).sum();
                Ok(log_scale.iter().sum::<f64>() + ld)
            }
        }
    }

    /// Smallest eigenvalue of the equilibrated matrix `U`; positive iff `G` is.
    pub fn min_eigenvalue_equilibrated(&self) -> f64 {
        match &self.storage {
            Storage::LogDiagonal(_) => 1.0,
            Storage::Dense { unit, .. } => unit.clone().symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    /// `e^c G`.
    pub fn scaled(&self, c: f64) -> Self {
        let storage = match &self.storage {
            Storage::LogDiagonal(v) => Storage::LogDiagonal(v.iter().map(|s| s + c).collect()),
            Storage::Dense { log_scale, unit } => {
                Storage::Dense { log_scale: log_scale.iter().map(|s| s + c).collect(), unit: unit.clone() }
            }
        };
        HermitianForm { space: self.space, storage }
    }

    /// The full matrix; entries may overflow for extreme scales.
    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let (s, u) = self.parts();
        DMatrix::from_fn(self.dim(), self.dim(), |j, k| u[(j, k)] * (0.5 * (s[j] + s[k])).exp())
    }

    /// `a* G a`.
    pub fn norm_sqr(&self, a: &DVector<Complex64>) -> f64 {
        let (s, u) = self.parts();
        let b = DVector::from_fn(self.dim(), |j, _| a[j] * (0.5 * s[j]).exp());
        (b.adjoint() * &u * &b)[(0, 0)].re
    }

    pub fn to_json(&self) -> Result<String> {
        let file = match &self.storage {
            Storage::LogDiagonal(v) => FormFile {
                space: self.space,
                storage: "log_diagonal".into(),
                log_diagonal: Some(v.clone()),
                log_scale: None,
                entries: None,
            },
            Storage::Dense { log_scale, unit } => FormFile {
                space: self.space,
                storage: "dense".into(),
                log_diagonal: None,
                log_scale: Some(log_scale.clone()),
                entries: Some(
                    (0..self.dim()).map(|j| (0..self.dim()).map(|k| [unit[(j, k)].re, unit[(j, k)].im]).collect()).collect(),
                ),
            },
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: FormFile = serde_json::from_str(s)?;
        let d = f.space.d;
        match f.storage.as_str() {
            "log_diagonal" => {
                let v = f.log_diagonal.ok_or_else(|| LabError::Invalid("missing log_diagonal".into()))?;
                Self::log_diagonal(f.space, v)
            }
            "dense" => {
                let ls = f.log_scale.ok_or_else(|| LabError::Invalid("missing log_scale".into()))?;
                let e = f.entries.ok_or_else(|| LabError::Invalid("missing entries".into()))?;
                if ls.len() != d || e.len() != d || e.iter().any(|r| r.len() != d) {
                    return Err(LabError::Dimension(format!("entries do not match dimension {d}")));
                }
                let unit = DMatrix::from_fn(d, d, |j, k| Complex64::new(e[j][k][0], e[j][k][1]));
                let form = HermitianForm { space: f.space, storage: Storage::Dense { log_scale: ls, unit } };
                form.cholesky()?;
                Ok(form)
            }
            other => Err(LabError::Invalid(format!("unknown storage '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::section::SectionSpace;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_pd(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
        let a = DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        &a * a.adjoint() + DMatrix::identity(d, d) * Complex64::new(0.1, 0.0)
    }

    #[test]
    fn log_det_matches_naive_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sp = SectionSpace::canonical(1, 6).unwrap();
        let m = random_pd(5, &mut rng);
        let f = HermitianForm::from_matrix(sp, &m).unwrap();
        let naive = m.determinant().re.ln();
        assert!((f.log_det().unwrap() - naive).abs() < 1e-10);
        let id = HermitianForm::from_matrix(sp, &DMatrix::identity(5, 5)).unwrap();
        assert!(id.log_det().unwrap().abs() < 1e-15);
        let c = 0.7;
        assert!((f.scaled(2.0 * c).log_det().unwrap() - naive - 2.0 * c * 5.0).abs() < 1e-10);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sp = SectionSpace::canonical(2, 2).unwrap();
        let f = HermitianForm::from_matrix(sp, &random_pd(3, &mut rng)).unwrap();
        let back = HermitianForm::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(f, back);
        let g = HermitianForm::log_diagonal(sp, vec![-1.0, 2.0, 300.0]).unwrap();
        assert_eq!(HermitianForm::from_json(&g.to_json().unwrap()).unwrap(), g);
        assert!(HermitianForm::from_json(r#"{"space":{"k":1,"p":2,"twist":"canonical","d":1},"storage":"x"}"#).is_err());
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let sp = SectionSpace::canonical(1, 3).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]).map(|v| Complex64::new(v, 0.0));
        assert!(matches!(HermitianForm::from_matrix(sp, &m), Err(LabError::NotPositiveDefinite(_))));
    }
}
