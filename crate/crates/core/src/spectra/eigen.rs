//! Symmetric-definite generalized eigenproblem `G1 v = e^{2λ} G0 v`.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::spectra::hermitian::HermitianForm;

/// Default cap on the spread `max λ - min λ`.
pub const DEFAULT_LAMBDA_CAP: f64 = 700.0;

/// Eigenvalues below this fraction of the largest are not trusted in the dense path.
const DENSE_COND_WARN: f64 = 1e12;

/// Result of [`gen_eigen`].
///
/// Basis vectors are stored in the equilibrated frame of `G0`: the actual
/// coefficient vector of the `j`-th basis element is
/// `diag(exp(-s0/2)) * unit_basis.column(j)`.
#[derive(Debug, Clone)]
pub struct GenEigen {
    pub lambda: Vec<f64>,
    pub s0: Vec<f64>,
    pub unit_basis: DMatrix<Complex64>,
    /// Condition estimate of the equilibrated `G0`.
    pub condition: f64,
}

impl GenEigen {
    /// Basis vectors in the monomial frame; may under/overflow for extreme scales.
    pub fn raw_basis(&self) -> DMatrix<Complex64> {
        let mut b = self.unit_basis.clone();
        for (j, mut row) in b.row_iter_mut().enumerate() {
            row *= Complex64::new((-0.5 * self.s0[j]).exp(), 0.0);
        }
        b
    }

    pub fn spread(&self) -> f64 {
        self.lambda.first().unwrap_or(&0.0) - self.lambda.last().unwrap_or(&0.0)
    }
}

/// [`gen_eigen_capped`] with [`DEFAULT_LAMBDA_CAP`].
pub fn gen_eigen(g0: &HermitianForm, g1: &HermitianForm) -> Result<GenEigen> {
    gen_eigen_capped(g0, g1, DEFAULT_LAMBDA_CAP)
}

/// Simultaneous diagonalisation: the basis is `G0`-orthonormal and
/// `G1`-orthogonal with `G1`-norms `e^{2λ_j}`, `λ` descending.
///
/// A spread `max λ - min λ` above half the cap logs a warning; above the cap
/// the problem is rejected.
pub fn gen_eigen_capped(g0: &HermitianForm, g1: &HermitianForm, cap: f64) -> Result<GenEigen> {
    if g0.space != g1.space {
        return Err(LabError::Dimension(format!("{:?} vs {:?}", g0.space, g1.space)));
    }
    let d = g0.dim();
    let (s0, u0) = g0.parts();
    let (s1, u1) = g1.parts();
    let (lambda, unit_basis, condition) = if g0.is_diagonal() && g1.is_diagonal() {
        let lambda: Vec<f64> = (0..d).map(|j| 0.5 * (s1[j] - s0[j])).collect();
        (lambda, DMatrix::identity(d, d), 1.0)
    } else {
        let ch = g0.cholesky()?;
        g1.cholesky()?;
        // G1 in the equilibrated frame of G0
        let r: Vec<f64> = (0..d).map(|j| 0.5 * (s1[j] - s0[j])).collect();
        let shift = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let m = DMatrix::from_fn(d, d, |j, k| u1[(j, k)] * (r[j] + r[k] - 2.0 * shift).exp());
        let l = ch.l();
        let y = l.solve_lower_triangular(&m).ok_or_else(|| LabError::NotPositiveDefinite("singular factor".into()))?;
        let c = l
            .solve_lower_triangular(&y.adjoint())
            .ok_or_else(|| LabError::NotPositiveDefinite("singular factor".into()))?;
        let c = (&c + c.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = c.symmetric_eigen();
        let ev0 = u0.clone().symmetric_eigen().eigenvalues;
        let (lo, hi) = ev0.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        let condition = hi / lo;
        if condition > DENSE_COND_WARN {
            log::warn!("gen_eigen: equilibrated G0 has condition number {condition:.3e}");
        }
        let mut lambda = Vec::with_capacity(d);
        for v in eig.eigenvalues.iter() {
            if !(*v > 0.0) {
                return Err(LabError::IllConditioned(format!(
                    "non-positive eigenvalue {v:.3e} of the reduced pencil (condition estimate {condition:.3e})"
                )));
            }
            lambda.push(0.5 * v.ln() + shift);
        }
        let lstar = l.adjoint();
        let basis = lstar
            .solve_upper_triangular(&eig.eigenvectors)
            .ok_or_else(|| LabError::NotPositiveDefinite("singular factor".into()))?;
        (lambda, basis, condition)
    };
    let mut cols: Vec<(f64, Vec<Complex64>)> = (0..d)
        .map(|j| {
            let mut v: Vec<Complex64> = unit_basis.column(j).iter().cloned().collect();
            normalize_phase(&mut v);
            (lambda[j], v)
        })
        .collect();
    cols.sort_by(|a, b| order_desc(a, b));
    let lambda: Vec<f64> = cols.iter().map(|c| c.0).collect();
    let unit_basis = DMatrix::from_fn(d, d, |i, j| cols[j].1[i]);
    let out = GenEigen { lambda, s0, unit_basis, condition };
    let spread = out.spread();
    if spread > cap {
        return Err(LabError::IllConditioned(format!("eigenvalue spread {spread:.1} exceeds the cap {cap}")));
    }
    if spread > 0.5 * cap {
        log::warn!("gen_eigen: eigenvalue spread {spread:.1} is close to the cap {cap}");
    }
    Ok(out)
}

/// Make the largest-modulus entry (first one on ties) real and positive.
fn normalize_phase(v: &mut [Complex64]) {
    let mut best = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[best].norm() * (1.0 + 1e-12) {
            best = i;
        }
    }
    let n = v[best].norm();
    if n > 0.0 {
        let ph = v[best].conj() / n;
        v.iter_mut().for_each(|z| *z *= ph);
    }
}

fn order_desc(a: &(f64, Vec<Complex64>), b: &(f64, Vec<Complex64>)) -> Ordering {
    let tol = 1e-12 * (1.0 + a.0.abs().max(b.0.abs()));
    if (a.0 - b.0).abs() > tol {
        return b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal);
    }
    // ties: lexicographic on moduli, larger first
    for (x, y) in a.1.iter().zip(&b.1) {
        let (x, y) = (x.norm(), y.norm());
        if (x - y).abs() > 1e-12 {
            return y.partial_cmp(&x).unwrap_or(Ordering::Equal);
        }
    }
    Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::section::SectionSpace;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pd(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
        let a = DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        &a * a.adjoint() + DMatrix::identity(d, d) * Complex64::new(0.1, 0.0)
    }

    #[test]
    fn residuals_are_small_for_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [2usize, 7, 20, 50] {
            let sp = SectionSpace::canonical(1, d as u32 + 1).unwrap();
            let (m0, m1) = (random_pd(d, &mut rng), random_pd(d, &mut rng));
            let g0 = HermitianForm::from_matrix(sp, &m0).unwrap();
            let g1 = HermitianForm::from_matrix(sp, &m1).unwrap();
            let e = gen_eigen(&g0, &g1).unwrap();
            let v = e.raw_basis();
            for j in 0..d {
                let c = v.column(j);
                let lhs = &m1 * c;
                let rhs = &m0 * c * Complex64::new((2.0 * e.lambda[j]).exp(), 0.0);
                assert!((lhs - &rhs).norm() / (&m0 * c).norm() < 1e-10, "d={d} j={j}");
                if j > 0 {
                    assert!(e.lambda[j - 1] >= e.lambda[j]);
                }
            }
            // G0-orthonormal
            let gram = v.adjoint() * &m0 * &v;
            assert!((gram - DMatrix::<Complex64>::identity(d, d)).norm() < 1e-9);
        }
    }

    #[test]
    fn scalar_multiple_gives_constant_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sp = SectionSpace::canonical(1, 5).unwrap();
        let g0 = HermitianForm::from_matrix(sp, &random_pd(4, &mut rng)).unwrap();
        let c = 0.37;
        let e = gen_eigen(&g0, &g0.scaled(2.0 * c)).unwrap();
        assert!(e.lambda.iter().all(|l| (l - c).abs() < 1e-12));
    }

    #[test]
    fn spectrum_is_congruence_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = 6;
        let sp = SectionSpace::canonical(1, 7).unwrap();
        let (m0, m1) = (random_pd(d, &mut rng), random_pd(d, &mut rng));
        let t = DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            + DMatrix::identity(d, d) * Complex64::new(2.0, 0.0);
        let e = gen_eigen(&HermitianForm::from_matrix(sp, &m0).unwrap(), &HermitianForm::from_matrix(sp, &m1).unwrap()).unwrap();
        let f = gen_eigen(
            &HermitianForm::from_matrix(sp, &(t.adjoint() * &m0 * &t)).unwrap(),
            &HermitianForm::from_matrix(sp, &(t.adjoint() * &m1 * &t)).unwrap(),
        )
        .unwrap();
        for (a, b) in e.lambda.iter().zip(&f.lambda) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn diagonal_and_dense_paths_agree() {
        let sp = SectionSpace::canonical(1, 6).unwrap();
        let a = vec![-3.0, 1.0, 4.5, -0.5, 2.0];
        let b = vec![-2.0, 0.0, 7.5, -0.5, 1.0];
        let (ga, gb) = (HermitianForm::log_diagonal(sp, a.clone()).unwrap(), HermitianForm::log_diagonal(sp, b.clone()).unwrap());
        let e = gen_eigen(&ga, &gb).unwrap();
        let dense = |v: &[f64]| {
            let m = DMatrix::from_fn(5, 5, |j, k| if j == k { Complex64::new(v[j].exp(), 0.0) } else { Complex64::default() });
            HermitianForm::from_matrix(sp, &m).unwrap()
        };
        let f = gen_eigen(&dense(&a), &dense(&b)).unwrap();
        assert_eq!(e.lambda, vec![1.5, 0.5, 0.0, -0.5, -0.5]);
        for (x, y) in e.lambda.iter().zip(&f.lambda) {
            assert!((x - y).abs() < 1e-10);
        }
        // the tie is broken the same way on every run
        assert_eq!(e.unit_basis, gen_eigen(&ga, &gb).unwrap().unit_basis);
    }

    #[test]
    fn spread_cap_is_enforced() {
        let sp = SectionSpace::canonical(1, 3).unwrap();
        let ga = HermitianForm::log_diagonal(sp, vec![0.0, 0.0]).unwrap();
        let gb = HermitianForm::log_diagonal(sp, vec![0.0, 100.0]).unwrap();
        assert!(gen_eigen_capped(&ga, &gb, 60.0).is_ok());
        assert!(matches!(gen_eigen_capped(&ga, &gb, 40.0), Err(LabError::IllConditioned(_))));
    }
}
