//! Flat curves in the space of Hilbert norms.
//!
//! With `v_j` a basis that is `G0`-orthonormal and `G1`-orthogonal,
//! `‖v_j‖²_{G1} = e^{2λ_j}`, the curve `H_s` is `diag(e^{2λ_j s})` in that
//! frame, and its Bergman kernel is `B_s = Σ_j e^{-2λ_j s} |v_j(z)|²`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Result;
use crate::geometry::point::Point;
use crate::quadrature::log_sum_exp;
use crate::spectra::hermitian::Storage;
use crate::spectra::{gen_eigen_capped, GenEigen, HermitianForm};

#[derive(Debug, Clone)]
pub struct FlatHermitianCurve {
    pub g0: HermitianForm,
    pub g1: HermitianForm,
    pub eigen: GenEigen,
}

impl FlatHermitianCurve {
    pub fn new(g0: &HermitianForm, g1: &HermitianForm) -> Result<Self> {
        Self::with_cap(g0, g1, crate::spectra::eigen::DEFAULT_LAMBDA_CAP)
    }

    pub fn with_cap(g0: &HermitianForm, g1: &HermitianForm, cap: f64) -> Result<Self> {
        let eigen = gen_eigen_capped(g0, g1, cap)?;
        Ok(FlatHermitianCurve { g0: g0.clone(), g1: g1.clone(), eigen })
    }

    /// Descending.
    pub fn lambda(&self) -> &[f64] {
        &self.eigen.lambda
    }

    fn diagonal(&self) -> bool {
        self.g0.is_diagonal() && self.g1.is_diagonal()
    }

    /// `H_s` in the monomial frame.
    pub fn form_at(&self, s: f64) -> Result<HermitianForm> {
        if self.diagonal() {
            let a = self.g0.log_scale();
            let b = self.g1.log_scale();
            return HermitianForm::log_diagonal(self.g0.space, a.iter().zip(b).map(|(a, b)| (1.0 - s) * a + s * b).collect());
        }
        // H_s = G0 V D V* G0 with V = E^{-1} W and G0 = E U0 E
        let (s0, u0) = self.g0.parts();
        let w = &self.eigen.unit_basis;
        let d = w.nrows();
        let top = self.eigen.lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let dm = DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new((2.0 * (self.eigen.lambda[i] - top) * s).exp(), 0.0)
            } else {
                Complex64::default()
            }
        });
        let uw = &u0 * w;
        let m = &uw * dm * uw.adjoint();
        let diag: Vec<f64> = (0..d).map(|j| m[(j, j)].re).collect();
        let log_scale: Vec<f64> = (0..d).map(|j| s0[j] + diag[j].ln() + 2.0 * top * s).collect();
        let mut unit = DMatrix::from_fn(d, d, |j, k| {
            let v = 0.5 * (m[(j, k)] + m[(k, j)].conj());
            v / (diag[j] * diag[k]).sqrt()
        });
        for j in 0..d {
            unit[(j, j)] = Complex64::new(1.0, 0.0);
        }
        let f = HermitianForm { space: self.g0.space, storage: Storage::Dense { log_scale, unit } };
        f.cholesky()?;
        Ok(f)
    }

    /// `log ‖v_j‖²_{H_s}` for the form `h`, in the diagonalising frame.
    pub fn frame_log_norms(&self, h: &HermitianForm) -> Vec<f64> {
        let (sh, uh) = h.parts();
        let w = &self.eigen.unit_basis;
        let d = w.nrows();
        // v_j = E0^{-1} w_j; ‖v_j‖² = Σ conj(v_a) G_ab v_b
        let r: Vec<f64> = (0..d).map(|a| 0.5 * (sh[a] - self.eigen.s0[a])).collect();
        let shift = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let scaled = DMatrix::from_fn(d, d, |a, j| w[(a, j)] * (r[a] - shift).exp());
        let g = scaled.adjoint() * uh * &scaled;
        (0..d).map(|j| g[(j, j)].re.ln() + 2.0 * shift).collect()
    }

    /// `log B_s(pt)` through the diagonalising frame.
    pub fn log_kernel(&self, s: f64, pt: &Point) -> f64 {
        let sp = self.g0.space;
        let d = sp.d;
        let lam = &self.eigen.lambda;
        if self.diagonal() {
            let a = self.g0.log_scale();
            let b = self.g1.log_scale();
            return log_sum_exp((0..d).map(|j| log_modulus2(&sp, j, pt) - (1.0 - s) * a[j] - s * b[j]));
        }
        let mut vals = vec![Complex64::default(); d];
        sp.eval(pt, &mut vals);
        let a: Vec<f64> = (0..d).map(|i| 2.0 * vals[i].norm().ln() - self.eigen.s0[i]).collect();
        let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // unit-modulus-scaled section values
        let y: Vec<Complex64> = (0..d)
            .map(|i| {
                let n = vals[i].norm();
                if n > 0.0 {
                    vals[i] / n * (0.5 * (a[i] - m)).exp()
                } else {
                    Complex64::default()
                }
            })
            .collect();
        log_sum_exp((0..d).map(|j| {
            let v: Complex64 = (0..d).map(|i| self.eigen.unit_basis[(i, j)] * y[i]).sum();
            m + v.norm_sqr().ln() - 2.0 * lam[j] * s
        }))
    }
}

fn log_modulus2(sp: &crate::spectra::SectionSpace, j: usize, pt: &Point) -> f64 {
    match pt {
        Point::Radial(x) => sp.radial_log_modulus2(j, *x),
        _ => {
            let mut v = vec![Complex64::default(); sp.d];
            sp.eval(pt, &mut v);
            v[j].norm_sqr().ln()
        }
    }
}
