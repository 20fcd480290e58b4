//! The form `A(mu, u) = e(dbar mu ∧ u)` at level `p`.
//!
//! `mu u` solves `dbar v = dbar mu ∧ u`, so the minimal solution is
//! `mu u - Π(mu u)` and
//!
//! ```text
//! A(mu, u) = ‖dbar mu ∧ u‖^2 - ‖mu u‖^2 + ‖Π(mu u)‖^2.
//! ```
//!
//! At level `p` the Kähler form is `p omega`, which puts a `1/p` on the
//! first term and `1/p^2` on `|dbar V|^2` in the upper bound.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::direct_image::frame::{self, CMat};
use crate::direct_image::gradient::{complex_gradient, dbar_norm2};
use crate::direct_image::path::ComplexField;
use crate::engine::Engine;
use crate::error::Result;
use crate::geometry::fiber::Metric;
use crate::geometry::point::Point;
use crate::spectra::section::SectionSpace;

/// `A_p(mu, .)` as a Hermitian matrix, with the Gram matrix and the
/// `|dbar V_mu|^2` bound, all in the same equilibrated frame.
#[derive(Debug, Clone)]
pub struct AMatrix {
    pub space: SectionSpace,
    pub log_scale: Vec<f64>,
    pub gram: CMat,
    pub a: CMat,
    pub bound: CMat,
}

impl AMatrix {
    /// `A(mu, u)` for coefficients `u` in the monomial frame.
    pub fn form(&self, u: &DVector<Complex64>) -> f64 {
        let e = frame::equilibrate(u, &self.log_scale);
        (e.adjoint() * &self.a * &e)[(0, 0)].re
    }

    pub fn bound_form(&self, u: &DVector<Complex64>) -> f64 {
        let e = frame::equilibrate(u, &self.log_scale);
        (e.adjoint() * &self.bound * &e)[(0, 0)].re
    }

    pub fn norm_sqr(&self, u: &DVector<Complex64>) -> f64 {
        let e = frame::equilibrate(u, &self.log_scale);
        (e.adjoint() * &self.gram * &e)[(0, 0)].re
    }

    /// `A` in a `G`-orthonormal frame.
    pub fn orthonormal(&self) -> Result<CMat> {
        frame::orthonormal(&frame::cholesky_l(&self.gram)?, &self.a)
    }

    /// Coefficients of the `j`-th vector of the orthonormal frame used by
    /// [`AMatrix::orthonormal`], in the monomial frame.
    pub fn orthonormal_vector(&self, j: usize) -> Result<DVector<Complex64>> {
        let l = frame::cholesky_l(&self.gram)?;
        let e = DVector::from_fn(self.space.d, |i, _| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::default() });
        let y = l.adjoint().solve_upper_triangular(&e).expect("non-singular factor");
        Ok(DVector::from_fn(self.space.d, |i, _| y[i] * (-0.5 * self.log_scale[i]).exp()))
    }

    /// `tr G^{-1} A`.
    pub fn trace(&self) -> Result<f64> {
        Ok(frame::trace(&self.orthonormal()?))
    }

    pub fn bound_trace(&self) -> Result<f64> {
        Ok(frame::trace(&frame::orthonormal(&frame::cholesky_l(&self.gram)?, &self.bound)?))
    }
}

/// Assemble `A_p(mu, .)` on the canonical-twist space at level `p`.
pub fn a_matrix(engine: &Engine, m: &Metric, p: u32, mu: &ComplexField) -> Result<AMatrix> {
    let space = SectionSpace::canonical(m.k(), p)?;
    let pf = p as f64;
    let mo = engine.moments(m, space, 4, &|pt: &Point, refp: &Point, out: &mut [Complex64]| {
        let v = mu.value(pt) - mu.value(refp);
        out[0] = Complex64::new(dbar_norm2(m, mu, pt) / pf, 0.0);
        out[1] = Complex64::new(v.norm_sqr(), 0.0);
        out[2] = v;
        out[3] = Complex64::new(complex_gradient(m, mu, pt).dbar_v2 / (pf * pf), 0.0);
    })?;
    let l = frame::cholesky_l(&mo.gram)?;
    let proj = frame::sandwich(&l, &mo.factors[2], &mo.factors[2])?;
    let a = frame::hermitian_part(&(&mo.factors[0] - &mo.factors[1] + proj));
    Ok(AMatrix { space, log_scale: mo.log_scale, gram: mo.gram, a, bound: frame::hermitian_part(&mo.factors[3]) })
}

/// `A(mu, u)` for a single section `u` (monomial coefficients).
pub fn a_form(engine: &Engine, m: &Metric, p: u32, mu: &ComplexField, u: &DVector<Complex64>) -> Result<f64> {
    Ok(a_matrix(engine, m, p, mu)?.form(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EngineMode;
    use crate::geometry::fiber::FiberMetric;
    use crate::geometry::functions::{FiberFunction, SpherePoly};
    use crate::geometry::presets;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn field(f: FiberFunction) -> ComplexField {
        ComplexField::real(Arc::new(f))
    }

    #[test]
    fn constant_and_holomorphic_gradient_give_zero() {
        let e = Engine::default();
        let m = Metric::Toric(presets::fs(1));
        for p in [3u32, 10] {
            let a = a_matrix(&e, &m, p, &field(FiberFunction::Constant(1.5))).unwrap();
            assert!(a.orthonormal().unwrap().norm() < 1e-12);
            let a = a_matrix(&e, &m, p, &field(FiberFunction::fs_moment()).scaled(p as f64)).unwrap();
            let on = a.orthonormal().unwrap();
            for j in 0..a.space.d {
                assert!(on[(j, j)].re.abs() < 1e-8, "p={p} j={j}: {}", on[(j, j)].re);
            }
        }
    }

    #[test]
    fn positivity_bound_and_shift_invariance() {
        let e = Engine::default();
        let dense = Engine { mode: EngineMode::Dense, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let t = presets::fs_bump(1, 0.1, 0.5, 1.0).unwrap();
        let cases: Vec<(Engine, Metric, ComplexField)> = vec![
            (e, Metric::Toric(t.clone()), field(FiberFunction::sech_bump(0.3, 0.7))),
            (
                dense,
                Metric::General(FiberMetric::fubini_study(1)),
                field(FiberFunction::Sphere(SpherePoly::new(vec![([1, 0, 0], 1.0), ([0, 1, 1], 0.5)]))),
            ),
        ];
        for (eng, m, mu) in cases {
            let p = 6;
            let a = a_matrix(&eng, &m, p, &mu).unwrap();
            let shifted = ComplexField {
                re: Arc::new(crate::geometry::functions::FieldSum(vec![
                    (1.0, mu.re.clone()),
                    (1.0, Arc::new(FiberFunction::Constant(3.0))),
                ])),
                im: None,
            };
            let b = a_matrix(&eng, &m, p, &shifted).unwrap();
            for _ in 0..20 {
                let u = DVector::from_fn(a.space.d, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
                let u = DVector::from_fn(a.space.d, |j, _| u[j] * (-0.5 * a.log_scale[j]).exp());
                let n = a.norm_sqr(&u);
                let v = a.form(&u) / n;
                assert!(v >= -1e-10, "{v}");
                assert!(v <= a.bound_form(&u) / n + 1e-8);
                assert!((b.form(&u) / n - v).abs() < 1e-9);
            }
        }
    }
}
