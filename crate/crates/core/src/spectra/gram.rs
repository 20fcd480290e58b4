//! Gram matrices of the E- and F-type norms.

use crate::engine::Engine;
use crate::error::Result;
use crate::geometry::fiber::Metric;
use crate::spectra::hermitian::HermitianForm;
use crate::spectra::section::SectionSpace;

/// `G_jk = ∫ [u_k, u_j] e^{-p phi}` on `H0(O(pk) ⊗ K)`, `u_j = z^j dz`.
pub fn gram_e(engine: &Engine, m: &Metric, p: u32) -> Result<HermitianForm> {
    let sp = SectionSpace::canonical(m.k(), p)?;
    HermitianForm::from_moments(&engine.moments(m, sp, 0, &|_, _, _| {})?)
}

/// `G_jk = ∫ u_k conj(u_j) e^{-p phi} omega` on `H0(O(pk))`, `u_j = z^j`.
pub fn gram_f(engine: &Engine, m: &Metric, p: u32) -> Result<HermitianForm> {
    let sp = SectionSpace::plain(m.k(), p)?;
    HermitianForm::from_moments(&engine.moments(m, sp, 0, &|_, _, _| {})?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EngineMode;
    use crate::geometry::fiber::FiberMetric;
    use crate::geometry::presets;
    use crate::quadrature::GaussLegendre;
    use std::f64::consts::PI;

    fn ln_fact(n: u32) -> f64 {
        (1..=n).map(|i| (i as f64).ln()).sum()
    }

    #[test]
    fn fs_closed_forms() {
        let e = Engine::default();
        for (k, p) in [(1u32, 3u32), (2, 5), (1, 150)] {
            let m = Metric::Toric(presets::fs(k));
            let n = p * k;
            let ge = gram_e(&e, &m, p).unwrap();
            let gf = gram_f(&e, &m, p).unwrap();
            assert!(ge.is_diagonal() && gf.is_diagonal());
            for (j, v) in ge.log_scale().iter().enumerate() {
                let j = j as u32;
                let want = (2.0 * PI).ln() + ln_fact(j) + ln_fact(n - j - 2) - ln_fact(n - 1);
                assert!((v - want).abs() < 1e-9, "E k={k} p={p} j={j}");
            }
            for (j, v) in gf.log_scale().iter().enumerate() {
                let j = j as u32;
                let want = (2.0 * PI * k as f64).ln() + ln_fact(j) + ln_fact(n - j) - ln_fact(n + 1);
                assert!((v - want).abs() < 1e-9, "F k={k} p={p} j={j}");
            }
        }
        let g = gram_f(&e, &Metric::Toric(presets::fs(1)), 1).unwrap();
        assert!((g.log_scale()[0] - g.log_scale()[1]).abs() < 1e-12);
    }

    #[test]
    fn shift_scales_the_gram_matrix() {
        let e = Engine::default();
        let (p, c) = (6u32, 0.4);
        let a = gram_e(&e, &Metric::Toric(presets::fs(1)), p).unwrap();
        let b = gram_e(&e, &Metric::Toric(presets::fs_shift(1, c)), p).unwrap();
        for (x, y) in a.log_scale().iter().zip(b.log_scale()) {
            assert!((y - x + p as f64 * c).abs() < 1e-10);
        }
    }

    #[test]
    fn single_entry_matches_independent_quadrature() {
        // k = 2, p = 1: one element, ∫ e^{x - 2 softplus(x)} dx over a truncated line
        let e = Engine::default();
        let g = gram_e(&e, &Metric::Toric(presets::fs(2)), 1).unwrap();
        let rule = GaussLegendre::new(40);
        let f = |x: f64| 2.0 * PI * (x - 2.0 * (x.exp().ln_1p())).exp();
        let mut acc = 0.0;
        for i in 0..400 {
            let a = -60.0 + 0.3 * i as f64;
            acc += rule.integrate(a, a + 0.3, f);
        }
        assert!((g.log_scale()[0].exp() - acc).abs() < 1e-10 * acc);
    }

    #[test]
    fn dense_and_toric_paths_agree() {
        let auto = Engine::default();
        let dense = Engine { mode: EngineMode::Dense, ..Default::default() };
        let t = presets::fs_bump(1, 0.1, 0.5, 1.0).unwrap();
        let m = Metric::Toric(t.clone());
        let mg = Metric::General(FiberMetric::from_toric(&t));
        for p in [4u32, 16] {
            for f in [gram_e, gram_f] {
                let a = f(&auto, &m, p).unwrap().to_matrix();
                let b = f(&dense, &mg, p).unwrap().to_matrix();
                for j in 0..a.nrows() {
                    for k in 0..a.ncols() {
                        let scale = (a[(j, j)].re * a[(k, k)].re).sqrt();
                        assert!((a[(j, k)] - b[(j, k)]).norm() < 1e-8 * scale, "p={p} ({j},{k})");
                    }
                }
            }
        }
    }
}
