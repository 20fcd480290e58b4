//! Kähler data of a metric: density, scalar curvature, volume.
//!
//! Conventions: `omega = i g dz∧dzbar` in a chart and
//! `S = -(d/dz d/dzbar log g) / g`, so Fubini–Study on O(k) has `S = 2/k`
//! and `∫ S omega = 4π` for every metric.

use num_complex::Complex64;
use serde::Serialize;

use crate::engine::Engine;
use crate::error::{LabError, Result};
use crate::geometry::fiber::Metric;
use crate::geometry::point::Point;
use crate::geometry::toric::PositivityReport;

/// `g` with `omega = i g dz∧dzbar`; at radial points `phi''(x)`.
pub fn kahler_density(m: &Metric, pt: &Point) -> Result<f64> {
    let g = m.local(pt).g;
    if !(g > 0.0) {
        return Err(LabError::NotPositive(format!("{}: density {g:.3e} at {pt:?}", m.name())));
    }
    Ok(g)
}

/// Step used for finite-difference Laplacians in charts.
const FD_STEP: f64 = 2e-3;

fn ln_density(m: &Metric, pt: &Point) -> f64 {
    m.local(pt).g.ln()
}

/// Scalar curvature.
pub fn scalar_curvature(m: &Metric, pt: &Point) -> f64 {
    match (m, pt) {
        (Metric::Toric(t), _) => {
            let x = pt.log_modulus2();
            let j = t.jet(x);
            let (g, g1, g2) = (j.d2(), j.d(3), j.d(4));
            let lap = g2 / g - (g1 / g) * (g1 / g);
            -lap / g
        }
        (Metric::General(_), Point::Chart(..)) => {
            // five-point Laplacian of log g, Richardson-extrapolated
            let lap = |h: f64| {
                let c = ln_density(m, pt);
                let s: f64 = [Complex64::new(h, 0.0), Complex64::new(-h, 0.0), Complex64::new(0.0, h), Complex64::new(0.0, -h)]
                    .iter()
                    .map(|d| ln_density(m, &pt.offset(*d)))
                    .sum();
                (s - 4.0 * c) / (h * h)
            };
            let l = (4.0 * lap(FD_STEP / 2.0) - lap(FD_STEP)) / 3.0;
            // d/dz d/dzbar = Laplacian / 4
            -0.25 * l / m.local(pt).g
        }
        (Metric::General(_), Point::Radial(_)) => panic!("radial point for a non-toric metric"),
    }
}

/// Volume `∫ omega`.
pub fn volume(m: &Metric, engine: &Engine) -> Result<f64> {
    Ok(engine.integrate_omega(m, 1, &|_, o| o[0] = 1.0)?[0])
}

/// `∫ S omega`.
pub fn total_scalar_curvature(m: &Metric, engine: &Engine) -> Result<f64> {
    Ok(engine.integrate_omega(m, 1, &|pt, o| o[0] = scalar_curvature(m, pt))?[0])
}

/// Average scalar curvature `Ŝ = ∫ S omega / Vol`.
pub fn mean_scalar_curvature(m: &Metric, engine: &Engine) -> Result<f64> {
    let v = engine.integrate_omega(m, 2, &|pt, o| {
        o[0] = 1.0;
        o[1] = scalar_curvature(m, pt);
    })?;
    Ok(v[1] / v[0])
}

/// Summary of the Kähler data of a metric.
#[derive(Debug, Clone, Serialize)]
pub struct KahlerData {
    pub volume: f64,
    pub total_scalar_curvature: f64,
    pub mean_scalar_curvature: f64,
    pub positivity: PositivityReport,
}

impl KahlerData {
    pub fn compute(m: &Metric, engine: &Engine) -> Result<Self> {
        let positivity = check_positivity(m);
        if !positivity.positive {
            return Err(LabError::NotPositive(format!("{}: margin {:.3e}", m.name(), positivity.min_margin)));
        }
        let v = engine.integrate_omega(m, 2, &|pt, o| {
            o[0] = 1.0;
            o[1] = scalar_curvature(m, pt);
        })?;
        Ok(KahlerData {
            volume: v[0],
            total_scalar_curvature: v[1],
            mean_scalar_curvature: v[1] / v[0],
            positivity,
        })
    }
}

/// Scan the density and report the worst margin.
pub fn check_positivity(m: &Metric) -> PositivityReport {
    m.positivity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EngineMode;
    use crate::geometry::fiber::FiberMetric;
    use crate::geometry::functions::SpherePoly;
    use crate::geometry::presets;
    use crate::geometry::toric::ToricPotential;
    use crate::jet::Jet1;
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn fs_curvature_is_constant() {
        for k in [1u32, 2, 5] {
            let m = Metric::Toric(presets::fs(k));
            for x in [-12.0, -1.0, 0.0, 3.3, 15.0] {
                assert!((scalar_curvature(&m, &Point::Radial(x)) - 2.0 / k as f64).abs() < 1e-8);
            }
            let g = Metric::General(FiberMetric::fubini_study(k));
            for z in [Complex64::new(0.2, 0.9), Complex64::new(-0.6, -0.3)] {
                let s = scalar_curvature(&g, &Point::chart0(z));
                assert!((s - 2.0 / k as f64).abs() < 1e-6, "{s}");
            }
        }
    }

    #[test]
    fn density_matches_finite_differences_of_profile() {
        let t = presets::fs_bump(1, 0.1, 0.5, 1.0).unwrap();
        let m = Metric::Toric(t.clone());
        let x = 0.4;
        for h in [1e-2, 5e-3] {
            let fd = (t.phi(x + h) - 2.0 * t.phi(x) + t.phi(x - h)) / (h * h);
            let g = kahler_density(&m, &Point::Radial(x)).unwrap();
            assert!((fd - g).abs() < 0.05 * h * h, "h={h}");
        }
    }

    #[test]
    fn volume_and_total_curvature_are_invariant() {
        let e = Engine::default();
        let fs = Metric::Toric(presets::fs(1));
        let bump = Metric::Toric(presets::fs_bump(1, 0.1, 0.5, 1.0).unwrap());
        let v0 = volume(&fs, &e).unwrap();
        let v1 = volume(&bump, &e).unwrap();
        assert!((v0 - 2.0 * PI).abs() < 1e-9 && (v1 - v0).abs() < 1e-8);
        assert!((volume(&Metric::Toric(presets::fs(3)), &e).unwrap() / v0 - 3.0).abs() < 1e-10);
        let s0 = total_scalar_curvature(&fs, &e).unwrap();
        let s1 = total_scalar_curvature(&bump, &e).unwrap();
        assert!((s0 - 4.0 * PI).abs() < 1e-8 && ((s1 - s0) / s0).abs() < 1e-6);
        let dense = Engine { mode: EngineMode::Dense, ..Default::default() };
        let g = Metric::General(FiberMetric::fs_plus_poly(1, 0.05, SpherePoly::new(vec![([1, 0, 0], 1.0)])).unwrap());
        assert!((volume(&g, &dense).unwrap() - 2.0 * PI).abs() < 1e-8);
        let sg = total_scalar_curvature(&g, &dense).unwrap();
        assert!(((sg - 4.0 * PI) / (4.0 * PI)).abs() < 1e-6, "{sg}");
    }

    #[test]
    fn positivity_scan() {
        let fs = Metric::Toric(presets::fs(2));
        let r = check_positivity(&fs);
        assert!(r.positive && r.min_margin > 0.0);
        let bad = ToricPotential::new_unchecked(1, "bad", Arc::new(|x: Jet1| x.softplus() - x.softplus() * 2.0));
        assert!(!check_positivity(&Metric::Toric(bad)).positive);
    }
}
