//! Bergman geodesics `phi_(p)(s) = (log B_s(p) - chi) / p` and their distance
//! to the toric geodesic.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::{LabError, Result};
use crate::geodesics::flat::FlatHermitianCurve;
use crate::geodesics::oracle::GeodesicOracle;
use crate::geometry::fiber::Metric;
use crate::geometry::point::Point;
use crate::par;
use crate::spectra::{gen_eigen, gram_e, BergmanKernel};

/// The weight `chi = -2 log(1 + |z|²) + offset` on `K_Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalWeight {
    pub offset: f64,
}

impl CanonicalWeight {
    /// Offset `log(k / 2π)`: then `phi_(p) - phi_FS = log(p - 1/k) / p` exactly.
    pub fn normalized(k: u32) -> Self {
        CanonicalWeight { offset: (k as f64 / (2.0 * PI)).ln() }
    }

    /// `chi` in the trivialisation of `pt`; `dz = z dζ` in the radial pseudo-chart.
    pub fn value(&self, pt: &Point) -> f64 {
        let base = match pt {
            Point::Radial(x) => x - 2.0 * softplus(*x),
            Point::Chart(_, z) => -2.0 * z.norm_sqr().ln_1p(),
        };
        base + self.offset
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// The Bergman geodesic at level `p` between two metrics.
#[derive(Debug, Clone)]
pub struct BergmanGeodesic {
    pub p: u32,
    pub curve: FlatHermitianCurve,
    pub chi: CanonicalWeight,
}

impl BergmanGeodesic {
    pub fn new(engine: &Engine, phi0: &Metric, phi1: &Metric, p: u32, chi: CanonicalWeight, cap: f64) -> Result<Self> {
        if phi0.k() != phi1.k() {
            return Err(LabError::Dimension(format!("endpoint degrees {} and {}", phi0.k(), phi1.k())));
        }
        let g0 = gram_e(engine, phi0, p)?;
        let g1 = gram_e(engine, phi1, p)?;
        let curve = FlatHermitianCurve::with_cap(&g0, &g1, cap)
            .map_err(|e| LabError::IllConditioned(format!("p = {p}: {e}")))?;
        Ok(BergmanGeodesic { p, curve, chi })
    }

    pub fn log_kernel(&self, s: f64, pt: &Point) -> f64 {
        self.curve.log_kernel(s, pt)
    }

    /// `phi_(p)(s, pt)`.
    pub fn phi(&self, s: f64, pt: &Point) -> f64 {
        (self.log_kernel(s, pt) - self.chi.value(pt)) / self.p as f64
    }
}

/// Grid of a sup-distance run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistanceGrid {
    /// `s = 0, 1/(n-1), ..., 1`.
    pub s_points: usize,
    pub x_points: usize,
    pub x_half_width: f64,
}

impl Default for DistanceGrid {
    fn default() -> Self {
        DistanceGrid { s_points: 21, x_points: 401, x_half_width: 15.0 }
    }
}

impl DistanceGrid {
    pub fn s_values(&self) -> Vec<f64> {
        let n = self.s_points.max(2);
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    pub fn x_values(&self) -> Vec<f64> {
        let n = self.x_points.max(2);
        (0..n).map(|i| -self.x_half_width + 2.0 * self.x_half_width * i as f64 / (n - 1) as f64).collect()
    }
}

/// `phi*_s(x)` tabulated once for runs at several `p`.
#[derive(Debug, Clone)]
pub struct SampledGeodesic {
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    /// Row-major in `s`.
    pub values: Vec<f64>,
}

impl SampledGeodesic {
    pub fn new(oracle: &GeodesicOracle, grid: &DistanceGrid) -> Result<Self> {
        let s = grid.s_values();
        let x = grid.x_values();
        let pts: Vec<(f64, f64)> = s.iter().flat_map(|&si| x.iter().map(move |&xi| (si, xi))).collect();
        let values = par::map_slice(&pts, |&(si, xi)| oracle.phi(si, xi)).into_iter().collect::<Result<_>>()?;
        Ok(SampledGeodesic { s, x, values })
    }
}

/// `e(p) = sup |phi_(p) - phi*|` over the sampled grid.
pub fn sup_distance(geo: &BergmanGeodesic, star: &SampledGeodesic) -> f64 {
    let nx = star.x.len();
    let rows = par::map_slice(&star.s, |&s| {
        let i = star.s.iter().position(|v| *v == s).unwrap_or(0);
        star.x.iter().enumerate().map(|(j, &x)| (geo.phi(s, &Point::Radial(x)) - star.values[i * nx + j]).abs()).fold(0.0, f64::max)
    });
    rows.into_iter().fold(0.0, f64::max)
}

/// Comparison of the flat curve against `Hilb(p phi*_s)`.
#[derive(Debug, Clone, Serialize)]
pub struct Domination {
    pub s: Vec<f64>,
    /// `min_x (B_s / B_{p phi*_s} - 1)` per `s`.
    pub pointwise: Vec<f64>,
    /// `e^{2 λ_min} - 1` for the pencil `(H_s, Hilb(p phi*_s))` per `s`.
    pub form: Vec<f64>,
    pub slack: f64,
    pub pass: bool,
}

/// Check `B_s ≥ B_{p phi*_s}` on `x_list` and `H_s ≤ Hilb(p phi*_s)` at each `s`.
pub fn domination(engine: &Engine, geo: &BergmanGeodesic, oracle: &GeodesicOracle, s_list: &[f64], x_list: &[f64], slack: f64) -> Result<Domination> {
    let rows = par::map_slice(s_list, |&s| -> Result<(f64, f64)> {
        let star = Metric::Toric(oracle.profile_at(s));
        let g = gram_e(engine, &star, geo.p)?;
        let bk = BergmanKernel::new(&g)?;
        let pw = x_list
            .iter()
            .map(|&x| {
                let pt = Point::Radial(x);
                (geo.log_kernel(s, &pt) - bk.log_kernel(&pt)).exp_m1()
            })
            .fold(f64::INFINITY, f64::min);
        let h = geo.curve.form_at(s)?;
        let lam = gen_eigen(&h, &g)?.lambda.last().copied().unwrap_or(0.0);
        Ok((pw, (2.0 * lam).exp_m1()))
    });
    let (mut pointwise, mut form) = (Vec::new(), Vec::new());
    for r in rows {
        let (a, b) = r?;
        pointwise.push(a);
        form.push(b);
    }
    let pass = pointwise.iter().chain(&form).all(|v| *v >= -slack);
    Ok(Domination { s: s_list.to_vec(), pointwise, form, slack, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesics::oracle::OracleConfig;
    use crate::geometry::presets;
    use crate::spectra::eigen::DEFAULT_LAMBDA_CAP;
    use num_complex::Complex64;

    fn fs() -> Metric {
        Metric::Toric(presets::fs(1))
    }

    #[test]
    fn chi_matches_across_trivialisations() {
        let chi = CanonicalWeight { offset: 0.0 };
        let z = Complex64::new(0.7, -1.2);
        let x = z.norm_sqr().ln();
        assert!((chi.value(&Point::Radial(x)) - x - chi.value(&Point::chart0(z))).abs() < 1e-14);
        assert!((chi.value(&Point::chart1(z)) - chi.value(&Point::chart0(z))).abs() < 1e-14);
    }

    #[test]
    fn fs_endpoint_remainder_is_exact() {
        let e = Engine::default();
        for p in [3u32, 20] {
            let g = BergmanGeodesic::new(&e, &fs(), &fs(), p, CanonicalWeight::normalized(1), DEFAULT_LAMBDA_CAP).unwrap();
            let want = (p as f64 - 1.0).ln() / p as f64;
            for (s, x) in [(0.0, -6.0), (0.4, 0.3), (1.0, 8.0)] {
                let v = g.phi(s, &Point::Radial(x)) - presets::fs(1).phi(x);
                assert!((v - want).abs() < 1e-10, "p={p} s={s} x={x}: {v} vs {want}");
            }
        }
    }

    #[test]
    fn constant_shift_endpoints_move_linearly() {
        let e = Engine::default();
        let c = 0.3;
        let g = BergmanGeodesic::new(&e, &fs(), &Metric::Toric(presets::fs_shift(1, c)), 8, CanonicalWeight::normalized(1), DEFAULT_LAMBDA_CAP)
            .unwrap();
        assert!(g.curve.lambda().iter().all(|l| (l + 0.5 * 8.0 * c).abs() < 1e-9));
        for x in [-2.0, 1.5] {
            let pt = Point::Radial(x);
            assert!((g.phi(0.6, &pt) - g.phi(0.0, &pt) - 0.6 * c).abs() < 1e-10);
        }
    }

    #[test]
    fn distance_shrinks_and_domination_holds() {
        let e = Engine::default();
        let (a, b) = (presets::fs(1), presets::fs_bump(1, 0.1, 0.5, 1.0).unwrap());
        let o = GeodesicOracle::new(&a, &b, &OracleConfig::default()).unwrap();
        let grid = DistanceGrid { s_points: 11, x_points: 161, ..Default::default() };
        let star = SampledGeodesic::new(&o, &grid).unwrap();
        let chi = CanonicalWeight::normalized(1);
        let mut last = f64::INFINITY;
        for p in [8u32, 16, 32] {
            let g = BergmanGeodesic::new(&e, &Metric::Toric(a.clone()), &Metric::Toric(b.clone()), p, chi, DEFAULT_LAMBDA_CAP).unwrap();
            let d = sup_distance(&g, &star);
            assert!(d < last, "p={p}: {d} vs {last}");
            last = d;
            if p == 16 {
                let dom = domination(&e, &g, &o, &[0.25, 0.5, 0.75], &grid.x_values(), 1e-8).unwrap();
                assert!(dom.pass, "{dom:?}");
            }
        }
    }

    #[test]
    fn common_constant_leaves_the_distance_unchanged() {
        let e = Engine::default();
        let (a, b) = (presets::fs(1), presets::fs_bump(1, 0.1, 0.5, 1.0).unwrap());
        let grid = DistanceGrid { s_points: 6, x_points: 81, ..Default::default() };
        let chi = CanonicalWeight::normalized(1);
        let run = |a: &crate::geometry::toric::ToricPotential, b: &crate::geometry::toric::ToricPotential| {
            let o = GeodesicOracle::new(a, b, &OracleConfig::default()).unwrap();
            let g = BergmanGeodesic::new(&e, &Metric::Toric(a.clone()), &Metric::Toric(b.clone()), 10, chi, DEFAULT_LAMBDA_CAP).unwrap();
            sup_distance(&g, &SampledGeodesic::new(&o, &grid).unwrap())
        };
        let d0 = run(&a, &b);
        let d1 = run(&a.shifted(0.4), &b.shifted(0.4));
        assert!((d0 - d1).abs() < 1e-9, "{d0} {d1}");
    }
}
