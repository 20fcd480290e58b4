//! Functionals sampled along a path, with convexity diagnostics.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::direct_image::gradient::c_geodesic;
use crate::direct_image::path::MetricPath;
use crate::engine::Engine;
use crate::error::{LabError, Result};
use crate::functionals::{class_volume, i_energy_closed, l_p, scan_points};
use crate::par;
use crate::spectra::SectionSpace;

/// s-grid and tolerances of a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    pub s_min: f64,
    pub s_max: f64,
    /// Number of grid points, at least 5.
    pub points: usize,
    /// Absolute slack added to the `h^2` term of the convexity tolerance.
    pub slack: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { s_min: 0.0, s_max: 1.0, points: 11, slack: 1e-8 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvexityVerdict {
    /// `min_s min_z c(phi_s)` over the scan points.
    pub min_c: f64,
    pub c_nonnegative: bool,
    pub min_second_difference: f64,
    /// `slack + h^2 max|f''''| / 12`, with `f''''` from the data.
    pub tolerance: f64,
    pub convex: bool,
    /// Convexity is required only when `c >= 0` along the path.
    pub pass: bool,
}

/// `I`, `L_p` and `~L_p` on an s-grid, `t = s`.
#[derive(Debug, Clone, Serialize)]
pub struct FunctionalReport {
    pub path: String,
    pub p: u32,
    pub d: usize,
    pub volume: f64,
    /// Grid step, also the finite-difference step.
    pub h: f64,
    pub s: Vec<f64>,
    pub i: Vec<f64>,
    pub l_p: Vec<f64>,
    pub tilde_l_p: Vec<f64>,
    /// Centred second differences; `None` at the ends.
    pub d2_i: Vec<Option<f64>>,
    pub d2_l_p: Vec<Option<f64>>,
    pub d2_tilde_l_p: Vec<Option<f64>>,
    pub min_c: Vec<f64>,
    pub l_p_convexity: ConvexityVerdict,
}

fn second_differences(f: &[f64], h: f64) -> Vec<Option<f64>> {
    (0..f.len())
        .map(|i| if i == 0 || i + 1 == f.len() { None } else { Some((f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h)) })
        .collect()
}

fn verdict(f: &[f64], h: f64, min_c: f64, slack: f64) -> ConvexityVerdict {
    let d2: Vec<f64> = second_differences(f, h).into_iter().flatten().collect();
    let d4 = second_differences(&d2, h).into_iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let tolerance = slack + h * h * d4 / 12.0;
    let min_d2 = d2.iter().cloned().fold(f64::INFINITY, f64::min);
    let convex = min_d2 >= -tolerance;
    let c_nonnegative = min_c >= 0.0;
    ConvexityVerdict { min_c, c_nonnegative, min_second_difference: min_d2, tolerance, convex, pass: convex || !c_nonnegative }
}

/// Sample the functionals along `path`; `I` is relative to the first grid point.
pub fn functional_report(engine: &Engine, path: &MetricPath, p: u32, cfg: &ReportConfig) -> Result<FunctionalReport> {
    if cfg.points < 5 || !(cfg.s_max > cfg.s_min) {
        return Err(LabError::Invalid(format!("s-grid needs at least 5 points on a proper interval, got {cfg:?}")));
    }
    let n = cfg.points;
    let h = (cfg.s_max - cfg.s_min) / (n - 1) as f64;
    let s: Vec<f64> = (0..n).map(|i| cfg.s_min + h * i as f64).collect();
    let reference = path.metric_at(Complex64::new(s[0], 0.0))?;
    let k = reference.k();
    let d = SectionSpace::canonical(k, p)?.d;
    let volume = class_volume(k);
    let rows = par::map_slice(&s, |&si| -> Result<(f64, f64, f64)> {
        let t = Complex64::new(si, 0.0);
        let at = path.at(t)?;
        let i = i_energy_closed(engine, &at.metric, &reference)?;
        let l = l_p(engine, &at.metric, p)?;
        let c = scan_points(&at.metric).iter().map(|pt| c_geodesic(&at, pt)).fold(f64::INFINITY, f64::min);
        Ok((i, l, c))
    });
    let (mut i, mut lp, mut min_c) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for r in rows {
        let (a, b, c) = r?;
        i.push(a);
        lp.push(b);
        min_c.push(c);
    }
    let tilde: Vec<f64> = lp.iter().zip(&i).map(|(l, i)| l / d as f64 - i / volume).collect();
    let worst_c = min_c.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(FunctionalReport {
        path: path.name.clone(),
        p,
        d,
        volume,
        h,
        d2_i: second_differences(&i, h),
        d2_l_p: second_differences(&lp, h),
        d2_tilde_l_p: second_differences(&tilde, h),
        l_p_convexity: verdict(&lp, h, worst_c, cfg.slack),
        s,
        i,
        l_p: lp,
        tilde_l_p: tilde,
        min_c,
    })
}

#[derive(Serialize)]
struct CsvRow {
    s: f64,
    #[serde(rename = "I")]
    i: f64,
    #[serde(rename = "L_p")]
    l_p: f64,
    #[serde(rename = "tildeL_p")]
    tilde_l_p: f64,
    #[serde(rename = "d2_I")]
    d2_i: Option<f64>,
    #[serde(rename = "d2_L_p")]
    d2_l_p: Option<f64>,
    #[serde(rename = "d2_tildeL_p")]
    d2_tilde_l_p: Option<f64>,
}

impl FunctionalReport {
    /// CSV with columns `s, I, L_p, tildeL_p, d2_I, d2_L_p, d2_tildeL_p`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for j in 0..self.s.len() {
            wr.serialize(CsvRow {
                s: self.s[j],
                i: self.i[j],
                l_p: self.l_p[j],
                tilde_l_p: self.tilde_l_p[j],
                d2_i: self.d2_i[j],
                d2_l_p: self.d2_l_p[j],
                d2_tilde_l_p: self.d2_tilde_l_p[j],
            })
            .map_err(|e| LabError::Invalid(e.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::direct_image::path::{Coef, Term};
    use crate::geodesics::{GeodesicOracle, OracleConfig};
    use crate::geometry::fiber::Metric;
    use crate::geometry::functions::FiberFunction;
    use crate::geometry::presets;

    #[test]
    fn semipositive_paths_are_convex() {
        let e = Engine::default();
        let cfg = ReportConfig { s_min: -0.2, s_max: 0.2, ..Default::default() };
        // (Re t)^2 f with f > 0 has c >= 0 near t = 0
        let path = MetricPath::affine(
            "quadratic",
            Metric::Toric(presets::fs(1)),
            vec![Term::new(Coef::ReT2, FiberFunction::sech_bump(0.0, 1.0)), Term::new(Coef::ReT, FiberFunction::Constant(0.3))],
        );
        let r = functional_report(&e, &path, 6, &cfg).unwrap();
        assert!(r.l_p_convexity.c_nonnegative && r.l_p_convexity.convex && r.l_p_convexity.pass, "{:?}", r.l_p_convexity);
        // d2 I of the shift part vanishes; ~L_p is flat along constant shifts
        let shift = MetricPath::constant_shift(Metric::Toric(presets::fs(1)), 0.8);
        let r = functional_report(&e, &shift, 5, &cfg).unwrap();
        for v in r.tilde_l_p.iter() {
            assert!((v - r.tilde_l_p[0]).abs() < 1e-10);
        }
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,I,L_p,tildeL_p,d2_I,d2_L_p,d2_tildeL_p\n"));
        assert_eq!(text.lines().count(), cfg.points + 1);
    }

    #[test]
    fn pullback_geodesic_report() {
        let e = Engine::default();
        let f = presets::fs_bump(1, 0.1, 0.5, 1.0).unwrap();
        let o = GeodesicOracle::new(&f, &f.translated(0.8), &OracleConfig::default()).unwrap();
        let r = functional_report(&e, &MetricPath::geodesic("translation", o), 4, &ReportConfig { points: 7, ..Default::default() }).unwrap();
        // L_p is affine in s along the translation family
        for v in r.d2_l_p.iter().flatten() {
            assert!(v.abs() < 1e-5, "{v}");
        }
        assert!(r.l_p_convexity.pass);
    }
}
