//! Integration over the fiber.
//!
//! Everything the spectral and curvature code needs reduces to moment
//! matrices
//!
//! ```text
//! M_a[j][k] = ∫ F_a  s_k conj(s_j)  e^{-p phi} dν
//! ```
//!
//! with `dν = i dz∧dzbar` for the twisted space and `dν = omega` otherwise.
//! Toric metrics with radial `F_a` give diagonal matrices computed by 1D
//! peak-shifted quadrature in `x = log|z|^2`; everything else goes through a
//! polar product grid on the two unit disks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::fiber::Metric;
use crate::geometry::point::{Chart, Point};
use crate::par;
use crate::quadrature::{find_support, integrate_peaked, integrate_shifted, GaussLegendre, QuadConfig};
use crate::spectra::section::{SectionSpace, Twist};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Samples further than this below the heaviest one are dropped.
const DENSE_LOG_CUTOFF: f64 = 60.0;

/// Integrand factors: `f(point, reference, out)`. The reference point is a
/// heavy point of the current weight, useful for centring before squaring.
pub type PointFn<'a> = dyn Fn(&Point, &Point, &mut [Complex64]) + Sync + 'a;

/// Polar product grid used for non-toric metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChartGrid {
    /// Gauss–Legendre panels (20 nodes each) on `0 <= r <= 1`.
    pub radial_panels: usize,
    /// Trapezoid nodes in the angle.
    pub angles: usize,
    /// Largest `p k` accepted.
    pub max_pk: u32,
}

impl Default for ChartGrid {
    fn default() -> Self {
        ChartGrid { radial_panels: 8, angles: 128, max_pk: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EngineMode {
    /// 1D quadrature for toric metrics, the chart grid otherwise.
    #[default]
    Auto,
    /// Always use the chart grid.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Engine {
    pub quad: QuadConfig,
    pub grid: ChartGrid,
    pub mode: EngineMode,
}

/// Moment matrices in an equilibrated frame.
///
/// With `D = diag(exp(-log_scale / 2))` the true matrices are
/// `D^{-1} gram D^{-1}` and `D^{-1} factors[a] D^{-1}`; `gram` has unit diagonal.
#[derive(Debug, Clone)]
pub struct Moments {
    pub space: SectionSpace,
    pub log_scale: Vec<f64>,
    pub gram: DMatrix<Complex64>,
    pub factors: Vec<DMatrix<Complex64>>,
    pub diagonal: bool,
}

struct Sample {
    pt: Point,
    log_w: f64,
}

impl Engine {
    pub fn new(quad: QuadConfig, grid: ChartGrid, mode: EngineMode) -> Self {
        Engine { quad, grid, mode }
    }

    /// Whether `metric` is handled by the 1D path.
    pub fn is_toric(&self, metric: &Metric) -> bool {
        self.mode == EngineMode::Auto && metric.as_toric().is_some()
    }

    /// Moments of `m` factors; factors must be S¹-invariant when the 1D path is used.
    pub fn moments(&self, metric: &Metric, space: SectionSpace, m: usize, f: &PointFn) -> Result<Moments> {
        if metric.k() != space.k {
            return Err(LabError::Dimension(format!("metric degree {} vs space degree {}", metric.k(), space.k)));
        }
        if self.is_toric(metric) {
            self.toric_moments(metric, space, m, f)
        } else {
            self.dense_moments(metric, space, m, f)
        }
    }

    /// `∫ f_i omega` for `i < m`.
    pub fn integrate_omega(&self, metric: &Metric, m: usize, f: &(dyn Fn(&Point, &mut [f64]) + Sync)) -> Result<Vec<f64>> {
        if let (true, Some(tp)) = (self.is_toric(metric), metric.as_toric()) {
            let eval = |x: f64, out: &mut [f64]| {
                let j = tp.jet(x);
                f(&Point::Radial(x), out);
                j.d2().ln() + TWO_PI.ln()
            };
            let r = integrate_peaked(0.0, m, &eval, &self.quad)?;
            let s = r.shift.exp();
            Ok(r.values.iter().map(|v| v * s).collect())
        } else {
            let samples = self.samples(metric, |loc| loc.g.ln() + 2f64.ln(), None)?;
            let rows = par::map_slice(&samples, |s| {
                let mut out = vec![0.0; m];
                f(&s.pt, &mut out);
                let w = s.log_w.exp();
                out.iter_mut().for_each(|v| *v *= w);
                out
            });
            let mut acc = vec![0.0; m];
            for r in rows {
                for i in 0..m {
                    acc[i] += r[i];
                }
            }
            Ok(acc)
        }
    }

    fn toric_moments(&self, metric: &Metric, space: SectionSpace, m: usize, f: &PointFn) -> Result<Moments> {
        let tp = metric.as_toric().expect("toric metric");
        let p = space.p as f64;
        let twisted = space.twist == Twist::Canonical;
        let log_weight = |j: usize, x: f64| -> f64 {
            let base = space.radial_log_modulus2(j, x) + TWO_PI.ln();
            if twisted {
                base - p * tp.phi(x)
            } else {
                let jt = tp.jet(x);
                base - p * jt.value() + jt.d2().ln()
            }
        };
        let per_j = par::map_range(space.d, |j| -> Result<(f64, Vec<Complex64>)> {
            let h = |x: f64| log_weight(j, x);
            // the weight peaks where phi' = (j+1)/p; start from the FS location
            let q = (j as f64 + 1.0) / (space.d as f64 + 1.0);
            let center = (q / (1.0 - q)).ln();
            let sup = find_support(&h, center, &self.quad)
                .ok_or_else(|| LabError::Quadrature(format!("empty support for basis element {j}")))?;
            let refp = Point::Radial(sup.x_peak);
            let eval = |x: f64, out: &mut [f64]| {
                let mut buf = vec![Complex64::default(); m];
                f(&Point::Radial(x), &refp, &mut buf);
                out[0] = 1.0;
                for (a, v) in buf.iter().enumerate() {
                    out[1 + 2 * a] = v.re;
                    out[2 + 2 * a] = v.im;
                }
                h(x)
            };
            let r = integrate_shifted(sup.a, sup.b, sup.peak, 1 + 2 * m, &eval, &self.quad)?;
            let norm = r.values[0];
            if !(norm > 0.0) {
                return Err(LabError::Quadrature(format!("zero mass for basis element {j}")));
            }
            let means = (0..m).map(|a| Complex64::new(r.values[1 + 2 * a], r.values[2 + 2 * a]) / norm).collect();
            Ok((r.shift + norm.ln(), means))
        });
        let d = space.d;
        let mut log_scale = Vec::with_capacity(d);
        let mut factors = vec![DMatrix::zeros(d, d); m];
        for (j, r) in per_j.into_iter().enumerate() {
            let (ls, means) = r?;
            log_scale.push(ls);
            for (a, v) in means.into_iter().enumerate() {
                factors[a][(j, j)] = v;
            }
        }
        Ok(Moments { space, log_scale, gram: DMatrix::identity(d, d), factors, diagonal: true })
    }

    /// Quadrature points of both unit disks with log-weights `-p w + measure(local)`.
    fn samples(&self, metric: &Metric, measure: impl Fn(&crate::geometry::fiber::Local) -> f64 + Sync, p: Option<f64>) -> Result<Vec<Sample>> {
        let rule = GaussLegendre::g20();
        let np = self.grid.radial_panels.max(1);
        let na = self.grid.angles.max(4);
        let mut radial = Vec::with_capacity(np * rule.nodes.len());
        for i in 0..np {
            let (a, b) = (i as f64 / np as f64, (i + 1) as f64 / np as f64);
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                radial.push((c + h * x, w * h));
            }
        }
        let dth = TWO_PI / na as f64;
        let n_chart = radial.len() * na;
        let pts = par::map_range(2 * n_chart, |idx| {
            let chart = if idx < n_chart { Chart::Zero } else { Chart::One };
            let i = idx % n_chart;
            let (r, wr) = radial[i / na];
            let th = (i % na) as f64 * dth;
            let pt = Point::Chart(chart, Complex64::from_polar(r, th));
            let loc = metric.local(&pt);
            let lw = (r * wr * dth).ln() + measure(&loc) - p.unwrap_or(0.0) * loc.w.v;
            (pt, lw, loc.g)
        });
        let mut out = Vec::with_capacity(pts.len());
        for (pt, lw, g) in pts {
            if !(g > 0.0) {
                return Err(LabError::NotPositive(format!("{}: density {g:.3e} at {pt:?}", metric.name())));
            }
            out.push(Sample { pt, log_w: lw });
        }
        Ok(out)
    }

    fn dense_moments(&self, metric: &Metric, space: SectionSpace, m: usize, f: &PointFn) -> Result<Moments> {
        if space.pk() > self.grid.max_pk {
            return Err(LabError::Invalid(format!(
                "p k = {} exceeds the dense-path limit {}; use a toric metric",
                space.pk(),
                self.grid.max_pk
            )));
        }
        let twisted = space.twist == Twist::Canonical;
        let samples = self.samples(
            metric,
            |loc| if twisted { 2f64.ln() } else { (2.0 * loc.g).ln() },
            Some(space.p as f64),
        )?;
        let (imax, shift) = samples
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s.log_w > acc.1 { (i, s.log_w) } else { acc });
        let refp = samples[imax].pt;
        let kept: Vec<&Sample> = samples.iter().filter(|s| s.log_w > shift - DENSE_LOG_CUTOFF).collect();
        let d = space.d;
        // per sample: weight, section values, factor values
        let rows = par::map_slice(&kept, |s| {
            let mut sec = vec![Complex64::default(); d];
            space.eval(&s.pt, &mut sec);
            let mut fac = vec![Complex64::default(); m];
            f(&s.pt, &refp, &mut fac);
            ((s.log_w - shift).exp(), sec, fac)
        });
        // entries (a, j, k); a = 0 is the Gram matrix, upper triangle only
        let n_gram = d * (d + 1) / 2;
        let tri: Vec<(usize, usize)> = (0..d).flat_map(|j| (j..d).map(move |k| (j, k))).collect();
        let total = n_gram + m * d * d;
        let vals = par::map_range(total, |e| {
            let (a, j, k) = if e < n_gram {
                let (j, k) = tri[e];
                (None, j, k)
            } else {
                let r = e - n_gram;
                (Some(r / (d * d)), (r % (d * d)) / d, r % d)
            };
            let mut acc = Complex64::default();
            for (w, sec, fac) in &rows {
                let base = sec[k] * sec[j].conj() * *w;
                acc += match a {
                    None => base,
                    Some(a) => base * fac[a],
                };
            }
            acc
        });
        let mut gram = DMatrix::<Complex64>::zeros(d, d);
        for (e, &(j, k)) in tri.iter().enumerate() {
            gram[(j, k)] = vals[e];
            gram[(k, j)] = vals[e].conj();
        }
        for j in 0..d {
            gram[(j, j)].im = 0.0;
        }
        let mut factors = vec![DMatrix::<Complex64>::zeros(d, d); m];
        for (r, v) in vals[n_gram..].iter().enumerate() {
            factors[r / (d * d)][((r % (d * d)) / d, r % d)] = *v;
        }
        let diag: Vec<f64> = (0..d).map(|j| gram[(j, j)].re).collect();
        if let Some(j) = diag.iter().position(|v| !(*v > 0.0)) {
            return Err(LabError::NotPositiveDefinite(format!("diagonal entry {j} is {:.3e}", diag[j])));
        }
        let inv_sqrt: Vec<f64> = diag.iter().map(|v| 1.0 / v.sqrt()).collect();
        let scale = |mat: &mut DMatrix<Complex64>| {
            for j in 0..d {
                for k in 0..d {
                    mat[(j, k)] *= inv_sqrt[j] * inv_sqrt[k];
                }
            }
        };
        scale(&mut gram);
        for j in 0..d {
            gram[(j, j)] = Complex64::new(1.0, 0.0);
        }
        factors.iter_mut().for_each(scale);
        let log_scale = diag.iter().map(|v| shift + v.ln()).collect();
        Ok(Moments { space, log_scale, gram, factors, diagonal: false })
    }
}
