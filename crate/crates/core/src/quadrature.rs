//! Gauss–Legendre rules, adaptive panel refinement and peak-shifted
//! integration of exponentially weighted integrands.
//!
//! The Gram integrals in this crate look like `∫ exp(h(x)) f(x) dx` where `h`
//! has a sharp maximum for large levels `p`. All integration therefore works
//! with a shift `M ≈ max h` and returns `(M, ∫ exp(h - M) f)`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared 20-point rule.
    pub fn g20() -> &'static GaussLegendre {
        static G: OnceLock<GaussLegendre> = OnceLock::new();
        G.get_or_init(|| GaussLegendre::new(20))
    }

    /// Integrate a scalar function on `[a, b]` with this fixed rule.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Controls adaptive panel refinement.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct QuadConfig {
    /// Relative tolerance per component, measured against `∫ w |f|`.
    pub rel_tol: f64,
    /// Panels the support is initially divided into.
    pub initial_panels: usize,
    /// Absolute tolerance per component, in units of `∫ w`; stops refinement
    /// on components that are rounding noise.
    pub abs_floor: f64,
    /// Hard cap on the number of accepted panels.
    pub max_panels: usize,
    /// The support is truncated where the log-weight drops this far below its peak.
    pub log_drop: f64,
    /// Coarse scan step used to locate the peak of the log-weight.
    pub scan_step: f64,
    /// Half-width of the scan window.
    pub scan_half_width: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: 1e-10,
            abs_floor: 1e-15,
            initial_panels: 12,
            max_panels: 4000,
            log_drop: 48.0,
            scan_step: 0.25,
            scan_half_width: 80.0,
        }
    }
}

/// Result of a peak-shifted integration: true integrals are `exp(shift) * values`.
#[derive(Debug, Clone)]
pub struct Shifted {
    pub shift: f64,
    pub values: Vec<f64>,
    pub abs: Vec<f64>,
}

/// Interval carrying the mass of `exp(h)`.
#[derive(Debug, Clone, Copy)]
pub struct Support {
    pub a: f64,
    pub b: f64,
    /// Largest sampled value of `h`.
    pub peak: f64,
    /// Where it was sampled.
    pub x_peak: f64,
}

/// Locate `max h` on a coarse grid and the interval where `h > max - drop`.
///
/// `None` if `h` is `-inf` everywhere on the scan.
pub fn find_support(h: &dyn Fn(f64) -> f64, center: f64, cfg: &QuadConfig) -> Option<Support> {
    let n = (2.0 * cfg.scan_half_width / cfg.scan_step).ceil() as usize;
    let lo = center - cfg.scan_half_width;
    let mut best = f64::NEG_INFINITY;
    let mut best_x = center;
    for i in 0..=n {
        let x = lo + i as f64 * cfg.scan_step;
        let v = h(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    if !best.is_finite() {
        return None;
    }
    let cut = best - cfg.log_drop;
    let step = 0.5;
    let mut a = best_x;
    let mut run = 0;
    // walk until two consecutive samples are below the cut
    while a > best_x - 400.0 {
        a -= step;
        if h(a) < cut {
            run += 1;
            if run == 2 {
                break;
            }
        } else {
            run = 0;
        }
    }
    let mut b = best_x;
    run = 0;
    while b < best_x + 400.0 {
        b += step;
        if h(b) < cut {
            run += 1;
            if run == 2 {
                break;
            }
        } else {
            run = 0;
        }
    }
    Some(Support { a, b, peak: best, x_peak: best_x })
}

/// Adaptive integration of `exp(h(x) - shift) * f_i(x)` on `[a, b]` for `m` components.
///
/// `eval(x, out)` fills `out[..m]` with `f_i(x)` and returns `h(x)`.
pub fn integrate_shifted<F>(a: f64, b: f64, shift: f64, m: usize, eval: &F, cfg: &QuadConfig) -> Result<Shifted>
where
    F: Fn(f64, &mut [f64]) -> f64 + ?Sized,
{
    let rule = GaussLegendre::g20();
    let mut buf = vec![0.0; m];
    let mut mass = 0.0;
    let mut panel = |lo: f64, hi: f64| -> (Vec<f64>, Vec<f64>) {
        let c = 0.5 * (lo + hi);
        let h = 0.5 * (hi - lo);
        let mut v = vec![0.0; m];
        let mut ab = vec![0.0; m];
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let xx = c + h * x;
            let lw = eval(xx, &mut buf);
            let ew = (lw - shift).exp() * w * h;
            if ew == 0.0 || !ew.is_finite() {
                continue;
            }
            for i in 0..m {
                v[i] += ew * buf[i];
                ab[i] += ew * buf[i].abs();
            }
        }
        (v, ab)
    };

    let n0 = cfg.initial_panels.max(1);
    let width = (b - a) / n0 as f64;
    let mut pending: Vec<(f64, f64, Vec<f64>, Vec<f64>)> = (0..n0)
        .map(|i| {
            let lo = a + i as f64 * width;
            let hi = lo + width;
            let (v, ab) = panel(lo, hi);
            (lo, hi, v, ab)
        })
        .collect();
    let weight = |lo: f64, hi: f64| -> f64 {
        let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let mut tmp = vec![0.0; m];
        rule.nodes.iter().zip(&rule.weights).map(|(x, w)| (eval(c + h * x, &mut tmp) - shift).exp() * w * h).filter(|v| v.is_finite()).sum::<f64>()
    };
    for (lo, hi, _, _) in &pending {
        mass += weight(*lo, *hi);
    }
    let floor = cfg.abs_floor * mass;
    let mut scale = vec![0.0; m];
    for (_, _, _, ab) in &pending {
        for i in 0..m {
            scale[i] += ab[i];
        }
    }
    let mut total = vec![0.0; m];
    let mut total_abs = vec![0.0; m];
    let mut accepted = 0usize;
    // depth-first with an explicit stack; panels are visited in a fixed order
    pending.reverse();
    while let Some((lo, hi, v, _)) = pending.pop() {
        let mid = 0.5 * (lo + hi);
        let (v1, a1) = panel(lo, mid);
        let (v2, a2) = panel(mid, hi);
        let ok = (0..m).all(|i| {
            let diff = (v[i] - v1[i] - v2[i]).abs();
            diff <= 0.1 * (cfg.rel_tol * scale[i] + floor) || diff == 0.0
        });
        if ok || hi - lo < 1e-9 {
            for i in 0..m {
                total[i] += v1[i] + v2[i];
                total_abs[i] += a1[i] + a2[i];
            }
            accepted += 1;
            if accepted > cfg.max_panels {
                return Err(LabError::Quadrature(format!(
                    "more than {} panels on [{a:.3}, {b:.3}]",
                    cfg.max_panels
                )));
            }
        } else {
            pending.push((mid, hi, v2, a2));
            pending.push((lo, mid, v1, a1));
            if pending.len() > cfg.max_panels {
                return Err(LabError::Quadrature(format!(
                    "refinement exceeded {} pending panels on [{a:.3}, {b:.3}]",
                    cfg.max_panels
                )));
            }
        }
    }
    Ok(Shifted { shift, values: total, abs: total_abs })
}

/// Locate the support of `h` and integrate `exp(h - max h) f_i` over it.
pub fn integrate_peaked<F>(center: f64, m: usize, eval: &F, cfg: &QuadConfig) -> Result<Shifted>
where
    F: Fn(f64, &mut [f64]) -> f64 + ?Sized,
{
    let h = |x: f64| {
        let mut s = vec![0.0; m];
        eval(x, &mut s)
    };
    let s = find_support(&h, center, cfg)
        .ok_or_else(|| LabError::Quadrature("integrand vanishes on the scan window".into()))?;
    integrate_shifted(s.a, s.b, s.peak, m, eval, cfg)
}

/// Stable `ln Σ exp(a_i)`.
pub fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
