//! Energy functionals on the space of metrics.
//!
//! ```text
//! I'.mu    = ∫ mu omega
//! L_p      = -(1/p) log det G_E(phi, p)           L_p'.mu = ∫ mu B e^{-p phi}
//! ~L_p     = L_p / d_p - I / Vol                  ~L_p'.mu = ∫ mu sigma_p omega
//! M'.mu    = ∫ mu (S - Ŝ) omega
//! ```
//!
//! `I` and the Mabuchi energy are normalised to vanish at a reference metric.

pub mod report;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::direct_image::asymptotics::a_limit;
use crate::direct_image::frame;
use crate::direct_image::gradient::c_geodesic;
use crate::direct_image::path::{Coef, MetricPath, Term};
use crate::engine::Engine;
use crate::error::{LabError, Result};
use crate::geometry::fiber::Metric;
use crate::geometry::functions::ScalarField;
use crate::geometry::kahler::scalar_curvature;
use crate::geometry::point::Point;
use crate::jet::{Jet1, Jet2};
use crate::quadrature::GaussLegendre;
use crate::spectra::{gram_e, BergmanKernel, SectionSpace};

pub use report::{functional_report, ConvexityVerdict, FunctionalReport, ReportConfig};

/// `Vol = ∫ omega = 2π k`.
pub fn class_volume(k: u32) -> f64 {
    2.0 * PI * k as f64
}

/// `phi - phi0` as a function on the fiber.
#[derive(Clone)]
pub struct Difference {
    pub phi: Metric,
    pub phi0: Metric,
}

impl ScalarField for Difference {
    fn chart_jet(&self, pt: &Point) -> Jet2 {
        self.phi.weight_jet(pt) - self.phi0.weight_jet(pt)
    }

    fn radial_jet(&self, x: f64) -> Jet1 {
        match (&self.phi, &self.phi0) {
            (Metric::Toric(a), Metric::Toric(b)) => a.jet(x) - b.jet(x),
            _ => panic!("radial jet of a non-toric difference"),
        }
    }

    fn is_radial(&self) -> bool {
        self.phi.as_toric().is_some() && self.phi0.as_toric().is_some()
    }
}

fn same_degree(a: &Metric, b: &Metric) -> Result<()> {
    if a.k() != b.k() {
        return Err(LabError::Dimension(format!("degrees {} and {}", a.k(), b.k())));
    }
    Ok(())
}

/// The affine segment `phi0 + s (phi - phi0)`, `s = Re t`.
pub fn segment(phi0: &Metric, phi: &Metric) -> MetricPath {
    let diff = Difference { phi: phi.clone(), phi0: phi0.clone() };
    MetricPath::affine(format!("segment({},{})", phi0.name(), phi.name()), phi0.clone(), vec![Term::new(Coef::ReT, diff)])
}

/// `∫_0^1 f(s) ds` by 20-point Gauss–Legendre.
fn integrate_s(f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let rule = GaussLegendre::g20();
    let mut acc = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        acc += w * f(0.5 * (1.0 + x))?;
    }
    Ok(0.5 * acc)
}

/// `I(phi) - I(phi0)` by integrating `I'` along the affine segment.
///
/// Fails with `NotPositive` if the segment leaves the space of metrics.
pub fn i_energy(engine: &Engine, phi: &Metric, phi0: &Metric) -> Result<f64> {
    same_degree(phi, phi0)?;
    let seg = segment(phi0, phi);
    let psi = Difference { phi: phi.clone(), phi0: phi0.clone() };
    integrate_s(|s| {
        let m = seg.metric_at(Complex64::new(s, 0.0))?;
        Ok(engine.integrate_omega(&m, 1, &|pt, o| o[0] = psi.value(pt))?[0])
    })
}

/// The closed form `I(phi) - I(phi0) = ∫ psi (omega_0 + omega_phi) / 2` valid on curves.
pub fn i_energy_closed(engine: &Engine, phi: &Metric, phi0: &Metric) -> Result<f64> {
    same_degree(phi, phi0)?;
    let psi = Difference { phi: phi.clone(), phi0: phi0.clone() };
    let a = engine.integrate_omega(phi0, 1, &|pt, o| o[0] = psi.value(pt))?[0];
    let b = engine.integrate_omega(phi, 1, &|pt, o| o[0] = psi.value(pt))?[0];
    Ok(0.5 * (a + b))
}

/// `L_p(phi) = -(1/p) log det G_E(phi, p)` in the monomial frame.
pub fn l_p(engine: &Engine, phi: &Metric, p: u32) -> Result<f64> {
    Ok(-gram_e(engine, phi, p)?.log_det()? / p as f64)
}

/// `~L_p = L_p / d_p - I / Vol`, with `I` relative to `phi0`.
pub fn tilde_l_p(engine: &Engine, phi: &Metric, p: u32, phi0: &Metric) -> Result<f64> {
    let d = SectionSpace::canonical(phi.k(), p)?.d as f64;
    Ok(l_p(engine, phi, p)? / d - i_energy(engine, phi, phi0)? / class_volume(phi.k()))
}

/// Pointwise balance residual `sigma_p = B e^{-p phi} / (d_p omega) - 1 / Vol`.
pub struct BalanceResidual {
    metric: Metric,
    kernel: BergmanKernel,
    d: f64,
    volume: f64,
}

impl BalanceResidual {
    pub fn new(engine: &Engine, phi: &Metric, p: u32) -> Result<Self> {
        let g = gram_e(engine, phi, p)?;
        Ok(BalanceResidual { metric: phi.clone(), d: g.dim() as f64, kernel: BergmanKernel::new(&g)?, volume: class_volume(phi.k()) })
    }

    pub fn value(&self, pt: &Point) -> f64 {
        self.kernel.density(&self.metric, pt) / self.d - 1.0 / self.volume
    }
}

/// `sigma_p(phi)` at `pt`.
pub fn sigma_p(engine: &Engine, phi: &Metric, p: u32, pt: &Point) -> Result<f64> {
    Ok(BalanceResidual::new(engine, phi, p)?.value(pt))
}

/// `∫ mu sigma_p omega`, with the kernel part as `tr G^{-1} M[mu] / d_p`.
pub fn sigma_moment(engine: &Engine, phi: &Metric, p: u32, mu: &dyn ScalarField) -> Result<f64> {
    let space = SectionSpace::canonical(phi.k(), p)?;
    let mo = engine.moments(phi, space, 1, &|pt: &Point, _: &Point, out: &mut [Complex64]| {
        out[0] = Complex64::new(mu.value(pt), 0.0);
    })?;
    let l = frame::cholesky_l(&mo.gram)?;
    let tr = frame::trace(&frame::orthonormal(&l, &frame::hermitian_part(&mo.factors[0]))?);
    let mean = engine.integrate_omega(phi, 1, &|pt, o| o[0] = mu.value(pt))?[0];
    Ok(tr / space.d as f64 - mean / class_volume(phi.k()))
}

/// `∫ sigma_p omega`; zero up to quadrature error.
pub fn sigma_total(engine: &Engine, phi: &Metric, p: u32) -> Result<f64> {
    let bal = BalanceResidual::new(engine, phi, p)?;
    Ok(engine.integrate_omega(phi, 1, &|pt, o| o[0] = bal.value(pt))?[0])
}

/// `p sigma_p` sampled on [`scan_points`] and fitted against `S - Ŝ`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BalanceFit {
    pub p: u32,
    /// `p sigma_p` at the scan points.
    pub values: Vec<f64>,
    /// `S - Ŝ` at the scan points.
    pub scalar: Vec<f64>,
    /// Least-squares `kappa` in `p sigma_p ≈ kappa (S - Ŝ)`.
    pub kappa: f64,
    pub correlation: f64,
    pub sup: f64,
}

pub fn balance_fit(engine: &Engine, phi: &Metric, p: u32) -> Result<BalanceFit> {
    let bal = BalanceResidual::new(engine, phi, p)?;
    let v = engine.integrate_omega(phi, 2, &|pt, o| {
        o[0] = 1.0;
        o[1] = scalar_curvature(phi, pt);
    })?;
    let s_hat = v[1] / v[0];
    let pts = scan_points(phi);
    let values: Vec<f64> = pts.iter().map(|pt| p as f64 * bal.value(pt)).collect();
    let scalar: Vec<f64> = pts.iter().map(|pt| scalar_curvature(phi, pt) - s_hat).collect();
    let n = values.len() as f64;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let ss = dot(&scalar, &scalar);
    let kappa = if ss > 0.0 { dot(&values, &scalar) / ss } else { 0.0 };
    let mean = |a: &[f64]| a.iter().sum::<f64>() / n;
    let (mv, ms) = (mean(&values), mean(&scalar));
    let cv: Vec<f64> = values.iter().map(|x| x - mv).collect();
    let cs: Vec<f64> = scalar.iter().map(|x| x - ms).collect();
    let den = (dot(&cv, &cv) * dot(&cs, &cs)).sqrt();
    let correlation = if den > 0.0 { dot(&cv, &cs) / den } else { 0.0 };
    let sup = values.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    Ok(BalanceFit { p, values, scalar, kappa, correlation, sup })
}

/// `M'.mu = ∫ mu (S - Ŝ) omega`.
pub fn mabuchi_derivative(engine: &Engine, phi: &Metric, mu: &dyn ScalarField) -> Result<f64> {
    let v = engine.integrate_omega(phi, 4, &|pt, o| {
        let s = scalar_curvature(phi, pt);
        let m = mu.value(pt);
        o[0] = 1.0;
        o[1] = s;
        o[2] = m;
        o[3] = m * s;
    })?;
    Ok(v[3] - v[1] / v[0] * v[2])
}

/// `M(phi) - M(phi0)` along the affine segment.
pub fn mabuchi_energy(engine: &Engine, phi: &Metric, phi0: &Metric) -> Result<f64> {
    same_degree(phi, phi0)?;
    let seg = segment(phi0, phi);
    let psi = Difference { phi: phi.clone(), phi0: phi0.clone() };
    integrate_s(|s| mabuchi_derivative(engine, &seg.metric_at(Complex64::new(s, 0.0))?, &psi))
}

/// Points used to scan a function over the fiber.
pub fn scan_points(m: &Metric) -> Vec<Point> {
    match m {
        Metric::Toric(tp) => {
            let w = tp.half_width().min(16.0);
            (0..=320).map(|i| Point::Radial(-w + 2.0 * w * i as f64 / 320.0)).collect()
        }
        Metric::General(_) => {
            let mut out = Vec::new();
            for i in 1..=16 {
                let r = i as f64 / 16.0;
                for a in 0..24 {
                    let z = Complex64::from_polar(r, 2.0 * PI * a as f64 / 24.0);
                    out.push(Point::chart0(z));
                    out.push(Point::chart1(z));
                }
            }
            out
        }
    }
}

/// `sup |c(phi)|` at `t` over [`scan_points`].
pub fn sup_abs_c(path: &MetricPath, t: Complex64) -> Result<f64> {
    let at = path.at(t)?;
    Ok(scan_points(&at.metric).iter().map(|pt| c_geodesic(&at, pt).abs()).fold(0.0, f64::max))
}

/// `∫ |dbar V_{psi_t}|^2 omega / Vol` along a numerical geodesic.
///
/// With `s = Re t` and `h` the returned value, `d²M/ds² = -8 Vol h` along
/// the geodesic. Refuses with `NotGeodesic` when `sup |c|` at `t` exceeds `tol`.
pub fn mabuchi_hessian_geodesic(engine: &Engine, path: &MetricPath, t: Complex64, tol: f64) -> Result<f64> {
    let c = sup_abs_c(path, t)?;
    if !(c <= tol) {
        return Err(LabError::NotGeodesic(c));
    }
    let at = path.at(t)?;
    a_limit(engine, &at.metric, &at.dt)
}

/// `mu` as a shared field, for building paths `phi + t mu`.
pub fn direction(phi: &Metric, mu: Arc<dyn ScalarField>) -> MetricPath {
    MetricPath {
        name: format!("{}+t*mu", phi.name()),
        base: phi.clone(),
        kind: crate::direct_image::path::PathKind::Affine(vec![Term { coef: Coef::ReT, field: mu }]),
    }
}
