//! One-parameter families of fiber metrics `phi_t = phi_0 + psi(t, .)`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::geodesics::oracle::GeodesicOracle;
use crate::geometry::fiber::Metric;
use crate::geometry::functions::{FieldSum, RadialField, ScalarField};
use crate::geometry::point::Point;
use crate::geometry::toric::ToricPotential;
use crate::jet::Jet1;

/// Scalar coefficients in `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coef {
    /// `Re t`
    ReT,
    /// `|t|^2`
    AbsT2,
    /// `(Re t)^2`
    ReT2,
}

impl Coef {
    pub fn value(&self, t: Complex64) -> f64 {
        match self {
            Coef::ReT => t.re,
            Coef::AbsT2 => t.norm_sqr(),
            Coef::ReT2 => t.re * t.re,
        }
    }

    /// `d/dt`.
    pub fn dt(&self, t: Complex64) -> Complex64 {
        match self {
            Coef::ReT => Complex64::new(0.5, 0.0),
            Coef::AbsT2 => t.conj(),
            Coef::ReT2 => Complex64::new(t.re, 0.0),
        }
    }

    /// `d^2/dt dtbar`.
    pub fn dtt(&self) -> f64 {
        match self {
            Coef::ReT => 0.0,
            Coef::AbsT2 => 1.0,
            Coef::ReT2 => 0.5,
        }
    }
}

/// A term `coef(t) * f(z)` of an affine path.
#[derive(Clone)]
pub struct Term {
    pub coef: Coef,
    pub field: Arc<dyn ScalarField>,
}

impl Term {
    pub fn new(coef: Coef, field: impl ScalarField + 'static) -> Self {
        Term { coef, field: Arc::new(field) }
    }
}

#[derive(Clone)]
pub enum PathKind {
    /// `psi = Σ coef_i(t) f_i(z)`.
    Affine(Vec<Term>),
    /// `psi(t, x) = phi_0(x + 2 Re t) - phi_0(x)`: the flow of `z d/dz`.
    Pullback,
    /// `phi_t = phi*_{Re t}`; `phi_0` is the first endpoint.
    Geodesic(GeodesicOracle),
}

/// `phi_t` together with `psi_t` and `psi_{t tbar}` as fields on the fiber.
#[derive(Clone)]
pub struct MetricPath {
    pub name: String,
    pub base: Metric,
    pub kind: PathKind,
}

/// A complex-valued field `re + i im`.
#[derive(Clone)]
pub struct ComplexField {
    pub re: Arc<dyn ScalarField>,
    pub im: Option<Arc<dyn ScalarField>>,
}

impl ComplexField {
    pub fn real(f: Arc<dyn ScalarField>) -> Self {
        ComplexField { re: f, im: None }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let sc = |f: &Arc<dyn ScalarField>| -> Arc<dyn ScalarField> { Arc::new(FieldSum(vec![(c, f.clone())])) };
        ComplexField { re: sc(&self.re), im: self.im.as_ref().map(sc) }
    }

    pub fn is_radial(&self) -> bool {
        self.re.is_radial() && self.im.as_ref().is_none_or(|f| f.is_radial())
    }

    pub fn value(&self, pt: &Point) -> Complex64 {
        Complex64::new(self.re.value(pt), self.im.as_ref().map_or(0.0, |f| f.value(pt)))
    }

    /// Radial jets of the real and imaginary parts.
    pub fn radial_jets(&self, x: f64) -> (Jet1, Jet1) {
        (self.re.radial_jet(x), self.im.as_ref().map_or(Jet1::constant(0.0), |f| f.radial_jet(x)))
    }

    /// `d/dzbar` in the chart (or pseudo-chart) of `pt`.
    pub fn dzbar(&self, pt: &Point) -> Complex64 {
        let a = self.re.jet(pt).dzbar();
        match &self.im {
            None => a,
            Some(f) => a + Complex64::i() * f.jet(pt).dzbar(),
        }
    }

    /// `d/dz d/dzbar`.
    pub fn ddbar(&self, pt: &Point) -> Complex64 {
        Complex64::new(self.re.jet(pt).ddbar(), self.im.as_ref().map_or(0.0, |f| f.jet(pt).ddbar()))
    }
}

/// The data of a path at one value of `t`.
#[derive(Clone)]
pub struct PathPoint {
    pub t: Complex64,
    pub metric: Metric,
    /// `psi_t`
    pub dt: ComplexField,
    /// `psi_{t tbar}`
    pub dtt: Arc<dyn ScalarField>,
}

impl MetricPath {
    pub fn affine(name: impl Into<String>, base: Metric, terms: Vec<Term>) -> Self {
        MetricPath { name: name.into(), base, kind: PathKind::Affine(terms) }
    }

    pub fn pullback(name: impl Into<String>, base: ToricPotential) -> Self {
        MetricPath { name: name.into(), base: Metric::Toric(base), kind: PathKind::Pullback }
    }

    pub fn geodesic(name: impl Into<String>, oracle: GeodesicOracle) -> Self {
        MetricPath { name: name.into(), base: Metric::Toric(oracle.endpoints().0.clone()), kind: PathKind::Geodesic(oracle) }
    }

    /// Constant shift `phi_0 + Re(t) c`.
    pub fn constant_shift(base: Metric, c: f64) -> Self {
        Self::affine(format!("shift({c})"), base, vec![Term::new(Coef::ReT, RadialField(move |_| Jet1::constant(c)))])
    }

    pub fn is_radial(&self) -> bool {
        match &self.kind {
            PathKind::Affine(terms) => self.base.as_toric().is_some() && terms.iter().all(|t| t.field.is_radial()),
            _ => true,
        }
    }

    fn toric_base(&self) -> Result<&ToricPotential> {
        self.base.as_toric().ok_or_else(|| LabError::Invalid(format!("path {} needs a toric base metric", self.name)))
    }

    /// The metric `phi_t`, without a positivity check.
    pub fn metric_unchecked(&self, t: Complex64) -> Result<Metric> {
        match &self.kind {
            PathKind::Affine(terms) => {
                let sum: Vec<(f64, Arc<dyn ScalarField>)> =
                    terms.iter().map(|tm| (tm.coef.value(t), tm.field.clone())).filter(|(c, _)| *c != 0.0).collect();
                if sum.is_empty() {
                    return Ok(self.base.clone());
                }
                let field = FieldSum(sum);
                match (&self.base, self.is_radial()) {
                    (Metric::Toric(tp), true) => {
                        let f = tp.profile().clone();
                        let prof = Arc::new(move |x: Jet1| f(x) + x.compose(field.radial_jet(x.value()).derivs()));
                        Ok(Metric::Toric(
                            ToricPotential::new_unchecked(tp.k(), format!("{}@{t}", self.name), prof).with_half_width(tp.half_width()),
                        ))
                    }
                    _ => Ok(Metric::General(self.base.to_general().plus_field(format!("{}@{t}", self.name), Arc::new(field)))),
                }
            }
            PathKind::Pullback => Ok(Metric::Toric(self.toric_base()?.translated(2.0 * t.re))),
            PathKind::Geodesic(o) => {
                if !(0.0..=1.0).contains(&t.re) {
                    return Err(LabError::Domain(format!("geodesic parameter Re t = {} outside [0, 1]", t.re)));
                }
                Ok(Metric::Toric(o.profile_at(t.re)))
            }
        }
    }

    /// `phi_t`, checked for positivity.
    pub fn metric_at(&self, t: Complex64) -> Result<Metric> {
        let m = self.metric_unchecked(t)?;
        let r = m.positivity();
        if !r.positive {
            return Err(LabError::NotPositive(format!("{} at t = {t}: margin {:.3e} at {}", self.name, r.min_margin, r.at)));
        }
        Ok(m)
    }

    /// `phi_t`, `psi_t` and `psi_{t tbar}`.
    pub fn at(&self, t: Complex64) -> Result<PathPoint> {
        let metric = self.metric_at(t)?;
        let (dt, dtt): (ComplexField, Arc<dyn ScalarField>) = match &self.kind {
            PathKind::Affine(terms) => {
                let re = terms.iter().map(|tm| (tm.coef.dt(t).re, tm.field.clone())).collect();
                let im: Vec<(f64, Arc<dyn ScalarField>)> =
                    terms.iter().map(|tm| (tm.coef.dt(t).im, tm.field.clone())).filter(|(c, _)| *c != 0.0).collect();
                let dtt = terms.iter().map(|tm| (tm.coef.dtt(), tm.field.clone())).collect();
                let im: Option<Arc<dyn ScalarField>> = if im.is_empty() { None } else { Some(Arc::new(FieldSum(im))) };
                (ComplexField { re: Arc::new(FieldSum(re)), im }, Arc::new(FieldSum(dtt)))
            }
            PathKind::Pullback => {
                let tp = self.toric_base()?.clone();
                let a = 2.0 * t.re;
                let tp2 = tp.clone();
                let d1 = RadialField(move |x| tp.jet(x + a).derivative());
                let d2 = RadialField(move |x| tp2.jet(x + a).derivative().derivative());
                (ComplexField::real(Arc::new(d1)), Arc::new(d2))
            }
            PathKind::Geodesic(o) => {
                let s = t.re;
                let (o1, o2) = (o.clone(), o.clone());
                let nan = || Jet1::constant(f64::NAN);
                let d1 = RadialField(move |x| o1.s_derivative_jets(s, x).map_or_else(|_| nan(), |j| j.0.scale(0.5)));
                let d2 = RadialField(move |x| o2.s_derivative_jets(s, x).map_or_else(|_| nan(), |j| j.1.scale(0.25)));
                (ComplexField::real(Arc::new(d1)), Arc::new(d2))
            }
        };
        Ok(PathPoint { t, metric, dt, dtt })
    }

    /// `psi(t, pt)` from the metrics, for finite-difference checks.
    pub fn psi(&self, t: Complex64, pt: &Point) -> Result<f64> {
        Ok(self.metric_unchecked(t)?.weight_jet(pt).v - self.base.weight_jet(pt).v)
    }

    /// Largest discrepancy between the analytic `psi_t`, `psi_{t tbar}` and
    /// centred differences of `psi` with step `h`, over `pts`.
    pub fn self_check(&self, t: Complex64, pts: &[Point], h: f64) -> Result<f64> {
        let at = self.at(t)?;
        let mut worst = 0.0f64;
        for pt in pts {
            let f = |dt: Complex64| self.psi(t + dt, pt);
            let (ap, am) = (f(Complex64::new(h, 0.0))?, f(Complex64::new(-h, 0.0))?);
            let (bp, bm) = (f(Complex64::new(0.0, h))?, f(Complex64::new(0.0, -h))?);
            let c = f(Complex64::default())?;
            // d/dt = (d/da - i d/db) / 2,  d/dt d/dtbar = Laplacian / 4
            let dt = Complex64::new((ap - am) / (4.0 * h), -(bp - bm) / (4.0 * h));
            let dtt = (ap + am + bp + bm - 4.0 * c) / (4.0 * h * h);
            worst = worst.max((dt - at.dt.value(pt)).norm()).max((dtt - at.dtt.value(pt)).abs());
        }
        Ok(worst)
    }
}
