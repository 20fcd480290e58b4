use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::geometry::functions::{ScalarField, SpherePoly};
use crate::geometry::point::{Chart, Point};
use crate::geometry::toric::{PositivityReport, ToricPotential};
use crate::jet::{Jet1, Jet2};

/// Weight of a chart point, as a 2-jet in the chart coordinates.
pub type WeightFn = Arc<dyn Fn(&Point) -> Jet2 + Send + Sync>;

/// A metric on O(k) given by its local weights in the two standard charts.
///
/// The weight closure is called with chart points of either chart and must
/// satisfy `w1(w) = w0(1/w) + k log|w|^2`.
#[derive(Clone)]
pub struct FiberMetric {
    k: u32,
    name: String,
    weight: WeightFn,
}

impl fmt::Debug for FiberMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiberMetric").field("k", &self.k).field("name", &self.name).finish()
    }
}

fn fs_weight(k: f64, pt: &Point) -> Jet2 {
    let (a, b) = pt.coordinate_jets();
    (a * a + b * b + 1.0).ln() * k
}

impl FiberMetric {
    pub fn new(k: u32, name: impl Into<String>, weight: WeightFn) -> Result<Self> {
        let m = FiberMetric { k, name: name.into(), weight };
        let t = m.transition_defect(64);
        if t > 1e-10 {
            return Err(LabError::Invalid(format!("{}: chart weights violate the O(k) transition law by {t:.2e}", m.name)));
        }
        let rep = m.positivity(48);
        if !rep.positive {
            return Err(LabError::NotPositive(format!("{}: density {:.3e} at |z| = {:.3}", m.name, rep.min_margin, rep.at)));
        }
        Ok(m)
    }

    pub fn fubini_study(k: u32) -> Self {
        let kk = k as f64;
        FiberMetric { k, name: "fs".into(), weight: Arc::new(move |pt| fs_weight(kk, pt)) }
    }

    /// `k log(1 + |z|^2) + eps * P(X)` for a sphere polynomial `P`.
    pub fn fs_plus_poly(k: u32, eps: f64, poly: SpherePoly) -> Result<Self> {
        let kk = k as f64;
        let f = crate::geometry::functions::FiberFunction::Sphere(poly);
        FiberMetric::new(k, format!("fs+{eps}P"), Arc::new(move |pt| fs_weight(kk, pt) + f.chart_jet(pt) * eps))
    }

    /// The same metric as a toric profile, written in both charts.
    pub fn from_toric(tp: &ToricPotential) -> Self {
        let t = tp.clone();
        FiberMetric { k: tp.k(), name: tp.name().to_string(), weight: Arc::new(move |pt| toric_chart_weight(&t, pt)) }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn weight_jet(&self, pt: &Point) -> Jet2 {
        (self.weight)(pt)
    }

    /// `self + f` for a field `f` defined in both charts.
    pub fn plus_field(&self, name: impl Into<String>, f: Arc<dyn ScalarField>) -> Self {
        let w = self.weight.clone();
        FiberMetric { k: self.k, name: name.into(), weight: Arc::new(move |pt| w(pt) + f.chart_jet(pt)) }
    }

    /// Largest transition-law defect on `n` points of the overlap circle `|w| = 0.95`.
    pub fn transition_defect(&self, n: usize) -> f64 {
        let k = self.k as f64;
        (0..n)
            .map(|i| {
                let th = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
                let w = Complex64::from_polar(0.95, th);
                let lhs = self.weight_jet(&Point::chart1(w)).v;
                let rhs = self.weight_jet(&Point::chart0(w.inv())).v + k * w.norm_sqr().ln();
                (lhs - rhs).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Scan the density on a polar grid of both unit disks.
    pub fn positivity(&self, n: usize) -> PositivityReport {
        let mut worst = f64::INFINITY;
        let mut at = 0.0;
        for chart in [Chart::Zero, Chart::One] {
            for i in 0..=n {
                let r = i as f64 / n as f64;
                for j in 0..n {
                    let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                    let g = self.weight_jet(&Point::Chart(chart, Complex64::from_polar(r, th))).ddbar();
                    if g < worst || g.is_nan() {
                        worst = g;
                        at = if chart == Chart::Zero { r } else if r > 0.0 { 1.0 / r } else { f64::INFINITY };
                    }
                }
            }
        }
        PositivityReport { positive: worst > 0.0, min_margin: worst, at }
    }
}

/// Chart weight of a toric metric; chart 1 uses the reflected profile
/// `phi(-y) + k y` in `y = log|w|^2`.
fn toric_chart_weight(t: &ToricPotential, pt: &Point) -> Jet2 {
    let l = pt.log_modulus2_jet();
    match pt {
        Point::Chart(Chart::One, _) => {
            let y = -l.v;
            (-l).compose(&(t.eval_jet(-Jet1::var(y)) + Jet1::var(y) * t.k() as f64))
        }
        _ => l.compose(&t.jet(l.v)),
    }
}

/// Either representation of a positive metric on O(k).
#[derive(Debug, Clone)]
pub enum Metric {
    Toric(ToricPotential),
    General(FiberMetric),
}

/// Weight and density at a point.
#[derive(Debug, Clone, Copy)]
pub struct Local {
    pub w: Jet2,
    pub g: f64,
}

impl Metric {
    pub fn k(&self) -> u32 {
        match self {
            Metric::Toric(t) => t.k(),
            Metric::General(m) => m.k(),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Metric::Toric(t) => t.name(),
            Metric::General(m) => m.name(),
        }
    }

    pub fn as_toric(&self) -> Option<&ToricPotential> {
        match self {
            Metric::Toric(t) => Some(t),
            Metric::General(_) => None,
        }
    }

    /// The general two-chart form of this metric.
    pub fn to_general(&self) -> FiberMetric {
        match self {
            Metric::Toric(t) => FiberMetric::from_toric(t),
            Metric::General(m) => m.clone(),
        }
    }

    /// Weight jet; radial points are only valid for toric metrics.
    pub fn weight_jet(&self, pt: &Point) -> Jet2 {
        match (self, pt) {
            (Metric::Toric(t), Point::Radial(x)) => Jet2::from_radial(&t.jet(*x)),
            (Metric::Toric(t), _) => toric_chart_weight(t, pt),
            (Metric::General(m), Point::Chart(..)) => m.weight_jet(pt),
            (Metric::General(m), Point::Radial(_)) => {
                panic!("radial point passed to the non-toric metric {}", m.name())
            }
        }
    }

    pub fn local(&self, pt: &Point) -> Local {
        let w = self.weight_jet(pt);
        Local { w, g: w.ddbar() }
    }

    pub fn positivity(&self) -> PositivityReport {
        match self {
            Metric::Toric(t) => t.positivity(1600),
            Metric::General(m) => m.positivity(64),
        }
    }
}
