//! S¹-invariant metrics on O(k) over the projective line, written as convex
//! profiles `phi(x)` of `x = log|z|^2` with asymptotic slopes `0` and `k`.

use std::fmt;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::jet::Jet1;

pub type ProfileFn = Arc<dyn Fn(Jet1) -> Jet1 + Send + Sync>;

/// Default half-width of the validation window in `x`.
pub const DEFAULT_HALF_WIDTH: f64 = 20.0;

#[derive(Clone)]
pub struct ToricPotential {
    k: u32,
    name: String,
    profile: ProfileFn,
    half_width: f64,
}

impl fmt::Debug for ToricPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ToricPotential")
            .field("k", &self.k)
            .field("name", &self.name)
            .finish()
    }
}

/// Outcome of a positivity scan.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PositivityReport {
    pub positive: bool,
    /// Smallest density found on the scan.
    pub min_margin: f64,
    /// Where it was found (`log|z|^2`, or chart-0 `|z|` for chart scans).
    pub at: f64,
}

impl ToricPotential {
    /// Build and validate a profile: `phi'' > 0` and `0 < phi' < k` on `[-20, 20]`.
    pub fn new(k: u32, name: impl Into<String>, profile: ProfileFn) -> Result<Self> {
        let tp = Self::new_unchecked(k, name, profile);
        tp.validate()?;
        Ok(tp)
    }

    pub fn new_unchecked(k: u32, name: impl Into<String>, profile: ProfileFn) -> Self {
        ToricPotential { k, name: name.into(), profile, half_width: DEFAULT_HALF_WIDTH }
    }

    pub fn with_half_width(mut self, half_width: f64) -> Self {
        self.half_width = half_width;
        self
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn profile(&self) -> &ProfileFn {
        &self.profile
    }

    /// Taylor jet of the profile at `x` (derivatives up to order 4).
    pub fn jet(&self, x: f64) -> Jet1 {
        (self.profile)(Jet1::var(x))
    }

    /// Evaluate on an arbitrary jet argument.
    pub fn eval_jet(&self, x: Jet1) -> Jet1 {
        (self.profile)(x)
    }

    pub fn phi(&self, x: f64) -> f64 {
        (self.profile)(Jet1::constant(x)).value()
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.jet(x).d1()
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.jet(x).d2()
    }

    /// Scan `phi''` on `n + 1` points of `[-X, X]`.
    pub fn positivity(&self, n: usize) -> PositivityReport {
        let x0 = -self.half_width;
        let h = 2.0 * self.half_width / n as f64;
        let mut worst = f64::INFINITY;
        let mut at = x0;
        for i in 0..=n {
            let x = x0 + i as f64 * h;
            let g = self.d2(x);
            if g < worst || g.is_nan() {
                worst = g;
                at = x;
            }
        }
        PositivityReport { positive: worst > 0.0, min_margin: worst, at }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(LabError::Invalid("degree k must be positive".into()));
        }
        let rep = self.positivity(1600);
        if !rep.positive {
            return Err(LabError::NotPositive(format!(
                "{}: phi''({:.4}) = {:.3e}",
                self.name, rep.at, rep.min_margin
            )));
        }
        let k = self.k as f64;
        let n = 400;
        let h = 2.0 * self.half_width / n as f64;
        for i in 0..=n {
            let x = -self.half_width + i as f64 * h;
            let s = self.d1(x);
            if !(s > 0.0 && s < k) {
                return Err(LabError::NotPositive(format!(
                    "{}: phi'({x:.4}) = {s:.6} outside (0, {k})",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// `phi + c`.
    pub fn shifted(&self, c: f64) -> Self {
        let f = self.profile.clone();
        ToricPotential {
            k: self.k,
            name: format!("{}+{c}", self.name),
            profile: Arc::new(move |x| f(x) + c),
            half_width: self.half_width,
        }
    }

    /// `x -> phi(x + a)`: the pullback under `z -> e^{a/2} z`.
    pub fn translated(&self, a: f64) -> Self {
        let f = self.profile.clone();
        ToricPotential {
            k: self.k,
            name: format!("{}(x+{a})", self.name),
            profile: Arc::new(move |x| f(x + a)),
            half_width: self.half_width,
        }
    }

    /// `phi + eps * f` for a compactly decaying perturbation `f`; validated.
    pub fn perturbed(&self, name: impl Into<String>, eps: f64, pert: ProfileFn) -> Result<Self> {
        let f = self.profile.clone();
        ToricPotential::new(self.k, name, Arc::new(move |x| f(x) + pert(x) * eps))
            .map(|t| t.with_half_width(self.half_width))
    }
}

/// Clamped cubic spline through `(x_i, phi_i)` with linear tails.
///
/// The end slopes are the one-sided slopes of the data, so the linear
/// extension is exactly C¹ at both ends.
#[derive(Debug, Clone)]
pub struct SplineProfile {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

impl SplineProfile {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let n = xs.len();
        if n < 4 || ys.len() != n {
            return Err(LabError::Invalid("spline needs at least 4 samples".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Invalid("spline abscissae must be strictly increasing".into()));
        }
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let left_slope = (ys[1] - ys[0]) / h[0];
        let right_slope = (ys[n - 1] - ys[n - 2]) / h[n - 2];
        // tridiagonal system for second derivatives, clamped ends
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        b[0] = 2.0 * h[0];
        c[0] = h[0];
        d[0] = 6.0 * ((ys[1] - ys[0]) / h[0] - left_slope);
        for i in 1..n - 1 {
            a[i] = h[i - 1];
            b[i] = 2.0 * (h[i - 1] + h[i]);
            c[i] = h[i];
            d[i] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
        }
        a[n - 1] = h[n - 2];
        b[n - 1] = 2.0 * h[n - 2];
        d[n - 1] = 6.0 * (right_slope - (ys[n - 1] - ys[n - 2]) / h[n - 2]);
        for i in 1..n {
            let w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = d[n - 1] / b[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (d[i] - c[i] * m[i + 1]) / b[i];
        }
        Ok(SplineProfile { xs, ys, m, left_slope, right_slope })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn slopes(&self) -> (f64, f64) {
        (self.left_slope, self.right_slope)
    }

    /// Derivatives of orders 0..=4 at `x`.
    pub fn derivs(&self, x: f64) -> [f64; 5] {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return [self.ys[0] + self.left_slope * (x - self.xs[0]), self.left_slope, 0.0, 0.0, 0.0];
        }
        if x >= self.xs[n - 1] {
            return [self.ys[n - 1] + self.right_slope * (x - self.xs[n - 1]), self.right_slope, 0.0, 0.0, 0.0];
        }
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let d2 = a * m0 + b * m1;
        let d3 = (m1 - m0) / h;
        [v, d1, d2, d3, 0.0]
    }

    pub fn into_profile(self) -> ProfileFn {
        let s = Arc::new(self);
        Arc::new(move |x: Jet1| x.compose(s.derivs(x.value())))
    }
}
