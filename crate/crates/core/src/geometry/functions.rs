//! Real functions on the fiber: test functions `mu`, path terms and the like.

use std::fmt;
use std::sync::Arc;

use crate::geometry::point::{sphere_jets, Point};
use crate::geometry::toric::ProfileFn;
use crate::jet::{Jet1, Jet2};

/// Anything that can be differentiated at a fiber point.
///
/// `chart_jet` is only called with chart points; `radial_jet` only for
/// S¹-invariant fields and returns a fourth-order jet in `x = log|z|^2`.
pub trait ScalarField: Send + Sync {
    fn chart_jet(&self, pt: &Point) -> Jet2;

    fn radial_jet(&self, x: f64) -> Jet1;

    fn is_radial(&self) -> bool;

    /// Jet at any point; radial points use the pseudo-chart embedding.
    fn jet(&self, pt: &Point) -> Jet2 {
        match *pt {
            Point::Radial(x) => Jet2::from_radial(&self.radial_jet(x)),
            _ => self.chart_jet(pt),
        }
    }

    fn value(&self, pt: &Point) -> f64 {
        match *pt {
            Point::Radial(x) => self.radial_jet(x).value(),
            _ => self.chart_jet(pt).v,
        }
    }
}

/// Polynomial in the sphere coordinates `X1, X2, X3`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SpherePoly {
    /// `(exponents, coefficient)` pairs.
    pub terms: Vec<([u32; 3], f64)>,
}

impl SpherePoly {
    pub fn new(terms: Vec<([u32; 3], f64)>) -> Self {
        SpherePoly { terms }
    }

    /// The height function `X3 = (|z|^2 - 1)/(|z|^2 + 1)`.
    pub fn height() -> Self {
        SpherePoly { terms: vec![([0, 0, 1], 1.0)] }
    }

    /// Depends on `X3` only.
    pub fn is_radial(&self) -> bool {
        self.terms.iter().all(|(e, c)| *c == 0.0 || (e[0] == 0 && e[1] == 0))
    }

    fn eval_jets<J>(&self, xs: [J; 3], one: J) -> J
    where
        J: Copy + std::ops::Add<Output = J> + std::ops::Mul<Output = J> + std::ops::Mul<f64, Output = J>,
    {
        let mut acc = one * 0.0;
        for (e, c) in &self.terms {
            let mut t = one;
            for (i, &n) in e.iter().enumerate() {
                for _ in 0..n {
                    t = t * xs[i];
                }
            }
            acc = acc + t * *c;
        }
        acc
    }
}

#[derive(Clone)]
pub enum FiberFunction {
    Constant(f64),
    /// `f(x)` with `x = log|z|^2`.
    Radial(ProfileFn),
    Sphere(SpherePoly),
}

impl fmt::Debug for FiberFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiberFunction::Constant(c) => write!(f, "Constant({c})"),
            FiberFunction::Radial(_) => write!(f, "Radial(..)"),
            FiberFunction::Sphere(p) => write!(f, "Sphere({:?})", p.terms),
        }
    }
}

impl FiberFunction {
    pub fn radial(f: impl Fn(Jet1) -> Jet1 + Send + Sync + 'static) -> Self {
        FiberFunction::Radial(Arc::new(f))
    }

    /// `sech((x - x0)/w)`, the bump used by the presets and tests.
    pub fn sech_bump(x0: f64, width: f64) -> Self {
        FiberFunction::radial(move |x| ((x - x0).scale(1.0 / width)).sech())
    }

    /// `(1 - |z|^2)/(1 + |z|^2) = -tanh(x/2)`: its complex gradient for the
    /// Fubini–Study metric is holomorphic.
    pub fn fs_moment() -> Self {
        FiberFunction::radial(|x| -(x.scale(0.5).tanh()))
    }
}

impl ScalarField for FiberFunction {
    fn chart_jet(&self, pt: &Point) -> Jet2 {
        match self {
            FiberFunction::Constant(c) => Jet2::constant(*c),
            FiberFunction::Radial(f) => {
                let l = pt.log_modulus2_jet();
                l.compose(&f(Jet1::var(l.v)))
            }
            FiberFunction::Sphere(p) => p.eval_jets(sphere_jets(pt), Jet2::constant(1.0)),
        }
    }

    fn radial_jet(&self, x: f64) -> Jet1 {
        match self {
            FiberFunction::Constant(c) => Jet1::constant(*c),
            FiberFunction::Radial(f) => f(Jet1::var(x)),
            FiberFunction::Sphere(p) => {
                debug_assert!(p.is_radial());
                let x3 = Jet1::var(x).scale(0.5).tanh();
                let z = Jet1::constant(0.0);
                p.eval_jets([z, z, x3], Jet1::constant(1.0))
            }
        }
    }

    fn is_radial(&self) -> bool {
        match self {
            FiberFunction::Sphere(p) => p.is_radial(),
            _ => true,
        }
    }
}

/// `Σ c_i f_i`.
#[derive(Debug, Clone, Default)]
pub struct LinComb {
    pub terms: Vec<(f64, FiberFunction)>,
}

impl LinComb {
    pub fn new(terms: Vec<(f64, FiberFunction)>) -> Self {
        LinComb { terms }
    }
}

impl ScalarField for LinComb {
    fn chart_jet(&self, pt: &Point) -> Jet2 {
        self.terms.iter().fold(Jet2::constant(0.0), |acc, (c, f)| acc + f.chart_jet(pt) * *c)
    }

    fn radial_jet(&self, x: f64) -> Jet1 {
        self.terms.iter().fold(Jet1::constant(0.0), |acc, (c, f)| acc + f.radial_jet(x) * *c)
    }

    fn is_radial(&self) -> bool {
        self.terms.iter().all(|(_, f)| f.is_radial())
    }
}

/// `Σ c_i f_i` over arbitrary fields.
#[derive(Clone, Default)]
pub struct FieldSum(pub Vec<(f64, Arc<dyn ScalarField>)>);

impl ScalarField for FieldSum {
    fn chart_jet(&self, pt: &Point) -> Jet2 {
        self.0.iter().fold(Jet2::constant(0.0), |acc, (c, f)| acc + f.chart_jet(pt) * *c)
    }

    fn radial_jet(&self, x: f64) -> Jet1 {
        self.0.iter().fold(Jet1::constant(0.0), |acc, (c, f)| acc + f.radial_jet(x) * *c)
    }

    fn is_radial(&self) -> bool {
        self.0.iter().all(|(_, f)| f.is_radial())
    }
}

/// A radial field given directly by a jet closure.
pub struct RadialField<F: Fn(f64) -> Jet1 + Send + Sync>(pub F);

impl<F: Fn(f64) -> Jet1 + Send + Sync> ScalarField for RadialField<F> {
    fn chart_jet(&self, pt: &Point) -> Jet2 {
        let l = pt.log_modulus2_jet();
        l.compose(&(self.0)(l.v))
    }

    fn radial_jet(&self, x: f64) -> Jet1 {
        (self.0)(x)
    }

    fn is_radial(&self) -> bool {
        true
    }
}
