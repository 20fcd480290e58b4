//! Legendre duality for convex profiles.

use crate::error::{LabError, Result};
use crate::geometry::toric::{ProfileFn, ToricPotential};
use crate::jet::{inverse_derivs, Jet1};

/// The dual `u(y) = sup_x (x y - phi(x))` of a strictly convex profile whose
/// slope ranges over `(lo, hi)`.
#[derive(Clone)]
pub struct Legendre {
    profile: ProfileFn,
    lo: f64,
    hi: f64,
}

/// `u` and its derivatives up to order 4 at `y`, with the primal point `x = u'(y)`.
#[derive(Debug, Clone, Copy)]
pub struct DualJet {
    pub x: f64,
    pub u: [f64; 5],
}

impl Legendre {
    pub fn new(tp: &ToricPotential) -> Self {
        Legendre { profile: tp.profile().clone(), lo: 0.0, hi: tp.k() as f64 }
    }

    pub fn from_profile(profile: ProfileFn, lo: f64, hi: f64) -> Self {
        Legendre { profile, lo, hi }
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn jet(&self, x: f64) -> Jet1 {
        (self.profile)(Jet1::var(x))
    }

    /// Solve `phi'(x) = y`, Newton safeguarded by bisection; `guess` warm-starts.
    pub fn slope_inverse(&self, y: f64, guess: f64) -> Result<f64> {
        if !(y > self.lo && y < self.hi) {
            return Err(LabError::Domain(format!("slope {y} outside ({}, {})", self.lo, self.hi)));
        }
        let slope = |x: f64| self.jet(x).d1();
        // bracket
        let mut a = guess;
        let mut b = guess;
        let mut step = 1.0;
        while slope(a) > y {
            a -= step;
            step *= 2.0;
            if step > 1e6 {
                return Err(LabError::Domain(format!("cannot bracket slope {y} from below")));
            }
        }
        step = 1.0;
        while slope(b) < y {
            b += step;
            step *= 2.0;
            if step > 1e6 {
                return Err(LabError::Domain(format!("cannot bracket slope {y} from above")));
            }
        }
        let mut x = guess.clamp(a, b);
        for _ in 0..200 {
            let j = self.jet(x);
            let f = j.d1() - y;
            if f == 0.0 {
                return Ok(x);
            }
            if f < 0.0 {
                a = x;
            } else {
                b = x;
            }
            let g = j.d2();
            if !(g > 0.0) {
                return Err(LabError::NotPositive(format!("phi''({x}) = {g:.3e}")));
            }
            let mut nx = x - f / g;
            if !(nx > a && nx < b) {
                nx = 0.5 * (a + b);
            }
            if (nx - x).abs() <= 1e-15 * (1.0 + x.abs()) || b - a <= 1e-15 * (1.0 + x.abs()) {
                return Ok(nx);
            }
            x = nx;
        }
        Ok(x)
    }

    /// `u(y)`.
    pub fn u(&self, y: f64) -> Result<f64> {
        Ok(self.dual_jet(y, 0.0)?.u[0])
    }

    /// Derivatives of `u` up to order 4 at `y`.
    pub fn dual_jet(&self, y: f64, guess: f64) -> Result<DualJet> {
        let x = self.slope_inverse(y, guess)?;
        let j = self.jet(x);
        let inv = inverse_derivs(x, [j.d1(), j.d2(), j.d(3), j.d(4)]);
        Ok(DualJet { x, u: [x * y - j.value(), inv[0], inv[1], inv[2], inv[3]] })
    }

    /// Transform back: `sup_y (x y - u(y))`, solved through `u'(y) = x`.
    pub fn primal(&self, x: f64) -> Result<f64> {
        let mut a = self.lo;
        let mut b = self.hi;
        let mut y = 0.5 * (a + b);
        let mut guess = 0.0;
        for _ in 0..200 {
            let dj = self.dual_jet(y, guess)?;
            guess = dj.x;
            let f = dj.u[1] - x;
            if f < 0.0 {
                a = y;
            } else {
                b = y;
            }
            let mut ny = y - f / dj.u[2];
            if !(ny > a && ny < b) {
                ny = 0.5 * (a + b);
            }
            if (ny - y).abs() <= 1e-16 * self.hi.abs().max(1.0) {
                break;
            }
            y = ny;
        }
        let dj = self.dual_jet(y, guess)?;
        Ok(x * y - dj.u[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::presets;
    use std::sync::Arc;

    #[test]
    fn quadratic_is_self_dual() {
        let l = Legendre::from_profile(Arc::new(|x: Jet1| x * x * 0.5), -1e3, 1e3);
        for y in [-2.0, 0.3, 5.0] {
            assert!((l.u(y).unwrap() - y * y / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_and_shift() {
        let t = presets::fs_bump(1, 0.1, 0.5, 1.0).unwrap();
        let l = Legendre::new(&t);
        for x in [-15.0, -3.0, 0.0, 0.7, 12.0] {
            let back = l.primal(x).unwrap();
            assert!((back - t.phi(x)).abs() < 1e-8, "x={x}: {back} vs {}", t.phi(x));
        }
        let ls = Legendre::new(&t.shifted(0.25));
        let y = 0.37;
        assert!((ls.u(y).unwrap() - l.u(y).unwrap() + 0.25).abs() < 1e-12);
        assert!(matches!(l.u(1.2), Err(LabError::Domain(_))));
    }

    #[test]
    fn dual_derivatives_match_finite_differences() {
        let t = presets::fs_bump(1, 0.1, 0.5, 1.0).unwrap();
        let l = Legendre::new(&t);
        let y = 0.41;
        let h = 1e-4;
        let j = l.dual_jet(y, 0.0).unwrap();
        let jp = l.dual_jet(y + h, 0.0).unwrap();
        let jm = l.dual_jet(y - h, 0.0).unwrap();
        for k in 1..4 {
            let fd = (jp.u[k] - jm.u[k]) / (2.0 * h);
            assert!((fd - j.u[k + 1]).abs() < 1e-5 * (1.0 + j.u[k + 1].abs()), "order {k}");
        }
    }
}
