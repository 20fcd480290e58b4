//! Toric geodesics by Legendre interpolation.
//!
//! With `u_i` the Legendre duals of the endpoints, `u_s = (1-s) u_0 + s u_1`
//! and `phi*_s` is the dual of `u_s`. For a point `x` the matching slope `y`
//! solves `u_s'(y) = x`, and then
//!
//! ```text
//! phi*_s(x) = x y - u_s(y)      d/ds phi*  = u_0(y) - u_1(y)
//! phi*_x    = y                  d2/ds2 phi* = (x_0 - x_1)^2 / u_s''(y)
//! ```
//!
//! where `x_i = u_i'(y)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::legendre::Legendre;
use crate::geometry::toric::ToricPotential;
use crate::jet::{inverse_derivs, Jet1};
use crate::par;

/// Beyond this `x` the slope `k - y` is below `1e-12 k` and the solve runs out of
/// digits; there the endpoint jets are interpolated linearly.
pub const UPPER_TAIL: f64 = 27.6;

/// Grids and tolerance of the self-certification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// Largest accepted `sup |c(phi*)|`.
    pub tolerance: f64,
    /// Interior `s` values `1/(n+1), ..., n/(n+1)`.
    pub s_points: usize,
    pub x_points: usize,
    pub x_half_width: f64,
    /// Step of the centred differences in `s`.
    pub fd_step: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { tolerance: 1e-4, s_points: 19, x_points: 201, x_half_width: 15.0, fd_step: 1e-3 }
    }
}

/// Dual data at slope `y`.
#[derive(Debug, Clone, Copy)]
struct DualPair {
    /// `u_0, u_1` and their derivatives up to order 4.
    u0: [f64; 5],
    u1: [f64; 5],
}

impl DualPair {
    fn mix(&self, s: f64) -> [f64; 5] {
        let mut out = [0.0; 5];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (1.0 - s) * self.u0[i] + s * self.u1[i];
        }
        out
    }
}

/// The geodesic `s -> phi*_s` between two toric endpoints, `s` in `[0, 1]`.
#[derive(Clone)]
pub struct GeodesicOracle {
    phi0: ToricPotential,
    phi1: ToricPotential,
    l0: Arc<Legendre>,
    l1: Arc<Legendre>,
    residual: f64,
}

impl std::fmt::Debug for GeodesicOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeodesicOracle")
            .field("phi0", &self.phi0.name())
            .field("phi1", &self.phi1.name())
            .field("residual", &self.residual)
            .finish()
    }
}

impl GeodesicOracle {
    /// Build and certify.
    pub fn new(phi0: &ToricPotential, phi1: &ToricPotential, cfg: &OracleConfig) -> Result<Self> {
        let mut o = Self::uncertified(phi0, phi1)?;
        let endpoint = o.endpoint_error(cfg)?;
        if endpoint > 1e-8 {
            return Err(LabError::OracleRejected(format!("endpoint mismatch {endpoint:.3e}")));
        }
        o.residual = o.measure_residual(cfg)?;
        if !(o.residual < cfg.tolerance) {
            return Err(LabError::OracleRejected(format!(
                "sup |c| = {:.3e} exceeds {:.1e}",
                o.residual, cfg.tolerance
            )));
        }
        Ok(o)
    }

    /// Build without the residual scan; `residual()` is NaN.
    pub fn uncertified(phi0: &ToricPotential, phi1: &ToricPotential) -> Result<Self> {
        if phi0.k() != phi1.k() {
            return Err(LabError::Dimension(format!("endpoint degrees {} and {}", phi0.k(), phi1.k())));
        }
        Ok(GeodesicOracle {
            phi0: phi0.clone(),
            phi1: phi1.clone(),
            l0: Arc::new(Legendre::new(phi0)),
            l1: Arc::new(Legendre::new(phi1)),
            residual: f64::NAN,
        })
    }

    pub fn k(&self) -> u32 {
        self.phi0.k()
    }

    pub fn endpoints(&self) -> (&ToricPotential, &ToricPotential) {
        (&self.phi0, &self.phi1)
    }

    /// Measured `sup |c(phi*)|` over the certification grid.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    fn guess(&self, y: f64) -> f64 {
        let k = self.k() as f64;
        (y / (k - y)).ln()
    }

    fn duals(&self, y: f64) -> Result<DualPair> {
        let g = self.guess(y);
        Ok(DualPair { u0: self.l0.dual_jet(y, g)?.u, u1: self.l1.dual_jet(y, g)?.u })
    }

    /// The slope `y` with `u_s'(y) = x`, and the dual data there.
    fn solve(&self, s: f64, x: f64) -> Result<(f64, DualPair)> {
        let k = self.k() as f64;
        let (mut a, mut b) = (0.0, k);
        // Fubini-Study start: y = k e^x / (1 + e^x)
        let mut y = k / (1.0 + (-x).exp());
        if !(y > 0.0 && y < k) {
            y = if x < 0.0 { k * x.exp() } else { k * (1.0 - (-x).exp()) };
            y = y.clamp(f64::MIN_POSITIVE, k * (1.0 - f64::EPSILON));
        }
        for _ in 0..200 {
            let dp = self.duals(y)?;
            let u = dp.mix(s);
            let f = u[1] - x;
            if f == 0.0 {
                return Ok((y, dp));
            }
            if f < 0.0 {
                a = y;
            } else {
                b = y;
            }
            let mut ny = y - f / u[2];
            if !(ny > a && ny < b) {
                ny = 0.5 * (a + b);
            }
            let scale = y.min(k - y).max(f64::MIN_POSITIVE);
            if (ny - y).abs() <= 1e-15 * scale {
                let dp = self.duals(ny)?;
                return Ok((ny, dp));
            }
            y = ny;
        }
        Err(LabError::Domain(format!("no slope for x = {x} at s = {s}")))
    }

    fn tail(&self, s: f64, x: f64) -> ([f64; 5], [f64; 5]) {
        let a = self.phi0.jet(x).derivs();
        let b = self.phi1.jet(x).derivs();
        let mut mix = [0.0; 5];
        let mut diff = [0.0; 5];
        for i in 0..5 {
            mix[i] = (1.0 - s) * a[i] + s * b[i];
            diff[i] = b[i] - a[i];
        }
        (mix, diff)
    }

    /// Derivatives of `phi*_s` in `x` up to order 4.
    pub fn derivs(&self, s: f64, x: f64) -> Result<[f64; 5]> {
        if x > UPPER_TAIL {
            return Ok(self.tail(s, x).0);
        }
        let (y, dp) = self.solve(s, x)?;
        let u = dp.mix(s);
        let inv = inverse_derivs(y, [u[1], u[2], u[3], u[4]]);
        Ok([x * y - u[0], inv[0], inv[1], inv[2], inv[3]])
    }

    pub fn phi(&self, s: f64, x: f64) -> Result<f64> {
        Ok(self.derivs(s, x)?[0])
    }

    /// `phi*_s` as a profile; evaluation failures give NaN.
    pub fn profile_at(&self, s: f64) -> ToricPotential {
        let me = self.clone();
        let name = format!("geodesic({},{};s={s})", self.phi0.name(), self.phi1.name());
        let f = move |xj: Jet1| match me.derivs(s, xj.value()) {
            Ok(d) => xj.compose(d),
            Err(_) => Jet1::constant(f64::NAN),
        };
        ToricPotential::new_unchecked(self.k(), name, Arc::new(f)).with_half_width(self.phi0.half_width())
    }

    /// x-jets of `d/ds phi*` and `d2/ds2 phi*` at `(s, x)`; the second is
    /// accurate to order 2.
    pub fn s_derivative_jets(&self, s: f64, x: f64) -> Result<(Jet1, Jet1)> {
        if x > UPPER_TAIL {
            return Ok((Jet1::from_derivs(self.tail(s, x).1), Jet1::constant(0.0)));
        }
        let (y, dp) = self.solve(s, x)?;
        let u = dp.mix(s);
        let inv = inverse_derivs(y, [u[1], u[2], u[3], u[4]]);
        let yj = Jet1::from_derivs([inv[0], inv[1], inv[2], inv[3], 0.0]);
        let mut du = [0.0; 5];
        for (i, v) in du.iter_mut().enumerate() {
            *v = dp.u0[i] - dp.u1[i];
        }
        let phi_s = yj.compose(du);
        // in the slope variable
        let x0 = Jet1::from_derivs(dp.u0).derivative();
        let x1 = Jet1::from_derivs(dp.u1).derivative();
        let us2 = Jet1::from_derivs(u).derivative().derivative();
        let diff = x0 - x1;
        let e = diff * diff / us2;
        let phi_ss = yj.compose(e.derivs());
        Ok((phi_s, phi_ss))
    }

    /// `c(phi*)` at `(s, x)` by centred differences in `s`, in the `t = s + i r`
    /// normalisation `c = (phi_ss - phi_sx^2 / phi_xx) / 4`.
    pub fn c_fd(&self, s: f64, x: f64, h: f64) -> Result<f64> {
        let m = self.derivs(s - h, x)?;
        let c = self.derivs(s, x)?;
        let p = self.derivs(s + h, x)?;
        let phi_ss = (p[0] - 2.0 * c[0] + m[0]) / (h * h);
        let phi_sx = (p[1] - m[1]) / (2.0 * h);
        Ok(0.25 * (phi_ss - phi_sx * phi_sx / c[2]))
    }

    fn x_grid(cfg: &OracleConfig) -> Vec<f64> {
        let n = cfg.x_points.max(2);
        (0..n).map(|i| -cfg.x_half_width + 2.0 * cfg.x_half_width * i as f64 / (n - 1) as f64).collect()
    }

    fn endpoint_error(&self, cfg: &OracleConfig) -> Result<f64> {
        let xs = Self::x_grid(cfg);
        let errs = par::map_slice(&xs, |&x| -> Result<f64> {
            let a = (self.phi(0.0, x)? - self.phi0.phi(x)).abs();
            let b = (self.phi(1.0, x)? - self.phi1.phi(x)).abs();
            Ok(a.max(b))
        });
        errs.into_iter().try_fold(0.0f64, |acc, e| Ok(acc.max(e?)))
    }

    fn measure_residual(&self, cfg: &OracleConfig) -> Result<f64> {
        let xs = Self::x_grid(cfg);
        let ns = cfg.s_points.max(1);
        let pts: Vec<(f64, f64)> =
            (1..=ns).flat_map(|i| xs.iter().map(move |&x| (i as f64 / (ns + 1) as f64, x))).collect();
        let cs = par::map_slice(&pts, |&(s, x)| self.c_fd(s, x, cfg.fd_step));
        cs.into_iter().try_fold(0.0f64, |acc, c| Ok(acc.max(c?.abs())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::presets;

    #[test]
    fn constant_shift_is_linear_in_s() {
        let f = presets::fs(1);
        let o = GeodesicOracle::new(&f, &f.shifted(0.3), &OracleConfig::default()).unwrap();
        for (s, x) in [(0.2, -4.0), (0.5, 0.0), (0.9, 7.0)] {
            assert!((o.phi(s, x).unwrap() - f.phi(x) - 0.3 * s).abs() < 1e-11);
            let (ps, pss) = o.s_derivative_jets(s, x).unwrap();
            assert!((ps.value() - 0.3).abs() < 1e-11 && ps.d1().abs() < 1e-9 && pss.value().abs() < 1e-12);
        }
        assert!(o.residual() < 1e-6);
    }

    #[test]
    fn translation_endpoints_give_the_translation_family() {
        let f = presets::fs_bump(1, 0.1, 0.5, 1.0).unwrap();
        let a = 0.8;
        let o = GeodesicOracle::new(&f, &f.translated(a), &OracleConfig::default()).unwrap();
        assert!(o.residual() < 1e-5);
        for (s, x) in [(0.25, -2.0), (0.5, 0.4), (0.75, 3.0)] {
            assert!((o.phi(s, x).unwrap() - f.phi(x + s * a)).abs() < 1e-9);
        }
    }

    #[test]
    fn bump_geodesic_certifies_and_jets_match_differences() {
        let f = presets::fs(1);
        let b = presets::fs_bump(1, 0.1, 0.5, 1.0).unwrap();
        let o = GeodesicOracle::new(&f, &b, &OracleConfig::default()).unwrap();
        assert!(o.residual() < 1e-4, "{}", o.residual());
        let (s, x, h) = (0.4, 0.3, 1e-4);
        let (ps, pss) = o.s_derivative_jets(s, x).unwrap();
        let fd_s = (o.phi(s + h, x).unwrap() - o.phi(s - h, x).unwrap()) / (2.0 * h);
        assert!((fd_s - ps.value()).abs() < 1e-7);
        let fd_ss = (o.phi(s + h, x).unwrap() - 2.0 * o.phi(s, x).unwrap() + o.phi(s - h, x).unwrap()) / (h * h);
        assert!((fd_ss - pss.value()).abs() < 1e-4);
        let xs = |x: f64| o.s_derivative_jets(s, x).unwrap();
        let hx = 1e-4;
        let d1 = (xs(x + hx).0.value() - xs(x - hx).0.value()) / (2.0 * hx);
        let d2 = (xs(x + hx).1.value() - 2.0 * pss.value() + xs(x - hx).1.value()) / (hx * hx);
        assert!((d1 - ps.d1()).abs() < 1e-7);
        assert!((d2 - pss.d2()).abs() < 1e-3 * (1.0 + d2.abs()));
        // the profile at s is a valid metric
        let m = o.profile_at(0.5);
        assert!(m.positivity(400).positive);
    }
}
