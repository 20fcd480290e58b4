//! Large-`p` behaviour of the curvature trace and of `tr A_p`.
//!
//! For a path at `t` the normalised trace of the E-curvature behaves like
//!
//! ```text
//! tr Θ^p / d_p = (p ∫ c ω - ½ ∫ c (S - Ŝ) ω + ∫ |dbar V_{psi_t}|^2 ω) / Vol + o(1)
//! ```
//!
//! and `tr A_p(p mu) / d_p -> ∫ |dbar V_mu|^2 ω / Vol`.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::direct_image::aform::a_matrix;
use crate::direct_image::curvature::curvature_e;
use crate::direct_image::gradient::{c_geodesic, complex_gradient};
use crate::direct_image::path::{ComplexField, MetricPath};
use crate::engine::Engine;
use crate::error::Result;
use crate::geometry::fiber::Metric;
use crate::geometry::kahler::scalar_curvature;
use crate::par;

/// Coefficient of `∫ c (S - Ŝ) ω` in the expansion.
pub const SCALAR_COEFFICIENT: f64 = -0.5;

/// One row of an asymptotics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub p: u32,
    pub measured: f64,
    pub predicted: f64,
    pub residual: f64,
}

/// The three integrals of the trace expansion, each divided by `Vol`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceTerms {
    pub volume: f64,
    /// `∫ c ω / Vol`, multiplied by `p` in the prediction.
    pub c_mean: f64,
    /// `-½ ∫ c (S - Ŝ) ω / Vol`.
    pub scalar_term: f64,
    /// `∫ |dbar V_{psi_t}|^2 ω / Vol`.
    pub gradient_term: f64,
}

impl TraceTerms {
    pub fn predicted(&self, p: u32) -> f64 {
        p as f64 * self.c_mean + self.scalar_term + self.gradient_term
    }

    /// Size of the order-one part of the prediction.
    pub fn order_one(&self) -> f64 {
        self.scalar_term.abs() + self.gradient_term.abs()
    }
}

/// The expansion integrals of `path` at `t`.
pub fn trace_terms(engine: &Engine, path: &MetricPath, t: Complex64) -> Result<TraceTerms> {
    let at = path.at(t)?;
    let m = &at.metric;
    let v = engine.integrate_omega(m, 5, &|pt, o| {
        let c = c_geodesic(&at, pt);
        o[0] = 1.0;
        o[1] = scalar_curvature(m, pt);
        o[2] = c;
        o[3] = c * o[1];
        o[4] = complex_gradient(m, &at.dt, pt).dbar_v2;
    })?;
    let vol = v[0];
    let s_hat = v[1] / vol;
    Ok(TraceTerms {
        volume: vol,
        c_mean: v[2] / vol,
        scalar_term: SCALAR_COEFFICIENT * (v[3] - s_hat * v[2]) / vol,
        gradient_term: v[4] / vol,
    })
}

/// `tr Θ^p / d_p` against the three-term prediction.
pub fn trace_asymptotics(engine: &Engine, path: &MetricPath, t: Complex64, p_list: &[u32]) -> Result<(TraceTerms, Vec<AsymptoticRow>)> {
    let terms = trace_terms(engine, path, t)?;
    let rows = par::map_slice(p_list, |&p| -> Result<AsymptoticRow> {
        let r = curvature_e(engine, path, p, t)?;
        let measured = r.trace / r.d as f64;
        let predicted = terms.predicted(p);
        Ok(AsymptoticRow { p, measured, predicted, residual: measured - predicted })
    });
    Ok((terms, rows.into_iter().collect::<Result<_>>()?))
}

/// `∫ |dbar V_mu|^2 ω / Vol`.
pub fn a_limit(engine: &Engine, m: &Metric, mu: &ComplexField) -> Result<f64> {
    let v = engine.integrate_omega(m, 2, &|pt, o| {
        o[0] = 1.0;
        o[1] = complex_gradient(m, mu, pt).dbar_v2;
    })?;
    Ok(v[1] / v[0])
}

/// `tr A_p(p mu, .) / d_p` against its limit.
pub fn trace_a_limit(engine: &Engine, m: &Metric, mu: &ComplexField, p_list: &[u32]) -> Result<(f64, Vec<AsymptoticRow>)> {
    let limit = a_limit(engine, m, mu)?;
    let rows = par::map_slice(p_list, |&p| -> Result<AsymptoticRow> {
        let a = a_matrix(engine, m, p, &mu.scaled(p as f64))?;
        let measured = a.trace()? / a.space.d as f64;
        Ok(AsymptoticRow { p, measured, predicted: limit, residual: measured - limit })
    });
    Ok((limit, rows.into_iter().collect::<Result<_>>()?))
}

/// Write rows as CSV with columns `p, measured, predicted, residual`.
pub fn write_csv<W: Write>(rows: &[AsymptoticRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(|e| crate::LabError::Invalid(e.to_string()))?;
    }
    wr.flush()?;
    Ok(())
}
