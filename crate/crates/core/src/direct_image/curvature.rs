//! Curvature of the direct-image bundles along a path.
//!
//! With `H(t)` the Gram matrix in a holomorphic frame, the curvature form
//! in that frame is `Q = H_t* H^{-1} H_t - H_{t tbar}`. The E-bundle carries
//! the norms `∫ [u, u] e^{-p phi_t}`, the F-bundle `∫ |u|^2 e^{-p phi_t} omega_t`.

use num_complex::Complex64;
use serde::Serialize;

use crate::direct_image::aform::a_matrix;
use crate::direct_image::frame::{self, ser_matrix, ser_opt_matrix, CMat};
use crate::direct_image::gradient::{c_geodesic, dbar_norm2, laplacian};
use crate::direct_image::path::MetricPath;
use crate::engine::Engine;
use crate::error::Result;
use crate::geometry::point::Point;
use crate::spectra::section::{SectionSpace, Twist};

/// Curvature at one `(p, t)`.
///
/// Matrices are in the equilibrated monomial frame given by `log_scale`;
/// `residual` and eigenvalues refer to a Gram-orthonormal frame.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureReport {
    pub bundle: Twist,
    pub path: String,
    pub p: u32,
    pub t: [f64; 2],
    pub d: usize,
    pub log_scale: Vec<f64>,
    #[serde(serialize_with = "ser_matrix")]
    pub gram: CMat,
    #[serde(serialize_with = "ser_matrix")]
    pub theta: CMat,
    /// `p ∫ c(phi) [u_j, u_k] e^{-p phi}` (E), or the same over `omega` (F).
    #[serde(serialize_with = "ser_matrix")]
    pub first_term: CMat,
    /// `A_p(p psi_t, .)`; E only.
    #[serde(serialize_with = "ser_opt_matrix")]
    pub a_term: Option<CMat>,
    /// `2 p ∫ c(phi) |u|^2 e^{-p phi} omega`; F only.
    #[serde(serialize_with = "ser_opt_matrix")]
    pub bound: Option<CMat>,
    /// `‖Θ - first - A‖_F` (E) in the orthonormal frame.
    pub residual_abs: Option<f64>,
    /// `residual_abs / ‖Θ‖_F`.
    pub residual: Option<f64>,
    /// `tr H^{-1} Θ`.
    pub trace: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Largest eigenvalue of `Θ - bound` (F only).
    pub bound_excess: Option<f64>,
}

impl CurvatureReport {
    /// `Θ` in the orthonormal frame.
    pub fn theta_orthonormal(&self) -> Result<CMat> {
        frame::orthonormal(&frame::cholesky_l(&self.gram)?, &self.theta)
    }

    /// Whether the E-identity holds: relative residual below `rel`, or
    /// absolute residual below `abs` when `Θ` itself is that small.
    pub fn identity_holds(&self, rel: f64, abs: f64) -> bool {
        match (self.residual, self.residual_abs) {
            (Some(r), Some(a)) => r < rel || a < abs,
            _ => false,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Eigenvalue range and trace of `G^{-1} M`.
fn spectrum(l: &CMat, m: &CMat) -> Result<(f64, f64, f64, CMat)> {
    let on = frame::orthonormal(l, m)?;
    let ev = frame::eigenvalues(&on);
    Ok((ev[0], ev[ev.len() - 1], frame::trace(&on), on))
}

/// Curvature of `E = H0(O(pk) ⊗ K)` with the decomposition
/// `Θ = p ∫ c(phi) [u, u] e^{-p phi} + A_p(p psi_t, u)`.
pub fn curvature_e(engine: &Engine, path: &MetricPath, p: u32, t: Complex64) -> Result<CurvatureReport> {
    let at = path.at(t)?;
    let m = &at.metric;
    let space = SectionSpace::canonical(m.k(), p)?;
    let pf = p as f64;
    let psi_t = &at.dt;
    let mo = engine.moments(m, space, 3, &|pt: &Point, refp: &Point, out: &mut [Complex64]| {
        let v = psi_t.value(pt) - psi_t.value(refp);
        out[0] = v;
        out[1] = Complex64::new(v.norm_sqr(), 0.0);
        out[2] = Complex64::new(at.dtt.value(pt), 0.0);
    })?;
    let l = frame::cholesky_l(&mo.gram)?;
    let f = &mo.factors;
    let q = frame::sandwich(&l, &f[0], &f[0])? * Complex64::new(pf * pf, 0.0) - &f[1] * Complex64::new(pf * pf, 0.0)
        + &f[2] * Complex64::new(pf, 0.0);
    let theta = frame::hermitian_part(&q);

    let mc = engine.moments(m, space, 1, &|pt: &Point, _: &Point, out: &mut [Complex64]| {
        out[0] = Complex64::new(c_geodesic(&at, pt), 0.0);
    })?;
    let first = frame::reframe(&frame::hermitian_part(&mc.factors[0]), &mc.log_scale, &mo.log_scale) * Complex64::new(pf, 0.0);
    let am = a_matrix(engine, m, p, &psi_t.scaled(pf))?;
    let a_term = frame::reframe(&am.a, &am.log_scale, &mo.log_scale);

    let (lo, hi, tr, on) = spectrum(&l, &theta)?;
    let diff = frame::orthonormal(&l, &(&theta - &first - &a_term))?;
    let res_abs = diff.norm();
    let scale = on.norm();
    Ok(CurvatureReport {
        bundle: Twist::Canonical,
        path: path.name.clone(),
        p,
        t: [t.re, t.im],
        d: space.d,
        log_scale: mo.log_scale.clone(),
        gram: mo.gram.clone(),
        theta,
        first_term: first,
        a_term: Some(a_term),
        bound: None,
        residual_abs: Some(res_abs),
        residual: Some(if scale > 0.0 { res_abs / scale } else if res_abs == 0.0 { 0.0 } else { f64::INFINITY }),
        trace: tr,
        min_eigenvalue: lo,
        max_eigenvalue: hi,
        bound_excess: None,
    })
}

/// Curvature of `F = H0(O(pk))` with the volume form `omega_t` of the same
/// metric, and the bound `Θ^F <= 2 p ∫ c(phi) |u|^2 e^{-p phi} omega`.
pub fn curvature_f(engine: &Engine, path: &MetricPath, p: u32, t: Complex64) -> Result<CurvatureReport> {
    let at = path.at(t)?;
    let m = &at.metric;
    let space = SectionSpace::plain(m.k(), p)?;
    let pf = p as f64;
    let psi_t = &at.dt;
    let mo = engine.moments(m, space, 3, &|pt: &Point, refp: &Point, out: &mut [Complex64]| {
        let v = psi_t.value(pt) - psi_t.value(refp);
        let lap = laplacian(m, psi_t, pt);
        let g = m.local(pt).g;
        let lap_tt = at.dtt.jet(pt).ddbar() / g;
        // d/dt and d/dt d/dtbar of e^{-p phi} omega, divided by itself
        out[0] = -v * pf + lap;
        out[1] = Complex64::new(
            pf * pf * v.norm_sqr() - pf * at.dtt.value(pt) - 2.0 * pf * (v * lap.conj()).re + lap_tt,
            0.0,
        );
        out[2] = Complex64::new(at.dtt.value(pt) - dbar_norm2(m, psi_t, pt), 0.0);
    })?;
    let l = frame::cholesky_l(&mo.gram)?;
    let f = &mo.factors;
    let theta = frame::hermitian_part(&(frame::sandwich(&l, &f[0], &f[0])? - &f[1]));
    let first = frame::hermitian_part(&f[2]) * Complex64::new(pf, 0.0);
    let bound = &first * Complex64::new(2.0, 0.0);
    let (lo, hi, tr, _) = spectrum(&l, &theta)?;
    let excess = frame::eigenvalues(&frame::orthonormal(&l, &(&theta - &bound))?);
    Ok(CurvatureReport {
        bundle: Twist::None,
        path: path.name.clone(),
        p,
        t: [t.re, t.im],
        d: space.d,
        log_scale: mo.log_scale.clone(),
        gram: mo.gram.clone(),
        theta,
        first_term: first,
        a_term: None,
        bound: Some(bound),
        residual_abs: None,
        residual: None,
        trace: tr,
        min_eigenvalue: lo,
        max_eigenvalue: hi,
        bound_excess: Some(excess[excess.len() - 1]),
    })
}
