//! The experiment subcommands.

use std::sync::Arc;

use anyhow::Result;
use dilab::direct_image::asymptotics::{trace_a_limit, trace_asymptotics, write_csv, AsymptoticRow};
use dilab::direct_image::{c_geodesic, curvature_e, curvature_f, ComplexField, CurvatureReport, MetricPath, PathKind};
use dilab::functionals::{balance_fit, class_volume, functional_report, scan_points, tilde_l_p, BalanceResidual};
use dilab::geodesics::{
    domination, rate_fit, sup_distance, BergmanGeodesic, CanonicalWeight, GeodesicOracle, RateVerdict, SampledGeodesic,
};
use dilab::geometry::fiber::Metric;
use dilab::geometry::presets;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::Config;
use crate::output::{loglog_svg, Run};

/// `min c(phi_t)` over the scan points.
pub fn min_c(path: &MetricPath, t: Complex64) -> Result<f64> {
    let at = path.at(t)?;
    Ok(scan_points(&at.metric).iter().map(|pt| c_geodesic(&at, pt)).fold(f64::INFINITY, f64::min))
}

/// A point of the disc `|t| < 0.2` drawn from `seed`.
pub fn random_t(seed: u64) -> Complex64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Complex64::from_polar(0.2 * rng.random::<f64>().sqrt(), std::f64::consts::TAU * rng.random::<f64>())
}

/// Relative residual, or the absolute one when `‖Θ‖` is below `abs`.
pub fn identity_check(run: &mut Run, name: String, r: &CurvatureReport, rel: f64, abs: f64) {
    let (a, q) = (r.residual_abs.unwrap_or(f64::NAN), r.residual.unwrap_or(f64::NAN));
    let theta = if q > 0.0 { a / q } else { 0.0 };
    if theta < abs {
        run.at_most(name + " (absolute)", a, abs);
    } else {
        run.at_most(name, q, rel);
    }
}

fn csv_table<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner()?)
}

#[derive(Serialize)]
struct CurvatureRow {
    bundle: &'static str,
    p: u32,
    d: usize,
    residual: Option<f64>,
    trace: f64,
    min_eigenvalue: f64,
    max_eigenvalue: f64,
    bound_excess: Option<f64>,
}

pub fn curvature(cfg: &Config, run: &mut Run, seed: u64) -> Result<()> {
    let c = &cfg.curvature;
    let engine = cfg.engine();
    let path = cfg.path(&c.path)?;
    let t = c.t.map(|[re, im]| Complex64::new(re, im)).unwrap_or_else(|| random_t(seed));
    let semipositive = min_c(&path, t)? >= 0.0;
    let geodesic = matches!(path.kind, PathKind::Geodesic(_));
    let mut rows = Vec::new();
    for &p in &c.p {
        let e = curvature_e(&engine, &path, p, t)?;
        run.write(&format!("curvature_e_p{p}.json"), e.to_json()? + "\n")?;
        identity_check(run, format!("identity p={p}"), &e, c.identity_rel_tol, c.identity_abs_tol);
        if semipositive {
            run.at_least(format!("theta_e min eigenvalue p={p}"), e.min_eigenvalue, -c.positivity_tol);
        }
        let f = curvature_f(&engine, &path, p, t)?;
        run.write(&format!("curvature_f_p{p}.json"), f.to_json()? + "\n")?;
        if semipositive {
            run.at_most(format!("theta_f bound excess p={p}"), f.bound_excess.unwrap_or(f64::NAN), c.bound_tol);
        }
        if geodesic {
            run.at_most(format!("theta_f max eigenvalue p={p}"), f.max_eigenvalue, c.bound_tol);
        }
        for (bundle, r) in [("E", &e), ("F", &f)] {
            rows.push(CurvatureRow {
                bundle,
                p,
                d: r.d,
                residual: r.residual,
                trace: r.trace,
                min_eigenvalue: r.min_eigenvalue,
                max_eigenvalue: r.max_eigenvalue,
                bound_excess: r.bound_excess,
            });
        }
    }
    run.write("curvature.csv", csv_table(&rows)?)?;
    Ok(())
}

#[derive(Serialize)]
struct FitRow {
    p: u32,
    kappa: f64,
    correlation: f64,
    sup: f64,
}

pub fn asymptotics(cfg: &Config, run: &mut Run) -> Result<()> {
    let a = &cfg.asymptotics;
    let engine = cfg.engine();

    let path = cfg.path(&a.path)?;
    let (terms, rows) = trace_asymptotics(&engine, &path, Complex64::new(a.t[0], a.t[1]), &a.p)?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    run.write("trace_asymptotics.csv", buf)?;
    run.holds("trace residual decreasing", rows.windows(2).all(|w| w[1].residual.abs() < w[0].residual.abs()));
    let last = rows.last().map(|r| r.residual.abs()).unwrap_or(f64::NAN);
    run.at_most("trace residual at largest p / order-one terms", last / terms.order_one(), a.trace_rel_tol);

    let m = Metric::Toric(cfg.metric(&a.a_metric)?);
    let mu = ComplexField::real(Arc::new(a.a_mu.build()?));
    let (limit, a_rows) = trace_a_limit(&engine, &m, &mu, &a.a_p)?;
    let mut buf = Vec::new();
    write_csv(&a_rows, &mut buf)?;
    run.write("trace_a.csv", buf)?;
    let last = a_rows.last().map(|r| r.residual.abs()).unwrap_or(f64::NAN);
    run.at_most("trace A residual at largest p / limit", last / limit.abs(), a.a_rel_tol);
    let fs = Metric::Toric(presets::fs(m.k()));
    let hol = ComplexField::real(Arc::new(dilab::geometry::FiberFunction::fs_moment()));
    let (_, hol_rows) = trace_a_limit(&engine, &fs, &hol, &a.a_p)?;
    run.at_most("trace A for holomorphic gradient", hol_rows.iter().fold(0.0f64, |s, r| s.max(r.measured.abs())), 1e-8);

    let dm = Metric::Toric(cfg.metric(&a.density_metric)?);
    let volume = class_volume(dm.k());
    let fs = Metric::Toric(presets::fs(dm.k()));
    let bal = BalanceResidual::new(&engine, &fs, a.density_p[0])?;
    let flat = scan_points(&fs).iter().fold(0.0f64, |s, pt| s.max(bal.value(pt).abs())) * volume;
    run.at_most("fs density deviation from d/Vol (relative)", flat, 1e-8);
    let fits = a.density_p.iter().map(|&p| balance_fit(&engine, &dm, p)).collect::<Result<Vec<_>, _>>()?;
    let predicted = -0.5 / volume;
    let table: Vec<AsymptoticRow> =
        fits.iter().map(|f| AsymptoticRow { p: f.p, measured: f.kappa, predicted, residual: f.kappa - predicted }).collect();
    let mut buf = Vec::new();
    write_csv(&table, &mut buf)?;
    run.write("density_fit.csv", buf)?;
    for w in fits.windows(2) {
        let gap = w[0].values.iter().zip(&w[1].values).fold(0.0f64, |s, (x, y)| s.max((x - y).abs()));
        run.at_most(format!("p sigma_p gap p={}..{} / sup", w[0].p, w[1].p), gap / w[0].sup, a.cauchy_rel_tol);
        run.at_most(format!("kappa drift p={}..{}", w[0].p, w[1].p), (w[1].kappa / w[0].kappa - 1.0).abs(), a.kappa_rel_tol);
    }

    #[derive(Serialize)]
    struct Report<'a> {
        path: &'a str,
        t: [f64; 2],
        terms: dilab::direct_image::TraceTerms,
        trace: &'a [AsymptoticRow],
        a_limit: f64,
        trace_a: &'a [AsymptoticRow],
        density_metric: &'a str,
        kappa_limit: f64,
        density_fit: Vec<FitRow>,
    }
    let report = Report {
        path: &path.name,
        t: a.t,
        terms,
        trace: &rows,
        a_limit: limit,
        trace_a: &a_rows,
        density_metric: dm.name(),
        kappa_limit: predicted,
        density_fit: fits.iter().map(|f| FitRow { p: f.p, kappa: f.kappa, correlation: f.correlation, sup: f.sup }).collect(),
    };
    run.json("asymptotics.json", &report)
}

pub fn functionals(cfg: &Config, run: &mut Run) -> Result<()> {
    let f = &cfg.functionals;
    let engine = cfg.engine();
    let path = cfg.path(&f.path)?;
    let report = functional_report(&engine, &path, f.p, &f.report)?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    run.write("functionals.csv", buf)?;
    run.write("functionals.json", report.to_json()? + "\n")?;
    let v = &report.l_p_convexity;
    if v.c_nonnegative {
        run.at_least("min second difference of L_p", v.min_second_difference, -v.tolerance);
    }
    if let Metric::Toric(tp) = path.metric_at(Complex64::new(f.report.s_min, 0.0))? {
        let reference = Metric::Toric(tp.clone());
        let a = tilde_l_p(&engine, &reference, f.p, &reference)?;
        let b = tilde_l_p(&engine, &Metric::Toric(tp.shifted(f.shift)), f.p, &reference)?;
        run.at_most("tilde L_p shift invariance", (a - b).abs(), f.shift_tol);
    }
    Ok(())
}

#[derive(Serialize)]
struct GeodesicRow {
    p: u32,
    e: f64,
    e_p_over_log_p: f64,
}

#[derive(Serialize)]
struct GeodesicReport<'a> {
    phi0: &'a str,
    phi1: &'a str,
    chi_offset: f64,
    oracle_residual: f64,
    rate: &'a dilab::geodesics::RateFit,
    e_decreasing: bool,
    domination: Option<dilab::geodesics::Domination>,
}

pub fn geodesic(cfg: &Config, run: &mut Run) -> Result<()> {
    let g = &cfg.geodesic;
    let engine = cfg.engine();
    let (a, b) = (cfg.metric(&g.phi0)?, cfg.metric(&g.phi1)?);
    let oracle = GeodesicOracle::new(&a, &b, &g.oracle)?;
    run.at_most("oracle sup |c|", oracle.residual(), g.oracle.tolerance);
    let star = SampledGeodesic::new(&oracle, &g.grid)?;
    let chi = g.chi_offset.map(|offset| CanonicalWeight { offset }).unwrap_or_else(|| CanonicalWeight::normalized(a.k()));
    let (ma, mb) = (Metric::Toric(a.clone()), Metric::Toric(b.clone()));
    let mut e = Vec::new();
    let mut top = None;
    for &p in &g.p {
        let geo = BergmanGeodesic::new(&engine, &ma, &mb, p, chi, g.lambda_cap)?;
        let d = sup_distance(&geo, &star);
        log::info!("p = {p}: e = {d:.6e}");
        e.push(d);
        top = Some(geo);
    }
    let rows: Vec<GeodesicRow> =
        g.p.iter().zip(&e).map(|(&p, &e)| GeodesicRow { p, e, e_p_over_log_p: e * p as f64 / (p as f64).ln() }).collect();
    run.write("geodesic.csv", csv_table(&rows)?)?;
    let fit = rate_fit(&g.p, &e)?;
    let decreasing = e.windows(2).all(|w| w[1] < w[0]) || fit.verdict == RateVerdict::PassTrivial;
    run.holds("e(p) strictly decreasing", decreasing);
    run.holds("rate fit", fit.verdict != RateVerdict::Fail);
    let dom = match (&top, g.domination_s.is_empty()) {
        (Some(geo), false) => {
            let d = domination(&engine, geo, &oracle, &g.domination_s, &g.grid.x_values(), g.domination_tol)?;
            let worst = d.pointwise.iter().chain(&d.form).cloned().fold(f64::INFINITY, f64::min);
            run.at_least(format!("domination B_s / B_(p phi*) - 1 at p={}", geo.p), worst, -g.domination_tol);
            Some(d)
        }
        _ => None,
    };
    let report = GeodesicReport {
        phi0: a.name(),
        phi1: b.name(),
        chi_offset: chi.offset,
        oracle_residual: oracle.residual(),
        rate: &fit,
        e_decreasing: decreasing,
        domination: dom,
    };
    run.json("geodesic.json", &report)?;
    if g.plot {
        run.write("geodesic.svg", loglog_svg(&g.p, &e, fit.c_hat))?;
    }
    Ok(())
}
