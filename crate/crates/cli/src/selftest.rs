//! A reduced pass over every check, sized to finish quickly.

use std::sync::Arc;

use anyhow::Result;
use dilab::direct_image::asymptotics::trace_asymptotics;
use dilab::direct_image::{a_matrix, curvature_e, curvature_f, Coef, ComplexField, MetricPath, Term};
use dilab::engine::Engine;
use dilab::functionals::{functional_report, tilde_l_p, BalanceResidual, ReportConfig};
use dilab::geodesics::{domination, rate_fit, sup_distance, BergmanGeodesic, CanonicalWeight, DistanceGrid, GeodesicOracle, OracleConfig, RateVerdict, SampledGeodesic};
use dilab::geometry::fiber::Metric;
use dilab::geometry::presets;
use dilab::geometry::FiberFunction;
use dilab::spectra::eigen::DEFAULT_LAMBDA_CAP;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::commands::{identity_check, min_c, random_t};
use crate::output::Run;

fn bump_path(k: u32) -> Result<MetricPath> {
    Ok(MetricPath::affine(
        "generic",
        Metric::Toric(presets::fs_bump(k, 0.1, 0.5, 1.0)?),
        vec![
            Term::new(Coef::ReT, FiberFunction::sech_bump(-0.4, 1.0)),
            Term::new(Coef::AbsT2, FiberFunction::sech_bump(0.6, 0.5)),
        ],
    ))
}

fn field(f: FiberFunction) -> ComplexField {
    ComplexField::real(Arc::new(f))
}

#[derive(Serialize)]
struct GeodesicRow {
    p: u32,
    e: f64,
}

pub fn selftest(run: &mut Run, seed: u64) -> Result<()> {
    let engine = Engine::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = random_t(seed);

    // curvature identity
    let shift = MetricPath::constant_shift(Metric::Toric(presets::fs(1)), 0.7);
    for (name, path) in [("shift k=1", shift.clone()), ("bump k=1", bump_path(1)?), ("bump k=2", bump_path(2)?)] {
        for p in [2u32, 4, 8] {
            let r = curvature_e(&engine, &path, p, t)?;
            identity_check(run, format!("identity {name} p={p}"), &r, 1e-6, 1e-9);
        }
    }

    // positivity of A and of Θ^E on a semipositive path
    let m = Metric::Toric(presets::fs_bump(1, 0.1, 0.5, 1.0)?);
    let mut worst = f64::INFINITY;
    for _ in 0..20 {
        let mu = field(FiberFunction::sech_bump(rng.random_range(-2.0..2.0), rng.random_range(0.5..2.0)));
        let a = a_matrix(&engine, &m, 4, &mu)?;
        for _ in 0..5 {
            let u = DVector::from_fn(a.space.d, |j, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * (-0.5 * a.log_scale[j]).exp()
            });
            worst = worst.min(a.form(&u) / a.norm_sqr(&u));
        }
    }
    run.at_least("A form min over 100 pairs", worst, -1e-10);
    let semi = MetricPath::affine(
        "semipositive",
        Metric::Toric(presets::fs(1)),
        vec![Term::new(Coef::AbsT2, FiberFunction::sech_bump(0.2, 1.0)), Term::new(Coef::ReT, FiberFunction::Constant(0.5))],
    );
    let t0 = Complex64::default();
    run.at_least("semipositive path min c", min_c(&semi, t0)?, 0.0);
    for p in [2u32, 5] {
        let e = curvature_e(&engine, &semi, p, t0)?;
        run.at_least(format!("theta_e min eigenvalue p={p}"), e.min_eigenvalue, -1e-8);
        let f = curvature_f(&engine, &semi, p, t0)?;
        run.at_most(format!("theta_f bound excess p={p}"), f.bound_excess.unwrap_or(f64::NAN), 1e-6);
    }

    // degeneracy
    let pb = MetricPath::pullback("pullback", presets::fs_bump(1, 0.1, 0.5, 1.0)?);
    for p in [2u32, 4, 8, 16] {
        let r = curvature_e(&engine, &pb, p, Complex64::new(0.2, 0.0))?;
        run.at_most(format!("pullback |theta| p={p}"), r.theta_orthonormal()?.norm(), 1e-6);
    }
    let fs = Metric::Toric(presets::fs(1));
    for p in [4u32, 16] {
        let a = a_matrix(&engine, &fs, p, &field(FiberFunction::fs_moment()).scaled(p as f64))?;
        run.at_most(format!("holomorphic gradient tr A / d p={p}"), (a.trace()? / a.space.d as f64).abs(), 1e-8);
    }

    // Θ^F along the geodesic
    let (a0, a1) = (presets::fs(1), presets::fs_bump(1, 0.1, 0.5, 1.0)?);
    let oracle = GeodesicOracle::new(&a0, &a1, &OracleConfig::default())?;
    run.at_most("oracle sup |c|", oracle.residual(), 1e-4);
    let geo = MetricPath::geodesic("geodesic", oracle.clone());
    for p in [2u32, 4] {
        let f = curvature_f(&engine, &geo, p, Complex64::new(0.4, 0.0))?;
        run.at_most(format!("geodesic theta_f max eigenvalue p={p}"), f.max_eigenvalue, 1e-6);
    }

    // Bergman density of FS
    let bal = BalanceResidual::new(&engine, &fs, 12)?;
    let dev = dilab::functionals::scan_points(&fs).iter().fold(0.0f64, |s, pt| s.max(bal.value(pt).abs()));
    run.at_most("fs density deviation from d/Vol (relative)", dev * dilab::functionals::class_volume(1), 1e-8);

    // trace asymptotics on a generic O(2) path
    let generic = MetricPath::affine(
        "generic",
        Metric::Toric(presets::fs_bump(2, 0.2, 0.5, 1.0)?),
        vec![Term::new(Coef::ReT, FiberFunction::sech_bump(-0.4, 1.0))],
    );
    let (_, rows) = trace_asymptotics(&engine, &generic, Complex64::new(0.1, 0.05), &[4, 8, 16])?;
    run.holds("trace residual decreasing p=4,8,16", rows.windows(2).all(|w| w[1].residual.abs() < w[0].residual.abs()));

    // functionals
    let cfg = ReportConfig { s_min: -0.2, s_max: 0.2, points: 7, ..Default::default() };
    let quad = MetricPath::affine(
        "quadratic",
        Metric::Toric(presets::fs(1)),
        vec![Term::new(Coef::ReT2, FiberFunction::sech_bump(0.0, 1.0)), Term::new(Coef::ReT, FiberFunction::Constant(0.3))],
    );
    let rep = functional_report(&engine, &quad, 6, &cfg)?;
    let v = &rep.l_p_convexity;
    run.at_least("min second difference of L_p", v.min_second_difference, -v.tolerance);
    let a = tilde_l_p(&engine, &m, 6, &m)?;
    let b = tilde_l_p(&engine, &Metric::Toric(presets::fs_bump(1, 0.1, 0.5, 1.0)?.shifted(0.7)), 6, &m)?;
    run.at_most("tilde L_p shift invariance", (a - b).abs(), 1e-10);

    // Bergman geodesics
    let grid = DistanceGrid { s_points: 11, x_points: 161, ..Default::default() };
    let star = SampledGeodesic::new(&oracle, &grid)?;
    let p_list = [8u32, 16, 32, 64];
    let mut e = Vec::new();
    for &p in &p_list {
        let g = BergmanGeodesic::new(&engine, &Metric::Toric(a0.clone()), &Metric::Toric(a1.clone()), p, CanonicalWeight::normalized(1), DEFAULT_LAMBDA_CAP)?;
        e.push(sup_distance(&g, &star));
        if p == 16 {
            let d = domination(&engine, &g, &oracle, &[0.5], &grid.x_values(), 1e-8)?;
            let worst = d.pointwise.iter().chain(&d.form).cloned().fold(f64::INFINITY, f64::min);
            run.at_least("domination p=16 s=0.5", worst, -1e-8);
        }
    }
    run.holds("e(p) strictly decreasing", e.windows(2).all(|w| w[1] < w[0]));
    let fit = rate_fit(&p_list, &e)?;
    run.holds("rate fit", fit.verdict != RateVerdict::Fail);
    let rows: Vec<GeodesicRow> = p_list.iter().zip(&e).map(|(&p, &e)| GeodesicRow { p, e }).collect();
    run.json("selftest.json", &serde_json::json!({ "t": [t.re, t.im], "geodesic": rows, "rate": fit }))
}
