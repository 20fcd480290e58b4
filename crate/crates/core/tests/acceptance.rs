//! Acceptance suite: one line per criterion, tolerances pinned below.

use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use dilab::direct_image::asymptotics::{trace_a_limit, trace_asymptotics};
use dilab::direct_image::{a_matrix, curvature_e, curvature_f, Coef, ComplexField, MetricPath, Term};
use dilab::engine::Engine;
use dilab::functionals::{
    balance_fit, class_volume, direction, functional_report, l_p, scan_points, sigma_moment, tilde_l_p, BalanceResidual,
    ReportConfig,
};
use dilab::geodesics::{
    domination, rate_fit, sup_distance, BergmanGeodesic, CanonicalWeight, DistanceGrid, GeodesicOracle, OracleConfig,
    RateVerdict, SampledGeodesic,
};
use dilab::geometry::{presets, FiberFunction, Metric, ScalarField};
use dilab::spectra::eigen::DEFAULT_LAMBDA_CAP;
use dilab::Result;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2024;

// 1
const IDENTITY_REL: f64 = 1e-6;
const IDENTITY_ABS: f64 = 1e-9;
// 2
const A_FORM_FLOOR: f64 = -1e-10;
const THETA_E_FLOOR: f64 = -1e-8;
// 3
const PULLBACK_NORM: f64 = 1e-6;
const HOLOMORPHIC_A: f64 = 1e-8;
// 4
const F_BOUND: f64 = 1e-6;
// 5
const FS_DENSITY_REL: f64 = 1e-8;
const CAUCHY_REL: f64 = 0.25;
const KAPPA_DRIFT: f64 = 0.1;
// 6
const TRACE_A_REL: f64 = 0.1;
// 7
const TRACE_REL: f64 = 0.05;
// 8
const SHIFT_INVARIANCE: f64 = 1e-10;
const DDBAR_TRACE_REL: f64 = 1e-5;
const CONVEXITY_SLACK: f64 = 1e-8;
// 9
const ORACLE_TOL: f64 = 1e-4;
const DOMINATION_REL: f64 = 1e-8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn field(f: FiberFunction) -> ComplexField {
    ComplexField::real(Arc::new(f))
}

fn bump(k: u32) -> Metric {
    Metric::Toric(presets::fs_bump(k, 0.1, 0.5, 1.0).unwrap())
}

fn semipositive_path() -> MetricPath {
    // c = sech at t = 0
    MetricPath::affine(
        "abs_t2_bump",
        Metric::Toric(presets::fs(1)),
        vec![Term::new(Coef::AbsT2, FiberFunction::sech_bump(0.2, 1.0)), Term::new(Coef::ReT, FiberFunction::Constant(0.5))],
    )
}

fn identity() -> Result<Outcome> {
    let e = Engine::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for k in [1u32, 2] {
        let base = Metric::Toric(presets::fs(k));
        let generic = MetricPath::affine(
            "generic",
            bump(k),
            vec![
                Term::new(Coef::ReT, FiberFunction::sech_bump(-0.4, 1.0)),
                Term::new(Coef::AbsT2, FiberFunction::sech_bump(0.6, 0.5)),
            ],
        );
        let paths = [
            MetricPath::constant_shift(base.clone(), 0.7),
            MetricPath::affine("abs_t2_bump", base, vec![Term::new(Coef::AbsT2, FiberFunction::sech_bump(0.2, 1.0))]),
            generic,
        ];
        for path in &paths {
            for p in [2u32, 4, 8] {
                let t = Complex64::from_polar(0.2 * rng.random::<f64>(), std::f64::consts::TAU * rng.random::<f64>());
                let r = curvature_e(&e, path, p, t)?;
                if !r.identity_holds(IDENTITY_REL, IDENTITY_ABS) {
                    return outcome(false, format!("{} k={k} p={p}: residual {:?}", path.name, r.residual));
                }
                worst = worst.max(r.residual.filter(|v| v.is_finite()).unwrap_or(0.0));
                cases += 1;
            }
        }
    }
    outcome(true, format!("{cases} cases, worst relative residual {worst:.2e}"))
}

fn positivity() -> Result<Outcome> {
    let e = Engine::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let m = bump(1);
    let mut worst = f64::INFINITY;
    for _ in 0..25 {
        let mu = field(FiberFunction::sech_bump(rng.random_range(-2.0..2.0), rng.random_range(0.5..2.0)));
        let p = rng.random_range(2..10);
        let a = a_matrix(&e, &m, p, &mu)?;
        for _ in 0..4 {
            let u = DVector::from_fn(a.space.d, |j, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * (-0.5 * a.log_scale[j]).exp()
            });
            worst = worst.min(a.form(&u) / a.norm_sqr(&u));
        }
    }
    let path = semipositive_path();
    let mut theta = f64::INFINITY;
    for p in [2u32, 4, 8] {
        theta = theta.min(curvature_e(&e, &path, p, Complex64::default())?.min_eigenvalue);
    }
    outcome(
        worst >= A_FORM_FLOOR && theta >= THETA_E_FLOOR,
        format!("min A over 100 pairs {worst:.3e}, min eig theta_E {theta:.3e}"),
    )
}

fn degeneracy() -> Result<Outcome> {
    let e = Engine::default();
    let pb = MetricPath::pullback("pullback", presets::fs_bump(1, 0.1, 0.5, 1.0)?);
    let mut norm: f64 = 0.0;
    for p in [2u32, 4, 8, 16] {
        norm = norm.max(curvature_e(&e, &pb, p, Complex64::new(0.2, 0.0))?.theta_orthonormal()?.norm());
    }
    let fs = Metric::Toric(presets::fs(1));
    let mut a_max: f64 = 0.0;
    for p in [4u32, 16] {
        let a = a_matrix(&e, &fs, p, &field(FiberFunction::fs_moment()).scaled(p as f64))?;
        a_max = a_max.max(a.orthonormal()?.norm());
    }
    outcome(norm < PULLBACK_NORM && a_max < HOLOMORPHIC_A, format!("pullback |theta| {norm:.2e}, holomorphic |A| {a_max:.2e}"))
}

fn f_bound() -> Result<Outcome> {
    let e = Engine::default();
    let path = semipositive_path();
    let mut excess = f64::NEG_INFINITY;
    for p in [2u32, 5, 9] {
        excess = excess.max(curvature_f(&e, &path, p, Complex64::default())?.bound_excess.unwrap_or(f64::INFINITY));
    }
    let o = GeodesicOracle::new(&presets::fs(1), &presets::fs_bump(1, 0.1, 0.5, 1.0)?, &OracleConfig::default())?;
    let geo = MetricPath::geodesic("geodesic", o);
    let mut top = f64::NEG_INFINITY;
    for p in [2u32, 4, 8] {
        for s in [0.25, 0.6] {
            top = top.max(curvature_f(&e, &geo, p, Complex64::new(s, 0.0))?.max_eigenvalue);
        }
    }
    outcome(excess <= F_BOUND && top <= F_BOUND, format!("max eig(theta_F - bound) {excess:.3e}, geodesic max eig theta_F {top:.3e}"))
}

fn bergman_density() -> Result<Outcome> {
    let e = Engine::default();
    let mut flat: f64 = 0.0;
    for k in [1u32, 2] {
        let fs = Metric::Toric(presets::fs(k));
        for p in [4u32, 16] {
            let bal = BalanceResidual::new(&e, &fs, p)?;
            flat = flat.max(scan_points(&fs).iter().fold(0.0f64, |s, pt| s.max(bal.value(pt).abs())) * class_volume(k));
        }
    }
    let m = Metric::Toric(presets::fs_bump(2, 0.05, 0.0, 1.0)?);
    let (a, b) = (balance_fit(&e, &m, 32)?, balance_fit(&e, &m, 64)?);
    let gap = a.values.iter().zip(&b.values).fold(0.0f64, |s, (x, y)| s.max((x - y).abs())) / a.sup;
    let drift = (b.kappa / a.kappa - 1.0).abs();
    outcome(
        flat < FS_DENSITY_REL && gap < CAUCHY_REL && drift < KAPPA_DRIFT,
        format!("fs deviation {flat:.2e}, p sigma gap 32/64 {gap:.3}, kappa {:.4} -> {:.4} (drift {drift:.3})", a.kappa, b.kappa),
    )
}

fn trace_a() -> Result<Outcome> {
    let e = Engine::default();
    let fs = Metric::Toric(presets::fs(1));
    let (limit, rows) = trace_a_limit(&e, &fs, &field(FiberFunction::sech_bump(0.3, 1.0)), &[64])?;
    let rel = rows[0].residual.abs() / limit;
    let (_, hol) = trace_a_limit(&e, &fs, &field(FiberFunction::fs_moment()), &[8, 64])?;
    let h = hol.iter().fold(0.0f64, |s, r| s.max(r.measured.abs()));
    outcome(rel < TRACE_A_REL && h < HOLOMORPHIC_A, format!("limit {limit:.5}, relative gap at p=64 {rel:.3}, holomorphic {h:.2e}"))
}

fn trace_asymptotic() -> Result<Outcome> {
    let e = Engine::default();
    let path = MetricPath::affine(
        "generic",
        Metric::Toric(presets::fs_bump(2, 0.2, 0.5, 1.0)?),
        vec![Term::new(Coef::ReT, FiberFunction::sech_bump(-0.4, 1.0))],
    );
    let (terms, rows) = trace_asymptotics(&e, &path, Complex64::new(0.1, 0.05), &[4, 8, 16, 32, 64])?;
    let decreasing = rows.windows(2).all(|w| w[1].residual.abs() < w[0].residual.abs());
    let rel = rows[4].residual.abs() / terms.order_one();
    let r: Vec<String> = rows.iter().map(|r| format!("{:.2e}", r.residual)).collect();
    outcome(decreasing && rel < TRACE_REL, format!("r(p) = [{}], |r(64)| / order one {rel:.4}", r.join(", ")))
}

fn functionals() -> Result<Outcome> {
    let e = Engine::default();
    let f = bump(1);
    let fs = Metric::Toric(presets::fs(1));
    let p = 6;
    let shift = (tilde_l_p(&e, &f, p, &fs)? - tilde_l_p(&e, &Metric::Toric(f.as_toric().unwrap().shifted(0.9)), p, &fs)?).abs();

    let mu: Arc<dyn ScalarField> = Arc::new(FiberFunction::sech_bump(-0.3, 1.0));
    let path = direction(&f, mu.clone());
    let exact = sigma_moment(&e, &f, p, mu.as_ref())?;
    let fd = |h: f64| -> Result<f64> {
        let a = tilde_l_p(&e, &path.metric_at(Complex64::new(h, 0.0))?, p, &fs)?;
        let b = tilde_l_p(&e, &path.metric_at(Complex64::new(-h, 0.0))?, p, &fs)?;
        Ok((a - b) / (2.0 * h) - exact)
    };
    let (e1, e2) = (fd(0.02)?, fd(0.01)?);
    let second_order = (e1 / e2 - 4.0).abs() < 0.5;

    let mixed = MetricPath::affine(
        "mixed",
        f.clone(),
        vec![Term::new(Coef::ReT, FiberFunction::sech_bump(-0.4, 1.0)), Term::new(Coef::AbsT2, FiberFunction::sech_bump(0.6, 0.5))],
    );
    let t = Complex64::new(0.1, 0.05);
    let q = 5;
    let lp = |dt: Complex64| -> Result<f64> { l_p(&e, &mixed.metric_at(t + dt)?, q) };
    let lap = |h: f64| -> Result<f64> {
        let c = lp(Complex64::default())?;
        let s = lp(Complex64::new(h, 0.0))? + lp(Complex64::new(-h, 0.0))? + lp(Complex64::new(0.0, h))? + lp(Complex64::new(0.0, -h))?;
        Ok((s - 4.0 * c) / (4.0 * h * h))
    };
    let ddbar = (4.0 * lap(5e-3)? - lap(1e-2)?) / 3.0;
    let tr = curvature_e(&e, &mixed, q, t)?.trace / q as f64;
    let ddbar_gap = (ddbar - tr).abs() / tr.abs();

    let quad = MetricPath::affine(
        "quadratic",
        fs.clone(),
        vec![Term::new(Coef::ReT2, FiberFunction::sech_bump(0.0, 1.0)), Term::new(Coef::ReT, FiberFunction::Constant(0.3))],
    );
    let rep = functional_report(&e, &quad, 6, &ReportConfig { s_min: -0.2, s_max: 0.2, slack: CONVEXITY_SLACK, ..Default::default() })?;
    let v = &rep.l_p_convexity;
    outcome(
        shift < SHIFT_INVARIANCE && second_order && ddbar_gap < DDBAR_TRACE_REL && v.c_nonnegative && v.convex,
        format!(
            "shift {shift:.1e}, fd errors {e1:.2e}/{e2:.2e} (ratio {:.2}), ddbar L_p vs trace {ddbar_gap:.1e}, min d2 L_p {:.3e} (tol {:.1e})",
            e1 / e2,
            v.min_second_difference,
            v.tolerance
        ),
    )
}

fn geodesic() -> Result<Outcome> {
    let e = Engine::default();
    let (a, b) = (presets::fs(1), presets::fs_bump(1, 0.1, 0.5, 1.0)?);
    let oracle = GeodesicOracle::new(&a, &b, &OracleConfig { tolerance: ORACLE_TOL, ..Default::default() })?;
    let grid = DistanceGrid::default();
    let star = SampledGeodesic::new(&oracle, &grid)?;
    let p_list = [10u32, 20, 40, 80, 160];
    let (ma, mb) = (Metric::Toric(a.clone()), Metric::Toric(b.clone()));
    let mut e_list = Vec::new();
    let mut last = None;
    for &p in &p_list {
        let g = BergmanGeodesic::new(&e, &ma, &mb, p, CanonicalWeight::normalized(1), DEFAULT_LAMBDA_CAP)?;
        e_list.push(sup_distance(&g, &star));
        last = Some(g);
    }
    let decreasing = e_list.windows(2).all(|w| w[1] < w[0]);
    let fit = rate_fit(&p_list, &e_list)?;
    let dom = domination(&e, &last.unwrap(), &oracle, &[0.25, 0.5, 0.75], &grid.x_values(), DOMINATION_REL)?;
    let worst = dom.pointwise.iter().chain(&dom.form).cloned().fold(f64::INFINITY, f64::min);
    let norm: Vec<String> = fit.normalized.iter().map(|v| format!("{v:.4}")).collect();
    outcome(
        oracle.residual() < ORACLE_TOL && decreasing && fit.verdict == RateVerdict::Pass && dom.pass,
        format!(
            "oracle {:.1e}, e(p) p / log p = [{}], C_hat {:.4}, domination min {worst:.2e}",
            oracle.residual(),
            norm.join(", "),
            fit.c_hat
        ),
    )
}

/// The CLI binary next to this test executable, built on demand.
fn cli_binary() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let dir = exe.parent().unwrap().parent().unwrap().to_path_buf();
    let bin = dir.join(format!("dilab{}", std::env::consts::EXE_SUFFIX));
    if !bin.exists() {
        let mut cmd = Command::new(env!("CARGO"));
        cmd.args(["build", "-p", "dilab-cli", "--bin", "dilab"]);
        if dir.file_name().is_some_and(|n| n == "release") {
            cmd.arg("--release");
        }
        let status = cmd.status().expect("cargo runs");
        assert!(status.success());
    }
    bin
}

fn selftest_determinism() -> Result<Outcome> {
    let bin = cli_binary();
    let tmp = std::env::temp_dir().join(format!("dilab-acceptance-{}", std::process::id()));
    let mut trees = Vec::new();
    let mut elapsed = 0.0f64;
    for run in ["a", "b"] {
        let out = tmp.join(run);
        let start = Instant::now();
        let status = Command::new(&bin).args(["selftest", "--threads", "1", "--out"]).arg(&out).output()?.status;
        elapsed = elapsed.max(start.elapsed().as_secs_f64());
        if !status.success() {
            return outcome(false, format!("selftest exited with {status}"));
        }
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)?
            .map(|e| {
                let e = e?;
                Ok((e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path())?))
            })
            .collect::<std::io::Result<_>>()?;
        files.sort();
        trees.push(files);
    }
    let _ = std::fs::remove_dir_all(&tmp);
    let same = trees[0] == trees[1];
    outcome(same && elapsed < 120.0, format!("{} files identical: {same}, slowest run {elapsed:.1}s", trees[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("curvature identity", identity),
        ("positivity", positivity),
        ("degeneracy", degeneracy),
        ("F-bundle bound", f_bound),
        ("Bergman density", bergman_density),
        ("trace of A", trace_a),
        ("trace asymptotics", trace_asymptotic),
        ("functionals", functionals),
        ("geodesic convergence", geodesic),
        ("selftest determinism", selftest_determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run().unwrap_or_else(|e| Outcome { pass: false, detail: format!("error: {e}") });
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<22} {}  {} [{:.1}s]",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
