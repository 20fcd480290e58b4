//! The JSON experiment configuration.

use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use dilab::direct_image::{Coef, MetricPath, Term};
use dilab::engine::{ChartGrid, Engine, EngineMode};
use dilab::functionals::ReportConfig;
use dilab::geodesics::{DistanceGrid, GeodesicOracle, OracleConfig};
use dilab::geometry::fiber::Metric;
use dilab::geometry::functions::{FiberFunction, ScalarField};
use dilab::geometry::presets;
use dilab::geometry::toric::ToricPotential;
use dilab::quadrature::QuadConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Degree used by metrics given as bare preset strings.
    pub k: Option<u32>,
    pub engine: EngineConfig,
    pub curvature: CurvatureConfig,
    pub asymptotics: AsymptoticsConfig,
    pub functionals: FunctionalsConfig,
    pub geodesic: GeodesicConfig,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    pub quadrature: QuadConfig,
    pub chart_grid: ChartGrid,
    pub mode: EngineMode,
}

/// A toric metric: a preset string, or an object naming a preset or a CSV profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricSpec {
    Preset(String),
    Object(MetricObject),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricObject {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub k: Option<u32>,
    #[serde(default = "default_slope_tol")]
    pub slope_tol: f64,
}

fn default_slope_tol() -> f64 {
    1e-6
}

impl MetricSpec {
    fn preset(s: &str, k: u32) -> Self {
        MetricSpec::Object(MetricObject { preset: Some(s.into()), csv: None, k: Some(k), slope_tol: default_slope_tol() })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionSpec {
    Constant(f64),
    SechBump { x0: f64, width: f64 },
    FsMoment,
}

impl FunctionSpec {
    pub fn build(&self) -> Result<FiberFunction> {
        Ok(match self {
            FunctionSpec::Constant(c) => FiberFunction::Constant(*c),
            FunctionSpec::SechBump { x0, width } => {
                if !(*width > 0.0) {
                    bail!("sech_bump width must be positive, got {width}");
                }
                FiberFunction::sech_bump(*x0, *width)
            }
            FunctionSpec::FsMoment => FiberFunction::fs_moment(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coef: Coef,
    pub f: FunctionSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    ConstantShift { base: MetricSpec, c: f64 },
    Pullback { base: MetricSpec },
    Affine { base: MetricSpec, terms: Vec<TermSpec> },
    Geodesic { phi0: MetricSpec, phi1: MetricSpec, #[serde(default)] oracle: OracleConfig },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurvatureConfig {
    pub path: PathSpec,
    pub p: Vec<u32>,
    /// `[re, im]`; drawn from the seed when absent.
    pub t: Option<[f64; 2]>,
    pub identity_rel_tol: f64,
    pub identity_abs_tol: f64,
    pub positivity_tol: f64,
    pub bound_tol: f64,
}

impl Default for CurvatureConfig {
    fn default() -> Self {
        CurvatureConfig {
            path: PathSpec::Affine {
                base: MetricSpec::preset("fs_bump(0.1,0.5,1)", 1),
                terms: vec![
                    TermSpec { coef: Coef::ReT, f: FunctionSpec::SechBump { x0: -0.4, width: 1.0 } },
                    TermSpec { coef: Coef::AbsT2, f: FunctionSpec::SechBump { x0: 0.6, width: 0.5 } },
                ],
            },
            p: vec![2, 4, 8],
            t: None,
            identity_rel_tol: 1e-6,
            identity_abs_tol: 1e-9,
            positivity_tol: 1e-8,
            bound_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AsymptoticsConfig {
    pub path: PathSpec,
    pub t: [f64; 2],
    pub p: Vec<u32>,
    /// `|r(p_max)|` allowed, relative to the order-one terms.
    pub trace_rel_tol: f64,
    pub a_metric: MetricSpec,
    pub a_mu: FunctionSpec,
    pub a_p: Vec<u32>,
    /// `|tr A/d - limit|` allowed at the largest `p`, relative to the limit.
    pub a_rel_tol: f64,
    pub density_metric: MetricSpec,
    pub density_p: Vec<u32>,
    /// Allowed sup gap between consecutive `p sigma_p`, relative to the earlier one.
    pub cauchy_rel_tol: f64,
    /// Allowed drift of the fitted proportionality constant between consecutive `p`.
    pub kappa_rel_tol: f64,
}

impl Default for AsymptoticsConfig {
    fn default() -> Self {
        AsymptoticsConfig {
            path: PathSpec::Affine {
                base: MetricSpec::preset("fs_bump(0.2,0.5,1)", 2),
                terms: vec![TermSpec { coef: Coef::ReT, f: FunctionSpec::SechBump { x0: -0.4, width: 1.0 } }],
            },
            t: [0.1, 0.05],
            p: vec![4, 8, 16, 32, 64],
            trace_rel_tol: 0.05,
            a_metric: MetricSpec::preset("fs", 1),
            a_mu: FunctionSpec::SechBump { x0: 0.3, width: 1.0 },
            a_p: vec![4, 16, 64],
            a_rel_tol: 0.1,
            density_metric: MetricSpec::preset("fs_bump(0.05,0,1)", 2),
            density_p: vec![32, 64],
            cauchy_rel_tol: 0.25,
            kappa_rel_tol: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FunctionalsConfig {
    pub path: PathSpec,
    pub p: u32,
    pub report: ReportConfig,
    /// Constant added to check the shift invariance of `~L_p`.
    pub shift: f64,
    pub shift_tol: f64,
}

impl Default for FunctionalsConfig {
    fn default() -> Self {
        FunctionalsConfig {
            path: PathSpec::Affine {
                base: MetricSpec::preset("fs", 1),
                terms: vec![
                    TermSpec { coef: Coef::ReT2, f: FunctionSpec::SechBump { x0: 0.0, width: 1.0 } },
                    TermSpec { coef: Coef::ReT, f: FunctionSpec::Constant(0.3) },
                ],
            },
            p: 6,
            report: ReportConfig { s_min: -0.2, s_max: 0.2, ..Default::default() },
            shift: 0.7,
            shift_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeodesicConfig {
    pub phi0: MetricSpec,
    pub phi1: MetricSpec,
    pub p: Vec<u32>,
    pub oracle: OracleConfig,
    pub grid: DistanceGrid,
    /// Constant in the weight `chi` on `K`; `log(k / 2π)` when absent.
    pub chi_offset: Option<f64>,
    pub lambda_cap: f64,
    /// Interior `s` values for the domination check at the largest `p`; empty skips it.
    pub domination_s: Vec<f64>,
    pub domination_tol: f64,
    pub plot: bool,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        GeodesicConfig {
            phi0: MetricSpec::Preset("fs".into()),
            phi1: MetricSpec::Preset("fs_bump(0.1,0.5,1)".into()),
            p: vec![10, 20, 40, 80, 160],
            oracle: OracleConfig::default(),
            grid: DistanceGrid::default(),
            chi_offset: None,
            lambda_cap: dilab::spectra::eigen::DEFAULT_LAMBDA_CAP,
            domination_s: vec![0.5],
            domination_tol: 1e-8,
            plot: true,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{name} must be positive and finite, got {v}");
    }
    Ok(())
}

fn p_list(name: &str, p: &[u32], min_len: usize) -> Result<()> {
    if p.len() < min_len {
        bail!("{name} needs at least {min_len} entries");
    }
    if p.iter().any(|&v| v == 0) || p.windows(2).any(|w| w[1] <= w[0]) {
        bail!("{name} must be strictly increasing positive integers, got {p:?}");
    }
    Ok(())
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg: Config = match path {
            Some(p) => {
                let f = File::open(p).with_context(|| format!("opening config {}", p.display()))?;
                serde_json::from_reader(f).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => Config::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == Some(0) {
            bail!("k must be at least 1");
        }
        let q = &self.engine.quadrature;
        for (n, v) in [
            ("engine.quadrature.rel_tol", q.rel_tol),
            ("engine.quadrature.abs_floor", q.abs_floor),
            ("engine.quadrature.log_drop", q.log_drop),
            ("engine.quadrature.scan_step", q.scan_step),
            ("engine.quadrature.scan_half_width", q.scan_half_width),
        ] {
            positive(n, v)?;
        }
        if q.initial_panels == 0 || q.max_panels < q.initial_panels {
            bail!("engine.quadrature panel counts are inconsistent");
        }
        let c = &self.curvature;
        p_list("curvature.p", &c.p, 1)?;
        for (n, v) in [
            ("curvature.identity_rel_tol", c.identity_rel_tol),
            ("curvature.identity_abs_tol", c.identity_abs_tol),
            ("curvature.positivity_tol", c.positivity_tol),
            ("curvature.bound_tol", c.bound_tol),
        ] {
            positive(n, v)?;
        }
        let a = &self.asymptotics;
        p_list("asymptotics.p", &a.p, 2)?;
        p_list("asymptotics.a_p", &a.a_p, 1)?;
        p_list("asymptotics.density_p", &a.density_p, 2)?;
        for (n, v) in [
            ("asymptotics.trace_rel_tol", a.trace_rel_tol),
            ("asymptotics.a_rel_tol", a.a_rel_tol),
            ("asymptotics.cauchy_rel_tol", a.cauchy_rel_tol),
            ("asymptotics.kappa_rel_tol", a.kappa_rel_tol),
        ] {
            positive(n, v)?;
        }
        let f = &self.functionals;
        if f.p == 0 {
            bail!("functionals.p must be positive");
        }
        positive("functionals.shift_tol", f.shift_tol)?;
        positive("functionals.report.slack", f.report.slack)?;
        let g = &self.geodesic;
        p_list("geodesic.p", &g.p, 4)?;
        positive("geodesic.oracle.tolerance", g.oracle.tolerance)?;
        positive("geodesic.oracle.fd_step", g.oracle.fd_step)?;
        positive("geodesic.grid.x_half_width", g.grid.x_half_width)?;
        positive("geodesic.lambda_cap", g.lambda_cap)?;
        positive("geodesic.domination_tol", g.domination_tol)?;
        if g.domination_s.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
            bail!("geodesic.domination_s must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn engine(&self) -> Engine {
        Engine::new(self.engine.quadrature, self.engine.chart_grid, self.engine.mode)
    }

    fn default_k(&self) -> u32 {
        self.k.unwrap_or(1)
    }

    pub fn metric(&self, spec: &MetricSpec) -> Result<ToricPotential> {
        match spec {
            MetricSpec::Preset(s) => Ok(presets::parse(s, self.default_k())?),
            MetricSpec::Object(o) => {
                let k = o.k.unwrap_or(self.default_k());
                if k == 0 {
                    bail!("metric degree must be at least 1");
                }
                match (&o.preset, &o.csv) {
                    (Some(s), None) => Ok(presets::parse(s, k)?),
                    (None, Some(path)) => {
                        positive("slope_tol", o.slope_tol)?;
                        let f = File::open(path).with_context(|| format!("opening profile {}", path.display()))?;
                        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                        Ok(presets::load_csv(f, k, &name, o.slope_tol)?)
                    }
                    _ => bail!("a metric object needs exactly one of `preset` and `csv`"),
                }
            }
        }
    }

    pub fn path(&self, spec: &PathSpec) -> Result<MetricPath> {
        Ok(match spec {
            PathSpec::ConstantShift { base, c } => MetricPath::constant_shift(Metric::Toric(self.metric(base)?), *c),
            PathSpec::Pullback { base } => {
                let b = self.metric(base)?;
                MetricPath::pullback(format!("pullback:{}", b.name()), b)
            }
            PathSpec::Affine { base, terms } => {
                let b = self.metric(base)?;
                let terms = terms
                    .iter()
                    .map(|t| Ok(Term { coef: t.coef, field: Arc::new(t.f.build()?) as Arc<dyn ScalarField> }))
                    .collect::<Result<Vec<_>>>()?;
                MetricPath::affine(format!("affine:{}", b.name()), Metric::Toric(b), terms)
            }
            PathSpec::Geodesic { phi0, phi1, oracle } => {
                positive("oracle.tolerance", oracle.tolerance)?;
                let (a, b) = (self.metric(phi0)?, self.metric(phi1)?);
                let name = format!("geodesic:{}->{}", a.name(), b.name());
                MetricPath::geodesic(name, GeodesicOracle::new(&a, &b, oracle)?)
            }
        })
    }
}
