//! Artifacts, checks and the run summary.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Output directory plus the checks and files produced so far.
pub struct Run {
    dir: PathBuf,
    pub artifacts: Vec<String>,
    pub checks: Vec<Check>,
}

impl Run {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Run { dir: dir.to_path_buf(), artifacts: Vec::new(), checks: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write(name, text + "\n")
    }

    /// `value <= threshold`.
    pub fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.record(name.into(), value, threshold, value <= threshold);
    }

    /// `value >= threshold`.
    pub fn at_least(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.record(name.into(), value, threshold, value >= threshold);
    }

    /// A yes/no check, recorded as `1` or `0` against `1`.
    pub fn holds(&mut self, name: impl Into<String>, ok: bool) {
        self.record(name.into(), if ok { 1.0 } else { 0.0 }, 1.0, ok);
    }

    pub fn record(&mut self, name: impl Into<String>, value: f64, threshold: f64, pass: bool) {
        let name = name.into();
        log::info!("{} {name}: {value:.6e} (threshold {threshold:.3e})", if pass { "PASS" } else { "FAIL" });
        self.checks.push(Check { name, value, threshold, pass });
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn finish(mut self, summary: Summary) -> Result<bool> {
        let pass = summary.pass;
        self.json("summary.json", &summary)?;
        Ok(pass)
    }
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub threads: usize,
    pub seed: u64,
    pub pass: bool,
    pub error: Option<String>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
}

/// Log-log plot of `e(p)` with the reference `C log p / p`.
pub fn loglog_svg(p: &[u32], e: &[f64], c_hat: f64) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let xs: Vec<f64> = p.iter().map(|&v| (v as f64).ln()).collect();
    let reference: Vec<f64> = p.iter().map(|&v| c_hat * (v as f64).ln() / v as f64).collect();
    let ys: Vec<f64> = e.iter().chain(&reference).filter(|v| **v > 0.0).map(|v| v.ln()).collect();
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&ys);
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let line = |vals: &[f64]| -> String {
        xs.iter()
            .zip(vals)
            .filter(|(_, v)| **v > 0.0)
            .map(|(x, v)| format!("{:.2},{:.2}", sx(*x), sy(v.ln())))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        b = h - m,
        r = w - m
    );
    for (x, v) in xs.iter().zip(p) {
        s += &format!("<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">{v}</text>\n", sx(*x), h - m + 18.0);
    }
    for y in [y0, y1] {
        s += &format!("<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\">{:.2e}</text>\n", m - 6.0, sy(y) + 4.0, y.exp());
    }
    s += &format!("<polyline fill=\"none\" stroke=\"gray\" stroke-dasharray=\"6 4\" points=\"{}\"/>\n", line(&reference));
    s += &format!("<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>\n", line(e));
    for (x, v) in xs.iter().zip(e).filter(|(_, v)| **v > 0.0) {
        s += &format!("<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>\n", sx(*x), sy(v.ln()));
    }
    s += &format!("<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">p</text>\n", w / 2.0, h - 12.0);
    s += &format!("<text x=\"{:.2}\" y=\"24\" font-size=\"13\" text-anchor=\"middle\">e(p) and {c_hat:.3} log p / p</text>\n", w / 2.0);
    s + "</svg>\n"
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        let c = if lo.is_finite() { lo } else { 0.0 };
        (c - 1.0, c + 1.0)
    } else {
        (lo, hi)
    }
}
