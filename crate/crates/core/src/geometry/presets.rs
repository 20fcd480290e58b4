//! Named metrics and profile loading.

use std::io::Read;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::geometry::toric::{SplineProfile, ToricPotential};
use crate::jet::Jet1;

/// Fubini–Study: `phi(x) = k log(1 + e^x)`.
pub fn fs(k: u32) -> ToricPotential {
    let kk = k as f64;
    ToricPotential::new_unchecked(k, "fs", Arc::new(move |x: Jet1| x.softplus() * kk))
}

/// `fs + eps * sech((x - x0)/width)`.
pub fn fs_bump(k: u32, eps: f64, x0: f64, width: f64) -> Result<ToricPotential> {
    if !(width > 0.0) {
        return Err(LabError::Invalid(format!("fs_bump width must be positive, got {width}")));
    }
    let pert = Arc::new(move |x: Jet1| ((x - x0).scale(1.0 / width)).sech());
    fs(k).perturbed(format!("fs_bump({eps},{x0},{width})"), eps, pert)
}

/// `fs + c`.
pub fn fs_shift(k: u32, c: f64) -> ToricPotential {
    ToricPotential::new_unchecked(k, format!("fs_shift({c})"), fs(k).shifted(c).profile().clone())
}

/// `x -> fs(x + a)`, the pullback of FS under `z -> e^{a/2} z`.
pub fn pullback_scaling(k: u32, a: f64) -> ToricPotential {
    let t = fs(k).translated(a);
    ToricPotential::new_unchecked(k, format!("pullback_scaling({a})"), t.profile().clone())
}

/// Parse `fs`, `fs_bump(eps, x0, width)`, `fs_shift(c)` or `pullback_scaling(a)`.
pub fn parse(spec: &str, k: u32) -> Result<ToricPotential> {
    let s: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
    let (name, args) = match s.find('(') {
        Some(i) => {
            if !s.ends_with(')') {
                return Err(LabError::Invalid(format!("unbalanced parentheses in preset '{spec}'")));
            }
            let inner = &s[i + 1..s.len() - 1];
            let args = if inner.is_empty() {
                Vec::new()
            } else {
                inner
                    .split(',')
                    .map(|a| a.parse::<f64>().map_err(|_| LabError::Invalid(format!("bad number '{a}' in preset '{spec}'"))))
                    .collect::<Result<Vec<f64>>>()?
            };
            (&s[..i], args)
        }
        None => (s.as_str(), Vec::new()),
    };
    if k == 0 {
        return Err(LabError::Invalid("degree k must be positive".into()));
    }
    let want = |n: usize| -> Result<()> {
        if args.len() != n {
            return Err(LabError::Invalid(format!("preset '{name}' takes {n} arguments, got {}", args.len())));
        }
        Ok(())
    };
    match name {
        "fs" => {
            want(0)?;
            Ok(fs(k))
        }
        "fs_bump" => {
            want(3)?;
            fs_bump(k, args[0], args[1], args[2])
        }
        "fs_shift" => {
            want(1)?;
            Ok(fs_shift(k, args[0]))
        }
        "pullback_scaling" => {
            want(1)?;
            Ok(pullback_scaling(k, args[0]))
        }
        _ => Err(LabError::Invalid(format!("unknown metric preset '{name}'"))),
    }
}

/// Load a profile from CSV with columns `x` and `phi` (header required).
///
/// Outside the sampled range the profile continues linearly with the end
/// slopes of the data, which must be within `slope_tol` of `0` and `k`.
pub fn load_csv<R: Read>(reader: R, k: u32, name: &str, slope_tol: f64) -> Result<ToricPotential> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| LabError::Invalid(format!("{name}: {e}")))?.clone();
    let col = |want: &[&str]| headers.iter().position(|h| want.contains(&h));
    let (ix, ip) = match (col(&["x"]), col(&["phi", "φ", "phi(x)"])) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(LabError::Invalid(format!("{name}: expected columns 'x' and 'phi', found {headers:?}"))),
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| LabError::Invalid(format!("{name}: {e}")))?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| LabError::Invalid(format!("{name}: row {} is not numeric", line + 2)))
        };
        xs.push(num(ix)?);
        ys.push(num(ip)?);
    }
    // convexity is checked on the data; the spline itself may wobble by
    // rounding where phi'' is below the sampling resolution
    for (i, w) in xs.windows(3).enumerate() {
        let (h0, h1) = (w[1] - w[0], w[2] - w[1]);
        let dd = (ys[i + 2] - ys[i + 1]) / h1 - (ys[i + 1] - ys[i]) / h0;
        if !(dd > 0.0) {
            return Err(LabError::NotPositive(format!("{name}: profile is not strictly convex at x = {}", w[1])));
        }
    }
    let sp = SplineProfile::new(xs, ys)?;
    let (l, r) = sp.slopes();
    let kk = k as f64;
    if l.abs() > slope_tol || (r - kk).abs() > slope_tol {
        return Err(LabError::Invalid(format!(
            "{name}: end slopes ({l:.3e}, {r:.6}) do not match the asymptotic slopes (0, {k})"
        )));
    }
    let (a, b) = sp.range();
    let hw = a.abs().min(b.abs());
    Ok(ToricPotential::new_unchecked(k, name, sp.into_profile()).with_half_width(hw))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        let t = parse("fs_bump(0.1, 0.5, 1.0)", 1).unwrap();
        let f = fs(1);
        let x: f64 = 0.2;
        assert!((t.phi(x) - f.phi(x) - 0.1 / (0.3f64).cosh()).abs() < 1e-14);
        assert!((parse("fs_shift(0.3)", 2).unwrap().phi(x) - fs(2).phi(x) - 0.3).abs() < 1e-14);
        assert!((parse("pullback_scaling(1.5)", 1).unwrap().phi(x) - f.phi(x + 1.5)).abs() < 1e-14);
        assert!(parse("fs_bump(0.1,0.5)", 1).is_err());
        assert!(parse("nope", 1).is_err());
        assert!(parse("fs_bump(2.0,0,1)", 1).is_err());
    }

    #[test]
    fn csv_profile_round_trip() {
        let f = fs(1);
        let mut s = String::from("x,phi\n");
        for i in 0..=400 {
            let x = -20.0 + 0.1 * i as f64;
            s.push_str(&format!("{x},{}\n", f.phi(x)));
        }
        let t = load_csv(s.as_bytes(), 1, "csv", 1e-6).unwrap();
        assert!((t.phi(0.3) - f.phi(0.3)).abs() < 1e-6);
        assert!((t.phi(-30.0) - f.phi(-20.0)).abs() < 1e-7);
        let concave = "x,phi\n-1,0\n0,1\n1,1.5\n";
        assert!(matches!(load_csv(concave.as_bytes(), 1, "c", 1.0), Err(LabError::NotPositive(_))));
        assert!(load_csv("a,b\n1,2\n".as_bytes(), 1, "bad", 1e-6).is_err());
    }
}
