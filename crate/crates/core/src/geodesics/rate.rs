//! Fit of `e(p)` against the `log p / p` rate.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateVerdict {
    Pass,
    /// Some `e(p) <= 0`: already converged at that level.
    PassTrivial,
    Fail,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateFit {
    pub p: Vec<u32>,
    pub e: Vec<f64>,
    /// `e(p) p / log p`.
    pub normalized: Vec<f64>,
    pub c_hat: f64,
    pub argmax: usize,
    pub slack: f64,
    pub verdict: RateVerdict,
}

/// Relative growth allowed between consecutive upper-half entries.
pub const RATE_SLACK: f64 = 0.2;

/// `C_hat = max e(p) p / log p`; PASS when `C_hat` is reached, up to
/// [`RATE_SLACK`], in the lower half of `p_list` and the upper half grows by
/// at most [`RATE_SLACK`] per step.
pub fn rate_fit(p_list: &[u32], e_list: &[f64]) -> Result<RateFit> {
    if p_list.len() != e_list.len() || p_list.len() < 4 {
        return Err(LabError::Invalid(format!("rate fit needs at least 4 matched points, got {} and {}", p_list.len(), e_list.len())));
    }
    if p_list.windows(2).any(|w| w[1] <= w[0]) || p_list[0] < 2 {
        return Err(LabError::Invalid(format!("p list must increase from at least 2: {p_list:?}")));
    }
    let normalized: Vec<f64> = p_list.iter().zip(e_list).map(|(&p, &e)| e * p as f64 / (p as f64).ln()).collect();
    let mut argmax = 0;
    for (i, v) in normalized.iter().enumerate() {
        if *v > normalized[argmax] {
            argmax = i;
        }
    }
    let n = p_list.len();
    let verdict = if e_list.iter().any(|e| !(*e > 0.0)) {
        RateVerdict::PassTrivial
    } else {
        let lower = normalized[..n.div_ceil(2)].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let early = normalized[argmax] <= (1.0 + RATE_SLACK) * lower;
        let tail = (n / 2..n - 1).all(|i| normalized[i + 1] <= (1.0 + RATE_SLACK) * normalized[i]);
        if early && tail {
            RateVerdict::Pass
        } else {
            RateVerdict::Fail
        }
    };
    Ok(RateFit { p: p_list.to_vec(), e: e_list.to_vec(), c_hat: normalized[argmax], normalized, argmax, slack: RATE_SLACK, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: [u32; 5] = [10, 20, 40, 80, 160];

    #[test]
    fn synthetic_rates() {
        let exact: Vec<f64> = P.iter().map(|&p| 2.0 * (p as f64).ln() / p as f64).collect();
        let f = rate_fit(&P, &exact).unwrap();
        assert!((f.c_hat - 2.0).abs() < 1e-12 && f.verdict == RateVerdict::Pass);
        let slow: Vec<f64> = P.iter().map(|&p| 1.0 / (p as f64).sqrt()).collect();
        assert_eq!(rate_fit(&P, &slow).unwrap().verdict, RateVerdict::Fail);
        // the constant-shift remainder log(p - 1) / p creeps up to its limit
        let shift: Vec<f64> = P.iter().map(|&p| (p as f64 - 1.0).ln() / p as f64).collect();
        assert_eq!(rate_fit(&P, &shift).unwrap().verdict, RateVerdict::Pass);
        let mut done = exact.clone();
        done[4] = 0.0;
        assert_eq!(rate_fit(&P, &done).unwrap().verdict, RateVerdict::PassTrivial);
        assert!(rate_fit(&P[..3], &exact[..3]).is_err());
    }
}
