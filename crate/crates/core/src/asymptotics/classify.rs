//! Light/heavy tail verdict from a depth-decay curve.

use serde::{Deserialize, Serialize};

use super::curves::DiagnosticCurve;
use crate::error::{Error, Result};

/// Fewest usable points [`classify_tail`] accepts.
pub const MIN_POINTS: usize = 6;
/// Points with fewer than this many expected counts are dropped.
pub const MIN_COUNT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailVerdict {
    Light,
    Heavy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub verdict: TailVerdict,
    /// Fitted `δ` of the heavy model, when the verdict is heavy.
    pub index_estimate: Option<f64>,
    /// `R²` of the light and heavy models, in that order.
    pub fit_scores: [f64; 2],
    /// `(a, b)` of `log HD ≈ a − b·t²`.
    pub light: (f64, f64),
    /// `(a, δ)` of `log HD ≈ a − δ·log t`.
    pub heavy: (f64, f64),
    pub points_used: usize,
}

/// Least squares `y ≈ a + b·x`; returns `(a, b, R²)`.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - xm) * (b - ym);
        sxx += (a - xm) * (a - xm);
        syy += (b - ym) * (b - ym);
    }
    let slope = sxy / sxx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - ym - slope * (a - xm)).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (ym - slope * xm, slope, r2)
}

/// Fits `log HD` against `t²` and `log t` and keeps the better `R²`.
///
/// Points with depth below `5/n` are dropped; `n = 0` disables the filter.
pub fn classify_tail(curve: &DiagnosticCurve) -> Result<TailFit> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.param > 0.0 && p.stat > 0.0)
        .filter(|p| p.n == 0 || p.stat >= MIN_COUNT / p.n as f64)
        .map(|p| (p.param, p.stat))
        .collect();
    if pts.len() < MIN_POINTS {
        return Err(Error::InsufficientCurve {
            needed: MIN_POINTS,
            found: pts.len(),
        });
    }
    // relative to the first point, so a rescaling of the depths cancels
    let y: Vec<f64> = pts.iter().map(|p| (p.1 / pts[0].1).ln()).collect();
    let t2: Vec<f64> = pts.iter().map(|p| p.0 * p.0).collect();
    let lt: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let shift = pts[0].1.ln();
    let (la, lb, lr2) = fit_line(&t2, &y);
    let (ha, hb, hr2) = fit_line(&lt, &y);
    let (la, ha) = (la + shift, ha + shift);
    let verdict = if lr2 > hr2 {
        TailVerdict::Light
    } else {
        TailVerdict::Heavy
    };
    Ok(TailFit {
        verdict,
        index_estimate: (verdict == TailVerdict::Heavy).then_some(-hb),
        fit_scores: [lr2, hr2],
        light: (la, -lb),
        heavy: (ha, -hb),
        points_used: pts.len(),
    })
}
