//! Quantile-level schedules `α_n` and depth radii `t_n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaKind {
    /// `α_n = 1 − 10^{−r·n}`; `params = [r]`, default `r = 1`.
    PowerOfTen,
    /// `α_n = 1 − √(c·ln n / n)`; `params = [c]`, default `c = 2`.
    SqrtLog,
    /// `params` are the `α_n` themselves.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSchedule {
    pub kind: AlphaKind,
    pub params: Vec<f64>,
    pub values: Vec<(usize, f64)>,
    /// Whether `Σ exp(−n(1−α_n)²) < ∞` for the analytic form.
    pub summable: Option<bool>,
    /// Whether `n(1−α_n)³ → ∞` for the analytic form.
    pub cube_condition: Option<bool>,
    /// Partial sums of `exp(−n(1−α_n)²)` over the configured range.
    pub partial_sums: Vec<f64>,
}

impl AlphaSchedule {
    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|v| v.1)
    }
}

fn check_range(n_range: &[usize]) -> Result<()> {
    if n_range.is_empty() {
        return Err(Error::InvalidParameter("schedule range is empty".into()));
    }
    if n_range.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "schedule range must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn param(params: &[f64], i: usize, default: Option<f64>, name: &str) -> Result<f64> {
    match params.get(i).copied().or(default) {
        Some(v) if v.is_finite() => Ok(v),
        Some(v) => Err(Error::InvalidParameter(format!("{name} must be finite (got {v})"))),
        None => Err(Error::InvalidParameter(format!("missing parameter {name}"))),
    }
}

pub fn make_alpha_schedule(
    kind: AlphaKind,
    params: &[f64],
    n_range: &[usize],
) -> Result<AlphaSchedule> {
    check_range(n_range)?;
    let (alphas, summable, cube): (Vec<f64>, _, _) = match kind {
        AlphaKind::PowerOfTen => {
            let r = param(params, 0, Some(1.0), "rate")?;
            if !(r > 0.0) {
                return Err(Error::InvalidParameter(format!("rate must be positive (got {r})")));
            }
            let a = n_range
                .iter()
                .map(|&n| 1.0 - 10f64.powf(-r * n as f64))
                .collect();
            // exp(−n·10^{−2rn}) → 1 and n·10^{−3rn} → 0
            (a, Some(false), Some(false))
        }
        AlphaKind::SqrtLog => {
            let c = param(params, 0, Some(2.0), "c")?;
            if !(c > 0.0) {
                return Err(Error::InvalidParameter(format!("c must be positive (got {c})")));
            }
            let a = n_range
                .iter()
                .map(|&n| 1.0 - (c * (n as f64).ln() / n as f64).sqrt())
                .collect();
            // exp(−c ln n) = n^{−c}; n(c ln n/n)^{3/2} → 0
            (a, Some(c > 1.0), Some(false))
        }
        AlphaKind::Custom => {
            if params.len() != n_range.len() {
                return Err(Error::InvalidParameter(format!(
                    "custom schedule needs one α per n ({} vs {})",
                    params.len(),
                    n_range.len()
                )));
            }
            (params.to_vec(), None, None)
        }
    };
    for &a in &alphas {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "α_n must lie in (0, 1) (got {a})"
            )));
        }
    }
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "α_n must be strictly increasing".into(),
        ));
    }
    let mut acc = 0.0;
    let partial_sums = n_range
        .iter()
        .zip(&alphas)
        .map(|(&n, a)| {
            acc += (-(n as f64) * (1.0 - a).powi(2)).exp();
            acc
        })
        .collect();
    Ok(AlphaSchedule {
        kind,
        params: params.to_vec(),
        values: n_range.iter().copied().zip(alphas).collect(),
        summable: summable,
        cube_condition: cube,
        partial_sums,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TKind {
    /// `t_n = a + b·n`; `params = [a, b]` or `[a, b, β]`.
    Linear,
    /// `t_n = √(2β ln n)`; `params = [β]`.
    GaussianLog,
    /// `t_n = n^{β/(k·δ)}`; `params = [β, δ]` or `[β, δ, k]`, default `k = 1`.
    HeavyPower,
    /// `params` are the `t_n`, optionally followed by `β`.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TSchedule {
    pub kind: TKind,
    pub params: Vec<f64>,
    pub values: Vec<(usize, f64)>,
    pub beta: Option<f64>,
    /// `γ_n = n^{−β}` when `β` is known.
    pub gamma: Option<Vec<f64>>,
}

impl TSchedule {
    pub fn ts(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|v| v.1)
    }
}

fn check_beta(beta: f64) -> Result<f64> {
    if beta > 0.0 && beta < 1.0 {
        Ok(beta)
    } else {
        Err(Error::InvalidParameter(format!(
            "β must lie in (0, 1) (got {beta})"
        )))
    }
}

pub fn make_t_schedule(kind: TKind, params: &[f64], n_range: &[usize]) -> Result<TSchedule> {
    check_range(n_range)?;
    let nf = |n: usize| n as f64;
    let (ts, beta): (Vec<f64>, Option<f64>) = match kind {
        TKind::Linear => {
            let a = param(params, 0, None, "a")?;
            let b = param(params, 1, None, "b")?;
            if !(b > 0.0) {
                return Err(Error::InvalidParameter(format!("slope b must be positive (got {b})")));
            }
            let beta = params.get(2).map(|&b| check_beta(b)).transpose()?;
            (n_range.iter().map(|&n| a + b * nf(n)).collect(), beta)
        }
        TKind::GaussianLog => {
            let beta = check_beta(param(params, 0, None, "β")?)?;
            if n_range[0] < 2 {
                return Err(Error::InvalidParameter(
                    "gaussian_log schedule needs n ≥ 2".into(),
                ));
            }
            (
                n_range
                    .iter()
                    .map(|&n| (2.0 * beta * nf(n).ln()).sqrt())
                    .collect(),
                Some(beta),
            )
        }
        TKind::HeavyPower => {
            let beta = check_beta(param(params, 0, None, "β")?)?;
            let delta = param(params, 1, None, "δ")?;
            let k = param(params, 2, Some(1.0), "k")?;
            if !(delta > 0.0 && k > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "heavy_power needs δ > 0 and k > 0 (got δ = {delta}, k = {k})"
                )));
            }
            (
                n_range
                    .iter()
                    .map(|&n| nf(n).powf(beta / (k * delta)))
                    .collect(),
                Some(beta),
            )
        }
        TKind::Custom => {
            let m = n_range.len();
            if params.len() != m && params.len() != m + 1 {
                return Err(Error::InvalidParameter(format!(
                    "custom schedule needs one t per n ({} vs {m})",
                    params.len()
                )));
            }
            let beta = params.get(m).map(|&b| check_beta(b)).transpose()?;
            (params[..m].to_vec(), beta)
        }
    };
    if ts.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidParameter("t_n must be positive and finite".into()));
    }
    if ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("t_n must be strictly increasing".into()));
    }
    Ok(TSchedule {
        kind,
        params: params.to_vec(),
        values: n_range.iter().copied().zip(ts).collect(),
        beta,
        gamma: beta.map(|b| n_range.iter().map(|&n| nf(n).powf(-b)).collect()),
    })
}

/// How sample sizes relate to schedule points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NPolicy {
    /// One sample of this size per seed, reused at every point.
    Fixed(usize),
    /// The schedule's `n` at each point; samples are nested prefixes.
    Growing,
}

/// `count` sizes from `lo` to `hi`, equally spaced and rounded.
pub fn linear_n_range(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if count <= 1 {
        return vec![hi];
    }
    let step = (hi - lo) as f64 / (count - 1) as f64;
    (0..count)
        .map(|i| lo + (i as f64 * step).round() as usize)
        .collect()
}
