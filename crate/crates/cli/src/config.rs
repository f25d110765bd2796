//! Experiment configuration files and the built-in presets.

use std::path::{Path, PathBuf};

use geodepth::asymptotics::schedule::linear_n_range;
use geodepth::asymptotics::{
    make_alpha_schedule, make_t_schedule, Aggregation, AlphaKind, AlphaSchedule, DepthMethod,
    NPolicy, TKind, TSchedule,
};
use geodepth::samplers::matched_variance_pareto;
use geodepth::{DistributionSpec, Error, Result};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

pub const SCHEMA: &str = include_str!("../schema/experiment.schema.json");

pub const PRESETS: [(&str, &str); 5] = [
    ("fig3", include_str!("../presets/fig3.json")),
    ("fig4", include_str!("../presets/fig4.json")),
    ("fig5", include_str!("../presets/fig5.json")),
    ("fig6", include_str!("../presets/fig6.json")),
    ("fig7", include_str!("../presets/fig7.json")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionSpec>,
    /// Data CSV, as an alternative to `distribution`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    /// Sample size when `quantile` or `depth` draws from `distribution`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// `u` for quantiles, `x` for depth, normalized for curves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_schedule: Option<ScheduleConfig<AlphaKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_schedule: Option<ScheduleConfig<TKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_policy: Option<NPolicy>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<DepthMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub sequential: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig<K> {
    pub kind: K,
    #[serde(default)]
    pub params: Vec<f64>,
    pub n_range: NRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NRange {
    List(Vec<usize>),
    Linear(LinearRange),
}

/// `[lo, hi, count]`, equally spaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearRange {
    pub linear: [usize; 3],
}

impl NRange {
    pub fn values(&self) -> Result<Vec<usize>> {
        match self {
            NRange::List(v) => Ok(v.clone()),
            NRange::Linear(LinearRange { linear: [lo, hi, count] }) => {
                if *count < 1 || lo > hi {
                    return Err(Error::InvalidParameter(format!(
                        "linear n_range needs lo ≤ hi and count ≥ 1 (got {lo}, {hi}, {count})"
                    )));
                }
                Ok(linear_n_range(*lo, *hi, *count))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    #[default]
    Linear,
    Log,
    Index,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_axis: Option<AxisKind>,
    #[serde(default)]
    pub y_log: bool,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "config: unsupported schema version {} (expected {SCHEMA_VERSION})",
                cfg.schema
            )));
        }
        if cfg.distribution.is_some() && cfg.data.is_some() {
            return Err(Error::Parse(
                "config: give either `distribution` or `data`, not both".into(),
            ));
        }
        if cfg.seeds.is_empty() {
            return Err(Error::Parse("config: `seeds` must not be empty".into()));
        }
        if let Some(d) = &cfg.distribution {
            d.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                Error::Parse(format!(
                    "unknown preset `{name}` (available: {})",
                    names.join(", ")
                ))
            })?;
        Self::parse(text)
    }

    pub fn alpha_schedule(&self) -> Result<AlphaSchedule> {
        let s = self
            .alpha_schedule
            .as_ref()
            .ok_or_else(|| Error::Parse("config: `alpha_schedule` is required".into()))?;
        make_alpha_schedule(s.kind, &s.params, &s.n_range.values()?)
    }

    pub fn t_schedule(&self) -> Result<TSchedule> {
        let s = self
            .t_schedule
            .as_ref()
            .ok_or_else(|| Error::Parse("config: `t_schedule` is required".into()))?;
        make_t_schedule(s.kind, &s.params, &s.n_range.values()?)
    }

    pub fn direction(&self) -> Result<&[f64]> {
        self.direction
            .as_deref()
            .ok_or_else(|| Error::Parse("config: `direction` is required".into()))
    }
}

/// Parses `--dist`: a JSON object, or one of
/// `gaussian:V1,V2,...`, `pareto:DELTA[,DIMS]`,
/// `pareto-matched:DELTA,VARIANCE[,DIMS]`, `exponential:DIMS`.
pub fn parse_distribution(s: &str) -> Result<DistributionSpec> {
    let s = s.trim();
    let spec = if s.starts_with('{') {
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("distribution: {e}")))?
    } else {
        let (family, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = args
            .split(',')
            .filter(|a| !a.trim().is_empty())
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("distribution: bad number `{a}`")))
            })
            .collect::<Result<_>>()?;
        let dims = |i: usize| -> Result<usize> {
            match nums.get(i) {
                None => Ok(2),
                Some(&d) if d >= 1.0 && d.fract() == 0.0 => Ok(d as usize),
                Some(d) => Err(Error::Parse(format!("distribution: bad dimension {d}"))),
            }
        };
        let need = |k: usize| -> Result<()> {
            if nums.len() < k {
                Err(Error::Parse(format!("distribution `{s}` needs {k} parameter(s)")))
            } else {
                Ok(())
            }
        };
        match family {
            "gaussian" => {
                need(1)?;
                DistributionSpec::gaussian(&nums)
            }
            "pareto" => {
                need(1)?;
                DistributionSpec::pareto(dims(1)?, nums[0])
            }
            "pareto-matched" => {
                need(2)?;
                matched_variance_pareto(dims(2)?, nums[1], nums[0])?
            }
            "exponential" => DistributionSpec::SphericalExponential { dims: dims(0)? },
            _ => {
                return Err(Error::Parse(format!(
                    "distribution: unknown family `{family}`"
                )))
            }
        }
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for (name, _) in PRESETS {
            let cfg = ExperimentConfig::preset(name).unwrap();
            assert!(cfg.alpha_schedule.is_some() != cfg.t_schedule.is_some(), "{name}");
            if cfg.alpha_schedule.is_some() {
                cfg.alpha_schedule().unwrap();
            } else {
                cfg.t_schedule().unwrap();
            }
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = ExperimentConfig::parse(r#"{"schema": 1, "sedes": [1]}"#).unwrap_err();
        assert!(e.to_string().contains("sedes"), "{e}");
        let e = ExperimentConfig::parse(r#"{"schema": 2}"#).unwrap_err();
        assert!(e.to_string().contains("schema version"));
        assert!(ExperimentConfig::parse(r#"{"direction": [1, 0]}"#).is_err());
    }

    #[test]
    fn schema_lists_every_key() {
        let schema: serde_json::Value = serde_json::from_str(SCHEMA).unwrap();
        let props = schema["properties"].as_object().unwrap();
        let full = ExperimentConfig {
            schema: 1,
            description: Some(String::new()),
            distribution: Some(DistributionSpec::gaussian(&[1.0])),
            data: Some("x".into()),
            n: Some(1),
            direction: Some(vec![1.0]),
            alpha_schedule: Some(ScheduleConfig {
                kind: AlphaKind::PowerOfTen,
                params: vec![],
                n_range: NRange::List(vec![1]),
            }),
            t_schedule: Some(ScheduleConfig {
                kind: TKind::Linear,
                params: vec![],
                n_range: NRange::List(vec![1]),
            }),
            n_policy: Some(NPolicy::Growing),
            seeds: vec![1],
            aggregation: Aggregation::MedianMad,
            depth: Some(DepthMethod::Exact2d),
            tol: Some(1e-8),
            max_iter: Some(1),
            sequential: false,
            output: Some(OutputConfig::default()),
        };
        let v = serde_json::to_value(&full).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), props.len());
        for k in keys {
            assert!(props.contains_key(k), "{k} missing from schema");
        }
        assert_eq!(schema["additionalProperties"], false);
    }

    #[test]
    fn distribution_shorthand() {
        assert_eq!(
            parse_distribution("gaussian:2,2").unwrap(),
            DistributionSpec::gaussian(&[2.0, 2.0])
        );
        assert_eq!(
            parse_distribution("pareto:3.2").unwrap(),
            DistributionSpec::pareto(2, 3.2)
        );
        assert_eq!(
            parse_distribution(r#"{"kind":"pareto_indep","dims":3,"delta":2.2}"#).unwrap(),
            DistributionSpec::pareto(3, 2.2)
        );
        assert!(parse_distribution("pareto-matched:2.0,1").is_err());
        assert!(parse_distribution("cauchy:1").is_err());
        assert!(parse_distribution("gaussian:-1,1").is_err());
    }
}
