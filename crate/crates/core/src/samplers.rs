//! Seeded samplers for the Gaussian, Pareto and spherical-exponential
//! families, with their analytic moments and marginals.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::geom::{Dataset, Moments, Vector};
use crate::rng::RngSpec;

/// Distribution family and parameters.
///
/// Pareto coordinates are `scale * P + shift` where `P` has survival
/// `x^{-delta}` on `x > 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    GaussianDiag {
        variances: Vec<f64>,
    },
    ParetoIndep {
        dims: usize,
        delta: f64,
        #[serde(default = "unit_scale")]
        scale: f64,
        #[serde(default)]
        shift: f64,
    },
    SphericalExponential {
        dims: usize,
    },
}

fn unit_scale() -> f64 {
    1.0
}

/// One-dimensional marginal law of a product distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Marginal {
    Normal { mean: f64, sd: f64 },
    Pareto { delta: f64, scale: f64, shift: f64 },
}

pub fn normal_survival(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

impl Marginal {
    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.survival(x)
    }

    /// `P(X > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, sd } => {
                if sd == 0.0 {
                    if x < mean {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    normal_survival((x - mean) / sd)
                }
            }
            Marginal::Pareto {
                delta,
                scale,
                shift,
            } => {
                let p = (x - shift) / scale;
                if p <= 1.0 {
                    1.0
                } else {
                    p.powf(-delta)
                }
            }
        }
    }

    /// Quantile function on (0, 1).
    pub fn quantile(&self, p: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, sd } => mean + sd * normal_quantile(p),
            Marginal::Pareto {
                delta,
                scale,
                shift,
            } => shift + scale * (1.0 - p).powf(-1.0 / delta),
        }
    }

    /// `E[X^k]` for `k ≤ 3`, if finite.
    pub fn raw_moment(&self, k: u32) -> Option<f64> {
        match *self {
            Marginal::Normal { mean, sd } => {
                let v = sd * sd;
                Some(match k {
                    0 => 1.0,
                    1 => mean,
                    2 => mean * mean + v,
                    3 => mean * mean * mean + 3.0 * mean * v,
                    _ => return None,
                })
            }
            Marginal::Pareto {
                delta,
                scale,
                shift,
            } => {
                let base = |j: u32| -> Option<f64> {
                    let j = j as f64;
                    (delta > j).then(|| delta / (delta - j))
                };
                let (c, b) = (scale, shift);
                Some(match k {
                    0 => 1.0,
                    1 => c * base(1)? + b,
                    2 => c * c * base(2)? + 2.0 * c * b * base(1)? + b * b,
                    3 => {
                        c.powi(3) * base(3)?
                            + 3.0 * c * c * b * base(2)?
                            + 3.0 * c * b * b * base(1)?
                            + b.powi(3)
                    }
                    _ => return None,
                })
            }
        }
    }
}

/// Standard normal quantile (Acklam's rational approximation followed by one
/// Halley step against `erfc`).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let plow = 0.02425;
    let x = if p < plow {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - plow {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // refine: e = Φ(x) - p
    let e = 0.5 * erfc(-x / std::f64::consts::SQRT_2) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

impl DistributionSpec {
    pub fn gaussian(variances: &[f64]) -> Self {
        DistributionSpec::GaussianDiag {
            variances: variances.to_vec(),
        }
    }

    pub fn pareto(dims: usize, delta: f64) -> Self {
        DistributionSpec::ParetoIndep {
            dims,
            delta,
            scale: 1.0,
            shift: 0.0,
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            DistributionSpec::GaussianDiag { variances } => variances.len(),
            DistributionSpec::ParetoIndep { dims, .. } => *dims,
            DistributionSpec::SphericalExponential { dims } => *dims,
        }
    }

    /// Short series label, e.g. `gaussian`, `pareto3.2`.
    pub fn label(&self) -> String {
        match self {
            DistributionSpec::GaussianDiag { .. } => "gaussian".into(),
            DistributionSpec::ParetoIndep { delta, .. } => format!("pareto{delta}"),
            DistributionSpec::SphericalExponential { .. } => "spherical_exp".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims() == 0 {
            return Err(Error::InvalidParameter("dims must be at least 1".into()));
        }
        match self {
            DistributionSpec::GaussianDiag { variances } => {
                if variances.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidParameter(
                        "gaussian variances must be finite and non-negative".into(),
                    ));
                }
            }
            DistributionSpec::ParetoIndep {
                delta,
                scale,
                shift,
                ..
            } => {
                if !(delta.is_finite() && *delta > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "pareto tail index must be positive (got {delta})"
                    )));
                }
                if !(scale.is_finite() && *scale > 0.0 && shift.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "pareto scale must be positive and shift finite".into(),
                    ));
                }
            }
            DistributionSpec::SphericalExponential { .. } => {}
        }
        Ok(())
    }

    /// Per-coordinate marginals, for product families.
    pub fn marginals(&self) -> Option<Vec<Marginal>> {
        match self {
            DistributionSpec::GaussianDiag { variances } => Some(
                variances
                    .iter()
                    .map(|v| Marginal::Normal {
                        mean: 0.0,
                        sd: v.sqrt(),
                    })
                    .collect(),
            ),
            DistributionSpec::ParetoIndep {
                dims,
                delta,
                scale,
                shift,
            } => Some(vec![
                Marginal::Pareto {
                    delta: *delta,
                    scale: *scale,
                    shift: *shift,
                };
                *dims
            ]),
            DistributionSpec::SphericalExponential { .. } => None,
        }
    }

    /// Whether `E‖X‖^k < ∞`.
    pub fn has_moment(&self, k: u32) -> bool {
        match self {
            DistributionSpec::ParetoIndep { delta, .. } => *delta > k as f64,
            _ => true,
        }
    }
}

/// `n` i.i.d. draws; point `i` consumes a fixed number of words, so prefixes
/// of a larger draw equal smaller draws from the same stream.
pub fn sample(spec: &DistributionSpec, n: usize, rng: RngSpec) -> Result<Dataset> {
    spec.validate()?;
    let d = spec.dims();
    let mut stream = rng.stream();
    let mut flat = vec![0.0; n * d];
    match spec {
        DistributionSpec::GaussianDiag { variances } => {
            let sds: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
            for row in flat.chunks_exact_mut(d) {
                stream.fill_normals(row);
                row.iter_mut().zip(&sds).for_each(|(x, s)| *x *= s);
            }
        }
        DistributionSpec::ParetoIndep {
            delta,
            scale,
            shift,
            ..
        } => {
            let inv = -1.0 / delta;
            for x in flat.iter_mut() {
                *x = shift + scale * stream.open01().powf(inv);
            }
        }
        DistributionSpec::SphericalExponential { .. } => {
            for row in flat.chunks_exact_mut(d) {
                stream.fill_normals(row);
                let len = crate::geom::norm(row);
                // Gamma(d, 1) as a sum of d unit exponentials
                let radius: f64 = (0..d).map(|_| -stream.open01().ln()).sum();
                let f = if len > 0.0 { radius / len } else { 0.0 };
                row.iter_mut().for_each(|x| *x *= f);
            }
        }
    }
    Dataset::from_flat(d, flat)
}

const SECOND_MOMENT: &str = "E‖X₁‖² < ∞";
const FIRST_MOMENT: &str = "E‖X₁‖ < ∞";

/// Exact mean and covariance of the family.
pub fn population_moments(spec: &DistributionSpec) -> Result<Moments> {
    spec.validate()?;
    let d = spec.dims();
    let diag = |v: &[f64]| {
        let mut c = vec![0.0; d * d];
        for i in 0..d {
            c[i * d + i] = v[i];
        }
        c
    };
    match spec {
        DistributionSpec::GaussianDiag { variances } => {
            Moments::new(Vector::zeros(d), diag(variances), true)
        }
        DistributionSpec::ParetoIndep { delta, .. } => {
            if *delta <= 1.0 {
                return Err(Error::MomentCondition {
                    condition: FIRST_MOMENT,
                    detail: format!("pareto tail index {delta} ≤ 1 has no mean"),
                });
            }
            if *delta <= 2.0 {
                return Err(Error::MomentCondition {
                    condition: SECOND_MOMENT,
                    detail: format!("pareto tail index {delta} ≤ 2 has no covariance"),
                });
            }
            let m = spec.marginals().expect("product family")[0];
            let m1 = m.raw_moment(1).unwrap();
            let var = m.raw_moment(2).unwrap() - m1 * m1;
            Moments::new(Vector::new(vec![m1; d])?, diag(&vec![var; d]), *delta > 3.0)
        }
        DistributionSpec::SphericalExponential { .. } => {
            // E R² = d(d+1) for R ~ Gamma(d, 1), spread evenly over d axes
            Moments::new(Vector::zeros(d), diag(&vec![(d + 1) as f64; d]), true)
        }
    }
}

/// Requires a finite second moment, naming the condition on failure.
pub fn require_second_moment(spec: &DistributionSpec) -> Result<()> {
    if spec.has_moment(2) {
        Ok(())
    } else {
        Err(Error::MomentCondition {
            condition: SECOND_MOMENT,
            detail: format!("{} has an infinite second moment", spec.label()),
        })
    }
}

/// Requires a finite first moment.
pub fn require_first_moment(spec: &DistributionSpec) -> Result<()> {
    if spec.has_moment(1) {
        Ok(())
    } else {
        Err(Error::MomentCondition {
            condition: FIRST_MOMENT,
            detail: format!("{} has an infinite mean", spec.label()),
        })
    }
}

pub fn pareto_mean(delta: f64) -> f64 {
    delta / (delta - 1.0)
}

pub fn pareto_variance(delta: f64) -> f64 {
    delta / ((delta - 2.0) * (delta - 1.0) * (delta - 1.0))
}

/// Centered Pareto family rescaled to the given per-coordinate variance.
pub fn matched_variance_pareto(
    dims: usize,
    target_variance: f64,
    delta: f64,
) -> Result<DistributionSpec> {
    if !(delta > 2.0) {
        return Err(Error::MomentCondition {
            condition: SECOND_MOMENT,
            detail: format!("pareto tail index {delta} ≤ 2 cannot match a variance"),
        });
    }
    if !(target_variance > 0.0 && target_variance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "target variance must be positive (got {target_variance})"
        )));
    }
    let scale = (target_variance / pareto_variance(delta)).sqrt();
    let spec = DistributionSpec::ParetoIndep {
        dims,
        delta,
        scale,
        shift: -scale * pareto_mean(delta),
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Gamma};

    fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    fn column(data: &Dataset, k: usize) -> Vec<f64> {
        data.points().map(|p| p[k]).collect()
    }

    #[test]
    fn pareto_support() {
        for delta in [0.5, 1.9, 3.2] {
            let data = sample(&DistributionSpec::pareto(3, delta), 5000, RngSpec::new(9, 0)).unwrap();
            assert!(data.flat().iter().all(|&x| x >= 1.0));
        }
    }

    #[test]
    fn degenerate_gaussian() {
        let data = sample(&DistributionSpec::gaussian(&[0.0, 0.0]), 5, RngSpec::new(1, 2)).unwrap();
        assert_eq!(data.len(), 5);
        assert!(data.flat().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pareto_mean_monte_carlo() {
        let data =
            sample(&DistributionSpec::pareto(2, 3.2), 1_000_000, RngSpec::new(2024, 0)).unwrap();
        let m = column(&data, 0).iter().sum::<f64>() / data.len() as f64;
        assert!((m - 3.2 / 2.2).abs() < 0.01, "mean {m}");
    }

    #[test]
    fn reproducible_and_nested() {
        let spec = DistributionSpec::gaussian(&[1.0, 2.0, 3.0]);
        let a = sample(&spec, 100, RngSpec::new(5, 5)).unwrap();
        let b = sample(&spec, 100, RngSpec::new(5, 5)).unwrap();
        assert_eq!(a.flat(), b.flat());
        let small = sample(&spec, 40, RngSpec::new(5, 5)).unwrap();
        assert_eq!(small.flat(), a.prefix(40).flat());
        let se = DistributionSpec::SphericalExponential { dims: 3 };
        let c = sample(&se, 50, RngSpec::new(1, 1)).unwrap();
        assert_eq!(sample(&se, 20, RngSpec::new(1, 1)).unwrap().flat(), c.prefix(20).flat());
    }

    #[test]
    fn moments_examples() {
        let m = population_moments(&DistributionSpec::gaussian(&[1.0, 1.0])).unwrap();
        assert_eq!(m.trace, 2.0);
        let p = population_moments(&DistributionSpec::pareto(2, 3.2)).unwrap();
        let v = 3.2 / (1.2 * 2.2 * 2.2);
        assert!((p.cov(0, 0) - v).abs() < 1e-14);
        assert!((p.cov(0, 0) - 0.5510).abs() < 1e-4);
        assert_eq!(p.cov(0, 1), 0.0);
        assert!((p.mean.coords()[0] - 3.2 / 2.2).abs() < 1e-14);
        assert!(p.third_moment_available);
        assert!(!population_moments(&DistributionSpec::pareto(2, 2.5))
            .unwrap()
            .third_moment_available);
        assert!(matches!(
            population_moments(&DistributionSpec::pareto(2, 1.9)),
            Err(Error::MomentCondition { .. })
        ));
        let s = population_moments(&DistributionSpec::SphericalExponential { dims: 2 }).unwrap();
        assert_eq!(s.cov(0, 0), 3.0);
    }

    #[test]
    fn matched_variance() {
        let spec = matched_variance_pareto(2, 1.0, 3.2).unwrap();
        let DistributionSpec::ParetoIndep { scale, .. } = spec else {
            panic!()
        };
        assert!((scale - 1.0 / 0.5510_f64.sqrt()).abs() < 1e-3);
        assert!((scale - 1.3473).abs() < 1e-4);
        let m = population_moments(&spec).unwrap();
        assert!((m.cov(0, 0) - 1.0).abs() < 1e-12);
        assert!(m.mean.coords()[0].abs() < 1e-12);

        let same = matched_variance_pareto(2, pareto_variance(3.2), 3.2).unwrap();
        let DistributionSpec::ParetoIndep { scale, .. } = same else {
            panic!()
        };
        assert!((scale - 1.0).abs() < 1e-15);
        assert!(matched_variance_pareto(2, 1.0, 2.0).is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(DistributionSpec::gaussian(&[-1.0]).validate().is_err());
        assert!(DistributionSpec::pareto(2, 0.0).validate().is_err());
        assert!(DistributionSpec::SphericalExponential { dims: 0 }.validate().is_err());
        assert!(sample(&DistributionSpec::pareto(2, -1.0), 3, RngSpec::new(0, 0)).is_err());
    }

    #[test]
    fn normal_quantile_inverts_survival() {
        for p in [1e-10, 0.001, 0.02, 0.3, 0.5, 0.9, 0.999] {
            let z = normal_quantile(p);
            assert!((1.0 - normal_survival(z) - p).abs() < 1e-12 * p.max(1e-3), "p {p}");
        }
    }

    #[test]
    fn ks_marginals() {
        let n = 100_000;
        let g = sample(&DistributionSpec::gaussian(&[2.0, 1.0]), n, RngSpec::new(11, 0)).unwrap();
        let m = Marginal::Normal {
            mean: 0.0,
            sd: 2f64.sqrt(),
        };
        assert!(ks_distance(column(&g, 0), |x| m.cdf(x)) <= 0.01);

        let p = sample(&DistributionSpec::pareto(2, 2.2), n, RngSpec::new(12, 0)).unwrap();
        assert!(ks_distance(column(&p, 1), |x| 1.0 - x.powf(-2.2)) <= 0.01);

        // d = 1: Laplace marginal
        let l = sample(&DistributionSpec::SphericalExponential { dims: 1 }, n, RngSpec::new(13, 0))
            .unwrap();
        let laplace = |x: f64| {
            if x < 0.0 {
                0.5 * x.exp()
            } else {
                1.0 - 0.5 * (-x).exp()
            }
        };
        assert!(ks_distance(column(&l, 0), laplace) <= 0.01);

        // d = 2: radius is Gamma(2, 1)
        let s = sample(&DistributionSpec::SphericalExponential { dims: 2 }, n, RngSpec::new(14, 0))
            .unwrap();
        let gamma = Gamma::new(2.0, 1.0).unwrap();
        let radii: Vec<f64> = s.points().map(crate::geom::norm).collect();
        assert!(ks_distance(radii, |r| gamma.cdf(r)) <= 0.01);
    }

    #[test]
    fn spherical_directions_uniform() {
        let n = 100_000;
        let s = sample(&DistributionSpec::SphericalExponential { dims: 3 }, n, RngSpec::new(15, 0))
            .unwrap();
        let dirs = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.6, 0.0, 0.8]];
        for h in dirs {
            let frac = s.points().filter(|p| crate::geom::dot(p, &h) > 0.0).count() as f64 / n as f64;
            assert!((frac - 0.5).abs() <= 0.01, "{h:?}: {frac}");
        }
    }

    #[test]
    fn raw_moments_of_scaled_pareto() {
        let m = Marginal::Pareto {
            delta: 4.5,
            scale: 2.0,
            shift: -1.0,
        };
        // E[(2P - 1)^3] by expansion
        let e = |j: f64| 4.5 / (4.5 - j);
        let want = 8.0 * e(3.0) - 12.0 * e(2.0) + 6.0 * e(1.0) - 1.0;
        assert!((m.raw_moment(3).unwrap() - want).abs() < 1e-12);
        assert!(Marginal::Pareto {
            delta: 2.5,
            scale: 1.0,
            shift: 0.0
        }
        .raw_moment(3)
        .is_none());
    }
}
