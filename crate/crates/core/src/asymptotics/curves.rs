//! Diagnostic curves along a schedule.
//!
//! Every (point, seed) pair is an independent job. Samples for one seed come
//! from a single stream, so the sample at a smaller `n` is a prefix of the
//! sample at a larger one.

use serde::{Deserialize, Serialize};

use super::schedule::{AlphaSchedule, NPolicy, TSchedule};
use crate::depth::{
    depth_approx, depth_exact_2d, empirical_marginal_count, marginal_survival_bound,
    population_depth_gaussian, population_depth_product, ProductMethod,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geom::{sample_moments, Dataset, UnitDirection};
use crate::quantile::{first_order_residual_of, growth_bound, solve, SolverOptions};
use crate::rng::{hash_words, RngSpec};
use crate::samplers::{
    population_moments, require_first_moment, require_second_moment, sample, DistributionSpec,
};

/// Stream id of the per-seed sample.
pub const SAMPLE_STREAM: u64 = 0x5a3b_1e00;
const GROWTH_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum CurveSource {
    Spec(DistributionSpec),
    /// A fixed dataset; seeds are ignored.
    Data(Dataset),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Median, with the median absolute deviation as spread.
    #[default]
    MedianMad,
    /// Mean, with its standard error as spread.
    MeanStderr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DepthMethod {
    Exact2d,
    /// Random directions, plus the coordinate axes.
    Approx { directions: usize },
}

#[derive(Debug, Clone)]
pub struct CurveRequest {
    pub source: CurveSource,
    /// `u` for quantile curves, `x` for depth curves.
    pub direction: UnitDirection,
    pub seeds: Vec<u64>,
    pub n_policy: NPolicy,
    pub aggregation: Aggregation,
    pub solver: SolverOptions,
    pub exec: Exec,
}

impl CurveRequest {
    pub fn new(spec: DistributionSpec, direction: UnitDirection, seeds: Vec<u64>) -> Self {
        Self {
            source: CurveSource::Spec(spec),
            direction,
            seeds,
            n_policy: NPolicy::Growing,
            aggregation: Aggregation::default(),
            solver: SolverOptions::default(),
            exec: Exec::default(),
        }
    }

    pub fn with_policy(mut self, p: NPolicy) -> Self {
        self.n_policy = p;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub param: f64,
    pub stat: f64,
    pub stderr: Option<f64>,
    pub n: usize,
    pub seeds: usize,
    /// Per-seed statistics, in seed order.
    #[serde(default)]
    pub values: Vec<f64>,
    /// Per-seed `(k, n)` for empirical depths.
    #[serde(default)]
    pub counts: Vec<(usize, usize)>,
    /// Population marginal survival bound, or population depth for ratios.
    #[serde(default)]
    pub aux: Option<f64>,
}

impl CurvePoint {
    pub fn new(param: f64, stat: f64, stderr: Option<f64>, n: usize, seeds: usize) -> Self {
        Self {
            param,
            stat,
            stderr,
            n,
            seeds,
            values: Vec::new(),
            counts: Vec::new(),
            aux: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub experiment: String,
    pub source: String,
    pub spec: Option<DistributionSpec>,
    pub direction: Vec<f64>,
    pub seeds: Vec<u64>,
    pub n_schedule: Vec<usize>,
    /// `population` or `sample`.
    pub moments: Option<String>,
    /// `½(tr Σ − uᵀΣu)` for y-curves.
    pub limit: Option<f64>,
    pub solves: usize,
    pub nonconverged: usize,
    pub residual_violations: usize,
    pub growth_checks: usize,
    pub growth_violations: usize,
    pub bound_checks: usize,
    pub bound_violations: usize,
    /// Indices of points whose premise `HD(t_n x, P) > γ_n` fails.
    pub flagged: Vec<usize>,
    pub gamma: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticCurve {
    pub points: Vec<CurvePoint>,
    pub meta: CurveMeta,
}

impl DiagnosticCurve {
    pub fn from_points(points: Vec<CurvePoint>) -> Self {
        Self {
            points,
            meta: CurveMeta::default(),
        }
    }

    pub fn params(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.param).collect()
    }

    pub fn stats(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.stat).collect()
    }
}

fn median_sorted(v: &[f64]) -> f64 {
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

fn aggregate(values: &[f64], how: Aggregation) -> (f64, Option<f64>) {
    let m = values.len();
    match how {
        Aggregation::MedianMad => {
            let mut s = values.to_vec();
            s.sort_by(f64::total_cmp);
            let med = median_sorted(&s);
            let mut dev: Vec<f64> = s.iter().map(|v| (v - med).abs()).collect();
            dev.sort_by(f64::total_cmp);
            (med, (m > 1).then(|| median_sorted(&dev)))
        }
        Aggregation::MeanStderr => {
            let mean = values.iter().sum::<f64>() / m as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                / (m.max(2) - 1) as f64;
            (mean, (m > 1).then(|| (var / m as f64).sqrt()))
        }
    }
}

/// Median of `k/n` with all `n` equal, taken on the counts.
fn exact_median(counts: &[(usize, usize)]) -> f64 {
    let n = counts[0].1;
    let mut ks: Vec<usize> = counts.iter().map(|c| c.0).collect();
    ks.sort_unstable();
    let m = ks.len();
    let k2 = if m % 2 == 1 {
        2 * ks[m / 2]
    } else {
        ks[m / 2 - 1] + ks[m / 2]
    };
    k2 as f64 / (2 * n) as f64
}

struct Plan {
    samples: Vec<Dataset>,
    sizes: Vec<usize>,
    seeds: Vec<u64>,
}

fn plan(req: &CurveRequest, schedule_n: &[usize]) -> Result<Plan> {
    if schedule_n.is_empty() {
        return Err(Error::InvalidParameter("schedule is empty".into()));
    }
    let sizes: Vec<usize> = match req.n_policy {
        NPolicy::Fixed(n) => vec![n; schedule_n.len()],
        NPolicy::Growing => schedule_n.to_vec(),
    };
    let max_n = *sizes.iter().max().unwrap();
    match &req.source {
        CurveSource::Spec(spec) => {
            spec.validate()?;
            if req.seeds.is_empty() {
                return Err(Error::InvalidParameter("at least one seed is required".into()));
            }
            let samples = req
                .exec
                .map(&req.seeds, |&s| sample(spec, max_n, RngSpec::new(s, SAMPLE_STREAM)))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            Ok(Plan {
                samples,
                sizes,
                seeds: req.seeds.clone(),
            })
        }
        CurveSource::Data(d) => {
            if max_n > d.len() {
                return Err(Error::TooFewPoints {
                    needed: max_n,
                    found: d.len(),
                });
            }
            Ok(Plan {
                samples: vec![d.clone()],
                sizes,
                seeds: vec![0],
            })
        }
    }
}

fn base_meta(req: &CurveRequest, experiment: &str, plan: &Plan) -> CurveMeta {
    let (source, spec) = match &req.source {
        CurveSource::Spec(s) => (s.label(), Some(s.clone())),
        CurveSource::Data(_) => ("data".to_string(), None),
    };
    CurveMeta {
        experiment: experiment.into(),
        source,
        spec,
        direction: req.direction.coords().to_vec(),
        seeds: plan.seeds.clone(),
        n_schedule: plan.sizes.clone(),
        ..CurveMeta::default()
    }
}

fn check_dims(req: &CurveRequest) -> Result<usize> {
    let d = match &req.source {
        CurveSource::Spec(s) => s.dims(),
        CurveSource::Data(d) => d.dim(),
    };
    if d != req.direction.dim() {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: req.direction.dim(),
        });
    }
    Ok(d)
}

#[derive(Default)]
struct SolveOutcome {
    value: Option<f64>,
    residual_bad: bool,
    growth_bad: bool,
}

fn quantile_curve<F>(
    req: &CurveRequest,
    schedule: &AlphaSchedule,
    experiment: &str,
    stat: F,
) -> Result<DiagnosticCurve>
where
    F: Fn(&Dataset, f64, &crate::quantile::QuantileSolution) -> Result<f64> + Sync + Send,
{
    let ns: Vec<usize> = schedule.values.iter().map(|v| v.0).collect();
    let plan = plan(req, &ns)?;
    let mut meta = base_meta(req, experiment, &plan);
    let s = plan.samples.len();
    let inner = SolverOptions {
        exec: Exec::Sequential,
        ..req.solver
    };
    let jobs = req.exec.map_indices(ns.len() * s, |j| -> Result<SolveOutcome> {
        let (i, k) = (j / s, j % s);
        let alpha = schedule.values[i].1;
        let data = plan.samples[k].prefix(plan.sizes[i]);
        let u = req.direction.vector().scale(alpha);
        let sol = solve(&data, &u, &inner)?;
        if !sol.converged {
            return Ok(SolveOutcome::default());
        }
        let gb = growth_bound(&data, alpha)?;
        Ok(SolveOutcome {
            value: Some(stat(&data, alpha, &sol)?),
            residual_bad: !sol.satisfies_characterization(inner.tol),
            growth_bad: sol.q.norm() > gb.bound * (1.0 + GROWTH_SLACK),
        })
    });
    let jobs = jobs.into_iter().collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(ns.len());
    for (i, chunk) in jobs.chunks(s).enumerate() {
        let values: Vec<f64> = chunk.iter().filter_map(|o| o.value).collect();
        meta.solves += chunk.len();
        meta.nonconverged += chunk.len() - values.len();
        meta.residual_violations += chunk.iter().filter(|o| o.residual_bad).count();
        meta.growth_checks += values.len();
        meta.growth_violations += chunk.iter().filter(|o| o.growth_bad).count();
        if values.is_empty() {
            return Err(Error::NonConvergence(format!(
                "no converged solve at α = {}",
                schedule.values[i].1
            )));
        }
        let (stat, spread) = aggregate(&values, req.aggregation);
        let mut p = CurvePoint::new(schedule.values[i].1, stat, spread, plan.sizes[i], values.len());
        p.values = values;
        points.push(p);
    }
    Ok(DiagnosticCurve { points, meta })
}

/// `y(α) = ‖q̂(αu)‖²(1−α) − ½(tr Σ − uᵀΣu)` along an α-schedule.
pub fn y_curve(req: &CurveRequest, schedule: &AlphaSchedule) -> Result<DiagnosticCurve> {
    check_dims(req)?;
    let (moments, which) = match &req.source {
        CurveSource::Spec(s) => {
            require_second_moment(s)?;
            (population_moments(s)?, "population")
        }
        CurveSource::Data(d) => (sample_moments(d)?, "sample"),
    };
    let limit = moments.magnitude_limit(&req.direction);
    if !(limit > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tr Σ − uᵀΣu must be positive (got {})",
            2.0 * limit
        )));
    }
    let mut c = quantile_curve(req, schedule, "y", |_, alpha, sol| {
        Ok(sol.q.norm().powi(2) * (1.0 - alpha) - limit)
    })?;
    c.meta.moments = Some(which.into());
    c.meta.limit = Some(limit);
    Ok(c)
}

/// Norm of `q̂ − ‖q̂‖u − (1/n)Σ(X_i − ⟨X_i,u⟩u)` along an α-schedule.
pub fn first_order_curve(req: &CurveRequest, schedule: &AlphaSchedule) -> Result<DiagnosticCurve> {
    check_dims(req)?;
    if let CurveSource::Spec(s) = &req.source {
        require_first_moment(s)?;
    }
    let u = req.direction.clone();
    quantile_curve(req, schedule, "first_order", move |data, _, sol| {
        Ok(first_order_residual_of(data, &u, &sol.q)?.norm())
    })
}

struct DepthOutcome {
    k: usize,
    n: usize,
    bound_bad: bool,
}

fn depth_jobs(
    req: &CurveRequest,
    t: &TSchedule,
    method: DepthMethod,
    plan: &Plan,
) -> Result<Vec<DepthOutcome>> {
    let d = check_dims(req)?;
    if method == DepthMethod::Exact2d && d != 2 {
        return Err(Error::Unsupported(format!(
            "exact depth needs d = 2 (got d = {d})"
        )));
    }
    let s = plan.samples.len();
    let inner = Exec::Sequential;
    let jobs = req.exec.map_indices(t.values.len() * s, |j| -> Result<DepthOutcome> {
        let (i, k) = (j / s, j % s);
        let n = plan.sizes[i];
        let data = plan.samples[k].prefix(n);
        let x = req.direction.vector().scale(t.values[i].1);
        let marginal = empirical_marginal_count(&data, &x)?;
        let depth = match method {
            DepthMethod::Exact2d => depth_exact_2d(&data, &x)?.count().unwrap().0,
            DepthMethod::Approx { directions } => {
                let rng = RngSpec::new(
                    plan.seeds[k],
                    hash_words(&[n as u64, plan.seeds[k], i as u64]),
                );
                let a = depth_approx(&data, &x, directions, rng, inner)?;
                a.count().unwrap().0.min(marginal)
            }
        };
        Ok(DepthOutcome {
            k: depth,
            n,
            bound_bad: depth > marginal,
        })
    });
    jobs.into_iter().collect()
}

fn population_marginal_bound(req: &CurveRequest, t: f64) -> Option<f64> {
    match &req.source {
        CurveSource::Spec(s) => {
            let m = s.marginals()?;
            marginal_survival_bound(&m, req.direction.vector(), t).ok()
        }
        CurveSource::Data(_) => None,
    }
}

/// Empirical depth at `t_n·x` along a t-schedule.
pub fn hd_decay_curve(
    req: &CurveRequest,
    t: &TSchedule,
    method: DepthMethod,
) -> Result<DiagnosticCurve> {
    let ns: Vec<usize> = t.values.iter().map(|v| v.0).collect();
    let plan = plan(req, &ns)?;
    let jobs = depth_jobs(req, t, method, &plan)?;
    let mut meta = base_meta(req, "hd_decay", &plan);
    meta.gamma = t.gamma.clone();
    let s = plan.samples.len();
    let mut points = Vec::new();
    for (i, chunk) in jobs.chunks(s).enumerate() {
        meta.bound_checks += chunk.len();
        meta.bound_violations += chunk.iter().filter(|o| o.bound_bad).count();
        let counts: Vec<(usize, usize)> = chunk.iter().map(|o| (o.k, o.n)).collect();
        let values: Vec<f64> = counts.iter().map(|&(k, n)| k as f64 / n as f64).collect();
        let (mut stat, spread) = aggregate(&values, req.aggregation);
        if req.aggregation == Aggregation::MedianMad {
            stat = exact_median(&counts);
        }
        let mut p = CurvePoint::new(t.values[i].1, stat, spread, plan.sizes[i], s);
        p.values = values;
        p.counts = counts;
        p.aux = population_marginal_bound(req, t.values[i].1);
        points.push(p);
    }
    Ok(DiagnosticCurve { points, meta })
}

/// Population depth of `x` under `spec`, where an oracle exists.
pub fn population_depth(spec: &DistributionSpec, x: &crate::geom::Vector) -> Result<f64> {
    match spec {
        DistributionSpec::GaussianDiag { variances } => {
            Ok(population_depth_gaussian(variances, x)?.value)
        }
        DistributionSpec::ParetoIndep { .. } if spec.dims() == 2 => {
            let m = spec.marginals().expect("product law");
            Ok(population_depth_product(&m, x, 256, ProductMethod::default())?
                .depth
                .value)
        }
        _ => Err(Error::Unsupported(format!(
            "no population depth oracle for {} in d = {}",
            spec.label(),
            spec.dims()
        ))),
    }
}

/// `HD(t_n x, P_n) / HD(t_n x, P)` along a t-schedule.
///
/// Points where `HD(t_n x, P) ≤ γ_n` are listed in `meta.flagged`.
pub fn hd_ratio_curve(
    req: &CurveRequest,
    t: &TSchedule,
    method: DepthMethod,
) -> Result<DiagnosticCurve> {
    let spec = match &req.source {
        CurveSource::Spec(s) => s.clone(),
        CurveSource::Data(_) => {
            return Err(Error::Unsupported(
                "depth ratios need a distribution, not a dataset".into(),
            ))
        }
    };
    check_dims(req)?;
    let pops = req
        .exec
        .map(&t.values, |&(_, ti)| {
            population_depth(&spec, &req.direction.vector().scale(ti))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    if let Some(i) = pops.iter().position(|p| !(*p > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "population depth underflows at t = {}",
            t.values[i].1
        )));
    }
    let ns: Vec<usize> = t.values.iter().map(|v| v.0).collect();
    let plan = plan(req, &ns)?;
    let jobs = depth_jobs(req, t, method, &plan)?;
    let mut meta = base_meta(req, "hd_ratio", &plan);
    meta.gamma = t.gamma.clone();
    let s = plan.samples.len();
    let mut points = Vec::new();
    for (i, chunk) in jobs.chunks(s).enumerate() {
        meta.bound_checks += chunk.len();
        meta.bound_violations += chunk.iter().filter(|o| o.bound_bad).count();
        if let Some(g) = &t.gamma {
            if pops[i] <= g[i] {
                meta.flagged.push(i);
            }
        }
        let counts: Vec<(usize, usize)> = chunk.iter().map(|o| (o.k, o.n)).collect();
        let values: Vec<f64> = counts
            .iter()
            .map(|&(k, n)| k as f64 / n as f64 / pops[i])
            .collect();
        let (mut stat, spread) = aggregate(&values, req.aggregation);
        if req.aggregation == Aggregation::MedianMad {
            stat = exact_median(&counts) / pops[i];
        }
        let mut p = CurvePoint::new(t.values[i].1, stat, spread, plan.sizes[i], s);
        p.values = values;
        p.counts = counts;
        p.aux = Some(pops[i]);
        points.push(p);
    }
    Ok(DiagnosticCurve { points, meta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::schedule::{make_alpha_schedule, make_t_schedule, AlphaKind, TKind};
    use crate::geom::Vector;
    use crate::oracle::brute_quantile;

    fn diag() -> UnitDirection {
        UnitDirection::from_coords(&[1.0, 1.0]).unwrap()
    }

    #[test]
    fn aggregation_rules() {
        let (m, s) = aggregate(&[3.0, 1.0, 2.0, 10.0], Aggregation::MedianMad);
        assert_eq!((m, s), (2.5, Some(1.0)));
        let (m, s) = aggregate(&[1.0, 3.0], Aggregation::MeanStderr);
        assert_eq!(m, 2.0);
        assert!((s.unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(aggregate(&[4.0], Aggregation::MedianMad), (4.0, None));
        assert_eq!(exact_median(&[(3, 10), (1, 10), (2, 10)]), 0.2);
        assert_eq!(exact_median(&[(3, 10), (2, 10)]), 0.25);
    }

    #[test]
    fn cross_fixture_y() {
        let cross = Dataset::from_rows(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]).unwrap();
        let u = UnitDirection::basis(2, 0);
        let sched = make_alpha_schedule(AlphaKind::Custom, &[0.5], &[1]).unwrap();
        let mut req = CurveRequest::new(DistributionSpec::gaussian(&[1.0, 1.0]), u.clone(), vec![0]);
        req.source = CurveSource::Data(cross.clone());
        req.n_policy = NPolicy::Fixed(4);
        let c = y_curve(&req, &sched).unwrap();
        // sample covariance diag(½, ½): limit ¼
        assert_eq!(c.meta.limit, Some(0.25));
        assert_eq!(c.meta.moments.as_deref(), Some("sample"));
        let brute = brute_quantile(&cross, &Vector::new(vec![0.5, 0.0]).unwrap(), 6).unwrap();
        let want = brute.value.q.norm().powi(2) * 0.5 - 0.25;
        assert!((c.points[0].stat - want).abs() < 1e-5, "{} vs {want}", c.points[0].stat);
        // the quantile sits on the atom (1, 0)
        assert!((c.points[0].stat - 0.25).abs() < 1e-6, "{:?}", c.points[0]);
        assert_eq!(c.meta.residual_violations + c.meta.growth_violations, 0);
    }

    #[test]
    fn y_curve_gaussian_small() {
        let sched = make_alpha_schedule(AlphaKind::PowerOfTen, &[], &[1, 2]).unwrap();
        let req = CurveRequest::new(DistributionSpec::gaussian(&[1.0, 1.0]), diag(), vec![1, 2, 3])
            .with_policy(NPolicy::Fixed(5000));
        let c = y_curve(&req, &sched).unwrap();
        assert!((c.meta.limit.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(c.points.len(), 2);
        assert_eq!(c.points[0].seeds, 3);
        assert_eq!(c.meta.nonconverged + c.meta.residual_violations + c.meta.growth_violations, 0);
        assert!(c.points[1].stat.abs() < 0.3);
        let par = Exec::Sequential;
        let mut r2 = req.clone();
        r2.exec = par;
        assert_eq!(y_curve(&r2, &sched).unwrap(), c);
    }

    #[test]
    fn y_curve_requires_second_moment() {
        let sched = make_alpha_schedule(AlphaKind::PowerOfTen, &[], &[1]).unwrap();
        let req = CurveRequest::new(DistributionSpec::pareto(2, 2.0), diag(), vec![1]);
        let err = y_curve(&req, &sched).unwrap_err();
        assert!(err.to_string().contains("E‖X₁‖² < ∞"), "{err}");
        let req = CurveRequest::new(DistributionSpec::pareto(2, 1.0), diag(), vec![1]);
        assert!(first_order_curve(&req, &sched).is_err());
    }

    #[test]
    fn first_order_degenerate_sample() {
        let sched = make_alpha_schedule(AlphaKind::PowerOfTen, &[], &[1]).unwrap();
        let req = CurveRequest::new(DistributionSpec::gaussian(&[1.0, 1.0]), diag(), vec![1])
            .with_policy(NPolicy::Fixed(1));
        assert!(first_order_curve(&req, &sched).is_err());
    }

    #[test]
    fn decay_curve_bounds_and_nesting() {
        let t = make_t_schedule(TKind::GaussianLog, &[0.5], &[200, 400, 800]).unwrap();
        let req = CurveRequest::new(DistributionSpec::gaussian(&[2.0, 2.0]), diag(), vec![1, 2, 3]);
        let c = hd_decay_curve(&req, &t, DepthMethod::Exact2d).unwrap();
        assert_eq!(c.meta.bound_checks, 9);
        assert_eq!(c.meta.bound_violations, 0);
        for p in &c.points {
            assert!(p.counts.iter().all(|&(_, n)| n == p.n));
            assert!(p.aux.unwrap() > 0.0);
        }
        let a = hd_decay_curve(&req, &t, DepthMethod::Approx { directions: 2000 }).unwrap();
        for (e, a) in c.points.iter().zip(&a.points) {
            for (ce, ca) in e.counts.iter().zip(&a.counts) {
                assert!(ca.0 >= ce.0);
            }
        }
        // far beyond the data every depth is zero
        let far = make_t_schedule(TKind::Custom, &[1e3, 2e3], &[100, 200]).unwrap();
        let z = hd_decay_curve(&req, &far, DepthMethod::Exact2d).unwrap();
        assert!(z.points.iter().all(|p| p.stat == 0.0));
    }

    #[test]
    fn ratio_curve_flags_premise() {
        let t = make_t_schedule(TKind::Custom, &[1.0, 2.0, 3.0, 0.9], &[100, 200, 400]).unwrap();
        let req = CurveRequest::new(DistributionSpec::gaussian(&[2.0, 2.0]), diag(), vec![5]);
        let c = hd_ratio_curve(&req, &t, DepthMethod::Exact2d).unwrap();
        let g = c.meta.gamma.clone().unwrap();
        for (i, p) in c.points.iter().enumerate() {
            assert_eq!(c.meta.flagged.contains(&i), p.aux.unwrap() <= g[i]);
        }
        let t = make_t_schedule(TKind::Custom, &[3.0, 4.0, 5.0, 0.2], &[100, 200, 400]).unwrap();
        let c = hd_ratio_curve(&req, &t, DepthMethod::Exact2d).unwrap();
        assert_eq!(c.meta.flagged, vec![0, 1, 2]);
        let sph = CurveRequest::new(DistributionSpec::SphericalExponential { dims: 2 }, diag(), vec![1]);
        assert!(hd_ratio_curve(&sph, &t, DepthMethod::Exact2d).is_err());
    }

    #[test]
    fn ratio_at_fixed_radius_tends_to_one() {
        let t = make_t_schedule(TKind::Custom, &[1.0, 1.0 + 1e-9], &[20_000, 40_000]).unwrap();
        let req = CurveRequest::new(DistributionSpec::gaussian(&[1.0, 1.0]), diag(), vec![9]);
        let c = hd_ratio_curve(&req, &t, DepthMethod::Exact2d).unwrap();
        let p = c.points.last().unwrap();
        let pop = p.aux.unwrap();
        let sd = (pop * (1.0 - pop) / p.n as f64).sqrt() / pop;
        assert!((p.stat - 1.0).abs() < 3.0 * sd + 0.02, "{} {sd}", p.stat);
    }
}
