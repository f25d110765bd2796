//! Sample geometric quantiles.
//!
//! The αu-quantile of a sample minimises
//! `(1/n) Σ (‖X_i − q‖ − ‖X_i‖) − ⟨αu, q⟩` and is characterised by
//! `‖r(q) − αu‖ ≤ #{X_i = q}/n` with `r(q) = −(1/n) Σ_{X_i ≠ q} (X_i − q)/‖X_i − q‖`.
//!
//! [`solve`] runs a modified Weiszfeld iteration (Vardi–Zhang step at atoms)
//! accelerated by damped Newton steps away from atoms. Every accepted step
//! is checked not to increase the objective.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geom::{self, check_dim, dot, norm, Dataset, UnitDirection, Vector};
use crate::samplers::{population_moments, DistributionSpec};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Backtracking halvings tried on a Newton step before falling back.
const NEWTON_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub exec: Exec,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            exec: Exec::default(),
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSolution {
    pub q: Vector,
    pub u_index: Vector,
    pub iterations: usize,
    /// `‖r(q) − u_index‖`.
    pub residual_norm: f64,
    pub atom_hits: usize,
    pub n: usize,
    pub objective: f64,
    pub converged: bool,
    /// Set when the sample lies on a line (d ≥ 2) and the minimiser need not
    /// be unique.
    pub non_unique: bool,
}

impl QuantileSolution {
    /// The subgradient optimality bound `‖r(q) − u‖ ≤ tol + atoms/n`.
    pub fn satisfies_characterization(&self, tol: f64) -> bool {
        self.residual_norm <= tol + self.atom_hits as f64 / self.n as f64
    }
}

fn check_index(data: &Dataset, u_index: &Vector) -> Result<f64> {
    check_dim(data.dim(), u_index.dim())?;
    let un = u_index.norm();
    if un >= 1.0 {
        return Err(Error::IndexOutOfBall(un));
    }
    Ok(un)
}

/// `(1/n) Σ (‖X_i − q‖ − ‖X_i‖) − ⟨u_index, q⟩`.
pub fn objective(data: &Dataset, u_index: &Vector, q: &Vector) -> Result<f64> {
    check_index(data, u_index)?;
    check_dim(data.dim(), q.dim())?;
    if data.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, found: 0 });
    }
    let s: f64 = data
        .points()
        .map(|x| geom::dist(x, q.coords()) - norm(x))
        .sum();
    Ok(s / data.len() as f64 - u_index.dot(q))
}

/// `r(q)` and the number of sample points within the coincidence tolerance
/// of `q`.
pub fn residual(data: &Dataset, q: &Vector) -> Result<(Vector, usize)> {
    check_dim(data.dim(), q.dim())?;
    if data.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, found: 0 });
    }
    let tol = data.coincidence_tol();
    let d = data.dim();
    let mut acc = vec![0.0; d];
    let mut atoms = 0;
    for x in data.points() {
        let dist = geom::dist(x, q.coords());
        if dist <= tol {
            atoms += 1;
            continue;
        }
        for k in 0..d {
            acc[k] += (x[k] - q.coords()[k]) / dist;
        }
    }
    let n = data.len() as f64;
    Ok((Vector::new(acc.iter().map(|a| -a / n).collect())?, atoms))
}

/// Per-iterate sums over the sample.
#[derive(Debug, Clone)]
struct Pass {
    /// Σ (X_i − q)/‖X_i − q‖ over non-atoms.
    unit_sum: Vec<f64>,
    /// Σ 1/‖X_i − q‖.
    inv_sum: f64,
    /// Σ X_i/‖X_i − q‖.
    weighted: Vec<f64>,
    /// Σ (I − v vᵀ)/‖X_i − q‖, row-major.
    hess: Vec<f64>,
    /// Σ (‖X_i − q‖ − ‖X_i‖) over all points.
    obj: f64,
    /// Σ (‖X_i − q‖ + ‖X_i‖), for the rounding floor of `obj`.
    magnitude: f64,
    atoms: usize,
}

impl Pass {
    fn zero(d: usize) -> Self {
        Self {
            unit_sum: vec![0.0; d],
            inv_sum: 0.0,
            weighted: vec![0.0; d],
            hess: vec![0.0; d * d],
            obj: 0.0,
            magnitude: 0.0,
            atoms: 0,
        }
    }

    fn merge(mut self, o: Pass) -> Pass {
        add_into(&mut self.unit_sum, &o.unit_sum);
        add_into(&mut self.weighted, &o.weighted);
        add_into(&mut self.hess, &o.hess);
        self.inv_sum += o.inv_sum;
        self.obj += o.obj;
        self.magnitude += o.magnitude;
        self.atoms += o.atoms;
        self
    }
}

fn add_into(a: &mut [f64], b: &[f64]) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
}

/// Sample with cached norms, shared by all passes of one solve.
struct Problem<'a> {
    data: &'a Dataset,
    norms: Vec<f64>,
    u: Vec<f64>,
    ctol: f64,
    exec: Exec,
}

impl<'a> Problem<'a> {
    fn new(data: &'a Dataset, u: &Vector, exec: Exec) -> Self {
        Self {
            data,
            norms: data.points().map(norm).collect(),
            u: u.coords().to_vec(),
            ctol: data.coincidence_tol(),
            exec,
        }
    }

    fn n(&self) -> f64 {
        self.data.len() as f64
    }

    fn full_pass(&self, q: &[f64], with_hessian: bool) -> Pass {
        let d = self.data.dim();
        self.exec
            .reduce_chunks(
                self.data.len(),
                |range| {
                    let mut p = Pass::zero(d);
                    let mut v = vec![0.0; d];
                    for i in range {
                        let x = self.data.point(i);
                        let mut dd = 0.0;
                        for k in 0..d {
                            v[k] = x[k] - q[k];
                            dd += v[k] * v[k];
                        }
                        let dist = dd.sqrt();
                        p.obj += dist - self.norms[i];
                        p.magnitude += dist + self.norms[i];
                        if dist <= self.ctol {
                            p.atoms += 1;
                            continue;
                        }
                        let w = 1.0 / dist;
                        p.inv_sum += w;
                        for k in 0..d {
                            p.unit_sum[k] += v[k] * w;
                            p.weighted[k] += x[k] * w;
                        }
                        if with_hessian {
                            // (I − v̂v̂ᵀ)/dist with v̂ = v/dist
                            let w3 = w * w * w;
                            for r in 0..d {
                                p.hess[r * d + r] += w;
                                for c in 0..d {
                                    p.hess[r * d + c] -= v[r] * v[c] * w3;
                                }
                            }
                        }
                    }
                    p
                },
                Pass::merge,
            )
            .unwrap_or_else(|| Pass::zero(d))
    }

    /// Objective value and its rounding floor.
    fn value(&self, q: &[f64]) -> (f64, f64) {
        let (s, m) = self
            .exec
            .reduce_chunks(
                self.data.len(),
                |range| {
                    let mut s = 0.0;
                    let mut m = 0.0;
                    for i in range {
                        let dist = geom::dist(self.data.point(i), q);
                        s += dist - self.norms[i];
                        m += dist + self.norms[i];
                    }
                    (s, m)
                },
                |a, b| (a.0 + b.0, a.1 + b.1),
            )
            .unwrap_or((0.0, 0.0));
        let uq = dot(&self.u, q);
        let n = self.n();
        (s / n - uq, floor(m / n, uq))
    }
}

fn floor(mean_magnitude: f64, uq: f64) -> f64 {
    16.0 * f64::EPSILON * (mean_magnitude + uq.abs())
}

/// Whether the sample spans fewer than two dimensions (d ≥ 2).
pub fn is_collinear(data: &Dataset) -> bool {
    let d = data.dim();
    if d < 2 || data.len() < 2 {
        return d >= 2;
    }
    let Ok(m) = geom::sample_moments(data) else {
        return true;
    };
    let cov = DMatrix::from_row_slice(d, d, &m.covariance);
    let eig = SymmetricEigen::new(cov);
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev[d - 2] <= 1e-12 * m.trace.max(f64::MIN_POSITIVE)
}

fn initial_point(data: &Dataset, u_index: &Vector, un: f64) -> Vec<f64> {
    let med = data.coordinate_median();
    let spread = data
        .points()
        .map(|x| geom::dist(x, med.coords()))
        .sum::<f64>()
        / data.len() as f64;
    let s = spread / (1.0 - un).sqrt();
    med.coords()
        .iter()
        .zip(u_index.coords())
        .map(|(m, u)| m + s * u)
        .collect()
}

fn newton_direction(pass: &Pass, grad: &[f64], n: f64) -> Option<Vec<f64>> {
    let d = grad.len();
    let h = DMatrix::from_row_slice(d, d, &pass.hess) / n;
    let chol = h.cholesky()?;
    let step = chol.solve(&DVector::from_iterator(d, grad.iter().map(|g| -g)));
    step.iter().all(|s| s.is_finite()).then(|| step.iter().copied().collect())
}

/// Solves for the `u_index`-quantile of the sample.
pub fn solve(data: &Dataset, u_index: &Vector, opts: &SolverOptions) -> Result<QuantileSolution> {
    solve_traced(data, u_index, opts).map(|(s, _)| s)
}

/// Like [`solve`], also returning the objective value and rounding floor of
/// every accepted iterate (starting point first).
pub fn solve_traced(
    data: &Dataset,
    u_index: &Vector,
    opts: &SolverOptions,
) -> Result<(QuantileSolution, Vec<(f64, f64)>)> {
    let un = check_index(data, u_index)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive (got {})",
            opts.tol
        )));
    }
    if data.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, found: 0 });
    }
    let first = data.point(0);
    if data.points().all(|x| x == first) {
        return Err(Error::InvalidParameter(
            "sample points are all identical".into(),
        ));
    }

    let d = data.dim();
    let prob = Problem::new(data, u_index, opts.exec);
    let n = prob.n();
    let u = prob.u.clone();
    let mut q = initial_point(data, u_index, un);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    let (mut pass, mut f, mut f_floor);
    loop {
        pass = prob.full_pass(&q, true);
        let uq = dot(&u, &q);
        f = pass.obj / n - uq;
        f_floor = floor(pass.magnitude / n, uq);
        if trace.is_empty() {
            trace.push((f, f_floor));
        }
        let grad: Vec<f64> = (0..d).map(|k| -pass.unit_sum[k] / n - u[k]).collect();
        let res = norm(&grad);
        if res <= opts.tol + pass.atoms as f64 / n {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let mut next: Option<(Vec<f64>, f64)> = None;
        if pass.atoms == 0 {
            if let Some(dir) = newton_direction(&pass, &grad, n) {
                let mut t = 1.0;
                for _ in 0..NEWTON_HALVINGS {
                    let cand: Vec<f64> = q.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
                    let (fc, _) = prob.value(&cand);
                    if fc <= f + f_floor {
                        next = Some((cand, fc));
                        break;
                    }
                    t *= 0.5;
                }
            }
        }
        if next.is_none() {
            // Vardi–Zhang modified Weiszfeld step
            let pull: Vec<f64> = (0..d).map(|k| pass.unit_sum[k] + n * u[k]).collect();
            let r = norm(&pull);
            let eta = pass.atoms as f64;
            if pass.inv_sum > 0.0 && r > 0.0 {
                let target: Vec<f64> = (0..d)
                    .map(|k| (pass.weighted[k] + n * u[k]) / pass.inv_sum)
                    .collect();
                let keep = (eta / r).min(1.0);
                let cand: Vec<f64> = (0..d)
                    .map(|k| (1.0 - keep) * target[k] + keep * q[k])
                    .collect();
                let (fc, _) = prob.value(&cand);
                if fc <= f + f_floor {
                    next = Some((cand, fc));
                } else {
                    let half: Vec<f64> = (0..d).map(|k| 0.5 * (q[k] + cand[k])).collect();
                    let (fh, _) = prob.value(&half);
                    if fh <= f + f_floor {
                        next = Some((half, fh));
                    }
                }
            }
        }
        let Some((cand, fc)) = next else {
            // no descent step available at this precision
            break;
        };
        let moved = geom::dist(&cand, &q);
        let fl = prob.value(&cand).1;
        trace.push((fc, fl));
        q = cand;
        if moved <= 4.0 * f64::EPSILON * (1.0 + norm(&q)) {
            pass = prob.full_pass(&q, false);
            let uq = dot(&u, &q);
            f = pass.obj / n - uq;
            let grad: Vec<f64> = (0..d).map(|k| -pass.unit_sum[k] / n - u[k]).collect();
            converged = norm(&grad) <= opts.tol + pass.atoms as f64 / n;
            break;
        }
    }

    let grad: Vec<f64> = (0..d).map(|k| -pass.unit_sum[k] / n - u[k]).collect();
    let sol = QuantileSolution {
        q: Vector::new(q)?,
        u_index: u_index.clone(),
        iterations,
        residual_norm: norm(&grad),
        atom_hits: pass.atoms,
        n: data.len(),
        objective: f,
        converged,
        non_unique: d >= 2 && is_collinear(data),
    };
    Ok((sol, trace))
}

/// `q̂ − ‖q̂‖u − (1/n) Σ (X_i − ⟨X_i,u⟩u)` for a solved αu-quantile.
pub fn first_order_residual_of(data: &Dataset, u: &UnitDirection, q: &Vector) -> Result<Vector> {
    check_dim(data.dim(), u.dim())?;
    check_dim(data.dim(), q.dim())?;
    let d = data.dim();
    let n = data.len() as f64;
    let uc = u.coords();
    let mut mean_perp = vec![0.0; d];
    for x in data.points() {
        let p = dot(x, uc);
        for k in 0..d {
            mean_perp[k] += x[k] - p * uc[k];
        }
    }
    let qn = q.norm();
    Vector::new(
        (0..d)
            .map(|k| q.coords()[k] - qn * uc[k] - mean_perp[k] / n)
            .collect(),
    )
}

/// First-order residual of the `alpha·u` quantile.
pub fn first_order_residual(
    data: &Dataset,
    u: &UnitDirection,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<Vector> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1) (got {alpha})"
        )));
    }
    let sol = solve(data, &u.vector().scale(alpha), opts)?;
    first_order_residual_of(data, u, &sol.q)
}

/// Orthonormal completion of `u`: Gram–Schmidt on the canonical basis in
/// index order, skipping the basis vector most parallel to `u`.
pub fn orthonormal_completion(u: &UnitDirection) -> Vec<Vector> {
    let d = u.dim();
    let skip = (0..d)
        .max_by(|&a, &b| {
            u.coords()[a]
                .abs()
                .total_cmp(&u.coords()[b].abs())
                .then(b.cmp(&a))
        })
        .unwrap_or(0);
    let mut basis: Vec<Vec<f64>> = vec![u.coords().to_vec()];
    for k in (0..d).filter(|&k| k != skip) {
        let mut v = Vector::basis(d, k).coords().to_vec();
        for b in &basis {
            let c = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let l = norm(&v);
        v.iter_mut().for_each(|x| *x /= l);
        basis.push(v);
    }
    basis
        .into_iter()
        .skip(1)
        .map(|v| Vector::new(v).expect("finite basis"))
        .collect()
}

/// Where the moments for [`expansion_limits`] come from.
#[derive(Debug, Clone, Copy)]
pub enum MomentSource<'a> {
    Data(&'a Dataset),
    Spec(&'a DistributionSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionLimits {
    /// `E(X − ⟨X,u⟩u)`.
    pub first_order_shift: Vector,
    /// Limit of `‖q‖[q − {‖q‖u + E(X − ⟨X,u⟩u)}]`.
    pub second_order_vector: Vector,
    /// `½(tr Σ − uᵀΣu)`, limit of `‖q‖²(1 − α)`.
    pub magnitude_limit: f64,
    /// Limit of `‖q‖[‖q‖²(1 − α) − ½(tr Σ − uᵀΣu)]`; absent without a third
    /// moment.
    pub third_order_limit: Option<f64>,
}

/// Mean, covariance and `E[⟨X,u⟩ ‖X − ⟨X,u⟩u‖²]` (when available).
fn expansion_inputs(
    source: MomentSource<'_>,
    u: &UnitDirection,
) -> Result<(Vec<f64>, crate::geom::Moments, Option<f64>)> {
    let uc = u.coords();
    match source {
        MomentSource::Data(data) => {
            check_dim(data.dim(), u.dim())?;
            let m = geom::sample_moments(data)?;
            let t1 = data
                .points()
                .map(|x| {
                    let p = dot(x, uc);
                    p * (dot(x, x) - p * p)
                })
                .sum::<f64>()
                / data.len() as f64;
            Ok((m.mean.coords().to_vec(), m, Some(t1)))
        }
        MomentSource::Spec(spec) => {
            check_dim(spec.dims(), u.dim())?;
            let m = population_moments(spec)?;
            let t1 = if !spec.has_moment(3) {
                None
            } else if let Some(marg) = spec.marginals() {
                let d = marg.len();
                let raw = |j: usize, k: u32| marg[j].raw_moment(k).expect("moment checked");
                // E[⟨X,u⟩‖X‖²]
                let a: f64 = (0..d)
                    .map(|j| {
                        let others: f64 = (0..d).filter(|&k| k != j).map(|k| raw(k, 2)).sum();
                        uc[j] * (raw(j, 3) + raw(j, 1) * others)
                    })
                    .sum();
                // E[⟨X,u⟩³]
                let mut b = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        for k in 0..d {
                            let e = if i == j && j == k {
                                raw(i, 3)
                            } else if i == j {
                                raw(i, 2) * raw(k, 1)
                            } else if i == k {
                                raw(i, 2) * raw(j, 1)
                            } else if j == k {
                                raw(j, 2) * raw(i, 1)
                            } else {
                                raw(i, 1) * raw(j, 1) * raw(k, 1)
                            };
                            b += uc[i] * uc[j] * uc[k] * e;
                        }
                    }
                }
                Some(a - b)
            } else {
                // centrally symmetric: odd moments vanish
                Some(0.0)
            };
            Ok((m.mean.coords().to_vec(), m, t1))
        }
    }
}

/// Limits of the higher-order expansions of the αu-quantile as α → 1.
pub fn expansion_limits(source: MomentSource<'_>, u: &UnitDirection) -> Result<ExpansionLimits> {
    let (mu, mom, t1) = expansion_inputs(source, u)?;
    let d = u.dim();
    let uc = u.coords();
    let mu_u = dot(&mu, uc);
    let shift: Vec<f64> = (0..d).map(|k| mu[k] - mu_u * uc[k]).collect();
    let ws = orthonormal_completion(u);
    let shift_sq = dot(&shift, &shift);
    let mut second: Vec<f64> = uc.iter().map(|x| -0.5 * shift_sq * x).collect();
    let mut cross_term = 0.0;
    for w in &ws {
        let c = mom.bilinear(uc, w.coords());
        for k in 0..d {
            second[k] += c * w.coords()[k];
        }
        cross_term += c * dot(&mu, w.coords());
    }
    let magnitude_limit = mom.magnitude_limit(u);
    let third = t1.map(|t| t - dot(&mu, &shift) - cross_term);
    Ok(ExpansionLimits {
        first_order_shift: Vector::new(shift)?,
        second_order_vector: Vector::new(second)?,
        magnitude_limit,
        third_order_limit: third,
    })
}

/// The a.s. growth bound `‖q̂_n(αu)‖ ≤ (M_n + 2) k_n` with `δ_n = (1 − α)/5`,
/// `k_n` the smallest sample norm exceeded by at most a `δ_n` fraction, and
/// `M_n = (α + 2δ_n)/(1 − 4δ_n − α) + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBound {
    pub delta_n: f64,
    pub k_n: f64,
    pub m_n: f64,
    pub bound: f64,
}

pub fn growth_bound(data: &Dataset, alpha: f64) -> Result<GrowthBound> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1) (got {alpha})"
        )));
    }
    if data.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, found: 0 });
    }
    let delta_n = (1.0 - alpha) / 5.0;
    let mut norms: Vec<f64> = data.points().map(norm).collect();
    norms.sort_by(f64::total_cmp);
    let n = norms.len();
    let above = ((delta_n * n as f64 * (1.0 + 1e-12)).floor() as usize).min(n - 1);
    let k_n = norms[n - 1 - above];
    let m_n = (alpha + 2.0 * delta_n) / (1.0 - 4.0 * delta_n - alpha) + 1.0;
    Ok(GrowthBound {
        delta_n,
        k_n,
        m_n,
        bound: (m_n + 2.0) * k_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSpec;
    use crate::samplers::sample;

    fn cross() -> Dataset {
        Dataset::from_rows(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]).unwrap()
    }

    fn triangle() -> Dataset {
        Dataset::from_rows(&[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]).unwrap()
    }

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn objective_examples() {
        let data = triangle();
        assert_eq!(objective(&data, &v(&[0.3, 0.1]), &v(&[0.0, 0.0])).unwrap(), 0.0);
        let two = Dataset::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        assert_eq!(objective(&two, &v(&[0.0, 0.0]), &v(&[0.0, 0.0])).unwrap(), 0.0);
        for t in [-1.0, -0.5, 0.3, 1.0] {
            assert!(objective(&two, &v(&[0.0, 0.0]), &v(&[t, 0.0])).unwrap() >= 0.0);
        }
        let want = (1.0 + (1.0 - 2.0) + (5f64.sqrt() - 2.0)) / 3.0 - 0.3;
        let got = objective(&data, &v(&[0.3, 0.0]), &v(&[1.0, 0.0])).unwrap();
        assert!((got - want).abs() < 1e-15);
        assert!((got + 0.2213).abs() < 1e-4);
        assert!(matches!(
            objective(&data, &v(&[1.0, 0.0]), &v(&[0.0, 0.0])),
            Err(Error::IndexOutOfBall(_))
        ));
    }

    #[test]
    fn residual_examples() {
        let (r, a) = residual(&cross(), &v(&[0.0, 0.0])).unwrap();
        assert_eq!(r.coords(), &[0.0, 0.0]);
        assert_eq!(a, 0);
        let single = Dataset::from_rows(&[[5.0, 5.0]]).unwrap();
        let (r, a) = residual(&single, &v(&[5.0, 5.0])).unwrap();
        assert_eq!(r.coords(), &[0.0, 0.0]);
        assert_eq!(a, 1);
        let two = Dataset::from_rows(&[[0.0, 0.0], [2.0, 0.0]]).unwrap();
        let (r, a) = residual(&two, &v(&[1.0, 1.0])).unwrap();
        assert!(r.coords()[0].abs() < 1e-15);
        assert!((r.coords()[1] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(a, 0);
    }

    #[test]
    fn spatial_median_of_cross() {
        let sol = solve(&cross(), &v(&[0.0, 0.0]), &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        assert!(sol.q.norm() < 1e-8);
    }

    #[test]
    fn translation_equivariance() {
        let data = triangle();
        let c = v(&[10.0, -3.5]);
        let opts = SolverOptions::default();
        let a = solve(&data, &v(&[0.3, 0.0]), &opts).unwrap();
        let b = solve(&data.translate(&c).unwrap(), &v(&[0.3, 0.0]), &opts).unwrap();
        assert!(b.q.sub(&a.q.add(&c)).norm() <= 2.0 * opts.tol);
    }

    #[test]
    fn symmetric_direction_law() {
        let sol = solve(&cross(), &v(&[0.6, 0.0]), &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        let angle = sol.q.coords()[1].atan2(sol.q.coords()[0]).abs();
        assert!(angle < 1e-6, "angle {angle}");
    }

    #[test]
    fn monotone_descent() {
        let data = sample(&DistributionSpec::gaussian(&[1.0, 4.0]), 500, RngSpec::new(3, 3)).unwrap();
        for alpha in [0.0, 0.5, 0.95, 0.999] {
            let u = v(&[alpha * 0.6, alpha * 0.8]);
            let (sol, trace) = solve_traced(&data, &u, &SolverOptions::default()).unwrap();
            assert!(sol.converged);
            for w in trace.windows(2) {
                assert!(w[1].0 <= w[0].0 + w[0].1, "{:?}", w);
            }
        }
    }

    #[test]
    fn atom_solution() {
        // heavy atom at the origin holds the spatial median there
        let data = Dataset::from_rows(&[
            [0.0, 0.0],
            [0.0, 0.0],
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [-1.0, -1.0],
        ])
        .unwrap();
        let sol = solve(&data, &v(&[0.1, 0.0]), &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.atom_hits, 3);
        assert!(sol.q.norm() < 1e-9);
        assert!(sol.satisfies_characterization(1e-8));
    }

    #[test]
    fn collinear_flagged() {
        let data = Dataset::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [5.0, 5.0]]).unwrap();
        let sol = solve(&data, &v(&[0.2, 0.1]), &SolverOptions::default()).unwrap();
        assert!(sol.non_unique);
        assert!(!solve(&triangle(), &v(&[0.2, 0.1]), &SolverOptions::default())
            .unwrap()
            .non_unique);
    }

    #[test]
    fn solve_preconditions() {
        let same = Dataset::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(solve(&same, &v(&[0.0, 0.0]), &SolverOptions::default()).is_err());
        assert!(solve(&triangle(), &v(&[0.8, 0.6]), &SolverOptions::default()).is_err());
        let bad = SolverOptions {
            tol: 0.0,
            ..SolverOptions::default()
        };
        assert!(solve(&triangle(), &v(&[0.0, 0.0]), &bad).is_err());
    }

    #[test]
    fn non_convergence_is_flagged() {
        let data = sample(&DistributionSpec::gaussian(&[1.0, 1.0]), 200, RngSpec::new(1, 0)).unwrap();
        let opts = SolverOptions {
            tol: 1e-14,
            max_iter: 1,
            exec: Exec::Sequential,
        };
        let sol = solve(&data, &v(&[0.9, 0.0]), &opts).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 1);
    }

    #[test]
    fn one_dimensional_quantile() {
        // u = 0.5 in d = 1: F(q) = (1 + u)/2 = 0.75
        let data = Dataset::from_flat(1, (1..=400).map(|i| i as f64).collect()).unwrap();
        let sol = solve(&data, &v(&[0.5]), &SolverOptions::default()).unwrap();
        assert!(sol.satisfies_characterization(1e-8));
        assert!((sol.q.coords()[0] - 300.0).abs() <= 1.0, "{:?}", sol.q);
    }

    #[test]
    fn first_order_cross() {
        let u = UnitDirection::basis(2, 0);
        let r = first_order_residual(&cross(), &u, 0.5, &SolverOptions::default()).unwrap();
        assert!(r.coords()[1].abs() < 1e-8);
    }

    #[test]
    fn first_order_cauchy_schwarz() {
        let data = sample(&DistributionSpec::pareto(2, 2.5), 300, RngSpec::new(8, 1)).unwrap();
        let u = UnitDirection::from_coords(&[1.0, 1.0]).unwrap();
        let sol = solve(&data, &u.vector().scale(0.7), &SolverOptions::default()).unwrap();
        let r = first_order_residual_of(&data, &u, &sol.q).unwrap();
        // the mean term is orthogonal to u, so ⟨r, u⟩ = ⟨q,u⟩ − ‖q‖
        let lhs = r.dot(u.vector());
        let rhs = sol.q.dot(u.vector()) - sol.q.norm();
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + sol.q.norm()));
        assert!(rhs <= 0.0);
    }

    #[test]
    fn completion_is_orthonormal() {
        let u = UnitDirection::from_coords(&[0.3, -0.9, 0.2, 0.1]).unwrap();
        let ws = orthonormal_completion(&u);
        assert_eq!(ws.len(), 3);
        let mut all = vec![u.vector().clone()];
        all.extend(ws);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((all[i].dot(&all[j]) - want).abs() < 1e-14);
            }
        }
        // skips e₂ (most parallel), starts from e₁
        let ws = orthonormal_completion(&UnitDirection::basis(3, 1));
        assert_eq!(ws[0].coords(), &[1.0, 0.0, 0.0]);
        assert_eq!(ws[1].coords(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn expansion_examples() {
        let g = DistributionSpec::gaussian(&[1.0, 1.0]);
        let u = UnitDirection::from_coords(&[1.0, 2.0]).unwrap();
        let e = expansion_limits(MomentSource::Spec(&g), &u).unwrap();
        assert!(e.first_order_shift.norm() == 0.0);
        assert!(e.second_order_vector.norm() < 1e-15);
        assert!((e.magnitude_limit - 0.5).abs() < 1e-15);
        assert_eq!(e.third_order_limit, Some(0.0));

        let e = expansion_limits(MomentSource::Data(&triangle()), &UnitDirection::basis(2, 0)).unwrap();
        assert!(e.first_order_shift.coords()[0].abs() < 1e-15);
        assert!((e.first_order_shift.coords()[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((e.magnitude_limit - 4.0 / 9.0).abs() < 1e-15);

        let p22 = DistributionSpec::pareto(2, 2.2);
        let e = expansion_limits(MomentSource::Spec(&p22), &u).unwrap();
        assert!(e.third_order_limit.is_none());
        let p19 = DistributionSpec::pareto(2, 1.9);
        assert!(expansion_limits(MomentSource::Spec(&p19), &u).is_err());
    }

    #[test]
    fn analytic_third_order_matches_sample_version() {
        let spec = DistributionSpec::pareto(2, 4.5);
        let u = UnitDirection::from_coords(&[1.0, 0.5]).unwrap();
        let pop = expansion_limits(MomentSource::Spec(&spec), &u).unwrap();
        let data = sample(&spec, 2_000_000, RngSpec::new(77, 0)).unwrap();
        let emp = expansion_limits(MomentSource::Data(&data), &u).unwrap();
        let (a, b) = (pop.third_order_limit.unwrap(), emp.third_order_limit.unwrap());
        assert!((a - b).abs() < 0.05 * a.abs().max(1.0), "{a} vs {b}");
        assert!((pop.magnitude_limit - emp.magnitude_limit).abs() < 0.02);
        for k in 0..2 {
            assert!(
                (pop.second_order_vector.coords()[k] - emp.second_order_vector.coords()[k]).abs()
                    < 0.02
            );
        }
    }

    #[test]
    fn growth_bound_construction() {
        let data = Dataset::from_flat(1, (1..=100).map(|i| i as f64).collect()).unwrap();
        let g = growth_bound(&data, 0.9).unwrap();
        assert!((g.delta_n - 0.02).abs() < 1e-15);
        // two of 100 norms may exceed k_n
        assert_eq!(g.k_n, 98.0);
        let m = (0.9 + 0.04) / (1.0 - 0.08 - 0.9) + 1.0;
        assert!((g.m_n - m).abs() < 1e-9);
        assert!((g.bound - (m + 2.0) * 98.0).abs() < 1e-6);
        assert!(growth_bound(&data, 1.0).is_err());
    }
}
