//! Halfspace (Tukey) depth.
//!
//! All halfspaces are closed: points on the boundary count. Empirical depths
//! are carried as exact counts `k/n`.

use std::cmp::Ordering;

use robust::{orient2d, Coord};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geom::{check_dim, dot, Dataset, UnitDirection, Vector};
use crate::rng::RngSpec;
use crate::samplers::{normal_survival, Marginal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DepthKind {
    Empirical { k: usize, n: usize },
    Population,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthValue {
    pub value: f64,
    pub kind: DepthKind,
    /// Number of directions searched, for the approximate algorithm.
    pub directions_used: Option<usize>,
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl DepthValue {
    pub fn empirical(k: usize, n: usize) -> Self {
        Self {
            value: if n == 0 { 0.0 } else { k as f64 / n as f64 },
            kind: DepthKind::Empirical { k, n },
            directions_used: None,
        }
    }

    pub fn population(value: f64) -> Self {
        Self {
            value,
            kind: DepthKind::Population,
            directions_used: None,
        }
    }

    /// `(k, n)` for empirical depths.
    pub fn count(&self) -> Option<(usize, usize)> {
        match self.kind {
            DepthKind::Empirical { k, n } => Some((k, n)),
            DepthKind::Population => None,
        }
    }

    /// `k/n` in lowest terms (`0/n` is kept as is).
    pub fn reduced(&self) -> Option<(usize, usize)> {
        let (k, n) = self.count()?;
        if k == 0 {
            return Some((0, n));
        }
        let g = gcd(k, n);
        Some((k / g, n / g))
    }
}

/// Default direction budget for [`depth_approx`].
pub fn default_directions(d: usize, n: usize) -> usize {
    if d == 2 {
        5000
    } else {
        ((10 * d) as f64 * (n as f64).sqrt()).ceil().max(1.0) as usize
    }
}

fn half(p: [f64; 2], x: [f64; 2]) -> u8 {
    // angles in [0, π) → 0, [π, 2π) → 1, computed from exact comparisons
    if p[1] > x[1] || (p[1] == x[1] && p[0] > x[0]) {
        0
    } else {
        1
    }
}

fn orient(x: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    orient2d(
        Coord { x: x[0], y: x[1] },
        Coord { x: a[0], y: a[1] },
        Coord { x: b[0], y: b[1] },
    )
}

/// Exact bivariate depth by an angular sweep around `x`.
///
/// Directions are ordered with exact orientation predicates, so the result
/// is the exact depth of the floating-point input.
pub fn depth_exact_2d(data: &Dataset, x: &Vector) -> Result<DepthValue> {
    if data.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "exact depth needs d = 2 (got d = {})",
            data.dim()
        )));
    }
    check_dim(2, x.dim())?;
    let n = data.len();
    let xc = [x.coords()[0], x.coords()[1]];
    let ctol = data.coincidence_tol();

    let mut coincident = 0;
    let mut pts: Vec<([f64; 2], u8)> = Vec::with_capacity(n);
    for p in data.points() {
        let p = [p[0], p[1]];
        if crate::geom::dist(&p, &xc) <= ctol {
            coincident += 1;
        } else {
            pts.push((p, half(p, xc)));
        }
    }
    let by_angle = |a: &([f64; 2], u8), b: &([f64; 2], u8)| -> Ordering {
        a.1.cmp(&b.1).then_with(|| {
            let o = orient(xc, a.0, b.0);
            if o > 0.0 {
                Ordering::Less
            } else if o < 0.0 {
                Ordering::Greater
            } else {
                Ordering::Equal
            }
        })
    };
    pts.sort_unstable_by(by_angle);

    // group identical directions
    let mut groups: Vec<([f64; 2], u8, usize)> = Vec::new();
    for (p, h) in pts {
        match groups.last_mut() {
            Some(g) if g.1 == h && orient(xc, g.0, p) == 0.0 => g.2 += 1,
            _ => groups.push((p, h, 1)),
        }
    }
    let m = groups.len();
    // points in the half-open arc (a_k, a_k + π]
    let in_arc = |k: usize, j: usize| {
        let (a, b) = (&groups[k], &groups[j]);
        let o = orient(xc, a.0, b.0);
        o > 0.0 || (o == 0.0 && a.1 != b.1)
    };
    let mut best = m.min(1) * usize::MAX;
    let mut j = 0;
    let mut sum = 0;
    for k in 0..m {
        if j < k + 1 {
            j = k + 1;
            sum = 0;
        }
        while j < k + m && in_arc(k, j % m) {
            sum += groups[j % m].2;
            j += 1;
        }
        best = best.min(sum);
        if j > k + 1 {
            sum -= groups[(k + 1) % m].2;
        }
    }
    Ok(DepthValue::empirical(coincident + best, n))
}

/// `k` random unit directions from `rng`; in d = 1 these alternate `+1, −1`.
pub fn random_directions(d: usize, k: usize, rng: RngSpec) -> Vec<UnitDirection> {
    if d == 1 {
        return (0..k)
            .map(|i| {
                let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                UnitDirection::new(Vector::new(vec![s]).unwrap()).unwrap()
            })
            .collect();
    }
    let mut stream = rng.stream();
    let mut buf = vec![0.0; d];
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        stream.fill_normals(&mut buf);
        if let Ok(u) = UnitDirection::from_coords(&buf) {
            out.push(u);
        }
    }
    out
}

/// Minimum closed-halfspace count over `directions` random directions.
/// Never below the exact depth.
pub fn depth_approx(
    data: &Dataset,
    x: &Vector,
    directions: usize,
    rng: RngSpec,
    exec: Exec,
) -> Result<DepthValue> {
    check_dim(data.dim(), x.dim())?;
    if directions == 0 {
        return Err(Error::InvalidParameter(
            "at least one direction is required".into(),
        ));
    }
    let d = data.dim();
    let n = data.len();
    let dirs = random_directions(d, directions, rng);
    let ctol = data.coincidence_tol();
    let diffs: Vec<f64> = data
        .points()
        .flat_map(|p| p.iter().zip(x.coords()).map(|(a, b)| a - b))
        .collect();
    let coincident: Vec<bool> = diffs
        .chunks_exact(d)
        .map(|v| crate::geom::norm(v) <= ctol)
        .collect();
    let counts = exec.map(&dirs, |h| {
        diffs
            .chunks_exact(d)
            .zip(&coincident)
            .filter(|(v, &c)| c || dot(v, h.coords()) >= 0.0)
            .count()
    });
    let k = counts.into_iter().min().unwrap_or(n);
    let mut dv = DepthValue::empirical(k, n);
    dv.directions_used = Some(directions);
    Ok(dv)
}

/// Closed-form depth of `x` under `N(0, diag(variances))`: `Φ̄(√(xᵀΣ⁻¹x))`.
pub fn population_depth_gaussian(variances: &[f64], x: &Vector) -> Result<DepthValue> {
    check_dim(variances.len(), x.dim())?;
    if variances.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter(
            "gaussian depth needs strictly positive variances".into(),
        ));
    }
    let m: f64 = x
        .coords()
        .iter()
        .zip(variances)
        .map(|(xi, v)| xi * xi / v)
        .sum();
    Ok(DepthValue::population(normal_survival(m.sqrt())))
}

/// How `P(⟨h,X⟩ ≥ ⟨h,x⟩)` is evaluated for a product law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProductMethod {
    /// Midpoint rule in probability space of one coordinate, conditioning on
    /// the other.
    Quadrature { nodes: usize },
    /// Fraction of a fixed sample drawn from `rng`.
    MonteCarlo { draws: usize, rng: RngSpec },
}

impl Default for ProductMethod {
    fn default() -> Self {
        ProductMethod::Quadrature { nodes: 1 << 14 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationEstimate {
    pub depth: DepthValue,
    pub stderr: f64,
    /// Angle of the minimising direction.
    pub angle: f64,
}

fn tail_probability_quadrature(m: &[Marginal], h: [f64; 2], s: f64, nodes: usize) -> f64 {
    // integrate over the coordinate with the smaller |h|, condition on the other
    let (i, o) = if h[0].abs() >= h[1].abs() { (0, 1) } else { (1, 0) };
    let step = 1.0 / nodes as f64;
    let mut acc = 0.0;
    for j in 0..nodes {
        let y = m[o].quantile((j as f64 + 0.5) * step);
        let z = (s - h[o] * y) / h[i];
        acc += if h[i] > 0.0 {
            m[i].survival(z)
        } else {
            m[i].cdf(z)
        };
    }
    acc * step
}

/// Population depth of `x` under a bivariate product law: grid search over
/// `grid` angles, then golden-section refinement around the best one.
pub fn population_depth_product(
    marginals: &[Marginal],
    x: &Vector,
    grid: usize,
    method: ProductMethod,
) -> Result<PopulationEstimate> {
    if marginals.len() != 2 {
        return Err(Error::Unsupported(format!(
            "product-law depth is implemented for d = 2 (got d = {})",
            marginals.len()
        )));
    }
    check_dim(2, x.dim())?;
    if grid < 64 {
        return Err(Error::InvalidParameter(format!(
            "angular grid must have at least 64 points (got {grid})"
        )));
    }
    if marginals
        .iter()
        .any(|m| matches!(m, Marginal::Normal { sd, .. } if !(*sd > 0.0)))
    {
        return Err(Error::InvalidParameter(
            "product-law depth needs continuous marginals".into(),
        ));
    }
    let xc = [x.coords()[0], x.coords()[1]];

    let mc_sample: Option<Vec<[f64; 2]>> = match method {
        ProductMethod::MonteCarlo { draws, rng } => {
            let mut st = rng.stream();
            Some(
                (0..draws)
                    .map(|_| {
                        let a = marginals[0].quantile(st.open01());
                        let b = marginals[1].quantile(st.open01());
                        [a, b]
                    })
                    .collect(),
            )
        }
        ProductMethod::Quadrature { .. } => None,
    };
    let eval = |theta: f64, nodes_override: Option<usize>| -> f64 {
        let h = [theta.cos(), theta.sin()];
        let s = h[0] * xc[0] + h[1] * xc[1];
        match (method, &mc_sample) {
            (ProductMethod::Quadrature { nodes }, _) => {
                tail_probability_quadrature(marginals, h, s, nodes_override.unwrap_or(nodes))
            }
            (ProductMethod::MonteCarlo { .. }, Some(pts)) => {
                let c = pts.iter().filter(|p| h[0] * p[0] + h[1] * p[1] >= s).count();
                c as f64 / pts.len() as f64
            }
            _ => unreachable!(),
        }
    };

    let tau = std::f64::consts::TAU;
    let step = tau / grid as f64;
    let (best_j, _) = (0..grid)
        .map(|j| (j, eval(j as f64 * step, None)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("grid is nonempty");
    // golden section on [θ* − step, θ* + step]
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ((best_j as f64 - 1.0) * step, (best_j as f64 + 1.0) * step);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (eval(c, None), eval(d, None));
    while b - a > 1e-10 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c, None);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d, None);
        }
    }
    let angle = 0.5 * (a + b);
    let value = eval(angle, None).min(eval(best_j as f64 * step, None));
    let stderr = match method {
        ProductMethod::Quadrature { nodes } => {
            let coarse = eval(angle, Some((nodes / 2).max(1)));
            (eval(angle, None) - coarse).abs().max(f64::EPSILON)
        }
        ProductMethod::MonteCarlo { draws, .. } => {
            (value * (1.0 - value) / draws as f64).sqrt().max(f64::EPSILON)
        }
    };
    Ok(PopulationEstimate {
        depth: DepthValue::population(value),
        stderr,
        angle: angle.rem_euclid(tau),
    })
}

/// `min_i P(X_i > t·x_i)`, an upper bound for the depth of `t·x`.
pub fn marginal_survival_bound(marginals: &[Marginal], x: &Vector, t: f64) -> Result<f64> {
    check_dim(marginals.len(), x.dim())?;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "t must be positive (got {t})"
        )));
    }
    Ok(marginals
        .iter()
        .zip(x.coords())
        .map(|(m, xi)| m.survival(t * xi))
        .fold(f64::INFINITY, f64::min))
}

/// `min_i #{j : X_{j,i} ≥ p_i}`: the smallest axis-aligned closed halfspace
/// count at `p`, an exact upper bound on the empirical depth count.
pub fn empirical_marginal_count(data: &Dataset, p: &Vector) -> Result<usize> {
    check_dim(data.dim(), p.dim())?;
    Ok((0..data.dim())
        .map(|i| data.points().filter(|x| x[i] >= p.coords()[i]).count())
        .min()
        .unwrap_or(0))
}
