//! Brute-force references for bivariate data.
//!
//! Nothing here calls into [`crate::quantile`] or [`crate::depth`]: distances,
//! objective and angle handling are recomputed from scratch.

use serde::{Deserialize, Serialize};

use crate::depth::DepthValue;
use crate::error::{Error, Result};
use crate::geom::{Dataset, Vector};

/// Lattice nodes per axis for [`brute_quantile`].
pub const LATTICE: usize = 101;
/// Default refinement levels for [`brute_quantile`].
pub const DEFAULT_LEVELS: usize = 6;
/// Expansions allowed before [`brute_quantile`] gives up.
pub const MAX_EXPANSIONS: usize = 10;
/// Angular offset used by [`brute_depth_2d`].
pub const ANGLE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport<T> {
    pub value: T,
    pub evaluations: usize,
    pub grid_spec: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileOracleValue {
    pub q: Vector,
    pub objective: f64,
}

fn require_planar(data: &Dataset) -> Result<()> {
    if data.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "oracles are bivariate only (got d = {})",
            data.dim()
        )));
    }
    Ok(())
}

fn planar_objective(pts: &[(f64, f64)], u: (f64, f64), q: (f64, f64)) -> f64 {
    let mut s = 0.0;
    for &(a, b) in pts {
        s += (a - q.0).hypot(b - q.1) - a.hypot(b);
    }
    s / pts.len() as f64 - (u.0 * q.0 + u.1 * q.1)
}

fn pairwise_diameter(pts: &[(f64, f64)]) -> f64 {
    let mut best: f64 = 0.0;
    for (i, p) in pts.iter().enumerate() {
        for r in &pts[i + 1..] {
            best = best.max((p.0 - r.0).hypot(p.1 - r.1));
        }
    }
    best
}

fn lower_median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[(xs.len() - 1) / 2]
}

/// Nested lattice search for the sample geometric quantile.
///
/// Each level evaluates a 101×101 lattice; the box is recentred on the best
/// node and shrunk tenfold. Data points inside the box are evaluated too. A
/// best node on the boundary doubles the box and repeats the level.
pub fn brute_quantile(
    data: &Dataset,
    u_index: &Vector,
    levels: usize,
) -> Result<OracleReport<QuantileOracleValue>> {
    require_planar(data)?;
    if u_index.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: u_index.dim(),
        });
    }
    let u = (u_index.coords()[0], u_index.coords()[1]);
    let un = u.0.hypot(u.1);
    if un >= 1.0 {
        return Err(Error::IndexOutOfBall(un));
    }
    if data.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, found: 0 });
    }
    let pts: Vec<(f64, f64)> = data.points().map(|p| (p[0], p[1])).collect();
    let diam = pairwise_diameter(&pts);
    let mut side = 4.0 * if diam > 0.0 { diam } else { 1.0 };
    let mut centre = (
        lower_median(pts.iter().map(|p| p.0).collect()),
        lower_median(pts.iter().map(|p| p.1).collect()),
    );
    let initial = (side, centre);

    let half = (LATTICE - 1) / 2;
    let mut evaluations = 0;
    let mut expansions = 0;
    let mut best_val = f64::INFINITY;
    let mut level = 0;
    while level < levels.max(1) {
        let step = side / (LATTICE - 1) as f64;
        let mut best = (0, 0);
        best_val = f64::INFINITY;
        for i in 0..LATTICE {
            for j in 0..LATTICE {
                let q = (
                    centre.0 + (i as f64 - half as f64) * step,
                    centre.1 + (j as f64 - half as f64) * step,
                );
                let f = planar_objective(&pts, u, q);
                evaluations += 1;
                if f < best_val {
                    best_val = f;
                    best = (i, j);
                }
            }
        }
        let mut on_boundary =
            best.0 == 0 || best.1 == 0 || best.0 == LATTICE - 1 || best.1 == LATTICE - 1;
        let mut next = (
            centre.0 + (best.0 as f64 - half as f64) * step,
            centre.1 + (best.1 as f64 - half as f64) * step,
        );
        // the objective has kinks at the data points; try them exactly
        for &p in &pts {
            let inside = (p.0 - centre.0).abs() <= side / 2.0 && (p.1 - centre.1).abs() <= side / 2.0;
            if !inside {
                continue;
            }
            let f = planar_objective(&pts, u, p);
            evaluations += 1;
            if f < best_val {
                best_val = f;
                next = p;
                on_boundary = false;
            }
        }
        centre = next;
        if on_boundary {
            expansions += 1;
            if expansions > MAX_EXPANSIONS {
                return Err(Error::OracleEscaped(MAX_EXPANSIONS));
            }
            side *= 2.0;
            continue;
        }
        side /= 10.0;
        level += 1;
    }
    let grid_spec = format!(
        "{LATTICE}x{LATTICE} lattice, {} levels, initial side {:.6e} at ({:.6e}, {:.6e}), {expansions} expansions, final step {:.3e}",
        levels.max(1),
        initial.0,
        initial.1 .0,
        initial.1 .1,
        side * 10.0 / (LATTICE - 1) as f64,
    );
    Ok(OracleReport {
        value: QuantileOracleValue {
            q: Vector::new(vec![centre.0, centre.1])?,
            objective: best_val,
        },
        evaluations,
        grid_spec,
    })
}

/// Halfplane depth by exhaustive evaluation of every boundary-critical
/// direction, each nudged by `±1e-7` rad.
pub fn brute_depth_2d(data: &Dataset, x: &Vector) -> Result<OracleReport<DepthValue>> {
    require_planar(data)?;
    if x.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: x.dim(),
        });
    }
    let (x0, x1) = (x.coords()[0], x.coords()[1]);
    let n = data.len();
    let pts: Vec<(f64, f64)> = data.points().map(|p| (p[0] - x0, p[1] - x1)).collect();
    let (mut lo0, mut hi0, mut lo1, mut hi1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for p in data.points() {
        lo0 = lo0.min(p[0]);
        hi0 = hi0.max(p[0]);
        lo1 = lo1.min(p[1]);
        hi1 = hi1.max(p[1]);
    }
    let tol = if n == 0 {
        0.0
    } else {
        1e-9 * (hi0 - lo0).hypot(hi1 - lo1)
    };
    let at_x: Vec<bool> = pts.iter().map(|p| p.0.hypot(p.1) <= tol).collect();

    let mut angles = Vec::new();
    for (p, &same) in pts.iter().zip(&at_x) {
        if same {
            continue;
        }
        let phi = p.1.atan2(p.0);
        for base in [0.0, std::f64::consts::FRAC_PI_2, std::f64::consts::PI, -std::f64::consts::FRAC_PI_2] {
            for off in [-ANGLE_EPS, 0.0, ANGLE_EPS] {
                angles.push(phi + base + off);
            }
        }
    }
    let mut best = n;
    let mut evaluations = 0;
    for a in &angles {
        let (s, c) = a.sin_cos();
        let count = pts
            .iter()
            .zip(&at_x)
            .filter(|(p, &same)| same || c * p.0 + s * p.1 >= 0.0)
            .count();
        evaluations += 1;
        best = best.min(count);
    }
    if angles.is_empty() {
        evaluations = 1;
    }
    Ok(OracleReport {
        value: DepthValue::empirical(best, n),
        evaluations,
        grid_spec: format!(
            "{} candidate directions (perpendiculars and ±(X_i − x), offsets 0, ±{ANGLE_EPS:e} rad)",
            angles.len()
        ),
    })
}
