//! Vectors, directions, datasets and sample moments.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `‖u‖ − 1` for [`UnitDirection`].
pub const UNIT_TOL: f64 = 1e-12;

/// Relative coincidence tolerance: a point is "at" `q` when closer than this
/// times the dataset diameter.
pub const COINCIDENCE_REL: f64 = 1e-9;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A point of ℝ^d with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some(i) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(coords))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d.max(1)])
    }

    pub fn basis(d: usize, k: usize) -> Self {
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|x| x * c).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        check_dim(d, self.dim())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// A vector on the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitDirection(Vector);

impl TryFrom<Vec<f64>> for UnitDirection {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        UnitDirection::new(Vector::new(v)?)
    }
}

impl From<UnitDirection> for Vec<f64> {
    fn from(u: UnitDirection) -> Self {
        u.0 .0
    }
}

impl UnitDirection {
    /// Accepts a vector already of unit norm.
    pub fn new(v: Vector) -> Result<Self> {
        let n = v.norm();
        if (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit(n));
        }
        Ok(Self(v))
    }

    /// Normalizes a nonzero vector.
    pub fn normalize(v: &Vector) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::NotUnit(0.0));
        }
        Ok(Self(v.scale(1.0 / n)))
    }

    pub fn from_coords(coords: &[f64]) -> Result<Self> {
        Self::normalize(&Vector::new(coords.to_vec())?)
    }

    pub fn basis(d: usize, k: usize) -> Self {
        Self(Vector::basis(d, k))
    }

    pub fn vector(&self) -> &Vector {
        &self.0
    }

    pub fn coords(&self) -> &[f64] {
        self.0.coords()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn neg(&self) -> Self {
        Self(self.0.scale(-1.0))
    }
}

/// An immutable sample of `n` points in ℝ^d, stored row-major.
///
/// Cloning and [`Dataset::prefix`] share the underlying buffer.
#[derive(Debug, Clone)]
pub struct Dataset {
    dim: usize,
    len: usize,
    coords: Arc<[f64]>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.flat() == other.flat()
    }
}

impl Dataset {
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyVector);
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        if let Some(i) = coords.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i % dim));
        }
        Ok(Self {
            dim,
            len: coords.len() / dim,
            coords: coords.into(),
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or(Error::TooFewPoints { needed: 1, found: 0 })?;
        let mut flat = Vec::with_capacity(dim * rows.len());
        for r in rows {
            check_dim(dim, r.as_ref().len())?;
            flat.extend_from_slice(r.as_ref());
        }
        Self::from_flat(dim, flat)
    }

    /// An empty dataset of the given dimension.
    pub fn empty(dim: usize) -> Self {
        Self {
            dim: dim.max(1),
            len: 0,
            coords: Arc::from(Vec::new()),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.flat().chunks_exact(self.dim)
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords[..self.len * self.dim]
    }

    /// The first `n` points (shares storage).
    pub fn prefix(&self, n: usize) -> Dataset {
        Dataset {
            dim: self.dim,
            len: n.min(self.len),
            coords: Arc::clone(&self.coords),
        }
    }

    /// Applies `f` to every point.
    pub fn map_points<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F) -> Result<Dataset> {
        let mut flat = Vec::with_capacity(self.len * self.dim);
        for p in self.points() {
            let q = f(p);
            check_dim(self.dim, q.len())?;
            flat.extend(q);
        }
        Dataset::from_flat(self.dim, flat)
    }

    pub fn translate(&self, c: &Vector) -> Result<Dataset> {
        c.check_dim(self.dim)?;
        self.map_points(|p| p.iter().zip(c.coords()).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, c: f64) -> Result<Dataset> {
        self.map_points(|p| p.iter().map(|a| a * c).collect())
    }

    /// Applies a d×d row-major matrix to every point.
    pub fn linear_map(&self, a: &[f64]) -> Result<Dataset> {
        check_dim(self.dim * self.dim, a.len())?;
        let d = self.dim;
        self.map_points(|p| (0..d).map(|r| dot(&a[r * d..(r + 1) * d], p)).collect())
    }

    /// Diagonal of the axis-aligned bounding box; within a factor √d of the
    /// true diameter.
    pub fn bbox_diameter(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let mut lo = self.point(0).to_vec();
        let mut hi = lo.clone();
        for p in self.points() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        dist(&lo, &hi)
    }

    /// Absolute coincidence tolerance for this sample.
    pub fn coincidence_tol(&self) -> f64 {
        COINCIDENCE_REL * self.bbox_diameter()
    }

    /// Coordinate-wise median (lower median for even n).
    pub fn coordinate_median(&self) -> Vector {
        let mut out = Vec::with_capacity(self.dim);
        let mut col = Vec::with_capacity(self.len);
        for k in 0..self.dim {
            col.clear();
            col.extend(self.points().map(|p| p[k]));
            let mid = (col.len().max(1) - 1) / 2;
            col.select_nth_unstable_by(mid, f64::total_cmp);
            out.push(col[mid]);
        }
        Vector(out)
    }
}

/// First and second moments, with optional third-order availability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: Vector,
    /// d×d row-major, symmetric.
    pub covariance: Vec<f64>,
    pub trace: f64,
    pub third_moment_available: bool,
}

impl Moments {
    pub fn new(mean: Vector, covariance: Vec<f64>, third_moment_available: bool) -> Result<Self> {
        let d = mean.dim();
        check_dim(d * d, covariance.len())?;
        if let Some(i) = covariance.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        for i in 0..d {
            if covariance[i * d + i] < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "negative variance on diagonal entry {i}"
                )));
            }
        }
        let trace = (0..d).map(|i| covariance[i * d + i]).sum();
        Ok(Self {
            mean,
            covariance,
            trace,
            third_moment_available,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.dim()
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.dim() + j]
    }

    /// `aᵀ Σ b`.
    pub fn bilinear(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = self.dim();
        (0..d)
            .map(|i| a[i] * dot(&self.covariance[i * d..(i + 1) * d], b))
            .sum()
    }

    /// `½(tr Σ − uᵀΣu)`, the second-order magnitude limit.
    pub fn magnitude_limit(&self, u: &UnitDirection) -> f64 {
        0.5 * (self.trace - self.bilinear(u.coords(), u.coords()))
    }
}

/// Mean and covariance with divisor `n`.
pub fn sample_moments(data: &Dataset) -> Result<Moments> {
    if data.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            found: data.len(),
        });
    }
    let d = data.dim();
    let n = data.len() as f64;
    let mut mean = vec![0.0; d];
    for p in data.points() {
        for k in 0..d {
            mean[k] += p[k];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = vec![0.0; d * d];
    for p in data.points() {
        for i in 0..d {
            let di = p[i] - mean[i];
            for j in i..d {
                cov[i * d + j] += di * (p[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / n;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    Moments::new(Vector(mean), cov, true)
}

/// `⟨h, X_i⟩` for each point, in order.
pub fn project(data: &Dataset, h: &UnitDirection) -> Result<Vec<f64>> {
    check_dim(data.dim(), h.dim())?;
    Ok(data.points().map(|p| dot(p, h.coords())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cross() -> Dataset {
        Dataset::from_rows(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]).unwrap()
    }

    #[test]
    fn moments_of_cross() {
        let m = sample_moments(&cross()).unwrap();
        assert_eq!(m.mean.coords(), &[0.0, 0.0]);
        assert_eq!(m.covariance, vec![0.5, 0.0, 0.0, 0.5]);
        assert_eq!(m.trace, 1.0);
    }

    #[test]
    fn moments_degenerate() {
        let data = Dataset::from_rows(&vec![[3.5, 3.5]; 6]).unwrap();
        let m = sample_moments(&data).unwrap();
        assert!(m.covariance.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn moments_triangle() {
        let data = Dataset::from_rows(&[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]).unwrap();
        let m = sample_moments(&data).unwrap();
        let tol = 1e-15;
        assert!((m.mean.coords()[0] - 2.0 / 3.0).abs() < tol);
        assert!((m.mean.coords()[1] - 2.0 / 3.0).abs() < tol);
        assert!((m.cov(0, 0) - 8.0 / 9.0).abs() < tol);
        assert!((m.cov(1, 1) - 8.0 / 9.0).abs() < tol);
        assert!((m.cov(0, 1) + 4.0 / 9.0).abs() < tol);
        assert!((m.cov(1, 0) + 4.0 / 9.0).abs() < tol);
    }

    #[test]
    fn moments_errors() {
        let one = Dataset::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(
            sample_moments(&one),
            Err(Error::TooFewPoints { needed: 2, found: 1 })
        ));
        assert!(Dataset::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn projections() {
        let data = Dataset::from_rows(&[[3.0, 7.0], [-1.0, 2.0]]).unwrap();
        assert_eq!(
            project(&data, &UnitDirection::basis(2, 0)).unwrap(),
            vec![3.0, -1.0]
        );
        let diag = UnitDirection::from_coords(&[1.0, 1.0]).unwrap();
        let one = Dataset::from_rows(&[[1.0, 1.0]]).unwrap();
        assert!((project(&one, &diag).unwrap()[0] - 2f64.sqrt()).abs() < 1e-15);
        let h = UnitDirection::from_coords(&[0.6, 0.8]).unwrap();
        let p = Dataset::from_rows(&[[5.0, -5.0]]).unwrap();
        assert!((project(&p, &h).unwrap()[0] + 1.0).abs() < 1e-14);
        assert!(project(&p, &UnitDirection::basis(3, 0)).is_err());
    }

    #[test]
    fn vector_invariants() {
        assert!(Vector::new(vec![]).is_err());
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(UnitDirection::new(Vector::new(vec![1.0, 1.0]).unwrap()).is_err());
        assert!(UnitDirection::from_coords(&[0.0, 0.0]).is_err());
        let u = UnitDirection::try_from(vec![0.6, 0.8]).unwrap();
        assert!((u.vector().norm() - 1.0).abs() <= UNIT_TOL);
    }

    #[test]
    fn prefix_shares_and_truncates() {
        let data = cross();
        let p = data.prefix(2);
        assert_eq!(p.len(), 2);
        assert_eq!(p.point(1), &[-1.0, 0.0]);
        assert_eq!(p.flat().len(), 4);
    }

    fn rows(max_n: usize) -> impl Strategy<Value = Vec<[f64; 3]>> {
        prop::collection::vec(prop::array::uniform3(-100.0f64..100.0), 2..max_n)
    }

    proptest! {
        #[test]
        fn negating_direction_negates_projection(pts in rows(30), a in -1.0f64..1.0, b in -1.0f64..1.0, c in 0.1f64..1.0) {
            let data = Dataset::from_rows(&pts).unwrap();
            let h = UnitDirection::from_coords(&[a, b, c]).unwrap();
            let p = project(&data, &h).unwrap();
            let q = project(&data, &h.neg()).unwrap();
            for (x, y) in p.iter().zip(&q) {
                prop_assert_eq!(*x, -*y);
            }
        }

        #[test]
        fn moments_permutation_invariant(pts in rows(30), rot in 0usize..29) {
            let data = Dataset::from_rows(&pts).unwrap();
            let mut perm = pts.clone();
            perm.reverse();
            let r = rot % perm.len();
            perm.rotate_left(r);
            let a = sample_moments(&data).unwrap();
            let b = sample_moments(&Dataset::from_rows(&perm).unwrap()).unwrap();
            let scale = a.trace.abs().max(1.0);
            for (x, y) in a.covariance.iter().zip(&b.covariance) {
                prop_assert!((x - y).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn trace_invariant_under_rotation(pts in rows(30), theta in 0.0f64..6.3, phi in 0.0f64..6.3) {
            let data = Dataset::from_rows(&pts).unwrap();
            // rotation about z then about x
            let (s, c) = theta.sin_cos();
            let (s2, c2) = phi.sin_cos();
            let rz = [c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0];
            let rx = [1.0, 0.0, 0.0, 0.0, c2, -s2, 0.0, s2, c2];
            let rotated = data.linear_map(&rz).unwrap().linear_map(&rx).unwrap();
            let a = sample_moments(&data).unwrap().trace;
            let b = sample_moments(&rotated).unwrap().trace;
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-300));
        }
    }
}
