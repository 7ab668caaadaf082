//! Finite metric spaces, exact axiom checks and distortion.
//!
//! Distances are plain `f64`. Every check that mirrors an inequality from the
//! theory takes an explicit additive tolerance; pass `0.0` for exact checks.

mod io;
mod ultra;

pub use io::{
    matrix_from_csv, matrix_from_csv_with, matrix_from_json, matrix_to_csv, matrix_to_json, parse_matrix, MatrixJson,
};
pub(crate) use ultra::single_linkage_merges;
pub use ultra::{subdominant_ultrametric, tree_from_matrix, LevelTree, TreeNode, UltraSpace};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative factor used to derive the default additive tolerance from the
/// largest distance in a space.
pub const DEFAULT_RELATIVE_TOLERANCE: f64 = 1e-9;

/// Anything that can answer pairwise distance queries over `0..len()`.
pub trait Metric {
    fn len(&self) -> usize;

    fn dist(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A finite metric space stored as a dense symmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMetricSpace {
    n: usize,
    d: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl Metric for FiniteMetricSpace {
    fn len(&self) -> usize {
        self.n
    }

    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }
}

impl<M: Metric + ?Sized> Metric for &M {
    fn len(&self) -> usize {
        (**self).len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        (**self).dist(i, j)
    }
}

impl FiniteMetricSpace {
    /// Validates `rows` with the default tolerance (`1e-9` times the largest
    /// distance).
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        validate_metric(&rows, None)
    }

    /// Builds a space from a distance function, validating the result.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { f(i, j) }).collect())
            .collect::<Vec<Vec<f64>>>();
        Self::new(rows)
    }

    /// Wraps a matrix that the caller already knows to be a metric.
    pub(crate) fn from_trusted(n: usize, d: Vec<f64>) -> Self {
        debug_assert_eq!(d.len(), n * n);
        FiniteMetricSpace { n, d, labels: None }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::InvalidParameter(format!(
                "{} labels for {} points",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of point `i`, falling back to its index.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.d.chunks(self.n.max(1)).take(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }

    pub fn max_distance(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }

    /// The default additive tolerance for this space.
    pub fn default_tolerance(&self) -> f64 {
        DEFAULT_RELATIVE_TOLERANCE * self.max_distance()
    }

    /// Restriction to `indices` (in the given order). Labels are carried over.
    pub fn subspace(&self, indices: &[usize]) -> Result<Self> {
        for &i in indices {
            if i >= self.n {
                return Err(Error::IndexOutOfRange { index: i, len: self.n });
            }
        }
        check_distinct(indices)?;
        let k = indices.len();
        let mut d = Vec::with_capacity(k * k);
        for &a in indices {
            for &b in indices {
                d.push(self.dist(a, b));
            }
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i].clone()).collect());
        Ok(FiniteMetricSpace { n: k, d, labels })
    }

    /// Multiplies every distance by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        FiniteMetricSpace {
            n: self.n,
            d: self.d.iter().map(|x| x * factor).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Condensed upper triangle, row-major over `i < j`.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            for j in i + 1..self.n {
                out.push(self.dist(i, j));
            }
        }
        out
    }

    pub fn diameter(&self) -> f64 {
        self.max_distance()
    }
}

fn check_distinct(indices: &[usize]) -> Result<()> {
    let mut seen = std::collections::HashSet::with_capacity(indices.len());
    for &i in indices {
        if !seen.insert(i) {
            return Err(Error::InvalidParameter(format!("index {i} repeated")));
        }
    }
    Ok(())
}

/// Copies the pairwise distances of `metric` restricted to `indices` and
/// validates them as a metric space.
pub fn restrict(metric: &impl Metric, indices: &[usize]) -> Result<FiniteMetricSpace> {
    let n = metric.len();
    for &i in indices {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
    }
    check_distinct(indices)?;
    let rows = indices
        .iter()
        .map(|&a| indices.iter().map(|&b| if a == b { 0.0 } else { metric.dist(a, b) }).collect())
        .collect();
    FiniteMetricSpace::new(rows)
}

/// Diameter of `indices` inside `metric`.
pub fn diameter_of(metric: &impl Metric, indices: &[usize]) -> f64 {
    let mut best = 0.0f64;
    for (a, &i) in indices.iter().enumerate() {
        for &j in &indices[a + 1..] {
            best = best.max(metric.dist(i, j));
        }
    }
    best
}

/// Smallest distance between the two index sets.
pub fn set_distance(metric: &impl Metric, a: &[usize], b: &[usize]) -> f64 {
    let mut best = f64::INFINITY;
    for &i in a {
        for &j in b {
            best = best.min(metric.dist(i, j));
        }
    }
    best
}

/// Checks a square matrix for the metric axioms.
///
/// `tolerance` is the additive slack allowed in the triangle inequality;
/// `None` means `1e-9` times the largest entry. On failure the first violating
/// triple `a < b < c` in lexicographic order is reported.
pub fn validate_metric(rows: &[Vec<f64>], tolerance: Option<f64>) -> Result<FiniteMetricSpace> {
    let n = rows.len();
    for (row, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(Error::NotSquare { row, len: r.len(), expected: n });
        }
    }
    let mut max = 0.0f64;
    for i in 0..n {
        let v = rows[i][i];
        if v != 0.0 {
            return Err(Error::NonzeroDiagonal { i, value: v });
        }
        for j in i + 1..n {
            let (a, b) = (rows[i][j], rows[j][i]);
            if !a.is_finite() || a < 0.0 {
                return Err(Error::BadDistance { i, j, value: a });
            }
            if !b.is_finite() || b < 0.0 {
                return Err(Error::BadDistance { i: j, j: i, value: b });
            }
            if a != b {
                return Err(Error::NotSymmetric { i, j, a, b });
            }
            if a == 0.0 {
                return Err(Error::ZeroDistance { i, j });
            }
            max = max.max(a);
        }
    }
    let tol = tolerance.unwrap_or(DEFAULT_RELATIVE_TOLERANCE * max);
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let (ab, ac, bc) = (rows[a][b], rows[a][c], rows[b][c]);
                for (long, short_sum) in [(ac, ab + bc), (ab, ac + bc), (bc, ab + ac)] {
                    if long > short_sum + tol {
                        return Err(Error::TriangleViolation {
                            i: a,
                            j: b,
                            k: c,
                            long,
                            short_sum,
                        });
                    }
                }
            }
        }
    }
    let mut d = Vec::with_capacity(n * n);
    for r in rows {
        d.extend_from_slice(r);
    }
    Ok(FiniteMetricSpace { n, d, labels: None })
}

/// Outcome of a strong-triangle-inequality scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UltrametricCheck {
    pub holds: bool,
    /// Worst triple `(a, b, c)`, `a < b < c`, and its slack: the amount by
    /// which the largest side exceeds the second largest.
    pub worst: Option<((usize, usize, usize), f64)>,
}

/// Checks `ρ(x,y) ≤ max(ρ(x,z), ρ(z,y))` on every triple within additive
/// tolerance `tol`.
///
/// A triple violates the strong inequality exactly when its largest side is
/// attained only once; the slack is the gap to the second largest side. The
/// witness is the worst triple, ties going to the lexicographically smallest.
pub fn is_ultrametric(m: &impl Metric, tol: f64) -> UltrametricCheck {
    let n = m.len();
    let mut worst: Option<((usize, usize, usize), f64)> = None;
    for a in 0..n {
        for b in a + 1..n {
            let ab = m.dist(a, b);
            for c in b + 1..n {
                let mut s = [ab, m.dist(a, c), m.dist(b, c)];
                s.sort_by(|x, y| y.total_cmp(x));
                let slack = s[0] - s[1];
                if slack > 0.0 && worst.is_none_or(|(_, w)| slack > w) {
                    worst = Some(((a, b, c), slack));
                }
            }
        }
    }
    UltrametricCheck {
        holds: worst.is_none_or(|(_, s)| s <= tol),
        worst,
    }
}

/// Result of comparing pairwise distances under an injective map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    /// The smallest ratio `d_target(f i, f j) / d_source(i, j)`.
    pub scale: f64,
    /// Largest ratio divided by smallest ratio.
    pub distortion: f64,
    pub worst_lower: Option<(usize, usize)>,
    pub worst_upper: Option<(usize, usize)>,
    /// The largest ratio (equals `scale * distortion` up to rounding).
    pub max_ratio: f64,
}

/// Distortion of `f: source → target`, where `f[i]` is the image of point `i`.
///
/// `r = min ratio`, `D = max ratio / min ratio`. Spaces with fewer than two
/// points report `r = D = 1` and no witnesses.
pub fn distortion(
    source: &impl Metric,
    target: &impl Metric,
    f: &[usize],
) -> Result<DistortionReport> {
    let n = source.len();
    if f.len() != n {
        return Err(Error::InvalidParameter(format!(
            "map has {} entries for {} source points",
            f.len(),
            n
        )));
    }
    for &t in f {
        if t >= target.len() {
            return Err(Error::IndexOutOfRange { index: t, len: target.len() });
        }
    }
    for a in 0..n {
        for b in a + 1..n {
            if f[a] == f[b] {
                return Err(Error::NonInjective { a, b, target: f[a] });
            }
        }
    }
    let mut lo = (f64::INFINITY, None);
    let mut hi = (f64::NEG_INFINITY, None);
    for i in 0..n {
        for j in i + 1..n {
            let ratio = target.dist(f[i], f[j]) / source.dist(i, j);
            if ratio < lo.0 {
                lo = (ratio, Some((i, j)));
            }
            if ratio > hi.0 {
                hi = (ratio, Some((i, j)));
            }
        }
    }
    if lo.1.is_none() {
        return Ok(DistortionReport {
            scale: 1.0,
            distortion: 1.0,
            worst_lower: None,
            worst_upper: None,
            max_ratio: 1.0,
        });
    }
    Ok(DistortionReport {
        scale: lo.0,
        distortion: hi.0 / lo.0,
        worst_lower: lo.1,
        worst_upper: hi.1,
        max_ratio: hi.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(ab: f64, bc: f64, ac: f64) -> Vec<Vec<f64>> {
        vec![vec![0.0, ab, ac], vec![ab, 0.0, bc], vec![ac, bc, 0.0]]
    }

    #[test]
    fn two_points_are_metric() {
        let m = FiniteMetricSpace::new(vec![vec![0.0, 5.0], vec![5.0, 0.0]]).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.dist(0, 1), 5.0);
    }

    #[test]
    fn triangle_violation_reports_first_triple() {
        let err = FiniteMetricSpace::new(tri(1.0, 1.0, 3.0)).unwrap_err();
        match err {
            Error::TriangleViolation { i, j, k, long, short_sum } => {
                assert_eq!((i, j, k), (0, 1, 2));
                assert_eq!(long, 3.0);
                assert_eq!(short_sum, 2.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lexicographic_first_violation() {
        // (0,1,2) fine, (0,1,3) first bad triple
        let rows = vec![
            vec![0.0, 1.0, 1.0, 5.0],
            vec![1.0, 0.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 5.0],
            vec![5.0, 1.0, 5.0, 0.0],
        ];
        match validate_metric(&rows, Some(0.0)).unwrap_err() {
            Error::TriangleViolation { i, j, k, .. } => assert_eq!((i, j, k), (0, 1, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(matches!(
            FiniteMetricSpace::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]]),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(matches!(
            FiniteMetricSpace::new(vec![vec![0.0, -1.0], vec![-1.0, 0.0]]),
            Err(Error::BadDistance { .. })
        ));
        assert!(matches!(
            FiniteMetricSpace::new(vec![vec![0.0, 0.0], vec![0.0, 0.0]]),
            Err(Error::ZeroDistance { i: 0, j: 1 })
        ));
        assert!(matches!(
            FiniteMetricSpace::new(vec![vec![1.0, 1.0], vec![1.0, 0.0]]),
            Err(Error::NonzeroDiagonal { i: 0, .. })
        ));
        assert!(matches!(
            FiniteMetricSpace::new(vec![vec![0.0, 1.0], vec![1.0]]),
            Err(Error::NotSquare { row: 1, .. })
        ));
        assert!(matches!(
            FiniteMetricSpace::new(vec![vec![0.0, f64::NAN], vec![f64::NAN, 0.0]]),
            Err(Error::BadDistance { .. })
        ));
    }

    #[test]
    fn planar_points_are_metric() {
        let pts: [(f64, f64); 4] = [(0.0, 0.0), (3.0, 4.0), (-1.5, 2.0), (7.0, -2.5)];
        let m = FiniteMetricSpace::from_fn(4, |i, j| {
            let (a, b) = (pts[i], pts[j]);
            ((a.0 - b.0) * (a.0 - b.0) + (a.1 - b.1) * (a.1 - b.1)).sqrt()
        })
        .unwrap();
        assert_eq!(m.dist(0, 1), 5.0);
    }

    #[test]
    fn equilateral_is_ultrametric() {
        let m = FiniteMetricSpace::from_fn(5, |_, _| 1.0).unwrap();
        let c = is_ultrametric(&m, 0.0);
        assert!(c.holds);
        assert!(c.worst.is_none());
    }

    #[test]
    fn collinear_is_not_ultrametric() {
        let m = FiniteMetricSpace::new(tri(1.0, 1.0, 2.0)).unwrap();
        let c = is_ultrametric(&m, 0.0);
        assert!(!c.holds);
        assert_eq!(c.worst, Some(((0, 1, 2), 1.0)));
        // a tolerance at least the slack accepts it
        assert!(is_ultrametric(&m, 1.0).holds);
    }

    #[test]
    fn identity_and_scaling_distortion() {
        let m = FiniteMetricSpace::new(tri(1.0, 1.5, 2.0)).unwrap();
        let id = [0, 1, 2];
        let r = distortion(&m, &m, &id).unwrap();
        assert_eq!((r.scale, r.distortion), (1.0, 1.0));
        let r = distortion(&m, &m.scaled(3.0), &id).unwrap();
        assert_eq!((r.scale, r.distortion), (3.0, 1.0));
    }

    #[test]
    fn collinear_onto_equilateral() {
        let line = FiniteMetricSpace::new(tri(1.0, 1.0, 2.0)).unwrap();
        let eq = FiniteMetricSpace::from_fn(3, |_, _| 1.0).unwrap();
        let r = distortion(&line, &eq, &[0, 1, 2]).unwrap();
        assert_eq!(r.distortion, 2.0);
        assert_eq!(r.scale, 0.5);
        assert_eq!(r.worst_lower, Some((0, 2)));
        assert_eq!(r.worst_upper, Some((0, 1)));
    }

    #[test]
    fn non_injective_map_rejected() {
        let m = FiniteMetricSpace::new(tri(1.0, 1.0, 1.0)).unwrap();
        assert!(matches!(
            distortion(&m, &m, &[0, 2, 2]),
            Err(Error::NonInjective { a: 1, b: 2, target: 2 })
        ));
    }

    #[test]
    fn subspace_keeps_labels() {
        let m = FiniteMetricSpace::new(tri(1.0, 1.0, 1.5))
            .unwrap()
            .with_labels(vec!["a".into(), "b".into(), "c".into()])
            .unwrap();
        let s = m.subspace(&[2, 0]).unwrap();
        assert_eq!(s.labels().unwrap(), &["c".to_string(), "a".to_string()]);
        assert_eq!(s.dist(0, 1), 1.5);
        assert!(m.subspace(&[0, 0]).is_err());
    }
}
