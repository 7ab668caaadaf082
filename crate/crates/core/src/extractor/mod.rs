//! Certified subsequence extraction.
//!
//! Three greedy procedures look for the three kinds of structure an infinite
//! sequence of points must contain: a basepoint chain whose distances grow
//! geometrically, a near-equilateral set found by iterated pigeonholing of
//! distances, and a chain converging geometrically to a limit point. On a finite
//! prefix none of them can be proved to be "the" case, so each one is a
//! best-effort search and [`extract`] keeps the largest certified result.

mod blocks;
mod cauchy;
mod equilateral;
pub mod generators;
mod unbounded;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use blocks::{block_partition, cluster_blocks, BlockFamily};
pub use cauchy::{extract_cauchy, limit_proxy};
pub use equilateral::extract_equilateral;
pub use unbounded::extract_unbounded;

use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, Metric};

/// The subsequence structure found in a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    Unbounded,
    Equilateral,
    Cauchy,
    Undecided,
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Case::Unbounded => "unbounded",
            Case::Equilateral => "equilateral",
            Case::Cauchy => "cauchy",
            Case::Undecided => "undecided",
        })
    }
}

type DistanceFn = dyn Fn(usize, usize) -> f64 + Send + Sync;

#[derive(Clone)]
enum Source {
    Matrix(Arc<FiniteMetricSpace>),
    Line(Arc<Vec<f64>>),
    Vectors(Arc<Vec<Vec<f64>>>),
    Oracle(Arc<DistanceFn>),
}

/// A sequence `x_0, x_1, …` exposed through a distance oracle up to a horizon.
///
/// Only pairwise distances are ever queried; the prefix is assumed to be a
/// metric space (restrictions are validated when they are materialized).
#[derive(Clone)]
pub struct PointStream {
    source: Source,
    horizon: usize,
    limit: Option<usize>,
    labels: Option<Arc<Vec<String>>>,
}

impl std::fmt::Debug for PointStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PointStream")
            .field("horizon", &self.horizon)
            .field("limit", &self.limit)
            .finish_non_exhaustive()
    }
}

impl Metric for PointStream {
    fn len(&self) -> usize {
        self.horizon
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        match &self.source {
            Source::Matrix(m) => m.dist(i, j),
            Source::Line(x) => (x[i] - x[j]).abs(),
            Source::Vectors(v) => euclidean(&v[i], &v[j]),
            Source::Oracle(f) => f(i, j),
        }
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl PointStream {
    pub fn from_matrix(m: FiniteMetricSpace) -> Self {
        let horizon = m.len();
        let labels = m.labels().map(|l| Arc::new(l.to_vec()));
        PointStream { source: Source::Matrix(Arc::new(m)), horizon, limit: None, labels }
    }

    /// Points on the real line.
    pub fn from_line(xs: Vec<f64>) -> Self {
        let horizon = xs.len();
        PointStream { source: Source::Line(Arc::new(xs)), horizon, limit: None, labels: None }
    }

    /// Points in Euclidean space.
    pub fn from_vectors(vs: Vec<Vec<f64>>) -> Self {
        let horizon = vs.len();
        PointStream { source: Source::Vectors(Arc::new(vs)), horizon, limit: None, labels: None }
    }

    /// An arbitrary distance oracle over `0..horizon`.
    pub fn from_fn(horizon: usize, f: impl Fn(usize, usize) -> f64 + Send + Sync + 'static) -> Self {
        PointStream { source: Source::Oracle(Arc::new(f)), horizon, limit: None, labels: None }
    }

    /// Truncates the stream to its first `horizon` points.
    pub fn with_horizon(mut self, horizon: usize) -> Result<Self> {
        if horizon > self.horizon {
            return Err(Error::InvalidParameter(format!(
                "horizon {horizon} exceeds the {} available points",
                self.horizon
            )));
        }
        self.horizon = horizon;
        if self.limit.is_some_and(|l| l >= horizon) {
            self.limit = None;
        }
        Ok(self)
    }

    /// Designates the point playing the role of the limit `x_∞`.
    pub fn with_limit(mut self, limit: usize) -> Result<Self> {
        if limit >= self.horizon {
            return Err(Error::IndexOutOfRange { index: limit, len: self.horizon });
        }
        self.limit = Some(limit);
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() < self.horizon {
            return Err(Error::InvalidParameter(format!(
                "{} labels for {} points",
                labels.len(),
                self.horizon
            )));
        }
        self.labels = Some(Arc::new(labels));
        Ok(self)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn limit(&self) -> Option<usize> {
        self.limit
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn labels(&self) -> Option<Vec<String>> {
        self.labels.as_ref().map(|l| l[..self.horizon].to_vec())
    }

    /// The validated prefix as a dense metric space.
    pub fn prefix_space(&self) -> Result<FiniteMetricSpace> {
        let all: Vec<usize> = (0..self.horizon).collect();
        let mut m = crate::metric::restrict(self, &all)?;
        if let Some(l) = self.labels() {
            m = m.with_labels(l)?;
        }
        Ok(m)
    }

    /// Pairwise distances among `indices`, cached densely, without validation.
    pub(crate) fn dense(&self, indices: &[usize]) -> Dense {
        let k = indices.len();
        let mut d = vec![0.0; k * k];
        for a in 0..k {
            for b in a + 1..k {
                let v = self.dist(indices[a], indices[b]);
                d[a * k + b] = v;
                d[b * k + a] = v;
            }
        }
        Dense { k, d }
    }
}

/// Dense distance cache over a pool, indexed by pool position.
pub(crate) struct Dense {
    k: usize,
    d: Vec<f64>,
}

impl Metric for Dense {
    fn len(&self) -> usize {
        self.k
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.k + j]
    }
}

/// Parameters recorded by the procedure that produced a result.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CaseParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    /// Separation of the candidate pool the pigeonhole ran on (0 = all points).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool_separation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit_designated: Option<bool>,
    /// `R_k` (growth chain) or `s_k` (decay chain), one per selected index.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub radii: Vec<f64>,
    /// Consecutive radius ratios (smaller over larger).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ratios: Vec<f64>,
}

/// Output of an extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    /// Selected indices, strictly increasing.
    pub indices: Vec<usize>,
    /// `Undecided` when fewer than `target` indices were certified.
    pub case: Case,
    /// The procedure that produced the indices.
    pub strategy: Case,
    pub epsilon: f64,
    pub target: usize,
    pub horizon: usize,
    pub params: CaseParams,
    pub certificate: Certificate,
}

impl ExtractionResult {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_decided(&self) -> bool {
        self.case != Case::Undecided
    }

    pub(crate) fn finish(
        strategy: Case,
        indices: Vec<usize>,
        epsilon: f64,
        target: usize,
        horizon: usize,
        params: CaseParams,
        certificate: Certificate,
    ) -> Self {
        let case = if indices.len() >= target { strategy } else { Case::Undecided };
        ExtractionResult { indices, case, strategy, epsilon, target, horizon, params, certificate }
    }
}

pub(crate) fn check_args(epsilon: f64, target: usize) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    if target < 2 {
        return Err(Error::InvalidParameter(format!("target must be at least 2, got {target}")));
    }
    Ok(())
}

/// The three terms whose minimum is the gap threshold.
pub fn gap_terms(epsilon: f64) -> [f64; 3] {
    let a = (1.0 + epsilon).sqrt();
    let b = (1.0 + epsilon / 2.0).sqrt();
    [(a - 1.0) / (a * b), (a - b) / b, (b - 1.0) / 2.0]
}

/// Growth ratio `θ(ε)` required between consecutive basepoint distances:
///
/// `θ(ε) = min{ (√(1+ε)−1)/(√(1+ε)√(1+ε/2)), (√(1+ε)−√(1+ε/2))/√(1+ε/2), (√(1+ε/2)−1)/2 }`.
///
/// A chain `R_{k−1} ≤ θ R_k` keeps every cross distance within a factor
/// `√(1+ε)` of the larger radius in either direction.
pub fn gap_threshold(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let [t1, t2, t3] = gap_terms(epsilon);
    Ok(t1.min(t2).min(t3))
}

/// Runs all three extractors and keeps the one with the most indices; ties go
/// to the earlier case in `Unbounded < Equilateral < Cauchy`.
pub fn extract(stream: &PointStream, epsilon: f64, target: usize) -> Result<ExtractionResult> {
    check_args(epsilon, target)?;
    let candidates = [
        extract_unbounded(stream, epsilon, target)?,
        extract_equilateral(stream, epsilon, target)?,
        extract_cauchy(stream, epsilon, target)?,
    ];
    let mut best: Option<ExtractionResult> = None;
    for r in candidates {
        if best.as_ref().is_none_or(|b| r.len() > b.len()) {
            best = Some(r);
        }
    }
    Ok(best.expect("three candidates"))
}

/// Sizes reached by each extractor, for classification reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub unbounded: usize,
    pub equilateral: usize,
    pub cauchy: usize,
    pub winner: Case,
}

pub fn classify(stream: &PointStream, epsilon: f64, target: usize) -> Result<Classification> {
    check_args(epsilon, target)?;
    let u = extract_unbounded(stream, epsilon, target)?;
    let e = extract_equilateral(stream, epsilon, target)?;
    let c = extract_cauchy(stream, epsilon, target)?;
    let winner = extract(stream, epsilon, target)?.case;
    Ok(Classification { unbounded: u.len(), equilateral: e.len(), cauchy: c.len(), winner })
}
