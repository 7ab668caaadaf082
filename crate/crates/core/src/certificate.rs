//! Machine-checkable inequality lists.
//!
//! Every claim is of the form `lhs ≤ rhs`. Claims that reference points are
//! recomputed from a distance oracle on re-verification; scalar claims only
//! re-check the stored numbers.

use serde::{Deserialize, Serialize};

use crate::metric::{set_distance, Metric};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Claim {
    /// `dist(anchor, inner) ≤ factor · dist(anchor, outer)` with set distances.
    Growth {
        anchor: Vec<usize>,
        inner: Vec<usize>,
        outer: Vec<usize>,
        factor: f64,
    },
    /// `bound ≤ dist(u, v)`.
    AtLeast { u: usize, v: usize, bound: f64 },
    /// `dist(u, v) ≤ bound`.
    AtMost { u: usize, v: usize, bound: f64 },
    /// A precomputed comparison between two numbers.
    Scalar { lhs: f64, rhs: f64 },
}

impl Claim {
    /// `(lhs, rhs)` of the claim evaluated against `metric`.
    pub fn evaluate(&self, metric: &impl Metric) -> (f64, f64) {
        match self {
            Claim::Growth { anchor, inner, outer, factor } => (
                set_distance(metric, anchor, inner),
                factor * set_distance(metric, anchor, outer),
            ),
            Claim::AtLeast { u, v, bound } => (*bound, metric.dist(*u, *v)),
            Claim::AtMost { u, v, bound } => (metric.dist(*u, *v), *bound),
            Claim::Scalar { lhs, rhs } => (*lhs, *rhs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub label: String,
    pub claim: Claim,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; nonnegative exactly when the claim holds with zero tolerance.
    pub margin: f64,
    pub holds: bool,
}

/// `lhs ≤ rhs` up to a tolerance relative to the larger magnitude.
pub fn holds_within(lhs: f64, rhs: f64, relative_tol: f64) -> bool {
    lhs <= rhs + relative_tol * lhs.abs().max(rhs.abs())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub entries: Vec<Inequality>,
}

/// One entry whose recomputation disagrees with the stored record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub entry: usize,
    pub label: String,
    pub stored: (f64, f64, bool),
    pub recomputed: (f64, f64, bool),
}

impl Certificate {
    pub fn new() -> Self {
        Self::default()
    }

    /// Evaluates `claim` exactly and records it.
    pub fn check(&mut self, label: &str, claim: Claim, metric: &impl Metric) -> bool {
        let (lhs, rhs) = claim.evaluate(metric);
        self.record(label, claim, lhs, rhs)
    }

    pub fn scalar(&mut self, label: &str, lhs: f64, rhs: f64) -> bool {
        self.record(label, Claim::Scalar { lhs, rhs }, lhs, rhs)
    }

    fn record(&mut self, label: &str, claim: Claim, lhs: f64, rhs: f64) -> bool {
        let holds = lhs <= rhs;
        self.entries.push(Inequality {
            label: label.to_string(),
            claim,
            lhs,
            rhs,
            margin: rhs - lhs,
            holds,
        });
        holds
    }

    pub fn extend(&mut self, other: Certificate) {
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn all_hold(&self) -> bool {
        self.entries.iter().all(|e| e.holds)
    }

    /// Failing entries, as `(position, entry)`.
    pub fn failures(&self) -> impl Iterator<Item = (usize, &Inequality)> {
        self.entries.iter().enumerate().filter(|(_, e)| !e.holds)
    }

    /// Entry with the smallest margin.
    pub fn tightest(&self) -> Option<&Inequality> {
        self.entries.iter().min_by(|a, b| a.margin.total_cmp(&b.margin))
    }

    /// Recomputes every entry against `metric`. An entry disagrees when either
    /// side differs from the stored value or its pass/fail flag changes.
    pub fn reverify(&self, metric: &impl Metric) -> Vec<Disagreement> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(k, e)| {
                let (lhs, rhs) = e.claim.evaluate(metric);
                let holds = lhs <= rhs;
                let same = lhs.to_bits() == e.lhs.to_bits() && rhs.to_bits() == e.rhs.to_bits();
                (!same || holds != e.holds).then(|| Disagreement {
                    entry: k,
                    label: e.label.clone(),
                    stored: (e.lhs, e.rhs, e.holds),
                    recomputed: (lhs, rhs, holds),
                })
            })
            .collect()
    }

    /// True when every entry re-verifies and holds within `relative_tol`.
    pub fn holds_against(&self, metric: &impl Metric, relative_tol: f64) -> bool {
        self.entries.iter().all(|e| {
            let (lhs, rhs) = e.claim.evaluate(metric);
            holds_within(lhs, rhs, relative_tol)
        })
    }
}
