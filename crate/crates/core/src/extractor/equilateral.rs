use std::collections::BTreeMap;

use super::{check_args, Case, CaseParams, Dense, ExtractionResult, PointStream};
use crate::certificate::{Certificate, Claim};
use crate::error::Result;
use crate::metric::Metric;

const MAX_RUNGS: usize = 60;
// beyond this many bins `c1 + j·δ` no longer resolves single bins in f64
const MAX_BIN: f64 = (1u64 << 50) as f64;

struct Bins {
    c1: f64,
    c2: f64,
    delta: f64,
    count: usize,
}

impl Bins {
    fn lo(&self, j: u64) -> f64 {
        self.c1 + j as f64 * self.delta
    }

    /// Bin `j` with `lo(j) ≤ d < lo(j+1)`, the last bin closed on the right.
    fn of(&self, d: f64) -> Option<u64> {
        let raw = ((d - self.c1) / self.delta).floor();
        if !(0.0..MAX_BIN).contains(&raw) {
            return None;
        }
        let mut j = raw as u64;
        while j > 0 && self.lo(j) > d {
            j -= 1;
        }
        while self.lo(j + 1) <= d {
            j += 1;
        }
        let last = self.count as u64 - 1;
        Some(j.min(last))
    }
}

struct Pigeonhole {
    /// Pool positions, increasing.
    members: Vec<usize>,
    bin: u64,
    alpha: f64,
    bins: Bins,
    rounds: usize,
}

fn extreme_distances(dense: &Dense, pool: &[usize]) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (a, &p) in pool.iter().enumerate() {
        for &q in &pool[a + 1..] {
            let d = dense.dist(p, q);
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    (lo, hi)
}

/// Iterated pigeonhole with re-basing on `pool` (positions into `dense`).
///
/// Round `t` takes the first remaining point as basepoint `b_t`, bins the
/// distances from `b_t` to the others and keeps the most populated bin `j_t`.
/// For `s < t`, `d(b_s, b_t)` lies in bin `j_s`, so the basepoints sharing one
/// bin label, together with the last basepoint, are pairwise in that bin.
fn pigeonhole(dense: &Dense, pool: &[usize], epsilon: f64) -> Option<Pigeonhole> {
    if pool.len() < 2 {
        return None;
    }
    let (c1, c2) = extreme_distances(dense, pool);
    let delta = epsilon * c1 / 2.0;
    let count = ((c2 - c1) / delta).ceil().clamp(1.0, usize::MAX as f64) as usize;
    let bins = Bins { c1, c2, delta, count };

    let mut labels: Vec<(usize, u64)> = Vec::new();
    let mut current: Vec<usize> = pool.to_vec();
    let mut last = None;
    while let Some((&base, rest)) = current.split_first() {
        let mut by_bin: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for &p in rest {
            if let Some(j) = bins.of(dense.dist(base, p)) {
                by_bin.entry(j).or_default().push(p);
            }
        }
        let Some((j, next)) = by_bin
            .into_iter()
            .fold(None::<(u64, Vec<usize>)>, |best, (j, v)| match best {
                Some((bj, bv)) if bv.len() >= v.len() => Some((bj, bv)),
                _ => Some((j, v)),
            })
        else {
            last = Some(base);
            break;
        };
        labels.push((base, j));
        current = next;
    }
    let rounds = labels.len() + usize::from(last.is_some());

    let mut tally: BTreeMap<u64, usize> = BTreeMap::new();
    for &(_, j) in &labels {
        *tally.entry(j).or_default() += 1;
    }
    let (bin, _) = tally
        .iter()
        .fold(None::<(u64, usize)>, |best, (&j, &c)| match best {
            Some((bj, bc)) if bc >= c => Some((bj, bc)),
            _ => Some((j, c)),
        })?;
    let mut members: Vec<usize> = labels.iter().filter(|&&(_, j)| j == bin).map(|&(b, _)| b).collect();
    members.extend(last);
    let alpha = bins.lo(bin);
    Some(Pigeonhole { members, bin, alpha, bins, rounds })
}

/// First-fit net: points in order, each kept when it is at least `s` from all
/// points kept so far.
fn separated_net(dense: &Dense, n: usize, s: f64) -> Vec<usize> {
    let mut net: Vec<usize> = Vec::new();
    for p in 0..n {
        if net.iter().all(|&q| dense.dist(p, q) >= s) {
            net.push(p);
        }
    }
    net
}

/// Near-equilateral subset by iterated pigeonholing of distances.
///
/// With `c1`, `c2` the extreme distances of a candidate pool and
/// `δ = ε c1 / 2`, the range `[c1, c2]` is cut into `m = ⌈(c2 − c1)/δ⌉` bins
/// `[c1 + jδ, c1 + (j+1)δ)`. The selected points are pairwise in one bin with
/// left end `α`, hence `α ≤ d(u, v) ≤ (1 + ε/2) α`.
///
/// The pigeonhole runs on all points and then on a ladder of first-fit nets
/// with separations `c2 · 2^{−t/2}`, which discards tight clusters that would
/// otherwise force tiny bins; the largest outcome wins, ties to the earliest
/// pool.
pub fn extract_equilateral(stream: &PointStream, epsilon: f64, target: usize) -> Result<ExtractionResult> {
    check_args(epsilon, target)?;
    let n = stream.horizon();
    let all: Vec<usize> = (0..n).collect();
    let dense = stream.dense(&all);
    let (c1_all, c2_all) = extreme_distances(&dense, &all);

    let mut pools: Vec<(f64, Vec<usize>)> = vec![(0.0, all)];
    if n >= 2 {
        for t in 1..=MAX_RUNGS {
            let s = c2_all * 0.5f64.powf(t as f64 / 2.0);
            if s <= c1_all {
                break;
            }
            let net = separated_net(&dense, n, s);
            if net.len() >= 2 && pools.iter().all(|(_, p)| *p != net) {
                pools.push((s, net));
            }
        }
    }

    let mut best: Option<(f64, usize, Pigeonhole)> = None;
    for (s, pool) in &pools {
        let Some(mut found) = pigeonhole(&dense, pool, epsilon) else { continue };
        found.members.truncate(target);
        if best.as_ref().is_none_or(|(_, _, b)| found.members.len() > b.members.len()) {
            let reached = found.members.len() >= target;
            best = Some((*s, pool.len(), found));
            if reached {
                break;
            }
        }
    }

    let mut params = CaseParams::default();
    let mut cert = Certificate::new();
    let mut indices = Vec::new();
    if let Some((s, size, found)) = best {
        let alpha = found.alpha;
        let upper = (1.0 + epsilon) * alpha;
        indices = found.members;
        for (a, &u) in indices.iter().enumerate() {
            for &v in &indices[a + 1..] {
                cert.check("equal_band", Claim::AtLeast { u, v, bound: alpha }, stream);
                cert.check("equal_band", Claim::AtMost { u, v, bound: upper }, stream);
            }
        }
        params = CaseParams {
            delta: Some(found.bins.delta),
            alpha: Some(alpha),
            c1: Some(found.bins.c1),
            c2: Some(found.bins.c2),
            bin_width: Some(found.bins.delta),
            bins: Some(found.bins.count),
            bin: Some(found.bin as usize),
            rounds: Some(found.rounds),
            pool_separation: Some(s),
            pool_size: Some(size),
            ..Default::default()
        };
    }
    Ok(ExtractionResult::finish(Case::Equilateral, indices, epsilon, target, n, params, cert))
}
