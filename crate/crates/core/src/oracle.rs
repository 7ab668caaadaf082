//! Exact answers on small instances.
//!
//! The smallest distortion of any injective map from a finite metric space
//! into any ultrametric space equals `max d/u`, with `u` the subdominant
//! ultrametric. Lower bound: if `ρ` is an ultrametric with `r d ≤ ρ ≤ r D d`,
//! then `ρ/(rD)` lies below `d` and so below `u`, giving `d/u ≤ D` on every
//! pair. Upper bound: `u` itself achieves `max d/u` because `u ≤ d`.
//!
//! [`merge_tree_optimum`] recomputes the same number from scratch by dynamic
//! programming over binary merge trees, and the exhaustive subset searches use
//! the fact that both feasibility notions are inherited by subsets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{subdominant_ultrametric, FiniteMetricSpace, Metric};

pub const DEFAULT_CAP: usize = 16;
/// Largest space [`merge_tree_optimum`] accepts (it visits `3^n` splits).
pub const MERGE_TREE_CAP: usize = 14;
/// Largest space [`exhaustive_tree_optimum`] accepts.
pub const EXHAUSTIVE_TREE_CAP: usize = 6;

/// `max d(i,j) / u(i,j)`; `1` for fewer than two points.
pub fn optimal_ultra_distortion(m: &impl Metric) -> f64 {
    let u = subdominant_ultrametric(m);
    let n = m.len();
    let mut best = 1.0f64;
    for i in 0..n {
        for j in i + 1..n {
            best = best.max(m.dist(i, j) / u.dist(i, j));
        }
    }
    best
}

/// Best distortion over binary merge trees, each node at the height of its
/// diameter:
///
/// `cost(S) = min_{A ⊔ B = S} max(cost(A), cost(B), diam(S) / d(A, B))`.
///
/// Every ultrametric dominating `d` can be lowered to these heights without
/// increasing any ratio, and every merge tree can be made binary by splitting
/// its multiway nodes, so this is the optimum over all trees.
pub fn merge_tree_optimum(m: &impl Metric) -> Result<f64> {
    let n = m.len();
    if n > MERGE_TREE_CAP {
        return Err(Error::CapExceeded { n, cap: MERGE_TREE_CAP });
    }
    if n < 2 {
        return Ok(1.0);
    }
    let full = (1usize << n) - 1;
    let mut diam = vec![0.0f64; full + 1];
    let mut cost = vec![1.0f64; full + 1];
    for s in 1..=full {
        let low = s.trailing_zeros() as usize;
        let rest = s & (s - 1);
        let mut d = diam[rest];
        let mut r = rest;
        while r != 0 {
            let j = r.trailing_zeros() as usize;
            d = d.max(m.dist(low, j));
            r &= r - 1;
        }
        diam[s] = d;
        if rest == 0 {
            continue;
        }
        let mut best = f64::INFINITY;
        // splits with the lowest member on side `a`
        let others = rest;
        let mut sub = others;
        loop {
            let a = (1usize << low) | sub;
            let b = s & !a;
            if b != 0 {
                let mut gap = f64::INFINITY;
                let mut x = a;
                while x != 0 {
                    let i = x.trailing_zeros() as usize;
                    let mut y = b;
                    while y != 0 {
                        let j = y.trailing_zeros() as usize;
                        gap = gap.min(m.dist(i, j));
                        y &= y - 1;
                    }
                    x &= x - 1;
                }
                let c = cost[a].max(cost[b]).max(d / gap);
                best = best.min(c);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
        cost[s] = best;
    }
    Ok(cost[full])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSearchResult {
    pub subset: Vec<usize>,
    pub objective: f64,
    pub enumerated: u64,
}

/// Depth-first search over subsets in lexicographic order, descending only
/// into feasible sets. Returns the first largest feasible subset.
fn hereditary_search(n: usize, feasible: &mut dyn FnMut(&[usize]) -> bool) -> (Vec<usize>, u64) {
    fn go(
        n: usize,
        current: &mut Vec<usize>,
        best: &mut Vec<usize>,
        count: &mut u64,
        feasible: &mut dyn FnMut(&[usize]) -> bool,
    ) {
        let start = current.last().map_or(0, |&l| l + 1);
        for x in start..n {
            if current.len() + (n - x) <= best.len() {
                return;
            }
            current.push(x);
            *count += 1;
            if feasible(current) {
                if current.len() > best.len() {
                    *best = current.clone();
                }
                go(n, current, best, count, feasible);
            }
            current.pop();
        }
    }
    let mut best = Vec::new();
    let mut count = 0;
    go(n, &mut Vec::new(), &mut best, &mut count, feasible);
    (best, count)
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    Ok(())
}

/// The largest subset `S` with `optimal_ultra_distortion(M|S) ≤ D`, earliest
/// in lexicographic order among the largest.
pub fn best_subset_under_distortion(m: &FiniteMetricSpace, bound: f64, cap: usize) -> Result<SubsetSearchResult> {
    check_cap(m.len(), cap)?;
    if !(bound >= 1.0) {
        return Err(Error::InvalidParameter(format!("distortion bound must be at least 1, got {bound}")));
    }
    let (subset, enumerated) = hereditary_search(m.len(), &mut |s| {
        s.len() < 3 || optimal_ultra_distortion(&m.subspace(s).expect("valid indices")) <= bound
    });
    let objective = optimal_ultra_distortion(&m.subspace(&subset)?);
    Ok(SubsetSearchResult { subset, objective, enumerated })
}

/// `max / min` over the pairwise distances of `s`; `1` below two points.
pub fn spread_ratio(m: &impl Metric, s: &[usize]) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (a, &i) in s.iter().enumerate() {
        for &j in &s[a + 1..] {
            let d = m.dist(i, j);
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    if lo.is_finite() {
        hi / lo
    } else {
        1.0
    }
}

/// The largest subset with `max d ≤ (1+ε) min d`, earliest in lexicographic
/// order among the largest.
pub fn best_equilateral_subset(m: &FiniteMetricSpace, epsilon: f64, cap: usize) -> Result<SubsetSearchResult> {
    check_cap(m.len(), cap)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let (subset, enumerated) = hereditary_search(m.len(), &mut |s| {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (a, &i) in s.iter().enumerate() {
            for &j in &s[a + 1..] {
                lo = lo.min(m.dist(i, j));
                hi = hi.max(m.dist(i, j));
            }
        }
        s.len() < 2 || hi <= (1.0 + epsilon) * lo
    });
    let objective = spread_ratio(m, &subset);
    Ok(SubsetSearchResult { subset, objective, enumerated })
}

/// Every rooted binary tree on `leaves`, as nested splits.
#[derive(Clone)]
enum Tree {
    Leaf(usize),
    Node(Box<Tree>, Box<Tree>),
}

fn trees(leaves: &[usize]) -> Vec<Tree> {
    if leaves.len() == 1 {
        return vec![Tree::Leaf(leaves[0])];
    }
    let mut out = Vec::new();
    let rest = &leaves[1..];
    for mask in 0..(1usize << rest.len()) - 1 {
        let mut a = vec![leaves[0]];
        let mut b = Vec::new();
        for (k, &x) in rest.iter().enumerate() {
            if mask >> k & 1 == 1 {
                a.push(x);
            } else {
                b.push(x);
            }
        }
        for ta in trees(&a) {
            for tb in trees(&b) {
                out.push(Tree::Node(Box::new(ta.clone()), Box::new(tb)));
            }
        }
    }
    out
}

fn leaves_of(t: &Tree) -> Vec<usize> {
    match t {
        Tree::Leaf(x) => vec![*x],
        Tree::Node(a, b) => [leaves_of(a), leaves_of(b)].concat(),
    }
}

fn internal_nodes(t: &Tree, out: &mut Vec<(Vec<usize>, Vec<usize>)>) {
    if let Tree::Node(a, b) = t {
        out.push((leaves_of(a), leaves_of(b)));
        internal_nodes(a, out);
        internal_nodes(b, out);
    }
}

/// Minimum distortion over every binary tree on the points and every
/// assignment of node heights drawn from the distance set, monotone towards
/// the root. Shares nothing with the other searches; meant for cross-checks.
pub fn exhaustive_tree_optimum(m: &FiniteMetricSpace) -> Result<f64> {
    let n = m.len();
    if n > EXHAUSTIVE_TREE_CAP {
        return Err(Error::CapExceeded { n, cap: EXHAUSTIVE_TREE_CAP });
    }
    if n < 2 {
        return Ok(1.0);
    }
    let mut heights: Vec<f64> = m.upper_triangle();
    heights.sort_by(f64::total_cmp);
    heights.dedup();
    let mut best = f64::INFINITY;
    for t in trees(&(0..n).collect::<Vec<_>>()) {
        let mut nodes = Vec::new();
        internal_nodes(&t, &mut nodes);
        // node k's parent is the earlier node containing it
        let parent: Vec<Option<usize>> = (0..nodes.len())
            .map(|k| {
                let mine: Vec<usize> = [nodes[k].0.clone(), nodes[k].1.clone()].concat();
                (0..k).rev().find(|&p| {
                    let theirs: Vec<usize> = [nodes[p].0.clone(), nodes[p].1.clone()].concat();
                    mine.iter().all(|x| theirs.contains(x))
                })
            })
            .collect();
        let mut assign = vec![0usize; nodes.len()];
        loop {
            let monotone = (0..nodes.len()).all(|k| parent[k].is_none_or(|p| heights[assign[p]] >= heights[assign[k]]));
            if monotone {
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for (k, (a, b)) in nodes.iter().enumerate() {
                    for &x in a {
                        for &y in b {
                            let r = heights[assign[k]] / m.dist(x, y);
                            lo = lo.min(r);
                            hi = hi.max(r);
                        }
                    }
                }
                best = best.min(hi / lo);
            }
            let mut k = 0;
            while k < assign.len() {
                assign[k] += 1;
                if assign[k] < heights.len() {
                    break;
                }
                assign[k] = 0;
                k += 1;
            }
            if k == assign.len() {
                break;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> FiniteMetricSpace {
        FiniteMetricSpace::from_fn(n, |i, j| (i as f64 - j as f64).abs()).unwrap()
    }

    #[test]
    fn equilateral_and_collinear() {
        let eq = FiniteMetricSpace::from_fn(5, |_, _| 1.0).unwrap();
        assert_eq!(optimal_ultra_distortion(&eq), 1.0);
        let line = FiniteMetricSpace::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap();
        assert_eq!(optimal_ultra_distortion(&line), 2.0);
        assert_eq!(merge_tree_optimum(&line).unwrap(), 2.0);
        assert_eq!(exhaustive_tree_optimum(&line).unwrap(), 2.0);
    }

    #[test]
    fn unit_path_on_five_points() {
        let p = path(5);
        assert_eq!(optimal_ultra_distortion(&p), 4.0);
        assert_eq!(merge_tree_optimum(&p).unwrap(), 4.0);
        assert_eq!(exhaustive_tree_optimum(&p).unwrap(), 4.0);
    }

    #[test]
    fn tree_enumeration_agrees_on_small_spaces() {
        let spaces = [
            vec![(0.0, 0.0), (1.0, 0.0), (0.0, 2.0), (3.0, 3.0)],
            vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.5), (4.0, 0.0), (4.5, 2.0)],
        ];
        for pts in spaces {
            let m = FiniteMetricSpace::from_fn(pts.len(), |i, j| {
                let (a, b): ((f64, f64), (f64, f64)) = (pts[i], pts[j]);
                ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
            })
            .unwrap();
            let exact = optimal_ultra_distortion(&m);
            assert_eq!(merge_tree_optimum(&m).unwrap(), exact);
            assert_eq!(exhaustive_tree_optimum(&m).unwrap(), exact);
        }
    }

    #[test]
    fn whole_set_is_feasible_at_its_own_distortion() {
        let m = FiniteMetricSpace::from_fn(7, |i, j| 1.0 + ((i * 3 + j * 3) % 4) as f64 * 0.25).unwrap();
        let d = optimal_ultra_distortion(&m);
        let r = best_subset_under_distortion(&m, d, DEFAULT_CAP).unwrap();
        assert_eq!(r.subset, (0..7).collect::<Vec<_>>());
        assert_eq!(r.objective, d);
    }

    #[test]
    fn unit_path_at_one_and_a_half() {
        // {0,1,3}: d = 1, 3, 2 against u = 1, 2, 2 gives exactly 1.5
        let r = best_subset_under_distortion(&path(6), 1.5, DEFAULT_CAP).unwrap();
        assert_eq!(r.subset, vec![0, 1, 3]);
        assert_eq!(r.objective, 1.5);
        let sub = path(6).subspace(&[0, 1, 5]).unwrap();
        assert_eq!(optimal_ultra_distortion(&sub), 1.25);
        // no four points are feasible
        let p = path(6);
        for s in 0u32..64 {
            if s.count_ones() == 4 {
                let idx: Vec<usize> = (0..6).filter(|k| s >> k & 1 == 1).collect();
                assert!(optimal_ultra_distortion(&p.subspace(&idx).unwrap()) > 1.5);
            }
        }
    }

    #[test]
    fn equilateral_search() {
        let eq = FiniteMetricSpace::from_fn(6, |_, _| 2.0).unwrap();
        assert_eq!(best_equilateral_subset(&eq, 0.1, DEFAULT_CAP).unwrap().subset.len(), 6);
        let pairs = FiniteMetricSpace::from_fn(8, |i, j| if i / 2 == j / 2 { 0.01 } else { 1.0 }).unwrap();
        let r = best_equilateral_subset(&pairs, 0.5, DEFAULT_CAP).unwrap();
        assert_eq!(r.subset, vec![0, 2, 4, 6]);
        assert_eq!(r.objective, 1.0);
    }

    #[test]
    fn cap_is_enforced() {
        let m = path(17);
        assert!(matches!(best_subset_under_distortion(&m, 2.0, DEFAULT_CAP), Err(Error::CapExceeded { n: 17, cap: 16 })));
        assert!(best_equilateral_subset(&m, 0.5, 16).is_err());
        assert!(merge_tree_optimum(&m).is_err());
    }
}
