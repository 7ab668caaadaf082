use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{diameter_of, single_linkage_merges, Metric};

/// Disjoint index blocks with their diameters, largest block diameter first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockFamily {
    pub blocks: Vec<Vec<usize>>,
    pub diameters: Vec<f64>,
}

impl BlockFamily {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn points(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InfeasibleBlocks { k, n });
    }
    Ok(())
}

/// `k` disjoint blocks with `diam K_i ≤ diam(M)/i`, built greedily.
///
/// Candidates are the singletons and every cluster formed by binary
/// single-linkage merging. Block `i` is the largest unused candidate whose
/// diameter is at most `min(diam(M)/i, diam K_{i−1})` and that leaves at least
/// `k − i` points for the remaining blocks; ties go to the smallest member.
pub fn block_partition(m: &impl Metric, k: usize) -> Result<BlockFamily> {
    let n = m.len();
    check_k(n, k)?;
    let total = diameter_of(m, &(0..n).collect::<Vec<_>>());
    let mut candidates: Vec<(Vec<usize>, f64)> = (0..n).map(|i| (vec![i], 0.0)).collect();
    for (_, set) in single_linkage_merges(m) {
        let d = diameter_of(m, &set);
        candidates.push((set, d));
    }

    let mut used = vec![false; n];
    let mut free = n;
    let mut prev = f64::INFINITY;
    let mut family = BlockFamily { blocks: Vec::with_capacity(k), diameters: Vec::with_capacity(k) };
    for i in 1..=k {
        let cap = (total / i as f64).min(prev);
        let reserve = k - i;
        let mut best: Option<usize> = None;
        for (c, (set, d)) in candidates.iter().enumerate() {
            if *d > cap || set.len() > free || free - set.len() < reserve {
                continue;
            }
            if set.iter().any(|&p| used[p]) {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => {
                    let cur = &candidates[b].0;
                    set.len() > cur.len() || (set.len() == cur.len() && set[0] < cur[0])
                }
            };
            if better {
                best = Some(c);
            }
        }
        let (set, d) = candidates[best.expect("an unused singleton always fits")].clone();
        for &p in &set {
            used[p] = true;
        }
        free -= set.len();
        prev = d;
        family.blocks.push(set);
        family.diameters.push(d);
    }
    Ok(family)
}

/// Cuts the single-linkage tree into `k` clusters covering every point,
/// ordered by decreasing diameter (ties to the smallest member).
pub fn cluster_blocks(m: &impl Metric, k: usize) -> Result<BlockFamily> {
    let n = m.len();
    check_k(n, k)?;
    let mut owner: Vec<usize> = (0..n).collect();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for (_, set) in single_linkage_merges(m).into_iter().take(n - k) {
        let root = set[0];
        for &p in &set {
            if owner[p] != root {
                clusters[owner[p]].clear();
                owner[p] = root;
            }
        }
        clusters[root] = set;
    }
    let mut blocks: Vec<(Vec<usize>, f64)> = clusters
        .into_iter()
        .filter(|c| !c.is_empty())
        .map(|c| {
            let d = diameter_of(m, &c);
            (c, d)
        })
        .collect();
    blocks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0[0].cmp(&b.0[0])));
    let (blocks, diameters) = blocks.into_iter().unzip();
    Ok(BlockFamily { blocks, diameters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::FiniteMetricSpace;

    fn line(xs: &[f64]) -> FiniteMetricSpace {
        FiniteMetricSpace::from_fn(xs.len(), |i, j| (xs[i] - xs[j]).abs()).unwrap()
    }

    fn assert_disjoint(f: &BlockFamily, n: usize) {
        let mut seen = vec![false; n];
        for b in &f.blocks {
            for &p in b {
                assert!(!seen[p], "point {p} in two blocks");
                seen[p] = true;
            }
        }
    }

    #[test]
    fn single_cluster_is_whole_set() {
        let m = line(&[0.0, 0.01, 0.02, 0.015]);
        let f = block_partition(&m, 1).unwrap();
        assert_eq!(f.blocks, vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn two_clusters_split_cleanly() {
        let mut xs: Vec<f64> = (0..10).map(|i| i as f64 / 9.0).collect();
        xs.extend((0..5).map(|i| 101.0 + i as f64 * 0.025));
        let m = line(&xs);
        let f = block_partition(&m, 2).unwrap();
        assert_eq!(f.blocks[0], (0..10).collect::<Vec<_>>());
        assert_eq!(f.blocks[1], (10..15).collect::<Vec<_>>());
        assert!((f.diameters[0] - 1.0).abs() < 1e-12);
        assert!((f.diameters[1] - 0.1).abs() < 1e-12);
        assert_eq!(cluster_blocks(&m, 2).unwrap().blocks, f.blocks);
    }

    #[test]
    fn grid_respects_caps() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let m = line(&xs);
        let total = 29.0;
        let f = block_partition(&m, 3).unwrap();
        assert_eq!(f.len(), 3);
        assert_disjoint(&f, 30);
        for (i, d) in f.diameters.iter().enumerate() {
            assert!(*d <= total / (i + 1) as f64);
            assert_eq!(*d, diameter_of(&m, &f.blocks[i]));
        }
        // sub-segments: consecutive integers
        for b in &f.blocks {
            assert!(b.windows(2).all(|w| w[1] == w[0] + 1));
        }
    }

    #[test]
    fn infeasible_k() {
        let m = line(&[0.0, 1.0]);
        assert!(matches!(block_partition(&m, 3), Err(Error::InfeasibleBlocks { k: 3, n: 2 })));
        assert!(cluster_blocks(&m, 0).is_err());
        assert_eq!(block_partition(&m, 2).unwrap().points(), 2);
    }

    #[test]
    fn cluster_blocks_cover_everything() {
        let xs = [0.0, 0.1, 5.0, 5.2, 5.1, 20.0, 20.05];
        let m = line(&xs);
        let f = cluster_blocks(&m, 3).unwrap();
        assert_eq!(f.blocks, vec![vec![2, 3, 4], vec![0, 1], vec![5, 6]]);
        assert_eq!(f.points(), 7);
    }
}
