use serde::{Deserialize, Serialize};

use super::{is_ultrametric, FiniteMetricSpace, Metric};
use crate::error::{Error, Result};

/// A node of a level tree. Leaves have no children and height zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub height: f64,
    pub children: Vec<usize>,
}

/// Rooted merge tree. Nodes `0..leaves` are the points; internal nodes carry
/// merge heights. The distance of two leaves is the height of their lowest
/// common ancestor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelTree {
    pub leaves: usize,
    pub nodes: Vec<TreeNode>,
    pub root: usize,
}

/// A finite ultrametric together with its level tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UltraSpace {
    base: FiniteMetricSpace,
    tree: LevelTree,
}

impl Metric for UltraSpace {
    fn len(&self) -> usize {
        self.base.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.base.dist(i, j)
    }
}

impl UltraSpace {
    /// Checks the strong triangle inequality exactly and builds the tree.
    pub fn new(base: FiniteMetricSpace) -> Result<Self> {
        let tree = tree_from_matrix(&base)?;
        Ok(UltraSpace { base, tree })
    }

    pub fn from_tree(tree: LevelTree) -> Result<Self> {
        let n = tree.leaves;
        let d = tree.matrix();
        let rows: Vec<Vec<f64>> = d.chunks(n.max(1)).take(n).map(|r| r.to_vec()).collect();
        let base = FiniteMetricSpace::new(rows)?;
        Ok(UltraSpace { base, tree })
    }

    pub fn space(&self) -> &FiniteMetricSpace {
        &self.base
    }

    pub fn tree(&self) -> &LevelTree {
        &self.tree
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        self.base = self.base.with_labels(labels)?;
        Ok(self)
    }

    pub fn into_space(self) -> FiniteMetricSpace {
        self.base
    }

    pub fn to_newick(&self) -> String {
        self.tree.to_newick(self.base.labels())
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Minimum spanning tree edges `(w, i, j)` with `i < j`, via Prim on the dense matrix.
fn minimum_spanning_tree(m: &impl Metric) -> Vec<(f64, usize, usize)> {
    let n = m.len();
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    if n < 2 {
        return edges;
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    in_tree[0] = true;
    for j in 1..n {
        best[j] = m.dist(0, j);
    }
    for _ in 1..n {
        let mut next = usize::MAX;
        for j in 0..n {
            if !in_tree[j] && (next == usize::MAX || best[j] < best[next]) {
                next = j;
            }
        }
        in_tree[next] = true;
        let (a, b) = (from[next].min(next), from[next].max(next));
        edges.push((best[next], a, b));
        for j in 0..n {
            if !in_tree[j] {
                let w = m.dist(next, j);
                if w < best[j] {
                    best[j] = w;
                    from[j] = next;
                }
            }
        }
    }
    edges
}

/// The largest ultrametric lying below `m` entrywise.
///
/// Processes minimum-spanning-tree edges in increasing order (single linkage);
/// every pair first joined by an edge of weight `w` gets `u = w`, which is the
/// minimax path cost between them. Merges at equal height collapse into one
/// multiway node, so the tree matches [`tree_from_matrix`] up to child order.
pub fn subdominant_ultrametric(m: &impl Metric) -> UltraSpace {
    let n = m.len();
    let mut edges = minimum_spanning_tree(m);
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut u = vec![0.0; n * n];
    let mut sets = DisjointSets::new(n);
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut nodes: Vec<TreeNode> = (0..n).map(|_| TreeNode { height: 0.0, children: vec![] }).collect();
    // tree node currently representing each root set
    let mut node_of: Vec<usize> = (0..n).collect();

    for (w, i, j) in edges {
        let (ri, rj) = (sets.find(i), sets.find(j));
        debug_assert_ne!(ri, rj);
        for &a in &members[ri] {
            for &b in &members[rj] {
                u[a * n + b] = w;
                u[b * n + a] = w;
            }
        }
        let mut children = Vec::new();
        for r in [ri, rj] {
            let node = node_of[r];
            if node >= n && nodes[node].height == w {
                children.append(&mut nodes[node].children);
            } else {
                children.push(node);
            }
        }
        let (keep, gone) = if ri < rj { (ri, rj) } else { (rj, ri) };
        sets.parent[gone] = keep;
        let moved = std::mem::take(&mut members[gone]);
        members[keep].extend(moved);
        nodes.push(TreeNode { height: w, children });
        node_of[keep] = nodes.len() - 1;
    }
    let root = if n == 0 { 0 } else { node_of[sets.find(0)] };
    let tree = compact(LevelTree { leaves: n, nodes, root });
    UltraSpace { base: FiniteMetricSpace::from_trusted(n, u), tree }
}

/// Every cluster formed by binary single-linkage merging, in merge order, with
/// members sorted. Equal-weight edges merge one at a time in `(w, i, j)` order.
pub(crate) fn single_linkage_merges(m: &impl Metric) -> Vec<(f64, Vec<usize>)> {
    let n = m.len();
    let mut edges = minimum_spanning_tree(m);
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut sets = DisjointSets::new(n);
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut out = Vec::with_capacity(edges.len());
    for (w, i, j) in edges {
        let (ri, rj) = (sets.find(i), sets.find(j));
        let (keep, gone) = if ri < rj { (ri, rj) } else { (rj, ri) };
        sets.parent[gone] = keep;
        let moved = std::mem::take(&mut members[gone]);
        members[keep].extend(moved);
        members[keep].sort_unstable();
        out.push((w, members[keep].clone()));
    }
    out
}

/// Drops internal nodes that are no longer reachable from the root.
fn compact(tree: LevelTree) -> LevelTree {
    let n = tree.leaves;
    if tree.nodes.len() <= n {
        return tree;
    }
    let mut map = vec![usize::MAX; tree.nodes.len()];
    let mut order = Vec::new();
    let mut stack = vec![tree.root];
    while let Some(v) = stack.pop() {
        if v >= n {
            order.push(v);
            stack.extend(tree.nodes[v].children.iter().copied());
        }
    }
    order.sort_unstable();
    let mut nodes: Vec<TreeNode> = tree.nodes[..n].to_vec();
    for (k, &v) in order.iter().enumerate() {
        map[v] = n + k;
    }
    for &v in &order {
        let node = &tree.nodes[v];
        nodes.push(TreeNode {
            height: node.height,
            children: node.children.iter().map(|&c| if c < n { c } else { map[c] }).collect(),
        });
    }
    let root = if tree.root < n { tree.root } else { map[tree.root] };
    LevelTree { leaves: n, nodes, root }
}

/// Builds the level tree of an exact ultrametric by splitting each set at its
/// diameter: under the strong inequality, `ρ(a, b) < h` is an equivalence
/// relation whose classes are the children.
pub fn tree_from_matrix(rho: &FiniteMetricSpace) -> Result<LevelTree> {
    let check = is_ultrametric(rho, 0.0);
    if !check.holds {
        let ((i, j, k), slack) = check.worst.expect("failed check has a witness");
        return Err(Error::NotUltrametric { i, j, k, slack });
    }
    let n = rho.len();
    let mut nodes: Vec<TreeNode> = (0..n).map(|_| TreeNode { height: 0.0, children: vec![] }).collect();
    if n == 0 {
        return Ok(LevelTree { leaves: 0, nodes, root: 0 });
    }
    let all: Vec<usize> = (0..n).collect();
    let root = split(rho, all, &mut nodes);
    Ok(LevelTree { leaves: n, nodes, root })
}

fn split(rho: &FiniteMetricSpace, set: Vec<usize>, nodes: &mut Vec<TreeNode>) -> usize {
    if set.len() == 1 {
        return set[0];
    }
    let mut h = 0.0f64;
    for (a, &i) in set.iter().enumerate() {
        for &j in &set[a + 1..] {
            h = h.max(rho.dist(i, j));
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &p in &set {
        match classes.iter_mut().find(|c| rho.dist(c[0], p) < h) {
            Some(c) => c.push(p),
            None => classes.push(vec![p]),
        }
    }
    let children = classes.into_iter().map(|c| split(rho, c, nodes)).collect();
    nodes.push(TreeNode { height: h, children });
    nodes.len() - 1
}

impl LevelTree {
    /// Leaves below `node`, in ascending order.
    pub fn leaves_under(&self, node: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            if v < self.leaves {
                out.push(v);
            } else {
                stack.extend(self.nodes[v].children.iter().copied());
            }
        }
        out.sort_unstable();
        out
    }

    /// Dense matrix of lowest-common-ancestor heights.
    pub fn matrix(&self) -> Vec<f64> {
        let n = self.leaves;
        let mut d = vec![0.0; n * n];
        for v in n..self.nodes.len() {
            let node = &self.nodes[v];
            let groups: Vec<Vec<usize>> = node.children.iter().map(|&c| self.leaves_under(c)).collect();
            for (x, gx) in groups.iter().enumerate() {
                for gy in &groups[x + 1..] {
                    for &a in gx {
                        for &b in gy {
                            d[a * n + b] = node.height;
                            d[b * n + a] = node.height;
                        }
                    }
                }
            }
        }
        d
    }

    /// Canonical form: children sorted by their smallest leaf, internal nodes
    /// renumbered in depth-first order. Two trees describing the same
    /// hierarchy have equal canonical forms.
    pub fn canonical(&self) -> LevelTree {
        let n = self.leaves;
        let mut nodes: Vec<TreeNode> = (0..n).map(|_| TreeNode { height: 0.0, children: vec![] }).collect();
        fn walk(t: &LevelTree, v: usize, nodes: &mut Vec<TreeNode>) -> usize {
            if v < t.leaves {
                return v;
            }
            let mut kids: Vec<(usize, usize)> =
                t.nodes[v].children.iter().map(|&c| (t.leaves_under(c)[0], c)).collect();
            kids.sort_unstable();
            let children = kids.into_iter().map(|(_, c)| walk(t, c, nodes)).collect();
            nodes.push(TreeNode { height: t.nodes[v].height, children });
            nodes.len() - 1
        }
        let root = if n == 0 { 0 } else { walk(self, self.root, &mut nodes) };
        LevelTree { leaves: n, nodes, root }
    }

    /// Newick text. Internal nodes are labelled with their exact merge height
    /// and every branch carries the height difference to its parent, so the
    /// output is an ultrametric tree for external viewers.
    pub fn to_newick(&self, labels: Option<&[String]>) -> String {
        let mut out = String::new();
        if self.leaves == 0 {
            out.push(';');
            return out;
        }
        self.write_node(self.root, None, labels, &mut out);
        out.push(';');
        out
    }

    fn write_node(&self, v: usize, parent: Option<f64>, labels: Option<&[String]>, out: &mut String) {
        let node = &self.nodes[v];
        if v < self.leaves {
            out.push_str(&newick_label(&match labels {
                Some(l) => l[v].clone(),
                None => v.to_string(),
            }));
        } else {
            out.push('(');
            for (k, &c) in node.children.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                self.write_node(c, Some(node.height), labels, out);
            }
            out.push(')');
            out.push_str(&format!("{}", node.height));
        }
        if let Some(p) = parent {
            out.push_str(&format!(":{}", p - node.height));
        }
    }
}

fn newick_label(s: &str) -> String {
    if s.chars().any(|c| "()[]':;, \t".contains(c)) {
        format!("'{}'", s.replace('\'', "''"))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> FiniteMetricSpace {
        FiniteMetricSpace::from_fn(n, |i, j| (i as f64 - j as f64).abs()).unwrap()
    }

    #[test]
    fn equilateral_is_its_own_subdominant() {
        let m = FiniteMetricSpace::from_fn(4, |_, _| 2.0).unwrap();
        let u = subdominant_ultrametric(&m);
        assert_eq!(u.space().rows(), m.rows());
        let root = &u.tree().nodes[u.tree().root];
        assert_eq!(root.children.len(), 4);
        assert_eq!(root.height, 2.0);
    }

    #[test]
    fn collinear_subdominant() {
        let u = subdominant_ultrametric(&path(3));
        assert_eq!(u.space().upper_triangle(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn unit_path_collapses_to_one_level() {
        let u = subdominant_ultrametric(&path(6));
        assert!(u.space().upper_triangle().iter().all(|&x| x == 1.0));
        assert_eq!(u.tree().nodes.len(), 7);
    }

    #[test]
    fn two_point_tree() {
        let m = FiniteMetricSpace::new(vec![vec![0.0, 3.5], vec![3.5, 0.0]]).unwrap();
        let t = tree_from_matrix(&m).unwrap();
        assert_eq!(t.nodes[t.root], TreeNode { height: 3.5, children: vec![0, 1] });
    }

    #[test]
    fn star_tree_for_equilateral() {
        let m = FiniteMetricSpace::from_fn(5, |_, _| 1.0).unwrap();
        let t = tree_from_matrix(&m).unwrap();
        assert_eq!(t.nodes[t.root].children, vec![0, 1, 2, 3, 4]);
        assert_eq!(t.nodes[t.root].height, 1.0);
    }

    #[test]
    fn non_ultrametric_rejected() {
        assert!(matches!(tree_from_matrix(&path(3)), Err(Error::NotUltrametric { .. })));
    }

    #[test]
    fn newick_rendering() {
        let rows = vec![
            vec![0.0, 1.0, 3.0],
            vec![1.0, 0.0, 3.0],
            vec![3.0, 3.0, 0.0],
        ];
        let m = FiniteMetricSpace::new(rows).unwrap();
        let u = UltraSpace::new(m).unwrap();
        assert_eq!(u.to_newick(), "((0:1,1:1)1:2,2:3)3;");
        let labelled = u
            .space()
            .clone()
            .with_labels(vec!["a b".into(), "c".into(), "d".into()])
            .unwrap();
        assert_eq!(UltraSpace::new(labelled).unwrap().to_newick(), "(('a b':1,c:1)1:2,d:3)3;");
    }
}
