//! Isometric Euclidean coordinates for finite ultrametric spaces.
//!
//! With a basepoint `b`, the Gram matrix
//! `G[x][y] = (ρ(x,b)² + ρ(y,b)² − ρ(x,y)²) / 2` of an ultrametric is positive
//! semidefinite, and `X = V √Λ` from its eigendecomposition `G = V Λ Vᵀ`
//! reproduces every distance as `‖X_x − X_y‖`.
//!
//! G is formed from squared distances, so a close pair far from the basepoint
//! keeps only about `ε·R²/d²` relative accuracy. When the spectral factor
//! misses the reconstruction tolerance, the coordinates are rebuilt from the
//! level tree instead, giving another factor of the same G whose shared
//! ancestors cancel exactly.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{is_ultrametric, FiniteMetricSpace, Metric, UltraSpace};

/// Eigenvalues above `−PSD_TOLERANCE · ‖G‖` count as nonnegative.
pub const PSD_TOLERANCE: f64 = 1e-9;
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-9;

/// Gram matrix of any finite space about `basepoint`. No ultrametric check.
pub fn gram_matrix(m: &impl Metric, basepoint: usize) -> Result<DMatrix<f64>> {
    let n = m.len();
    if basepoint >= n {
        return Err(Error::IndexOutOfRange { index: basepoint, len: n });
    }
    Ok(DMatrix::from_fn(n, n, |x, y| {
        let (a, b, c) = (m.dist(x, basepoint), m.dist(y, basepoint), m.dist(x, y));
        (a * a + b * b - c * c) / 2.0
    }))
}

/// Gram matrix of an ultrametric, checked to be positive semidefinite.
pub fn gram_from_ultrametric(u: &UltraSpace, basepoint: usize) -> Result<DMatrix<f64>> {
    let g = gram_matrix(u, basepoint)?;
    let eigen = SymmetricEigen::new(g.clone());
    let norm = spectral_norm(&eigen.eigenvalues);
    let threshold = -PSD_TOLERANCE * norm;
    if let Some(&eigenvalue) = eigen.eigenvalues.iter().filter(|&&l| l < threshold).min_by(|a, b| a.total_cmp(b)) {
        return Err(Error::NotPsd { eigenvalue, threshold });
    }
    Ok(g)
}

fn spectral_norm(eigenvalues: &nalgebra::DVector<f64>) -> f64 {
    eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factorization {
    Spectral,
    Tree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateEmbedding {
    pub basepoint: usize,
    pub factorization: Factorization,
    /// One row per point; the basepoint sits at the origin.
    pub points: Vec<Vec<f64>>,
    /// Retained eigenvalues, in decreasing order.
    pub eigenvalues: Vec<f64>,
    pub max_relative_error: f64,
    /// The Gram matrix about the basepoint, row-major.
    pub gram: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
}

impl CoordinateEmbedding {
    pub fn dimension(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.points[i].iter().zip(&self.points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// `label,x1,...,xk` with a header row.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["label".to_string()];
        header.extend((1..=self.dimension()).map(|k| format!("x{k}")));
        w.write_record(&header)?;
        for (i, p) in self.points.iter().enumerate() {
            let mut row = vec![self.labels.get(i).cloned().unwrap_or_else(|| i.to_string())];
            row.extend(p.iter().map(|v| format!("{v:?}")));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Coordinates about point `0`.
pub fn coordinates(u: &UltraSpace) -> Result<CoordinateEmbedding> {
    coordinates_about(u, 0)
}

pub fn coordinates_about(u: &UltraSpace, basepoint: usize) -> Result<CoordinateEmbedding> {
    let n = u.len();
    let g = gram_from_ultrametric(u, basepoint)?;
    let gram: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| g[(i, j)]).collect()).collect();
    let eigen = SymmetricEigen::new(g);
    let norm = spectral_norm(&eigen.eigenvalues);
    let rank_cut = n as f64 * f64::EPSILON * norm;
    let mut order: Vec<usize> = (0..n).filter(|&k| eigen.eigenvalues[k] > rank_cut).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]).then(a.cmp(&b)));
    let mut points = vec![Vec::with_capacity(order.len()); n];
    let mut eigenvalues = Vec::with_capacity(order.len());
    for &k in &order {
        let lambda = eigen.eigenvalues[k];
        let v = eigen.eigenvectors.column(k);
        // sign fixed so the largest entry is positive
        let pivot = (0..n).fold(0, |p, i| if v[i].abs() > v[p].abs() { i } else { p });
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        let root = lambda.sqrt();
        for (i, p) in points.iter_mut().enumerate() {
            p.push(sign * v[i] * root);
        }
        eigenvalues.push(lambda);
    }
    let labels = u.space().labels().map(<[String]>::to_vec).unwrap_or_default();
    let mut embedding =
        CoordinateEmbedding { basepoint, factorization: Factorization::Spectral, points, eigenvalues, max_relative_error: 0.0, gram, labels };
    match worst_error(u, &embedding) {
        Ok(worst) => embedding.max_relative_error = worst,
        Err(_) => {
            embedding.points = tree_points(u, basepoint);
            embedding.factorization = Factorization::Tree;
            embedding.max_relative_error = worst_error(u, &embedding)?;
        }
    }
    Ok(embedding)
}

fn worst_error(u: &UltraSpace, e: &CoordinateEmbedding) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            let rho = u.dist(i, j);
            let error = (e.distance(i, j) - rho).abs() / rho;
            if error.is_nan() || error > RECONSTRUCTION_TOLERANCE {
                return Err(Error::Reconstruction { i, j, error });
            }
            worst = worst.max(error);
        }
    }
    Ok(worst)
}

/// Each child `c` of a node at height `h` gets its own axis with weight
/// `√((h² − h_c²)/2)`, so squared distances telescope to the merge height.
/// The resulting points are moved to the basepoint and rotated into `n − 1`
/// dimensions.
fn tree_points(u: &UltraSpace, basepoint: usize) -> Vec<Vec<f64>> {
    let tree = u.tree();
    let n = tree.leaves;
    let height = |v: usize| if v < n { 0.0 } else { tree.nodes[v].height };
    let axes: usize = tree.nodes[n..].iter().map(|v| v.children.len()).sum();
    let mut x = DMatrix::<f64>::zeros(n, axes);
    let mut axis = 0;
    for v in n..tree.nodes.len() {
        let h = tree.nodes[v].height;
        for &c in &tree.nodes[v].children {
            let w = ((h * h - height(c) * height(c)).max(0.0) / 2.0).sqrt();
            for leaf in tree.leaves_under(c) {
                x[(leaf, axis)] = w;
            }
            axis += 1;
        }
    }
    if n < 2 {
        return vec![vec![]; n];
    }
    let others: Vec<usize> = (0..n).filter(|&i| i != basepoint).collect();
    let shifted = DMatrix::from_fn(axes, n - 1, |a, k| x[(others[k], a)] - x[(basepoint, a)]);
    let r = shifted.qr().r();
    let mut points = vec![vec![0.0; n - 1]; n];
    for (k, &i) in others.iter().enumerate() {
        points[i] = (0..n - 1).map(|a| r[(a, k)]).collect();
    }
    points
}

/// Coordinates for a plain matrix, refused unless it is exactly ultrametric.
pub fn coordinates_of(m: &FiniteMetricSpace) -> Result<CoordinateEmbedding> {
    let check = is_ultrametric(m, 0.0);
    if !check.holds {
        let ((i, j, k), slack) = check.worst.expect("a failing check has a witness");
        return Err(Error::NotUltrametric { i, j, k, slack });
    }
    coordinates(&UltraSpace::new(m.clone())?)
}
