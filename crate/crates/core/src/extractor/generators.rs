//! Reproducible synthetic streams, configured from JSON such as
//! `{"kind": "sphere", "n": 500, "dim": 20, "seed": 7}`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::PointStream;
use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, MatrixJson};

fn default_base() -> f64 {
    10.0
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_dim() -> usize {
    20
}
fn two() -> usize {
    2
}
fn ten() -> usize {
    10
}
fn default_spread() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    /// `x_i = base^i` on the line, `i = 1..=n`.
    Powers {
        n: usize,
        #[serde(default = "default_base")]
        base: f64,
    },
    /// `x_i = i^{−exponent}`, `i = 1..=n`, preceded by the limit `0` when
    /// `with_limit` is set.
    Harmonic {
        n: usize,
        #[serde(default = "one")]
        exponent: f64,
        #[serde(default = "yes")]
        with_limit: bool,
    },
    /// Uniform points on the unit sphere in `R^dim`.
    Sphere {
        n: usize,
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default)]
        seed: u64,
    },
    /// `x_i = i · spacing` on the line.
    Grid {
        n: usize,
        #[serde(default = "one")]
        spacing: f64,
    },
    /// Tight balls of diameter at most `spread` around the vertices of a
    /// regular simplex with edge `separation`; point `p` lies in cluster
    /// `p mod clusters`.
    TwoClusters {
        #[serde(default = "two")]
        clusters: usize,
        #[serde(default = "ten")]
        per_cluster: usize,
        #[serde(default = "one")]
        separation: f64,
        #[serde(default = "default_spread")]
        spread: f64,
        #[serde(default)]
        seed: u64,
    },
    /// An explicit matrix, as full `rows` or as `n` plus the upper triangle `d`.
    CustomMatrix {
        #[serde(default)]
        rows: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        d: Option<Vec<f64>>,
        #[serde(default)]
        labels: Option<Vec<String>>,
        #[serde(default)]
        limit: Option<usize>,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn indexed_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

impl GeneratorConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GeneratorConfig::Powers { .. } => "powers",
            GeneratorConfig::Harmonic { .. } => "harmonic",
            GeneratorConfig::Sphere { .. } => "sphere",
            GeneratorConfig::Grid { .. } => "grid",
            GeneratorConfig::TwoClusters { .. } => "two_clusters",
            GeneratorConfig::CustomMatrix { .. } => "custom_matrix",
        }
    }

    pub fn stream(&self) -> Result<PointStream> {
        match self {
            GeneratorConfig::Powers { n, base } => {
                if !(*base > 1.0 && base.is_finite()) {
                    return Err(Error::InvalidParameter(format!("base must exceed 1, got {base}")));
                }
                let xs: Vec<f64> = (1..=*n).map(|i| base.powi(i as i32)).collect();
                if xs.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidParameter(format!("{base}^{n} overflows")));
                }
                PointStream::from_line(xs).with_labels(indexed_labels(*n))
            }
            GeneratorConfig::Harmonic { n, exponent, with_limit } => {
                positive("exponent", *exponent)?;
                let mut xs = Vec::with_capacity(n + 1);
                let mut labels = Vec::with_capacity(n + 1);
                if *with_limit {
                    xs.push(0.0);
                    labels.push("x_inf".to_string());
                }
                xs.extend((1..=*n).map(|i| (i as f64).powf(-exponent)));
                labels.extend(indexed_labels(*n));
                if xs.windows(2).any(|w| w[0] == w[1]) || xs.last().is_some_and(|&x| x == 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "exponent {exponent} makes points coincide in f64 within {n} terms"
                    )));
                }
                let s = PointStream::from_line(xs).with_labels(labels)?;
                if *with_limit {
                    s.with_limit(0)
                } else {
                    Ok(s)
                }
            }
            GeneratorConfig::Sphere { n, dim, seed } => {
                if *dim < 2 {
                    return Err(Error::InvalidParameter("sphere dimension must be at least 2".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let pts: Vec<Vec<f64>> = (0..*n).map(|_| unit_vector(&mut rng, *dim)).collect();
                PointStream::from_vectors(pts).with_labels(indexed_labels(*n))
            }
            GeneratorConfig::Grid { n, spacing } => {
                positive("spacing", *spacing)?;
                let xs = (0..*n).map(|i| i as f64 * spacing).collect();
                PointStream::from_line(xs).with_labels(indexed_labels(*n))
            }
            GeneratorConfig::TwoClusters { clusters, per_cluster, separation, spread, seed } => {
                positive("separation", *separation)?;
                positive("spread", *spread)?;
                if *clusters == 0 || *per_cluster == 0 {
                    return Err(Error::InvalidParameter("clusters and per_cluster must be positive".into()));
                }
                let dim = (*clusters).max(2);
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let edge = separation / std::f64::consts::SQRT_2;
                let n = clusters * per_cluster;
                let pts = (0..n)
                    .map(|p| {
                        let c = p % clusters;
                        let dir = unit_vector(&mut rng, dim);
                        let u: f64 = rng.random();
                        let radius = spread / 2.0 * u.powf(1.0 / dim as f64);
                        let mut x: Vec<f64> = dir.into_iter().map(|v| v * radius).collect();
                        x[c] += edge;
                        x
                    })
                    .collect();
                PointStream::from_vectors(pts).with_labels(indexed_labels(n))
            }
            GeneratorConfig::CustomMatrix { rows, n, d, labels, limit } => {
                let space = match (rows, n, d) {
                    (Some(rows), None, None) => FiniteMetricSpace::new(rows.clone())?,
                    (None, Some(n), Some(d)) => {
                        MatrixJson { n: *n, d: d.clone(), labels: vec![] }.into_space()?
                    }
                    _ => {
                        return Err(Error::InvalidParameter(
                            "custom_matrix needs either rows or n with d".into(),
                        ))
                    }
                };
                let space = match labels {
                    Some(l) => space.with_labels(l.clone())?,
                    None => space,
                };
                let s = PointStream::from_matrix(space);
                match limit {
                    Some(l) => s.with_limit(*l),
                    None => Ok(s),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Metric;

    #[test]
    fn json_round_trip_and_defaults() {
        let g = GeneratorConfig::from_json(r#"{"kind": "sphere", "n": 5}"#).unwrap();
        assert_eq!(g, GeneratorConfig::Sphere { n: 5, dim: 20, seed: 0 });
        let back = GeneratorConfig::from_json(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        assert!(GeneratorConfig::from_json(r#"{"kind": "nope", "n": 5}"#).is_err());
    }

    #[test]
    fn harmonic_has_designated_limit() {
        let s = GeneratorConfig::Harmonic { n: 10, exponent: 1.0, with_limit: true }.stream().unwrap();
        assert_eq!(s.horizon(), 11);
        assert_eq!(s.limit(), Some(0));
        assert_eq!(s.label(0), "x_inf");
        assert_eq!(s.dist(0, 2), 0.5);
        assert!(GeneratorConfig::Harmonic { n: 10, exponent: 500.0, with_limit: true }.stream().is_err());
    }

    #[test]
    fn seeded_streams_are_reproducible() {
        let g = GeneratorConfig::Sphere { n: 20, dim: 8, seed: 3 };
        let (a, b) = (g.stream().unwrap(), g.stream().unwrap());
        for i in 0..20 {
            for j in 0..20 {
                assert_eq!(a.dist(i, j).to_bits(), b.dist(i, j).to_bits());
            }
        }
        let other = GeneratorConfig::Sphere { n: 20, dim: 8, seed: 4 }.stream().unwrap();
        assert_ne!(a.dist(0, 1), other.dist(0, 1));
        for i in 1..20 {
            assert!(a.dist(0, i) <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn clusters_are_tight_and_separated() {
        let g = GeneratorConfig::TwoClusters { clusters: 4, per_cluster: 6, separation: 1.0, spread: 0.01, seed: 1 };
        let s = g.stream().unwrap();
        for i in 0..24 {
            for j in i + 1..24 {
                let d = s.dist(i, j);
                if i % 4 == j % 4 {
                    assert!(d <= 0.01);
                } else {
                    assert!((d - 1.0).abs() <= 0.01);
                }
            }
        }
        assert!(s.prefix_space().is_ok());
    }

    #[test]
    fn custom_matrix_forms() {
        let a = GeneratorConfig::from_json(r#"{"kind": "custom_matrix", "n": 3, "d": [1, 2, 1.5], "limit": 2}"#)
            .unwrap()
            .stream()
            .unwrap();
        assert_eq!(a.dist(1, 2), 1.5);
        assert_eq!(a.limit(), Some(2));
        let b = GeneratorConfig::CustomMatrix {
            rows: Some(vec![vec![0.0, 1.0], vec![1.0, 0.0]]),
            n: None,
            d: None,
            labels: Some(vec!["p".into(), "q".into()]),
            limit: None,
        };
        assert_eq!(b.stream().unwrap().label(1), "q");
        let bad = GeneratorConfig::CustomMatrix { rows: None, n: Some(2), d: None, labels: None, limit: None };
        assert!(bad.stream().is_err());
    }

    #[test]
    fn powers_reject_overflow() {
        assert!(GeneratorConfig::Powers { n: 400, base: 10.0 }.stream().is_err());
        assert_eq!(GeneratorConfig::Powers { n: 500, base: 2.0 }.stream().unwrap().horizon(), 500);
    }
}
