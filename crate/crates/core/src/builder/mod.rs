//! Apex-augmented block spaces, their sup-product, and the embedding map.
//!
//! Each embedded block `A_i` carries an internal ultrametric `ρ_i` and an apex
//! radius `r_i`. Adding one apex point at distance `r_i` from the whole block
//! image keeps the space ultrametric as long as `diam ρ_i ≤ r_i`. A point of
//! `A_i` is sent to the tuple that is the apex in every coordinate except the
//! `i`-th, and tuples are compared by the supremum of their coordinate
//! distances, so points of different blocks end up at `max(r_i, r_j)`.

mod plan;

pub use plan::{
    build_embedding, embed, plan_blocks, plan_singletons, verify_case1_bounds, EmbeddingPlan, EmbeddingReport,
    Mode, PairRecord,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{restrict, subdominant_ultrametric, FiniteMetricSpace, Metric, UltraSpace};

/// A block of ambient points with its internal ultrametric embedding.
///
/// `internal` is indexed by position in `indices`. For fitted blocks it is the
/// subdominant ultrametric `u` scaled by `distortion = max d/u`, so that
/// `d ≤ ρ ≤ distortion · d` on every pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub indices: Vec<usize>,
    pub basepoint: usize,
    pub internal: UltraSpace,
    pub distortion: f64,
    pub radius: f64,
}

impl Block {
    pub fn singleton(index: usize, radius: f64) -> Self {
        let one = FiniteMetricSpace::from_trusted(1, vec![0.0]);
        Block {
            indices: vec![index],
            basepoint: index,
            internal: UltraSpace::new(one).expect("one point is ultrametric"),
            distortion: 1.0,
            radius,
        }
    }

    /// Fits the internal embedding from the subdominant ultrametric of
    /// `metric` restricted to `indices`.
    pub fn fitted(metric: &impl Metric, indices: Vec<usize>, radius: f64) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidParameter("empty block".into()));
        }
        let sub = restrict(metric, &indices)?;
        let u = subdominant_ultrametric(&sub);
        let k = indices.len();
        let mut factor = 1.0f64;
        for a in 0..k {
            for b in a + 1..k {
                factor = factor.max(sub.dist(a, b) / u.dist(a, b));
            }
        }
        // round up until `factor · u ≥ d` holds in floating point too
        while (0..k).any(|a| (a + 1..k).any(|b| factor * u.dist(a, b) < sub.dist(a, b))) {
            factor = factor.next_up();
        }
        let scaled = u.space().scaled(factor);
        Ok(Block {
            basepoint: indices[0],
            indices,
            internal: UltraSpace::new(scaled)?,
            distortion: factor,
            radius,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Diameter of the block image under `ρ_i`.
    pub fn image_diameter(&self) -> f64 {
        self.internal.space().max_distance()
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }
}

/// `Y_i = f_i(A_i) ∪ {apex}`; the apex is the last point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApexSpace {
    pub space: UltraSpace,
    pub apex: usize,
    pub radius: f64,
}

impl Metric for ApexSpace {
    fn len(&self) -> usize {
        self.space.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.space.dist(i, j)
    }
}

/// Adds the apex at distance `r_i` from every point of the block image.
pub fn make_apex(block: &Block) -> Result<ApexSpace> {
    let diameter = block.image_diameter();
    if !(block.radius > 0.0 && block.radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("apex radius must be positive, got {}", block.radius)));
    }
    if diameter > block.radius {
        return Err(Error::DiameterExceedsRadius { diameter, radius: block.radius });
    }
    let k = block.len();
    let rows: Vec<Vec<f64>> = (0..=k)
        .map(|a| {
            (0..=k)
                .map(|b| match (a == k, b == k) {
                    (true, true) => 0.0,
                    (true, false) | (false, true) => block.radius,
                    (false, false) => block.internal.dist(a, b),
                })
                .collect()
        })
        .collect();
    let space = UltraSpace::new(FiniteMetricSpace::new(rows)?)?;
    Ok(ApexSpace { space, apex: k, radius: block.radius })
}

/// The finitely many materialized points of the sup-product of apex spaces.
///
/// A tuple is stored by its non-apex coordinates as `(factor, point)` pairs;
/// every other coordinate is the apex of its factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductUltra {
    pub factors: Vec<ApexSpace>,
    pub tuples: Vec<Vec<(usize, usize)>>,
    space: UltraSpace,
}

impl Metric for ProductUltra {
    fn len(&self) -> usize {
        self.tuples.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.space.dist(i, j)
    }
}

fn coordinate(tuple: &[(usize, usize)], factor: &ApexSpace, f: usize) -> usize {
    tuple.iter().find(|&&(g, _)| g == f).map_or(factor.apex, |&(_, p)| p)
}

/// `sup_f ρ̃_f(a_f, b_f)` over every factor.
pub fn sup_distance(factors: &[ApexSpace], a: &[(usize, usize)], b: &[(usize, usize)]) -> f64 {
    factors
        .iter()
        .enumerate()
        .map(|(f, y)| y.dist(coordinate(a, y, f), coordinate(b, y, f)))
        .fold(0.0, f64::max)
}

impl ProductUltra {
    pub fn space(&self) -> &UltraSpace {
        &self.space
    }

    pub fn to_newick(&self) -> String {
        self.space.to_newick()
    }

    pub fn labels(&self) -> Vec<String> {
        self.tuples
            .iter()
            .map(|t| match t.as_slice() {
                [] => "apex".to_string(),
                coords => coords.iter().map(|(f, p)| format!("{f}:{p}")).collect::<Vec<_>>().join("+"),
            })
            .collect()
    }
}

/// Materializes one tuple per support entry, each supported at a single
/// factor, plus the all-apex tuple when `with_apex_tuple` is set. The product
/// distance is evaluated coordinatewise and the result checked for the strong
/// triangle inequality with zero tolerance.
pub fn product_sup(
    factors: Vec<ApexSpace>,
    support: &[(usize, usize)],
    with_apex_tuple: bool,
) -> Result<ProductUltra> {
    if factors.is_empty() {
        return Err(Error::EmptyFactors);
    }
    for &(f, p) in support {
        let Some(y) = factors.get(f) else {
            return Err(Error::IndexOutOfRange { index: f, len: factors.len() });
        };
        if p >= y.len() || p == y.apex {
            return Err(Error::InvalidParameter(format!("({f}, {p}) is not a non-apex point of factor {f}")));
        }
    }
    let mut tuples: Vec<Vec<(usize, usize)>> = support.iter().map(|&e| vec![e]).collect();
    if with_apex_tuple {
        tuples.push(vec![]);
    }
    let n = tuples.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|a| (0..n).map(|b| if a == b { 0.0 } else { sup_distance(&factors, &tuples[a], &tuples[b]) }).collect())
        .collect();
    let space = UltraSpace::new(FiniteMetricSpace::new(rows)?)?;
    Ok(ProductUltra { factors, tuples, space })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::is_ultrametric;

    fn space(rows: Vec<Vec<f64>>) -> FiniteMetricSpace {
        FiniteMetricSpace::new(rows).unwrap()
    }

    #[test]
    fn singleton_apex_is_two_points() {
        let y = make_apex(&Block::singleton(3, 5.0)).unwrap();
        assert_eq!(y.len(), 2);
        assert_eq!(y.dist(0, 1), 5.0);
    }

    #[test]
    fn equilateral_block_gains_an_equidistant_apex() {
        let m = FiniteMetricSpace::from_fn(4, |_, _| 1.0).unwrap();
        let b = Block::fitted(&m, vec![0, 1, 2, 3], 1.0).unwrap();
        assert_eq!(b.distortion, 1.0);
        let y = make_apex(&b).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(y.dist(i, j), if i == j { 0.0 } else { 1.0 });
            }
        }
    }

    #[test]
    fn apex_rejects_wide_block() {
        // ultrametric with distances {0.4, 0.5, 0.5}: diameter 0.5 > 0.45
        let m = space(vec![vec![0.0, 0.4, 0.5], vec![0.4, 0.0, 0.5], vec![0.5, 0.5, 0.0]]);
        let b = Block::fitted(&m, vec![0, 1, 2], 0.45).unwrap();
        assert!(matches!(make_apex(&b), Err(Error::DiameterExceedsRadius { diameter, radius }) if diameter == 0.5 && radius == 0.45));
        // a metric block {0.3, 0.4, 0.5} fits to u = {0.3, 0.4, 0.4} scaled by 1.25
        let m = space(vec![vec![0.0, 0.3, 0.5], vec![0.3, 0.0, 0.4], vec![0.5, 0.4, 0.0]]);
        let b = Block::fitted(&m, vec![0, 1, 2], 0.45).unwrap();
        assert!((b.distortion - 1.25).abs() < 1e-15);
        assert!(make_apex(&b).is_err());
    }

    #[test]
    fn cross_distance_is_larger_radius() {
        let f = vec![make_apex(&Block::singleton(0, 2.0)).unwrap(), make_apex(&Block::singleton(1, 7.0)).unwrap()];
        let u = product_sup(f, &[(0, 0), (1, 0)], false).unwrap();
        assert_eq!(u.dist(0, 1), 7.0);
    }

    #[test]
    fn equal_radii_give_equilateral_product() {
        let f: Vec<ApexSpace> = (0..5).map(|i| make_apex(&Block::singleton(i, 3.0)).unwrap()).collect();
        let support: Vec<(usize, usize)> = (0..5).map(|i| (i, 0)).collect();
        let u = product_sup(f, &support, true).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(u.dist(i, j), if i == j { 0.0 } else { 3.0 });
            }
        }
        assert_eq!(u.labels().last().unwrap(), "apex");
    }

    #[test]
    fn within_and_across_factors() {
        let m = space(vec![vec![0.0, 0.5], vec![0.5, 0.0]]);
        let bi = Block::fitted(&m, vec![0, 1], 1.0).unwrap();
        let f = vec![make_apex(&bi).unwrap(), make_apex(&Block::singleton(9, 3.0)).unwrap()];
        let u = product_sup(f, &[(0, 0), (0, 1), (1, 0)], false).unwrap();
        assert_eq!(u.dist(0, 1), 0.5);
        assert_eq!(u.dist(0, 2), 3.0);
        assert_eq!(u.dist(1, 2), 3.0);
        assert!(is_ultrametric(&u, 0.0).holds);
    }

    #[test]
    fn product_argument_errors() {
        assert!(matches!(product_sup(vec![], &[], false), Err(Error::EmptyFactors)));
        let f = vec![make_apex(&Block::singleton(0, 1.0)).unwrap()];
        assert!(product_sup(f.clone(), &[(0, 1)], false).is_err());
        assert!(product_sup(f, &[(1, 0)], false).is_err());
    }
}
