use nalgebra::SymmetricEigen;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ultraembed::builder::{build_embedding, plan_blocks, plan_singletons};
use ultraembed::cli::{verify_report, EmbedArgs, ModeArg, RunArgs};
use ultraembed::extractor::generators::GeneratorConfig;
use ultraembed::extractor::{cluster_blocks, extract, Case, PointStream};
use ultraembed::hilbert::{coordinates, coordinates_of, gram_from_ultrametric};
use ultraembed::metric::{subdominant_ultrametric, tree_from_matrix, FiniteMetricSpace, Metric, UltraSpace};

fn random_points(seed: u64, n: usize, dim: usize) -> FiniteMetricSpace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
    FiniteMetricSpace::from_fn(n, |i, j| pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()).unwrap()
}

#[test]
fn single_linkage_ultrametric_on_50_points_is_psd() {
    let u = subdominant_ultrametric(&random_points(50, 50, 3));
    let g = gram_from_ultrametric(&u, 0).unwrap();
    let scale = g.norm();
    let min = SymmetricEigen::new(g).eigenvalues.iter().fold(f64::INFINITY, |a, &l| a.min(l));
    assert!(min >= -1e-9 * scale, "min eigenvalue {min}");
}

#[test]
fn tree_round_trip_coordinates_to_1e12() {
    for n in 2..=20 {
        let u = subdominant_ultrametric(&random_points(n as u64, n, 2)).into_space();
        let back = UltraSpace::from_tree(tree_from_matrix(&u).unwrap()).unwrap();
        let e = coordinates(&back).unwrap();
        assert_eq!(e.dimension(), n - 1);
        for i in 0..n {
            for j in i + 1..n {
                assert!((e.distance(i, j) - u.dist(i, j)).abs() <= 1e-12 * u.dist(i, j));
            }
        }
    }
}

#[test]
fn regular_simplex_from_equilateral_input() {
    let m = FiniteMetricSpace::from_fn(7, |_, _| 1.0).unwrap();
    let e = coordinates_of(&m).unwrap();
    assert_eq!(e.dimension(), 6);
    for i in 0..7 {
        for j in i + 1..7 {
            assert!((e.distance(i, j) - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn powers_of_ten_end_to_end() {
    let stream = GeneratorConfig::Powers { n: 12, base: 10.0 }.stream().unwrap();
    let result = extract(&stream, 1.0, 8).unwrap();
    assert_eq!(result.case, Case::Unbounded);
    let prefix = stream.prefix_space().unwrap();
    let plan = plan_singletons(&prefix, &result).unwrap();
    let (report, product) = build_embedding(&prefix, &plan).unwrap();
    assert!(report.within_bound && report.certificate.all_hold());
    assert!(report.distortion <= 2.0);
    assert_eq!(product.space().len(), report.image.len());
    let json = serde_json::to_value(&report).unwrap();
    let v = verify_report(&prefix, &json).unwrap();
    assert!(v.agrees && v.recomputed_pass);
}

#[test]
fn block_plan_on_separated_clusters() {
    let g = GeneratorConfig::TwoClusters { clusters: 5, per_cluster: 6, separation: 1.0, spread: 0.01, seed: 3 };
    let stream = g.stream().unwrap();
    let (r, code) = ultraembed::cli::pipeline_report(
        &stream,
        "two_clusters",
        &RunArgs { epsilon: 0.5, target: 2 },
        &EmbedArgs { mode: ModeArg::Block, blocks: Some(5) },
        true,
    )
    .unwrap();
    assert_eq!(code, 0);
    assert!(r.distortion.unwrap() <= 2.5 * (1.0 + 1e-9));
    assert!(r.hilbert.is_some());

    let prefix = stream.prefix_space().unwrap();
    let family = cluster_blocks(&prefix, 5).unwrap();
    assert_eq!(family.len(), 5);
    assert_eq!(family.points(), 30);
    let plan = plan_blocks(&prefix, &family, 0.5, None, None).unwrap();
    let (report, _) = build_embedding(&prefix, &plan).unwrap();
    assert_eq!(report.distortion.to_bits(), r.distortion.unwrap().to_bits());
}

#[test]
fn line_stream_is_a_decreasing_chain() {
    // 1, 1/4, 1/16, ... converges to 0, which is appended as the limit
    let xs: Vec<f64> = (0..10).map(|i| 4f64.powi(-i)).chain([0.0]).collect();
    let stream = PointStream::from_line(xs).with_limit(10).unwrap();
    let r = extract(&stream, 1.0, 3).unwrap();
    assert!(r.is_decided());
}
