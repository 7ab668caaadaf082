use super::{check_args, gap_threshold, Case, CaseParams, ExtractionResult, PointStream};
use crate::certificate::{Certificate, Claim};
use crate::error::Result;
use crate::metric::Metric;

/// Greedy growth chain around the first point.
///
/// With basepoint `b = x_{i_1}` and `R_k = d(x_{i_k}, b)`, accepts each later
/// point whose radius satisfies `R_{k−1} ≤ θ(ε) R_k`. The second point is
/// accepted unconditionally: for singleton blocks the absolute lower bound on
/// `R_2` only has to dominate block diameters, which are zero.
pub fn extract_unbounded(stream: &PointStream, epsilon: f64, target: usize) -> Result<ExtractionResult> {
    check_args(epsilon, target)?;
    let theta = gap_threshold(epsilon)?;
    let pool: Vec<usize> = (0..stream.horizon()).filter(|&i| Some(i) != stream.limit()).collect();
    let mut params = CaseParams { theta: Some(theta), ..Default::default() };
    let mut cert = Certificate::new();
    let Some(&base) = pool.first() else {
        return Ok(ExtractionResult::finish(Case::Unbounded, vec![], epsilon, target, stream.horizon(), params, cert));
    };

    let mut indices = vec![base];
    let mut last: Option<(usize, f64)> = None;
    for &p in &pool[1..] {
        if indices.len() >= target {
            break;
        }
        let r = stream.dist(base, p);
        let accept = match last {
            None => r > 0.0,
            Some((_, prev)) => prev <= theta * r,
        };
        if accept {
            if let Some((q, prev)) = last {
                let claim = Claim::Growth { anchor: vec![base], inner: vec![q], outer: vec![p], factor: theta };
                cert.check("decay_chain", claim, stream);
                params.ratios.push(prev / r);
            }
            indices.push(p);
            params.radii.push(r);
            last = Some((p, r));
        }
    }
    Ok(ExtractionResult::finish(Case::Unbounded, indices, epsilon, target, stream.horizon(), params, cert))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: Vec<f64>) -> PointStream {
        PointStream::from_line(xs)
    }

    #[test]
    fn powers_of_ten_are_consecutive() {
        let s = line((1..=6).map(|i| 10f64.powi(i)).collect());
        let r = extract_unbounded(&s, 1.0, 4).unwrap();
        assert_eq!(r.case, Case::Unbounded);
        assert_eq!(r.indices, vec![0, 1, 2, 3]);
        // R = 90, 990, 9990; ratios 90/990 and 990/9990, both below θ(1)
        assert_eq!(r.params.radii, vec![90.0, 990.0, 9990.0]);
        assert!(r.params.ratios.iter().all(|&q| q <= 0.1));
        assert!(r.certificate.all_hold());
        assert!(r.certificate.reverify(&s).is_empty());
    }

    #[test]
    fn unit_steps_give_geometric_indices() {
        // x_i = i starting at 1; R(i) = i - 1. Greedy: R = 1, then R ≥ 1/θ, ...
        let s = line((1..=1000).map(|i| i as f64).collect());
        let r = extract_unbounded(&s, 1.0, 5).unwrap();
        let theta = gap_threshold(1.0).unwrap();
        let values: Vec<usize> = r.indices.iter().map(|&i| i + 1).collect();
        assert_eq!(values, vec![1, 2, 10, 82, 722]);
        for w in r.params.radii.windows(2) {
            assert!(w[0] <= theta * w[1]);
        }
        // the step before each accepted point would have failed
        assert!(1.0 > theta * 8.0 && 9.0 > theta * 80.0 && 81.0 > theta * 720.0);
    }

    #[test]
    fn bounded_stream_is_undecided() {
        let s = line((0..200).map(|i| (i as f64 * 0.37).sin() + 2.0 * i as f64 / 200.0).collect());
        let r = extract_unbounded(&s, 1.0, 8).unwrap();
        assert_eq!(r.case, Case::Undecided);
        assert!(r.len() < 8);
    }

    #[test]
    fn limit_point_is_skipped() {
        let s = line(vec![0.0, 1.0, 100.0, 10_000.0]).with_limit(0).unwrap();
        let r = extract_unbounded(&s, 1.0, 3).unwrap();
        assert_eq!(r.indices, vec![1, 2, 3]);
    }
}
