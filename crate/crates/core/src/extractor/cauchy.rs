use super::{check_args, gap_threshold, Case, CaseParams, ExtractionResult, PointStream};
use crate::certificate::{Certificate, Claim};
use crate::error::Result;
use crate::metric::Metric;

/// Stand-in for the limit of a convergent sequence: the point whose largest
/// distance to the final quarter of the prefix is smallest (lowest index on
/// ties).
pub fn limit_proxy(stream: &impl Metric) -> Option<usize> {
    let n = stream.len();
    if n == 0 {
        return None;
    }
    let tail_start = n - n.div_ceil(4);
    let mut best: Option<(usize, f64)> = None;
    for p in 0..n {
        let spread = (tail_start..n).map(|q| stream.dist(p, q)).fold(0.0, f64::max);
        if best.is_none_or(|(_, s)| spread < s) {
            best = Some((p, spread));
        }
    }
    best.map(|(p, _)| p)
}

/// Greedy decay chain toward the limit `x_∞`.
///
/// Uses the designated limit when the stream has one, otherwise
/// [`limit_proxy`]. With `s_k = d(x_{i_k}, x_∞)`, accepts each later point
/// with `s_k ≤ δ s_{k−1}` where `δ = θ(ε)`, so the growth-chain analysis
/// applies with radii measured from the limit.
pub fn extract_cauchy(stream: &PointStream, epsilon: f64, target: usize) -> Result<ExtractionResult> {
    check_args(epsilon, target)?;
    let delta = gap_threshold(epsilon)?;
    let designated = stream.limit();
    let limit = designated.or_else(|| limit_proxy(stream));
    let mut params = CaseParams {
        theta: Some(delta),
        delta: Some(delta),
        limit,
        limit_designated: Some(designated.is_some()),
        ..Default::default()
    };
    let mut cert = Certificate::new();
    let mut indices = Vec::new();
    if let Some(lim) = limit {
        let mut last: Option<(usize, f64)> = None;
        for p in (0..stream.horizon()).filter(|&p| p != lim) {
            if indices.len() >= target {
                break;
            }
            let s = stream.dist(p, lim);
            // zero distance to the limit means the limit is in the data twice
            if s <= 0.0 {
                continue;
            }
            let accept = last.is_none_or(|(_, prev)| s <= delta * prev);
            if accept {
                if let Some((q, prev)) = last {
                    let claim = Claim::Growth { anchor: vec![lim], inner: vec![p], outer: vec![q], factor: delta };
                    cert.check("decay", claim, stream);
                    params.ratios.push(s / prev);
                }
                indices.push(p);
                params.radii.push(s);
                last = Some((p, s));
            }
        }
    }
    Ok(ExtractionResult::finish(Case::Cauchy, indices, epsilon, target, stream.horizon(), params, cert))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halving(n: usize) -> PointStream {
        let mut xs = vec![0.0];
        xs.extend((1..=n).map(|i| 0.5f64.powi(i as i32)));
        PointStream::from_line(xs).with_limit(0).unwrap()
    }

    #[test]
    fn halving_needs_spacing_four() {
        let r = extract_cauchy(&halving(40), 1.0, 4).unwrap();
        assert_eq!(r.case, Case::Cauchy);
        // index k holds 2^-k
        assert_eq!(r.indices, vec![1, 5, 9, 13]);
        let theta = gap_threshold(1.0).unwrap();
        assert!(0.5f64.powi(4) <= theta && 0.5f64.powi(3) > theta);
        assert!(r.certificate.all_hold());
        assert!(r.certificate.reverify(&halving(40)).is_empty());
    }

    #[test]
    fn harmonic_subsequence() {
        let mut xs = vec![0.0];
        xs.extend((1..=200).map(|i| 1.0 / i as f64));
        let s = PointStream::from_line(xs).with_limit(0).unwrap();
        let r = extract_cauchy(&s, 1.0, 3).unwrap();
        assert_eq!(r.indices, vec![1, 9, 81]);
    }

    #[test]
    fn proxy_when_limit_not_designated() {
        // accumulating at 3.0 from above; the last points sit closest to it
        let xs: Vec<f64> = (0..40).map(|i| 3.0 + 0.5f64.powi(i)).collect();
        let s = PointStream::from_line(xs);
        let proxy = limit_proxy(&s).unwrap();
        assert!(proxy >= 30);
        let r = extract_cauchy(&s, 1.0, 3).unwrap();
        assert_eq!(r.params.limit, Some(proxy));
        assert_eq!(r.params.limit_designated, Some(false));
        assert!(!r.indices.contains(&proxy));
        assert!(r.certificate.all_hold());
    }

    #[test]
    fn unbounded_stream_is_undecided() {
        let s = PointStream::from_line((1..=30).map(|i| 10f64.powi(i)).collect());
        assert_eq!(extract_cauchy(&s, 1.0, 4).unwrap().case, Case::Undecided);
    }
}
