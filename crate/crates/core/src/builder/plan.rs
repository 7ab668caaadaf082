use serde::{Deserialize, Serialize};

use super::{make_apex, product_sup, Block, ProductUltra};
use crate::certificate::{Certificate, Claim};
use crate::error::{Error, Result};
use crate::extractor::{gap_threshold, limit_proxy, BlockFamily, Case, ExtractionResult};
use crate::metric::{distortion, set_distance, Metric, DEFAULT_RELATIVE_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Singleton,
    Block,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Singleton => "singleton",
            Mode::Block => "block",
        })
    }
}

/// Everything the builder needs: the consumed basepoint block `A_1`, the
/// embedded blocks `A_2, A_3, …` with apex radii, and the inequalities that
/// justified the selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingPlan {
    pub case: Case,
    pub mode: Mode,
    pub epsilon: f64,
    /// `ε′` used for the gap chain: `ε` for singletons, the share of the
    /// `2+ε` budget left after the internal embeddings for blocks.
    pub effective_epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
    pub consumed: Vec<usize>,
    pub blocks: Vec<Block>,
    /// Blocks left out because their internal distortion exceeds `2+ε`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<Vec<usize>>,
    pub certificate: Certificate,
}

impl EmbeddingPlan {
    /// A plan assembled by hand, with an empty certificate.
    pub fn from_blocks(
        case: Case,
        mode: Mode,
        epsilon: f64,
        consumed: Vec<usize>,
        limit: Option<usize>,
        blocks: Vec<Block>,
    ) -> Self {
        EmbeddingPlan {
            case,
            mode,
            epsilon,
            effective_epsilon: epsilon,
            limit,
            consumed,
            blocks,
            skipped: vec![],
            certificate: Certificate::new(),
        }
    }

    /// `1+ε` for singleton blocks, `2+ε` otherwise.
    pub fn bound(&self) -> f64 {
        match self.mode {
            Mode::Singleton => 1.0 + self.epsilon,
            Mode::Block => 2.0 + self.epsilon,
        }
    }

    /// Ambient indices of the embedded points, block by block.
    pub fn image(&self) -> Vec<usize> {
        self.blocks.iter().flat_map(|b| b.indices.iter().copied()).collect()
    }

    fn undecided(mode: Mode, epsilon: f64) -> Self {
        Self::from_blocks(Case::Undecided, mode, epsilon, vec![], None, vec![])
    }
}

fn require_certificate(cert: &Certificate, metric: &impl Metric) -> Result<()> {
    if let Some(d) = cert.reverify(metric).first() {
        return Err(Error::MissingCertificate(format!(
            "entry {} ({}) recomputes to {:?}, stored {:?}",
            d.entry, d.label, d.recomputed, d.stored
        )));
    }
    if let Some((k, e)) = cert.failures().next() {
        return Err(Error::MissingCertificate(format!("entry {k} ({}) fails: {} > {}", e.label, e.lhs, e.rhs)));
    }
    Ok(())
}

/// Singleton blocks from a certified extraction. The first selected point is
/// the consumed block `A_1`; radii are `R_k = d(x_k, x_1)` (unbounded), `α`
/// (equilateral) or `s_k = d(x_k, x_∞)` (Cauchy).
pub fn plan_singletons(metric: &impl Metric, result: &ExtractionResult) -> Result<EmbeddingPlan> {
    if !result.is_decided() {
        return Err(Error::MissingCertificate(format!(
            "extraction is undecided ({} of {} points)",
            result.len(),
            result.target
        )));
    }
    if result.len() < 2 {
        return Err(Error::MissingCertificate("fewer than two selected points".into()));
    }
    require_certificate(&result.certificate, metric)?;
    let base = result.indices[0];
    let radius = |x: usize| -> Result<f64> {
        match result.case {
            Case::Unbounded => Ok(metric.dist(x, base)),
            Case::Equilateral => result
                .params
                .alpha
                .ok_or_else(|| Error::MissingCertificate("equilateral result without alpha".into())),
            Case::Cauchy => {
                let lim = result
                    .params
                    .limit
                    .ok_or_else(|| Error::MissingCertificate("Cauchy result without a limit".into()))?;
                Ok(metric.dist(x, lim))
            }
            Case::Undecided => unreachable!("checked above"),
        }
    };
    let blocks = result.indices[1..]
        .iter()
        .map(|&x| Ok(Block::singleton(x, radius(x)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut plan =
        EmbeddingPlan::from_blocks(result.case, Mode::Singleton, result.epsilon, vec![base], None, blocks);
    if result.case == Case::Cauchy {
        plan.limit = result.params.limit;
    }
    plan.certificate = result.certificate.clone();
    Ok(plan)
}

/// `(s, ε′)` with `s = (2+ε)/max(D_int, √(2+ε))` and `ε′ = s² − 1`: a gap
/// chain at `ε′` spreads cross ratios by at most `s` each way, and
/// `max(D_int, s) · s ≤ 2+ε`.
fn budget(epsilon: f64, internal: f64) -> (f64, f64) {
    let total = 2.0 + epsilon;
    let s = total / internal.max(total.sqrt());
    (s, s * s - 1.0)
}

fn cross_extremes(metric: &impl Metric, a: &[usize], b: &[usize]) -> ((f64, (usize, usize)), (f64, (usize, usize))) {
    let mut lo = (f64::INFINITY, (0, 0));
    let mut hi = (f64::NEG_INFINITY, (0, 0));
    for &x in a {
        for &y in b {
            let d = metric.dist(x, y);
            let pair = (x.min(y), x.max(y));
            if d < lo.0 {
                lo = (d, pair);
            }
            if d > hi.0 {
                hi = (d, pair);
            }
        }
    }
    (lo, hi)
}

fn plan_equilateral_blocks(metric: &impl Metric, kept: &[Block], epsilon: f64, internal: f64) -> Option<EmbeddingPlan> {
    let total = 2.0 + epsilon;
    let mut chosen: Vec<&Block> = Vec::new();
    let mut lo = (f64::INFINITY, (0, 0));
    let mut hi = (f64::NEG_INFINITY, (0, 0));
    let mut widest = 0.0f64;
    for b in kept {
        let (mut l, mut h, w) = (lo, hi, widest.max(b.image_diameter()));
        for c in &chosen {
            let (cl, ch) = cross_extremes(metric, &c.indices, &b.indices);
            if cl.0 < l.0 {
                l = cl;
            }
            if ch.0 > h.0 {
                h = ch;
            }
        }
        if chosen.is_empty() || (h.0 * internal <= total * l.0 && w <= l.0) {
            chosen.push(b);
            (lo, hi, widest) = (l, h, w);
        }
    }
    if chosen.len() < 2 {
        return None;
    }
    let alpha = lo.0;
    let mut cert = Certificate::new();
    cert.scalar("equal_band", hi.0 * internal, total * alpha);
    cert.check("equal_band", Claim::AtLeast { u: lo.1 .0, v: lo.1 .1, bound: alpha }, metric);
    cert.check("equal_band", Claim::AtMost { u: hi.1 .0, v: hi.1 .1, bound: hi.0 }, metric);
    for b in &chosen {
        cert.scalar("diam", b.image_diameter(), alpha);
    }
    let blocks = chosen[1..].iter().map(|b| (*b).clone().with_radius(alpha)).collect();
    let mut plan =
        EmbeddingPlan::from_blocks(Case::Equilateral, Mode::Block, epsilon, chosen[0].indices.clone(), None, blocks);
    plan.effective_epsilon = budget(epsilon, internal).1;
    plan.certificate = cert;
    Some(plan)
}

fn plan_unbounded_blocks(metric: &impl Metric, kept: &[Block], epsilon: f64, eps_gap: f64) -> Option<EmbeddingPlan> {
    let theta = gap_threshold(eps_gap).ok()?;
    let anchor = kept.iter().min_by_key(|b| b.indices[0])?;
    let unit = kept.iter().map(Block::image_diameter).fold(0.0, f64::max);
    let mut rest: Vec<(f64, &Block)> = kept
        .iter()
        .filter(|b| b.indices[0] != anchor.indices[0])
        .map(|b| (set_distance(metric, &anchor.indices, &b.indices), b))
        .collect();
    rest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.indices[0].cmp(&b.1.indices[0])));

    let mut cert = Certificate::new();
    let mut chain: Vec<(f64, &Block)> = Vec::new();
    for (r, b) in rest {
        let ok = match chain.last() {
            None => unit <= theta * r,
            Some(&(prev, _)) => prev <= theta * r,
        };
        if ok {
            match chain.last() {
                None => {
                    cert.scalar("radius_gap", unit, theta * r);
                }
                Some(&(_, p)) => {
                    let claim = Claim::Growth {
                        anchor: anchor.indices.clone(),
                        inner: p.indices.clone(),
                        outer: b.indices.clone(),
                        factor: theta,
                    };
                    cert.check("decay_chain", claim, metric);
                }
            }
            chain.push((r, b));
        }
    }
    if chain.is_empty() {
        return None;
    }
    let blocks = chain.into_iter().map(|(r, b)| b.clone().with_radius(r)).collect();
    let mut plan =
        EmbeddingPlan::from_blocks(Case::Unbounded, Mode::Block, epsilon, anchor.indices.clone(), None, blocks);
    plan.effective_epsilon = eps_gap;
    plan.certificate = cert;
    Some(plan)
}

fn plan_cauchy_blocks(
    metric: &impl Metric,
    kept: &[Block],
    epsilon: f64,
    eps_gap: f64,
    limit: Option<usize>,
) -> Option<EmbeddingPlan> {
    let theta = gap_threshold(eps_gap).ok()?;
    let lim = limit.or_else(|| limit_proxy(metric))?;
    let mut cand: Vec<(f64, &Block)> = kept
        .iter()
        .filter(|b| !b.indices.contains(&lim))
        .map(|b| (set_distance(metric, &[lim], &b.indices), b))
        .collect();
    cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.indices[0].cmp(&b.1.indices[0])));

    let mut cert = Certificate::new();
    let mut chain: Vec<(f64, &Block)> = Vec::new();
    for (s, b) in cand {
        let fits = b.image_diameter() <= theta * s;
        let decays = chain.last().is_none_or(|&(prev, _)| s <= theta * prev);
        if fits && decays {
            cert.scalar("diam", b.image_diameter(), theta * s);
            if let Some(&(_, p)) = chain.last() {
                let claim =
                    Claim::Growth { anchor: vec![lim], inner: b.indices.clone(), outer: p.indices.clone(), factor: theta };
                cert.check("decay", claim, metric);
            }
            chain.push((s, b));
        }
    }
    if chain.len() < 2 {
        return None;
    }
    let consumed = chain[0].1.indices.clone();
    let blocks = chain[1..].iter().map(|&(s, b)| b.clone().with_radius(s)).collect();
    let mut plan = EmbeddingPlan::from_blocks(Case::Cauchy, Mode::Block, epsilon, consumed, Some(lim), blocks);
    plan.effective_epsilon = eps_gap;
    plan.certificate = cert;
    Some(plan)
}

/// Block-mode plan over a family of disjoint blocks.
///
/// Every block gets the internal embedding `ρ_i = D_i · u_i` from its
/// subdominant fit; blocks with `D_i > 2+ε` are skipped. With
/// `D_int = max D_i`, the three selections are:
///
/// * equilateral: blocks taken in family order while every cross distance lies
///   in `[lo, hi]` with `hi / lo ≤ (2+ε)/D_int` and every image diameter is at
///   most `lo`; all radii equal `lo`.
/// * unbounded: the block holding the smallest index is `A_1`; the others, by
///   increasing `R = dist(A_1, B)`, form a chain with
///   `max diam ≤ θ(ε′) R_2` and `R_{k−1} ≤ θ(ε′) R_k`.
/// * Cauchy: blocks by decreasing `s = dist(x_∞, B)` with
///   `diam ≤ θ(ε′) s` and `s_k ≤ θ(ε′) s_{k−1}`.
///
/// `case = None` keeps the selection embedding the most blocks, ties in the
/// order unbounded, equilateral, Cauchy. No feasible selection gives an
/// `Undecided` plan.
pub fn plan_blocks(
    metric: &impl Metric,
    family: &BlockFamily,
    epsilon: f64,
    case: Option<Case>,
    limit: Option<usize>,
) -> Result<EmbeddingPlan> {
    crate::extractor::gap_threshold(epsilon)?;
    let mut kept = Vec::new();
    let mut skipped = Vec::new();
    for b in &family.blocks {
        let fitted = Block::fitted(metric, b.clone(), 0.0)?;
        if fitted.distortion <= 2.0 + epsilon {
            kept.push(fitted);
        } else {
            skipped.push(b.clone());
        }
    }
    let internal = kept.iter().map(|b| b.distortion).fold(1.0, f64::max);
    let (_, eps_gap) = budget(epsilon, internal);

    let wanted = |c: Case| case.is_none_or(|w| w == c);
    let mut candidates = Vec::new();
    if wanted(Case::Unbounded) {
        candidates.extend(plan_unbounded_blocks(metric, &kept, epsilon, eps_gap));
    }
    if wanted(Case::Equilateral) {
        candidates.extend(plan_equilateral_blocks(metric, &kept, epsilon, internal));
    }
    if wanted(Case::Cauchy) {
        candidates.extend(plan_cauchy_blocks(metric, &kept, epsilon, eps_gap, limit));
    }
    let mut best: Option<EmbeddingPlan> = None;
    for p in candidates {
        if best.as_ref().is_none_or(|b| p.blocks.len() > b.blocks.len()) {
            best = Some(p);
        }
    }
    let mut plan = best.unwrap_or_else(|| EmbeddingPlan::undecided(Mode::Block, epsilon));
    plan.skipped = skipped;
    Ok(plan)
}

/// Per-pair record in an embedding report; `i`, `j` are ambient indices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub i: usize,
    pub j: usize,
    pub d: f64,
    pub rho: f64,
    /// `rho / d`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub case: Case,
    pub mode: Mode,
    pub epsilon: f64,
    pub effective_epsilon: f64,
    pub bound: f64,
    /// Smallest ratio `ρ/d`.
    pub scale: f64,
    pub distortion: f64,
    pub within_bound: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_lower: Option<PairRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_upper: Option<PairRecord>,
    pub consumed: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
    pub image: Vec<usize>,
    /// Block position of each image point.
    pub block_of: Vec<usize>,
    pub radii: Vec<f64>,
    pub pairs: Vec<PairRecord>,
    pub certificate: Certificate,
}

impl EmbeddingReport {
    pub fn ensure_bound(&self) -> Result<()> {
        if self.within_bound {
            Ok(())
        } else {
            Err(Error::BoundViolation { distortion: self.distortion, bound: self.bound })
        }
    }
}

struct View<'a, M> {
    metric: &'a M,
    indices: &'a [usize],
}

impl<M: Metric> Metric for View<'_, M> {
    fn len(&self) -> usize {
        self.indices.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.metric.dist(self.indices[i], self.indices[j])
    }
}

/// Two-sided check `ρ/√(1+ε′) ≤ d ≤ √(1+ε′) ρ` on every cross-block pair,
/// plus the radius chain (`R_{k−1} ≤ θ R_k` measured from `A_1`, or
/// `s_k ≤ θ s_{k−1}` measured from the limit). Meant for unbounded and Cauchy
/// plans; failures stay in the certificate with their pair as witness.
pub fn verify_case1_bounds(metric: &impl Metric, plan: &EmbeddingPlan) -> Certificate {
    let mut cert = Certificate::new();
    let a = (1.0 + plan.effective_epsilon).sqrt();
    if let Ok(theta) = gap_threshold(plan.effective_epsilon) {
        for w in plan.blocks.windows(2) {
            match (plan.case, plan.limit) {
                (Case::Unbounded, _) => {
                    let claim = Claim::Growth {
                        anchor: plan.consumed.clone(),
                        inner: w[0].indices.clone(),
                        outer: w[1].indices.clone(),
                        factor: theta,
                    };
                    cert.check("decay_chain", claim, metric);
                }
                (Case::Cauchy, Some(lim)) => {
                    let claim = Claim::Growth {
                        anchor: vec![lim],
                        inner: w[1].indices.clone(),
                        outer: w[0].indices.clone(),
                        factor: theta,
                    };
                    cert.check("decay", claim, metric);
                }
                _ => {}
            }
        }
    }
    for (p, bp) in plan.blocks.iter().enumerate() {
        for bq in &plan.blocks[p + 1..] {
            let rho = bp.radius.max(bq.radius);
            for &x in &bp.indices {
                for &y in &bq.indices {
                    let (u, v) = (x.min(y), x.max(y));
                    cert.check("lower", Claim::AtLeast { u, v, bound: rho / a }, metric);
                    cert.check("upper", Claim::AtMost { u, v, bound: a * rho }, metric);
                }
            }
        }
    }
    cert
}

/// Builds the apex spaces and the product for `plan`, maps every image point
/// to its tuple and measures the distortion against `metric`. The bound is
/// evaluated (`within_bound`, relative tolerance `1e-9`) but not enforced.
pub fn build_embedding(metric: &impl Metric, plan: &EmbeddingPlan) -> Result<(EmbeddingReport, ProductUltra)> {
    if plan.case == Case::Undecided || plan.blocks.is_empty() {
        return Err(Error::MissingCertificate("plan embeds no blocks".into()));
    }
    require_certificate(&plan.certificate, metric)?;
    let mut cert = plan.certificate.clone();
    if plan.mode == Mode::Block {
        for b in &plan.blocks {
            for x in 0..b.len() {
                for y in x + 1..b.len() {
                    let d = metric.dist(b.indices[x], b.indices[y]);
                    let rho = b.internal.dist(x, y);
                    cert.scalar("block_fit", d, rho);
                    cert.scalar("block_fit", rho, b.distortion * d);
                }
            }
        }
    }
    if plan.mode == Mode::Singleton && matches!(plan.case, Case::Unbounded | Case::Cauchy) {
        cert.extend(verify_case1_bounds(metric, plan));
    }

    let factors = plan.blocks.iter().map(make_apex).collect::<Result<Vec<_>>>()?;
    let mut support = Vec::new();
    let mut block_of = Vec::new();
    for (f, b) in plan.blocks.iter().enumerate() {
        for p in 0..b.len() {
            support.push((f, p));
            block_of.push(f);
        }
    }
    let product = product_sup(factors, &support, false)?;
    let image = plan.image();
    let view = View { metric, indices: &image };
    let identity: Vec<usize> = (0..image.len()).collect();
    let report = distortion(&view, &product, &identity)?;

    let record = |a: usize, b: usize| {
        let d = view.dist(a, b);
        let rho = product.dist(a, b);
        PairRecord { i: image[a], j: image[b], d, rho, ratio: rho / d }
    };
    let mut pairs = Vec::with_capacity(image.len() * image.len().saturating_sub(1) / 2);
    for a in 0..image.len() {
        for b in a + 1..image.len() {
            pairs.push(record(a, b));
        }
    }
    let bound = plan.bound();
    let within_bound = report.distortion <= bound * (1.0 + DEFAULT_RELATIVE_TOLERANCE);
    Ok((
        EmbeddingReport {
            case: plan.case,
            mode: plan.mode,
            epsilon: plan.epsilon,
            effective_epsilon: plan.effective_epsilon,
            bound,
            scale: report.scale,
            distortion: report.distortion,
            within_bound,
            worst_lower: report.worst_lower.map(|(a, b)| record(a, b)),
            worst_upper: report.worst_upper.map(|(a, b)| record(a, b)),
            consumed: plan.consumed.clone(),
            limit: plan.limit,
            image,
            block_of,
            radii: plan.blocks.iter().map(|b| b.radius).collect(),
            pairs,
            certificate: cert,
        },
        product,
    ))
}

/// [`build_embedding`] followed by a hard check of `D ≤ 1+ε` (singletons) or
/// `D ≤ 2+ε` (blocks).
pub fn embed(metric: &impl Metric, plan: &EmbeddingPlan) -> Result<EmbeddingReport> {
    let (report, _) = build_embedding(metric, plan)?;
    report.ensure_bound()?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractor::{extract, extract_unbounded, PointStream};
    use crate::metric::FiniteMetricSpace;

    fn powers(n: usize) -> PointStream {
        PointStream::from_line((1..=n).map(|i| 10f64.powi(i as i32)).collect())
    }

    #[test]
    fn powers_of_ten_embed_within_two() {
        let s = powers(12);
        let r = extract_unbounded(&s, 1.0, 4).unwrap();
        let plan = plan_singletons(&s, &r).unwrap();
        assert_eq!(plan.consumed, vec![0]);
        let rep = embed(&s, &plan).unwrap();
        assert!(rep.distortion <= 2.0);
        assert_eq!(rep.image, vec![1, 2, 3]);
        assert_eq!(rep.radii, vec![90.0, 990.0, 9990.0]);
        let p23 = rep.pairs.iter().find(|p| (p.i, p.j) == (1, 2)).unwrap();
        assert_eq!((p23.d, p23.rho), (900.0, 990.0));
        assert_eq!(p23.ratio, 1.1);
        // the largest ratio sits on the next pair: 9990 / 9000
        assert_eq!(rep.worst_upper.map(|p| (p.i, p.j)), Some((2, 3)));
        assert!(rep.certificate.all_hold());
    }

    #[test]
    fn two_embedded_points_have_one_pair() {
        let s = powers(6);
        let r = extract_unbounded(&s, 1.0, 3).unwrap();
        let rep = embed(&s, &plan_singletons(&s, &r).unwrap()).unwrap();
        let w = rep.worst_upper.unwrap();
        assert_eq!((w.i, w.j, w.ratio), (1, 2, 1.1));
        assert_eq!(rep.distortion, 1.0);
    }

    #[test]
    fn equilateral_singletons_are_isometric() {
        let m = FiniteMetricSpace::from_fn(6, |_, _| 2.5).unwrap();
        let s = PointStream::from_matrix(m);
        let r = extract(&s, 0.5, 6).unwrap();
        let rep = embed(&s, &plan_singletons(&s, &r).unwrap()).unwrap();
        assert_eq!(rep.case, Case::Equilateral);
        assert_eq!(rep.distortion, 1.0);
        assert_eq!(rep.scale, 1.0);
    }

    #[test]
    fn undecided_and_tampered_inputs_are_refused() {
        let s = powers(3);
        let r = extract_unbounded(&s, 1.0, 8).unwrap();
        assert!(matches!(plan_singletons(&s, &r), Err(Error::MissingCertificate(_))));
        let s = powers(12);
        let r = extract_unbounded(&s, 1.0, 4).unwrap();
        let other = PointStream::from_line((1..=12).map(|i| 11f64.powi(i as i32)).collect());
        assert!(matches!(plan_singletons(&other, &r), Err(Error::MissingCertificate(_))));
    }

    fn singleton_chain(xs: Vec<f64>) -> (PointStream, EmbeddingPlan) {
        let s = PointStream::from_line(xs);
        let blocks = (1..s.horizon()).map(|k| Block::singleton(k, s.dist(0, k))).collect();
        let plan = EmbeddingPlan::from_blocks(Case::Unbounded, Mode::Singleton, 1.0, vec![0], None, blocks);
        (s, plan)
    }

    #[test]
    fn case1_bounds_hold_on_powers() {
        let s = powers(6);
        let blocks = (1..6).map(|k| Block::singleton(k, s.dist(0, k))).collect();
        let plan = EmbeddingPlan::from_blocks(Case::Unbounded, Mode::Singleton, 1.0, vec![0], None, blocks);
        let c = verify_case1_bounds(&s, &plan);
        assert!(c.all_hold());
        assert!(c.entries.iter().all(|e| e.margin > 0.0));
    }

    #[test]
    fn chain_violation_is_witnessed() {
        // R = 1, 5: ratio 0.2 breaks the chain but not the per-pair bound at ε = 1
        let (s, plan) = singleton_chain(vec![0.0, 1.0, 5.0]);
        let c = verify_case1_bounds(&s, &plan);
        let failed: Vec<&str> = c.failures().map(|(_, e)| e.label.as_str()).collect();
        assert_eq!(failed, vec!["decay_chain"]);
        // R = 1, 2.5: ratio 0.4 and d = 1.5 < 2.5/√2
        let (s, plan) = singleton_chain(vec![0.0, 1.0, 2.5]);
        let c = verify_case1_bounds(&s, &plan);
        let failed: Vec<_> = c.failures().map(|(_, e)| (e.label.as_str(), e.claim.clone())).collect();
        assert_eq!(failed.len(), 2);
        assert!(matches!(failed[1], ("lower", Claim::AtLeast { u: 1, v: 2, .. })));
    }

    #[test]
    fn two_blocks_reduce_to_one_comparison() {
        let (s, plan) = singleton_chain(vec![0.0, 1.0]);
        let c = verify_case1_bounds(&s, &plan);
        assert!(c.is_empty());
        let (s, plan) = singleton_chain(vec![0.0, 1.0, 20.0]);
        assert_eq!(verify_case1_bounds(&s, &plan).len(), 3);
    }

    /// Three 4-point unit paths, every cross distance 10.
    fn three_paths() -> FiniteMetricSpace {
        FiniteMetricSpace::from_fn(12, |i, j| {
            if i / 4 == j / 4 {
                (i as f64 - j as f64).abs()
            } else {
                10.0
            }
        })
        .unwrap()
    }

    #[test]
    fn block_mode_worst_pair_inside_a_block() {
        let m = three_paths();
        let fam = BlockFamily {
            blocks: vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7], vec![8, 9, 10, 11]],
            diameters: vec![3.0; 3],
        };
        // internal distortion of a 4-point unit path is exactly 3 = 2 + ε
        let plan = plan_blocks(&m, &fam, 1.0, None, None).unwrap();
        assert_eq!(plan.case, Case::Equilateral);
        assert_eq!(plan.blocks.len(), 2);
        assert!(plan.blocks.iter().all(|b| b.distortion == 3.0));
        let rep = embed(&m, &plan).unwrap();
        assert_eq!(rep.distortion, 3.0);
        let w = rep.worst_upper.unwrap();
        assert_eq!(w.i / 4, w.j / 4);
        assert!(rep.certificate.all_hold());
    }

    #[test]
    fn block_mode_skips_wide_blocks() {
        let m = three_paths();
        let fam = BlockFamily {
            blocks: vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7], vec![8, 9, 10, 11]],
            diameters: vec![3.0; 3],
        };
        let plan = plan_blocks(&m, &fam, 0.5, None, None).unwrap();
        assert_eq!(plan.skipped.len(), 3);
        assert_eq!(plan.case, Case::Undecided);
        assert!(matches!(embed(&m, &plan), Err(Error::MissingCertificate(_))));
    }

    #[test]
    fn unbounded_blocks_on_the_line() {
        // pairs of points at 0, 100, 10^4, 10^6, each pair of width 1
        let xs: Vec<f64> = [0.0, 1e2, 1e4, 1e6].iter().flat_map(|&c| [c, c + 1.0]).collect();
        let m = FiniteMetricSpace::from_fn(8, |i, j| (xs[i] - xs[j]).abs()).unwrap();
        let fam = BlockFamily { blocks: (0..4).map(|k| vec![2 * k, 2 * k + 1]).collect(), diameters: vec![1.0; 4] };
        let plan = plan_blocks(&m, &fam, 1.0, Some(Case::Unbounded), None).unwrap();
        assert_eq!(plan.case, Case::Unbounded);
        assert_eq!(plan.consumed, vec![0, 1]);
        assert_eq!(plan.blocks.len(), 3);
        let rep = embed(&m, &plan).unwrap();
        assert!(rep.distortion <= 3.0);
    }
}
