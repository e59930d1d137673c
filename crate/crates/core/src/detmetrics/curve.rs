use crate::error::{Error, Result};

use super::{coco_thresholds, match_detections, MatchResult, MetricsDataset};

/// Precision and recall at one confidence threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    /// `None` when no detection reaches the confidence threshold.
    pub precision: Option<f64>,
    pub recall: f64,
    pub true_positives: usize,
    pub detections: usize,
}

/// `(τ, R(τ), P(τ))` at one confidence level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub confidence: f64,
    pub recall: f64,
    pub precision: f64,
}

/// Sampled precision/recall pairs with strictly decreasing recall as the
/// confidence level increases.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub iou_threshold: f64,
    /// Retained levels `τ(1) < … < τ(K)`.
    pub points: Vec<PrPoint>,
}

impl PrCurve {
    /// `(R, P)` pairs for `k = 0..=K+1`, i.e. the retained points bracketed
    /// by `(1, 0)` at `τ(0) = 0` and `(0, 1)` at `τ(K+1) = 1`.
    pub fn reference_pairs(&self) -> Vec<(f64, f64)> {
        let mut pairs = Vec::with_capacity(self.points.len() + 2);
        pairs.push((1.0, 0.0));
        pairs.extend(self.points.iter().map(|p| (p.recall, p.precision)));
        pairs.push((0.0, 1.0));
        pairs
    }
}

fn require_ground_truth(ds: &MetricsDataset) -> Result<()> {
    if ds.g() == 0 {
        return Err(Error::EmptySample("dataset has no ground truths".into()));
    }
    Ok(())
}

/// `P = S(τ)/N_d(τ)` and `R = S(τ)/G` over detections with confidence ≥ τ.
pub fn precision_recall(ds: &MetricsDataset, t: f64, tau: f64) -> Result<PrecisionRecall> {
    require_ground_truth(ds)?;
    let m = match_detections(ds, t)?;
    Ok(pr_at(ds, &m, tau))
}

fn pr_at(ds: &MetricsDataset, m: &MatchResult, tau: f64) -> PrecisionRecall {
    let (mut n, mut s) = (0, 0);
    for (det, outcome) in ds.detections.iter().zip(&m.outcomes) {
        if det.confidence >= tau {
            n += 1;
            s += usize::from(outcome.is_tp());
        }
    }
    PrecisionRecall {
        precision: (n > 0).then(|| s as f64 / n as f64),
        recall: s as f64 / ds.g() as f64,
        true_positives: s,
        detections: n,
    }
}

/// `(R, P)` at every distinct confidence level, by increasing confidence.
///
/// This is the raw zig-zag curve before recall deduplication.
pub fn pr_levels(ds: &MetricsDataset, t: f64) -> Result<Vec<PrPoint>> {
    require_ground_truth(ds)?;
    let m = match_detections(ds, t)?;
    let g = ds.g() as f64;
    // walk from the most confident detection down, emitting a level each
    // time the confidence value changes
    let order = ds.confidence_order();
    let mut levels = Vec::new();
    let (mut n, mut s) = (0usize, 0usize);
    for (pos, &d) in order.iter().enumerate() {
        n += 1;
        s += usize::from(m.outcomes[d].is_tp());
        let conf = ds.detections[d].confidence;
        let last_of_level = order
            .get(pos + 1)
            .is_none_or(|&next| ds.detections[next].confidence != conf);
        if last_of_level {
            levels.push(PrPoint {
                confidence: conf,
                recall: s as f64 / g,
                precision: s as f64 / n as f64,
            });
        }
    }
    levels.reverse();
    Ok(levels)
}

/// Builds the PR curve: among levels sharing one recall value only the most
/// confident (hence most precise) one is kept.
pub fn build_pr_curve(ds: &MetricsDataset, t: f64) -> Result<PrCurve> {
    let levels = pr_levels(ds, t)?;
    let points = levels
        .iter()
        .enumerate()
        .filter(|&(k, p)| levels.get(k + 1).is_none_or(|next| next.recall < p.recall))
        .map(|(_, p)| *p)
        .collect();
    Ok(PrCurve {
        iou_threshold: t,
        points,
    })
}

/// `P_interp(R) = max { P(τ(k)) : R(τ(k)) ≥ R }` over the bracketed pairs.
pub fn interpolate_precision(curve: &PrCurve, recall: f64) -> f64 {
    curve
        .reference_pairs()
        .into_iter()
        .filter(|&(r, _)| r >= recall)
        .map(|(_, p)| p)
        .fold(0.0, f64::max)
}

/// Mean of `P_interp` at `N` equally spaced recalls `(N−k)/(N−1)`.
pub fn ap_n_point(curve: &PrCurve, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(
            "N",
            format!("need at least 2 reference recalls, got {n}"),
        ));
    }
    let denom = (n - 1) as f64;
    let sum: f64 = (1..=n)
        .map(|k| interpolate_precision(curve, (n - k) as f64 / denom))
        .sum();
    Ok(sum / n as f64)
}

/// Area under the interpolated staircase, summed over the curve's own recall
/// values.
pub fn ap_all_point(curve: &PrCurve) -> f64 {
    let pairs = curve.reference_pairs();
    pairs
        .windows(2)
        .map(|w| (w[0].0 - w[1].0) * interpolate_precision(curve, w[0].0))
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApVariants {
    pub ap50: f64,
    pub ap75: f64,
    pub ap_50_5_95: f64,
}

/// All-point AP at IoU 0.5, at 0.75, and averaged over 0.50:0.05:0.95.
pub fn ap_variants(ds: &MetricsDataset) -> Result<ApVariants> {
    let thresholds = coco_thresholds();
    let aps = thresholds
        .iter()
        .map(|&t| build_pr_curve(ds, t).map(|c| ap_all_point(&c)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ApVariants {
        ap50: aps[0],
        ap75: aps[5],
        ap_50_5_95: aps.iter().sum::<f64>() / aps.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    fn perfect() -> MetricsDataset {
        let b = bx(0., 0., 10., 10.);
        MetricsDataset::new(
            vec![det("a", b, 0.9), det("b", b, 0.7), det("c", b, 0.5)],
            vec![gt("a", b), gt("b", b), gt("c", b)],
        )
        .unwrap()
    }

    /// Dense τ sweep: precision/recall recomputed from scratch at every
    /// confidence value present in the data.
    fn sweep(ds: &MetricsDataset, t: f64) -> Vec<(f64, f64, Option<f64>)> {
        let mut taus: Vec<f64> = ds.detections.iter().map(|d| d.confidence).collect();
        taus.sort_by(f64::total_cmp);
        taus.dedup();
        taus.into_iter()
            .map(|tau| {
                let pr = precision_recall(ds, t, tau).unwrap();
                (tau, pr.recall, pr.precision)
            })
            .collect()
    }

    #[test]
    fn precision_recall_counts() {
        let ds = five_gt();
        let pr = precision_recall(&ds, 0.5, 0.7).unwrap();
        assert_eq!((pr.true_positives, pr.detections), (3, 4));
        assert_eq!(pr.precision, Some(0.75));
        assert_eq!(pr.recall, 0.6);
        let p = precision_recall(&perfect(), 0.5, 0.5).unwrap();
        assert_eq!(p.precision, Some(1.0));
    }

    #[test]
    fn precision_undefined_above_every_confidence() {
        let pr = precision_recall(&five_gt(), 0.5, 0.99).unwrap();
        assert_eq!(pr.precision, None);
        assert_eq!(pr.recall, 0.0);
    }

    #[test]
    fn recall_non_increasing_in_confidence() {
        let ds = five_gt();
        let s = sweep(&ds, 0.5);
        for w in s.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
    }

    #[test]
    fn no_detections_gives_endpoints_only() {
        let ds = MetricsDataset::new(vec![], vec![gt("a", bx(0., 0., 1., 1.))]).unwrap();
        let c = build_pr_curve(&ds, 0.5).unwrap();
        assert!(c.points.is_empty());
        assert_eq!(c.reference_pairs(), vec![(1.0, 0.0), (0.0, 1.0)]);
        assert!(build_pr_curve(&MetricsDataset::default(), 0.5).is_err());
    }

    #[test]
    fn single_true_positive_reaches_full_recall() {
        let b = bx(0., 0., 4., 4.);
        let ds = MetricsDataset::new(vec![det("a", b, 0.8)], vec![gt("a", b)]).unwrap();
        let c = build_pr_curve(&ds, 0.5).unwrap();
        assert!(c.reference_pairs().contains(&(1.0, 1.0)));
    }

    #[test]
    fn curve_matches_dense_sweep() {
        let ds = five_gt();
        let c = build_pr_curve(&ds, 0.5).unwrap();
        let s = sweep(&ds, 0.5);
        // every retained point is a sweep point, and it is the sweep's most
        // confident point at that recall
        for p in &c.points {
            let same_recall: Vec<_> = s.iter().filter(|q| q.1 == p.recall).collect();
            let top = same_recall.last().unwrap();
            assert_eq!((top.0, top.2), (p.confidence, Some(p.precision)));
        }
        // and every recall value of the sweep is represented once
        let mut recalls: Vec<f64> = s.iter().map(|q| q.1).collect();
        recalls.dedup();
        assert_eq!(recalls.len(), c.points.len());
        for w in c.points.windows(2) {
            assert!(w[0].confidence < w[1].confidence && w[0].recall > w[1].recall);
        }
    }

    #[test]
    fn interpolation_examples() {
        let c = build_pr_curve(&perfect(), 0.5).unwrap();
        assert_eq!(interpolate_precision(&c, 0.0), 1.0);
        assert_eq!(interpolate_precision(&c, 1.0), 1.0);

        // zig-zag: the staircase must equal the upper envelope on a fine grid
        let ds = five_gt();
        let c = build_pr_curve(&ds, 0.5).unwrap();
        let levels = pr_levels(&ds, 0.5).unwrap();
        for i in 0..=10_000 {
            let r = i as f64 * 1e-4;
            let envelope = levels
                .iter()
                .filter(|p| p.recall >= r)
                .map(|p| p.precision)
                .chain([if r == 0.0 { 1.0 } else { 0.0 }])
                .fold(0.0, f64::max);
            assert_eq!(interpolate_precision(&c, r), envelope, "R = {r}");
        }
    }

    #[test]
    fn n_point_examples() {
        let c = build_pr_curve(&perfect(), 0.5).unwrap();
        for n in [2, 11, 101] {
            assert!((ap_n_point(&c, n).unwrap() - 1.0).abs() < 1e-15);
        }
        let none = MetricsDataset::new(
            vec![det("a", bx(50., 50., 60., 60.), 0.9)],
            vec![gt("a", bx(0., 0., 10., 10.))],
        )
        .unwrap();
        let c = build_pr_curve(&none, 0.5).unwrap();
        for n in [2, 11, 101] {
            assert!((ap_n_point(&c, n).unwrap() - 1.0 / n as f64).abs() < 1e-15);
        }
        assert!(ap_n_point(&c, 1).is_err());
    }

    #[test]
    fn eleven_point_close_to_riemann_integral() {
        let c = build_pr_curve(&five_gt(), 0.5).unwrap();
        let steps = 100_000;
        let riemann: f64 = (0..steps)
            .map(|i| interpolate_precision(&c, (i as f64 + 0.5) / steps as f64))
            .sum::<f64>()
            / steps as f64;
        let ap11 = ap_n_point(&c, 11).unwrap();
        assert!((ap11 - riemann).abs() <= 1.0 / 22.0, "{ap11} vs {riemann}");
    }

    #[test]
    fn all_point_examples() {
        assert_eq!(ap_all_point(&build_pr_curve(&perfect(), 0.5).unwrap()), 1.0);
        // two objects, first detection correct, second wrong: staircase 1 on
        // (0, 0.5], 0 above
        let b = bx(0., 0., 10., 10.);
        let half = MetricsDataset::new(
            vec![det("a", b, 0.9), det("b", bx(40., 40., 50., 50.), 0.8)],
            vec![gt("a", b), gt("b", b)],
        )
        .unwrap();
        assert_eq!(ap_all_point(&build_pr_curve(&half, 0.5).unwrap()), 0.5);
        // constant precision 0.5 over the whole recall range
        let constant = MetricsDataset::new(
            vec![det("a", bx(40., 40., 50., 50.), 0.9), det("a", b, 0.8)],
            vec![gt("a", b)],
        )
        .unwrap();
        let c = build_pr_curve(&constant, 0.5).unwrap();
        assert_eq!(ap_all_point(&c), 0.5);
        assert_eq!(interpolate_precision(&c, 0.3), 0.5);
    }

    #[test]
    fn variants_with_mid_range_overlaps() {
        let unit = bx(0., 0., 10., 10.);
        let dets = [0.55, 0.6, 0.7, 0.74]
            .iter()
            .enumerate()
            .map(|(i, &t)| det(&format!("i{i}"), shifted_box(t), 0.9 - 0.1 * i as f64))
            .collect();
        let gts = (0..4).map(|i| gt(&format!("i{i}"), unit)).collect();
        let ds = MetricsDataset::new(dets, gts).unwrap();
        let ap = ap_variants(&ds).unwrap();
        assert_eq!(ap.ap50, 1.0);
        assert_eq!(ap.ap75, 0.0);
        assert!(ap.ap_50_5_95 > 0.0 && ap.ap_50_5_95 < 1.0);
        let perfect = ap_variants(&perfect()).unwrap();
        assert_eq!(
            (perfect.ap50, perfect.ap75, perfect.ap_50_5_95),
            (1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn ap_non_increasing_in_threshold() {
        let ds = five_gt();
        let thresholds = coco_thresholds();
        let aps: Vec<f64> = thresholds
            .iter()
            .map(|&t| ap_all_point(&build_pr_curve(&ds, t).unwrap()))
            .collect();
        for w in aps.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "{aps:?}");
        }
    }
}
