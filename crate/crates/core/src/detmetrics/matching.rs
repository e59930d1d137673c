use crate::detgeom::iou;
use crate::error::{Error, Result};

use super::MetricsDataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatchOutcome {
    TruePositive {
        gt: usize,
        iou: f64,
    },
    /// `best_iou` is the highest IoU against a still-unmatched ground truth.
    FalsePositive {
        best_iou: f64,
    },
}

impl MatchOutcome {
    pub fn is_tp(&self) -> bool {
        matches!(self, MatchOutcome::TruePositive { .. })
    }
}

/// TP/FP flags at one IoU threshold, indexed like the input detections.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub threshold: f64,
    pub outcomes: Vec<MatchOutcome>,
    /// Highest IoU any same-image detection reaches on each ground truth.
    pub gt_best_iou: Vec<f64>,
    /// Detection claiming each ground truth, if any.
    pub gt_matched_by: Vec<Option<usize>>,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.outcomes.iter().filter(|o| o.is_tp()).count()
    }

    pub fn false_positives(&self) -> usize {
        self.outcomes.len() - self.true_positives()
    }

    pub fn false_negatives(&self) -> usize {
        self.gt_matched_by.iter().filter(|m| m.is_none()).count()
    }
}

/// Greedy per-image matching.
///
/// Detections are visited by descending confidence (stable on ties). Each one
/// looks at the still-unmatched ground truths of its image and takes the one
/// of highest IoU; it is a true positive iff that IoU is at least
/// `threshold`. False positives do not consume a ground truth.
pub fn match_detections(ds: &MetricsDataset, threshold: f64) -> Result<MatchResult> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::invalid(
            "iou threshold",
            format!("must lie in (0, 1], got {threshold}"),
        ));
    }
    let gts = ds.gt_index();
    let mut outcomes = vec![MatchOutcome::FalsePositive { best_iou: 0.0 }; ds.detections.len()];
    let mut gt_best_iou = vec![0.0f64; ds.g()];
    let mut gt_matched_by = vec![None; ds.g()];

    for d in ds.confidence_order() {
        let det = &ds.detections[d];
        let Some(candidates) = gts.get(&det.image_id) else {
            continue;
        };
        let mut best: Option<(usize, f64)> = None;
        for &g in candidates {
            let overlap = iou(&det.bbox, &ds.ground_truths[g].bbox)?;
            gt_best_iou[g] = gt_best_iou[g].max(overlap);
            if gt_matched_by[g].is_some() {
                continue;
            }
            if best.is_none_or(|(_, b)| overlap > b) {
                best = Some((g, overlap));
            }
        }
        outcomes[d] = match best {
            Some((g, overlap)) if overlap >= threshold => {
                gt_matched_by[g] = Some(d);
                MatchOutcome::TruePositive {
                    gt: g,
                    iou: overlap,
                }
            }
            Some((_, overlap)) => MatchOutcome::FalsePositive { best_iou: overlap },
            None => MatchOutcome::FalsePositive { best_iou: 0.0 },
        };
    }

    Ok(MatchResult {
        threshold,
        outcomes,
        gt_best_iou,
        gt_matched_by,
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use crate::detgeom::BoundingBox;

    /// Largest number of true positives over every one-to-one assignment of
    /// detections to same-image ground truths.
    fn exhaustive_max_tp(ds: &MetricsDataset, t: f64) -> usize {
        fn go(ds: &MetricsDataset, t: f64, d: usize, used: &mut Vec<bool>) -> usize {
            if d == ds.detections.len() {
                return 0;
            }
            let mut best = go(ds, t, d + 1, used);
            for g in 0..ds.g() {
                let same = ds.ground_truths[g].image_id == ds.detections[d].image_id;
                if same
                    && !used[g]
                    && iou(&ds.detections[d].bbox, &ds.ground_truths[g].bbox).unwrap() >= t
                {
                    used[g] = true;
                    best = best.max(1 + go(ds, t, d + 1, used));
                    used[g] = false;
                }
            }
            best
        }
        go(ds, t, 0, &mut vec![false; ds.g()])
    }

    fn unit() -> BoundingBox {
        bx(0., 0., 10., 10.)
    }

    #[test]
    fn exact_hit_is_true_positive() {
        let ds = MetricsDataset::new(vec![det("a", unit(), 0.9)], vec![gt("a", unit())]).unwrap();
        let m = match_detections(&ds, 0.5).unwrap();
        assert_eq!((m.true_positives(), m.false_positives()), (1, 0));
    }

    #[test]
    fn duplicate_detection_is_false_positive() {
        let ds = MetricsDataset::new(
            vec![det("a", unit(), 0.9), det("a", unit(), 0.8)],
            vec![gt("a", unit())],
        )
        .unwrap();
        let m = match_detections(&ds, 0.5).unwrap();
        assert_eq!((m.true_positives(), m.false_positives()), (1, 1));
        assert_eq!(m.true_positives(), exhaustive_max_tp(&ds, 0.5));
        assert!(m.outcomes[0].is_tp());
    }

    #[test]
    fn below_threshold_is_false_positive() {
        let ds = MetricsDataset::new(vec![det("a", shifted_box(0.4), 0.9)], vec![gt("a", unit())])
            .unwrap();
        let m = match_detections(&ds, 0.5).unwrap();
        assert_eq!(m.true_positives(), 0);
        assert!(
            matches!(m.outcomes[0], MatchOutcome::FalsePositive { best_iou } if (best_iou - 0.4).abs() < 1e-12)
        );
    }

    #[test]
    fn greedy_agrees_with_exhaustive_on_small_fixtures() {
        let ds = MetricsDataset::new(
            vec![
                det("a", shifted_box(0.6), 0.9),
                det("a", bx(20., 0., 30., 10.), 0.7),
                det("b", unit(), 0.4),
            ],
            vec![
                gt("a", unit()),
                gt("a", bx(20., 0., 30., 10.)),
                gt("b", shifted_box(0.9)),
            ],
        )
        .unwrap();
        for t in [0.5, 0.75, 0.95] {
            let m = match_detections(&ds, t).unwrap();
            assert_eq!(m.true_positives(), exhaustive_max_tp(&ds, t), "t = {t}");
        }
    }

    #[test]
    fn counts_balance() {
        let ds = five_gt();
        for t in super::super::coco_thresholds() {
            let m = match_detections(&ds, t).unwrap();
            assert_eq!(m.true_positives() + m.false_negatives(), ds.g());
            assert!(m.true_positives() <= ds.detections.len());
        }
    }

    #[test]
    fn threshold_outside_unit_interval_rejected() {
        assert!(match_detections(&five_gt(), 0.0).is_err());
        assert!(match_detections(&five_gt(), 1.5).is_err());
    }
}
