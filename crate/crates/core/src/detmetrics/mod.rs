//! Single-class detection evaluation: matching, precision/recall, AP and AR
//! variants, and IoU-stratified sub-datasets.

mod curve;
mod matching;
mod recall;
mod stratify;

use std::collections::HashMap;

use crate::detgeom::{centroid, iou, DetectionRecord, GroundTruthRecord, ImageId};
use crate::error::{Error, Result};

pub use curve::{
    ap_all_point, ap_n_point, ap_variants, build_pr_curve, interpolate_precision, pr_levels,
    precision_recall, ApVariants, PrCurve, PrPoint, PrecisionRecall,
};
pub use matching::{match_detections, MatchOutcome, MatchResult};
pub use recall::average_recall;
pub use stratify::{stratified_sample, AreaRule, IouBins, Stratification, Stratum};

/// IoU thresholds 0.50, 0.55, …, 0.95.
pub fn coco_thresholds() -> [f64; 10] {
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

/// Detections and ground truths of one evaluation set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsDataset {
    pub detections: Vec<DetectionRecord>,
    pub ground_truths: Vec<GroundTruthRecord>,
}

impl MetricsDataset {
    /// Rejects zero-area ground truths, for which IoU has no denominator.
    pub fn new(
        detections: Vec<DetectionRecord>,
        ground_truths: Vec<GroundTruthRecord>,
    ) -> Result<Self> {
        if let Some(gt) = ground_truths.iter().find(|g| g.bbox.area() <= 0.0) {
            let [x1, y1, x2, y2] = gt.bbox.corners();
            return Err(Error::InvalidBox {
                x1,
                y1,
                x2,
                y2,
                reason: "ground truth box has zero area",
            });
        }
        Ok(Self {
            detections,
            ground_truths,
        })
    }

    /// Number of ground-truth objects, `G`.
    pub fn g(&self) -> usize {
        self.ground_truths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty() && self.ground_truths.is_empty()
    }

    /// Ground-truth indices per image.
    pub(crate) fn gt_index(&self) -> HashMap<&ImageId, Vec<usize>> {
        let mut map: HashMap<&ImageId, Vec<usize>> = HashMap::new();
        for (i, gt) in self.ground_truths.iter().enumerate() {
            map.entry(&gt.image_id).or_default().push(i);
        }
        map
    }

    /// Detection indices per image, sorted by descending confidence with
    /// ties kept in input order.
    pub(crate) fn detections_by_image(&self) -> HashMap<&ImageId, Vec<usize>> {
        let mut map: HashMap<&ImageId, Vec<usize>> = HashMap::new();
        for i in self.confidence_order() {
            map.entry(&self.detections[i].image_id).or_default().push(i);
        }
        map
    }

    /// All detection indices by descending confidence (stable).
    pub(crate) fn confidence_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.detections.len()).collect();
        order.sort_by(|&a, &b| {
            self.detections[b]
                .confidence
                .total_cmp(&self.detections[a].confidence)
        });
        order
    }

    /// True when no ground truth shares the detection's image.
    pub fn is_background(&self, detection: usize) -> bool {
        let id = &self.detections[detection].image_id;
        !self.ground_truths.iter().any(|g| &g.image_id == id)
    }

    /// Best ground truth for every detection; see [`associate`].
    pub fn associations(&self) -> Vec<Option<Association>> {
        associate(self)
    }
}

/// The ground truth a detection is attributed to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Association {
    pub gt: usize,
    pub iou: f64,
}

/// Pairs each detection with the same-image ground truth of highest IoU.
///
/// Ties (including the all-zero case) go to the ground truth whose centroid
/// is nearest, then to the lower index. Detections on background images map
/// to `None`.
pub fn associate(ds: &MetricsDataset) -> Vec<Option<Association>> {
    let gts = ds.gt_index();
    ds.detections
        .iter()
        .map(|det| {
            let candidates = gts.get(&det.image_id)?;
            let c = centroid(&det.bbox);
            let mut best: Option<(Association, f64)> = None;
            for &g in candidates {
                let gt = &ds.ground_truths[g];
                let overlap = iou(&det.bbox, &gt.bbox).unwrap_or(0.0);
                let dist = (centroid(&gt.bbox) - c).norm();
                let better = match &best {
                    None => true,
                    Some((b, d)) => overlap > b.iou || (overlap == b.iou && dist < *d),
                };
                if better {
                    best = Some((
                        Association {
                            gt: g,
                            iou: overlap,
                        },
                        dist,
                    ));
                }
            }
            best.map(|(a, _)| a)
        })
        .collect()
}

/// The per-dataset summary reported for each stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct ApReport {
    pub n_detections: usize,
    pub n_ground_truths: usize,
    pub mean_confidence: Option<f64>,
    /// Mean of each detection's best same-image IoU.
    pub mean_iou: Option<f64>,
    /// `None` when the dataset has no ground truths.
    pub metrics: Option<ApMetrics>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApMetrics {
    pub ap50: f64,
    pub ap75: f64,
    pub ap_50_5_95: f64,
    pub ar1: f64,
    pub ar10: f64,
}

/// AP50/AP75/AP@50:5:95 (all-point), AR1, AR10 and the dataset means.
pub fn evaluate(ds: &MetricsDataset) -> Result<ApReport> {
    let n = ds.detections.len();
    let mean = |xs: &mut dyn Iterator<Item = f64>| -> Option<f64> {
        (n > 0).then(|| xs.sum::<f64>() / n as f64)
    };
    let mean_confidence = mean(&mut ds.detections.iter().map(|d| d.confidence));
    let assoc = associate(ds);
    let mean_iou = mean(&mut assoc.iter().map(|a| a.map_or(0.0, |a| a.iou)));
    let metrics = if ds.g() > 0 {
        let ap = ap_variants(ds)?;
        Some(ApMetrics {
            ap50: ap.ap50,
            ap75: ap.ap75,
            ap_50_5_95: ap.ap_50_5_95,
            ar1: average_recall(ds, 1)?,
            ar10: average_recall(ds, 10)?,
        })
    } else {
        None
    };
    Ok(ApReport {
        n_detections: n,
        n_ground_truths: ds.g(),
        mean_confidence,
        mean_iou,
        metrics,
    })
}
