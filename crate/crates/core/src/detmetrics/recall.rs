use crate::detgeom::iou;
use crate::error::{Error, Result};

use super::MetricsDataset;

/// `AR = (2/G) Σ max(IoU_i − 0.5, 0)`, where `IoU_i` is the best overlap of
/// ground truth `i` with the `proposal_limit` most confident detections of its
/// image.
pub fn average_recall(ds: &MetricsDataset, proposal_limit: usize) -> Result<f64> {
    if ds.g() == 0 {
        return Err(Error::EmptySample("dataset has no ground truths".into()));
    }
    if proposal_limit == 0 {
        return Err(Error::invalid("proposal_limit", "must be at least 1"));
    }
    let by_image = ds.detections_by_image();
    let mut sum = 0.0;
    for gt in &ds.ground_truths {
        let best = by_image
            .get(&gt.image_id)
            .map(|dets| {
                dets.iter()
                    .take(proposal_limit)
                    .map(|&d| iou(&ds.detections[d].bbox, &gt.bbox))
                    .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(v)))
            })
            .transpose()?
            .unwrap_or(0.0);
        sum += (best - 0.5).max(0.0);
    }
    Ok((2.0 * sum / ds.g() as f64).clamp(0.0, 1.0))
}
