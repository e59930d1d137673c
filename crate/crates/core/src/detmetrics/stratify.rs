use serde::{Deserialize, Serialize};

use crate::detgeom::BoundingBox;
use crate::error::{Error, Result};

use super::{associate, MetricsDataset};

/// Consecutive IoU ranges. Every bin is `[lo, hi)` except the last, which
/// is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IouBins {
    pub edges: Vec<f64>,
    pub labels: Vec<String>,
}

impl Default for IouBins {
    fn default() -> Self {
        Self {
            edges: vec![0.0, 0.6, 0.7, 0.8, 0.9, 1.0],
            labels: ["A", "B", "C", "D", "E"].map(String::from).to_vec(),
        }
    }
}

impl IouBins {
    pub fn validate(&self) -> Result<()> {
        if self.edges.len() < 2 || self.labels.len() + 1 != self.edges.len() {
            return Err(Error::invalid("bins", "need n+1 edges for n labels, n ≥ 1"));
        }
        if self.edges.windows(2).any(|w| w[0] >= w[1])
            || self.edges[0] < 0.0
            || *self.edges.last().unwrap() > 1.0
        {
            return Err(Error::invalid("bins", "edges must increase within [0, 1]"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn bin_of(&self, iou: f64) -> Option<usize> {
        let last = self.len() - 1;
        (0..self.len()).find(|&i| {
            let (lo, hi) = (self.edges[i], self.edges[i + 1]);
            iou >= lo && (iou < hi || (i == last && iou <= hi))
        })
    }
}

/// Which ground-truth sizes a stratified sample keeps.
///
/// `NearLargest` is the literal reading of the sampling rule: the area must
/// lie within `tolerance` (relative) of the largest ground-truth area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AreaRule {
    NearLargest { tolerance: f64 },
    AtMostFractionOfLargest { fraction: f64 },
    Any,
}

impl Default for AreaRule {
    fn default() -> Self {
        AreaRule::NearLargest { tolerance: 0.025 }
    }
}

impl AreaRule {
    pub fn accepts(&self, b: &BoundingBox, largest_area: f64) -> bool {
        match *self {
            AreaRule::NearLargest { tolerance } => {
                (largest_area - b.area()).abs() <= tolerance * largest_area
            }
            AreaRule::AtMostFractionOfLargest { fraction } => b.area() <= fraction * largest_area,
            AreaRule::Any => true,
        }
    }
}

/// One IoU bin of a stratified sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    pub label: String,
    pub lo: f64,
    pub hi: f64,
    /// Retained detections and the distinct ground truths they attach to.
    pub dataset: MetricsDataset,
    /// Index of each retained detection in the source dataset.
    pub source_indices: Vec<usize>,
    /// For each retained detection, its ground truth within `dataset`.
    pub gt_of_detection: Vec<usize>,
    /// Best IoU of each retained detection.
    pub ious: Vec<f64>,
}

/// A partition of the source detections into strata and exclusions.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratification {
    pub strata: Vec<Stratum>,
    pub excluded_background: Vec<usize>,
    pub excluded_zero_iou: Vec<usize>,
    pub excluded_area: Vec<usize>,
}

impl Stratification {
    pub fn retained(&self) -> usize {
        self.strata.iter().map(|s| s.source_indices.len()).sum()
    }
}

/// Splits detections into IoU bins by their best-ground-truth IoU.
///
/// Detections without a same-image ground truth, with IoU 0, or whose ground
/// truth fails `area_rule` are excluded and listed separately.
pub fn stratified_sample(
    ds: &MetricsDataset,
    bins: &IouBins,
    area_rule: AreaRule,
) -> Result<Stratification> {
    bins.validate()?;
    if ds.detections.is_empty() {
        return Err(Error::EmptySample("no detections to stratify".into()));
    }
    let largest = ds
        .ground_truths
        .iter()
        .map(|g| g.bbox.area())
        .fold(0.0, f64::max);

    let mut strata: Vec<Stratum> = (0..bins.len())
        .map(|i| Stratum {
            label: bins.labels[i].clone(),
            lo: bins.edges[i],
            hi: bins.edges[i + 1],
            dataset: MetricsDataset::default(),
            source_indices: vec![],
            gt_of_detection: vec![],
            ious: vec![],
        })
        .collect();
    let mut out = Stratification {
        strata: vec![],
        excluded_background: vec![],
        excluded_zero_iou: vec![],
        excluded_area: vec![],
    };
    // per stratum: source gt index -> local index
    let mut local_gt: Vec<std::collections::HashMap<usize, usize>> =
        vec![Default::default(); bins.len()];

    for (d, assoc) in associate(ds).into_iter().enumerate() {
        let Some(a) = assoc else {
            out.excluded_background.push(d);
            continue;
        };
        if a.iou <= 0.0 {
            out.excluded_zero_iou.push(d);
            continue;
        }
        if !area_rule.accepts(&ds.ground_truths[a.gt].bbox, largest) {
            out.excluded_area.push(d);
            continue;
        }
        let b = bins
            .bin_of(a.iou)
            .expect("IoU in (0, 1] falls in a bin spanning [0, 1]");
        let s = &mut strata[b];
        let local = *local_gt[b].entry(a.gt).or_insert_with(|| {
            s.dataset.ground_truths.push(ds.ground_truths[a.gt].clone());
            s.dataset.ground_truths.len() - 1
        });
        s.dataset.detections.push(ds.detections[d].clone());
        s.source_indices.push(d);
        s.gt_of_detection.push(local);
        s.ious.push(a.iou);
    }
    out.strata = strata;
    Ok(out)
}
