//! Dataset-level studies: how AI error relates to confidence, IoU and box
//! size, and how the three error sources distribute per start origin.

use serde::Serialize;

use crate::detgeom::{ai_error, Calibration, Origin};
use crate::detmetrics::{associate, MetricsDataset};
use crate::error::{Error, Result};
use crate::simengine::SimulationResult;
use crate::stats::{
    basic_stats, correlation, histogram, variance_decomposition, DecompositionReport, Histogram,
    SampleStats,
};

/// One associated detection, with the variables the study correlates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionSample {
    pub detection: usize,
    pub ai_error_mils: f64,
    pub iou: f64,
    pub confidence: f64,
    /// Detected-box area over the largest detected-box area.
    pub normalized_area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleFilter {
    All,
    IouAtLeastHalf,
    ConfidenceAtLeast099,
}

impl SampleFilter {
    pub const ALL: [SampleFilter; 3] = [
        SampleFilter::All,
        SampleFilter::IouAtLeastHalf,
        SampleFilter::ConfidenceAtLeast099,
    ];

    pub fn keeps(self, s: &DetectionSample) -> bool {
        match self {
            SampleFilter::All => true,
            SampleFilter::IouAtLeastHalf => s.iou >= 0.5,
            SampleFilter::ConfidenceAtLeast099 => s.confidence >= 0.99,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SampleFilter::All => "all",
            SampleFilter::IouAtLeastHalf => "iou>=0.5",
            SampleFilter::ConfidenceAtLeast099 => "confidence>=0.99",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub filter: SampleFilter,
    pub n: usize,
    pub ai_error: Option<SampleStats>,
    pub ai_vs_confidence: Option<f64>,
    pub ai_vs_iou: Option<f64>,
    pub ai_vs_area: Option<f64>,
    pub iou_vs_confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub samples: Vec<DetectionSample>,
    pub rows: Vec<CorrelationRow>,
}

/// Variables for every detection that has a same-image ground truth.
pub fn detection_samples(ds: &MetricsDataset, cal: &Calibration) -> Result<Vec<DetectionSample>> {
    let largest = ds
        .detections
        .iter()
        .map(|d| d.bbox.area())
        .fold(0.0, f64::max);
    associate(ds)
        .into_iter()
        .enumerate()
        .filter_map(|(i, a)| a.map(|a| (i, a)))
        .map(|(i, a)| {
            let det = &ds.detections[i];
            Ok(DetectionSample {
                detection: i,
                ai_error_mils: ai_error(&ds.ground_truths[a.gt], det, cal)?,
                iou: a.iou,
                confidence: det.confidence,
                normalized_area: if largest > 0.0 {
                    det.bbox.area() / largest
                } else {
                    0.0
                },
            })
        })
        .collect()
}

fn pair_correlation(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.is_empty() {
        Ok(None)
    } else {
        correlation(a, b)
    }
}

/// Correlations for the whole set and each filter. Filters that keep no
/// detections report `n = 0` with no statistics.
pub fn correlation_study(
    ds: &MetricsDataset,
    cal: &Calibration,
    filters: &[SampleFilter],
) -> Result<CorrelationReport> {
    let samples = detection_samples(ds, cal)?;
    if samples.is_empty() {
        return Err(Error::EmptySample(
            "no detection has a same-image ground truth".into(),
        ));
    }
    let rows = filters
        .iter()
        .map(|&f| {
            let kept: Vec<&DetectionSample> = samples.iter().filter(|s| f.keeps(s)).collect();
            let col =
                |g: fn(&DetectionSample) -> f64| kept.iter().map(|s| g(s)).collect::<Vec<f64>>();
            let (ai, iou, conf, area) = (
                col(|s| s.ai_error_mils),
                col(|s| s.iou),
                col(|s| s.confidence),
                col(|s| s.normalized_area),
            );
            Ok(CorrelationRow {
                filter: f,
                n: kept.len(),
                ai_error: if ai.is_empty() {
                    None
                } else {
                    Some(basic_stats(&ai)?)
                },
                ai_vs_confidence: pair_correlation(&ai, &conf)?,
                ai_vs_iou: pair_correlation(&ai, &iou)?,
                ai_vs_area: pair_correlation(&ai, &area)?,
                iou_vs_confidence: pair_correlation(&iou, &conf)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationReport { samples, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorSource {
    /// `‖R_bg‖`.
    Ai,
    /// `‖R_br‖`.
    Controller,
    /// `‖R_rg‖`.
    Total,
}

impl ErrorSource {
    pub const ALL: [ErrorSource; 3] =
        [ErrorSource::Ai, ErrorSource::Controller, ErrorSource::Total];

    pub fn name(self) -> &'static str {
        match self {
            ErrorSource::Ai => "ai",
            ErrorSource::Controller => "controller",
            ErrorSource::Total => "total",
        }
    }

    pub fn of(self, r: &SimulationResult) -> f64 {
        match self {
            ErrorSource::Ai => r.r_bg_mils,
            ErrorSource::Controller => r.r_br_mils,
            ErrorSource::Total => r.r_rg_mils,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSummary {
    pub kind: ErrorSource,
    pub stats: Option<SampleStats>,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioErrors {
    pub origin: Origin,
    pub n: usize,
    pub errors: Vec<ErrorSummary>,
    pub decomposition: Option<DecompositionReport>,
}

/// Percent change of a mean error from the first scenario to another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioDelta {
    pub kind: ErrorSource,
    pub from: Origin,
    pub to: Origin,
    pub mean_change_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorDistributionReport {
    pub bin_width_mils: f64,
    pub scenarios: Vec<ScenarioErrors>,
    pub deltas: Vec<ScenarioDelta>,
}

impl ErrorDistributionReport {
    pub fn mean(&self, origin: Origin, kind: ErrorSource) -> Option<f64> {
        let s = self.scenarios.iter().find(|s| s.origin == origin)?;
        s.errors
            .iter()
            .find(|e| e.kind == kind)?
            .stats
            .map(|s| s.mean)
    }
}

pub fn error_distribution_study(
    scenarios: &[(Origin, Vec<SimulationResult>)],
    bin_width_mils: f64,
) -> Result<ErrorDistributionReport> {
    let mut out = Vec::with_capacity(scenarios.len());
    for (origin, results) in scenarios {
        let column = |k: ErrorSource| results.iter().map(|r| k.of(r)).collect::<Vec<f64>>();
        let errors = ErrorSource::ALL
            .iter()
            .map(|&kind| {
                let x = column(kind);
                Ok(ErrorSummary {
                    kind,
                    stats: if x.is_empty() {
                        None
                    } else {
                        Some(basic_stats(&x)?)
                    },
                    histogram: histogram(&x, bin_width_mils)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let decomposition = if results.is_empty() {
            None
        } else {
            Some(variance_decomposition(
                &column(ErrorSource::Ai),
                &column(ErrorSource::Controller),
                &column(ErrorSource::Total),
            )?)
        };
        out.push(ScenarioErrors {
            origin: *origin,
            n: results.len(),
            errors,
            decomposition,
        });
    }
    let mut deltas = Vec::new();
    if let Some(first) = out.first() {
        let mean_of = |s: &ScenarioErrors, k: ErrorSource| {
            s.errors
                .iter()
                .find(|e| e.kind == k)
                .and_then(|e| e.stats)
                .map(|s| s.mean)
        };
        for other in out.iter().skip(1) {
            for kind in ErrorSource::ALL {
                let change = match (mean_of(first, kind), mean_of(other, kind)) {
                    (Some(a), Some(b)) if a != 0.0 => Some(100.0 * (b - a) / a),
                    _ => None,
                };
                deltas.push(ScenarioDelta {
                    kind,
                    from: first.origin,
                    to: other.origin,
                    mean_change_pct: change,
                });
            }
        }
    }
    Ok(ErrorDistributionReport {
        bin_width_mils,
        scenarios: out,
        deltas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detgeom::{BoundingBox, DetectionRecord, GroundTruthRecord};

    fn bx(x1: f64, y1: f64, x2: f64, y2: f64) -> BoundingBox {
        BoundingBox::new(x1, y1, x2, y2).unwrap()
    }

    #[test]
    fn shift_along_x_gives_perfect_anticorrelation() {
        // Sliding a box of side 10 by s gives IoU (10 - s)/(10 + s) and AI
        // error monotone in s; use a linear map via the centroid offset.
        let mut dets = vec![];
        let mut gts = vec![];
        for (i, s) in [0.5, 1.0, 2.0, 3.5, 5.0].iter().enumerate() {
            let id = format!("i{i}");
            gts.push(GroundTruthRecord::new(
                id.as_str(),
                bx(100., 100., 110., 110.),
            ));
            dets.push(
                DetectionRecord::new(
                    id.as_str(),
                    bx(100. + s, 100., 110. + s, 110.),
                    0.5 + 0.1 * i as f64,
                )
                .unwrap(),
            );
        }
        let ds = MetricsDataset::new(dets, gts).unwrap();
        let rep = correlation_study(&ds, &Calibration::default(), &SampleFilter::ALL).unwrap();
        let all = &rep.rows[0];
        assert_eq!(all.n, 5);
        // AI error is s in mils (nearly linear); IoU is decreasing in s
        assert!(all.ai_vs_iou.unwrap() < -0.98);
        let ai: Vec<f64> = rep.samples.iter().map(|s| s.ai_error_mils).collect();
        let one_minus: Vec<f64> = rep.samples.iter().map(|s| 1.0 - s.iou).collect();
        assert!(crate::stats::correlation(&ai, &one_minus).unwrap().unwrap() > 0.98);
        assert_eq!(rep.rows[2].n, 0);
        assert_eq!(rep.rows[2].ai_error, None);
        assert!(rep.samples.iter().any(|s| s.normalized_area == 1.0));
    }

    #[test]
    fn exactly_linear_variables_correlate_to_minus_one() {
        let ai = [0.1, 0.2, 0.4, 0.5];
        let iou: Vec<f64> = ai.iter().map(|a| 1.0 - a / 0.7).collect();
        assert!((crate::stats::correlation(&ai, &iou).unwrap().unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn filters_count_duplicates() {
        let g = GroundTruthRecord::new("a", bx(0., 0., 10., 10.));
        let dets = vec![
            DetectionRecord::new("a", bx(0., 0., 10., 10.), 0.995).unwrap(),
            DetectionRecord::new("a", bx(0., 0., 10., 10.), 0.5).unwrap(),
            DetectionRecord::new("a", bx(6., 0., 16., 10.), 0.999).unwrap(),
        ];
        let ds = MetricsDataset::new(dets, vec![g]).unwrap();
        let rep = correlation_study(&ds, &Calibration::default(), &SampleFilter::ALL).unwrap();
        assert_eq!(
            rep.rows.iter().map(|r| r.n).collect::<Vec<_>>(),
            vec![3, 2, 2]
        );
        assert!(correlation_study(
            &MetricsDataset::default(),
            &Calibration::default(),
            &SampleFilter::ALL
        )
        .is_err());
    }
}
