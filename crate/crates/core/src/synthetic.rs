//! Seeded synthetic detection sets for demos and tests.
//!
//! Each image holds one object with a near-constant box size, its centroid
//! uniform over the frame. Every object gets one detection whose offset and
//! scale are random, so IoU spreads across all strata; a fraction of images
//! also get a spurious low-confidence detection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::detgeom::{BoundingBox, Calibration, DetectionRecord, GroundTruthRecord};
use crate::detmetrics::MetricsDataset;
use crate::error::{require_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub images: usize,
    /// Nominal object side in pixels.
    pub box_px: f64,
    /// Relative spread of object sides around `box_px`.
    pub size_jitter: f64,
    /// Largest detection offset per axis, as a fraction of the side.
    pub max_shift: f64,
    /// Largest relative detection scale error.
    pub max_scale_error: f64,
    /// Share of images with an extra spurious detection.
    pub clutter_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            images: 200,
            box_px: 80.0,
            size_jitter: 0.005,
            max_shift: 0.2,
            max_scale_error: 0.12,
            clutter_rate: 0.0,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn with_images(images: usize) -> Self {
        Self {
            images,
            ..Self::default()
        }
    }

    pub fn validate(&self, cal: &Calibration) -> Result<()> {
        require_positive("box_px", self.box_px)?;
        let limits = [
            ("size_jitter", self.size_jitter, 0.5),
            ("max_shift", self.max_shift, 1.0),
            ("max_scale_error", self.max_scale_error, 0.5),
            ("clutter_rate", self.clutter_rate, 1.0),
        ];
        for (name, v, hi) in limits {
            if !(0.0..=hi).contains(&v) {
                return Err(Error::invalid(
                    name,
                    format!("must lie in [0, {hi}], got {v}"),
                ));
            }
        }
        let reach =
            self.box_px * (1.0 + self.size_jitter) * (1.0 + self.max_shift + self.max_scale_error);
        if 2.0 * reach >= cal.width().min(cal.height()) {
            return Err(Error::invalid("box_px", "boxes do not fit the image"));
        }
        Ok(())
    }
}

fn square(cx: f64, cy: f64, w: f64, h: f64) -> Result<BoundingBox> {
    BoundingBox::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
}

pub fn synthetic_dataset(spec: &SyntheticSpec, cal: &Calibration) -> Result<MetricsDataset> {
    spec.validate(cal)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let margin =
        spec.box_px * (1.0 + spec.size_jitter) * (1.0 + spec.max_shift + spec.max_scale_error);
    let mut dets = Vec::new();
    let mut gts = Vec::with_capacity(spec.images);
    for i in 0..spec.images {
        let id = format!("img{i:05}");
        let side = spec.box_px * (1.0 + spec.size_jitter * rng.random_range(-1.0..=1.0));
        let cx = rng.random_range(margin..cal.width() - margin);
        let cy = rng.random_range(margin..cal.height() - margin);
        let gt = square(cx, cy, side, side)?;

        let shift = |rng: &mut ChaCha8Rng| spec.max_shift * side * rng.random_range(-1.0..=1.0);
        let scale =
            |rng: &mut ChaCha8Rng| 1.0 + spec.max_scale_error * rng.random_range(-1.0..=1.0);
        let (dx, dy) = (shift(&mut rng), shift(&mut rng));
        let (sx, sy) = (scale(&mut rng), scale(&mut rng));
        let det = square(cx + dx, cy + dy, side * sx, side * sy)?;
        // better boxes tend to score higher
        let quality = 1.0 - (dx.hypot(dy) / (spec.max_shift * side * 2f64.sqrt())).min(1.0);
        let confidence =
            (0.55 + 0.44 * quality + 0.05 * rng.random_range(-1.0..=1.0)).clamp(0.0, 1.0);
        dets.push(DetectionRecord::new(id.as_str(), det, confidence)?);

        if spec.clutter_rate > 0.0 && rng.random_bool(spec.clutter_rate) {
            let half = side / 2.0;
            let x = rng.random_range(half..cal.width() - half);
            let y = rng.random_range(half..cal.height() - half);
            dets.push(DetectionRecord::new(
                id.as_str(),
                square(x, y, side, side)?,
                rng.random_range(0.05..0.5),
            )?);
        }
        gts.push(GroundTruthRecord::new(id, gt));
    }
    MetricsDataset::new(dets, gts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detmetrics::{stratified_sample, AreaRule, IouBins};

    #[test]
    fn reproducible_and_inside_the_frame() {
        let cal = Calibration::default();
        let spec = SyntheticSpec {
            clutter_rate: 0.2,
            ..SyntheticSpec::with_images(300)
        };
        let a = synthetic_dataset(&spec, &cal).unwrap();
        assert_eq!(a, synthetic_dataset(&spec, &cal).unwrap());
        assert_eq!(a.g(), 300);
        assert!(a.detections.len() > 300);
        for d in &a.detections {
            let [x1, y1, x2, y2] = d.bbox.corners();
            assert!(x1 >= 0.0 && y1 >= 0.0 && x2 <= cal.width() && y2 <= cal.height());
        }
        let other = synthetic_dataset(&SyntheticSpec { seed: 8, ..spec }, &cal).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn default_area_rule_keeps_every_object() {
        let cal = Calibration::default();
        let ds = synthetic_dataset(&SyntheticSpec::with_images(400), &cal).unwrap();
        let s = stratified_sample(&ds, &IouBins::default(), AreaRule::default()).unwrap();
        assert!(s.excluded_area.is_empty());
        // every stratum gets some detections
        assert!(
            s.strata.iter().all(|st| !st.source_indices.is_empty()),
            "{:?}",
            s.strata
                .iter()
                .map(|s| s.source_indices.len())
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn rejects_oversized_boxes() {
        let spec = SyntheticSpec {
            box_px: 600.0,
            ..SyntheticSpec::default()
        };
        assert!(synthetic_dataset(&spec, &Calibration::default()).is_err());
    }
}
