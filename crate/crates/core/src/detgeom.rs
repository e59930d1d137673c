//! Bounding-box geometry, centroid error and pixel/angle conversions.
//!
//! Boxes are continuous rectangles `[x1, y1, x2, y2]` in image pixels with the
//! origin at the top-left corner and `y` increasing downward. Pixel offsets
//! become linear offsets through [`Calibration::pixels_per_meter`] and angles
//! through the target range.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::units::rad_to_mils;

/// Axis-aligned rectangle in top-left-origin pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BoundingBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let reject = |reason| Error::InvalidBox {
            x1,
            y1,
            x2,
            y2,
            reason,
        };
        if ![x1, y1, x2, y2].iter().all(|v| v.is_finite()) {
            return Err(reject("coordinates must be finite"));
        }
        if [x1, y1, x2, y2].iter().any(|&v| v < 0.0) {
            return Err(reject("coordinates must be non-negative"));
        }
        if x2 < x1 || y2 < y1 {
            return Err(reject("corners are inverted"));
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }
    pub fn y1(&self) -> f64 {
        self.y1
    }
    pub fn x2(&self) -> f64 {
        self.x2
    }
    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn centroid(&self) -> PixelVector {
        centroid(self)
    }

    pub fn corners(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }
}

impl TryFrom<[f64; 4]> for BoundingBox {
    type Error = Error;

    fn try_from(c: [f64; 4]) -> Result<Self> {
        BoundingBox::new(c[0], c[1], c[2], c[3])
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        b.corners()
    }
}

/// Identifier of the image a box belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImageId(pub String);

impl fmt::Display for ImageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ImageId {
    fn from(s: &str) -> Self {
        ImageId(s.to_owned())
    }
}

impl From<String> for ImageId {
    fn from(s: String) -> Self {
        ImageId(s)
    }
}

/// A predicted box with its confidence score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub image_id: ImageId,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

impl DetectionRecord {
    pub fn new(image_id: impl Into<ImageId>, bbox: BoundingBox, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::invalid(
                "confidence",
                format!("must lie in [0, 1], got {confidence}"),
            ));
        }
        Ok(Self {
            image_id: image_id.into(),
            bbox,
            confidence,
        })
    }
}

/// An annotated object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub image_id: ImageId,
    pub bbox: BoundingBox,
}

impl GroundTruthRecord {
    pub fn new(image_id: impl Into<ImageId>, bbox: BoundingBox) -> Self {
        Self {
            image_id: image_id.into(),
            bbox,
        }
    }
}

/// Image scale and viewing geometry shared by every image of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Calibration {
    pub pixels_per_meter: f64,
    pub range_m: f64,
    pub image_width_px: u32,
    pub image_height_px: u32,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            pixels_per_meter: 34.0,
            range_m: 1000.0,
            image_width_px: 1920,
            image_height_px: 1080,
        }
    }
}

impl Calibration {
    pub fn new(
        pixels_per_meter: f64,
        range_m: f64,
        image_width_px: u32,
        image_height_px: u32,
    ) -> Result<Self> {
        let cal = Self {
            pixels_per_meter,
            range_m,
            image_width_px,
            image_height_px,
        };
        cal.validate()?;
        Ok(cal)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("pixels_per_meter", self.pixels_per_meter)?;
        require_positive("range_m", self.range_m)?;
        if self.image_width_px == 0 || self.image_height_px == 0 {
            return Err(Error::invalid(
                "image size",
                "width and height must be positive",
            ));
        }
        Ok(())
    }

    pub fn with_range(mut self, range_m: f64) -> Self {
        self.range_m = range_m;
        self
    }

    pub fn width(&self) -> f64 {
        f64::from(self.image_width_px)
    }

    pub fn height(&self) -> f64 {
        f64::from(self.image_height_px)
    }

    pub fn px_to_m(&self, px: f64) -> f64 {
        px / self.pixels_per_meter
    }

    pub fn m_to_px(&self, m: f64) -> f64 {
        m * self.pixels_per_meter
    }

    /// Angle in mils subtended at the target range by a pixel distance.
    pub fn pixel_distance_to_mils(&self, distance_px: f64) -> f64 {
        rad_to_mils((self.px_to_m(distance_px) / self.range_m).atan())
    }
}

/// Reference point for pixel vectors.
///
/// `TopLeft` is the raw image convention (`y` down). `BottomLeft` and
/// `Center` measure `y` upward so that positive elevation is up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    TopLeft,
    BottomLeft,
    Center,
}

impl Origin {
    pub fn as_str(&self) -> &'static str {
        match self {
            Origin::TopLeft => "top-left",
            Origin::BottomLeft => "bottom-left",
            Origin::Center => "center",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "top-left" => Ok(Origin::TopLeft),
            "bottom-left" => Ok(Origin::BottomLeft),
            "center" | "centre" => Ok(Origin::Center),
            other => Err(Error::invalid(
                "origin",
                format!("unknown origin `{other}` (expected top-left, bottom-left or center)"),
            )),
        }
    }
}

/// Pixel offset relative to some declared [`Origin`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PixelVector {
    pub x: f64,
    pub y: f64,
}

impl PixelVector {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl std::ops::Sub for PixelVector {
    type Output = PixelVector;

    fn sub(self, rhs: Self) -> Self {
        PixelVector::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Add for PixelVector {
    type Output = PixelVector;

    fn add(self, rhs: Self) -> Self {
        PixelVector::new(self.x + rhs.x, self.y + rhs.y)
    }
}

/// Box midpoint in top-left-origin pixels. Zero-area boxes are allowed.
pub fn centroid(b: &BoundingBox) -> PixelVector {
    PixelVector::new((b.x1 + b.x2) / 2.0, (b.y1 + b.y2) / 2.0)
}

/// Area of `a ∩ b`; the intersection is empty, a segment, or a rectangle.
pub fn intersection_area(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let left = a.x1.max(b.x1);
    let right = a.x2.min(b.x2);
    let top = a.y1.max(b.y1);
    let bottom = a.y2.min(b.y2);
    if left <= right && top <= bottom {
        (right - left) * (bottom - top)
    } else {
        0.0
    }
}

/// Intersection over union, using `|a ∪ b| = |a| + |b| − |a ∩ b|`.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> Result<f64> {
    let inter = intersection_area(a, b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return Err(Error::DegenerateIou);
    }
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Centroid distance between a detection and its ground truth, in mils at
/// the calibrated range.
pub fn ai_error(gt: &GroundTruthRecord, det: &DetectionRecord, cal: &Calibration) -> Result<f64> {
    if gt.image_id != det.image_id {
        return Err(Error::ImageMismatch {
            ground_truth: gt.image_id.0.clone(),
            detection: det.image_id.0.clone(),
        });
    }
    cal.validate()?;
    let r_bg = centroid(&det.bbox) - centroid(&gt.bbox);
    Ok(cal.pixel_distance_to_mils(r_bg.norm()))
}

fn to_top_left(v: PixelVector, from: Origin, cal: &Calibration) -> PixelVector {
    match from {
        Origin::TopLeft => v,
        Origin::BottomLeft => PixelVector::new(v.x, cal.height() - v.y),
        Origin::Center => PixelVector::new(v.x + cal.width() / 2.0, cal.height() / 2.0 - v.y),
    }
}

fn from_top_left(v: PixelVector, to: Origin, cal: &Calibration) -> PixelVector {
    match to {
        Origin::TopLeft => v,
        Origin::BottomLeft => PixelVector::new(v.x, cal.height() - v.y),
        Origin::Center => PixelVector::new(v.x - cal.width() / 2.0, cal.height() / 2.0 - v.y),
    }
}

/// Re-expresses a pixel vector relative to another origin.
pub fn convert_origin(v: PixelVector, from: Origin, to: Origin, cal: &Calibration) -> PixelVector {
    if from == to {
        return v;
    }
    from_top_left(to_top_left(v, from, cal), to, cal)
}
