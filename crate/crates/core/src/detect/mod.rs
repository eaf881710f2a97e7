//! Detection records, IoU dedup, rectangle masks and detector plumbing.

mod exchange;
mod oracle;
mod plug;

use image::{GrayImage, Luma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classes::{ClassId, NUM_CLASSES};

pub use exchange::{emit_detections, parse_detections};
pub use oracle::{oracle_detect, perturb_boxes, OracleParams};
pub use plug::{plug_detector, Detector, DetectorOptions, FileDetector, ImageRef, OracleDetector};

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("invalid detection: {0}")]
    InvalidDetection(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown detector '{0}'")]
    UnknownDetector(String),
    #[error("masks require pixel-unit detections")]
    NotPixelUnit,
    #[error("no labels for {0}")]
    LabelsNotFound(std::path::PathBuf),
    #[error("{path}: line {line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("io error at {path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Pixel,
    Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class_id: ClassId,
    pub confidence: f64,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl Detection {
    pub fn new(class_id: ClassId, confidence: f64, cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self { class_id, confidence, cx, cy, w, h }
    }

    /// `(x0, y0, x1, y1)`.
    pub fn corners(&self) -> (f64, f64, f64, f64) {
        (self.cx - self.w / 2.0, self.cy - self.h / 2.0, self.cx + self.w / 2.0, self.cy + self.h / 2.0)
    }

    pub fn from_corners(class_id: ClassId, confidence: f64, x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { class_id, confidence, cx: (x0 + x1) / 2.0, cy: (y0 + y1) / 2.0, w: x1 - x0, h: y1 - y0 }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        let finite = [self.cx, self.cy, self.w, self.h, self.confidence].iter().all(|v| v.is_finite());
        if !finite {
            return Err(DetectError::InvalidDetection("non-finite field".into()));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(DetectError::InvalidDetection(format!("non-positive extent {}x{}", self.w, self.h)));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(DetectError::InvalidDetection(format!("confidence {} outside [0,1]", self.confidence)));
        }
        if self.class_id as usize >= NUM_CLASSES {
            return Err(DetectError::InvalidDetection(format!("class {} out of range", self.class_id)));
        }
        Ok(())
    }
}

/// Intersection over union of two axis-aligned boxes.
pub fn iou(a: &Detection, b: &Detection) -> f64 {
    let (ax0, ay0, ax1, ay1) = a.corners();
    let (bx0, by0, bx1, by1) = b.corners();
    let iw = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
    let ih = (ay1.min(by1) - ay0.max(by0)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSet {
    pub detections: Vec<Detection>,
    pub width: u32,
    pub height: u32,
    pub unit: Unit,
}

impl DetectionSet {
    pub fn new(detections: Vec<Detection>, width: u32, height: u32, unit: Unit) -> Self {
        Self { detections, width, height, unit }
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        self.detections.iter().try_for_each(Detection::validate)
    }

    fn scaled(&self, sx: f64, sy: f64, unit: Unit) -> Self {
        let detections = self
            .detections
            .iter()
            .map(|d| Detection { cx: d.cx * sx, cy: d.cy * sy, w: d.w * sx, h: d.h * sy, ..*d })
            .collect();
        Self { detections, unit, ..*self }
    }

    pub fn to_pixels(&self) -> Self {
        match self.unit {
            Unit::Pixel => self.clone(),
            Unit::Normalized => self.scaled(self.width as f64, self.height as f64, Unit::Pixel),
        }
    }

    pub fn to_normalized(&self) -> Self {
        match self.unit {
            Unit::Normalized => self.clone(),
            Unit::Pixel => self.scaled(1.0 / self.width as f64, 1.0 / self.height as f64, Unit::Normalized),
        }
    }
}

/// Indices kept by greedy IoU suppression, in keep order.
pub fn dedup_indices(detections: &[Detection], tau: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    // stable: equal confidences keep input order
    order.sort_by(|&a, &b| detections[b].confidence.total_cmp(&detections[a].confidence));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if kept.iter().all(|&k| iou(&detections[k], &detections[i]) < tau) {
            kept.push(i);
        }
    }
    kept
}

/// Class-agnostic greedy dedup: highest confidence first, drop anything
/// overlapping an already kept box with IoU ≥ `tau`. Survivors keep their
/// original relative order.
pub fn dedup(set: &DetectionSet, tau: f64) -> Result<DetectionSet, DetectError> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(DetectError::InvalidParams(format!("tau {tau} outside (0,1]")));
    }
    let mut kept = dedup_indices(&set.detections, tau);
    kept.sort_unstable();
    Ok(DetectionSet { detections: kept.into_iter().map(|i| set.detections[i]).collect(), ..*set })
}

/// Filled rectangle mask at frame resolution, stored as its pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mask {
    pub width: u32,
    pub height: u32,
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl Mask {
    pub fn area(&self) -> u64 {
        (self.x1 - self.x0) as u64 * (self.y1 - self.y0) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        (self.x0..self.x1).contains(&x) && (self.y0..self.y1).contains(&y)
    }

    /// Pixels of the mask; set pixels are 255.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (self.y0..self.y1).flat_map(move |y| (self.x0..self.x1).map(move |x| (x, y)))
    }

    pub fn to_image(&self) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| Luma([if self.contains(x, y) { 255 } else { 0 }]))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MaskSet {
    pub masks: Vec<Mask>,
}

/// One mask per detection: `round(w) × round(h)` pixels starting at
/// `round(cx − w/2)`, clipped to the frame.
pub fn masks(set: &DetectionSet) -> Result<MaskSet, DetectError> {
    if set.unit != Unit::Pixel {
        return Err(DetectError::NotPixelUnit);
    }
    let (fw, fh) = (set.width as i64, set.height as i64);
    let masks = set
        .detections
        .iter()
        .map(|d| {
            let x0 = (d.cx - d.w / 2.0).round() as i64;
            let y0 = (d.cy - d.h / 2.0).round() as i64;
            let x1 = x0 + d.w.round() as i64;
            let y1 = y0 + d.h.round() as i64;
            let cx0 = x0.clamp(0, fw) as u32;
            let cy0 = y0.clamp(0, fh) as u32;
            Mask {
                width: set.width,
                height: set.height,
                x0: cx0,
                y0: cy0,
                x1: (x1.clamp(0, fw) as u32).max(cx0),
                y1: (y1.clamp(0, fh) as u32).max(cy0),
            }
        })
        .collect();
    Ok(MaskSet { masks })
}
