//! Synthetic handwritten-matrix generator with YOLO annotations.
//!
//! A sample is built in four steps: compose each matrix element from
//! digit glyphs (optionally with a leading minus), lay the elements out on
//! an adaptively sized canvas between two stretched brackets, composite
//! radially decaying noise blobs, and emit one label line per glyph.
//!
//! Generation is a pure function of `(config, seed, index)`: every sample
//! draws from its own ChaCha stream, so datasets can be produced in
//! parallel and regenerated byte-for-byte.

mod annotation;
mod atlas;
mod compose;
mod dataset;
mod layout;
mod noise;
mod sprite;

use std::path::PathBuf;

use image::GrayImage;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classes::ClassId;
use crate::matrix::MatrixValue;

pub use annotation::{emit_annotation, emit_boxes, parse_annotation, AnnotationError};
pub use atlas::{load_symbol_atlas, InkAtlas, SymbolAtlas, GLYPH_SIZE};
pub use compose::{compose_element, compose_element_with, ComposedElement, ElementSpec};
pub use dataset::{generate_dataset, generate_sample, split_counts, Manifest, SampleEntry, Split, TruthRecord};
pub use layout::layout_matrix;
pub use noise::{add_noise, noise_alpha};
pub use sprite::{binarize_to_alpha, AlphaSprite};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("incomplete atlas: class {class_id} ('{glyph}') has no usable sprite")]
    IncompleteAtlas { class_id: ClassId, glyph: &'static str },
    #[error("layout overflow: {width}x{height} canvas exceeds maximum {max}")]
    LayoutOverflow { width: u32, height: u32, max: u32 },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("io error at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("image error at {path}: {source}")]
    Image { path: PathBuf, source: image::ImageError },
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub min: u32,
    pub max: u32,
}

impl IntRange {
    pub const fn new(min: u32, max: u32) -> Self {
        Self { min, max }
    }

    pub const fn exactly(v: u32) -> Self {
        Self { min: v, max: v }
    }

    pub fn contains(&self, v: u32) -> bool {
        (self.min..=self.max).contains(&v)
    }

    pub(crate) fn sample(&self, rng: &mut impl rand::Rng) -> u32 {
        rng.random_range(self.min..=self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub rows: IntRange,
    pub cols: IntRange,
    pub digits_per_element: IntRange,
    pub negative_probability: f64,
    pub noise_level: f64,
    /// Per-element alignment jitter inside its cell, in pixels.
    pub jitter_px: u32,
    pub seed: u64,
    /// Canvas side limits, in pixels.
    pub canvas_min: u32,
    pub canvas_max: u32,
    /// Outer margin per side, in pixels.
    pub margin_px: IntRange,
    /// Minimum free space on each side of the widest element of a cell.
    pub min_gutter_px: u32,
    /// Gray level at or above which glyph pixels become transparent.
    pub white_cutoff: u8,
    /// Probability of thickening the strokes of a glyph by one pixel.
    pub thicken_probability: f64,
    /// Symbol folders; the built-in procedural atlas is used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atlas_dir: Option<PathBuf>,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            rows: IntRange::new(1, 4),
            cols: IntRange::new(1, 4),
            digits_per_element: IntRange::new(1, 3),
            negative_probability: 0.3,
            noise_level: 0.3,
            jitter_px: 2,
            seed: 0,
            canvas_min: 64,
            canvas_max: 2048,
            margin_px: IntRange::new(8, 32),
            min_gutter_px: 10,
            white_cutoff: 200,
            thicken_probability: 0.3,
            atlas_dir: None,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), DatagenError> {
        let bad = |m: &str| Err(DatagenError::InvalidConfig(m.to_string()));
        for (name, r) in [("rows", self.rows), ("cols", self.cols), ("digits_per_element", self.digits_per_element)] {
            if r.min < 1 || r.min > r.max {
                return bad(&format!("{name} must be a non-empty range starting at 1 or more"));
            }
        }
        if self.digits_per_element.max > 9 {
            return bad("digits_per_element above 9 overflows the integer range");
        }
        if self.margin_px.min > self.margin_px.max {
            return bad("margin_px range is empty");
        }
        if !(0.0..=1.0).contains(&self.negative_probability) {
            return bad("negative_probability must lie in [0,1]");
        }
        if !(0.0..=1.0).contains(&self.noise_level) {
            return bad("noise_level must lie in [0,1]");
        }
        if !(0.0..=1.0).contains(&self.thicken_probability) {
            return bad("thicken_probability must lie in [0,1]");
        }
        if self.canvas_min == 0 || self.canvas_min > self.canvas_max {
            return bad("canvas size range is empty");
        }
        Ok(())
    }

    /// Random stream for sample `index`: the config seed selects the key,
    /// the index selects the ChaCha stream.
    pub fn sample_rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }
}

/// Pixel-space glyph rectangle, half-open `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelBox {
    pub class_id: ClassId,
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl PixelBox {
    pub fn width(&self) -> i64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> i64 {
        self.y1 - self.y0
    }

    pub fn translate(&self, dx: i64, dy: i64) -> Self {
        Self { x0: self.x0 + dx, x1: self.x1 + dx, y0: self.y0 + dy, y1: self.y1 + dy, ..*self }
    }
}

/// Normalized YOLO box: center and extent in `[0,1]` image fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelBox {
    pub class_id: ClassId,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl LabelBox {
    pub fn from_pixels(b: &PixelBox, width: u32, height: u32) -> Self {
        let (w, h) = (width as f64, height as f64);
        Self {
            class_id: b.class_id,
            cx: quantize((b.x0 + b.x1) as f64 / 2.0 / w),
            cy: quantize((b.y0 + b.y1) as f64 / 2.0 / h),
            w: quantize(b.width() as f64 / w),
            h: quantize(b.height() as f64 / h),
        }
    }

    /// Corners `(x0, y0, x1, y1)` in normalized units.
    pub fn corners(&self) -> (f64, f64, f64, f64) {
        (self.cx - self.w / 2.0, self.cy - self.h / 2.0, self.cx + self.w / 2.0, self.cy + self.h / 2.0)
    }
}

/// Round to the 6-decimal grid used by label files.
pub(crate) fn quantize(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSample {
    pub image: GrayImage,
    /// Label boxes in reading order.
    pub boxes: Vec<LabelBox>,
    pub truth: MatrixValue,
    /// Which element (row, col) each box belongs to; `None` for brackets.
    pub cells: Vec<Option<(usize, usize)>>,
}

impl GenSample {
    pub fn rows(&self) -> usize {
        self.truth.rows()
    }

    pub fn cols(&self) -> usize {
        self.truth.cols()
    }
}
