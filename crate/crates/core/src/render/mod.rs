//! Deterministic frame sequences for calculation traces.
//!
//! A trace is laid out as square+text units in scene coordinates (y up,
//! origin at the canvas center), cut into phases of constant content, and
//! each frame is written as a standalone SVG document. PNG mirrors and the
//! video handoff are optional extras on top of the SVG frames.

mod layout;
mod output;
mod plan;
mod svg;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use layout::{layout, BracketPair, MatrixLayout, SquTexUnit};
pub use output::{encode, encoder_from_env, rasterize, render_sequence, EncodeOutcome, RenderManifest, ENCODER_ENV};
pub use plan::{phase_frames, plan, FramePlan, Phase, PhaseKind, Scene, SceneText};
pub use svg::render_frame;

pub const CANVAS_W: u32 = 1280;
pub const CANVAS_H: u32 = 720;
/// Pixels per scene unit.
pub const PX_PER_UNIT: f64 = 90.0;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("render requires verified trace")]
    Unverified,
    #[error("cannot lay out an empty matrix")]
    EmptyMatrix,
    #[error("invalid style: {0}")]
    InvalidStyle(String),
    #[error("frame {0} out of range (plan has {1})")]
    FrameOutOfRange(usize, usize),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("rasterize: {0}")]
    Raster(String),
    #[error("encoder exited with {status}: {stderr}")]
    EncoderFailed { status: String, stderr: String },
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> RenderError {
    let path = path.into();
    move |source| RenderError::Io { path, source }
}

/// Colors, sizes and phase durations. Loaded from a single JSON document;
/// missing fields take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Style {
    pub background: String,
    pub unit_fill: String,
    pub unit_stroke: String,
    pub text_color: String,
    pub highlight_fill: String,
    pub result_fill: String,
    pub bracket_color: String,
    pub annotation_color: String,
    pub font_family: String,
    /// Preferred unit side in scene units; shrunk when the scene is too wide.
    pub unit_side: f64,
    pub reveal_per_unit: f64,
    pub step_duration: f64,
    pub accumulate_duration: f64,
    pub result_duration: f64,
}

impl Default for Style {
    fn default() -> Self {
        Self {
            background: "#ffffff".into(),
            unit_fill: "#f7f7f7".into(),
            unit_stroke: "#333333".into(),
            text_color: "#111111".into(),
            highlight_fill: "#ffd54f".into(),
            result_fill: "#dcedc8".into(),
            bracket_color: "#222222".into(),
            annotation_color: "#1a237e".into(),
            font_family: "DejaVu Sans Mono, monospace".into(),
            unit_side: 0.8,
            reveal_per_unit: 0.1,
            step_duration: 1.0,
            accumulate_duration: 1.5,
            result_duration: 1.0,
        }
    }
}

impl Style {
    pub fn from_json(text: &str) -> Result<Self, RenderError> {
        let s: Style = serde_json::from_str(text).map_err(|e| RenderError::InvalidStyle(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if !(self.unit_side.is_finite() && self.unit_side > 0.0) {
            return Err(RenderError::InvalidStyle("unit_side must be positive".into()));
        }
        let durations = [self.reveal_per_unit, self.step_duration, self.accumulate_duration, self.result_duration];
        if durations.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(RenderError::InvalidStyle("durations must be finite and non-negative".into()));
        }
        let colors = [
            &self.background,
            &self.unit_fill,
            &self.unit_stroke,
            &self.text_color,
            &self.highlight_fill,
            &self.result_fill,
            &self.bracket_color,
            &self.annotation_color,
        ];
        if colors.iter().any(|c| c.is_empty() || c.contains(['"', '<', '>', '&'])) {
            return Err(RenderError::InvalidStyle("bad color value".into()));
        }
        if self.highlight_fill == self.unit_fill || self.highlight_fill == self.result_fill {
            return Err(RenderError::InvalidStyle("highlight_fill must differ from unit fills".into()));
        }
        Ok(())
    }
}
