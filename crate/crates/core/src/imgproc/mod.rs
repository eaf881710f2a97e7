//! Photo preprocessing: grayscale, Gaussian blur, adaptive threshold,
//! morphological opening, Shi-Tomasi corners and the content ROI.
//!
//! Conventions shared by every operation:
//! - borders are handled by edge replication;
//! - binary images hold ink as 0 and background as 255.

mod corners;
mod filter;
mod morph;
mod pipeline;
mod roi;

use thiserror::Error;

pub use corners::{shi_tomasi, Corner, CornerSet, ShiTomasiParams};
pub use filter::{adaptive_threshold, auto_sigma, gaussian_blur, to_gray, Kernel, ThresholdMethod};
pub use morph::{dilate, erode, is_ink, morph_open, StructElem};
pub use pipeline::{preprocess, PrepOutput, PrepParams};
pub use roi::{roi_from_corners, Rect};

pub const INK: u8 = 0;
pub const BACKGROUND: u8 = 255;

#[derive(Debug, Error)]
pub enum ImgprocError {
    #[error("zero-size image")]
    EmptyImage,
    #[error("kernel size must be odd and at least 3, got {0}")]
    BadKernelSize(u32),
    #[error("structuring element must be at least 1x1")]
    BadStructElem,
    #[error("no content found")]
    NoContent,
    #[error("io error at {path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}
