//! Handwritten matrix toolkit.
//!
//! The crate covers the whole offline pipeline:
//!
//! 1. **datagen** – synthesize annotated handwritten-matrix images (YOLO labels).
//! 2. **imgproc** – grayscale, blur, adaptive threshold, opening, corners, ROI.
//! 3. **detect** – detection records, IoU dedup, masks, pluggable detectors.
//! 4. **gridseg** – centroid clustering, split lines, cell assignment, matrix assembly.
//! 5. **metrics** – precision, recall, F1, AP and mAP.
//! 6. **calctrace** – verified step-by-step traces for det / add / mul.
//! 7. **render** – deterministic SVG frame sequences for a trace.

pub mod calctrace;
pub mod classes;
pub mod datagen;
pub mod detect;
pub mod gridseg;
pub mod imgproc;
pub mod matrix;
pub mod metrics;
pub mod render;

pub use classes::{ClassId, CLASS_MAP, NUM_CLASSES};
pub use matrix::{MatrixError, MatrixValue};
