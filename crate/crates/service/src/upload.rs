use std::io::Cursor;

use axum::http::StatusCode;
use base64::Engine;
use matrixlens_core::detect::{dedup, parse_detections, plug_detector, Detection, DetectionSet, ImageRef, Unit};
use matrixlens_core::gridseg::{GridParams, ReconstructionReport};
use matrixlens_core::imgproc::{preprocess, PrepParams, Rect};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::api::ApiError;
use crate::workspace::write_durable;
use crate::Shared;

#[derive(Debug, Serialize)]
pub struct DetectResponse {
    pub width: u32,
    pub height: u32,
    pub roi: Option<Rect>,
    /// `data:image/png;base64,…` crop of the ROI.
    pub roi_preview: Option<String>,
    /// Pixel units, after dedup.
    pub detections: Vec<Detection>,
    pub reconstruction: ReconstructionReport,
    pub warnings: Vec<String>,
}

fn png_data_url(img: &image::DynamicImage) -> Option<String> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png).ok()?;
    Some(format!("data:image/png;base64,{}", base64::engine::general_purpose::STANDARD.encode(buf.into_inner())))
}

/// Decode, locate the ROI, detect (from the supplied labels or the
/// configured detector), dedup and reconstruct.
pub(crate) fn run(shared: &Shared, bytes: &[u8], labels: Option<&str>) -> Result<DetectResponse, ApiError> {
    let unprocessable = |m: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, m);
    let img = image::load_from_memory(bytes).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("unreadable image: {e}")))?;
    let (width, height) = (img.width(), img.height());
    let mut warnings = Vec::new();

    let (roi, roi_preview) = match preprocess(&img, &PrepParams::default()) {
        Ok(out) => (Some(out.roi), png_data_url(&out.roi_image)),
        Err(e) => {
            warnings.push(format!("preprocessing: {e}"));
            (None, None)
        }
    };

    let set = match labels {
        Some(text) => {
            let dets = parse_detections(text, "labels").map_err(|e| unprocessable(e.to_string()))?;
            DetectionSet::new(dets, width, height, Unit::Normalized).to_pixels()
        }
        None => {
            let digest = Sha256::digest(bytes);
            let stem: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
            let path = shared.ws.root().join("uploads").join(format!("{stem}.png"));
            write_durable(&path, bytes).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
            let cfg = &shared.config;
            let mut detector = plug_detector(&cfg.detector, &cfg.detector_options).map_err(|e| unprocessable(e.to_string()))?;
            let image = ImageRef { path, width, height };
            detector.detect(&image).map_err(|e| unprocessable(e.to_string()))?
        }
    };
    let set = dedup(&set, shared.config.dedup_tau).map_err(|e| unprocessable(e.to_string()))?;
    let (reconstruction, _) = ReconstructionReport::build(&set, &GridParams::default());
    warnings.extend(reconstruction.warnings.iter().cloned());
    Ok(DetectResponse { width, height, roi, roi_preview, detections: set.to_pixels().detections, reconstruction, warnings })
}
