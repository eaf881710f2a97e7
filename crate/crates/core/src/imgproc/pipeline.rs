use std::path::Path;

use image::{DynamicImage, GrayImage, Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::{
    adaptive_threshold, gaussian_blur, morph_open, roi_from_corners, shi_tomasi, to_gray, CornerSet, ImgprocError, Rect,
    ShiTomasiParams, StructElem, ThresholdMethod,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrepParams {
    pub blur_size: u32,
    pub blur_sigma: Option<f64>,
    pub block_size: u32,
    pub offset: f64,
    pub method: ThresholdMethod,
    pub open_elem: StructElem,
    pub corners: ShiTomasiParams,
    pub margin: u32,
}

impl Default for PrepParams {
    fn default() -> Self {
        Self {
            blur_size: 5,
            blur_sigma: None,
            block_size: 11,
            offset: 2.0,
            method: ThresholdMethod::Gaussian,
            open_elem: StructElem::square(3),
            corners: ShiTomasiParams::default(),
            margin: 10,
        }
    }
}

/// Every intermediate of the preprocessing chain.
#[derive(Debug, Clone)]
pub struct PrepOutput {
    pub gray: GrayImage,
    pub blurred: GrayImage,
    pub thresholded: GrayImage,
    pub opened: GrayImage,
    pub corners: CornerSet,
    pub roi: Rect,
    /// Crop of the original input.
    pub roi_image: DynamicImage,
}

/// gray → blur → adaptive threshold → opening → corners → ROI crop.
pub fn preprocess(img: &DynamicImage, params: &PrepParams) -> Result<PrepOutput, ImgprocError> {
    let gray = to_gray(img)?;
    let blurred = gaussian_blur(&gray, params.blur_size, params.blur_sigma)?;
    let thresholded = adaptive_threshold(&blurred, params.block_size, params.offset, params.method)?;
    let opened = morph_open(&thresholded, params.open_elem)?;
    let corners = shi_tomasi(&opened, &params.corners)?;
    let roi = roi_from_corners(&corners, img.width(), img.height(), params.margin)?;
    let roi_image = img.crop_imm(roi.x0, roi.y0, roi.width(), roi.height());
    Ok(PrepOutput { gray, blurred, thresholded, opened, corners, roi, roi_image })
}

impl PrepOutput {
    /// Gray image with corners marked as red crosses and the ROI outlined.
    pub fn corners_overlay(&self) -> RgbImage {
        let mut out = DynamicImage::ImageLuma8(self.gray.clone()).to_rgb8();
        let (w, h) = out.dimensions();
        let mut put = |x: i64, y: i64, c: Rgb<u8>| {
            if (0..w as i64).contains(&x) && (0..h as i64).contains(&y) {
                out.put_pixel(x as u32, y as u32, c);
            }
        };
        let (x0, y0, x1, y1) = (self.roi.x0 as i64, self.roi.y0 as i64, self.roi.x1 as i64 - 1, self.roi.y1 as i64 - 1);
        for x in x0..=x1 {
            put(x, y0, Rgb([0, 160, 0]));
            put(x, y1, Rgb([0, 160, 0]));
        }
        for y in y0..=y1 {
            put(x0, y, Rgb([0, 160, 0]));
            put(x1, y, Rgb([0, 160, 0]));
        }
        for c in &self.corners.corners {
            for d in -3..=3 {
                put(c.x as i64 + d, c.y as i64, Rgb([220, 0, 0]));
                put(c.x as i64, c.y as i64 + d, Rgb([220, 0, 0]));
            }
        }
        out
    }

    /// Write `gray.png`, `blur.png`, `thresh.png`, `open.png`,
    /// `corners-overlay.png` and `roi.png` into `dir`.
    pub fn dump_stages(&self, dir: &Path) -> Result<(), ImgprocError> {
        std::fs::create_dir_all(dir).map_err(|source| ImgprocError::Io { path: dir.to_path_buf(), source })?;
        self.gray.save(dir.join("gray.png"))?;
        self.blurred.save(dir.join("blur.png"))?;
        self.thresholded.save(dir.join("thresh.png"))?;
        self.opened.save(dir.join("open.png"))?;
        self.corners_overlay().save(dir.join("corners-overlay.png"))?;
        self.roi_image.to_rgb8().save(dir.join("roi.png"))?;
        Ok(())
    }
}
