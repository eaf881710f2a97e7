use image::{GrayImage, Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::{assemble_matrix, segment, GridModel, GridParams};
use crate::classes::ClassId;
use crate::detect::DetectionSet;

/// File form of a reconstruction: the grid, per-cell detection indices,
/// warnings, and either the matrix values or the error that stopped
/// assembly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub rows: usize,
    pub cols: usize,
    pub values: Option<Vec<Vec<i64>>>,
    pub h_lines: Vec<f64>,
    pub v_lines: Vec<f64>,
    pub cells: Vec<Vec<Vec<usize>>>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

impl ReconstructionReport {
    /// Run segmentation and assembly, capturing failures in `error`.
    pub fn build(set: &DetectionSet, params: &GridParams) -> (Self, Option<GridModel>) {
        match segment(set, params) {
            Err(e) => (
                Self {
                    rows: 0,
                    cols: 0,
                    values: None,
                    h_lines: vec![],
                    v_lines: vec![],
                    cells: vec![],
                    warnings: vec![],
                    error: Some(e.to_string()),
                },
                None,
            ),
            Ok(seg) => {
                let classes: Vec<ClassId> = set.detections.iter().map(|d| d.class_id).collect();
                let matrix = assemble_matrix(&seg.grid, &classes);
                let g = &seg.grid;
                let report = Self {
                    rows: g.rows,
                    cols: g.cols,
                    values: matrix.as_ref().ok().map(|m| m.to_rows()),
                    h_lines: g.h_lines.clone(),
                    v_lines: g.v_lines.clone(),
                    cells: g.cells.clone(),
                    warnings: seg.warnings.clone(),
                    error: matrix.err().map(|e| e.to_string()),
                };
                (report, Some(seg.grid))
            }
        }
    }
}

/// Debug view: detection boxes in blue, split lines in red, over `base`
/// (or a white canvas of the frame size).
pub fn overlay(base: Option<&GrayImage>, set: &DetectionSet, grid: Option<&GridModel>) -> RgbImage {
    let px = set.to_pixels();
    let mut out = match base {
        Some(g) => image::DynamicImage::ImageLuma8(g.clone()).to_rgb8(),
        None => RgbImage::from_pixel(px.width, px.height, Rgb([255, 255, 255])),
    };
    let (w, h) = (out.width() as i64, out.height() as i64);
    let mut put = |x: i64, y: i64, c: Rgb<u8>| {
        if (0..w).contains(&x) && (0..h).contains(&y) {
            out.put_pixel(x as u32, y as u32, c);
        }
    };
    for d in &px.detections {
        let (x0, y0, x1, y1) = d.corners();
        let (x0, y0, x1, y1) = (x0.round() as i64, y0.round() as i64, x1.round() as i64 - 1, y1.round() as i64 - 1);
        for x in x0..=x1 {
            put(x, y0, Rgb([30, 80, 220]));
            put(x, y1, Rgb([30, 80, 220]));
        }
        for y in y0..=y1 {
            put(x0, y, Rgb([30, 80, 220]));
            put(x1, y, Rgb([30, 80, 220]));
        }
    }
    if let Some(g) = grid {
        for &l in &g.h_lines {
            for x in 0..w {
                put(x, l.round() as i64, Rgb([220, 30, 30]));
            }
        }
        for &l in &g.v_lines {
            for y in 0..h {
                put(l.round() as i64, y, Rgb([220, 30, 30]));
            }
        }
    }
    out
}
