//! YOLO label lines: `class cx cy w h`, normalized, six decimals.

use std::fmt::Write;

use thiserror::Error;

use super::{GenSample, LabelBox};
use crate::classes::NUM_CLASSES;

#[derive(Debug, Error, PartialEq)]
pub enum AnnotationError {
    #[error("line {line}: expected 5 fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: invalid {field} '{value}'")]
    Invalid { line: usize, field: &'static str, value: String },
}

pub fn emit_annotation(sample: &GenSample) -> String {
    emit_boxes(&sample.boxes)
}

pub fn emit_boxes(boxes: &[LabelBox]) -> String {
    let mut out = String::new();
    for b in boxes {
        writeln!(out, "{} {:.6} {:.6} {:.6} {:.6}", b.class_id, b.cx, b.cy, b.w, b.h).unwrap();
    }
    out
}

pub fn parse_annotation(text: &str) -> Result<Vec<LabelBox>, AnnotationError> {
    let mut boxes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 5 {
            return Err(AnnotationError::FieldCount { line: line_no, found: fields.len() });
        }
        let class_id: u8 = fields[0]
            .parse()
            .ok()
            .filter(|&c: &u8| (c as usize) < NUM_CLASSES)
            .ok_or_else(|| AnnotationError::Invalid { line: line_no, field: "class", value: fields[0].into() })?;
        let mut nums = [0.0f64; 4];
        for (k, name) in ["cx", "cy", "w", "h"].into_iter().enumerate() {
            nums[k] = fields[k + 1]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| AnnotationError::Invalid { line: line_no, field: name, value: fields[k + 1].into() })?;
        }
        boxes.push(LabelBox { class_id, cx: nums[0], cy: nums[1], w: nums[2], h: nums[3] });
    }
    Ok(boxes)
}
