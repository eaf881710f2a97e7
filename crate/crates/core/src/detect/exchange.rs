//! Detection exchange files: `class_id confidence cx cy w h` per line,
//! normalized. Plain five-field YOLO label lines are accepted with
//! confidence 1.

use std::fmt::Write;

use super::{DetectError, Detection, DetectionSet};
use crate::classes::NUM_CLASSES;

pub fn emit_detections(set: &DetectionSet) -> String {
    let mut out = String::new();
    for d in &set.to_normalized().detections {
        writeln!(out, "{} {:.6} {:.6} {:.6} {:.6} {:.6}", d.class_id, d.confidence, d.cx, d.cy, d.w, d.h).unwrap();
    }
    out
}

pub fn parse_detections(text: &str, source: &str) -> Result<Vec<Detection>, DetectError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let err = |msg: String| DetectError::Parse { path: source.to_string(), line: i + 1, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let nums: &[&str] = match fields.len() {
            5 | 6 => &fields[1..],
            n => return Err(err(format!("expected 5 or 6 fields, found {n}"))),
        };
        let class_id = fields[0]
            .parse::<u8>()
            .ok()
            .filter(|&c| (c as usize) < NUM_CLASSES)
            .ok_or_else(|| err(format!("invalid class '{}'", fields[0])))?;
        let mut vals = Vec::with_capacity(5);
        for f in nums {
            vals.push(f.parse::<f64>().map_err(|_| err(format!("invalid number '{f}'")))?);
        }
        if vals.len() == 4 {
            vals.insert(0, 1.0);
        }
        let d = Detection::new(class_id, vals[0], vals[1], vals[2], vals[3], vals[4]);
        d.validate().map_err(|e| err(e.to_string()))?;
        out.push(d);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::Unit;

    #[test]
    fn round_trip() {
        let set = DetectionSet::new(
            vec![Detection::new(3, 0.875, 0.5, 0.25, 0.125, 0.0625), Detection::new(14, 1.0, 0.9, 0.5, 0.05, 0.8)],
            200,
            100,
            Unit::Normalized,
        );
        let text = emit_detections(&set);
        assert_eq!(text.lines().next().unwrap(), "3 0.875000 0.500000 0.250000 0.125000 0.062500");
        assert_eq!(parse_detections(&text, "x").unwrap(), set.detections);
    }

    #[test]
    fn yolo_lines_get_full_confidence() {
        let got = parse_detections("7 0.5 0.5 0.1 0.2\n\n", "x").unwrap();
        assert_eq!(got, vec![Detection::new(7, 1.0, 0.5, 0.5, 0.1, 0.2)]);
    }

    #[test]
    fn bad_lines_report_position() {
        let e = parse_detections("1 0.5 0.5 0.5 0.5\n1 2 3\n", "f.txt").unwrap_err();
        assert_eq!(e.to_string(), "f.txt: line 2: expected 5 or 6 fields, found 3");
        assert!(parse_detections("99 0.5 0.5 0.5 0.5", "f").is_err());
        assert!(parse_detections("1 1.5 0.5 0.5 0.5 0.5", "f").is_err());
    }
}
