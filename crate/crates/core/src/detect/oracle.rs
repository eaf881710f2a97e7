use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DetectError, Detection, DetectionSet, Unit};
use crate::datagen::{GenSample, LabelBox};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleParams {
    /// Maximum absolute perturbation of center and extent, in pixels.
    pub jitter_px: f64,
    /// Probability of dropping each box, in `[0, 1)`.
    pub dropout_p: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self { jitter_px: 0.0, dropout_p: 0.0 }
    }
}

impl OracleParams {
    pub fn validate(&self) -> Result<(), DetectError> {
        if !(self.jitter_px >= 0.0 && self.jitter_px.is_finite()) {
            return Err(DetectError::InvalidParams(format!("jitter {} must be ≥ 0", self.jitter_px)));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(DetectError::InvalidParams(format!("dropout {} outside [0,1)", self.dropout_p)));
        }
        Ok(())
    }
}

/// Ground-truth boxes with uniform jitter on center and extent, random
/// dropout and confidence `1 − mean |perturbation| / jitter`. Output is in
/// pixels and clipped to the frame.
pub fn perturb_boxes(
    boxes: &[LabelBox],
    width: u32,
    height: u32,
    params: &OracleParams,
    rng: &mut impl Rng,
) -> Result<DetectionSet, DetectError> {
    params.validate()?;
    let (fw, fh) = (width as f64, height as f64);
    let j = params.jitter_px;
    let mut out = Vec::with_capacity(boxes.len());
    for b in boxes {
        if params.dropout_p > 0.0 && rng.random_bool(params.dropout_p) {
            continue;
        }
        let mut d = Detection::new(b.class_id, 1.0, b.cx * fw, b.cy * fh, b.w * fw, b.h * fh);
        if j > 0.0 {
            let deltas: [f64; 4] = std::array::from_fn(|_| rng.random_range(-j..=j));
            d.cx += deltas[0];
            d.cy += deltas[1];
            d.w += deltas[2];
            d.h += deltas[3];
            d.confidence = (1.0 - deltas.iter().map(|v| v.abs()).sum::<f64>() / (4.0 * j)).clamp(0.0, 1.0);
        }
        let (x0, y0, x1, y1) = d.corners();
        if x0 < 0.0 || y0 < 0.0 || x1 > fw || y1 > fh {
            d = Detection::from_corners(d.class_id, d.confidence, x0.max(0.0), y0.max(0.0), x1.min(fw), y1.min(fh));
        }
        if d.w > 0.0 && d.h > 0.0 {
            out.push(d);
        }
    }
    Ok(DetectionSet::new(out, width, height, Unit::Pixel))
}

/// Test double for a trained detector: perturbed ground truth of `sample`.
pub fn oracle_detect(sample: &GenSample, params: &OracleParams, rng: &mut impl Rng) -> Result<DetectionSet, DetectError> {
    perturb_boxes(&sample.boxes, sample.image.width(), sample.image.height(), params, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate_sample, GenConfig, SymbolAtlas};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> GenSample {
        let atlas = SymbolAtlas::synthetic().prepare(200).unwrap();
        generate_sample(&GenConfig { seed: 11, ..Default::default() }, &atlas, 0).unwrap()
    }

    #[test]
    fn zero_jitter_is_identity() {
        let s = sample();
        let set = oracle_detect(&s, &OracleParams::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(set.len(), s.boxes.len());
        let norm = set.to_normalized();
        for (d, b) in norm.detections.iter().zip(&s.boxes) {
            assert_eq!(d.class_id, b.class_id);
            assert_eq!(d.confidence, 1.0);
            for (x, y) in [(d.cx, b.cx), (d.cy, b.cy), (d.w, b.w), (d.h, b.h)] {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jitter_bounded_and_seeded() {
        let s = sample();
        let p = OracleParams { jitter_px: 1.5, dropout_p: 0.0 };
        let a = oracle_detect(&s, &p, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = oracle_detect(&s, &p, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        let (w, h) = (s.image.width() as f64, s.image.height() as f64);
        for (d, t) in a.detections.iter().zip(&s.boxes) {
            assert!((d.cx - t.cx * w).abs() <= 1.5 + 1e-9);
            assert!((d.h - t.h * h).abs() <= 1.5 + 1e-9);
            assert!((0.0..=1.0).contains(&d.confidence));
        }
    }

    #[test]
    fn dropout_removes_some() {
        let s = sample();
        let p = OracleParams { jitter_px: 0.0, dropout_p: 0.5 };
        let total: usize = (0..20).map(|k| oracle_detect(&s, &p, &mut ChaCha8Rng::seed_from_u64(k)).unwrap().len()).sum();
        assert!(total < 20 * s.boxes.len() && total > 0);
    }

    #[test]
    fn full_dropout_rejected() {
        let p = OracleParams { jitter_px: 0.0, dropout_p: 1.0 };
        assert!(oracle_detect(&sample(), &p, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
