use rand::Rng;

use super::atlas::InkAtlas;
use super::sprite::AlphaSprite;
use super::{GenConfig, PixelBox};
use crate::classes::{digit_class, MINUS};

/// What to draw for one matrix element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementSpec {
    pub negative: bool,
    /// Decimal digits, most significant first.
    pub digits: Vec<u8>,
}

impl ElementSpec {
    pub fn value(&self) -> i64 {
        let magnitude = self.digits.iter().fold(0i64, |acc, &d| acc * 10 + d as i64);
        if self.negative {
            -magnitude
        } else {
            magnitude
        }
    }

    pub fn random(rng: &mut impl Rng, cfg: &GenConfig) -> Self {
        let n = cfg.digits_per_element.sample(rng) as usize;
        let digits: Vec<u8> = (0..n)
            .map(|i| if i == 0 && n > 1 { rng.random_range(1..=9) } else { rng.random_range(0..=9) })
            .collect();
        let negative = rng.random_bool(cfg.negative_probability) && digits.iter().any(|&d| d != 0);
        Self { negative, digits }
    }
}

/// A composed element: sprite, glyph boxes relative to the sprite, value.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedElement {
    pub sprite: AlphaSprite,
    pub boxes: Vec<PixelBox>,
    pub value: i64,
}

/// Compose a random element (1–3 digits by default, optional leading minus).
pub fn compose_element(rng: &mut impl Rng, atlas: &InkAtlas, cfg: &GenConfig) -> ComposedElement {
    let spec = ElementSpec::random(rng, cfg);
    compose_element_with(rng, atlas, cfg, &spec)
}

/// Compose a given element: glyphs left to right, vertically centered,
/// separated by random gaps (minus→digit 2–6 px, digit→digit 1–4 px).
pub fn compose_element_with(rng: &mut impl Rng, atlas: &InkAtlas, cfg: &GenConfig, spec: &ElementSpec) -> ComposedElement {
    let classes = spec.negative.then_some(MINUS).into_iter().chain(spec.digits.iter().map(|&d| digit_class(d)));
    let mut glyphs: Vec<(u8, AlphaSprite, i64)> = Vec::new();
    let mut cursor = 0i64;
    for (i, class_id) in classes.enumerate() {
        let mut sprite = atlas.pick(class_id, rng).clone();
        if rng.random_bool(cfg.thicken_probability) {
            sprite = sprite.thicken();
        }
        if i > 0 {
            let prev_is_minus = glyphs.last().is_some_and(|g| g.0 == MINUS);
            cursor += if prev_is_minus { rng.random_range(2..=6) } else { rng.random_range(1..=4) };
        }
        glyphs.push((class_id, sprite.clone(), cursor));
        cursor += sprite.width as i64;
    }
    let width = cursor as u32;
    let height = glyphs.iter().map(|g| g.1.height).max().unwrap_or(1);
    let mut canvas = AlphaSprite::blank(width, height);
    let mut boxes = Vec::with_capacity(glyphs.len());
    for (class_id, sprite, x) in &glyphs {
        let y = ((height - sprite.height) / 2) as i64;
        for sy in 0..sprite.height {
            for sx in 0..sprite.width {
                let src = (sy * sprite.width + sx) as usize;
                let dst = ((y as u32 + sy) * width + (*x as u32 + sx)) as usize;
                canvas.alpha[dst] = sprite.alpha[src];
                canvas.ink[dst] = sprite.ink[src];
            }
        }
        boxes.push(PixelBox {
            class_id: *class_id,
            x0: *x,
            y0: y,
            x1: x + sprite.width as i64,
            y1: y + sprite.height as i64,
        });
    }
    ComposedElement { sprite: canvas, boxes, value: spec.value() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::class_digit;
    use crate::datagen::{IntRange, SymbolAtlas};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn atlas() -> InkAtlas {
        SymbolAtlas::synthetic().prepare(200).unwrap()
    }

    /// Decode glyph boxes back to an integer with the class map.
    fn decode(boxes: &[PixelBox]) -> i64 {
        let mut sorted = boxes.to_vec();
        sorted.sort_by_key(|b| b.x0);
        let negative = sorted[0].class_id == MINUS;
        let digits = if negative { &sorted[1..] } else { &sorted[..] };
        let mag = digits.iter().fold(0i64, |acc, b| acc * 10 + class_digit(b.class_id).unwrap() as i64);
        if negative {
            -mag
        } else {
            mag
        }
    }

    #[test]
    fn single_digit_seven() {
        let cfg = GenConfig { digits_per_element: IntRange::exactly(1), negative_probability: 0.0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = compose_element_with(&mut rng, &atlas(), &cfg, &ElementSpec { negative: false, digits: vec![7] });
        assert_eq!(e.value, 7);
        assert_eq!(e.boxes.len(), 1);
        assert_eq!(e.boxes[0].class_id, 9);
    }

    #[test]
    fn negative_three_digits() {
        let cfg = GenConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e = compose_element_with(&mut rng, &atlas(), &cfg, &ElementSpec { negative: true, digits: vec![1, 0, 5] });
        assert_eq!(e.value, -105);
        assert_eq!(e.boxes.len(), 4);
        let leftmost = e.boxes.iter().min_by_key(|b| b.x0).unwrap();
        assert_eq!(leftmost.class_id, 1);
        assert_eq!(decode(&e.boxes), -105);
        // minus gap within [2, 6]
        let gap = e.boxes[1].x0 - e.boxes[0].x1;
        assert!((2..=6).contains(&gap), "gap {gap}");
    }

    #[test]
    fn equal_seed_is_deterministic() {
        let cfg = GenConfig::default();
        let a = compose_element(&mut ChaCha8Rng::seed_from_u64(9), &atlas(), &cfg);
        let b = compose_element(&mut ChaCha8Rng::seed_from_u64(9), &atlas(), &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn random_elements_decode_and_do_not_overlap() {
        let cfg = GenConfig::default();
        let atlas = atlas();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let e = compose_element(&mut rng, &atlas, &cfg);
            assert_eq!(decode(&e.boxes), e.value);
            assert!((1..=4).contains(&e.boxes.len()));
            for w in e.boxes.windows(2) {
                assert!(w[0].x1 < w[1].x0);
            }
            assert!(e.boxes.iter().all(|b| b.x1 <= e.sprite.width as i64 && b.y1 <= e.sprite.height as i64));
        }
    }
}
