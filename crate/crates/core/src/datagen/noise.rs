use rand::Rng;

use super::GenSample;

/// Opacity of a noise blob at distance `d` from its center: linear decay
/// from `peak` at the center to 0 at `radius`.
pub fn noise_alpha(d: f64, radius: f64, peak: f64) -> f64 {
    if d >= radius {
        0.0
    } else {
        peak * (1.0 - d / radius)
    }
}

/// Composite `⌊level · area / 2000⌋` dark speckle blobs of radius 1–4 px.
/// Boxes are untouched; level 0 returns the input unchanged.
pub fn add_noise(rng: &mut impl Rng, mut sample: GenSample, level: f64) -> GenSample {
    let (w, h) = sample.image.dimensions();
    let count = (level.clamp(0.0, 1.0) * (w as f64 * h as f64) / 2000.0).floor() as u64;
    for _ in 0..count {
        let cx = rng.random_range(0.0..w as f64);
        let cy = rng.random_range(0.0..h as f64);
        let radius = rng.random_range(1.0..=4.0);
        let peak = rng.random_range(0.4..=1.0);
        let ink = rng.random_range(0..=60) as f64;
        let x0 = (cx - radius).floor().max(0.0) as u32;
        let y0 = (cy - radius).floor().max(0.0) as u32;
        let x1 = ((cx + radius).ceil() as u32).min(w - 1);
        let y1 = ((cy + radius).ceil() as u32).min(h - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d = ((x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2)).sqrt();
                let a = noise_alpha(d, radius, peak);
                if a > 0.0 {
                    let p = sample.image.get_pixel_mut(x, y);
                    p.0[0] = (p.0[0] as f64 * (1.0 - a) + ink * a).round() as u8;
                }
            }
        }
    }
    sample
}
