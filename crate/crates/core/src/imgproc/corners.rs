use image::GrayImage;
use serde::{Deserialize, Serialize};

use super::ImgprocError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    pub x: u32,
    pub y: u32,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CornerSet {
    pub corners: Vec<Corner>,
}

impl CornerSet {
    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShiTomasiParams {
    pub max_corners: usize,
    /// Keep responses at least this fraction of the strongest one.
    pub quality: f64,
    /// Minimum Euclidean distance between accepted corners, in pixels.
    pub min_distance: f64,
}

impl Default for ShiTomasiParams {
    fn default() -> Self {
        Self { max_corners: 100, quality: 0.01, min_distance: 10.0 }
    }
}

/// Minimum-eigenvalue response of the gradient structure tensor summed over
/// a 3×3 window; gradients from 3×3 Sobel, borders replicated.
pub(crate) fn min_eigen_response(img: &GrayImage) -> Vec<f64> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let at = |x: i64, y: i64| img.get_pixel(x.clamp(0, w - 1) as u32, y.clamp(0, h - 1) as u32).0[0] as f64;
    let n = (w * h) as usize;
    let (mut gxx, mut gxy, mut gyy) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for y in 0..h {
        for x in 0..w {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let i = (y * w + x) as usize;
            gxx[i] = gx * gx;
            gxy[i] = gx * gy;
            gyy[i] = gy * gy;
        }
    }
    let boxed = |v: &[f64], x: i64, y: i64| {
        let mut s = 0.0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                s += v[((y + dy).clamp(0, h - 1) * w + (x + dx).clamp(0, w - 1)) as usize];
            }
        }
        s
    };
    let mut out = vec![0.0; n];
    for y in 0..h {
        for x in 0..w {
            let (a, b, c) = (boxed(&gxx, x, y), boxed(&gxy, x, y), boxed(&gyy, x, y));
            let lambda = ((a + c) - ((a - c).powi(2) + 4.0 * b * b).sqrt()) / 2.0;
            out[(y * w + x) as usize] = lambda.max(0.0);
        }
    }
    out
}

/// Shi-Tomasi "good features": local maxima of the minimum-eigenvalue
/// response above `quality · max`, strongest first, greedily thinned to
/// `min_distance` and capped at `max_corners`. Equal scores are ordered
/// row-major.
pub fn shi_tomasi(img: &GrayImage, params: &ShiTomasiParams) -> Result<CornerSet, ImgprocError> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    if w == 0 || h == 0 {
        return Err(ImgprocError::EmptyImage);
    }
    let resp = min_eigen_response(img);
    let max = resp.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Ok(CornerSet::default());
    }
    let threshold = params.quality * max;
    let mut candidates = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let s = resp[(y * w + x) as usize];
            if s <= 0.0 || s < threshold {
                continue;
            }
            let mut is_max = true;
            'n: for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if (dx, dy) != (0, 0) && (0..w).contains(&nx) && (0..h).contains(&ny) && resp[(ny * w + nx) as usize] > s {
                        is_max = false;
                        break 'n;
                    }
                }
            }
            if is_max {
                candidates.push(Corner { x: x as u32, y: y as u32, score: s });
            }
        }
    }
    // stable sort keeps row-major order among ties
    candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
    let min_d2 = params.min_distance * params.min_distance;
    let mut kept: Vec<Corner> = Vec::new();
    for c in candidates {
        if kept.len() >= params.max_corners {
            break;
        }
        let far = kept.iter().all(|k| {
            let (dx, dy) = (k.x as f64 - c.x as f64, k.y as f64 - c.y as f64);
            dx * dx + dy * dy >= min_d2
        });
        if far {
            kept.push(c);
        }
    }
    Ok(CornerSet { corners: kept })
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Luma;

    fn square_image() -> GrayImage {
        GrayImage::from_fn(100, 100, |x, y| if (30..70).contains(&x) && (30..70).contains(&y) { Luma([0]) } else { Luma([255]) })
    }

    #[test]
    fn square_vertices_are_strongest() {
        let params = ShiTomasiParams { max_corners: 4, quality: 0.01, min_distance: 10.0 };
        let set = shi_tomasi(&square_image(), &params).unwrap();
        assert_eq!(set.len(), 4);
        for (vx, vy) in [(30.0, 30.0), (69.0, 30.0), (30.0, 69.0), (69.0, 69.0)] {
            let near = set.corners.iter().any(|c| ((c.x as f64 - vx).powi(2) + (c.y as f64 - vy).powi(2)).sqrt() <= 2.0);
            assert!(near, "no corner near ({vx},{vy}): {:?}", set.corners);
        }
    }

    #[test]
    fn min_distance_and_cap_respected() {
        let img = GrayImage::from_fn(120, 120, |x, y| Luma([if (x / 8 + y / 8) % 2 == 0 { 0 } else { 255 }]));
        let params = ShiTomasiParams { max_corners: 30, quality: 0.01, min_distance: 12.0 };
        let set = shi_tomasi(&img, &params).unwrap();
        assert!(!set.is_empty() && set.len() <= 30);
        for (i, a) in set.corners.iter().enumerate() {
            for b in &set.corners[i + 1..] {
                let d = ((a.x as f64 - b.x as f64).powi(2) + (a.y as f64 - b.y as f64).powi(2)).sqrt();
                assert!(d >= 12.0);
            }
        }
        assert!(set.corners.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn flat_image_has_no_corners() {
        let img = GrayImage::from_pixel(30, 30, Luma([200]));
        assert!(shi_tomasi(&img, &ShiTomasiParams::default()).unwrap().is_empty());
    }

    #[test]
    fn straight_edge_has_weak_response() {
        let img = GrayImage::from_fn(40, 40, |x, _| Luma([if x < 20 { 0 } else { 255 }]));
        let resp = min_eigen_response(&img);
        // along the middle of a straight edge the smaller eigenvalue vanishes
        assert_eq!(resp[(20 * 40 + 20) as usize], 0.0);
    }
}
