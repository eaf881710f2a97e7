use image::GrayImage;
use serde::{Deserialize, Serialize};

use super::{ImgprocError, BACKGROUND, INK};

/// Rectangular structuring element anchored at `(width/2, height/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructElem {
    pub width: u32,
    pub height: u32,
}

impl StructElem {
    pub fn square(size: u32) -> Self {
        Self { width: size, height: size }
    }
}

impl Default for StructElem {
    fn default() -> Self {
        Self::square(3)
    }
}

/// Pixels darker than mid-gray count as ink.
pub fn is_ink(v: u8) -> bool {
    v < 128
}

/// One separable pass over the ink mask. `all = true` keeps ink only where
/// every pixel of the window is ink (erosion); otherwise any ink pixel
/// suffices (dilation). The window is clipped to the image, which for a
/// rectangle is the same as replicating the border.
fn pass(mask: &[bool], w: usize, h: usize, len: u32, horizontal: bool, all: bool) -> Vec<bool> {
    // dilation uses the reflected element so that opening stays
    // anti-extensive for even sizes
    let mut before = (len / 2) as isize;
    let mut after = len as isize - 1 - before;
    if !all {
        std::mem::swap(&mut before, &mut after);
    }
    let mut out = vec![false; mask.len()];
    let (outer, inner) = if horizontal { (h, w) } else { (w, h) };
    let idx = |o: usize, i: usize| if horizontal { o * w + i } else { i * w + o };
    for o in 0..outer {
        for i in 0..inner {
            let lo = (i as isize - before).max(0) as usize;
            let hi = (i as isize + after).min(inner as isize - 1) as usize;
            let mut window = (lo..=hi).map(|t| mask[idx(o, t)]);
            out[idx(o, i)] = if all { window.all(|b| b) } else { window.any(|b| b) };
        }
    }
    out
}

fn apply(img: &GrayImage, se: StructElem, all: bool) -> Result<GrayImage, ImgprocError> {
    if se.width == 0 || se.height == 0 {
        return Err(ImgprocError::BadStructElem);
    }
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(ImgprocError::EmptyImage);
    }
    let mask: Vec<bool> = img.as_raw().iter().map(|&v| is_ink(v)).collect();
    let mask = pass(&mask, w, h, se.width, true, all);
    let mask = pass(&mask, w, h, se.height, false, all);
    let data = mask.into_iter().map(|b| if b { INK } else { BACKGROUND }).collect();
    Ok(GrayImage::from_raw(img.width(), img.height(), data).expect("buffer matches dimensions"))
}

/// Shrink ink regions.
pub fn erode(img: &GrayImage, se: StructElem) -> Result<GrayImage, ImgprocError> {
    apply(img, se, true)
}

/// Grow ink regions.
pub fn dilate(img: &GrayImage, se: StructElem) -> Result<GrayImage, ImgprocError> {
    apply(img, se, false)
}

/// Erosion followed by dilation: removes ink specks smaller than `se`.
pub fn morph_open(img: &GrayImage, se: StructElem) -> Result<GrayImage, ImgprocError> {
    dilate(&erode(img, se)?, se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Luma;

    fn from_mask(w: u32, h: u32, f: impl Fn(u32, u32) -> bool) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| Luma([if f(x, y) { INK } else { BACKGROUND }]))
    }

    fn ink_count(img: &GrayImage) -> usize {
        img.pixels().filter(|p| is_ink(p.0[0])).count()
    }

    #[test]
    fn opening_removes_isolated_pixel() {
        let img = from_mask(9, 9, |x, y| x == 4 && y == 4);
        let out = morph_open(&img, StructElem::square(3)).unwrap();
        assert_eq!(ink_count(&out), 0);
    }

    #[test]
    fn opening_keeps_large_block() {
        let img = from_mask(20, 20, |x, y| (5..12).contains(&x) && (6..15).contains(&y));
        assert_eq!(morph_open(&img, StructElem::square(3)).unwrap(), img);
    }

    #[test]
    fn erosion_of_block() {
        let img = from_mask(10, 10, |x, y| (2..7).contains(&x) && (2..7).contains(&y));
        let e = erode(&img, StructElem::square(3)).unwrap();
        assert_eq!(e, from_mask(10, 10, |x, y| (3..6).contains(&x) && (3..6).contains(&y)));
        let d = dilate(&img, StructElem::square(3)).unwrap();
        assert_eq!(d, from_mask(10, 10, |x, y| (1..8).contains(&x) && (1..8).contains(&y)));
    }

    #[test]
    fn border_ink_survives_erosion() {
        // replicated border: a full-height ink column at x = 0 stays after erosion
        let img = from_mask(6, 6, |x, _| x < 2);
        let e = erode(&img, StructElem::square(3)).unwrap();
        assert!((0..6).all(|y| is_ink(e.get_pixel(0, y).0[0])));
    }

    #[test]
    fn bad_element_rejected() {
        let img = GrayImage::new(3, 3);
        assert!(matches!(erode(&img, StructElem { width: 0, height: 3 }), Err(ImgprocError::BadStructElem)));
    }
}
