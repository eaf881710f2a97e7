use image::{DynamicImage, GrayImage, Luma};
use serde::{Deserialize, Serialize};

use super::{ImgprocError, BACKGROUND, INK};

/// Luminance conversion `0.299 R + 0.587 G + 0.114 B`, rounded.
/// Single-channel inputs pass through; alpha is ignored.
pub fn to_gray(img: &DynamicImage) -> Result<GrayImage, ImgprocError> {
    if img.width() == 0 || img.height() == 0 {
        return Err(ImgprocError::EmptyImage);
    }
    Ok(match img {
        DynamicImage::ImageLuma8(g) => g.clone(),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => img.to_luma8(),
        _ => {
            let rgb = img.to_rgb8();
            GrayImage::from_fn(rgb.width(), rgb.height(), |x, y| {
                let [r, g, b] = rgb.get_pixel(x, y).0;
                let v = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
                Luma([v.round().clamp(0.0, 255.0) as u8])
            })
        }
    })
}

/// Square convolution kernel; smoothing kernels are separable and sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub size: u32,
    /// Row-major `size × size` weights, indexed `[(j + k) * size + (i + k)]`.
    pub weights: Vec<f64>,
    factor: Option<Vec<f64>>,
}

/// Default Gaussian σ for a kernel size: `0.3·((size−1)/2 − 1) + 0.8`.
pub fn auto_sigma(size: u32) -> f64 {
    0.3 * ((size as f64 - 1.0) / 2.0 - 1.0) + 0.8
}

fn check_size(size: u32) -> Result<(), ImgprocError> {
    if size < 3 || size.is_multiple_of(2) {
        Err(ImgprocError::BadKernelSize(size))
    } else {
        Ok(())
    }
}

impl Kernel {
    fn separable(size: u32, factor: Vec<f64>) -> Self {
        let weights = factor.iter().flat_map(|a| factor.iter().map(move |b| a * b)).collect();
        Self { size, weights, factor: Some(factor) }
    }

    pub fn gaussian(size: u32, sigma: Option<f64>) -> Result<Self, ImgprocError> {
        check_size(size)?;
        let sigma = sigma.filter(|s| *s > 0.0).unwrap_or_else(|| auto_sigma(size));
        let k = (size / 2) as i64;
        let raw: Vec<f64> = (-k..=k).map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp()).collect();
        let sum: f64 = raw.iter().sum();
        Ok(Self::separable(size, raw.into_iter().map(|v| v / sum).collect()))
    }

    /// Unweighted mean over the window.
    pub fn box_mean(size: u32) -> Result<Self, ImgprocError> {
        check_size(size)?;
        Ok(Self::separable(size, vec![1.0 / size as f64; size as usize]))
    }

    pub fn center(&self) -> f64 {
        let k = (self.size / 2) as usize;
        self.weights[k * self.size as usize + k]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Correlate `img` with the kernel, edge-replicated, in floating point.
    pub(crate) fn apply(&self, img: &GrayImage) -> Vec<f64> {
        let (w, h) = img.dimensions();
        let src: Vec<f64> = img.as_raw().iter().map(|&v| v as f64).collect();
        let k = (self.size / 2) as i64;
        let clamp = |v: i64, n: u32| v.clamp(0, n as i64 - 1) as usize;
        match &self.factor {
            Some(f) => {
                let mut tmp = vec![0.0; src.len()];
                for y in 0..h as usize {
                    for x in 0..w as i64 {
                        let mut acc = 0.0;
                        for (t, wt) in f.iter().enumerate() {
                            acc += wt * src[y * w as usize + clamp(x + t as i64 - k, w)];
                        }
                        tmp[y * w as usize + x as usize] = acc;
                    }
                }
                let mut out = vec![0.0; src.len()];
                for y in 0..h as i64 {
                    for x in 0..w as usize {
                        let mut acc = 0.0;
                        for (t, wt) in f.iter().enumerate() {
                            acc += wt * tmp[clamp(y + t as i64 - k, h) * w as usize + x];
                        }
                        out[y as usize * w as usize + x] = acc;
                    }
                }
                out
            }
            None => {
                let mut out = vec![0.0; src.len()];
                for y in 0..h as i64 {
                    for x in 0..w as i64 {
                        let mut acc = 0.0;
                        for j in -k..=k {
                            for i in -k..=k {
                                let wt = self.weights[((j + k) * self.size as i64 + (i + k)) as usize];
                                acc += wt * src[clamp(y + j, h) * w as usize + clamp(x + i, w)];
                            }
                        }
                        out[y as usize * w as usize + x as usize] = acc;
                    }
                }
                out
            }
        }
    }
}

fn to_image(w: u32, h: u32, values: &[f64]) -> GrayImage {
    GrayImage::from_raw(w, h, values.iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect())
        .expect("buffer matches dimensions")
}

/// Gaussian smoothing with a `size × size` kernel; `sigma = None` derives σ
/// from the size.
pub fn gaussian_blur(img: &GrayImage, size: u32, sigma: Option<f64>) -> Result<GrayImage, ImgprocError> {
    let kernel = Kernel::gaussian(size, sigma)?;
    if img.width() == 0 || img.height() == 0 {
        return Err(ImgprocError::EmptyImage);
    }
    Ok(to_image(img.width(), img.height(), &kernel.apply(img)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    /// Gaussian-weighted neighborhood mean.
    #[default]
    Gaussian,
    /// Plain neighborhood mean.
    Mean,
}

/// Local thresholding: a pixel is ink when `I < T_local − offset`.
pub fn adaptive_threshold(
    img: &GrayImage,
    block_size: u32,
    offset: f64,
    method: ThresholdMethod,
) -> Result<GrayImage, ImgprocError> {
    let kernel = match method {
        ThresholdMethod::Gaussian => Kernel::gaussian(block_size, None)?,
        ThresholdMethod::Mean => Kernel::box_mean(block_size)?,
    };
    if img.width() == 0 || img.height() == 0 {
        return Err(ImgprocError::EmptyImage);
    }
    let local = kernel.apply(img);
    let data = img.as_raw().iter().zip(&local).map(|(&v, t)| if (v as f64) < t - offset { INK } else { BACKGROUND });
    Ok(GrayImage::from_raw(img.width(), img.height(), data.collect()).expect("buffer matches dimensions"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{Rgb, RgbImage, Rgba, RgbaImage};

    #[test]
    fn gray_conversion() {
        let white = DynamicImage::ImageRgb8(RgbImage::from_pixel(4, 3, Rgb([255, 255, 255])));
        assert!(to_gray(&white).unwrap().pixels().all(|p| p.0[0] == 255));
        let red = DynamicImage::ImageRgba8(RgbaImage::from_pixel(2, 2, Rgba([255, 0, 0, 255])));
        // 0.299 · 255 = 76.245
        assert!(to_gray(&red).unwrap().pixels().all(|p| p.0[0] == 76));
        let gray = GrayImage::from_fn(5, 5, |x, y| Luma([(x * 40 + y) as u8]));
        assert_eq!(to_gray(&DynamicImage::ImageLuma8(gray.clone())).unwrap(), gray);
        assert!(matches!(to_gray(&DynamicImage::new_rgb8(0, 0)), Err(ImgprocError::EmptyImage)));
    }

    #[test]
    fn kernel_normalized_and_auto_sigma() {
        assert!((auto_sigma(5) - 1.1).abs() < 1e-15);
        for size in [3, 5, 7, 11, 31] {
            let k = Kernel::gaussian(size, None).unwrap();
            assert!((k.sum() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(Kernel::gaussian(4, None), Err(ImgprocError::BadKernelSize(4))));
        assert!(matches!(gaussian_blur(&GrayImage::new(3, 3), 6, None), Err(ImgprocError::BadKernelSize(6))));
    }

    #[test]
    fn blur_preserves_constant() {
        let img = GrayImage::from_pixel(17, 9, Luma([128]));
        assert_eq!(gaussian_blur(&img, 5, None).unwrap(), img);
    }

    #[test]
    fn impulse_response_is_center_weight() {
        let mut img = GrayImage::new(21, 21);
        img.put_pixel(10, 10, Luma([255]));
        let out = gaussian_blur(&img, 5, None).unwrap();
        // independent evaluation of K(0,0) for σ = 1.1
        let sigma: f64 = 1.1;
        let g: Vec<f64> = (-2i32..=2).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
        let s: f64 = g.iter().sum();
        let k00 = (g[2] / s) * (g[2] / s);
        assert_eq!(out.get_pixel(10, 10).0[0], (255.0 * k00).round() as u8);
    }

    #[test]
    fn blur_semigroup_on_smooth_image() {
        let img = GrayImage::from_fn(64, 48, |x, y| {
            let v = 128.0 + 60.0 * ((x as f64) / 9.0).sin() * ((y as f64) / 7.0).cos();
            Luma([v.round() as u8])
        });
        let (s1, s2) = (1.0, 1.5);
        let twice = gaussian_blur(&gaussian_blur(&img, 9, Some(s1)).unwrap(), 11, Some(s2)).unwrap();
        let once = gaussian_blur(&img, 13, Some((s1 * s1 + s2 * s2).sqrt())).unwrap();
        for (a, b) in twice.pixels().zip(once.pixels()) {
            assert!((a.0[0] as i32 - b.0[0] as i32).abs() <= 2);
        }
    }

    #[test]
    fn threshold_constant_is_background() {
        let img = GrayImage::from_pixel(20, 20, Luma([90]));
        for method in [ThresholdMethod::Gaussian, ThresholdMethod::Mean] {
            let out = adaptive_threshold(&img, 11, 2.0, method).unwrap();
            assert!(out.pixels().all(|p| p.0[0] == BACKGROUND));
        }
        assert!(matches!(adaptive_threshold(&img, 10, 2.0, ThresholdMethod::Gaussian), Err(ImgprocError::BadKernelSize(10))));
    }

    #[test]
    fn dark_square_interior_is_ink() {
        let img = GrayImage::from_fn(30, 30, |x, y| if (12..17).contains(&x) && (12..17).contains(&y) { Luma([0]) } else { Luma([255]) });
        for method in [ThresholdMethod::Gaussian, ThresholdMethod::Mean] {
            let out = adaptive_threshold(&img, 11, 2.0, method).unwrap();
            for y in 12..17 {
                for x in 12..17 {
                    assert_eq!(out.get_pixel(x, y).0[0], INK, "({x},{y}) {method:?}");
                }
            }
            // far background stays background
            assert_eq!(out.get_pixel(2, 2).0[0], BACKGROUND);
            assert!(out.pixels().all(|p| p.0[0] == INK || p.0[0] == BACKGROUND));
        }
    }

    #[test]
    fn inversion_swaps_ink_roles() {
        // bimodal stripes
        let img = GrayImage::from_fn(40, 40, |x, y| if (x / 6 + y / 9) % 2 == 0 { Luma([20]) } else { Luma([235]) });
        let inv = GrayImage::from_fn(40, 40, |x, y| Luma([255 - img.get_pixel(x, y).0[0]]));
        let a = adaptive_threshold(&img, 11, 2.0, ThresholdMethod::Gaussian).unwrap();
        let b = adaptive_threshold(&inv, 11, 2.0, ThresholdMethod::Gaussian).unwrap();
        let mut ink_a = 0;
        let mut ink_b = 0;
        for (x, y, p) in a.enumerate_pixels() {
            let q = b.get_pixel(x, y).0[0];
            assert!(!(p.0[0] == INK && q == INK), "({x},{y}) ink in both");
            if p.0[0] == INK {
                ink_a += 1;
                assert_eq!(img.get_pixel(x, y).0[0], 20, "ink must be on the dark side");
            }
            if q == INK {
                ink_b += 1;
                assert_eq!(img.get_pixel(x, y).0[0], 235);
            }
        }
        assert!(ink_a > 0 && ink_b > 0);
    }
}
