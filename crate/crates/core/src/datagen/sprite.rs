use image::GrayImage;

/// Grayscale glyph with a per-pixel opacity channel.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSprite {
    pub width: u32,
    pub height: u32,
    /// Row-major opacity in `[0,1]`.
    pub alpha: Vec<f32>,
    /// Row-major gray value of the ink.
    pub ink: Vec<u8>,
}

impl AlphaSprite {
    pub fn blank(width: u32, height: u32) -> Self {
        let n = (width * height) as usize;
        Self { width, height, alpha: vec![0.0; n], ink: vec![255; n] }
    }

    fn idx(&self, x: u32, y: u32) -> usize {
        (y * self.width + x) as usize
    }

    pub fn alpha_at(&self, x: u32, y: u32) -> f32 {
        self.alpha[self.idx(x, y)]
    }

    pub fn ink_at(&self, x: u32, y: u32) -> u8 {
        self.ink[self.idx(x, y)]
    }

    /// Tight bounding box `(x0, y0, x1, y1)` of the non-transparent pixels.
    pub fn ink_bounds(&self) -> Option<(u32, u32, u32, u32)> {
        let mut bounds: Option<(u32, u32, u32, u32)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.alpha_at(x, y) > 0.0 {
                    bounds = Some(match bounds {
                        None => (x, y, x + 1, y + 1),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x + 1), y1.max(y + 1)),
                    });
                }
            }
        }
        bounds
    }

    pub fn crop(&self, x0: u32, y0: u32, x1: u32, y1: u32) -> Self {
        let (w, h) = (x1 - x0, y1 - y0);
        let mut out = Self::blank(w, h);
        for y in 0..h {
            for x in 0..w {
                let src = self.idx(x0 + x, y0 + y);
                let dst = out.idx(x, y);
                out.alpha[dst] = self.alpha[src];
                out.ink[dst] = self.ink[src];
            }
        }
        out
    }

    /// Crop to the ink bounding box; `None` for a fully transparent sprite.
    pub fn crop_to_ink(&self) -> Option<Self> {
        self.ink_bounds().map(|(x0, y0, x1, y1)| self.crop(x0, y0, x1, y1))
    }

    /// Grow strokes by one pixel (3×3 max filter on alpha, darkest ink).
    /// The sprite gains a one-pixel border so no ink is clipped.
    pub fn thicken(&self) -> Self {
        let (w, h) = (self.width + 2, self.height + 2);
        let mut out = Self::blank(w, h);
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let mut a = 0.0f32;
                let mut ink = 255u8;
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (sx, sy) = (x - 1 + dx, y - 1 + dy);
                        if sx < 0 || sy < 0 || sx >= self.width as i64 || sy >= self.height as i64 {
                            continue;
                        }
                        let i = self.idx(sx as u32, sy as u32);
                        if self.alpha[i] > 0.0 {
                            a = a.max(self.alpha[i]);
                            ink = ink.min(self.ink[i]);
                        }
                    }
                }
                let i = out.idx(x as u32, y as u32);
                out.alpha[i] = a;
                out.ink[i] = ink;
            }
        }
        out
    }

    /// Bilinear resample to `width × height`.
    pub fn resize(&self, width: u32, height: u32) -> Self {
        let width = width.max(1);
        let height = height.max(1);
        let mut out = Self::blank(width, height);
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        for y in 0..height {
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f64);
            let y0 = fy.floor() as u32;
            let y1 = (y0 + 1).min(self.height - 1);
            let ty = fy - y0 as f64;
            for x in 0..width {
                let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f64);
                let x0 = fx.floor() as u32;
                let x1 = (x0 + 1).min(self.width - 1);
                let tx = fx - x0 as f64;
                let lerp = |f: &dyn Fn(u32, u32) -> f64| {
                    let top = f(x0, y0) * (1.0 - tx) + f(x1, y0) * tx;
                    let bottom = f(x0, y1) * (1.0 - tx) + f(x1, y1) * tx;
                    top * (1.0 - ty) + bottom * ty
                };
                let a = lerp(&|x, y| self.alpha_at(x, y) as f64);
                let ink = lerp(&|x, y| self.ink_at(x, y) as f64);
                let i = out.idx(x, y);
                out.alpha[i] = a.clamp(0.0, 1.0) as f32;
                out.ink[i] = ink.round().clamp(0.0, 255.0) as u8;
            }
        }
        out
    }

    /// Alpha-composite onto `canvas` with the top-left corner at `(x, y)`.
    pub fn draw_onto(&self, canvas: &mut GrayImage, x: i64, y: i64) {
        let (cw, ch) = canvas.dimensions();
        for sy in 0..self.height {
            for sx in 0..self.width {
                let (px, py) = (x + sx as i64, y + sy as i64);
                if px < 0 || py < 0 || px >= cw as i64 || py >= ch as i64 {
                    continue;
                }
                let a = self.alpha_at(sx, sy) as f64;
                if a <= 0.0 {
                    continue;
                }
                let p = canvas.get_pixel_mut(px as u32, py as u32);
                let blended = p.0[0] as f64 * (1.0 - a) + self.ink_at(sx, sy) as f64 * a;
                p.0[0] = blended.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
}

/// Turn a white-background glyph into an alpha sprite.
///
/// Pixels at or above `white_cutoff` become fully transparent; darker pixels
/// get opacity `(cutoff - gray) / cutoff`, so pure black is opaque. The gray
/// value is kept as the ink.
pub fn binarize_to_alpha(glyph: &GrayImage, white_cutoff: u8) -> AlphaSprite {
    let (width, height) = glyph.dimensions();
    let cutoff = white_cutoff as f32;
    let mut sprite = AlphaSprite::blank(width, height);
    for (x, y, p) in glyph.enumerate_pixels() {
        let g = p.0[0];
        let i = (y * width + x) as usize;
        sprite.ink[i] = g;
        sprite.alpha[i] = if g >= white_cutoff || white_cutoff == 0 { 0.0 } else { (cutoff - g as f32) / cutoff };
    }
    sprite
}
