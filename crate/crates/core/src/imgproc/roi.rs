use serde::{Deserialize, Serialize};

use super::{CornerSet, ImgprocError};

/// Half-open pixel rectangle `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl Rect {
    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && other.x1 <= self.x1 && other.y1 <= self.y1
    }
}

/// Bounding box of the corners expanded by `margin` on every side and
/// clamped to the image.
pub fn roi_from_corners(corners: &CornerSet, width: u32, height: u32, margin: u32) -> Result<Rect, ImgprocError> {
    let first = corners.corners.first().ok_or(ImgprocError::NoContent)?;
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (first.x, first.y, first.x, first.y);
    for c in &corners.corners {
        min_x = min_x.min(c.x);
        min_y = min_y.min(c.y);
        max_x = max_x.max(c.x);
        max_y = max_y.max(c.y);
    }
    Ok(Rect {
        x0: min_x.saturating_sub(margin),
        y0: min_y.saturating_sub(margin),
        x1: max_x.saturating_add(margin).min(width),
        y1: max_y.saturating_add(margin).min(height),
    })
}
