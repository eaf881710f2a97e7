use serde::{Deserialize, Serialize};

use super::RenderError;
use crate::calctrace::{format_int, CellRef, Role};
use crate::matrix::MatrixValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BracketPair {
    #[default]
    Paren,
    Square,
    Bar,
}

impl BracketPair {
    pub fn glyphs(&self) -> (char, char) {
        match self {
            BracketPair::Paren => ('(', ')'),
            BracketPair::Square => ('[', ']'),
            BracketPair::Bar => ('|', '|'),
        }
    }
}

/// One matrix element: a square with its text centered inside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquTexUnit {
    pub cell: CellRef,
    pub text: String,
    /// Center in scene units.
    pub x: f64,
    pub y: f64,
    pub side: f64,
    #[serde(default = "visible_default")]
    pub visible: bool,
}

fn visible_default() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixLayout {
    pub role: Role,
    pub rows: usize,
    pub cols: usize,
    pub brackets: BracketPair,
    /// Center of unit (0, 0).
    pub origin: (f64, f64),
    pub side: f64,
    pub units: Vec<SquTexUnit>,
    #[serde(default = "visible_default")]
    pub visible: bool,
}

/// Gap between the grid edge and a bracket, and how far brackets overshoot
/// the grid vertically, both as a fraction of the side.
const BRACKET_GAP: f64 = 0.12;
const BRACKET_OVERSHOOT: f64 = 0.1;
const BRACKET_DEPTH: f64 = 0.18;

/// Units abut with zero spacing: unit (r, c) sits at
/// `origin + (c·side, −r·side)`.
pub fn layout(mv: &MatrixValue, role: Role, brackets: BracketPair, side: f64) -> Result<MatrixLayout, RenderError> {
    if mv.rows() == 0 || mv.cols() == 0 {
        return Err(RenderError::EmptyMatrix);
    }
    if !(side.is_finite() && side > 0.0) {
        return Err(RenderError::InvalidStyle("unit side must be positive".into()));
    }
    let mut units = Vec::with_capacity(mv.rows() * mv.cols());
    for r in 0..mv.rows() {
        for c in 0..mv.cols() {
            units.push(SquTexUnit {
                cell: CellRef { role, row: r, col: c },
                text: format_int(mv.get(r, c)),
                x: c as f64 * side,
                y: -(r as f64) * side,
                side,
                visible: true,
            });
        }
    }
    Ok(MatrixLayout { role, rows: mv.rows(), cols: mv.cols(), brackets, origin: (0.0, 0.0), side, units, visible: true })
}

impl MatrixLayout {
    pub fn grid_width(&self) -> f64 {
        self.cols as f64 * self.side
    }

    pub fn grid_height(&self) -> f64 {
        self.rows as f64 * self.side
    }

    /// Horizontal room taken by one bracket including its gap.
    pub fn bracket_room(&self) -> f64 {
        (BRACKET_GAP + BRACKET_DEPTH) * self.side
    }

    pub fn total_width(&self) -> f64 {
        self.grid_width() + 2.0 * self.bracket_room()
    }

    /// Bounding box `(x0, y0, x1, y1)` of the grid, y up.
    pub fn grid_bounds(&self) -> (f64, f64, f64, f64) {
        let h = self.side / 2.0;
        let (ox, oy) = self.origin;
        (ox - h, oy - self.grid_height() + h, ox - h + self.grid_width(), oy + h)
    }

    /// Vertical extent `(bottom, top)` of the bracket strokes.
    pub fn bracket_span(&self) -> (f64, f64) {
        let (_, y0, _, y1) = self.grid_bounds();
        let over = BRACKET_OVERSHOOT * self.side;
        (y0 - over, y1 + over)
    }

    /// x of the inner edge of the left and right brackets.
    pub fn bracket_x(&self) -> (f64, f64) {
        let (x0, _, x1, _) = self.grid_bounds();
        let gap = BRACKET_GAP * self.side;
        (x0 - gap, x1 + gap)
    }

    pub fn bracket_depth(&self) -> f64 {
        BRACKET_DEPTH * self.side
    }

    /// Move so that the grid's center lands on `(cx, cy)`.
    pub fn center_at(&mut self, cx: f64, cy: f64) {
        let (x0, y0, x1, y1) = self.grid_bounds();
        let (dx, dy) = (cx - (x0 + x1) / 2.0, cy - (y0 + y1) / 2.0);
        self.origin.0 += dx;
        self.origin.1 += dy;
        for u in &mut self.units {
            u.x += dx;
            u.y += dy;
        }
    }

    pub fn unit(&self, row: usize, col: usize) -> &SquTexUnit {
        &self.units[row * self.cols + col]
    }

    pub fn unit_mut(&mut self, row: usize, col: usize) -> &mut SquTexUnit {
        &mut self.units[row * self.cols + col]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_spacing_grid() {
        let m = MatrixValue::from_rows(vec![vec![1, 2], vec![3, 4]]).unwrap();
        let l = layout(&m, Role::A, BracketPair::Square, 0.8).unwrap();
        let (x0, y0, x1, y1) = l.grid_bounds();
        assert!(((x1 - x0) - 1.6).abs() < 1e-12 && ((y1 - y0) - 1.6).abs() < 1e-12);
        assert_eq!(l.unit(1, 0).y, -0.8);
        assert_eq!(l.unit(0, 1).x, 0.8);
        // neighbors share an edge
        assert!((l.unit(0, 0).x + 0.4 - (l.unit(0, 1).x - 0.4)).abs() < 1e-12);
        assert!(l.total_width() > 1.6);
    }

    #[test]
    fn single_unit_brackets_cover_it() {
        let m = MatrixValue::from_rows(vec![vec![-7]]).unwrap();
        let l = layout(&m, Role::A, BracketPair::Bar, 1.0).unwrap();
        let (b, t) = l.bracket_span();
        assert!(t - b >= 1.0);
        assert_eq!(l.units[0].text, "−7");
        assert_eq!(l.brackets.glyphs(), ('|', '|'));
    }

    #[test]
    fn recentering_keeps_spacing() {
        let m = MatrixValue::from_rows(vec![vec![1, 2, 3], vec![4, 5, 6]]).unwrap();
        let mut l = layout(&m, Role::B, BracketPair::Paren, 0.5).unwrap();
        l.center_at(2.0, -1.0);
        let (x0, y0, x1, y1) = l.grid_bounds();
        assert!(((x0 + x1) / 2.0 - 2.0).abs() < 1e-12 && ((y0 + y1) / 2.0 + 1.0).abs() < 1e-12);
        for r in 0..2 {
            for c in 0..3 {
                let u = l.unit(r, c);
                assert!((u.x - (l.origin.0 + c as f64 * 0.5)).abs() < 1e-12);
                assert!((u.y - (l.origin.1 - r as f64 * 0.5)).abs() < 1e-12);
            }
        }
    }
}
