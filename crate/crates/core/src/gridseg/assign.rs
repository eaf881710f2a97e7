use serde::{Deserialize, Serialize};

use super::{Centroid, GridError};
use crate::classes::{class_digit, ClassId, MINUS};
use crate::matrix::MatrixValue;

/// Split lines plus the detection indices that fell in each cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridModel {
    pub h_lines: Vec<f64>,
    pub v_lines: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    /// `cells[r][c]`: detection indices sorted left to right.
    pub cells: Vec<Vec<Vec<usize>>>,
}

/// Cell index along one axis. A coordinate exactly on a line goes to the
/// neighbor whose center is nearer; equal distance picks the lower index.
fn axis_index(v: f64, lines: &[f64], lo: f64, hi: f64, warnings: &mut Vec<String>, what: &str) -> usize {
    let below = lines.iter().filter(|&&l| l < v).count();
    let Some(on) = lines.iter().position(|&l| l == v) else {
        return below;
    };
    let bound = |k: usize| -> (f64, f64) {
        let a = if k == 0 { lo } else { lines[k - 1] };
        let b = if k == lines.len() { hi } else { lines[k] };
        (a, b)
    };
    let center = |k: usize| {
        let (a, b) = bound(k);
        (a + b) / 2.0
    };
    let (d_lo, d_hi) = ((v - center(on)).abs(), (center(on + 1) - v).abs());
    if d_lo == d_hi {
        warnings.push(format!("token on {what} line {v} equidistant from both cells; assigned to {what} {on}"));
        on
    } else if d_lo < d_hi {
        on
    } else {
        on + 1
    }
}

/// Place every centroid in the cell bounded by the lines. Cells are sorted
/// by centroid x, ties broken by y then class.
pub fn assign_cells(
    centroids: &[Centroid],
    classes: &[ClassId],
    h_lines: &[f64],
    v_lines: &[f64],
) -> (GridModel, Vec<String>) {
    let rows = h_lines.len() + 1;
    let cols = v_lines.len() + 1;
    let mut warnings = Vec::new();
    let fold = |f: fn(&Centroid) -> f64| {
        let lo = centroids.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = centroids.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (y_lo, y_hi) = fold(|c| c.cy);
    let (x_lo, x_hi) = fold(|c| c.cx);
    let mut cells: Vec<Vec<Vec<&Centroid>>> = vec![vec![Vec::new(); cols]; rows];
    for c in centroids {
        let r = axis_index(c.cy, h_lines, y_lo, y_hi, &mut warnings, "row");
        let k = axis_index(c.cx, v_lines, x_lo, x_hi, &mut warnings, "column");
        cells[r][k].push(c);
    }
    let cells = cells
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|mut cell| {
                    cell.sort_by(|a, b| {
                        a.cx.total_cmp(&b.cx).then(a.cy.total_cmp(&b.cy)).then(classes[a.index].cmp(&classes[b.index]))
                    });
                    cell.into_iter().map(|c| c.index).collect()
                })
                .collect()
        })
        .collect();
    (GridModel { h_lines: h_lines.to_vec(), v_lines: v_lines.to_vec(), rows, cols, cells }, warnings)
}

/// Read one cell: optional leading minus followed by decimal digits.
pub fn parse_cell(classes: &[ClassId]) -> Option<i64> {
    let (negative, digits) = match classes.split_first() {
        Some((&MINUS, rest)) => (true, rest),
        _ => (false, classes),
    };
    if digits.is_empty() {
        return None;
    }
    let mut value: i64 = 0;
    for &c in digits {
        let d = class_digit(c)?;
        value = value.checked_mul(10)?.checked_add(d as i64)?;
    }
    Some(if negative { -value } else { value })
}

/// Concatenate each cell's glyphs into a signed integer.
pub fn assemble_matrix(grid: &GridModel, classes: &[ClassId]) -> Result<MatrixValue, GridError> {
    let mut values = Vec::with_capacity(grid.rows * grid.cols);
    for (r, row) in grid.cells.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            if cell.is_empty() {
                return Err(GridError::MissingElement { row: r, col: c });
            }
            let glyphs: Vec<ClassId> = cell.iter().map(|&i| classes[i]).collect();
            values.push(parse_cell(&glyphs).ok_or(GridError::MalformedElement { row: r, col: c })?);
        }
    }
    Ok(MatrixValue::from_flat(grid.rows, grid.cols, values).expect("cells are rectangular"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{digit_class, EQUALS, LEFT_BRACKET};

    fn c(cx: f64, cy: f64, index: usize) -> Centroid {
        Centroid { cx, cy, index }
    }

    #[test]
    fn cell_parsing() {
        // −, 1, 0, 5
        assert_eq!(parse_cell(&[1, 3, 2, 7]), Some(-105));
        assert_eq!(parse_cell(&[2]), Some(0));
        assert_eq!(parse_cell(&[7, MINUS]), None);
        assert_eq!(parse_cell(&[MINUS]), None);
        assert_eq!(parse_cell(&[MINUS, MINUS, 3]), None);
        assert_eq!(parse_cell(&[digit_class(4), EQUALS]), None);
        assert_eq!(parse_cell(&[LEFT_BRACKET]), None);
        assert_eq!(parse_cell(&[digit_class(9); 25]), None);
    }

    #[test]
    fn no_lines_single_cell() {
        let cents = [c(30.0, 10.0, 0), c(10.0, 10.0, 1)];
        let (g, w) = assign_cells(&cents, &[3, 4], &[], &[]);
        assert_eq!((g.rows, g.cols), (1, 1));
        assert_eq!(g.cells[0][0], vec![1, 0]);
        assert!(w.is_empty());
        assert_eq!(assemble_matrix(&g, &[3, 4]).unwrap().get(0, 0), 21);
    }

    #[test]
    fn rows_by_lines() {
        let cents = [c(10.0, 10.0, 0), c(10.0, 50.0, 1)];
        let (g, _) = assign_cells(&cents, &[2, 3], &[30.0], &[]);
        assert_eq!(g.cells, vec![vec![vec![0]], vec![vec![1]]]);
    }

    #[test]
    fn on_line_goes_to_nearest_center() {
        // rows span [0, 100], line at 40: centers 20 and 70
        let cents = [c(5.0, 0.0, 0), c(5.0, 40.0, 1), c(5.0, 100.0, 2)];
        let (g, w) = assign_cells(&cents, &[2, 3, 4], &[40.0], &[]);
        assert_eq!(g.cells[0][0], vec![0, 1]);
        assert!(w.is_empty());
        // symmetric case is a tie and warns
        let cents = [c(5.0, 0.0, 0), c(5.0, 50.0, 1), c(5.0, 100.0, 2)];
        let (g, w) = assign_cells(&cents, &[2, 3, 4], &[50.0], &[]);
        assert_eq!(g.cells[0][0], vec![0, 1]);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn missing_and_malformed() {
        let g = GridModel { h_lines: vec![], v_lines: vec![5.0], rows: 1, cols: 2, cells: vec![vec![vec![0], vec![]]] };
        assert_eq!(assemble_matrix(&g, &[2]).unwrap_err().to_string(), "missing element at (0,1)");
        let g = GridModel { h_lines: vec![], v_lines: vec![], rows: 1, cols: 1, cells: vec![vec![vec![0, 1]]] };
        assert_eq!(assemble_matrix(&g, &[7, MINUS]).unwrap_err().to_string(), "malformed element at (0,0)");
    }
}
