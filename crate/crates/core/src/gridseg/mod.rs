//! Matrix structure from detections: centroids, row/column clustering,
//! split lines, cell assignment and signed multi-digit assembly.
//!
//! Clustering radius and element grouping scale with the median digit
//! height, so the same defaults work across canvas sizes.

mod assign;
mod cluster;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classes::{class_digit, is_structural, ClassId, LEFT_BRACKET, RIGHT_BRACKET};
use crate::detect::{masks, DetectionSet};
use crate::matrix::MatrixValue;

pub use assign::{assemble_matrix, assign_cells, parse_cell, GridModel};
pub use cluster::{
    centroids, cluster_axis, cluster_members, infer_lines, merge_lines, validate_lines, Centroid, ClusterParams,
};
pub use report::{overlay, ReconstructionReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("no content detections")]
    NoContent,
    #[error("missing element at ({row},{col})")]
    MissingElement { row: usize, col: usize },
    #[error("malformed element at ({row},{col})")]
    MalformedElement { row: usize, col: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridParams {
    /// Clustering radius in pixels; default half the glyph scale.
    pub epsilon: Option<f64>,
    /// Largest horizontal gap between glyphs of one element; default 0.3 × scale.
    pub element_gap: Option<f64>,
    pub min_pts: usize,
    /// Line merge distance; default ε/2.
    pub merge_delta: Option<f64>,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { epsilon: None, element_gap: None, min_pts: 1, merge_delta: None }
    }
}

/// Glyphs of a row that sit close enough horizontally to form one number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub tokens: Vec<usize>,
    pub x0: f64,
    pub x1: f64,
}

impl Element {
    pub fn center(&self) -> f64 {
        (self.x0 + self.x1) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    /// Centroids of content detections (structural classes excluded).
    pub centroids: Vec<Centroid>,
    pub scale: f64,
    pub epsilon: f64,
    pub elements: Vec<Element>,
    pub grid: GridModel,
    pub warnings: Vec<String>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

fn extent(values: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
}

/// Locate rows, columns and cell membership for a detection set.
pub fn segment(set: &DetectionSet, params: &GridParams) -> Result<Segmentation, GridError> {
    let px = set.to_pixels();
    let dets = &px.detections;
    let classes: Vec<ClassId> = dets.iter().map(|d| d.class_id).collect();
    let all_masks = masks(&px).expect("pixel units");
    let (all_centroids, mut warnings) = centroids(&all_masks);
    let content: Vec<Centroid> = all_centroids.iter().copied().filter(|c| !is_structural(classes[c.index])).collect();
    if content.is_empty() {
        return Err(GridError::NoContent);
    }

    let heights = |digits_only: bool| {
        content.iter().filter(|c| !digits_only || class_digit(classes[c.index]).is_some()).map(|c| dets[c.index].h).collect()
    };
    let scale = median(heights(true)).or_else(|| median(heights(false))).expect("content is non-empty");
    let epsilon = params.epsilon.unwrap_or(0.5 * scale);
    let gap = params.element_gap.unwrap_or(0.3 * scale);
    let delta = params.merge_delta.unwrap_or(epsilon / 2.0);
    let cp = ClusterParams::new(epsilon, params.min_pts)?;

    // rows from centroid y
    let ys: Vec<f64> = content.iter().map(|c| c.cy).collect();
    let row_clusters = cluster_members(&ys, &cp);
    let row_centers: Vec<f64> =
        row_clusters.iter().map(|m| m.iter().map(|&i| ys[i]).sum::<f64>() / m.len() as f64).collect();
    let row_extents: Vec<(f64, f64)> = row_clusters
        .iter()
        .map(|m| {
            extent(m.iter().map(|&i| {
                let (_, y0, _, y1) = dets[content[i].index].corners();
                (y0, y1)
            }))
        })
        .collect();

    // elements: horizontally adjacent glyphs within a row
    let mut elements: Vec<Element> = Vec::new();
    for members in &row_clusters {
        let mut toks: Vec<usize> = members.iter().map(|&i| content[i].index).collect();
        toks.sort_by(|&a, &b| {
            let (ka, kb) = (dets[a].corners(), dets[b].corners());
            ka.0.total_cmp(&kb.0).then(dets[a].cy.total_cmp(&dets[b].cy)).then(classes[a].cmp(&classes[b]))
        });
        let mut row_elements: Vec<Element> = Vec::new();
        for t in toks {
            let (x0, _, x1, _) = dets[t].corners();
            match row_elements.last_mut() {
                Some(e) if x0 - e.x1 <= gap => {
                    e.tokens.push(t);
                    e.x1 = e.x1.max(x1);
                }
                _ => row_elements.push(Element { tokens: vec![t], x0, x1 }),
            }
        }
        elements.extend(row_elements);
    }

    // columns from element centers
    let xs: Vec<f64> = elements.iter().map(Element::center).collect();
    let col_clusters = cluster_members(&xs, &cp);
    let col_centers: Vec<f64> =
        col_clusters.iter().map(|m| m.iter().map(|&i| xs[i]).sum::<f64>() / m.len() as f64).collect();
    let col_extents: Vec<(f64, f64)> =
        col_clusters.iter().map(|m| extent(m.iter().map(|&i| (elements[i].x0, elements[i].x1)))).collect();

    let cys: Vec<f64> = content.iter().map(|c| c.cy).collect();
    let cxs: Vec<f64> = content.iter().map(|c| c.cx).collect();
    let h_lines = validate_lines(&infer_lines(&row_centers, Some(&row_extents), delta), &cys);
    let v_lines = validate_lines(&infer_lines(&col_centers, Some(&col_extents), delta), &cxs);
    let (grid, assign_warnings) = assign_cells(&content, &classes, &h_lines, &v_lines);
    warnings.extend(assign_warnings);
    warnings.extend(consistency_warnings(&grid, &elements));
    warnings.extend(bracket_warnings(dets, &classes, &elements));

    Ok(Segmentation { centroids: content, scale, epsilon, elements, grid, warnings })
}

/// Flag cells that mix glyph groups and groups that straddle cells; both
/// mean the lines and the glyph spacing disagree.
fn consistency_warnings(grid: &GridModel, elements: &[Element]) -> Vec<String> {
    let mut cell_of = std::collections::HashMap::new();
    for (r, row) in grid.cells.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            for &t in cell {
                cell_of.insert(t, (r, c));
            }
        }
    }
    let mut element_of = std::collections::HashMap::new();
    let mut out = Vec::new();
    for (k, e) in elements.iter().enumerate() {
        let mut cells: Vec<(usize, usize)> = e.tokens.iter().filter_map(|t| cell_of.get(t).copied()).collect();
        cells.sort_unstable();
        cells.dedup();
        if cells.len() > 1 {
            out.push(format!("glyph group {k} spans cells {cells:?}"));
        }
        for &t in &e.tokens {
            element_of.insert(t, k);
        }
    }
    for (r, row) in grid.cells.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            let mut groups: Vec<usize> = cell.iter().filter_map(|t| element_of.get(t).copied()).collect();
            groups.sort_unstable();
            groups.dedup();
            if groups.len() > 1 {
                out.push(format!("cell ({r},{c}) holds {} separate glyph groups", groups.len()));
            }
        }
    }
    out
}

fn bracket_warnings(dets: &[crate::detect::Detection], classes: &[ClassId], elements: &[Element]) -> Vec<String> {
    let (lo, hi) = extent(elements.iter().map(|e| (e.x0, e.x1)));
    let mut out = Vec::new();
    for (i, d) in dets.iter().enumerate() {
        match classes[i] {
            LEFT_BRACKET if d.cx > lo => out.push(format!("left bracket {i} does not flank the elements")),
            RIGHT_BRACKET if d.cx < hi => out.push(format!("right bracket {i} does not flank the elements")),
            _ => {}
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub segmentation: Segmentation,
    pub matrix: MatrixValue,
}

/// Full pipeline from detections to a matrix.
pub fn reconstruct(set: &DetectionSet, params: &GridParams) -> Result<Reconstruction, GridError> {
    let segmentation = segment(set, params)?;
    let classes: Vec<ClassId> = set.detections.iter().map(|d| d.class_id).collect();
    let matrix = assemble_matrix(&segmentation.grid, &classes)?;
    Ok(Reconstruction { segmentation, matrix })
}
