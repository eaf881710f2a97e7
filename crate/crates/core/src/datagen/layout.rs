use image::{GrayImage, Luma};
use rand::Rng;

use super::atlas::InkAtlas;
use super::compose::ComposedElement;
use super::{DatagenError, GenConfig, GenSample, LabelBox, PixelBox};
use crate::classes::{LEFT_BRACKET, RIGHT_BRACKET};
use crate::matrix::MatrixValue;

struct Placed<'a> {
    sprite: std::borrow::Cow<'a, super::AlphaSprite>,
    x: i64,
    y: i64,
    boxes: Vec<PixelBox>,
    cell: Option<(usize, usize)>,
}

/// Arrange composed elements into a matrix image.
///
/// Column width is the larger of 1.3× the widest element and the widest
/// element plus a gutter on each side, and never less than the tallest row
/// (cells are at least square). Row height follows the same rule without
/// the square floor. Elements are centered in their cells with a jitter
/// capped at half the gutter; the brackets are stretched to 110 % of the
/// grid height and nudged by up to 2 px.
pub fn layout_matrix(
    rng: &mut impl Rng,
    atlas: &InkAtlas,
    elements: &[Vec<ComposedElement>],
    cfg: &GenConfig,
) -> Result<GenSample, DatagenError> {
    let rows = elements.len();
    let cols = elements.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || elements.iter().any(|r| r.len() != cols) {
        return Err(DatagenError::InvalidConfig("element grid must be rectangular and non-empty".into()));
    }
    let gutter = cfg.min_gutter_px as i64;
    let cell_extent = |max: i64| ((max as f64) * 1.3).ceil().max((max + 2 * gutter) as f64) as i64;

    let row_h: Vec<i64> =
        elements.iter().map(|row| cell_extent(row.iter().map(|e| e.sprite.height as i64).max().unwrap())).collect();
    let min_col_w = *row_h.iter().max().unwrap();
    let col_w: Vec<i64> = (0..cols)
        .map(|c| cell_extent(elements.iter().map(|row| row[c].sprite.width as i64).max().unwrap()).max(min_col_w))
        .collect();
    let grid_w: i64 = col_w.iter().sum();
    let grid_h: i64 = row_h.iter().sum();
    let jitter = (cfg.jitter_px as i64).min(gutter / 2);

    let mut placed: Vec<Placed> = Vec::new();
    let mut values = Vec::with_capacity(rows * cols);
    let mut y_off = 0;
    for (r, row) in elements.iter().enumerate() {
        let mut x_off = 0;
        for (c, e) in row.iter().enumerate() {
            let jx = rng.random_range(-jitter..=jitter);
            let jy = rng.random_range(-jitter..=jitter);
            let x = x_off + (col_w[c] - e.sprite.width as i64) / 2 + jx;
            let y = y_off + (row_h[r] - e.sprite.height as i64) / 2 + jy;
            placed.push(Placed {
                sprite: std::borrow::Cow::Borrowed(&e.sprite),
                x,
                y,
                boxes: e.boxes.iter().map(|b| b.translate(x, y)).collect(),
                cell: Some((r, c)),
            });
            values.push(e.value);
            x_off += col_w[c];
        }
        y_off += row_h[r];
    }

    let bracket_h = ((grid_h as f64) * 1.1).round() as i64;
    for (class_id, left) in [(LEFT_BRACKET, true), (RIGHT_BRACKET, false)] {
        let base = atlas.pick(class_id, rng);
        let stretched = base.resize(base.width, bracket_h as u32);
        let stretched = stretched.crop_to_ink().unwrap_or(stretched);
        let gap = rng.random_range(4..=10);
        let dx = rng.random_range(-2..=2);
        let dy = rng.random_range(-2..=2);
        let w = stretched.width as i64;
        let h = stretched.height as i64;
        let x = if left { -gap - w + dx } else { grid_w + gap + dx };
        let y = (grid_h - h) / 2 + dy;
        placed.push(Placed {
            boxes: vec![PixelBox { class_id, x0: x, y0: y, x1: x + w, y1: y + h }],
            sprite: std::borrow::Cow::Owned(stretched),
            x,
            y,
            cell: None,
        });
    }

    let min_x = placed.iter().map(|p| p.x).min().unwrap();
    let min_y = placed.iter().map(|p| p.y).min().unwrap();
    let max_x = placed.iter().map(|p| p.x + p.sprite.width as i64).max().unwrap();
    let max_y = placed.iter().map(|p| p.y + p.sprite.height as i64).max().unwrap();
    let (ml, mr, mt, mb) =
        (cfg.margin_px.sample(rng), cfg.margin_px.sample(rng), cfg.margin_px.sample(rng), cfg.margin_px.sample(rng));
    let mut width = (max_x - min_x) as u32 + ml + mr;
    let mut height = (max_y - min_y) as u32 + mt + mb;
    if width > cfg.canvas_max || height > cfg.canvas_max {
        return Err(DatagenError::LayoutOverflow { width, height, max: cfg.canvas_max });
    }
    let pad_x = cfg.canvas_min.saturating_sub(width);
    let pad_y = cfg.canvas_min.saturating_sub(height);
    width += pad_x;
    height += pad_y;
    let shift_x = (ml + pad_x / 2) as i64 - min_x;
    let shift_y = (mt + pad_y / 2) as i64 - min_y;

    let mut image = GrayImage::from_pixel(width, height, Luma([255]));
    let mut boxes: Vec<(LabelBox, Option<(usize, usize)>)> = Vec::new();
    for p in &placed {
        p.sprite.draw_onto(&mut image, p.x + shift_x, p.y + shift_y);
        for b in &p.boxes {
            boxes.push((LabelBox::from_pixels(&b.translate(shift_x, shift_y), width, height), p.cell));
        }
    }
    boxes.sort_by(|a, b| a.0.cy.total_cmp(&b.0.cy).then(a.0.cx.total_cmp(&b.0.cx)));
    let truth = MatrixValue::from_flat(rows, cols, values).expect("grid is rectangular");
    let (boxes, cells) = boxes.into_iter().unzip();
    Ok(GenSample { image, boxes, truth, cells })
}
