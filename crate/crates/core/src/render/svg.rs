use std::fmt::Write;

use super::layout::{BracketPair, MatrixLayout, SquTexUnit};
use super::plan::{FramePlan, Scene};
use super::{RenderError, Style, CANVAS_H, CANVAS_W, PX_PER_UNIT};
use crate::calctrace::Role;

/// Fixed two-decimal output; `+ 0.0` folds −0 into 0.
fn n(v: f64) -> String {
    format!("{:.2}", v + 0.0)
}

fn px(x: f64) -> f64 {
    CANVAS_W as f64 / 2.0 + x * PX_PER_UNIT
}

fn py(y: f64) -> f64 {
    CANVAS_H as f64 / 2.0 - y * PX_PER_UNIT
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

fn role_id(role: Role) -> &'static str {
    match role {
        Role::A => "a",
        Role::B => "b",
        Role::Result => "result",
    }
}

fn unit_font(u: &SquTexUnit) -> f64 {
    let len = u.text.chars().count().max(1) as f64;
    let base = 0.45 * u.side;
    if len > 2.0 { base * 2.4 / len } else { base }
}

fn write_unit(out: &mut String, u: &SquTexUnit, fill: &str, style: &Style) {
    let h = u.side / 2.0;
    let side_px = u.side * PX_PER_UNIT;
    let _ = write!(
        out,
        r#"<g class="unit" data-row="{}" data-col="{}"><rect x="{}" y="{}" width="{}" height="{}" fill="{}" stroke="{}" stroke-width="{}"/>"#,
        u.cell.row,
        u.cell.col,
        n(px(u.x - h)),
        n(py(u.y + h)),
        n(side_px),
        n(side_px),
        fill,
        style.unit_stroke,
        n((0.02 * side_px).max(1.0)),
    );
    if !u.text.is_empty() {
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" dy="0.35em" text-anchor="middle" font-size="{}" fill="{}">{}</text>"#,
            n(px(u.x)),
            n(py(u.y)),
            n(unit_font(u) * PX_PER_UNIT),
            style.text_color,
            escape(&u.text),
        );
    }
    out.push_str("</g>");
}

fn bracket_paths(l: &MatrixLayout) -> [String; 2] {
    let (bottom, top) = l.bracket_span();
    let (xl, xr) = l.bracket_x();
    let d = l.bracket_depth();
    let (t, b, mid) = (n(py(top)), n(py(bottom)), n(py((top + bottom) / 2.0)));
    match l.brackets {
        BracketPair::Bar => {
            let (x0, x1) = (n(px(xl - d / 2.0)), n(px(xr + d / 2.0)));
            [format!("M{x0} {t}L{x0} {b}"), format!("M{x1} {t}L{x1} {b}")]
        }
        BracketPair::Square => {
            let (a0, a1, b0, b1) = (n(px(xl)), n(px(xl - d)), n(px(xr)), n(px(xr + d)));
            [format!("M{a0} {t}L{a1} {t}L{a1} {b}L{a0} {b}"), format!("M{b0} {t}L{b1} {t}L{b1} {b}L{b0} {b}")]
        }
        BracketPair::Paren => {
            let (a0, a1, b0, b1) = (n(px(xl)), n(px(xl - 2.0 * d)), n(px(xr)), n(px(xr + 2.0 * d)));
            [format!("M{a0} {t}Q{a1} {mid} {a0} {b}"), format!("M{b0} {t}Q{b1} {mid} {b0} {b}")]
        }
    }
}

fn write_layout(out: &mut String, l: &MatrixLayout, scene: &Scene, style: &Style) {
    let _ = write!(out, r#"<g id="matrix-{}" class="matrix">"#, role_id(l.role));
    let stroke = n((0.05 * l.side * PX_PER_UNIT).max(2.0));
    for d in bracket_paths(l) {
        let _ = write!(out, r#"<path class="bracket" d="{d}" fill="none" stroke="{}" stroke-width="{stroke}"/>"#, style.bracket_color);
    }
    for u in l.units.iter().filter(|u| u.visible) {
        let fill = if scene.is_highlighted(&u.cell) {
            &style.highlight_fill
        } else if l.role == Role::Result {
            &style.result_fill
        } else {
            &style.unit_fill
        };
        write_unit(out, u, fill, style);
    }
    out.push_str("</g>");
}

/// Standalone SVG for one scene. Output depends only on its arguments.
pub fn render_scene(scene: &Scene, style: &Style) -> String {
    let mut out = String::with_capacity(8192);
    let _ = write!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?><svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS_W}" height="{CANVAS_H}" viewBox="0 0 {CANVAS_W} {CANVAS_H}" font-family="{}">"#,
        escape(&style.font_family)
    );
    let _ = write!(out, r#"<rect class="background" x="0" y="0" width="{CANVAS_W}" height="{CANVAS_H}" fill="{}"/>"#, style.background);
    for l in scene.layouts.iter().filter(|l| l.visible) {
        write_layout(&mut out, l, scene, style);
    }
    for t in &scene.texts {
        let _ = write!(
            out,
            r#"<text class="symbol" x="{}" y="{}" dy="0.35em" text-anchor="middle" font-size="{}" fill="{}">{}</text>"#,
            n(px(t.x)),
            n(py(t.y)),
            n(t.size * PX_PER_UNIT),
            style.text_color,
            escape(&t.text),
        );
    }
    out.push_str(r#"<g id="annotation">"#);
    let max_w = CANVAS_W as f64 / PX_PER_UNIT - 0.8;
    for (i, line) in scene.annotation.iter().enumerate() {
        let size = (max_w / (0.6 * line.chars().count().max(1) as f64)).min(0.32);
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="{}" fill="{}">{}</text>"#,
            n(px(0.0)),
            n(py(scene.annotation_y - 0.5 * i as f64)),
            n(size * PX_PER_UNIT),
            style.annotation_color,
            escape(line),
        );
    }
    out.push_str("</g></svg>\n");
    out
}

/// SVG for 1-based frame `n` of a plan.
pub fn render_frame(plan: &FramePlan, n: usize) -> Result<String, RenderError> {
    Ok(render_scene(plan.scene(n)?, &plan.style))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calctrace::{det_trace, CellRef};
    use crate::render::plan;
    use crate::MatrixValue;

    #[test]
    fn escapes_and_zero() {
        assert_eq!(escape("a<b&\"c\""), "a&lt;b&amp;&quot;c&quot;");
        assert_eq!(n(-0.0), "0.00");
    }

    #[test]
    fn single_highlight_rect() {
        let m = MatrixValue::from_rows(vec![vec![1, 2], vec![3, 4]]).unwrap();
        let p = plan(&det_trace(&m).unwrap(), &Style::default(), 30).unwrap();
        let mut scene = p.phases.last().unwrap().scene.clone();
        scene.highlights = vec![CellRef::a(0, 0)];
        let svg = render_scene(&scene, &p.style);
        let needle = format!("fill=\"{}\"", p.style.highlight_fill);
        assert_eq!(svg.matches(&needle).count(), 1);
        assert_eq!(svg, render_scene(&scene, &p.style));
    }
}
