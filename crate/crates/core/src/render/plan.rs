use serde::{Deserialize, Serialize};

use super::layout::{layout, BracketPair, MatrixLayout};
use super::{RenderError, Style, CANVAS_H, CANVAS_W, PX_PER_UNIT};
use crate::calctrace::{format_int, verify_trace, CalcTrace, CellRef, OpKind, Role, StepKind, TraceResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseKind {
    Reveal,
    Step,
    Accumulate,
    Emit,
    Result,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneText {
    pub text: String,
    pub x: f64,
    pub y: f64,
    /// Font size in scene units.
    pub size: f64,
}

/// Everything drawn in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub layouts: Vec<MatrixLayout>,
    pub texts: Vec<SceneText>,
    pub highlights: Vec<CellRef>,
    pub annotation: Vec<String>,
    /// Baseline of the first annotation line, scene units.
    pub annotation_y: f64,
}

impl Scene {
    pub fn is_highlighted(&self, cell: &CellRef) -> bool {
        self.highlights.contains(cell)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub kind: PhaseKind,
    /// Trace steps shown in this phase.
    pub steps: Vec<usize>,
    /// First frame, 1-based.
    pub start: usize,
    pub frames: usize,
    pub scene: Scene,
}

impl Phase {
    /// Inclusive 1-based frame range.
    pub fn range(&self) -> (usize, usize) {
        (self.start, self.start + self.frames - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePlan {
    pub fps: u32,
    pub op: OpKind,
    pub style: Style,
    pub frame_count: usize,
    pub phases: Vec<Phase>,
    /// Phase index for each trace step.
    pub step_phase: Vec<usize>,
}

impl FramePlan {
    /// Phase holding 1-based frame `n`.
    pub fn phase_of(&self, n: usize) -> Result<&Phase, RenderError> {
        if n == 0 || n > self.frame_count {
            return Err(RenderError::FrameOutOfRange(n, self.frame_count));
        }
        let i = self.phases.partition_point(|p| p.start + p.frames <= n);
        Ok(&self.phases[i])
    }

    pub fn scene(&self, n: usize) -> Result<&Scene, RenderError> {
        self.phase_of(n).map(|p| &p.scene)
    }

    /// Inclusive frame range of a trace step.
    pub fn step_range(&self, step: usize) -> Option<(usize, usize)> {
        self.step_phase.get(step).map(|&p| self.phases[p].range())
    }

    pub fn count(&self, kind: PhaseKind) -> usize {
        self.phases.iter().filter(|p| p.kind == kind).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

/// Frames for a phase of `duration` seconds; never fewer than one.
pub fn phase_frames(duration: f64, fps: u32) -> usize {
    ((duration * fps as f64).round() as usize).max(1)
}

const MAX_SCENE_W: f64 = 13.4;
const MAX_GRID_H: f64 = 5.0;
const GAP: f64 = 0.25;
const SYMBOL_W: f64 = 0.9;

enum Item {
    Matrix(MatrixLayout),
    Symbol(&'static str),
    Scalar(String),
}

impl Item {
    /// Width in units of the side length.
    fn width(&self) -> f64 {
        match self {
            Item::Matrix(l) => l.total_width() / l.side,
            Item::Symbol(_) => SYMBOL_W,
            Item::Scalar(s) => (s.chars().count() as f64 * 0.42).max(1.2),
        }
    }
}

struct Base {
    scene: Scene,
    /// The determinant value, shown once it is emitted.
    scalar: Option<SceneText>,
}

fn base_scene(trace: &CalcTrace, style: &Style) -> Result<Base, RenderError> {
    let brackets = match trace.op {
        OpKind::Det => BracketPair::Bar,
        OpKind::Add | OpKind::Mul => BracketPair::Square,
    };
    let mut items = vec![Item::Matrix(layout(&trace.operand_a, Role::A, brackets, 1.0)?)];
    if let Some(b) = &trace.operand_b {
        items.push(Item::Symbol(if trace.op == OpKind::Add { "+" } else { "×" }));
        items.push(Item::Matrix(layout(b, Role::B, brackets, 1.0)?));
    }
    items.push(Item::Symbol("="));
    match &trace.result {
        TraceResult::Scalar { value } => items.push(Item::Scalar(format_int(*value))),
        TraceResult::Matrix { matrix } => items.push(Item::Matrix(layout(matrix, Role::Result, brackets, 1.0)?)),
    }

    let k: f64 = items.iter().map(Item::width).sum::<f64>() + GAP * (items.len() - 1) as f64;
    let max_rows = items
        .iter()
        .filter_map(|i| match i {
            Item::Matrix(l) => Some(l.rows),
            _ => None,
        })
        .max()
        .unwrap_or(1) as f64;
    let side = style.unit_side.min(MAX_SCENE_W / k).min(MAX_GRID_H / max_rows);

    let center_y = 0.6;
    let mut x = -k * side / 2.0;
    let mut layouts = Vec::new();
    let mut texts = Vec::new();
    let mut scalar = None;
    for item in items {
        let w = item.width() * side;
        let cx = x + w / 2.0;
        match item {
            Item::Matrix(l) => {
                let m = match l.role {
                    Role::A => &trace.operand_a,
                    Role::B => trace.operand_b.as_ref().expect("b present"),
                    Role::Result => trace.operand(Role::Result).expect("matrix result"),
                };
                let mut l = layout(m, l.role, brackets, side)?;
                l.center_at(cx, center_y);
                layouts.push(l);
            }
            Item::Symbol(s) => texts.push(SceneText { text: s.into(), x: cx, y: center_y, size: 0.6 * side }),
            Item::Scalar(s) => scalar = Some(SceneText { text: s, x: cx, y: center_y, size: 0.6 * side }),
        }
        x += w + GAP * side;
    }
    let bottom = layouts.iter().map(|l| l.bracket_span().0).fold(f64::INFINITY, f64::min);
    let floor = -(CANVAS_H as f64) / PX_PER_UNIT / 2.0 + 1.2;
    let annotation_y = (bottom - 0.7).max(floor);
    debug_assert!(k * side <= CANVAS_W as f64 / PX_PER_UNIT);
    Ok(Base { scene: Scene { layouts, texts, highlights: Vec::new(), annotation: Vec::new(), annotation_y }, scalar })
}

/// Steps shown together: a selection joins the step after it.
fn group_steps(trace: &CalcTrace) -> Vec<Vec<usize>> {
    let mut groups = Vec::new();
    let mut i = 0;
    while i < trace.steps.len() {
        if trace.steps[i].kind == StepKind::Select && i + 1 < trace.steps.len() {
            groups.push(vec![i, i + 1]);
            i += 2;
        } else {
            groups.push(vec![i]);
            i += 1;
        }
    }
    groups
}

fn emit_text(trace: &CalcTrace, step: usize) -> String {
    let s = &trace.steps[step];
    match s.cells.iter().find(|c| c.role == Role::Result) {
        Some(c) => format!("c{}{} = {}", c.row + 1, c.col + 1, s.expression),
        None => format!("det = {}", s.expression),
    }
}

/// Cut a verified trace into phases: unit-by-unit reveal of the operands,
/// one phase per step group, then the final result.
pub fn plan(trace: &CalcTrace, style: &Style, fps: u32) -> Result<FramePlan, RenderError> {
    if fps == 0 {
        return Err(RenderError::InvalidStyle("fps must be positive".into()));
    }
    style.validate()?;
    if !verify_trace(trace).passed {
        return Err(RenderError::Unverified);
    }
    let Base { scene: base, scalar } = base_scene(trace, style)?;
    let result_idx = base.layouts.iter().position(|l| l.role == Role::Result);
    let operand_units: Vec<(usize, usize)> = base
        .layouts
        .iter()
        .enumerate()
        .filter(|(_, l)| l.role != Role::Result)
        .flat_map(|(li, l)| (0..l.units.len()).map(move |u| (li, u)))
        .collect();

    let mut phases: Vec<Phase> = Vec::new();
    let mut next = 1usize;
    let mut push = |phases: &mut Vec<Phase>, kind, steps, duration: f64, scene| {
        let frames = phase_frames(duration, fps);
        phases.push(Phase { kind, steps, start: next, frames, scene });
        next += frames;
    };

    // reveal
    let mut hidden = base.clone();
    for l in &mut hidden.layouts {
        for u in &mut l.units {
            u.visible = false;
        }
        if l.role == Role::Result {
            l.visible = false;
        }
    }
    for &(li, u) in &operand_units {
        hidden.layouts[li].units[u].visible = true;
        push(&mut phases, PhaseKind::Reveal, Vec::new(), style.reveal_per_unit, hidden.clone());
    }

    // steps; result cells fill in as they are produced
    let mut current = hidden;
    if let Some(ri) = result_idx {
        let l = &mut current.layouts[ri];
        l.visible = true;
        for u in &mut l.units {
            u.visible = true;
            u.text.clear();
        }
    }
    let mut step_phase = vec![0; trace.steps.len()];
    let mut scalar_shown = false;
    for group in group_steps(trace) {
        let mut scene = current.clone();
        scene.highlights.clear();
        scene.annotation.clear();
        let last = &trace.steps[*group.last().expect("non-empty group")];
        let kind = match last.kind {
            StepKind::Accumulate if last.cells.is_empty() => PhaseKind::Accumulate,
            StepKind::EmitResult => PhaseKind::Emit,
            _ => PhaseKind::Step,
        };
        for &i in &group {
            let s = &trace.steps[i];
            for c in &s.cells {
                if !scene.highlights.contains(c) {
                    scene.highlights.push(*c);
                }
            }
            scene.annotation.push(match s.kind {
                StepKind::EmitResult => emit_text(trace, i),
                _ => s.expression.clone(),
            });
            // a result cell referenced by a valued step is now known
            if let (Some(ri), Some(v)) = (result_idx, s.value) {
                for c in s.cells.iter().filter(|c| c.role == Role::Result) {
                    scene.layouts[ri].unit_mut(c.row, c.col).text = format_int(v);
                }
            }
            if s.kind == StepKind::EmitResult && !scalar_shown {
                if let Some(t) = &scalar {
                    scene.texts.push(t.clone());
                    scalar_shown = true;
                }
            }
            step_phase[i] = phases.len();
        }
        let duration = if kind == PhaseKind::Accumulate { style.accumulate_duration } else { style.step_duration };
        current = Scene { highlights: Vec::new(), annotation: Vec::new(), ..scene.clone() };
        push(&mut phases, kind, group, duration, scene);
    }

    // final result
    let mut fin = base;
    if let Some(t) = scalar {
        fin.texts.push(t);
    }
    fin.annotation = vec![format!("result: {}", trace.result)];
    push(&mut phases, PhaseKind::Result, Vec::new(), style.result_duration, fin);

    let frame_count = phases.iter().map(|p| p.frames).sum();
    Ok(FramePlan { fps, op: trace.op, style: style.clone(), frame_count, phases, step_phase })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calctrace::{add_trace, det_trace, mul_trace};
    use crate::MatrixValue;

    fn m(rows: Vec<Vec<i64>>) -> MatrixValue {
        MatrixValue::from_rows(rows).unwrap()
    }

    fn fig() -> MatrixValue {
        m(vec![vec![1, 2, 3], vec![-4, -5, -6], vec![7, 8, 9]])
    }

    #[test]
    fn det_has_six_highlight_phases_before_accumulate() {
        let p = plan(&det_trace(&fig()).unwrap(), &Style::default(), 30).unwrap();
        let acc = p.phases.iter().position(|ph| ph.kind == PhaseKind::Accumulate).unwrap();
        let lit = p.phases[..acc].iter().filter(|ph| !ph.scene.highlights.is_empty()).count();
        assert_eq!(lit, 6);
        assert_eq!(p.count(PhaseKind::Step), 6);
        // 9 units · 3 + 6 · 30 + 45 + 30 + 30
        assert_eq!(p.frame_count, 27 + 180 + 45 + 30 + 30);
    }

    #[test]
    fn scalar_det_phases() {
        let p = plan(&det_trace(&m(vec![vec![5]])).unwrap(), &Style::default(), 30).unwrap();
        let kinds: Vec<PhaseKind> = p.phases.iter().map(|ph| ph.kind).collect();
        assert_eq!(kinds, vec![PhaseKind::Reveal, PhaseKind::Emit, PhaseKind::Result]);
    }

    #[test]
    fn add_frame_count() {
        let a = fig();
        let p = plan(&add_trace(&a, &a).unwrap(), &Style::default(), 30).unwrap();
        assert_eq!(p.frame_count, 9 * 30 + 18 * 3 + 30);
    }

    #[test]
    fn ranges_tile_and_lookup() {
        let a = m(vec![vec![1, 2], vec![3, 4]]);
        let p = plan(&mul_trace(&a, &a).unwrap(), &Style::default(), 24).unwrap();
        let mut expect = 1;
        for ph in &p.phases {
            assert_eq!(ph.start, expect);
            expect += ph.frames;
        }
        assert_eq!(expect - 1, p.frame_count);
        for n in [1, 5, p.frame_count] {
            let ph = p.phase_of(n).unwrap();
            assert!(ph.range().0 <= n && n <= ph.range().1);
        }
        assert!(p.phase_of(0).is_err() && p.phase_of(p.frame_count + 1).is_err());
        assert_eq!(p.step_range(0), p.step_range(1));
    }

    #[test]
    fn refuses_unverified() {
        let mut t = det_trace(&fig()).unwrap();
        t.steps[1].value = Some(1);
        assert!(matches!(plan(&t, &Style::default(), 30), Err(RenderError::Unverified)));
    }

    #[test]
    fn wide_scene_shrinks_units() {
        let a = MatrixValue::filled(4, 4, -999).unwrap();
        let style = Style { unit_side: 1.5, ..Style::default() };
        let p = plan(&mul_trace(&a, &a).unwrap(), &style, 30).unwrap();
        let side = p.phases[0].scene.layouts[0].side;
        assert!(side < style.unit_side);
        let l = &p.phases.last().unwrap().scene.layouts;
        let x0 = l[0].bracket_x().0 - l[0].bracket_depth();
        let x1 = l[2].bracket_x().1 + l[2].bracket_depth();
        assert!(x0 >= -(CANVAS_W as f64) / PX_PER_UNIT / 2.0 && x1 <= CANVAS_W as f64 / PX_PER_UNIT / 2.0);
    }
}
