use super::expr::{format_int, format_operand};
use super::{CalcStep, CalcTrace, CellRef, OpKind, StepKind, TraceError, TraceResult};
use crate::matrix::MatrixValue;

fn step(kind: StepKind, cells: Vec<CellRef>, expression: String, value: Option<i64>, sign: Option<i8>) -> CalcStep {
    CalcStep { kind, cells, expression, value, sign }
}

type Diagonal = (Vec<(usize, usize)>, i8, String);

/// Diagonal products of the appended-columns picture for an order-`n`
/// matrix: `(cells, sign, label)`. Main diagonals start at columns
/// 0, 1, 2; anti-diagonals are read right to left.
fn diagonals(n: usize) -> Vec<Diagonal> {
    match n {
        2 => vec![
            (vec![(0, 0), (1, 1)], 1, "main diagonal".into()),
            (vec![(0, 1), (1, 0)], -1, "anti-diagonal".into()),
        ],
        3 => {
            let main = (0..3).map(|k| ((0..3).map(|r| (r, (r + k) % 3)).collect(), 1, format!("main diagonal {}", k + 1)));
            // anti-diagonal from appended column s runs (0,s), (1,s−1), (2,s−2)
            let anti = [4usize, 3, 2]
                .into_iter()
                .enumerate()
                .map(|(k, s)| ((0..3).map(|r| (r, (s - r) % 3)).collect(), -1, format!("anti-diagonal {}", k + 1)));
            main.chain(anti).collect()
        }
        _ => Vec::new(),
    }
}

/// Determinant by the diagonal rule for orders 1–3.
pub fn det_trace(m: &MatrixValue) -> Result<CalcTrace, TraceError> {
    if !m.is_square() {
        return Err(TraceError::NotSquare);
    }
    let n = m.rows();
    if n > 3 {
        return Err(TraceError::UnsupportedOrder);
    }
    let mut steps = Vec::new();
    let det = if n == 1 {
        let v = m.get(0, 0);
        steps.push(step(StepKind::EmitResult, vec![CellRef::a(0, 0)], format_int(v), Some(v), None));
        v
    } else {
        let mut terms: Vec<(i64, i8)> = Vec::new();
        for (cells, sign, label) in diagonals(n) {
            let refs: Vec<CellRef> = cells.iter().map(|&(r, c)| CellRef::a(r, c)).collect();
            let factors: Vec<i64> = cells.iter().map(|&(r, c)| m.get(r, c)).collect();
            let product = factors.iter().try_fold(1i64, |acc, &f| acc.checked_mul(f)).ok_or(TraceError::Overflow)?;
            let text = factors.iter().map(|&f| format_operand(f)).collect::<Vec<_>>().join(" × ");
            steps.push(step(StepKind::Select, refs.clone(), label, None, Some(sign)));
            steps.push(step(StepKind::Multiply, refs, format!("{text} = {}", format_int(product)), Some(product), Some(sign)));
            terms.push((product, sign));
        }
        let mut total = 0i64;
        let mut text = String::new();
        for (k, &(v, sign)) in terms.iter().enumerate() {
            total = if sign > 0 { total.checked_add(v) } else { total.checked_sub(v) }.ok_or(TraceError::Overflow)?;
            match (k, sign > 0) {
                (0, true) => text.push_str(&format_operand(v)),
                (0, false) => text.push_str(&format!("\u{2212}{}", format_operand(v))),
                (_, true) => text.push_str(&format!(" + {}", format_operand(v))),
                (_, false) => text.push_str(&format!(" \u{2212} {}", format_operand(v))),
            }
        }
        steps.push(step(StepKind::Accumulate, vec![], format!("{text} = {}", format_int(total)), Some(total), None));
        steps.push(step(StepKind::EmitResult, vec![], format_int(total), Some(total), None));
        total
    };
    Ok(CalcTrace { op: OpKind::Det, operand_a: m.clone(), operand_b: None, steps, result: TraceResult::Scalar { value: det } })
}

/// Element-wise sum, one step per cell in row-major order.
pub fn add_trace(a: &MatrixValue, b: &MatrixValue) -> Result<CalcTrace, TraceError> {
    if a.shape() != b.shape() {
        return Err(TraceError::ShapeMismatch(a.rows(), a.cols(), b.rows(), b.cols()));
    }
    let mut steps = Vec::with_capacity(a.rows() * a.cols());
    let mut values = Vec::with_capacity(a.rows() * a.cols());
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            let (x, y) = (a.get(r, c), b.get(r, c));
            let v = x.checked_add(y).ok_or(TraceError::Overflow)?;
            steps.push(step(
                StepKind::Accumulate,
                vec![CellRef::a(r, c), CellRef::b(r, c), CellRef::result(r, c)],
                format!("{} + {} = {}", format_operand(x), format_operand(y), format_int(v)),
                Some(v),
                None,
            ));
            values.push(v);
        }
    }
    let matrix = MatrixValue::from_flat(a.rows(), a.cols(), values).expect("shape preserved");
    Ok(CalcTrace {
        op: OpKind::Add,
        operand_a: a.clone(),
        operand_b: Some(b.clone()),
        steps,
        result: TraceResult::Matrix { matrix },
    })
}

/// Matrix product: select, expression and emit step per result cell.
pub fn mul_trace(a: &MatrixValue, b: &MatrixValue) -> Result<CalcTrace, TraceError> {
    if a.cols() != b.rows() {
        return Err(TraceError::InnerMismatch(a.cols(), b.rows()));
    }
    let (n, k, m) = (a.rows(), a.cols(), b.cols());
    let mut steps = Vec::with_capacity(3 * n * m);
    let mut values = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let cells: Vec<CellRef> = (0..k).map(|t| CellRef::a(i, t)).chain((0..k).map(|t| CellRef::b(t, j))).collect();
            let mut v = 0i64;
            let mut parts = Vec::with_capacity(k);
            for t in 0..k {
                let (x, y) = (a.get(i, t), b.get(t, j));
                v = x.checked_mul(y).and_then(|p| v.checked_add(p)).ok_or(TraceError::Overflow)?;
                parts.push(format!("{}·{}", format_operand(x), format_operand(y)));
            }
            steps.push(step(StepKind::Select, cells.clone(), format!("row {} of A, column {} of B", i + 1, j + 1), None, None));
            steps.push(step(StepKind::Multiply, cells, format!("{} = {}", parts.join(" + "), format_int(v)), Some(v), None));
            steps.push(step(StepKind::EmitResult, vec![CellRef::result(i, j)], format_int(v), Some(v), None));
            values.push(v);
        }
    }
    let matrix = MatrixValue::from_flat(n, m, values).expect("shape preserved");
    Ok(CalcTrace {
        op: OpKind::Mul,
        operand_a: a.clone(),
        operand_b: Some(b.clone()),
        steps,
        result: TraceResult::Matrix { matrix },
    })
}

/// Dispatch on mode with an arity check.
pub fn trace_for(op: OpKind, operands: &[&MatrixValue]) -> Result<CalcTrace, TraceError> {
    if operands.len() != op.arity() {
        return Err(TraceError::Arity(op.as_str(), op.arity(), operands.len()));
    }
    match op {
        OpKind::Det => det_trace(operands[0]),
        OpKind::Add => add_trace(operands[0], operands[1]),
        OpKind::Mul => mul_trace(operands[0], operands[1]),
    }
}
