use serde::{Deserialize, Serialize};

use super::expr::eval_expression;
use super::{CalcTrace, CellRef, OpKind, Role, StepKind, TraceResult};
use crate::matrix::MatrixValue;

/// Laplace expansion along the first row, any order, in i128.
pub fn cofactor_det(m: &MatrixValue) -> Option<i128> {
    if !m.is_square() {
        return None;
    }
    fn rec(rows: &[Vec<i128>]) -> i128 {
        match rows.len() {
            0 => 1,
            1 => rows[0][0],
            n => (0..n)
                .map(|c| {
                    let minor: Vec<Vec<i128>> = rows[1..]
                        .iter()
                        .map(|r| r.iter().enumerate().filter(|(k, _)| *k != c).map(|(_, v)| *v).collect())
                        .collect();
                    let sign = if c % 2 == 0 { 1 } else { -1 };
                    sign * rows[0][c] * rec(&minor)
                })
                .sum(),
        }
    }
    let rows: Vec<Vec<i128>> = (0..m.rows()).map(|r| m.row(r).iter().map(|&v| v as i128).collect()).collect();
    Some(rec(&rows))
}

pub fn dense_add(a: &MatrixValue, b: &MatrixValue) -> Option<Vec<Vec<i128>>> {
    (a.shape() == b.shape())
        .then(|| (0..a.rows()).map(|r| (0..a.cols()).map(|c| a.get(r, c) as i128 + b.get(r, c) as i128).collect()).collect())
}

pub fn dense_mul(a: &MatrixValue, b: &MatrixValue) -> Option<Vec<Vec<i128>>> {
    (a.cols() == b.rows()).then(|| {
        (0..a.rows())
            .map(|i| (0..b.cols()).map(|j| (0..a.cols()).map(|t| a.get(i, t) as i128 * b.get(t, j) as i128).sum()).collect())
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCheck {
    pub index: usize,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub result_ok: bool,
    pub steps: Vec<StepCheck>,
    pub warnings: Vec<String>,
}

impl VerifyReport {
    pub fn failed_steps(&self) -> Vec<usize> {
        self.steps.iter().filter(|s| !s.ok).map(|s| s.index).collect()
    }
}

fn cell_value(t: &CalcTrace, c: &CellRef) -> Option<i64> {
    let m = t.operand(c.role)?;
    (c.row < m.rows() && c.col < m.cols()).then(|| m.get(c.row, c.col))
}

/// Expected value of a step computed from its cell references alone.
fn recompute(t: &CalcTrace, index: usize) -> Result<Option<i128>, String> {
    let s = &t.steps[index];
    let vals: Vec<i128> = s
        .cells
        .iter()
        .filter(|c| c.role != Role::Result)
        .map(|c| cell_value(t, c).map(|v| v as i128).ok_or_else(|| format!("cell {c:?} out of range")))
        .collect::<Result<_, _>>()?;
    for c in s.cells.iter().filter(|c| c.role == Role::Result) {
        let (r, k) = t.result_shape();
        if c.row >= r || c.col >= k {
            return Err(format!("cell {c:?} out of range"));
        }
    }
    Ok(match (t.op, s.kind) {
        (_, StepKind::Select) => None,
        (OpKind::Det, StepKind::Multiply) => Some(vals.iter().product()),
        (OpKind::Mul, StepKind::Multiply) => {
            let k = t.operand_a.cols();
            if vals.len() != 2 * k {
                return Err(format!("expected {} cells, found {}", 2 * k, vals.len()));
            }
            Some((0..k).map(|i| vals[i] * vals[k + i]).sum())
        }
        (OpKind::Det, StepKind::Accumulate) => {
            let terms = t.steps[..index].iter().filter(|p| p.kind == StepKind::Multiply);
            let product = |p: &super::CalcStep| -> i128 { p.cells.iter().map(|c| cell_value(t, c).unwrap_or(0) as i128).product() };
            Some(terms.map(|p| product(p) * p.sign.unwrap_or(1) as i128).sum())
        }
        (OpKind::Add, StepKind::Accumulate) => Some(vals.iter().sum()),
        (OpKind::Det, StepKind::EmitResult) => match vals.as_slice() {
            [v] => Some(*v),
            _ => t.steps[..index].iter().rev().find(|p| p.kind == StepKind::Accumulate).and_then(|p| p.value).map(|v| v as i128),
        },
        (_, StepKind::EmitResult) => {
            let c = s.cells.iter().find(|c| c.role == Role::Result).ok_or("emit step without result cell")?;
            let prev = t.steps[..index].iter().rev().find(|p| p.kind == StepKind::Multiply);
            match (t.op, prev) {
                (OpKind::Mul, Some(p)) => p.value.map(|v| v as i128),
                _ => cell_value(t, c).map(|v| v as i128),
            }
        }
        (op, kind) => return Err(format!("{kind:?} step not expected in {} trace", op.as_str())),
    })
}

/// Recheck every step from its cell references and expression, and the
/// result against an independent oracle.
pub fn verify_trace(t: &CalcTrace) -> VerifyReport {
    let mut warnings = Vec::new();
    if t.steps.is_empty() {
        warnings.push("empty trace".to_string());
    }
    let mut steps = Vec::with_capacity(t.steps.len());
    for (index, s) in t.steps.iter().enumerate() {
        let mut problems = Vec::new();
        match recompute(t, index) {
            Err(e) => problems.push(e),
            Ok(Some(expected)) => {
                if s.value.map(|v| v as i128) != Some(expected) {
                    problems.push(format!("value {:?} but cells give {expected}", s.value));
                }
                match eval_expression(&s.expression) {
                    Ok(v) if Some(v) == s.value.map(|v| v as i128) => {}
                    Ok(v) => problems.push(format!("expression evaluates to {v}")),
                    Err(e) => problems.push(format!("expression: {e}")),
                }
            }
            Ok(None) => {}
        }
        // emitted cells must agree with the stored result
        if s.kind == StepKind::EmitResult {
            if let (Some(c), Some(v)) = (s.cells.iter().find(|c| c.role == Role::Result), s.value) {
                if cell_value(t, c) != Some(v) {
                    problems.push("emitted value differs from result".into());
                }
            }
        }
        steps.push(StepCheck { index, ok: problems.is_empty(), message: (!problems.is_empty()).then(|| problems.join("; ")) });
    }

    let as_i128 = |m: &MatrixValue| -> Vec<Vec<i128>> {
        (0..m.rows()).map(|r| m.row(r).iter().map(|&v| v as i128).collect()).collect()
    };
    let result_ok = match (&t.op, &t.result, &t.operand_b) {
        (OpKind::Det, TraceResult::Scalar { value }, None) => cofactor_det(&t.operand_a) == Some(*value as i128),
        (OpKind::Add, TraceResult::Matrix { matrix }, Some(b)) => dense_add(&t.operand_a, b) == Some(as_i128(matrix)),
        (OpKind::Mul, TraceResult::Matrix { matrix }, Some(b)) => dense_mul(&t.operand_a, b) == Some(as_i128(matrix)),
        _ => false,
    };
    // replaying the emit steps must rebuild the result
    let replay_ok = match &t.result {
        TraceResult::Scalar { value } => t.steps.is_empty() || t.steps.iter().rev().find(|s| s.kind == StepKind::EmitResult).and_then(|s| s.value) == Some(*value),
        TraceResult::Matrix { matrix } => {
            let mut seen = vec![false; matrix.rows() * matrix.cols()];
            for s in &t.steps {
                for c in s.cells.iter().filter(|c| c.role == Role::Result) {
                    if c.row < matrix.rows() && c.col < matrix.cols() && s.value == Some(matrix.get(c.row, c.col)) {
                        seen[c.row * matrix.cols() + c.col] = true;
                    }
                }
            }
            t.steps.is_empty() || seen.iter().all(|&b| b)
        }
    };
    if !replay_ok {
        warnings.push("steps do not rebuild the result".into());
    }
    let result_ok = result_ok && replay_ok;
    VerifyReport { passed: result_ok && steps.iter().all(|s| s.ok), result_ok, steps, warnings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calctrace::{add_trace, det_trace, mul_trace};

    fn mat(rows: Vec<Vec<i64>>) -> MatrixValue {
        MatrixValue::from_rows(rows).unwrap()
    }

    #[test]
    fn cofactor_values() {
        assert_eq!(cofactor_det(&mat(vec![vec![1, 2], vec![3, 4]])), Some(-2));
        assert_eq!(cofactor_det(&MatrixValue::identity(4).unwrap()), Some(1));
        assert_eq!(cofactor_det(&mat(vec![vec![1, 2, 3]])), None);
    }

    #[test]
    fn generated_traces_pass() {
        let a = mat(vec![vec![1, 2, 3], vec![-4, -5, -6], vec![7, 8, 9]]);
        for t in [det_trace(&a).unwrap(), add_trace(&a, &a).unwrap(), mul_trace(&a, &a).unwrap()] {
            let r = verify_trace(&t);
            assert!(r.passed, "{r:?}");
        }
    }

    #[test]
    fn tampered_step_is_flagged() {
        let a = mat(vec![vec![2, 3], vec![1, 4]]);
        let mut t = det_trace(&a).unwrap();
        t.steps[1].value = Some(9);
        let r = verify_trace(&t);
        assert!(!r.passed);
        assert_eq!(r.failed_steps(), vec![1]);

        let mut t = mul_trace(&a, &a).unwrap();
        t.steps[1].expression = "2·2 + 3·1 = 8".into();
        assert_eq!(verify_trace(&t).failed_steps(), vec![1]);

        let mut t = add_trace(&a, &a).unwrap();
        if let TraceResult::Matrix { matrix } = &mut t.result {
            matrix.set(0, 0, 5);
        }
        let r = verify_trace(&t);
        assert!(!r.result_ok);
    }

    #[test]
    fn empty_trace_is_vacuous() {
        let mut t = det_trace(&mat(vec![vec![3]])).unwrap();
        t.steps.clear();
        let r = verify_trace(&t);
        assert!(r.passed);
        assert_eq!(r.warnings, vec!["empty trace".to_string()]);
    }
}
