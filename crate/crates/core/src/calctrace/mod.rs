//! Step-by-step calculation traces for determinant, addition and
//! multiplication, plus an independent verifier.

mod build;
mod expr;
mod verify;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::MatrixValue;

pub use build::{add_trace, det_trace, mul_trace, trace_for};
pub use expr::{eval_expression, format_int, format_operand, ExprError};
pub use verify::{cofactor_det, dense_add, dense_mul, verify_trace, StepCheck, VerifyReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("Matrix is not square, cannot compute determinant.")]
    NotSquare,
    #[error("unsupported order for diagonal rule")]
    UnsupportedOrder,
    #[error("shape mismatch {0}×{1} vs {2}×{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("inner dimensions {0}≠{1}")]
    InnerMismatch(usize, usize),
    #[error("{0} takes {1} operand(s), got {2}")]
    Arity(&'static str, usize, usize),
    #[error("arithmetic overflow")]
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Det,
    Add,
    Mul,
}

impl OpKind {
    pub fn arity(&self) -> usize {
        match self {
            OpKind::Det => 1,
            OpKind::Add | OpKind::Mul => 2,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            OpKind::Det => "det",
            OpKind::Add => "add",
            OpKind::Mul => "mul",
        }
    }
}

impl std::str::FromStr for OpKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "det" => Ok(OpKind::Det),
            "add" => Ok(OpKind::Add),
            "mul" => Ok(OpKind::Mul),
            other => Err(format!("unknown mode '{other}' (expected det, add or mul)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    A,
    B,
    Result,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellRef {
    pub role: Role,
    pub row: usize,
    pub col: usize,
}

impl CellRef {
    pub fn a(row: usize, col: usize) -> Self {
        Self { role: Role::A, row, col }
    }

    pub fn b(row: usize, col: usize) -> Self {
        Self { role: Role::B, row, col }
    }

    pub fn result(row: usize, col: usize) -> Self {
        Self { role: Role::Result, row, col }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Select,
    Multiply,
    Accumulate,
    EmitResult,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalcStep {
    pub kind: StepKind,
    pub cells: Vec<CellRef>,
    pub expression: String,
    pub value: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sign: Option<i8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TraceResult {
    Scalar { value: i64 },
    Matrix { matrix: MatrixValue },
}

impl std::fmt::Display for TraceResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceResult::Scalar { value } => write!(f, "{}", format_int(*value)),
            TraceResult::Matrix { matrix } => write!(f, "{matrix}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalcTrace {
    pub op: OpKind,
    pub operand_a: MatrixValue,
    pub operand_b: Option<MatrixValue>,
    pub steps: Vec<CalcStep>,
    pub result: TraceResult,
}

impl CalcTrace {
    /// Shape of the result matrix; `1×1` for a scalar.
    pub fn result_shape(&self) -> (usize, usize) {
        match &self.result {
            TraceResult::Scalar { .. } => (1, 1),
            TraceResult::Matrix { matrix } => matrix.shape(),
        }
    }

    /// Matrix a cell reference points into.
    pub fn operand(&self, role: Role) -> Option<&MatrixValue> {
        match role {
            Role::A => Some(&self.operand_a),
            Role::B => self.operand_b.as_ref(),
            Role::Result => match &self.result {
                TraceResult::Matrix { matrix } => Some(matrix),
                TraceResult::Scalar { .. } => None,
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}
