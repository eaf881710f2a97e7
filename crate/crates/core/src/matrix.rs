//! Rectangular integer matrices.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("matrix is empty")]
    Empty,
    #[error("matrix is not rectangular: row {row} has {found} entries, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("declared shape {rows}x{cols} does not match values")]
    ShapeMismatch { rows: usize, cols: usize },
}

/// A non-empty rectangular matrix of signed integers, stored row-major.
///
/// Serialized as `{"rows": r, "cols": c, "values": [[..], ..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MatrixValue {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl MatrixValue {
    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self, MatrixError> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if n_rows == 0 || n_cols == 0 {
            return Err(MatrixError::Empty);
        }
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != n_cols {
                return Err(MatrixError::Ragged { row: r, expected: n_cols, found: row.len() });
            }
            data.extend(row);
        }
        Ok(Self { rows: n_rows, cols: n_cols, data })
    }

    pub fn from_flat(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::Empty);
        }
        if data.len() != rows * cols {
            return Err(MatrixError::ShapeMismatch { rows, cols });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: i64) -> Result<Self, MatrixError> {
        Self::from_flat(rows, cols, vec![value; rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self, MatrixError> {
        let mut m = Self::filled(n, n, 0)?;
        for i in 0..n {
            m.set(i, i, 1);
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of {}x{}", self.rows, self.cols);
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        assert!(r < self.rows && c < self.cols, "index ({r},{c}) out of {}x{}", self.rows, self.cols);
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[i64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        self.data.chunks(self.cols).map(<[i64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        Self { rows: self.cols, cols: self.rows, data }
    }
}

impl fmt::Display for MatrixValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cols: Option<usize>,
    values: Vec<Vec<i64>>,
}

impl Serialize for MatrixValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawMatrix { rows: Some(self.rows), cols: Some(self.cols), values: self.to_rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatrixValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawMatrix::deserialize(d)?;
        let m = MatrixValue::from_rows(raw.values).map_err(serde::de::Error::custom)?;
        if raw.rows.is_some_and(|r| r != m.rows) || raw.cols.is_some_and(|c| c != m.cols) {
            return Err(serde::de::Error::custom(MatrixError::ShapeMismatch {
                rows: raw.rows.unwrap_or(m.rows),
                cols: raw.cols.unwrap_or(m.cols),
            }));
        }
        Ok(m)
    }
}

/// Parse a matrix document: either the object form or a bare nested array.
pub fn parse_matrix_json(text: &str) -> Result<MatrixValue, serde_json::Error> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.is_array() {
        let rows: Vec<Vec<i64>> = serde_json::from_value(value)?;
        MatrixValue::from_rows(rows).map_err(serde::de::Error::custom)
    } else {
        serde_json::from_value(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ragged_rows_rejected() {
        let err = MatrixValue::from_rows(vec![vec![1, 2], vec![3]]).unwrap_err();
        assert_eq!(err, MatrixError::Ragged { row: 1, expected: 2, found: 1 });
        assert_eq!(MatrixValue::from_rows(vec![]).unwrap_err(), MatrixError::Empty);
    }

    #[test]
    fn json_shape_checked() {
        let m: MatrixValue = serde_json::from_str(r#"{"rows":2,"cols":2,"values":[[1,2],[3,4]]}"#).unwrap();
        assert_eq!(m.get(1, 0), 3);
        assert!(serde_json::from_str::<MatrixValue>(r#"{"rows":3,"cols":2,"values":[[1,2],[3,4]]}"#).is_err());
        assert!(serde_json::from_str::<MatrixValue>(r#"{"values":[[1,2],[3]]}"#).is_err());
        assert!(serde_json::from_str::<MatrixValue>(r#"{"values":[[1.5]]}"#).is_err());
        assert_eq!(parse_matrix_json("[[1,2,3]]").unwrap().shape(), (1, 3));
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, r#"{"rows":2,"cols":2,"values":[[1,2],[3,4]]}"#);
    }

    #[test]
    fn transpose_roundtrip() {
        let m = MatrixValue::from_rows(vec![vec![1, 2, 3], vec![4, 5, 6]]).unwrap();
        assert_eq!(m.transpose().shape(), (3, 2));
        assert_eq!(m.transpose().transpose(), m);
        assert_eq!(m.to_string(), "[[1, 2, 3], [4, 5, 6]]");
    }
}
