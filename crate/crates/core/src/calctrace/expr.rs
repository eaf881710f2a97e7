//! Expression text used in steps, and an evaluator for it.
//!
//! Integers print with U+2212 for the sign; negative operands are wrapped
//! in parentheses. Products use `×` or `·`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExprError {
    #[error("unexpected '{0}' at {1}")]
    Unexpected(String, usize),
    #[error("unexpected end of expression")]
    End,
    #[error("sides of '=' differ: {0} vs {1}")]
    Unequal(i128, i128),
    #[error("arithmetic overflow")]
    Overflow,
}

pub fn format_int(v: i64) -> String {
    if v < 0 {
        format!("\u{2212}{}", v.unsigned_abs())
    } else {
        v.to_string()
    }
}

pub fn format_operand(v: i64) -> String {
    if v < 0 {
        format!("({})", format_int(v))
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(i128),
    Plus,
    Minus,
    Times,
    Open,
    Close,
    Eq,
}

fn lex(s: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let tok = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '0'..='9' => {
                let mut v: i128 = 0;
                while i < chars.len() && chars[i].1.is_ascii_digit() {
                    v = v.checked_mul(10).and_then(|v| v.checked_add(chars[i].1 as i128 - '0' as i128)).ok_or(ExprError::Overflow)?;
                    i += 1;
                }
                out.push((Tok::Num(v), pos));
                continue;
            }
            '+' => Tok::Plus,
            '-' | '\u{2212}' => Tok::Minus,
            '×' | '·' | '*' => Tok::Times,
            '(' => Tok::Open,
            ')' => Tok::Close,
            '=' => Tok::Eq,
            other => return Err(ExprError::Unexpected(other.to_string(), pos)),
        };
        out.push((tok, pos));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.at).map(|t| t.0)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.peek();
        self.at += 1;
        t
    }

    fn unexpected(&self) -> ExprError {
        match self.toks.get(self.at) {
            Some((t, pos)) => ExprError::Unexpected(format!("{t:?}"), *pos),
            None => ExprError::End,
        }
    }

    fn sum(&mut self) -> Result<i128, ExprError> {
        let mut v = self.product()?;
        while let Some(op @ (Tok::Plus | Tok::Minus)) = self.peek() {
            self.bump();
            let rhs = self.product()?;
            v = if op == Tok::Plus { v.checked_add(rhs) } else { v.checked_sub(rhs) }.ok_or(ExprError::Overflow)?;
        }
        Ok(v)
    }

    fn product(&mut self) -> Result<i128, ExprError> {
        let mut v = self.factor()?;
        while self.peek() == Some(Tok::Times) {
            self.bump();
            v = v.checked_mul(self.factor()?).ok_or(ExprError::Overflow)?;
        }
        Ok(v)
    }

    fn factor(&mut self) -> Result<i128, ExprError> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(v),
            Some(Tok::Minus) => Ok(-self.factor()?),
            Some(Tok::Open) => {
                let v = self.sum()?;
                if self.bump() != Some(Tok::Close) {
                    self.at -= 1;
                    return Err(self.unexpected());
                }
                Ok(v)
            }
            _ => {
                self.at -= 1;
                Err(self.unexpected())
            }
        }
    }
}

/// Evaluate `lhs` or `lhs = rhs`; with a right side both must agree.
pub fn eval_expression(s: &str) -> Result<i128, ExprError> {
    let mut p = Parser { toks: lex(s)?, at: 0 };
    let lhs = p.sum()?;
    if p.peek() == Some(Tok::Eq) {
        p.bump();
        let rhs = p.sum()?;
        if p.peek().is_some() {
            return Err(p.unexpected());
        }
        if lhs != rhs {
            return Err(ExprError::Unequal(lhs, rhs));
        }
    } else if p.peek().is_some() {
        return Err(p.unexpected());
    }
    Ok(lhs)
}
