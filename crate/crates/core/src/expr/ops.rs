//! Scalar semantics shared by every evaluator.
//!
//! `None` signals a domain error. A result is never a silent NaN or infinity.

use super::Op;

/// `exp` arguments beyond this magnitude are treated as overflow.
pub const EXP_ARG_LIMIT: f64 = 700.0;

#[inline]
fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[inline]
pub fn apply_unary(op: Op, a: f64) -> Option<f64> {
    match op {
        Op::Sqrt => {
            if a < 0.0 {
                None
            } else {
                finite(a.sqrt())
            }
        }
        Op::Cos => finite(a.cos()),
        Op::Exp => {
            if a.abs() > EXP_ARG_LIMIT {
                None
            } else {
                finite(a.exp())
            }
        }
        _ => unreachable!("{op:?} is not unary"),
    }
}

#[inline]
pub fn apply_binary(op: Op, a: f64, b: f64) -> Option<f64> {
    match op {
        Op::Add => finite(a + b),
        Op::Sub => finite(a - b),
        Op::Mul => finite(a * b),
        Op::Div => {
            if b == 0.0 {
                None
            } else {
                finite(a / b)
            }
        }
        // real power through the logarithm; non-positive bases are undefined
        Op::Pow => {
            if a <= 0.0 {
                return None;
            }
            let arg = b * a.ln();
            if !arg.is_finite() || arg.abs() > EXP_ARG_LIMIT {
                None
            } else {
                finite(arg.exp())
            }
        }
        _ => unreachable!("{op:?} is not binary"),
    }
}
