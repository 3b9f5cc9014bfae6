use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Operator tokens of the formula language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
    Cos,
    Exp,
    Pow,
}

impl Op {
    pub const ALL: [Op; 8] = [Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Sqrt, Op::Cos, Op::Exp, Op::Pow];

    pub fn arity(self) -> usize {
        match self {
            Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow => 2,
            Op::Sqrt | Op::Cos | Op::Exp => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Sqrt => "sqrt",
            Op::Cos => "cos",
            Op::Exp => "exp",
            Op::Pow => "pow",
        }
    }
}

impl FromStr for Op {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Op::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| Error::UnknownToken(s.to_string()))
    }
}

/// A single formula token.
///
/// Ordering follows declaration order and is used for deterministic
/// lexicographic tie-breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Op(Op),
    /// Dataset feature by column index.
    Var(u8),
    /// Constant slot whose value is fitted downstream.
    Const(u8),
}

impl Token {
    pub const ADD: Token = Token::Op(Op::Add);
    pub const SUB: Token = Token::Op(Op::Sub);
    pub const MUL: Token = Token::Op(Op::Mul);
    pub const DIV: Token = Token::Op(Op::Div);
    pub const SQRT: Token = Token::Op(Op::Sqrt);
    pub const COS: Token = Token::Op(Op::Cos);
    pub const EXP: Token = Token::Op(Op::Exp);
    pub const POW: Token = Token::Op(Op::Pow);
    pub const X: Token = Token::Var(0);

    pub fn arity(self) -> usize {
        match self {
            Token::Op(op) => op.arity(),
            Token::Var(_) | Token::Const(_) => 0,
        }
    }

    pub fn is_leaf(self) -> bool {
        self.arity() == 0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Op(op) => f.write_str(op.name()),
            Token::Var(0) => f.write_str("x"),
            Token::Var(i) => write!(f, "x{i}"),
            Token::Const(slot) => write!(f, "C{slot}"),
        }
    }
}

impl FromStr for Token {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || Error::UnknownToken(s.to_string());
        if s == "x" {
            return Ok(Token::Var(0));
        }
        if let Some(rest) = s.strip_prefix('x') {
            return rest.parse::<u8>().map(Token::Var).map_err(|_| unknown());
        }
        if let Some(rest) = s.strip_prefix('C') {
            return rest.parse::<u8>().map(Token::Const).map_err(|_| unknown());
        }
        s.parse::<Op>().map(Token::Op).map_err(|_| unknown())
    }
}
