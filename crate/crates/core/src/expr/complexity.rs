use serde::{Deserialize, Serialize};

use super::{Op, Token};

/// Per-token-kind complexity weights.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComplexityWeights {
    pub add: u32,
    pub sub: u32,
    pub mul: u32,
    pub div: u32,
    pub sqrt: u32,
    pub cos: u32,
    pub exp: u32,
    pub pow: u32,
    pub var: u32,
    #[serde(rename = "const")]
    pub constant: u32,
}

impl Default for ComplexityWeights {
    fn default() -> Self {
        ComplexityWeights {
            add: 1,
            sub: 1,
            mul: 1,
            div: 2,
            sqrt: 2,
            cos: 3,
            exp: 3,
            pow: 2,
            var: 1,
            constant: 1,
        }
    }
}

impl ComplexityWeights {
    pub fn weight(&self, token: Token) -> u32 {
        match token {
            Token::Op(Op::Add) => self.add,
            Token::Op(Op::Sub) => self.sub,
            Token::Op(Op::Mul) => self.mul,
            Token::Op(Op::Div) => self.div,
            Token::Op(Op::Sqrt) => self.sqrt,
            Token::Op(Op::Cos) => self.cos,
            Token::Op(Op::Exp) => self.exp,
            Token::Op(Op::Pow) => self.pow,
            Token::Var(_) => self.var,
            Token::Const(_) => self.constant,
        }
    }

    /// All weights must be at least one.
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            self.add,
            self.sub,
            self.mul,
            self.div,
            self.sqrt,
            self.cos,
            self.exp,
            self.pow,
            self.var,
            self.constant,
        ];
        if all.iter().any(|&w| w < 1) {
            return Err("complexity weights must all be >= 1".into());
        }
        Ok(())
    }
}

/// Sum of per-token weights.
pub fn complexity(tokens: &[Token], weights: &ComplexityWeights) -> u32 {
    tokens.iter().map(|&t| weights.weight(t)).sum()
}
