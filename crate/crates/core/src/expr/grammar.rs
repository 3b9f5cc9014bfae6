use serde::{Deserialize, Serialize};

use super::{Op, Token, MAX_CONSTANTS};

/// The token set a run may use: an operator subset plus variable and
/// constant-slot counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grammar {
    pub operators: Vec<Op>,
    pub n_vars: u8,
    pub n_consts: u8,
}

impl Default for Grammar {
    fn default() -> Self {
        Grammar {
            operators: Op::ALL.to_vec(),
            n_vars: 1,
            n_consts: 4,
        }
    }
}

impl Grammar {
    pub fn validate(&self) -> Result<(), String> {
        if self.operators.is_empty() {
            return Err("grammar needs at least one operator".into());
        }
        let mut ops = self.operators.clone();
        ops.sort();
        ops.dedup();
        if ops.len() != self.operators.len() {
            return Err("duplicate operator in grammar".into());
        }
        if self.n_vars == 0 {
            return Err("grammar needs at least one variable".into());
        }
        if self.n_consts as usize > MAX_CONSTANTS {
            return Err(format!("at most {MAX_CONSTANTS} constant slots allowed"));
        }
        Ok(())
    }

    /// Every token in a fixed order: operators, variables, constants.
    pub fn tokens(&self) -> Vec<Token> {
        let mut out: Vec<Token> = self.operators.iter().map(|&op| Token::Op(op)).collect();
        out.extend((0..self.n_vars).map(Token::Var));
        out.extend((0..self.n_consts).map(Token::Const));
        out
    }

    pub fn contains(&self, token: Token) -> bool {
        match token {
            Token::Op(op) => self.operators.contains(&op),
            Token::Var(i) => i < self.n_vars,
            Token::Const(s) => s < self.n_consts,
        }
    }
}
