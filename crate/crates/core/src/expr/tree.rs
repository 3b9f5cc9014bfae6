use std::fmt;

use super::ops::{apply_binary, apply_unary};
use super::{validate_prefix, PrefixSequence, Token};
use crate::error::{Error, Result};

/// Parsed form of a [`PrefixSequence`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExprTree {
    pub token: Token,
    pub children: Vec<ExprTree>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalError {
    /// Non-finite or undefined intermediate at the node with this preorder index.
    Domain {
        position: usize,
    },
    UnboundVar {
        index: u8,
    },
    UnboundConst {
        slot: u8,
    },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Domain { position } => write!(f, "domain error at node {position}"),
            EvalError::UnboundVar { index } => write!(f, "no value for variable x{index}"),
            EvalError::UnboundConst { slot } => write!(f, "no value for constant C{slot}"),
        }
    }
}

impl std::error::Error for EvalError {}

impl ExprTree {
    pub fn leaf(token: Token) -> Self {
        debug_assert!(token.is_leaf());
        ExprTree {
            token,
            children: Vec::new(),
        }
    }

    pub fn unary(token: Token, a: ExprTree) -> Self {
        debug_assert_eq!(token.arity(), 1);
        ExprTree {
            token,
            children: vec![a],
        }
    }

    pub fn binary(token: Token, a: ExprTree, b: ExprTree) -> Self {
        debug_assert_eq!(token.arity(), 2);
        ExprTree {
            token,
            children: vec![a, b],
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(ExprTree::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(ExprTree::depth).max().unwrap_or(0)
    }

    pub fn preorder(&self) -> Vec<Token> {
        let mut out = Vec::with_capacity(self.size());
        self.push_preorder(&mut out);
        out
    }

    fn push_preorder(&self, out: &mut Vec<Token>) {
        out.push(self.token);
        for c in &self.children {
            c.push_preorder(out);
        }
    }

    /// Distinct constant slots appearing in the tree.
    pub fn constant_slots(&self) -> Vec<u8> {
        let mut slots: Vec<u8> = self
            .preorder()
            .into_iter()
            .filter_map(|t| match t {
                Token::Const(s) => Some(s),
                _ => None,
            })
            .collect();
        slots.sort_unstable();
        slots.dedup();
        slots
    }

    /// Length of the constant vector needed to evaluate the tree.
    pub fn constant_arity(&self) -> usize {
        self.constant_slots().last().map_or(0, |&s| s as usize + 1)
    }

    /// Recursive evaluation. Any undefined or non-finite intermediate is an
    /// error carrying the preorder index of the failing node.
    pub fn evaluate(&self, vars: &[f64], consts: &[f64]) -> Result<f64, EvalError> {
        self.eval_at(0, vars, consts).map(|(v, _)| v)
    }

    fn eval_at(&self, pos: usize, vars: &[f64], consts: &[f64]) -> Result<(f64, usize), EvalError> {
        let domain = EvalError::Domain { position: pos };
        match self.token {
            Token::Var(i) => {
                let v = *vars.get(i as usize).ok_or(EvalError::UnboundVar { index: i })?;
                if v.is_finite() {
                    Ok((v, 1))
                } else {
                    Err(domain)
                }
            }
            Token::Const(s) => {
                let v = *consts.get(s as usize).ok_or(EvalError::UnboundConst { slot: s })?;
                if v.is_finite() {
                    Ok((v, 1))
                } else {
                    Err(domain)
                }
            }
            Token::Op(op) => match self.children.as_slice() {
                [a] => {
                    let (va, na) = a.eval_at(pos + 1, vars, consts)?;
                    apply_unary(op, va).map(|v| (v, na + 1)).ok_or(domain)
                }
                [a, b] => {
                    let (va, na) = a.eval_at(pos + 1, vars, consts)?;
                    let (vb, nb) = b.eval_at(pos + 1 + na, vars, consts)?;
                    apply_binary(op, va, vb).map(|v| (v, na + nb + 1)).ok_or(domain)
                }
                _ => unreachable!("child count does not match arity"),
            },
        }
    }

    /// Infix rendering with explicit parentheses and constant values
    /// substituted when available.
    pub fn to_infix(&self, consts: &[f64]) -> String {
        match self.token {
            Token::Var(0) => "x".to_string(),
            Token::Var(i) => format!("x{i}"),
            Token::Const(s) => match consts.get(s as usize) {
                Some(v) => format!("{v}"),
                None => format!("C{s}"),
            },
            Token::Op(op) => {
                let args: Vec<String> = self.children.iter().map(|c| c.to_infix(consts)).collect();
                match (op, args.as_slice()) {
                    (super::Op::Add, [a, b]) => format!("({a} + {b})"),
                    (super::Op::Sub, [a, b]) => format!("({a} - {b})"),
                    (super::Op::Mul, [a, b]) => format!("({a} * {b})"),
                    (super::Op::Div, [a, b]) => format!("({a} / {b})"),
                    (super::Op::Pow, [a, b]) => format!("({a} ^ {b})"),
                    (_, [a]) => format!("{}({a})", op.name()),
                    _ => unreachable!(),
                }
            }
        }
    }
}

impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::format_tokens(&self.preorder()))
    }
}

/// Builds the tree of a valid sequence.
pub fn parse(tokens: &[Token]) -> Result<ExprTree> {
    validate_prefix(tokens).map_err(Error::MalformedSequence)?;
    let mut pos = 0;
    let tree = build(tokens, &mut pos);
    debug_assert_eq!(pos, tokens.len());
    Ok(tree)
}

fn build(tokens: &[Token], pos: &mut usize) -> ExprTree {
    let token = tokens[*pos];
    *pos += 1;
    let children = (0..token.arity()).map(|_| build(tokens, pos)).collect();
    ExprTree { token, children }
}

/// Preorder token list of a tree. Trees larger than the length cap produce an
/// error since they have no valid sequence form.
pub fn serialize(tree: &ExprTree) -> Result<PrefixSequence> {
    PrefixSequence::new(tree.preorder()).map_err(Error::MalformedSequence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_tokens, Token as T};

    fn tree(text: &str) -> ExprTree {
        parse(&parse_tokens(text).unwrap()).unwrap()
    }

    #[test]
    fn parse_examples() {
        assert_eq!(
            tree("cos mul x x"),
            ExprTree::unary(
                T::COS,
                ExprTree::binary(T::MUL, ExprTree::leaf(T::X), ExprTree::leaf(T::X))
            )
        );
        assert_eq!(
            tree("add x x"),
            ExprTree::binary(T::ADD, ExprTree::leaf(T::X), ExprTree::leaf(T::X))
        );
        assert_eq!(
            tree("add C0 mul C1 x"),
            ExprTree::binary(
                T::ADD,
                ExprTree::leaf(T::Const(0)),
                ExprTree::binary(T::MUL, ExprTree::leaf(T::Const(1)), ExprTree::leaf(T::X))
            )
        );
    }

    #[test]
    fn parse_rejects_malformed() {
        assert!(matches!(parse(&[T::ADD, T::X]), Err(Error::MalformedSequence(_))));
    }

    #[test]
    fn serialize_examples() {
        let t = ExprTree::binary(T::ADD, ExprTree::leaf(T::X), ExprTree::leaf(T::X));
        assert_eq!(serialize(&t).unwrap().to_string(), "add x x");
        let t = ExprTree::unary(
            T::EXP,
            ExprTree::binary(T::SUB, ExprTree::leaf(T::Const(0)), ExprTree::leaf(T::X)),
        );
        assert_eq!(serialize(&t).unwrap().to_string(), "exp sub C0 x");
        assert_eq!(serialize(&ExprTree::leaf(T::X)).unwrap().to_string(), "x");
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(tree("mul x x").evaluate(&[3.0], &[]), Ok(9.0));
        assert_eq!(
            tree("div x x").evaluate(&[0.0], &[]),
            Err(EvalError::Domain { position: 0 })
        );
        // failing node is reported by preorder index
        assert_eq!(
            tree("add x sqrt sub C0 x").evaluate(&[2.0], &[1.0]),
            Err(EvalError::Domain { position: 2 })
        );
        assert_eq!(
            tree("add x C1").evaluate(&[2.0], &[1.0]),
            Err(EvalError::UnboundConst { slot: 1 })
        );
    }

    #[test]
    fn constant_slots_are_shared() {
        assert!(tree("add x x").constant_slots().is_empty());
        assert_eq!(tree("add C0 mul C1 x").constant_slots(), vec![0, 1]);
        assert_eq!(tree("add C0 mul C0 x").constant_slots(), vec![0]);
    }

    #[test]
    fn infix() {
        assert_eq!(tree("add C0 mul C1 x").to_infix(&[2.0, 3.0]), "(2 + (3 * x))");
        assert_eq!(tree("cos x").to_infix(&[]), "cos(x)");
    }
}
