use super::ops::{apply_binary, apply_unary};
use super::{ExprTree, Token};

/// A tree flattened to postfix order for fast repeated evaluation over many
/// rows. Semantics are identical to [`ExprTree::evaluate`].
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    code: Vec<Token>,
    max_stack: usize,
}

impl CompiledExpr {
    pub fn new(tree: &ExprTree) -> Self {
        let mut code = Vec::with_capacity(tree.size());
        push_postfix(tree, &mut code);
        let mut depth = 0usize;
        let mut max_stack = 0usize;
        for t in &code {
            depth = depth + 1 - t.arity();
            max_stack = max_stack.max(depth);
        }
        CompiledExpr { code, max_stack }
    }

    /// Evaluates one row; `None` on any domain error. `stack` is scratch space.
    #[inline]
    pub fn eval_with(&self, vars: &[f64], consts: &[f64], stack: &mut Vec<f64>) -> Option<f64> {
        stack.clear();
        for &t in &self.code {
            let v = match t {
                Token::Var(i) => *vars.get(i as usize)?,
                Token::Const(s) => *consts.get(s as usize)?,
                Token::Op(op) => {
                    if op.arity() == 1 {
                        let a = stack.pop()?;
                        apply_unary(op, a)?
                    } else {
                        let b = stack.pop()?;
                        let a = stack.pop()?;
                        apply_binary(op, a, b)?
                    }
                }
            };
            if !v.is_finite() {
                return None;
            }
            stack.push(v);
        }
        stack.pop()
    }

    pub fn eval(&self, vars: &[f64], consts: &[f64]) -> Option<f64> {
        let mut stack = Vec::with_capacity(self.max_stack);
        self.eval_with(vars, consts, &mut stack)
    }

    pub fn stack_capacity(&self) -> usize {
        self.max_stack
    }
}

fn push_postfix(tree: &ExprTree, out: &mut Vec<Token>) {
    for c in &tree.children {
        push_postfix(c, out);
    }
    out.push(tree.token);
}
