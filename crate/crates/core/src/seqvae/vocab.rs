use crate::expr::{Grammar, Token};

/// A decoded symbol: either a control marker or a formula token.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symbol {
    Pad,
    Start,
    End,
    Token(Token),
}

/// Id assignment: `PAD = 0`, `START = 1`, `END = 2`, then the grammar's
/// tokens in [`Grammar::tokens`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    grammar: Grammar,
    tokens: Vec<Token>,
}

impl Vocabulary {
    pub const PAD: usize = 0;
    pub const START: usize = 1;
    pub const END: usize = 2;
    const N_CONTROL: usize = 3;

    pub fn new(grammar: Grammar) -> Self {
        let tokens = grammar.tokens();
        Vocabulary { grammar, tokens }
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn len(&self) -> usize {
        Self::N_CONTROL + self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: Token) -> Option<usize> {
        self.tokens
            .iter()
            .position(|&t| t == token)
            .map(|p| p + Self::N_CONTROL)
    }

    pub fn symbol(&self, id: usize) -> Option<Symbol> {
        match id {
            Self::PAD => Some(Symbol::Pad),
            Self::START => Some(Symbol::Start),
            Self::END => Some(Symbol::End),
            _ => self.tokens.get(id - Self::N_CONTROL).copied().map(Symbol::Token),
        }
    }

    /// Ids of a token list; `None` if any token is outside the grammar.
    pub fn encode(&self, tokens: &[Token]) -> Option<Vec<usize>> {
        tokens.iter().map(|&t| self.id(t)).collect()
    }

    /// Arity of each id; control symbols report `None`.
    pub(crate) fn arities(&self) -> Vec<Option<usize>> {
        (0..self.len())
            .map(|id| match self.symbol(id) {
                Some(Symbol::Token(t)) => Some(t.arity()),
                _ => None,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique_and_invertible() {
        let v = Vocabulary::new(Grammar::default());
        assert_eq!(v.len(), 3 + 8 + 1 + 4);
        let mut seen = std::collections::HashSet::new();
        for id in 0..v.len() {
            let s = v.symbol(id).unwrap();
            assert!(seen.insert(format!("{s:?}")));
            if let Symbol::Token(t) = s {
                assert_eq!(v.id(t), Some(id));
            }
        }
        assert_eq!(v.symbol(v.len()), None);
        assert_eq!(v.id(Token::Const(7)), None);
    }
}
