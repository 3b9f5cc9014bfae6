use std::fmt;
use std::ops::Deref;

use super::{Token, MAX_SEQ_LEN};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// The operand counter reached zero before this token.
    ClosedEarly,
    /// Tokens ran out while operands were still required.
    Incomplete { open: usize },
    /// The sequence is longer than the cap.
    TooLong { max_len: usize },
}

/// First rule a token list breaks, with the offending position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub position: usize,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::ClosedEarly => write!(f, "expression already complete before token {}", self.position),
            ViolationKind::Incomplete { open } => write!(
                f,
                "incomplete at end (position {}): {open} operand(s) missing",
                self.position
            ),
            ViolationKind::TooLong { max_len } => {
                write!(f, "longer than {max_len} tokens at position {}", self.position)
            }
        }
    }
}

impl std::error::Error for Violation {}

/// Checks the arity-counter rule and the length cap.
///
/// The counter starts at 1 and each token adds `arity - 1`. It must stay
/// positive until the last token and be exactly zero after it.
pub fn validate_prefix(tokens: &[Token]) -> Result<(), Violation> {
    let mut open: usize = 1;
    for (i, tok) in tokens.iter().enumerate() {
        if open == 0 {
            return Err(Violation {
                kind: ViolationKind::ClosedEarly,
                position: i,
            });
        }
        if i >= MAX_SEQ_LEN {
            return Err(Violation {
                kind: ViolationKind::TooLong { max_len: MAX_SEQ_LEN },
                position: i,
            });
        }
        open = open + tok.arity() - 1;
    }
    if open != 0 {
        return Err(Violation {
            kind: ViolationKind::Incomplete { open },
            position: tokens.len(),
        });
    }
    Ok(())
}

/// An arity-valid token sequence of at most [`MAX_SEQ_LEN`] tokens.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrefixSequence(Vec<Token>);

impl PrefixSequence {
    pub fn new(tokens: Vec<Token>) -> Result<Self, Violation> {
        validate_prefix(&tokens)?;
        Ok(PrefixSequence(tokens))
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.0
    }

    /// Renumbers constant slots in order of first appearance.
    pub fn canonical(&self) -> PrefixSequence {
        PrefixSequence(canonicalize_constants(&self.0))
    }

    /// Number of distinct constant slots referenced.
    pub fn constant_slots(&self) -> usize {
        let mut seen = [false; 256];
        let mut n = 0;
        for t in &self.0 {
            if let Token::Const(s) = *t {
                if !seen[s as usize] {
                    seen[s as usize] = true;
                    n += 1;
                }
            }
        }
        n
    }
}

impl Deref for PrefixSequence {
    type Target = [Token];

    fn deref(&self) -> &[Token] {
        &self.0
    }
}

impl fmt::Display for PrefixSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_tokens(&self.0))
    }
}

impl std::str::FromStr for PrefixSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens = parse_tokens(s)?;
        PrefixSequence::new(tokens).map_err(Error::MalformedSequence)
    }
}

/// Whitespace-separated textual form, e.g. `add C0 mul C1 x`.
pub fn format_tokens(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn parse_tokens(text: &str) -> Result<Vec<Token>> {
    text.split_whitespace().map(str::parse).collect()
}

/// Maps constant slots to `C0, C1, ...` in order of first appearance,
/// preserving shared slots.
pub fn canonicalize_constants(tokens: &[Token]) -> Vec<Token> {
    let mut map = [u8::MAX; 256];
    let mut next = 0u8;
    tokens
        .iter()
        .map(|t| match *t {
            Token::Const(s) => {
                if map[s as usize] == u8::MAX {
                    map[s as usize] = next;
                    next += 1;
                }
                Token::Const(map[s as usize])
            }
            other => other,
        })
        .collect()
}
