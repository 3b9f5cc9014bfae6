//! Formula DSL: tokens, prefix (Polish) sequences, expression trees,
//! evaluation, complexity scoring and random valid-sequence generation.

mod compiled;
mod complexity;
mod grammar;
mod ops;
mod random;
mod sequence;
mod token;
mod tree;

pub use compiled::CompiledExpr;
pub use complexity::{complexity, ComplexityWeights};
pub use grammar::Grammar;
pub use ops::{apply_binary, apply_unary, EXP_ARG_LIMIT};
pub use random::random_valid_sequence;
pub use sequence::{
    canonicalize_constants, format_tokens, parse_tokens, validate_prefix, PrefixSequence, Violation, ViolationKind,
};
pub use token::{Op, Token};
pub use tree::{parse, serialize, EvalError, ExprTree};

/// Hard cap on sequence length.
pub const MAX_SEQ_LEN: usize = 30;

/// Maximum number of constant slots per expression.
pub const MAX_CONSTANTS: usize = 8;
