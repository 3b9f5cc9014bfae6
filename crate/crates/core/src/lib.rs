//! Symbolic regression over prefix-notation formulas driven by a sequence
//! variational autoencoder, plus a pairwise defect-interaction layer for
//! 2D materials.
//!
//! The crate is organised bottom-up:
//!
//! * [`expr`]: tokens, prefix sequences, trees, evaluation, complexity.
//! * [`constfit`]: datasets, error metrics and BFGS constant fitting.
//! * [`seqvae`]: LSTM encoder/decoder VAE over token sequences.
//! * [`search`]: predicates, the bank of best formulas, Pareto selection
//!   and the outer sample/fit/fine-tune loop.
//! * [`materials`]: defect structures, minimum-image pair distances,
//!   kernel registries and the per-site energy / gap assembly.
//! * [`synth`]: closed-form ground-truth kernels and structure fabrication.
//!
//! Data-parallel inner loops (batch gradients, candidate decoding and
//! scoring, structure evaluation) run on rayon when the `parallel` feature
//! is enabled and fall back to plain iterators otherwise.

// `!(a < b)` checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constfit;
pub mod error;
pub mod expr;
pub mod materials;
pub mod parallel;
pub mod rng;
pub mod search;
pub mod seqvae;
pub mod synth;

pub use error::{Error, Result};
