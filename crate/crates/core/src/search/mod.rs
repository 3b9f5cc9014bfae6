//! The outer search loop: sample candidates from the generative model,
//! filter them with predicates, fit their constants, keep the best in a
//! bounded bank that fine-tunes the model, and report a Pareto front over
//! accuracy and complexity.

mod bank;
mod candidate;
mod pareto;
mod predicates;
mod run;

pub use bank::Bank;
pub use candidate::Candidate;
pub use pareto::{dominates, pareto_front, ParetoFront};
pub use predicates::{apply_predicates, PredicateConfig, PredicateFailure, PredicateSet};
pub use run::{search, IterationLog, SearchConfig, SearchOutcome};
