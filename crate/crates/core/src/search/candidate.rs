use std::cmp::Ordering;

use crate::expr::{ExprTree, PrefixSequence};

/// A scored formula: sequence, fitted constants and metrics.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub sequence: PrefixSequence,
    pub tree: ExprTree,
    pub const_values: Vec<f64>,
    pub mse: f64,
    pub mae: f64,
    pub complexity: u32,
    /// Search iteration in which the candidate was first produced.
    pub generation: usize,
}

impl Candidate {
    /// Bank order: mse, then complexity, then token order.
    pub(crate) fn bank_cmp(&self, other: &Candidate) -> Ordering {
        self.mse
            .total_cmp(&other.mse)
            .then(self.complexity.cmp(&other.complexity))
            .then_with(|| self.sequence.tokens().cmp(other.sequence.tokens()))
    }

    pub fn expression(&self) -> String {
        self.sequence.to_string()
    }
}
