use std::fmt;

use serde::{Deserialize, Serialize};

use crate::expr::{CompiledExpr, ExprTree};

/// Behavioural filters on a fitted formula `f(r)` of one variable.
///
/// (i) `f` is defined at every probe of the working domain `[r_min, r_max]`;
/// (ii) no probe yields NaN/Inf (covered by the evaluator's domain errors);
/// (iii) `|f(r)| <= tail_bound` on probes of `[r_max, tail_multiplier * r_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateSet {
    pub r_min: f64,
    pub r_max: f64,
    pub grid: usize,
    pub tail_multiplier: f64,
    pub tail_bound: f64,
}

/// Data-independent predicate parameters; the working domain and tail
/// bound are derived from a dataset by [`PredicateConfig::for_data`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredicateConfig {
    pub grid: usize,
    pub tail_multiplier: f64,
    /// Tail bound as a multiple of the largest target magnitude.
    pub tail_scale: f64,
}

impl Default for PredicateConfig {
    fn default() -> Self {
        PredicateConfig {
            grid: PredicateSet::DEFAULT_GRID,
            tail_multiplier: PredicateSet::DEFAULT_TAIL_MULTIPLIER,
            tail_scale: PredicateSet::DEFAULT_TAIL_SCALE,
        }
    }
}

impl PredicateConfig {
    pub fn for_data(&self, x: &[f64], y: &[f64]) -> PredicateSet {
        let base = PredicateSet::for_data(x, y);
        let ymax = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        PredicateSet {
            grid: self.grid,
            tail_multiplier: self.tail_multiplier,
            tail_bound: self.tail_scale * ymax,
            ..base
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        PredicateSet {
            grid: self.grid,
            tail_multiplier: self.tail_multiplier,
            ..PredicateSet::new(0.0, 1.0, self.tail_scale)
        }
        .validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PredicateFailure {
    /// Undefined or non-finite inside the working domain.
    Domain { r: f64 },
    /// Undefined or non-finite at large separation.
    TailDomain { r: f64 },
    /// Exceeds the tail bound at large separation.
    TailGrowth { r: f64, value: f64 },
}

impl fmt::Display for PredicateFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredicateFailure::Domain { r } => write!(f, "domain-error at r={r}"),
            PredicateFailure::TailDomain { r } => write!(f, "tail domain-error at r={r}"),
            PredicateFailure::TailGrowth { r, value } => {
                write!(f, "tail-growth: |f({r})| = {} exceeds bound", value.abs())
            }
        }
    }
}

impl PredicateSet {
    pub const DEFAULT_GRID: usize = 64;
    pub const DEFAULT_TAIL_MULTIPLIER: f64 = 5.0;
    /// Tail bound relative to the largest target magnitude.
    pub const DEFAULT_TAIL_SCALE: f64 = 1e3;

    pub fn new(r_min: f64, r_max: f64, tail_bound: f64) -> Self {
        PredicateSet {
            r_min,
            r_max,
            grid: Self::DEFAULT_GRID,
            tail_multiplier: Self::DEFAULT_TAIL_MULTIPLIER,
            tail_bound,
        }
    }

    /// Domain from the data range and tail bound `1e3 * max|y|`.
    pub fn for_data(x: &[f64], y: &[f64]) -> Self {
        let r_min = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let r_max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ymax = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        PredicateSet::new(r_min, r_max, Self::DEFAULT_TAIL_SCALE * ymax)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.r_min < self.r_max) || !self.r_min.is_finite() || !self.r_max.is_finite() {
            return Err(format!(
                "predicate domain must satisfy r_min < r_max (got [{}, {}])",
                self.r_min, self.r_max
            ));
        }
        if self.grid < 2 {
            return Err("predicate grid needs at least 2 points".into());
        }
        if !(self.tail_multiplier >= 1.0) {
            return Err("predicate tail multiplier must be >= 1".into());
        }
        if !(self.tail_bound >= 0.0) {
            return Err("predicate tail bound must be non-negative".into());
        }
        Ok(())
    }

    fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |i| {
            if i + 1 == n {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
    }

    pub fn domain_probes(&self) -> impl Iterator<Item = f64> {
        Self::linspace(self.r_min, self.r_max, self.grid)
    }

    pub fn tail_probes(&self) -> impl Iterator<Item = f64> {
        Self::linspace(self.r_max, self.tail_multiplier * self.r_max, self.grid)
    }
}

/// Checks a univariate formula with fixed constants against the predicates.
pub fn apply_predicates(tree: &ExprTree, const_values: &[f64], preds: &PredicateSet) -> Result<(), PredicateFailure> {
    let prog = CompiledExpr::new(tree);
    let mut stack = Vec::with_capacity(prog.stack_capacity());
    for r in preds.domain_probes() {
        if prog.eval_with(&[r], const_values, &mut stack).is_none() {
            return Err(PredicateFailure::Domain { r });
        }
    }
    for r in preds.tail_probes() {
        match prog.eval_with(&[r], const_values, &mut stack) {
            None => return Err(PredicateFailure::TailDomain { r }),
            Some(v) if v.abs() > preds.tail_bound => return Err(PredicateFailure::TailGrowth { r, value: v }),
            Some(_) => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, parse_tokens};

    fn tree(text: &str) -> ExprTree {
        parse(&parse_tokens(text).unwrap()).unwrap()
    }

    #[test]
    fn quadratic_tail_growth_fails() {
        // K * r_max = 100, bound = 1e3 * |f(r_max)| + 1 = 4001 < f(100)
        let preds = PredicateSet {
            r_min: 1.0,
            r_max: 2.0,
            grid: 64,
            tail_multiplier: 50.0,
            tail_bound: 1e3 * 4.0 + 1.0,
        };
        let res = apply_predicates(&tree("mul x x"), &[], &preds);
        assert!(matches!(res, Err(PredicateFailure::TailGrowth { .. })), "{res:?}");
    }

    #[test]
    fn decaying_tail_passes() {
        let preds = PredicateSet::new(0.5, 10.0, 10.0);
        assert_eq!(apply_predicates(&tree("div mul x x exp x"), &[], &preds), Ok(()));
    }

    #[test]
    fn pole_inside_domain_fails() {
        let preds = PredicateSet {
            grid: 11,
            ..PredicateSet::new(0.0, 10.0, 1e3)
        };
        assert_eq!(
            apply_predicates(&tree("div C0 sub x C1"), &[1.0, 5.0], &preds),
            Err(PredicateFailure::Domain { r: 5.0 })
        );
    }

    #[test]
    fn tail_domain_error() {
        // sqrt(C0 - x) is defined on [0, 4] but not beyond
        let preds = PredicateSet::new(0.0, 4.0, 1e3);
        assert!(matches!(
            apply_predicates(&tree("sqrt sub C0 x"), &[4.0], &preds),
            Err(PredicateFailure::TailDomain { .. })
        ));
    }

    #[test]
    fn validation() {
        assert!(PredicateSet::new(1.0, 1.0, 1.0).validate().is_err());
        assert!(PredicateSet {
            grid: 1,
            ..PredicateSet::new(0.0, 1.0, 1.0)
        }
        .validate()
        .is_err());
        assert!(PredicateSet {
            tail_multiplier: 0.5,
            ..PredicateSet::new(0.0, 1.0, 1.0)
        }
        .validate()
        .is_err());
        assert!(PredicateSet::new(0.0, 1.0, 1.0).validate().is_ok());
    }
}
