use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bfgs::{minimize, BfgsSettings};
use super::Dataset;
use crate::expr::{CompiledExpr, ExprTree};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Random restarts in addition to the all-zero start.
    pub restarts: usize,
    /// Random starts are drawn uniformly from `[-init_range, init_range]`.
    pub init_range: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub rel_tol: f64,
    /// Residual assigned to rows where the expression is undefined.
    pub penalty_residual: f64,
    /// Skip the remaining restarts once the MSE falls below this.
    pub stop_below: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            restarts: 5,
            init_range: 10.0,
            max_iter: 200,
            grad_tol: 1e-8,
            rel_tol: 1e-12,
            penalty_residual: 1e6,
            stop_below: 1e-20,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.init_range > 0.0) || !(self.penalty_residual > 0.0) {
            return Err("fit.init_range and fit.penalty_residual must be positive".into());
        }
        if self.max_iter == 0 {
            return Err("fit.max_iter must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub const_values: Vec<f64>,
    pub mse: f64,
    pub mae: f64,
    /// False when every start ended with undefined rows.
    pub converged: bool,
    pub n_restarts_used: usize,
}

/// Number of distinct constant slots in the tree.
pub fn count_constants(tree: &ExprTree) -> usize {
    tree.constant_slots().len()
}

/// Predictions for every row, `None` where the expression is undefined.
pub fn predict(tree: &ExprTree, data: &Dataset, consts: &[f64]) -> Vec<Option<f64>> {
    let prog = CompiledExpr::new(tree);
    let mut stack = Vec::with_capacity(prog.stack_capacity());
    data.rows().map(|row| prog.eval_with(row, consts, &mut stack)).collect()
}

struct Objective<'a> {
    prog: CompiledExpr,
    data: &'a Dataset,
    penalty: f64,
    stack: Vec<f64>,
}

impl Objective<'_> {
    /// (mse, mae, undefined row count)
    fn metrics(&mut self, consts: &[f64]) -> (f64, f64, usize) {
        let mut se = 0.0;
        let mut ae = 0.0;
        let mut bad = 0;
        for (row, &t) in self.data.rows().zip(self.data.y()) {
            let r = match self.prog.eval_with(row, consts, &mut self.stack) {
                Some(p) if (p - t).is_finite() => p - t,
                _ => {
                    bad += 1;
                    self.penalty
                }
            };
            se += r * r;
            ae += r.abs();
        }
        let n = self.data.len() as f64;
        (se / n, ae / n, bad)
    }

    fn mse(&mut self, consts: &[f64]) -> f64 {
        self.metrics(consts).0
    }
}

/// Metrics of a tree at fixed constants: `(mse, mae, undefined rows)`.
pub fn score(tree: &ExprTree, data: &Dataset, consts: &[f64], penalty: f64) -> (f64, f64, usize) {
    let prog = CompiledExpr::new(tree);
    let stack = Vec::with_capacity(prog.stack_capacity());
    Objective {
        prog,
        data,
        penalty,
        stack,
    }
    .metrics(consts)
}

/// Fits constant slots by multi-start BFGS on the MSE.
///
/// The first start is the all-zero vector; `restarts` further starts are
/// uniform in `[-init_range, init_range]`. The lowest-MSE start wins, ties
/// going to the earlier start.
///
/// # Panics
///
/// If `data` is empty.
pub fn fit_constants<R: Rng + ?Sized>(tree: &ExprTree, data: &Dataset, cfg: &FitConfig, rng: &mut R) -> FitResult {
    assert!(!data.is_empty(), "fit_constants needs a non-empty dataset");
    let prog = CompiledExpr::new(tree);
    let stack = Vec::with_capacity(prog.stack_capacity());
    let mut obj = Objective {
        prog,
        data,
        penalty: cfg.penalty_residual,
        stack,
    };
    let n_const = tree.constant_arity();
    if n_const == 0 {
        let (mse, mae, bad) = obj.metrics(&[]);
        return FitResult {
            const_values: Vec::new(),
            mse,
            mae,
            converged: bad == 0,
            n_restarts_used: 0,
        };
    }

    let settings = BfgsSettings {
        max_iter: cfg.max_iter,
        grad_tol: cfg.grad_tol,
        rel_tol: cfg.rel_tol,
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut used = 0;
    for start in 0..=cfg.restarts {
        let x0: Vec<f64> = if start == 0 {
            vec![0.0; n_const]
        } else {
            (0..n_const)
                .map(|_| rng.random_range(-cfg.init_range..=cfg.init_range))
                .collect()
        };
        used += 1;
        let out = minimize(|c| obj.mse(c), &x0, &settings);
        if best.as_ref().is_none_or(|(_, f)| out.f < *f) {
            best = Some((out.x, out.f));
        }
        if best.as_ref().is_some_and(|(_, f)| *f < cfg.stop_below) {
            break;
        }
    }
    let (const_values, _) = best.expect("at least one start");
    let (mse, mae, bad) = obj.metrics(&const_values);
    FitResult {
        const_values,
        mse,
        mae,
        converged: bad == 0,
        n_restarts_used: used,
    }
}
