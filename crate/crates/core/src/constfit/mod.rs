//! Constant fitting: datasets, error metrics and multi-start BFGS over the
//! constant slots of a candidate expression.

mod bfgs;
mod dataset;
mod fit;
mod metrics;

pub use bfgs::{minimize, BfgsOutcome, BfgsSettings};
pub use dataset::Dataset;
pub use fit::{count_constants, fit_constants, predict, score, FitConfig, FitResult};
pub use metrics::{mae, mse};
