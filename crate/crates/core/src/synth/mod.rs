//! Synthetic ground truth: closed-form kernels, noisy datasets sampled from
//! them, and multi-defect structures with exactly computed targets.

mod fabricate;
mod kernels;

pub use fabricate::{demo_registry, fabricate_structures, formation_oracle, gap_oracle, supercell, SUPERCELL};
pub use kernels::{
    kernel_by_name, paper_kernel_eq5, rkky_constants, rkky_kernel, sample_dataset, Grid, KernelSpec, BUILTIN_KERNELS,
    DEFAULT_DOMAIN, EQ5_CONSTANTS, EQ5_EXPRESSION, RKKY_EXPRESSION,
};
