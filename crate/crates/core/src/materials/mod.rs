//! Point-defect layer for 2D materials: defect taxonomy, structures,
//! minimum-image pair distances, kernel registries, and the assembly of
//! per-site formation energy and HOMO-LUMO gap from pair kernels.

mod dataset;
pub(crate) mod distance;
mod evaluate;
mod fit;
mod predict;
mod registry;
mod structure;
mod taxonomy;

pub use dataset::build_pair_dataset;
pub use distance::{minimum_image, pair_distances, pair_distances_indexed};
pub use evaluate::{evaluate_registry, DensityClass, EvaluationReport, Residual, HIGH_DENSITY_MAX, LOW_DENSITY_MAX};
pub use fit::{fit_kernels, KernelFitReport, KernelFitSettings};
pub use predict::{predict_formation_per_site, predict_gap, Prediction, Target};
pub use registry::{Kernel, KernelRegistry};
pub use structure::{load_structures, read_structures, write_structures, Defect, DefectKind, DefectStructure, Targets};
pub use taxonomy::{DefectType, InteractionType, Material};
