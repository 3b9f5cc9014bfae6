use serde::{Deserialize, Serialize};

use super::{DefectStructure, KernelRegistry, Target};
use crate::error::Result;
use crate::parallel;

/// Defect-density classes used for reporting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityClass {
    /// At most 3 defects.
    Low,
    /// Between 4 and 25 defects.
    High,
}

pub const LOW_DENSITY_MAX: usize = 3;
pub const HIGH_DENSITY_MAX: usize = 25;

impl DensityClass {
    /// `None` for structures with more than 25 defects.
    pub fn classify(n_defects: usize) -> Option<DensityClass> {
        match n_defects {
            0..=LOW_DENSITY_MAX => Some(DensityClass::Low),
            4..=HIGH_DENSITY_MAX => Some(DensityClass::High),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct Residual {
    pub index: usize,
    pub n_defects: usize,
    pub class: Option<DensityClass>,
    pub predicted_eV: f64,
    pub truth_eV: f64,
    pub residual_meV: f64,
    pub extrapolated: bool,
}

/// MAE in meV per density class; a class with no structures is `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct EvaluationReport {
    pub target: Target,
    pub mae_low_meV: Option<f64>,
    pub mae_high_meV: Option<f64>,
    pub n_low: usize,
    pub n_high: usize,
    pub n_unclassified: usize,
    pub residuals: Vec<Residual>,
}

fn class_mae(rs: &[Residual], class: DensityClass) -> (Option<f64>, usize) {
    let picked: Vec<f64> = rs
        .iter()
        .filter(|r| r.class == Some(class))
        .map(|r| r.residual_meV.abs())
        .collect();
    if picked.is_empty() {
        (None, 0)
    } else {
        (Some(picked.iter().sum::<f64>() / picked.len() as f64), picked.len())
    }
}

/// Predicts every structure and reports MAE per density class in meV.
pub fn evaluate_registry(
    structures: &[DefectStructure],
    reg: &KernelRegistry,
    target: Target,
) -> Result<EvaluationReport> {
    let rows = parallel::map_range(structures.len(), |i| -> Result<Residual> {
        let s = &structures[i];
        let truth = target.truth(s)?;
        let p = target.predict(s, reg)?;
        Ok(Residual {
            index: i,
            n_defects: s.n_defects(),
            class: DensityClass::classify(s.n_defects()),
            predicted_eV: p.value,
            truth_eV: truth,
            residual_meV: (p.value - truth) * 1e3,
            extrapolated: p.extrapolated,
        })
    });
    let residuals = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let (mae_low, n_low) = class_mae(&residuals, DensityClass::Low);
    let (mae_high, n_high) = class_mae(&residuals, DensityClass::High);
    Ok(EvaluationReport {
        target,
        mae_low_meV: mae_low,
        mae_high_meV: mae_high,
        n_low,
        n_high,
        n_unclassified: residuals.len() - n_low - n_high,
        residuals,
    })
}
