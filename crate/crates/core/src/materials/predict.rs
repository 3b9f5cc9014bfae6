use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::distance::pair_distances_indexed;
use super::{DefectStructure, InteractionType, Kernel, KernelRegistry};
use crate::error::{Error, Result};

/// Prediction target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// Formation energy per defect site.
    Formation,
    /// HOMO-LUMO gap.
    Gap,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Formation => "formation",
            Target::Gap => "gap",
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            Target::Formation => "formation_energy_per_site_eV",
            Target::Gap => "homo_lumo_gap_eV",
        }
    }

    pub fn truth(self, s: &DefectStructure) -> Result<f64> {
        match self {
            Target::Formation => s
                .targets
                .formation_energy_eV
                .ok_or(Error::MissingTarget("formation_energy_eV")),
            Target::Gap => s
                .targets
                .homo_lumo_gap_eV
                .ok_or(Error::MissingTarget("homo_lumo_gap_eV")),
        }
    }

    pub fn predict(self, s: &DefectStructure, reg: &KernelRegistry) -> Result<Prediction> {
        match self {
            Target::Formation => predict_formation_per_site(s, reg),
            Target::Gap => predict_gap(s, reg),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "formation" | "formation-per-site" => Ok(Target::Formation),
            "gap" => Ok(Target::Gap),
            _ => Err(Error::InvalidConfig(format!(
                "unknown target `{s}` (expected formation or gap)"
            ))),
        }
    }
}

/// A predicted value in eV with diagnostic flags.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: f64,
    /// Some pair distance fell outside its kernel's training domain.
    pub extrapolated: bool,
    /// Gap of a single-defect structure, taken from the registry constant.
    pub single_defect: bool,
}

fn kernel<'a>(map: &'a std::collections::BTreeMap<InteractionType, Kernel>, t: &InteractionType) -> Result<&'a Kernel> {
    map.get(t).ok_or_else(|| Error::MissingKernel(t.to_string()))
}

fn eval_kernel(k: &Kernel, t: &InteractionType, r: f64) -> Result<f64> {
    k.eval(r)
        .ok_or_else(|| Error::KernelPredicate(t.to_string(), format!("domain-error at r={r}")))
}

/// Total formation energy `Σ E_i + Σ_{i<j} V(r_ij)` divided by the number
/// of defects.
pub fn predict_formation_per_site(s: &DefectStructure, reg: &KernelRegistry) -> Result<Prediction> {
    let types: Vec<_> = s.defects.iter().map(|d| d.defect_type()).collect();
    let mut total = 0.0;
    for t in &types {
        total += reg
            .self_energy
            .get(t)
            .ok_or_else(|| Error::MissingSelfEnergy(t.to_string()))?;
    }
    let mut extrapolated = false;
    for (i, j, r) in pair_distances_indexed(s) {
        let t = InteractionType::new(types[i].clone(), types[j].clone());
        let k = kernel(&reg.kernels, &t)?;
        extrapolated |= !k.in_domain(r);
        total += eval_kernel(k, &t, r)?;
    }
    Ok(Prediction {
        value: total / types.len() as f64,
        extrapolated,
        single_defect: false,
    })
}

/// Minimum of the gap kernel over all defect pairs. A single defect takes
/// the per-type gap constant from the registry and is flagged.
pub fn predict_gap(s: &DefectStructure, reg: &KernelRegistry) -> Result<Prediction> {
    if s.defects.len() == 1 {
        let t = s.defects[0].defect_type();
        let value = *reg.single_gap.get(&t).ok_or_else(|| Error::MissingGap(t.to_string()))?;
        return Ok(Prediction {
            value,
            extrapolated: false,
            single_defect: true,
        });
    }
    let mut best = f64::INFINITY;
    let mut extrapolated = false;
    for (i, j, r) in pair_distances_indexed(s) {
        let t = InteractionType::new(s.defects[i].defect_type(), s.defects[j].defect_type());
        let k = kernel(&reg.gap_kernels, &t)?;
        extrapolated |= !k.in_domain(r);
        best = best.min(eval_kernel(k, &t, r)?);
    }
    Ok(Prediction {
        value: best,
        extrapolated,
        single_defect: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{Defect, DefectType, Material};

    fn cell() -> [f64; 9] {
        [50.0, 0.0, 0.0, 0.0, 50.0, 0.0, 0.0, 0.0, 20.0]
    }

    fn registry() -> KernelRegistry {
        let (a, b) = (DefectType::vacancy("Mo"), DefectType::vacancy("S"));
        let mut r = KernelRegistry::new();
        r.self_energy.insert(a.clone(), 1.0);
        r.self_energy.insert(b.clone(), 2.0);
        r.single_gap.insert(a.clone(), 1.7);
        let domain = (1.0, 10.0);
        let one_over_r = Kernel::from_text("div C0 x", vec![1.0], domain).unwrap();
        for t in [
            InteractionType::new(a.clone(), b.clone()),
            InteractionType::new(a.clone(), a.clone()),
            InteractionType::new(b.clone(), b.clone()),
        ] {
            r.kernels.insert(t.clone(), one_over_r.clone());
            // gap kernel = 1 + 0.1 r, so the minimum sits at the closest pair
            r.gap_kernels
                .insert(t, Kernel::from_text("add C0 mul C1 x", vec![1.0, 0.1], domain).unwrap());
        }
        r
    }

    #[test]
    fn two_defect_hand_arithmetic() {
        let s = DefectStructure::new(
            Material::MoS2,
            cell(),
            vec![Defect::vacancy("Mo", [0.0; 3]), Defect::vacancy("S", [2.0, 0.0, 0.0])],
        )
        .unwrap();
        let p = predict_formation_per_site(&s, &registry()).unwrap();
        // E = 1 + 2 + 1/2 = 3.5, per site 1.75
        assert_eq!(p.value, 1.75);
        assert!(!p.extrapolated);
        assert_eq!(predict_gap(&s, &registry()).unwrap().value, 1.2);
    }

    #[test]
    fn single_defect() {
        let s = DefectStructure::new(Material::MoS2, cell(), vec![Defect::vacancy("Mo", [0.0; 3])]).unwrap();
        assert_eq!(predict_formation_per_site(&s, &registry()).unwrap().value, 1.0);
        let g = predict_gap(&s, &registry()).unwrap();
        assert_eq!(g.value, 1.7);
        assert!(g.single_defect);
        let s = DefectStructure::new(Material::MoS2, cell(), vec![Defect::vacancy("S", [0.0; 3])]).unwrap();
        assert!(matches!(predict_gap(&s, &registry()), Err(Error::MissingGap(_))));
    }

    #[test]
    fn gap_is_the_pair_minimum() {
        let s = DefectStructure::new(
            Material::MoS2,
            cell(),
            vec![
                Defect::vacancy("Mo", [0.0; 3]),
                Defect::vacancy("S", [9.0, 0.0, 0.0]),
                Defect::vacancy("S", [0.0, 5.0, 0.0]),
            ],
        )
        .unwrap();
        // pair values 1.9, 1.5 and 1 + 0.1·√106
        assert_eq!(predict_gap(&s, &registry()).unwrap().value, 1.5);
    }

    #[test]
    fn extrapolation_is_flagged_but_evaluated() {
        let s = DefectStructure::new(
            Material::MoS2,
            cell(),
            vec![Defect::vacancy("Mo", [0.0; 3]), Defect::vacancy("S", [20.0, 0.0, 0.0])],
        )
        .unwrap();
        let p = predict_formation_per_site(&s, &registry()).unwrap();
        assert!(p.extrapolated);
        assert_eq!(p.value, (3.0 + 1.0 / 20.0) / 2.0);
    }

    #[test]
    fn missing_kernel_names_the_pair() {
        let s = DefectStructure::new(
            Material::MoS2,
            cell(),
            vec![
                Defect::vacancy("Mo", [0.0; 3]),
                Defect::substitution("S", "Se", [2.0, 0.0, 0.0]),
            ],
        )
        .unwrap();
        let err = predict_formation_per_site(&s, &registry()).unwrap_err();
        assert!(matches!(err, Error::MissingSelfEnergy(_)));
        let mut reg = registry();
        reg.self_energy.insert(DefectType::substitution("S", "Se"), 0.5);
        let err = predict_formation_per_site(&s, &reg).unwrap_err();
        assert!(err.to_string().contains("{sub_S_Se, vac_Mo}"), "{err}");
    }
}
