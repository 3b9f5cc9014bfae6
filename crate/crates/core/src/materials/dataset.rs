use super::{pair_distances, DefectStructure, InteractionType, Target};
use crate::constfit::Dataset;
use crate::error::{Error, Result};

/// Univariate dataset `(r, target)` from two-defect structures of one
/// interaction type. For the formation target, `y` is the per-site value,
/// so a fitted formula absorbs `(E_i + E_j) / 2` into its constants.
pub fn build_pair_dataset(structures: &[DefectStructure], target: Target, itype: &InteractionType) -> Result<Dataset> {
    if structures.is_empty() {
        return Err(Error::EmptyInput("two-defect structures"));
    }
    let mut xs = Vec::with_capacity(structures.len());
    let mut ys = Vec::with_capacity(structures.len());
    for (index, s) in structures.iter().enumerate() {
        if s.n_defects() != 2 {
            return Err(Error::MixedArity {
                index,
                found: s.n_defects(),
            });
        }
        let (t, r) = pair_distances(s).remove(0);
        if &t != itype {
            return Err(Error::MixedInteraction {
                expected: itype.to_string(),
                found: t.to_string(),
            });
        }
        xs.push(r);
        ys.push(target.truth(s)?);
    }
    Dataset::univariate(xs, ys, "r", target.column())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{Defect, DefectType, Material, Targets};

    fn pair(dx: f64, e: Option<f64>, sub: bool) -> DefectStructure {
        let other = if sub {
            Defect::substitution("S", "Se", [dx, 0.0, 0.0])
        } else {
            Defect::vacancy("S", [dx, 0.0, 0.0])
        };
        DefectStructure::new(
            Material::MoS2,
            [30.0, 0.0, 0.0, 0.0, 30.0, 0.0, 0.0, 0.0, 20.0],
            vec![Defect::vacancy("Mo", [0.0; 3]), other],
        )
        .unwrap()
        .with_targets(Targets {
            formation_energy_eV: e,
            homo_lumo_gap_eV: None,
        })
    }

    fn vac_pair() -> InteractionType {
        InteractionType::new(DefectType::vacancy("S"), DefectType::vacancy("Mo"))
    }

    #[test]
    fn twenty_structures_give_twenty_rows() {
        let list: Vec<_> = (0..20)
            .map(|i| pair(1.0 + i as f64 * 0.5, Some(i as f64), false))
            .collect();
        let d = build_pair_dataset(&list, Target::Formation, &vac_pair()).unwrap();
        assert_eq!(d.len(), 20);
        assert_eq!(d.row(3), &[2.5]);
        assert_eq!(d.y()[3], 3.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            build_pair_dataset(&[], Target::Formation, &vac_pair()),
            Err(Error::EmptyInput(_))
        ));
        let mut three = pair(2.0, Some(1.0), false);
        three.defects.push(Defect::vacancy("S", [5.0, 5.0, 0.0]));
        assert!(matches!(
            build_pair_dataset(&[pair(3.0, Some(1.0), false), three], Target::Formation, &vac_pair()),
            Err(Error::MixedArity { index: 1, found: 3 })
        ));
        assert!(matches!(
            build_pair_dataset(&[pair(2.0, Some(1.0), true)], Target::Formation, &vac_pair()),
            Err(Error::MixedInteraction { .. })
        ));
        assert!(matches!(
            build_pair_dataset(&[pair(2.0, None, false)], Target::Formation, &vac_pair()),
            Err(Error::MissingTarget(_))
        ));
        assert!(matches!(
            build_pair_dataset(&[pair(2.0, Some(1.0), false)], Target::Gap, &vac_pair()),
            Err(Error::MissingTarget(_))
        ));
    }
}
