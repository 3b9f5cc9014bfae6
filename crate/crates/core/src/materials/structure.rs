use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DefectType, Material};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefectKind {
    Vacancy,
    Substitution,
}

/// A point defect at a Cartesian position in Å.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defect {
    pub kind: DefectKind,
    pub site_species: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub new_species: Option<String>,
    pub position: [f64; 3],
}

impl Defect {
    pub fn vacancy(site: &str, position: [f64; 3]) -> Self {
        Defect {
            kind: DefectKind::Vacancy,
            site_species: site.to_string(),
            new_species: None,
            position,
        }
    }

    pub fn substitution(site: &str, new: &str, position: [f64; 3]) -> Self {
        Defect {
            kind: DefectKind::Substitution,
            site_species: site.to_string(),
            new_species: Some(new.to_string()),
            position,
        }
    }

    /// Same defect type placed at `position`.
    pub fn of_type(t: &DefectType, position: [f64; 3]) -> Self {
        let label = t.as_str();
        let parts: Vec<&str> = label.split('_').collect();
        match parts.as_slice() {
            ["sub", site, new] => Defect::substitution(site, new, position),
            _ => Defect::vacancy(t.site_species(), position),
        }
    }

    pub fn defect_type(&self) -> DefectType {
        match (&self.kind, &self.new_species) {
            (DefectKind::Substitution, Some(new)) => DefectType::substitution(&self.site_species, new),
            _ => DefectType::vacancy(&self.site_species),
        }
    }

    fn validate(&self, material: Material) -> Result<()> {
        match (self.kind, &self.new_species) {
            (DefectKind::Vacancy, Some(_)) => return Err(Error::InvalidStructure("vacancy with a new species".into())),
            (DefectKind::Substitution, None) => {
                return Err(Error::InvalidStructure("substitution without a new species".into()))
            }
            _ => {}
        }
        if self.position.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidStructure("non-finite defect position".into()));
        }
        let t = self.defect_type();
        if !material.allows(&t) {
            return Err(Error::InvalidStructure(format!(
                "defect type {t} is not in the {material} taxonomy"
            )));
        }
        Ok(())
    }
}

/// Ground-truth labels. `formation_energy_eV` is the formation energy per
/// defect site.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct Targets {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formation_energy_eV: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homo_lumo_gap_eV: Option<f64>,
}

/// A supercell with its defects. `cell` holds the lattice vectors as rows
/// (row-major 3×3, Å); the first two are periodic, the third is not.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectStructure {
    pub material: Material,
    pub cell: [f64; 9],
    pub defects: Vec<Defect>,
    #[serde(default)]
    pub targets: Targets,
}

const COINCIDENT: f64 = 1e-9;

impl DefectStructure {
    pub fn new(material: Material, cell: [f64; 9], defects: Vec<Defect>) -> Result<Self> {
        let s = DefectStructure {
            material,
            cell,
            defects,
            targets: Targets::default(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_targets(mut self, targets: Targets) -> Self {
        self.targets = targets;
        self
    }

    pub fn a(&self) -> [f64; 3] {
        [self.cell[0], self.cell[1], self.cell[2]]
    }

    pub fn b(&self) -> [f64; 3] {
        [self.cell[3], self.cell[4], self.cell[5]]
    }

    pub fn n_defects(&self) -> usize {
        self.defects.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.defects.is_empty() {
            return Err(Error::InvalidStructure("structure has no defects".into()));
        }
        if self.cell.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidStructure("non-finite cell entry".into()));
        }
        let (a, b) = (self.a(), self.b());
        let cross = super::distance::cross(a, b);
        let area = super::distance::norm(cross);
        if !(area > 1e-9 * super::distance::norm(a) * super::distance::norm(b)) || area == 0.0 {
            return Err(Error::InvalidStructure(
                "in-plane lattice vectors are linearly dependent".into(),
            ));
        }
        for d in &self.defects {
            d.validate(self.material)?;
        }
        for (i, j, r) in super::distance::pair_distances_indexed(self) {
            if r < COINCIDENT {
                return Err(Error::InvalidStructure(format!(
                    "defects {i} and {j} occupy the same site"
                )));
            }
        }
        Ok(())
    }
}

/// Reads a JSON array of structures and validates each.
pub fn read_structures<R: Read>(reader: R) -> Result<Vec<DefectStructure>> {
    let list: Vec<DefectStructure> = serde_json::from_reader(reader)?;
    for (i, s) in list.iter().enumerate() {
        s.validate()
            .map_err(|e| Error::InvalidStructure(format!("structure {i}: {e}")))?;
    }
    Ok(list)
}

pub fn load_structures(path: &Path) -> Result<Vec<DefectStructure>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_structures(BufReader::new(f))
}

pub fn write_structures<W: Write>(structures: &[DefectStructure], writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, structures)?;
    Ok(())
}
