use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Host materials covered by the defect taxonomy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Material {
    MoS2,
    WSe2,
    #[serde(rename = "h-BN")]
    HBn,
    GaSe,
    InSe,
    BP,
}

impl Material {
    pub const ALL: [Material; 6] = [
        Material::MoS2,
        Material::WSe2,
        Material::HBn,
        Material::GaSe,
        Material::InSe,
        Material::BP,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Material::MoS2 => "MoS2",
            Material::WSe2 => "WSe2",
            Material::HBn => "h-BN",
            Material::GaSe => "GaSe",
            Material::InSe => "InSe",
            Material::BP => "BP",
        }
    }

    /// Host species, one per sublattice.
    pub fn species(self) -> &'static [&'static str] {
        match self {
            Material::MoS2 => &["Mo", "S"],
            Material::WSe2 => &["W", "Se"],
            Material::HBn => &["B", "N"],
            Material::GaSe => &["Ga", "Se"],
            Material::InSe => &["In", "Se"],
            Material::BP => &["P"],
        }
    }

    /// Allowed substitutions as `(site_species, new_species)`.
    pub fn substitutions(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Material::MoS2 => &[("S", "Se"), ("Mo", "W")],
            Material::WSe2 => &[("Se", "S"), ("W", "Mo")],
            Material::HBn => &[("B", "C"), ("N", "C")],
            Material::GaSe => &[("Ga", "In"), ("Se", "S")],
            Material::InSe => &[("In", "Ga"), ("Se", "S")],
            Material::BP => &[("P", "N")],
        }
    }

    /// Species that may be removed.
    pub fn vacancies(self) -> &'static [&'static str] {
        match self {
            Material::MoS2 => &["Mo", "S"],
            Material::WSe2 => &["W", "Se"],
            Material::HBn => &["B", "N"],
            Material::GaSe => &["Ga", "Se"],
            Material::InSe => &["In", "Se"],
            Material::BP => &["P"],
        }
    }

    /// Every defect type of this material, vacancies first.
    pub fn defect_types(self) -> Vec<DefectType> {
        let vac = self.vacancies().iter().map(|s| DefectType::vacancy(s));
        let sub = self.substitutions().iter().map(|(s, n)| DefectType::substitution(s, n));
        vac.chain(sub).collect()
    }

    pub fn allows(self, t: &DefectType) -> bool {
        self.defect_types().contains(t)
    }
}

impl fmt::Display for Material {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Material {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Material::ALL
            .into_iter()
            .find(|m| m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidStructure(format!("unknown material `{s}`")))
    }
}

/// Defect-type label: `vac_<site>` or `sub_<site>_<new>`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DefectType(String);

impl DefectType {
    pub fn vacancy(site: &str) -> Self {
        DefectType(format!("vac_{site}"))
    }

    pub fn substitution(site: &str, new: &str) -> Self {
        DefectType(format!("sub_{site}_{new}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Host species whose site this defect occupies.
    pub fn site_species(&self) -> &str {
        let rest = self.0.split_once('_').map_or("", |(_, r)| r);
        rest.split('_').next().unwrap_or("")
    }
}

impl fmt::Display for DefectType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for DefectType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('_').collect();
        match parts.as_slice() {
            ["vac", site] if !site.is_empty() => Ok(DefectType::vacancy(site)),
            ["sub", site, new] if !site.is_empty() && !new.is_empty() => Ok(DefectType::substitution(site, new)),
            _ => Err(Error::InvalidStructure(format!("bad defect type label `{s}`"))),
        }
    }
}

/// Unordered pair of defect types, stored with `a <= b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InteractionType {
    a: DefectType,
    b: DefectType,
}

impl InteractionType {
    pub fn new(x: DefectType, y: DefectType) -> Self {
        if x <= y {
            InteractionType { a: x, b: y }
        } else {
            InteractionType { a: y, b: x }
        }
    }

    pub fn first(&self) -> &DefectType {
        &self.a
    }

    pub fn second(&self) -> &DefectType {
        &self.b
    }
}

impl fmt::Display for InteractionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}, {}}}", self.a, self.b)
    }
}

/// Accepts `a+b`, `a,b` or the display form `{a, b}`.
impl FromStr for InteractionType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('{').trim_end_matches('}');
        let (x, y) = inner
            .split_once(['+', ','])
            .ok_or_else(|| Error::InvalidStructure(format!("bad interaction type `{s}`")))?;
        Ok(InteractionType::new(x.trim().parse()?, y.trim().parse()?))
    }
}
