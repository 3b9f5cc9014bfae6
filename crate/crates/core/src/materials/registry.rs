use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DefectType, InteractionType};
use crate::error::{Error, Result};
use crate::expr::{parse, CompiledExpr, ExprTree, PrefixSequence};
use crate::search::{apply_predicates, PredicateSet};

/// A fitted univariate kernel `f(r)` with its training domain in Å.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    tree: ExprTree,
    const_values: Vec<f64>,
    domain: (f64, f64),
}

impl Kernel {
    pub fn new(tree: ExprTree, const_values: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        if !(domain.0 < domain.1) || !domain.0.is_finite() || !domain.1.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "kernel domain must satisfy r_min < r_max (got [{}, {}])",
                domain.0, domain.1
            )));
        }
        if let Some(&slot) = tree.constant_slots().iter().max() {
            if slot as usize >= const_values.len() {
                return Err(Error::InvalidConfig(format!(
                    "kernel uses C{slot} but only {} constants are given",
                    const_values.len()
                )));
            }
        }
        Ok(Kernel {
            tree,
            const_values,
            domain,
        })
    }

    pub fn from_text(expression: &str, const_values: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        let seq: PrefixSequence = expression.parse()?;
        Kernel::new(parse(&seq)?, const_values, domain)
    }

    pub fn tree(&self) -> &ExprTree {
        &self.tree
    }

    pub fn const_values(&self) -> &[f64] {
        &self.const_values
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn expression(&self) -> String {
        crate::expr::format_tokens(&self.tree.preorder())
    }

    pub fn in_domain(&self, r: f64) -> bool {
        r >= self.domain.0 && r <= self.domain.1
    }

    /// `None` on a domain error.
    pub fn eval(&self, r: f64) -> Option<f64> {
        self.tree.evaluate(&[r], &self.const_values).ok()
    }

    /// Predicate set over the stored domain. The tail bound is 1e3 times the
    /// largest magnitude on the domain, plus one so that identically small
    /// kernels are not rejected.
    pub fn predicate_set(&self) -> PredicateSet {
        let probe = PredicateSet::new(self.domain.0, self.domain.1, f64::INFINITY);
        let prog = CompiledExpr::new(&self.tree);
        let peak = probe
            .domain_probes()
            .filter_map(|r| prog.eval(&[r], &self.const_values))
            .fold(0.0f64, |m, v| m.max(v.abs()));
        PredicateSet::new(
            self.domain.0,
            self.domain.1,
            PredicateSet::DEFAULT_TAIL_SCALE * peak + 1.0,
        )
    }

    pub fn check_predicates(&self) -> Result<(), String> {
        apply_predicates(&self.tree, &self.const_values, &self.predicate_set()).map_err(|f| f.to_string())
    }
}

/// Self energies, pair kernels `V_ij(r)` and gap kernels `E_ij(r)` (eV).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KernelRegistry {
    pub self_energy: BTreeMap<DefectType, f64>,
    /// Gap of a structure holding a single defect of the given type.
    pub single_gap: BTreeMap<DefectType, f64>,
    pub kernels: BTreeMap<InteractionType, Kernel>,
    pub gap_kernels: BTreeMap<InteractionType, Kernel>,
}

impl KernelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Checks that every kernel passes the predicates on its domain and that
    /// every defect type in a pair kernel has a self energy.
    pub fn validate(&self) -> Result<()> {
        for (t, k) in self.kernels.iter().chain(&self.gap_kernels) {
            k.check_predicates()
                .map_err(|why| Error::KernelPredicate(t.to_string(), why))?;
        }
        for t in self.kernels.keys() {
            for d in [t.first(), t.second()] {
                if !self.self_energy.contains_key(d) {
                    return Err(Error::MissingSelfEnergy(d.to_string()));
                }
            }
        }
        for v in self.self_energy.values().chain(self.single_gap.values()) {
            if !v.is_finite() {
                return Err(Error::InvalidConfig("non-finite registry constant".into()));
            }
        }
        Ok(())
    }

    /// Defect types mentioned anywhere in the registry.
    pub fn defect_types(&self) -> BTreeSet<DefectType> {
        let mut out: BTreeSet<DefectType> = self.self_energy.keys().cloned().collect();
        out.extend(self.single_gap.keys().cloned());
        for t in self.kernels.keys().chain(self.gap_kernels.keys()) {
            out.insert(t.first().clone());
            out.insert(t.second().clone());
        }
        out
    }

    /// Entries of `other` override entries of `self`.
    pub fn merge(&mut self, other: KernelRegistry) {
        self.self_energy.extend(other.self_energy);
        self.single_gap.extend(other.single_gap);
        self.kernels.extend(other.kernels);
        self.gap_kernels.extend(other.gap_kernels);
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let file: RegistryFile = serde_json::from_reader(reader)?;
        let reg = KernelRegistry::try_from(file)?;
        reg.validate()?;
        Ok(reg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(f))
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, &RegistryFile::from(self))?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelEntry {
    pair: [DefectType; 2],
    expression: String,
    const_values: Vec<f64>,
    domain: [f64; 2],
    units: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryFile {
    energy_units: String,
    distance_units: String,
    #[serde(default)]
    self_energy: BTreeMap<DefectType, f64>,
    #[serde(default)]
    single_gap: BTreeMap<DefectType, f64>,
    #[serde(default)]
    kernels: Vec<KernelEntry>,
    #[serde(default)]
    gap_kernels: Vec<KernelEntry>,
}

fn entries(map: &BTreeMap<InteractionType, Kernel>) -> Vec<KernelEntry> {
    map.iter()
        .map(|(t, k)| KernelEntry {
            pair: [t.first().clone(), t.second().clone()],
            expression: k.expression(),
            const_values: k.const_values.clone(),
            domain: [k.domain.0, k.domain.1],
            units: "eV".into(),
        })
        .collect()
}

impl From<&KernelRegistry> for RegistryFile {
    fn from(r: &KernelRegistry) -> Self {
        RegistryFile {
            energy_units: "eV".into(),
            distance_units: "angstrom".into(),
            self_energy: r.self_energy.clone(),
            single_gap: r.single_gap.clone(),
            kernels: entries(&r.kernels),
            gap_kernels: entries(&r.gap_kernels),
        }
    }
}

fn kernel_map(list: Vec<KernelEntry>) -> Result<BTreeMap<InteractionType, Kernel>> {
    let mut out = BTreeMap::new();
    for e in list {
        if e.units != "eV" {
            return Err(Error::InvalidConfig(format!("unsupported kernel units `{}`", e.units)));
        }
        let [a, b] = e.pair;
        let t = InteractionType::new(a, b);
        let k = Kernel::from_text(&e.expression, e.const_values, (e.domain[0], e.domain[1]))?;
        if out.insert(t.clone(), k).is_some() {
            return Err(Error::InvalidConfig(format!("duplicate kernel for {t}")));
        }
    }
    Ok(out)
}

impl TryFrom<RegistryFile> for KernelRegistry {
    type Error = Error;

    fn try_from(f: RegistryFile) -> Result<Self> {
        if f.energy_units != "eV" || f.distance_units != "angstrom" {
            return Err(Error::InvalidConfig("registry units must be eV and angstrom".into()));
        }
        Ok(KernelRegistry {
            self_energy: f.self_energy,
            single_gap: f.single_gap,
            kernels: kernel_map(f.kernels)?,
            gap_kernels: kernel_map(f.gap_kernels)?,
        })
    }
}
