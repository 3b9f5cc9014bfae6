use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{build_pair_dataset, DefectStructure, DefectType, InteractionType, Kernel, KernelRegistry, Target};
use crate::constfit::FitConfig;
use crate::error::{Error, Result};
use crate::expr::{ComplexityWeights, ExprTree, Token, MAX_CONSTANTS};
use crate::rng::mix;
use crate::search::{search, Candidate, PredicateConfig, SearchConfig};
use crate::seqvae::Trainer;

/// Settings shared by every per-interaction search.
#[derive(Clone, Debug, Default)]
pub struct KernelFitSettings {
    pub search: SearchConfig,
    pub fit: FitConfig,
    pub weights: ComplexityWeights,
    pub predicates: PredicateConfig,
}

/// Outcome of one per-interaction search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelFitReport {
    pub interaction: String,
    pub n_points: usize,
    pub expression: String,
    pub const_values: Vec<f64>,
    pub mae: f64,
    pub mse: f64,
    pub complexity: u32,
    pub front_size: usize,
    pub iterations: usize,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `C_m · f(r) − C_{m+1}` with `m` the number of slots used by `f`.
fn affine_wrap(f: &ExprTree, scale: f64, offset: f64, consts: &[f64]) -> Result<(ExprTree, Vec<f64>)> {
    let m = consts.len();
    if m + 2 > MAX_CONSTANTS {
        return Err(Error::InvalidConfig(format!(
            "pair kernel needs {} constant slots, more than the limit of {MAX_CONSTANTS}",
            m + 2
        )));
    }
    let tree = ExprTree::binary(
        Token::SUB,
        ExprTree::binary(Token::MUL, ExprTree::leaf(Token::Const(m as u8)), f.clone()),
        ExprTree::leaf(Token::Const(m as u8 + 1)),
    );
    let mut values = consts.to_vec();
    values.extend([scale, offset]);
    Ok((tree, values))
}

/// Searches one kernel per interaction type found among the two-defect
/// structures and collects single-defect constants.
///
/// For the formation target each single-defect structure supplies `E_i`
/// (its per-site value) and the pair kernel is `V(r) = 2 f(r) − (E_i + E_j)`,
/// where `f` is the formula found on per-site data. For the gap target the
/// formula is used directly and single-defect gaps become per-type constants.
/// Among the Pareto front the most accurate member whose kernel passes the
/// predicates is kept. Every search starts from a copy of `pretrained`.
pub fn fit_kernels(
    structures: &[DefectStructure],
    target: Target,
    pretrained: &Trainer,
    settings: &KernelFitSettings,
    seed: u64,
) -> Result<(KernelRegistry, Vec<KernelFitReport>)> {
    if structures.is_empty() {
        return Err(Error::EmptyInput("structures for kernel fitting"));
    }
    let mut singles: BTreeMap<DefectType, Vec<f64>> = BTreeMap::new();
    let mut pairs: BTreeMap<InteractionType, Vec<DefectStructure>> = BTreeMap::new();
    for (index, s) in structures.iter().enumerate() {
        match s.n_defects() {
            1 => singles
                .entry(s.defects[0].defect_type())
                .or_default()
                .push(target.truth(s)?),
            2 => {
                let t = InteractionType::new(s.defects[0].defect_type(), s.defects[1].defect_type());
                pairs.entry(t).or_default().push(s.clone());
            }
            found => return Err(Error::MixedArity { index, found }),
        }
    }

    let mut reg = KernelRegistry::new();
    for (t, v) in &singles {
        match target {
            Target::Formation => reg.self_energy.insert(t.clone(), mean(v)),
            Target::Gap => reg.single_gap.insert(t.clone(), mean(v)),
        };
    }

    let mut reports = Vec::new();
    for (k, (itype, group)) in pairs.iter().enumerate() {
        let data = build_pair_dataset(group, target, itype)?;
        let xs = data.column(0);
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(lo < hi) {
            return Err(Error::InvalidDataset(format!(
                "{itype}: need at least two distinct distances"
            )));
        }
        let self_sum = match target {
            Target::Formation => {
                let e = |d: &DefectType| {
                    reg.self_energy
                        .get(d)
                        .copied()
                        .ok_or_else(|| Error::MissingSelfEnergy(d.to_string()))
                };
                Some(e(itype.first())? + e(itype.second())?)
            }
            Target::Gap => None,
        };

        let preds = settings.predicates.for_data(&xs, data.y());
        let trainer = pretrained.clone();
        let out = search(
            trainer,
            &data,
            &preds,
            &settings.search,
            &settings.fit,
            &settings.weights,
            mix(seed ^ mix(k as u64)),
        )?;

        let mut ranked: Vec<&Candidate> = out.front.entries().iter().collect();
        ranked.sort_by(|a, b| a.mae.total_cmp(&b.mae));
        let mut chosen = None;
        for c in ranked {
            let (tree, consts) = match self_sum {
                Some(sum) => affine_wrap(&c.tree, 2.0, sum, &c.const_values)?,
                None => (c.tree.clone(), c.const_values.clone()),
            };
            let kernel = Kernel::new(tree, consts, (lo, hi))?;
            if kernel.check_predicates().is_ok() {
                chosen = Some((c, kernel));
                break;
            }
        }
        let (c, kernel) = chosen
            .ok_or_else(|| Error::KernelPredicate(itype.to_string(), "no front member passed the predicates".into()))?;
        reports.push(KernelFitReport {
            interaction: itype.to_string(),
            n_points: data.len(),
            expression: c.expression(),
            const_values: c.const_values.clone(),
            mae: c.mae,
            mse: c.mse,
            complexity: c.complexity,
            front_size: out.front.len(),
            iterations: out.log.len(),
        });
        match target {
            Target::Formation => reg.kernels.insert(itype.clone(), kernel),
            Target::Gap => reg.gap_kernels.insert(itype.clone(), kernel),
        };
    }
    reg.validate()?;
    Ok((reg, reports))
}
