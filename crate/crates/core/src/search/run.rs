use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{apply_predicates, pareto_front, Bank, Candidate, ParetoFront, PredicateSet};
use crate::constfit::{fit_constants, Dataset, FitConfig};
use crate::error::{Error, Result};
use crate::expr::{complexity, parse, ComplexityWeights, PrefixSequence, MAX_CONSTANTS, MAX_SEQ_LEN};
use crate::parallel;
use crate::rng::substream;
use crate::seqvae::{finetune_on_bank, sample_prior, DecodeStatus, Decoding, Trainer};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub iterations: usize,
    pub samples_per_iter: usize,
    pub bank_capacity: usize,
    pub finetune_epochs: usize,
    pub temperature: f64,
    /// Stop early once the best bank MSE falls below this.
    pub target_mse: Option<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            iterations: 200,
            samples_per_iter: 500,
            bank_capacity: 100,
            finetune_epochs: 5,
            temperature: 1.0,
            target_mse: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.samples_per_iter == 0 || self.bank_capacity == 0 {
            return Err("search.samples_per_iter and search.bank_capacity must be positive".into());
        }
        if !(self.temperature > 0.0) {
            return Err("search.temperature must be positive".into());
        }
        Ok(())
    }
}

/// One run-log record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub validity_rate: f64,
    pub pass_rate: f64,
    pub best_mse: Option<f64>,
    pub bank_size: usize,
    pub new_candidates: usize,
    pub front_size: usize,
}

pub struct SearchOutcome {
    pub front: ParetoFront,
    pub bank: Bank,
    pub trainer: Trainer,
    pub log: Vec<IterationLog>,
    pub warnings: Vec<String>,
}

const SAMPLE_TAG: u64 = 0x5341_4d50;
const FIT_TAG: u64 = 0x4649_5421;
const TUNE_TAG: u64 = 0x5455_4e45;

#[derive(Clone)]
enum Verdict {
    Passed(Box<Candidate>),
    Rejected,
}

#[allow(clippy::too_many_arguments)]
fn evaluate_candidate(
    seq: &PrefixSequence,
    data: &Dataset,
    preds: &PredicateSet,
    fit: &FitConfig,
    weights: &ComplexityWeights,
    generation: usize,
    seed: u64,
    index: usize,
) -> Verdict {
    let tree = parse(seq).expect("decoded sequences are valid");
    if tree.constant_arity() > MAX_CONSTANTS {
        return Verdict::Rejected;
    }
    let mut rng = substream(seed, FIT_TAG ^ (generation as u64) << 20, index as u64);
    let res = fit_constants(&tree, data, fit, &mut rng);
    if !res.converged || !res.mse.is_finite() || !res.mae.is_finite() {
        return Verdict::Rejected;
    }
    // predicates need concrete constants, so they run on the fitted formula
    if apply_predicates(&tree, &res.const_values, preds).is_err() {
        return Verdict::Rejected;
    }
    Verdict::Passed(Box::new(Candidate {
        complexity: complexity(seq, weights),
        sequence: seq.clone(),
        tree,
        const_values: res.const_values,
        mse: res.mse,
        mae: res.mae,
        generation,
    }))
}

/// Runs the sample → filter → fit → bank → fine-tune loop.
///
/// Each iteration decodes `samples_per_iter` prior samples from a frozen
/// snapshot, discards invalid sequences, canonicalises constant slots, fits
/// and filters the not-yet-seen ones in parallel, merges the scored batch
/// into the bank in a deterministic order and fine-tunes on the bank.
pub fn search(
    mut trainer: Trainer,
    data: &Dataset,
    preds: &PredicateSet,
    cfg: &SearchConfig,
    fit: &FitConfig,
    weights: &ComplexityWeights,
    seed: u64,
) -> Result<SearchOutcome> {
    if data.is_empty() {
        return Err(Error::EmptyInput("search dataset"));
    }
    cfg.validate().map_err(Error::InvalidConfig)?;
    preds.validate().map_err(Error::InvalidConfig)?;

    let mut bank = Bank::new(cfg.bank_capacity);
    let mut front = ParetoFront::default();
    let mut seen: HashMap<PrefixSequence, Verdict> = HashMap::new();
    let mut log = Vec::with_capacity(cfg.iterations);
    let mode = Decoding::Sample {
        temperature: cfg.temperature,
    };

    for it in 0..cfg.iterations {
        let outs = sample_prior(
            trainer.model(),
            cfg.samples_per_iter,
            mode,
            MAX_SEQ_LEN,
            seed,
            SAMPLE_TAG ^ (it as u64) << 16,
        );
        let valid: Vec<PrefixSequence> = outs
            .into_iter()
            .filter(|o| o.status == DecodeStatus::Valid)
            .filter_map(|o| o.sequence)
            .map(|s| s.canonical())
            .collect();

        let mut fresh: Vec<PrefixSequence> = Vec::new();
        for s in &valid {
            if !seen.contains_key(s) && !fresh.contains(s) {
                fresh.push(s.clone());
            }
        }
        let verdicts = parallel::map_range(fresh.len(), |j| {
            evaluate_candidate(&fresh[j], data, preds, fit, weights, it, seed, j)
        });
        let mut scored: Vec<Candidate> = Vec::new();
        for (s, v) in fresh.iter().zip(verdicts) {
            if let Verdict::Passed(c) = &v {
                scored.push((**c).clone());
            }
            seen.insert(s.clone(), v);
        }
        let passed = valid
            .iter()
            .filter(|s| matches!(seen.get(*s), Some(Verdict::Passed(_))))
            .count();

        scored.sort_by(Candidate::bank_cmp);
        front = front.merged(&scored);
        for c in scored.iter().cloned() {
            bank.update(c);
        }

        if !bank.is_empty() && cfg.finetune_epochs > 0 {
            let mut rng = substream(seed, TUNE_TAG, it as u64);
            finetune_on_bank(&mut trainer, &bank.sequences(), cfg.finetune_epochs, &mut rng)?;
        }

        let best_mse = bank.best().map(|c| c.mse);
        log.push(IterationLog {
            iteration: it,
            validity_rate: valid.len() as f64 / cfg.samples_per_iter as f64,
            pass_rate: if valid.is_empty() {
                0.0
            } else {
                passed as f64 / valid.len() as f64
            },
            best_mse,
            bank_size: bank.len(),
            new_candidates: fresh.len(),
            front_size: front.len(),
        });
        if let (Some(target), Some(best)) = (cfg.target_mse, best_mse) {
            if best < target {
                break;
            }
        }
    }

    let mut warnings = Vec::new();
    if bank.is_empty() {
        warnings.push(format!(
            "no candidate passed the predicates in {} iterations",
            log.len()
        ));
    }
    debug_assert_eq!(front, pareto_front(front.entries()));
    Ok(SearchOutcome {
        front,
        bank,
        trainer,
        log,
        warnings,
    })
}
