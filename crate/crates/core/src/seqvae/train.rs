use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::network::loss_and_grad;
use super::SeqVaeModel;
use crate::error::{Error, Result};
use crate::expr::{random_valid_sequence, PrefixSequence, MAX_SEQ_LEN};
use crate::parallel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Final KL weight reached after the warm-up.
    pub kl_weight: f64,
    /// KL weight ramps linearly from 0 over this many epochs.
    pub beta_warmup_epochs: usize,
    pub pretrain_epochs: usize,
    pub pretrain_samples_per_epoch: usize,
    /// Length cap for the random pretraining corpus. Decoding is still
    /// capped at the global maximum, so a shorter corpus leaves the decoder
    /// slack to close open operands.
    pub pretrain_max_len: usize,
    /// Feed the previous ground-truth token to the decoder; otherwise the
    /// decoder only sees PAD inputs and must rely on the latent code.
    pub teacher_forcing: bool,
    /// Sampling temperature used during search.
    pub temperature: f64,
    /// Global gradient-norm clip; 0 disables.
    pub grad_clip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            kl_weight: 1.0,
            beta_warmup_epochs: 10,
            pretrain_epochs: 30,
            pretrain_samples_per_epoch: 2048,
            pretrain_max_len: 20,
            teacher_forcing: true,
            temperature: 1.0,
            grad_clip: 5.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err("train.learning_rate must be finite and non-negative".into());
        }
        if self.batch_size == 0 {
            return Err("train.batch_size must be positive".into());
        }
        if self.pretrain_max_len == 0 || self.pretrain_max_len > MAX_SEQ_LEN {
            return Err(format!("train.pretrain_max_len must lie in 1..={MAX_SEQ_LEN}"));
        }
        if !(self.temperature > 0.0) {
            return Err("train.temperature must be positive".into());
        }
        if !(self.kl_weight >= 0.0) || !(self.grad_clip >= 0.0) {
            return Err("train.kl_weight and train.grad_clip must be non-negative".into());
        }
        Ok(())
    }
}

/// Batch-mean losses of one optimisation step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLosses {
    pub recon: f64,
    pub kl: f64,
    pub beta: f64,
    pub total: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub steps: usize,
    pub recon: f64,
    pub kl: f64,
    pub beta: f64,
}

/// Owns the model being trained together with its Adam state. Only the
/// trainer mutates parameters; clones of [`Trainer::model`] are immutable
/// snapshots for sampling.
#[derive(Clone, Debug)]
pub struct Trainer {
    model: SeqVaeModel,
    config: TrainConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    epochs_done: usize,
}

const ADAM_B1: f64 = 0.9;
const ADAM_B2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const GRAD_CHUNK: usize = 4;

impl Trainer {
    pub fn new(model: SeqVaeModel, config: TrainConfig) -> Self {
        Trainer::resume(model, config, 0)
    }

    /// Continues a schedule after `epochs_done` completed epochs.
    pub fn resume(model: SeqVaeModel, config: TrainConfig, epochs_done: usize) -> Self {
        let n = model.params().len();
        Trainer {
            model,
            config,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            epochs_done,
        }
    }

    pub fn model(&self) -> &SeqVaeModel {
        &self.model
    }

    pub fn into_model(self) -> SeqVaeModel {
        self.model
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    /// KL weight for the current epoch.
    pub fn beta(&self) -> f64 {
        let w = self.config.beta_warmup_epochs;
        if w == 0 {
            self.config.kl_weight
        } else {
            self.config.kl_weight * (self.epochs_done as f64 / w as f64).min(1.0)
        }
    }

    /// One Adam step on the batch-mean loss `recon + beta * kl`.
    ///
    /// A non-finite loss or gradient leaves the parameters untouched and
    /// returns [`Error::NonFiniteLoss`].
    pub fn train_step<R: Rng + ?Sized>(&mut self, batch: &[PrefixSequence], rng: &mut R) -> Result<StepLosses> {
        if batch.is_empty() {
            return Err(Error::EmptyInput("training batch"));
        }
        let beta = self.beta();
        let lat = self.model.layout().latent;
        let examples: Vec<(Vec<usize>, Vec<f64>)> = batch
            .iter()
            .map(|s| {
                let ids = self.model.token_ids(s)?;
                let eps: Vec<f64> = (0..lat).map(|_| StandardNormal.sample(rng)).collect();
                Ok((ids, eps))
            })
            .collect::<Result<_>>()?;
        let scale = 1.0 / batch.len() as f64;
        let layout = self.model.layout();
        let params = self.model.params();
        let tf = self.config.teacher_forcing;
        let parts = parallel::map_chunks(&examples, GRAD_CHUNK, |chunk| {
            let mut g = vec![0.0; layout.total];
            let (mut recon, mut kl) = (0.0, 0.0);
            for (ids, eps) in chunk {
                let l = loss_and_grad(layout, params, ids, eps, beta, tf, Some((&mut g, scale)));
                recon += l.recon;
                kl += l.kl;
            }
            (g, recon, kl)
        });
        let mut grad = vec![0.0; layout.total];
        let (mut recon, mut kl) = (0.0, 0.0);
        for (g, r, k) in parts {
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
            recon += r;
            kl += k;
        }
        recon *= scale;
        kl *= scale;
        let total = recon + beta * kl;
        if !total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss { recon, kl });
        }
        self.apply_adam(&mut grad);
        Ok(StepLosses { recon, kl, beta, total })
    }

    fn apply_adam(&mut self, grad: &mut [f64]) {
        if self.config.grad_clip > 0.0 {
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > self.config.grad_clip {
                let s = self.config.grad_clip / norm;
                grad.iter_mut().for_each(|g| *g *= s);
            }
        }
        self.t += 1;
        let lr = self.config.learning_rate;
        let bc1 = 1.0 - ADAM_B1.powi(self.t as i32);
        let bc2 = 1.0 - ADAM_B2.powi(self.t as i32);
        let params = self.model.params_mut();
        for k in 0..params.len() {
            let g = grad[k];
            self.m[k] = ADAM_B1 * self.m[k] + (1.0 - ADAM_B1) * g;
            self.v[k] = ADAM_B2 * self.v[k] + (1.0 - ADAM_B2) * g * g;
            let mhat = self.m[k] / bc1;
            let vhat = self.v[k] / bc2;
            params[k] -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
        }
    }

    /// Shuffles `seqs`, trains on consecutive batches and advances the epoch
    /// counter. Fails if any parameter becomes non-finite.
    pub fn train_epoch<R: Rng + ?Sized>(&mut self, seqs: &[PrefixSequence], rng: &mut R) -> Result<EpochStats> {
        if seqs.is_empty() {
            return Err(Error::EmptyInput("training epoch"));
        }
        let mut order: Vec<usize> = (0..seqs.len()).collect();
        order.shuffle(rng);
        let beta = self.beta();
        let (mut recon, mut kl, mut steps) = (0.0, 0.0, 0);
        for idx in order.chunks(self.config.batch_size) {
            let batch: Vec<PrefixSequence> = idx.iter().map(|&i| seqs[i].clone()).collect();
            let l = self.train_step(&batch, rng)?;
            recon += l.recon;
            kl += l.kl;
            steps += 1;
        }
        if !self.model.all_finite() {
            return Err(Error::NonFiniteLoss {
                recon: f64::NAN,
                kl: f64::NAN,
            });
        }
        let stats = EpochStats {
            epoch: self.epochs_done,
            steps,
            recon: recon / steps as f64,
            kl: kl / steps as f64,
            beta,
        };
        self.epochs_done += 1;
        Ok(stats)
    }
}

/// `z = mu + exp(logvar / 2) * eps` with standard normal `eps`.
pub fn reparameterize<R: Rng + ?Sized>(mu: &[f64], logvar: &[f64], rng: &mut R) -> Vec<f64> {
    mu.iter()
        .zip(logvar)
        .map(|(m, lv)| {
            let e: f64 = StandardNormal.sample(rng);
            m + (0.5 * lv).exp() * e
        })
        .collect()
}

/// Trains on freshly generated random valid sequences for
/// `pretrain_epochs` epochs. Constant slots are canonicalised so the model
/// learns one spelling per structure.
pub fn pretrain<R: Rng + ?Sized>(trainer: &mut Trainer, rng: &mut R) -> Result<Vec<EpochStats>> {
    let grammar = trainer.model().vocab().grammar().clone();
    let n = trainer.config().pretrain_samples_per_epoch;
    let max_len = trainer.config().pretrain_max_len;
    let mut stats = Vec::with_capacity(trainer.config().pretrain_epochs);
    for _ in 0..trainer.config().pretrain_epochs {
        let seqs: Vec<PrefixSequence> = (0..n)
            .map(|_| random_valid_sequence(rng, max_len, &grammar).canonical())
            .collect();
        stats.push(trainer.train_epoch(&seqs, rng)?);
    }
    Ok(stats)
}

/// Trains `epochs` epochs on the bank contents, repeating them when the
/// bank is smaller than a batch.
pub fn finetune_on_bank<R: Rng + ?Sized>(
    trainer: &mut Trainer,
    bank: &[PrefixSequence],
    epochs: usize,
    rng: &mut R,
) -> Result<Vec<EpochStats>> {
    if bank.is_empty() {
        return Err(Error::EmptyInput("bank for fine-tuning"));
    }
    let target = trainer.config().batch_size.max(bank.len());
    let data: Vec<PrefixSequence> = bank.iter().cycle().take(target).cloned().collect();
    (0..epochs).map(|_| trainer.train_epoch(&data, rng)).collect()
}
