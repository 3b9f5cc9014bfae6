use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::network::{decoder_latent_terms, lstm_cell, matvec_acc};
use super::{SeqVaeModel, Symbol, Vocabulary};
use crate::expr::{PrefixSequence, Token};
use crate::parallel;
use crate::rng::substream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decoding {
    /// Argmax at every step.
    Greedy,
    /// Softmax sampling of `logits / temperature`.
    Sample { temperature: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DecodeStatus {
    Valid,
    /// END emitted while operands were still open.
    EarlyEnd,
    /// PAD or START emitted.
    ControlSymbol,
    /// Length cap reached with operands still open.
    LengthCap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOutcome {
    pub tokens: Vec<Token>,
    pub status: DecodeStatus,
    /// Present iff `status == Valid`.
    pub sequence: Option<PrefixSequence>,
}

/// Per-snapshot precomputation: the input-embedding contribution to the
/// decoder gates for every vocabulary id.
pub struct DecoderCache<'a> {
    model: &'a SeqVaeModel,
    emb_proj: Vec<f64>,
    arities: Vec<Option<usize>>,
}

impl<'a> DecoderCache<'a> {
    pub fn new(model: &'a SeqVaeModel) -> Self {
        let l = model.layout();
        let p = model.params();
        let g4 = 4 * l.hidden;
        let mut emb_proj = vec![0.0; l.vocab * g4];
        for id in 0..l.vocab {
            let x = &p[l.emb.start + id * l.embed..l.emb.start + (id + 1) * l.embed];
            matvec_acc(&p[l.dec_wx.clone()], l.embed, x, &mut emb_proj[id * g4..(id + 1) * g4]);
        }
        DecoderCache {
            model,
            emb_proj,
            arities: model.vocab().arities(),
        }
    }

    /// Autoregressive decoding conditioned on `z`. Stops at END, at arity
    /// closure, or after `max_len` formula tokens.
    pub fn decode<R: Rng + ?Sized>(&self, z: &[f64], mode: Decoding, rng: &mut R, max_len: usize) -> DecodeOutcome {
        let l = self.model.layout();
        let p = self.model.params();
        let (h_dim, v) = (l.hidden, l.vocab);
        let g4 = 4 * h_dim;
        let (mut h, zp) = decoder_latent_terms(l, p, z);
        let mut c = vec![0.0; h_dim];
        let mut c_next = vec![0.0; h_dim];
        let mut tc = vec![0.0; h_dim];
        let mut gates = vec![0.0; g4];
        let mut logits = vec![0.0; v];
        let mut prev = Vocabulary::START;
        let mut open = 1usize;
        let mut tokens = Vec::new();
        let status = loop {
            if tokens.len() >= max_len {
                break DecodeStatus::LengthCap;
            }
            for k in 0..g4 {
                gates[k] = zp[k] + self.emb_proj[prev * g4 + k];
            }
            matvec_acc(&p[l.dec_wh.clone()], h_dim, &h, &mut gates);
            lstm_cell(&mut gates, &c, &mut c_next, &mut tc, &mut h);
            std::mem::swap(&mut c, &mut c_next);
            logits.copy_from_slice(&p[l.out_b.clone()]);
            matvec_acc(&p[l.out_w.clone()], h_dim, &h, &mut logits);
            let id = choose(&logits, mode, rng);
            match self.model.vocab().symbol(id) {
                Some(Symbol::End) => break DecodeStatus::EarlyEnd,
                Some(Symbol::Token(t)) => {
                    tokens.push(t);
                    open = open + self.arities[id].expect("token id") - 1;
                    if open == 0 {
                        break DecodeStatus::Valid;
                    }
                }
                _ => break DecodeStatus::ControlSymbol,
            }
            prev = id;
        };
        let sequence = match status {
            DecodeStatus::Valid => PrefixSequence::new(tokens.clone()).ok(),
            _ => None,
        };
        let status = if status == DecodeStatus::Valid && sequence.is_none() {
            DecodeStatus::LengthCap
        } else {
            status
        };
        DecodeOutcome {
            tokens,
            status,
            sequence,
        }
    }
}

fn choose<R: Rng + ?Sized>(logits: &[f64], mode: Decoding, rng: &mut R) -> usize {
    match mode {
        Decoding::Greedy => {
            let mut best = 0;
            for (i, &v) in logits.iter().enumerate() {
                if v > logits[best] {
                    best = i;
                }
            }
            best
        }
        Decoding::Sample { temperature } => {
            let t = temperature.max(1e-12);
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = logits.iter().map(|&v| ((v - max) / t).exp()).collect();
            let total: f64 = w.iter().sum();
            let mut u = rng.random::<f64>() * total;
            for (i, wi) in w.iter().enumerate() {
                if u < *wi {
                    return i;
                }
                u -= wi;
            }
            w.len() - 1
        }
    }
}

/// Decodes one latent code. Builds a fresh [`DecoderCache`]; use the cache
/// directly when decoding many codes from one snapshot.
pub fn decode<R: Rng + ?Sized>(
    model: &SeqVaeModel,
    z: &[f64],
    mode: Decoding,
    rng: &mut R,
    max_len: usize,
) -> DecodeOutcome {
    DecoderCache::new(model).decode(z, mode, rng, max_len)
}

/// Draws `n` codes from the standard normal prior and decodes them. Sample
/// `i` uses its own stream derived from `(seed, tag, i)`.
pub fn sample_prior(
    model: &SeqVaeModel,
    n: usize,
    mode: Decoding,
    max_len: usize,
    seed: u64,
    tag: u64,
) -> Vec<DecodeOutcome> {
    let cache = DecoderCache::new(model);
    let lat = model.layout().latent;
    parallel::map_range(n, |i| {
        let mut rng = substream(seed, tag, i as u64);
        let z: Vec<f64> = (0..lat).map(|_| StandardNormal.sample(&mut rng)).collect();
        cache.decode(&z, mode, &mut rng, max_len)
    })
}

/// Fraction of prior samples that decode to a valid sequence.
pub fn validity_rate(model: &SeqVaeModel, n: usize, mode: Decoding, seed: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let outs = sample_prior(model, n, mode, crate::expr::MAX_SEQ_LEN, seed, 0x7661_6c69);
    outs.iter().filter(|o| o.status == DecodeStatus::Valid).count() as f64 / n as f64
}
