use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Vocabulary;
use crate::error::{Error, Result};
use crate::expr::{Grammar, Token, MAX_SEQ_LEN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelDims {
    pub embed: usize,
    pub hidden: usize,
    pub latent: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            embed: 32,
            hidden: 64,
            latent: 128,
        }
    }
}

impl ModelDims {
    pub fn validate(&self) -> Result<(), String> {
        if self.embed == 0 || self.hidden == 0 || self.latent == 0 {
            return Err("model dimensions must be positive".into());
        }
        Ok(())
    }
}

/// Offsets of every parameter tensor inside the flat parameter vector.
/// Matrices are row-major; LSTM gate blocks are ordered input, forget,
/// cell, output.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub vocab: usize,
    pub embed: usize,
    pub hidden: usize,
    pub latent: usize,
    pub emb: Range<usize>,
    pub enc_wx: Range<usize>,
    pub enc_wh: Range<usize>,
    pub enc_b: Range<usize>,
    pub mu_w: Range<usize>,
    pub mu_b: Range<usize>,
    pub lv_w: Range<usize>,
    pub lv_b: Range<usize>,
    pub zh_w: Range<usize>,
    pub zh_b: Range<usize>,
    pub dec_wx: Range<usize>,
    pub dec_wz: Range<usize>,
    pub dec_wh: Range<usize>,
    pub dec_b: Range<usize>,
    pub out_w: Range<usize>,
    pub out_b: Range<usize>,
    pub total: usize,
}

impl Layout {
    pub fn new(vocab: usize, dims: ModelDims) -> Self {
        let (e, h, l) = (dims.embed, dims.hidden, dims.latent);
        let g = 4 * h;
        let mut at = 0;
        let mut take = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let emb = take(vocab * e);
        let enc_wx = take(g * e);
        let enc_wh = take(g * h);
        let enc_b = take(g);
        let mu_w = take(l * h);
        let mu_b = take(l);
        let lv_w = take(l * h);
        let lv_b = take(l);
        let zh_w = take(h * l);
        let zh_b = take(h);
        let dec_wx = take(g * e);
        let dec_wz = take(g * l);
        let dec_wh = take(g * h);
        let dec_b = take(g);
        let out_w = take(vocab * h);
        let out_b = take(vocab);
        Layout {
            vocab,
            embed: e,
            hidden: h,
            latent: l,
            emb,
            enc_wx,
            enc_wh,
            enc_b,
            mu_w,
            mu_b,
            lv_w,
            lv_b,
            zh_w,
            zh_b,
            dec_wx,
            dec_wz,
            dec_wh,
            dec_b,
            out_w,
            out_b,
            total: at,
        }
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            embed: self.embed,
            hidden: self.hidden,
            latent: self.latent,
        }
    }
}

/// VAE parameters plus the vocabulary they were trained for.
#[derive(Clone, Debug, PartialEq)]
pub struct SeqVaeModel {
    vocab: Vocabulary,
    layout: Layout,
    params: Vec<f64>,
}

impl SeqVaeModel {
    /// All-zero parameters.
    pub fn zeros(grammar: Grammar, dims: ModelDims) -> Self {
        let vocab = Vocabulary::new(grammar);
        let layout = Layout::new(vocab.len(), dims);
        let params = vec![0.0; layout.total];
        SeqVaeModel { vocab, layout, params }
    }

    /// Uniform `±1/sqrt(fan_in)` initialisation with forget-gate bias 1.
    pub fn random<R: Rng + ?Sized>(grammar: Grammar, dims: ModelDims, rng: &mut R) -> Self {
        let mut m = SeqVaeModel::zeros(grammar, dims);
        let l = m.layout.clone();
        let h = l.hidden;
        let mut fill = |r: &Range<usize>, bound: f64, p: &mut [f64]| {
            for v in &mut p[r.clone()] {
                *v = rng.random_range(-bound..bound);
            }
        };
        let p = &mut m.params;
        let hb = 1.0 / (h as f64).sqrt();
        fill(&l.emb, 0.5, p);
        for r in [
            &l.enc_wx, &l.enc_wh, &l.enc_b, &l.dec_wx, &l.dec_wz, &l.dec_wh, &l.dec_b,
        ] {
            fill(r, hb, p);
        }
        for r in [&l.mu_w, &l.lv_w, &l.out_w] {
            fill(r, hb, p);
        }
        let lb = 1.0 / (l.latent as f64).sqrt();
        fill(&l.zh_w, lb, p);
        for b in [&l.enc_b, &l.dec_b] {
            for v in &mut p[b.start + h..b.start + 2 * h] {
                *v = 1.0;
            }
        }
        m
    }

    pub fn from_parts(grammar: Grammar, dims: ModelDims, params: Vec<f64>) -> Result<Self> {
        let m = SeqVaeModel::zeros(grammar, dims);
        if params.len() != m.layout.total {
            return Err(Error::Checkpoint(format!(
                "parameter count {} does not match shapes ({})",
                params.len(),
                m.layout.total
            )));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(SeqVaeModel { params, ..m })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn dims(&self) -> ModelDims {
        self.layout.dims()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|v| v.is_finite())
    }

    /// Posterior mean and log-variance of a token sequence.
    pub fn encode(&self, tokens: &[Token]) -> Result<(Vec<f64>, Vec<f64>)> {
        let ids = self.token_ids(tokens)?;
        let enc = encoder_forward(&self.layout, &self.params, &ids);
        Ok((enc.mu, enc.logvar))
    }

    /// Single-example objective `recon + beta * kl` for a fixed latent
    /// noise draw `eps`.
    pub fn loss(&self, tokens: &[Token], eps: &[f64], beta: f64, teacher_forcing: bool) -> Result<f64> {
        let ids = self.token_ids(tokens)?;
        self.check_eps(eps)?;
        let s = loss_and_grad(&self.layout, &self.params, &ids, eps, beta, teacher_forcing, None);
        Ok(s.recon + beta * s.kl)
    }

    /// [`SeqVaeModel::loss`] together with its gradient over all parameters.
    pub fn loss_gradient(
        &self,
        tokens: &[Token],
        eps: &[f64],
        beta: f64,
        teacher_forcing: bool,
    ) -> Result<(f64, Vec<f64>)> {
        let ids = self.token_ids(tokens)?;
        self.check_eps(eps)?;
        let mut g = vec![0.0; self.layout.total];
        let s = loss_and_grad(
            &self.layout,
            &self.params,
            &ids,
            eps,
            beta,
            teacher_forcing,
            Some((&mut g, 1.0)),
        );
        Ok((s.recon + beta * s.kl, g))
    }

    fn check_eps(&self, eps: &[f64]) -> Result<()> {
        if eps.len() != self.layout.latent {
            return Err(Error::LengthMismatch {
                left: eps.len(),
                right: self.layout.latent,
            });
        }
        Ok(())
    }

    pub(crate) fn token_ids(&self, tokens: &[Token]) -> Result<Vec<usize>> {
        if tokens.is_empty() {
            return Err(Error::EmptyInput("sequence to encode"));
        }
        if tokens.len() > MAX_SEQ_LEN {
            return Err(Error::InvalidConfig(format!(
                "sequence of {} tokens exceeds the cap of {MAX_SEQ_LEN}",
                tokens.len()
            )));
        }
        self.vocab
            .encode(tokens)
            .ok_or_else(|| Error::InvalidConfig("sequence uses a token outside the model vocabulary".into()))
    }
}

// ---- dense helpers -------------------------------------------------------

/// out += W x, W is rows x cols.
#[inline]
pub(crate) fn matvec_acc(w: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.len(), out.len() * cols);
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        let mut s = 0.0;
        for (a, b) in row.iter().zip(x) {
            s += a * b;
        }
        *o += s;
    }
}

/// out += W^T v, W is rows x cols.
#[inline]
pub(crate) fn matvec_t_acc(w: &[f64], cols: usize, v: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.len(), v.len() * cols);
    for (row, &vi) in w.chunks_exact(cols).zip(v) {
        if vi == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            *o += a * vi;
        }
    }
}

/// G += a b^T.
#[inline]
pub(crate) fn outer_acc(g: &mut [f64], a: &[f64], b: &[f64]) {
    let cols = b.len();
    for (row, &ai) in g.chunks_exact_mut(cols).zip(a) {
        if ai == 0.0 {
            continue;
        }
        for (gv, bv) in row.iter_mut().zip(b) {
            *gv += ai * bv;
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Applies gate nonlinearities in place to the 4H pre-activations and
/// advances the cell. Writes `c`, `tanh(c)` and `h`.
#[inline]
pub(crate) fn lstm_cell(gates: &mut [f64], c_prev: &[f64], c: &mut [f64], tc: &mut [f64], h: &mut [f64]) {
    let n = c.len();
    for k in 0..n {
        let i = sigmoid(gates[k]);
        let f = sigmoid(gates[n + k]);
        let g = gates[2 * n + k].tanh();
        let o = sigmoid(gates[3 * n + k]);
        gates[k] = i;
        gates[n + k] = f;
        gates[2 * n + k] = g;
        gates[3 * n + k] = o;
        c[k] = f * c_prev[k] + i * g;
        tc[k] = c[k].tanh();
        h[k] = o * tc[k];
    }
}

/// Backward through one cell. `dh`/`dc` are the gradients w.r.t. this
/// step's outputs; on return `dc` holds the gradient w.r.t. `c_prev` and
/// `da` the gradient w.r.t. the gate pre-activations.
#[inline]
fn lstm_cell_backward(gates: &[f64], c_prev: &[f64], tc: &[f64], dh: &[f64], dc: &mut [f64], da: &mut [f64]) {
    let n = dc.len();
    for k in 0..n {
        let (i, f, g, o) = (gates[k], gates[n + k], gates[2 * n + k], gates[3 * n + k]);
        let d_o = dh[k] * tc[k];
        let dct = dc[k] + dh[k] * o * (1.0 - tc[k] * tc[k]);
        da[k] = dct * g * i * (1.0 - i);
        da[n + k] = dct * c_prev[k] * f * (1.0 - f);
        da[2 * n + k] = dct * i * (1.0 - g * g);
        da[3 * n + k] = d_o * o * (1.0 - o);
        dc[k] = dct * f;
    }
}

// ---- encoder -------------------------------------------------------------

pub(crate) struct EncoderTrace {
    /// h_0..h_n, each `hidden` long (h_0 = 0).
    hs: Vec<f64>,
    cs: Vec<f64>,
    gates: Vec<f64>,
    tcs: Vec<f64>,
    pub mu: Vec<f64>,
    pub logvar: Vec<f64>,
}

pub(crate) fn encoder_forward(l: &Layout, p: &[f64], ids: &[usize]) -> EncoderTrace {
    let (e, h) = (l.embed, l.hidden);
    let g4 = 4 * h;
    let n = ids.len();
    let mut hs = vec![0.0; (n + 1) * h];
    let mut cs = vec![0.0; (n + 1) * h];
    let mut gates = vec![0.0; n * g4];
    let mut tcs = vec![0.0; n * h];
    let emb = &p[l.emb.clone()];
    for (t, &id) in ids.iter().enumerate() {
        let a = &mut gates[t * g4..(t + 1) * g4];
        a.copy_from_slice(&p[l.enc_b.clone()]);
        matvec_acc(&p[l.enc_wx.clone()], e, &emb[id * e..(id + 1) * e], a);
        matvec_acc(&p[l.enc_wh.clone()], h, &hs[t * h..(t + 1) * h], a);
        let (c_lo, c_hi) = cs.split_at_mut((t + 1) * h);
        let (_, h_hi) = hs.split_at_mut((t + 1) * h);
        lstm_cell(
            a,
            &c_lo[t * h..],
            &mut c_hi[..h],
            &mut tcs[t * h..(t + 1) * h],
            &mut h_hi[..h],
        );
    }
    let last = &hs[n * h..(n + 1) * h];
    let mut mu = p[l.mu_b.clone()].to_vec();
    matvec_acc(&p[l.mu_w.clone()], h, last, &mut mu);
    let mut logvar = p[l.lv_b.clone()].to_vec();
    matvec_acc(&p[l.lv_w.clone()], h, last, &mut logvar);
    EncoderTrace {
        hs,
        cs,
        gates,
        tcs,
        mu,
        logvar,
    }
}

/// Initial decoder hidden state `tanh(W z + b)` and the constant gate
/// contribution `W_z z + b` of the latent code.
pub(crate) fn decoder_latent_terms(l: &Layout, p: &[f64], z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut h0 = p[l.zh_b.clone()].to_vec();
    matvec_acc(&p[l.zh_w.clone()], l.latent, z, &mut h0);
    for v in &mut h0 {
        *v = v.tanh();
    }
    let mut zp = p[l.dec_b.clone()].to_vec();
    matvec_acc(&p[l.dec_wz.clone()], l.latent, z, &mut zp);
    (h0, zp)
}

/// Per-sequence loss terms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct SeqLoss {
    pub recon: f64,
    pub kl: f64,
}

/// Forward pass of one training example and, if `grad` is given, its
/// gradient scaled by `scale` accumulated into `grad`.
///
/// `ids` are vocabulary ids of the formula tokens (no control symbols).
/// Loss is `recon + beta * kl` where `recon` is the summed token
/// cross-entropy of the decoder reconstructing `ids` followed by END.
pub(crate) fn loss_and_grad(
    l: &Layout,
    p: &[f64],
    ids: &[usize],
    eps: &[f64],
    beta: f64,
    teacher_forcing: bool,
    grad: Option<(&mut [f64], f64)>,
) -> SeqLoss {
    let (e, h, lat, v) = (l.embed, l.hidden, l.latent, l.vocab);
    let g4 = 4 * h;
    let n = ids.len();
    let enc = encoder_forward(l, p, ids);

    let std: Vec<f64> = enc.logvar.iter().map(|lv| (0.5 * lv).exp()).collect();
    let z: Vec<f64> = (0..lat).map(|k| enc.mu[k] + std[k] * eps[k]).collect();
    let kl = -0.5
        * (0..lat)
            .map(|k| 1.0 + enc.logvar[k] - enc.mu[k] * enc.mu[k] - std[k] * std[k])
            .sum::<f64>();

    // decoder forward
    let steps = n + 1;
    let inputs: Vec<usize> = (0..steps)
        .map(|t| match (t, teacher_forcing) {
            (0, _) => Vocabulary::START,
            (_, true) => ids[t - 1],
            (_, false) => Vocabulary::PAD,
        })
        .collect();
    let targets: Vec<usize> = (0..steps)
        .map(|t| if t < n { ids[t] } else { Vocabulary::END })
        .collect();

    let (h0, zp) = decoder_latent_terms(l, p, &z);
    let mut hs = vec![0.0; (steps + 1) * h];
    hs[..h].copy_from_slice(&h0);
    let mut cs = vec![0.0; (steps + 1) * h];
    let mut gates = vec![0.0; steps * g4];
    let mut tcs = vec![0.0; steps * h];
    let mut probs = vec![0.0; steps * v];
    let emb = &p[l.emb.clone()];
    let mut recon = 0.0;
    for t in 0..steps {
        let a = &mut gates[t * g4..(t + 1) * g4];
        a.copy_from_slice(&zp);
        let x = &emb[inputs[t] * e..(inputs[t] + 1) * e];
        matvec_acc(&p[l.dec_wx.clone()], e, x, a);
        matvec_acc(&p[l.dec_wh.clone()], h, &hs[t * h..(t + 1) * h], a);
        let (c_lo, c_hi) = cs.split_at_mut((t + 1) * h);
        let (_, h_hi) = hs.split_at_mut((t + 1) * h);
        lstm_cell(
            a,
            &c_lo[t * h..],
            &mut c_hi[..h],
            &mut tcs[t * h..(t + 1) * h],
            &mut h_hi[..h],
        );
        let pr = &mut probs[t * v..(t + 1) * v];
        pr.copy_from_slice(&p[l.out_b.clone()]);
        matvec_acc(&p[l.out_w.clone()], h, &h_hi[..h], pr);
        let max = pr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for q in pr.iter_mut() {
            *q = (*q - max).exp();
            sum += *q;
        }
        for q in pr.iter_mut() {
            *q /= sum;
        }
        recon -= pr[targets[t]].max(f64::MIN_POSITIVE).ln();
    }

    let Some((g, scale)) = grad else {
        return SeqLoss { recon, kl };
    };

    // decoder backward
    let mut dh_next = vec![0.0; h];
    let mut dc = vec![0.0; h];
    let mut dh = vec![0.0; h];
    let mut da = vec![0.0; g4];
    let mut dzp = vec![0.0; g4];
    let mut dlogits = vec![0.0; v];
    for t in (0..steps).rev() {
        let h_t1 = &hs[(t + 1) * h..(t + 2) * h];
        for k in 0..v {
            dlogits[k] = scale * probs[t * v + k];
        }
        dlogits[targets[t]] -= scale;
        for (gb, d) in g[l.out_b.clone()].iter_mut().zip(&dlogits) {
            *gb += d;
        }
        outer_acc(&mut g[l.out_w.clone()], &dlogits, h_t1);
        dh.copy_from_slice(&dh_next);
        matvec_t_acc(&p[l.out_w.clone()], h, &dlogits, &mut dh);

        lstm_cell_backward(
            &gates[t * g4..(t + 1) * g4],
            &cs[t * h..(t + 1) * h],
            &tcs[t * h..(t + 1) * h],
            &dh,
            &mut dc,
            &mut da,
        );
        for (s, d) in dzp.iter_mut().zip(&da) {
            *s += d;
        }
        let id = inputs[t];
        outer_acc(&mut g[l.dec_wx.clone()], &da, &emb[id * e..(id + 1) * e]);
        matvec_t_acc(
            &p[l.dec_wx.clone()],
            e,
            &da,
            &mut g[l.emb.start + id * e..l.emb.start + (id + 1) * e],
        );
        outer_acc(&mut g[l.dec_wh.clone()], &da, &hs[t * h..(t + 1) * h]);
        dh_next.iter_mut().for_each(|x| *x = 0.0);
        matvec_t_acc(&p[l.dec_wh.clone()], h, &da, &mut dh_next);
    }
    for (gb, d) in g[l.dec_b.clone()].iter_mut().zip(&dzp) {
        *gb += d;
    }
    outer_acc(&mut g[l.dec_wz.clone()], &dzp, &z);
    let mut dz = vec![0.0; lat];
    matvec_t_acc(&p[l.dec_wz.clone()], lat, &dzp, &mut dz);
    // through h0 = tanh(W z + b)
    let da0: Vec<f64> = (0..h).map(|k| dh_next[k] * (1.0 - h0[k] * h0[k])).collect();
    for (gb, d) in g[l.zh_b.clone()].iter_mut().zip(&da0) {
        *gb += d;
    }
    outer_acc(&mut g[l.zh_w.clone()], &da0, &z);
    matvec_t_acc(&p[l.zh_w.clone()], lat, &da0, &mut dz);

    // reparameterisation and KL
    let kb = scale * beta;
    let dmu: Vec<f64> = (0..lat).map(|k| dz[k] + kb * enc.mu[k]).collect();
    let dlv: Vec<f64> = (0..lat)
        .map(|k| dz[k] * eps[k] * 0.5 * std[k] + kb * 0.5 * (std[k] * std[k] - 1.0))
        .collect();

    // encoder backward
    let h_n = &enc.hs[n * h..(n + 1) * h];
    for (gb, d) in g[l.mu_b.clone()].iter_mut().zip(&dmu) {
        *gb += d;
    }
    outer_acc(&mut g[l.mu_w.clone()], &dmu, h_n);
    for (gb, d) in g[l.lv_b.clone()].iter_mut().zip(&dlv) {
        *gb += d;
    }
    outer_acc(&mut g[l.lv_w.clone()], &dlv, h_n);
    dh.iter_mut().for_each(|x| *x = 0.0);
    matvec_t_acc(&p[l.mu_w.clone()], h, &dmu, &mut dh);
    matvec_t_acc(&p[l.lv_w.clone()], h, &dlv, &mut dh);
    dc.iter_mut().for_each(|x| *x = 0.0);
    for t in (0..n).rev() {
        lstm_cell_backward(
            &enc.gates[t * g4..(t + 1) * g4],
            &enc.cs[t * h..(t + 1) * h],
            &enc.tcs[t * h..(t + 1) * h],
            &dh,
            &mut dc,
            &mut da,
        );
        for (gb, d) in g[l.enc_b.clone()].iter_mut().zip(&da) {
            *gb += d;
        }
        let id = ids[t];
        outer_acc(&mut g[l.enc_wx.clone()], &da, &emb[id * e..(id + 1) * e]);
        matvec_t_acc(
            &p[l.enc_wx.clone()],
            e,
            &da,
            &mut g[l.emb.start + id * e..l.emb.start + (id + 1) * e],
        );
        outer_acc(&mut g[l.enc_wh.clone()], &da, &enc.hs[t * h..(t + 1) * h]);
        dh.iter_mut().for_each(|x| *x = 0.0);
        matvec_t_acc(&p[l.enc_wh.clone()], h, &da, &mut dh);
    }

    SeqLoss { recon, kl }
}
