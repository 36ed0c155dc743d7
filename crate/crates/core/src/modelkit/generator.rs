//! Conditional log-linear bigram-plus-context-bag generator.
//!
//! `p(w_t | w_{t-1}, c) = softmax_w(bigram[w_{t-1}, w] + sum_{u in bag(c)} ctx[u, w])`
//! with `w_0 = EOS`. `bag(c)` is the set of distinct context ids.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::vocab::{Context, EOS};
use super::SequenceModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    vocab_size: usize,
    /// Row-major `[prev][next]`.
    pub bigram: Vec<f64>,
    /// Row-major `[context token][next]`.
    pub ctx: Vec<f64>,
}

pub(crate) fn log_softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    for v in z.iter_mut() {
        *v -= lse;
    }
}

impl GeneratorParams {
    pub fn zeros(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            bigram: vec![0.0; vocab_size * vocab_size],
            ctx: vec![0.0; vocab_size * vocab_size],
        }
    }

    /// Entries drawn from `N(0, scale^2)`.
    pub fn random<R: Rng>(vocab_size: usize, scale: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, scale).expect("finite scale");
        let mut p = Self::zeros(vocab_size);
        for v in p.bigram.iter_mut().chain(p.ctx.iter_mut()) {
            *v = normal.sample(rng);
        }
        p
    }

    pub fn from_parts(vocab_size: usize, bigram: Vec<f64>, ctx: Vec<f64>) -> Result<Self> {
        let n = vocab_size * vocab_size;
        if bigram.len() != n || ctx.len() != n {
            return Err(Error::Invalid(format!(
                "generator arrays must have {n} entries for vocabulary size {vocab_size}"
            )));
        }
        Ok(Self {
            vocab_size,
            bigram,
            ctx,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn num_params(&self) -> usize {
        self.bigram.len() + self.ctx.len()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.bigram.clone();
        v.extend_from_slice(&self.ctx);
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let n = self.bigram.len();
        self.bigram.copy_from_slice(&flat[..n]);
        self.ctx.copy_from_slice(&flat[n..]);
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.bigram.iter().chain(self.ctx.iter())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.bigram.iter_mut().chain(self.ctx.iter_mut())
    }

    fn check_ids(&self, ids: &[u32]) -> Result<()> {
        match ids.iter().find(|&&i| i as usize >= self.vocab_size) {
            Some(bad) => Err(Error::Invalid(format!(
                "token id {bad} outside vocabulary of size {}",
                self.vocab_size
            ))),
            None => Ok(()),
        }
    }

    /// `sum_{u in bag(c)} ctx[u, :]`.
    pub fn context_logits(&self, context: &Context) -> Vec<f64> {
        let v = self.vocab_size;
        let mut out = vec![0.0; v];
        for u in context.bag() {
            let u = u as usize;
            if u >= v {
                continue;
            }
            for (o, w) in out.iter_mut().zip(&self.ctx[u * v..(u + 1) * v]) {
                *o += w;
            }
        }
        out
    }

    /// Log-probabilities of every next token after `prev`.
    pub fn next_log_probs_with(&self, ctx_logits: &[f64], prev: u32) -> Vec<f64> {
        let v = self.vocab_size;
        let row = &self.bigram[prev as usize * v..(prev as usize + 1) * v];
        let mut z: Vec<f64> = row.iter().zip(ctx_logits).map(|(a, b)| a + b).collect();
        log_softmax_in_place(&mut z);
        z
    }

    /// Per-token log-probabilities and their sum `l(s | c)`.
    pub fn gen_logprob(&self, context: &Context, statement: &[u32]) -> Result<(Vec<f64>, f64)> {
        if statement.is_empty() {
            return Err(Error::Invalid("empty statement".into()));
        }
        self.check_ids(statement)?;
        let ctx_logits = self.context_logits(context);
        let mut prev = EOS;
        let mut per_token = Vec::with_capacity(statement.len());
        for &w in statement {
            let lp = self.next_log_probs_with(&ctx_logits, prev);
            per_token.push(lp[w as usize]);
            prev = w;
        }
        let total = per_token.iter().sum();
        Ok((per_token, total))
    }

    /// Adds `scale * d l(s|c) / d theta` into `grad`; returns `l(s|c)`.
    pub fn accumulate_logprob_grad(
        &self,
        context: &Context,
        statement: &[u32],
        scale: f64,
        grad: &mut GeneratorParams,
    ) -> Result<f64> {
        if statement.is_empty() {
            return Err(Error::Invalid("empty statement".into()));
        }
        self.check_ids(statement)?;
        let v = self.vocab_size;
        let ctx_logits = self.context_logits(context);
        // d l / d logits, summed over positions, feeds every context row
        let mut ctx_residual = vec![0.0; v];
        let mut prev = EOS as usize;
        let mut total = 0.0;
        for &w in statement {
            let lp = self.next_log_probs_with(&ctx_logits, prev as u32);
            total += lp[w as usize];
            let row = &mut grad.bigram[prev * v..(prev + 1) * v];
            for (k, (g, l)) in row.iter_mut().zip(&lp).enumerate() {
                let r = (k == w as usize) as u8 as f64 - l.exp();
                *g += scale * r;
                ctx_residual[k] += r;
            }
            prev = w as usize;
        }
        for u in context.bag() {
            let u = u as usize;
            if u >= v {
                continue;
            }
            for (g, r) in grad.ctx[u * v..(u + 1) * v].iter_mut().zip(&ctx_residual) {
                *g += scale * r;
            }
        }
        Ok(total)
    }

    /// Greedy argmax decode, EOS-terminated or cut at `max_len`.
    pub fn greedy(&self, context: &Context, max_len: usize) -> Vec<u32> {
        let ctx_logits = self.context_logits(context);
        let mut out = Vec::new();
        let mut prev = EOS;
        while out.len() < max_len {
            let lp = self.next_log_probs_with(&ctx_logits, prev);
            let (best, _) = lp
                .iter()
                .enumerate()
                .fold((0usize, f64::NEG_INFINITY), |acc, (i, &x)| {
                    if x > acc.1 {
                        (i, x)
                    } else {
                        acc
                    }
                });
            out.push(best as u32);
            if best as u32 == EOS {
                break;
            }
            prev = best as u32;
        }
        out
    }
}

impl SequenceModel for GeneratorParams {
    type Cache = Vec<f64>;

    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn eos(&self) -> u32 {
        EOS
    }

    fn prepare(&self, context: &Context) -> Vec<f64> {
        self.context_logits(context)
    }

    fn next_log_probs(&self, cache: &Vec<f64>, prefix: &[u32]) -> Vec<f64> {
        self.next_log_probs_with(cache, prefix.last().copied().unwrap_or(EOS))
    }
}
