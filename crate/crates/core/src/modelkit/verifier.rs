//! Logistic verifier over hashed cross features of (context, statement).

use super::vocab::{Context, EOS, MASK, UNK};
use crate::error::{Error, Result};
use crate::lexicon::IndicatorClass;

pub const DEFAULT_DIM: usize = 4096;
const DENSE: usize = 4;
const HASH_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

const PAIR_DOMAIN: u64 = 1;
const BIGRAM_DOMAIN: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifierParams {
    pub weights: Vec<f64>,
    pub bias: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn is_content(id: u32) -> bool {
    !matches!(id, UNK | EOS | MASK)
}

/// Multiply-shift hash of a (domain, a, b) key into `[DENSE, dim)`.
fn bucket(domain: u64, a: u32, b: u32, dim: usize) -> usize {
    let key = (domain << 56) ^ ((a as u64) << 28) ^ b as u64;
    let h = key.wrapping_mul(HASH_SEED | 1) >> 32;
    DENSE + (h as usize) % (dim - DENSE)
}

/// Sparse feature vector `h(c, s)`; indices may repeat.
///
/// Slots 0..4 hold statement/context token overlap, statement length /10
/// and two indicator-class flags. The remaining slots hash
/// (context token, statement token) pairs and statement bigrams.
pub fn features(context: &Context, statement: &[u32], dim: usize) -> Vec<(usize, f64)> {
    let bag: Vec<u32> = context.bag().into_iter().filter(|&u| is_content(u)).collect();
    let mut stmt: Vec<u32> = statement.iter().copied().filter(|&w| is_content(w)).collect();
    let words = stmt.len();
    stmt.sort_unstable();
    stmt.dedup();

    let mut out = Vec::with_capacity(DENSE + bag.len() * stmt.len() + statement.len() + 1);
    let overlap = stmt.iter().filter(|w| bag.binary_search(w).is_ok()).count();
    out.push((0, overlap as f64 / stmt.len().max(1) as f64));
    out.push((1, words as f64 / 10.0));
    out.push((2, (context.class == Some(IndicatorClass::Conclusion)) as u8 as f64));
    out.push((3, (context.class == Some(IndicatorClass::Premise)) as u8 as f64));

    if !bag.is_empty() && !stmt.is_empty() {
        let value = 1.0 / ((bag.len() * stmt.len()) as f64).sqrt();
        for &u in &bag {
            for &w in &stmt {
                out.push((bucket(PAIR_DOMAIN, u, w, dim), value));
            }
        }
    }
    let value = 1.0 / ((statement.len() + 1) as f64).sqrt();
    let mut prev = EOS;
    for &w in statement {
        out.push((bucket(BIGRAM_DOMAIN, prev, w, dim), value));
        prev = w;
    }
    out
}

impl VerifierParams {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > DENSE, "verifier dimension must exceed {DENSE}");
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn from_parts(weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.len() <= DENSE {
            return Err(Error::Invalid(format!(
                "verifier dimension must exceed {DENSE}"
            )));
        }
        Ok(Self { weights, bias })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + 1
    }

    fn logit(&self, feats: &[(usize, f64)]) -> f64 {
        self.bias + feats.iter().map(|&(i, x)| self.weights[i] * x).sum::<f64>()
    }

    /// `sigmoid(phi . h(c, s) + bias)`.
    pub fn verify(&self, context: &Context, statement: &[u32]) -> f64 {
        sigmoid(self.logit(&features(context, statement, self.dim())))
    }

    /// Binary cross-entropy for one pair; adds `scale * dL/dphi` to `grad`.
    pub fn accumulate_loss_grad(
        &self,
        context: &Context,
        statement: &[u32],
        label: f64,
        scale: f64,
        grad: &mut VerifierParams,
    ) -> f64 {
        let feats = features(context, statement, self.dim());
        let z = self.logit(&feats);
        let v = sigmoid(z);
        let r = v - label;
        for &(i, x) in &feats {
            grad.weights[i] += scale * r * x;
        }
        grad.bias += scale * r;
        bce_from_logit(z, label)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        v.push(self.bias);
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let d = self.weights.len();
        self.weights.copy_from_slice(&flat[..d]);
        self.bias = flat[d];
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(std::iter::once(&mut self.bias))
    }

    /// Order-sensitive checksum of the exact parameter bits.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in self.weights.iter().chain(std::iter::once(&self.bias)) {
            for b in x.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// `-y log sigmoid(z) - (1-y) log(1 - sigmoid(z))`, stable in `z`.
pub fn bce_from_logit(z: f64, y: f64) -> f64 {
    // log(1 + e^z) - y z
    let softplus = if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    };
    softplus - y * z
}
