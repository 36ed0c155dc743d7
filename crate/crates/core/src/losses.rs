//! Training objectives with exact gradients for the reference models.

use serde::{Deserialize, Serialize};

use crate::candidates::CandidateSet;
use crate::error::{Error, Result};
use crate::modelkit::{Context, GeneratorParams, VerifierParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Temperature for the generator score distribution.
    pub tau: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 1.0,
            tau: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return Err(Error::Config("lambda1 and lambda2 must be non-negative".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config("tau must be positive".into()));
        }
        Ok(())
    }
}

/// Raw and normalized verifier/generator scores over one pseudo list.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorePair {
    pub v_raw: Vec<f64>,
    pub g_raw: Vec<f64>,
    pub v_dist: Vec<f64>,
    pub g_dist: Vec<f64>,
}

/// Value and gradient of the generator objective for one candidate set.
#[derive(Debug, Clone)]
pub struct GeneratorLoss {
    pub loss: f64,
    pub tf: f64,
    pub kl: f64,
    pub grad: GeneratorParams,
}

/// `-(1/T) sum_t log p(w_t | w_<t, c)`, averaged over all `T` tokens
/// including EOS.
pub fn teacher_forcing_loss(
    generator: &GeneratorParams,
    context: &Context,
    statement: &[u32],
) -> Result<(f64, GeneratorParams)> {
    let mut grad = GeneratorParams::zeros(generator.vocab_size());
    let loss = accumulate_tf(generator, context, statement, 1.0, &mut grad)?;
    Ok((loss, grad))
}

/// Adds `scale * dL_tf` into `grad`; returns `L_tf`.
pub fn accumulate_tf(
    generator: &GeneratorParams,
    context: &Context,
    statement: &[u32],
    scale: f64,
    grad: &mut GeneratorParams,
) -> Result<f64> {
    let t = statement.len() as f64;
    let l = generator.accumulate_logprob_grad(context, statement, -scale / t, grad)?;
    Ok(-l / t)
}

/// Binary cross-entropy of `verify(c, s)` against `y`.
pub fn verifier_loss(
    verifier: &VerifierParams,
    context: &Context,
    statement: &[u32],
    label: u8,
) -> (f64, VerifierParams) {
    let mut grad = VerifierParams::zeros(verifier.dim());
    let loss = verifier.accumulate_loss_grad(context, statement, label as f64, 1.0, &mut grad);
    (loss, grad)
}

pub fn v_score(verifier: &VerifierParams, context: &Context, pseudo: &[Vec<u32>]) -> Vec<f64> {
    pseudo.iter().map(|s| verifier.verify(context, s)).collect()
}

pub fn g_score(
    generator: &GeneratorParams,
    context: &Context,
    pseudo: &[Vec<u32>],
) -> Result<Vec<f64>> {
    pseudo
        .iter()
        .map(|s| generator.gen_logprob(context, s).map(|(_, l)| l))
        .collect()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.into_iter().map(|v| v / sum).collect()
}

/// Sum-normalizes `v_raw` (uniform when it sums to zero) and takes a
/// softmax of length-normalized `g_raw` at temperature `tau`.
pub fn normalize_scores(
    v_raw: &[f64],
    g_raw: &[f64],
    tau: f64,
    lengths: &[usize],
) -> Result<ScorePair> {
    let n = v_raw.len();
    if n == 0 || g_raw.len() != n || lengths.len() != n {
        return Err(Error::Invalid(format!(
            "score vectors must be non-empty and equal length (got {}, {}, {})",
            n,
            g_raw.len(),
            lengths.len()
        )));
    }
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::Invalid("tau must be positive".into()));
    }
    if lengths.contains(&0) {
        return Err(Error::Invalid("statement length must be positive".into()));
    }
    let total: f64 = v_raw.iter().sum();
    let v_dist = if total > 0.0 {
        v_raw.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / n as f64; n]
    };
    let a: Vec<f64> = g_raw
        .iter()
        .zip(lengths)
        .map(|(g, &len)| g / len as f64 / tau)
        .collect();
    Ok(ScorePair {
        v_raw: v_raw.to_vec(),
        g_raw: g_raw.to_vec(),
        v_dist,
        g_dist: softmax(&a),
    })
}

/// `sum_k p_k ln(p_k / q_k)` with `0 ln 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Invalid(format!(
            "distribution lengths differ ({} vs {})",
            p.len(),
            q.len()
        )));
    }
    let mut total = 0.0;
    for (k, (&pk, &qk)) in p.iter().zip(q).enumerate() {
        if pk == 0.0 {
            continue;
        }
        if qk.is_nan() || qk <= 0.0 {
            return Err(Error::Numeric(format!(
                "q[{k}] = {qk} is not positive where p[{k}] = {pk}"
            )));
        }
        total += pk * (pk / qk).ln();
    }
    Ok(total)
}

fn pseudo_ids(set: &CandidateSet) -> Vec<Vec<u32>> {
    set.pseudo.iter().map(|p| p.ids.clone()).collect()
}

/// `lambda1 * L_tf(c, s+) + lambda2 * KL(v_dist || g_dist)`.
///
/// `v_raw` comes from a frozen verifier. The KL gradient is
/// `sum_k (g_k - v_k) / (len_k tau) * d l_k`.
pub fn generator_loss(
    generator: &GeneratorParams,
    set: &CandidateSet,
    v_raw: &[f64],
    weights: &LossWeights,
) -> Result<GeneratorLoss> {
    if set.pseudo.is_empty() {
        return Err(Error::Invalid("candidate set has no pseudo-statements".into()));
    }
    let mut grad = GeneratorParams::zeros(generator.vocab_size());
    let tf = accumulate_tf(generator, &set.context, &set.gold, weights.lambda1, &mut grad)?;
    let pseudo = pseudo_ids(set);
    let lengths: Vec<usize> = pseudo.iter().map(Vec::len).collect();
    let g_raw = g_score(generator, &set.context, &pseudo)?;
    let pair = normalize_scores(v_raw, &g_raw, weights.tau, &lengths)?;
    let kl = kl_divergence(&pair.v_dist, &pair.g_dist)?;
    if weights.lambda2 != 0.0 {
        for (k, s) in pseudo.iter().enumerate() {
            let coef = (pair.g_dist[k] - pair.v_dist[k]) / (lengths[k] as f64 * weights.tau);
            generator.accumulate_logprob_grad(&set.context, s, weights.lambda2 * coef, &mut grad)?;
        }
    }
    Ok(GeneratorLoss {
        loss: weights.lambda1 * tf + weights.lambda2 * kl,
        tf,
        kl,
        grad,
    })
}

/// Compares the direct KL gradient `sum_k (g_k - v_k) d a_k` with the
/// softmax form `-sum_k v_k d ln g_k`; returns the max absolute deviation.
pub fn appf_gradient_identity_check(
    generator: &GeneratorParams,
    set: &CandidateSet,
    v_dist: &[f64],
    tau: f64,
) -> Result<f64> {
    let pseudo = pseudo_ids(set);
    if pseudo.len() != v_dist.len() || pseudo.is_empty() {
        return Err(Error::Invalid("v_dist length must match pseudo count".into()));
    }
    let v = generator.vocab_size();
    let mut grad_a = Vec::with_capacity(pseudo.len());
    let mut a = Vec::with_capacity(pseudo.len());
    for s in &pseudo {
        let scale = 1.0 / (s.len() as f64 * tau);
        let mut g = GeneratorParams::zeros(v);
        let l = generator.accumulate_logprob_grad(&set.context, s, scale, &mut g)?;
        a.push(l * scale);
        grad_a.push(g.to_flat());
    }
    let g_dist = softmax(&a);
    let dim = grad_a[0].len();

    let mut direct = vec![0.0; dim];
    for (k, ga) in grad_a.iter().enumerate() {
        let c = g_dist[k] - v_dist[k];
        for (d, x) in direct.iter_mut().zip(ga) {
            *d += c * x;
        }
    }
    let mut mean = vec![0.0; dim];
    for (k, ga) in grad_a.iter().enumerate() {
        for (m, x) in mean.iter_mut().zip(ga) {
            *m += g_dist[k] * x;
        }
    }
    let mut softmax_form = vec![0.0; dim];
    for (k, ga) in grad_a.iter().enumerate() {
        for ((s, x), m) in softmax_form.iter_mut().zip(ga).zip(&mean) {
            *s -= v_dist[k] * (x - m);
        }
    }
    Ok(direct
        .iter()
        .zip(&softmax_form)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Max relative error between `f`'s analytic gradient and central
/// differences, with denominator `max(|analytic|, |numeric|, 1e-8)`.
pub fn finite_diff_check<F>(mut f: F, params: &[f64], step: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let (value, analytic) = f(params)?;
    if analytic.len() != params.len() {
        return Err(Error::Invalid(format!(
            "gradient has {} entries for {} parameters",
            analytic.len(),
            params.len()
        )));
    }
    if !value.is_finite() || analytic.iter().any(|g| !g.is_finite()) {
        return Err(Error::Numeric("non-finite value or gradient".into()));
    }
    let mut x = params.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + step;
        let up = f(&x)?.0;
        x[i] = orig - step;
        let down = f(&x)?.0;
        x[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::Numeric(format!("non-finite value probing coordinate {i}")));
        }
        let numeric = (up - down) / (2.0 * step);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    Ok(worst)
}

/// `finite_diff_check` specialised to the generator objective.
pub fn generator_loss_fd(
    generator: &GeneratorParams,
    set: &CandidateSet,
    v_raw: &[f64],
    weights: &LossWeights,
    step: f64,
) -> Result<f64> {
    let mut probe = generator.clone();
    finite_diff_check(
        |x| {
            probe.set_flat(x);
            let out = generator_loss(&probe, set, v_raw, weights)?;
            Ok((out.loss, out.grad.to_flat()))
        },
        &generator.to_flat(),
        step,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::{Pseudo, Source};
    use crate::modelkit::EOS;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_set(rng: &mut ChaCha8Rng, v: usize, n: usize) -> CandidateSet {
        let stmt = |rng: &mut ChaCha8Rng| {
            let t = rng.random_range(1..=6);
            let mut s: Vec<u32> = (0..t - 1).map(|_| rng.random_range(0..v as u32)).collect();
            s.push(EOS);
            s
        };
        CandidateSet {
            context: Context::new((0..3).map(|_| rng.random_range(0..v as u32)).collect()),
            gold: stmt(rng),
            pseudo: (0..n)
                .map(|_| Pseudo {
                    ids: stmt(rng),
                    source: Source::SelfSampled,
                    label: None,
                    entailment: None,
                })
                .collect(),
        }
    }

    #[test]
    fn tf_uniform_is_log_v() {
        let g = GeneratorParams::zeros(3);
        let (l, _) = teacher_forcing_loss(&g, &Context::default(), &[2, EOS]).unwrap();
        assert!((l - 3f64.ln()).abs() < 1e-9);
        assert!(teacher_forcing_loss(&g, &Context::default(), &[]).is_err());
    }

    #[test]
    fn tf_certain_model_is_zero() {
        let mut g = GeneratorParams::zeros(3);
        g.bigram[EOS as usize * 3 + 2] = 800.0;
        g.bigram[2 * 3 + EOS as usize] = 800.0;
        let (l, _) = teacher_forcing_loss(&g, &Context::default(), &[2, EOS]).unwrap();
        assert!(l.abs() < 1e-12);
    }

    #[test]
    fn verifier_loss_values() {
        let v = VerifierParams::zeros(16);
        let (l, _) = verifier_loss(&v, &Context::default(), &[EOS], 0);
        assert!((l - 2f64.ln()).abs() < 1e-12);
        let mut v = VerifierParams::zeros(16);
        // sigmoid(-ln 3) = 1/4
        v.bias = -(3f64.ln());
        let ctx = Context::default();
        assert!((v.verify(&ctx, &[EOS]) - 0.25).abs() < 1e-12);
        let (l, _) = verifier_loss(&v, &ctx, &[EOS], 1);
        assert!((l - 4f64.ln()).abs() < 1e-12);
        v.bias = 40.0;
        assert!(verifier_loss(&v, &ctx, &[EOS], 1).0 < 1e-12);
    }

    #[test]
    fn score_vectors() {
        let v = VerifierParams::zeros(16);
        let pseudo = vec![vec![3, EOS], vec![4, 5, EOS], vec![3, EOS]];
        assert_eq!(v_score(&v, &Context::default(), &pseudo), [0.5; 3]);
        let g = GeneratorParams::zeros(7);
        let gs = g_score(&g, &Context::default(), &pseudo).unwrap();
        assert!((gs[0] + 2.0 * 7f64.ln()).abs() < 1e-12);
        assert!((gs[1] + 3.0 * 7f64.ln()).abs() < 1e-12);
        assert_eq!(gs[0], gs[2]);
        assert!(g_score(&g, &Context::default(), &[vec![]]).is_err());
    }

    #[test]
    fn normalization_examples() {
        let p = normalize_scores(&[0.3, 0.3], &[-1.0, -2.0], 1.0, &[1, 1]).unwrap();
        assert_eq!(p.v_dist, [0.5, 0.5]);
        let p = normalize_scores(&[0.7], &[-3.0], 1.0, &[2]).unwrap();
        assert_eq!(p.v_dist, [1.0]);
        assert_eq!(p.g_dist, [1.0]);
        let p = normalize_scores(&[0.0, 0.0], &[0.25f64.ln(), 0.75f64.ln()], 1.0, &[1, 1]).unwrap();
        assert_eq!(p.v_dist, [0.5, 0.5]);
        assert!((p.g_dist[0] - 0.25).abs() < 1e-12);
        assert!((p.g_dist[1] - 0.75).abs() < 1e-12);
        assert!(normalize_scores(&[0.5], &[0.0, 0.0], 1.0, &[1, 1]).is_err());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let kl = kl_divergence(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        let direct = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
        assert!((kl - direct).abs() < 1e-15);
        assert!((kl - 0.143841).abs() < 1e-6);
        assert_eq!(kl_divergence(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(kl_divergence(&[0.5, 0.5], &[0.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn kl_non_negative(raw in prop::collection::vec((0.01f64..1.0, 0.01f64..1.0), 1..8)) {
            let sp: f64 = raw.iter().map(|r| r.0).sum();
            let sq: f64 = raw.iter().map(|r| r.1).sum();
            let p: Vec<f64> = raw.iter().map(|r| r.0 / sp).collect();
            let q: Vec<f64> = raw.iter().map(|r| r.1 / sq).collect();
            prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-15);
        }
    }

    #[test]
    fn kl_argmin_over_g_is_v() {
        let v = [0.3, 0.7];
        let mut best = (f64::INFINITY, 0.0);
        for i in 1..1000 {
            let g0 = i as f64 / 1000.0;
            let kl = kl_divergence(&v, &[g0, 1.0 - g0]).unwrap();
            if kl < best.0 {
                best = (kl, g0);
            }
        }
        assert!((best.1 - 0.3).abs() < 1e-9);
    }

    #[test]
    fn lambda2_zero_reduces_to_tf() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = GeneratorParams::random(8, 0.5, &mut rng);
        let set = random_set(&mut rng, 8, 4);
        let w = LossWeights {
            lambda2: 0.0,
            ..Default::default()
        };
        let out = generator_loss(&g, &set, &[0.2, 0.3, 0.9, 0.1], &w).unwrap();
        let (tf, grad) = teacher_forcing_loss(&g, &set.context, &set.gold).unwrap();
        assert_eq!(out.loss, tf);
        assert_eq!(out.grad, grad);
    }

    #[test]
    fn matched_distributions_give_zero_kl_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = GeneratorParams::random(6, 0.5, &mut rng);
        let set = random_set(&mut rng, 6, 3);
        let pseudo = pseudo_ids(&set);
        let lens: Vec<usize> = pseudo.iter().map(Vec::len).collect();
        let g_raw = g_score(&g, &set.context, &pseudo).unwrap();
        let g_dist = normalize_scores(&[1.0; 3], &g_raw, 1.0, &lens).unwrap().g_dist;
        let w = LossWeights {
            lambda1: 0.0,
            ..Default::default()
        };
        let out = generator_loss(&g, &set, &g_dist, &w).unwrap();
        assert!(out.loss.abs() < 1e-12);
        assert!(out.grad.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn decomposition_and_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = GeneratorParams::random(9, 0.8, &mut rng);
        let set = random_set(&mut rng, 9, 5);
        let v_raw = [0.1, 0.5, 0.2, 0.7, 0.4];
        let w = LossWeights {
            lambda1: 0.7,
            lambda2: 1.3,
            tau: 0.5,
        };
        let out = generator_loss(&g, &set, &v_raw, &w).unwrap();
        let (tf, _) = teacher_forcing_loss(&g, &set.context, &set.gold).unwrap();
        let pseudo = pseudo_ids(&set);
        let lens: Vec<usize> = pseudo.iter().map(Vec::len).collect();
        let pair = normalize_scores(&v_raw, &g_score(&g, &set.context, &pseudo).unwrap(), 0.5, &lens)
            .unwrap();
        let kl = kl_divergence(&pair.v_dist, &pair.g_dist).unwrap();
        assert!((out.loss - (0.7 * tf + 1.3 * kl)).abs() < 1e-12);

        let order = [3, 0, 4, 1, 2];
        let mut permuted = set.clone();
        permuted.pseudo = order.iter().map(|&i| set.pseudo[i].clone()).collect();
        let v_perm: Vec<f64> = order.iter().map(|&i| v_raw[i]).collect();
        let out_p = generator_loss(&g, &permuted, &v_perm, &w).unwrap();
        assert!((out_p.kl - out.kl).abs() < 1e-12);
    }

    #[test]
    fn verifier_is_constant_for_generator_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = GeneratorParams::random(6, 0.5, &mut rng);
        let set = random_set(&mut rng, 6, 3);
        let mut v = VerifierParams::zeros(32);
        let pseudo = pseudo_ids(&set);
        let v_raw = v_score(&v, &set.context, &pseudo);
        let before = generator_loss(&g, &set, &v_raw, &LossWeights::default()).unwrap();
        v.bias = 3.0;
        v.weights[7] = -2.0;
        let after = generator_loss(&g, &set, &v_raw, &LossWeights::default()).unwrap();
        assert_eq!(before.loss, after.loss);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let v = rng.random_range(3..=8);
            let n = rng.random_range(1..=5);
            let g = GeneratorParams::random(v, 0.6, &mut rng);
            let set = random_set(&mut rng, v, n);
            let v_raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
            let w = LossWeights {
                lambda1: 1.0,
                lambda2: 1.0,
                tau: rng.random_range(0.5..2.0),
            };
            assert!(generator_loss_fd(&g, &set, &v_raw, &w, 1e-5).unwrap() < 1e-4);
        }
    }

    #[test]
    fn appf_identity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..30 {
            let v = rng.random_range(3..=8);
            let n = rng.random_range(1..=5);
            let g = GeneratorParams::random(v, 0.6, &mut rng);
            let set = random_set(&mut rng, v, n);
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let v_dist: Vec<f64> = raw.iter().map(|x| x / s).collect();
            assert!(appf_gradient_identity_check(&g, &set, &v_dist, 1.0).unwrap() < 1e-10);
        }
        let g = GeneratorParams::random(5, 0.6, &mut rng);
        let set = random_set(&mut rng, 5, 2);
        assert!(appf_gradient_identity_check(&g, &set, &[0.5, 0.5], 1.0).unwrap() < 1e-10);
    }

    #[test]
    fn appf_gradient_matches_kl_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let g = GeneratorParams::random(5, 0.6, &mut rng);
        let set = random_set(&mut rng, 5, 3);
        let w = LossWeights {
            lambda1: 0.0,
            ..Default::default()
        };
        assert!(generator_loss_fd(&g, &set, &[0.2, 0.5, 0.3], &w, 1e-5).unwrap() < 1e-4);
    }

    #[test]
    fn finite_diff_basics() {
        let quad = |x: &[f64]| Ok((0.5 * x.iter().map(|v| v * v).sum::<f64>(), x.to_vec()));
        assert!(finite_diff_check(quad, &[1.0, -2.0, 0.3], 1e-5).unwrap() < 1e-7);
        let constant = |x: &[f64]| Ok((4.0, vec![0.0; x.len()]));
        assert!(finite_diff_check(constant, &[1.0, 2.0], 1e-5).unwrap() < 1e-7);
        let bad = |_: &[f64]| Ok((f64::NAN, vec![0.0]));
        assert!(finite_diff_check(bad, &[1.0], 1e-5).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = GeneratorParams::random(6, 0.5, &mut rng);
        let set = random_set(&mut rng, 6, 1);
        let mut probe = g.clone();
        let err = finite_diff_check(
            |x| {
                probe.set_flat(x);
                let (l, grad) = teacher_forcing_loss(&probe, &set.context, &set.gold)?;
                Ok((l, grad.to_flat()))
            },
            &g.to_flat(),
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4);
    }
}
