//! Warm-up plus alternating verifier/generator adversarial training.

pub mod config;
pub mod eval;

pub use config::TrainerConfig;
pub use eval::{eval_items, evaluate, EvalItem, EvalMetrics};

use std::path::{Path, PathBuf};

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidates::{
    assemble_candidates, bridge_label, entail_score, gap_bridge, Bm25Index, CandidateSet,
    LexicalOracle, Source,
};
use crate::error::{Error, Result};
use crate::losses::{accumulate_tf, generator_loss, v_score};
use crate::miner::TrainingExample;
use crate::modelkit::{Context, GeneratorParams, VerifierParams, Vocabulary};

const BM25_K1: f64 = 1.2;
const BM25_B: f64 = 0.75;
/// Cap on held-out contexts used for verifier accuracy telemetry.
const VERIFIER_PROBE: usize = 256;

// RNG stream ids; each derived from the run seed.
const STREAM_SPLIT: u64 = 1;
const STREAM_PARTITION: u64 = 2;
const STREAM_BETA: u64 = 3;
const STREAM_VER: u64 = 4;
const STREAM_WARMUP: u64 = 100;
const STREAM_VER_EPOCH: u64 = 10_000;
const STREAM_GEN_EPOCH: u64 = 20_000;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn permutation(len: usize, seed: u64, stream: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut rng(seed, stream));
    order
}

/// FNV-1a over the bit patterns of `values`.
pub fn checksum<'a>(values: impl IntoIterator<Item = &'a f64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in values {
        for b in x.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Seeded random split of `items` into `alpha` and the rest.
pub fn partition<T: Clone>(items: &[T], alpha: usize, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if alpha > items.len() {
        return Err(Error::Config(format!(
            "cannot take {alpha} of {} items",
            items.len()
        )));
    }
    let order = permutation(items.len(), seed, STREAM_PARTITION);
    let a = order[..alpha].iter().map(|&i| items[i].clone()).collect();
    let b = order[alpha..].iter().map(|&i| items[i].clone()).collect();
    Ok((a, b))
}

/// Clips `grad` to global norm `clip`, then `params -= lr * grad`.
/// Returns the pre-clip norm.
pub fn sgd_step(params: &mut [f64], grad: &[f64], lr: f64, clip: f64) -> Result<f64> {
    if params.len() != grad.len() {
        return Err(Error::Invalid(format!(
            "gradient has {} entries for {} parameters",
            grad.len(),
            params.len()
        )));
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!("non-finite gradient at coordinate {i}")));
    }
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if lr == 0.0 {
        return Ok(norm);
    }
    let scale = if norm > clip { clip / norm } else { 1.0 };
    for (p, g) in params.iter_mut().zip(grad) {
        *p -= lr * scale * g;
    }
    Ok(norm)
}

fn add_into(acc: &mut [f64], x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

/// A training example mapped onto vocabulary ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub context: Context,
    pub gold: Vec<u32>,
}

impl Encoded {
    pub fn new(vocab: &Vocabulary, e: &TrainingExample) -> Self {
        Self {
            context: vocab.context(e),
            gold: vocab.statement(&e.statement),
        }
    }
}

/// Seeded split of the example pool into generator, verifier and held-out corpora.
#[derive(Debug, Clone)]
pub struct Corpora {
    pub gen_alpha: Vec<TrainingExample>,
    pub gen_beta: Vec<TrainingExample>,
    pub ver: Vec<TrainingExample>,
    pub heldout: Vec<TrainingExample>,
}

impl Corpora {
    pub fn split(examples: &[TrainingExample], cfg: &TrainerConfig) -> Result<Self> {
        let need = cfg.required_examples();
        if examples.len() < need {
            return Err(Error::Config(format!(
                "config needs M + N + heldout = {need} examples but only {} are available",
                examples.len()
            )));
        }
        let order = permutation(examples.len(), cfg.seed, STREAM_SPLIT);
        let take = |r: std::ops::Range<usize>| -> Vec<TrainingExample> {
            order[r].iter().map(|&i| examples[i].clone()).collect()
        };
        let m = cfg.gen_corpus;
        let n = cfg.ver_corpus;
        let gen = take(0..m);
        let ver = take(m..m + n);
        let heldout = take(m + n..need);
        let (gen_alpha, gen_beta) = partition(&gen, cfg.gen_alpha, cfg.seed)?;
        Ok(Self {
            gen_alpha,
            gen_beta,
            ver,
            heldout,
        })
    }

    pub fn training(&self) -> impl Iterator<Item = &TrainingExample> {
        self.gen_alpha.iter().chain(&self.gen_beta).chain(&self.ver)
    }
}

/// Schedule assertions; all violation counters are zero on a correct run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub gen_pool: usize,
    pub ver_pool: usize,
    pub gen_consumed: usize,
    pub ver_consumed: usize,
    pub reuse_violations: usize,
    pub batch_shape_violations: usize,
    pub ordering_violations: usize,
    pub generator_batches: usize,
    pub verifier_epochs: usize,
    pub generator_epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub ver_loss: f64,
    pub tf_loss: f64,
    pub kl: f64,
    pub gen_loss: f64,
    /// Held-out gold/pseudo classification accuracy after the verifier epoch.
    pub verifier_accuracy: Option<f64>,
    pub flip_rate: f64,
    pub retrieved_fraction: f64,
    pub verifier_checksum_trained: u64,
    pub verifier_checksum_scored: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub seed: u64,
    pub vocab_size: usize,
    /// Epoch-mean teacher-forcing loss during warm-up.
    pub warmup: Vec<f64>,
    pub initial: Option<EvalMetrics>,
    pub after_warmup: Option<EvalMetrics>,
    pub final_eval: Option<EvalMetrics>,
    pub iterations: Vec<IterationRecord>,
    pub audit: Audit,
    pub generator_checksum: u64,
    pub verifier_checksum: u64,
    /// Artifact file names relative to the run directory.
    pub checkpoints: Vec<String>,
}

/// Mutable training state threaded through the adversarial iterations.
pub struct TrainState<'a> {
    pub cfg: &'a TrainerConfig,
    pub vocab: &'a Vocabulary,
    pub index: Option<&'a Bm25Index>,
    pub oracle: &'a LexicalOracle,
    pub generator: GeneratorParams,
    pub verifier: VerifierParams,
    pub gen_beta: Vec<Encoded>,
    pub ver: Vec<Encoded>,
    gen_order: Vec<usize>,
    ver_order: Vec<usize>,
    gen_used: Vec<bool>,
    ver_used: Vec<bool>,
    probe: Vec<(Context, Vec<u32>, u8)>,
    pub audit: Audit,
}

impl<'a> TrainState<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cfg: &'a TrainerConfig,
        vocab: &'a Vocabulary,
        index: Option<&'a Bm25Index>,
        oracle: &'a LexicalOracle,
        generator: GeneratorParams,
        verifier: VerifierParams,
        gen_beta: Vec<Encoded>,
        ver: Vec<Encoded>,
        heldout: &[Encoded],
    ) -> Result<Self> {
        let probe = verifier_probe(oracle, vocab, heldout, cfg.threshold)?;
        Ok(Self {
            gen_order: permutation(gen_beta.len(), cfg.seed, STREAM_BETA),
            ver_order: permutation(ver.len(), cfg.seed, STREAM_VER),
            gen_used: vec![false; gen_beta.len()],
            ver_used: vec![false; ver.len()],
            audit: Audit {
                gen_pool: gen_beta.len(),
                ver_pool: ver.len(),
                ..Audit::default()
            },
            cfg,
            vocab,
            index,
            oracle,
            generator,
            verifier,
            gen_beta,
            ver,
            probe,
        })
    }

    fn draw(&mut self, generator_pool: bool, i: usize) -> Result<Vec<usize>> {
        let (order, used, k, name) = if generator_pool {
            (&self.gen_order, &mut self.gen_used, self.cfg.gen_per_iter, "generator")
        } else {
            (&self.ver_order, &mut self.ver_used, self.cfg.ver_per_iter, "verifier")
        };
        let range = i * k..(i + 1) * k;
        if range.end > order.len() {
            return Err(Error::Invalid(format!(
                "{name} pool exhausted at iteration {i}: need {} of {}",
                range.end,
                order.len()
            )));
        }
        let picked: Vec<usize> = order[range].to_vec();
        for &j in &picked {
            if used[j] {
                self.audit.reuse_violations += 1;
            }
            used[j] = true;
        }
        Ok(picked)
    }

    fn candidates(&self, pool: &[Encoded], picked: &[usize]) -> Result<Vec<CandidateSet>> {
        let beam = self.cfg.beam();
        picked
            .par_iter()
            .map(|&j| {
                let e = &pool[j];
                assemble_candidates(
                    &self.generator,
                    self.index,
                    self.vocab,
                    &e.context,
                    &e.gold,
                    self.cfg.n_cand,
                    self.cfg.mode,
                    &beam,
                )
            })
            .collect()
    }

    fn verifier_accuracy(&self) -> Option<f64> {
        if self.probe.is_empty() {
            return None;
        }
        let correct = self
            .probe
            .iter()
            .filter(|(c, s, y)| (self.verifier.verify(c, s) > 0.5) == (*y == 1))
            .count();
        Some(correct as f64 / self.probe.len() as f64)
    }

    /// One verifier epoch over gap-bridged candidate sets; returns the mean
    /// per-pair loss.
    fn verifier_epoch(&mut self, sets: &[CandidateSet], i: usize) -> Result<f64> {
        let order = permutation(sets.len(), self.cfg.seed, STREAM_VER_EPOCH + i as u64);
        let dim = self.verifier.dim();
        let mut total = 0.0;
        let mut pairs = 0usize;
        for batch in order.chunks(self.cfg.batch_ver) {
            let parts: Vec<(f64, usize, VerifierParams)> = batch
                .par_iter()
                .map(|&j| {
                    let set = &sets[j];
                    let mut g = VerifierParams::zeros(dim);
                    let mut loss =
                        self.verifier
                            .accumulate_loss_grad(&set.context, &set.gold, 1.0, 1.0, &mut g);
                    for p in &set.pseudo {
                        let y = p.label.unwrap_or(0) as f64;
                        loss += self.verifier.accumulate_loss_grad(&set.context, &p.ids, y, 1.0, &mut g);
                    }
                    (loss, 1 + set.pseudo.len(), g)
                })
                .collect();
            let count: usize = parts.iter().map(|p| p.1).sum();
            let mut grad = vec![0.0; self.verifier.num_params()];
            for (loss, _, g) in &parts {
                total += loss;
                add_into(&mut grad, &g.to_flat());
            }
            pairs += count;
            grad.iter_mut().for_each(|g| *g /= count as f64);
            let mut flat = self.verifier.to_flat();
            sgd_step(&mut flat, &grad, self.cfg.lr_ver, self.cfg.clip)?;
            self.verifier.set_flat(&flat);
        }
        self.audit.verifier_epochs += 1;
        Ok(total / pairs.max(1) as f64)
    }

    /// One generator epoch with the combined objective; returns mean
    /// (total, teacher-forcing, KL) per context.
    fn generator_epoch(
        &mut self,
        sets: &[CandidateSet],
        v_raw: &[Vec<f64>],
        i: usize,
    ) -> Result<(f64, f64, f64)> {
        let order = permutation(sets.len(), self.cfg.seed, STREAM_GEN_EPOCH + i as u64);
        let weights = self.cfg.weights();
        let (mut loss, mut tf, mut kl) = (0.0, 0.0, 0.0);
        for batch in order.chunks(self.cfg.batch_gen) {
            for &j in batch {
                if sets[j].pseudo.len() != self.cfg.n_cand {
                    self.audit.batch_shape_violations += 1;
                }
            }
            let parts: Vec<_> = batch
                .par_iter()
                .map(|&j| generator_loss(&self.generator, &sets[j], &v_raw[j], &weights))
                .collect::<Result<_>>()?;
            let mut grad = vec![0.0; self.generator.num_params()];
            for p in &parts {
                loss += p.loss;
                tf += p.tf;
                kl += p.kl;
                add_into(&mut grad, &p.grad.to_flat());
            }
            grad.iter_mut().for_each(|g| *g /= batch.len() as f64);
            let mut flat = self.generator.to_flat();
            sgd_step(&mut flat, &grad, self.cfg.lr_gen, self.cfg.clip)?;
            self.generator.set_flat(&flat);
            self.audit.generator_batches += 1;
        }
        self.audit.generator_epochs += 1;
        let n = sets.len().max(1) as f64;
        Ok((loss / n, tf / n, kl / n))
    }
}

/// Held-out verifier probe: each gold paired with the next context's gold
/// as a pseudo-statement, labelled by the entailment rule.
fn verifier_probe(
    oracle: &LexicalOracle,
    vocab: &Vocabulary,
    heldout: &[Encoded],
    threshold: f64,
) -> Result<Vec<(Context, Vec<u32>, u8)>> {
    let items = &heldout[..heldout.len().min(VERIFIER_PROBE)];
    if items.len() < 2 {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(2 * items.len());
    for (k, e) in items.iter().enumerate() {
        let other = &items[(k + 1) % items.len()].gold;
        out.push((e.context.clone(), e.gold.clone(), 1));
        let score = entail_score(oracle, &vocab.decode(&e.gold), &vocab.decode(other))?;
        out.push((e.context.clone(), other.clone(), bridge_label(score, threshold)));
    }
    Ok(out)
}

/// Teacher-forcing SGD over `examples` for `epochs` passes; returns the
/// epoch-mean loss of each pass.
pub fn warmup(
    generator: &mut GeneratorParams,
    examples: &[Encoded],
    epochs: usize,
    cfg: &TrainerConfig,
) -> Result<Vec<f64>> {
    let mut means = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let order = permutation(examples.len(), cfg.seed, STREAM_WARMUP + epoch as u64);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_gen) {
            let parts: Vec<(f64, Vec<f64>)> = batch
                .par_iter()
                .map(|&j| {
                    let e = &examples[j];
                    let mut g = GeneratorParams::zeros(generator.vocab_size());
                    let l = accumulate_tf(generator, &e.context, &e.gold, 1.0, &mut g)?;
                    Ok((l, g.to_flat()))
                })
                .collect::<Result<_>>()?;
            let mut grad = vec![0.0; generator.num_params()];
            for (l, g) in &parts {
                total += l;
                add_into(&mut grad, g);
            }
            grad.iter_mut().for_each(|g| *g /= batch.len() as f64);
            let mut flat = generator.to_flat();
            sgd_step(&mut flat, &grad, cfg.lr_gen, cfg.clip)?;
            generator.set_flat(&flat);
        }
        let mean = total / examples.len().max(1) as f64;
        debug!("warmup epoch {epoch}: mean L_tf {mean:.6}");
        means.push(mean);
    }
    Ok(means)
}

/// One adversarial iteration in the fixed order: sample, build candidate
/// sets, verifier epoch, verifier scoring, generator epoch.
pub fn adversarial_iteration(i: usize, state: &mut TrainState) -> Result<IterationRecord> {
    let gen_pick = state.draw(true, i)?;
    let ver_pick = state.draw(false, i)?;

    let mut ver_sets = state.candidates(&state.ver, &ver_pick)?;
    let gen_sets = state.candidates(&state.gen_beta, &gen_pick)?;
    let flips: usize = ver_sets
        .par_iter_mut()
        .map(|s| gap_bridge(state.oracle, state.vocab, s, state.cfg.threshold))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let ver_pseudo: usize = ver_sets.iter().map(|s| s.pseudo.len()).sum();
    let retrieved = ver_sets
        .iter()
        .chain(&gen_sets)
        .flat_map(|s| &s.pseudo)
        .filter(|p| p.source == Source::Retrieved)
        .count();
    let all_pseudo = ver_pseudo + gen_sets.iter().map(|s| s.pseudo.len()).sum::<usize>();

    let ver_loss = state.verifier_epoch(&ver_sets, i)?;
    let trained = state.verifier.checksum();
    let verifier_accuracy = state.verifier_accuracy();

    let scored = state.verifier.checksum();
    let v_raw: Vec<Vec<f64>> = gen_sets
        .par_iter()
        .map(|s| {
            let ids: Vec<Vec<u32>> = s.pseudo.iter().map(|p| p.ids.clone()).collect();
            v_score(&state.verifier, &s.context, &ids)
        })
        .collect();
    if scored != trained {
        state.audit.ordering_violations += 1;
    }

    let (gen_loss, tf_loss, kl) = state.generator_epoch(&gen_sets, &v_raw, i)?;
    state.audit.gen_consumed = state.gen_used.iter().filter(|&&u| u).count();
    state.audit.ver_consumed = state.ver_used.iter().filter(|&&u| u).count();

    Ok(IterationRecord {
        iteration: i,
        ver_loss,
        tf_loss,
        kl,
        gen_loss,
        verifier_accuracy,
        flip_rate: flips as f64 / ver_pseudo.max(1) as f64,
        retrieved_fraction: retrieved as f64 / all_pseudo.max(1) as f64,
        verifier_checksum_trained: trained,
        verifier_checksum_scored: scored,
    })
}

/// Final parameters and telemetry of a run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: TrainReport,
    pub vocab: Vocabulary,
    pub generator: GeneratorParams,
    pub verifier: VerifierParams,
}

pub const GENERATOR_FILE: &str = "generator.ckpt";
pub const VERIFIER_FILE: &str = "verifier.ckpt";
pub const VOCAB_FILE: &str = "vocab.jsonl";
pub const REPORT_FILE: &str = "report.json";

impl TrainOutcome {
    /// Writes checkpoints, vocabulary and the report into `dir`.
    pub fn save(&mut self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        self.report.checkpoints = [GENERATOR_FILE, VERIFIER_FILE, VOCAB_FILE]
            .iter()
            .map(|s| s.to_string())
            .collect();
        self.generator.to_checkpoint().save(&dir.join(GENERATOR_FILE))?;
        self.verifier.to_checkpoint().save(&dir.join(VERIFIER_FILE))?;
        self.vocab.save(&dir.join(VOCAB_FILE))?;
        let report = dir.join(REPORT_FILE);
        let mut text = serde_json::to_string_pretty(&self.report)?;
        text.push('\n');
        std::fs::write(&report, text)
            .map_err(|e| Error::io(format!("writing {}", report.display()), e))?;
        Ok([GENERATOR_FILE, VERIFIER_FILE, VOCAB_FILE, REPORT_FILE]
            .iter()
            .map(|f| dir.join(f))
            .collect())
    }
}

/// Runs partition, warm-up and `Q` adversarial iterations.
///
/// Without an `index`, one is built over the training statements; it backs
/// retrieval sampling and the held-out ranking pseudo-statements.
pub fn run(
    cfg: &TrainerConfig,
    examples: &[TrainingExample],
    index: Option<&Bm25Index>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let corpora = Corpora::split(examples, cfg)?;
    let vocab = Vocabulary::from_examples(corpora.training(), cfg.min_frequency);
    let built;
    let index = match index {
        Some(ix) => ix,
        None => {
            let statements: Vec<&str> = corpora.training().map(|e| e.statement.as_str()).collect();
            built = Bm25Index::build(&statements, BM25_K1, BM25_B)?;
            &built
        }
    };
    info!(
        "vocabulary {} tokens; alpha {} beta {} verifier {} heldout {}",
        vocab.len(),
        corpora.gen_alpha.len(),
        corpora.gen_beta.len(),
        corpora.ver.len(),
        corpora.heldout.len()
    );
    let encode = |xs: &[TrainingExample]| -> Vec<Encoded> {
        xs.par_iter().map(|e| Encoded::new(&vocab, e)).collect()
    };
    let alpha = encode(&corpora.gen_alpha);
    let heldout = encode(&corpora.heldout);
    let items = eval_items(&corpora.heldout, &vocab, index, cfg.n_cand);
    let eval = |g: &GeneratorParams| -> Result<Option<EvalMetrics>> {
        if items.is_empty() {
            Ok(None)
        } else {
            evaluate(g, &items).map(Some)
        }
    };

    let mut generator = GeneratorParams::zeros(vocab.len());
    let initial = eval(&generator)?;
    let warm = warmup(&mut generator, &alpha, cfg.epochs, cfg)?;
    let after_warmup = eval(&generator)?;

    let oracle = LexicalOracle::default();
    let mut state = TrainState::new(
        cfg,
        &vocab,
        Some(index),
        &oracle,
        generator,
        VerifierParams::zeros(cfg.verifier_dim),
        encode(&corpora.gen_beta),
        encode(&corpora.ver),
        &heldout,
    )?;
    let mut iterations = Vec::with_capacity(cfg.iterations);
    for i in 0..cfg.iterations {
        let rec = adversarial_iteration(i, &mut state)?;
        info!(
            "iteration {i}: L_ver {:.4} L_tf {:.4} KL {:.4} flips {:.3}",
            rec.ver_loss, rec.tf_loss, rec.kl, rec.flip_rate
        );
        iterations.push(rec);
    }
    let final_eval = eval(&state.generator)?;
    let report = TrainReport {
        seed: cfg.seed,
        vocab_size: vocab.len(),
        warmup: warm,
        initial,
        after_warmup,
        final_eval,
        iterations,
        audit: state.audit.clone(),
        generator_checksum: checksum(state.generator.iter()),
        verifier_checksum: state.verifier.checksum(),
        checkpoints: Vec::new(),
    };
    let TrainState {
        generator,
        verifier,
        ..
    } = state;
    Ok(TrainOutcome {
        report,
        vocab,
        generator,
        verifier,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{synthetic_examples, SyntheticConfig};

    #[test]
    fn partition_is_disjoint_and_seeded() {
        let items: Vec<u32> = (0..10).collect();
        let (a, b) = partition(&items, 4, 7).unwrap();
        assert_eq!((a.len(), b.len()), (4, 6));
        let mut all: Vec<u32> = a.iter().chain(&b).copied().collect();
        all.sort();
        assert_eq!(all, items);
        assert_eq!(partition(&items, 4, 7).unwrap(), (a, b));
        assert!(partition(&items, 11, 7).is_err());
    }

    #[test]
    fn sgd_examples() {
        let mut x = [1.0];
        sgd_step(&mut x, &[1.0], 0.1, 5.0).unwrap();
        assert!((x[0] - 0.9).abs() < 1e-15);
        let mut y = [0.3, -0.0];
        sgd_step(&mut y, &[2.0, -1.0], 0.0, 5.0).unwrap();
        assert_eq!(y[0].to_bits(), 0.3f64.to_bits());
        assert_eq!(y[1].to_bits(), (-0.0f64).to_bits());
        let mut z = [0.0, 0.0];
        sgd_step(&mut z, &[3.0, 4.0], 1.0, 1.0).unwrap();
        assert!((z[0] + 0.6).abs() < 1e-15 && (z[1] + 0.8).abs() < 1e-15);
        assert!(sgd_step(&mut z, &[f64::NAN, 0.0], 1.0, 1.0).is_err());
    }

    fn small_config(q: usize) -> TrainerConfig {
        TrainerConfig {
            gen_corpus: 40,
            gen_alpha: 20,
            gen_beta: 20,
            gen_per_iter: 10,
            ver_corpus: 20,
            ver_per_iter: 10,
            heldout: 10,
            epochs: 2,
            iterations: q,
            max_len: 10,
            verifier_dim: 256,
            seed: 3,
            ..TrainerConfig::default()
        }
    }

    fn corpus() -> Vec<TrainingExample> {
        synthetic_examples(&SyntheticConfig {
            documents: 60,
            seed: 1,
            ..SyntheticConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn zero_epochs_leave_generator_unchanged() {
        let examples = corpus();
        let cfg = small_config(0);
        let vocab = Vocabulary::from_examples(&examples, 1);
        let enc: Vec<Encoded> = examples.iter().map(|e| Encoded::new(&vocab, e)).collect();
        let mut g = GeneratorParams::zeros(vocab.len());
        g.bigram[5] = 0.25;
        let before = g.clone();
        assert!(warmup(&mut g, &enc, 0, &cfg).unwrap().is_empty());
        assert_eq!(g, before);
    }

    #[test]
    fn schedule_audit_and_ordering() {
        let examples = corpus();
        let out = run(&small_config(2), &examples, None).unwrap();
        let r = &out.report;
        assert_eq!(r.iterations.len(), 2);
        assert_eq!(r.audit.gen_consumed, 20);
        assert_eq!(r.audit.ver_consumed, 20);
        assert_eq!(r.audit.reuse_violations, 0);
        assert_eq!(r.audit.batch_shape_violations, 0);
        assert_eq!(r.audit.ordering_violations, 0);
        for rec in &r.iterations {
            assert_eq!(rec.verifier_checksum_trained, rec.verifier_checksum_scored);
            assert!(rec.verifier_accuracy.is_some());
        }
    }

    #[test]
    fn zero_learning_rates_freeze_parameters() {
        let examples = corpus();
        let cfg = TrainerConfig {
            lr_gen: 0.0,
            lr_ver: 0.0,
            ..small_config(2)
        };
        let out = run(&cfg, &examples, None).unwrap();
        assert_eq!(out.report.iterations.len(), 2);
        assert!(out.generator.iter().all(|&x| x.to_bits() == 0));
        assert_eq!(out.verifier, VerifierParams::zeros(cfg.verifier_dim));
    }

    #[test]
    fn q_zero_matches_warmup() {
        let examples = corpus();
        let out = run(&small_config(0), &examples, None).unwrap();
        assert!(out.report.iterations.is_empty());
        assert_eq!(out.report.after_warmup, out.report.final_eval);
    }

    #[test]
    fn too_few_examples() {
        let examples = corpus();
        let cfg = TrainerConfig {
            heldout: examples.len(),
            ..small_config(1)
        };
        assert!(run(&cfg, &examples, None).is_err());
    }
}
