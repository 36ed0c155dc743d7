use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::candidates::{SamplingMode, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::losses::LossWeights;
use crate::modelkit::verifier::DEFAULT_DIM;
use crate::modelkit::BeamConfig;

/// Adversarial training schedule and optimisation settings.
///
/// Serialized field names are the schedule symbols (`M`, `M_alpha`, ...);
/// unknown keys are rejected and missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    /// Generator corpus size.
    #[serde(rename = "M")]
    pub gen_corpus: usize,
    /// Verifier corpus size.
    #[serde(rename = "N")]
    pub ver_corpus: usize,
    /// Warm-up split of the generator corpus.
    #[serde(rename = "M_alpha")]
    pub gen_alpha: usize,
    /// Adversarial split of the generator corpus.
    #[serde(rename = "M_beta")]
    pub gen_beta: usize,
    /// Generator-corpus examples drawn per iteration.
    #[serde(rename = "m")]
    pub gen_per_iter: usize,
    /// Verifier-corpus examples drawn per iteration.
    #[serde(rename = "n")]
    pub ver_per_iter: usize,
    /// Warm-up epochs.
    #[serde(rename = "E")]
    pub epochs: usize,
    /// Adversarial iterations.
    #[serde(rename = "Q")]
    pub iterations: usize,
    pub n_cand: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub tau: f64,
    pub lr_gen: f64,
    pub lr_ver: f64,
    pub clip: f64,
    pub batch_gen: usize,
    pub batch_ver: usize,
    pub seed: u64,
    pub mode: SamplingMode,
    pub threshold: f64,
    /// Held-out examples reserved for evaluation.
    pub heldout: usize,
    pub beam_width: usize,
    pub beam_groups: usize,
    pub diversity_penalty: f64,
    pub max_len: usize,
    pub verifier_dim: usize,
    pub min_frequency: u32,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            gen_corpus: 2_000_000,
            ver_corpus: 500_000,
            gen_alpha: 1_000_000,
            gen_beta: 1_000_000,
            gen_per_iter: 100_000,
            ver_per_iter: 50_000,
            epochs: 5,
            iterations: 10,
            n_cand: 5,
            lambda1: 1.0,
            lambda2: 1.0,
            tau: 1.0,
            lr_gen: 0.1,
            lr_ver: 0.1,
            clip: 5.0,
            batch_gen: 16,
            batch_ver: 16,
            seed: 0,
            mode: SamplingMode::SelfSampling,
            threshold: DEFAULT_THRESHOLD,
            heldout: 0,
            beam_width: 8,
            beam_groups: 4,
            diversity_penalty: 0.5,
            max_len: 24,
            verifier_dim: DEFAULT_DIM,
            min_frequency: 1,
        }
    }
}

impl TrainerConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        Self::from_json(&text)
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            tau: self.tau,
        }
    }

    pub fn beam(&self) -> BeamConfig {
        BeamConfig {
            beam_width: self.beam_width,
            groups: self.beam_groups,
            diversity_penalty: self.diversity_penalty,
            max_len: self.max_len,
            seed: self.seed,
        }
    }

    /// Examples a run needs: `M + N + heldout`.
    pub fn required_examples(&self) -> usize {
        self.gen_corpus + self.ver_corpus + self.heldout
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.gen_alpha + self.gen_beta != self.gen_corpus {
            return fail(format!(
                "M_alpha + M_beta = {} but M = {}",
                self.gen_alpha + self.gen_beta,
                self.gen_corpus
            ));
        }
        if self.gen_per_iter * self.iterations > self.gen_beta {
            return fail(format!(
                "m * Q = {} exceeds M_beta = {}",
                self.gen_per_iter * self.iterations,
                self.gen_beta
            ));
        }
        if self.ver_per_iter * self.iterations > self.ver_corpus {
            return fail(format!(
                "n * Q = {} exceeds N = {}",
                self.ver_per_iter * self.iterations,
                self.ver_corpus
            ));
        }
        if self.n_cand == 0 {
            return fail("n_cand must be >= 1".into());
        }
        if self.batch_gen == 0 || self.batch_ver == 0 {
            return fail("batch sizes must be >= 1".into());
        }
        for (name, v) in [("lr_gen", self.lr_gen), ("lr_ver", self.lr_ver)] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} must be a non-negative finite number"));
            }
        }
        if self.clip.is_nan() || self.clip <= 0.0 {
            return fail("clip must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return fail("threshold must lie in [0, 1]".into());
        }
        if self.verifier_dim <= 4 {
            return fail("verifier_dim must exceed 4".into());
        }
        self.weights().validate()?;
        self.beam().validate()?;
        Ok(())
    }
}
