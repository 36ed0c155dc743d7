//! Turns raw documents into masked-statement training examples.

mod io;
mod rules;
mod segment;
mod stats;

pub use io::{read_corpus, read_examples, write_examples, ExampleWriter, EXAMPLES_SCHEMA};
pub use rules::{extract_statement_span, validate_statement, Decision, RejectReason};
pub use segment::{segment, Sentence};
pub use stats::{corpus_stats, StatsAccumulator, StatsReport};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lexicon::{match_indicators, IndicatorClass, Lexicon};
use crate::modelkit::tokenize::{render, Token};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
}

/// One masked-statement instance. The passage is
/// `context_pre + masked_prefix + statement + masked_suffix + context_post`,
/// each part rendered as space-joined tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub example_id: String,
    pub context_pre: Vec<String>,
    pub masked_prefix: String,
    pub statement: String,
    #[serde(default)]
    pub masked_suffix: String,
    pub context_post: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indicator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indicator_class: Option<IndicatorClass>,
    pub x: usize,
    pub y: usize,
}

pub const MASK_TOKEN: &str = "[MASK]";

impl TrainingExample {
    /// The context `c` with the statement replaced by `[MASK]`.
    pub fn render_context(&self) -> String {
        self.render_with(MASK_TOKEN)
    }

    /// The original passage (modulo tokenizer normalization).
    pub fn render_passage(&self) -> String {
        self.render_with(&self.statement)
    }

    fn render_with(&self, middle: &str) -> String {
        let mut parts: Vec<&str> = self.context_pre.iter().map(String::as_str).collect();
        parts.extend([self.masked_prefix.as_str(), middle, self.masked_suffix.as_str()]);
        parts.extend(self.context_post.iter().map(String::as_str));
        parts.into_iter().filter(|p| !p.is_empty()).collect::<Vec<_>>().join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskMode {
    #[default]
    Logic,
    RandomSentence,
}

impl std::str::FromStr for MaskMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logic" => Ok(MaskMode::Logic),
            "random-sentence" => Ok(MaskMode::RandomSentence),
            other => Err(Error::Invalid(format!("unknown mask mode '{other}'"))),
        }
    }
}

/// Context length sampler: `P(k) = p (1-p)^k` on `{0, 1, ...}`, capped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricContextSampler {
    pub p_pre: f64,
    pub p_post: f64,
    pub cap_pre: usize,
    pub cap_post: usize,
    pub seed: u64,
}

impl Default for GeometricContextSampler {
    fn default() -> Self {
        Self {
            p_pre: 0.3,
            p_post: 0.3,
            cap_pre: 8,
            cap_post: 4,
            seed: 0,
        }
    }
}

impl GeometricContextSampler {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_pre", self.p_pre), ("p_post", self.p_post)] {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1], got {p}")));
            }
        }
        Ok(())
    }

    /// Independent RNG stream for one document.
    pub fn rng_for(&self, doc_id: &str) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(doc_id.as_bytes());
        let digest = h.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }

    fn draw(p: f64, cap: usize, rng: &mut ChaCha8Rng) -> usize {
        let k = Geometric::new(p).expect("validated probability").sample(rng);
        (k.min(cap as u64)) as usize
    }

    pub fn sample_pre(&self, rng: &mut ChaCha8Rng) -> usize {
        Self::draw(self.p_pre, self.cap_pre, rng)
    }

    pub fn sample_post(&self, rng: &mut ChaCha8Rng) -> usize {
        Self::draw(self.p_post, self.cap_post, rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinerConfig {
    pub min_statement_tokens: usize,
    pub random_mask_rate: f64,
    pub mask_mode: MaskMode,
    pub sampler: GeometricContextSampler,
}

impl Default for MinerConfig {
    fn default() -> Self {
        Self {
            min_statement_tokens: 4,
            random_mask_rate: 0.15,
            mask_mode: MaskMode::Logic,
            sampler: GeometricContextSampler::default(),
        }
    }
}

impl MinerConfig {
    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        if !(0.0..=1.0).contains(&self.random_mask_rate) {
            return Err(Error::Config(format!(
                "random_mask_rate must lie in [0, 1], got {}",
                self.random_mask_rate
            )));
        }
        Ok(())
    }
}

fn example_id(doc_id: &str, char_offset: usize) -> String {
    let mut h = Sha256::new();
    h.update(doc_id.as_bytes());
    h.update([0u8]);
    h.update(char_offset.to_string().as_bytes());
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn render_tokens(tokens: &[Token]) -> String {
    let w: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
    render(&w)
}

fn render_sentences(sentences: &[Sentence]) -> Vec<String> {
    sentences.iter().map(|s| render_tokens(&s.tokens)).collect()
}

struct Masking<'a> {
    sentences: &'a [Sentence],
    index: usize,
    span: std::ops::Range<usize>,
    indicator: Option<(String, IndicatorClass)>,
}

fn build_example(
    doc: &Document,
    m: Masking<'_>,
    sampler: &GeometricContextSampler,
    rng: &mut ChaCha8Rng,
) -> TrainingExample {
    let sentence = &m.sentences[m.index];
    let x = sampler.sample_pre(rng).min(m.index);
    let y = sampler
        .sample_post(rng)
        .min(m.sentences.len() - 1 - m.index);
    let byte_offset = sentence.tokens[m.span.start].span.start;
    let char_offset = doc.text[..byte_offset].chars().count();
    TrainingExample {
        example_id: example_id(&doc.doc_id, char_offset),
        context_pre: render_sentences(&m.sentences[m.index - x..m.index]),
        masked_prefix: render_tokens(&sentence.tokens[..m.span.start]),
        statement: render_tokens(&sentence.tokens[m.span.clone()]),
        masked_suffix: render_tokens(&sentence.tokens[m.span.end..]),
        context_post: render_sentences(&m.sentences[m.index + 1..m.index + 1 + y]),
        indicator: m.indicator.as_ref().map(|(s, _)| s.clone()),
        indicator_class: m.indicator.map(|(_, c)| c),
        x,
        y,
    }
}

/// Mines one document. Output depends only on the document, lexicon and
/// config (the RNG stream is derived from the seed and `doc_id`).
pub fn extract_examples(
    doc: &Document,
    lexicon: Option<&Lexicon>,
    config: &MinerConfig,
) -> Result<Vec<TrainingExample>> {
    let sampler = &config.sampler;
    let sentences = segment(&doc.text);
    let mut rng = sampler.rng_for(&doc.doc_id);
    let mut out = Vec::new();
    match config.mask_mode {
        MaskMode::Logic => {
            let lexicon = lexicon
                .ok_or_else(|| Error::Invalid("logic mask mode requires a lexicon".into()))?;
            for (index, sentence) in sentences.iter().enumerate() {
                let words = sentence.words();
                for m in match_indicators(&words, lexicon) {
                    let Decision::Accept(span) =
                        validate_statement(&sentence.tokens, &m, config.min_statement_tokens)
                    else {
                        continue;
                    };
                    let masking = Masking {
                        sentences: &sentences,
                        index,
                        span,
                        indicator: Some((m.surface_text(), m.class)),
                    };
                    out.push(build_example(doc, masking, sampler, &mut rng));
                }
            }
        }
        MaskMode::RandomSentence => {
            for (index, sentence) in sentences.iter().enumerate() {
                if !rng.random_bool(config.random_mask_rate) {
                    continue;
                }
                let n = sentence.tokens.len();
                if n == 0 || n < config.min_statement_tokens {
                    continue;
                }
                let masking = Masking {
                    sentences: &sentences,
                    index,
                    span: 0..n,
                    indicator: None,
                };
                out.push(build_example(doc, masking, sampler, &mut rng));
            }
        }
    }
    Ok(out)
}

/// Mines a batch of documents in parallel; results keep the input order.
pub fn mine_documents(
    docs: &[Document],
    lexicon: Option<&Lexicon>,
    config: &MinerConfig,
) -> Result<Vec<TrainingExample>> {
    let per_doc: Vec<Result<Vec<TrainingExample>>> = docs
        .par_iter()
        .map(|d| extract_examples(d, lexicon, config))
        .collect();
    let mut out = Vec::new();
    for r in per_doc {
        out.extend(r?);
    }
    Ok(out)
}

/// Checks `doc_id` uniqueness over a corpus.
pub fn check_unique_ids<'a>(ids: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let mut seen = BTreeMap::new();
    for (i, id) in ids.into_iter().enumerate() {
        if let Some(prev) = seen.insert(id, i) {
            return Err(Error::Invalid(format!(
                "duplicate doc_id '{id}' (documents {prev} and {i})"
            )));
        }
    }
    Ok(())
}
