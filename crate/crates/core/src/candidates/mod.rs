//! Pseudo-statement candidate sets: self-sampled and retrieved statements,
//! relabelled by entailment against the gold statement.

pub mod bm25;
pub mod entail;

pub use bm25::Bm25Index;
pub use entail::{entail_score, EntailmentOracle, LexicalOracle};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modelkit::tokenize::render;
use crate::modelkit::{sample_diverse, BeamConfig, Context, GeneratorParams, Vocabulary, EOS};

pub const DEFAULT_THRESHOLD: f64 = 0.50;
const MAX_RETRIEVED: usize = 5;
const FALLBACK_ROUNDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SamplingMode {
    /// Self-sampling only.
    #[default]
    #[serde(rename = "ss")]
    SelfSampling,
    /// Self-sampling plus BM25 retrieval.
    #[serde(rename = "ss+es")]
    SelfAndRetrieval,
}

impl std::str::FromStr for SamplingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ss" => Ok(SamplingMode::SelfSampling),
            "ss+es" => Ok(SamplingMode::SelfAndRetrieval),
            other => Err(Error::Invalid(format!("unknown sampling mode '{other}'"))),
        }
    }
}

impl SamplingMode {
    /// Retrieval quota for `n` pseudo slots.
    pub fn retrieval_quota(self, n: usize) -> usize {
        match self {
            SamplingMode::SelfSampling => 0,
            SamplingMode::SelfAndRetrieval => MAX_RETRIEVED.min(n.div_ceil(2)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    #[serde(rename = "self")]
    SelfSampled,
    Retrieved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pseudo {
    /// EOS-terminated ids.
    pub ids: Vec<u32>,
    pub source: Source,
    /// Set by [`gap_bridge`].
    pub label: Option<u8>,
    pub entailment: Option<f64>,
}

/// One context with its gold statement and `n` pseudo-statements.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub context: Context,
    pub gold: Vec<u32>,
    pub pseudo: Vec<Pseudo>,
}

impl CandidateSet {
    pub fn flips(&self) -> usize {
        self.pseudo.iter().filter(|p| p.label == Some(1)).count()
    }

    pub fn to_record(&self, vocab: &Vocabulary, example_id: &str) -> CandidateRecord {
        CandidateRecord {
            example_id: example_id.to_string(),
            context: render(&vocab.decode(&self.context.ids)),
            gold: render(&vocab.decode(&self.gold)),
            pseudo: self
                .pseudo
                .iter()
                .map(|p| PseudoRecord {
                    statement: render(&vocab.decode(&p.ids)),
                    source: p.source,
                    label: p.label,
                    entailment: p.entailment,
                })
                .collect(),
        }
    }
}

/// JSON-lines form of a [`CandidateSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub example_id: String,
    pub context: String,
    pub gold: String,
    pub pseudo: Vec<PseudoRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoRecord {
    pub statement: String,
    pub source: Source,
    pub label: Option<u8>,
    pub entailment: Option<f64>,
}

struct Collector<'a> {
    gold: &'a [u32],
    seen: HashSet<Vec<u32>>,
    out: Vec<Pseudo>,
}

impl Collector<'_> {
    fn offer(&mut self, ids: Vec<u32>, source: Source) -> bool {
        let has_word = ids.iter().any(|&i| i != EOS);
        if !has_word || ids == self.gold || !self.seen.insert(ids.clone()) {
            return false;
        }
        self.out.push(Pseudo {
            ids,
            source,
            label: None,
            entailment: None,
        });
        true
    }
}

/// Builds the pseudo-statements for one context.
///
/// In `ss+es` mode retrieval fills up to `min(5, ceil(n/2))` slots and
/// self-samples the rest. Entries are distinct, differ from the gold and
/// contain at least one word. When the beam yields too few, it is widened
/// a few times before giving up.
#[allow(clippy::too_many_arguments)]
pub fn assemble_candidates(
    generator: &GeneratorParams,
    index: Option<&Bm25Index>,
    vocab: &Vocabulary,
    context: &Context,
    gold: &[u32],
    n: usize,
    mode: SamplingMode,
    beam: &BeamConfig,
) -> Result<CandidateSet> {
    if n == 0 {
        return Err(Error::Invalid("candidate count n must be >= 1".into()));
    }
    let mut col = Collector {
        gold,
        seen: HashSet::new(),
        out: Vec::with_capacity(n),
    };
    let quota = mode.retrieval_quota(n);
    let mut retrieved = Vec::new();
    if quota > 0 {
        let index = index.ok_or_else(|| {
            Error::Invalid("ss+es sampling requires a retrieval index".into())
        })?;
        let query = render(&vocab.decode(gold));
        for text in index.retrieve(&query, quota + n) {
            if retrieved.len() == quota {
                break;
            }
            let mut ids = vocab.tokenize(&text);
            ids.push(EOS);
            if col.offer(ids, Source::Retrieved) {
                retrieved.push(col.out.len() - 1);
            }
        }
    }
    let mut cfg = *beam;
    for _ in 0..=FALLBACK_ROUNDS {
        for ids in sample_diverse(generator, context, &cfg)? {
            if col.out.len() == n {
                break;
            }
            col.offer(ids, Source::SelfSampled);
        }
        if col.out.len() == n {
            break;
        }
        cfg.beam_width *= 2;
    }
    if col.out.len() < n {
        return Err(Error::Invalid(format!(
            "generator produced only {} of {} distinct pseudo-statements (short by {})",
            col.out.len(),
            n,
            n - col.out.len()
        )));
    }
    // self-samples first, then retrieved
    col.out.sort_by_key(|p| p.source == Source::Retrieved);
    Ok(CandidateSet {
        context: context.clone(),
        gold: gold.to_vec(),
        pseudo: col.out,
    })
}

/// Labels every pseudo entry: `y = 1` iff `e(s+, s-) > threshold`.
/// Returns the number of entries labelled 1.
pub fn gap_bridge(
    oracle: &dyn EntailmentOracle,
    vocab: &Vocabulary,
    set: &mut CandidateSet,
    threshold: f64,
) -> Result<usize> {
    let gold = vocab.decode(&set.gold);
    let mut flips = 0;
    for p in &mut set.pseudo {
        let e = entail_score(oracle, &gold, &vocab.decode(&p.ids))?;
        let y = bridge_label(e, threshold);
        flips += y as usize;
        p.entailment = Some(e);
        p.label = Some(y);
    }
    Ok(flips)
}

/// Strict threshold rule.
pub fn bridge_label(entailment: f64, threshold: f64) -> u8 {
    (entailment > threshold) as u8
}
