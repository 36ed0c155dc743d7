//! Grouped diverse beam search with Hamming diversity penalties.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::vocab::Context;
use super::SequenceModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub beam_width: usize,
    pub groups: usize,
    pub diversity_penalty: f64,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            beam_width: 8,
            groups: 4,
            diversity_penalty: 0.5,
            max_len: 24,
            seed: 0,
        }
    }
}

impl BeamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.groups == 0 || self.beam_width < self.groups {
            return Err(Error::Config(format!(
                "beam_width ({}) must be >= groups ({}) >= 1",
                self.beam_width, self.groups
            )));
        }
        if self.max_len == 0 {
            return Err(Error::Config("max_len must be >= 1".into()));
        }
        if self.diversity_penalty.is_nan() || self.diversity_penalty < 0.0 {
            return Err(Error::Config("diversity_penalty must be non-negative".into()));
        }
        Ok(())
    }

    fn group_sizes(&self) -> Vec<usize> {
        let base = self.beam_width / self.groups;
        let extra = self.beam_width % self.groups;
        (0..self.groups).map(|g| base + (g < extra) as usize).collect()
    }
}

#[derive(Debug, Clone)]
struct Hyp {
    tokens: Vec<u32>,
    score: f64,
    done: bool,
}

struct Cand {
    ranked: f64,
    parent: usize,
    token: Option<u32>,
    score: f64,
}

fn rank(a: &Cand, b: &Cand) -> Ordering {
    b.ranked
        .total_cmp(&a.ranked)
        .then(a.parent.cmp(&b.parent))
        .then(a.token.cmp(&b.token))
}

/// Decodes up to `beam_width` distinct statements.
///
/// Groups are expanded in order at every step; a candidate token in group
/// `g` loses `diversity_penalty` times the number of earlier groups that
/// emitted the same token at this step. Output lists group 0's beams first,
/// each group by descending log-likelihood. Deterministic.
pub fn sample_diverse<M: SequenceModel>(
    model: &M,
    context: &Context,
    cfg: &BeamConfig,
) -> Result<Vec<Vec<u32>>> {
    cfg.validate()?;
    let cache = model.prepare(context);
    let eos = model.eos();
    let vocab = model.vocab_size();
    let sizes = cfg.group_sizes();
    let mut groups: Vec<Vec<Hyp>> = sizes
        .iter()
        .map(|_| {
            vec![Hyp {
                tokens: Vec::new(),
                score: 0.0,
                done: false,
            }]
        })
        .collect();

    for _ in 0..cfg.max_len {
        if groups.iter().flatten().all(|h| h.done) {
            break;
        }
        let mut step_counts = vec![0usize; vocab];
        for (g, group) in groups.iter_mut().enumerate() {
            let mut cands = Vec::new();
            for (parent, h) in group.iter().enumerate() {
                if h.done {
                    cands.push(Cand {
                        ranked: h.score,
                        parent,
                        token: None,
                        score: h.score,
                    });
                    continue;
                }
                let lp = model.next_log_probs(&cache, &h.tokens);
                for (w, &l) in lp.iter().enumerate() {
                    let score = h.score + l;
                    let count = step_counts[w];
                    let ranked = if count > 0 {
                        score - cfg.diversity_penalty * count as f64
                    } else {
                        score
                    };
                    cands.push(Cand {
                        ranked,
                        parent,
                        token: Some(w as u32),
                        score,
                    });
                }
            }
            cands.sort_by(rank);
            cands.truncate(sizes[g]);
            let next: Vec<Hyp> = cands
                .iter()
                .map(|c| {
                    let mut h = group[c.parent].clone();
                    if let Some(w) = c.token {
                        h.tokens.push(w);
                        h.score = c.score;
                        h.done = w == eos;
                    }
                    h
                })
                .collect();
            for c in &cands {
                if let Some(w) = c.token {
                    step_counts[w as usize] += 1;
                }
            }
            *group = next;
        }
    }

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for mut group in groups {
        group.sort_by(|a, b| b.score.total_cmp(&a.score));
        for h in group {
            if seen.insert(h.tokens.clone()) {
                out.push(h.tokens);
            }
        }
    }
    out.truncate(cfg.beam_width);
    Ok(out)
}
