//! Held-out teacher-forcing loss and gold-vs-pseudo ranking accuracy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candidates::Bm25Index;
use crate::error::Result;
use crate::losses::teacher_forcing_loss;
use crate::miner::TrainingExample;
use crate::modelkit::{Context, GeneratorParams, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub examples: usize,
    pub mean_tf: f64,
    /// Fraction of contexts whose gold log-likelihood strictly exceeds
    /// every pseudo-statement's.
    pub ranking_accuracy: f64,
    pub mean_pseudo: f64,
}

/// One held-out context with model-independent pseudo-statements.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalItem {
    pub context: Context,
    pub gold: Vec<u32>,
    pub pseudo: Vec<Vec<u32>>,
}

/// Pseudo-statements are the top-`n_cand` BM25 neighbours of the gold
/// statement, with the gold itself removed.
pub fn eval_items(
    examples: &[TrainingExample],
    vocab: &Vocabulary,
    index: &Bm25Index,
    n_cand: usize,
) -> Vec<EvalItem> {
    examples
        .par_iter()
        .map(|e| {
            let gold = vocab.statement(&e.statement);
            let mut pseudo: Vec<Vec<u32>> = Vec::new();
            for text in index.retrieve(&e.statement, n_cand + 1) {
                let ids = vocab.statement(&text);
                if ids != gold && !pseudo.contains(&ids) && pseudo.len() < n_cand {
                    pseudo.push(ids);
                }
            }
            EvalItem {
                context: vocab.context(e),
                gold,
                pseudo,
            }
        })
        .collect()
}

pub fn evaluate(generator: &GeneratorParams, items: &[EvalItem]) -> Result<EvalMetrics> {
    let rows: Vec<(f64, bool)> = items
        .par_iter()
        .map(|it| {
            let (tf, _) = teacher_forcing_loss(generator, &it.context, &it.gold)?;
            let (_, gold) = generator.gen_logprob(&it.context, &it.gold)?;
            let mut wins = true;
            for p in &it.pseudo {
                if generator.gen_logprob(&it.context, p)?.1 >= gold {
                    wins = false;
                }
            }
            Ok((tf, wins))
        })
        .collect::<Result<_>>()?;
    let n = rows.len().max(1) as f64;
    Ok(EvalMetrics {
        examples: rows.len(),
        mean_tf: rows.iter().map(|r| r.0).sum::<f64>() / n,
        ranking_accuracy: rows.iter().filter(|r| r.1).count() as f64 / n,
        mean_pseudo: items.iter().map(|i| i.pseudo.len()).sum::<usize>() as f64 / n,
    })
}
