use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TrainingExample;

/// Corpus statistics. Examples mined without an indicator are counted under
/// the `none` class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub total_examples: u64,
    pub per_class_counts: BTreeMap<String, u64>,
    pub per_indicator_counts: BTreeMap<String, u64>,
    pub statement_length_histogram: BTreeMap<usize, u64>,
    pub context_length_histogram: BTreeMap<usize, u64>,
}

impl Default for StatsReport {
    fn default() -> Self {
        let per_class_counts = [("conclusion".to_string(), 0), ("premise".to_string(), 0)]
            .into_iter()
            .collect();
        Self {
            total_examples: 0,
            per_class_counts,
            per_indicator_counts: BTreeMap::new(),
            statement_length_histogram: BTreeMap::new(),
            context_length_histogram: BTreeMap::new(),
        }
    }
}

fn token_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Single-pass accumulator.
#[derive(Debug, Default)]
pub struct StatsAccumulator {
    report: StatsReport,
}

impl StatsAccumulator {
    pub fn push(&mut self, e: &TrainingExample) {
        let r = &mut self.report;
        r.total_examples += 1;
        let class = e.indicator_class.map_or("none", |c| c.as_str());
        *r.per_class_counts.entry(class.to_string()).or_default() += 1;
        if let Some(ind) = &e.indicator {
            *r.per_indicator_counts.entry(ind.clone()).or_default() += 1;
        }
        *r.statement_length_histogram
            .entry(token_count(&e.statement))
            .or_default() += 1;
        let ctx = e.context_pre.iter().map(|s| token_count(s)).sum::<usize>()
            + token_count(&e.masked_prefix)
            + token_count(&e.masked_suffix)
            + e.context_post.iter().map(|s| token_count(s)).sum::<usize>();
        *r.context_length_histogram.entry(ctx).or_default() += 1;
    }

    pub fn finish(self) -> StatsReport {
        self.report
    }
}

pub fn corpus_stats<'a>(examples: impl IntoIterator<Item = &'a TrainingExample>) -> StatsReport {
    let mut acc = StatsAccumulator::default();
    for e in examples {
        acc.push(e);
    }
    acc.finish()
}

impl StatsReport {
    /// Plain-text histogram rendering.
    pub fn render_text(&self) -> String {
        let mut out = format!("total examples: {}\n", self.total_examples);
        for (class, n) in &self.per_class_counts {
            out.push_str(&format!("  {class:<12} {n}\n"));
        }
        for (title, hist) in [
            ("statement length", &self.statement_length_histogram),
            ("context length", &self.context_length_histogram),
        ] {
            out.push_str(&format!("{title} (tokens):\n"));
            let max = hist.values().copied().max().unwrap_or(0).max(1);
            for (len, n) in hist {
                let bar = "#".repeat(((n * 40).div_ceil(max)) as usize);
                out.push_str(&format!("  {len:>4} {n:>8} {bar}\n"));
            }
        }
        out
    }
}
