//! Template-generated logic corpus with a small closed vocabulary.
//!
//! Each document strings together syllogisms, causal explanations and
//! filler sentences. Statements after indicators are predictable from the
//! surrounding premises, so a context-aware generator can learn them.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lexicon::Lexicon;
use crate::miner::{mine_documents, Document, GeometricContextSampler, MinerConfig, TrainingExample};

const NAMES: &[&str] = &[
    "anna", "ben", "clara", "david", "ella", "frank", "grace", "henry", "iris", "jack", "kate",
    "leo", "mia", "noah", "olga", "paul", "rosa", "sam", "tina", "victor",
];

/// (singular, plural)
const KINDS: &[(&str, &str)] = &[
    ("bird", "birds"),
    ("cat", "cats"),
    ("dog", "dogs"),
    ("farmer", "farmers"),
    ("student", "students"),
    ("poet", "poets"),
    ("doctor", "doctors"),
    ("sailor", "sailors"),
    ("baker", "bakers"),
    ("painter", "painters"),
];

const TRAITS: &[&str] = &[
    "brave", "honest", "careful", "patient", "curious", "gentle", "loyal", "calm", "clever",
    "polite", "cheerful", "modest",
];

const PLACES: &[&str] = &[
    "village", "garden", "harbor", "market", "forest", "school", "library", "valley",
];

const WEATHER: &[&str] = &["rained", "snowed", "stormed"];

const ACTIVITIES: &[&str] = &[
    "read old books",
    "cooked warm soup",
    "painted the fence",
    "fixed the roof",
    "played quiet games",
    "wrote long letters",
];

const CONCLUSION_WORDS: &[&str] = &["therefore", "thus", "hence", "consequently"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub documents: usize,
    /// Reasoning passages per document.
    pub passages: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            documents: 700,
            passages: 3,
            seed: 0,
        }
    }
}

fn cap(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("non-empty template list")
}

fn passage(rng: &mut ChaCha8Rng) -> String {
    let name = cap(pick(rng, NAMES));
    let (kind, kinds) = *pick(rng, KINDS);
    let t = pick(rng, TRAITS);
    let place = pick(rng, PLACES);
    match rng.random_range(0..5) {
        0 => {
            let c = cap(pick(rng, CONCLUSION_WORDS));
            format!("All {kinds} are {t}. {name} is a {kind}. {c} {name} is a {t} {kind} too.")
        }
        1 => {
            let w = pick(rng, WEATHER);
            let a = pick(rng, ACTIVITIES);
            format!(
                "It {w} in the {place} all day, so the {kinds} stayed inside and {a}. \
                 {name} {a} with them."
            )
        }
        2 => format!(
            "{name} is known as a {t} {kind}. People trust {name} because {name} is {t} \
             with every {kind} in the {place}."
        ),
        3 => {
            let (other, others) = *pick(rng, KINDS);
            format!(
                "Every {kind} in the {place} is {t}. {cap_n} met {name} in the {place}. \
                 Since {name} is a {kind} from the {place}, the {others} say {name} is {t}.",
                cap_n = cap(other),
            )
        }
        _ => format!(
            "{name} helped the {kinds} in the {place}. As a result the {kinds} in the {place} \
             became {t} and calm."
        ),
    }
}

fn filler(rng: &mut ChaCha8Rng) -> String {
    let name = cap(pick(rng, NAMES));
    let (_, kinds) = *pick(rng, KINDS);
    let place = pick(rng, PLACES);
    match rng.random_range(0..3) {
        0 => format!("{name} lives near the {place}."),
        1 => format!("The {kinds} walk to the {place} in the morning."),
        _ => format!("{name} likes the {place}."),
    }
}

pub fn synthetic_documents(cfg: &SyntheticConfig) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.documents)
        .map(|d| {
            let mut parts = Vec::new();
            for _ in 0..cfg.passages {
                if rng.random_bool(0.5) {
                    parts.push(filler(&mut rng));
                }
                parts.push(passage(&mut rng));
            }
            Document {
                doc_id: format!("synth-{d:05}"),
                text: parts.join(" "),
            }
        })
        .collect()
}

/// Mines [`synthetic_documents`] with the built-in lexicon.
pub fn synthetic_examples(cfg: &SyntheticConfig) -> Result<Vec<TrainingExample>> {
    let miner = MinerConfig {
        sampler: GeometricContextSampler {
            seed: cfg.seed,
            ..GeometricContextSampler::default()
        },
        ..MinerConfig::default()
    };
    mine_documents(&synthetic_documents(cfg), Some(&Lexicon::builtin()), &miner)
}
