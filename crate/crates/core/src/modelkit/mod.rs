//! Tokenization, vocabulary and the reference generator/verifier models.

pub mod beam;
pub mod checkpoint;
pub mod generator;
pub mod tokenize;
pub mod verifier;
pub mod vocab;

pub use beam::{sample_diverse, BeamConfig};
pub use checkpoint::Checkpoint;
pub use generator::GeneratorParams;
pub use verifier::VerifierParams;
pub use vocab::{Context, Vocabulary, EOS, MASK, UNK};

/// Autoregressive next-token model usable by the beam decoder.
pub trait SequenceModel {
    /// Per-context state computed once before decoding.
    type Cache;

    fn vocab_size(&self) -> usize;
    fn eos(&self) -> u32;
    fn prepare(&self, context: &Context) -> Self::Cache;
    /// Log-probabilities of each next token after `prefix`.
    fn next_log_probs(&self, cache: &Self::Cache, prefix: &[u32]) -> Vec<f64>;
}
