//! Logic-indicator corpus mining and adversarial generator/verifier
//! training over analytic reference models.

pub mod candidates;
pub mod cli;
pub mod error;
pub mod lexicon;
pub mod losses;
pub mod miner;
pub mod modelkit;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
