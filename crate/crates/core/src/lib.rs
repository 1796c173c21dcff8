//! Grammar-guided evolution of feedforward neural networks for binary
//! classification.
//!
//! Networks are described by strings derived from a context-free grammar.
//! Genotypes hold one list of expansion choices per nonterminal and grow
//! on demand during mapping; connection rules are generated per
//! individual from its layer structure.

pub mod cli;
pub mod config;
pub mod data;
pub mod engine;
pub mod error;
pub mod genotype;
pub mod grammar;
pub mod metrics;
pub mod network;
pub mod stats;
pub mod variation;

pub use error::{Error, Result};
