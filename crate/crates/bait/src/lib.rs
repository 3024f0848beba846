//! File formats, dataset loading and batch commands for the `bait-core`
//! stance detector.
//!
//! - [`store`]: the binary embedding store.
//! - [`checkpoint`]: model parameters in the same framing.
//! - [`corpus`]: FNC-1 and ARC CSVs and the headline id sidecar.
//! - [`lexicon`]: CoNLL-U parses, WordNet verb files and the LM corpus.
//! - [`dataset`]: joining samples with stores.
//! - [`config`] and [`commands`]: what the `bait` binary runs.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod dataset;
mod error;
pub mod lexicon;
pub mod store;

pub use error::{BaitError, Result, StoreError};
