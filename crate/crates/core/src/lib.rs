//! Hierarchical news stance detection over frozen sentence embeddings.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numerical piece:
//! a small dense-network substrate with reverse-mode gradients, the stage-1
//! RelatedNet and stage-2 TopKNet / AgreemNet classifiers, the hierarchical
//! predictor and its metrics, the class-imbalance augmentations, and a
//! Gaussian-process hyperparameter search. File formats, IO and the command
//! line live in the `bait` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod augment;
pub mod data;
mod error;
pub mod hpo;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod relatednet;
pub mod stage2;
pub mod train;

pub use error::{Error, Result};
