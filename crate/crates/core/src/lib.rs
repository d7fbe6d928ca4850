//! Decoding and calibration diagnostics for conditional sequence models.
//!
//! The crate pairs enumerable and count-based sequence models with beam
//! search, ancestral sampling, BLEU variants and set-level calibration
//! analyses, and drives synthetic experiments on copy noise and intrinsic
//! uncertainty.

pub mod calibration;
pub mod corpus;
mod error;
pub mod experiments;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod search;
pub mod table;

pub use error::{Error, Result};
