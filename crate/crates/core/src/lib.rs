//! Loss-adaptive capacity expansion for continual learning.
//!
//! A small character-level classifier grows its projection layer one
//! dimension at a time whenever its own training loss spikes relative to a
//! rolling baseline. The crate contains the numeric kernel, the expandable
//! model, the detector, a synthetic multi-domain corpus, the training loop
//! with its metrics, and an activation clustering toolkit.

pub mod cli;
pub mod clustering;
pub mod detector;
pub mod domains;
pub mod error;
pub mod ingest;
pub mod model;
pub mod nn;
pub mod plot;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
