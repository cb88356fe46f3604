//! Harness for measuring the gap between what a language model encodes in its
//! last hidden layer (linear probes over word vectors) and what it answers when
//! asked through a prompt (candidate-token scoring at the answer slot).
//!
//! The crate consumes benchmark files and tensor archives produced by an
//! extraction sidecar; it never runs a model itself.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod probe;
pub mod query;
pub mod report;
pub mod tensorstore;

pub use error::{Error, Result};
