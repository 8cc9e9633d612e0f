//! Recommends bug reports from one app to a same-category app by matching
//! them against the target app's user reviews.
//!
//! Pipeline: [`corpus`] ingestion, [`textprep`] cleaning, [`embedding`]
//! vectors, [`matcher`] ranking and gating, [`metrics`] evaluation.

pub mod corpus;
pub mod embedding;
mod error;
pub mod matcher;
pub mod metrics;
pub mod textprep;

pub use error::{Error, Result};
