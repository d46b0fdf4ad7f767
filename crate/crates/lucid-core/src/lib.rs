//! Canonical-set auditing for tabular binary classifiers.
//!
//! The pipeline trains a small dense network on a tabular dataset, then runs
//! gradient descent on the *input layer* of the frozen model toward a
//! preferred output. Repeating that from many random starting vectors yields
//! a canonical set: the inputs the model most wants to see. Comparing the
//! distribution of each protected feature inside that set against its
//! uniform initialization exposes which features the model's internal logic
//! leans on, independently of any benchmark dataset. The crate also computes
//! the classic output-based group metrics (positivity rate, true positive
//! rate) on a held-out split so the two views can be cross-referenced.
//!
//! Modules:
//! - [`nn`]: dense network numerics (forward, loss, gradients w.r.t.
//!   parameters and inputs).
//! - [`data`]: CSV ingestion, feature schema, encoding, splitting, and the
//!   synthetic dataset generators.
//! - [`trainer`]: mini-batch gradient-descent training and evaluation.
//! - [`inverse`]: canonical-set generation (the input-descent core).
//! - [`analysis`]: distribution drift, chi-square uniformity tests, group
//!   metrics, and the cross-method comparison.
//! - [`report`] / [`pipeline`]: run configs, the audit report with its
//!   published JSON schema, and the train/audit/sweep orchestration.

pub mod analysis;
pub mod data;
pub mod error;
pub mod inverse;
pub mod nn;
pub mod pipeline;
pub mod report;
pub mod trainer;

pub use error::{LucidError, Result};
