//! Causal discovery between time series of coupled dynamical systems.
//!
//! Tangent space causal inference (TSCI) compares the vector field of one
//! shadow manifold with the pushforward of the other's through a cross map;
//! convergent cross mapping (CCM) measures how well the cross map predicts
//! points. Benchmark systems, baselines (Granger, KSG mutual information) and
//! an experiment harness are included.

// `!(a > b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod ccm;
pub mod crossmap;
pub mod derivatives;
pub mod embedding;
pub mod error;
pub mod harness;
pub mod neighbors;
pub mod seeds;
pub mod systems;
pub mod tsci;

pub use embedding::{delay_embed, Embedding, EmbeddingParams, TimeSeries};
pub use error::{Error, Result};
pub use tsci::{tsci_bidirectional, PipelineConfig, ScoreResult};
