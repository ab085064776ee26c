//! Choosing how many synthetic minority samples to add to an imbalanced
//! training set.
//!
//! The balance coefficient `alpha = n_plus / n_minus` is swept over a grid.
//! At each point the table is over-sampled ([`synth`]), per-feature class
//! separation scores and random-forest importance weights are computed and
//! combined into a global score, and that score is multiplied by two logistic
//! envelopes that model the bias toward either class ([`score`]). The grid
//! point maximizing the product is the recommended coefficient.
//!
//! Supporting modules extract EHG features from raw recordings
//! ([`sigfeat`]), train a set of simple classifiers ([`learn`]) and evaluate
//! them under repeated stratified hold-out ([`eval`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod fixture;
pub mod forest;
pub mod ingest;
pub mod io;
pub mod learn;
pub mod score;
pub mod seed;
pub mod sigfeat;
pub mod synth;
pub mod tree;

pub use error::{Error, Result};
pub use ingest::{FeatureRow, FeatureTable, Label, SignalRecord};
