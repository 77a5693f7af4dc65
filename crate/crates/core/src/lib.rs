//! Exhaustive supervised rule mining and rule-derived local features.
//!
//! The pipeline is: load and impute a [`data::Dataset`], quantize it with a
//! [`data::BinMap`], mine class-over-concentrated rules with
//! [`rulemine::mine`] (or the tree / association alternatives in
//! [`altminers`]), turn the rules into a local feature matrix with
//! [`features::transform`], and train one of the classifiers in [`learn`].
//! [`eval`] wraps all of this into the repeated split benchmark.

pub mod altminers;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod learn;
pub mod matrix;
pub mod rng;
pub mod rulemine;

pub use error::{Error, Result};
