//! Profit-aware crop advisory engine.
//!
//! A random forest scores agronomic suitability, an additive trend plus
//! seasonality model forecasts market prices, and a weighted composite ranks
//! candidate crops. Everything a service needs is packed into a versioned
//! JSON bundle.

pub mod advisory;
pub mod baselines;
pub mod benchmark;
pub mod bundle;
pub mod classifier;
pub mod domain;
pub mod error;
pub mod fixtures;
pub mod forecast;
pub mod forest;
pub mod ingest;
pub mod metrics;
pub mod synth;
pub mod tree;

pub use classifier::Classifier;
pub use error::{FieldError, KisanError, Result};
