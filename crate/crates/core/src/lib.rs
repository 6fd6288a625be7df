//! Bayesian estimation and posterior-predictive pricing of quanto options
//! when the foreign asset and the exchange rate follow correlated geometric
//! Brownian motions.

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod inference;
pub mod model;
pub mod pricing;

pub use error::{Error, Result};
