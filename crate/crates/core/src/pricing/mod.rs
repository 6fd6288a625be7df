//! Option pricing: posterior-predictive Monte Carlo, the analytic fixed-rate
//! quanto price and Black-Scholes helpers used as baselines.

pub mod black_scholes;
pub mod predictive;

pub use black_scholes::{bs_call, closed_form_v3, implied_vol};
pub use predictive::{
    path_rng, price_predictive, relative_pricing_error, PricingMode, PricingRequest, PricingResult,
    SequentialUpdate,
};
