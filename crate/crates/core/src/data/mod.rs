//! CSV ingestion, calendar alignment and option-chain preparation.

mod options;
mod series;

pub use options::{
    construct_quanto, filter_options, load_option_chain, moneyness_bucket, write_rejections, FilterOutcome,
    Moneyness, OptionChain, OptionQuote, QuantoQuote, RejectReason, Rejection,
};
pub use series::{align_series, load_price_series, SeriesColumns};
