use std::fmt;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::model::MarketConfig;

/// A quoted call on the foreign asset; `maturity_days` counts model periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionQuote {
    pub quote_date: NaiveDate,
    pub strike: f64,
    pub maturity_days: u32,
    pub market_price: f64,
    pub underlying_spot: f64,
}

impl OptionQuote {
    pub fn new(quote_date: NaiveDate, strike: f64, maturity_days: u32, market_price: f64, underlying_spot: f64) -> Result<Self> {
        let q = Self { quote_date, strike, maturity_days, market_price, underlying_spot };
        match q.violation() {
            Some(reason) => Err(Error::Domain(format!("invalid quote: {reason}"))),
            None => Ok(q),
        }
    }

    fn violation(&self) -> Option<RejectReason> {
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            Some(RejectReason::NonPositiveStrike)
        } else if self.maturity_days == 0 {
            Some(RejectReason::InvalidMaturity)
        } else if !(self.market_price >= 0.0 && self.market_price.is_finite()) {
            Some(RejectReason::NegativePrice)
        } else if !(self.underlying_spot > 0.0 && self.underlying_spot.is_finite()) {
            Some(RejectReason::NonPositiveSpot)
        } else {
            None
        }
    }
}

/// Why a row or quote was excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    Parse,
    NonPositiveStrike,
    InvalidMaturity,
    NegativePrice,
    NonPositiveSpot,
    BelowLowerBound,
    AboveUpperBound,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::Parse => "PARSE",
            RejectReason::NonPositiveStrike => "NON_POSITIVE_STRIKE",
            RejectReason::InvalidMaturity => "INVALID_MATURITY",
            RejectReason::NegativePrice => "NEGATIVE_PRICE",
            RejectReason::NonPositiveSpot => "NON_POSITIVE_SPOT",
            RejectReason::BelowLowerBound => "BELOW_LOWER_BOUND",
            RejectReason::AboveUpperBound => "ABOVE_UPPER_BOUND",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A row excluded while loading or filtering; `row` is the file line
/// (header = 1) or, for filtering, the position in the input slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub row: usize,
    pub reason: RejectReason,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptionChain {
    pub quotes: Vec<OptionQuote>,
    /// File line of each entry of `quotes`.
    pub lines: Vec<usize>,
    pub rejected: Vec<Rejection>,
}

const CHAIN_COLUMNS: [&str; 5] = ["quote_date", "strike", "maturity_days", "price", "spot"];

/// Reads a `quote_date,strike,maturity_days,price,spot` CSV. Malformed or
/// invalid rows are skipped and listed in `rejected`.
pub fn load_option_chain(path: impl AsRef<Path>) -> Result<OptionChain> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(CHAIN_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse { row: 1, message: format!("missing column '{name}'") })?;
    }
    let mut chain = OptionChain::default();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(idx[i]).unwrap_or("");
        let parsed = (|| -> std::result::Result<OptionQuote, String> {
            let date = NaiveDate::parse_from_str(field(0), "%Y-%m-%d").map_err(|e| format!("quote_date '{}': {e}", field(0)))?;
            let num = |i: usize| field(i).parse::<f64>().map_err(|_| format!("{} '{}' is not a number", CHAIN_COLUMNS[i], field(i)));
            let maturity = field(2).parse::<u32>().map_err(|_| format!("maturity_days '{}' is not a whole number", field(2)))?;
            Ok(OptionQuote { quote_date: date, strike: num(1)?, maturity_days: maturity, market_price: num(3)?, underlying_spot: num(4)? })
        })();
        match parsed {
            Err(detail) => chain.rejected.push(Rejection { row: line, reason: RejectReason::Parse, detail }),
            Ok(q) => match q.violation() {
                Some(reason) => chain.rejected.push(Rejection { row: line, reason, detail: format!("{q:?}") }),
                None => {
                    chain.quotes.push(q);
                    chain.lines.push(line);
                }
            },
        }
    }
    Ok(chain)
}

/// Writes `row,reason,detail` for each rejection.
pub fn write_rejections(path: impl AsRef<Path>, rejected: &[Rejection]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["row", "reason", "detail"])?;
    for r in rejected {
        w.write_record([r.row.to_string(), r.reason.code().to_string(), r.detail.clone()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterOutcome {
    pub retained: Vec<OptionQuote>,
    pub dropped: Vec<Rejection>,
}

/// Keeps quotes inside the European no-arbitrage band
/// `max(S − K·e^{−r_d τ}, 0) ≤ C ≤ S`, using each quote's own spot.
pub fn filter_options(quotes: &[OptionQuote], market: &MarketConfig) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for (i, q) in quotes.iter().enumerate() {
        let lower = (q.underlying_spot - q.strike * (-market.r_d() * f64::from(q.maturity_days)).exp()).max(0.0);
        let reason = if let Some(r) = q.violation() {
            Some(r)
        } else if q.market_price < lower {
            Some(RejectReason::BelowLowerBound)
        } else if q.market_price > q.underlying_spot {
            Some(RejectReason::AboveUpperBound)
        } else {
            None
        };
        match reason {
            None => out.retained.push(*q),
            Some(reason) => out.dropped.push(Rejection {
                row: i,
                reason,
                detail: format!("price {} outside [{lower}, {}]", q.market_price, q.underlying_spot),
            }),
        }
    }
    out
}

/// A call quote converted into the fixed-rate quanto price
/// `e^{−r_d τ}·H_fix·C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantoQuote {
    pub quote: OptionQuote,
    pub h_fix: f64,
    pub discount: f64,
    pub quanto_price: f64,
}

pub fn construct_quanto(quote: &OptionQuote, market: &MarketConfig, h_fix: f64) -> Result<QuantoQuote> {
    if !(h_fix > 0.0 && h_fix.is_finite()) {
        return Err(Error::Domain(format!("h_fix must be positive, got {h_fix}")));
    }
    let discount = (-market.r_d() * f64::from(quote.maturity_days)).exp();
    Ok(QuantoQuote { quote: *quote, h_fix, discount, quanto_price: h_fix * (discount * quote.market_price) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Moneyness {
    Itm,
    Atm,
    Otm,
}

impl Moneyness {
    pub const ALL: [Moneyness; 3] = [Moneyness::Itm, Moneyness::Atm, Moneyness::Otm];
}

impl fmt::Display for Moneyness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Moneyness::Itm => "ITM",
            Moneyness::Atm => "ATM",
            Moneyness::Otm => "OTM",
        })
    }
}

/// `K/X < 0.98` in the money, `K/X > 1.02` out of the money, otherwise at
/// the money (both boundaries included).
pub fn moneyness_bucket(strike: f64, spot: f64) -> Moneyness {
    let ratio = strike / spot;
    if ratio < 0.98 {
        Moneyness::Itm
    } else if ratio <= 1.02 {
        Moneyness::Atm
    } else {
        Moneyness::Otm
    }
}
