use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::model::PriceSeries;

/// Header names of the date and price columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesColumns {
    pub date: String,
    pub price: String,
}

impl Default for SeriesColumns {
    fn default() -> Self {
        Self { date: "date".into(), price: "price".into() }
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Parse { row: 1, message: format!("missing column '{name}'") })
}

/// Reads a `date,price` CSV with a header row.
///
/// Rows may appear in any order and are sorted by date. Errors report the
/// 1-based line number in the file (the header is line 1).
pub fn load_price_series(path: impl AsRef<Path>, columns: &SeriesColumns) -> Result<PriceSeries> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    let date_col = column_index(&headers, &columns.date)?;
    let price_col = column_index(&headers, &columns.price)?;

    let mut rows: Vec<(NaiveDate, f64, usize)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(i).unwrap_or("");
        let date = NaiveDate::parse_from_str(field(date_col), "%Y-%m-%d")
            .map_err(|e| Error::Parse { row: line, message: format!("bad date '{}': {e}", field(date_col)) })?;
        let price: f64 = field(price_col)
            .parse()
            .map_err(|_| Error::Parse { row: line, message: format!("non-numeric price '{}'", field(price_col)) })?;
        if !(price > 0.0 && price.is_finite()) {
            return Err(Error::Parse { row: line, message: format!("non-positive price {price} on {date}") });
        }
        rows.push((date, price, line));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateDate(w[1].0));
    }
    let (dates, prices) = rows.into_iter().map(|(d, p, _)| (d, p)).unzip();
    PriceSeries::new(dates, prices)
}

/// Restricts both series to their common dates.
pub fn align_series(a: &PriceSeries, b: &PriceSeries) -> Result<(PriceSeries, PriceSeries)> {
    let in_b: BTreeSet<NaiveDate> = b.dates().iter().copied().collect();
    let common: BTreeSet<NaiveDate> = a.dates().iter().copied().filter(|d| in_b.contains(d)).collect();
    if common.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok((a.filter_dates(|d| common.contains(d)), b.filter_dates(|d| common.contains(d))))
}
