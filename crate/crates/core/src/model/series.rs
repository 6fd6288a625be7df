use chrono::{Days, NaiveDate};

use crate::error::{Error, Result};

/// Dated, strictly positive closing levels with strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self> {
        if dates.len() != prices.len() {
            return Err(Error::Domain(format!(
                "{} dates but {} prices",
                dates.len(),
                prices.len()
            )));
        }
        for (date, &price) in dates.iter().zip(&prices) {
            if !(price > 0.0 && price.is_finite()) {
                return Err(Error::NonPositivePrice { date: *date, price });
            }
        }
        for pair in dates.windows(2) {
            if pair[1] == pair[0] {
                return Err(Error::DuplicateDate(pair[1]));
            }
            if pair[1] < pair[0] {
                return Err(Error::Domain(format!("dates not increasing at {}", pair[1])));
            }
        }
        Ok(Self { dates, prices })
    }

    /// Consecutive calendar days starting 2000-01-01; for synthetic data.
    pub fn from_levels(prices: &[f64]) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        let dates = (0..prices.len())
            .map(|i| start + Days::new(i as u64))
            .collect();
        Self::new(dates, prices.to_vec())
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn last(&self) -> Option<(NaiveDate, f64)> {
        Some((*self.dates.last()?, *self.prices.last()?))
    }

    /// Keeps only the entries whose date satisfies `keep`.
    pub(crate) fn filter_dates(&self, mut keep: impl FnMut(&NaiveDate) -> bool) -> Self {
        let (dates, prices) = self
            .dates
            .iter()
            .zip(&self.prices)
            .filter(|(d, _)| keep(d))
            .map(|(d, p)| (*d, *p))
            .unzip();
        Self { dates, prices }
    }
}

/// `ln(P_t / P_{t-1})` for consecutive levels.
pub fn log_returns(prices: &PriceSeries) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: prices.len() });
    }
    Ok(prices
        .prices
        .windows(2)
        .map(|w| (w[1] / w[0]).ln())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_has_zero_returns() {
        let s = PriceSeries::from_levels(&[100.0, 100.0, 100.0]).unwrap();
        assert_eq!(log_returns(&s).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn unit_log_return() {
        let s = PriceSeries::from_levels(&[1.0, std::f64::consts::E]).unwrap();
        let r = log_returns(&s).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_point_is_insufficient() {
        let s = PriceSeries::from_levels(&[1.0]).unwrap();
        assert!(matches!(
            log_returns(&s),
            Err(Error::InsufficientData { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn non_positive_price_names_date() {
        let err = PriceSeries::from_levels(&[1.0, 2.0, 0.0]).unwrap_err();
        match err {
            Error::NonPositivePrice { date, price } => {
                assert_eq!(date, NaiveDate::from_ymd_opt(2000, 1, 3).unwrap());
                assert_eq!(price, 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_dates_rejected() {
        let d = NaiveDate::from_ymd_opt(2020, 5, 1).unwrap();
        let err = PriceSeries::new(vec![d, d], vec![1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::DuplicateDate(x) if x == d));
    }
}
