use std::fmt;
use std::str::FromStr;

use super::MarketConfig;
use crate::error::{Error, Result};

/// The four quanto call payoffs, all settled in domestic currency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PayoffKind {
    /// F1: `max(H·X − K_d, 0)`, foreign stock struck in domestic currency.
    DomesticStrike,
    /// F2: `H·max(X − K_f, 0)`, converted at the floating rate.
    FloatingRate,
    /// F3: `H_fix·max(X − K_f, 0)`, converted at a fixed rate.
    FixedRate,
    /// F4: `X·max(H − K_H, 0)`, stock-linked FX call.
    StockLinkedFx,
}

impl PayoffKind {
    pub const ALL: [PayoffKind; 4] = [
        PayoffKind::DomesticStrike,
        PayoffKind::FloatingRate,
        PayoffKind::FixedRate,
        PayoffKind::StockLinkedFx,
    ];

    /// True when only the asset path affects the payoff.
    pub fn asset_only(self) -> bool {
        matches!(self, PayoffKind::FixedRate)
    }
}

impl fmt::Display for PayoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PayoffKind::DomesticStrike => "f1",
            PayoffKind::FloatingRate => "f2",
            PayoffKind::FixedRate => "f3",
            PayoffKind::StockLinkedFx => "f4",
        };
        f.write_str(s)
    }
}

impl FromStr for PayoffKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f1" => Ok(PayoffKind::DomesticStrike),
            "f2" => Ok(PayoffKind::FloatingRate),
            "f3" => Ok(PayoffKind::FixedRate),
            "f4" => Ok(PayoffKind::StockLinkedFx),
            other => Err(Error::Domain(format!("unknown payoff kind '{other}'"))),
        }
    }
}

/// Payoff in domestic currency for terminal levels `x` (asset) and `h` (FX).
pub fn payoff(kind: PayoffKind, x: f64, h: f64, strike: f64, market: &MarketConfig) -> Result<f64> {
    if strike < 0.0 || strike.is_nan() {
        return Err(Error::Domain(format!("strike must be non-negative, got {strike}")));
    }
    Ok(payoff_unchecked(kind, x, h, strike, market.h_fix()))
}

#[inline]
pub(crate) fn payoff_unchecked(kind: PayoffKind, x: f64, h: f64, strike: f64, h_fix: f64) -> f64 {
    match kind {
        PayoffKind::DomesticStrike => (h * x - strike).max(0.0),
        PayoffKind::FloatingRate => h * (x - strike).max(0.0),
        PayoffKind::FixedRate => h_fix * (x - strike).max(0.0),
        PayoffKind::StockLinkedFx => x * (h - strike).max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn market() -> MarketConfig {
        MarketConfig::new(0.0, 0.0, 0.9, 252).unwrap()
    }

    #[test]
    fn worked_values() {
        let m = market();
        let v = payoff(PayoffKind::DomesticStrike, 100.0, 1.1, 100.0, &m).unwrap();
        assert!((v - 10.0).abs() < 1e-12);
        assert_eq!(payoff(PayoffKind::FixedRate, 50.0, 1.3, 50.0, &m).unwrap(), 0.0);
        assert_eq!(payoff(PayoffKind::StockLinkedFx, 80.0, 1.25, 0.0, &m).unwrap(), 100.0);
        assert_eq!(payoff(PayoffKind::FloatingRate, 110.0, 2.0, 100.0, &m).unwrap(), 20.0);
    }

    #[test]
    fn negative_strike_rejected() {
        assert!(payoff(PayoffKind::FixedRate, 1.0, 1.0, -0.1, &market()).is_err());
    }

    #[test]
    fn kind_round_trips_through_text() {
        for k in PayoffKind::ALL {
            assert_eq!(k.to_string().parse::<PayoffKind>().unwrap(), k);
        }
    }

    proptest! {
        #[test]
        fn non_increasing_and_convex_in_strike(
            x in 0.1f64..200.0, h in 0.1f64..3.0, k in 0.0f64..200.0, dk in 0.01f64..20.0
        ) {
            let m = market();
            for kind in PayoffKind::ALL {
                let a = payoff(kind, x, h, k, &m).unwrap();
                let b = payoff(kind, x, h, k + dk, &m).unwrap();
                let c = payoff(kind, x, h, k + 2.0 * dk, &m).unwrap();
                prop_assert!(b <= a + 1e-12);
                prop_assert!(a + c - 2.0 * b >= -1e-9 * (1.0 + a.abs()));
            }
        }
    }
}
