//! The correlated geometric Brownian motion model for a foreign asset `X`
//! and the exchange rate `H` (domestic currency per unit of foreign currency).
//!
//! All quantities are expressed per trading day. Annualized inputs are
//! converted with [`MarketConfig::from_annual`].

mod density;
mod panel;
mod payoff;
mod series;

pub use density::{physical_logpdf, risk_neutral_logpdf, risk_neutral_means, simulate_return_pair};
pub use panel::{ReturnPanel, SufficientStats};
pub use payoff::{payoff, PayoffKind};
pub(crate) use payoff::payoff_unchecked;
pub use series::{log_returns, PriceSeries};

use crate::error::{Error, Result};

/// One of the three estimated parameters, in Gibbs update order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parameter {
    SigmaX,
    SigmaH,
    Rho,
}

impl Parameter {
    pub const ALL: [Parameter; 3] = [Parameter::SigmaX, Parameter::SigmaH, Parameter::Rho];

    pub fn index(self) -> usize {
        match self {
            Parameter::SigmaX => 0,
            Parameter::SigmaH => 1,
            Parameter::Rho => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Parameter::SigmaX => "sigma_x",
            Parameter::SigmaH => "sigma_h",
            Parameter::Rho => "rho",
        }
    }

    /// Whether `value` lies in the open support of this parameter.
    pub fn in_support(self, value: f64) -> bool {
        match self {
            Parameter::SigmaX | Parameter::SigmaH => value > 0.0 && value.is_finite(),
            Parameter::Rho => value > -1.0 && value < 1.0,
        }
    }
}

/// Volatilities and correlation `(σx, σh, ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theta {
    sigma_x: f64,
    sigma_h: f64,
    rho: f64,
}

impl Theta {
    pub fn new(sigma_x: f64, sigma_h: f64, rho: f64) -> Result<Self> {
        if !Parameter::SigmaX.in_support(sigma_x) {
            return Err(Error::Domain(format!("sigma_x must be positive, got {sigma_x}")));
        }
        if !Parameter::SigmaH.in_support(sigma_h) {
            return Err(Error::Domain(format!("sigma_h must be positive, got {sigma_h}")));
        }
        if !Parameter::Rho.in_support(rho) {
            return Err(Error::Domain(format!("rho must lie in (-1, 1), got {rho}")));
        }
        Ok(Self { sigma_x, sigma_h, rho })
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    pub fn sigma_h(&self) -> f64 {
        self.sigma_h
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn get(&self, parameter: Parameter) -> f64 {
        match parameter {
            Parameter::SigmaX => self.sigma_x,
            Parameter::SigmaH => self.sigma_h,
            Parameter::Rho => self.rho,
        }
    }

    /// Copy with one coordinate replaced; `None` if the value leaves the support.
    pub fn with(&self, parameter: Parameter, value: f64) -> Option<Self> {
        if !parameter.in_support(value) {
            return None;
        }
        let mut next = *self;
        match parameter {
            Parameter::SigmaX => next.sigma_x = value,
            Parameter::SigmaH => next.sigma_h = value,
            Parameter::Rho => next.rho = value,
        }
        Some(next)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.sigma_x, self.sigma_h, self.rho]
    }
}

/// Physical-measure drifts `(μx, μh)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drift {
    pub mu_x: f64,
    pub mu_h: f64,
}

impl Drift {
    pub fn new(mu_x: f64, mu_h: f64) -> Result<Self> {
        if !mu_x.is_finite() || !mu_h.is_finite() {
            return Err(Error::Domain("drifts must be finite".into()));
        }
        Ok(Self { mu_x, mu_h })
    }
}

/// Per-period rates and contract constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketConfig {
    r_d: f64,
    r_f: f64,
    h_fix: f64,
    periods_per_year: u32,
}

impl MarketConfig {
    /// Rates are per period (trading day).
    pub fn new(r_d: f64, r_f: f64, h_fix: f64, periods_per_year: u32) -> Result<Self> {
        if !r_d.is_finite() || !r_f.is_finite() {
            return Err(Error::Domain("rates must be finite".into()));
        }
        if !(h_fix > 0.0 && h_fix.is_finite()) {
            return Err(Error::Domain(format!("h_fix must be positive, got {h_fix}")));
        }
        if periods_per_year == 0 {
            return Err(Error::Domain("periods_per_year must be positive".into()));
        }
        Ok(Self { r_d, r_f, h_fix, periods_per_year })
    }

    /// Builds from annualized rates, dividing by `periods_per_year`.
    pub fn from_annual(r_d_annual: f64, r_f_annual: f64, h_fix: f64, periods_per_year: u32) -> Result<Self> {
        if periods_per_year == 0 {
            return Err(Error::Domain("periods_per_year must be positive".into()));
        }
        let n = f64::from(periods_per_year);
        Self::new(r_d_annual / n, r_f_annual / n, h_fix, periods_per_year)
    }

    pub fn r_d(&self) -> f64 {
        self.r_d
    }

    pub fn r_f(&self) -> f64 {
        self.r_f
    }

    pub fn h_fix(&self) -> f64 {
        self.h_fix
    }

    pub fn periods_per_year(&self) -> u32 {
        self.periods_per_year
    }

    pub fn annualize_vol(&self, per_period: f64) -> f64 {
        per_period * f64::from(self.periods_per_year).sqrt()
    }

    pub fn per_period_vol(&self, annual: f64) -> f64 {
        annual / f64::from(self.periods_per_year).sqrt()
    }
}

/// Current levels `X_T` and `H_T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpotState {
    x0: f64,
    h0: f64,
}

impl SpotState {
    pub fn new(x0: f64, h0: f64) -> Result<Self> {
        if !(x0 > 0.0 && x0.is_finite()) || !(h0 > 0.0 && h0.is_finite()) {
            return Err(Error::Domain(format!("spot levels must be positive, got x0={x0}, h0={h0}")));
        }
        Ok(Self { x0, h0 })
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_rejects_out_of_support() {
        assert!(Theta::new(0.0, 0.1, 0.0).is_err());
        assert!(Theta::new(0.1, -0.1, 0.0).is_err());
        assert!(Theta::new(0.1, 0.1, 1.0).is_err());
        assert!(Theta::new(0.1, 0.1, -1.0).is_err());
        assert!(Theta::new(f64::NAN, 0.1, 0.0).is_err());
        assert!(Theta::new(0.1, 0.1, 0.999).is_ok());
    }

    #[test]
    fn theta_with_respects_support() {
        let t = Theta::new(0.01, 0.02, 0.3).unwrap();
        assert!(t.with(Parameter::Rho, 1.2).is_none());
        assert_eq!(t.with(Parameter::SigmaH, 0.5).unwrap().sigma_h(), 0.5);
    }

    #[test]
    fn annual_conversion() {
        let m = MarketConfig::from_annual(0.0252, 0.0504, 1.0, 252).unwrap();
        assert!((m.r_d() - 0.0001).abs() < 1e-18);
        assert!((m.r_f() - 0.0002).abs() < 1e-18);
        assert!((m.annualize_vol(m.per_period_vol(0.2)) - 0.2).abs() < 1e-15);
        assert!(MarketConfig::new(0.0, 0.0, 0.0, 252).is_err());
        assert!(MarketConfig::new(0.0, 0.0, 1.0, 0).is_err());
    }
}
