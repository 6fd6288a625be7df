use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{MarketConfig, SpotState, Theta};

const MIN_TOTAL_VOL: f64 = 1e-8;
const MAX_TOTAL_VOL: f64 = 5.0;
const PRICE_TOLERANCE: f64 = 1e-10;

fn norm_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").cdf(x)
}

/// Black-Scholes call with per-period volatility and rate over `horizon`
/// periods.
pub fn bs_call(spot: f64, strike: f64, vol: f64, rate: f64, horizon: f64) -> Result<f64> {
    if !(spot > 0.0) || !(strike >= 0.0) || !(horizon > 0.0) || !(vol >= 0.0) || !rate.is_finite() {
        return Err(Error::Domain(format!(
            "bs_call needs spot > 0, strike >= 0, horizon > 0, vol >= 0 (got {spot}, {strike}, {horizon}, {vol})"
        )));
    }
    let discounted_strike = strike * (-rate * horizon).exp();
    if strike == 0.0 {
        return Ok(spot);
    }
    let total_vol = vol * horizon.sqrt();
    if total_vol == 0.0 {
        return Ok((spot - discounted_strike).max(0.0));
    }
    let d1 = ((spot / discounted_strike).ln() + 0.5 * total_vol * total_vol) / total_vol;
    let d2 = d1 - total_vol;
    Ok((spot * norm_cdf(d1) - discounted_strike * norm_cdf(d2)).max(0.0))
}

/// Per-period volatility reproducing `price`, by bisection on the total
/// volatility `σ√s ∈ [1e-8, 5]`.
pub fn implied_vol(price: f64, spot: f64, strike: f64, rate: f64, horizon: f64) -> Result<f64> {
    let lower = (spot - strike * (-rate * horizon).exp()).max(0.0);
    let upper = spot;
    if !(price >= lower && price <= upper) {
        return Err(Error::NoSolution { price, lower, upper });
    }
    let root_s = horizon.sqrt();
    let price_at = |total: f64| bs_call(spot, strike, total / root_s, rate, horizon);
    let (mut lo, mut hi) = (MIN_TOTAL_VOL, MAX_TOTAL_VOL);
    if price <= price_at(lo)? {
        return Ok(lo / root_s);
    }
    if price > price_at(hi)? {
        return Err(Error::NoSolution { price, lower, upper: price_at(hi)? });
    }
    // the call price is increasing in volatility
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let diff = price_at(mid)? - price;
        if diff.abs() < PRICE_TOLERANCE && hi - lo < 1e-12 {
            return Ok(mid / root_s);
        }
        if diff == 0.0 {
            return Ok(mid / root_s);
        }
        if diff > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi) / root_s)
}

/// Analytic price of the fixed-rate quanto call (F3).
///
/// Under the domestic risk-neutral measure the asset has quanto forward
/// `X_T·e^{(r_f − ρσxσh)s}`; the price is the discounted Black formula on it.
pub fn closed_form_v3(theta: &Theta, spot: &SpotState, strike_f: f64, horizon: u32, market: &MarketConfig) -> Result<f64> {
    if !(strike_f >= 0.0) {
        return Err(Error::Domain(format!("strike must be non-negative, got {strike_f}")));
    }
    let x0 = spot.x0();
    let h_fix = market.h_fix();
    if horizon == 0 {
        return Ok(h_fix * (x0 - strike_f).max(0.0));
    }
    let s = f64::from(horizon);
    let discount = (-market.r_d() * s).exp();
    let forward = x0 * ((market.r_f() - theta.rho() * theta.sigma_x() * theta.sigma_h()) * s).exp();
    if strike_f == 0.0 {
        return Ok(discount * h_fix * forward);
    }
    let total_vol = theta.sigma_x() * s.sqrt();
    let d1 = ((forward / strike_f).ln() + 0.5 * total_vol * total_vol) / total_vol;
    let d2 = d1 - total_vol;
    Ok(discount * h_fix * (forward * norm_cdf(d1) - strike_f * norm_cdf(d2)))
}
