use rand::Rng;
use rand_distr::StandardNormal;

use super::{Drift, MarketConfig, Theta};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

fn bivariate_normal_logpdf(x: f64, h: f64, mean_x: f64, mean_h: f64, theta: &Theta) -> f64 {
    let (sx, sh, rho) = (theta.sigma_x(), theta.sigma_h(), theta.rho());
    let one_minus = 1.0 - rho * rho;
    let zx = (x - mean_x) / sx;
    let zh = (h - mean_h) / sh;
    -LN_2PI - sx.ln() - sh.ln() - 0.5 * one_minus.ln()
        - (zx * zx - 2.0 * rho * zx * zh + zh * zh) / (2.0 * one_minus)
}

/// Log density of one return pair under the physical measure, with means
/// `μ − σ²/2` for each component.
pub fn physical_logpdf(x: f64, h: f64, drift: &Drift, theta: &Theta) -> f64 {
    let mean_x = drift.mu_x - 0.5 * theta.sigma_x().powi(2);
    let mean_h = drift.mu_h - 0.5 * theta.sigma_h().powi(2);
    bivariate_normal_logpdf(x, h, mean_x, mean_h, theta)
}

/// Per-period means of `(x, h)` under the domestic risk-neutral measure:
/// `r_f − ρσxσh − σx²/2` and `r_d − r_f − σh²/2`.
pub fn risk_neutral_means(theta: &Theta, market: &MarketConfig) -> (f64, f64) {
    let (sx, sh, rho) = (theta.sigma_x(), theta.sigma_h(), theta.rho());
    (
        market.r_f() - rho * sx * sh - 0.5 * sx * sx,
        market.r_d() - market.r_f() - 0.5 * sh * sh,
    )
}

pub fn risk_neutral_logpdf(x: f64, h: f64, market: &MarketConfig, theta: &Theta) -> f64 {
    let (mean_x, mean_h) = risk_neutral_means(theta, market);
    bivariate_normal_logpdf(x, h, mean_x, mean_h, theta)
}

/// One `(x, h)` draw under the domestic risk-neutral measure.
///
/// Consumes two standard normals `z1, z2` in that order; the exchange-rate
/// shock is `ρ·z1 + √(1−ρ²)·z2`.
pub fn simulate_return_pair<R: Rng + ?Sized>(theta: &Theta, market: &MarketConfig, rng: &mut R) -> (f64, f64) {
    let (mean_x, mean_h) = risk_neutral_means(theta, market);
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    let rho = theta.rho();
    let x = mean_x + theta.sigma_x() * z1;
    let h = mean_h + theta.sigma_h() * (rho * z1 + (1.0 - rho * rho).sqrt() * z2);
    (x, h)
}
