//! Posterior-predictive Monte Carlo pricing.
//!
//! Paths are organized in groups of `paths_per_draw`; each group uses one
//! posterior draw (the chain thinned evenly to the number of groups) and its
//! own random stream `ChaCha8(seed)` on stream index `group`. Results are
//! therefore bit-identical for a fixed seed whatever the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::diagnostics::hpdi;
use crate::error::{Error, Result};
use crate::inference::{mwg_sweep, Chain, PosteriorKernel, ProposalSet};
use crate::model::payoff_unchecked;
use crate::model::{risk_neutral_means, simulate_return_pair, MarketConfig, PayoffKind, SpotState, SufficientStats, Theta};

/// Parameter refresh along each simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequentialUpdate {
    /// Statistics of the observed panel that simulated returns are appended to.
    pub stats: SufficientStats,
    pub proposals: ProposalSet,
    /// Refresh `θ` after every `refresh_interval` simulated steps.
    pub refresh_interval: u32,
    /// Metropolis-within-Gibbs sweeps per refresh.
    pub sweeps_per_refresh: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PricingMode {
    /// `θ` fixed along each path.
    Static,
    Sequential(SequentialUpdate),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingRequest {
    pub kind: PayoffKind,
    /// `K_d`, `K_f` or `K_H` depending on `kind`.
    pub strike: f64,
    /// Steps to maturity `s`.
    pub horizon: u32,
    pub spot: SpotState,
    pub market: MarketConfig,
    pub n_paths: usize,
    pub paths_per_draw: usize,
    pub seed: u64,
    pub mode: PricingMode,
}

impl PricingRequest {
    fn validate(&self) -> Result<()> {
        if !(self.strike >= 0.0 && self.strike.is_finite()) {
            return Err(Error::Domain(format!("strike must be non-negative, got {}", self.strike)));
        }
        if self.n_paths == 0 || self.paths_per_draw == 0 {
            return Err(Error::Domain("n_paths and paths_per_draw must be at least 1".into()));
        }
        if let PricingMode::Sequential(seq) = &self.mode {
            if seq.refresh_interval == 0 {
                return Err(Error::Domain("refresh_interval must be at least 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingResult {
    pub price: f64,
    pub mc_std_error: f64,
    /// 99% HPDI of the per-draw discounted payoff means.
    pub hpdi_99: (f64, f64),
    pub n_effective_draws: usize,
    /// Discounted payoff mean of each path group, in group order.
    pub draw_prices: Vec<f64>,
}

/// Random stream for path group `group`.
pub fn path_rng(seed: u64, group: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(group);
    rng
}

/// Chain index used by group `group` of `groups` when thinning `len` draws.
pub fn thinned_index(group: usize, groups: usize, len: usize) -> usize {
    ((group as u128 * len as u128) / groups as u128) as usize
}

/// Recursive pairwise summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

struct GroupTotals {
    sum: f64,
    sum_sq: f64,
    count: usize,
}

/// Prices `request` by averaging discounted payoffs over paths simulated
/// under the domestic risk-neutral measure with posterior draws of `θ`.
pub fn price_predictive(request: &PricingRequest, chain: &Chain) -> Result<PricingResult> {
    request.validate()?;
    let draws = chain.post_burn_in();
    if draws.is_empty() {
        return Err(Error::EmptyChain);
    }
    let market = &request.market;
    let (x0, h0) = (request.spot.x0(), request.spot.h0());
    if request.horizon == 0 {
        let value = payoff_unchecked(request.kind, x0, h0, request.strike, market.h_fix());
        return Ok(PricingResult {
            price: value,
            mc_std_error: 0.0,
            hpdi_99: (value, value),
            n_effective_draws: 0,
            draw_prices: vec![value],
        });
    }

    let ppd = request.paths_per_draw;
    let groups = request.n_paths.div_ceil(ppd);
    let discount = (-market.r_d() * f64::from(request.horizon)).exp();

    let totals: Vec<GroupTotals> = (0..groups)
        .into_par_iter()
        .map(|g| {
            let theta = draws[thinned_index(g, groups, draws.len())];
            let count = ppd.min(request.n_paths - g * ppd);
            let mut rng = path_rng(request.seed, g as u64);
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..count {
                let (x_t, h_t) = match &request.mode {
                    PricingMode::Static => static_terminal(request, &theta, &mut rng),
                    PricingMode::Sequential(seq) => sequential_terminal(request, seq, theta, &mut rng),
                };
                let v = discount * payoff_unchecked(request.kind, x_t, h_t, request.strike, market.h_fix());
                sum += v;
                sum_sq += v * v;
            }
            GroupTotals { sum, sum_sq, count }
        })
        .collect();

    let n = request.n_paths as f64;
    let sums: Vec<f64> = totals.iter().map(|t| t.sum).collect();
    let price = pairwise_sum(&sums) / n;
    let mc_std_error = if groups >= 2 {
        // cluster estimator: groups are independent, paths within a group share θ
        let dev: Vec<f64> = totals.iter().map(|t| (t.sum - t.count as f64 * price).powi(2)).collect();
        (pairwise_sum(&dev) * groups as f64 / (groups as f64 - 1.0)).sqrt() / n
    } else if request.n_paths >= 2 {
        let t = &totals[0];
        let var = ((t.sum_sq - t.sum * t.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    let draw_prices: Vec<f64> = totals.iter().map(|t| t.sum / t.count as f64).collect();
    Ok(PricingResult {
        price,
        mc_std_error,
        hpdi_99: hpdi(&draw_prices, 0.99)?,
        n_effective_draws: groups.min(draws.len()),
        draw_prices,
    })
}

/// Terminal `(X, H)` with `θ` held fixed. The fixed-rate payoff only needs
/// the asset, so only `z1` is drawn per step; otherwise each step consumes
/// `z1, z2`.
fn static_terminal(request: &PricingRequest, theta: &Theta, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let market = &request.market;
    let (x0, h0) = (request.spot.x0(), request.spot.h0());
    let (mean_x, _) = risk_neutral_means(theta, market);
    if request.kind.asset_only() {
        let mut sum_x = 0.0;
        for _ in 0..request.horizon {
            let z: f64 = rng.sample(StandardNormal);
            sum_x += mean_x + theta.sigma_x() * z;
        }
        return (x0 * sum_x.exp(), h0);
    }
    let (mut sum_x, mut sum_h) = (0.0, 0.0);
    for _ in 0..request.horizon {
        let (x, h) = simulate_return_pair(theta, market, rng);
        sum_x += x;
        sum_h += h;
    }
    (x0 * sum_x.exp(), h0 * sum_h.exp())
}

/// Terminal `(X, H)` when simulated returns are appended to the panel and
/// `θ` is refreshed by a few Gibbs sweeps every `refresh_interval` steps.
fn sequential_terminal(
    request: &PricingRequest,
    seq: &SequentialUpdate,
    start: Theta,
    rng: &mut ChaCha8Rng,
) -> (f64, f64) {
    let market = &request.market;
    let mut kernel = PosteriorKernel::new(seq.stats);
    let mut theta = start;
    let (mut sum_x, mut sum_h) = (0.0, 0.0);
    for step in 1..=request.horizon {
        let (x, h) = simulate_return_pair(&theta, market, rng);
        sum_x += x;
        sum_h += h;
        kernel.stats_mut().push(x, h);
        if step % seq.refresh_interval == 0 && step < request.horizon {
            for _ in 0..seq.sweeps_per_refresh {
                mwg_sweep(&kernel, &seq.proposals, &mut theta, rng);
            }
        }
    }
    (request.spot.x0() * sum_x.exp(), request.spot.h0() * sum_h.exp())
}

/// `|model − market| / market`.
pub fn relative_pricing_error(model_price: f64, market_price: f64) -> Result<f64> {
    if !(market_price > 0.0) {
        return Err(Error::Domain(format!("market price must be positive, got {market_price}")));
    }
    Ok((model_price - market_price).abs() / market_price)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(kind: PayoffKind, strike: f64, horizon: u32, n_paths: usize) -> PricingRequest {
        PricingRequest {
            kind,
            strike,
            horizon,
            spot: SpotState::new(100.0, 1.2).unwrap(),
            market: MarketConfig::new(0.0002, 0.0001, 1.0, 252).unwrap(),
            n_paths,
            paths_per_draw: 100,
            seed: 42,
            mode: PricingMode::Static,
        }
    }

    fn chain() -> Chain {
        Chain::single(Theta::new(0.01, 0.006, 0.2).unwrap())
    }

    #[test]
    fn rpe_values() {
        assert_eq!(relative_pricing_error(100.0, 100.0).unwrap(), 0.0);
        assert!((relative_pricing_error(110.0, 100.0).unwrap() - 0.1).abs() < 1e-15);
        assert!(relative_pricing_error(1.0, 0.0).is_err());
    }

    #[test]
    fn horizon_zero_is_intrinsic() {
        for kind in PayoffKind::ALL {
            let r = request(kind, 0.5, 0, 10);
            let expected = payoff_unchecked(kind, 100.0, 1.2, 0.5, 1.0);
            assert_eq!(price_predictive(&r, &chain()).unwrap().price, expected);
        }
    }

    #[test]
    fn empty_chain_and_bad_requests() {
        let t = Theta::new(0.01, 0.006, 0.2).unwrap();
        assert!(Chain::new(vec![t], 1, [0; 3], 0).is_err());
        let mut r = request(PayoffKind::FixedRate, 100.0, 5, 0);
        assert!(price_predictive(&r, &chain()).is_err());
        r.n_paths = 10;
        r.strike = -1.0;
        assert!(price_predictive(&r, &chain()).is_err());
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let r = request(PayoffKind::DomesticStrike, 110.0, 20, 5_000);
        let a = price_predictive(&r, &chain()).unwrap();
        let b = price_predictive(&r, &chain()).unwrap();
        assert_eq!(a, b);
        let mut r2 = r;
        r2.seed = 43;
        assert_ne!(price_predictive(&r2, &chain()).unwrap().price, a.price);
    }

    #[test]
    fn thinning_spreads_over_chain() {
        assert_eq!(thinned_index(0, 4, 100), 0);
        assert_eq!(thinned_index(3, 4, 100), 75);
        assert_eq!(thinned_index(9, 10, 3), 2);
    }

    #[test]
    fn pairwise_sum_agrees_with_naive() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64 * 0.5).collect();
        assert_eq!(pairwise_sum(&v), v.iter().sum::<f64>());
    }
}
