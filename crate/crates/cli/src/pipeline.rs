//! Steps shared by the subcommands: loading, fitting, pricing and tables.

use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use quanto_core::data::{
    align_series, construct_quanto, filter_options, load_option_chain, load_price_series, moneyness_bucket,
    Moneyness, QuantoQuote, Rejection, SeriesColumns,
};
use quanto_core::diagnostics::{nse, summarize};
use quanto_core::inference::{
    conjugate_sample, mle_estimate, mwg_sample, Chain, MleEstimate, NiwHyperparams, ProposalSet,
};
use quanto_core::model::{MarketConfig, Parameter, PriceSeries, ReturnPanel, SpotState, Theta};
use quanto_core::pricing::{
    bs_call, implied_vol, price_predictive, relative_pricing_error, PricingMode, PricingRequest, PricingResult,
    SequentialUpdate,
};

use crate::config::{Config, Family, ModeKind};
use crate::output::{num, opt, Table, NA};
use crate::Invalid;

/// Mixes `tags` into `base` (SplitMix64 finalizer per step).
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut z = base;
    for &t in tags {
        z = z.wrapping_add(t.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

pub fn family_tag(family: Family) -> u64 {
    match family.name() {
        "ttn" => 1,
        "tnn" => 2,
        "ign" => 3,
        "mnc" => 4,
        _ => 5,
    }
}

/// Seed of one (exchange rate, window, family) fit. `estimate`, `price` and
/// every `experiment` cell share it, so a one-cell grid repeats their output.
/// Draws files whose label is not a family name use tag 0.
pub fn cell_seed(base: u64, fx_index: usize, window: usize, family: Option<Family>) -> u64 {
    derive_seed(base, &[fx_index as u64, window as u64, family.map_or(0, family_tag)])
}

pub fn market_config(cfg: &Config) -> Result<MarketConfig> {
    MarketConfig::from_annual(cfg.r_d_annual, cfg.r_f_annual, cfg.h_fix, cfg.periods_per_year)
        .map_err(|e| Invalid(e.to_string()).into())
}

fn load_series(path: &Path, columns: &SeriesColumns) -> Result<PriceSeries> {
    if !path.exists() {
        return Err(Invalid(format!("missing input file {}", path.display())).into());
    }
    load_price_series(path, columns).map_err(|e| Invalid(format!("{}: {e}", path.display())).into())
}

/// Asset and exchange rate restricted to their common dates.
pub struct MarketData {
    pub label: String,
    /// Position of the series in the config's `fx` list.
    pub index: usize,
    pub asset: PriceSeries,
    pub fx: PriceSeries,
}

pub fn load_market(cfg: &Config, fx_label: Option<&str>) -> Result<MarketData> {
    let index = match fx_label {
        None => 0,
        Some(l) => cfg
            .fx
            .iter()
            .position(|(name, _)| name == l)
            .ok_or_else(|| Invalid(format!("no fx series labelled '{l}'")))?,
    };
    let (label, path) = cfg.fx[index].clone();
    let asset = load_series(&cfg.asset, &cfg.asset_columns)?;
    let fx = load_series(&path, &SeriesColumns::default())?;
    let (asset, fx) = align_series(&asset, &fx).map_err(|e| Invalid(format!("aligning asset with {label}: {e}")))?;
    Ok(MarketData { label, index, asset, fx })
}

impl MarketData {
    /// The last `t` return pairs and the latest levels.
    pub fn window(&self, t: usize) -> Result<(ReturnPanel, SpotState)> {
        let available = self.asset.len().saturating_sub(1);
        if t > available {
            return Err(Invalid(format!("sample size {t} exceeds the {available} aligned returns for {}", self.label)).into());
        }
        let panel = ReturnPanel::from_prices(&self.asset, &self.fx)?.tail(t)?;
        let (_, x0) = self.asset.last().expect("non-empty");
        let (_, h0) = self.fx.last().expect("non-empty");
        Ok((panel, SpotState::new(x0, h0)?))
    }
}

pub enum Fit {
    Chain(Chain),
    Mle(MleEstimate),
}

impl Fit {
    /// Draws used for pricing; the MLE prices with its point estimate.
    pub fn pricing_chain(&self) -> Chain {
        match self {
            Fit::Chain(c) => c.clone(),
            Fit::Mle(m) => Chain::single(m.theta_hat),
        }
    }
}

pub fn fit(panel: &ReturnPanel, family: Family, cfg: &Config, seed: u64) -> Result<Fit> {
    let run = || -> Result<Fit> {
        let mle = mle_estimate(panel)?;
        Ok(match family {
            Family::Mle => Fit::Mle(mle),
            Family::Mnc => {
                Fit::Chain(conjugate_sample(panel.stats(), &NiwHyperparams::default(), cfg.draws, cfg.burn_in, seed)?)
            }
            Family::Mcmc(cand) => {
                let th = mle.theta_hat;
                let proposals = ProposalSet::anchored(cand, th.sigma_x(), th.sigma_h(), panel.len(), &cfg.tuning)?;
                Fit::Chain(mwg_sample(panel, &proposals, cfg.draws, cfg.burn_in, th, seed)?)
            }
        })
    };
    run().with_context(|| format!("estimation with family {family} failed"))
}

pub const ESTIMATE_HEADER: [&str; 12] = [
    "family",
    "parameter",
    "mean",
    "std_dev",
    "hpdi95_lo",
    "hpdi95_hi",
    "hpdi99_lo",
    "hpdi99_hi",
    "nse",
    "cd",
    "acceptance_rate",
    "draws",
];

pub fn estimate_rows(label: &str, fit: &Fit) -> Result<Table> {
    let mut t = Table::new(&ESTIMATE_HEADER);
    for p in Parameter::ALL {
        match fit {
            Fit::Mle(m) => {
                let mut row = vec![label.to_string(), p.name().to_string(), num(m.theta_hat.get(p))];
                row.extend(std::iter::repeat_n(NA.to_string(), 9));
                t.push(row);
            }
            Fit::Chain(c) => {
                let s = summarize(c, p)?;
                t.push(vec![
                    label.to_string(),
                    p.name().to_string(),
                    num(s.mean),
                    num(s.std_dev),
                    num(s.hpdi_95.0),
                    num(s.hpdi_95.1),
                    num(s.hpdi_99.0),
                    num(s.hpdi_99.1),
                    num(s.nse),
                    opt(s.cd),
                    num(s.acceptance_rate),
                    c.post_burn_in().len().to_string(),
                ]);
            }
        }
    }
    Ok(t)
}

pub fn draws_table(chain: &Chain) -> Table {
    let mut t = Table::new(&["sigma_x", "sigma_h", "rho"]);
    for th in chain.post_burn_in() {
        t.push(th.as_array().iter().map(|&v| num(v)).collect());
    }
    t
}

/// Reads a `sigma_x,sigma_h,rho` file written by `estimate`.
pub fn read_draws(path: &Path) -> Result<Chain> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Invalid(format!("cannot read draws file {}: {e}", path.display())))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("sigma_x,sigma_h,rho") {
        return Err(Invalid(format!("{}: expected header 'sigma_x,sigma_h,rho'", path.display())).into());
    }
    let mut draws = Vec::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = || Invalid(format!("{} line {}: malformed draw '{line}'", path.display(), i + 2));
        let v: Vec<f64> = line.split(',').map(|c| c.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
        if v.len() != 3 {
            return Err(bad().into());
        }
        draws.push(Theta::new(v[0], v[1], v[2]).map_err(|_| bad())?);
    }
    if draws.is_empty() {
        return Err(Invalid(format!("{}: no draws", path.display())).into());
    }
    Ok(Chain::from_draws(draws, 0)?)
}

pub struct QuoteSet {
    pub quotes: Vec<QuantoQuote>,
    pub rejected: Vec<Rejection>,
}

/// Loads, filters and converts the option chain to quanto quotes.
pub fn load_quotes(cfg: &Config, market: &MarketConfig) -> Result<QuoteSet> {
    let path = cfg.options.as_ref().ok_or_else(|| Invalid("config key 'options' is required for pricing".into()))?;
    if !path.exists() {
        return Err(Invalid(format!("missing quotes file {}", path.display())).into());
    }
    let chain = load_option_chain(path).map_err(|e| Invalid(format!("{}: {e}", path.display())))?;
    let filtered = filter_options(&chain.quotes, market);
    let mut rejected = chain.rejected;
    // filter positions refer to the loaded quotes; report file lines instead
    rejected.extend(filtered.dropped.into_iter().map(|mut r| {
        r.row = chain.lines[r.row];
        r
    }));
    rejected.sort_by_key(|r| r.row);
    if filtered.retained.is_empty() {
        return Err(Invalid(format!("{}: no quotes survive filtering", path.display())).into());
    }
    let quotes = filtered
        .retained
        .iter()
        .map(|q| construct_quanto(q, market, cfg.h_fix))
        .collect::<quanto_core::Result<Vec<_>>>()?;
    Ok(QuoteSet { quotes, rejected })
}

pub fn rejections_table(rejected: &[Rejection]) -> Table {
    let mut t = Table::new(&["row", "reason", "detail"]);
    for r in rejected {
        t.push(vec![r.row.to_string(), r.reason.code().to_string(), r.detail.clone()]);
    }
    t
}

/// Index of the quote closest to `focus_strike` / `focus_maturity`, or to
/// the money at the shortest maturity when unset. Ties go to the first.
pub fn focus_index(quotes: &[QuantoQuote], cfg: &Config) -> usize {
    let key = |q: &QuantoQuote| {
        let o = &q.quote;
        let strike_gap = match cfg.focus_strike {
            Some(k) => (o.strike - k).abs(),
            None => (o.strike / o.underlying_spot).ln().abs(),
        };
        let maturity_gap = cfg.focus_maturity.map_or(0, |m| o.maturity_days.abs_diff(m));
        (maturity_gap, strike_gap, o.maturity_days)
    };
    let mut best = 0;
    for (i, q) in quotes.iter().enumerate() {
        let (a, b) = (key(q), key(&quotes[best]));
        if (a.0, a.2) < (b.0, b.2) || ((a.0, a.2) == (b.0, b.2) && a.1 < b.1) {
            best = i;
        }
    }
    best
}

/// Volatilities for the Black-Scholes baselines: the implied volatility of
/// the focus quote (BS-I) and the historical MLE volatility (BS-H).
#[derive(Debug, Clone, Copy)]
pub struct Baselines {
    pub implied_vol: f64,
    pub implied_from: usize,
    pub historical_vol: f64,
}

pub fn baselines(quotes: &[QuantoQuote], focus: usize, market: &MarketConfig, panel: &ReturnPanel) -> Result<Baselines> {
    let q = &quotes[focus].quote;
    let iv = implied_vol(q.market_price, q.underlying_spot, q.strike, market.r_f(), f64::from(q.maturity_days))
        .with_context(|| format!("implied volatility of the K={} quote", q.strike))?;
    Ok(Baselines { implied_vol: iv, implied_from: focus, historical_vol: mle_estimate(panel)?.theta_hat.sigma_x() })
}

/// `e^{−r_d τ}·H_fix·BS(S, K, σ, r_f, τ)`, the quanto construction applied
/// to a model call price.
pub fn bs_quanto(q: &QuantoQuote, vol: f64, market: &MarketConfig) -> Result<f64> {
    let o = &q.quote;
    let c = bs_call(o.underlying_spot, o.strike, vol, market.r_f(), f64::from(o.maturity_days))?;
    Ok(q.h_fix * (q.discount * c))
}

pub struct PricedQuote {
    pub quote: QuantoQuote,
    pub result: PricingResult,
    pub nse: f64,
    pub bs_i: f64,
    pub bs_h: f64,
    pub bucket: Moneyness,
}

pub struct PricingInputs<'a> {
    pub cfg: &'a Config,
    pub market: &'a MarketConfig,
    pub panel: &'a ReturnPanel,
    pub h0: f64,
    pub seed: u64,
}

pub fn price_quotes(chain: &Chain, quotes: &[QuantoQuote], base: &Baselines, inp: &PricingInputs) -> Result<Vec<PricedQuote>> {
    let cfg = inp.cfg;
    let mode = match cfg.mode {
        ModeKind::Static => PricingMode::Static,
        ModeKind::Sequential => {
            let th = mle_estimate(inp.panel)?.theta_hat;
            let proposals =
                ProposalSet::anchored(cfg.sequential_family, th.sigma_x(), th.sigma_h(), inp.panel.len(), &cfg.tuning)?;
            PricingMode::Sequential(SequentialUpdate {
                stats: *inp.panel.stats(),
                proposals,
                refresh_interval: cfg.refresh_interval,
                sweeps_per_refresh: cfg.sweeps_per_refresh,
            })
        }
    };
    quotes
        .par_iter()
        .enumerate()
        .map(|(i, q)| {
            let o = &q.quote;
            let request = PricingRequest {
                kind: cfg.payoff,
                strike: o.strike,
                horizon: o.maturity_days,
                spot: SpotState::new(o.underlying_spot, inp.h0)?,
                market: *inp.market,
                n_paths: cfg.n_paths,
                paths_per_draw: cfg.paths_per_draw,
                seed: derive_seed(inp.seed, &[i as u64]),
                mode,
            };
            let result = price_predictive(&request, chain)?;
            Ok(PricedQuote {
                quote: *q,
                nse: nse(&result.draw_prices),
                result,
                bs_i: bs_quanto(q, base.implied_vol, inp.market)?,
                bs_h: bs_quanto(q, base.historical_vol, inp.market)?,
                bucket: moneyness_bucket(o.strike, o.underlying_spot),
            })
        })
        .collect()
}

pub const PRICE_HEADER: [&str; 17] = [
    "quote_date",
    "strike",
    "maturity_days",
    "moneyness",
    "market_price",
    "model_price",
    "mc_std_error",
    "nse",
    "hpdi99_lo",
    "hpdi99_hi",
    "bs_i",
    "bs_h",
    "rpe_model",
    "rpe_bs_i",
    "rpe_bs_h",
    "underlying_call",
    "draws_used",
];

fn rpe(model: f64, market: f64) -> String {
    relative_pricing_error(model, market).map_or_else(|_| NA.to_string(), num)
}

pub fn prices_table(priced: &[PricedQuote]) -> Table {
    let mut t = Table::new(&PRICE_HEADER);
    for p in priced {
        let o = &p.quote.quote;
        let m = p.quote.quanto_price;
        t.push(vec![
            o.quote_date.to_string(),
            num(o.strike),
            o.maturity_days.to_string(),
            p.bucket.to_string(),
            num(m),
            num(p.result.price),
            num(p.result.mc_std_error),
            num(p.nse),
            num(p.result.hpdi_99.0),
            num(p.result.hpdi_99.1),
            num(p.bs_i),
            num(p.bs_h),
            rpe(p.result.price, m),
            rpe(p.bs_i, m),
            rpe(p.bs_h, m),
            num(o.market_price),
            p.result.n_effective_draws.to_string(),
        ]);
    }
    t
}

/// Equal-width histogram of `values` with `bins` bins.
pub fn histogram(values: &[f64], bins: usize) -> Table {
    let mut t = Table::new(&["bin_lo", "bin_hi", "count"]);
    if values.is_empty() {
        return t;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    for (i, c) in counts.iter().enumerate() {
        t.push(vec![num(lo + width * i as f64), num(lo + width * (i + 1) as f64), c.to_string()]);
    }
    t
}

pub fn predictive_summary(p: &PricedQuote, base: &Baselines) -> Table {
    let mut t = Table::new(&[
        "strike",
        "maturity_days",
        "mean",
        "nse",
        "mc_std_error",
        "hpdi99_lo",
        "hpdi99_hi",
        "market_price",
        "bs_i",
        "bs_h",
        "implied_vol",
        "historical_vol",
    ]);
    let o = &p.quote.quote;
    t.push(vec![
        num(o.strike),
        o.maturity_days.to_string(),
        num(p.result.price),
        num(p.nse),
        num(p.result.mc_std_error),
        num(p.result.hpdi_99.0),
        num(p.result.hpdi_99.1),
        num(p.quote.quanto_price),
        num(p.bs_i),
        num(p.bs_h),
        num(base.implied_vol),
        num(base.historical_vol),
    ]);
    t
}

/// Per-parameter summary of a draws file; every draw counts as retained.
pub fn diagnose_table(label: &str, chain: &Chain) -> Result<Table> {
    if chain.post_burn_in().len() < 2 {
        return Err(Invalid("draws file needs at least two draws".into()).into());
    }
    estimate_rows(label, &Fit::Chain(chain.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_by_tag_and_are_stable() {
        assert_eq!(derive_seed(7, &[1, 2]), derive_seed(7, &[1, 2]));
        assert_ne!(derive_seed(7, &[1, 2]), derive_seed(7, &[2, 1]));
        assert_ne!(derive_seed(7, &[0]), derive_seed(8, &[0]));
    }

    #[test]
    fn histogram_counts_everything() {
        let v: Vec<f64> = (0..100).map(f64::from).collect();
        let csv = histogram(&v, 10).to_csv();
        let total: usize = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
        assert_eq!(total, 100);
        assert_eq!(histogram(&[3.0, 3.0], 4).len(), 4);
    }
}
