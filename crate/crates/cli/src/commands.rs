use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Result;
use rayon::prelude::*;

use quanto_core::data::Moneyness;

use crate::config::{Config, Family};
use crate::output::{num, write_atomic, Table, NA};
use crate::pipeline::{
    baselines, cell_seed, derive_seed, diagnose_table, draws_table, estimate_rows, fit, focus_index, histogram, load_market,
    load_quotes, market_config, predictive_summary, price_quotes, prices_table, read_draws, rejections_table, Fit,
    PricedQuote, PricingInputs, ESTIMATE_HEADER,
};

fn manifest(cfg: &Config, command: &str, extra: &[String], files: &[String]) -> String {
    let mut s = format!(
        "command = {command}\nversion = quanto-cli {}\n\n[config]\n{}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.echo()
    );
    if !extra.is_empty() {
        s.push_str("\n[run]\n");
        for line in extra {
            s.push_str(line);
            s.push('\n');
        }
    }
    s.push_str("\n[files]\n");
    for f in files {
        s.push_str(f);
        s.push('\n');
    }
    s
}


/// `estimate`: parameter summary per family plus draws files.
pub fn estimate(cfg: &Config, fx: Option<&str>) -> Result<Vec<PathBuf>> {
    let data = load_market(cfg, fx)?;
    let (panel, _) = data.window(cfg.sample_size)?;
    let seed_of = |f: Family| cell_seed(cfg.seed, data.index, cfg.sample_size, Some(f));
    let fits: Vec<(Family, Fit)> = cfg
        .families
        .par_iter()
        .map(|&f| fit(&panel, f, cfg, seed_of(f)).map(|r| (f, r)))
        .collect::<Result<_>>()?;

    let mut table = Table::new(&ESTIMATE_HEADER);
    let mut written = Vec::new();
    let mut notes = vec![format!("fx = {}", data.label), format!("sample_size = {}", panel.len())];
    for (family, fitted) in &fits {
        table.extend(estimate_rows(family.name(), fitted)?);
        notes.push(format!("seed.{family} = {}", seed_of(*family)));
        if let Fit::Chain(chain) = fitted {
            for w in chain.warnings() {
                eprintln!("warning [{family}]: {w}");
                notes.push(format!("warning.{family} = {w}"));
            }
            let path = cfg.out.join(format!("draws_{family}.csv"));
            draws_table(chain).write(&path)?;
            written.push(path);
        }
    }
    let path = cfg.out.join("estimates.csv");
    table.write(&path)?;
    written.insert(0, path);
    finish(cfg, "estimate", &notes, written)
}

fn finish(cfg: &Config, command: &str, notes: &[String], mut written: Vec<PathBuf>) -> Result<Vec<PathBuf>> {
    let names: Vec<String> = written.iter().map(|p| relative(&cfg.out, p)).collect();
    let path = cfg.out.join(format!("manifest_{command}.txt"));
    write_atomic(&path, &manifest(cfg, command, notes, &names))?;
    written.push(path);
    Ok(written)
}

fn relative(base: &Path, p: &Path) -> String {
    p.strip_prefix(base).unwrap_or(p).display().to_string()
}

fn draws_label(path: &Path) -> String {
    let stem = path.file_stem().map_or("draws".into(), |s| s.to_string_lossy().into_owned());
    stem.strip_prefix("draws_").map_or(stem.clone(), str::to_string)
}

/// `price`: prices every retained quote with the draws in `draws`.
pub fn price(cfg: &Config, fx: Option<&str>, draws: &Path) -> Result<Vec<PathBuf>> {
    let chain = read_draws(draws)?;
    let label = draws_label(draws);
    let market = market_config(cfg)?;
    let quotes = load_quotes(cfg, &market)?;
    let data = load_market(cfg, fx)?;
    let (panel, spot) = data.window(cfg.sample_size)?;
    let focus = focus_index(&quotes.quotes, cfg);
    let base = baselines(&quotes.quotes, focus, &market, &panel)?;
    let family = label.parse::<Family>().ok();
    let seed = derive_seed(cell_seed(cfg.seed, data.index, cfg.sample_size, family), &[100]);
    let inputs = PricingInputs { cfg, market: &market, panel: &panel, h0: spot.h0(), seed };
    let priced = price_quotes(&chain, &quotes.quotes, &base, &inputs)?;

    let mut written = Vec::new();
    let mut emit = |name: String, t: Table| -> Result<()> {
        let p = cfg.out.join(name);
        t.write(&p)?;
        written.push(p);
        Ok(())
    };
    emit(format!("prices_{label}.csv"), prices_table(&priced))?;
    emit(format!("predictive_hist_{label}.csv"), histogram(&priced[focus].result.draw_prices, cfg.histogram_bins))?;
    emit(format!("predictive_summary_{label}.csv"), predictive_summary(&priced[focus], &base))?;
    emit("rejected_quotes.csv".into(), rejections_table(&quotes.rejected))?;
    let notes = vec![
        format!("draws = {}", draws.display()),
        format!("fx = {}", data.label),
        format!("pricing_seed = {seed}"),
        format!("bs_i.implied_vol = {}", num(base.implied_vol)),
        format!("bs_i.reference_strike = {}", num(quotes.quotes[base.implied_from].quote.strike)),
        format!("bs_h.historical_vol = {}", num(base.historical_vol)),
        format!("bs_h.historical_vol_annual = {}", num(market.annualize_vol(base.historical_vol))),
    ];
    finish(cfg, "price", &notes, written)
}

/// `diagnose`: chain summary of an existing draws file.
pub fn diagnose(cfg: &Config, draws: &Path) -> Result<(Vec<PathBuf>, String)> {
    let chain = read_draws(draws)?;
    let label = draws_label(draws);
    let table = diagnose_table(&label, &chain)?;
    let path = cfg.out.join(format!("diagnose_{label}.csv"));
    table.write(&path)?;
    Ok((vec![path], table.to_csv()))
}

struct CellOutcome {
    fx: String,
    window: usize,
    family: Family,
    result: Result<Vec<PricedQuote>>,
}

const BUCKETS: [Moneyness; 3] = Moneyness::ALL;

fn bucket_means(priced: &[PricedQuote], value: impl Fn(&PricedQuote) -> Option<f64>) -> Vec<String> {
    let mut out = Vec::new();
    for b in BUCKETS {
        let v: Vec<f64> = priced.iter().filter(|p| p.bucket == b).filter_map(&value).collect();
        out.push(if v.is_empty() { NA.to_string() } else { num(v.iter().sum::<f64>() / v.len() as f64) });
    }
    out
}

fn rpe_of(model: f64, market: f64) -> Option<f64> {
    quanto_core::pricing::relative_pricing_error(model, market).ok()
}

/// `experiment`: the (fx × window × family) grid with aggregated tables.
pub fn experiment(cfg: &Config) -> Result<Vec<PathBuf>> {
    let market = market_config(cfg)?;
    let quotes = load_quotes(cfg, &market)?;
    let focus = focus_index(&quotes.quotes, cfg);
    let windows = cfg.experiment_windows();
    let datasets = cfg.fx.iter().map(|(l, _)| load_market(cfg, Some(l))).collect::<Result<Vec<_>>>()?;
    for d in &datasets {
        for &w in &windows {
            d.window(w)?;
        }
    }

    let mut cells = Vec::new();
    for (fi, d) in datasets.iter().enumerate() {
        for &w in &windows {
            for &f in &cfg.families {
                cells.push((fi, d, w, f));
            }
        }
    }
    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|&(fi, data, w, family)| {
            let seed = cell_seed(cfg.seed, fi, w, Some(family));
            let result = (|| -> Result<Vec<PricedQuote>> {
                let (panel, spot) = data.window(w)?;
                let fitted = fit(&panel, family, cfg, seed)?;
                let base = baselines(&quotes.quotes, focus, &market, &panel)?;
                let inputs = PricingInputs { cfg, market: &market, panel: &panel, h0: spot.h0(), seed: derive_seed(seed, &[100]) };
                let priced = price_quotes(&fitted.pricing_chain(), &quotes.quotes, &base, &inputs)?;
                let stem = format!("cells/{}_T{}_{}", data.label, w, family);
                estimate_rows(family.name(), &fitted)?.write(&cfg.out.join(format!("{stem}_estimates.csv")))?;
                prices_table(&priced).write(&cfg.out.join(format!("{stem}_prices.csv")))?;
                Ok(priced)
            })();
            CellOutcome { fx: data.label.clone(), window: w, family, result }
        })
        .collect();

    let table_window = windows.iter().copied().max().expect("at least one window");
    let mut model_rows: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    let mut curves = Table::new(&[
        "fx",
        "window",
        "family",
        "strike",
        "maturity_days",
        "model_price",
        "market_price",
        "bs_i",
        "bs_h",
    ]);
    let mut failures = Table::new(&["fx", "window", "family", "error"]);
    let focus_maturity = quotes.quotes[focus].quote.maturity_days;
    let mut baseline_rows: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    for c in &outcomes {
        match &c.result {
            Err(e) => failures.push(vec![c.fx.clone(), c.window.to_string(), c.family.to_string(), format!("{e:#}")]),
            Ok(priced) => {
                for p in priced.iter().filter(|p| p.quote.quote.maturity_days == focus_maturity) {
                    curves.push(vec![
                        c.fx.clone(),
                        c.window.to_string(),
                        c.family.to_string(),
                        num(p.quote.quote.strike),
                        p.quote.quote.maturity_days.to_string(),
                        num(p.result.price),
                        num(p.quote.quanto_price),
                        num(p.bs_i),
                        num(p.bs_h),
                    ]);
                }
                if c.window != table_window {
                    continue;
                }
                let mut row = vec![c.fx.clone(), c.family.to_string()];
                let rpe = bucket_means(priced, |p| rpe_of(p.result.price, p.quote.quanto_price));
                let nse = bucket_means(priced, |p| Some(p.nse));
                for i in 0..3 {
                    row.push(rpe[i].clone());
                    row.push(nse[i].clone());
                }
                model_rows.entry(c.fx.clone()).or_default().push(row);
                baseline_rows.entry(c.fx.clone()).or_insert_with(|| {
                    let mut rows = Vec::new();
                    for (name, pick) in [("bs-i", 0usize), ("bs-h", 1)] {
                        let value = |p: &PricedQuote| if pick == 0 { p.bs_i } else { p.bs_h };
                        let rpe = bucket_means(priced, |p| rpe_of(value(p), p.quote.quanto_price));
                        let mut row = vec![c.fx.clone(), name.to_string()];
                        for r in rpe {
                            row.push(r);
                            row.push(NA.to_string());
                        }
                        rows.push(row);
                    }
                    rows
                });
            }
        }
    }
    // one row group per fx: model rows, then the two baselines
    let mut table2 = Table::new(&["fx", "model", "itm_rpe", "itm_nse", "atm_rpe", "atm_nse", "otm_rpe", "otm_nse"]);
    for (label, _) in &cfg.fx {
        let rows = model_rows.remove(label).unwrap_or_default();
        for row in rows.into_iter().chain(baseline_rows.remove(label).unwrap_or_default()) {
            table2.push(row);
        }
    }

    let mut written = Vec::new();
    for (name, t) in [
        ("table2.csv", &table2),
        ("curves.csv", &curves),
        ("failures.csv", &failures),
        ("rejected_quotes.csv", &rejections_table(&quotes.rejected)),
    ] {
        let p = cfg.out.join(name);
        t.write(&p)?;
        written.push(p);
    }
    for c in &outcomes {
        if c.result.is_ok() {
            let stem = format!("cells/{}_T{}_{}", c.fx, c.window, c.family);
            written.push(cfg.out.join(format!("{stem}_estimates.csv")));
            written.push(cfg.out.join(format!("{stem}_prices.csv")));
        }
    }
    for c in outcomes.iter().filter(|c| c.result.is_err()) {
        eprintln!("cell {} T={} {} failed", c.fx, c.window, c.family);
    }
    let notes = vec![
        format!("table2_window = {table_window}"),
        format!("focus_strike = {}", num(quotes.quotes[focus].quote.strike)),
        format!("focus_maturity = {focus_maturity}"),
        format!("cells = {}", outcomes.len()),
        format!("failed_cells = {}", failures.len()),
    ];
    finish(cfg, "experiment", &notes, written)
}
