//! Flat `key = value` configuration with `#` comments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use quanto_core::data::SeriesColumns;
use quanto_core::inference::{CandidateFamily, ProposalTuning};
use quanto_core::model::PayoffKind;

use crate::Invalid;

/// An estimation method as named on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Mcmc(CandidateFamily),
    Mnc,
    Mle,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Mcmc(CandidateFamily::Ttn) => "ttn",
            Family::Mcmc(CandidateFamily::Tnn) => "tnn",
            Family::Mcmc(CandidateFamily::Ign) => "ign",
            Family::Mnc => "mnc",
            Family::Mle => "mle",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Invalid;

    fn from_str(s: &str) -> Result<Self, Invalid> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mnc" => Ok(Family::Mnc),
            "mle" => Ok(Family::Mle),
            other => other
                .parse::<CandidateFamily>()
                .map(Family::Mcmc)
                .map_err(|_| Invalid(format!("unknown family '{other}' (expected ttn, tnn, ign, mnc or mle)"))),
        }
    }
}

pub fn parse_families(s: &str) -> Result<Vec<Family>, Invalid> {
    let mut out: Vec<Family> = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let f: Family = part.parse()?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err(Invalid("no families given".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    Static,
    Sequential,
}

impl FromStr for ModeKind {
    type Err = Invalid;

    fn from_str(s: &str) -> Result<Self, Invalid> {
        match s.trim() {
            "static" => Ok(ModeKind::Static),
            "sequential" => Ok(ModeKind::Sequential),
            other => Err(Invalid(format!("unknown mode '{other}' (expected static or sequential)"))),
        }
    }
}

impl fmt::Display for ModeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeKind::Static => "static",
            ModeKind::Sequential => "sequential",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub asset: PathBuf,
    pub asset_columns: SeriesColumns,
    /// `(label, path)` per exchange-rate series, in file order.
    pub fx: Vec<(String, PathBuf)>,
    pub options: Option<PathBuf>,
    pub r_d_annual: f64,
    pub r_f_annual: f64,
    pub h_fix: f64,
    pub periods_per_year: u32,
    pub draws: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub families: Vec<Family>,
    pub tuning: ProposalTuning,
    pub payoff: PayoffKind,
    pub n_paths: usize,
    pub paths_per_draw: usize,
    pub mode: ModeKind,
    pub refresh_interval: u32,
    pub sweeps_per_refresh: u32,
    pub sequential_family: CandidateFamily,
    pub windows: Vec<usize>,
    pub sample_size: usize,
    pub focus_strike: Option<f64>,
    pub focus_maturity: Option<u32>,
    pub histogram_bins: usize,
    pub out: PathBuf,
}

const KNOWN_KEYS: &[&str] = &[
    "asset",
    "asset_date_column",
    "asset_price_column",
    "fx",
    "options",
    "r_d",
    "r_f",
    "h_fix",
    "periods_per_year",
    "draws",
    "burn_in",
    "seed",
    "families",
    "scale_multiplier",
    "student_t_df",
    "inverse_gamma_shape",
    "rho_step",
    "payoff",
    "n_paths",
    "paths_per_draw",
    "mode",
    "refresh_interval",
    "sweeps_per_refresh",
    "sequential_family",
    "windows",
    "sample_size",
    "focus_strike",
    "focus_maturity",
    "histogram_bins",
    "out",
];

/// Parses `key = value` lines. Later duplicates are rejected.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, Invalid> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Invalid(format!("config line {}: expected 'key = value'", i + 1)))?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Invalid(format!("config line {}: unknown key '{key}'", i + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Invalid(format!("config line {}: duplicate key '{key}'", i + 1)));
        }
    }
    Ok(map)
}

fn get<T: FromStr>(map: &BTreeMap<String, String>, key: &str, default: T) -> Result<T, Invalid> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| Invalid(format!("config key '{key}': cannot parse '{v}'"))),
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let path = PathBuf::from(p);
    if path.is_absolute() {
        path
    } else {
        base.join(path)
    }
}

impl Config {
    /// Reads a config file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, Invalid> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Invalid(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_text(&text, base)
    }

    pub fn from_text(text: &str, base: &Path) -> Result<Self, Invalid> {
        let map = parse_pairs(text)?;
        let asset = map.get("asset").ok_or_else(|| Invalid("config key 'asset' is required".into()))?;
        let fx_spec = map.get("fx").ok_or_else(|| Invalid("config key 'fx' is required".into()))?;
        let mut fx = Vec::new();
        for item in fx_spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (label, file) = item
                .split_once(':')
                .ok_or_else(|| Invalid(format!("fx entry '{item}' must be 'label:path'")))?;
            if fx.iter().any(|(l, _): &(String, PathBuf)| l == label.trim()) {
                return Err(Invalid(format!("duplicate fx label '{}'", label.trim())));
            }
            fx.push((label.trim().to_string(), resolve(base, file.trim())));
        }
        if fx.is_empty() {
            return Err(Invalid("at least one fx series is required".into()));
        }
        let windows: Vec<usize> = match map.get("windows") {
            None => Vec::new(),
            Some(v) => v
                .split(',')
                .map(|w| w.trim().parse::<usize>().map_err(|_| Invalid(format!("bad window '{w}'"))))
                .collect::<Result<_, _>>()?,
        };
        let defaults = ProposalTuning::default();
        let cfg = Config {
            asset: resolve(base, asset),
            asset_columns: SeriesColumns {
                date: get(&map, "asset_date_column", "date".to_string())?,
                price: get(&map, "asset_price_column", "price".to_string())?,
            },
            fx,
            options: map.get("options").map(|p| resolve(base, p)),
            r_d_annual: get(&map, "r_d", 0.0)?,
            r_f_annual: get(&map, "r_f", 0.0)?,
            h_fix: get(&map, "h_fix", 1.0)?,
            periods_per_year: get(&map, "periods_per_year", 252)?,
            draws: get(&map, "draws", 300_000)?,
            burn_in: get(&map, "burn_in", 100_000)?,
            seed: get(&map, "seed", 0)?,
            families: parse_families(map.get("families").map_or("ttn,tnn,ign,mnc,mle", String::as_str))?,
            tuning: ProposalTuning {
                scale_multiplier: get(&map, "scale_multiplier", defaults.scale_multiplier)?,
                student_t_df: get(&map, "student_t_df", defaults.student_t_df)?,
                inverse_gamma_shape: map
                    .get("inverse_gamma_shape")
                    .map(|v| v.parse())
                    .transpose()
                    .map_err(|_| Invalid("config key 'inverse_gamma_shape': not a number".into()))?,
                rho_step: get(&map, "rho_step", defaults.rho_step)?,
            },
            payoff: map
                .get("payoff")
                .map_or(Ok(PayoffKind::FixedRate), |v| v.parse())
                .map_err(|_| Invalid("config key 'payoff' must be f1, f2, f3 or f4".into()))?,
            n_paths: get(&map, "n_paths", 100_000)?,
            paths_per_draw: get(&map, "paths_per_draw", 1_000)?,
            mode: get(&map, "mode", ModeKind::Static)?,
            refresh_interval: get(&map, "refresh_interval", 5)?,
            sweeps_per_refresh: get(&map, "sweeps_per_refresh", 1)?,
            sequential_family: map
                .get("sequential_family")
                .map_or(Ok(CandidateFamily::Ign), |v| v.parse())
                .map_err(|_| Invalid("config key 'sequential_family' must be ttn, tnn or ign".into()))?,
            sample_size: get(&map, "sample_size", windows.iter().copied().max().unwrap_or(0))?,
            windows,
            focus_strike: map.get("focus_strike").map(|v| v.parse()).transpose().map_err(|_| Invalid("bad focus_strike".into()))?,
            focus_maturity: map.get("focus_maturity").map(|v| v.parse()).transpose().map_err(|_| Invalid("bad focus_maturity".into()))?,
            histogram_bins: get(&map, "histogram_bins", 40)?,
            out: resolve(base, map.get("out").map_or("out", String::as_str)),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Invalid> {
        if self.burn_in >= self.draws {
            return Err(Invalid(format!("need draws > burn_in, got {} and {}", self.draws, self.burn_in)));
        }
        if self.n_paths == 0 || self.paths_per_draw == 0 {
            return Err(Invalid("n_paths and paths_per_draw must be positive".into()));
        }
        if !(self.h_fix > 0.0) || self.periods_per_year == 0 {
            return Err(Invalid("h_fix and periods_per_year must be positive".into()));
        }
        if self.refresh_interval == 0 {
            return Err(Invalid("refresh_interval must be positive".into()));
        }
        if self.histogram_bins == 0 {
            return Err(Invalid("histogram_bins must be positive".into()));
        }
        if self.sample_size < 2 || self.windows.iter().any(|&w| w < 2) {
            return Err(Invalid("sample sizes must be at least 2 (set 'sample_size' or 'windows')".into()));
        }
        Ok(())
    }

    /// Sample-size windows for the experiment grid; `sample_size` when unset.
    pub fn experiment_windows(&self) -> Vec<usize> {
        if self.windows.is_empty() {
            vec![self.sample_size]
        } else {
            self.windows.clone()
        }
    }

    /// Resolved settings, one `key = value` per line, for the run manifest.
    pub fn echo(&self) -> String {
        let fams: Vec<&str> = self.families.iter().map(|f| f.name()).collect();
        let fx: Vec<String> = self.fx.iter().map(|(l, p)| format!("{l}:{}", p.display())).collect();
        let windows: Vec<String> = self.windows.iter().map(ToString::to_string).collect();
        let mut lines = vec![
            format!("asset = {}", self.asset.display()),
            format!("asset_date_column = {}", self.asset_columns.date),
            format!("asset_price_column = {}", self.asset_columns.price),
            format!("fx = {}", fx.join(",")),
            format!("options = {}", self.options.as_ref().map_or("-".into(), |p| p.display().to_string())),
            format!("r_d = {}", self.r_d_annual),
            format!("r_f = {}", self.r_f_annual),
            format!("h_fix = {}", self.h_fix),
            format!("periods_per_year = {}", self.periods_per_year),
            format!("draws = {}", self.draws),
            format!("burn_in = {}", self.burn_in),
            format!("seed = {}", self.seed),
            format!("families = {}", fams.join(",")),
            format!("scale_multiplier = {}", self.tuning.scale_multiplier),
            format!("student_t_df = {}", self.tuning.student_t_df),
            format!("rho_step = {}", self.tuning.rho_step),
            format!("payoff = {}", self.payoff),
            format!("n_paths = {}", self.n_paths),
            format!("paths_per_draw = {}", self.paths_per_draw),
            format!("mode = {}", self.mode),
            format!("refresh_interval = {}", self.refresh_interval),
            format!("sweeps_per_refresh = {}", self.sweeps_per_refresh),
            format!("sequential_family = {}", self.sequential_family),
            format!("windows = {}", windows.join(",")),
            format!("sample_size = {}", self.sample_size),
            format!("histogram_bins = {}", self.histogram_bins),
        ];
        if let Some(a) = self.tuning.inverse_gamma_shape {
            lines.push(format!("inverse_gamma_shape = {a}"));
        }
        if let Some(k) = self.focus_strike {
            lines.push(format!("focus_strike = {k}"));
        }
        if let Some(m) = self.focus_maturity {
            lines.push(format!("focus_maturity = {m}"));
        }
        lines.join("\n")
    }
}
