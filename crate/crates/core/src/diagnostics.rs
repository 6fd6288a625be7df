//! Chain summaries: numerical standard error, Geweke's convergence
//! diagnostic and highest posterior density intervals.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::inference::Chain;
use crate::model::Parameter;

/// Minimum length for which `geweke_cd` reports a value.
pub const MIN_CD_LENGTH: usize = 100;

/// Number of low Fourier frequencies averaged by the Daniell window.
fn daniell_width(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).clamp(1, (n / 2).max(1))
}

/// Spectral density at frequency zero from a Daniell-smoothed periodogram,
/// normalized so that white noise has `S(0) = variance`.
pub fn spectral_density_at_zero(samples: &[f64]) -> f64 {
    let n = samples.len();
    if n < 2 {
        return 0.0;
    }
    if is_constant(samples) {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let m = daniell_width(n);
    let total: f64 = buf[1..=m].iter().map(|c| c.norm_sqr() / n as f64).sum();
    total / m as f64
}

fn is_constant(samples: &[f64]) -> bool {
    samples.iter().all(|&v| v == samples[0])
}

/// Numerical standard error `√(S(0)/n)` of the sample mean.
pub fn nse(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (spectral_density_at_zero(samples) / samples.len() as f64).sqrt()
}

/// Geweke's z-score comparing the first 10% and the last 50% of a chain.
/// `None` when the chain is too short or both segments have zero variance.
pub fn geweke_cd(samples: &[f64]) -> Option<f64> {
    let n = samples.len();
    if n < MIN_CD_LENGTH {
        return None;
    }
    let first = &samples[..n / 10];
    let last = &samples[n - n / 2..];
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let var = nse(first).powi(2) + nse(last).powi(2);
    if var <= 0.0 || !var.is_finite() {
        return None;
    }
    Some((mean(first) - mean(last)) / var.sqrt())
}

/// Shortest interval spanned by `⌈level·n⌉` sorted samples; ties go to the
/// smallest lower bound.
pub fn hpdi(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("HPDI level must lie in (0, 1), got {level}")));
    }
    if samples.is_empty() {
        return Err(Error::EmptyChain);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let count = ((level * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let mut best = (sorted[0], sorted[count - 1]);
    for w in sorted.windows(count).skip(1) {
        let (lo, hi) = (w[0], w[count - 1]);
        if hi - lo < best.1 - best.0 {
            best = (lo, hi);
        }
    }
    Ok(best)
}

/// Summary statistics of one parameter's post-burn-in draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSummary {
    pub mean: f64,
    pub std_dev: f64,
    pub nse: f64,
    pub cd: Option<f64>,
    pub hpdi_95: (f64, f64),
    pub hpdi_99: (f64, f64),
    pub acceptance_rate: f64,
}

pub fn summarize_values(values: &[f64], acceptance_rate: f64) -> Result<ChainSummary> {
    if values.is_empty() {
        return Err(Error::EmptyChain);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_dev = if values.len() > 1 && !is_constant(values) {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(ChainSummary {
        mean,
        std_dev,
        nse: nse(values),
        cd: geweke_cd(values),
        hpdi_95: hpdi(values, 0.95)?,
        hpdi_99: hpdi(values, 0.99)?,
        acceptance_rate,
    })
}

/// Summarizes one coordinate of `chain`, burn-in excluded.
pub fn summarize(chain: &Chain, parameter: Parameter) -> Result<ChainSummary> {
    summarize_values(&chain.column(parameter), chain.acceptance_rate(parameter))
}
