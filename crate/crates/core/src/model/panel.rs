use super::series::{log_returns, PriceSeries};
use crate::error::{Error, Result};

/// Centered first and second moments of a return panel.
///
/// `sxx`, `shh` and `sxh` are the centered sums `Σ(x−x̄)²`, `Σ(h−h̄)²` and
/// `Σ(x−x̄)(h−h̄)`. Appending uses Welford updates so long simulated
/// extensions stay accurate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SufficientStats {
    n: usize,
    mean_x: f64,
    mean_h: f64,
    sxx: f64,
    shh: f64,
    sxh: f64,
}

impl SufficientStats {
    pub fn empty() -> Self {
        Self { n: 0, mean_x: 0.0, mean_h: 0.0, sxx: 0.0, shh: 0.0, sxh: 0.0 }
    }

    /// Two-pass computation; panics if the slices differ in length.
    pub fn from_slices(x: &[f64], h: &[f64]) -> Self {
        assert_eq!(x.len(), h.len(), "return slices must have equal length");
        let n = x.len();
        if n == 0 {
            return Self::empty();
        }
        let nf = n as f64;
        let mean_x = x.iter().sum::<f64>() / nf;
        let mean_h = h.iter().sum::<f64>() / nf;
        let (mut sxx, mut shh, mut sxh) = (0.0, 0.0, 0.0);
        for (&xt, &ht) in x.iter().zip(h) {
            let dx = xt - mean_x;
            let dh = ht - mean_h;
            sxx += dx * dx;
            shh += dh * dh;
            sxh += dx * dh;
        }
        Self { n, mean_x, mean_h, sxx, shh, sxh }
    }

    pub fn push(&mut self, x: f64, h: f64) {
        self.n += 1;
        let nf = self.n as f64;
        let dx = x - self.mean_x;
        let dh = h - self.mean_h;
        self.mean_x += dx / nf;
        self.mean_h += dh / nf;
        self.sxx += dx * (x - self.mean_x);
        self.shh += dh * (h - self.mean_h);
        self.sxh += dx * (h - self.mean_h);
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mean_x(&self) -> f64 {
        self.mean_x
    }

    pub fn mean_h(&self) -> f64 {
        self.mean_h
    }

    /// `Σ(x_t − x̄)²`
    pub fn sxx(&self) -> f64 {
        self.sxx
    }

    /// `Σ(h_t − h̄)²`
    pub fn shh(&self) -> f64 {
        self.shh
    }

    /// `Σ(x_t − x̄)(h_t − h̄)`
    pub fn sxh(&self) -> f64 {
        self.sxh
    }

    /// `Σ x_t h_t`
    pub fn sum_xh(&self) -> f64 {
        self.sxh + self.n as f64 * self.mean_x * self.mean_h
    }

    /// `T·x̄·h̄ − Σ x_t h_t`, the cross-moment term of the posterior kernel.
    pub fn cross_moment(&self) -> f64 {
        -self.sxh
    }
}

/// Aligned log returns of the asset (`x`) and the exchange rate (`h`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    x: Vec<f64>,
    h: Vec<f64>,
    stats: SufficientStats,
}

impl ReturnPanel {
    pub fn new(x: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if x.len() != h.len() {
            return Err(Error::Domain(format!(
                "return series differ in length: {} vs {}",
                x.len(),
                h.len()
            )));
        }
        if x.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: x.len() });
        }
        if x.iter().chain(&h).any(|v| !v.is_finite()) {
            return Err(Error::Domain("returns must be finite".into()));
        }
        let stats = SufficientStats::from_slices(&x, &h);
        Ok(Self { x, h, stats })
    }

    /// Log returns of two series sharing the same date sequence.
    pub fn from_prices(asset: &PriceSeries, fx: &PriceSeries) -> Result<Self> {
        if asset.dates() != fx.dates() {
            return Err(Error::Domain("asset and FX series must be aligned on identical dates".into()));
        }
        Self::new(log_returns(asset)?, log_returns(fx)?)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn stats(&self) -> &SufficientStats {
        &self.stats
    }

    /// The most recent `t` returns.
    pub fn tail(&self, t: usize) -> Result<Self> {
        if t > self.len() {
            return Err(Error::InsufficientData { needed: t, got: self.len() });
        }
        let start = self.len() - t;
        Self::new(self.x[start..].to_vec(), self.h[start..].to_vec())
    }
}
