//! Conjugate Normal–Inverse-Wishart baseline for the bivariate return model.
//!
//! The pair `(x_t, h_t)` is treated as i.i.d. bivariate normal with unknown
//! mean and covariance. The covariance posterior is inverse-Wishart and is
//! sampled exactly with the Bartlett decomposition, so the resulting chain has
//! no autocorrelation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::mwg::Chain;
use crate::error::{Error, Result};
use crate::model::{SufficientStats, Theta};

type Mat2 = [[f64; 2]; 2];

/// Normal–Inverse-Wishart prior: `μ | Σ ~ N(mean, Σ/κ0)`, `Σ ~ IW(ν0, scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NiwHyperparams {
    pub mean: [f64; 2],
    pub kappa0: f64,
    pub nu0: f64,
    pub scale: Mat2,
}

impl Default for NiwHyperparams {
    fn default() -> Self {
        Self { mean: [0.0, 0.0], kappa0: 1.0, nu0: 4.0, scale: [[1e-4, 0.0], [0.0, 1e-4]] }
    }
}

impl NiwHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa0 > 0.0 && self.kappa0.is_finite()) {
            return Err(Error::InvalidHyperparameters(format!("kappa0 must be positive, got {}", self.kappa0)));
        }
        // a proper inverse-Wishart in dimension 2 needs ν > 1
        if !(self.nu0 > 1.0 && self.nu0.is_finite()) {
            return Err(Error::InvalidHyperparameters(format!("nu0 must exceed 1, got {}", self.nu0)));
        }
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidHyperparameters("prior mean must be finite".into()));
        }
        let s = self.scale;
        if s[0][1] != s[1][0] || !(s[0][0] > 0.0) || !(det(&s) > 0.0) {
            return Err(Error::InvalidHyperparameters("scale matrix must be symmetric positive definite".into()));
        }
        Ok(())
    }

    /// Posterior hyperparameters after observing `stats`.
    pub fn update(&self, stats: &SufficientStats) -> Result<NiwHyperparams> {
        self.validate()?;
        let n = stats.len() as f64;
        if stats.is_empty() {
            return Ok(*self);
        }
        let kappa_n = self.kappa0 + n;
        let ybar = [stats.mean_x(), stats.mean_h()];
        let d = [ybar[0] - self.mean[0], ybar[1] - self.mean[1]];
        let w = self.kappa0 * n / kappa_n;
        let scale = [
            [self.scale[0][0] + stats.sxx() + w * d[0] * d[0], self.scale[0][1] + stats.sxh() + w * d[0] * d[1]],
            [self.scale[1][0] + stats.sxh() + w * d[1] * d[0], self.scale[1][1] + stats.shh() + w * d[1] * d[1]],
        ];
        let mean = [
            (self.kappa0 * self.mean[0] + n * ybar[0]) / kappa_n,
            (self.kappa0 * self.mean[1] + n * ybar[1]) / kappa_n,
        ];
        Ok(NiwHyperparams { mean, kappa0: kappa_n, nu0: self.nu0 + n, scale })
    }
}

fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn inverse(m: &Mat2) -> Mat2 {
    let d = det(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

fn cholesky(m: &Mat2) -> Mat2 {
    let l00 = m[0][0].sqrt();
    let l10 = m[1][0] / l00;
    let l11 = (m[1][1] - l10 * l10).sqrt();
    [[l00, 0.0], [l10, l11]]
}

/// One covariance draw from `IW(nu, scale)`.
fn sample_inverse_wishart<R: Rng + ?Sized>(nu: f64, chol_of_inverse_scale: &Mat2, rng: &mut R) -> Mat2 {
    let l = chol_of_inverse_scale;
    let c1 = ChiSquared::new(nu).expect("nu > 1").sample(rng).sqrt();
    let c2 = ChiSquared::new(nu - 1.0).expect("nu > 1").sample(rng).sqrt();
    let z: f64 = rng.sample(StandardNormal);
    // Bartlett factor A = [[c1, 0], [z, c2]]; W = (L A)(L A)ᵀ ~ Wishart(nu, scale⁻¹)
    let la = [[l[0][0] * c1, 0.0], [l[1][0] * c1 + l[1][1] * z, l[1][1] * c2]];
    let w = [
        [la[0][0] * la[0][0], la[0][0] * la[1][0]],
        [la[1][0] * la[0][0], la[1][0] * la[1][0] + la[1][1] * la[1][1]],
    ];
    inverse(&w)
}

/// Exact i.i.d. draws of `(σx, σh, ρ)` from the conjugate posterior.
///
/// `k` draws are generated and the first `burn_in` are flagged as burn-in to
/// mirror the MCMC chains; pass [`SufficientStats::empty`] for prior draws.
pub fn conjugate_sample(
    stats: &SufficientStats,
    hyper: &NiwHyperparams,
    k: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Chain> {
    if burn_in >= k {
        return Err(Error::Domain(format!("need K > K0, got K={k}, K0={burn_in}")));
    }
    let post = hyper.update(stats)?;
    let chol = cholesky(&inverse(&post.scale));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(k);
    while draws.len() < k {
        let sigma = sample_inverse_wishart(post.nu0, &chol, &mut rng);
        let sx = sigma[0][0].sqrt();
        let sh = sigma[1][1].sqrt();
        if let Ok(theta) = Theta::new(sx, sh, sigma[0][1] / (sx * sh)) {
            draws.push(theta);
        }
    }
    let kept = (k - burn_in) as u64;
    Chain::new(draws, burn_in, [kept; 3], seed)
}
