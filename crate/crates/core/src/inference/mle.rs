use crate::error::{Error, Result};
use crate::model::{Drift, ReturnPanel, Theta};

/// Closed-form maximum likelihood estimate of the bivariate return model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleEstimate {
    pub theta_hat: Theta,
    pub drift_hat: Drift,
}

/// Sample moments with divisor `T`; the drifts add back the `σ²/2`
/// convexity term so that `μ̂ − σ̂²/2` equals the mean log return.
pub fn mle_estimate(panel: &ReturnPanel) -> Result<MleEstimate> {
    let s = panel.stats();
    let t = s.len() as f64;
    if s.sxx() <= 0.0 || s.shh() <= 0.0 {
        return Err(Error::DegenerateData("zero sample variance".into()));
    }
    let var_x = s.sxx() / t;
    let var_h = s.shh() / t;
    let rho = s.sxh() / (s.sxx() * s.shh()).sqrt();
    if 1.0 - rho.abs() < 1e-12 {
        return Err(Error::DegenerateData(format!("perfectly correlated returns (rho = {rho})")));
    }
    let theta_hat = Theta::new(var_x.sqrt(), var_h.sqrt(), rho)?;
    let drift_hat = Drift::new(s.mean_x() + 0.5 * var_x, s.mean_h() + 0.5 * var_h)?;
    Ok(MleEstimate { theta_hat, drift_hat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{physical_logpdf, simulate_return_pair, MarketConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn synthetic(theta: Theta, n: usize, seed: u64) -> ReturnPanel {
        let market = MarketConfig::new(0.0003, 0.0001, 1.0, 252).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, h) = (0..n).map(|_| simulate_return_pair(&theta, &market, &mut rng)).unzip();
        ReturnPanel::new(x, h).unwrap()
    }

    #[test]
    fn identical_series_are_degenerate() {
        let x = vec![0.01, -0.02, 0.005, 0.0];
        let panel = ReturnPanel::new(x.clone(), x).unwrap();
        assert!(matches!(mle_estimate(&panel), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn two_point_panel_is_degenerate() {
        let panel = ReturnPanel::new(vec![-0.3, 0.3], vec![-0.2, 0.2]).unwrap();
        assert!(matches!(mle_estimate(&panel), Err(Error::DegenerateData(_))));
        // The variance part of the estimate is still a, b with divisor T.
        let s = panel.stats();
        assert!(((s.sxx() / 2.0).sqrt() - 0.3).abs() < 1e-15);
        assert!(((s.shh() / 2.0).sqrt() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let panel = ReturnPanel::new(vec![0.01; 5], vec![0.0, 0.1, 0.2, 0.0, 0.1]).unwrap();
        assert!(matches!(mle_estimate(&panel), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn consistent_at_large_sample() {
        let truth = Theta::new(0.006, 0.004, -0.3).unwrap();
        let n = 100_000;
        let est = mle_estimate(&synthetic(truth, n, 21)).unwrap().theta_hat;
        let nf = n as f64;
        // asymptotic s.e.: σ/√(2n) for each volatility, (1−ρ²)/√n for ρ
        assert!((est.sigma_x() - 0.006).abs() < 4.0 * 0.006 / (2.0 * nf).sqrt());
        assert!((est.sigma_h() - 0.004).abs() < 4.0 * 0.004 / (2.0 * nf).sqrt());
        assert!((est.rho() + 0.3).abs() < 4.0 * (1.0 - 0.09) / nf.sqrt());
    }

    #[test]
    fn likelihood_gradient_vanishes_at_estimate() {
        let truth = Theta::new(0.8, 1.2, 0.35).unwrap();
        let panel = synthetic(truth, 500, 8);
        let est = mle_estimate(&panel).unwrap();
        let loglik = |p: [f64; 5]| -> f64 {
            let theta = Theta::new(p[2], p[3], p[4]).unwrap();
            let drift = Drift::new(p[0], p[1]).unwrap();
            panel.x().iter().zip(panel.h()).map(|(&x, &h)| physical_logpdf(x, h, &drift, &theta)).sum()
        };
        let at = [
            est.drift_hat.mu_x,
            est.drift_hat.mu_h,
            est.theta_hat.sigma_x(),
            est.theta_hat.sigma_h(),
            est.theta_hat.rho(),
        ];
        let step = 1e-6;
        let mut norm2 = 0.0;
        for i in 0..5 {
            let mut up = at;
            let mut down = at;
            up[i] += step;
            down[i] -= step;
            let g = (loglik(up) - loglik(down)) / (2.0 * step);
            norm2 += g * g;
        }
        assert!(norm2.sqrt() < 1e-5, "gradient norm {}", norm2.sqrt());
    }
}
