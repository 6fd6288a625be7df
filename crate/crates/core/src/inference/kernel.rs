use crate::model::{Parameter, SufficientStats, Theta};

/// Unnormalized log posterior of `(σx, σh, ρ)` with the drifts integrated out
/// under the reference prior.
///
/// Every evaluation works from cached sufficient statistics, so a kernel is
/// cheap to copy and share across threads. Out-of-support arguments return
/// `-∞` instead of failing.
#[derive(Debug, Clone, Copy)]
pub struct PosteriorKernel {
    stats: SufficientStats,
}

impl PosteriorKernel {
    pub fn new(stats: SufficientStats) -> Self {
        Self { stats }
    }

    pub fn stats(&self) -> &SufficientStats {
        &self.stats
    }

    pub fn stats_mut(&mut self) -> &mut SufficientStats {
        &mut self.stats
    }

    fn t(&self) -> f64 {
        self.stats.len() as f64
    }

    pub fn log_joint(&self, sigma_x: f64, sigma_h: f64, rho: f64) -> f64 {
        if !in_support(sigma_x, sigma_h, rho) {
            return f64::NEG_INFINITY;
        }
        let t = self.t();
        let one_minus = 1.0 - rho * rho;
        -0.5 * t * one_minus.ln() - t * sigma_x.ln() - (t - 1.0) * sigma_h.ln()
            - self.stats.sxx() / (2.0 * sigma_x * sigma_x * one_minus)
            - self.stats.shh() / (2.0 * sigma_h * sigma_h * one_minus)
            - rho * self.stats.cross_moment() / (sigma_x * sigma_h * one_minus)
    }

    pub fn log_joint_theta(&self, theta: &Theta) -> f64 {
        self.log_joint(theta.sigma_x(), theta.sigma_h(), theta.rho())
    }

    /// Full conditional of `σx` given `(σh, ρ)`, up to a constant.
    pub fn log_cond_sigma_x(&self, sigma_x: f64, sigma_h: f64, rho: f64) -> f64 {
        if !in_support(sigma_x, sigma_h, rho) {
            return f64::NEG_INFINITY;
        }
        let one_minus = 1.0 - rho * rho;
        -self.t() * sigma_x.ln()
            - self.stats.sxx() / (2.0 * sigma_x * sigma_x * one_minus)
            - rho * self.stats.cross_moment() / (sigma_x * sigma_h * one_minus)
    }

    /// Full conditional of `σh` given `(σx, ρ)`, up to a constant.
    pub fn log_cond_sigma_h(&self, sigma_h: f64, sigma_x: f64, rho: f64) -> f64 {
        if !in_support(sigma_x, sigma_h, rho) {
            return f64::NEG_INFINITY;
        }
        let one_minus = 1.0 - rho * rho;
        -(self.t() - 1.0) * sigma_h.ln()
            - self.stats.shh() / (2.0 * sigma_h * sigma_h * one_minus)
            - rho * self.stats.cross_moment() / (sigma_x * sigma_h * one_minus)
    }

    /// Full conditional of `ρ` given `(σx, σh)`, up to a constant.
    ///
    /// The `h` quadratic carries a `ρ²` factor; it differs from the joint
    /// kernel's `1/(1−ρ²)` form by a term constant in `ρ`.
    pub fn log_cond_rho(&self, rho: f64, sigma_x: f64, sigma_h: f64) -> f64 {
        if !in_support(sigma_x, sigma_h, rho) {
            return f64::NEG_INFINITY;
        }
        let rho2 = rho * rho;
        let one_minus = 1.0 - rho2;
        -0.5 * self.t() * one_minus.ln()
            - self.stats.sxx() / (2.0 * sigma_x * sigma_x * one_minus)
            - rho2 * self.stats.shh() / (2.0 * sigma_h * sigma_h * one_minus)
            - rho * self.stats.cross_moment() / (sigma_x * sigma_h * one_minus)
    }
}

fn in_support(sigma_x: f64, sigma_h: f64, rho: f64) -> bool {
    Parameter::SigmaX.in_support(sigma_x)
        && Parameter::SigmaH.in_support(sigma_h)
        && Parameter::Rho.in_support(rho)
}

/// Target for one coordinate update of the Gibbs sweep.
pub trait ConditionalTarget {
    /// Log conditional kernel of `parameter` at `value`, all other
    /// coordinates taken from `current`.
    fn log_conditional(&self, parameter: Parameter, value: f64, current: &Theta) -> f64;
}

impl ConditionalTarget for PosteriorKernel {
    fn log_conditional(&self, parameter: Parameter, value: f64, current: &Theta) -> f64 {
        let (sx, sh, rho) = (current.sigma_x(), current.sigma_h(), current.rho());
        match parameter {
            Parameter::SigmaX => self.log_cond_sigma_x(value, sh, rho),
            Parameter::SigmaH => self.log_cond_sigma_h(value, sx, rho),
            Parameter::Rho => self.log_cond_rho(value, sx, sh),
        }
    }
}
