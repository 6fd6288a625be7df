use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal, StudentT};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// Candidate-density families for a single coordinate.
///
/// The truncated families and the inverse gamma are independence proposals
/// on `(0, ∞)`. `Normal` is a random walk around the current value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProposalFamily {
    /// Inverse gamma on `σ²`; the candidate returned is `σ`.
    InverseGamma { shape: f64, scale: f64 },
    TruncatedNormal { location: f64, scale: f64 },
    TruncatedStudentT { location: f64, scale: f64, df: f64 },
    Normal { scale: f64 },
}

/// A validated proposal with its normalizing constant cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalSpec {
    family: ProposalFamily,
    log_norm: f64,
}

impl ProposalSpec {
    pub fn new(family: ProposalFamily) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidProposal(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let log_norm = match family {
            ProposalFamily::InverseGamma { shape, scale } => {
                positive("scale", scale)?;
                if !(shape > 2.0 && shape.is_finite()) {
                    return Err(Error::InvalidProposal(format!("inverse-gamma shape must exceed 2, got {shape}")));
                }
                shape * scale.ln() - ln_gamma(shape)
            }
            ProposalFamily::TruncatedNormal { location, scale } => {
                positive("scale", scale)?;
                if !location.is_finite() {
                    return Err(Error::InvalidProposal("location must be finite".into()));
                }
                let std = StatNormal::new(0.0, 1.0).expect("standard normal");
                let mass = std.sf(-location / scale);
                if mass <= 0.0 {
                    return Err(Error::InvalidProposal("truncated normal has no mass on (0, inf)".into()));
                }
                -0.5 * LN_2PI - scale.ln() - mass.ln()
            }
            ProposalFamily::TruncatedStudentT { location, scale, df } => {
                positive("scale", scale)?;
                if !(df > 2.0 && df.is_finite()) {
                    return Err(Error::InvalidProposal(format!("degrees of freedom must exceed 2, got {df}")));
                }
                if !location.is_finite() {
                    return Err(Error::InvalidProposal("location must be finite".into()));
                }
                let t = StudentsT::new(0.0, 1.0, df).expect("valid Student t");
                let mass = t.sf(-location / scale);
                if mass <= 0.0 {
                    return Err(Error::InvalidProposal("truncated Student t has no mass on (0, inf)".into()));
                }
                ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * std::f64::consts::PI).ln()
                    - scale.ln()
                    - mass.ln()
            }
            ProposalFamily::Normal { scale } => {
                positive("scale", scale)?;
                -0.5 * LN_2PI - scale.ln()
            }
        };
        Ok(Self { family, log_norm })
    }

    pub fn inverse_gamma(shape: f64, scale: f64) -> Result<Self> {
        Self::new(ProposalFamily::InverseGamma { shape, scale })
    }

    pub fn truncated_normal(location: f64, scale: f64) -> Result<Self> {
        Self::new(ProposalFamily::TruncatedNormal { location, scale })
    }

    pub fn truncated_student_t(location: f64, scale: f64, df: f64) -> Result<Self> {
        Self::new(ProposalFamily::TruncatedStudentT { location, scale, df })
    }

    pub fn random_walk(scale: f64) -> Result<Self> {
        Self::new(ProposalFamily::Normal { scale })
    }

    pub fn family(&self) -> ProposalFamily {
        self.family
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self.family, ProposalFamily::Normal { .. })
    }

    /// Draws a candidate. `current` is only used by the random walk.
    pub fn propose<R: Rng + ?Sized>(&self, current: f64, rng: &mut R) -> f64 {
        match self.family {
            ProposalFamily::InverseGamma { shape, scale } => {
                let precision = Gamma::new(shape, 1.0 / scale).expect("validated gamma").sample(rng);
                (1.0 / precision).sqrt()
            }
            ProposalFamily::TruncatedNormal { location, scale } => {
                location + scale * sample_std_normal_above(-location / scale, rng)
            }
            ProposalFamily::TruncatedStudentT { location, scale, df } => {
                location + scale * sample_student_t_above(-location / scale, df, rng)
            }
            ProposalFamily::Normal { scale } => {
                let z: f64 = rng.sample(StandardNormal);
                current + scale * z
            }
        }
    }

    /// Normalized log density of an independence proposal at `value`.
    /// For the random walk this is the density of the increment `value`.
    pub fn logpdf(&self, value: f64) -> f64 {
        match self.family {
            ProposalFamily::InverseGamma { shape, scale } => {
                if value <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let v2 = value * value;
                // density of σ² times the Jacobian |dσ²/dσ| = 2σ
                self.log_norm - (shape + 1.0) * v2.ln() - scale / v2 + std::f64::consts::LN_2 + value.ln()
            }
            ProposalFamily::TruncatedNormal { location, scale } => {
                if value <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (value - location) / scale;
                self.log_norm - 0.5 * z * z
            }
            ProposalFamily::TruncatedStudentT { location, scale, df } => {
                if value <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = (value - location) / scale;
                self.log_norm - 0.5 * (df + 1.0) * (z * z / df).ln_1p()
            }
            ProposalFamily::Normal { scale } => {
                let z = value / scale;
                self.log_norm - 0.5 * z * z
            }
        }
    }

    /// `ln q(current | candidate) − ln q(candidate | current)`, the proposal
    /// part of the Metropolis-Hastings log acceptance ratio.
    pub fn log_hastings_ratio(&self, current: f64, candidate: f64) -> f64 {
        if self.is_symmetric() {
            0.0
        } else {
            self.logpdf(current) - self.logpdf(candidate)
        }
    }
}

/// Standard normal conditioned on `z > lower`.
fn sample_std_normal_above<R: Rng + ?Sized>(lower: f64, rng: &mut R) -> f64 {
    if lower <= 0.0 {
        // acceptance probability at least one half
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z > lower {
                return z;
            }
        }
    }
    // exponential rejection sampler for the far tail
    let alpha = 0.5 * (lower + (lower * lower + 4.0).sqrt());
    let exp = Exp::new(alpha).expect("positive rate");
    loop {
        let z = lower + exp.sample(rng);
        let u: f64 = rng.random();
        if u <= (-0.5 * (z - alpha).powi(2)).exp() {
            return z;
        }
    }
}

/// Standard Student t conditioned on `t > lower`.
fn sample_student_t_above<R: Rng + ?Sized>(lower: f64, df: f64, rng: &mut R) -> f64 {
    if lower <= 0.0 {
        let dist = StudentT::new(df).expect("validated df");
        loop {
            let t = dist.sample(rng);
            if t > lower {
                return t;
            }
        }
    }
    let dist = StudentsT::new(0.0, 1.0, df).expect("validated df");
    let lo = dist.cdf(lower);
    loop {
        let u: f64 = rng.random();
        let t = dist.inverse_cdf(lo + (1.0 - lo) * u);
        if t > lower && t.is_finite() {
            return t;
        }
    }
}

/// Candidate density used for the two volatility coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VolatilityCandidate {
    InverseGamma,
    TruncatedNormal,
    TruncatedStudentT,
}

/// Named candidate triples `(q1, q2, q3)`; `ρ` always uses the Normal random walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CandidateFamily {
    Ttn,
    Tnn,
    Ign,
}

impl CandidateFamily {
    pub const ALL: [CandidateFamily; 3] = [CandidateFamily::Ttn, CandidateFamily::Tnn, CandidateFamily::Ign];

    pub fn volatility_candidate(self) -> VolatilityCandidate {
        match self {
            CandidateFamily::Ttn => VolatilityCandidate::TruncatedStudentT,
            CandidateFamily::Tnn => VolatilityCandidate::TruncatedNormal,
            CandidateFamily::Ign => VolatilityCandidate::InverseGamma,
        }
    }
}

impl fmt::Display for CandidateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CandidateFamily::Ttn => "ttn",
            CandidateFamily::Tnn => "tnn",
            CandidateFamily::Ign => "ign",
        })
    }
}

impl FromStr for CandidateFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ttn" => Ok(CandidateFamily::Ttn),
            "tnn" => Ok(CandidateFamily::Tnn),
            "ign" => Ok(CandidateFamily::Ign),
            other => Err(Error::InvalidProposal(format!("unknown candidate family '{other}'"))),
        }
    }
}

/// Knobs for MLE-anchored proposals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalTuning {
    /// Truncated proposals use scale `scale_multiplier · σ̂ / √T`.
    pub scale_multiplier: f64,
    pub student_t_df: f64,
    /// Shape of the inverse-gamma proposal on `σ²`. `None` picks
    /// `2 + T / (4·scale_multiplier²)`, which gives `σ` roughly the same
    /// spread as the truncated proposals.
    pub inverse_gamma_shape: Option<f64>,
    pub rho_step: f64,
}

impl Default for ProposalTuning {
    fn default() -> Self {
        Self { scale_multiplier: 2.0, student_t_df: 5.0, inverse_gamma_shape: None, rho_step: 0.1 }
    }
}

/// Proposals for `(σx, σh, ρ)` in update order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalSet {
    pub sigma_x: ProposalSpec,
    pub sigma_h: ProposalSpec,
    pub rho: ProposalSpec,
}

impl ProposalSet {
    /// Independence proposals centred on the MLE volatilities and a Normal
    /// random walk for `ρ`.
    pub fn anchored(
        family: CandidateFamily,
        sigma_x_hat: f64,
        sigma_h_hat: f64,
        sample_size: usize,
        tuning: &ProposalTuning,
    ) -> Result<Self> {
        if sample_size == 0 {
            return Err(Error::InvalidProposal("sample size must be positive".into()));
        }
        let vol = |sigma_hat: f64| -> Result<ProposalSpec> {
            let spread = tuning.scale_multiplier * sigma_hat / (sample_size as f64).sqrt();
            match family.volatility_candidate() {
                VolatilityCandidate::TruncatedNormal => ProposalSpec::truncated_normal(sigma_hat, spread),
                VolatilityCandidate::TruncatedStudentT => {
                    ProposalSpec::truncated_student_t(sigma_hat, spread, tuning.student_t_df)
                }
                VolatilityCandidate::InverseGamma => {
                    // mode of IG(a, b) is b / (a + 1)
                    let shape = tuning.inverse_gamma_shape.unwrap_or_else(|| {
                        2.0 + sample_size as f64 / (4.0 * tuning.scale_multiplier * tuning.scale_multiplier)
                    });
                    ProposalSpec::inverse_gamma(shape, sigma_hat * sigma_hat * (shape + 1.0))
                }
            }
        };
        Ok(Self {
            sigma_x: vol(sigma_x_hat)?,
            sigma_h: vol(sigma_h_hat)?,
            rho: ProposalSpec::random_walk(tuning.rho_step)?,
        })
    }

    pub fn get(&self, parameter: crate::model::Parameter) -> &ProposalSpec {
        use crate::model::Parameter;
        match parameter {
            Parameter::SigmaX => &self.sigma_x,
            Parameter::SigmaH => &self.sigma_h,
            Parameter::Rho => &self.rho,
        }
    }
}
