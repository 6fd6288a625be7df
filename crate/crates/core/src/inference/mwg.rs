use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::kernel::{ConditionalTarget, PosteriorKernel};
use super::proposal::ProposalSet;
use crate::error::{Error, Result};
use crate::model::{Parameter, ReturnPanel, Theta};

/// Ordered posterior draws with burn-in and acceptance bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    draws: Vec<Theta>,
    burn_in: usize,
    /// Accepted moves per parameter after burn-in.
    accepted: [u64; 3],
    seed: u64,
    warnings: Vec<String>,
}

impl Chain {
    pub fn new(draws: Vec<Theta>, burn_in: usize, accepted: [u64; 3], seed: u64) -> Result<Self> {
        if burn_in >= draws.len() {
            return Err(Error::EmptyChain);
        }
        let kept = (draws.len() - burn_in) as u64;
        if accepted.iter().any(|&a| a > kept) {
            return Err(Error::Domain("acceptance count exceeds post-burn-in length".into()));
        }
        let mut chain = Self { draws, burn_in, accepted, seed, warnings: Vec::new() };
        for p in Parameter::ALL {
            if chain.accepted[p.index()] == 0 && chain.len() - chain.burn_in > 1 {
                chain.warnings.push(format!("no accepted moves for {} after burn-in", p.name()));
            }
        }
        Ok(chain)
    }

    /// Draws with no burn-in; acceptance counted as changes between
    /// consecutive values.
    pub fn from_draws(draws: Vec<Theta>, seed: u64) -> Result<Self> {
        let mut accepted = [0u64; 3];
        for w in draws.windows(2) {
            for p in Parameter::ALL {
                if w[0].get(p) != w[1].get(p) {
                    accepted[p.index()] += 1;
                }
            }
        }
        Self::new(draws, 0, accepted, seed)
    }

    /// One-draw chain at a fixed parameter value.
    pub fn single(theta: Theta) -> Self {
        Self { draws: vec![theta], burn_in: 0, accepted: [0; 3], seed: 0, warnings: Vec::new() }
    }

    pub fn draws(&self) -> &[Theta] {
        &self.draws
    }

    pub fn post_burn_in(&self) -> &[Theta] {
        &self.draws[self.burn_in..]
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn accepted(&self, parameter: Parameter) -> u64 {
        self.accepted[parameter.index()]
    }

    /// Fraction of post-burn-in updates of `parameter` that were accepted.
    pub fn acceptance_rate(&self, parameter: Parameter) -> f64 {
        let kept = self.draws.len() - self.burn_in;
        if kept == 0 {
            return 0.0;
        }
        self.accepted[parameter.index()] as f64 / kept as f64
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Post-burn-in values of one coordinate.
    pub fn column(&self, parameter: Parameter) -> Vec<f64> {
        self.post_burn_in().iter().map(|t| t.get(parameter)).collect()
    }
}

/// One Metropolis-within-Gibbs sweep updating `σx`, `σh`, `ρ` in that order.
/// Returns which coordinates moved.
///
/// Each coordinate consumes one candidate draw and one uniform, accepted or
/// not, so the random stream advances identically for every outcome.
pub fn mwg_sweep<T, R>(target: &T, proposals: &ProposalSet, theta: &mut Theta, rng: &mut R) -> [bool; 3]
where
    T: ConditionalTarget + ?Sized,
    R: Rng + ?Sized,
{
    let mut moved = [false; 3];
    for p in Parameter::ALL {
        let spec = proposals.get(p);
        let current = theta.get(p);
        let candidate = spec.propose(current, rng);
        let u: f64 = rng.random();
        let Some(next) = theta.with(p, candidate) else {
            continue;
        };
        let log_alpha = target.log_conditional(p, candidate, theta) - target.log_conditional(p, current, theta)
            + spec.log_hastings_ratio(current, candidate);
        // accept iff u < α
        if u.ln() < log_alpha {
            *theta = next;
            moved[p.index()] = true;
        }
    }
    moved
}

/// Runs `k` sweeps from `init` against an arbitrary conditional target.
pub fn mwg_sample_target<T>(
    target: &T,
    proposals: &ProposalSet,
    k: usize,
    burn_in: usize,
    init: Theta,
    seed: u64,
) -> Result<Chain>
where
    T: ConditionalTarget + ?Sized,
{
    if burn_in >= k {
        return Err(Error::Domain(format!("need K > K0, got K={k}, K0={burn_in}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = init;
    let mut draws = Vec::with_capacity(k);
    let mut accepted = [0u64; 3];
    for i in 0..k {
        let moved = mwg_sweep(target, proposals, &mut theta, &mut rng);
        if i >= burn_in {
            for (count, m) in accepted.iter_mut().zip(moved) {
                *count += u64::from(m);
            }
        }
        draws.push(theta);
    }
    Chain::new(draws, burn_in, accepted, seed)
}

/// Samples the posterior of `(σx, σh, ρ)` for a return panel.
pub fn mwg_sample(
    panel: &ReturnPanel,
    proposals: &ProposalSet,
    k: usize,
    burn_in: usize,
    init: Theta,
    seed: u64,
) -> Result<Chain> {
    let kernel = PosteriorKernel::new(*panel.stats());
    mwg_sample_target(&kernel, proposals, k, burn_in, init, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::proposal::ProposalSpec;

    struct Flat;

    impl ConditionalTarget for Flat {
        fn log_conditional(&self, _: Parameter, _: f64, _: &Theta) -> f64 {
            0.0
        }
    }

    fn rw_set(step: f64) -> ProposalSet {
        let rw = ProposalSpec::random_walk(step).unwrap();
        ProposalSet { sigma_x: rw, sigma_h: rw, rho: rw }
    }

    #[test]
    fn flat_target_with_symmetric_proposal_always_accepts() {
        let init = Theta::new(10.0, 10.0, 0.0).unwrap();
        // steps small enough that the support is never left
        let chain = mwg_sample_target(&Flat, &rw_set(1e-4), 2000, 0, init, 9).unwrap();
        for p in Parameter::ALL {
            assert_eq!(chain.accepted(p), 2000);
        }
    }

    #[test]
    fn requires_k_above_burn_in() {
        let init = Theta::new(1.0, 1.0, 0.0).unwrap();
        assert!(mwg_sample_target(&Flat, &rw_set(0.1), 10, 10, init, 1).is_err());
    }

    #[test]
    fn chain_rejects_bad_acceptance_counts() {
        let t = Theta::new(1.0, 1.0, 0.0).unwrap();
        assert!(Chain::new(vec![t; 3], 1, [3, 0, 0], 0).is_err());
        assert!(Chain::new(vec![t; 3], 3, [0, 0, 0], 0).is_err());
    }

    #[test]
    fn stuck_chain_carries_warning() {
        let t = Theta::new(1.0, 1.0, 0.0).unwrap();
        let c = Chain::new(vec![t; 10], 2, [0, 5, 5], 0).unwrap();
        assert_eq!(c.warnings().len(), 1);
        assert!(c.warnings()[0].contains("sigma_x"));
    }

    #[test]
    fn from_draws_counts_changes() {
        let a = Theta::new(1.0, 1.0, 0.0).unwrap();
        let b = Theta::new(2.0, 1.0, 0.0).unwrap();
        let c = Chain::from_draws(vec![a, b, b, a], 0).unwrap();
        assert_eq!(c.accepted(Parameter::SigmaX), 2);
        assert_eq!(c.accepted(Parameter::SigmaH), 0);
    }
}
