//! Multivariate tree-structured Parzen estimator on the unit cube.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erf_inv};

use super::space::SearchSpace;
use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const MAX_REJECTS: usize = 1000;
const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpeConfig {
    /// Fraction of completed trials treated as "good".
    pub gamma: f64,
    /// Candidates drawn from the good density per suggestion.
    pub candidates: usize,
    /// Completed trials needed before the densities are used.
    pub startup_trials: usize,
    /// Kernel width for a single observation, in unit-cube coordinates.
    pub bandwidth: f64,
}

impl Default for TpeConfig {
    fn default() -> Self {
        Self {
            gamma: 0.25,
            candidates: 24,
            startup_trials: 3,
            bandwidth: 0.2,
        }
    }
}

/// A past trial in unit-cube coordinates; `None` marks a failed trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub unit: Vec<f64>,
    pub objective: Option<f64>,
}

fn phi(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / SQRT_2))
}

fn phi_inv(p: f64) -> f64 {
    SQRT_2 * erf_inv(2.0 * p - 1.0)
}

/// Gaussian kernel truncated to `[0, 1]`.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    mu: f64,
    sigma: f64,
    lo: f64,
    mass: f64,
}

impl Kernel {
    fn new(mu: f64, sigma: f64) -> Self {
        let lo = phi((0.0 - mu) / sigma);
        let hi = phi((1.0 - mu) / sigma);
        Self {
            mu,
            sigma,
            lo,
            mass: (hi - lo).max(1e-300),
        }
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mu) / self.sigma;
        -0.5 * z * z - (self.sigma * (2.0 * std::f64::consts::PI).sqrt() * self.mass).ln()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let p = self.lo + rng.random::<f64>() * self.mass;
        (self.mu + self.sigma * phi_inv(p.clamp(1e-300, 1.0 - 1e-16))).clamp(0.0, 1.0)
    }
}

/// Equal-weight mixture of product kernels plus one broad prior component.
struct Parzen {
    components: Vec<Vec<Kernel>>,
}

impl Parzen {
    fn fit(points: &[&[f64]], dim: usize, bandwidth: f64) -> Self {
        let n = points.len().max(1) as f64;
        let sigma = (bandwidth * n.powf(-1.0 / (dim as f64 + 4.0))).max(1e-3);
        let mut components: Vec<Vec<Kernel>> = points
            .iter()
            .map(|p| p.iter().map(|&mu| Kernel::new(mu.clamp(0.0, 1.0), sigma)).collect())
            .collect();
        components.push(vec![Kernel::new(0.5, 1.0); dim]);
        Self { components }
    }

    fn ln_pdf(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.iter().zip(x).map(|(k, &v)| k.ln_pdf(v)).sum())
            .collect();
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln() - (terms.len() as f64).ln()
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let c = &self.components[rng.random_range(0..self.components.len())];
        c.iter().map(|k| k.sample(rng)).collect()
    }
}

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= b;
        r += f * (i % base as u64) as f64;
        i /= base as u64;
    }
    r
}

/// Suggests the next trial from the study history.
///
/// The first `startup_trials` suggestions walk a randomly shifted Halton
/// sequence; afterwards the completed trials are split into the best
/// `ceil(gamma n)` and the rest, and the candidate maximising the density
/// ratio `l(x) / g(x)` is returned. Infeasible draws are rejected.
pub struct TpeSampler {
    config: TpeConfig,
    rng: ChaCha8Rng,
    shift: Vec<f64>,
    halton_index: u64,
}

impl TpeSampler {
    pub fn new(dim: usize, config: TpeConfig, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.random::<f64>()).collect();
        Self {
            config,
            rng,
            shift,
            halton_index: 0,
        }
    }

    pub fn config(&self) -> &TpeConfig {
        &self.config
    }

    fn halton_point(&mut self) -> Vec<f64> {
        self.halton_index += 1;
        self.shift
            .iter()
            .enumerate()
            .map(|(j, s)| (radical_inverse(self.halton_index, PRIMES[j]) + s).fract())
            .collect()
    }

    pub fn suggest<S: SearchSpace>(&mut self, space: &S, history: &[Observation]) -> Result<S::Params> {
        let dim = space.dim();
        let mut done: Vec<(usize, &Observation, f64)> = history
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.objective.filter(|v| v.is_finite()).map(|v| (i, o, v)))
            .collect();

        if done.len() < self.config.startup_trials {
            for _ in 0..MAX_REJECTS {
                let p = space.from_unit(&self.halton_point());
                if space.is_feasible(&p) {
                    return Ok(p);
                }
            }
            return Err(Error::Sampler(format!("{MAX_REJECTS} consecutive infeasible startup points")));
        }

        done.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        let n_good = ((self.config.gamma * done.len() as f64).ceil() as usize).clamp(1, done.len());
        let good: Vec<&[f64]> = done[..n_good].iter().map(|(_, o, _)| o.unit.as_slice()).collect();
        let bad: Vec<&[f64]> = done[n_good..].iter().map(|(_, o, _)| o.unit.as_slice()).collect();
        let l = Parzen::fit(&good, dim, self.config.bandwidth);
        let g = Parzen::fit(&bad, dim, self.config.bandwidth);

        let mut best: Option<(f64, S::Params)> = None;
        let mut drawn = 0;
        let mut rejects = 0;
        while drawn < self.config.candidates {
            let u = l.sample(&mut self.rng);
            let p = space.from_unit(&u);
            if !space.is_feasible(&p) {
                rejects += 1;
                if rejects >= MAX_REJECTS {
                    return Err(Error::Sampler(format!("{MAX_REJECTS} infeasible candidate draws")));
                }
                continue;
            }
            drawn += 1;
            let score = l.ln_pdf(&u) - g.ln_pdf(&u);
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((score, p));
            }
        }
        Ok(best.expect("at least one candidate").1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesopt::space::{P2PSpace, ZetaSpace};

    #[test]
    fn kernel_density_integrates_to_one() {
        let k = Kernel::new(0.1, 0.2);
        let n = 10_000;
        let integral: f64 = (0..n).map(|i| k.ln_pdf((i as f64 + 0.5) / n as f64).exp()).sum::<f64>() / n as f64;
        assert!((integral - 1.0).abs() < 1e-6);
    }

    #[test]
    fn startup_points_are_feasible_and_spread() {
        let space = P2PSpace::default();
        let mut s = TpeSampler::new(3, TpeConfig::default(), 1);
        let pts: Vec<_> = (0..3).map(|_| s.suggest(&space, &[]).unwrap()).collect();
        assert!(pts.iter().all(|p| space.is_feasible(p)));
        assert!(pts[0] != pts[1] && pts[1] != pts[2]);
    }

    #[test]
    fn concentrates_near_good_corner() {
        let space = ZetaSpace::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // Best trials sit in the [0, 0.25]^3 corner, the rest are scattered.
        let history: Vec<Observation> = (0..30)
            .map(|i| {
                let scale = if i % 3 == 0 { 0.25 } else { 1.0 };
                let u: Vec<f64> = (0..3).map(|_| scale * rng.random::<f64>()).collect();
                let f = -u.iter().map(|x| x * x).sum::<f64>();
                Observation { unit: space.to_unit(&space.from_unit(&u)), objective: Some(f) }
            })
            .collect();
        let mut s = TpeSampler::new(3, TpeConfig::default(), 9);
        let near = (0..100)
            .filter(|_| {
                let p = s.suggest(&space, &history).unwrap();
                space.to_unit(&p).iter().all(|&x| x < 0.5)
            })
            .count();
        assert!(near >= 60, "{near}");
    }

    #[test]
    fn failed_trials_are_ignored() {
        let space = P2PSpace::default();
        let failed = vec![Observation { unit: vec![0.5; 3], objective: None }; 5];
        let mut s = TpeSampler::new(3, TpeConfig::default(), 2);
        // Still in the startup phase: no completed trials yet.
        assert!(space.is_feasible(&s.suggest(&space, &failed).unwrap()));
    }
}
