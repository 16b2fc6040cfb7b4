use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::{Distribution, Normal};

use super::{check_update, ArmSelector};
use crate::math;
use crate::{Error, Result};

/// Equal probability on every arm; ignores fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct Uniform {
    num_arms: usize,
}

impl Uniform {
    pub fn new(num_arms: usize) -> Self {
        assert!(num_arms > 0, "bandit needs at least one arm");
        Self { num_arms }
    }
}

impl ArmSelector for Uniform {
    fn num_arms(&self) -> usize {
        self.num_arms
    }

    fn probabilities(&self) -> Vec<f64> {
        vec![1.0 / self.num_arms as f64; self.num_arms]
    }

    fn sample(&mut self, rng: &mut dyn RngCore) -> usize {
        rng.random_range(0..self.num_arms)
    }

    fn update(&mut self, arm: usize, fitness: f64) -> Result<()> {
        check_update(self.num_arms, arm, fitness)
    }
}

/// Always the same arm.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedArm {
    num_arms: usize,
    arm: usize,
}

impl FixedArm {
    pub fn new(num_arms: usize, arm: usize) -> Result<Self> {
        if arm >= num_arms {
            return Err(Error::OutOfRange {
                what: "bandit arms",
                index: arm,
                len: num_arms,
            });
        }
        Ok(Self { num_arms, arm })
    }
}

impl ArmSelector for FixedArm {
    fn num_arms(&self) -> usize {
        self.num_arms
    }

    fn probabilities(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.num_arms];
        p[self.arm] = 1.0;
        p
    }

    fn sample(&mut self, _rng: &mut dyn RngCore) -> usize {
        self.arm
    }

    fn update(&mut self, arm: usize, fitness: f64) -> Result<()> {
        check_update(self.num_arms, arm, fitness)
    }
}

/// UCB1: empirical mean plus `c·√(ln t / n)`; unpulled arms first and ties
/// to the lowest index.
#[derive(Debug, Clone, PartialEq)]
pub struct Ucb {
    c: f64,
    counts: Vec<u64>,
    sums: Vec<f64>,
    total: u64,
}

impl Ucb {
    pub fn new(num_arms: usize, c: f64) -> Self {
        assert!(num_arms > 0, "bandit needs at least one arm");
        Self {
            c,
            counts: vec![0; num_arms],
            sums: vec![0.0; num_arms],
            total: 0,
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn score(&self, arm: usize) -> f64 {
        let n = self.counts[arm];
        if n == 0 {
            return f64::INFINITY;
        }
        let mean = self.sums[arm] / n as f64;
        mean + self.c * math::sqrt(math::ln(self.total as f64) / n as f64)
    }

    /// The arm the next call to `sample` returns.
    pub fn next_arm(&self) -> usize {
        let mut best = 0;
        let mut best_score = self.score(0);
        for arm in 1..self.counts.len() {
            let s = self.score(arm);
            if s > best_score {
                best = arm;
                best_score = s;
            }
        }
        best
    }
}

impl ArmSelector for Ucb {
    fn num_arms(&self) -> usize {
        self.counts.len()
    }

    fn probabilities(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.counts.len()];
        p[self.next_arm()] = 1.0;
        p
    }

    fn sample(&mut self, _rng: &mut dyn RngCore) -> usize {
        self.next_arm()
    }

    fn update(&mut self, arm: usize, fitness: f64) -> Result<()> {
        check_update(self.counts.len(), arm, fitness)?;
        self.counts[arm] += 1;
        self.sums[arm] += fitness;
        self.total += 1;
        Ok(())
    }
}

/// Gaussian Thompson sampling with a known-variance model.
///
/// Each arm's mean fitness has a `N(0, 1)` prior. The observation variance
/// is the running variance of all fitness seen so far (floored at `1e-6`;
/// the prior variance is used until two observations exist).
#[derive(Debug, Clone, PartialEq)]
pub struct Thompson {
    counts: Vec<u64>,
    sums: Vec<f64>,
    // Welford accumulators over every observation
    seen: u64,
    mean: f64,
    m2: f64,
}

impl Thompson {
    pub const PRIOR_MEAN: f64 = 0.0;
    pub const PRIOR_VARIANCE: f64 = 1.0;
    pub const VARIANCE_FLOOR: f64 = 1e-6;

    pub fn new(num_arms: usize) -> Self {
        assert!(num_arms > 0, "bandit needs at least one arm");
        Self {
            counts: vec![0; num_arms],
            sums: vec![0.0; num_arms],
            seen: 0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    pub fn observation_variance(&self) -> f64 {
        if self.seen < 2 {
            return Self::PRIOR_VARIANCE;
        }
        f64::max(self.m2 / self.seen as f64, Self::VARIANCE_FLOOR)
    }

    /// Posterior `(mean, variance)` of an arm's mean fitness.
    pub fn posterior(&self, arm: usize) -> (f64, f64) {
        let obs_var = self.observation_variance();
        let precision = 1.0 / Self::PRIOR_VARIANCE + self.counts[arm] as f64 / obs_var;
        let mean = (Self::PRIOR_MEAN / Self::PRIOR_VARIANCE + self.sums[arm] / obs_var) / precision;
        (mean, 1.0 / precision)
    }

    fn draw(&self, rng: &mut dyn RngCore) -> usize {
        let mut best = 0;
        let mut best_draw = f64::NEG_INFINITY;
        for arm in 0..self.counts.len() {
            let (mean, var) = self.posterior(arm);
            let x = Normal::new(mean, math::sqrt(var))
                .expect("posterior variance is positive")
                .sample(rng);
            if x > best_draw {
                best = arm;
                best_draw = x;
            }
        }
        best
    }
}

/// Draws used to estimate Thompson selection probabilities for logging.
const THOMPSON_PROBE_DRAWS: usize = 256;

impl ArmSelector for Thompson {
    fn num_arms(&self) -> usize {
        self.counts.len()
    }

    /// Monte Carlo estimate, deterministic in the bandit state.
    fn probabilities(&self) -> Vec<f64> {
        let mut rng = crate::SeededRng::seed_from_u64(self.seen);
        let mut p = vec![0.0; self.counts.len()];
        for _ in 0..THOMPSON_PROBE_DRAWS {
            p[self.draw(&mut rng)] += 1.0 / THOMPSON_PROBE_DRAWS as f64;
        }
        p
    }

    fn sample(&mut self, rng: &mut dyn RngCore) -> usize {
        self.draw(rng)
    }

    fn update(&mut self, arm: usize, fitness: f64) -> Result<()> {
        check_update(self.counts.len(), arm, fitness)?;
        self.counts[arm] += 1;
        self.sums[arm] += fitness;
        self.seen += 1;
        let delta = fitness - self.mean;
        self.mean += delta / self.seen as f64;
        self.m2 += delta * (fitness - self.mean);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn ucb_pulls_unpulled_first_then_formula() {
        let mut ucb = Ucb::new(3, 1.0);
        let mut rng = seeded_rng(0);
        let fits = [0.2, 0.9, 0.5];
        for expected in 0..3 {
            let arm = ucb.sample(&mut rng);
            assert_eq!(arm, expected);
            ucb.update(arm, fits[arm]).unwrap();
        }
        // t = 3, each pulled once: bonus √(ln 3) is shared, so the best mean wins
        let bonus = (3f64).ln().sqrt();
        assert!((ucb.score(1) - (0.9 + bonus)).abs() < 1e-15);
        assert_eq!(ucb.sample(&mut rng), 1);
    }

    #[test]
    fn ucb_ties_go_low() {
        let mut ucb = Ucb::new(3, 1.0);
        for arm in 0..3 {
            ucb.update(arm, 1.0).unwrap();
        }
        assert_eq!(ucb.next_arm(), 0);
    }

    #[test]
    fn uniform_frequencies() {
        let mut u = Uniform::new(5);
        let mut rng = seeded_rng(3);
        let mut counts = [0usize; 5];
        let n = 100_000;
        for _ in 0..n {
            counts[u.sample(&mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.2).abs() < 0.01);
        }
        assert_eq!(u.probabilities(), vec![0.2; 5]);
    }

    #[test]
    fn thompson_single_arm() {
        let mut t = Thompson::new(1);
        let mut rng = seeded_rng(0);
        for i in 0..20 {
            assert_eq!(t.sample(&mut rng), 0);
            t.update(0, i as f64).unwrap();
        }
    }

    #[test]
    fn thompson_posterior_moves_toward_data() {
        let mut t = Thompson::new(2);
        for _ in 0..50 {
            t.update(0, 1.0).unwrap();
            t.update(1, 0.0).unwrap();
        }
        let (m0, v0) = t.posterior(0);
        let (m1, _) = t.posterior(1);
        assert!(m0 > 0.9 && m1.abs() < 1e-9 && v0 < 0.01);
        let p = t.probabilities();
        assert!(p[0] > 0.99);
    }

    #[test]
    fn fixed_arm_is_fixed() {
        let mut f = FixedArm::new(4, 2).unwrap();
        assert_eq!(f.sample(&mut seeded_rng(0)), 2);
        assert_eq!(f.probabilities(), vec![0.0, 0.0, 1.0, 0.0]);
        assert!(FixedArm::new(2, 2).is_err());
    }
}
