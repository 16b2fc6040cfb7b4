use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::{check_update, ArmSelector};
use crate::math;
use crate::policy::categorical_from_uniform;
use crate::{Error, Result};

/// One observed `(time, arm, fitness)` triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessRecord {
    pub time: u64,
    pub arm: usize,
    pub fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveConfig {
    /// Maximal relative shrink of the horizon per update.
    pub shrink_rate: f64,
    /// Upper bound on retained records, and hence on the horizon.
    pub hard_cap: usize,
    /// Starting horizon; defaults to the `2K` floor.
    pub initial_horizon: Option<f64>,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            shrink_rate: 0.02,
            hard_cap: 100_000,
            initial_horizon: None,
        }
    }
}

/// Counts over one window of the history.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    /// Number of records in the window.
    pub len: usize,
    /// Mean fitness of the window, `0` when empty.
    pub mean: f64,
    /// Per arm: records with fitness at or above `mean`.
    pub successes: Vec<u32>,
    /// Per arm: records in the window.
    pub pulls: Vec<u32>,
    /// Per arm: summed fitness.
    pub sums: Vec<f64>,
}

impl WindowStats {
    /// `(1/2 + successes) / (1 + pulls)`.
    pub fn preference(&self, arm: usize) -> f64 {
        (0.5 + self.successes[arm] as f64) / (1.0 + self.pulls[arm] as f64)
    }

    /// Window-smoothed fitness estimate `(m + Σ f) / (1 + n)`.
    pub fn smoothed_fitness(&self, arm: usize) -> f64 {
        (self.mean + self.sums[arm]) / (1.0 + self.pulls[arm] as f64)
    }
}

/// `h' = max(2K, (1-η)h)`, the shrunk horizon probed at every update.
pub fn shrink_candidate(horizon: f64, num_arms: usize, shrink_rate: f64) -> f64 {
    f64::max(2.0 * num_arms as f64, (1.0 - shrink_rate) * horizon)
}

/// The horizon after one update given the regression losses at the current
/// horizon and at the shrink candidate.
///
/// Shrinks in proportion to the relative loss reduction when the shorter
/// window explains the new record strictly better, and grows by one
/// otherwise (including when both losses are zero).
pub fn next_horizon(
    horizon: f64,
    num_arms: usize,
    shrink_rate: f64,
    loss_current: f64,
    loss_shrunk: f64,
) -> f64 {
    if loss_current > loss_shrunk {
        let reduction = (loss_current - loss_shrunk) / loss_current;
        f64::max(2.0 * num_arms as f64, (1.0 - shrink_rate * reduction) * horizon)
    } else {
        horizon + 1.0
    }
}

/// Non-stationary bandit whose window length adapts to the data.
///
/// The horizon `h` is real-valued; windows use the most recent
/// `min(⌊h⌋, available)` records.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveBandit {
    num_arms: usize,
    config: AdaptiveConfig,
    horizon: f64,
    max_horizon: f64,
    history: VecDeque<FitnessRecord>,
    time: u64,
}

impl AdaptiveBandit {
    pub fn new(num_arms: usize) -> Self {
        Self::with_config(num_arms, AdaptiveConfig::default())
    }

    pub fn with_config(num_arms: usize, config: AdaptiveConfig) -> Self {
        assert!(num_arms > 0, "bandit needs at least one arm");
        let floor = 2.0 * num_arms as f64;
        let horizon = config
            .initial_horizon
            .map_or(floor, |h| f64::max(h, floor))
            .min(config.hard_cap as f64);
        Self {
            num_arms,
            config,
            horizon,
            max_horizon: horizon,
            history: VecDeque::new(),
            time: 0,
        }
    }

    /// Rebuild a bandit from snapshot parts.
    pub fn from_parts(
        num_arms: usize,
        config: AdaptiveConfig,
        horizon: f64,
        max_horizon: f64,
        time: u64,
        history: Vec<FitnessRecord>,
    ) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::Empty("bandit arms"));
        }
        if !(horizon.is_finite() && horizon >= 2.0 * num_arms as f64) {
            return Err(Error::InvalidArgument("horizon below the 2K floor".into()));
        }
        for pair in history.windows(2) {
            if pair[1].time <= pair[0].time {
                return Err(Error::InvalidArgument("history times must increase".into()));
            }
        }
        for r in &history {
            check_update(num_arms, r.arm, r.fitness)?;
        }
        Ok(Self {
            num_arms,
            config,
            horizon,
            max_horizon: f64::max(max_horizon, horizon),
            history: history.into(),
            time,
        })
    }

    pub fn config(&self) -> &AdaptiveConfig {
        &self.config
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn max_horizon(&self) -> f64 {
        self.max_horizon
    }

    /// Number of updates received so far.
    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn history(&self) -> impl ExactSizeIterator<Item = &FitnessRecord> + '_ {
        self.history.iter()
    }

    pub fn min_horizon(&self) -> f64 {
        2.0 * self.num_arms as f64
    }

    fn window_len(&self, horizon: f64) -> usize {
        let h = math::floor(horizon).max(0.0) as usize;
        h.min(self.history.len())
    }

    /// Statistics over the most recent `min(⌊horizon⌋, available)` records.
    pub fn window_stats_at(&self, horizon: f64) -> WindowStats {
        let len = self.window_len(horizon);
        let start = self.history.len() - len;
        let window = self.history.range(start..);
        let mean = if len == 0 {
            0.0
        } else {
            window.clone().map(|r| r.fitness).sum::<f64>() / len as f64
        };
        let mut successes = vec![0u32; self.num_arms];
        let mut pulls = vec![0u32; self.num_arms];
        let mut sums = vec![0.0; self.num_arms];
        for r in window {
            pulls[r.arm] += 1;
            sums[r.arm] += r.fitness;
            if r.fitness >= mean {
                successes[r.arm] += 1;
            }
        }
        WindowStats {
            len,
            mean,
            successes,
            pulls,
            sums,
        }
    }

    pub fn window_stats(&self) -> WindowStats {
        self.window_stats_at(self.horizon)
    }

    /// Mean fitness `m_t` over the current window; `0` with no history.
    pub fn window_mean(&self) -> f64 {
        self.window_stats().mean
    }

    pub fn preference(&self, arm: usize) -> Result<f64> {
        if arm >= self.num_arms {
            return Err(Error::OutOfRange {
                what: "bandit arms",
                index: arm,
                len: self.num_arms,
            });
        }
        Ok(self.window_stats().preference(arm))
    }

    pub fn preferences(&self) -> Vec<f64> {
        let stats = self.window_stats();
        (0..self.num_arms).map(|a| stats.preference(a)).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let mut mu = self.preferences();
        let total: f64 = mu.iter().sum();
        for m in mu.iter_mut() {
            *m /= total;
        }
        mu
    }

    pub fn sample_with_uniform(&self, u: f64) -> usize {
        categorical_from_uniform(&self.preferences(), u)
    }

    /// Squared error of the window-smoothed estimate for `arm` at
    /// `horizon`, against a record not yet in the history.
    pub fn regression_loss(&self, horizon: f64, arm: usize, fitness: f64) -> f64 {
        let stats = self.window_stats_at(horizon);
        let err = fitness - stats.smoothed_fitness(arm);
        0.5 * err * err
    }

    /// Adapt the horizon against the incoming record, then append it.
    pub fn update(&mut self, arm: usize, fitness: f64) -> Result<()> {
        check_update(self.num_arms, arm, fitness)?;
        let shrunk = shrink_candidate(self.horizon, self.num_arms, self.config.shrink_rate);
        let loss_current = self.regression_loss(self.horizon, arm, fitness);
        let loss_shrunk = self.regression_loss(shrunk, arm, fitness);
        self.horizon = next_horizon(
            self.horizon,
            self.num_arms,
            self.config.shrink_rate,
            loss_current,
            loss_shrunk,
        )
        .min(self.config.hard_cap as f64);
        self.max_horizon = f64::max(self.max_horizon, self.horizon);

        self.time += 1;
        self.history.push_back(FitnessRecord {
            time: self.time,
            arm,
            fitness,
        });
        let keep = (10 * (libm::ceil(self.max_horizon) as usize)).min(self.config.hard_cap);
        while self.history.len() > keep {
            self.history.pop_front();
        }
        Ok(())
    }

    /// Overwrite the horizon, clamped to `[2K, hard_cap]`.
    pub fn set_horizon(&mut self, horizon: f64) {
        self.horizon = horizon
            .max(self.min_horizon())
            .min(self.config.hard_cap as f64);
        self.max_horizon = f64::max(self.max_horizon, self.horizon);
    }
}

impl ArmSelector for AdaptiveBandit {
    fn num_arms(&self) -> usize {
        self.num_arms
    }

    fn probabilities(&self) -> Vec<f64> {
        AdaptiveBandit::probabilities(self)
    }

    fn sample(&mut self, rng: &mut dyn RngCore) -> usize {
        self.sample_with_uniform(rng.random::<f64>())
    }

    fn update(&mut self, arm: usize, fitness: f64) -> Result<()> {
        AdaptiveBandit::update(self, arm, fitness)
    }

    fn horizon(&self) -> Option<f64> {
        Some(self.horizon)
    }
}
