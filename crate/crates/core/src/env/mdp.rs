use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::policy::QuantileRows;
use crate::{Error, Result};

/// Where a `(state, action)` pair leads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Next {
    State(usize),
    /// Into lava: the episode ends with no reward.
    Lava,
}

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Lava,
    /// Stochastic end with probability `1 - γ` per step.
    Timeout,
    /// Reached the absorbing goal.
    Goal,
    /// Hit the harness step cap.
    StepCap,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Lava => "lava",
            Termination::Timeout => "timeout",
            Termination::Goal => "goal",
            Termination::StepCap => "step-cap",
        }
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: usize,
    pub reward: f64,
    pub terminated: bool,
    pub cause: Option<Termination>,
}

/// Finite deterministic MDP with lava transitions, one start and one
/// absorbing goal. The discount doubles as the per-step continuation
/// probability.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    next: Vec<Next>,
    reward: Vec<f64>,
    start: usize,
    goal: usize,
    continuation: f64,
}

impl TabularMdp {
    /// `next` and `reward` are indexed `state * num_actions + action`. The
    /// goal's own transitions are forced to a zero-reward self-loop.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        mut next: Vec<Next>,
        mut reward: Vec<f64>,
        start: usize,
        goal: usize,
        continuation: f64,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::Empty("state or action set"));
        }
        let len = num_states * num_actions;
        if next.len() != len || reward.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: next.len().min(reward.len()),
            });
        }
        for (what, idx) in [("start state", start), ("goal state", goal)] {
            if idx >= num_states {
                return Err(Error::OutOfRange {
                    what,
                    index: idx,
                    len: num_states,
                });
            }
        }
        if let Some(Next::State(bad)) = next
            .iter()
            .find(|n| matches!(n, Next::State(s) if *s >= num_states))
        {
            return Err(Error::OutOfRange {
                what: "transition target",
                index: *bad,
                len: num_states,
            });
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite("rewards"));
        }
        if !(continuation > 0.0 && continuation <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "continuation probability {continuation} outside (0, 1]"
            )));
        }
        for a in 0..num_actions {
            next[goal * num_actions + a] = Next::State(goal);
            reward[goal * num_actions + a] = 0.0;
        }
        Ok(Self {
            num_states,
            num_actions,
            next,
            reward,
            start,
            goal,
            continuation,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn continuation(&self) -> f64 {
        self.continuation
    }

    /// Copy with a different continuation probability.
    pub fn with_continuation(&self, continuation: f64) -> Result<Self> {
        Self::new(
            self.num_states,
            self.num_actions,
            self.next.clone(),
            self.reward.clone(),
            self.start,
            self.goal,
            continuation,
        )
    }

    pub fn is_absorbing(&self, state: usize) -> bool {
        state == self.goal
    }

    pub fn next(&self, state: usize, action: usize) -> Next {
        self.next[state * self.num_actions + action]
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.reward[state * self.num_actions + action]
    }

    pub fn is_lava(&self, state: usize, action: usize) -> bool {
        self.next(state, action) == Next::Lava
    }

    /// Every `(state, action)` that leads into lava.
    pub fn lava_transitions(&self) -> Vec<(usize, usize)> {
        (0..self.num_states)
            .flat_map(|s| (0..self.num_actions).map(move |a| (s, a)))
            .filter(|&(s, a)| self.is_lava(s, a))
            .collect()
    }

    fn check(&self, state: usize, action: usize) -> Result<()> {
        if state >= self.num_states {
            return Err(Error::OutOfRange {
                what: "states",
                index: state,
                len: self.num_states,
            });
        }
        if action >= self.num_actions {
            return Err(Error::OutOfRange {
                what: "actions",
                index: action,
                len: self.num_actions,
            });
        }
        Ok(())
    }

    /// One step: first the continuation draw (timeout with probability
    /// `1 - γ`, no transition), then the deterministic transition. Lava ends
    /// the episode with zero reward. Reaching the goal is ordinary here;
    /// the harness ends episodes on absorbing states.
    pub fn step<R: RngCore + ?Sized>(
        &self,
        state: usize,
        action: usize,
        rng: &mut R,
    ) -> Result<StepOutcome> {
        self.check(state, action)?;
        if self.continuation < 1.0 && rng.random::<f64>() >= self.continuation {
            return Ok(StepOutcome {
                next_state: state,
                reward: 0.0,
                terminated: true,
                cause: Some(Termination::Timeout),
            });
        }
        Ok(match self.next(state, action) {
            Next::Lava => StepOutcome {
                next_state: state,
                reward: 0.0,
                terminated: true,
                cause: Some(Termination::Lava),
            },
            Next::State(s) => StepOutcome {
                next_state: s,
                reward: self.reward(state, action),
                terminated: false,
                cause: None,
            },
        })
    }
}

/// One recorded step of an episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryStep {
    pub state: usize,
    pub action: usize,
    pub outcome: StepOutcome,
}

/// A full episode: the steps taken and why it ended.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub termination: Option<Termination>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Undiscounted sum of rewards.
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.outcome.reward).sum()
    }

    /// `(state, action)` pairs that ended in lava.
    pub fn lava_hits(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.steps
            .iter()
            .filter(|s| s.outcome.cause == Some(Termination::Lava))
            .map(|s| (s.state, s.action))
    }
}

/// Source of per-state quantile rows for behaviour policies.
pub trait ActionValues {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn rows(&self, state: usize) -> QuantileRows<'_>;
}

/// One scalar value per `(state, action)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            values: alloc::vec![0.0; num_states * num_actions],
        }
    }

    pub fn from_values(num_states: usize, num_actions: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_states * num_actions {
            return Err(Error::DimensionMismatch {
                expected: num_states * num_actions,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Q-table"));
        }
        Ok(Self {
            num_states,
            num_actions,
            values,
        })
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.num_actions + action]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.values[state * self.num_actions + action] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.num_actions..(state + 1) * self.num_actions]
    }
}

impl ActionValues for QTable {
    fn num_states(&self) -> usize {
        self.num_states
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn rows(&self, state: usize) -> QuantileRows<'_> {
        QuantileRows::scalar(self.row(state)).expect("non-empty action set")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use alloc::vec;

    pub(crate) fn chain() -> TabularMdp {
        // 0 -a0-> 1 -a0-> 2 (goal); a1 is lava everywhere
        TabularMdp::new(
            3,
            2,
            vec![
                Next::State(1),
                Next::Lava,
                Next::State(2),
                Next::Lava,
                Next::State(2),
                Next::State(2),
            ],
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            0,
            2,
            0.99,
        )
        .unwrap()
    }

    #[test]
    fn lava_step_terminates_without_reward() {
        let mdp = chain().with_continuation(1.0).unwrap();
        let out = mdp.step(0, 1, &mut seeded_rng(0)).unwrap();
        assert!(out.terminated);
        assert_eq!(out.cause, Some(Termination::Lava));
        assert_eq!(out.reward, 0.0);
    }

    #[test]
    fn timeout_frequency() {
        let mdp = chain();
        let mut rng = seeded_rng(17);
        let n = 1_000_000;
        let stops = (0..n)
            .filter(|_| mdp.step(0, 0, &mut rng).unwrap().cause == Some(Termination::Timeout))
            .count();
        assert!((stops as f64 / n as f64 - 0.01).abs() < 0.0005);
    }

    #[test]
    fn no_timeout_without_discount() {
        let mdp = chain().with_continuation(1.0).unwrap();
        let mut rng = seeded_rng(1);
        for _ in 0..10_000 {
            assert!(!mdp.step(0, 0, &mut rng).unwrap().terminated);
        }
    }

    #[test]
    fn goal_is_absorbing() {
        let mdp = chain();
        for a in 0..2 {
            assert_eq!(mdp.next(2, a), Next::State(2));
            assert_eq!(mdp.reward(2, a), 0.0);
        }
        assert!(mdp.is_absorbing(2));
    }

    #[test]
    fn invalid_indices() {
        let mdp = chain();
        assert!(mdp.step(3, 0, &mut seeded_rng(0)).is_err());
        assert!(mdp.step(0, 2, &mut seeded_rng(0)).is_err());
        assert!(TabularMdp::new(1, 1, vec![Next::State(4)], vec![0.0], 0, 0, 0.9).is_err());
        assert!(TabularMdp::new(1, 1, vec![Next::Lava], vec![0.0], 0, 0, 0.0).is_err());
    }

    #[test]
    fn lava_transitions_listed() {
        assert_eq!(chain().lava_transitions(), vec![(0, 1), (1, 1)]);
    }
}
