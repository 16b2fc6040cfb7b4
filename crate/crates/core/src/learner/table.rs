use alloc::vec;
use alloc::vec::Vec;

use crate::env::{ActionValues, Termination, Trajectory};
use crate::policy::{midpoints, QuantileRows};
use crate::{Error, Result};

/// Quantile estimates `q_ν(s, a)` on the midpoint grid, stored
/// `[(s·A + a)·n + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileQTable {
    num_states: usize,
    num_actions: usize,
    num_quantiles: usize,
    learning_rate: f64,
    values: Vec<f64>,
}

impl QuantileQTable {
    pub const DEFAULT_QUANTILES: usize = 11;
    pub const DEFAULT_LEARNING_RATE: f64 = 0.05;

    pub fn zeros(
        num_states: usize,
        num_actions: usize,
        num_quantiles: usize,
        learning_rate: f64,
    ) -> Result<Self> {
        Self::from_values(
            num_states,
            num_actions,
            num_quantiles,
            learning_rate,
            vec![0.0; num_states * num_actions * num_quantiles],
        )
    }

    pub fn from_values(
        num_states: usize,
        num_actions: usize,
        num_quantiles: usize,
        learning_rate: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 || num_quantiles == 0 {
            return Err(Error::Empty("quantile table dimension"));
        }
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        let len = num_states * num_actions * num_quantiles;
        if values.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quantile table"));
        }
        Ok(Self {
            num_states,
            num_actions,
            num_quantiles,
            learning_rate,
            values,
        })
    }

    pub fn num_quantiles(&self) -> usize {
        self.num_quantiles
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn midpoints(&self) -> Vec<f64> {
        midpoints(self.num_quantiles)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn offset(&self, state: usize, action: usize) -> usize {
        (state * self.num_actions + action) * self.num_quantiles
    }

    pub fn quantiles(&self, state: usize, action: usize) -> &[f64] {
        let o = self.offset(state, action);
        &self.values[o..o + self.num_quantiles]
    }

    pub fn quantiles_mut(&mut self, state: usize, action: usize) -> &mut [f64] {
        let o = self.offset(state, action);
        &mut self.values[o..o + self.num_quantiles]
    }

    pub fn mean(&self, state: usize, action: usize) -> f64 {
        let q = self.quantiles(state, action);
        q.iter().sum::<f64>() / q.len() as f64
    }

    pub fn check_index(&self, state: usize, action: usize) -> Result<()> {
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
}

impl ActionValues for QuantileQTable {
    fn num_states(&self) -> usize {
        self.num_states
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn rows(&self, state: usize) -> QuantileRows<'_> {
        let per_state = self.num_actions * self.num_quantiles;
        QuantileRows::new(
            &self.values[state * per_state..(state + 1) * per_state],
            self.num_quantiles,
        )
        .expect("table dimensions are positive")
    }
}

/// An n-step fragment: up to `n` rewards, then a bootstrap state unless the
/// episode ended inside the fragment.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub rewards: Vec<f64>,
    pub bootstrap: usize,
    pub terminal: bool,
}

/// Split an episode into n-step transitions, one per executed step.
///
/// A timeout is the continuation draw failing: the action was never
/// executed, so that step is dropped and the preceding fragments bootstrap
/// as usual. Lava and goal entries are terminal.
pub fn n_step_transitions(trajectory: &Trajectory, n: usize) -> Vec<Transition> {
    assert!(n >= 1, "n-step length must be >= 1");
    let executed: Vec<_> = trajectory
        .steps
        .iter()
        .filter(|s| s.outcome.cause != Some(Termination::Timeout))
        .collect();
    let ends_terminal =
        |i: usize| matches!(executed[i].outcome.cause, Some(Termination::Lava | Termination::Goal));
    let mut out = Vec::with_capacity(executed.len());
    for t in 0..executed.len() {
        let mut rewards = Vec::with_capacity(n);
        let mut terminal = false;
        let mut last = t;
        for (i, step) in executed.iter().enumerate().skip(t).take(n) {
            rewards.push(step.outcome.reward);
            last = i;
            if ends_terminal(i) {
                terminal = true;
                break;
            }
        }
        out.push(Transition {
            state: executed[t].state,
            action: executed[t].action,
            rewards,
            bootstrap: executed[last].outcome.next_state,
            terminal,
        });
    }
    out
}
