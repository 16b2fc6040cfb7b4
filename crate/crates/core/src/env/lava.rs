//! The non-stationary LavaWorld learner: Q-values start at zero and every
//! discovered into-lava transition is suppressed.

use alloc::vec;
use alloc::vec::Vec;

use super::mdp::{ActionValues, Next, QTable, TabularMdp, Trajectory};
use super::solve::{greedy_policy, modulated_policy, occupancy, success_matrix, SOLVE_TOLERANCE};
use crate::linalg::Lu;
use crate::{ActionDistribution, Error, Modulation, Result};

/// How much one lava hit lowers `q(s, a)`.
pub const SUPPRESSION: f64 = 0.1;

/// Zero-initialised Q-table that learns only by lava suppression.
#[derive(Debug, Clone, PartialEq)]
pub struct LavaLearner {
    q: QTable,
    known: Vec<bool>,
    known_count: usize,
}

impl LavaLearner {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        Self {
            q: QTable::zeros(num_states, num_actions),
            known: vec![false; num_states * num_actions],
            known_count: 0,
        }
    }

    pub fn for_mdp(mdp: &TabularMdp) -> Self {
        Self::new(mdp.num_states(), mdp.num_actions())
    }

    pub fn q(&self) -> &QTable {
        &self.q
    }

    pub fn is_known(&self, state: usize, action: usize) -> bool {
        self.known[state * self.q.num_actions() + action]
    }

    /// Distinct lava transitions discovered so far.
    pub fn known_count(&self) -> usize {
        self.known_count
    }

    /// Suppress `q(s, a)` by [`SUPPRESSION`] once for each distinct
    /// into-lava pair of the trajectory. Returns whether any pair was new.
    pub fn update(&mut self, trajectory: &Trajectory) -> bool {
        let mut hits: Vec<(usize, usize)> = trajectory.lava_hits().collect();
        hits.sort_unstable();
        hits.dedup();
        self.suppress(&hits)
    }

    /// Suppress each listed pair once; returns whether any pair was new.
    pub fn suppress(&mut self, pairs: &[(usize, usize)]) -> bool {
        let na = self.q.num_actions();
        let mut new_found = false;
        for &(s, a) in pairs {
            self.q.set(s, a, self.q.get(s, a) - SUPPRESSION);
            if !self.known[s * na + a] {
                self.known[s * na + a] = true;
                self.known_count += 1;
                new_found = true;
            }
        }
        new_found
    }
}

impl ActionValues for LavaLearner {
    fn num_states(&self) -> usize {
        self.q.num_states()
    }

    fn num_actions(&self) -> usize {
        self.q.num_actions()
    }

    fn rows(&self, state: usize) -> crate::policy::QuantileRows<'_> {
        self.q.rows(state)
    }
}

/// Fitness of the binary proxy: 1 if the episode discovered new lava.
pub fn binary_lp_proxy(new_lava_found: bool) -> f64 {
    if new_lava_found {
        1.0
    } else {
        0.0
    }
}

/// Exact expected learning progress of a modulation in the non-stationary
/// setting.
///
/// An episode ends at its first lava hit, so it discovers at most one pair.
/// The expected progress of `z` is
/// `Σ_{(s,a) lava} d_z(s)·γ·π_z(a|s)·δ(s,a)`, where `d_z` is the expected
/// number of decisions in `s` and `δ(s,a)` the change in greedy success
/// probability if `(s,a)` were suppressed next. Only unknown pairs have a
/// nonzero `δ`, since a policy's greedy set depends only on which pairs are
/// known. `δ` is cached and recomputed by rank-one updates when the known
/// set changes.
#[derive(Debug, Clone)]
pub struct LpOracle {
    deltas: Vec<f64>,
    lava: Vec<(usize, usize)>,
    known_count: usize,
    metric: f64,
    num_actions: usize,
}

impl LpOracle {
    pub fn new(mdp: &TabularMdp, learner: &LavaLearner) -> Result<Self> {
        let mut oracle = Self {
            deltas: vec![0.0; mdp.num_states() * mdp.num_actions()],
            lava: mdp.lava_transitions(),
            known_count: usize::MAX,
            metric: 0.0,
            num_actions: mdp.num_actions(),
        };
        oracle.refresh(mdp, learner)?;
        Ok(oracle)
    }

    /// Greedy success probability under the learner's current table.
    pub fn metric(&self) -> f64 {
        self.metric
    }

    /// Cached `δ(s, a)`; zero for known and non-lava pairs.
    pub fn delta(&self, state: usize, action: usize) -> f64 {
        self.deltas[state * self.num_actions + action]
    }

    /// Recompute `δ` if the learner's known set grew since the last call.
    pub fn refresh(&mut self, mdp: &TabularMdp, learner: &LavaLearner) -> Result<()> {
        if learner.known_count() == self.known_count {
            return Ok(());
        }
        let na = mdp.num_actions();
        let policy = greedy_policy(learner)?;
        let a = success_matrix(mdp, &policy)?;
        let lu = Lu::factor(&a)?;
        let n = mdp.num_states();
        let mut e = vec![0.0; n];
        e[mdp.goal()] = 1.0;
        let (p, res) = lu.solve(&e);
        if !(res < SOLVE_TOLERANCE) {
            return Err(Error::Residual(res));
        }
        let s0 = mdp.start();
        self.metric = p[s0];
        self.deltas.iter_mut().for_each(|d| *d = 0.0);
        let g = mdp.continuation();
        let mut y_cache: Vec<Option<Vec<f64>>> = vec![None; n];
        for &(s, act) in &self.lava {
            if learner.is_known(s, act) || mdp.is_absorbing(s) {
                continue;
            }
            // greedy actions at s after suppressing (s, act)
            let row = learner.q.row(s);
            let mut next_q = row.to_vec();
            next_q[act] -= SUPPRESSION;
            let max = next_q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let support: Vec<usize> = (0..na).filter(|&b| next_q[b] == max).collect();
            let new_row = ActionDistribution::uniform_over(na, &support)?;
            // u = new row of A minus the old row
            let mut u = vec![0.0; n];
            for (b, (&pn, &po)) in new_row.probs().iter().zip(policy[s].probs()).enumerate() {
                if let Next::State(t) = mdp.next(s, b) {
                    u[t] -= g * (pn - po);
                }
            }
            let y = y_cache[s].get_or_insert_with(|| {
                let mut ei = vec![0.0; n];
                ei[s] = 1.0;
                lu.solve(&ei).0
            });
            let up: f64 = u.iter().zip(&p).map(|(a, b)| a * b).sum();
            let uy: f64 = u.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
            self.deltas[s * na + act] = -y[s0] * up / (1.0 + uy);
        }
        self.known_count = learner.known_count();
        Ok(())
    }

    /// Expected learning progress of one episode under `z`. Requires
    /// `ρ = 0`: the occupancy is computed on the plain state chain.
    pub fn expected_lp(&self, mdp: &TabularMdp, learner: &LavaLearner, z: &Modulation) -> Result<f64> {
        if z.repeat_prob != 0.0 {
            return Err(Error::InvalidArgument(
                "expected learning progress needs repeat probability 0".into(),
            ));
        }
        let policy = modulated_policy(learner, z, None)?;
        let d = occupancy(mdp, &policy)?;
        let na = mdp.num_actions();
        let g = mdp.continuation();
        Ok(self
            .lava
            .iter()
            .map(|&(s, a)| d[s] * g * policy[s].probs()[a] * self.deltas[s * na + a])
            .sum())
    }
}

/// Probability that one episode under `z` discovers a new lava pair.
pub fn discovery_probability(mdp: &TabularMdp, learner: &LavaLearner, z: &Modulation) -> Result<f64> {
    let policy = modulated_policy(learner, z, None)?;
    let d = occupancy(mdp, &policy)?;
    let g = mdp.continuation();
    Ok(mdp
        .lava_transitions()
        .into_iter()
        .filter(|&(s, a)| !learner.is_known(s, a))
        .map(|(s, a)| d[s] * g * policy[s].probs()[a])
        .sum())
}
