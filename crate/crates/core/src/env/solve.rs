//! Exact policy evaluation by dense linear solves.

use alloc::vec;
use alloc::vec::Vec;

use super::mdp::{ActionValues, Next, QTable, TabularMdp};
use crate::linalg::{Lu, Matrix};
use crate::math;
use crate::policy::{action_distribution, greedy_set};
use crate::{ActionDistribution, Error, Modulation, Result};

/// Largest accepted max-norm residual of a policy-evaluation solve.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Convergence threshold of [`optimal_q`].
pub const VALUE_ITERATION_TOLERANCE: f64 = 1e-10;

fn check_policy(mdp: &TabularMdp, policy: &[ActionDistribution]) -> Result<()> {
    if policy.len() != mdp.num_states() {
        return Err(Error::DimensionMismatch {
            expected: mdp.num_states(),
            got: policy.len(),
        });
    }
    if let Some(d) = policy.iter().find(|d| d.len() != mdp.num_actions()) {
        return Err(Error::DimensionMismatch {
            expected: mdp.num_actions(),
            got: d.len(),
        });
    }
    Ok(())
}

/// `I - γP_π` with the goal row replaced by the identity.
///
/// The same matrix gives success probabilities (right-hand side `e_goal`)
/// and start-state occupancies (transposed, right-hand side `e_start`).
pub fn success_matrix(mdp: &TabularMdp, policy: &[ActionDistribution]) -> Result<Matrix> {
    check_policy(mdp, policy)?;
    let n = mdp.num_states();
    let g = mdp.continuation();
    let mut a = Matrix::identity(n);
    for (s, dist) in policy.iter().enumerate() {
        if mdp.is_absorbing(s) {
            continue;
        }
        for (act, &p) in dist.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            if let Next::State(t) = mdp.next(s, act) {
                a[(s, t)] -= g * p;
            }
        }
    }
    Ok(a)
}

fn checked(x: (Vec<f64>, f64)) -> Result<Vec<f64>> {
    if !(x.1 < SOLVE_TOLERANCE) {
        return Err(Error::Residual(x.1));
    }
    Ok(x.0)
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// Probability of reaching the goal from every state.
pub fn success_probabilities(mdp: &TabularMdp, policy: &[ActionDistribution]) -> Result<Vec<f64>> {
    let a = success_matrix(mdp, policy)?;
    let lu = Lu::factor(&a)?;
    checked(lu.solve(&unit(mdp.num_states(), mdp.goal())))
}

/// Probability that one episode from the start reaches the goal before lava
/// or timeout.
pub fn success_probability(mdp: &TabularMdp, policy: &[ActionDistribution]) -> Result<f64> {
    Ok(success_probabilities(mdp, policy)?[mdp.start()])
}

/// Expected number of decisions taken in each state during one episode.
pub fn occupancy(mdp: &TabularMdp, policy: &[ActionDistribution]) -> Result<Vec<f64>> {
    let a = success_matrix(mdp, policy)?;
    let lu = Lu::factor(&a)?;
    let mut d = checked(lu.solve_transpose(&unit(mdp.num_states(), mdp.start())))?;
    // the goal ends the episode
    d[mdp.goal()] = 0.0;
    Ok(d)
}

/// `V^π = r_π + γP_πV^π`, with `V = 0` at the goal.
pub fn state_values(mdp: &TabularMdp, policy: &[ActionDistribution]) -> Result<Vec<f64>> {
    let mut a = success_matrix(mdp, policy)?;
    let n = mdp.num_states();
    let mut b = vec![0.0; n];
    for (s, dist) in policy.iter().enumerate() {
        if mdp.is_absorbing(s) {
            continue;
        }
        b[s] = dist
            .probs()
            .iter()
            .enumerate()
            .map(|(act, p)| p * mdp.reward(s, act))
            .sum();
    }
    a[(mdp.goal(), mdp.goal())] = 1.0;
    checked(Lu::factor(&a)?.solve(&b))
}

/// `V^{after}(s₀) - V^{before}(s₀)`.
pub fn learning_progress(
    mdp: &TabularMdp,
    before: &[ActionDistribution],
    after: &[ActionDistribution],
) -> Result<f64> {
    let s0 = mdp.start();
    Ok(state_values(mdp, after)?[s0] - state_values(mdp, before)?[s0])
}

/// Expected undiscounted return of one episode when every step first
/// survives the continuation draw.
pub fn expected_return(mdp: &TabularMdp, policy: &[ActionDistribution]) -> Result<f64> {
    Ok(mdp.continuation() * state_values(mdp, policy)?[mdp.start()])
}

/// The `z`-modulated policy in every state for a fixed previous action.
pub fn modulated_policy<V: ActionValues + ?Sized>(
    values: &V,
    z: &Modulation,
    prev_action: Option<usize>,
) -> Result<Vec<ActionDistribution>> {
    (0..values.num_states())
        .map(|s| action_distribution(values.rows(s), z, prev_action))
        .collect()
}

fn check_values<V: ActionValues + ?Sized>(mdp: &TabularMdp, values: &V) -> Result<()> {
    if values.num_states() != mdp.num_states() || values.num_actions() != mdp.num_actions() {
        return Err(Error::DimensionMismatch {
            expected: mdp.num_states() * mdp.num_actions(),
            got: values.num_states() * values.num_actions(),
        });
    }
    Ok(())
}

/// Success probability of the `z`-modulated behaviour derived from
/// `values`.
///
/// With `ρ > 0` the policy depends on the previous action, so the chain is
/// solved over `(state, previous action)` pairs plus the action-less start.
pub fn modulated_success_probability<V: ActionValues + ?Sized>(
    mdp: &TabularMdp,
    values: &V,
    z: &Modulation,
) -> Result<f64> {
    check_values(mdp, values)?;
    if z.repeat_prob == 0.0 {
        return success_probability(mdp, &modulated_policy(values, z, None)?);
    }
    let na = mdp.num_actions();
    let ns = mdp.num_states();
    let first = ns * na;
    let idx = |s: usize, prev: Option<usize>| match prev {
        Some(p) => s * na + p,
        None => first,
    };
    let g = mdp.continuation();
    let mut a = Matrix::identity(first + 1);
    let mut b = vec![0.0; first + 1];
    let fill = |a: &mut Matrix, b: &mut [f64], s: usize, prev: Option<usize>| -> Result<()> {
        let row = idx(s, prev);
        if mdp.is_absorbing(s) {
            b[row] = 1.0;
            return Ok(());
        }
        let dist = action_distribution(values.rows(s), z, prev)?;
        for (act, &p) in dist.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            if let Next::State(t) = mdp.next(s, act) {
                a[(row, idx(t, Some(act)))] -= g * p;
            }
        }
        Ok(())
    };
    for s in 0..ns {
        for prev in 0..na {
            fill(&mut a, &mut b, s, Some(prev))?;
        }
    }
    fill(&mut a, &mut b, mdp.start(), None)?;
    Ok(checked(Lu::factor(&a)?.solve(&b))?[first])
}

/// The stationary learning-progress signal of modulation `z`: the success
/// probability of its behaviour policy under fixed values `q`.
pub fn exact_lp_oracle<V: ActionValues + ?Sized>(
    mdp: &TabularMdp,
    q: &V,
    z: &Modulation,
) -> Result<f64> {
    modulated_success_probability(mdp, q, z)
}

/// Optimal action values by value iteration.
pub fn optimal_q(mdp: &TabularMdp) -> QTable {
    let ns = mdp.num_states();
    let na = mdp.num_actions();
    let g = mdp.continuation();
    let mut q = QTable::zeros(ns, na);
    let mut v = vec![0.0; ns];
    loop {
        let mut change: f64 = 0.0;
        for s in 0..ns {
            if mdp.is_absorbing(s) {
                continue;
            }
            for a in 0..na {
                let new = mdp.reward(s, a)
                    + match mdp.next(s, a) {
                        Next::State(t) => g * v[t],
                        Next::Lava => 0.0,
                    };
                change = change.max(math::abs(new - q.get(s, a)));
                q.set(s, a, new);
            }
        }
        for (s, vs) in v.iter_mut().enumerate() {
            *vs = q.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
        if change < VALUE_ITERATION_TOLERANCE {
            return q;
        }
    }
}

/// Evaluation policy: uniform over the actions of maximal mean value.
pub fn greedy_policy<V: ActionValues + ?Sized>(values: &V) -> Result<Vec<ActionDistribution>> {
    (0..values.num_states())
        .map(|s| ActionDistribution::uniform_over(values.num_actions(), &greedy_set(values.rows(s))?))
        .collect()
}

/// Success probability of [`greedy_policy`].
pub fn greedy_success_probability<V: ActionValues + ?Sized>(
    mdp: &TabularMdp,
    values: &V,
) -> Result<f64> {
    check_values(mdp, values)?;
    success_probability(mdp, &greedy_policy(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::build_lavaworld;
    use crate::env::mdp::Termination;
    use crate::seeded_rng;
    use alloc::vec;

    fn chain(continuation: f64) -> TabularMdp {
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
            continuation,
        )
        .unwrap()
    }

    fn uniform_policy(mdp: &TabularMdp) -> Vec<ActionDistribution> {
        vec![ActionDistribution::uniform(mdp.num_actions()).unwrap(); mdp.num_states()]
    }

    fn monte_carlo(mdp: &TabularMdp, policy: &[ActionDistribution], episodes: usize, seed: u64) -> f64 {
        let mut rng = seeded_rng(seed);
        let mut hits = 0usize;
        for _ in 0..episodes {
            let mut s = mdp.start();
            loop {
                let a = policy[s].sample(&mut rng);
                let out = mdp.step(s, a, &mut rng).unwrap();
                if out.terminated {
                    break;
                }
                s = out.next_state;
                if mdp.is_absorbing(s) {
                    hits += 1;
                    break;
                }
            }
        }
        hits as f64 / episodes as f64
    }

    #[test]
    fn straight_into_lava_is_zero() {
        let mdp = chain(0.99);
        let policy = vec![ActionDistribution::new(vec![0.0, 1.0]).unwrap(); 3];
        assert_eq!(success_probability(&mdp, &policy).unwrap(), 0.0);
    }

    #[test]
    fn adjacent_goal_is_one_continuation() {
        let mdp = TabularMdp::new(
            2,
            1,
            vec![Next::State(1), Next::State(1)],
            vec![1.0, 0.0],
            0,
            1,
            0.99,
        )
        .unwrap();
        let policy = vec![ActionDistribution::uniform(1).unwrap(); 2];
        let p = success_probability(&mdp, &policy).unwrap();
        assert!((p - 0.99).abs() < 1e-15);
        assert!((expected_return(&mdp, &policy).unwrap() - 0.99).abs() < 1e-15);
    }

    #[test]
    fn chain_uniform_matches_closed_form_and_monte_carlo() {
        let mdp = chain(0.99);
        let policy = uniform_policy(&mdp);
        let p = success_probability(&mdp, &policy).unwrap();
        let exact = (0.99f64 * 0.5).powi(2);
        assert!((p - exact).abs() < 1e-14);
        let n = 1_000_000;
        let mc = monte_carlo(&mdp, &policy, n, 5);
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((mc - p).abs() < 3.0 * se, "mc {mc} exact {p}");
    }

    #[test]
    fn lavaworld_modulated_policies_match_monte_carlo() {
        let lw = build_lavaworld();
        let q = optimal_q(&lw.mdp);
        let zs = [
            Modulation::new(0.01, 0.01, vec![0.0; 4], 0.0, 0.0).unwrap(),
            Modulation::new(0.1, 0.1, vec![0.0; 4], 0.0, 0.0).unwrap(),
            Modulation::new(1.0, 0.01, vec![0.0, 0.1, 0.0, 0.0], 0.0, 0.0).unwrap(),
            Modulation::new(0.01, 0.1, vec![0.0, 0.0, 0.1, 0.0], 0.0, 0.0).unwrap(),
            Modulation::new(0.1, 1.0, vec![0.0; 4], 0.0, 0.0).unwrap(),
        ];
        for (i, z) in zs.iter().enumerate() {
            let policy = modulated_policy(&q, z, None).unwrap();
            let p = success_probability(&lw.mdp, &policy).unwrap();
            let n = 1_000_000;
            let mc = monte_carlo(&lw.mdp, &policy, n, 100 + i as u64);
            let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-9);
            assert!((mc - p).abs() < 3.0 * se + 1e-12, "{z}: mc {mc} exact {p}");
        }
    }

    #[test]
    fn success_is_a_probability_and_monotone_in_continuation() {
        let lw = build_lavaworld();
        let q = optimal_q(&lw.mdp);
        let z = Modulation::new(0.1, 0.1, vec![0.0; 4], 0.0, 0.0).unwrap();
        let mut last = 0.0;
        for g in [0.9, 0.95, 0.99] {
            let mdp = lw.mdp.with_continuation(g).unwrap();
            let p = modulated_success_probability(&mdp, &q, &z).unwrap();
            assert!((0.0..=1.0).contains(&p));
            assert!(p >= last);
            last = p;
        }
        let mdp = chain(0.9);
        let mut last = 0.0;
        for g in [0.9, 0.95, 0.99] {
            let p = success_probability(&mdp.with_continuation(g).unwrap(), &uniform_policy(&mdp)).unwrap();
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn uniform_modulation_reduces_to_uniform_policy() {
        let lw = build_lavaworld();
        let q = optimal_q(&lw.mdp);
        let z = Modulation::new(0.01, 1.0, vec![0.1, 0.0, 0.0, 0.0], 0.0, 0.0).unwrap();
        let a = exact_lp_oracle(&lw.mdp, &q, &z).unwrap();
        let b = success_probability(&lw.mdp, &uniform_policy(&lw.mdp)).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn inert_dimension_gives_equal_values() {
        let lw = build_lavaworld();
        let q = optimal_q(&lw.mdp);
        let z1 = Modulation::new(0.01, 1.0, vec![0.0; 4], 0.0, 0.0).unwrap();
        let z2 = Modulation::new(1.0, 1.0, vec![0.0; 4], 0.0, 0.0).unwrap();
        let a = exact_lp_oracle(&lw.mdp, &q, &z1).unwrap();
        let b = exact_lp_oracle(&lw.mdp, &q, &z2).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn optimal_greedy_beats_uniform() {
        let lw = build_lavaworld();
        let q = optimal_q(&lw.mdp);
        let greedy = Modulation::reference(4).unwrap();
        let uniform = Modulation::new(1.0, 1.0, vec![0.0; 4], 0.0, 0.0).unwrap();
        let pg = exact_lp_oracle(&lw.mdp, &q, &greedy).unwrap();
        let pu = exact_lp_oracle(&lw.mdp, &q, &uniform).unwrap();
        assert!(pg > pu);
    }

    #[test]
    fn optimal_q_is_discounted_distance() {
        let mdp = chain(0.9);
        let q = optimal_q(&mdp);
        assert!((q.get(1, 0) - 1.0).abs() < 1e-12);
        assert!((q.get(0, 0) - 0.9).abs() < 1e-12);
        assert_eq!(q.get(0, 1), 0.0);
        let lw = build_lavaworld();
        let q = optimal_q(&lw.mdp);
        // optimal greedy success equals γ^(shortest path length)
        let p = greedy_success_probability(&lw.mdp, &q).unwrap();
        let steps = (p.ln() / 0.99f64.ln()).round();
        assert!((p - 0.99f64.powi(steps as i32)).abs() < 1e-9);
    }

    #[test]
    fn repeat_chain_agrees_with_plain_chain_at_zero_repeat() {
        let lw = build_lavaworld();
        let q = optimal_q(&lw.mdp);
        let z = Modulation::new(0.1, 0.1, vec![0.0; 4], 0.0, 0.0).unwrap();
        let plain = modulated_success_probability(&lw.mdp, &q, &z).unwrap();
        let tiny = Modulation::new(0.1, 0.1, vec![0.0; 4], 1e-12, 0.0).unwrap();
        let augmented = modulated_success_probability(&lw.mdp, &q, &tiny).unwrap();
        assert!((plain - augmented).abs() < 1e-9);
    }

    #[test]
    fn repeat_chain_matches_monte_carlo() {
        let mdp = chain(0.99);
        let q = QTable::from_values(3, 2, vec![0.5, 0.0, 0.5, 0.0, 0.0, 0.0]).unwrap();
        let z = Modulation::new(1.0, 0.2, vec![0.0; 2], 0.5, 0.0).unwrap();
        let p = modulated_success_probability(&mdp, &q, &z).unwrap();
        let mut rng = seeded_rng(9);
        let n = 1_000_000;
        let mut hits = 0;
        for _ in 0..n {
            let mut s = mdp.start();
            let mut prev = None;
            loop {
                let a = action_distribution(q.rows(s), &z, prev).unwrap().sample(&mut rng);
                let out = mdp.step(s, a, &mut rng).unwrap();
                if out.terminated {
                    assert_ne!(out.cause, Some(Termination::Goal));
                    break;
                }
                s = out.next_state;
                prev = Some(a);
                if mdp.is_absorbing(s) {
                    hits += 1;
                    break;
                }
            }
        }
        let mc = hits as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((mc - p).abs() < 3.0 * se, "mc {mc} exact {p}");
    }

    #[test]
    fn learning_progress_properties() {
        // two states: 0 -a0-> 1 (goal, reward 1), 0 -a1-> 0
        let mdp = TabularMdp::new(
            2,
            2,
            vec![Next::State(1), Next::State(0), Next::State(1), Next::State(1)],
            vec![1.0, 0.0, 0.0, 0.0],
            0,
            1,
            0.9,
        )
        .unwrap();
        let before = vec![ActionDistribution::new(vec![0.5, 0.5]).unwrap(); 2];
        let after = vec![ActionDistribution::new(vec![0.9, 0.1]).unwrap(); 2];
        assert_eq!(learning_progress(&mdp, &before, &before).unwrap(), 0.0);
        // V = p / (1 - 0.9(1 - p))
        let v = |p: f64| p / (1.0 - 0.9 * (1.0 - p));
        let lp = learning_progress(&mdp, &before, &after).unwrap();
        assert!((lp - (v(0.9) - v(0.5))).abs() < 1e-12);
        assert!(lp > 0.0);
        let back = learning_progress(&mdp, &after, &before).unwrap();
        assert_eq!(lp, -back);
    }

    #[test]
    fn occupancy_sums_to_expected_length() {
        let mdp = chain(0.99);
        let d = occupancy(&mdp, &uniform_policy(&mdp)).unwrap();
        // one decision at 0, then 0.99·0.5 chance of a decision at 1
        assert!((d[0] - 1.0).abs() < 1e-14);
        assert!((d[1] - 0.495).abs() < 1e-14);
        assert_eq!(d[2], 0.0);
    }

    #[test]
    fn greedy_policy_splits_ties() {
        let q = QTable::from_values(1, 4, vec![0.0, -0.1, 0.0, -0.1]).unwrap();
        let p = greedy_policy(&q).unwrap();
        assert_eq!(p[0].probs(), &[0.5, 0.0, 0.5, 0.0]);
    }
}
