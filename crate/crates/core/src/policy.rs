//! The modulated behaviour policy and greedy evaluation policy.
//!
//! For one state with quantile estimates `q_ν(a)` the behaviour is
//!
//! ```text
//! π(a|z) = (1-ε)(1-ρ)·softmax_T(Q_ω + b)_a + ε(1-ρ)/|A| + ρ·[a = a_prev]
//! Q_ω    = Σ_ν e^{-ων} q_ν / Σ_ν e^{-ων}
//! ```
//!
//! On the first step of an episode there is no previous action; the repeat
//! mass is then spread proportionally over the rest of the mixture, which
//! is the same as evaluating with `ρ = 0`.

use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::math;
use crate::modulation::Modulation;
use crate::{Error, Result};

/// Tolerance on `Σ p = 1` accepted by [`ActionDistribution::new`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Quantile midpoints `{1/(2n), 3/(2n), …, (2n-1)/(2n)}`.
pub fn midpoints(n: usize) -> Vec<f64> {
    (0..n).map(|j| (2 * j + 1) as f64 / (2 * n) as f64).collect()
}

/// Quantile estimates of every action in one state, stored action-major:
/// `values[a * n + j]` is quantile `j` of action `a`.
#[derive(Debug, Clone, Copy)]
pub struct QuantileRows<'a> {
    values: &'a [f64],
    num_quantiles: usize,
}

impl<'a> QuantileRows<'a> {
    pub fn new(values: &'a [f64], num_quantiles: usize) -> Result<Self> {
        if num_quantiles == 0 {
            return Err(Error::Empty("quantile vector"));
        }
        if values.is_empty() {
            return Err(Error::Empty("action set"));
        }
        if values.len() % num_quantiles != 0 {
            return Err(Error::DimensionMismatch {
                expected: num_quantiles,
                got: values.len() % num_quantiles,
            });
        }
        Ok(Self {
            values,
            num_quantiles,
        })
    }

    /// One scalar value per action (a single quantile).
    pub fn scalar(values: &'a [f64]) -> Result<Self> {
        Self::new(values, 1)
    }

    pub fn num_actions(&self) -> usize {
        self.values.len() / self.num_quantiles
    }

    pub fn num_quantiles(&self) -> usize {
        self.num_quantiles
    }

    pub fn action(&self, a: usize) -> &'a [f64] {
        &self.values[a * self.num_quantiles..(a + 1) * self.num_quantiles]
    }

    /// Plain mean of action `a`'s quantiles.
    pub fn mean(&self, a: usize) -> f64 {
        let q = self.action(a);
        q.iter().sum::<f64>() / q.len() as f64
    }
}

/// `Q_ω`, the exponentially midpoint-weighted mean of a quantile vector.
///
/// Weights are `e^{-ω(ν - 1/2)}`; the shift cancels in the ratio and keeps
/// the exponent bounded by `|ω|/2`.
pub fn optimism_aggregate(q: &[f64], omega: f64) -> Result<f64> {
    if q.is_empty() {
        return Err(Error::Empty("quantile vector"));
    }
    if !omega.is_finite() {
        return Err(Error::NonFinite("optimism"));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("quantile values"));
    }
    Ok(aggregate_unchecked(q, omega))
}

fn aggregate_unchecked(q: &[f64], omega: f64) -> f64 {
    let n = q.len();
    if omega == 0.0 || n == 1 {
        return q.iter().sum::<f64>() / n as f64;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, &v) in q.iter().enumerate() {
        let nu = (2 * j + 1) as f64 / (2 * n) as f64;
        let w = math::exp(-omega * (nu - 0.5));
        num += w * v;
        den += w;
    }
    num / den
}

/// A probability vector over actions.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution {
    probs: Vec<f64>,
}

impl ActionDistribution {
    /// Entries must lie in `[0, 1]` and sum to one within
    /// [`NORMALIZATION_TOLERANCE`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty("action distribution"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0 + 1e-12) {
            return Err(Error::InvalidArgument("probability outside [0, 1]".into()));
        }
        let total: f64 = probs.iter().sum();
        if math::abs(total - 1.0) > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidArgument("probabilities do not sum to 1".into()));
        }
        Ok(Self { probs })
    }

    pub fn uniform(num_actions: usize) -> Result<Self> {
        if num_actions == 0 {
            return Err(Error::Empty("action set"));
        }
        Ok(Self {
            probs: alloc::vec![1.0 / num_actions as f64; num_actions],
        })
    }

    /// Uniform over `support`, zero elsewhere.
    pub fn uniform_over(num_actions: usize, support: &[usize]) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Empty("support"));
        }
        let mut probs = alloc::vec![0.0; num_actions];
        let p = 1.0 / support.len() as f64;
        for &a in support {
            *probs.get_mut(a).ok_or(Error::OutOfRange {
                what: "actions",
                index: a,
                len: num_actions,
            })? = p;
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Inverse-CDF draw from a uniform `u ∈ [0, 1)`.
    pub fn sample_with_uniform(&self, u: f64) -> usize {
        categorical_from_uniform(&self.probs, u)
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        self.sample_with_uniform(rng.random::<f64>())
    }
}

/// Inverse-CDF draw over an unnormalised non-negative weight vector.
///
/// Never returns an index with zero weight.
pub(crate) fn categorical_from_uniform(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if target < acc {
            return i;
        }
    }
    last
}

/// The `z`-modulated behaviour distribution for one state.
pub fn action_distribution(
    rows: QuantileRows<'_>,
    z: &Modulation,
    prev_action: Option<usize>,
) -> Result<ActionDistribution> {
    let num_actions = rows.num_actions();
    if z.biases.len() != num_actions {
        return Err(Error::DimensionMismatch {
            expected: num_actions,
            got: z.biases.len(),
        });
    }
    if let Some(prev) = prev_action {
        if prev >= num_actions {
            return Err(Error::OutOfRange {
                what: "actions",
                index: prev,
                len: num_actions,
            });
        }
    }
    let mut logits = Vec::with_capacity(num_actions);
    for a in 0..num_actions {
        let q = aggregate_unchecked(rows.action(a), z.optimism);
        logits.push((q + z.biases[a]) / z.temperature);
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::NonFinite("logits"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for l in logits.iter_mut() {
        *l = math::exp(*l - max);
        total += *l;
    }

    let rho = if prev_action.is_some() { z.repeat_prob } else { 0.0 };
    let soft_w = (1.0 - z.epsilon) * (1.0 - rho);
    let flat = z.epsilon * (1.0 - rho) / num_actions as f64;
    let mut probs: Vec<f64> = logits.iter().map(|e| soft_w * e / total + flat).collect();
    if let Some(prev) = prev_action {
        probs[prev] += rho;
    }
    Ok(ActionDistribution { probs })
}

/// Draw an action from `dist`.
pub fn sample_action<R: RngCore + ?Sized>(dist: &ActionDistribution, rng: &mut R) -> usize {
    dist.sample(rng)
}

fn checked_means(rows: QuantileRows<'_>) -> Result<Vec<f64>> {
    let means: Vec<f64> = (0..rows.num_actions()).map(|a| rows.mean(a)).collect();
    if means.iter().any(|m| !m.is_finite()) {
        return Err(Error::NonFinite("quantile values"));
    }
    Ok(means)
}

/// Argmax of the quantile mean; ties go to the lowest index.
pub fn greedy_action(rows: QuantileRows<'_>) -> Result<usize> {
    let means = checked_means(rows)?;
    let mut best = 0;
    for (a, &m) in means.iter().enumerate().skip(1) {
        if m > means[best] {
            best = a;
        }
    }
    Ok(best)
}

/// All actions attaining the maximal quantile mean.
pub fn greedy_set(rows: QuantileRows<'_>) -> Result<Vec<usize>> {
    let means = checked_means(rows)?;
    let max = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((0..means.len()).filter(|&a| means[a] == max).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use alloc::vec;
    use proptest::prelude::*;

    fn z(t: f64, eps: f64, b: Vec<f64>, rho: f64, omega: f64) -> Modulation {
        Modulation::new(t, eps, b, rho, omega).unwrap()
    }

    #[test]
    fn midpoint_grid() {
        assert_eq!(midpoints(2), vec![0.25, 0.75]);
        assert_eq!(midpoints(1), vec![0.5]);
    }

    #[test]
    fn flat_average_at_zero_optimism() {
        assert_eq!(optimism_aggregate(&[1.0, 2.0, 3.0], 0.0).unwrap(), 2.0);
    }

    #[test]
    fn constant_vector_is_fixed_point() {
        for omega in [-10.0, -1.0, 0.0, 2.0, 10.0] {
            let v = optimism_aggregate(&[1.5; 7], omega).unwrap();
            assert!((v - 1.5).abs() < 1e-15);
        }
    }

    #[test]
    fn two_quantile_hand_value() {
        // e^{-0.75} / (e^{-0.25} + e^{-0.75})
        let v = optimism_aggregate(&[0.0, 1.0], 1.0).unwrap();
        assert!((v - 0.377_540_668_798_145_4).abs() < 1e-12, "{v}");
    }

    #[test]
    fn aggregate_errors() {
        assert!(optimism_aggregate(&[], 0.0).is_err());
        assert!(optimism_aggregate(&[1.0], f64::NAN).is_err());
        assert!(optimism_aggregate(&[f64::INFINITY], 0.0).is_err());
    }

    #[test]
    fn huge_optimism_does_not_overflow() {
        let v = optimism_aggregate(&[0.0, 1.0, 2.0], 1000.0).unwrap();
        assert!(v.is_finite() && (0.0..=2.0).contains(&v));
    }

    #[test]
    fn full_epsilon_is_uniform() {
        let q = [3.0, -1.0, 0.5, 9.0];
        let rows = QuantileRows::scalar(&q).unwrap();
        let d = action_distribution(rows, &z(0.3, 1.0, vec![1.0, 0.0, 0.0, 0.0], 0.0, 2.0), None)
            .unwrap();
        assert_eq!(d.probs(), &[0.25; 4]);
    }

    #[test]
    fn full_epsilon_with_repeat() {
        let q = [3.0, -1.0, 0.5, 9.0];
        let rows = QuantileRows::scalar(&q).unwrap();
        let d = action_distribution(rows, &z(1.0, 1.0, vec![0.0; 4], 0.5, 0.0), Some(2)).unwrap();
        assert_eq!(d.probs(), &[0.125, 0.125, 0.625, 0.125]);
    }

    #[test]
    fn tiny_temperature_is_greedy() {
        let q = [1.0, 0.0];
        let rows = QuantileRows::scalar(&q).unwrap();
        let d = action_distribution(rows, &z(0.00001, 0.0, vec![0.0; 2], 0.0, 0.0), None).unwrap();
        assert!(d.probs()[0] > 1.0 - 1e-6);
    }

    #[test]
    fn first_step_drops_repeat() {
        let q = [0.2, 0.1, 0.4];
        let rows = QuantileRows::scalar(&q).unwrap();
        let with_rho = action_distribution(rows, &z(0.5, 0.2, vec![0.0; 3], 0.7, 0.0), None).unwrap();
        let without = action_distribution(rows, &z(0.5, 0.2, vec![0.0; 3], 0.0, 0.0), None).unwrap();
        assert_eq!(with_rho, without);
    }

    #[test]
    fn distribution_errors() {
        let q = [0.0, 1.0];
        let rows = QuantileRows::scalar(&q).unwrap();
        assert!(action_distribution(rows, &z(1.0, 0.0, vec![0.0; 3], 0.0, 0.0), None).is_err());
        assert!(action_distribution(rows, &z(1.0, 0.0, vec![0.0; 2], 0.0, 0.0), Some(5)).is_err());
        let nan = [f64::NAN, 0.0];
        let rows = QuantileRows::scalar(&nan).unwrap();
        assert!(action_distribution(rows, &z(1.0, 0.0, vec![0.0; 2], 0.0, 0.0), None).is_err());
        assert!(QuantileRows::new(&[], 1).is_err());
        assert!(QuantileRows::new(&[1.0, 2.0, 3.0], 2).is_err());
    }

    #[test]
    fn sample_point_mass() {
        let d = ActionDistribution::new(vec![1.0, 0.0, 0.0]).unwrap();
        let mut rng = seeded_rng(0);
        for _ in 0..1000 {
            assert_eq!(sample_action(&d, &mut rng), 0);
        }
    }

    #[test]
    fn sample_uniform_frequencies() {
        let d = ActionDistribution::uniform(4).unwrap();
        let mut rng = seeded_rng(11);
        let mut counts = [0usize; 4];
        let n = 1_000_000;
        for _ in 0..n {
            counts[sample_action(&d, &mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.005);
        }
    }

    #[test]
    fn sample_is_reproducible() {
        let d = ActionDistribution::new(vec![0.3, 0.7]).unwrap();
        let run = |seed| {
            let mut rng = seeded_rng(seed);
            (0..64).map(|_| sample_action(&d, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(5), run(5));
    }

    #[test]
    fn zero_weight_never_sampled() {
        let w = [0.0, 0.5, 0.0, 0.5, 0.0];
        for u in [0.0, 0.25, 0.5, 0.999_999_999, 1.0] {
            let i = categorical_from_uniform(&w, u);
            assert!(w[i] > 0.0);
        }
    }

    #[test]
    fn greedy_ties_and_scale() {
        let q = [0.0, 5.0, 3.0];
        assert_eq!(greedy_action(QuantileRows::scalar(&q).unwrap()).unwrap(), 1);
        let tie = [2.0, 2.0];
        assert_eq!(greedy_action(QuantileRows::scalar(&tie).unwrap()).unwrap(), 0);
        assert_eq!(greedy_set(QuantileRows::scalar(&tie).unwrap()).unwrap(), vec![0, 1]);
        let scaled: Vec<f64> = q.iter().map(|v| v * 7.5).collect();
        assert_eq!(greedy_action(QuantileRows::scalar(&scaled).unwrap()).unwrap(), 1);
        assert!(greedy_action(QuantileRows::scalar(&[f64::NAN]).unwrap()).is_err());
    }

    #[test]
    fn greedy_uses_quantile_mean() {
        // action 0 mean 1.0, action 1 mean 1.5
        let q = [0.0, 2.0, 1.4, 1.6];
        assert_eq!(greedy_action(QuantileRows::new(&q, 2).unwrap()).unwrap(), 1);
    }

    proptest! {
        #[test]
        fn aggregate_is_convex_combination(
            q in prop::collection::vec(-50.0f64..50.0, 1..12),
            omega in -20.0f64..20.0,
        ) {
            let v = optimism_aggregate(&q, omega).unwrap();
            let lo = q.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
        }

        #[test]
        fn repeat_mass_lower_bound(
            q in prop::collection::vec(-3.0f64..3.0, 4),
            eps in 0.0f64..=1.0,
            rho in 0.0f64..0.99,
            prev in 0usize..4,
        ) {
            let rows = QuantileRows::scalar(&q).unwrap();
            let d = action_distribution(rows, &z(0.1, eps, vec![0.0; 4], rho, 0.0), Some(prev)).unwrap();
            prop_assert!(d.probs()[prev] >= rho - 1e-15);
            prop_assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn vanishing_temperature_matches_greedy(q in prop::collection::vec(-1.0f64..1.0, 2..6)) {
            let rows = QuantileRows::scalar(&q).unwrap();
            let greedy = greedy_action(rows).unwrap();
            let second = q.iter().enumerate().filter(|(a, _)| *a != greedy)
                .map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
            prop_assume!(q[greedy] - second > 1e-3);
            let d = action_distribution(rows, &z(1e-6, 0.0, vec![0.0; q.len()], 0.0, 0.0), None).unwrap();
            prop_assert!(d.probs()[greedy] > 1.0 - 1e-12);
        }
    }
}
