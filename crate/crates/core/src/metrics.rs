//! Evaluation metrics: normalized relative rank, performance drop and
//! cumulative success curves.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Score of one variant on one game for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub game: String,
    pub seed: u64,
    pub variant: String,
    /// Mean greedy return over the final stretch of the run.
    pub score: f64,
}

impl Outcome {
    pub fn new(game: impl Into<String>, seed: u64, variant: impl Into<String>, score: f64) -> Self {
        Self {
            game: game.into(),
            seed,
            variant: variant.into(),
            score,
        }
    }
}

/// Normalized relative ranks, overall and per game, sorted by variant name.
#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub overall: Vec<(String, f64)>,
    pub per_game: Vec<(String, Vec<(String, f64)>)>,
}

impl RankReport {
    pub fn score(&self, variant: &str) -> Option<f64> {
        self.overall
            .iter()
            .find(|(v, _)| v == variant)
            .map(|(_, s)| *s)
    }
}

/// 1-based mid-ranks of `values`, lowest value first.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Per game, rank all outcomes jointly (mid-ranks for ties), average each
/// variant's ranks and map the average onto `[0, 1]` by
/// `(avg − (N+1)/2) / N⁺`, where `N` is the seed count and `N⁺` the number
/// of outcomes from other variants. Scores are then averaged over games.
pub fn relative_rank(outcomes: &[Outcome]) -> Result<RankReport> {
    if outcomes.iter().any(|o| !o.score.is_finite()) {
        return Err(Error::NonFinite("outcome scores"));
    }
    let mut games: BTreeMap<&str, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    for o in outcomes {
        games
            .entry(o.game.as_str())
            .or_default()
            .entry(o.variant.as_str())
            .or_default()
            .push(o.score);
    }
    if games.is_empty() {
        return Err(Error::Empty("outcomes"));
    }
    let variants: Vec<&str> = games.values().next().expect("non-empty").keys().copied().collect();
    if variants.len() < 2 {
        return Err(Error::InvalidArgument("relative rank needs at least two variants".into()));
    }
    let seeds = games.values().next().expect("non-empty").values().next().expect("non-empty").len();
    let mut per_game = Vec::new();
    let mut totals: BTreeMap<&str, f64> = variants.iter().map(|v| (*v, 0.0)).collect();
    for (game, by_variant) in &games {
        let names: Vec<&str> = by_variant.keys().copied().collect();
        if names != variants {
            return Err(Error::InvalidArgument(format!(
                "game `{game}` does not have the same variants as the others"
            )));
        }
        if let Some((v, s)) = by_variant.iter().find(|(_, s)| s.len() != seeds) {
            return Err(Error::InvalidArgument(format!(
                "variant `{v}` has {} seeds on game `{game}`, expected {seeds}",
                s.len()
            )));
        }
        let all: Vec<f64> = by_variant.values().flatten().copied().collect();
        let ranks = mid_ranks(&all);
        let n = seeds as f64;
        let n_plus = (all.len() - seeds) as f64;
        let mut scores = Vec::new();
        for (k, v) in variants.iter().enumerate() {
            let avg = ranks[k * seeds..(k + 1) * seeds].iter().sum::<f64>() / n;
            let score = (avg - (n + 1.0) / 2.0) / n_plus;
            *totals.get_mut(v).expect("known variant") += score;
            scores.push((String::from(*v), score));
        }
        per_game.push((String::from(*game), scores));
    }
    let g = games.len() as f64;
    Ok(RankReport {
        overall: totals.into_iter().map(|(v, s)| (String::from(v), s / g)).collect(),
        per_game,
    })
}

/// `(G_{z₀} − G_{z⁻}) / (G_{z⁺} − G_{z⁻})` for the early-selected variant
/// `z₀`, with `z⁺`/`z⁻` the best and worst final means.
pub fn performance_drop(early_best: &str, final_means: &[(String, f64)]) -> Result<f64> {
    if final_means.len() < 2 {
        return Err(Error::InvalidArgument("performance drop needs at least two variants".into()));
    }
    if final_means.iter().any(|(_, m)| !m.is_finite()) {
        return Err(Error::NonFinite("final means"));
    }
    let chosen = final_means
        .iter()
        .find(|(v, _)| v == early_best)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown variant `{early_best}`")))?
        .1;
    let best = final_means.iter().map(|(_, m)| *m).fold(f64::NEG_INFINITY, f64::max);
    let worst = final_means.iter().map(|(_, m)| *m).fold(f64::INFINITY, f64::min);
    if best == worst {
        return Err(Error::InvalidArgument("all variants tie; performance drop undefined".into()));
    }
    Ok((chosen - worst) / (best - worst))
}

/// `c_k = 1 − Π_{i≤k}(1 − p_i)`.
pub fn cumulative_success_curve(probabilities: &[f64]) -> Result<Vec<f64>> {
    let mut miss = 1.0;
    probabilities
        .iter()
        .map(|&p| {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
            }
            miss *= 1.0 - p;
            Ok(1.0 - miss)
        })
        .collect()
}

/// Sample mean and standard error of the mean (0 for fewer than two values).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, math::sqrt(var / n))
}

/// Mean of the last `ceil(fraction · len)` entries (at least one).
pub fn tail_mean(series: &[f64], fraction: f64) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::Empty("series"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument("tail fraction must lie in (0, 1]".into()));
    }
    let k = (libm::ceil(fraction * series.len() as f64) as usize).clamp(1, series.len());
    Ok(series[series.len() - k..].iter().sum::<f64>() / k as f64)
}

/// Mean of several equal-length curves, element by element.
pub fn mean_curve(curves: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = curves.first().ok_or(Error::Empty("curves"))?;
    if let Some(c) = curves.iter().find(|c| c.len() != first.len()) {
        return Err(Error::DimensionMismatch {
            expected: first.len(),
            got: c.len(),
        });
    }
    let n = curves.len() as f64;
    Ok((0..first.len())
        .map(|i| curves.iter().map(|c| c[i]).sum::<f64>() / n)
        .collect())
}

/// First index at which `curve` reaches `threshold`.
pub fn first_reaching(curve: &[f64], threshold: f64) -> Option<usize> {
    curve.iter().position(|&c| c >= threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use alloc::vec;
    use rand::Rng;

    fn o(game: &str, seed: u64, variant: &str, score: f64) -> Outcome {
        Outcome::new(game, seed, variant, score)
    }

    #[test]
    fn extremal_two_variants() {
        let mut outs = Vec::new();
        for (g, (a, b)) in [("g1", (3.0, 1.0)), ("g2", (10.0, -4.0))] {
            outs.push(o(g, 0, "A", a));
            outs.push(o(g, 0, "B", b));
        }
        let r = relative_rank(&outs).unwrap();
        assert_eq!(r.score("A"), Some(1.0));
        assert_eq!(r.score("B"), Some(0.0));
    }

    #[test]
    fn two_seed_fixture() {
        let outs = vec![
            o("g", 0, "A", 4.0),
            o("g", 1, "A", 3.0),
            o("g", 0, "B", 2.0),
            o("g", 1, "B", 1.0),
        ];
        let r = relative_rank(&outs).unwrap();
        assert_eq!(r.score("A"), Some(1.0));
        assert_eq!(r.score("B"), Some(0.0));
    }

    #[test]
    fn all_ties_give_half() {
        let mut outs = Vec::new();
        for v in ["A", "B", "C"] {
            for s in 0..3 {
                outs.push(o("g", s, v, 7.0));
            }
        }
        let r = relative_rank(&outs).unwrap();
        for (_, s) in &r.overall {
            assert_eq!(*s, 0.5);
        }
    }

    #[test]
    fn mismatched_seed_counts_rejected() {
        let outs = vec![o("g", 0, "A", 1.0), o("g", 1, "A", 2.0), o("g", 0, "B", 0.0)];
        assert!(relative_rank(&outs).is_err());
        assert!(relative_rank(&[o("g", 0, "A", 1.0)]).is_err());
    }

    #[test]
    fn invariant_under_monotone_transforms() {
        let mut rng = seeded_rng(31);
        for _ in 0..200 {
            let mut outs = Vec::new();
            for g in ["g1", "g2", "g3"] {
                for v in ["A", "B", "C", "D"] {
                    for s in 0..3 {
                        // a coarse grid makes cross-variant ties common
                        outs.push(o(g, s, v, rng.random_range(0..6) as f64));
                    }
                }
            }
            let base = relative_rank(&outs).unwrap();
            let transformed: Vec<Outcome> = outs
                .iter()
                .map(|x| {
                    let f = match x.game.as_str() {
                        "g1" => x.score.exp(),
                        "g2" => 3.0 * x.score - 100.0,
                        _ => x.score.powi(3) + x.score,
                    };
                    Outcome { score: f, ..x.clone() }
                })
                .collect();
            assert_eq!(relative_rank(&transformed).unwrap(), base);
            for (_, s) in &base.overall {
                assert!((0.0..=1.0).contains(s));
            }
        }
    }

    fn means(v: &[(&str, f64)]) -> Vec<(String, f64)> {
        v.iter().map(|(n, m)| (String::from(*n), *m)).collect()
    }

    #[test]
    fn performance_drop_fixtures() {
        let m = means(&[("z0", 5.0), ("best", 8.0), ("worst", 2.0)]);
        assert_eq!(performance_drop("best", &m).unwrap(), 1.0);
        assert_eq!(performance_drop("worst", &m).unwrap(), 0.0);
        assert_eq!(performance_drop("z0", &m).unwrap(), 0.5);
        assert!(performance_drop("z0", &means(&[("z0", 1.0), ("b", 1.0)])).is_err());
        assert!(performance_drop("nope", &m).is_err());
    }

    #[test]
    fn performance_drop_affine_invariant() {
        let m = means(&[("a", 0.3), ("b", 1.7), ("c", -0.2)]);
        let scaled: Vec<_> = m.iter().map(|(n, v)| (n.clone(), 4.0 * v + 11.0)).collect();
        let x = performance_drop("a", &m).unwrap();
        let y = performance_drop("a", &scaled).unwrap();
        assert!((x - y).abs() < 1e-12);
    }

    #[test]
    fn cumulative_curve_fixtures() {
        assert_eq!(cumulative_success_curve(&[0.0; 3]).unwrap(), vec![0.0; 3]);
        assert_eq!(cumulative_success_curve(&[1.0; 3]).unwrap(), vec![1.0; 3]);
        assert_eq!(cumulative_success_curve(&[0.5, 0.5]).unwrap(), vec![0.5, 0.75]);
        assert!(cumulative_success_curve(&[1.5]).is_err());
        let mut rng = seeded_rng(1);
        let p: Vec<f64> = (0..500).map(|_| rng.random::<f64>() * 0.01).collect();
        let c = cumulative_success_curve(&p).unwrap();
        assert!(c.windows(2).all(|w| w[0] <= w[1]) && c.iter().all(|v| *v <= 1.0));
    }

    #[test]
    fn summary_helpers() {
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(tail_mean(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 10.0], 0.1).unwrap(), 10.0);
        assert_eq!(first_reaching(&[0.1, 0.4, 0.6], 0.5), Some(2));
        assert_eq!(mid_ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
    }
}
