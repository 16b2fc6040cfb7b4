//! The two LavaWorld presets, run over many seeds, and their output tree.
//!
//! ```text
//! <out>/runs/<variant>/<seed>/log.csv
//! <out>/figures/eval.svg        mean curve per adaptive variant, uniform and the best fixed arm
//! <out>/figures/fixed.svg       final mean of every fixed arm, when any ran
//! <out>/summary.csv
//! <out>/outcomes.csv            game,seed,variant,score
//! ```
//!
//! `summary.csv` columns: `variant,seeds,final_mean,final_stderr,auc_mean,
//! auc_stderr,half_best_episode`. `auc` is the mean of a run's eval curve;
//! `half_best_episode` is the first episode where the seed-mean curve
//! reaches half of the best fixed arm's final mean (empty if never).

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use modbandit_core::harness::{
    run_lavaworld_nonstationary, run_lavaworld_stationary, LavaWorldSetup, NonStationaryVariant, RunLog,
    StationaryVariant,
};
use modbandit_core::metrics::{first_reaching, mean_and_stderr, mean_curve, Outcome};

use crate::csvlog::{table_to_csv, write_outcomes, write_run_log};
use crate::error::{write_file, Error, Result};
use crate::svg::{Plot, Series};

pub const STATIONARY: &str = "lavaworld-stationary";
pub const NONSTATIONARY: &str = "lavaworld-nonstationary";

/// Run `job` on every task using up to `threads` workers. Results come
/// back in task order whatever the scheduling.
pub fn parallel_map<T, R, F>(tasks: &[T], threads: usize, job: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<R>>>> = Mutex::new((0..tasks.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, tasks.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(task) = tasks.get(i) else { break };
                let r = job(task);
                slots.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every task ran"))
        .collect()
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn sorted(mut logs: Vec<RunLog>) -> Vec<RunLog> {
    logs.sort_by(|a, b| (&a.variant, a.seed).cmp(&(&b.variant, b.seed)));
    logs
}

pub fn run_stationary_preset(
    setup: &LavaWorldSetup,
    variants: &[StationaryVariant],
    episodes: u64,
    seeds: &[u64],
    threads: usize,
) -> Result<Vec<RunLog>> {
    let tasks: Vec<(StationaryVariant, u64)> =
        variants.iter().flat_map(|&v| seeds.iter().map(move |&s| (v, s))).collect();
    let logs = parallel_map(&tasks, threads, |&(v, s)| Ok(run_lavaworld_stationary(setup, v, episodes, s)?))?;
    Ok(sorted(logs))
}

pub fn run_nonstationary_preset(
    setup: &LavaWorldSetup,
    variants: &[NonStationaryVariant],
    episodes: u64,
    seeds: &[u64],
    threads: usize,
) -> Result<Vec<RunLog>> {
    let tasks: Vec<(NonStationaryVariant, u64)> =
        variants.iter().flat_map(|&v| seeds.iter().map(move |&s| (v, s))).collect();
    let logs = parallel_map(&tasks, threads, |&(v, s)| Ok(run_lavaworld_nonstationary(setup, v, episodes, s)?))?;
    Ok(sorted(logs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantSummary {
    pub variant: String,
    pub seeds: usize,
    pub final_mean: f64,
    pub final_stderr: f64,
    pub auc_mean: f64,
    pub auc_stderr: f64,
    /// 1-based episode, see the module docs.
    pub half_best_episode: Option<usize>,
    pub mean_curve: Vec<f64>,
}

fn curve_mean(curve: &[f64]) -> f64 {
    if curve.is_empty() {
        0.0
    } else {
        curve.iter().sum::<f64>() / curve.len() as f64
    }
}

/// Per-variant statistics, sorted by variant name.
pub fn summarize(logs: &[RunLog]) -> Result<Vec<VariantSummary>> {
    let mut groups: BTreeMap<&str, Vec<Vec<f64>>> = BTreeMap::new();
    for log in logs {
        groups.entry(&log.variant).or_default().push(log.eval_curve());
    }
    let mut out = Vec::with_capacity(groups.len());
    for (variant, curves) in groups {
        let finals: Vec<f64> = curves.iter().map(|c| c.last().copied().unwrap_or(0.0)).collect();
        let aucs: Vec<f64> = curves.iter().map(|c| curve_mean(c)).collect();
        let (final_mean, final_stderr) = mean_and_stderr(&finals);
        let (auc_mean, auc_stderr) = mean_and_stderr(&aucs);
        out.push(VariantSummary {
            variant: variant.to_string(),
            seeds: curves.len(),
            final_mean,
            final_stderr,
            auc_mean,
            auc_stderr,
            half_best_episode: None,
            mean_curve: mean_curve(&curves)?,
        });
    }
    if let Some(best) = best_fixed(&out).map(|b| b.final_mean) {
        for s in &mut out {
            s.half_best_episode = first_reaching(&s.mean_curve, 0.5 * best).map(|i| i + 1);
        }
    }
    Ok(out)
}

/// The fixed-arm variant with the highest final mean.
pub fn best_fixed(summaries: &[VariantSummary]) -> Option<&VariantSummary> {
    summaries
        .iter()
        .filter(|s| s.variant.starts_with("fixed-"))
        .max_by(|a, b| a.final_mean.total_cmp(&b.final_mean))
}

pub fn find<'s>(summaries: &'s [VariantSummary], variant: &str) -> Result<&'s VariantSummary> {
    summaries
        .iter()
        .find(|s| s.variant == variant)
        .ok_or_else(|| Error::Usage(format!("variant `{variant}` was not run")))
}

pub fn summary_csv(summaries: &[VariantSummary]) -> String {
    let rows: Vec<Vec<String>> = summaries
        .iter()
        .map(|s| {
            vec![
                s.variant.clone(),
                s.seeds.to_string(),
                s.final_mean.to_string(),
                s.final_stderr.to_string(),
                s.auc_mean.to_string(),
                s.auc_stderr.to_string(),
                s.half_best_episode.map_or_else(String::new, |e| e.to_string()),
            ]
        })
        .collect();
    table_to_csv(
        &["variant", "seeds", "final_mean", "final_stderr", "auc_mean", "auc_stderr", "half_best_episode"],
        &rows,
    )
}

/// One outcome per run, scored by its final `eval_return`.
pub fn outcomes(game: &str, logs: &[RunLog]) -> Vec<Outcome> {
    logs.iter()
        .map(|l| Outcome::new(game, l.seed, l.variant.clone(), l.final_eval().unwrap_or(0.0)))
        .collect()
}

/// Write the whole output tree for one run set, with `outcomes.csv` from
/// `scores`.
pub fn write_outputs(
    out: &Path,
    game: &str,
    metric: &str,
    logs: &[RunLog],
    scores: &[Outcome],
) -> Result<Vec<VariantSummary>> {
    let summaries = summarize(logs)?;
    for log in logs {
        write_run_log(log, &out.join("runs").join(&log.variant).join(log.seed.to_string()).join("log.csv"))?;
    }
    write_file(&out.join("summary.csv"), &summary_csv(&summaries))?;
    write_outcomes(scores, &out.join("outcomes.csv"))?;

    let best = best_fixed(&summaries).map(|b| b.variant.clone());
    let mut eval = Plot::new(game, "episode", metric);
    for s in &summaries {
        if !s.variant.starts_with("fixed-") || Some(&s.variant) == best.as_ref() {
            eval = eval.with_series(Series::from_curve(&s.variant, &s.mean_curve));
        }
    }
    eval.write(&out.join("figures").join("eval.svg"))?;
    let fixed: Vec<(f64, f64)> = summaries
        .iter()
        .filter_map(|s| {
            let arm: f64 = s.variant.strip_prefix("fixed-")?.parse().ok()?;
            Some((arm, s.final_mean))
        })
        .collect();
    if !fixed.is_empty() {
        Plot::new(format!("{game}: fixed arms"), "arm", format!("final {metric}"))
            .with_series(Series::new("fixed arms", fixed))
            .write(&out.join("figures").join("fixed.svg"))?;
    }
    Ok(summaries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use modbandit_core::harness::LogRow;

    fn log(variant: &str, seed: u64, evals: &[f64]) -> RunLog {
        let mut l = RunLog::new(variant, seed, vec!["a".into()]);
        for (i, &e) in evals.iter().enumerate() {
            l.rows.push(LogRow {
                episode: i as u64 + 1,
                env_steps: i as u64,
                fitness: 0.0,
                eval_return: e,
                horizon: None,
                arm_probs: vec![1.0],
            });
        }
        l
    }

    #[test]
    fn summary_statistics() {
        let logs = vec![
            log("fixed-00", 0, &[0.2, 0.4, 0.8]),
            log("fixed-00", 1, &[0.2, 0.4, 0.8]),
            log("fixed-01", 0, &[0.1, 0.1, 0.1]),
            log("uniform", 0, &[0.0, 0.3, 0.5]),
            log("uniform", 1, &[0.1, 0.5, 0.7]),
        ];
        let s = summarize(&logs).unwrap();
        assert_eq!(s.iter().map(|v| v.variant.as_str()).collect::<Vec<_>>(), ["fixed-00", "fixed-01", "uniform"]);
        let u = find(&s, "uniform").unwrap();
        assert!((u.final_mean - 0.6).abs() < 1e-12 && (u.final_stderr - 0.1).abs() < 1e-12);
        assert_eq!(u.mean_curve, vec![0.05, 0.4, 0.6]);
        // half of fixed-00's 0.8
        assert_eq!(u.half_best_episode, Some(2));
        assert_eq!(find(&s, "fixed-01").unwrap().half_best_episode, None);
        assert_eq!(best_fixed(&s).unwrap().variant, "fixed-00");
        assert!(find(&s, "oracle").is_err());
        let csv = summary_csv(&s);
        assert!(csv.starts_with("variant,seeds,final_mean"));
        assert!(csv.contains("\nfixed-01,1,0.1,0,0.10000000000000002,0,\n"), "{csv}");
    }

    #[test]
    fn parallel_map_keeps_order_and_errors() {
        let tasks: Vec<u64> = (0..50).collect();
        let got = parallel_map(&tasks, 7, |&t| Ok(t * t)).unwrap();
        assert_eq!(got, tasks.iter().map(|t| t * t).collect::<Vec<_>>());
        let err = parallel_map(&tasks, 3, |&t| if t == 17 { Err(Error::Usage("x".into())) } else { Ok(t) });
        assert!(err.is_err());
        assert!(parallel_map(&[] as &[u64], 4, |&t| Ok(t)).unwrap().is_empty());
    }

    #[test]
    fn preset_order_does_not_depend_on_threads() {
        let setup = LavaWorldSetup::new().unwrap();
        let variants = [StationaryVariant::Uniform, StationaryVariant::Oracle, StationaryVariant::Fixed(3)];
        let a = run_stationary_preset(&setup, &variants, 20, &[2, 1], 1).unwrap();
        let b = run_stationary_preset(&setup, &variants, 20, &[2, 1], 4).unwrap();
        assert_eq!(a, b);
        let keys: Vec<(String, u64)> = a.iter().map(|l| (l.variant.clone(), l.seed)).collect();
        assert_eq!(keys[0], ("fixed-03".to_string(), 1));
        assert_eq!(keys[5], ("uniform".to_string(), 2));
    }

    #[test]
    fn output_tree() {
        let setup = LavaWorldSetup::new().unwrap();
        let variants = [NonStationaryVariant::BinaryProxy, NonStationaryVariant::Fixed(0)];
        let logs = run_nonstationary_preset(&setup, &variants, 15, &[0], 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_outputs(dir.path(), NONSTATIONARY, "success", &logs, &outcomes(NONSTATIONARY, &logs)).unwrap();
        for f in ["runs/binary-proxy/0/log.csv", "runs/fixed-00/0/log.csv", "summary.csv", "outcomes.csv", "figures/eval.svg", "figures/fixed.svg"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        let o = crate::csvlog::read_outcomes(&dir.path().join("outcomes.csv")).unwrap();
        assert_eq!(o.len(), 2);
        assert_eq!(o[0].game, NONSTATIONARY);
    }
}
