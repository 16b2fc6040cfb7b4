//! Command-line front end.
//!
//! Exit status: 0 on success, 2 on usage errors (bad flags, unknown
//! subcommands, invalid settings), 1 on runtime failures.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use modbandit_core::bandit::BanditKind;
use modbandit_core::env::LavaWorld;
use modbandit_core::harness::{
    run_bandit_bench, Experiment, ExperimentConfig, FlippingBernoulli, LavaWorldSetup, NonStationaryVariant,
    RunLog, Selector, StationaryVariant,
};
use modbandit_core::metrics::{mean_and_stderr, performance_drop, relative_rank, tail_mean, Outcome};

use crate::actors::{run_actors, Schedule};
use crate::checkpoint::Checkpoint;
use crate::config::{load_environment, ConfigFile};
use crate::csvlog::{read_outcomes, read_run_log, table_to_csv};
use crate::error::{write_file, Error, Result};
use crate::modset::resolve_modulation_set;
use crate::presets::{self, default_threads, parallel_map};
use crate::snapshot::{read_selector, write_selector};

#[derive(Debug, Parser)]
#[command(name = "modbandit", version, about = "Bandit-adapted exploration experiments on grid worlds")]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed. Runs use seeds S, S+1, ...
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of seeds to run.
    #[arg(long, global = true, value_name = "COUNT")]
    pub seeds: Option<u64>,
    /// adaptive, factored-adaptive, uniform, ucb[:c], thompson or fixed-arm:<i>
    #[arg(long, global = true, value_name = "KIND")]
    pub bandit: Option<String>,
    /// curated, extended, lavaworld or a path to a modulation file.
    #[arg(long = "modulation-set", global = true, value_name = "SET")]
    pub modulation_set: Option<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Actor threads for `train`; worker threads for the other runs.
    #[arg(long, global = true, value_name = "N")]
    pub actors: Option<usize>,
    /// Fixed scheduling, so output depends only on the seeds.
    #[arg(long, global = true)]
    pub deterministic: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// LavaWorld with fixed optimal values: cumulative success per bandit variant.
    LavaworldStationary {
        /// Episodes per run [default: 2000]
        #[arg(long)]
        episodes: Option<u64>,
    },
    /// LavaWorld with lava-suppression learning: greedy success per bandit variant.
    LavaworldNonstationary {
        /// Episodes per run [default: 2000]
        #[arg(long)]
        episodes: Option<u64>,
    },
    /// Quantile learner plus bandit on an ASCII map.
    Train {
        /// `lavaworld` or a path to an ASCII map.
        #[arg(long)]
        map: Option<String>,
        /// Episodes per run [default: 500]
        #[arg(long)]
        episodes: Option<u64>,
        /// Earlier `--out` directory to resume from.
        #[arg(long, value_name = "DIR")]
        resume: Option<PathBuf>,
    },
    /// Relative rank of every variant in outcome CSVs.
    Rank {
        /// An outcome CSV or a directory searched for them.
        path: PathBuf,
    },
    /// Normalized final score of the early-best variant, and its drop.
    Drop {
        /// An outcome CSV or a directory searched for them.
        path: PathBuf,
        /// Variant that looked best early; by default taken from the run
        /// logs under `<path>/runs`.
        #[arg(long, value_name = "VARIANT")]
        early: Option<String>,
    },
    /// Bandits on Bernoulli arms whose best arm rotates periodically.
    Bench {
        /// Pulls per run [default: 3000]
        #[arg(long)]
        steps: Option<u64>,
        /// Pulls between rotations of the best arm [default: 300]
        #[arg(long)]
        period: Option<u64>,
    },
}

/// Settings shared by every subcommand after merging config and flags.
struct Settings {
    file: ConfigFile,
    seeds: Vec<u64>,
    out: Option<PathBuf>,
    threads: usize,
    schedule: Schedule,
    bandit: Option<String>,
    modulation_set: Option<String>,
}

impl Settings {
    fn new(cli: &Cli, default_seeds: u64) -> Result<Self> {
        let file = match &cli.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let base = cli.seed.or(file.seed).unwrap_or(0);
        let count = cli.seeds.or(file.seeds).unwrap_or(default_seeds);
        if count == 0 {
            return Err(Error::Usage("--seeds must be at least 1".into()));
        }
        let actors = cli.actors.or(file.actors);
        if actors == Some(0) {
            return Err(Error::Usage("--actors must be at least 1".into()));
        }
        Ok(Self {
            seeds: (0..count).map(|i| base.wrapping_add(i)).collect(),
            out: cli.out.clone(),
            threads: actors.unwrap_or_else(default_threads),
            schedule: if cli.deterministic { Schedule::Lockstep } else { Schedule::Free },
            bandit: cli.bandit.clone().or_else(|| file.bandit.clone()),
            modulation_set: cli.modulation_set.clone().or_else(|| file.modulation_set.clone()),
            file,
        })
    }

    fn bandit_kind(&self) -> Result<BanditKind> {
        self.bandit
            .as_deref()
            .unwrap_or("adaptive")
            .parse()
            .map_err(|e: modbandit_core::Error| Error::Usage(e.to_string()))
    }

    fn reject_bandit(&self, command: &str) -> Result<()> {
        match &self.bandit {
            Some(b) => Err(Error::Usage(format!(
                "`{command}` runs a fixed set of variants; --bandit {b} does not apply"
            ))),
            None => Ok(()),
        }
    }

    fn lavaworld_setup(&self) -> Result<LavaWorldSetup> {
        let env = load_environment(self.file.map.as_deref().unwrap_or("lavaworld"), self.file.continuation)?;
        let space = resolve_modulation_set(self.modulation_set.as_deref().unwrap_or("lavaworld"), env.mdp.num_actions())?;
        Ok(LavaWorldSetup::from_world(
            LavaWorld {
                map: env.map,
                mdp: env.mdp,
            },
            space,
            0,
        )?)
    }
}

fn usage_if_zero(name: &str, v: u64) -> Result<u64> {
    if v == 0 {
        return Err(Error::Usage(format!("{name} must be at least 1")));
    }
    Ok(v)
}

fn print(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::io(Path::new("<stdout>"), e))
}

fn stationary(cli: &Cli, episodes: Option<u64>, out: &mut dyn Write) -> Result<()> {
    let s = Settings::new(cli, 10)?;
    s.reject_bandit("lavaworld-stationary")?;
    let episodes = usage_if_zero("--episodes", episodes.or(s.file.episodes).unwrap_or(2000))?;
    let setup = s.lavaworld_setup()?;
    let variants = StationaryVariant::all(setup.arms.len());
    let logs = presets::run_stationary_preset(&setup, &variants, episodes, &s.seeds, s.threads)?;
    finish_preset(&s, presets::STATIONARY, "cumulative success", &logs, out)
}

fn nonstationary(cli: &Cli, episodes: Option<u64>, out: &mut dyn Write) -> Result<()> {
    let s = Settings::new(cli, 10)?;
    s.reject_bandit("lavaworld-nonstationary")?;
    let episodes = usage_if_zero("--episodes", episodes.or(s.file.episodes).unwrap_or(2000))?;
    let setup = s.lavaworld_setup()?;
    let variants = NonStationaryVariant::all(setup.arms.len());
    let logs = presets::run_nonstationary_preset(&setup, &variants, episodes, &s.seeds, s.threads)?;
    finish_preset(&s, presets::NONSTATIONARY, "success probability", &logs, out)
}

fn finish_preset(s: &Settings, game: &str, metric: &str, logs: &[RunLog], out: &mut dyn Write) -> Result<()> {
    let summaries = match &s.out {
        Some(dir) => presets::write_outputs(dir, game, metric, logs, &presets::outcomes(game, logs))?,
        None => presets::summarize(logs)?,
    };
    print(out, &presets::summary_csv(&summaries))
}

fn train(cli: &Cli, map: Option<&str>, episodes: Option<u64>, resume: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let s = Settings::new(cli, 1)?;
    let env = load_environment(map.or(s.file.map.as_deref()).unwrap_or("lavaworld"), s.file.continuation)?;
    let space = resolve_modulation_set(s.modulation_set.as_deref().unwrap_or("lavaworld"), env.mdp.num_actions())?;
    let kind = s.bandit_kind()?;
    let variant = kind.to_string();
    let d = ExperimentConfig::default();
    let base = ExperimentConfig {
        bandit: kind,
        episodes: usage_if_zero("--episodes", episodes.or(s.file.episodes).unwrap_or(500))?,
        ratio: s.file.ratio.unwrap_or(d.ratio),
        eval_period: s.file.eval_period.unwrap_or(d.eval_period),
        learner: s.file.learner_config(),
        step_cap: s.file.step_cap.unwrap_or(d.step_cap),
        ..d
    };
    base.validate().map_err(|e| Error::Usage(e.to_string()))?;
    // Seeds run one after another; each run has its own actor threads.
    let actors = cli.actors.or(s.file.actors).unwrap_or(1);
    let mut logs = Vec::with_capacity(s.seeds.len());
    let mut scores = Vec::with_capacity(s.seeds.len());
    for &seed in &s.seeds {
        let config = ExperimentConfig { seed, ..base.clone() };
        let mut exp = Experiment::new(&env.mdp, &space, config)?;
        let run_dir = |root: &Path| root.join("runs").join(&variant).join(seed.to_string());
        if let Some(dir) = resume {
            let dir = run_dir(dir);
            Checkpoint::load(&dir.join("checkpoint.txt"))?.restore_into(exp.learner_mut())?;
            let bandit = dir.join("bandit.txt");
            if bandit.exists() {
                exp.set_selector(read_selector(&bandit)?)?;
            }
        }
        run_actors(&mut exp, actors, s.schedule)?;
        if let Some(root) = &s.out {
            let dir = run_dir(root);
            Checkpoint::of(exp.learner()).save(&dir.join("checkpoint.txt"))?;
            // flat baselines have no snapshot format
            if !matches!(exp.selector(), Selector::Flat(_)) {
                write_selector(exp.selector(), &dir.join("bandit.txt"))?;
            }
        }
        let log = exp.into_log();
        scores.push(Outcome::new(env.name.clone(), seed, variant.clone(), tail_mean(&log.eval_curve(), 0.1)?));
        logs.push(log);
    }
    let summaries = match &s.out {
        Some(dir) => presets::write_outputs(dir, &env.name, "greedy return", &logs, &scores)?,
        None => presets::summarize(&logs)?,
    };
    print(out, &presets::summary_csv(&summaries))
}

fn rank(path: &Path, out: &mut dyn Write) -> Result<()> {
    let report = relative_rank(&read_outcomes(path)?)?;
    let line = |scores: &[(String, f64)]| scores.iter().map(|(v, r)| format!("{v}={r:?}")).collect::<Vec<_>>().join(" ");
    let mut text = line(&report.overall);
    text.push('\n');
    if report.per_game.len() > 1 {
        for (game, scores) in &report.per_game {
            text.push_str(&format!("{game}: {}\n", line(scores)));
        }
    }
    print(out, &text)
}

/// Variant whose mean eval is highest a tenth of the way into the runs
/// stored under `<root>/runs`.
fn early_best(root: &Path) -> Result<String> {
    let runs = root.join("runs");
    let no_logs = || Error::Usage(format!("no run logs under {}; pass --early", runs.display()));
    let mut by_variant: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    let variants = std::fs::read_dir(&runs).map_err(|_| no_logs())?;
    for v in variants.flatten() {
        for seed in std::fs::read_dir(v.path()).map_err(|e| Error::io(&v.path(), e))?.flatten() {
            let path = seed.path().join("log.csv");
            if !path.is_file() {
                continue;
            }
            let log = read_run_log(&path)?;
            let curve = log.eval_curve();
            if curve.is_empty() {
                continue;
            }
            let at = (curve.len().div_ceil(10)).max(1) - 1;
            by_variant.entry(log.variant).or_default().push(curve[at]);
        }
    }
    by_variant
        .into_iter()
        .map(|(v, xs)| (v, mean_and_stderr(&xs).0))
        .fold(None, |best: Option<(String, f64)>, (v, m)| match best {
            Some((_, bm)) if bm >= m => best,
            _ => Some((v, m)),
        })
        .map(|(v, _)| v)
        .ok_or_else(no_logs)
}

fn drop_cmd(path: &Path, early: Option<&str>, out: &mut dyn Write) -> Result<()> {
    let outcomes = read_outcomes(path)?;
    let mut means: std::collections::BTreeMap<&str, Vec<f64>> = Default::default();
    for o in &outcomes {
        means.entry(&o.variant).or_default().push(o.score);
    }
    let means: Vec<(String, f64)> = means.into_iter().map(|(v, xs)| (v.to_string(), mean_and_stderr(&xs).0)).collect();
    let early = match early {
        Some(v) => v.to_string(),
        None if path.is_dir() => early_best(path)?,
        None => return Err(Error::Usage("pass --early when reading a single outcome file".into())),
    };
    if !means.iter().any(|(v, _)| *v == early) {
        return Err(Error::Usage(format!("variant `{early}` has no outcomes")));
    }
    let score = performance_drop(&early, &means)?;
    let mut text = String::new();
    for (v, m) in &means {
        text.push_str(&format!("{v} mean={m:?}\n"));
    }
    text.push_str(&format!("early={early} score={score:?} drop={:?}\n", 1.0 - score));
    print(out, &text)
}

fn bench(cli: &Cli, steps: Option<u64>, period: Option<u64>, out: &mut dyn Write) -> Result<()> {
    let s = Settings::new(cli, 50)?;
    let b = &s.file.bench;
    let steps = usage_if_zero("--steps", steps.or(b.steps).unwrap_or(3000))?;
    let period = usage_if_zero("--period", period.or(b.period).unwrap_or(300))?;
    let means = b.means.clone().unwrap_or_else(|| vec![0.9, 0.1]);
    let problem = FlippingBernoulli::new(means, period).map_err(|e| Error::Usage(e.to_string()))?;
    let names: Vec<String> = match (&s.bandit, &b.bandits) {
        (Some(one), _) => vec![one.clone()],
        (None, Some(list)) => list.clone(),
        (None, None) => ["adaptive", "ucb", "thompson", "uniform"].map(String::from).to_vec(),
    };
    let kinds = names
        .iter()
        .map(|n| n.parse::<BanditKind>().map_err(|e| Error::Usage(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    if kinds.iter().any(BanditKind::is_factored) {
        return Err(Error::Usage("the factored bandit needs a modulation space; bench uses flat arms".into()));
    }
    let tasks: Vec<(usize, u64)> = (0..kinds.len()).flat_map(|k| s.seeds.iter().map(move |&seed| (k, seed))).collect();
    let rewards = parallel_map(&tasks, s.threads, |&(k, seed)| Ok(run_bandit_bench(&kinds[k], &problem, steps, seed)?))?;
    let mut rows = Vec::new();
    let mut per_seed = Vec::new();
    for (k, kind) in kinds.iter().enumerate() {
        let r: Vec<f64> = tasks.iter().zip(&rewards).filter(|((i, _), _)| *i == k).map(|(_, &x)| x).collect();
        let (m, se) = mean_and_stderr(&r);
        rows.push(vec![kind.to_string(), r.len().to_string(), m.to_string(), se.to_string()]);
        per_seed.extend(s.seeds.iter().zip(&r).map(|(&seed, &x)| Outcome::new("flipping-bernoulli", seed, kind.to_string(), x)));
    }
    let table = table_to_csv(&["bandit", "seeds", "mean_reward", "stderr"], &rows);
    if let Some(dir) = &s.out {
        write_file(&dir.join("bench.csv"), &table)?;
        crate::csvlog::write_outcomes(&per_seed, &dir.join("outcomes.csv"))?;
    }
    print(out, &table)
}

/// Parse `argv` and run; returns the exit status.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::LavaworldStationary { episodes } => stationary(&cli, *episodes, stdout),
        Command::LavaworldNonstationary { episodes } => nonstationary(&cli, *episodes, stdout),
        Command::Train { map, episodes, resume } => train(&cli, map.as_deref(), *episodes, resume.as_deref(), stdout),
        Command::Rank { path } => rank(path, stdout),
        Command::Drop { path, early } => drop_cmd(path, early.as_deref(), stdout),
        Command::Bench { steps, period } => bench(&cli, *steps, *period, stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
