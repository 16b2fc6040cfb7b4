//! Experiment config files and environment loading.
//!
//! Configs are TOML; every key is optional and command-line flags win.
//!
//! ```toml
//! map = "lavaworld"          # or a path to an ASCII map
//! modulation_set = "lavaworld"
//! bandit = "adaptive"
//! episodes = 500
//! seeds = 10
//! seed = 0
//! actors = 4
//! ratio = 8.0                # replay samples per inserted transition
//! eval_period = 10
//! continuation = 0.99
//!
//! [learner]
//! quantiles = 11
//! learning_rate = 0.05
//! batch_size = 64
//!
//! [bench]
//! means = [0.9, 0.1]
//! period = 300
//! steps = 3000
//! bandits = ["adaptive", "ucb", "thompson", "uniform"]
//! ```

use std::path::Path;

use modbandit_core::env::{GridMap, TabularMdp, DEFAULT_CONTINUATION, LAVAWORLD_MAP};
use modbandit_core::learner::LearnerConfig;
use serde::Deserialize;

use crate::error::{read_file, Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub map: Option<String>,
    pub modulation_set: Option<String>,
    pub bandit: Option<String>,
    pub episodes: Option<u64>,
    pub seeds: Option<u64>,
    pub seed: Option<u64>,
    pub actors: Option<usize>,
    pub ratio: Option<f64>,
    pub eval_period: Option<u64>,
    pub continuation: Option<f64>,
    pub step_cap: Option<usize>,
    pub learner: LearnerSection,
    pub bench: BenchSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSection {
    pub quantiles: Option<usize>,
    pub learning_rate: Option<f64>,
    pub kappa: Option<f64>,
    pub n_step: Option<usize>,
    pub discount: Option<f64>,
    pub target_sync_period: Option<u64>,
    pub batch_size: Option<usize>,
    pub replay_capacity: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub means: Option<Vec<f64>>,
    pub period: Option<u64>,
    pub steps: Option<u64>,
    pub bandits: Option<Vec<String>>,
}

impl ConfigFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(origin, e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?, &path.display().to_string())
    }

    /// Learner settings on top of the defaults.
    pub fn learner_config(&self) -> LearnerConfig {
        let d = LearnerConfig::default();
        let l = &self.learner;
        LearnerConfig {
            num_quantiles: l.quantiles.unwrap_or(d.num_quantiles),
            learning_rate: l.learning_rate.unwrap_or(d.learning_rate),
            kappa: l.kappa.unwrap_or(d.kappa),
            n_step: l.n_step.unwrap_or(d.n_step),
            discount: l.discount.unwrap_or(d.discount),
            target_sync_period: l.target_sync_period.unwrap_or(d.target_sync_period),
            batch_size: l.batch_size.unwrap_or(d.batch_size),
            replay_capacity: l.replay_capacity.unwrap_or(d.replay_capacity),
            alpha: l.alpha.unwrap_or(d.alpha),
            beta: l.beta.unwrap_or(d.beta),
        }
    }
}

/// A parsed grid and its MDP.
#[derive(Debug, Clone)]
pub struct Environment {
    /// `lavaworld` or the map file's stem; used as the game id in outcomes.
    pub name: String,
    pub map: GridMap,
    pub mdp: TabularMdp,
}

/// `lavaworld` for the bundled map, otherwise a path to an ASCII map.
pub fn load_environment(source: &str, continuation: Option<f64>) -> Result<Environment> {
    let (name, text, origin) = if source == "lavaworld" {
        ("lavaworld".to_string(), LAVAWORLD_MAP.to_string(), "lavaworld".to_string())
    } else {
        let path = Path::new(source);
        let name = path
            .file_stem()
            .map_or_else(|| source.to_string(), |s| s.to_string_lossy().into_owned());
        (name, read_file(path)?, path.display().to_string())
    };
    let map = GridMap::parse(&text).map_err(|e| Error::parse(&origin, e.to_string()))?;
    let mdp = map.to_mdp(continuation.unwrap_or(DEFAULT_CONTINUATION))?;
    Ok(Environment { name, map, mdp })
}
