//! Single-threaded experiment orchestration.
//!
//! [`Experiment`] is the coordinator: it owns the bandit, the learner and
//! the log, hands out modulation assignments and consumes finished
//! episodes. Actors only need [`run_episode`] and a value snapshot, so the
//! same coordinator backs both the interleaved loop in [`run_experiment`]
//! and threaded drivers.
//!
//! The two LavaWorld presets run without a quantile learner: the
//! stationary one keeps the optimal values fixed, the non-stationary one
//! learns by lava suppression.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, RngCore};

use crate::bandit::{AdaptiveBandit, ArmSelector, BanditKind, FactoredBandit};
use crate::env::{
    binary_lp_proxy, build_lavaworld, expected_return, greedy_policy,
    greedy_success_probability, modulated_success_probability, optimal_q, ActionValues, LavaLearner,
    LavaWorld, LpOracle, QTable, TabularMdp, Termination, Trajectory, TrajectoryStep,
};
use crate::learner::{n_step_transitions, LearnerConfig, QuantileLearner, QuantileQTable};
use crate::modulation::{enumerate_flat, FlatArm, Modulation, ModulationSpace};
use crate::policy::action_distribution;
use crate::{derive_seed, seeded_rng, Error, Result, SeededRng};

/// Safety cap on episode length.
pub const EPISODE_STEP_CAP: usize = 10_000;
/// Default replay samples consumed per inserted transition.
pub const DEFAULT_RATIO: f64 = 8.0;
/// Random probes used to deduplicate flat modulation sets.
pub const DEDUP_PROBES: usize = 100;

// Stream ids for `derive_seed`.
const DEDUP_STREAM: u64 = 1;
const LEARNER_STREAM: u64 = 2;
const ACTOR_STREAM: u64 = 1 << 32;

/// Seed of actor `index`'s private random stream.
pub fn actor_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, ACTOR_STREAM + index as u64)
}

/// Roll out one episode of the `z`-modulated policy built from `values`.
///
/// `z` stays fixed for the whole episode. Entering an absorbing state ends
/// the episode with cause [`Termination::Goal`]; after `step_cap` steps it
/// is cut with [`Termination::StepCap`].
pub fn run_episode<V, R>(
    mdp: &TabularMdp,
    values: &V,
    z: &Modulation,
    step_cap: usize,
    rng: &mut R,
) -> Result<Trajectory>
where
    V: ActionValues + ?Sized,
    R: RngCore + ?Sized,
{
    if values.num_states() != mdp.num_states() || values.num_actions() != mdp.num_actions() {
        return Err(Error::DimensionMismatch {
            expected: mdp.num_states() * mdp.num_actions(),
            got: values.num_states() * values.num_actions(),
        });
    }
    if step_cap == 0 {
        return Err(Error::InvalidArgument("step cap must be >= 1".into()));
    }
    let mut traj = Trajectory::default();
    let mut state = mdp.start();
    let mut prev = None;
    while traj.steps.len() < step_cap {
        let dist = action_distribution(values.rows(state), z, prev)?;
        let action = dist.sample(rng);
        let mut outcome = mdp.step(state, action, rng)?;
        if !outcome.terminated && mdp.is_absorbing(outcome.next_state) {
            outcome.terminated = true;
            outcome.cause = Some(Termination::Goal);
        }
        traj.steps.push(TrajectoryStep {
            state,
            action,
            outcome,
        });
        if outcome.terminated {
            traj.termination = outcome.cause;
            return Ok(traj);
        }
        state = outcome.next_state;
        prev = Some(action);
    }
    traj.termination = Some(Termination::StepCap);
    Ok(traj)
}

/// What a coordinator hands an actor for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Index of the chosen arm: one entry for flat bandits, one per axis
    /// for factored ones.
    pub arms: Vec<usize>,
    pub modulation: Modulation,
}

/// Summary of one finished episode, as reported to the bandit.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeReport {
    /// 1-based count of completed episodes.
    pub episode: u64,
    pub arms: Vec<usize>,
    pub modulation: Modulation,
    /// Undiscounted return.
    pub fitness: f64,
    pub length: usize,
    pub termination: Termination,
}

impl EpisodeReport {
    fn new(episode: u64, assignment: &Assignment, traj: &Trajectory) -> Result<Self> {
        if traj.is_empty() {
            return Err(Error::Empty("trajectory"));
        }
        Ok(Self {
            episode,
            arms: assignment.arms.clone(),
            modulation: assignment.modulation.clone(),
            fitness: traj.total_reward(),
            length: traj.len(),
            termination: traj.termination.unwrap_or(Termination::StepCap),
        })
    }
}

/// One logged episode.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub episode: u64,
    /// Environment steps taken so far.
    pub env_steps: u64,
    pub fitness: f64,
    /// Latest evaluation of the reported metric.
    pub eval_return: f64,
    /// Bandit window length; for factored bandits the mean over axes.
    pub horizon: Option<f64>,
    /// Arm probabilities after the update; factored axes are concatenated.
    pub arm_probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub variant: String,
    pub seed: u64,
    pub arm_labels: Vec<String>,
    pub rows: Vec<LogRow>,
}

impl RunLog {
    pub fn new(variant: impl Into<String>, seed: u64, arm_labels: Vec<String>) -> Self {
        Self {
            variant: variant.into(),
            seed,
            arm_labels,
            rows: Vec::new(),
        }
    }

    pub fn eval_curve(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.eval_return).collect()
    }

    pub fn final_eval(&self) -> Option<f64> {
        self.rows.last().map(|r| r.eval_return)
    }
}

/// The arm-selection strategy behind an experiment.
pub enum Selector {
    /// Kept concrete so its state can be snapshotted.
    Adaptive(AdaptiveBandit),
    Flat(Box<dyn ArmSelector>),
    Factored(FactoredBandit),
}

impl fmt::Debug for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::Adaptive(b) => f.debug_tuple("Adaptive").field(b).finish(),
            Selector::Flat(b) => f.debug_tuple("Flat").field(b).finish(),
            Selector::Factored(b) => f.debug_tuple("Factored").field(b).finish(),
        }
    }
}

impl Selector {
    pub fn for_kind(kind: &BanditKind, num_arms: usize) -> Result<Self> {
        match kind {
            BanditKind::Adaptive if num_arms > 0 => Ok(Selector::Adaptive(AdaptiveBandit::new(num_arms))),
            _ => Ok(Selector::Flat(kind.build_flat(num_arms)?)),
        }
    }

    /// Flat arm count, or the sum over axes for factored bandits.
    pub fn num_arms(&self) -> usize {
        match self {
            Selector::Adaptive(b) => b.num_arms(),
            Selector::Flat(b) => b.num_arms(),
            Selector::Factored(b) => b.modeled_arms(),
        }
    }

    pub fn sample(&mut self, rng: &mut dyn RngCore) -> Vec<usize> {
        match self {
            Selector::Adaptive(b) => vec![b.sample_with_uniform(rng.random())],
            Selector::Flat(b) => vec![b.sample(rng)],
            Selector::Factored(b) => b.sample(rng),
        }
    }

    pub fn update(&mut self, arms: &[usize], fitness: f64) -> Result<()> {
        match self {
            Selector::Adaptive(b) => match arms {
                [arm] => b.update(*arm, fitness),
                _ => Err(Error::DimensionMismatch {
                    expected: 1,
                    got: arms.len(),
                }),
            },
            Selector::Flat(b) => match arms {
                [arm] => b.update(*arm, fitness),
                _ => Err(Error::DimensionMismatch {
                    expected: 1,
                    got: arms.len(),
                }),
            },
            Selector::Factored(b) => b.update(arms, fitness),
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        match self {
            Selector::Adaptive(b) => b.probabilities(),
            Selector::Flat(b) => b.probabilities(),
            Selector::Factored(b) => b.probabilities().concat(),
        }
    }

    pub fn horizon(&self) -> Option<f64> {
        match self {
            Selector::Adaptive(b) => Some(b.horizon()),
            Selector::Flat(b) => b.horizon(),
            Selector::Factored(b) => {
                let h = b.horizons();
                Some(h.iter().sum::<f64>() / h.len() as f64)
            }
        }
    }
}

/// The arms a bandit chooses between.
#[derive(Debug, Clone, PartialEq)]
pub enum ArmSet {
    /// Deduplicated flat enumeration.
    Flat(Vec<FlatArm>),
    /// One sub-bandit per axis of the space.
    Factored(ModulationSpace),
}

impl ArmSet {
    /// Flat arms for every kind except the factored bandit.
    pub fn for_kind<R: Rng + ?Sized>(kind: &BanditKind, space: &ModulationSpace, rng: &mut R) -> Result<Self> {
        if kind.is_factored() {
            Ok(ArmSet::Factored(space.clone()))
        } else {
            Ok(ArmSet::Flat(enumerate_flat(space, DEDUP_PROBES, rng)?))
        }
    }

    pub fn selector(&self, kind: &BanditKind) -> Result<Selector> {
        match self {
            ArmSet::Flat(_) if kind.is_factored() => Err(Error::InvalidArgument(
                "factored bandit needs an axis arm set".into(),
            )),
            ArmSet::Flat(arms) => Selector::for_kind(kind, arms.len()),
            ArmSet::Factored(space) if kind.is_factored() => {
                Ok(Selector::Factored(FactoredBandit::for_space(space)?))
            }
            ArmSet::Factored(_) => Err(Error::InvalidArgument(format!(
                "bandit `{kind}` needs a flat arm set"
            ))),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            ArmSet::Flat(arms) => arms.iter().map(|a| format!("{}", a.modulation)).collect(),
            ArmSet::Factored(space) => space
                .axes()
                .iter()
                .flat_map(|axis| (0..axis.len()).map(move |i| axis.label(i)))
                .collect(),
        }
    }

    pub fn modulation(&self, arms: &[usize]) -> Result<Modulation> {
        match self {
            ArmSet::Flat(list) => match arms {
                [i] => list
                    .get(*i)
                    .map(|a| a.modulation.clone())
                    .ok_or(Error::OutOfRange {
                        what: "flat arms",
                        index: *i,
                        len: list.len(),
                    }),
                _ => Err(Error::DimensionMismatch {
                    expected: 1,
                    got: arms.len(),
                }),
            },
            ArmSet::Factored(space) => space.compose(arms),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub bandit: BanditKind,
    pub episodes: u64,
    /// Replay samples per inserted transition.
    pub ratio: f64,
    /// Episodes between greedy evaluations.
    pub eval_period: u64,
    pub seed: u64,
    pub learner: LearnerConfig,
    /// When false no learner steps run and the values stay at zero.
    pub learn: bool,
    pub step_cap: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            bandit: BanditKind::Adaptive,
            episodes: 500,
            ratio: DEFAULT_RATIO,
            eval_period: 10,
            seed: 0,
            learner: LearnerConfig::default(),
            learn: true,
            step_cap: EPISODE_STEP_CAP,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 || self.eval_period == 0 || self.step_cap == 0 {
            return Err(Error::InvalidArgument(
                "episodes, evaluation period and step cap must be positive".into(),
            ));
        }
        if !(self.ratio > 0.0 && self.ratio.is_finite()) {
            return Err(Error::InvalidArgument("samples-to-insertion ratio must be positive".into()));
        }
        Ok(())
    }
}

/// Learner batches owed after `insertions` transitions at `ratio` samples
/// per insertion.
pub fn batches_due(ratio: f64, insertions: u64, batch_size: usize) -> u64 {
    libm::floor(ratio * insertions as f64 / batch_size as f64) as u64
}

/// Coordinator state: bandit, learner, evaluation and log.
#[derive(Debug)]
pub struct Experiment<'a> {
    mdp: &'a TabularMdp,
    config: ExperimentConfig,
    arms: ArmSet,
    selector: Selector,
    learner: QuantileLearner,
    learner_rng: SeededRng,
    episodes_done: u64,
    env_steps: u64,
    eval_return: f64,
    log: RunLog,
}

impl<'a> Experiment<'a> {
    pub fn new(mdp: &'a TabularMdp, space: &ModulationSpace, config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        if space.num_actions() != mdp.num_actions() {
            return Err(Error::DimensionMismatch {
                expected: mdp.num_actions(),
                got: space.num_actions(),
            });
        }
        let arms = ArmSet::for_kind(&config.bandit, space, &mut seeded_rng(derive_seed(config.seed, DEDUP_STREAM)))?;
        let selector = arms.selector(&config.bandit)?;
        let learner = QuantileLearner::new(mdp.num_states(), mdp.num_actions(), config.learner)?;
        let log = RunLog::new(format!("{}", config.bandit), config.seed, arms.labels());
        let mut exp = Self {
            mdp,
            learner_rng: seeded_rng(derive_seed(config.seed, LEARNER_STREAM)),
            config,
            arms,
            selector,
            learner,
            episodes_done: 0,
            env_steps: 0,
            eval_return: 0.0,
            log,
        };
        exp.eval_return = exp.evaluate()?;
        Ok(exp)
    }

    pub fn mdp(&self) -> &'a TabularMdp {
        self.mdp
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn arms(&self) -> &ArmSet {
        &self.arms
    }

    pub fn selector(&self) -> &Selector {
        &self.selector
    }

    /// Swap in a restored bandit; it must cover the same arms.
    pub fn set_selector(&mut self, selector: Selector) -> Result<()> {
        let fresh = self.arms.selector(&self.config.bandit)?;
        let same_shape = match (&fresh, &selector) {
            (Selector::Factored(a), Selector::Factored(b)) => {
                let counts = |f: &FactoredBandit| f.sub_bandits().iter().map(AdaptiveBandit::num_arms).collect::<Vec<_>>();
                counts(a) == counts(b)
            }
            (Selector::Adaptive(_), Selector::Adaptive(_)) | (Selector::Flat(_), Selector::Flat(_)) => {
                fresh.num_arms() == selector.num_arms()
            }
            _ => false,
        };
        if !same_shape {
            return Err(Error::InvalidArgument("restored bandit does not match the arm set".into()));
        }
        self.selector = selector;
        Ok(())
    }

    pub fn learner(&self) -> &QuantileLearner {
        &self.learner
    }

    pub fn learner_mut(&mut self) -> &mut QuantileLearner {
        &mut self.learner
    }

    /// Values actors should act on for their next episode.
    pub fn values(&self) -> &QuantileQTable {
        self.learner.table()
    }

    pub fn episodes_done(&self) -> u64 {
        self.episodes_done
    }

    pub fn is_finished(&self) -> bool {
        self.episodes_done >= self.config.episodes
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn into_log(self) -> RunLog {
        self.log
    }

    /// Sample a modulation. The bandit's draw is seeded from `nonce`, which
    /// actors take from their own stream; that keeps each actor's episodes
    /// independent of scheduling when the bandit has no state.
    pub fn assign(&mut self, nonce: u64) -> Result<Assignment> {
        let arms = self.selector.sample(&mut seeded_rng(nonce));
        Ok(Assignment {
            modulation: self.arms.modulation(&arms)?,
            arms,
        })
    }

    /// Exact expected return of the greedy policy.
    fn evaluate(&self) -> Result<f64> {
        expected_return(self.mdp, &greedy_policy(self.learner.table())?)
    }

    /// Consume a finished episode: bandit update first, then replay
    /// insertion, learner steps owed by the ratio, and logging.
    pub fn complete(&mut self, assignment: &Assignment, trajectory: &Trajectory) -> Result<EpisodeReport> {
        let report = EpisodeReport::new(self.episodes_done + 1, assignment, trajectory)?;
        self.selector.update(&assignment.arms, report.fitness)?;
        self.episodes_done += 1;
        self.env_steps += trajectory.len() as u64;
        if self.config.learn {
            for t in n_step_transitions(trajectory, self.config.learner.n_step) {
                self.learner.insert(t)?;
                let due = batches_due(self.config.ratio, self.learner.insertions(), self.config.learner.batch_size);
                while self.learner.steps() < due {
                    self.learner.learner_step(&mut self.learner_rng)?;
                }
            }
        }
        if self.episodes_done.is_multiple_of(self.config.eval_period) || self.is_finished() {
            self.eval_return = self.evaluate()?;
        }
        self.log.rows.push(LogRow {
            episode: self.episodes_done,
            env_steps: self.env_steps,
            fitness: report.fitness,
            eval_return: self.eval_return,
            horizon: self.selector.horizon(),
            arm_probs: self.selector.probabilities(),
        });
        Ok(report)
    }
}

/// Interleaved single-actor run: assign, roll out, complete.
pub fn run_experiment(mdp: &TabularMdp, space: &ModulationSpace, config: ExperimentConfig) -> Result<RunLog> {
    run_experiment_with_reports(mdp, space, config).map(|(log, _)| log)
}

/// [`run_experiment`], also returning every episode report.
pub fn run_experiment_with_reports(
    mdp: &TabularMdp,
    space: &ModulationSpace,
    config: ExperimentConfig,
) -> Result<(RunLog, Vec<EpisodeReport>)> {
    let mut actor = seeded_rng(actor_seed(config.seed, 0));
    let mut exp = Experiment::new(mdp, space, config)?;
    let mut reports = Vec::new();
    while !exp.is_finished() {
        let assignment = exp.assign(actor.random())?;
        let traj = run_episode(mdp, exp.values(), &assignment.modulation, exp.config.step_cap, &mut actor)?;
        reports.push(exp.complete(&assignment, &traj)?);
    }
    Ok((exp.into_log(), reports))
}

/// Precomputed LavaWorld pieces shared by every preset run.
#[derive(Debug, Clone)]
pub struct LavaWorldSetup {
    pub world: LavaWorld,
    pub space: ModulationSpace,
    /// The deduplicated flat arms.
    pub arms: Vec<FlatArm>,
    pub optimal: QTable,
    /// Success probability of each flat arm under the optimal values.
    pub flat_success: Vec<f64>,
    /// Success probability of every raw axis combination, in
    /// `product_indices` order.
    pub product_success: Vec<f64>,
}

impl LavaWorldSetup {
    pub fn new() -> Result<Self> {
        Self::from_world(build_lavaworld(), ModulationSpace::lavaworld(), 0)
    }

    pub fn from_world(world: LavaWorld, space: ModulationSpace, dedup_seed: u64) -> Result<Self> {
        let arms = enumerate_flat(&space, DEDUP_PROBES, &mut seeded_rng(dedup_seed))?;
        let optimal = optimal_q(&world.mdp);
        let flat_success = arms
            .iter()
            .map(|a| modulated_success_probability(&world.mdp, &optimal, &a.modulation))
            .collect::<Result<_>>()?;
        let product_success = space
            .product_indices()
            .iter()
            .map(|idx| modulated_success_probability(&world.mdp, &optimal, &space.compose(idx)?))
            .collect::<Result<_>>()?;
        Ok(Self {
            world,
            space,
            arms,
            optimal,
            flat_success,
            product_success,
        })
    }

    fn product_offset(&self, idx: &[usize]) -> usize {
        self.space
            .arm_counts()
            .iter()
            .zip(idx)
            .fold(0, |acc, (&k, &i)| acc * k + i)
    }

    pub fn flat_labels(&self) -> Vec<String> {
        ArmSet::Flat(self.arms.clone()).labels()
    }
}

/// Bandit variants of the stationary LavaWorld preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationaryVariant {
    /// Flat adaptive bandit fed each arm's exact success probability.
    Oracle,
    /// Factored adaptive bandit fed the same oracle signal.
    FactoredOracle,
    /// Flat adaptive bandit fed a constant, uninformative fitness.
    ProxyLess,
    Uniform,
    Fixed(usize),
}

impl StationaryVariant {
    pub fn name(&self) -> String {
        match self {
            StationaryVariant::Oracle => "oracle".into(),
            StationaryVariant::FactoredOracle => "factored-oracle".into(),
            StationaryVariant::ProxyLess => "proxy-less".into(),
            StationaryVariant::Uniform => "uniform".into(),
            StationaryVariant::Fixed(i) => format!("fixed-{i:02}"),
        }
    }

    /// The adaptive, uniform and every fixed-arm variant.
    pub fn all(num_arms: usize) -> Vec<Self> {
        let mut v = vec![
            StationaryVariant::Oracle,
            StationaryVariant::FactoredOracle,
            StationaryVariant::ProxyLess,
            StationaryVariant::Uniform,
        ];
        v.extend((0..num_arms).map(StationaryVariant::Fixed));
        v
    }
}

/// Stationary LavaWorld: the values stay optimal and nothing is learned.
///
/// Each episode is rolled out under the chosen modulation, but the logged
/// `eval_return` is the exact cumulative success `1 − Π(1 − p_i)` of the
/// per-episode success probabilities `p_i`.
pub fn run_lavaworld_stationary(
    setup: &LavaWorldSetup,
    variant: StationaryVariant,
    episodes: u64,
    seed: u64,
) -> Result<RunLog> {
    let mdp = &setup.world.mdp;
    let k = setup.arms.len();
    let (mut selector, labels) = match variant {
        StationaryVariant::FactoredOracle => (
            Selector::Factored(FactoredBandit::for_space(&setup.space)?),
            ArmSet::Factored(setup.space.clone()).labels(),
        ),
        StationaryVariant::Oracle | StationaryVariant::ProxyLess => {
            (Selector::for_kind(&BanditKind::Adaptive, k)?, setup.flat_labels())
        }
        StationaryVariant::Uniform => (Selector::Flat(BanditKind::Uniform.build_flat(k)?), setup.flat_labels()),
        StationaryVariant::Fixed(i) => (Selector::Flat(BanditKind::FixedArm(i).build_flat(k)?), setup.flat_labels()),
    };
    let mut log = RunLog::new(variant.name(), seed, labels);
    let mut actor = seeded_rng(actor_seed(seed, 0));
    let mut miss = 1.0;
    let mut env_steps = 0;
    for episode in 1..=episodes {
        let arms = selector.sample(&mut actor);
        let (z, p) = match variant {
            StationaryVariant::FactoredOracle => (
                setup.space.compose(&arms)?,
                setup.product_success[setup.product_offset(&arms)],
            ),
            _ => (setup.arms[arms[0]].modulation.clone(), setup.flat_success[arms[0]]),
        };
        let fitness = match variant {
            StationaryVariant::ProxyLess => 0.0,
            _ => p,
        };
        selector.update(&arms, fitness)?;
        let traj = run_episode(mdp, &setup.optimal, &z, EPISODE_STEP_CAP, &mut actor)?;
        env_steps += traj.len() as u64;
        miss *= 1.0 - p;
        log.rows.push(LogRow {
            episode,
            env_steps,
            fitness,
            eval_return: 1.0 - miss,
            horizon: selector.horizon(),
            arm_probs: selector.probabilities(),
        });
    }
    Ok(log)
}

/// Bandit variants of the non-stationary LavaWorld preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonStationaryVariant {
    /// Adaptive bandit fed 1 when an episode discovered a new lava pair.
    BinaryProxy,
    /// Adaptive bandit fed each arm's exact expected learning progress.
    Oracle,
    Uniform,
    Fixed(usize),
}

impl NonStationaryVariant {
    pub fn name(&self) -> String {
        match self {
            NonStationaryVariant::BinaryProxy => "binary-proxy".into(),
            NonStationaryVariant::Oracle => "oracle".into(),
            NonStationaryVariant::Uniform => "uniform".into(),
            NonStationaryVariant::Fixed(i) => format!("fixed-{i:02}"),
        }
    }

    pub fn all(num_arms: usize) -> Vec<Self> {
        let mut v = vec![
            NonStationaryVariant::BinaryProxy,
            NonStationaryVariant::Oracle,
            NonStationaryVariant::Uniform,
        ];
        v.extend((0..num_arms).map(NonStationaryVariant::Fixed));
        v
    }
}

/// Non-stationary LavaWorld: values start at zero and every lava hit is
/// suppressed right after its episode. The logged `eval_return` is the
/// exact success probability of the greedy policy (uniform over ties)
/// after the episode's update.
pub fn run_lavaworld_nonstationary(
    setup: &LavaWorldSetup,
    variant: NonStationaryVariant,
    episodes: u64,
    seed: u64,
) -> Result<RunLog> {
    let mdp = &setup.world.mdp;
    let k = setup.arms.len();
    let kind = match variant {
        NonStationaryVariant::BinaryProxy | NonStationaryVariant::Oracle => BanditKind::Adaptive,
        NonStationaryVariant::Uniform => BanditKind::Uniform,
        NonStationaryVariant::Fixed(i) => BanditKind::FixedArm(i),
    };
    let mut selector = kind.build_flat(k)?;
    let mut log = RunLog::new(variant.name(), seed, setup.flat_labels());
    let mut actor = seeded_rng(actor_seed(seed, 0));
    let mut learner = LavaLearner::for_mdp(mdp);
    let mut oracle = match variant {
        NonStationaryVariant::Oracle => Some(LpOracle::new(mdp, &learner)?),
        _ => None,
    };
    let mut metric = greedy_success_probability(mdp, &learner)?;
    let mut env_steps = 0;
    for episode in 1..=episodes {
        let arm = selector.sample(&mut actor);
        let z = &setup.arms[arm].modulation;
        let oracle_fitness = match &oracle {
            Some(o) => Some(o.expected_lp(mdp, &learner, z)?),
            None => None,
        };
        let traj = run_episode(mdp, &learner, z, EPISODE_STEP_CAP, &mut actor)?;
        env_steps += traj.len() as u64;
        let found = learner.update(&traj);
        let fitness = oracle_fitness.unwrap_or_else(|| binary_lp_proxy(found));
        selector.update(arm, fitness)?;
        if found {
            metric = match &mut oracle {
                Some(o) => {
                    o.refresh(mdp, &learner)?;
                    o.metric()
                }
                None => greedy_success_probability(mdp, &learner)?,
            };
        }
        log.rows.push(LogRow {
            episode,
            env_steps,
            fitness,
            eval_return: metric,
            horizon: selector.horizon(),
            arm_probs: selector.probabilities(),
        });
    }
    Ok(log)
}

/// Two-or-more-arm Bernoulli payoffs whose best arm rotates every
/// `period` pulls.
#[derive(Debug, Clone, PartialEq)]
pub struct FlippingBernoulli {
    /// Success probabilities in the first phase; phase `k` shifts them by
    /// `k` arms.
    pub means: Vec<f64>,
    pub period: u64,
}

impl FlippingBernoulli {
    pub fn new(means: Vec<f64>, period: u64) -> Result<Self> {
        if means.len() < 2 || period == 0 {
            return Err(Error::InvalidArgument("need >= 2 arms and a positive period".into()));
        }
        if means.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::InvalidArgument("arm means must lie in [0, 1]".into()));
        }
        Ok(Self { means, period })
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    /// Mean payoff of `arm` at pull `t` (0-based).
    pub fn mean(&self, arm: usize, t: u64) -> f64 {
        let k = self.means.len();
        let shift = (t / self.period) as usize % k;
        self.means[(arm + k - shift) % k]
    }

    pub fn pull<R: RngCore + ?Sized>(&self, arm: usize, t: u64, rng: &mut R) -> f64 {
        if rng.random::<f64>() < self.mean(arm, t) {
            1.0
        } else {
            0.0
        }
    }
}

/// Average reward of a flat bandit over `steps` pulls of `problem`.
pub fn run_bandit_bench(kind: &BanditKind, problem: &FlippingBernoulli, steps: u64, seed: u64) -> Result<f64> {
    if steps == 0 {
        return Err(Error::InvalidArgument("bench needs at least one step".into()));
    }
    let mut bandit = kind.build_flat(problem.num_arms())?;
    let mut rng = seeded_rng(seed);
    let mut total = 0.0;
    for t in 0..steps {
        let arm = bandit.sample(&mut rng);
        let r = problem.pull(arm, t, &mut rng);
        bandit.update(arm, r)?;
        total += r;
    }
    Ok(total / steps as f64)
}
