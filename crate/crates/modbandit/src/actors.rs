//! Threaded actors around one [`Experiment`].
//!
//! The calling thread owns the experiment: bandit, learner and log. Actor
//! threads only roll out episodes. Each actor asks for a modulation with a
//! nonce drawn from its own stream, receives it with a read-only snapshot of
//! the value table, runs one episode and sends the trajectory back.
//!
//! Actor `i` of `A` runs `ceil((E - i) / A)` of the `E` remaining episodes,
//! so quotas do not depend on scheduling.

use std::collections::VecDeque;
use std::sync::mpsc;
use std::sync::Arc;

use modbandit_core::env::Trajectory;
use modbandit_core::harness::{actor_seed, run_episode, Assignment, EpisodeReport, Experiment};
use modbandit_core::learner::QuantileQTable;
use modbandit_core::seeded_rng;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// Serve requests and results as they arrive.
    Free,
    /// Rounds: every actor with quota left is assigned in index order, then
    /// their results are consumed in index order. Output depends only on
    /// the seeds.
    Lockstep,
}

struct Job {
    assignment: Assignment,
    values: Arc<QuantileQTable>,
}

enum Message {
    Request { actor: usize, nonce: u64 },
    Done { actor: usize, assignment: Assignment, trajectory: Trajectory },
    Failed { actor: usize, error: modbandit_core::Error },
}

impl Message {
    fn actor(&self) -> usize {
        match self {
            Message::Request { actor, .. } | Message::Done { actor, .. } | Message::Failed { actor, .. } => *actor,
        }
    }
}

/// Episodes each of `actors` actors runs out of `episodes`.
pub fn quotas(episodes: u64, actors: usize) -> Vec<u64> {
    let a = actors as u64;
    (0..a).map(|i| (episodes.saturating_sub(i)).div_ceil(a)).collect()
}

fn actor_loop(
    id: usize,
    quota: u64,
    seed: u64,
    step_cap: usize,
    mdp: &modbandit_core::env::TabularMdp,
    to_coord: mpsc::Sender<Message>,
    jobs: mpsc::Receiver<Job>,
) {
    let mut rng = seeded_rng(seed);
    for _ in 0..quota {
        let nonce = rng.random();
        if to_coord.send(Message::Request { actor: id, nonce }).is_err() {
            return;
        }
        // A closed channel means the coordinator gave up.
        let Ok(job) = jobs.recv() else { return };
        let msg = match run_episode(mdp, &*job.values, &job.assignment.modulation, step_cap, &mut rng) {
            Ok(trajectory) => Message::Done {
                actor: id,
                assignment: job.assignment,
                trajectory,
            },
            Err(error) => Message::Failed { actor: id, error },
        };
        if to_coord.send(msg).is_err() {
            return;
        }
    }
}

/// Coordinator state: per-actor reply channels and a cached table snapshot.
struct Coordinator<'e, 'm> {
    exp: &'e mut Experiment<'m>,
    replies: Vec<mpsc::Sender<Job>>,
    snapshot: Option<(u64, Arc<QuantileQTable>)>,
    reports: Vec<EpisodeReport>,
    inbox: mpsc::Receiver<Message>,
    held: Vec<VecDeque<Message>>,
}

impl Coordinator<'_, '_> {
    /// The published table, recopied only after learner steps.
    fn values(&mut self) -> Arc<QuantileQTable> {
        let steps = self.exp.learner().steps();
        match &self.snapshot {
            Some((s, v)) if *s == steps => Arc::clone(v),
            _ => {
                let v = Arc::new(self.exp.values().clone());
                self.snapshot = Some((steps, Arc::clone(&v)));
                v
            }
        }
    }

    fn handle(&mut self, msg: Message) -> Result<()> {
        match msg {
            Message::Request { actor, nonce } => {
                let assignment = self.exp.assign(nonce)?;
                let values = self.values();
                // An actor that already exited cannot fail the run here;
                // its missing result surfaces through the inbox instead.
                let _ = self.replies[actor].send(Job { assignment, values });
            }
            Message::Done {
                assignment, trajectory, ..
            } => self.reports.push(self.exp.complete(&assignment, &trajectory)?),
            Message::Failed { error, .. } => return Err(error.into()),
        }
        Ok(())
    }

    fn receive(&mut self) -> Result<Message> {
        self.inbox
            .recv()
            .map_err(|_| Error::Usage("actor threads stopped before finishing their quota".into()))
    }

    /// Next message from `actor`, holding back everyone else's.
    fn receive_from(&mut self, actor: usize) -> Result<Message> {
        if let Some(m) = self.held[actor].pop_front() {
            return Ok(m);
        }
        loop {
            let m = self.receive()?;
            if m.actor() == actor {
                return Ok(m);
            }
            self.held[m.actor()].push_back(m);
        }
    }
}

/// Run all remaining episodes of `exp` on `actors` threads.
pub fn run_actors(exp: &mut Experiment<'_>, actors: usize, schedule: Schedule) -> Result<Vec<EpisodeReport>> {
    if actors == 0 {
        return Err(Error::Usage("--actors must be at least 1".into()));
    }
    let remaining = exp.config().episodes - exp.episodes_done();
    let quota = quotas(remaining, actors);
    let seed = exp.config().seed;
    let step_cap = exp.config().step_cap;
    let mdp = exp.mdp();
    let (to_coord, inbox) = mpsc::channel();
    let mut replies = Vec::with_capacity(actors);
    let mut receivers = Vec::with_capacity(actors);
    for _ in 0..actors {
        let (tx, rx) = mpsc::channel();
        replies.push(tx);
        receivers.push(rx);
    }

    std::thread::scope(|scope| {
        for (id, jobs) in receivers.into_iter().enumerate() {
            let to_coord = to_coord.clone();
            let q = quota[id];
            scope.spawn(move || actor_loop(id, q, actor_seed(seed, id), step_cap, mdp, to_coord, jobs));
        }
        drop(to_coord);
        let mut c = Coordinator {
            exp,
            replies,
            snapshot: None,
            reports: Vec::new(),
            inbox,
            held: (0..actors).map(|_| VecDeque::new()).collect(),
        };
        let result = match schedule {
            Schedule::Free => (|| {
                // Every episode is one request and one result.
                for _ in 0..2 * remaining {
                    let m = c.receive()?;
                    c.handle(m)?;
                }
                Ok(())
            })(),
            Schedule::Lockstep => (|| {
                let mut left = quota.clone();
                while left.iter().any(|&q| q > 0) {
                    let round: Vec<usize> = (0..actors).filter(|&i| left[i] > 0).collect();
                    for &i in &round {
                        let m = c.receive_from(i)?;
                        c.handle(m)?;
                    }
                    for &i in &round {
                        let m = c.receive_from(i)?;
                        c.handle(m)?;
                        left[i] -= 1;
                    }
                }
                Ok(())
            })(),
        };
        // Dropping the reply channels releases any actor still waiting.
        let Coordinator { reports, replies, .. } = c;
        drop(replies);
        result.map(|()| reports)
    })
}
