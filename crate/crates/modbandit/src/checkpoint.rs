//! Plain-text learner checkpoints.
//!
//! ```text
//! states 3
//! actions 4
//! quantiles 2
//! learning_rate 0.05
//! learner_steps 120
//! insertions 960
//! table
//! 0 0 0.25 0.5
//! 0 1 0 0
//! ...
//! priorities 2
//! 1
//! 0.300001
//! ```
//!
//! The table block holds one `state action q_1 .. q_n` line per pair in
//! row-major order. Replay transitions are not saved, only their
//! priorities, so a resumed run starts from an empty buffer.

use std::fmt::Write;
use std::path::Path;

use modbandit_core::env::ActionValues;
use modbandit_core::learner::{QuantileLearner, QuantileQTable};

use crate::error::{read_file, write_file, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub table: QuantileQTable,
    pub learner_steps: u64,
    pub insertions: u64,
    pub priorities: Vec<f64>,
}

impl Checkpoint {
    pub fn of(learner: &QuantileLearner) -> Self {
        Self {
            table: learner.table().clone(),
            learner_steps: learner.steps(),
            insertions: learner.insertions(),
            priorities: learner.replay().priorities().to_vec(),
        }
    }

    /// Load the table and counters into `learner`.
    pub fn restore_into(&self, learner: &mut QuantileLearner) -> Result<()> {
        Ok(learner.restore(self.table.clone(), self.learner_steps, self.insertions)?)
    }

    pub fn to_text(&self) -> String {
        let t = &self.table;
        let mut out = String::new();
        let _ = writeln!(out, "states {}", t.num_states());
        let _ = writeln!(out, "actions {}", t.num_actions());
        let _ = writeln!(out, "quantiles {}", t.num_quantiles());
        let _ = writeln!(out, "learning_rate {}", t.learning_rate());
        let _ = writeln!(out, "learner_steps {}", self.learner_steps);
        let _ = writeln!(out, "insertions {}", self.insertions);
        out.push_str("table\n");
        for s in 0..t.num_states() {
            for a in 0..t.num_actions() {
                let _ = write!(out, "{s} {a}");
                for q in t.quantiles(s, a) {
                    let _ = write!(out, " {q}");
                }
                out.push('\n');
            }
        }
        let _ = writeln!(out, "priorities {}", self.priorities.len());
        for p in &self.priorities {
            let _ = writeln!(out, "{p}");
        }
        out
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut last = 0;
        let mut next = |what: &str| {
            lines
                .next()
                .map(|(i, l)| {
                    last = i;
                    (i, l)
                })
                .ok_or_else(|| Error::parse(origin, format!("missing {what}")))
        };
        fn kv<T: std::str::FromStr>(origin: &str, (i, l): (usize, &str), key: &str) -> Result<T> {
            l.strip_prefix(key)
                .and_then(|v| v.strip_prefix(' '))
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::parse(origin, format!("line {i}: expected `{key} <value>`")))
        }
        let states: usize = kv(origin, next("states")?, "states")?;
        let actions: usize = kv(origin, next("actions")?, "actions")?;
        let quantiles: usize = kv(origin, next("quantiles")?, "quantiles")?;
        let learning_rate: f64 = kv(origin, next("learning_rate")?, "learning_rate")?;
        let learner_steps: u64 = kv(origin, next("learner_steps")?, "learner_steps")?;
        let insertions: u64 = kv(origin, next("insertions")?, "insertions")?;
        let (i, l) = next("table")?;
        if l != "table" {
            return Err(Error::parse(origin, format!("line {i}: expected `table`")));
        }
        let mut values = Vec::with_capacity(states.saturating_mul(actions).saturating_mul(quantiles).min(1 << 24));
        for s in 0..states {
            for a in 0..actions {
                let (i, l) = next("table row")?;
                let bad = || Error::parse(origin, format!("line {i}: expected `{s} {a}` and {quantiles} quantiles"));
                let mut f = l.split_whitespace();
                if f.next() != Some(&s.to_string()) || f.next() != Some(&a.to_string()) {
                    return Err(bad());
                }
                let row = f.map(str::parse::<f64>).collect::<std::result::Result<Vec<_>, _>>().map_err(|_| bad())?;
                if row.len() != quantiles {
                    return Err(bad());
                }
                values.extend(row);
            }
        }
        let count: usize = kv(origin, next("priorities")?, "priorities")?;
        let mut priorities = Vec::with_capacity(count.min(1 << 24));
        for _ in 0..count {
            let (i, l) = next("priority")?;
            let p = l
                .parse::<f64>()
                .ok()
                .filter(|p| *p > 0.0 && p.is_finite())
                .ok_or_else(|| Error::parse(origin, format!("line {i}: bad priority `{l}`")))?;
            priorities.push(p);
        }
        if let Ok((i, _)) = next("") {
            return Err(Error::parse(origin, format!("line {i}: trailing content")));
        }
        let table = QuantileQTable::from_values(states, actions, quantiles, learning_rate, values)
            .map_err(|e| Error::parse(origin, e.to_string()))?;
        Ok(Self {
            table,
            learner_steps,
            insertions,
            priorities,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_text())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?, &path.display().to_string())
    }
}
