//! Plain-text bandit snapshots.
//!
//! One `key value` pair per line, then one `time arm fitness` line per
//! retained record, oldest first. Lines starting with `#` are ignored.
//!
//! ```text
//! kind adaptive
//! arms 2
//! shrink_rate 0.02
//! hard_cap 100000
//! initial_horizon none
//! horizon 4
//! max_horizon 4
//! time 2
//! records 2
//! 1 0 0.5
//! 2 1 1
//! ```
//!
//! A factored snapshot is `kind factored`, `dimensions N`, then N adaptive
//! blocks in axis order.

use std::fmt::Write;
use std::path::Path;

use modbandit_core::bandit::{AdaptiveBandit, AdaptiveConfig, FactoredBandit, FitnessRecord};
use modbandit_core::harness::Selector;

use crate::error::{read_file, write_file, Error, Result};

fn write_adaptive(out: &mut String, b: &AdaptiveBandit) {
    let c = b.config();
    let init = c.initial_horizon.map_or_else(|| "none".to_string(), |h| h.to_string());
    let _ = writeln!(out, "kind adaptive");
    let _ = writeln!(out, "arms {}", b.num_arms());
    let _ = writeln!(out, "shrink_rate {}", c.shrink_rate);
    let _ = writeln!(out, "hard_cap {}", c.hard_cap);
    let _ = writeln!(out, "initial_horizon {init}");
    let _ = writeln!(out, "horizon {}", b.horizon());
    let _ = writeln!(out, "max_horizon {}", b.max_horizon());
    let _ = writeln!(out, "time {}", b.time());
    let _ = writeln!(out, "records {}", b.history().len());
    for r in b.history() {
        let _ = writeln!(out, "{} {} {}", r.time, r.arm, r.fitness);
    }
}

pub fn adaptive_to_string(b: &AdaptiveBandit) -> String {
    let mut out = String::new();
    write_adaptive(&mut out, b);
    out
}

pub fn factored_to_string(b: &FactoredBandit) -> String {
    let mut out = format!("kind factored\ndimensions {}\n", b.num_dimensions());
    for sub in b.sub_bandits() {
        write_adaptive(&mut out, sub);
    }
    out
}

/// Snapshot of a harness selector. Only the adaptive kinds keep state
/// worth saving; other selectors are rejected.
pub fn selector_to_string(s: &Selector) -> Result<String> {
    match s {
        Selector::Adaptive(b) => Ok(adaptive_to_string(b)),
        Selector::Factored(b) => Ok(factored_to_string(b)),
        Selector::Flat(b) => Err(Error::Usage(format!("no snapshot format for selector {b:?}"))),
    }
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    origin: &'a str,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, origin: &'a str) -> Self {
        Self {
            iter: text.lines().enumerate(),
            origin,
            line: 0,
        }
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::parse(self.origin, format!("line {}: {msg}", self.line))
    }

    fn next_line(&mut self) -> Result<&'a str> {
        for (i, l) in self.iter.by_ref() {
            let l = l.trim();
            if !l.is_empty() && !l.starts_with('#') {
                self.line = i + 1;
                return Ok(l);
            }
        }
        Err(Error::parse(self.origin, "unexpected end of snapshot"))
    }

    fn value(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next_line()?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.trim()),
            _ => Err(self.err(format!("expected `{key} <value>`"))),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.value(key)?;
        v.parse().map_err(|_| self.err(format!("bad {key} `{v}`")))
    }

    fn finish(&mut self) -> Result<()> {
        match self.next_line() {
            Ok(_) => Err(self.err("trailing content")),
            Err(_) => Ok(()),
        }
    }
}

fn read_adaptive(lines: &mut Lines<'_>) -> Result<AdaptiveBandit> {
    if lines.value("kind")? != "adaptive" {
        return Err(lines.err("expected an adaptive block"));
    }
    let arms: usize = lines.parsed("arms")?;
    let shrink_rate: f64 = lines.parsed("shrink_rate")?;
    let hard_cap: usize = lines.parsed("hard_cap")?;
    let initial_horizon = match lines.value("initial_horizon")? {
        "none" => None,
        v => Some(v.parse::<f64>().map_err(|_| lines.err(format!("bad initial_horizon `{v}`")))?),
    };
    let horizon: f64 = lines.parsed("horizon")?;
    let max_horizon: f64 = lines.parsed("max_horizon")?;
    let time: u64 = lines.parsed("time")?;
    let count: usize = lines.parsed("records")?;
    let mut history = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let l = lines.next_line()?;
        let f: Vec<&str> = l.split_whitespace().collect();
        let rec = match f.as_slice() {
            [t, a, x] => t.parse().ok().zip(a.parse().ok()).zip(x.parse().ok()),
            _ => None,
        };
        let ((time, arm), fitness) = rec.ok_or_else(|| lines.err("expected `time arm fitness`"))?;
        history.push(FitnessRecord { time, arm, fitness });
    }
    let config = AdaptiveConfig {
        shrink_rate,
        hard_cap,
        initial_horizon,
    };
    AdaptiveBandit::from_parts(arms, config, horizon, max_horizon, time, history).map_err(|e| lines.err(e))
}

pub fn parse_adaptive(text: &str, origin: &str) -> Result<AdaptiveBandit> {
    let mut lines = Lines::new(text, origin);
    let b = read_adaptive(&mut lines)?;
    lines.finish()?;
    Ok(b)
}

pub fn parse_factored(text: &str, origin: &str) -> Result<FactoredBandit> {
    let mut lines = Lines::new(text, origin);
    if lines.value("kind")? != "factored" {
        return Err(lines.err("expected `kind factored`"));
    }
    let n: usize = lines.parsed("dimensions")?;
    let subs = (0..n).map(|_| read_adaptive(&mut lines)).collect::<Result<Vec<_>>>()?;
    lines.finish()?;
    Ok(FactoredBandit::from_sub_bandits(subs)?)
}

/// Either snapshot kind, as a harness selector.
pub fn parse_selector(text: &str, origin: &str) -> Result<Selector> {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .unwrap_or("");
    match first {
        "kind factored" => parse_factored(text, origin).map(Selector::Factored),
        _ => parse_adaptive(text, origin).map(Selector::Adaptive),
    }
}

pub fn write_selector(s: &Selector, path: &Path) -> Result<()> {
    write_file(path, &selector_to_string(s)?)
}

pub fn read_selector(path: &Path) -> Result<Selector> {
    parse_selector(&read_file(path)?, &path.display().to_string())
}
