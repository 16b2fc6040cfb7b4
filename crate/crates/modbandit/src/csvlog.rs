//! CSV formats.
//!
//! Run logs: `episode,env_steps,variant,seed,fitness,eval_return,horizon`
//! followed by one `p[<arm label>]` column per arm probability. `horizon`
//! is empty for bandits without a window. Outcomes: `game,seed,variant,score`.
//!
//! Variant and seed live on every row, so a log without rows reads back
//! with an empty variant and seed 0.
//!
//! Numbers are written in Rust's shortest round-trip form, so parsing a
//! written file reproduces every value exactly.

use std::path::{Path, PathBuf};

use modbandit_core::harness::{LogRow, RunLog};
use modbandit_core::metrics::Outcome;

use crate::error::{read_file, write_file, Error, Result};

const LOG_COLUMNS: [&str; 7] = ["episode", "env_steps", "variant", "seed", "fitness", "eval_return", "horizon"];
const OUTCOME_COLUMNS: [&str; 4] = ["game", "seed", "variant", "score"];

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
}

fn csv_err(origin: &str, e: csv::Error) -> Error {
    Error::parse(origin, e.to_string())
}

pub fn run_log_to_csv(log: &RunLog) -> String {
    let mut w = writer();
    let mut header: Vec<String> = LOG_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(log.arm_labels.iter().map(|l| format!("p[{l}]")));
    w.write_record(&header).expect("in-memory write");
    for row in &log.rows {
        let mut rec = vec![
            row.episode.to_string(),
            row.env_steps.to_string(),
            log.variant.clone(),
            log.seed.to_string(),
            row.fitness.to_string(),
            row.eval_return.to_string(),
            row.horizon.map_or_else(String::new, |h| h.to_string()),
        ];
        rec.extend(row.arm_probs.iter().map(f64::to_string));
        w.write_record(&rec).expect("in-memory write");
    }
    finish(w)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, origin: &str, line: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::parse(origin, format!("line {line}: bad {} `{raw}`", LOG_COLUMNS.get(i).unwrap_or(&"value"))))
}

pub fn parse_run_log(text: &str, origin: &str) -> Result<RunLog> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| csv_err(origin, e))?.clone();
    if header.len() < LOG_COLUMNS.len() || header.iter().zip(LOG_COLUMNS).any(|(a, b)| a != b) {
        return Err(Error::parse(origin, "not a run log: unexpected header"));
    }
    let arm_labels = header
        .iter()
        .skip(LOG_COLUMNS.len())
        .map(|h| {
            h.strip_prefix("p[")
                .and_then(|s| s.strip_suffix(']'))
                .map(str::to_string)
                .ok_or_else(|| Error::parse(origin, format!("bad arm column `{h}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut log = RunLog::new(String::new(), 0, arm_labels);
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(origin, e))?;
        let line = i + 2;
        let variant = rec.get(2).unwrap_or("").to_string();
        let seed: u64 = field(&rec, 3, origin, line)?;
        if i == 0 {
            log.variant = variant;
            log.seed = seed;
        } else if variant != log.variant || seed != log.seed {
            return Err(Error::parse(origin, format!("line {line}: mixed variants or seeds")));
        }
        let horizon = match rec.get(6).unwrap_or("") {
            "" => None,
            _ => Some(field(&rec, 6, origin, line)?),
        };
        let arm_probs = (LOG_COLUMNS.len()..rec.len())
            .map(|j| field(&rec, j, origin, line))
            .collect::<Result<Vec<f64>>>()?;
        log.rows.push(LogRow {
            episode: field(&rec, 0, origin, line)?,
            env_steps: field(&rec, 1, origin, line)?,
            fitness: field(&rec, 4, origin, line)?,
            eval_return: field(&rec, 5, origin, line)?,
            horizon,
            arm_probs,
        });
    }
    Ok(log)
}

pub fn write_run_log(log: &RunLog, path: &Path) -> Result<()> {
    write_file(path, &run_log_to_csv(log))
}

pub fn read_run_log(path: &Path) -> Result<RunLog> {
    parse_run_log(&read_file(path)?, &path.display().to_string())
}

pub fn outcomes_to_csv(outcomes: &[Outcome]) -> String {
    let mut w = writer();
    w.write_record(OUTCOME_COLUMNS).expect("in-memory write");
    for o in outcomes {
        w.write_record([o.game.clone(), o.seed.to_string(), o.variant.clone(), o.score.to_string()])
            .expect("in-memory write");
    }
    finish(w)
}

pub fn is_outcome_csv(text: &str) -> bool {
    text.lines().next().map(str::trim) == Some("game,seed,variant,score")
}

pub fn parse_outcomes(text: &str, origin: &str) -> Result<Vec<Outcome>> {
    if !is_outcome_csv(text) {
        return Err(Error::parse(origin, "not an outcome file: expected header game,seed,variant,score"));
    }
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(origin, e))?;
        let line = i + 2;
        let bad = |what: &str| Error::parse(origin, format!("line {line}: bad {what}"));
        let seed = rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("seed"))?;
        let score = rec
            .get(3)
            .and_then(|s| s.parse::<f64>().ok())
            .filter(|s| s.is_finite())
            .ok_or_else(|| bad("score"))?;
        out.push(Outcome::new(rec.get(0).unwrap_or(""), seed, rec.get(2).unwrap_or(""), score));
    }
    Ok(out)
}

pub fn write_outcomes(outcomes: &[Outcome], path: &Path) -> Result<()> {
    write_file(path, &outcomes_to_csv(outcomes))
}

fn collect_csv(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    for entry in entries {
        let path = entry
            .map_err(|e| Error::Io {
                path: dir.to_path_buf(),
                source: e,
            })?
            .path();
        if path.is_dir() {
            collect_csv(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "csv") {
            out.push(path);
        }
    }
    Ok(())
}

/// Every outcome in a file, or in every outcome CSV under a directory
/// (other CSVs are skipped). Files are read in sorted path order.
pub fn read_outcomes(path: &Path) -> Result<Vec<Outcome>> {
    if !path.is_dir() {
        return parse_outcomes(&read_file(path)?, &path.display().to_string());
    }
    let mut files = Vec::new();
    collect_csv(path, &mut files)?;
    files.sort();
    let mut out = Vec::new();
    for f in files {
        let text = read_file(&f)?;
        if is_outcome_csv(&text) {
            out.extend(parse_outcomes(&text, &f.display().to_string())?);
        }
    }
    if out.is_empty() {
        return Err(Error::parse(path.display().to_string(), "no outcome CSVs found"));
    }
    Ok(out)
}

/// A plain table with a header row.
pub fn table_to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = writer();
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    finish(w)
}
