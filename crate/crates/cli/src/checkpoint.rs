//! Run ledger and per-starter solution files.
//!
//! A solution file holds `starter <index>`, then one completed spread per
//! line (sorted line ids), then `complete` once the search for that starter
//! has finished. A line without its newline is a write cut short and is
//! dropped on reading.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use pgspread::pg3::LineId;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("checkpoint was written for {found}, this run is for {expected}")]
    Mismatch { expected: String, found: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io { path: path.to_path_buf(), source }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pending,
    Running,
    Done,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarterEntry {
    pub index: usize,
    pub status: Status,
    pub solutions: u64,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    pub q: usize,
    pub starters_hash: String,
    pub starters: Vec<StarterEntry>,
    pub done: usize,
    pub total_solutions: u64,
}

impl Ledger {
    pub fn new(q: usize, starters_hash: String, count: usize) -> Ledger {
        Ledger {
            q,
            starters_hash,
            starters: (0..count)
                .map(|index| StarterEntry { index, status: Status::Pending, solutions: 0, wall_ms: 0 })
                .collect(),
            done: 0,
            total_solutions: 0,
        }
    }

    pub fn path(dir: &Path) -> PathBuf {
        dir.join("ledger.json")
    }

    pub fn load(dir: &Path) -> Result<Option<Ledger>, CheckpointError> {
        let path = Ledger::path(dir);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let ledger: Ledger = serde_json::from_str(&text)
            .map_err(|e| CheckpointError::Corrupt { path: path.clone(), reason: e.to_string() })?;
        if ledger.starters.iter().enumerate().any(|(i, e)| e.index != i) {
            return Err(CheckpointError::Corrupt { path, reason: "starter entries out of order".into() });
        }
        Ok(Some(ledger))
    }

    /// Recomputes totals and writes the ledger through a temporary file.
    pub fn save(&mut self, dir: &Path) -> Result<(), CheckpointError> {
        self.done = self.starters.iter().filter(|e| e.status == Status::Done).count();
        self.total_solutions = self.starters.iter().map(|e| e.solutions).sum();
        let path = Ledger::path(dir);
        let tmp = dir.join("ledger.json.tmp");
        let text = serde_json::to_string_pretty(self).expect("ledger serializes");
        fs::write(&tmp, text + "\n").map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }

    pub fn check_compatible(&self, q: usize, hash: &str) -> Result<(), CheckpointError> {
        if self.q != q || self.starters_hash != hash {
            return Err(CheckpointError::Mismatch {
                expected: format!("q = {q}, starters {}", &hash[..12.min(hash.len())]),
                found: format!("q = {}, starters {}", self.q, &self.starters_hash[..12.min(self.starters_hash.len())]),
            });
        }
        Ok(())
    }

    pub fn all_done(&self) -> bool {
        self.starters.iter().all(|e| e.status == Status::Done)
    }
}

pub fn solution_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("starter-{index:05}.txt"))
}

/// Contents of a solution file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolutionFile {
    pub solutions: Vec<Vec<LineId>>,
    pub complete: bool,
}

pub fn read_solutions(path: &Path, index: usize) -> Result<SolutionFile, CheckpointError> {
    if !path.exists() {
        return Ok(SolutionFile::default());
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let corrupt = |reason: String| CheckpointError::Corrupt { path: path.to_path_buf(), reason };
    let mut lines: Vec<&str> = text.split('\n').collect();
    // the piece after the last newline is empty or a torn write
    lines.pop();
    let mut it = lines.into_iter();
    match it.next() {
        None => return Ok(SolutionFile::default()),
        Some(h) if h == format!("starter {index}") => {}
        Some(h) => return Err(corrupt(format!("header {h:?} does not name starter {index}"))),
    }
    let mut out = SolutionFile::default();
    for line in it {
        if out.complete {
            return Err(corrupt("data after the completion mark".into()));
        }
        if line == "complete" {
            out.complete = true;
            continue;
        }
        let sol = line
            .split_ascii_whitespace()
            .map(|t| t.parse::<LineId>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| corrupt(format!("bad solution line {line:?}: {e}")))?;
        out.solutions.push(sol);
    }
    Ok(out)
}

/// Appends solutions to a starter's file.
pub struct SolutionWriter {
    path: PathBuf,
    w: BufWriter<File>,
    pending: usize,
}

impl SolutionWriter {
    /// Opens the file for appending after `kept` recorded solutions,
    /// rewriting it so that no torn line remains.
    pub fn open(path: &Path, index: usize, kept: &[Vec<LineId>]) -> Result<SolutionWriter, CheckpointError> {
        let mut text = format!("starter {index}\n");
        for s in kept {
            text.push_str(&format_solution(s));
            text.push('\n');
        }
        fs::write(path, text).map_err(io_err(path))?;
        let f = OpenOptions::new().append(true).open(path).map_err(io_err(path))?;
        Ok(SolutionWriter { path: path.to_path_buf(), w: BufWriter::new(f), pending: 0 })
    }

    pub fn push(&mut self, s: &[LineId]) -> Result<(), CheckpointError> {
        writeln!(self.w, "{}", format_solution(s)).map_err(io_err(&self.path))?;
        self.pending += 1;
        if self.pending >= 256 {
            self.w.flush().map_err(io_err(&self.path))?;
            self.pending = 0;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CheckpointError> {
        writeln!(self.w, "complete").map_err(io_err(&self.path))?;
        self.w.flush().map_err(io_err(&self.path))
    }
}

pub fn format_solution(s: &[LineId]) -> String {
    s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}
