//! Command-line arguments and the run configuration derived from them.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Half-open range `A..B` of starter indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StarterRange {
    pub start: usize,
    pub end: usize,
}

impl FromStr for StarterRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got {s:?}"))?;
        let start = a.trim().parse().map_err(|_| format!("bad range start {a:?}"))?;
        let end = b.trim().parse().map_err(|_| format!("bad range end {b:?}"))?;
        if start > end {
            return Err(format!("empty range {s:?}"));
        }
        Ok(StarterRange { start, end })
    }
}

impl fmt::Display for StarterRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum)]
pub enum Stage {
    Starters,
    Complete,
    Classify,
    Spreadsets,
    Ranks,
}

#[derive(Parser, Debug)]
#[command(name = "pgspread", version, about = "Classify line spreads of PG(3,q)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Field order (2, 3, 4, 5, 7, 8 or 9).
    #[arg(long, env = "PGSPREAD_Q")]
    pub q: usize,
    /// Worker threads.
    #[arg(long, env = "PGSPREAD_JOBS", default_value_t = 1)]
    pub jobs: usize,
    /// Directory for the ledger and per-starter solution files.
    #[arg(long, env = "PGSPREAD_CHECKPOINT_DIR")]
    pub checkpoint_dir: Option<PathBuf>,
    /// Only complete starters with indices in A..B.
    #[arg(long, env = "PGSPREAD_STARTER_RANGE")]
    pub starter_range: Option<StarterRange>,
    /// Output directory.
    #[arg(long, env = "PGSPREAD_OUT", default_value = "pgspread-out")]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Enumerate starters and check the counting identity.
    Starters(Common),
    /// Run the pipeline: starters, completion, classification, spread sets, ranks.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Stages to run, comma separated.
        #[arg(long, env = "PGSPREAD_STAGES", value_delimiter = ',')]
        stages: Vec<Stage>,
    },
    /// Continue an interrupted run from its checkpoint directory.
    Resume(Common),
    /// Classify and write spread sets of the class representatives.
    Spreadsets(Common),
    /// Rank the planes of the spread sets in a file.
    Rank {
        #[command(flatten)]
        common: Common,
        /// Spread-set file, one set per line.
        file: PathBuf,
    },
    /// Run the invariant suite for one q.
    Check(Common),
}

/// Everything a pipeline run needs.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub q: usize,
    pub stages: Vec<Stage>,
    pub jobs: usize,
    pub checkpoint_dir: Option<PathBuf>,
    pub starter_range: Option<StarterRange>,
    pub out: PathBuf,
}

pub const ALL_STAGES: [Stage; 5] = [Stage::Starters, Stage::Complete, Stage::Classify, Stage::Spreadsets, Stage::Ranks];

impl RunConfig {
    pub fn new(common: &Common, stages: &[Stage]) -> Result<RunConfig, String> {
        if ![2, 3, 4, 5, 7, 8, 9].contains(&common.q) {
            return Err(format!("unsupported q = {}", common.q));
        }
        if common.jobs == 0 {
            return Err("--jobs must be at least 1".into());
        }
        let mut stages = if stages.is_empty() { ALL_STAGES.to_vec() } else { stages.to_vec() };
        stages.sort();
        stages.dedup();
        Ok(RunConfig {
            q: common.q,
            stages,
            jobs: common.jobs,
            checkpoint_dir: common.checkpoint_dir.clone(),
            starter_range: common.starter_range,
            out: common.out.clone(),
        })
    }

    pub fn wants(&self, s: Stage) -> bool {
        self.stages.contains(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ranges() {
        assert_eq!("3..7".parse::<StarterRange>().unwrap(), StarterRange { start: 3, end: 7 });
        assert!("7..3".parse::<StarterRange>().is_err());
        assert!("7".parse::<StarterRange>().is_err());
    }

    #[test]
    fn rejects_bad_q() {
        let c = Common { q: 6, jobs: 1, checkpoint_dir: None, starter_range: None, out: "x".into() };
        assert!(RunConfig::new(&c, &[]).is_err());
    }
}
