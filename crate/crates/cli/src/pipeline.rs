//! The classification pipeline behind the subcommands.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use pgspread::classify::{
    pair_consistency_check, record_completion, split_duality, ClassificationReport, Deduper, PairReport, SpreadRecord,
};
use pgspread::collineation::Groups;
use pgspread::gf::Field;
use pgspread::pg3::{Geometry, LineId};
use pgspread::rank::{rank_histogram, rank_spread, RankReport};
use pgspread::search::{build_instance, exact_cover_solve, starter_identity_check, starters_for, IdentityReport, Starter};
use pgspread::spreadset::{to_spread_set, SpreadSet};

use crate::checkpoint::{read_solutions, solution_path, CheckpointError, Ledger, SolutionWriter, Status};
use crate::config::{RunConfig, Stage};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invariant failure: {0}")]
    Invariant(String),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Checkpoint(CheckpointError::Mismatch { .. }) => 2,
            _ => 1,
        }
    }
}

pub fn write_artifact(dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    fs::write(&path, content).map_err(|source| CliError::Io { path, source })
}

/// Geometry, groups and starters for one q.
pub struct Context {
    pub geom: Geometry,
    pub groups: Groups,
    pub starters: Vec<Starter>,
    pub starters_text: String,
    pub starters_hash: String,
}

impl Context {
    pub fn new(q: usize) -> Result<Context, CliError> {
        let field = Field::of_order(q).map_err(|e| CliError::Usage(e.to_string()))?;
        let geom = Geometry::new(field);
        let groups = Groups::new(&geom).map_err(|e| CliError::Invariant(format!("collineation group: {e}")))?;
        let starters = starters_for(&geom, &groups);
        let mut starters_text = String::new();
        for (i, s) in starters.iter().enumerate() {
            let _ = writeln!(starters_text, "{i} {}", crate::checkpoint::format_solution(s.lines()));
        }
        let starters_hash = hex::encode(Sha256::digest(starters_text.as_bytes()));
        Ok(Context { geom, groups, starters, starters_text, starters_hash })
    }

    pub fn identity(&self) -> IdentityReport {
        starter_identity_check(&self.geom, &self.groups.ext, &self.starters)
    }
}

pub fn render_identity(r: &IdentityReport) -> String {
    format!(
        "starters {}\nline set classes {}\nlabelled pairs {}\nsum over starters {}\nsum over line sets {}\nidentity {}\n",
        r.starters,
        r.set_classes,
        r.lhs,
        r.pair_sum,
        r.set_sum,
        if r.holds() { "holds" } else { "FAILS" }
    )
}

fn pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool")
}

/// Completes one starter, verifying any solutions already recorded for it.
fn run_job(ctx: &Context, index: usize, dir: Option<&Path>) -> Result<Vec<Vec<LineId>>, CliError> {
    let inst = build_instance(&ctx.geom, &ctx.starters[index]);
    let Some(dir) = dir else {
        let mut out = Vec::new();
        exact_cover_solve(&inst, |rows| out.push(inst.spread_of(rows)));
        return Ok(out);
    };
    let path = solution_path(dir, index);
    let prev = read_solutions(&path, index)?;
    if prev.complete {
        return Ok(prev.solutions);
    }
    let mut writer = SolutionWriter::open(&path, index, &prev.solutions)?;
    let mut out = Vec::new();
    let mut failure: Option<CliError> = None;
    exact_cover_solve(&inst, |rows| {
        if failure.is_some() {
            return;
        }
        let s = inst.spread_of(rows);
        let k = out.len();
        if k < prev.solutions.len() {
            if prev.solutions[k] != s {
                failure = Some(CliError::Checkpoint(CheckpointError::Corrupt {
                    path: path.clone(),
                    reason: format!("recorded solution {k} differs from the recomputed one"),
                }));
            }
        } else if let Err(e) = writer.push(&s) {
            failure = Some(e.into());
        }
        out.push(s);
    });
    if let Some(e) = failure {
        return Err(e);
    }
    if out.len() < prev.solutions.len() {
        return Err(CliError::Checkpoint(CheckpointError::Corrupt {
            path,
            reason: "more solutions recorded than the search produces".into(),
        }));
    }
    writer.finish()?;
    Ok(out)
}

/// Solutions per starter; `None` for starters outside the requested range
/// that have not been completed before.
pub type Completions = Vec<Option<Vec<Vec<LineId>>>>;

/// Runs the completion stage. With a checkpoint directory, finished starters
/// are loaded instead of recomputed and the ledger is kept current.
pub fn run_completion(ctx: &Context, cfg: &RunConfig, require_ledger: bool) -> Result<Completions, CliError> {
    let n = ctx.starters.len();
    let range = match cfg.starter_range {
        Some(r) if r.end > n => {
            return Err(CliError::Usage(format!("starter range {r} exceeds the {n} starters")));
        }
        Some(r) => r.start..r.end,
        None => 0..n,
    };
    let Some(dir) = cfg.checkpoint_dir.as_deref() else {
        if require_ledger {
            return Err(CliError::Usage("resume needs --checkpoint-dir".into()));
        }
        let jobs: Vec<usize> = range.collect();
        let results = pool(cfg.jobs).install(|| {
            jobs.par_iter().map(|&i| run_job(ctx, i, None).map(|s| (i, s))).collect::<Result<Vec<_>, _>>()
        })?;
        let mut out: Completions = vec![None; n];
        for (i, s) in results {
            out[i] = Some(s);
        }
        return Ok(out);
    };
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let ledger = match Ledger::load(dir)? {
        Some(l) => {
            l.check_compatible(cfg.q, &ctx.starters_hash)?;
            l
        }
        None if require_ledger => {
            return Err(CliError::Usage(format!("no ledger in {}", dir.display())));
        }
        None => {
            let mut l = Ledger::new(cfg.q, ctx.starters_hash.clone(), n);
            l.save(dir)?;
            l
        }
    };
    let mut out: Completions = vec![None; n];
    let mut jobs = Vec::new();
    for e in &ledger.starters {
        if e.status == Status::Done {
            let f = read_solutions(&solution_path(dir, e.index), e.index)?;
            if !f.complete || f.solutions.len() as u64 != e.solutions {
                return Err(CliError::Checkpoint(CheckpointError::Corrupt {
                    path: solution_path(dir, e.index),
                    reason: "file disagrees with the ledger".into(),
                }));
            }
            out[e.index] = Some(f.solutions);
        } else if range.contains(&e.index) {
            jobs.push(e.index);
        }
    }
    let ledger = Mutex::new(ledger);
    let results = pool(cfg.jobs).install(|| {
        jobs.par_iter()
            .map(|&i| {
                {
                    let mut l = ledger.lock().unwrap();
                    l.starters[i].status = Status::Running;
                    l.save(dir)?;
                }
                let t = Instant::now();
                let sols = run_job(ctx, i, Some(dir))?;
                let mut l = ledger.lock().unwrap();
                let e = &mut l.starters[i];
                e.status = Status::Done;
                e.solutions = sols.len() as u64;
                e.wall_ms = t.elapsed().as_millis() as u64;
                l.save(dir)?;
                Ok((i, sols))
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?;
    for (i, s) in results {
        out[i] = Some(s);
    }
    Ok(out)
}

pub struct Classification {
    pub dedup: Deduper,
    pub report: ClassificationReport,
    pub pairs: PairReport,
}

/// Classifies all completions; fails on a bad stabilizer ratio or a missed pair.
pub fn classify_completions(ctx: &Context, all: &[Vec<Vec<LineId>>], jobs: usize) -> Result<Classification, CliError> {
    let flat: Vec<&Vec<LineId>> = all.iter().flatten().collect();
    let records: Vec<SpreadRecord> =
        pool(jobs).install(|| flat.par_iter().map(|s| record_completion(&ctx.groups, s)).collect());
    let mut dedup = Deduper::new();
    for r in records {
        dedup.insert(r);
    }
    let classes = dedup.classes(&ctx.groups).map_err(|e| CliError::Invariant(e.to_string()))?;
    let report = ClassificationReport::new(ctx.geom.q(), classes);
    let pairs = pair_consistency_check(&dedup, &ctx.groups);
    if !pairs.passed() {
        return Err(CliError::Invariant(format!(
            "{} of {} (line, spread) pair orbits never reached",
            pairs.missing.len(),
            pairs.outside_orbits
        )));
    }
    Ok(Classification { dedup, report, pairs })
}

pub fn render_classes(report: &ClassificationReport) -> String {
    let mut s = String::new();
    for c in &report.classes {
        let split = match c.split {
            pgspread::classify::Split::OneClass => "one-class",
            pgspread::classify::Split::TwoClass => "two-class",
        };
        let _ = writeln!(
            s,
            "{} | aut {} | pgl {} | {split}",
            crate::checkpoint::format_solution(&c.canonical),
            c.aut_order,
            c.pgl_order
        );
    }
    s
}

/// Spread sets of the collineation class representatives, in class order.
pub fn representative_sets(ctx: &Context, report: &ClassificationReport) -> Result<Vec<SpreadSet>, CliError> {
    let mut out = Vec::new();
    for c in &report.classes {
        for rep in split_duality(c, &ctx.groups) {
            let set = to_spread_set(&ctx.geom, &rep).map_err(|e| CliError::Invariant(format!("spread set: {e}")))?;
            out.push(set);
        }
    }
    Ok(out)
}

pub fn rank_sets(ctx: &Context, sets: &[SpreadSet], jobs: usize) -> Result<Vec<RankReport>, CliError> {
    pool(jobs).install(|| {
        sets.par_iter()
            .enumerate()
            .map(|(i, s)| {
                let spread = pgspread::spreadset::from_spread_set(&ctx.geom, s);
                rank_spread(&ctx.geom, &spread, i).map_err(|e| CliError::Invariant(format!("plane {i}: {e}")))
            })
            .collect()
    })
}

pub fn render_ranks(reports: &[RankReport]) -> (String, String) {
    let mut rows = String::new();
    for r in reports {
        let flag = if r.below_bound() { " BELOW-BOUND" } else { "" };
        let _ = writeln!(rows, "{} {} {}{flag}", r.id, r.rank, r.hamada);
    }
    let mut hist = String::new();
    for (rank, count) in rank_histogram(reports) {
        let _ = writeln!(hist, "{rank} {count}");
    }
    (rows, hist)
}

/// What a pipeline run produced, for reporting on stdout.
#[derive(Debug, Default)]
pub struct Summary {
    pub starters: usize,
    pub completed: usize,
    pub spreads: u64,
    pub ext_classes: Option<usize>,
    pub pgl_classes: Option<usize>,
}

/// Runs the configured stages and writes their artifacts to `cfg.out`.
pub fn run_pipeline(cfg: &RunConfig, require_ledger: bool) -> Result<Summary, CliError> {
    let ctx = Context::new(cfg.q)?;
    let mut summary = Summary { starters: ctx.starters.len(), ..Summary::default() };
    if cfg.wants(Stage::Starters) {
        let id = ctx.identity();
        write_artifact(&cfg.out, "starters.txt", &ctx.starters_text)?;
        write_artifact(&cfg.out, "identity.txt", &render_identity(&id))?;
        if !id.holds() {
            return Err(CliError::Invariant(format!(
                "counting identity: {} pairs, starters account for {} / {}",
                id.lhs, id.pair_sum, id.set_sum
            )));
        }
    }
    let later = [Stage::Complete, Stage::Classify, Stage::Spreadsets, Stage::Ranks];
    if !later.iter().any(|&s| cfg.wants(s)) {
        return Ok(summary);
    }
    let completions = run_completion(&ctx, cfg, require_ledger)?;
    summary.completed = completions.iter().filter(|c| c.is_some()).count();
    summary.spreads = completions.iter().flatten().map(|c| c.len() as u64).sum();
    if summary.completed < ctx.starters.len() {
        eprintln!(
            "{} of {} starters completed; classification waits for the rest",
            summary.completed,
            ctx.starters.len()
        );
        return Ok(summary);
    }
    if !later[1..].iter().any(|&s| cfg.wants(s)) {
        return Ok(summary);
    }
    let all: Vec<Vec<Vec<LineId>>> = completions.into_iter().map(|c| c.expect("all completed")).collect();
    let cls = classify_completions(&ctx, &all, cfg.jobs)?;
    summary.ext_classes = Some(cls.report.ext_classes());
    summary.pgl_classes = Some(cls.report.pgl_classes());
    if cfg.wants(Stage::Classify) {
        write_artifact(&cfg.out, "classes.txt", &render_classes(&cls.report))?;
        write_artifact(&cfg.out, "table.txt", &cls.report.render_text())?;
        write_artifact(&cfg.out, "table.rows", &cls.report.render_rows())?;
    }
    if cfg.wants(Stage::Spreadsets) || cfg.wants(Stage::Ranks) {
        let sets = representative_sets(&ctx, &cls.report)?;
        if cfg.wants(Stage::Spreadsets) {
            let text: String = sets.iter().map(|s| s.encode_line() + "\n").collect();
            write_artifact(&cfg.out, "spreadsets.txt", &text)?;
        }
        if cfg.wants(Stage::Ranks) {
            let reports = rank_sets(&ctx, &sets, cfg.jobs)?;
            for r in reports.iter().filter(|r| r.below_bound()) {
                eprintln!("plane {} has rank {} below the Hamada value {}", r.id, r.rank, r.hamada);
            }
            let (rows, hist) = render_ranks(&reports);
            write_artifact(&cfg.out, "ranks.txt", &rows)?;
            write_artifact(&cfg.out, "rank_histogram.txt", &hist)?;
        }
    }
    Ok(summary)
}
