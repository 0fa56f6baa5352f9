//! Command-line front end for the spread classification pipeline.

pub mod checkpoint;
pub mod config;
pub mod pipeline;

use std::ffi::OsString;
use std::fs::File;
use std::io::BufReader;

use clap::Parser;
use num_bigint::BigUint;

use pgspread::classify::{has_dual_automorphism, record_spread, Deduper};
use pgspread::collineation::pgammal_order;
use pgspread::rank::rank_spread;
use pgspread::search::{is_spread, spreads_from_scratch};
use pgspread::spreadset::{from_spread_set, read_spread_sets, regular_spread_set, SpreadSet};

use config::{Cli, Command, RunConfig, Stage};
use pipeline::{run_completion, run_pipeline, CliError, Context};

/// Parses arguments, runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn config(common: &config::Common, stages: &[Stage]) -> Result<RunConfig, CliError> {
    RunConfig::new(common, stages).map_err(CliError::Usage)
}

fn print_summary(s: &pipeline::Summary) {
    println!("starters {}", s.starters);
    println!("completed {} / {}", s.completed, s.starters);
    println!("spreads {}", s.spreads);
    if let (Some(e), Some(p)) = (s.ext_classes, s.pgl_classes) {
        println!("classes {e} with dualities, {p} under collineations");
    }
}

fn dispatch(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Starters(c) => {
            let cfg = config(&c, &[Stage::Starters])?;
            let s = run_pipeline(&cfg, false)?;
            println!("starters {}", s.starters);
            println!("identity holds");
            Ok(0)
        }
        Command::Classify { common, stages } => {
            let cfg = config(&common, &stages)?;
            print_summary(&run_pipeline(&cfg, false)?);
            Ok(0)
        }
        Command::Resume(c) => {
            let cfg = config(&c, &[])?;
            if cfg.checkpoint_dir.is_none() {
                return Err(CliError::Usage("resume needs --checkpoint-dir".into()));
            }
            print_summary(&run_pipeline(&cfg, true)?);
            Ok(0)
        }
        Command::Spreadsets(c) => {
            let cfg = config(&c, &[Stage::Complete, Stage::Spreadsets])?;
            print_summary(&run_pipeline(&cfg, false)?);
            Ok(0)
        }
        Command::Rank { common, file } => {
            let cfg = config(&common, &[])?;
            cmd_rank(&cfg, &file)
        }
        Command::Check(c) => {
            let cfg = config(&c, &[])?;
            cmd_check(&cfg)
        }
    }
}

fn cmd_rank(cfg: &RunConfig, file: &std::path::Path) -> Result<i32, CliError> {
    let field = pgspread::gf::Field::of_order(cfg.q).map_err(|e| CliError::Usage(e.to_string()))?;
    let geom = pgspread::pg3::Geometry::new(field.clone());
    let f = File::open(file).map_err(|source| CliError::Io { path: file.to_path_buf(), source })?;
    let lines = read_spread_sets(BufReader::new(f), &field)
        .map_err(|source| CliError::Io { path: file.to_path_buf(), source })?;
    let mut reports = Vec::new();
    let mut failed = 0;
    for (line_no, set) in lines {
        let result = set.map_err(|e| e.to_string()).and_then(|s| {
            rank_spread(&geom, &from_spread_set(&geom, &s), line_no).map_err(|e| e.to_string())
        });
        match result {
            Ok(r) => {
                println!("{} {} {}", r.id, r.rank, r.hamada);
                reports.push(r);
            }
            Err(e) => {
                eprintln!("line {line_no}: {e}");
                failed += 1;
            }
        }
    }
    let (_, hist) = pipeline::render_ranks(&reports);
    if !reports.is_empty() {
        println!();
        print!("{hist}");
    }
    Ok(if failed > 0 { 1 } else { 0 })
}

struct Checks {
    failed: usize,
}

impl Checks {
    fn record(&mut self, name: &str, result: Result<String, String>) {
        match result {
            Ok(detail) => println!("ok   {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                self.failed += 1;
            }
        }
    }
}

fn expect<T: PartialEq + std::fmt::Display>(got: T, want: T) -> Result<String, String> {
    if got == want {
        Ok(got.to_string())
    } else {
        Err(format!("got {got}, expected {want}"))
    }
}

/// Invariant suite for one q. Completion-based checks run for q <= 5.
fn cmd_check(cfg: &RunConfig) -> Result<i32, CliError> {
    let q = cfg.q;
    let ctx = Context::new(q)?;
    let g = &ctx.geom;
    let gr = &ctx.groups;
    let mut c = Checks { failed: 0 };
    c.record(
        "intersection graph",
        g.gamma_structure_check()
            .map(|r| format!("{} points, {} lines, pencils of {}, {} edges", r.points, r.lines, r.pencil_size, r.edges))
            .map_err(|e| e.to_string()),
    );
    let order = pgammal_order(q as u64, g.field().e());
    c.record("collineation group order", expect(gr.pgl.order().clone(), order.clone()));
    c.record("extended group order", expect(gr.ext.order().clone(), &order * 2u32));
    c.record("duality outside collineations", expect(gr.pgl.contains(&gr.duality), false));
    let id = ctx.identity();
    c.record("counting identity", if id.holds() { Ok(format!("{} = {}", id.lhs, id.pair_sum)) } else { Err(format!("{id:?}")) });
    let regular = from_spread_set(g, &regular_spread_set(g.field()));
    c.record("regular spread self-dual", expect(has_dual_automorphism(gr, &regular), true));
    c.record(
        "regular plane rank",
        rank_spread(g, &regular, 0)
            .map_err(|e| e.to_string())
            .and_then(|r| expect(r.rank as u64, r.hamada)),
    );
    if q <= 5 {
        let cfg_mem = RunConfig { checkpoint_dir: None, starter_range: None, ..cfg.clone() };
        let comps = run_completion(&ctx, &cfg_mem, false)?;
        let all: Vec<_> = comps.into_iter().map(|x| x.expect("full range")).collect();
        let bad = all.iter().flatten().filter(|s| !is_spread(g, s)).count();
        c.record("completions are spreads", expect(bad, 0));
        match pipeline::classify_completions(&ctx, &all, cfg.jobs) {
            Ok(cls) => {
                c.record(
                    "classification",
                    Ok(format!("{} classes, {} under collineations", cls.report.ext_classes(), cls.report.pgl_classes())),
                );
                c.record("pair consistency", Ok(format!("{} orbits reached", cls.pairs.outside_orbits)));
                if q <= 3 {
                    let scratch = spreads_from_scratch(g, false).map_err(|e| CliError::Invariant(e.to_string()))?;
                    let mut d = Deduper::new();
                    for s in &scratch {
                        d.insert(record_spread(gr, s));
                    }
                    let same = d.canonical_forms().eq(cls.dedup.canonical_forms());
                    c.record("scratch oracle classes", expect(same, true));
                    c.record(
                        "labelled spreads",
                        expect(cls.report.labelled_spreads(gr.pgl.order()), BigUint::from(scratch.len())),
                    );
                }
                match pipeline::representative_sets(&ctx, &cls.report) {
                    Ok(sets) => {
                        let round = sets.iter().all(|s| {
                            SpreadSet::decode_line(&s.encode_line(), g.field()).as_ref() == Ok(s)
                                && s.transpose().transpose() == *s
                        });
                        c.record("spread sets", expect(round, true).map(|_| format!("{} sets round-trip", sets.len())));
                        match pipeline::rank_sets(&ctx, &sets, cfg.jobs) {
                            Ok(r) => {
                                let below = r.iter().filter(|x| x.below_bound()).count();
                                c.record("ranks at least the Hamada value", expect(below, 0));
                            }
                            Err(e) => c.record("ranks", Err(e.to_string())),
                        }
                    }
                    Err(e) => c.record("spread sets", Err(e.to_string())),
                }
            }
            Err(e) => c.record("classification", Err(e.to_string())),
        }
    } else {
        println!("skip completion checks above q = 5");
    }
    Ok(if c.failed == 0 { 0 } else { 1 })
}
