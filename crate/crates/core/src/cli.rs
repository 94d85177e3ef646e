//! Command-line front end.
//!
//! Exit codes: 0 success (an emptied set is a result, not an error), 2
//! configuration error, 3 validation failure, 4 I/O error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    builtin_battery, load_battery, ncap_battery, pass_counts, slice, write_battery_results,
    write_summary_csv, Summary, SummaryRow,
};
use crate::config::{Init, RunConfigFile};
use crate::domain::{write_atomic, CoveringGrid, SafeSetDump, TOOL_VERSION};
use crate::error::{Error, Result};
use crate::quantifier::{quantify_observed, validate, write_run_log, ValidationReport};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_VALIDATION_FAILED: u8 = 3;
pub const EXIT_IO: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "almost-safe",
    version,
    about = "Almost safe set quantification for car-following controllers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Seed; repeat for several. Overrides the configured seeds.
    #[arg(long = "seed")]
    pub seeds: Vec<u64>,
    /// Output directory. Overrides `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantify the almost safe set, one dump and run log per seed.
    Quantify {
        #[command(flatten)]
        common: Common,
        /// Start from this dump instead of the configured initialization.
        #[arg(long)]
        warm_start: Option<PathBuf>,
        /// Also write a CSV trace of every scenario run.
        #[arg(long)]
        trace: bool,
    },
    /// Statistically validate a dumped set.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Safe-set dump to check.
        dump: PathBuf,
    },
    /// Run the concrete scenario battery.
    Ncap {
        #[command(flatten)]
        common: Common,
    },
    /// Summarize dumps matching the given glob patterns.
    Report {
        #[arg(required = true)]
        patterns: Vec<String>,
        /// Write summary.csv (and slices) here instead of only printing.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also export the (v0, v1) slice at this headway for every dump.
        #[arg(long = "slice")]
        slices: Vec<f64>,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

pub fn execute(cmd: &Command) -> Result<u8> {
    match cmd {
        Command::Quantify {
            common,
            warm_start,
            trace,
        } => cmd_quantify(common, warm_start.as_deref(), *trace),
        Command::Validate { common, dump } => cmd_validate(common, dump),
        Command::Ncap { common } => cmd_ncap(common),
        Command::Report {
            patterns,
            out,
            slices,
        } => cmd_report(patterns, out.as_deref(), slices),
    }
}

struct Resolved {
    cfg: RunConfigFile,
    out: PathBuf,
}

fn resolve(common: &Common) -> Result<Resolved> {
    let mut cfg = RunConfigFile::load(&common.config)?;
    if !common.seeds.is_empty() {
        cfg.seeds = common.seeds.clone();
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    cfg.output_dir = out.clone();
    Ok(Resolved { cfg, out })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// `#` comment lines naming the tool and echoing the configuration.
fn csv_preamble(echo: &serde_json::Value) -> Vec<u8> {
    format!("# {TOOL_VERSION}\n# config: {echo}\n").into_bytes()
}

fn file_tag(cfg: &RunConfigFile) -> String {
    cfg.model.name.replace(':', "-")
}

fn cmd_quantify(common: &Common, warm_start: Option<&Path>, trace: bool) -> Result<u8> {
    let Resolved { mut cfg, out } = resolve(common)?;
    if let Some(p) = warm_start {
        cfg.init = Init::Dump(p.to_path_buf());
    }
    let initial = cfg.initial_grid()?;
    ensure_dir(&out)?;
    let echo = cfg.echo();
    let tag = file_tag(&cfg);

    let outcomes: Vec<Result<String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .seeds
            .iter()
            .map(|&seed| {
                let (cfg, initial, echo, out, tag) = (&cfg, initial.clone(), &echo, &out, &tag);
                scope.spawn(move || quantify_seed(cfg, seed, initial, echo, out, tag, trace))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("quantification thread panicked"))
            .collect()
    });
    for line in outcomes {
        println!("{}", line?);
    }
    Ok(EXIT_OK)
}

fn quantify_seed(
    cfg: &RunConfigFile,
    seed: u64,
    initial: CoveringGrid,
    echo: &serde_json::Value,
    out: &Path,
    tag: &str,
    trace: bool,
) -> Result<String> {
    let qcfg = cfg.quant_config(seed);
    let mut model = cfg.model.build(seed)?;
    let trace_dir = out.join(format!("{tag}_seed{seed}_traces"));
    if trace {
        ensure_dir(&trace_dir)?;
    }
    let mut trace_err = None;
    let result = quantify_observed(&qcfg, &mut model, initial, &mut |rec, traj| {
        if !trace || trace_err.is_some() {
            return;
        }
        let mut bytes = Vec::new();
        let path = trace_dir.join(format!("run{:05}.csv", rec.run));
        if let Err(e) = traj
            .write_csv(qcfg.sim.dt, &mut bytes)
            .and_then(|_| write_atomic(&path, &bytes))
        {
            trace_err = Some(e);
        }
    })?;
    if let Some(e) = trace_err {
        return Err(e);
    }

    let dump = result.to_dump_with(echo.clone())?;
    let dump_path = out.join(format!("{tag}_seed{seed}.json"));
    dump.save(&dump_path)?;

    let mut log = csv_preamble(echo);
    write_run_log(&result.log, &mut log)?;
    write_atomic(&out.join(format!("{tag}_seed{seed}_runs.csv")), &log)?;

    Ok(format!(
        "seed {seed}: {:?}, {} runs, {} collision runs, {} active cells -> {}",
        result.stats.exit_reason,
        result.stats.total_runs,
        result.stats.collision_runs,
        result.grid.active_len(),
        dump_path.display()
    ))
}

fn cmd_validate(common: &Common, dump_path: &Path) -> Result<u8> {
    let Resolved { cfg, out } = resolve(common)?;
    let grid = SafeSetDump::load(dump_path)?.to_grid()?;
    let sim = cfg.sim_config();
    if grid.bounds() != &sim.bounds || grid.delta().0 != cfg.delta {
        return Err(Error::GridMismatch(format!(
            "{} was built with other bounds or delta than the configuration",
            dump_path.display()
        )));
    }
    let seed = cfg.seeds[0];
    let mut model = cfg.model.build(seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let report = validate(
        &grid,
        &mut model,
        &cfg.policy,
        cfg.epsilon,
        cfg.beta,
        &sim,
        &mut rng,
    )?;
    let text = validation_json(&report, &cfg, dump_path)?;
    println!("{text}");
    if common.out.is_some() {
        ensure_dir(&out)?;
        write_atomic(&out.join("validation.json"), text.as_bytes())?;
    }
    Ok(if report.passed {
        EXIT_OK
    } else {
        EXIT_VALIDATION_FAILED
    })
}

fn validation_json(report: &ValidationReport, cfg: &RunConfigFile, dump: &Path) -> Result<String> {
    let doc = serde_json::json!({
        "tool_version": TOOL_VERSION,
        "dump": dump.display().to_string(),
        "config": cfg.echo(),
        "report": report,
    });
    Ok(serde_json::to_string_pretty(&doc)?)
}

fn cmd_ncap(common: &Common) -> Result<u8> {
    let Resolved { cfg, out } = resolve(common)?;
    let battery = match &cfg.ncap.battery {
        Some(p) => load_battery(p)?,
        None => builtin_battery(),
    };
    let seed = cfg.seeds[0];
    let mut model = cfg.model.build(seed)?;
    let outcomes = ncap_battery(
        &mut model,
        &battery,
        cfg.ncap.repeats,
        &cfg.sim_config(),
        seed,
    )?;
    let counts = pass_counts(&battery, &outcomes);

    ensure_dir(&out)?;
    let mut bytes = csv_preamble(&cfg.echo());
    write_battery_results(&battery, &outcomes, &mut bytes)?;
    let path = out.join(format!("ncap_{}.csv", file_tag(&cfg)));
    write_atomic(&path, &bytes)?;
    println!(
        "{}: passed {}/{} (CCRs {}, CCRm {}, CCRb {}) -> {}",
        cfg.model.name,
        counts.total(),
        counts.runs,
        counts.ccrs,
        counts.ccrm,
        counts.ccrb,
        path.display()
    );
    Ok(EXIT_OK)
}

fn expand_patterns(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for pat in patterns {
        let entries =
            glob::glob(pat).map_err(|e| Error::Config(format!("bad pattern `{pat}`: {e}")))?;
        for entry in entries {
            let path = entry.map_err(|e| {
                let p = e.path().to_path_buf();
                Error::io(p, e.into())
            })?;
            paths.push(path);
        }
    }
    paths.sort();
    paths.dedup();
    if paths.is_empty() {
        return Err(Error::Config(format!("no dumps match {patterns:?}")));
    }
    Ok(paths)
}

/// Grouping key of a dump: model name, initialization label and ε, read
/// from the configuration echo.
fn group_key(dump: &SafeSetDump) -> (String, String, String) {
    let c = &dump.config;
    let sv = c
        .pointer("/model/name")
        .and_then(|v| v.as_str())
        .unwrap_or("unknown")
        .to_owned();
    let s0 = match c.get("init") {
        Some(v) => serde_json::from_value::<Init>(v.clone())
            .map(|i| i.label())
            .unwrap_or_else(|_| "unknown".into()),
        None => "full".into(),
    };
    let eps = c
        .get("epsilon")
        .and_then(|v| v.as_f64())
        .map(|e| e.to_string())
        .unwrap_or_else(|| "unknown".into());
    (sv, s0, eps)
}

fn cmd_report(patterns: &[String], out: Option<&Path>, slices: &[f64]) -> Result<u8> {
    let paths = expand_patterns(patterns)?;
    let mut groups: BTreeMap<(String, String, String), Vec<(PathBuf, SafeSetDump)>> =
        BTreeMap::new();
    for p in paths {
        let dump = SafeSetDump::load(&p)?;
        if dump.stats.is_none() {
            return Err(Error::Config(format!(
                "{} carries no run statistics",
                p.display()
            )));
        }
        groups.entry(group_key(&dump)).or_default().push((p, dump));
    }

    let mut rows = Vec::new();
    for ((sv, s0, eps), members) in &groups {
        let grids = members
            .iter()
            .map(|(_, d)| d.to_grid())
            .collect::<Result<Vec<_>>>()?;
        let parts: Vec<_> = grids
            .iter()
            .zip(members)
            .map(|(g, (_, d))| (g, d.stats.as_ref().expect("checked above")))
            .collect();
        rows.push(SummaryRow {
            sv: sv.clone(),
            s0: s0.clone(),
            epsilon: eps.parse().unwrap_or(f64::NAN),
            summary: Summary::from_parts(&parts)?,
        });
        if let Some(dir) = out {
            for (grid, (path, _)) in grids.iter().zip(members) {
                for d in slices {
                    let sl = slice(grid, *d)?;
                    let mut bytes =
                        format!("# {TOOL_VERSION}\n# source: {}\n", path.display()).into_bytes();
                    sl.write_csv(&mut bytes)?;
                    let stem = path
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    ensure_dir(dir)?;
                    write_atomic(&dir.join(format!("{stem}_slice_d{d}.csv")), &bytes)?;
                }
            }
        }
    }

    let mut table = Vec::new();
    write_summary_csv(&rows, &mut table)?;
    print!("{}", String::from_utf8_lossy(&table));
    if let Some(dir) = out {
        ensure_dir(dir)?;
        let mut bytes = format!("# {TOOL_VERSION}\n").into_bytes();
        bytes.extend_from_slice(&table);
        write_atomic(&dir.join("summary.csv"), &bytes)?;
    }
    Ok(EXIT_OK)
}
