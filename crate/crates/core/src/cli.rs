//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::audit::audit;
use crate::config::ScenarioConfig;
use crate::sim::{run_batch_seeded, episode_seeds, Batch, Scenario};
use crate::sweep::{sweep, to_csv, SweepGrid};
use crate::trace::{ShieldMode, Termination, Trace};

/// Environment variable naming the default output directory of `run`.
pub const OUT_ENV: &str = "LDTL_SHIELD_OUT";

#[derive(Debug, Parser)]
#[command(name = "ldtl-shield", version, about = "Barrier-function safety shield for multi-agent POMDPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario file and report every problem found.
    Validate { config: PathBuf },
    /// Run episodes and write one trace per episode plus summaries.
    Run(RunArgs),
    /// Replay a trace against its scenario and report oracle verdicts.
    Audit {
        trace: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Run batches over a grid of monitor parameters and print CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(ShieldMode))]
    pub shield: Option<ShieldMode>,
}

impl clap::ValueEnum for ShieldMode {
    fn value_variants<'a>() -> &'a [Self] {
        &[ShieldMode::Off, ShieldMode::Literal, ShieldMode::Conservative]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            ShieldMode::Off => "off",
            ShieldMode::Literal => "literal",
            ShieldMode::Conservative => "conservative",
        }))
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
    /// Output directory.
    #[arg(long, env = OUT_ENV, default_value = "out")]
    pub out: PathBuf,
    /// Also fail on safety deadlocks.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
    #[arg(long, value_delimiter = ',')]
    pub gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub rho: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub delta: Vec<f64>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` and runs the command. Usage errors exit with 2.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// `Ok(false)` means the command ran but reported a failure.
pub fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Validate { config } => cmd_validate(&config),
        Command::Run(args) => cmd_run(&args),
        Command::Audit { trace, config } => cmd_audit(&trace, &config),
        Command::Sweep(args) => cmd_sweep(&args),
    }
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn build(path: &Path, overrides: &Overrides) -> Result<Scenario> {
    let mut cfg = load(path)?;
    if let Some(seed) = overrides.seed {
        cfg.sim.seed = seed;
    }
    if let Some(e) = overrides.episodes {
        cfg.sim.episodes = e;
    }
    if let Some(h) = overrides.horizon {
        cfg.sim.horizon = h;
    }
    if let Some(mode) = overrides.shield {
        cfg.shield.mode = mode;
    }
    cfg.build().map_err(|issues| crate::config::ConfigError::Invalid(issues).into())
}

pub fn cmd_validate(path: &Path) -> Result<bool> {
    let cfg = load(path)?;
    match cfg.build() {
        Ok(s) => {
            let m = s.model();
            println!(
                "ok: {} states, {} joint actions, {} joint observations, {} obligations",
                m.num_states(),
                m.num_actions(),
                m.num_observations(),
                s.monitor().obligations().len()
            );
            for o in s.monitor().obligations() {
                println!("  obligation {}: {:?} {}", o.id, o.kind(), o.label);
            }
            Ok(true)
        }
        Err(issues) => {
            println!("{} problem(s) in {}:", issues.len(), path.display());
            for i in issues {
                println!("  - {i}");
            }
            Ok(false)
        }
    }
}

pub fn trace_file_name(index: usize, seed: u64) -> String {
    format!("episode_{index:04}_seed_{seed}.jsonl")
}

pub const SUMMARY_HEADER: &str =
    "seed,steps,termination,violations,invariant_breaches,overrides,all_discharged,discharge_step";
pub const BATCH_HEADER: &str = "episodes,steps,violations,episodes_with_violations,invariant_breaches,episodes_with_breaches,overrides,override_rate,deadlocks,aborts,episodes_discharged,mean_discharge_step";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summary_csv(batch: &Batch) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for s in &batch.stats {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.seed,
            s.steps,
            s.termination,
            s.violations,
            s.invariant_breaches,
            s.overrides,
            s.all_discharged,
            opt(s.discharge_step)
        )
        .expect("write to string");
    }
    out
}

pub fn batch_csv(batch: &Batch) -> String {
    let s = &batch.summary;
    format!(
        "{BATCH_HEADER}\n{},{},{},{},{},{},{},{},{},{},{},{}\n",
        s.episodes,
        s.steps,
        s.violations,
        s.episodes_with_violations,
        s.invariant_breaches,
        s.episodes_with_breaches,
        s.overrides,
        s.override_rate,
        s.deadlocks,
        s.aborts,
        s.episodes_discharged,
        opt(s.mean_discharge_step)
    )
}

pub fn cmd_run(args: &RunArgs) -> Result<bool> {
    let s = build(&args.config, &args.overrides)?;
    let batch = run_batch_seeded(&s, episode_seeds(s.seed, s.episodes));
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for (i, t) in batch.traces.iter().enumerate() {
        let path = args.out.join(trace_file_name(i, t.header.seed));
        std::fs::write(&path, t.to_jsonl()).with_context(|| format!("writing {}", path.display()))?;
    }
    std::fs::write(args.out.join("summary.csv"), summary_csv(&batch))?;
    std::fs::write(args.out.join("batch.csv"), batch_csv(&batch))?;

    let sm = &batch.summary;
    println!(
        "{} episode(s), {} steps, shield {}: {} violation step(s) in {} episode(s), override rate {:.4}, {} deadlock(s), {} abort(s)",
        sm.episodes,
        sm.steps,
        s.shield,
        sm.violations,
        sm.episodes_with_violations,
        sm.override_rate,
        sm.deadlocks,
        sm.aborts
    );
    match sm.mean_discharge_step {
        Some(d) => println!("finite-time obligations discharged in {} episode(s), mean step {d}", sm.episodes_discharged),
        None => println!("no episode discharged every finite-time obligation"),
    }
    println!("traces and summaries written to {}", args.out.display());
    let aborted = batch
        .traces
        .iter()
        .any(|t| matches!(t.end.termination, Termination::AbortedOnViolation { .. } | Termination::ZeroLikelihood { .. }));
    Ok(!aborted && !(args.strict && sm.deadlocks > 0))
}

pub fn cmd_audit(trace_path: &Path, config_path: &Path) -> Result<bool> {
    let s = build(config_path, &Overrides { seed: None, episodes: None, horizon: None, shield: None })?;
    let text = std::fs::read_to_string(trace_path).with_context(|| format!("reading {}", trace_path.display()))?;
    let trace = Trace::from_jsonl(&text).with_context(|| format!("parsing {}", trace_path.display()))?;
    let report = audit(&trace, &s).with_context(|| format!("auditing {}", trace_path.display()))?;
    println!(
        "{} steps, terminated by {}, monitor {}, obligations {}",
        report.steps,
        report.termination,
        if report.all_passed { "passed every step" } else { "failed at least one step" },
        if report.all_discharged { "all discharged" } else { "not all discharged" }
    );
    for c in &report.conjuncts {
        println!(
            "  [{}] {:?} {}: oracle {}, monitor {}{}{}",
            c.id,
            c.kind,
            c.label,
            c.oracle,
            if c.monitor_passed { "pass" } else { "fail" },
            if c.discharged { ", discharged" } else { "" },
            if c.belief_only { "" } else { " (mentions hidden states)" }
        );
    }
    let bad = report.counterexamples();
    if !bad.is_empty() {
        println!("monitor accepted but oracle rejected: {}", bad.iter().map(|c| c.label.as_str()).collect::<Vec<_>>().join(", "));
    }
    Ok(bad.is_empty())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<bool> {
    let cfg = load(&args.config)?;
    let pick = |v: &Vec<f64>, default: f64| if v.is_empty() { vec![default] } else { v.clone() };
    let grid = SweepGrid {
        gamma: pick(&args.gamma, cfg.monitor.gamma),
        rho: pick(&args.rho, cfg.monitor.rho),
        eps: pick(&args.eps, cfg.monitor.eps),
        delta: pick(&args.delta, cfg.monitor.delta),
    };
    if let Err(e) = grid.configs() {
        bail!("invalid grid point: {e}");
    }
    let s = build(&args.config, &args.overrides)?;
    let rows = sweep(&s, &grid, s.episodes)?;
    let csv = to_csv(&rows);
    match &args.out {
        Some(path) => std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(true)
}
