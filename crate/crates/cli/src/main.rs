//! `ader`: run a scenario in one scheduler mode and write metrics,
//! the final solution and a manifest; or run a convergence study.
//!
//! Exit status: 0 ok, 2 configuration error, 3 numerical failure.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use ader_core::metrics::single_touch_audit;
use ader_core::scenario::{convergence_study, StudyTemplate};
use ader_core::scheduler::{Domain, SimError, Simulation, StepReport};
use clap::Parser;
use serde::Serialize;
use thiserror::Error;

use config::{RunConfig, Validated, DEFAULT_STEPS};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("numerical failure at step {step}: {source}")]
    Numerical { step: u64, source: SimError },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Numerical { .. } => 3,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e.step() {
            Some(step) if e.is_numerical() => CliError::Numerical { step, source: e },
            _ if e.is_numerical() => CliError::Numerical { step: 0, source: e },
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ader", about = "ADER-DG solver with fused single-touch time stepping")]
struct Args {
    /// key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// straightforward | shifted | fused
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    steps: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pin every time step to this size
    #[arg(long = "force-dt")]
    force_dt: Option<f64>,
    #[arg(long)]
    parallel: bool,
    #[arg(long)]
    limiter: bool,
    /// Also write trace.csv
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    scenario: Option<String>,
    /// Comma-separated grid depths; runs a convergence study instead
    #[arg(long)]
    convergence: Option<String>,
    /// Extra key=value settings, applied after the file
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn configure(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        cfg.load(path)?;
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(m) = &args.mode {
        cfg.set("mode", m)?;
    }
    if let Some(n) = args.steps {
        cfg.steps = Some(n);
        cfg.final_time = None;
    }
    if let Some(o) = &args.out {
        cfg.out = o.clone();
    }
    if let Some(dt) = args.force_dt {
        cfg.force_dt = Some(dt);
    }
    if let Some(s) = &args.scenario {
        cfg.scenario = s.clone();
    }
    if let Some(levels) = &args.convergence {
        cfg.convergence = config::parse_levels(levels)?;
    }
    cfg.parallel |= args.parallel;
    cfg.limiter |= args.limiter;
    cfg.trace |= args.trace;
    Ok(cfg)
}

#[derive(Serialize)]
struct Manifest<'a> {
    status: &'a str,
    error: Option<String>,
    config: &'a RunConfig,
    cells: usize,
    steps: u64,
    t: f64,
    sweeps: u64,
    reruns: u64,
    troubled: usize,
    q_reads_per_cell_step: Option<f64>,
    memory_traffic: u64,
    files: Vec<&'a str>,
}

fn run(cfg: &RunConfig, v: Validated) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out)?;
    let Validated { scenario, boundary, sim: sim_cfg } = v;
    let domain = Domain { dim: cfg.dim, depth: cfg.depth, order: cfg.order, boundary };
    let mut sim = Simulation::new(scenario.system.clone(), domain, sim_cfg, |x| scenario.initial(x))?;
    if let Some((step, f)) = scenario.injection() {
        sim.set_injection(step, f);
    }

    let mut reports: Vec<StepReport> = Vec::new();
    let mut failure = None;
    loop {
        let done = match cfg.final_time {
            Some(t) => sim.time().t >= t,
            None => reports.len() as u64 >= cfg.steps.unwrap_or(DEFAULT_STEPS),
        };
        if done {
            break;
        }
        match sim.step() {
            Ok(r) => reports.push(r),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }

    let cells = sim.grid().cell_count();
    let mut files = vec!["metrics.csv", "manifest.json"];
    output::write(&cfg.out, "metrics.csv", &output::metrics_csv(&reports, cells))?;
    if failure.is_none() {
        output::write(&cfg.out, "solution_final.csv", &output::solution_csv(&sim))?;
        files.push("solution_final.csv");
    }
    if cfg.trace {
        output::write(&cfg.out, "trace.csv", &output::trace_csv(&sim.trace().records()))?;
        files.push("trace.csv");
    }
    let audit = single_touch_audit(sim.ledger(), cells);
    let manifest = Manifest {
        status: if failure.is_some() { "numerical-failure" } else { "ok" },
        error: failure.as_ref().map(|e| e.to_string()),
        config: cfg,
        cells,
        steps: sim.steps(),
        t: sim.time().t,
        sweeps: sim.sweeps(),
        reruns: sim.reruns(),
        troubled: sim.troubled_cells(),
        q_reads_per_cell_step: audit.map(|a| a.as_f64()),
        memory_traffic: sim.ledger().totals().memory_traffic(),
        files,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.into()))?;
    output::write(&cfg.out, "manifest.json", &(json + "\n"))?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn study(cfg: &RunConfig, v: Validated) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out)?;
    let sc = &v.scenario;
    let initial = |x: &[f64]| sc.initial(x);
    let exact = |x: &[f64], t: f64| sc.exact(x, t).expect("checked during validation");
    let template = StudyTemplate {
        system: sc.system.clone(),
        order: cfg.order,
        final_time: cfg.final_time.unwrap_or(0.2),
        safety: cfg.safety,
        initial: &initial,
        exact: &exact,
    };
    let table = convergence_study(&template, &cfg.convergence)?;
    output::write(&cfg.out, "convergence.csv", &output::convergence_csv(&table))?;
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = configure(&args).and_then(|cfg| {
        let v = cfg.validate()?;
        if cfg.convergence.is_empty() {
            run(&cfg, v)
        } else {
            study(&cfg, v)
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ader: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
