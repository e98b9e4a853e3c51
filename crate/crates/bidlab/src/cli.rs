//! Command-line front-end.

use std::io::Write;
use std::path::{Path, PathBuf};

use bidlab_core::discretization::{
    choose_epsilon, discretization_error_bound, regret_bound, BoundInputs, BoundKind, DiscretizationConfig,
};
use bidlab_core::BidGrid;
use clap::{Args, Parser, Subcommand};

use crate::audit::bound_audit;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::harness::{run_scenario, ScenarioRun};
use crate::io::{format_number, write_aggregate, write_audit, write_traces};
use crate::presets;

#[derive(Debug, Parser)]
#[command(name = "bidlab", version, about = "No-regret bidding experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write trace and aggregate CSVs.
    Run(RunArgs),
    /// Run a scenario and also write the regret-bound audit report.
    Audit(RunArgs),
    /// Print the grid and the regret bounds for given constants.
    GridInfo(GridArgs),
    /// List the built-in scenario presets.
    ScenariosList,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file, or `preset:NAME`.
    #[arg(long)]
    pub scenario: String,
    #[arg(long, env = "BIDLAB_OUT", default_value = "bidlab-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Grid resolution; chosen from L, T and delta when omitted.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "L", default_value_t = 0.0)]
    pub lipschitz: f64,
    #[arg(long = "T", default_value_t = 1000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 1.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 2)]
    pub outcomes: usize,
}

/// Resolves `--scenario` into one or more configurations with overrides.
pub fn load_scenarios(spec: &str, seed: Option<u64>, reps: Option<usize>) -> Result<Vec<ScenarioConfig>> {
    let mut cfgs = match spec.strip_prefix("preset:") {
        Some(name) => presets::expand(name)?,
        None => vec![ScenarioConfig::load(Path::new(spec))?],
    };
    for cfg in &mut cfgs {
        if let Some(s) = seed {
            cfg.seed = s;
        }
        if let Some(r) = reps {
            cfg.replications = r;
        }
        cfg.validate()?;
    }
    Ok(cfgs)
}

pub fn output_paths(out: &Path, name: &str) -> (PathBuf, PathBuf, PathBuf) {
    (
        out.join(format!("{name}.traces.csv")),
        out.join(format!("{name}.aggregate.csv")),
        out.join(format!("{name}.audit.csv")),
    )
}

fn summarize(run: &ScenarioRun, w: &mut dyn Write) -> Result<()> {
    let t = run.config.horizon;
    for l in &run.aggregate.learners {
        let last = l.mean.len() - 1;
        writeln!(
            w,
            "{} {:<14} T={t} mean={} p10={} p90={}",
            run.config.name,
            l.learner,
            format_number(l.mean[last]),
            format_number(l.p10[last]),
            format_number(l.p90[last])
        )
        .map_err(|e| Error::io(Path::new("<stdout>"), e))?;
    }
    Ok(())
}

fn run(args: &RunArgs, audit: bool, w: &mut dyn Write) -> Result<()> {
    let stdout = |e| Error::io(Path::new("<stdout>"), e);
    for cfg in load_scenarios(&args.scenario, args.seed, args.reps)? {
        let result = run_scenario(&cfg)?;
        let (traces, aggregate, audit_path) = output_paths(&args.out, &cfg.name);
        write_traces(&traces, &result.traces)?;
        write_aggregate(&aggregate, &result.aggregate)?;
        summarize(&result, w)?;
        if audit {
            let rows = bound_audit(&result)?;
            write_audit(&audit_path, &rows)?;
            for r in &rows {
                writeln!(
                    w,
                    "audit {} {:<20} empirical={} bound={} {}",
                    r.scenario,
                    r.learner,
                    format_number(r.empirical),
                    format_number(r.bound),
                    if r.pass { "PASS" } else { "FAIL" }
                )
                .map_err(stdout)?;
            }
        }
    }
    Ok(())
}

fn grid_info(args: &GridArgs, w: &mut dyn Write) -> Result<()> {
    let stdout = |e| Error::io(Path::new("<stdout>"), e);
    let dcfg = DiscretizationConfig::new(args.lipschitz, args.delta, args.horizon)?;
    let eps = args.epsilon.unwrap_or_else(|| choose_epsilon(&dcfg));
    let grid = BidGrid::uniform(eps)?;
    writeln!(w, "epsilon = {}", format_number(eps)).map_err(stdout)?;
    writeln!(w, "grid points = {}", grid.len()).map_err(stdout)?;
    match discretization_error_bound(eps, args.lipschitz, args.horizon, args.delta) {
        Ok(de) => writeln!(w, "discretization error <= {}", format_number(de)).map_err(stdout)?,
        Err(_) => writeln!(w, "discretization error: no guarantee, epsilon is not below delta").map_err(stdout)?,
    }
    let mut inputs = BoundInputs::new(args.horizon, grid.len(), args.outcomes);
    inputs.lipschitz = args.lipschitz;
    inputs.piece_width = args.delta;
    for kind in [BoundKind::WinOnly, BoundKind::Outcome, BoundKind::Continuous, BoundKind::Doubling] {
        if kind == BoundKind::WinOnly && args.outcomes != 2 {
            continue;
        }
        let b = regret_bound(kind, &inputs)?;
        writeln!(w, "{kind} regret bound = {}", format_number(b)).map_err(stdout)?;
    }
    Ok(())
}

fn scenarios_list(w: &mut dyn Write) -> Result<()> {
    let stdout = |e| Error::io(Path::new("<stdout>"), e);
    for name in presets::names() {
        let cfg = presets::preset(&name)?;
        writeln!(w, "{name:<32} {}", presets::describe(&cfg)).map_err(stdout)?;
    }
    for (family, members) in presets::families() {
        writeln!(w, "{family:<32} family: {}", members.join(" ")).map_err(stdout)?;
    }
    Ok(())
}

pub fn execute(cli: &Cli, w: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Run(args) => run(args, false, w),
        Command::Audit(args) => run(args, true, w),
        Command::GridInfo(args) => grid_info(args, w),
        Command::ScenariosList => scenarios_list(w),
    }
}
