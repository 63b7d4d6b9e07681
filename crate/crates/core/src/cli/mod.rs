//! Command-line front end: `solve`, `simulate`, `sweep`, `verify`, `oracle`.
//!
//! Every command reads an optional JSON [`ExperimentConfig`] and applies
//! flag overrides on top. Exit codes: 0 success, 1 validation error,
//! 2 non-convergence, 3 hard verification failure.

mod commands;
mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_oracle, cmd_simulate, cmd_solve, cmd_sweep, cmd_verify, default_verify_grid, OracleComparison, SimulateOutput,
    SolveOutput, SweepOutput, SweepRow, VerifyOutput, VerifyPoint,
};
pub use config::{Axis, ExperimentConfig, ParamSpec, PolicyName, Preset, SweepSpec, CAP_FACTOR};

use crate::solver::Method;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    NonConvergence(String),
    #[error("{0}")]
    Verification(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::NonConvergence(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "taoi",
    about = "TAoI-optimal transmission scheduling for remote monitoring",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the optimal policy and print the solution JSON.
    Solve(CommonArgs),
    /// Simulate one policy and compare against its exact value.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value = "optimal")]
        policy: PolicyName,
        /// Record the first N steps of replication 0.
        #[arg(long, requires = "trace_out")]
        trace: Option<usize>,
        /// CSV destination for the trace.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Sweep t_u or q and write one CSV row per (point, policy).
    Sweep(CommonArgs),
    /// Check structural properties of the solution over a parameter grid.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Verify only the configured point instead of the default grid.
        #[arg(long)]
        single: bool,
    },
    /// Compare value iteration against exhaustive policy enumeration.
    Oracle(CommonArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub pa: Option<f64>,
    #[arg(long)]
    pub pb: Option<f64>,
    #[arg(long)]
    pub tu: Option<usize>,
    #[arg(long)]
    pub delta_max: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub slots: Option<u64>,
    #[arg(long)]
    pub warmup: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Accept instances where one pre-identification outcome never occurs.
    #[arg(long)]
    pub allow_null_outcome: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum MethodArg {
    Rvi,
    Threshold,
}

impl CommonArgs {
    pub fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(p) = self.preset {
            cfg.preset = Some(p);
            cfg.params = p.base();
            cfg.sweep = SweepSpec::default();
        }
        let spec = &mut cfg.params;
        if let Some(v) = self.q {
            spec.q = v;
        }
        if let Some(v) = self.pa {
            spec.p_a = v;
        }
        if let Some(v) = self.pb {
            spec.p_b = v;
        }
        if let Some(v) = self.tu {
            spec.t_u = v;
        }
        if let Some(v) = self.delta_max {
            spec.delta_max = Some(v);
        }
        if self.allow_null_outcome {
            spec.allow_null_outcome = true;
        }
        if let Some(v) = self.epsilon {
            cfg.solver.epsilon = v;
        }
        if let Some(v) = self.tol {
            cfg.solver.tol = v;
        }
        if let Some(v) = self.max_iters {
            cfg.solver.max_iters = v;
        }
        if let Some(m) = self.method {
            cfg.method = match m {
                MethodArg::Rvi => Method::Rvi,
                MethodArg::Threshold => Method::Threshold,
            };
        }
        if let Some(v) = self.seed {
            cfg.sim.seed = v;
        }
        if let Some(v) = self.slots {
            cfg.sim.total_slots = v;
        }
        if let Some(v) = self.warmup {
            cfg.sim.warmup_slots = Some(v);
        }
        if let Some(v) = self.reps {
            cfg.sim.replications = v;
        }
        if let Some(o) = &self.out {
            cfg.output = Some(o.clone());
        }
        cfg.solver.validate()?;
        Ok(cfg)
    }
}

fn emit(path: Option<&Path>, body: &str, stdout: &mut dyn Write) -> Result<bool, CliError> {
    match path {
        Some(p) => {
            fs::write(p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Ok(true)
        }
        None => {
            stdout
                .write_all(body.as_bytes())
                .map_err(|e| CliError::Io(e.to_string()))?;
            Ok(false)
        }
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match cli.command {
        Command::Solve(args) => {
            let cfg = args.load()?;
            let out = cmd_solve(&cfg)?;
            let to_file = emit(cfg.output.as_deref(), &pretty(&out.json), stdout)?;
            let summary = out.summary();
            if to_file {
                writeln!(stdout, "{summary}").map_err(io)?;
            } else {
                writeln!(stderr, "{summary}").map_err(io)?;
            }
        }
        Command::Simulate {
            common,
            policy,
            trace,
            trace_out,
        } => {
            let cfg = common.load()?;
            let out = cmd_simulate(&cfg, policy, trace)?;
            if let (Some(records), Some(path)) = (&out.trace, &trace_out) {
                let file = fs::File::create(path).map_err(io)?;
                crate::simulator::write_trace_csv(records, file).map_err(|e| CliError::Io(e.to_string()))?;
            }
            emit(cfg.output.as_deref(), &pretty(&out), stdout)?;
        }
        Command::Sweep(args) => {
            let cfg = args.load()?;
            let out = cmd_sweep(&cfg)?;
            emit(cfg.output.as_deref(), &out.to_csv()?, stdout)?;
            let meta = pretty(&out.metadata);
            match &cfg.output {
                Some(p) => {
                    let mut m = p.clone().into_os_string();
                    m.push(".meta.json");
                    fs::write(&m, meta).map_err(io)?;
                }
                None => stderr.write_all(meta.as_bytes()).map_err(io)?,
            }
            if out.failed() > 0 {
                writeln!(stderr, "{} sweep rows failed", out.failed()).map_err(io)?;
            }
        }
        Command::Verify { common, single } => {
            let cfg = common.load()?;
            let grid = if single { None } else { Some(default_verify_grid()) };
            let out = cmd_verify(&cfg, grid)?;
            emit(cfg.output.as_deref(), &pretty(&out.points), stdout)?;
            let failures = out.hard_failures();
            if failures > 0 {
                return Err(CliError::Verification(format!(
                    "{failures} grid point(s) failed the threshold or monotonicity check"
                )));
            }
        }
        Command::Oracle(args) => {
            let cfg = args.load()?;
            let out = cmd_oracle(&cfg)?;
            emit(cfg.output.as_deref(), &pretty(&out), stdout)?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return 1;
            }
            let _ = write!(stdout, "{e}");
            return 0;
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
