use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::kernel::build_transitions;
use crate::model::SystemParams;
use crate::policies::{ActionTable, PolicyKind, Thresholds};
use crate::simulator::{self, SimResult, TraceRecord};
use crate::solver::{self, brute_force_optimal, evaluate_policy_exact, extract_thresholds, verify_structure};
use crate::solver::{LemmaReport, Solution, ORACLE_STATE_GUARD};

use super::config::{Axis, ExperimentConfig, PolicyName, CAP_FACTOR};
use super::CliError;

fn solve_point(
    params: &SystemParams<f64>,
    cfg: &ExperimentConfig,
) -> Result<(crate::kernel::UniformizedMdp<f64>, Solution<f64>), CliError> {
    let (mdp, sol) = solver::solve(params, &cfg.solver, cfg.method)?;
    if !sol.converged {
        return Err(CliError::NonConvergence(format!(
            "no convergence after {} iterations (residual {:e}) for {}",
            sol.iters,
            sol.residual,
            serde_json::to_string(params).unwrap_or_default()
        )));
    }
    Ok((mdp, sol))
}

pub struct SolveOutput {
    pub solution: Solution<f64>,
    pub json: Value,
}

impl SolveOutput {
    pub fn summary(&self) -> String {
        let s = &self.solution;
        let (f0, f1) = match s.thresholds {
            Some(t) => (t.f0.to_string(), t.f1.to_string()),
            None => ("n/a".into(), "n/a".into()),
        };
        let ordering = match s.thresholds.map(|t| (t.f0.value(), t.f1.value())) {
            Some((Some(a), Some(b))) => {
                if b <= a {
                    "yes"
                } else {
                    "no"
                }
            }
            Some((None, _)) => "yes",
            Some((Some(_), None)) => "no",
            None => "n/a",
        };
        format!(
            "gain {:.9} | threshold F0 {f0} | threshold F1 {f1} | F1 <= F0: {ordering} | iters {} | residual {:e}",
            s.gain, s.iters, s.residual
        )
    }
}

pub fn cmd_solve(cfg: &ExperimentConfig) -> Result<SolveOutput, CliError> {
    let params = cfg.params.resolve()?;
    let (_, solution) = solve_point(&params, cfg)?;
    let json = solution.to_json();
    Ok(SolveOutput { solution, json })
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateOutput {
    pub params: SystemParams<f64>,
    pub policy: &'static str,
    pub thresholds: Option<Thresholds>,
    pub exact_avg_taoi: f64,
    pub sim: SimResult,
    pub within_3_stderr: bool,
    #[serde(skip)]
    pub trace: Option<Vec<TraceRecord>>,
}

fn resolve_policy(
    name: PolicyName,
    params: &SystemParams<f64>,
    cfg: &ExperimentConfig,
) -> Result<(PolicyKind, Option<Solution<f64>>), CliError> {
    match name.baseline() {
        Some(kind) => Ok((kind, None)),
        None => {
            let (_, sol) = solve_point(params, cfg)?;
            Ok((PolicyKind::Optimal(sol.policy.clone()), Some(sol)))
        }
    }
}

pub fn cmd_simulate(
    cfg: &ExperimentConfig,
    policy: PolicyName,
    trace_steps: Option<usize>,
) -> Result<SimulateOutput, CliError> {
    let params = cfg.params.resolve()?;
    let (kind, _) = resolve_policy(policy, &params, cfg)?;
    let smdp = build_transitions(&params)?;
    let table = kind.to_table(smdp.space())?;
    let exact = evaluate_policy_exact(&smdp, &table)?.avg_taoi;
    let sim = simulator::run(&params, &kind, &cfg.sim)?;
    let trace = trace_steps
        .map(|n| simulator::trace(&params, &kind, &cfg.sim, n))
        .transpose()?;
    Ok(SimulateOutput {
        params,
        policy: policy.label(),
        thresholds: extract_thresholds(&table, smdp.space()).ok(),
        exact_avg_taoi: exact,
        within_3_stderr: (sim.avg_taoi - exact).abs() <= 3.0 * sim.stderr,
        sim,
        trace,
    })
}

/// One CSV line of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: &'static str,
    pub axis_value: f64,
    pub policy: &'static str,
    /// `"failed"` when the point could not be solved or evaluated.
    pub exact_avg_taoi: String,
    pub sim_avg_taoi: Option<f64>,
    pub sim_stderr: Option<f64>,
    pub threshold_f0: Option<String>,
    pub threshold_f1: Option<String>,
    pub iters: Option<usize>,
}

impl SweepRow {
    pub fn exact(&self) -> Option<f64> {
        self.exact_avg_taoi.parse().ok()
    }
}

pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub metadata: Value,
}

impl SweepOutput {
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.exact_avg_taoi == "failed").count()
    }
}

fn sweep_point(axis: Axis, value: f64, params: &SystemParams<f64>, cfg: &ExperimentConfig) -> Vec<SweepRow> {
    let solved = if cfg.policies.contains(&PolicyName::Optimal) {
        Some(solve_point(params, cfg))
    } else {
        None
    };
    let smdp = build_transitions(params);
    cfg.policies
        .iter()
        .map(|&name| {
            let mut row = SweepRow {
                axis: axis.label(),
                axis_value: value,
                policy: name.label(),
                exact_avg_taoi: "failed".into(),
                sim_avg_taoi: None,
                sim_stderr: None,
                threshold_f0: None,
                threshold_f1: None,
                iters: None,
            };
            let kind = match (name.baseline(), &solved) {
                (Some(k), _) => k,
                (None, Some(Ok((_, sol)))) => {
                    row.iters = Some(sol.iters);
                    PolicyKind::Optimal(sol.policy.clone())
                }
                _ => return row,
            };
            let result = (|| -> Result<(f64, SimResult, Option<Thresholds>), CliError> {
                let smdp = smdp.as_ref().map_err(|e| CliError::from(e.clone()))?;
                let table = kind.to_table(smdp.space())?;
                let exact = evaluate_policy_exact(smdp, &table)?.avg_taoi;
                let sim = simulator::run(params, &kind, &cfg.sim)?;
                Ok((exact, sim, extract_thresholds(&table, smdp.space()).ok()))
            })();
            if let Ok((exact, sim, th)) = result {
                row.exact_avg_taoi = exact.to_string();
                row.sim_avg_taoi = Some(sim.avg_taoi);
                row.sim_stderr = Some(sim.stderr);
                row.threshold_f0 = th.map(|t| t.f0.to_string());
                row.threshold_f1 = th.map(|t| t.f1.to_string());
            }
            row
        })
        .collect()
}

/// Relative gain shift when the first sweep point is re-solved with twice
/// the default cap.
fn cap_sensitivity(params: &SystemParams<f64>, cfg: &ExperimentConfig) -> Value {
    let wide = match params.with_delta_max(2 * CAP_FACTOR * params.t_u()) {
        Ok(p) => p,
        Err(e) => return json!({ "error": e.to_string() }),
    };
    match (solve_point(params, cfg), solve_point(&wide, cfg)) {
        (Ok((_, a)), Ok((_, b))) => {
            let shift = (b.gain - a.gain).abs() / a.gain;
            json!({
                "t_u": params.t_u(),
                "q": params.q(),
                "delta_max": params.delta_max(),
                "gain": a.gain,
                "wide_delta_max": wide.delta_max(),
                "wide_gain": b.gain,
                "relative_shift": shift,
                "below_0.1_percent": shift < 1e-3,
            })
        }
        (Err(e), _) | (_, Err(e)) => json!({ "error": e.to_string() }),
    }
}

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput, CliError> {
    let axis = cfg.axis();
    let points = cfg.sweep_points()?;
    let rows: Vec<SweepRow> = points
        .par_iter()
        .map(|(v, p)| sweep_point(axis, *v, p, cfg))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let metadata = json!({
        "axis": axis.label(),
        "preset": cfg.preset,
        "preset_note": cfg.preset.map(|p| p.note()),
        "cap_rule": format!("delta_max = {CAP_FACTOR} * t_u unless pinned"),
        "solver": cfg.solver,
        "method": cfg.method,
        "sim": cfg.sim,
        "cap_sensitivity": points.first().map(|(_, p)| cap_sensitivity(p, cfg)),
    });
    Ok(SweepOutput { rows, metadata })
}

/// The grid checked by `verify` when no single point is requested.
pub fn default_verify_grid() -> Vec<SystemParams<f64>> {
    let mut out = Vec::new();
    for q in [0.5, 0.9] {
        for t_u in [2, 10, 100] {
            for p in [0.1, 0.3] {
                out.push(SystemParams::new(q, p, p, t_u, CAP_FACTOR * t_u).expect("grid point valid"));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub params: SystemParams<f64>,
    pub states: usize,
    pub policies_evaluated: usize,
    pub skipped_multichain: usize,
    pub oracle_value: f64,
    pub oracle_policy: ActionTable,
    pub rvi_gain: f64,
    pub rvi_policy_exact_value: f64,
    pub gap: f64,
    pub oracle_threshold_type: bool,
    pub oracle_thresholds: Option<Thresholds>,
}

fn oracle_compare(params: &SystemParams<f64>, cfg: &ExperimentConfig) -> Result<OracleComparison, CliError> {
    let smdp = build_transitions(params)?;
    let oracle = brute_force_optimal(&smdp)?;
    let (_, sol) = solve_point(params, cfg)?;
    let rvi_exact = evaluate_policy_exact(&smdp, &sol.policy)?.avg_taoi;
    let th = extract_thresholds(&oracle.policy, smdp.space()).ok();
    Ok(OracleComparison {
        params: *params,
        states: smdp.num_states(),
        policies_evaluated: oracle.evaluated,
        skipped_multichain: oracle.skipped_multichain,
        oracle_value: oracle.value,
        oracle_policy: oracle.policy,
        rvi_gain: sol.gain,
        rvi_policy_exact_value: rvi_exact,
        gap: (sol.gain - oracle.value).abs(),
        oracle_threshold_type: th.is_some(),
        oracle_thresholds: th,
    })
}

pub fn cmd_oracle(cfg: &ExperimentConfig) -> Result<OracleComparison, CliError> {
    let params = cfg.params.resolve()?;
    oracle_compare(&params, cfg)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyPoint {
    pub params: SystemParams<f64>,
    pub gain: f64,
    pub iters: usize,
    pub report: LemmaReport<f64>,
    pub oracle: Option<OracleComparison>,
}

pub struct VerifyOutput {
    pub points: Vec<VerifyPoint>,
}

impl VerifyOutput {
    pub fn hard_failures(&self) -> usize {
        self.points.iter().filter(|p| !p.report.hard_pass()).count()
    }
}

pub fn cmd_verify(cfg: &ExperimentConfig, grid: Option<Vec<SystemParams<f64>>>) -> Result<VerifyOutput, CliError> {
    let grid = match grid {
        Some(g) => g,
        None => vec![cfg.params.resolve()?],
    };
    let points = grid
        .par_iter()
        .map(|params| -> Result<VerifyPoint, CliError> {
            let (mdp, sol) = solve_point(params, cfg)?;
            let report = verify_structure(&sol, &mdp, &cfg.solver);
            let oracle = if params.num_states() <= ORACLE_STATE_GUARD {
                Some(oracle_compare(params, cfg)?)
            } else {
                None
            };
            Ok(VerifyPoint {
                params: *params,
                gain: sol.gain,
                iters: sol.iters,
                report,
                oracle,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VerifyOutput { points })
}
