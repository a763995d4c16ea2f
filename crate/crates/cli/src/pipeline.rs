//! Input loading, case solving and the batch drivers.

use std::path::{Path, PathBuf};

use scopf_audit::{check_exclusivity, check_feasibility, FeasibilityReport};
use scopf_grid::{parse_case, to_per_unit, Network, NormalizedNetwork};
use scopf_ipm::{solve, SolveStatus, SolverOptions, SolverResult};
use scopf_nlp::{case_variant, CostBreakdown, DispatchSchedule, ObjectiveMode, ScopfProblem};
use scopf_scenario::{load_scenarios, LoadProfileSet, ScenarioSet};

/// Process exit codes of the batch runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    NotConverged = 2,
    AuditFailed = 3,
    InputError = 4,
}

/// One fully specified study.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub case_path: PathBuf,
    pub scenario_path: PathBuf,
    pub mode: ObjectiveMode,
    pub res_capacity: Option<f64>,
    pub enable_ess: bool,
    pub enable_fl: bool,
    pub replicate: Option<usize>,
    pub tol: f64,
    pub max_iter: usize,
    pub out_dir: Option<PathBuf>,
    pub log_iterations: bool,
}

impl RunConfig {
    pub fn new(case_path: impl Into<PathBuf>, scenario_path: impl Into<PathBuf>) -> Self {
        Self {
            case_path: case_path.into(),
            scenario_path: scenario_path.into(),
            mode: ObjectiveMode::ProductionQuadratic,
            res_capacity: None,
            enable_ess: false,
            enable_fl: false,
            replicate: None,
            tol: 1e-5,
            max_iter: 500,
            out_dir: None,
            log_iterations: false,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            log: self.log_iterations,
            ..Default::default()
        }
    }
}

/// Parsed and validated inputs, before any case-study filtering.
pub struct CaseInputs {
    pub network: Network,
    pub scenarios: ScenarioSet,
    pub loads: LoadProfileSet,
}

/// Read the case and scenario documents. The horizon is the number of data
/// rows in the profile document; scenario replication applies afterwards.
pub fn load_inputs(config: &RunConfig) -> Result<CaseInputs, String> {
    let case_text = std::fs::read_to_string(&config.case_path)
        .map_err(|e| format!("cannot read case {}: {e}", config.case_path.display()))?;
    let network = parse_case(&case_text).map_err(|e| e.to_string())?;

    let scen_text = std::fs::read_to_string(&config.scenario_path)
        .map_err(|e| format!("cannot read scenarios {}: {e}", config.scenario_path.display()))?;
    let horizon = scen_text
        .lines()
        .filter(|l| {
            let l = l.split('#').next().unwrap_or("").trim();
            !l.is_empty() && !l.to_ascii_lowercase().starts_with("probabilities")
        })
        .count();
    if horizon == 0 {
        return Err("scenario document has no data rows".into());
    }
    let mut scenarios = load_scenarios(&scen_text, horizon).map_err(|e| e.to_string())?;
    if let Some(count) = config.replicate {
        if count == 0 {
            return Err("replication count must be at least 1".into());
        }
        scenarios = scenarios.replicate(count);
    }
    let loads = LoadProfileSet::uniform(horizon);
    Ok(CaseInputs { network, scenarios, loads })
}

/// Build the configured case variant in per-unit form.
pub fn build_variant(config: &RunConfig, inputs: &CaseInputs) -> Result<NormalizedNetwork, String> {
    if config.enable_ess && inputs.network.storage.is_empty() {
        return Err("--enable-ess set but the case has no storage".into());
    }
    if config.enable_fl && inputs.network.flexible_loads.is_empty() {
        return Err("--enable-fl set but the case has no flexible loads".into());
    }
    let variant = case_variant(
        &inputs.network,
        config.enable_ess,
        config.enable_fl,
        config.res_capacity,
    )
    .map_err(|e| e.to_string())?;
    to_per_unit(&variant, 100.0).map_err(|e| e.to_string())
}

/// One solved instance with its audit.
pub struct SolvedCase {
    pub problem: ScopfProblem,
    pub network: NormalizedNetwork,
    pub result: SolverResult,
    pub schedule: DispatchSchedule,
    pub costs: CostBreakdown,
    pub audit: FeasibilityReport,
    pub audit_passes: bool,
    pub exclusivity_ok: bool,
}

impl SolvedCase {
    pub fn converged(&self) -> bool {
        self.result.status == SolveStatus::Converged
    }

    pub fn exit_code(&self) -> ExitCode {
        if !self.converged() {
            ExitCode::NotConverged
        } else if !self.audit_passes {
            ExitCode::AuditFailed
        } else {
            ExitCode::Ok
        }
    }
}

/// Solve one configured case end to end: build, solve, audit.
pub fn solve_case(config: &RunConfig, inputs: &CaseInputs) -> Result<SolvedCase, String> {
    let network = build_variant(config, inputs)?;
    let problem =
        ScopfProblem::build(&network, &inputs.scenarios, &inputs.loads, config.mode)
            .map_err(|e| e.to_string())?;
    let result = solve(&problem, &config.solver_options()).map_err(|e| e.to_string())?;
    let schedule = DispatchSchedule::from_solution(&problem, &result.iterate.x);
    let costs = CostBreakdown::from_solution(&problem, &result.iterate.x);
    let audit = check_feasibility(&network, &inputs.scenarios, &inputs.loads, &schedule, config.tol);
    // Converged points must satisfy the audit at 10x solver tolerance; the
    // acceptance bar is the tolerance itself, checked by callers.
    let audit_passes = audit.passes(config.tol);
    let (exclusivity_ok, _) = check_exclusivity(&schedule, 1e-4);
    Ok(SolvedCase {
        problem,
        network,
        result,
        schedule,
        costs,
        audit,
        audit_passes,
        exclusivity_ok,
    })
}

/// One sweep result row.
pub struct SweepRow {
    pub capacity_mw: f64,
    pub outcome: Result<SolvedCase, String>,
}

/// Solve one instance per RES capacity, in input order. Failures are
/// recorded and the sweep continues; rows run as independent solves.
pub fn sweep_res_capacity(
    config: &RunConfig,
    inputs: &CaseInputs,
    capacities: &[f64],
) -> Vec<SweepRow> {
    use rayon::prelude::*;
    capacities
        .par_iter()
        .map(|&capacity_mw| {
            let row_config =
                RunConfig { res_capacity: Some(capacity_mw), log_iterations: false, ..config.clone() };
            SweepRow { capacity_mw, outcome: solve_case(&row_config, inputs) }
        })
        .collect()
}

/// One scalability row.
pub struct TimingRow {
    pub scenario_count: usize,
    pub status: SolveStatus,
    pub total_cost: f64,
    pub variables: usize,
    pub constraints: usize,
    pub iterations: usize,
    pub wall_seconds: f64,
}

/// Replicate the scenario set to each count, rebuild and solve, recording
/// size, cost and timing. Failed rows are recorded and the loop continues.
pub fn scalability_run(
    config: &RunConfig,
    inputs: &CaseInputs,
    counts: &[usize],
) -> Vec<TimingRow> {
    use rayon::prelude::*;
    counts
        .par_iter()
        .map(|&count| {
            let scaled = CaseInputs {
                network: inputs.network.clone(),
                scenarios: inputs.scenarios.replicate(count),
                loads: inputs.loads.clone(),
            };
            let row_config = RunConfig { log_iterations: false, ..config.clone() };
            match solve_case(&row_config, &scaled) {
                Ok(solved) => TimingRow {
                    scenario_count: count,
                    status: solved.result.status,
                    total_cost: solved.costs.total(),
                    variables: solved.problem.index().len(),
                    constraints: solved.problem.layout().len(),
                    iterations: solved.result.iterations,
                    wall_seconds: solved.result.wall_seconds,
                },
                Err(_) => TimingRow {
                    scenario_count: count,
                    status: SolveStatus::NumericFailure,
                    total_cost: f64::NAN,
                    variables: 0,
                    constraints: 0,
                    iterations: 0,
                    wall_seconds: 0.0,
                },
            }
        })
        .collect()
}

/// Parse `a:b:step` into an ascending capacity list.
pub fn parse_sweep_spec(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("sweep spec `{spec}` must look like start:end:step"));
    }
    let a: f64 = parts[0].parse().map_err(|_| "bad sweep start".to_string())?;
    let b: f64 = parts[1].parse().map_err(|_| "bad sweep end".to_string())?;
    let step: f64 = parts[2].parse().map_err(|_| "bad sweep step".to_string())?;
    if step <= 0.0 || b < a || a < 0.0 {
        return Err("sweep needs 0 <= start <= end and a positive step".into());
    }
    let mut out = Vec::new();
    let mut v = a;
    while v <= b + 1e-9 {
        out.push(v);
        v += step;
    }
    Ok(out)
}

/// Ensure the output directory exists, best effort.
pub fn ensure_out_dir(dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))
}
