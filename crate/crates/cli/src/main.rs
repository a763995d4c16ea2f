use std::path::PathBuf;
use std::process::ExitCode as ProcessExit;

use clap::Parser;
use scopf_cli::pipeline::{
    ensure_out_dir, load_inputs, parse_sweep_spec, scalability_run, solve_case,
    sweep_res_capacity, ExitCode, RunConfig,
};
use scopf_cli::report::{
    export_schedules, sig6, write_cost_report, write_scalability, write_sweep,
};
use scopf_cli::ModeArg;
use scopf_ipm::SolveStatus;

/// Stochastic multi-period security-constrained OPF batch runner.
#[derive(Parser, Debug)]
#[command(name = "scopf", version, about)]
struct Args {
    /// Case document (structured text).
    #[arg(long)]
    case: PathBuf,
    /// Scenario profile document.
    #[arg(long)]
    scenarios: PathBuf,
    /// Generator cost treatment.
    #[arg(long, default_value = "production")]
    mode: ModeArg,
    /// Override installed RES capacity (MW) for every plant.
    #[arg(long)]
    res_capacity: Option<f64>,
    /// Include storage units from the case.
    #[arg(long)]
    enable_ess: bool,
    /// Include flexible loads from the case.
    #[arg(long)]
    enable_fl: bool,
    /// Replicate the scenario set to this count (cycling, equiprobable).
    #[arg(long)]
    replicate: Option<usize>,
    /// Solver convergence tolerance.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    /// Solver iteration cap.
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solve one instance per RES capacity over `start:end:step` (MW).
    #[arg(long)]
    sweep: Option<String>,
    /// Scalability protocol: comma-separated scenario counts.
    #[arg(long, value_delimiter = ',')]
    scalability: Option<Vec<usize>>,
    /// Suppress per-iteration solver logging.
    #[arg(long, short)]
    quiet: bool,
}

fn main() -> ProcessExit {
    let args = Args::parse();

    // Worker cap for sweep and scalability rows.
    let threads = std::env::var("SCOPF_THREADS").ok().and_then(|v| v.parse::<usize>().ok());
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }

    match run(args) {
        Ok(code) => ProcessExit::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ProcessExit::from(ExitCode::InputError as u8)
        }
    }
}

fn run(args: Args) -> Result<ExitCode, String> {
    let config = RunConfig {
        case_path: args.case.clone(),
        scenario_path: args.scenarios.clone(),
        mode: args.mode.to_objective(),
        res_capacity: args.res_capacity,
        enable_ess: args.enable_ess,
        enable_fl: args.enable_fl,
        replicate: args.replicate,
        tol: args.tol,
        max_iter: args.max_iter,
        out_dir: args.out.clone(),
        log_iterations: !args.quiet && args.sweep.is_none() && args.scalability.is_none(),
    };
    let inputs = load_inputs(&config)?;

    if let Some(spec) = &args.sweep {
        let capacities = parse_sweep_spec(spec)?;
        let rows = sweep_res_capacity(&config, &inputs, &capacities);
        let mut stdout = std::io::stdout().lock();
        write_sweep(&rows, &mut stdout).map_err(|e| e.to_string())?;
        if let Some(dir) = &config.out_dir {
            ensure_out_dir(dir)?;
            let mut f = std::fs::File::create(dir.join("sweep.csv")).map_err(|e| e.to_string())?;
            write_sweep(&rows, &mut f).map_err(|e| e.to_string())?;
        }
        let mut code = ExitCode::Ok;
        for row in &rows {
            match &row.outcome {
                Ok(s) if !s.converged() => return Ok(ExitCode::NotConverged),
                Ok(s) if !s.audit_passes => code = ExitCode::AuditFailed,
                Ok(_) => {}
                Err(_) => return Ok(ExitCode::NotConverged),
            }
        }
        return Ok(code);
    }

    if let Some(counts) = &args.scalability {
        if counts.is_empty() || counts.contains(&0) {
            return Err("scalability counts must be positive".into());
        }
        let rows = scalability_run(&config, &inputs, counts);
        let mut stdout = std::io::stdout().lock();
        let mut timing_sink = Vec::new();
        write_scalability(&rows, &mut stdout, &mut timing_sink).map_err(|e| e.to_string())?;
        if let Some(dir) = &config.out_dir {
            ensure_out_dir(dir)?;
            let mut table =
                std::fs::File::create(dir.join("scalability.csv")).map_err(|e| e.to_string())?;
            let mut timing = std::fs::File::create(dir.join("scalability_timing.csv"))
                .map_err(|e| e.to_string())?;
            write_scalability(&rows, &mut table, &mut timing).map_err(|e| e.to_string())?;
        }
        let all_ok = rows.iter().all(|r| r.status == SolveStatus::Converged);
        return Ok(if all_ok { ExitCode::Ok } else { ExitCode::NotConverged });
    }

    // Single solve.
    let solved = solve_case(&config, &inputs)?;
    eprintln!(
        "status: {:?}, iterations: {}, wall: {:.1}s, objective: {} EUR",
        solved.result.status,
        solved.result.iterations,
        solved.result.wall_seconds,
        sig6(solved.result.objective),
    );
    if let Some(dir) = &config.out_dir {
        // Artifacts are written regardless of the solve outcome.
        ensure_out_dir(dir)?;
        let mut f =
            std::fs::File::create(dir.join("cost_report.csv")).map_err(|e| e.to_string())?;
        write_cost_report(&solved.costs, &mut f).map_err(|e| e.to_string())?;
        export_schedules(&solved.schedule, &dir.join("schedules")).map_err(|e| e.to_string())?;
        std::fs::write(dir.join("feasibility.txt"), solved.audit.to_text(config.tol))
            .map_err(|e| e.to_string())?;
    }
    if !solved.exclusivity_ok {
        eprintln!("warning: simultaneous charge/discharge above threshold detected");
    }
    Ok(solved.exit_code())
}
