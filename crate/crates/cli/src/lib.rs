//! Batch front end: load a case and scenario set, build and solve the
//! model, audit the result, and write the reporting artifacts.

pub mod pipeline;
pub mod report;

pub use pipeline::{
    load_inputs, solve_case, CaseInputs, ExitCode, RunConfig, SolvedCase, SweepRow, TimingRow,
};
pub use report::{export_schedules, sig6, write_cost_report, write_scalability, write_sweep};

use scopf_nlp::ObjectiveMode;

/// Objective-mode flag value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArg {
    Production,
    Redispatch,
}

impl ModeArg {
    pub fn to_objective(self) -> ObjectiveMode {
        match self {
            ModeArg::Production => ObjectiveMode::ProductionQuadratic,
            ModeArg::Redispatch => ObjectiveMode::RedispatchLinear,
        }
    }
}

impl std::str::FromStr for ModeArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "production" => Ok(ModeArg::Production),
            "redispatch" => Ok(ModeArg::Redispatch),
            other => Err(format!("unknown mode `{other}`, expected production|redispatch")),
        }
    }
}
