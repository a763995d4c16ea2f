//! Assembly of the stochastic multi-period security-constrained OPF as a
//! sparse NLP.
//!
//! The decision space spans generator dispatch, rectangular bus voltages,
//! storage operation, flexible-load shifts and curtailments for every
//! scenario, period and contingency state. Network physics is enforced per
//! state through rectangular-coordinate injection expressions substituted
//! into the nodal balances; storage and flexible loads couple periods;
//! corrective dispatch is tied to the preventive schedule per state.

mod index;
mod layout;
mod problem;
mod schedule;

pub use index::{Dims, VarKey, VarKind, VariableIndex};
pub use layout::{ConstraintLayout, RowKind, RowTag};
pub use problem::ScopfProblem;
pub use schedule::{CostBreakdown, DispatchSchedule};

use scopf_grid::{GridError, Network};
use thiserror::Error;

/// Generator cost treatment in the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveMode {
    /// Quadratic production cost on the preventive dispatch.
    ProductionQuadratic,
    /// Linear price on the absolute deviation from the market schedule,
    /// modeled with a nonnegative up/down split.
    RedispatchLinear,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{0}")]
    Shape(String),
    #[error("market data missing: {0}")]
    MissingMarketData(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Derive a case-study variant: optionally drop storage or flexible loads
/// and override installed RES capacity (MW). The result is re-validated.
pub fn case_variant(
    net: &Network,
    enable_ess: bool,
    enable_fl: bool,
    res_capacity: Option<f64>,
) -> Result<Network, GridError> {
    let storage = if enable_ess { net.storage.clone() } else { Vec::new() };
    let flexible_loads = if enable_fl { net.flexible_loads.clone() } else { Vec::new() };
    let mut res_plants = net.res_plants.clone();
    if let Some(cap) = res_capacity {
        for plant in res_plants.iter_mut() {
            plant.capacity = cap;
        }
    }
    Network::new(
        net.buses.clone(),
        net.branches.clone(),
        net.generators.clone(),
        storage,
        flexible_loads,
        res_plants,
        net.contingencies.clone(),
    )
}
