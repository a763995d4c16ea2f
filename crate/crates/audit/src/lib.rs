//! Independent verification of candidate solutions.
//!
//! Everything here re-evaluates the physical equations with naive scalar
//! code working straight off the network data: injections go through
//! complex arithmetic on a bus admittance matrix rebuilt from branch
//! impedances, not through the formulation crate's expression paths. The
//! finite-difference checker and the exhaustive mini-case search provide
//! the oracles the solver is accepted against.

mod brute;
mod fd;
mod feasibility;

pub use brute::{brute_force_mini, MiniError, MiniOptimum};
pub use fd::{fd_check, FdReport};
pub use feasibility::{
    check_exclusivity, check_feasibility, FamilyCheck, FeasibilityReport, Offender,
};
