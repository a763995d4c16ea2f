//! Network data model for multi-period security-constrained OPF studies.
//!
//! Everything downstream of this crate works on a [`NormalizedNetwork`]: a
//! validated, per-unit view of the raw case data with per-contingency
//! admittance terms precomputed. The raw [`Network`] keeps the original
//! engineering units (MW, MVAr, Ω, µS, A, kV, MWh) so round trips back to
//! physical quantities are exact.

mod admittance;
mod parse;
mod per_unit;
mod types;
mod validate;

pub use admittance::AdmittanceView;
pub use parse::parse_case;
pub use per_unit::{
    to_per_unit, NormalizedNetwork, PuBranch, PuBus, PuFlexibleLoad, PuGenerator, PuResPlant,
    PuStorage,
};
pub use types::{
    Branch, Bus, ContingencySpec, FlexibleLoad, Generator, Network, ResPlant, StorageUnit,
};
pub use validate::{validate_network, Diagnostic};

use thiserror::Error;

/// Errors produced while loading or normalizing a case.
#[derive(Debug, Error)]
pub enum GridError {
    /// The case document does not match the schema.
    #[error("case parse error: {0}")]
    Parse(String),
    /// One or more data invariants are violated.
    #[error("case validation failed:\n{}", format_diagnostics(.0))]
    Validation(Vec<Diagnostic>),
    /// A contingency state disconnects part of the network.
    #[error("contingency state {state} islands buses {buses:?}")]
    Islanded { state: usize, buses: Vec<u32> },
    /// A contingency state index outside `0..num_states`.
    #[error("contingency state {0} does not exist")]
    UnknownState(usize),
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("  - {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}
