use std::collections::HashMap;

use crate::validate::validate_network;
use crate::GridError;

/// A network node with its demand and voltage band.
#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    /// Node label as written in the case document.
    pub id: u32,
    /// Voltage magnitude bounds (p.u.).
    pub v_min: f64,
    pub v_max: f64,
    /// Nominal peak demand (MW, MVAr).
    pub p_load: f64,
    pub q_load: f64,
    /// Load-curtailment price (€/MWh).
    pub lc_cost: f64,
    /// Angle reference flag; exactly one bus carries it.
    pub is_slack_angle_ref: bool,
}

/// A transmission branch in series-impedance form.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: u32,
    pub to: u32,
    /// Series impedance (Ω).
    pub r: f64,
    pub x: f64,
    /// Total shunt susceptance of the branch (µS), split half per end.
    pub b_sh: f64,
    /// Thermal current limit (A).
    pub i_max: f64,
    /// Nominal voltage (kV), the voltage base for this branch.
    pub v_nom: f64,
}

/// A dispatchable conventional generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: u32,
    /// Dispatch bounds (MW, MVAr).
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    /// Maximum dispatch change per period, also the preventive/corrective gap (MW).
    pub ramp: f64,
    /// Quadratic production-cost coefficients (€/MWh², €/MWh, €).
    pub cost_a: f64,
    pub cost_b: f64,
    pub cost_c: f64,
    /// Linear price on deviation from the market schedule (€/MWh).
    pub redispatch_cost: Option<f64>,
    /// Market-cleared schedule per period (MW); empty when no market data.
    pub p_market: Vec<f64>,
}

/// An energy storage unit.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageUnit {
    pub bus: u32,
    /// Stored-energy bounds (MWh).
    pub soc_min: f64,
    pub soc_max: f64,
    /// Charge/discharge power bounds (MW).
    pub p_ch_max: f64,
    pub p_dis_max: f64,
    /// Efficiencies in (0, 1].
    pub eta_ch: f64,
    pub eta_dis: f64,
    /// Starting energy (MWh), used to seed iterates.
    pub soc_initial: f64,
    /// Activation price (€/MWh of charged or discharged energy).
    pub cost: f64,
}

/// A load able to shift energy across periods.
#[derive(Debug, Clone, PartialEq)]
pub struct FlexibleLoad {
    pub bus: u32,
    /// Shift bounds (MW).
    pub p_inc_max: f64,
    pub p_dec_max: f64,
    /// Activation price (€/MWh shifted).
    pub cost: f64,
}

/// A renewable plant whose availability follows the scenario profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct ResPlant {
    pub bus: u32,
    /// Rated power (MW).
    pub capacity: f64,
    /// Curtailment price (€/MWh).
    pub gc_cost: f64,
}

/// The postulated operation states: state 0 is the intact network, each
/// further state removes exactly one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencySpec {
    outages: Vec<usize>,
}

impl ContingencySpec {
    /// Build from branch indices (one per contingency state). State 0 is
    /// implicit and always present.
    pub fn new(outages: Vec<usize>) -> Self {
        Self { outages }
    }

    pub fn none() -> Self {
        Self { outages: Vec::new() }
    }

    /// Number of states including the intact state 0.
    pub fn num_states(&self) -> usize {
        self.outages.len() + 1
    }

    /// Branch removed in state `k`, `None` for the intact state.
    pub fn removed_branch(&self, k: usize) -> Option<usize> {
        if k == 0 {
            None
        } else {
            self.outages.get(k - 1).copied()
        }
    }

    pub fn outages(&self) -> &[usize] {
        &self.outages
    }
}

/// A parsed and validated case in engineering units.
#[derive(Debug, Clone)]
pub struct Network {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    pub storage: Vec<StorageUnit>,
    pub flexible_loads: Vec<FlexibleLoad>,
    pub res_plants: Vec<ResPlant>,
    pub contingencies: ContingencySpec,
    bus_index: HashMap<u32, usize>,
}

impl Network {
    /// Assemble a network, rejecting it when any invariant fails.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
        storage: Vec<StorageUnit>,
        flexible_loads: Vec<FlexibleLoad>,
        res_plants: Vec<ResPlant>,
        contingencies: ContingencySpec,
    ) -> Result<Self, GridError> {
        let bus_index = buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id, i))
            .collect::<HashMap<_, _>>();
        let net = Self {
            buses,
            branches,
            generators,
            storage,
            flexible_loads,
            res_plants,
            contingencies,
            bus_index,
        };
        let diags = validate_network(&net);
        if diags.is_empty() {
            Ok(net)
        } else {
            Err(GridError::Validation(diags))
        }
    }

    /// Index of the bus with the given label.
    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.bus_index.get(&id).copied()
    }

    /// Index of the angle-reference bus.
    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.is_slack_angle_ref)
            .expect("validated network has a reference bus")
    }
}
