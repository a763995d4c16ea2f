use serde::Deserialize;

use crate::types::{
    Branch, Bus, ContingencySpec, FlexibleLoad, Generator, Network, ResPlant, StorageUnit,
};
use crate::GridError;

/// Raw case document. Field names and units are fixed: MW, MVAr, Ω, µS, A,
/// kV, MWh, €/MWh. Curtailment prices may be omitted; they then default to
/// ten times the most expensive generator's marginal price at `p_max`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseDoc {
    #[serde(default)]
    buses: Vec<BusRec>,
    #[serde(default)]
    branches: Vec<BranchRec>,
    #[serde(default)]
    generators: Vec<GeneratorRec>,
    #[serde(default)]
    storage: Vec<StorageRec>,
    #[serde(default)]
    flexible_loads: Vec<FlexibleLoadRec>,
    #[serde(default)]
    res_plants: Vec<ResPlantRec>,
    #[serde(default)]
    contingencies: Vec<ContingencyRec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusRec {
    id: u32,
    v_min: f64,
    v_max: f64,
    #[serde(default)]
    p_load: f64,
    #[serde(default)]
    q_load: f64,
    lc_cost: Option<f64>,
    #[serde(default)]
    is_slack_angle_ref: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BranchRec {
    from: u32,
    to: u32,
    r: f64,
    x: f64,
    b_sh: f64,
    i_max: f64,
    v_nom: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorRec {
    bus: u32,
    p_min: f64,
    p_max: f64,
    q_min: f64,
    q_max: f64,
    ramp: f64,
    cost_a: f64,
    cost_b: f64,
    cost_c: f64,
    redispatch_cost: Option<f64>,
    #[serde(default)]
    p_market: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StorageRec {
    bus: u32,
    soc_min: f64,
    soc_max: f64,
    p_ch_max: f64,
    p_dis_max: f64,
    eta_ch: f64,
    eta_dis: f64,
    soc_initial: f64,
    cost: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlexibleLoadRec {
    bus: u32,
    p_inc_max: f64,
    p_dec_max: f64,
    cost: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResPlantRec {
    bus: u32,
    capacity: f64,
    gc_cost: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContingencyRec {
    /// 1-based position of the branch to remove, in document order.
    branch: usize,
}

/// Parse a case document into a validated [`Network`].
pub fn parse_case(text: &str) -> Result<Network, GridError> {
    let doc: CaseDoc = toml::from_str(text).map_err(|e| GridError::Parse(e.to_string()))?;

    // Default curtailment price: ten times the steepest marginal production
    // price over all generators, evaluated at p_max.
    let default_curt = doc
        .generators
        .iter()
        .map(|g| 2.0 * g.cost_a * g.p_max + g.cost_b)
        .fold(0.0_f64, f64::max)
        * 10.0;

    let buses = doc
        .buses
        .into_iter()
        .map(|b| Bus {
            id: b.id,
            v_min: b.v_min,
            v_max: b.v_max,
            p_load: b.p_load,
            q_load: b.q_load,
            lc_cost: b.lc_cost.unwrap_or(default_curt),
            is_slack_angle_ref: b.is_slack_angle_ref,
        })
        .collect();
    let branches = doc
        .branches
        .into_iter()
        .map(|b| Branch {
            from: b.from,
            to: b.to,
            r: b.r,
            x: b.x,
            b_sh: b.b_sh,
            i_max: b.i_max,
            v_nom: b.v_nom,
        })
        .collect();
    let generators = doc
        .generators
        .into_iter()
        .map(|g| Generator {
            bus: g.bus,
            p_min: g.p_min,
            p_max: g.p_max,
            q_min: g.q_min,
            q_max: g.q_max,
            ramp: g.ramp,
            cost_a: g.cost_a,
            cost_b: g.cost_b,
            cost_c: g.cost_c,
            redispatch_cost: g.redispatch_cost,
            p_market: g.p_market,
        })
        .collect();
    let storage = doc
        .storage
        .into_iter()
        .map(|e| StorageUnit {
            bus: e.bus,
            soc_min: e.soc_min,
            soc_max: e.soc_max,
            p_ch_max: e.p_ch_max,
            p_dis_max: e.p_dis_max,
            eta_ch: e.eta_ch,
            eta_dis: e.eta_dis,
            soc_initial: e.soc_initial,
            cost: e.cost,
        })
        .collect();
    let flexible_loads = doc
        .flexible_loads
        .into_iter()
        .map(|f| FlexibleLoad {
            bus: f.bus,
            p_inc_max: f.p_inc_max,
            p_dec_max: f.p_dec_max,
            cost: f.cost,
        })
        .collect();
    let res_plants = doc
        .res_plants
        .into_iter()
        .map(|r| ResPlant {
            bus: r.bus,
            capacity: r.capacity,
            gc_cost: r.gc_cost.unwrap_or(default_curt),
        })
        .collect();

    let outages = doc
        .contingencies
        .iter()
        .map(|c| {
            c.branch
                .checked_sub(1)
                .ok_or_else(|| GridError::Parse("contingencies.branch is 1-based, got 0".into()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    Network::new(
        buses,
        branches,
        generators,
        storage,
        flexible_loads,
        res_plants,
        ContingencySpec::new(outages),
    )
}
