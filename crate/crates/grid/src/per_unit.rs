use crate::admittance::{build_views, AdmittanceView};
use crate::types::{ContingencySpec, Network};
use crate::GridError;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Bus data in per-unit, with resolved element indices.
#[derive(Debug, Clone)]
pub struct PuBus {
    pub id: u32,
    pub v_min: f64,
    pub v_max: f64,
    pub p_load: f64,
    pub q_load: f64,
    pub lc_cost: f64,
    pub is_slack_angle_ref: bool,
}

/// Branch with per-unit series admittance and half-shunt per end.
#[derive(Debug, Clone)]
pub struct PuBranch {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    /// Series admittance g + jb, from 1/(r + jx).
    pub g: f64,
    pub b: f64,
    /// Half of the branch shunt susceptance, allocated to each end.
    pub b_sh_half: f64,
    pub i_max: f64,
    pub v_nom: f64,
}

#[derive(Debug, Clone)]
pub struct PuGenerator {
    pub bus: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub ramp: f64,
    /// Production cost in € per hour as a polynomial in per-unit dispatch:
    /// `cost_a2 p² + cost_b1 p + cost_c0`.
    pub cost_a2: f64,
    pub cost_b1: f64,
    pub cost_c0: f64,
    /// Redispatch price per per-unit·hour of deviation.
    pub redispatch_cost: Option<f64>,
    pub p_market: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PuStorage {
    pub bus: usize,
    pub soc_min: f64,
    pub soc_max: f64,
    pub p_ch_max: f64,
    pub p_dis_max: f64,
    pub eta_ch: f64,
    pub eta_dis: f64,
    pub soc_initial: f64,
    /// € per per-unit·hour moved.
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct PuFlexibleLoad {
    pub bus: usize,
    pub p_inc_max: f64,
    pub p_dec_max: f64,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct PuResPlant {
    pub bus: usize,
    pub capacity: f64,
    pub gc_cost: f64,
}

/// A validated network normalized to a common power base, with element
/// indices resolved and per-contingency admittance views precomputed.
///
/// Immutable after construction; share freely across workers.
#[derive(Debug, Clone)]
pub struct NormalizedNetwork {
    pub base_mva: f64,
    pub buses: Vec<PuBus>,
    pub branches: Vec<PuBranch>,
    pub generators: Vec<PuGenerator>,
    pub storage: Vec<PuStorage>,
    pub flexible_loads: Vec<PuFlexibleLoad>,
    pub res_plants: Vec<PuResPlant>,
    pub contingencies: ContingencySpec,
    /// Element indices grouped by bus.
    pub gens_at: Vec<Vec<usize>>,
    pub storage_at: Vec<Vec<usize>>,
    pub flex_at: Vec<Vec<usize>>,
    pub res_at: Vec<Vec<usize>>,
    pub slack: usize,
    views: Vec<AdmittanceView>,
}

impl NormalizedNetwork {
    /// Admittance view of contingency state `k` (0 = intact network).
    pub fn admittance_view(&self, k: usize) -> Result<&AdmittanceView, GridError> {
        self.views.get(k).ok_or(GridError::UnknownState(k))
    }

    pub fn num_states(&self) -> usize {
        self.views.len()
    }

    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    /// Reconstruct the physical-unit network this view was built from.
    pub fn to_physical(&self) -> Network {
        let b = self.base_mva;
        Network::new(
            self.buses
                .iter()
                .map(|bus| crate::Bus {
                    id: bus.id,
                    v_min: bus.v_min,
                    v_max: bus.v_max,
                    p_load: bus.p_load * b,
                    q_load: bus.q_load * b,
                    lc_cost: bus.lc_cost / b,
                    is_slack_angle_ref: bus.is_slack_angle_ref,
                })
                .collect(),
            self.branches
                .iter()
                .map(|br| {
                    let z_base = br.v_nom * br.v_nom / b;
                    crate::Branch {
                        from: self.buses[br.from].id,
                        to: self.buses[br.to].id,
                        r: br.r * z_base,
                        x: br.x * z_base,
                        b_sh: 2.0 * br.b_sh_half / z_base * 1e6,
                        i_max: br.i_max * 1000.0 * b / (SQRT3 * br.v_nom),
                        v_nom: br.v_nom,
                    }
                })
                .collect(),
            self.generators
                .iter()
                .map(|g| crate::Generator {
                    bus: self.buses[g.bus].id,
                    p_min: g.p_min * b,
                    p_max: g.p_max * b,
                    q_min: g.q_min * b,
                    q_max: g.q_max * b,
                    ramp: g.ramp * b,
                    cost_a: g.cost_a2 / (b * b),
                    cost_b: g.cost_b1 / b,
                    cost_c: g.cost_c0,
                    redispatch_cost: g.redispatch_cost.map(|c| c / b),
                    p_market: g.p_market.iter().map(|p| p * b).collect(),
                })
                .collect(),
            self.storage
                .iter()
                .map(|e| crate::StorageUnit {
                    bus: self.buses[e.bus].id,
                    soc_min: e.soc_min * b,
                    soc_max: e.soc_max * b,
                    p_ch_max: e.p_ch_max * b,
                    p_dis_max: e.p_dis_max * b,
                    eta_ch: e.eta_ch,
                    eta_dis: e.eta_dis,
                    soc_initial: e.soc_initial * b,
                    cost: e.cost / b,
                })
                .collect(),
            self.flexible_loads
                .iter()
                .map(|f| crate::FlexibleLoad {
                    bus: self.buses[f.bus].id,
                    p_inc_max: f.p_inc_max * b,
                    p_dec_max: f.p_dec_max * b,
                    cost: f.cost / b,
                })
                .collect(),
            self.res_plants
                .iter()
                .map(|r| crate::ResPlant {
                    bus: self.buses[r.bus].id,
                    capacity: r.capacity * b,
                    gc_cost: r.gc_cost / b,
                })
                .collect(),
            self.contingencies.clone(),
        )
        .expect("round-tripped network stays valid")
    }
}

/// Convert a validated network to per-unit on the given power base.
///
/// Impedances use each branch's own voltage base: `z_pu = z_Ω · base / v_nom²`.
/// Current limits use the power-equivalent three-phase current base
/// `i_base = 1000 · base / (√3 · v_nom)` amperes, so a limit of 1 p.u. current
/// carries `base` MVA at nominal voltage. Prices become € per per-unit·hour.
pub fn to_per_unit(net: &Network, base_mva: f64) -> Result<NormalizedNetwork, GridError> {
    assert!(base_mva > 0.0, "power base must be positive");
    let b = base_mva;

    let buses: Vec<PuBus> = net
        .buses
        .iter()
        .map(|bus| PuBus {
            id: bus.id,
            v_min: bus.v_min,
            v_max: bus.v_max,
            p_load: bus.p_load / b,
            q_load: bus.q_load / b,
            lc_cost: bus.lc_cost * b,
            is_slack_angle_ref: bus.is_slack_angle_ref,
        })
        .collect();

    let branches: Vec<PuBranch> = net
        .branches
        .iter()
        .map(|br| {
            let z_base = br.v_nom * br.v_nom / b;
            let r = br.r / z_base;
            let x = br.x / z_base;
            let denom = r * r + x * x;
            PuBranch {
                from: net.bus_index(br.from).expect("validated"),
                to: net.bus_index(br.to).expect("validated"),
                r,
                x,
                g: r / denom,
                b: -x / denom,
                b_sh_half: 0.5 * br.b_sh * 1e-6 * z_base,
                i_max: br.i_max * SQRT3 * br.v_nom / (1000.0 * b),
                v_nom: br.v_nom,
            }
        })
        .collect();

    let generators: Vec<PuGenerator> = net
        .generators
        .iter()
        .map(|g| PuGenerator {
            bus: net.bus_index(g.bus).expect("validated"),
            p_min: g.p_min / b,
            p_max: g.p_max / b,
            q_min: g.q_min / b,
            q_max: g.q_max / b,
            ramp: g.ramp / b,
            cost_a2: g.cost_a * b * b,
            cost_b1: g.cost_b * b,
            cost_c0: g.cost_c,
            redispatch_cost: g.redispatch_cost.map(|c| c * b),
            p_market: g.p_market.iter().map(|p| p / b).collect(),
        })
        .collect();

    let storage: Vec<PuStorage> = net
        .storage
        .iter()
        .map(|e| PuStorage {
            bus: net.bus_index(e.bus).expect("validated"),
            soc_min: e.soc_min / b,
            soc_max: e.soc_max / b,
            p_ch_max: e.p_ch_max / b,
            p_dis_max: e.p_dis_max / b,
            eta_ch: e.eta_ch,
            eta_dis: e.eta_dis,
            soc_initial: e.soc_initial / b,
            cost: e.cost * b,
        })
        .collect();

    let flexible_loads: Vec<PuFlexibleLoad> = net
        .flexible_loads
        .iter()
        .map(|f| PuFlexibleLoad {
            bus: net.bus_index(f.bus).expect("validated"),
            p_inc_max: f.p_inc_max / b,
            p_dec_max: f.p_dec_max / b,
            cost: f.cost * b,
        })
        .collect();

    let res_plants: Vec<PuResPlant> = net
        .res_plants
        .iter()
        .map(|r| PuResPlant {
            bus: net.bus_index(r.bus).expect("validated"),
            capacity: r.capacity / b,
            gc_cost: r.gc_cost * b,
        })
        .collect();

    let n = buses.len();
    let mut gens_at = vec![Vec::new(); n];
    for (i, g) in generators.iter().enumerate() {
        gens_at[g.bus].push(i);
    }
    let mut storage_at = vec![Vec::new(); n];
    for (i, e) in storage.iter().enumerate() {
        storage_at[e.bus].push(i);
    }
    let mut flex_at = vec![Vec::new(); n];
    for (i, f) in flexible_loads.iter().enumerate() {
        flex_at[f.bus].push(i);
    }
    let mut res_at = vec![Vec::new(); n];
    for (i, r) in res_plants.iter().enumerate() {
        res_at[r.bus].push(i);
    }
    let slack = net.slack_index();

    let bus_ids: Vec<u32> = buses.iter().map(|b| b.id).collect();
    let views = build_views(&bus_ids, &branches, &net.contingencies)?;

    Ok(NormalizedNetwork {
        base_mva: b,
        buses,
        branches,
        generators,
        storage,
        flexible_loads,
        res_plants,
        contingencies: net.contingencies.clone(),
        gens_at,
        storage_at,
        flex_at,
        res_at,
        slack,
        views,
    })
}
