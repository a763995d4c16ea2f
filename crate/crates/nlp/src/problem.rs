//! The assembled NLP: objective, residuals, exact sparse derivatives,
//! bounds and the starting point.
//!
//! All electrical quantities are per-unit on the network's power base; the
//! objective is in euro. Pattern emission and value emission share one code
//! path per callback, so sparsity structures are fixed by construction.

use scopf_grid::NormalizedNetwork;
use scopf_ipm::NlpProblem;
use scopf_scenario::{LoadProfileSet, ScenarioSet};

use crate::index::{Dims, VarKind, VariableIndex};
use crate::layout::{ConstraintLayout, RowKind, RowTag};
use crate::{ModelError, ObjectiveMode};

/// Family offsets within a block; identical in every state for the base
/// families, with the deviation split appended in state 0.
#[derive(Debug, Clone, Copy)]
struct Offsets {
    p: usize,
    q: usize,
    e: usize,
    f: usize,
    ch: usize,
    dis: usize,
    soc: usize,
    inc: usize,
    dec: usize,
    rc: usize,
    lc: usize,
    dev_up: usize,
    dev_dn: usize,
}

/// One assembled stochastic multi-period SCOPF instance. Immutable;
/// callbacks are pure.
pub struct ScopfProblem {
    net: NormalizedNetwork,
    mode: ObjectiveMode,
    dt: f64,
    probabilities: Vec<f64>,
    index: VariableIndex,
    layout: ConstraintLayout,
    offs: Offsets,
    /// Demand per `(bus, t)`, per-unit, load profile applied.
    p_demand: Vec<f64>,
    q_demand: Vec<f64>,
    /// Reactive-to-active demand ratio per bus (constant power factor).
    q_ratio: Vec<f64>,
    /// Available RES power per `(plant, s, t)`, per-unit.
    res_avail: Vec<f64>,
    /// Market schedule per `(gen, t)`, per-unit; empty outside redispatch mode.
    p_star: Vec<f64>,
    xl: Vec<f64>,
    xu: Vec<f64>,
    jac_rows: Vec<usize>,
    jac_cols: Vec<usize>,
    hess_rows: Vec<usize>,
    hess_cols: Vec<usize>,
}

impl ScopfProblem {
    pub fn build(
        net: &NormalizedNetwork,
        scenarios: &ScenarioSet,
        loads: &LoadProfileSet,
        mode: ObjectiveMode,
    ) -> Result<Self, ModelError> {
        let t_count = scenarios.horizon();
        if loads.horizon() != t_count {
            return Err(ModelError::Shape(format!(
                "load profiles cover {} periods, scenarios cover {t_count}",
                loads.horizon()
            )));
        }
        let redispatch = mode == ObjectiveMode::RedispatchLinear;
        let dims = Dims {
            buses: net.buses.len(),
            gens: net.generators.len(),
            storage: net.storage.len(),
            flex: net.flexible_loads.len(),
            res: net.res_plants.len(),
            scenarios: scenarios.num_scenarios(),
            periods: t_count,
            states: net.num_states(),
            redispatch,
        };
        let index = VariableIndex::new(dims);
        let layout = ConstraintLayout::build(net, dims.scenarios, dims.periods, redispatch);

        let offs = Offsets {
            p: index.family_offset(VarKind::GenP, 0),
            q: index.family_offset(VarKind::GenQ, 0),
            e: index.family_offset(VarKind::VoltRe, 0),
            f: index.family_offset(VarKind::VoltIm, 0),
            ch: index.family_offset(VarKind::Charge, 0),
            dis: index.family_offset(VarKind::Discharge, 0),
            soc: index.family_offset(VarKind::StoredEnergy, 0),
            inc: index.family_offset(VarKind::FlexInc, 0),
            dec: index.family_offset(VarKind::FlexDec, 0),
            rc: index.family_offset(VarKind::ResCurt, 0),
            lc: index.family_offset(VarKind::LoadCurt, 0),
            dev_up: if redispatch { index.family_offset(VarKind::DevUp, 0) } else { 0 },
            dev_dn: if redispatch { index.family_offset(VarKind::DevDn, 0) } else { 0 },
        };

        // Demand tables with the per-bus profile applied; reactive power
        // keeps the nominal power factor.
        let mut p_demand = vec![0.0; dims.buses * t_count];
        let mut q_demand = vec![0.0; dims.buses * t_count];
        let mut q_ratio = vec![0.0; dims.buses];
        for (n, bus) in net.buses.iter().enumerate() {
            q_ratio[n] = if bus.p_load > 0.0 { bus.q_load / bus.p_load } else { 0.0 };
            for t in 0..t_count {
                let mult = loads.multiplier(bus.id, t);
                p_demand[n * t_count + t] = bus.p_load * mult;
                q_demand[n * t_count + t] = bus.q_load * mult;
            }
        }

        let mut res_avail = vec![0.0; dims.res * dims.scenarios * t_count];
        for (r, plant) in net.res_plants.iter().enumerate() {
            for s in 0..dims.scenarios {
                for t in 0..t_count {
                    res_avail[(r * dims.scenarios + s) * t_count + t] =
                        plant.capacity * scenarios.profile(s, t);
                }
            }
        }

        let mut p_star = Vec::new();
        if redispatch {
            p_star = vec![0.0; dims.gens * t_count];
            for (g, gen) in net.generators.iter().enumerate() {
                if gen.redispatch_cost.is_none() {
                    return Err(ModelError::MissingMarketData(format!(
                        "generator {g} has no redispatch_cost"
                    )));
                }
                let schedule: &[f64] = &gen.p_market;
                for t in 0..t_count {
                    p_star[g * t_count + t] = match schedule.len() {
                        0 => {
                            return Err(ModelError::MissingMarketData(format!(
                                "generator {g} has no p_market schedule"
                            )))
                        }
                        1 => schedule[0],
                        len if len == t_count => schedule[t],
                        len => {
                            return Err(ModelError::Shape(format!(
                                "generator {g} market schedule has {len} entries, expected {t_count}"
                            )))
                        }
                    };
                }
            }
        }

        let mut prob = Self {
            net: net.clone(),
            mode,
            dt: scenarios.dt(),
            probabilities: scenarios.probabilities().to_vec(),
            index,
            layout,
            offs,
            p_demand,
            q_demand,
            q_ratio,
            res_avail,
            p_star,
            xl: Vec::new(),
            xu: Vec::new(),
            jac_rows: Vec::new(),
            jac_cols: Vec::new(),
            hess_rows: Vec::new(),
            hess_cols: Vec::new(),
        };
        prob.build_bounds();
        let probe = prob.starting_point();
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        prob.walk_jacobian(&probe, &mut |r, c, _| {
            rows.push(r);
            cols.push(c);
        });
        prob.jac_rows = rows;
        prob.jac_cols = cols;
        let lambda_probe = vec![0.0; prob.layout.len()];
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        prob.walk_hessian(&probe, 1.0, &lambda_probe, &mut |r, c, _| {
            rows.push(r);
            cols.push(c);
        });
        prob.hess_rows = rows;
        prob.hess_cols = cols;
        Ok(prob)
    }

    pub fn index(&self) -> &VariableIndex {
        &self.index
    }

    pub fn layout(&self) -> &ConstraintLayout {
        &self.layout
    }

    pub fn network(&self) -> &NormalizedNetwork {
        &self.net
    }

    pub fn mode(&self) -> ObjectiveMode {
        self.mode
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Demand in per-unit for a bus and period.
    pub fn demand(&self, bus: usize, t: usize) -> (f64, f64) {
        let t_count = self.index.dims().periods;
        (self.p_demand[bus * t_count + t], self.q_demand[bus * t_count + t])
    }

    /// Available RES power in per-unit for a plant, scenario and period.
    pub fn res_available(&self, plant: usize, s: usize, t: usize) -> f64 {
        let d = self.index.dims();
        self.res_avail[(plant * d.scenarios + s) * d.periods + t]
    }

    /// Net complex power flowing from bus `n` into the network, per-unit,
    /// evaluated from the state-`k` admittance view.
    pub fn eval_injections(&self, x: &[f64], n: usize, s: usize, t: usize, k: usize) -> (f64, f64) {
        let view = self.net.admittance_view(k).expect("state in range");
        let base = self.index.block_start(k, s, t);
        let (en, fn_) = (x[base + self.offs.e + n], x[base + self.offs.f + n]);
        let v2 = en * en + fn_ * fn_;
        let mut p = v2 * view.g_sum[n];
        let mut q = -v2 * view.b_total_sum[n];
        for &(m, br) in &view.adjacency[n] {
            let b = &self.net.branches[br];
            let (em, fm) = (x[base + self.offs.e + m], x[base + self.offs.f + m]);
            let cross_c = en * em + fn_ * fm;
            let cross_s = fn_ * em - en * fm;
            p -= cross_c * b.g + cross_s * b.b;
            q += cross_c * b.b - cross_s * b.g;
        }
        (p, q)
    }

    fn build_bounds(&mut self) {
        let d = self.index.dims();
        let n_vars = self.index.len();
        let mut xl = vec![f64::NEG_INFINITY; n_vars];
        let mut xu = vec![f64::INFINITY; n_vars];
        for k in 0..d.states {
            for s in 0..d.scenarios {
                for t in 0..d.periods {
                    let base = self.index.block_start(k, s, t);
                    for (g, gen) in self.net.generators.iter().enumerate() {
                        xl[base + self.offs.p + g] = gen.p_min;
                        xu[base + self.offs.p + g] = gen.p_max;
                        xl[base + self.offs.q + g] = gen.q_min;
                        xu[base + self.offs.q + g] = gen.q_max;
                    }
                    // Voltage components stay free; the magnitude band is a
                    // constraint row.
                    for (e, unit) in self.net.storage.iter().enumerate() {
                        xl[base + self.offs.ch + e] = 0.0;
                        xu[base + self.offs.ch + e] = unit.p_ch_max;
                        xl[base + self.offs.dis + e] = 0.0;
                        xu[base + self.offs.dis + e] = unit.p_dis_max;
                        xl[base + self.offs.soc + e] = unit.soc_min;
                        xu[base + self.offs.soc + e] = unit.soc_max;
                    }
                    for (f, load) in self.net.flexible_loads.iter().enumerate() {
                        xl[base + self.offs.inc + f] = 0.0;
                        xu[base + self.offs.inc + f] = load.p_inc_max;
                        xl[base + self.offs.dec + f] = 0.0;
                        xu[base + self.offs.dec + f] = load.p_dec_max;
                    }
                    for r in 0..d.res {
                        xl[base + self.offs.rc + r] = 0.0;
                        xu[base + self.offs.rc + r] = self.res_available(r, s, t);
                    }
                    for n in 0..d.buses {
                        xl[base + self.offs.lc + n] = 0.0;
                        xu[base + self.offs.lc + n] = self.p_demand[n * d.periods + t];
                    }
                    if d.redispatch && k == 0 {
                        for g in 0..d.gens {
                            xl[base + self.offs.dev_up + g] = 0.0;
                            xl[base + self.offs.dev_dn + g] = 0.0;
                        }
                    }
                }
            }
        }
        self.xl = xl;
        self.xu = xu;
    }

    /// Flat voltages, generators spread proportionally over the demand,
    /// storage at its initial energy, flexibility at a small interior value.
    pub fn starting_point(&self) -> Vec<f64> {
        let d = self.index.dims();
        let mut x = vec![0.0; self.index.len()];
        let mid_total: f64 =
            self.net.generators.iter().map(|g| 0.5 * (g.p_min + g.p_max)).sum::<f64>();
        for k in 0..d.states {
            for s in 0..d.scenarios {
                for t in 0..d.periods {
                    let base = self.index.block_start(k, s, t);
                    let load_total: f64 =
                        (0..d.buses).map(|n| self.p_demand[n * d.periods + t]).sum();
                    let scale = if mid_total > 0.0 { load_total / mid_total } else { 0.0 };
                    for (g, gen) in self.net.generators.iter().enumerate() {
                        let mid = 0.5 * (gen.p_min + gen.p_max);
                        x[base + self.offs.p + g] = interior(mid * scale, gen.p_min, gen.p_max);
                        x[base + self.offs.q + g] = interior(0.0, gen.q_min, gen.q_max);
                    }
                    for n in 0..d.buses {
                        x[base + self.offs.e + n] = 1.0;
                        x[base + self.offs.f + n] = 0.0;
                    }
                    for (e, unit) in self.net.storage.iter().enumerate() {
                        x[base + self.offs.ch + e] = small_interior(unit.p_ch_max);
                        x[base + self.offs.dis + e] = small_interior(unit.p_dis_max);
                        x[base + self.offs.soc + e] =
                            interior(unit.soc_initial, unit.soc_min, unit.soc_max);
                    }
                    for (f, load) in self.net.flexible_loads.iter().enumerate() {
                        x[base + self.offs.inc + f] = small_interior(load.p_inc_max);
                        x[base + self.offs.dec + f] = small_interior(load.p_dec_max);
                    }
                    for r in 0..d.res {
                        x[base + self.offs.rc + r] = small_interior(self.res_available(r, s, t));
                    }
                    for n in 0..d.buses {
                        x[base + self.offs.lc + n] =
                            small_interior(self.p_demand[n * d.periods + t]);
                    }
                    if d.redispatch && k == 0 {
                        for g in 0..d.gens {
                            x[base + self.offs.dev_up + g] = 1e-2;
                            x[base + self.offs.dev_dn + g] = 1e-2;
                        }
                    }
                }
            }
        }
        x
    }

    /// Expected cost in euro.
    pub fn eval_objective(&self, x: &[f64]) -> f64 {
        let d = self.index.dims();
        let mut total = 0.0;
        for s in 0..d.scenarios {
            let weight = self.probabilities[s] * self.dt;
            for t in 0..d.periods {
                let base0 = self.index.block_start(0, s, t);
                match self.mode {
                    ObjectiveMode::ProductionQuadratic => {
                        for (g, gen) in self.net.generators.iter().enumerate() {
                            let p = x[base0 + self.offs.p + g];
                            total +=
                                weight * (gen.cost_a2 * p * p + gen.cost_b1 * p + gen.cost_c0);
                        }
                    }
                    ObjectiveMode::RedispatchLinear => {
                        for (g, gen) in self.net.generators.iter().enumerate() {
                            let dev = x[base0 + self.offs.dev_up + g]
                                + x[base0 + self.offs.dev_dn + g];
                            total += weight * gen.redispatch_cost.unwrap_or(0.0) * dev;
                        }
                    }
                }
                for k in 0..d.states {
                    let base = self.index.block_start(k, s, t);
                    for (e, unit) in self.net.storage.iter().enumerate() {
                        total += weight
                            * unit.cost
                            * (x[base + self.offs.ch + e] + x[base + self.offs.dis + e]);
                    }
                    for (f, load) in self.net.flexible_loads.iter().enumerate() {
                        total += weight
                            * load.cost
                            * (x[base + self.offs.inc + f] + x[base + self.offs.dec + f]);
                    }
                    for (r, plant) in self.net.res_plants.iter().enumerate() {
                        total += weight * plant.gc_cost * x[base + self.offs.rc + r];
                    }
                    for (n, bus) in self.net.buses.iter().enumerate() {
                        total += weight * bus.lc_cost * x[base + self.offs.lc + n];
                    }
                }
            }
        }
        total
    }

    fn eval_gradient(&self, x: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
        let d = self.index.dims();
        for s in 0..d.scenarios {
            let weight = self.probabilities[s] * self.dt;
            for t in 0..d.periods {
                let base0 = self.index.block_start(0, s, t);
                match self.mode {
                    ObjectiveMode::ProductionQuadratic => {
                        for (g, gen) in self.net.generators.iter().enumerate() {
                            let p = x[base0 + self.offs.p + g];
                            grad[base0 + self.offs.p + g] +=
                                weight * (2.0 * gen.cost_a2 * p + gen.cost_b1);
                        }
                    }
                    ObjectiveMode::RedispatchLinear => {
                        for (g, gen) in self.net.generators.iter().enumerate() {
                            let c = weight * gen.redispatch_cost.unwrap_or(0.0);
                            grad[base0 + self.offs.dev_up + g] += c;
                            grad[base0 + self.offs.dev_dn + g] += c;
                        }
                    }
                }
                for k in 0..d.states {
                    let base = self.index.block_start(k, s, t);
                    for (e, unit) in self.net.storage.iter().enumerate() {
                        grad[base + self.offs.ch + e] += weight * unit.cost;
                        grad[base + self.offs.dis + e] += weight * unit.cost;
                    }
                    for (f, load) in self.net.flexible_loads.iter().enumerate() {
                        grad[base + self.offs.inc + f] += weight * load.cost;
                        grad[base + self.offs.dec + f] += weight * load.cost;
                    }
                    for (r, plant) in self.net.res_plants.iter().enumerate() {
                        grad[base + self.offs.rc + r] += weight * plant.gc_cost;
                    }
                    for (n, bus) in self.net.buses.iter().enumerate() {
                        grad[base + self.offs.lc + n] += weight * bus.lc_cost;
                    }
                }
            }
        }
    }

    fn eval_residuals(&self, x: &[f64], out: &mut [f64]) {
        let d = self.index.dims();
        let t_count = d.periods;
        for (r, tag) in self.layout.tags.iter().enumerate() {
            let RowTag { kind, s, t, k } = *tag;
            let base = self.index.block_start(k, s, t);
            out[r] = match kind {
                RowKind::ActiveBalance { bus } => {
                    let mut acc = 0.0;
                    for &g in &self.net.gens_at[bus] {
                        acc += x[base + self.offs.p + g];
                    }
                    for &e in &self.net.storage_at[bus] {
                        acc += x[base + self.offs.dis + e] - x[base + self.offs.ch + e];
                    }
                    for &f in &self.net.flex_at[bus] {
                        acc += x[base + self.offs.dec + f] - x[base + self.offs.inc + f];
                    }
                    for &r_ in &self.net.res_at[bus] {
                        acc += self.res_available(r_, s, t) - x[base + self.offs.rc + r_];
                    }
                    acc += x[base + self.offs.lc + bus];
                    acc -= self.p_demand[bus * t_count + t];
                    let (p_inj, _) = self.eval_injections(x, bus, s, t, k);
                    acc - p_inj
                }
                RowKind::ReactiveBalance { bus } => {
                    let mut acc = 0.0;
                    for &g in &self.net.gens_at[bus] {
                        acc += x[base + self.offs.q + g];
                    }
                    acc -= self.q_demand[bus * t_count + t];
                    acc += self.q_ratio[bus] * x[base + self.offs.lc + bus];
                    let (_, q_inj) = self.eval_injections(x, bus, s, t, k);
                    acc - q_inj
                }
                RowKind::AngleRef => x[base + self.offs.f + self.net.slack],
                RowKind::MarketLink { gen } => {
                    x[base + self.offs.p + gen] - x[base + self.offs.dev_up + gen]
                        + x[base + self.offs.dev_dn + gen]
                        - self.p_star[gen * t_count + t]
                }
                RowKind::SocUpdate { unit } => {
                    let u = &self.net.storage[unit];
                    let prev = self.index.block_start(k, s, t - 1);
                    x[base + self.offs.soc + unit]
                        - x[prev + self.offs.soc + unit]
                        - self.dt
                            * (u.eta_ch * x[prev + self.offs.ch + unit]
                                - x[prev + self.offs.dis + unit] / u.eta_dis)
                }
                RowKind::SocCycle { unit } => {
                    let u = &self.net.storage[unit];
                    let first = self.index.block_start(k, s, 0);
                    let last = self.index.block_start(k, s, t_count - 1);
                    x[first + self.offs.soc + unit]
                        - x[last + self.offs.soc + unit]
                        - self.dt
                            * (u.eta_ch * x[last + self.offs.ch + unit]
                                - x[last + self.offs.dis + unit] / u.eta_dis)
                }
                RowKind::FlexEnergy { load } => {
                    let mut acc = 0.0;
                    for tt in 0..t_count {
                        let b = self.index.block_start(k, s, tt);
                        acc += x[b + self.offs.inc + load] - x[b + self.offs.dec + load];
                    }
                    acc
                }
                RowKind::BranchCurrent { branch } => {
                    let br = &self.net.branches[branch];
                    let de = x[base + self.offs.e + br.from] - x[base + self.offs.e + br.to];
                    let df = x[base + self.offs.f + br.from] - x[base + self.offs.f + br.to];
                    (br.g * br.g + br.b * br.b) * (de * de + df * df)
                }
                RowKind::VoltageBand { bus } => {
                    let e = x[base + self.offs.e + bus];
                    let f = x[base + self.offs.f + bus];
                    e * e + f * f
                }
                RowKind::StorageExclusive { unit } => {
                    let u = &self.net.storage[unit];
                    x[base + self.offs.ch + unit] / u.p_ch_max
                        + x[base + self.offs.dis + unit] / u.p_dis_max
                }
                RowKind::FlexExclusive { load } => {
                    let u = &self.net.flexible_loads[load];
                    x[base + self.offs.dec + load] / u.p_dec_max
                        + x[base + self.offs.inc + load] / u.p_inc_max
                }
                RowKind::RampLimit { gen } => {
                    let prev = self.index.block_start(k, s, t - 1);
                    x[base + self.offs.p + gen] - x[prev + self.offs.p + gen]
                }
                RowKind::CorrectiveCoupling { gen } => {
                    let base0 = self.index.block_start(0, s, t);
                    x[base + self.offs.p + gen] - x[base0 + self.offs.p + gen]
                }
            };
        }
    }

    fn walk_jacobian<F: FnMut(usize, usize, f64)>(&self, x: &[f64], emit: &mut F) {
        let d = self.index.dims();
        let t_count = d.periods;
        for (r, tag) in self.layout.tags.iter().enumerate() {
            let RowTag { kind, s, t, k } = *tag;
            let base = self.index.block_start(k, s, t);
            match kind {
                RowKind::ActiveBalance { bus } => {
                    for &g in &self.net.gens_at[bus] {
                        emit(r, base + self.offs.p + g, 1.0);
                    }
                    for &e in &self.net.storage_at[bus] {
                        emit(r, base + self.offs.dis + e, 1.0);
                        emit(r, base + self.offs.ch + e, -1.0);
                    }
                    for &f in &self.net.flex_at[bus] {
                        emit(r, base + self.offs.dec + f, 1.0);
                        emit(r, base + self.offs.inc + f, -1.0);
                    }
                    for &r_ in &self.net.res_at[bus] {
                        emit(r, base + self.offs.rc + r_, -1.0);
                    }
                    emit(r, base + self.offs.lc + bus, 1.0);
                    // -dP_inj/dv terms.
                    let view = self.net.admittance_view(k).expect("state in range");
                    let (en, fn_) =
                        (x[base + self.offs.e + bus], x[base + self.offs.f + bus]);
                    let mut de_n = -2.0 * en * view.g_sum[bus];
                    let mut df_n = -2.0 * fn_ * view.g_sum[bus];
                    for &(m, br) in &view.adjacency[bus] {
                        let b = &self.net.branches[br];
                        let (em, fm) = (x[base + self.offs.e + m], x[base + self.offs.f + m]);
                        de_n += b.g * em - b.b * fm;
                        df_n += b.g * fm + b.b * em;
                        emit(r, base + self.offs.e + m, b.g * en + b.b * fn_);
                        emit(r, base + self.offs.f + m, b.g * fn_ - b.b * en);
                    }
                    emit(r, base + self.offs.e + bus, de_n);
                    emit(r, base + self.offs.f + bus, df_n);
                }
                RowKind::ReactiveBalance { bus } => {
                    for &g in &self.net.gens_at[bus] {
                        emit(r, base + self.offs.q + g, 1.0);
                    }
                    emit(r, base + self.offs.lc + bus, self.q_ratio[bus]);
                    // -dQ_inj/dv terms.
                    let view = self.net.admittance_view(k).expect("state in range");
                    let (en, fn_) =
                        (x[base + self.offs.e + bus], x[base + self.offs.f + bus]);
                    let mut de_n = 2.0 * en * view.b_total_sum[bus];
                    let mut df_n = 2.0 * fn_ * view.b_total_sum[bus];
                    for &(m, br) in &view.adjacency[bus] {
                        let b = &self.net.branches[br];
                        let (em, fm) = (x[base + self.offs.e + m], x[base + self.offs.f + m]);
                        de_n -= b.b * em + b.g * fm;
                        df_n -= b.b * fm - b.g * em;
                        emit(r, base + self.offs.e + m, -(b.b * en) + b.g * fn_);
                        emit(r, base + self.offs.f + m, -(b.b * fn_) - b.g * en);
                    }
                    emit(r, base + self.offs.e + bus, de_n);
                    emit(r, base + self.offs.f + bus, df_n);
                }
                RowKind::AngleRef => {
                    emit(r, base + self.offs.f + self.net.slack, 1.0);
                }
                RowKind::MarketLink { gen } => {
                    emit(r, base + self.offs.p + gen, 1.0);
                    emit(r, base + self.offs.dev_up + gen, -1.0);
                    emit(r, base + self.offs.dev_dn + gen, 1.0);
                }
                RowKind::SocUpdate { unit } => {
                    let u = &self.net.storage[unit];
                    let prev = self.index.block_start(k, s, t - 1);
                    emit(r, base + self.offs.soc + unit, 1.0);
                    emit(r, prev + self.offs.soc + unit, -1.0);
                    emit(r, prev + self.offs.ch + unit, -self.dt * u.eta_ch);
                    emit(r, prev + self.offs.dis + unit, self.dt / u.eta_dis);
                }
                RowKind::SocCycle { unit } => {
                    let u = &self.net.storage[unit];
                    let first = self.index.block_start(k, s, 0);
                    let last = self.index.block_start(k, s, t_count - 1);
                    emit(r, first + self.offs.soc + unit, 1.0);
                    emit(r, last + self.offs.soc + unit, -1.0);
                    emit(r, last + self.offs.ch + unit, -self.dt * u.eta_ch);
                    emit(r, last + self.offs.dis + unit, self.dt / u.eta_dis);
                }
                RowKind::FlexEnergy { load } => {
                    for tt in 0..t_count {
                        let b = self.index.block_start(k, s, tt);
                        emit(r, b + self.offs.inc + load, 1.0);
                        emit(r, b + self.offs.dec + load, -1.0);
                    }
                }
                RowKind::BranchCurrent { branch } => {
                    let br = &self.net.branches[branch];
                    let c2 = br.g * br.g + br.b * br.b;
                    let de = x[base + self.offs.e + br.from] - x[base + self.offs.e + br.to];
                    let df = x[base + self.offs.f + br.from] - x[base + self.offs.f + br.to];
                    emit(r, base + self.offs.e + br.from, 2.0 * c2 * de);
                    emit(r, base + self.offs.e + br.to, -2.0 * c2 * de);
                    emit(r, base + self.offs.f + br.from, 2.0 * c2 * df);
                    emit(r, base + self.offs.f + br.to, -2.0 * c2 * df);
                }
                RowKind::VoltageBand { bus } => {
                    emit(r, base + self.offs.e + bus, 2.0 * x[base + self.offs.e + bus]);
                    emit(r, base + self.offs.f + bus, 2.0 * x[base + self.offs.f + bus]);
                }
                RowKind::StorageExclusive { unit } => {
                    let u = &self.net.storage[unit];
                    emit(r, base + self.offs.ch + unit, 1.0 / u.p_ch_max);
                    emit(r, base + self.offs.dis + unit, 1.0 / u.p_dis_max);
                }
                RowKind::FlexExclusive { load } => {
                    let u = &self.net.flexible_loads[load];
                    emit(r, base + self.offs.dec + load, 1.0 / u.p_dec_max);
                    emit(r, base + self.offs.inc + load, 1.0 / u.p_inc_max);
                }
                RowKind::RampLimit { gen } => {
                    let prev = self.index.block_start(k, s, t - 1);
                    emit(r, base + self.offs.p + gen, 1.0);
                    emit(r, prev + self.offs.p + gen, -1.0);
                }
                RowKind::CorrectiveCoupling { gen } => {
                    let base0 = self.index.block_start(0, s, t);
                    emit(r, base + self.offs.p + gen, 1.0);
                    emit(r, base0 + self.offs.p + gen, -1.0);
                }
            }
        }
    }

    fn walk_hessian<F: FnMut(usize, usize, f64)>(
        &self,
        _x: &[f64],
        obj_factor: f64,
        lambda: &[f64],
        emit: &mut F,
    ) {
        let d = self.index.dims();
        // Objective curvature: quadratic production cost on state-0 dispatch.
        if let ObjectiveMode::ProductionQuadratic = self.mode {
            for s in 0..d.scenarios {
                let weight = self.probabilities[s] * self.dt;
                for t in 0..d.periods {
                    let base0 = self.index.block_start(0, s, t);
                    for (g, gen) in self.net.generators.iter().enumerate() {
                        let col = base0 + self.offs.p + g;
                        emit(col, col, obj_factor * 2.0 * gen.cost_a2 * weight);
                    }
                }
            }
        }
        // Constraint curvature: voltage products in the injections, branch
        // currents and voltage bands. All remaining rows are linear.
        let low = |i: usize, j: usize, v: f64, emit: &mut F| {
            if i >= j {
                emit(i, j, v);
            } else {
                emit(j, i, v);
            }
        };
        for (r, tag) in self.layout.tags.iter().enumerate() {
            let RowTag { kind, s, t, k } = *tag;
            let lam = lambda[r];
            let base = self.index.block_start(k, s, t);
            match kind {
                RowKind::ActiveBalance { bus } => {
                    let view = self.net.admittance_view(k).expect("state in range");
                    let (ce, cf) = (base + self.offs.e + bus, base + self.offs.f + bus);
                    emit(ce, ce, -2.0 * view.g_sum[bus] * lam);
                    emit(cf, cf, -2.0 * view.g_sum[bus] * lam);
                    for &(m, br) in &view.adjacency[bus] {
                        let b = &self.net.branches[br];
                        let (me, mf) = (base + self.offs.e + m, base + self.offs.f + m);
                        low(ce, me, b.g * lam, emit);
                        low(cf, mf, b.g * lam, emit);
                        low(cf, me, b.b * lam, emit);
                        low(ce, mf, -b.b * lam, emit);
                    }
                }
                RowKind::ReactiveBalance { bus } => {
                    let view = self.net.admittance_view(k).expect("state in range");
                    let (ce, cf) = (base + self.offs.e + bus, base + self.offs.f + bus);
                    emit(ce, ce, 2.0 * view.b_total_sum[bus] * lam);
                    emit(cf, cf, 2.0 * view.b_total_sum[bus] * lam);
                    for &(m, br) in &view.adjacency[bus] {
                        let b = &self.net.branches[br];
                        let (me, mf) = (base + self.offs.e + m, base + self.offs.f + m);
                        low(ce, me, -b.b * lam, emit);
                        low(cf, mf, -b.b * lam, emit);
                        low(cf, me, b.g * lam, emit);
                        low(ce, mf, -b.g * lam, emit);
                    }
                }
                RowKind::BranchCurrent { branch } => {
                    let br = &self.net.branches[branch];
                    let c2 = 2.0 * (br.g * br.g + br.b * br.b) * lam;
                    let (ne, te) = (base + self.offs.e + br.from, base + self.offs.e + br.to);
                    let (nf, tf) = (base + self.offs.f + br.from, base + self.offs.f + br.to);
                    emit(ne, ne, c2);
                    emit(te, te, c2);
                    low(ne, te, -c2, emit);
                    emit(nf, nf, c2);
                    emit(tf, tf, c2);
                    low(nf, tf, -c2, emit);
                }
                RowKind::VoltageBand { bus } => {
                    let (ce, cf) = (base + self.offs.e + bus, base + self.offs.f + bus);
                    emit(ce, ce, 2.0 * lam);
                    emit(cf, cf, 2.0 * lam);
                }
                _ => {}
            }
        }
    }

    /// Write the Jacobian and Hessian coordinate patterns as text, one
    /// `row col` pair per line, for offline inspection.
    pub fn write_patterns(&self, out: &mut dyn std::io::Write) -> std::io::Result<()> {
        writeln!(out, "jacobian {} entries", self.jac_rows.len())?;
        for (r, c) in self.jac_rows.iter().zip(&self.jac_cols) {
            writeln!(out, "{r} {c}")?;
        }
        writeln!(out, "hessian {} entries", self.hess_rows.len())?;
        for (r, c) in self.hess_rows.iter().zip(&self.hess_cols) {
            writeln!(out, "{r} {c}")?;
        }
        Ok(())
    }
}

fn interior(v: f64, lo: f64, up: f64) -> f64 {
    if lo == up {
        return lo;
    }
    let pad = 0.01 * (up - lo);
    v.clamp(lo + pad, up - pad)
}

/// Small strictly interior value for a `[0, ub]` variable; zero when pinned.
fn small_interior(ub: f64) -> f64 {
    if ub <= 0.0 {
        0.0
    } else {
        (0.01_f64).min(0.1 * ub)
    }
}

impl NlpProblem for ScopfProblem {
    fn num_vars(&self) -> usize {
        self.index.len()
    }
    fn num_constraints(&self) -> usize {
        self.layout.len()
    }
    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.xl.clone(), self.xu.clone())
    }
    fn constraint_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (self.layout.lower.clone(), self.layout.upper.clone())
    }
    fn initial_point(&self) -> Vec<f64> {
        self.starting_point()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        self.eval_objective(x)
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        self.eval_gradient(x, grad);
    }
    fn constraints(&self, x: &[f64], out: &mut [f64]) {
        self.eval_residuals(x, out);
    }
    fn jacobian_pattern(&self) -> (Vec<usize>, Vec<usize>) {
        (self.jac_rows.clone(), self.jac_cols.clone())
    }
    fn jacobian_values(&self, x: &[f64], vals: &mut [f64]) {
        let mut i = 0;
        self.walk_jacobian(x, &mut |_, _, v| {
            vals[i] = v;
            i += 1;
        });
        debug_assert_eq!(i, vals.len());
    }
    fn hessian_pattern(&self) -> (Vec<usize>, Vec<usize>) {
        (self.hess_rows.clone(), self.hess_cols.clone())
    }
    fn hessian_values(&self, x: &[f64], obj_factor: f64, lambda: &[f64], vals: &mut [f64]) {
        let mut i = 0;
        self.walk_hessian(x, obj_factor, lambda, &mut |_, _, v| {
            vals[i] = v;
            i += 1;
        });
        debug_assert_eq!(i, vals.len());
    }
}
