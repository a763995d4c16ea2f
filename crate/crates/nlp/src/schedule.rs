//! Typed views of a solved decision vector: per-family schedules in
//! physical units and the expected-cost breakdown.

use crate::index::{Dims, VarKind};
use crate::problem::ScopfProblem;
use crate::ObjectiveMode;

/// Solution values per family, element, scenario, period and state, in MW,
/// MVAr, MWh and per-unit voltages. Array accessors take `(k, s, t, elem)`.
#[derive(Debug, Clone)]
pub struct DispatchSchedule {
    pub dims: Dims,
    pub base_mva: f64,
    pub p_gen: Vec<f64>,
    pub q_gen: Vec<f64>,
    pub volt_re: Vec<f64>,
    pub volt_im: Vec<f64>,
    pub p_charge: Vec<f64>,
    pub p_discharge: Vec<f64>,
    pub stored_energy: Vec<f64>,
    pub flex_inc: Vec<f64>,
    pub flex_dec: Vec<f64>,
    pub res_curt: Vec<f64>,
    pub load_curt: Vec<f64>,
}

impl DispatchSchedule {
    pub fn from_solution(problem: &ScopfProblem, x: &[f64]) -> Self {
        let index = problem.index();
        let d = index.dims();
        let b = problem.network().base_mva;
        assert_eq!(x.len(), index.len(), "solution dimensions match the index");

        let pull = |kind: VarKind, scale: f64| -> Vec<f64> {
            let count = index.family_len(kind);
            let mut out = vec![0.0; d.states * d.scenarios * d.periods * count];
            let mut i = 0;
            for k in 0..d.states {
                for s in 0..d.scenarios {
                    for t in 0..d.periods {
                        for e in 0..count {
                            out[i] = x[index.index(kind, e, s, t, k)] * scale;
                            i += 1;
                        }
                    }
                }
            }
            out
        };

        Self {
            dims: d,
            base_mva: b,
            p_gen: pull(VarKind::GenP, b),
            q_gen: pull(VarKind::GenQ, b),
            volt_re: pull(VarKind::VoltRe, 1.0),
            volt_im: pull(VarKind::VoltIm, 1.0),
            p_charge: pull(VarKind::Charge, b),
            p_discharge: pull(VarKind::Discharge, b),
            stored_energy: pull(VarKind::StoredEnergy, b),
            flex_inc: pull(VarKind::FlexInc, b),
            flex_dec: pull(VarKind::FlexDec, b),
            res_curt: pull(VarKind::ResCurt, b),
            load_curt: pull(VarKind::LoadCurt, b),
        }
    }

    fn at(&self, family_len: usize, k: usize, s: usize, t: usize, e: usize) -> usize {
        ((k * self.dims.scenarios + s) * self.dims.periods + t) * family_len + e
    }

    pub fn p_gen(&self, k: usize, s: usize, t: usize, g: usize) -> f64 {
        self.p_gen[self.at(self.dims.gens, k, s, t, g)]
    }
    pub fn q_gen(&self, k: usize, s: usize, t: usize, g: usize) -> f64 {
        self.q_gen[self.at(self.dims.gens, k, s, t, g)]
    }
    pub fn voltage(&self, k: usize, s: usize, t: usize, n: usize) -> (f64, f64) {
        let i = self.at(self.dims.buses, k, s, t, n);
        (self.volt_re[i], self.volt_im[i])
    }
    pub fn p_charge(&self, k: usize, s: usize, t: usize, e: usize) -> f64 {
        self.p_charge[self.at(self.dims.storage, k, s, t, e)]
    }
    pub fn p_discharge(&self, k: usize, s: usize, t: usize, e: usize) -> f64 {
        self.p_discharge[self.at(self.dims.storage, k, s, t, e)]
    }
    pub fn stored_energy(&self, k: usize, s: usize, t: usize, e: usize) -> f64 {
        self.stored_energy[self.at(self.dims.storage, k, s, t, e)]
    }
    pub fn flex_inc(&self, k: usize, s: usize, t: usize, f: usize) -> f64 {
        self.flex_inc[self.at(self.dims.flex, k, s, t, f)]
    }
    pub fn flex_dec(&self, k: usize, s: usize, t: usize, f: usize) -> f64 {
        self.flex_dec[self.at(self.dims.flex, k, s, t, f)]
    }
    pub fn res_curt(&self, k: usize, s: usize, t: usize, r: usize) -> f64 {
        self.res_curt[self.at(self.dims.res, k, s, t, r)]
    }
    pub fn load_curt(&self, k: usize, s: usize, t: usize, n: usize) -> f64 {
        self.load_curt[self.at(self.dims.buses, k, s, t, n)]
    }
}

/// Expected cost split by family and by normal versus post-contingency
/// states, in euro. `total` reconciles with the objective value.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CostBreakdown {
    pub cg: f64,
    pub lc_normal: f64,
    pub lc_post: f64,
    pub gc_normal: f64,
    pub gc_post: f64,
    pub fl_normal: f64,
    pub fl_post: f64,
    pub ess_normal: f64,
    pub ess_post: f64,
}

impl CostBreakdown {
    pub fn from_solution(problem: &ScopfProblem, x: &[f64]) -> Self {
        let index = problem.index();
        let d = index.dims();
        let net = problem.network();
        let dt = problem.dt();
        let mut out = CostBreakdown::default();
        for s in 0..d.scenarios {
            let w = problem.probabilities()[s] * dt;
            for t in 0..d.periods {
                match problem.mode() {
                    ObjectiveMode::ProductionQuadratic => {
                        for (g, gen) in net.generators.iter().enumerate() {
                            let p = x[index.index(VarKind::GenP, g, s, t, 0)];
                            out.cg += w * (gen.cost_a2 * p * p + gen.cost_b1 * p + gen.cost_c0);
                        }
                    }
                    ObjectiveMode::RedispatchLinear => {
                        for (g, gen) in net.generators.iter().enumerate() {
                            let dev = x[index.index(VarKind::DevUp, g, s, t, 0)]
                                + x[index.index(VarKind::DevDn, g, s, t, 0)];
                            out.cg += w * gen.redispatch_cost.unwrap_or(0.0) * dev;
                        }
                    }
                }
                for k in 0..d.states {
                    let post = k > 0;
                    for (e, unit) in net.storage.iter().enumerate() {
                        let v = w
                            * unit.cost
                            * (x[index.index(VarKind::Charge, e, s, t, k)]
                                + x[index.index(VarKind::Discharge, e, s, t, k)]);
                        if post {
                            out.ess_post += v;
                        } else {
                            out.ess_normal += v;
                        }
                    }
                    for (f, load) in net.flexible_loads.iter().enumerate() {
                        let v = w
                            * load.cost
                            * (x[index.index(VarKind::FlexInc, f, s, t, k)]
                                + x[index.index(VarKind::FlexDec, f, s, t, k)]);
                        if post {
                            out.fl_post += v;
                        } else {
                            out.fl_normal += v;
                        }
                    }
                    for (r, plant) in net.res_plants.iter().enumerate() {
                        let v = w * plant.gc_cost * x[index.index(VarKind::ResCurt, r, s, t, k)];
                        if post {
                            out.gc_post += v;
                        } else {
                            out.gc_normal += v;
                        }
                    }
                    for (n, bus) in net.buses.iter().enumerate() {
                        let v = w * bus.lc_cost * x[index.index(VarKind::LoadCurt, n, s, t, k)];
                        if post {
                            out.lc_post += v;
                        } else {
                            out.lc_normal += v;
                        }
                    }
                }
            }
        }
        out
    }

    pub fn lc(&self) -> f64 {
        self.lc_normal + self.lc_post
    }
    pub fn gc(&self) -> f64 {
        self.gc_normal + self.gc_post
    }
    pub fn fl(&self) -> f64 {
        self.fl_normal + self.fl_post
    }
    pub fn ess(&self) -> f64 {
        self.ess_normal + self.ess_post
    }
    /// Total curtailment-related cost.
    pub fn curtailment(&self) -> f64 {
        self.lc() + self.gc()
    }
    pub fn total(&self) -> f64 {
        self.cg + self.lc() + self.gc() + self.fl() + self.ess()
    }
}
