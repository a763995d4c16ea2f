//! Constraint-by-constraint audit of a dispatch schedule.
//!
//! Each equation family is evaluated in plain scalar code from the network
//! data and the schedule's physical-unit values. Injections use complex
//! arithmetic with series admittances recomputed from `r` and `x`, so no
//! expression code is shared with the model assembly.

use std::fmt::Write as _;

use scopf_grid::NormalizedNetwork;
use scopf_nlp::DispatchSchedule;
use scopf_scenario::{LoadProfileSet, ScenarioSet};

/// Worst offender of one family.
#[derive(Debug, Clone, PartialEq)]
pub struct Offender {
    /// Element label: bus, generator, branch, storage or load index.
    pub element: String,
    pub s: usize,
    pub t: usize,
    pub k: usize,
    pub violation: f64,
}

#[derive(Debug, Clone)]
pub struct FamilyCheck {
    /// Equation family name.
    pub family: &'static str,
    /// Largest violation found (p.u., p.u.-energy for stored energy rows).
    pub max_violation: f64,
    pub worst: Option<Offender>,
}

/// Violations per family with an overall verdict at a tolerance.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub families: Vec<FamilyCheck>,
}

impl FeasibilityReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.families.iter().all(|f| f.max_violation <= tol)
    }

    pub fn max_violation(&self) -> f64 {
        self.families.iter().map(|f| f.max_violation).fold(0.0, f64::max)
    }

    pub fn family(&self, name: &str) -> Option<&FamilyCheck> {
        self.families.iter().find(|f| f.family == name)
    }

    /// Plain-text rendering for CI artifacts.
    pub fn to_text(&self, tol: f64) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "feasibility audit (tolerance {tol:.1e})");
        for f in &self.families {
            let verdict = if f.max_violation <= tol { "ok" } else { "FAIL" };
            let _ = write!(out, "  {:28} {:>12.3e}  {}", f.family, f.max_violation, verdict);
            match &f.worst {
                Some(w) if f.max_violation > 0.0 => {
                    let _ = writeln!(out, "  worst at {} s{} t{} k{}", w.element, w.s + 1, w.t + 1, w.k);
                }
                _ => {
                    let _ = writeln!(out);
                }
            }
        }
        let _ = writeln!(
            out,
            "overall: {}",
            if self.passes(tol) { "pass" } else { "fail" }
        );
        out
    }
}

struct Recorder {
    family: &'static str,
    max_violation: f64,
    worst: Option<Offender>,
}

impl Recorder {
    fn new(family: &'static str) -> Self {
        Self { family, max_violation: 0.0, worst: None }
    }

    fn record(&mut self, violation: f64, element: String, s: usize, t: usize, k: usize) {
        if violation > self.max_violation {
            self.max_violation = violation;
            self.worst = Some(Offender { element, s, t, k, violation });
        }
    }

    fn finish(self) -> FamilyCheck {
        FamilyCheck { family: self.family, max_violation: self.max_violation, worst: self.worst }
    }
}

fn bound_violation(v: f64, lo: f64, up: f64) -> f64 {
    (lo - v).max(v - up).max(0.0)
}

/// Complex power flowing from bus `n` into the network, computed as
/// `V_n * conj(sum_m Y_nm V_m)` with the admittance terms rebuilt from
/// branch impedances for the given contingency state.
#[allow(clippy::too_many_arguments)]
fn injection(
    net: &NormalizedNetwork,
    removed: Option<usize>,
    volt: &dyn Fn(usize) -> (f64, f64),
    n: usize,
) -> (f64, f64) {
    let (en, fn_) = volt(n);
    // accumulate I_n = sum_m Y_nm V_m
    let (mut ire, mut iim) = (0.0, 0.0);
    for (idx, br) in net.branches.iter().enumerate() {
        if Some(idx) == removed || (br.from != n && br.to != n) {
            continue;
        }
        let m = if br.from == n { br.to } else { br.from };
        let denom = br.r * br.r + br.x * br.x;
        let (g, b) = (br.r / denom, -br.x / denom);
        let (em, fm) = volt(m);
        // Self term (series + half shunt) applied to V_n, mutual -y to V_m.
        ire += g * en - (b + br.b_sh_half) * fn_;
        iim += g * fn_ + (b + br.b_sh_half) * en;
        ire -= g * em - b * fm;
        iim -= g * fm + b * em;
    }
    // S = V * conj(I)
    (en * ire + fn_ * iim, fn_ * ire - en * iim)
}

/// Re-evaluate every constraint family of the formulation against a
/// schedule, in per-unit on the network base. Families `injection_p` and
/// `injection_q` are definitional (the balances consume them directly) and
/// always report zero.
pub fn check_feasibility(
    net: &NormalizedNetwork,
    scenarios: &ScenarioSet,
    loads: &LoadProfileSet,
    sched: &DispatchSchedule,
    _tol: f64,
) -> FeasibilityReport {
    let d = sched.dims;
    assert_eq!(d.buses, net.buses.len(), "solution dimensions match");
    assert_eq!(d.scenarios, scenarios.num_scenarios());
    assert_eq!(d.states, net.num_states());
    let base = net.base_mva;
    let dt = scenarios.dt();

    let mut active_balance = Recorder::new("active_balance");
    let mut reactive_balance = Recorder::new("reactive_balance");
    let injection_p = Recorder::new("injection_p");
    let injection_q = Recorder::new("injection_q");
    let mut gen_p_limits = Recorder::new("gen_p_limits");
    let mut gen_q_limits = Recorder::new("gen_q_limits");
    let mut branch_current = Recorder::new("branch_current");
    let mut voltage_band = Recorder::new("voltage_band");
    let mut ramp = Recorder::new("ramp");
    let mut coupling = Recorder::new("corrective_coupling");
    let mut soc_update = Recorder::new("stored_energy_update");
    let mut soc_limits = Recorder::new("stored_energy_limits");
    let mut soc_cycle = Recorder::new("stored_energy_cycle");
    let mut ess_excl = Recorder::new("storage_exclusivity");
    let mut charge_limits = Recorder::new("charge_limits");
    let mut discharge_limits = Recorder::new("discharge_limits");
    let mut flex_energy = Recorder::new("flex_energy_balance");
    let mut flex_inc_limits = Recorder::new("flex_inc_limits");
    let mut flex_dec_limits = Recorder::new("flex_dec_limits");
    let mut flex_excl = Recorder::new("flex_exclusivity");
    let mut load_curt_limits = Recorder::new("load_curt_limits");
    let mut res_curt_limits = Recorder::new("res_curt_limits");

    for k in 0..d.states {
        let removed = net.contingencies.removed_branch(k);
        for s in 0..d.scenarios {
            for t in 0..d.periods {
                let volt = |n: usize| sched.voltage(k, s, t, n);

                for (n, bus) in net.buses.iter().enumerate() {
                    let mult = loads.multiplier(bus.id, t);
                    let p_d = bus.p_load * mult;
                    let q_d = bus.q_load * mult;
                    let (p_inj, q_inj) = injection(net, removed, &volt, n);

                    let mut p_acc = -p_d - p_inj;
                    let mut q_acc = -q_d - q_inj;
                    for &g in &net.gens_at[n] {
                        p_acc += sched.p_gen(k, s, t, g) / base;
                        q_acc += sched.q_gen(k, s, t, g) / base;
                    }
                    for &e in &net.storage_at[n] {
                        p_acc += (sched.p_discharge(k, s, t, e) - sched.p_charge(k, s, t, e)) / base;
                    }
                    for &f in &net.flex_at[n] {
                        p_acc += (sched.flex_dec(k, s, t, f) - sched.flex_inc(k, s, t, f)) / base;
                    }
                    for &r in &net.res_at[n] {
                        let avail = net.res_plants[r].capacity * scenarios.profile(s, t);
                        p_acc += avail - sched.res_curt(k, s, t, r) / base;
                    }
                    let lc = sched.load_curt(k, s, t, n) / base;
                    p_acc += lc;
                    // Curtailment sheds reactive power at the nominal factor.
                    let q_ratio = if bus.p_load > 0.0 { bus.q_load / bus.p_load } else { 0.0 };
                    q_acc += lc * q_ratio;

                    active_balance.record(p_acc.abs(), format!("bus {}", bus.id), s, t, k);
                    reactive_balance.record(q_acc.abs(), format!("bus {}", bus.id), s, t, k);

                    let (e, f) = volt(n);
                    let vmag = (e * e + f * f).sqrt();
                    voltage_band.record(
                        bound_violation(vmag, bus.v_min, bus.v_max),
                        format!("bus {}", bus.id),
                        s,
                        t,
                        k,
                    );

                    load_curt_limits.record(
                        bound_violation(lc, 0.0, p_d),
                        format!("bus {}", bus.id),
                        s,
                        t,
                        k,
                    );
                }

                for (g, gen) in net.generators.iter().enumerate() {
                    let p = sched.p_gen(k, s, t, g) / base;
                    let q = sched.q_gen(k, s, t, g) / base;
                    gen_p_limits.record(
                        bound_violation(p, gen.p_min, gen.p_max),
                        format!("generator {g}"),
                        s,
                        t,
                        k,
                    );
                    gen_q_limits.record(
                        bound_violation(q, gen.q_min, gen.q_max),
                        format!("generator {g}"),
                        s,
                        t,
                        k,
                    );
                    if k == 0 && t >= 1 {
                        let step = (sched.p_gen(0, s, t, g) - sched.p_gen(0, s, t - 1, g)) / base;
                        ramp.record(
                            (step.abs() - gen.ramp).max(0.0),
                            format!("generator {g}"),
                            s,
                            t,
                            k,
                        );
                    }
                    if k >= 1 {
                        let gap = (sched.p_gen(k, s, t, g) - sched.p_gen(0, s, t, g)) / base;
                        coupling.record(
                            (gap.abs() - gen.ramp).max(0.0),
                            format!("generator {g}"),
                            s,
                            t,
                            k,
                        );
                    }
                }

                for (idx, br) in net.branches.iter().enumerate() {
                    if Some(idx) == removed {
                        continue;
                    }
                    let (en, fn_) = volt(br.from);
                    let (em, fm) = volt(br.to);
                    let denom = br.r * br.r + br.x * br.x;
                    let (g, b) = (br.r / denom, -br.x / denom);
                    let i2 = (g * g + b * b)
                        * ((en - em) * (en - em) + (fn_ - fm) * (fn_ - fm));
                    branch_current.record(
                        (i2.sqrt() - br.i_max).max(0.0),
                        format!("branch {idx}"),
                        s,
                        t,
                        k,
                    );
                }

                for (e, unit) in net.storage.iter().enumerate() {
                    let ch = sched.p_charge(k, s, t, e) / base;
                    let dis = sched.p_discharge(k, s, t, e) / base;
                    let soc = sched.stored_energy(k, s, t, e) / base;
                    charge_limits.record(
                        bound_violation(ch, 0.0, unit.p_ch_max),
                        format!("storage {e}"),
                        s,
                        t,
                        k,
                    );
                    discharge_limits.record(
                        bound_violation(dis, 0.0, unit.p_dis_max),
                        format!("storage {e}"),
                        s,
                        t,
                        k,
                    );
                    soc_limits.record(
                        bound_violation(soc, unit.soc_min, unit.soc_max),
                        format!("storage {e}"),
                        s,
                        t,
                        k,
                    );
                    ess_excl.record(
                        (ch / unit.p_ch_max + dis / unit.p_dis_max - 1.0).max(0.0),
                        format!("storage {e}"),
                        s,
                        t,
                        k,
                    );
                    if t >= 1 {
                        let prev = sched.stored_energy(k, s, t - 1, e) / base;
                        let ch_prev = sched.p_charge(k, s, t - 1, e) / base;
                        let dis_prev = sched.p_discharge(k, s, t - 1, e) / base;
                        let resid =
                            soc - prev - dt * (unit.eta_ch * ch_prev - dis_prev / unit.eta_dis);
                        soc_update.record(resid.abs(), format!("storage {e}"), s, t, k);
                    }
                }

                for (f, load) in net.flexible_loads.iter().enumerate() {
                    let inc = sched.flex_inc(k, s, t, f) / base;
                    let dec = sched.flex_dec(k, s, t, f) / base;
                    flex_inc_limits.record(
                        bound_violation(inc, 0.0, load.p_inc_max),
                        format!("flexible_load {f}"),
                        s,
                        t,
                        k,
                    );
                    flex_dec_limits.record(
                        bound_violation(dec, 0.0, load.p_dec_max),
                        format!("flexible_load {f}"),
                        s,
                        t,
                        k,
                    );
                    flex_excl.record(
                        (dec / load.p_dec_max + inc / load.p_inc_max - 1.0).max(0.0),
                        format!("flexible_load {f}"),
                        s,
                        t,
                        k,
                    );
                }

                for (r, plant) in net.res_plants.iter().enumerate() {
                    let rc = sched.res_curt(k, s, t, r) / base;
                    let avail = plant.capacity * scenarios.profile(s, t);
                    res_curt_limits.record(
                        bound_violation(rc, 0.0, avail),
                        format!("res_plant {r}"),
                        s,
                        t,
                        k,
                    );
                }
            }

            // Horizon-coupled rows.
            for (e, unit) in net.storage.iter().enumerate() {
                let last = d.periods - 1;
                let soc_first = sched.stored_energy(k, s, 0, e) / base;
                let soc_last = sched.stored_energy(k, s, last, e) / base;
                let ch_last = sched.p_charge(k, s, last, e) / base;
                let dis_last = sched.p_discharge(k, s, last, e) / base;
                let end = soc_last + dt * (unit.eta_ch * ch_last - dis_last / unit.eta_dis);
                soc_cycle.record((end - soc_first).abs(), format!("storage {e}"), s, 0, k);
            }
            for (f, _) in net.flexible_loads.iter().enumerate() {
                let mut acc = 0.0;
                for t in 0..d.periods {
                    acc += (sched.flex_inc(k, s, t, f) - sched.flex_dec(k, s, t, f)) / base;
                }
                flex_energy.record(acc.abs(), format!("flexible_load {f}"), s, 0, k);
            }
        }
    }

    FeasibilityReport {
        families: vec![
            active_balance.finish(),
            reactive_balance.finish(),
            injection_p.finish(),
            injection_q.finish(),
            gen_p_limits.finish(),
            gen_q_limits.finish(),
            branch_current.finish(),
            voltage_band.finish(),
            ramp.finish(),
            coupling.finish(),
            soc_update.finish(),
            soc_limits.finish(),
            soc_cycle.finish(),
            charge_limits.finish(),
            discharge_limits.finish(),
            ess_excl.finish(),
            flex_energy.finish(),
            flex_inc_limits.finish(),
            flex_dec_limits.finish(),
            flex_excl.finish(),
            load_curt_limits.finish(),
            res_curt_limits.finish(),
        ],
    }
}

/// The either-charges-or-discharges property: at most `eps` of
/// simultaneous activity per unit and period, for storage and for flexible
/// loads. Returns the verdict and every offender.
pub fn check_exclusivity(sched: &DispatchSchedule, eps: f64) -> (bool, Vec<Offender>) {
    let d = sched.dims;
    let base = sched.base_mva;
    let mut offenders = Vec::new();
    for k in 0..d.states {
        for s in 0..d.scenarios {
            for t in 0..d.periods {
                for e in 0..d.storage {
                    let both = (sched.p_charge(k, s, t, e) / base)
                        .min(sched.p_discharge(k, s, t, e) / base);
                    if both > eps {
                        offenders.push(Offender {
                            element: format!("storage {e}"),
                            s,
                            t,
                            k,
                            violation: both,
                        });
                    }
                }
                for f in 0..d.flex {
                    let both =
                        (sched.flex_inc(k, s, t, f) / base).min(sched.flex_dec(k, s, t, f) / base);
                    if both > eps {
                        offenders.push(Offender {
                            element: format!("flexible_load {f}"),
                            s,
                            t,
                            k,
                            violation: both,
                        });
                    }
                }
            }
        }
    }
    (offenders.is_empty(), offenders)
}
