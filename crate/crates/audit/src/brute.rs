//! Exhaustive search oracle for the two-bus single-period case.
//!
//! The case has one degree of freedom once the power flow is closed: the
//! generator-bus voltage magnitude. The search sweeps it over a grid; each
//! grid point closes the load-bus power flow with a 2-by-2 Newton solve,
//! recovers the dispatch from the generator-bus balance, filters on every
//! limit and keeps the cheapest feasible point.

use scopf_grid::NormalizedNetwork;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MiniError {
    #[error("the mini oracle needs exactly 2 buses, 1 generator, no storage, flexibility or RES")]
    WrongShape,
    #[error("the generator must sit at the angle-reference bus")]
    GeneratorOffReference,
    #[error("no feasible grid point")]
    Infeasible,
}

/// Best feasible point found by the sweep, in physical units.
#[derive(Debug, Clone, Copy)]
pub struct MiniOptimum {
    /// Production cost for one period (€).
    pub cost: f64,
    pub p_gen_mw: f64,
    pub q_gen_mvar: f64,
    pub v_gen: f64,
    pub v_load: f64,
    pub feasible_points: usize,
}

/// Exhaustive oracle over `resolution` voltage set-points. Load curtailment
/// and flexibility are out of scope here: demand is served or the point is
/// infeasible.
pub fn brute_force_mini(
    net: &NormalizedNetwork,
    resolution: usize,
) -> Result<MiniOptimum, MiniError> {
    if net.buses.len() != 2
        || net.generators.len() != 1
        || !net.storage.is_empty()
        || !net.flexible_loads.is_empty()
        || !net.res_plants.is_empty()
        || net.branches.is_empty()
    {
        return Err(MiniError::WrongShape);
    }
    let gen = &net.generators[0];
    let gbus = gen.bus;
    if gbus != net.slack {
        return Err(MiniError::GeneratorOffReference);
    }
    let lbus = 1 - gbus;
    let load = &net.buses[lbus];
    let (p_d, q_d) = (load.p_load, load.q_load);
    let gen_bus = &net.buses[gbus];
    let (pg_d, qg_d) = (gen_bus.p_load, gen_bus.q_load);

    // Aggregate the (possibly parallel) branch admittances.
    let mut g_sum = 0.0;
    let mut b_sum = 0.0;
    let mut sh_half = 0.0;
    for br in &net.branches {
        let denom = br.r * br.r + br.x * br.x;
        g_sum += br.r / denom;
        b_sum += -br.x / denom;
        sh_half += br.b_sh_half;
    }

    // Injection at a bus with voltage (e1, f1) facing (e2, f2).
    let inject = |e1: f64, f1: f64, e2: f64, f2: f64| -> (f64, f64) {
        let ire = g_sum * e1 - (b_sum + sh_half) * f1 - (g_sum * e2 - b_sum * f2);
        let iim = g_sum * f1 + (b_sum + sh_half) * e1 - (g_sum * f2 + b_sum * e2);
        (e1 * ire + f1 * iim, f1 * ire - e1 * iim)
    };

    let mut best: Option<MiniOptimum> = None;
    let mut feasible_points = 0usize;
    let (v_lo, v_hi) = (gen_bus.v_min, gen_bus.v_max);
    for step in 0..=resolution {
        let vg = v_lo + (v_hi - v_lo) * step as f64 / resolution as f64;

        // Close the load-bus flow: injection there must equal minus demand.
        let (mut el, mut fl) = (vg, 0.0);
        let mut converged = false;
        for _ in 0..60 {
            let (p, q) = inject(el, fl, vg, 0.0);
            let rp = p + p_d;
            let rq = q + q_d;
            if rp.abs().max(rq.abs()) < 1e-12 {
                converged = true;
                break;
            }
            // Numeric 2x2 Jacobian keeps this oracle free of hand algebra.
            let h = 1e-7;
            let (pe, qe) = inject(el + h, fl, vg, 0.0);
            let (pf, qf) = inject(el, fl + h, vg, 0.0);
            let j11 = (pe - p) / h;
            let j12 = (pf - p) / h;
            let j21 = (qe - q) / h;
            let j22 = (qf - q) / h;
            let det = j11 * j22 - j12 * j21;
            if det.abs() < 1e-14 {
                break;
            }
            el -= (j22 * rp - j12 * rq) / det;
            fl -= (-j21 * rp + j11 * rq) / det;
        }
        if !converged {
            continue;
        }

        // Dispatch recovered from the generator-bus balance.
        let (p_inj, q_inj) = inject(vg, 0.0, el, fl);
        let p_gen = pg_d + p_inj;
        let q_gen = qg_d + q_inj;

        let v_load = (el * el + fl * fl).sqrt();
        let feas_eps = 1e-9;
        if p_gen < gen.p_min - feas_eps
            || p_gen > gen.p_max + feas_eps
            || q_gen < gen.q_min - feas_eps
            || q_gen > gen.q_max + feas_eps
            || v_load < load.v_min - feas_eps
            || v_load > load.v_max + feas_eps
        {
            continue;
        }
        // Longitudinal current limit per branch (flows split by admittance).
        let mut current_ok = true;
        for br in &net.branches {
            let denom = br.r * br.r + br.x * br.x;
            let (g, b) = (br.r / denom, -br.x / denom);
            let de = vg - el;
            let df = -fl;
            let i2 = (g * g + b * b) * (de * de + df * df);
            if i2.sqrt() > br.i_max + feas_eps {
                current_ok = false;
                break;
            }
        }
        if !current_ok {
            continue;
        }

        feasible_points += 1;
        let base = net.base_mva;
        let p_mw = p_gen * base;
        // Costs are stored per-unit scaled; evaluate in MW form.
        let cost_a = gen.cost_a2 / (base * base);
        let cost_b = gen.cost_b1 / base;
        let cost = cost_a * p_mw * p_mw + cost_b * p_mw + gen.cost_c0;
        if best.is_none_or(|b| cost < b.cost) {
            best = Some(MiniOptimum {
                cost,
                p_gen_mw: p_mw,
                q_gen_mvar: q_gen * base,
                v_gen: vg,
                v_load,
                feasible_points,
            });
        }
    }

    match best {
        Some(mut b) => {
            b.feasible_points = feasible_points;
            Ok(b)
        }
        None => Err(MiniError::Infeasible),
    }
}
