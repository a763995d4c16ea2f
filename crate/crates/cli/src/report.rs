//! Artifact writers: cost reports, schedules and scalability tables.
//!
//! Numeric artifacts are byte-deterministic: every float is rendered with
//! six significant digits through [`sig6`].

use std::io::Write;
use std::path::Path;

use scopf_ipm::SolveStatus;
use scopf_nlp::{CostBreakdown, DispatchSchedule};

use crate::pipeline::{SweepRow, TimingRow};

/// Render with six significant digits, plain notation for moderate
/// magnitudes and scientific otherwise.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..6).contains(&mag) {
        format!("{:.5e}", x)
    } else {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        let t = s.trim_end_matches('0').trim_end_matches('.');
        t.to_string()
    }
}

fn status_name(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Converged => "converged",
        SolveStatus::IterationLimit => "iteration-limit",
        SolveStatus::NumericFailure => "numeric-failure",
        SolveStatus::InfeasibleDetected => "infeasible-detected",
    }
}

/// Expected-cost table split by family and by normal / post-contingency
/// states, one value column.
pub fn write_cost_report(costs: &CostBreakdown, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "component,state,cost_eur")?;
    writeln!(out, "cg,normal,{}", sig6(costs.cg))?;
    writeln!(out, "lc,normal,{}", sig6(costs.lc_normal))?;
    writeln!(out, "gc,normal,{}", sig6(costs.gc_normal))?;
    writeln!(out, "fl,normal,{}", sig6(costs.fl_normal))?;
    writeln!(out, "ess,normal,{}", sig6(costs.ess_normal))?;
    writeln!(out, "lc,post,{}", sig6(costs.lc_post))?;
    writeln!(out, "gc,post,{}", sig6(costs.gc_post))?;
    writeln!(out, "fl,post,{}", sig6(costs.fl_post))?;
    writeln!(out, "ess,post,{}", sig6(costs.ess_post))?;
    writeln!(out, "total,,{}", sig6(costs.total()))?;
    Ok(())
}

/// Write per-(scenario, state) schedule tables under `dir`, one file per
/// family: stored energy (MWh), storage charge/discharge (MW), flexible
/// shifts (MW), curtailments by node (MW) and generator dispatch (MW).
/// Families without elements produce no files; the intact state k0 is
/// always present.
pub fn export_schedules(sched: &DispatchSchedule, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let d = sched.dims;
    for s in 0..d.scenarios {
        for k in 0..d.states {
            let tag = format!("s{}_k{}", s + 1, k);

            if d.storage > 0 {
                let mut f = std::fs::File::create(dir.join(format!("soc_{tag}.csv")))?;
                write_header(&mut f, "period", "soc_mwh", d.storage)?;
                for t in 0..d.periods {
                    write_row(&mut f, t, (0..d.storage).map(|e| sched.stored_energy(k, s, t, e)))?;
                }
                let mut f = std::fs::File::create(dir.join(format!("ess_power_{tag}.csv")))?;
                let cols: Vec<String> = (0..d.storage)
                    .flat_map(|e| vec![format!("charge_mw_{e}"), format!("discharge_mw_{e}")])
                    .collect();
                writeln!(f, "period,{}", cols.join(","))?;
                for t in 0..d.periods {
                    let vals: Vec<String> = (0..d.storage)
                        .flat_map(|e| {
                            vec![sig6(sched.p_charge(k, s, t, e)), sig6(sched.p_discharge(k, s, t, e))]
                        })
                        .collect();
                    writeln!(f, "{},{}", t + 1, vals.join(","))?;
                }
            }

            if d.flex > 0 {
                let mut f = std::fs::File::create(dir.join(format!("fl_power_{tag}.csv")))?;
                let cols: Vec<String> = (0..d.flex)
                    .flat_map(|l| vec![format!("inc_mw_{l}"), format!("dec_mw_{l}")])
                    .collect();
                writeln!(f, "period,{}", cols.join(","))?;
                for t in 0..d.periods {
                    let vals: Vec<String> = (0..d.flex)
                        .flat_map(|l| {
                            vec![sig6(sched.flex_inc(k, s, t, l)), sig6(sched.flex_dec(k, s, t, l))]
                        })
                        .collect();
                    writeln!(f, "{},{}", t + 1, vals.join(","))?;
                }
            }

            let mut f = std::fs::File::create(dir.join(format!("curtailment_{tag}.csv")))?;
            let mut cols: Vec<String> = (0..d.buses).map(|n| format!("lc_mw_bus{n}")).collect();
            cols.extend((0..d.res).map(|r| format!("rc_mw_plant{r}")));
            writeln!(f, "period,{}", cols.join(","))?;
            for t in 0..d.periods {
                let mut vals: Vec<String> =
                    (0..d.buses).map(|n| sig6(sched.load_curt(k, s, t, n))).collect();
                vals.extend((0..d.res).map(|r| sig6(sched.res_curt(k, s, t, r))));
                writeln!(f, "{},{}", t + 1, vals.join(","))?;
            }

            let mut f = std::fs::File::create(dir.join(format!("gen_dispatch_{tag}.csv")))?;
            let cols: Vec<String> = (0..d.gens).map(|g| format!("p_mw_{g}")).collect();
            writeln!(f, "period,{}", cols.join(","))?;
            for t in 0..d.periods {
                let vals: Vec<String> = (0..d.gens).map(|g| sig6(sched.p_gen(k, s, t, g))).collect();
                writeln!(f, "{},{}", t + 1, vals.join(","))?;
            }
        }
    }
    Ok(())
}

fn write_header(f: &mut dyn Write, index: &str, prefix: &str, count: usize) -> std::io::Result<()> {
    let cols: Vec<String> = (0..count).map(|e| format!("{prefix}_{e}")).collect();
    writeln!(f, "{index},{}", cols.join(","))
}

fn write_row(
    f: &mut dyn Write,
    t: usize,
    vals: impl Iterator<Item = f64>,
) -> std::io::Result<()> {
    let rendered: Vec<String> = vals.map(sig6).collect();
    writeln!(f, "{},{}", t + 1, rendered.join(","))
}

/// Sweep table: one row per capacity with the cost split.
pub fn write_sweep(rows: &[SweepRow], out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "capacity_mw,status,cg_eur,lc_eur,gc_eur,fl_eur,ess_eur,total_eur,iterations,audit"
    )?;
    for row in rows {
        match &row.outcome {
            Ok(solved) => {
                let c = &solved.costs;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    sig6(row.capacity_mw),
                    status_name(solved.result.status),
                    sig6(c.cg),
                    sig6(c.lc()),
                    sig6(c.gc()),
                    sig6(c.fl()),
                    sig6(c.ess()),
                    sig6(c.total()),
                    solved.result.iterations,
                    if solved.audit_passes { "pass" } else { "fail" },
                )?;
            }
            Err(err) => {
                writeln!(out, "{},error:{err},,,,,,,,", sig6(row.capacity_mw))?;
            }
        }
    }
    Ok(())
}

/// Deterministic scalability columns; wall-clock timing goes to a separate
/// writer since it varies run to run.
pub fn write_scalability(
    rows: &[TimingRow],
    table: &mut dyn Write,
    timing: &mut dyn Write,
) -> std::io::Result<()> {
    writeln!(table, "scenarios,status,total_cost_eur,variables,constraints,iterations")?;
    writeln!(timing, "scenarios,wall_seconds")?;
    for row in rows {
        writeln!(
            table,
            "{},{},{},{},{},{}",
            row.scenario_count,
            status_name(row.status),
            sig6(row.total_cost),
            row.variables,
            row.constraints,
            row.iterations,
        )?;
        writeln!(timing, "{},{}", row.scenario_count, sig6(row.wall_seconds))?;
    }
    Ok(())
}
