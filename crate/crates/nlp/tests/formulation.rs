#![allow(clippy::identity_op, clippy::needless_range_loop)]

use rand::prelude::*;
use scopf_grid::{parse_case, to_per_unit, NormalizedNetwork};
use scopf_ipm::NlpProblem;
use scopf_nlp::{
    case_variant, ObjectiveMode, RowKind, ScopfProblem, VarKind,
};
use scopf_scenario::{load_scenarios, LoadProfileSet, ScenarioSet};

fn five_bus() -> NormalizedNetwork {
    let text =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/case5.toml"))
            .unwrap();
    to_per_unit(&parse_case(&text).unwrap(), 100.0).unwrap()
}

fn wind(horizon: usize) -> ScenarioSet {
    let text =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/wind10.csv"))
            .unwrap();
    load_scenarios(&text, 24).unwrap().truncated(horizon)
}

/// Scenario sets for tests: shrink the fixture to `(S, T)`.
trait Shrink {
    fn truncated(&self, horizon: usize) -> ScenarioSet;
    fn take_scenarios(&self, count: usize) -> ScenarioSet;
}

impl Shrink for ScenarioSet {
    fn truncated(&self, horizon: usize) -> ScenarioSet {
        let profiles: Vec<Vec<f64>> = (0..self.num_scenarios())
            .map(|s| (0..horizon).map(|t| self.profile(s, t)).collect())
            .collect();
        ScenarioSet::new(profiles, self.probabilities().to_vec(), horizon, self.dt()).unwrap()
    }
    fn take_scenarios(&self, count: usize) -> ScenarioSet {
        let profiles: Vec<Vec<f64>> = (0..count)
            .map(|s| (0..self.horizon()).map(|t| self.profile(s, t)).collect())
            .collect();
        ScenarioSet::new(profiles, vec![1.0 / count as f64; count], self.horizon(), self.dt())
            .unwrap()
    }
}

fn build_full() -> ScopfProblem {
    let net = five_bus();
    let scen = wind(24);
    let loads = LoadProfileSet::uniform(24);
    ScopfProblem::build(&net, &scen, &loads, ObjectiveMode::ProductionQuadratic).unwrap()
}

fn build_small() -> ScopfProblem {
    // 5-bus, |S|=2, |T|=4, two states (intact + one line out).
    let raw =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/case5.toml"))
            .unwrap();
    let mut net = parse_case(&raw).unwrap();
    net = scopf_grid::Network::new(
        net.buses.clone(),
        net.branches.clone(),
        net.generators.clone(),
        net.storage.clone(),
        net.flexible_loads.clone(),
        net.res_plants.clone(),
        scopf_grid::ContingencySpec::new(vec![1]),
    )
    .unwrap();
    let pu = to_per_unit(&net, 100.0).unwrap();
    let scen = wind(4).take_scenarios(2);
    let loads = LoadProfileSet::uniform(4);
    ScopfProblem::build(&pu, &scen, &loads, ObjectiveMode::ProductionQuadratic).unwrap()
}

#[test]
fn variable_count_matches_closed_form() {
    let p = build_full();
    // Per (s,t,k): 2 gen families (3 each), 2 voltage + 1 curtailment family
    // (5 each), 3 storage (1 each), 2 flex (2 each), 1 RES (1).
    let per_block = 2 * 3 + 3 * 5 + 3 * 1 + 2 * 2 + 1;
    assert_eq!(p.index().len(), per_block * 10 * 24 * 7);
    assert_eq!(p.index().len(), 48_720);
}

#[test]
fn equality_count_matches_closed_form() {
    let p = build_full();
    let layout = p.layout();
    // (2N + 1) per (s,t,k); storage (T-1)+1 per (e,s,k); flex 1 per (f,s,k).
    let expected = (2 * 5 + 1) * 10 * 24 * 7 + 1 * 10 * 7 * 23 + 1 * 10 * 7 + 2 * 10 * 7;
    assert_eq!(layout.num_equalities, expected);
    assert_eq!(
        scopf_nlp::ConstraintLayout::expected_equalities(p.index().dims()),
        expected
    );

    // Inequalities: branch rows shrink by one per contingency state.
    let branch_rows = (6 + 6 * 5) * 10 * 24;
    let voltage_rows = 5 * 10 * 24 * 7;
    let excl_rows = (1 + 2) * 10 * 24 * 7;
    let ramp_rows = 3 * 10 * 23;
    let coupling_rows = 3 * 10 * 24 * 6;
    assert_eq!(
        layout.num_inequalities(),
        branch_rows + voltage_rows + excl_rows + ramp_rows + coupling_rows
    );
}

#[test]
fn flat_voltage_gives_zero_active_injection() {
    let p = build_small();
    let x = p.starting_point();
    let d = p.index().dims();
    let view_shunts: Vec<f64> = (0..d.buses)
        .map(|n| {
            let view = p.network().admittance_view(0).unwrap();
            let mut sh = 0.0;
            for &(_, br) in &view.adjacency[n] {
                sh += p.network().branches[br].b_sh_half;
            }
            sh
        })
        .collect();
    for n in 0..d.buses {
        let (pi, qi) = p.eval_injections(&x, n, 0, 0, 0);
        assert!(pi.abs() < 1e-12, "bus {n}: P_inj = {pi}");
        // Only the shunt susceptance survives at a flat profile.
        assert!((qi + view_shunts[n]).abs() < 1e-12, "bus {n}: Q_inj = {qi}");
    }
}

#[test]
fn two_bus_injection_matches_complex_arithmetic() {
    // Independent oracle: S_n = V_n * conj(sum_m Y_nm V_m) with the bus
    // admittance matrix formed from the branch data.
    let text = r#"
[[buses]]
id = 1
v_min = 0.9
v_max = 1.1
p_load = 100.0
q_load = 30.0
is_slack_angle_ref = true

[[buses]]
id = 2
v_min = 0.9
v_max = 1.1

[[generators]]
bus = 2
p_min = 0.0
p_max = 500.0
q_min = -300.0
q_max = 300.0
ramp = 500.0
cost_a = 0.01
cost_b = 30.0
cost_c = 50.0

[[branches]]
from = 1
to = 2
v_nom = 400.0
r = 3.2
x = 16.0
b_sh = 160.0
i_max = 1587.7
"#;
    let pu = to_per_unit(&parse_case(text).unwrap(), 100.0).unwrap();
    let scen = ScenarioSet::new(vec![vec![0.0]], vec![1.0], 1, 1.0).unwrap();
    let loads = LoadProfileSet::uniform(1);
    let p = ScopfProblem::build(&pu, &scen, &loads, ObjectiveMode::ProductionQuadratic).unwrap();

    let mut x = p.starting_point();
    let idx = p.index();
    let (e1, f1) = (1.0, 0.0);
    let (e2, f2) = (0.98, -0.05);
    x[idx.index(VarKind::VoltRe, 0, 0, 0, 0)] = e1;
    x[idx.index(VarKind::VoltIm, 0, 0, 0, 0)] = f1;
    x[idx.index(VarKind::VoltRe, 1, 0, 0, 0)] = e2;
    x[idx.index(VarKind::VoltIm, 1, 0, 0, 0)] = f2;

    let br = &pu.branches[0];
    // Y11 = y_series + j*b_sh_half, Y12 = -y_series; complex arithmetic on
    // (re, im) pairs.
    let y_series = (br.g, br.b);
    let y11 = (br.g, br.b + br.b_sh_half);
    let v1 = (e1, f1);
    let v2 = (e2, f2);
    let mul = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    let sub = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0, a.1 - b.1);
    let conj = |a: (f64, f64)| (a.0, -a.1);
    // I1 = Y11 v1 - y v2; S1 = v1 * conj(I1).
    let i1 = sub(mul(y11, v1), mul(y_series, v2));
    let s1 = mul(v1, conj(i1));

    let (pi, qi) = p.eval_injections(&x, 0, 0, 0, 0);
    assert!((pi - s1.0).abs() < 1e-12, "P: {pi} vs {}", s1.0);
    assert!((qi - s1.1).abs() < 1e-12, "Q: {qi} vs {}", s1.1);
}

#[test]
fn balanced_isolated_bus_has_zero_residual() {
    let text = r#"
[[buses]]
id = 1
v_min = 0.9
v_max = 1.1
p_load = 200.0
q_load = 0.0
is_slack_angle_ref = true

[[generators]]
bus = 1
p_min = 0.0
p_max = 500.0
q_min = -300.0
q_max = 300.0
ramp = 500.0
cost_a = 0.01
cost_b = 30.0
cost_c = 50.0
"#;
    let pu = to_per_unit(&parse_case(text).unwrap(), 100.0).unwrap();
    let scen = ScenarioSet::new(vec![vec![0.0]], vec![1.0], 1, 1.0).unwrap();
    let p = ScopfProblem::build(&pu, &scen, &LoadProfileSet::uniform(1), ObjectiveMode::ProductionQuadratic)
        .unwrap();
    let mut x = p.starting_point();
    let idx = p.index();
    x[idx.index(VarKind::GenP, 0, 0, 0, 0)] = 2.0;
    x[idx.index(VarKind::GenQ, 0, 0, 0, 0)] = 0.0;
    x[idx.index(VarKind::LoadCurt, 0, 0, 0, 0)] = 0.0;
    let mut residuals = vec![0.0; p.num_constraints()];
    p.constraints(&x, &mut residuals);
    let row = p
        .layout()
        .tags
        .iter()
        .position(|tag| matches!(tag.kind, RowKind::ActiveBalance { bus: 0 }))
        .unwrap();
    assert!(residuals[row].abs() < 1e-12, "residual = {}", residuals[row]);
}

#[test]
fn storage_update_row_matches_hand_evaluation() {
    // 660 MWh + 0.95 * 50 MW * 1 h = 707.5 MWh, in per-unit on 100 MVA.
    let p = build_small();
    let idx = p.index();
    let mut x = p.starting_point();
    x[idx.index(VarKind::StoredEnergy, 0, 0, 0, 0)] = 6.60;
    x[idx.index(VarKind::Charge, 0, 0, 0, 0)] = 0.50;
    x[idx.index(VarKind::Discharge, 0, 0, 0, 0)] = 0.0;
    x[idx.index(VarKind::StoredEnergy, 0, 0, 1, 0)] = 7.075;
    let mut residuals = vec![0.0; p.num_constraints()];
    p.constraints(&x, &mut residuals);
    let row = p
        .layout()
        .tags
        .iter()
        .position(|tag| {
            matches!(tag.kind, RowKind::SocUpdate { unit: 0 })
                && tag.s == 0
                && tag.t == 1
                && tag.k == 0
        })
        .unwrap();
    assert!(residuals[row].abs() < 1e-12, "residual = {}", residuals[row]);

    // Any other stored-energy value leaves a nonzero residual.
    x[idx.index(VarKind::StoredEnergy, 0, 0, 1, 0)] = 7.0;
    p.constraints(&x, &mut residuals);
    assert!((residuals[row] + 0.075).abs() < 1e-12);
}

#[test]
fn inactive_flexible_load_has_zero_energy_residual() {
    let p = build_small();
    let idx = p.index();
    let mut x = p.starting_point();
    let d = idx.dims();
    for f in 0..d.flex {
        for t in 0..d.periods {
            for s in 0..d.scenarios {
                for k in 0..d.states {
                    x[idx.index(VarKind::FlexInc, f, s, t, k)] = 0.0;
                    x[idx.index(VarKind::FlexDec, f, s, t, k)] = 0.0;
                }
            }
        }
    }
    let mut residuals = vec![0.0; p.num_constraints()];
    p.constraints(&x, &mut residuals);
    for (r, tag) in p.layout().tags.iter().enumerate() {
        if matches!(tag.kind, RowKind::FlexEnergy { .. }) {
            assert_eq!(residuals[r], 0.0);
        }
    }
}

#[test]
fn quadratic_cost_example() {
    // One generator at 1500 MW for one hour: 0.01*1500^2 + 25*1500 + 100.
    let text = r#"
[[buses]]
id = 1
v_min = 0.9
v_max = 1.1
p_load = 0.0
q_load = 0.0
is_slack_angle_ref = true

[[generators]]
bus = 1
p_min = 0.0
p_max = 1500.0
q_min = -500.0
q_max = 500.0
ramp = 1500.0
cost_a = 0.01
cost_b = 25.0
cost_c = 100.0
"#;
    let pu = to_per_unit(&parse_case(text).unwrap(), 100.0).unwrap();
    let scen = ScenarioSet::new(vec![vec![0.0]], vec![1.0], 1, 1.0).unwrap();
    let p = ScopfProblem::build(&pu, &scen, &LoadProfileSet::uniform(1), ObjectiveMode::ProductionQuadratic)
        .unwrap();
    let mut x = p.starting_point();
    x[p.index().index(VarKind::GenP, 0, 0, 0, 0)] = 15.0;
    // Zero out everything else contributing to cost.
    x[p.index().index(VarKind::LoadCurt, 0, 0, 0, 0)] = 0.0;
    assert!((p.eval_objective(&x) - 60_100.0).abs() < 1e-9);
}

#[test]
fn market_matching_point_costs_nothing_in_redispatch_mode() {
    let raw =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/case5.toml"))
            .unwrap();
    let mut net = parse_case(&raw).unwrap();
    for g in net.generators.iter_mut() {
        g.redispatch_cost = Some(35.0);
        g.p_market = vec![500.0];
    }
    let pu = to_per_unit(&net, 100.0).unwrap();
    let scen = wind(4).take_scenarios(2);
    let p = ScopfProblem::build(&pu, &scen, &LoadProfileSet::uniform(4), ObjectiveMode::RedispatchLinear)
        .unwrap();
    let idx = p.index();
    let d = idx.dims();
    let mut x = vec![0.0; idx.len()];
    for s in 0..d.scenarios {
        for t in 0..d.periods {
            for g in 0..d.gens {
                x[idx.index(VarKind::GenP, g, s, t, 0)] = 5.0;
            }
        }
    }
    assert_eq!(p.eval_objective(&x), 0.0);

    // Deviation split of 1 p.u. (100 MW) for one scenario-period prices at
    // the redispatch cost, probability-weighted.
    x[idx.index(VarKind::DevUp, 0, 0, 0, 0)] = 1.0;
    let expected = 0.5 * 35.0 * 100.0;
    assert!((p.eval_objective(&x) - expected).abs() < 1e-9);
}

#[test]
fn bounds_follow_demand_and_availability() {
    let p = build_full();
    let idx = p.index();
    let (xl, xu) = p.variable_bounds();

    // Load curtailment at bus 1 is capped by its 1100 MW demand everywhere.
    for (s, t, k) in [(0, 0, 0), (3, 11, 2), (9, 23, 6)] {
        let i = idx.index(VarKind::LoadCurt, 0, s, t, k);
        assert_eq!(xl[i], 0.0);
        assert_eq!(xu[i], 11.0);
    }
    // Scenario 1 has zero wind in period 4, pinning the curtailment there.
    let i = idx.index(VarKind::ResCurt, 0, 0, 3, 0);
    assert_eq!((xl[i], xu[i]), (0.0, 0.0));
    // Scenario 8 at period 12 offers 0.96 * 1000 MW.
    let i = idx.index(VarKind::ResCurt, 0, 7, 11, 0);
    assert_eq!(xu[i], 9.6);

    // Voltage band rows carry the squared limits.
    let layout = p.layout();
    let row = layout
        .tags
        .iter()
        .position(|tag| matches!(tag.kind, RowKind::VoltageBand { bus: 0 }))
        .unwrap();
    assert!((layout.lower[row] - 0.92 * 0.92).abs() < 1e-15);
    assert!((layout.upper[row] - 1.05 * 1.05).abs() < 1e-15);
}

#[test]
fn angle_reference_row_has_one_unit_entry() {
    let p = build_small();
    let (rows, cols) = p.jacobian_pattern();
    let mut vals = vec![0.0; rows.len()];
    p.jacobian_values(&p.starting_point(), &mut vals);
    let layout = p.layout();
    let row = layout.tags.iter().position(|tag| matches!(tag.kind, RowKind::AngleRef)).unwrap();
    let entries: Vec<(usize, f64)> = rows
        .iter()
        .zip(&cols)
        .zip(&vals)
        .filter(|((r, _), _)| **r == row)
        .map(|((_, c), v)| (*c, *v))
        .collect();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0].1, 1.0);
}

#[test]
fn branch_current_partials_vanish_at_flat_voltage() {
    let p = build_small();
    let (rows, _cols) = p.jacobian_pattern();
    let mut vals = vec![0.0; rows.len()];
    p.jacobian_values(&p.starting_point(), &mut vals);
    let layout = p.layout();
    for (r, tag) in layout.tags.iter().enumerate() {
        if matches!(tag.kind, RowKind::BranchCurrent { .. }) {
            for (i, &rr) in rows.iter().enumerate() {
                if rr == r {
                    assert_eq!(vals[i], 0.0, "row {r} entry {i}");
                }
            }
        }
    }
}

#[test]
fn exclusivity_row_is_slack_when_one_side_rests() {
    let p = build_small();
    let idx = p.index();
    let mut x = p.starting_point();
    x[idx.index(VarKind::Charge, 0, 0, 0, 0)] = 0.0;
    x[idx.index(VarKind::Discharge, 0, 0, 0, 0)] = 0.45; // 45 of 50 MW
    let mut residuals = vec![0.0; p.num_constraints()];
    p.constraints(&x, &mut residuals);
    let row = p
        .layout()
        .tags
        .iter()
        .position(|tag| {
            matches!(tag.kind, RowKind::StorageExclusive { unit: 0 })
                && tag.s == 0
                && tag.t == 0
                && tag.k == 0
        })
        .unwrap();
    assert!(residuals[row] <= 1.0);
    assert!((residuals[row] - 0.9).abs() < 1e-12);
}

// ---------------------------------------------------------------------------
// Finite-difference oracle for first and second derivatives.
// ---------------------------------------------------------------------------

fn dense_jacobian(p: &ScopfProblem, x: &[f64]) -> Vec<Vec<f64>> {
    let (rows, cols) = p.jacobian_pattern();
    let mut vals = vec![0.0; rows.len()];
    p.jacobian_values(x, &mut vals);
    let mut dense = vec![vec![0.0; p.num_vars()]; p.num_constraints()];
    for ((&r, &c), &v) in rows.iter().zip(&cols).zip(&vals) {
        dense[r][c] += v;
    }
    dense
}

fn dense_hessian(p: &ScopfProblem, x: &[f64], sigma: f64, lambda: &[f64]) -> Vec<Vec<f64>> {
    let (rows, cols) = p.hessian_pattern();
    let mut vals = vec![0.0; rows.len()];
    p.hessian_values(x, sigma, lambda, &mut vals);
    let n = p.num_vars();
    let mut dense = vec![vec![0.0; n]; n];
    for ((&r, &c), &v) in rows.iter().zip(&cols).zip(&vals) {
        dense[r][c] += v;
        if r != c {
            dense[c][r] += v;
        }
    }
    dense
}

fn lagrangian_gradient(p: &ScopfProblem, x: &[f64], sigma: f64, lambda: &[f64]) -> Vec<f64> {
    let n = p.num_vars();
    let mut grad = vec![0.0; n];
    p.gradient(x, &mut grad);
    for g in grad.iter_mut() {
        *g *= sigma;
    }
    let (rows, cols) = p.jacobian_pattern();
    let mut vals = vec![0.0; rows.len()];
    p.jacobian_values(x, &mut vals);
    for ((&r, &c), &v) in rows.iter().zip(&cols).zip(&vals) {
        grad[c] += lambda[r] * v;
    }
    grad
}

fn random_interior_point(p: &ScopfProblem, rng: &mut StdRng) -> Vec<f64> {
    let (xl, xu) = p.variable_bounds();
    let mut x = p.starting_point();
    for j in 0..x.len() {
        let (lo, up) = (xl[j], xu[j]);
        if lo == up {
            x[j] = lo;
        } else if lo.is_finite() && up.is_finite() {
            let u: f64 = rng.gen_range(0.1..0.9);
            x[j] = lo + u * (up - lo);
        } else {
            // Voltages and other frees: jitter around the flat profile.
            x[j] += rng.gen_range(-0.05..0.05);
        }
    }
    x
}

#[test]
fn derivatives_match_central_differences() {
    let p = build_small();
    let n = p.num_vars();
    let m = p.num_constraints();
    let mut rng = StdRng::seed_from_u64(42);

    let mut worst = 0.0_f64;
    for _ in 0..3 {
        let x = random_interior_point(&p, &mut rng);
        let lambda: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();

        let mut grad = vec![0.0; n];
        p.gradient(&x, &mut grad);
        let jac = dense_jacobian(&p, &x);
        let hess = dense_hessian(&p, &x, 1.0, &lambda);

        let mut xp = x.clone();
        let mut cp = vec![0.0; m];
        let mut cm = vec![0.0; m];
        for j in 0..n {
            let h = 1e-6 * x[j].abs().max(1.0);
            xp[j] = x[j] + h;
            let fp = p.objective(&xp);
            p.constraints(&xp, &mut cp);
            let gp = lagrangian_gradient(&p, &xp, 1.0, &lambda);
            xp[j] = x[j] - h;
            let fm = p.objective(&xp);
            p.constraints(&xp, &mut cm);
            let gm = lagrangian_gradient(&p, &xp, 1.0, &lambda);
            xp[j] = x[j];

            let fd_grad = (fp - fm) / (2.0 * h);
            worst = worst.max(rel_err(grad[j], fd_grad));
            for r in 0..m {
                worst = worst.max(rel_err(jac[r][j], (cp[r] - cm[r]) / (2.0 * h)));
            }
            for i in 0..n {
                worst = worst.max(rel_err(hess[i][j], (gp[i] - gm[i]) / (2.0 * h)));
            }
        }
    }
    assert!(worst <= 1e-6, "max relative derivative error {worst}");
}

fn rel_err(a: f64, fd: f64) -> f64 {
    (a - fd).abs() / a.abs().max(fd.abs()).max(1.0)
}

proptest::proptest! {
    // With one side at rest the exclusivity expression can never exceed
    // one; it binds only when both sides are active.
    #[test]
    fn exclusivity_rows_are_slack_with_one_side_resting(
        active in 0.0f64..1.0,
        charge_side in proptest::bool::ANY,
    ) {
        let p = build_small();
        let idx = p.index();
        let unit = &p.network().storage[0];
        let mut x = p.starting_point();
        let (ch, dis) = if charge_side {
            (active * unit.p_ch_max, 0.0)
        } else {
            (0.0, active * unit.p_dis_max)
        };
        x[idx.index(VarKind::Charge, 0, 0, 0, 0)] = ch;
        x[idx.index(VarKind::Discharge, 0, 0, 0, 0)] = dis;
        let mut residuals = vec![0.0; scopf_ipm::NlpProblem::num_constraints(&p)];
        scopf_ipm::NlpProblem::constraints(&p, &x, &mut residuals);
        let row = p
            .layout()
            .tags
            .iter()
            .position(|tag| {
                matches!(tag.kind, RowKind::StorageExclusive { unit: 0 })
                    && tag.s == 0 && tag.t == 0 && tag.k == 0
            })
            .unwrap();
        proptest::prop_assert!(residuals[row] <= 1.0 + 1e-12);
    }
}

#[test]
fn branch_current_rows_are_direction_symmetric() {
    // Swapping a branch's endpoints must not change the current expression.
    let build = |from: u32, to: u32| {
        let text = format!(
            r#"
[[buses]]
id = 1
v_min = 0.9
v_max = 1.1
p_load = 100.0
q_load = 30.0
is_slack_angle_ref = true

[[buses]]
id = 2
v_min = 0.9
v_max = 1.1

[[generators]]
bus = 2
p_min = 0.0
p_max = 500.0
q_min = -300.0
q_max = 300.0
ramp = 500.0
cost_a = 0.01
cost_b = 30.0
cost_c = 50.0

[[branches]]
from = {from}
to = {to}
v_nom = 400.0
r = 3.2
x = 16.0
b_sh = 160.0
i_max = 1587.7
"#
        );
        let pu = to_per_unit(&parse_case(&text).unwrap(), 100.0).unwrap();
        let scen = ScenarioSet::new(vec![vec![0.0]], vec![1.0], 1, 1.0).unwrap();
        ScopfProblem::build(&pu, &scen, &LoadProfileSet::uniform(1), ObjectiveMode::ProductionQuadratic)
            .unwrap()
    };
    let forward = build(1, 2);
    let reverse = build(2, 1);
    let mut x = forward.starting_point();
    let idx = forward.index();
    x[idx.index(VarKind::VoltRe, 0, 0, 0, 0)] = 1.02;
    x[idx.index(VarKind::VoltIm, 0, 0, 0, 0)] = 0.0;
    x[idx.index(VarKind::VoltRe, 1, 0, 0, 0)] = 0.97;
    x[idx.index(VarKind::VoltIm, 1, 0, 0, 0)] = -0.04;

    let row_value = |p: &ScopfProblem| {
        let mut res = vec![0.0; scopf_ipm::NlpProblem::num_constraints(p)];
        scopf_ipm::NlpProblem::constraints(p, &x, &mut res);
        let row = p
            .layout()
            .tags
            .iter()
            .position(|tag| matches!(tag.kind, RowKind::BranchCurrent { .. }))
            .unwrap();
        res[row]
    };
    let a = row_value(&forward);
    let b = row_value(&reverse);
    assert!((a - b).abs() < 1e-15, "{a} vs {b}");
    assert!(a > 0.0);
}

#[test]
fn case_variants_filter_elements() {
    let raw =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/case5.toml"))
            .unwrap();
    let net = parse_case(&raw).unwrap();
    let bare = case_variant(&net, false, false, Some(300.0)).unwrap();
    assert!(bare.storage.is_empty());
    assert!(bare.flexible_loads.is_empty());
    assert_eq!(bare.res_plants[0].capacity, 300.0);
    let full = case_variant(&net, true, true, None).unwrap();
    assert_eq!(full.storage.len(), 1);
    assert_eq!(full.flexible_loads.len(), 2);
    assert_eq!(full.res_plants[0].capacity, 1000.0);
}
