use scopf_grid::{parse_case, to_per_unit};
use scopf_ipm::{solve, NlpProblem, SolveStatus, SolverOptions};
use scopf_nlp::{ObjectiveMode, ScopfProblem, VarKind};
use scopf_scenario::{LoadProfileSet, ScenarioSet};

fn three_bus(with_market: bool) -> scopf_grid::Network {
    let market = if with_market {
        "p_market = [250.0, 320.0, 180.0]\nredispatch_cost = 12.0\n"
    } else {
        ""
    };
    let text = format!(
        r#"
[[buses]]
id = 1
v_min = 0.92
v_max = 1.08
p_load = 300.0
q_load = 90.0

[[buses]]
id = 2
v_min = 0.92
v_max = 1.08
is_slack_angle_ref = true

[[buses]]
id = 3
v_min = 0.92
v_max = 1.08
p_load = 100.0
q_load = 20.0

[[branches]]
from = 1
to = 2
v_nom = 400.0
r = 3.2
x = 16.0
b_sh = 160.0
i_max = 1587.7

[[branches]]
from = 2
to = 3
v_nom = 400.0
r = 6.4
x = 32.0
b_sh = 320.0
i_max = 1587.7

[[branches]]
from = 1
to = 3
v_nom = 400.0
r = 6.4
x = 32.0
b_sh = 320.0
i_max = 1587.7

[[generators]]
bus = 2
p_min = 0.0
p_max = 900.0
q_min = -400.0
q_max = 400.0
ramp = 300.0
cost_a = 0.01
cost_b = 25.0
cost_c = 100.0
{market}
[[contingencies]]
branch = 3
"#
    );
    parse_case(&text).unwrap()
}

#[test]
fn load_profiles_reshape_demand_and_curtailment_bounds() {
    let net = three_bus(false);
    let pu = to_per_unit(&net, 100.0).unwrap();
    let scen = ScenarioSet::new(vec![vec![0.0; 3]], vec![1.0], 3, 1.0).unwrap();
    let loads = LoadProfileSet::uniform(3).with_bus(1, vec![1.0, 0.6, 0.0]).unwrap();
    let p = ScopfProblem::build(&pu, &scen, &loads, ObjectiveMode::ProductionQuadratic).unwrap();

    // Demand follows the multiplier, reactive power at the same factor.
    let close = |a: (f64, f64), b: (f64, f64)| {
        (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12
    };
    assert!(close(p.demand(0, 0), (3.0, 0.9)));
    assert!(close(p.demand(0, 1), (1.8, 0.54)));
    assert!(close(p.demand(0, 2), (0.0, 0.0)));
    // The unprofiled bus keeps its nominal demand.
    assert!(close(p.demand(2, 1), (1.0, 0.2)));

    // Curtailment bounds track the time-varying demand; the zero-demand
    // period pins the variable.
    let idx = p.index();
    let (xl, xu) = p.variable_bounds();
    assert_eq!(xu[idx.index(VarKind::LoadCurt, 0, 0, 0, 0)], 3.0);
    assert!((xu[idx.index(VarKind::LoadCurt, 0, 0, 1, 0)] - 1.8).abs() < 1e-12);
    let pinned = idx.index(VarKind::LoadCurt, 0, 0, 2, 0);
    assert_eq!((xl[pinned], xu[pinned]), (0.0, 0.0));

    // The shaped problem still solves and follows the demand pattern.
    let result = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(result.status, SolveStatus::Converged);

    // The cost split reconciles with the objective.
    let costs = scopf_nlp::CostBreakdown::from_solution(&p, &result.iterate.x);
    let rel = (costs.total() - result.objective).abs() / result.objective.abs().max(1.0);
    assert!(rel <= 1e-6, "breakdown {} vs objective {}", costs.total(), result.objective);

    let x = &result.iterate.x;
    let gen_t0 = x[idx.index(VarKind::GenP, 0, 0, 0, 0)];
    let gen_t2 = x[idx.index(VarKind::GenP, 0, 0, 2, 0)];
    // Period 2 only serves the 100 MW bus, so dispatch drops with demand.
    assert!(gen_t2 < gen_t0 - 1.5, "t0 {gen_t0} vs t2 {gen_t2}");
}

#[test]
fn redispatch_mode_prices_deviations_from_the_market_schedule() {
    let net = three_bus(true);
    let pu = to_per_unit(&net, 100.0).unwrap();
    let scen = ScenarioSet::new(vec![vec![0.0; 3]], vec![1.0], 3, 1.0).unwrap();
    let loads = LoadProfileSet::uniform(3);
    let p = ScopfProblem::build(&pu, &scen, &loads, ObjectiveMode::RedispatchLinear).unwrap();

    let result = solve(&p, &SolverOptions::default()).unwrap();
    assert_eq!(result.status, SolveStatus::Converged);

    // The market schedule is below the 400 MW demand plus losses in every
    // period, so upward deviations are unavoidable and priced linearly;
    // the objective stays nonnegative and close to the deviation value.
    assert!(result.objective >= 0.0);
    let idx = p.index();
    let x = &result.iterate.x;
    let mut expected = 0.0;
    for (t, market) in [2.5, 3.2, 1.8].iter().enumerate() {
        let dispatch = x[idx.index(VarKind::GenP, 0, 0, t, 0)];
        expected += 12.0 * 100.0 * (dispatch - market).abs();
    }
    let rel = (result.objective - expected).abs() / expected.max(1.0);
    assert!(rel < 1e-3, "objective {} vs deviation pricing {expected}", result.objective);

    // The split never pays for both directions at once.
    for t in 0..3 {
        let up = x[idx.index(VarKind::DevUp, 0, 0, t, 0)];
        let dn = x[idx.index(VarKind::DevDn, 0, 0, t, 0)];
        assert!(up.min(dn) < 1e-5, "t{t}: up {up} dn {dn}");
    }
}
