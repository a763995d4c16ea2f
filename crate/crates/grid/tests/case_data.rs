use proptest::prelude::*;
use scopf_grid::{parse_case, to_per_unit, validate_network, GridError};

fn fixture() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/case5.toml")).unwrap()
}

#[test]
fn parses_five_bus_fixture() {
    let net = parse_case(&fixture()).unwrap();
    assert_eq!(net.buses.len(), 5);
    assert_eq!(net.branches.len(), 6);
    assert_eq!(net.generators.len(), 3);
    assert_eq!(net.storage.len(), 1);
    assert_eq!(net.flexible_loads.len(), 2);
    assert_eq!(net.res_plants.len(), 1);
    assert_eq!(net.contingencies.num_states(), 7);

    // Units preserved as written.
    assert_eq!(net.buses[0].p_load, 1100.0);
    assert_eq!(net.buses[1].q_load, 200.0);
    assert_eq!(net.branches[1].x, 32.0);
    assert_eq!(net.branches[0].i_max, 1587.7);
    assert_eq!(net.generators[1].cost_b, 60.0);
    assert_eq!(net.storage[0].soc_max, 2200.0);

    // Omitted curtailment prices default to 10x the steepest marginal price
    // at p_max: 10 * (2*0.01*1500 + 60) = 900.
    assert_eq!(net.buses[0].lc_cost, 900.0);
    assert_eq!(net.res_plants[0].gc_cost, 900.0);

    assert!(validate_network(&net).is_empty());
}

#[test]
fn empty_bus_list_is_rejected() {
    let err = parse_case("buses = []\n").unwrap_err();
    match err {
        GridError::Validation(diags) => {
            assert!(diags.iter().any(|d| d.rule.contains("no buses")), "{diags:?}");
        }
        other => panic!("expected validation error, got {other}"),
    }
}

#[test]
fn branch_to_unknown_bus_is_rejected() {
    let text = r#"
[[buses]]
id = 1
v_min = 0.9
v_max = 1.1
is_slack_angle_ref = true

[[branches]]
from = 1
to = 99
r = 1.0
x = 10.0
b_sh = 0.0
i_max = 100.0
v_nom = 100.0
"#;
    let err = parse_case(text).unwrap_err();
    match err {
        GridError::Validation(diags) => {
            let d = diags.iter().find(|d| d.element == "branch 0").expect("names the branch");
            assert!(d.rule.contains("99"), "{d}");
        }
        other => panic!("expected validation error, got {other}"),
    }
}

#[test]
fn schema_violation_reports_path() {
    let err = parse_case("[[buses]]\nid = \"one\"\n").unwrap_err();
    match err {
        // The message pinpoints the offending line and value.
        GridError::Parse(msg) => {
            assert!(msg.contains("line 2"), "{msg}");
            assert!(msg.contains("expected u32"), "{msg}");
        }
        other => panic!("expected parse error, got {other}"),
    }
}

#[test]
fn per_unit_matches_hand_conversion() {
    let net = parse_case(&fixture()).unwrap();
    let pu = to_per_unit(&net, 100.0).unwrap();

    // Z_base = 400^2 / 100 = 1600 Ω.
    let l1 = &pu.branches[0];
    assert!((l1.r - 0.002).abs() < 1e-15);
    assert!((l1.x - 0.010).abs() < 1e-15);

    // I_base = 100e6 / (sqrt(3) * 400e3) = 144.34 A, 1587.7 A ≈ 11.0 p.u.
    assert!((l1.i_max - 11.0).abs() < 1e-3, "i_max = {}", l1.i_max);

    // Series admittance of L1: 1 / (0.002 + j0.01).
    assert!((l1.g - 19.230769230769234).abs() < 1e-12);
    assert!((l1.b + 96.15384615384616).abs() < 1e-12);
    // 160 µS total shunt → 0.256 p.u. → 0.128 each end.
    assert!((l1.b_sh_half - 0.128).abs() < 1e-15);

    assert_eq!(pu.buses[0].p_load, 11.0);
    assert_eq!(pu.generators[0].p_max, 15.0);
    assert_eq!(pu.storage[0].soc_max, 22.0);
}

#[test]
fn per_unit_is_identity_when_bases_coincide() {
    // v_nom = 1 kV and base 1 MVA give Z_base = 1 Ω, so impedances carry over.
    let text = r#"
[[buses]]
id = 1
v_min = 0.9
v_max = 1.1
p_load = 1.0
q_load = 0.0
is_slack_angle_ref = true

[[buses]]
id = 2
v_min = 0.9
v_max = 1.1

[[branches]]
from = 1
to = 2
r = 0.37
x = 1.41
b_sh = 0.0
i_max = 1000.0
v_nom = 1.0
"#;
    let net = parse_case(text).unwrap();
    let pu = to_per_unit(&net, 1.0).unwrap();
    assert!((pu.branches[0].r - 0.37).abs() < 1e-15);
    assert!((pu.branches[0].x - 1.41).abs() < 1e-15);
}

proptest! {
    #[test]
    fn round_trip_reproduces_inputs(base in 0.1f64..2000.0) {
        let net = parse_case(&fixture()).unwrap();
        let back = to_per_unit(&net, base).unwrap().to_physical();
        for (a, b) in net.buses.iter().zip(&back.buses) {
            prop_assert!(rel_close(a.p_load, b.p_load), "{base}");
            prop_assert!(rel_close(a.lc_cost, b.lc_cost));
        }
        for (a, b) in net.branches.iter().zip(&back.branches) {
            prop_assert!(rel_close(a.r, b.r));
            prop_assert!(rel_close(a.x, b.x));
            prop_assert!(rel_close(a.b_sh, b.b_sh));
            prop_assert!(rel_close(a.i_max, b.i_max));
        }
        for (a, b) in net.generators.iter().zip(&back.generators) {
            prop_assert!(rel_close(a.p_max, b.p_max));
            prop_assert!(rel_close(a.cost_a, b.cost_a));
            prop_assert!(rel_close(a.cost_b, b.cost_b));
        }
        for (a, b) in net.storage.iter().zip(&back.storage) {
            prop_assert!(rel_close(a.soc_max, b.soc_max));
            prop_assert!(rel_close(a.cost, b.cost));
        }
    }
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn intact_state_keeps_all_branches() {
    let net = parse_case(&fixture()).unwrap();
    let pu = to_per_unit(&net, 100.0).unwrap();
    assert_eq!(pu.admittance_view(0).unwrap().active_branches.len(), 6);
}

#[test]
fn line_outage_removes_exactly_one_branch() {
    let net = parse_case(&fixture()).unwrap();
    let pu = to_per_unit(&net, 100.0).unwrap();

    // State 2 removes the second branch (buses 1-3).
    let view = pu.admittance_view(2).unwrap();
    assert_eq!(view.active_branches.len(), 5);
    let (b1, b3) = (net.bus_index(1).unwrap(), net.bus_index(3).unwrap());
    for &i in &view.active_branches {
        let br = &pu.branches[i];
        assert!(
            !((br.from, br.to) == (b1, b3) || (br.from, br.to) == (b3, b1)),
            "branch joining buses 1-3 must be out"
        );
    }

    // Contingency monotonicity: each state drops exactly one branch.
    for k in 1..pu.num_states() {
        assert_eq!(pu.admittance_view(k).unwrap().active_branches.len(), 5);
    }
    assert!(matches!(pu.admittance_view(9), Err(GridError::UnknownState(9))));
}

#[test]
fn nodal_sums_are_recomputed_per_state() {
    let net = parse_case(&fixture()).unwrap();
    let pu = to_per_unit(&net, 100.0).unwrap();
    let intact = pu.admittance_view(0).unwrap();
    let outage = pu.admittance_view(2).unwrap();
    let l2 = &pu.branches[1];
    let n = l2.from;
    assert!((intact.g_sum[n] - outage.g_sum[n] - l2.g).abs() < 1e-12);
    assert!(
        (intact.b_total_sum[n] - outage.b_total_sum[n] - (l2.b + l2.b_sh_half)).abs() < 1e-12
    );
}

#[test]
fn removing_the_only_branch_islands_the_network() {
    let text = r#"
[[buses]]
id = 1
v_min = 0.9
v_max = 1.1
p_load = 10.0
q_load = 0.0
is_slack_angle_ref = true

[[buses]]
id = 2
v_min = 0.9
v_max = 1.1

[[branches]]
from = 1
to = 2
r = 1.0
x = 10.0
b_sh = 0.0
i_max = 500.0
v_nom = 100.0

[[contingencies]]
branch = 1
"#;
    let net = parse_case(text).unwrap();
    match to_per_unit(&net, 100.0) {
        Err(GridError::Islanded { state, buses }) => {
            assert_eq!(state, 1);
            assert_eq!(buses, vec![2]);
        }
        other => panic!("expected islanding error, got {other:?}"),
    }
}

#[test]
fn bound_ordering_violation_is_diagnosed() {
    let text = r#"
[[buses]]
id = 1
v_min = 1.06
v_max = 1.05
is_slack_angle_ref = true
"#;
    match parse_case(text) {
        Err(GridError::Validation(diags)) => {
            assert_eq!(diags.len(), 1, "{diags:?}");
            assert!(diags[0].rule.contains("v_min"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn efficiency_out_of_range_is_diagnosed() {
    let mut text = fixture();
    text = text.replace("eta_ch = 0.95", "eta_ch = 1.2");
    match parse_case(&text) {
        Err(GridError::Validation(diags)) => {
            assert_eq!(diags.len(), 1, "{diags:?}");
            assert!(diags[0].rule.contains("eta_ch"));
            assert!(diags[0].element.contains("storage 0"));
        }
        other => panic!("{other:?}"),
    }
}
