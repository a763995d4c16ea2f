use std::collections::HashSet;
use std::fmt;

use crate::types::Network;

/// One violated data rule, tied to the offending element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// Element label, e.g. `bus 4`, `branch 2`, `storage 0`.
    pub element: String,
    /// The rule that failed, in plain words.
    pub rule: String,
}

impl Diagnostic {
    fn new(element: impl Into<String>, rule: impl Into<String>) -> Self {
        Self { element: element.into(), rule: rule.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.element, self.rule)
    }
}

/// Check every data invariant and return one diagnostic per violation.
/// An empty list means the network is well formed.
// Negated comparisons are deliberate: NaN must fail every check.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn validate_network(net: &Network) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    if net.buses.is_empty() {
        diags.push(Diagnostic::new("network", "no buses"));
        return diags;
    }

    let mut seen = HashSet::new();
    for bus in &net.buses {
        let el = format!("bus {}", bus.id);
        if !seen.insert(bus.id) {
            diags.push(Diagnostic::new(&el, "duplicate bus id"));
        }
        if !(bus.v_min > 0.0) {
            diags.push(Diagnostic::new(&el, format!("v_min must be positive, got {}", bus.v_min)));
        }
        if !(bus.v_min < bus.v_max) {
            diags.push(Diagnostic::new(
                &el,
                format!("v_min {} must be below v_max {}", bus.v_min, bus.v_max),
            ));
        }
        if !(bus.p_load >= 0.0) {
            diags.push(Diagnostic::new(&el, format!("p_load must be nonnegative, got {}", bus.p_load)));
        }
        if !(bus.lc_cost >= 0.0) {
            diags.push(Diagnostic::new(&el, format!("lc_cost must be nonnegative, got {}", bus.lc_cost)));
        }
    }

    let refs = net.buses.iter().filter(|b| b.is_slack_angle_ref).count();
    if refs != 1 {
        diags.push(Diagnostic::new(
            "network",
            format!("exactly one bus must be the angle reference, found {refs}"),
        ));
    }

    for (i, br) in net.branches.iter().enumerate() {
        let el = format!("branch {i}");
        if br.from == br.to {
            diags.push(Diagnostic::new(&el, format!("joins bus {} to itself", br.from)));
        }
        for end in [br.from, br.to] {
            if net.bus_index(end).is_none() {
                diags.push(Diagnostic::new(&el, format!("references unknown bus {end}")));
            }
        }
        if br.x == 0.0 {
            diags.push(Diagnostic::new(&el, "series reactance x must be nonzero"));
        }
        if !(br.i_max > 0.0) {
            diags.push(Diagnostic::new(&el, format!("i_max must be positive, got {}", br.i_max)));
        }
        if !(br.v_nom > 0.0) {
            diags.push(Diagnostic::new(&el, format!("v_nom must be positive, got {}", br.v_nom)));
        }
    }

    for (i, g) in net.generators.iter().enumerate() {
        let el = format!("generator {i}");
        if net.bus_index(g.bus).is_none() {
            diags.push(Diagnostic::new(&el, format!("references unknown bus {}", g.bus)));
        }
        if !(g.p_min <= g.p_max) {
            diags.push(Diagnostic::new(&el, format!("p_min {} exceeds p_max {}", g.p_min, g.p_max)));
        }
        if !(g.q_min <= g.q_max) {
            diags.push(Diagnostic::new(&el, format!("q_min {} exceeds q_max {}", g.q_min, g.q_max)));
        }
        if !(g.ramp >= 0.0) {
            diags.push(Diagnostic::new(&el, format!("ramp must be nonnegative, got {}", g.ramp)));
        }
    }

    for (i, e) in net.storage.iter().enumerate() {
        let el = format!("storage {i}");
        if net.bus_index(e.bus).is_none() {
            diags.push(Diagnostic::new(&el, format!("references unknown bus {}", e.bus)));
        }
        if !(0.0 <= e.soc_min && e.soc_min <= e.soc_initial && e.soc_initial <= e.soc_max) {
            diags.push(Diagnostic::new(
                &el,
                format!(
                    "energy bounds must satisfy 0 <= soc_min <= soc_initial <= soc_max, got {} / {} / {}",
                    e.soc_min, e.soc_initial, e.soc_max
                ),
            ));
        }
        if !(e.p_ch_max > 0.0) {
            diags.push(Diagnostic::new(&el, format!("p_ch_max must be positive, got {}", e.p_ch_max)));
        }
        if !(e.p_dis_max > 0.0) {
            diags.push(Diagnostic::new(&el, format!("p_dis_max must be positive, got {}", e.p_dis_max)));
        }
        for (name, eta) in [("eta_ch", e.eta_ch), ("eta_dis", e.eta_dis)] {
            if !(eta > 0.0 && eta <= 1.0) {
                diags.push(Diagnostic::new(&el, format!("{name} must lie in (0, 1], got {eta}")));
            }
        }
    }

    for (i, f) in net.flexible_loads.iter().enumerate() {
        let el = format!("flexible_load {i}");
        if net.bus_index(f.bus).is_none() {
            diags.push(Diagnostic::new(&el, format!("references unknown bus {}", f.bus)));
        }
        if !(f.p_inc_max > 0.0) {
            diags.push(Diagnostic::new(&el, format!("p_inc_max must be positive, got {}", f.p_inc_max)));
        }
        if !(f.p_dec_max > 0.0) {
            diags.push(Diagnostic::new(&el, format!("p_dec_max must be positive, got {}", f.p_dec_max)));
        }
    }

    for (i, r) in net.res_plants.iter().enumerate() {
        let el = format!("res_plant {i}");
        if net.bus_index(r.bus).is_none() {
            diags.push(Diagnostic::new(&el, format!("references unknown bus {}", r.bus)));
        }
        if !(r.capacity >= 0.0) {
            diags.push(Diagnostic::new(&el, format!("capacity must be nonnegative, got {}", r.capacity)));
        }
        if !(r.gc_cost >= 0.0) {
            diags.push(Diagnostic::new(&el, format!("gc_cost must be nonnegative, got {}", r.gc_cost)));
        }
    }

    let mut seen_outage = HashSet::new();
    for (k, &br) in net.contingencies.outages().iter().enumerate() {
        let el = format!("contingency {}", k + 1);
        if br >= net.branches.len() {
            diags.push(Diagnostic::new(&el, format!("removes unknown branch {br}")));
        }
        if !seen_outage.insert(br) {
            diags.push(Diagnostic::new(&el, format!("duplicates an earlier state removing branch {br}")));
        }
    }

    diags
}
