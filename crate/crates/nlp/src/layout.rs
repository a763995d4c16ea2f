//! Constraint rows: provenance tags, ordering, and row bounds.
//!
//! Equality rows come first, inequality rows after. Within each section the
//! order is state-major, matching the variable layout. Every row carries a
//! tag naming its equation family, element, scenario, period and state so
//! diagnostics and audits can point at the exact offending row.

use scopf_grid::NormalizedNetwork;

/// Equation family of one constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Nodal active power balance.
    ActiveBalance { bus: usize },
    /// Nodal reactive power balance.
    ReactiveBalance { bus: usize },
    /// Imaginary voltage part pinned to zero at the reference bus.
    AngleRef,
    /// Dispatch minus deviation split equals the market schedule (state 0).
    MarketLink { gen: usize },
    /// Stored-energy propagation from period `t-1` to `t`.
    SocUpdate { unit: usize },
    /// Start-of-horizon energy equals end-of-horizon energy.
    SocCycle { unit: usize },
    /// Shifted energy sums to zero over the horizon.
    FlexEnergy { load: usize },
    /// Longitudinal branch current limit.
    BranchCurrent { branch: usize },
    /// Squared voltage magnitude band.
    VoltageBand { bus: usize },
    /// Charge/discharge shares bounded by one.
    StorageExclusive { unit: usize },
    /// Increase/decrease shares bounded by one.
    FlexExclusive { load: usize },
    /// Dispatch change between consecutive periods (state 0).
    RampLimit { gen: usize },
    /// Post-contingency dispatch tied to the preventive schedule.
    CorrectiveCoupling { gen: usize },
}

impl RowKind {
    pub fn is_equality(&self) -> bool {
        matches!(
            self,
            RowKind::ActiveBalance { .. }
                | RowKind::ReactiveBalance { .. }
                | RowKind::AngleRef
                | RowKind::MarketLink { .. }
                | RowKind::SocUpdate { .. }
                | RowKind::SocCycle { .. }
                | RowKind::FlexEnergy { .. }
        )
    }
}

/// Provenance of one row. `t` is the row's own period where one applies
/// (`SocUpdate` carries the target period, horizon-wide rows carry 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowTag {
    pub kind: RowKind,
    pub s: usize,
    pub t: usize,
    pub k: usize,
}

/// The full row set of one model instance.
#[derive(Debug, Clone)]
pub struct ConstraintLayout {
    pub tags: Vec<RowTag>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub num_equalities: usize,
}

impl ConstraintLayout {
    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn num_inequalities(&self) -> usize {
        self.len() - self.num_equalities
    }

    /// Build the layout for a normalized network over `(S, T, K)` with the
    /// given objective mode. Row bounds that depend on data (current limits,
    /// voltage bands, ramp widths) are filled here; balance-style equalities
    /// are zero rows.
    pub fn build(
        net: &NormalizedNetwork,
        scenarios: usize,
        periods: usize,
        redispatch: bool,
    ) -> Self {
        let states = net.num_states();
        let mut tags = Vec::new();
        let mut lower = Vec::new();
        let mut upper = Vec::new();

        let push = |tag: RowTag, lo: f64, up: f64, tags: &mut Vec<RowTag>, lower: &mut Vec<f64>, upper: &mut Vec<f64>| {
            tags.push(tag);
            lower.push(lo);
            upper.push(up);
        };

        // Equality section.
        for k in 0..states {
            for s in 0..scenarios {
                for t in 0..periods {
                    for bus in 0..net.buses.len() {
                        push(
                            RowTag { kind: RowKind::ActiveBalance { bus }, s, t, k },
                            0.0,
                            0.0,
                            &mut tags,
                            &mut lower,
                            &mut upper,
                        );
                    }
                    for bus in 0..net.buses.len() {
                        push(
                            RowTag { kind: RowKind::ReactiveBalance { bus }, s, t, k },
                            0.0,
                            0.0,
                            &mut tags,
                            &mut lower,
                            &mut upper,
                        );
                    }
                    push(
                        RowTag { kind: RowKind::AngleRef, s, t, k },
                        0.0,
                        0.0,
                        &mut tags,
                        &mut lower,
                        &mut upper,
                    );
                    if redispatch && k == 0 {
                        for gen in 0..net.generators.len() {
                            push(
                                RowTag { kind: RowKind::MarketLink { gen }, s, t, k },
                                0.0,
                                0.0,
                                &mut tags,
                                &mut lower,
                                &mut upper,
                            );
                        }
                    }
                }
                for unit in 0..net.storage.len() {
                    for t in 1..periods {
                        push(
                            RowTag { kind: RowKind::SocUpdate { unit }, s, t, k },
                            0.0,
                            0.0,
                            &mut tags,
                            &mut lower,
                            &mut upper,
                        );
                    }
                    push(
                        RowTag { kind: RowKind::SocCycle { unit }, s, t: 0, k },
                        0.0,
                        0.0,
                        &mut tags,
                        &mut lower,
                        &mut upper,
                    );
                }
                for load in 0..net.flexible_loads.len() {
                    push(
                        RowTag { kind: RowKind::FlexEnergy { load }, s, t: 0, k },
                        0.0,
                        0.0,
                        &mut tags,
                        &mut lower,
                        &mut upper,
                    );
                }
            }
        }
        let num_equalities = tags.len();

        // Inequality section.
        for k in 0..states {
            let view = net.admittance_view(k).expect("state within range");
            for s in 0..scenarios {
                for t in 0..periods {
                    for &branch in &view.active_branches {
                        let imax = net.branches[branch].i_max;
                        push(
                            RowTag { kind: RowKind::BranchCurrent { branch }, s, t, k },
                            f64::NEG_INFINITY,
                            imax * imax,
                            &mut tags,
                            &mut lower,
                            &mut upper,
                        );
                    }
                    for bus in 0..net.buses.len() {
                        let b = &net.buses[bus];
                        push(
                            RowTag { kind: RowKind::VoltageBand { bus }, s, t, k },
                            b.v_min * b.v_min,
                            b.v_max * b.v_max,
                            &mut tags,
                            &mut lower,
                            &mut upper,
                        );
                    }
                    for unit in 0..net.storage.len() {
                        push(
                            RowTag { kind: RowKind::StorageExclusive { unit }, s, t, k },
                            f64::NEG_INFINITY,
                            1.0,
                            &mut tags,
                            &mut lower,
                            &mut upper,
                        );
                    }
                    for load in 0..net.flexible_loads.len() {
                        push(
                            RowTag { kind: RowKind::FlexExclusive { load }, s, t, k },
                            f64::NEG_INFINITY,
                            1.0,
                            &mut tags,
                            &mut lower,
                            &mut upper,
                        );
                    }
                    if k == 0 && t >= 1 {
                        for gen in 0..net.generators.len() {
                            let ramp = net.generators[gen].ramp;
                            push(
                                RowTag { kind: RowKind::RampLimit { gen }, s, t, k },
                                -ramp,
                                ramp,
                                &mut tags,
                                &mut lower,
                                &mut upper,
                            );
                        }
                    }
                    if k >= 1 {
                        for gen in 0..net.generators.len() {
                            let ramp = net.generators[gen].ramp;
                            push(
                                RowTag { kind: RowKind::CorrectiveCoupling { gen }, s, t, k },
                                -ramp,
                                ramp,
                                &mut tags,
                                &mut lower,
                                &mut upper,
                            );
                        }
                    }
                }
            }
        }

        ConstraintLayout { tags, lower, upper, num_equalities }
    }

    /// Closed-form equality count: balance pairs and the angle reference per
    /// `(s, t, k)`, storage propagation and closure per `(e, s, k)`, energy
    /// neutrality per `(f, s, k)`, plus the market link per `(g, s, t)` in
    /// redispatch mode.
    pub fn expected_equalities(d: crate::Dims) -> usize {
        let stk = d.scenarios * d.periods * d.states;
        (2 * d.buses + 1) * stk
            + d.storage * d.scenarios * d.states * (d.periods - 1)
            + d.storage * d.scenarios * d.states
            + d.flex * d.scenarios * d.states
            + if d.redispatch { d.gens * d.scenarios * d.periods } else { 0 }
    }
}
