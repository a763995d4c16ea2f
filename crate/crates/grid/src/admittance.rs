use crate::per_unit::PuBranch;
use crate::types::ContingencySpec;
use crate::GridError;

/// Branch set and nodal admittance terms of one operation state.
///
/// `g_sum[n]` is the series-conductance sum over branches at `n`; together
/// with `b_total_sum[n]` (series plus half-shunt susceptances) these are the
/// diagonal terms of the rectangular-coordinate injection expressions.
#[derive(Debug, Clone)]
pub struct AdmittanceView {
    pub state: usize,
    pub active_branches: Vec<usize>,
    pub g_sum: Vec<f64>,
    pub b_total_sum: Vec<f64>,
    /// Per bus: (neighbor bus, branch index) over active branches.
    pub adjacency: Vec<Vec<(usize, usize)>>,
}

impl AdmittanceView {
    fn build(
        state: usize,
        bus_ids: &[u32],
        branches: &[PuBranch],
        removed: Option<usize>,
    ) -> Result<Self, GridError> {
        let num_buses = bus_ids.len();
        let active_branches: Vec<usize> = (0..branches.len())
            .filter(|&i| Some(i) != removed)
            .collect();

        let mut g_sum = vec![0.0; num_buses];
        let mut b_total_sum = vec![0.0; num_buses];
        let mut adjacency = vec![Vec::new(); num_buses];
        for &i in &active_branches {
            let br = &branches[i];
            for (n, m) in [(br.from, br.to), (br.to, br.from)] {
                g_sum[n] += br.g;
                b_total_sum[n] += br.b_sh_half + br.b;
                adjacency[n].push((m, i));
            }
        }

        let isolated = isolated_buses(bus_ids, branches, &active_branches);
        if !isolated.is_empty() {
            return Err(GridError::Islanded { state, buses: isolated });
        }

        Ok(Self { state, active_branches, g_sum, b_total_sum, adjacency })
    }
}

/// Build one view per operation state, rejecting states that island buses.
pub(crate) fn build_views(
    bus_ids: &[u32],
    branches: &[PuBranch],
    contingencies: &ContingencySpec,
) -> Result<Vec<AdmittanceView>, GridError> {
    (0..contingencies.num_states())
        .map(|k| AdmittanceView::build(k, bus_ids, branches, contingencies.removed_branch(k)))
        .collect()
}

/// Bus labels unreachable from the first bus over the active branch set.
/// A single-bus network is trivially connected.
fn isolated_buses(bus_ids: &[u32], branches: &[PuBranch], active: &[usize]) -> Vec<u32> {
    let num_buses = bus_ids.len();
    if num_buses <= 1 {
        return Vec::new();
    }
    let mut adj = vec![Vec::new(); num_buses];
    for &i in active {
        adj[branches[i].from].push(branches[i].to);
        adj[branches[i].to].push(branches[i].from);
    }
    let mut reached = vec![false; num_buses];
    let mut stack = vec![0usize];
    reached[0] = true;
    while let Some(n) = stack.pop() {
        for &m in &adj[n] {
            if !reached[m] {
                reached[m] = true;
                stack.push(m);
            }
        }
    }
    reached
        .iter()
        .enumerate()
        .filter(|(_, &r)| !r)
        .map(|(n, _)| bus_ids[n])
        .collect()
}
