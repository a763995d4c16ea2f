//! The interior-point iteration: barrier homotopy, inertia-corrected Newton
//! steps, fraction-to-boundary stepping and an ℓ1 merit line search.

use std::time::Instant;

use crate::kkt::KktSystem;
use crate::{IpmError, NlpProblem};

const KAPPA_EPS: f64 = 10.0; // barrier subproblem tolerance is KAPPA_EPS * mu
const KAPPA_SIGMA: f64 = 1e10; // multiplier projection corridor
const SMAX: f64 = 100.0; // residual scaling threshold
const MIN_STEP: f64 = 1e-12;
const MAX_BACKTRACKS: usize = 40;

/// Barrier parameter schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuStrategy {
    /// Fiacco-McCormick: µ ← max(µ_min, min(factor·µ, µ^1.5)).
    Monotone { factor: f64 },
    /// Centrality-driven target from the current complementarity spread.
    Adaptive,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Relative convergence tolerance on the scaled KKT residuals.
    pub tol: f64,
    pub max_iter: usize,
    pub mu_strategy: MuStrategy,
    pub mu_init: f64,
    /// Fraction-to-boundary coefficient.
    pub tau: f64,
    /// First primal regularization tried after a wrong-inertia factorization.
    pub reg_floor: f64,
    /// Regularization cap; exceeding it is a numeric failure.
    pub reg_cap: f64,
    /// Armijo sufficient-decrease coefficient.
    pub armijo: f64,
    /// Safety fraction for the ℓ1 merit penalty update.
    pub merit_rho: f64,
    /// Attempt one second-order correction per iteration in the line search.
    pub second_order_correction: bool,
    /// Write one delimited log line per iteration to standard error.
    pub log: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_iter: 500,
            mu_strategy: MuStrategy::Monotone { factor: 0.2 },
            mu_init: 0.1,
            tau: 0.995,
            reg_floor: 1e-8,
            reg_cap: 1e20,
            armijo: 1e-4,
            merit_rho: 0.5,
            second_order_correction: true,
            log: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationLimit,
    NumericFailure,
    InfeasibleDetected,
}

/// Full primal-dual point. Equality rows have no slack; their entries in
/// the slack-indexed arrays are skipped (see `ineq_rows`).
#[derive(Debug, Clone)]
pub struct Iterate {
    pub x: Vec<f64>,
    /// One slack per inequality row, aligned with `ineq_rows`.
    pub slacks: Vec<f64>,
    /// One multiplier per constraint row.
    pub multipliers: Vec<f64>,
    /// Indices of inequality rows within the constraint vector.
    pub ineq_rows: Vec<usize>,
    /// Bound multipliers for the variables (zero where unbounded).
    pub bound_lower: Vec<f64>,
    pub bound_upper: Vec<f64>,
    /// Bound multipliers for the slacks, aligned with `ineq_rows`.
    pub slack_lower: Vec<f64>,
    pub slack_upper: Vec<f64>,
    pub mu: f64,
    pub iteration: usize,
}

impl Iterate {
    /// Multipliers of equality rows, in row order.
    pub fn eq_multipliers(&self) -> Vec<f64> {
        let mut ineq = self.ineq_rows.iter().peekable();
        let mut out = Vec::new();
        for (r, &y) in self.multipliers.iter().enumerate() {
            if ineq.peek() == Some(&&r) {
                ineq.next();
            } else {
                out.push(y);
            }
        }
        out
    }

    /// Multipliers of inequality rows, aligned with `ineq_rows`.
    pub fn ineq_multipliers(&self) -> Vec<f64> {
        self.ineq_rows.iter().map(|&r| self.multipliers[r]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub status: SolveStatus,
    pub iterate: Iterate,
    pub objective: f64,
    pub iterations: usize,
    pub wall_seconds: f64,
    /// Final scaled KKT residual norms at µ = 0.
    pub stationarity: f64,
    pub feasibility: f64,
    pub complementarity: f64,
}

impl SolverResult {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

/// Internal description of one primal component (a free variable or a slack).
#[derive(Clone, Copy)]
struct Comp {
    lo: f64,
    up: f64,
}

impl Comp {
    fn has_lo(&self) -> bool {
        self.lo.is_finite()
    }
    fn has_up(&self) -> bool {
        self.up.is_finite()
    }
}

struct Workspace {
    grad: Vec<f64>,
    cons: Vec<f64>,
    jac: Vec<f64>,
    hess: Vec<f64>,
    jty: Vec<f64>,
    trial_x: Vec<f64>,
    trial_cons: Vec<f64>,
}

/// Solve the problem from its own initial point.
pub fn solve(problem: &dyn NlpProblem, opts: &SolverOptions) -> Result<SolverResult, IpmError> {
    let t0 = Instant::now();
    let n = problem.num_vars();
    let m = problem.num_constraints();
    let (xl, xu) = problem.variable_bounds();
    let (cl, cu) = problem.constraint_bounds();
    if xl.len() != n || xu.len() != n {
        return Err(IpmError::BadProblem("variable bound length mismatch".into()));
    }
    if cl.len() != m || cu.len() != m {
        return Err(IpmError::BadProblem("constraint bound length mismatch".into()));
    }
    for j in 0..n {
        if xl[j] > xu[j] {
            return Err(IpmError::BadProblem(format!("variable {j} has crossed bounds")));
        }
    }
    for r in 0..m {
        if cl[r] > cu[r] {
            return Err(IpmError::BadProblem(format!("row {r} has crossed bounds")));
        }
        if !cl[r].is_finite() && !cu[r].is_finite() {
            return Err(IpmError::BadProblem(format!("row {r} is unbounded on both sides")));
        }
    }

    // Partition variables: pinned variables (equal bounds) become parameters.
    let fixed: Vec<bool> = (0..n).map(|j| xl[j] == xu[j]).collect();
    let free_x: Vec<usize> = (0..n).filter(|&j| !fixed[j]).collect();
    let x_pos: Vec<Option<usize>> = {
        let mut pos = vec![None; n];
        for (p, &j) in free_x.iter().enumerate() {
            pos[j] = Some(p);
        }
        pos
    };
    let nf = free_x.len();

    // Partition rows: equality rows have no slack.
    let ineq_rows: Vec<usize> = (0..m).filter(|&r| cl[r] != cu[r]).collect();
    let slack_of_row: Vec<Option<usize>> = {
        let mut pos = vec![None; m];
        for (p, &r) in ineq_rows.iter().enumerate() {
            pos[r] = Some(p);
        }
        pos
    };
    let mi = ineq_rows.len();
    let nw = nf + mi;

    // Primal components: free variables first, slacks after.
    let comps: Vec<Comp> = free_x
        .iter()
        .map(|&j| Comp { lo: xl[j], up: xu[j] })
        .chain(ineq_rows.iter().map(|&r| Comp { lo: cl[r], up: cu[r] }))
        .collect();

    // Patterns, with entries touching pinned variables dropped.
    let (jac_r, jac_c) = problem.jacobian_pattern();
    if jac_r.len() != jac_c.len() {
        return Err(IpmError::BadProblem("jacobian pattern length mismatch".into()));
    }
    let (hess_r, hess_c) = problem.hessian_pattern();
    if hess_r.len() != hess_c.len() {
        return Err(IpmError::BadProblem("hessian pattern length mismatch".into()));
    }
    let jac_keep: Vec<Option<usize>> = jac_c.iter().map(|&c| x_pos[c]).collect();
    let kept_jac: Vec<(usize, usize)> = jac_r
        .iter()
        .zip(&jac_keep)
        .filter_map(|(&r, keep)| keep.map(|c| (r, c)))
        .collect();
    let hess_keep: Vec<Option<(usize, usize)>> = hess_r
        .iter()
        .zip(&hess_c)
        .map(|(&r, &c)| match (x_pos[r], x_pos[c]) {
            (Some(pr), Some(pc)) => Some((pr.max(pc), pr.min(pc))),
            _ => None,
        })
        .collect();
    let kept_hess: Vec<(usize, usize)> = hess_keep.iter().flatten().copied().collect();

    let mut kkt = KktSystem::new(
        nf,
        m,
        &kept_hess.iter().map(|e| e.0).collect::<Vec<_>>(),
        &kept_hess.iter().map(|e| e.1).collect::<Vec<_>>(),
        &kept_jac.iter().map(|e| e.0).collect::<Vec<_>>(),
        &kept_jac.iter().map(|e| e.1).collect::<Vec<_>>(),
    )?;

    let mut ws = Workspace {
        grad: vec![0.0; n],
        cons: vec![0.0; m],
        jac: vec![0.0; jac_r.len()],
        hess: vec![0.0; hess_r.len()],
        jty: vec![0.0; n],
        trial_x: vec![0.0; n],
        trial_cons: vec![0.0; m],
    };

    // Starting point: pin fixed variables, push the rest strictly inside.
    let mut x = problem.initial_point();
    assert_eq!(x.len(), n);
    for j in 0..n {
        if fixed[j] {
            x[j] = xl[j];
        }
    }
    let mut w = vec![0.0; nw];
    for (p, &j) in free_x.iter().enumerate() {
        w[p] = push_interior(x[j], &comps[p]);
        x[j] = w[p];
    }
    problem.constraints(&x, &mut ws.cons);
    for (p, &r) in ineq_rows.iter().enumerate() {
        // Slack starts at the constraint value, pushed inside its bounds by
        // at least 1e-2 to avoid tiny initial complementarity products.
        w[nf + p] = push_interior_by(ws.cons[r], &comps[nf + p], 1e-2);
    }

    let mut mu = opts.mu_init;
    let mu_min = opts.tol / 11.0;
    let mut y = vec![0.0; m];
    let mut zl = vec![0.0; nw];
    let mut zu = vec![0.0; nw];
    for i in 0..nw {
        if comps[i].has_lo() {
            zl[i] = (mu / (w[i] - comps[i].lo)).clamp(1e-6, 1e6);
        }
        if comps[i].has_up() {
            zu[i] = (mu / (comps[i].up - w[i])).clamp(1e-6, 1e6);
        }
    }

    // Objective scaling from the gradient at the start, IPOPT style.
    problem.gradient(&x, &mut ws.grad);
    let grad0 = ws.grad.iter().fold(0.0_f64, |a, &g| a.max(g.abs()));
    let f_scale = if grad0 > SMAX { SMAX / grad0 } else { 1.0 };

    let mut delta_last = 0.0_f64;
    let mut nu = 1.0_f64; // merit penalty
    let mut recoveries_at_mu: (f64, usize) = (f64::NAN, 0);
    let mut crawl_iters = 0usize;
    let status: SolveStatus;
    let mut iter = 0usize;

    // Step and residual buffers.
    let mut rhs = vec![0.0; nf + m];
    let mut sigma = vec![0.0; nw];
    let mut sigma_x = vec![0.0; nf];
    let mut diag_y = vec![0.0; m];
    let mut dw = vec![0.0; nw];
    let mut dy = vec![0.0; m];
    let mut dzl = vec![0.0; nw];
    let mut dzu = vec![0.0; nw];
    let mut rs = vec![0.0; mi];

    let mut f_val = problem.objective(&x) * f_scale;
    problem.constraints(&x, &mut ws.cons);

    'outer: loop {
        problem.gradient(&x, &mut ws.grad);
        for g in ws.grad.iter_mut() {
            *g *= f_scale;
        }
        problem.jacobian_values(&x, &mut ws.jac);

        // J'y over all variables.
        ws.jty.fill(0.0);
        for (k, (&r, &c)) in jac_r.iter().zip(&jac_c).enumerate() {
            ws.jty[c] += ws.jac[k] * y[r];
        }

        // KKT residuals and their scaled norms.
        let mut dual_inf = 0.0_f64;
        for (p, &j) in free_x.iter().enumerate() {
            let rd = ws.grad[j] + ws.jty[j] - zl[p] + zu[p];
            dual_inf = dual_inf.max(rd.abs());
        }
        for (p, &r) in ineq_rows.iter().enumerate() {
            let i = nf + p;
            let rd = -y[r] - zl[i] + zu[i];
            dual_inf = dual_inf.max(rd.abs());
        }
        let mut primal_inf = 0.0_f64;
        for r in 0..m {
            let g = match slack_of_row[r] {
                None => ws.cons[r] - cl[r],
                Some(p) => ws.cons[r] - w[nf + p],
            };
            primal_inf = primal_inf.max(g.abs());
        }
        let (mut compl_mu, mut compl_0) = (0.0_f64, 0.0_f64);
        let mut z_sum = 0.0_f64;
        let mut nb = 0usize;
        for i in 0..nw {
            if comps[i].has_lo() {
                let prod = (w[i] - comps[i].lo) * zl[i];
                compl_mu = compl_mu.max((prod - mu).abs());
                compl_0 = compl_0.max(prod.abs());
                z_sum += zl[i];
                nb += 1;
            }
            if comps[i].has_up() {
                let prod = (comps[i].up - w[i]) * zu[i];
                compl_mu = compl_mu.max((prod - mu).abs());
                compl_0 = compl_0.max(prod.abs());
                z_sum += zu[i];
                nb += 1;
            }
        }
        let y_sum: f64 = y.iter().map(|v| v.abs()).sum();
        let sd = ((z_sum + y_sum) / ((nb + m).max(1) as f64)).max(SMAX) / SMAX;
        let sc = if nb == 0 { 1.0 } else { (z_sum / nb as f64).max(SMAX) / SMAX };

        let err_0 = (dual_inf / sd).max(primal_inf).max(compl_0 / sc);
        if err_0 <= opts.tol && mu <= opts.tol / 10.0 {
            status = SolveStatus::Converged;
            break;
        }
        if iter >= opts.max_iter {
            status = SolveStatus::IterationLimit;
            break;
        }

        // Barrier update: tighten µ as soon as the subproblem is solved.
        loop {
            let err_mu = (dual_inf / sd).max(primal_inf).max(compl_mu / sc);
            if err_mu > KAPPA_EPS * mu || mu <= mu_min {
                break;
            }
            mu = next_mu(mu, mu_min, opts, &comps, &w, &zl, &zu);
            compl_mu = 0.0;
            for i in 0..nw {
                if comps[i].has_lo() {
                    compl_mu = compl_mu.max(((w[i] - comps[i].lo) * zl[i] - mu).abs());
                }
                if comps[i].has_up() {
                    compl_mu = compl_mu.max(((comps[i].up - w[i]) * zu[i] - mu).abs());
                }
            }
        }

        // Primal-dual Hessian of the barrier term.
        for i in 0..nw {
            let mut s = 0.0;
            if comps[i].has_lo() {
                s += zl[i] / (w[i] - comps[i].lo);
            }
            if comps[i].has_up() {
                s += zu[i] / (comps[i].up - w[i]);
            }
            sigma[i] = s;
        }

        problem.hessian_values(&x, f_scale, &y, &mut ws.hess);
        let hess_kept: Vec<f64> = ws
            .hess
            .iter()
            .zip(&hess_keep)
            .filter_map(|(&v, keep)| keep.map(|_| v))
            .collect();
        let jac_kept: Vec<f64> = ws
            .jac
            .iter()
            .zip(&jac_keep)
            .filter_map(|(&v, keep)| keep.map(|_| v))
            .collect();

        // Right-hand side.
        for (p, &j) in free_x.iter().enumerate() {
            let mut r = -(ws.grad[j] + ws.jty[j]);
            if comps[p].has_lo() {
                r += mu / (w[p] - comps[p].lo);
            }
            if comps[p].has_up() {
                r -= mu / (comps[p].up - w[p]);
            }
            rhs[p] = r;
        }
        for (p, &r) in ineq_rows.iter().enumerate() {
            let i = nf + p;
            let mut v = y[r];
            if comps[i].has_lo() {
                v += mu / (w[i] - comps[i].lo);
            }
            if comps[i].has_up() {
                v -= mu / (comps[i].up - w[i]);
            }
            rs[p] = v;
        }
        for r in 0..m {
            rhs[nf + r] = match slack_of_row[r] {
                None => -(ws.cons[r] - cl[r]),
                Some(p) => -(ws.cons[r] - w[nf + p]) + rs[p] / sigma[nf + p],
            };
        }

        // Inertia-corrected factorization. The small constant dual shift
        // keeps the system quasidefinite for the unpivoted factorization.
        let mut delta_x = 0.0_f64;
        let mut delta_c = 1e-11;
        let mut attempts = 0usize;
        let mut failed_below = 0.0_f64;
        let debug_inertia = std::env::var("IPM_DEBUG_INERTIA").is_ok();
        let try_factor = |kkt: &mut KktSystem,
                              sigma_x: &mut [f64],
                              diag_y: &mut [f64],
                              dx: f64,
                              dc: f64|
         -> Option<bool> {
            for (p, sx) in sigma_x.iter_mut().enumerate() {
                *sx = sigma[p] + dx;
            }
            for (r, dy) in diag_y.iter_mut().enumerate() {
                *dy = match slack_of_row[r] {
                    None => -dc,
                    Some(p) => -1.0 / sigma[nf + p] - dc,
                };
            }
            kkt.assemble(&hess_kept, &jac_kept, sigma_x, diag_y);
            if kkt.has_non_finite() {
                return None;
            }
            let inertia = kkt.factorize();
            if debug_inertia {
                eprintln!(
                    "    inertia try dx={dx:.1e} dc={dc:.1e}: +{} -{} 0{} (want +{nf} -{m})",
                    inertia.positive, inertia.negative, inertia.zero
                );
            }
            Some(inertia.positive == nf && inertia.negative == m && inertia.zero == 0)
        };
        loop {
            match try_factor(&mut kkt, &mut sigma_x, &mut diag_y, delta_x, delta_c) {
                None => {
                    status = SolveStatus::NumericFailure;
                    break 'outer;
                }
                Some(true) => break,
                Some(false) => {}
            }
            attempts += 1;
            failed_below = delta_x;
            // A singular system needs the dual shift as well.
            delta_c = (delta_c * 100.0).max(1e-8 * mu.powf(0.25));
            delta_x = if delta_x == 0.0 {
                if delta_last == 0.0 { opts.reg_floor } else { (delta_last / 3.0).max(opts.reg_floor) }
            } else {
                delta_x * 8.0
            };
            if delta_x > opts.reg_cap || attempts > 40 {
                status = SolveStatus::NumericFailure;
                break 'outer;
            }
        }
        // Shrink the shift toward the smallest value with correct inertia:
        // an oversized shift biases the Newton direction and stalls the
        // duals on degenerate problems.
        if delta_x > 0.0 {
            let mut hi = delta_x;
            let mut lo = failed_below.max(opts.reg_floor * 0.125);
            let mut factored_at_hi = true;
            for _ in 0..3 {
                if hi / lo <= 2.0 {
                    break;
                }
                let mid = (lo * hi).sqrt();
                match try_factor(&mut kkt, &mut sigma_x, &mut diag_y, mid, delta_c) {
                    None => {
                        factored_at_hi = false;
                        break;
                    }
                    Some(true) => {
                        hi = mid;
                        factored_at_hi = true;
                    }
                    Some(false) => {
                        lo = mid;
                        factored_at_hi = false;
                    }
                }
            }
            if !factored_at_hi {
                match try_factor(&mut kkt, &mut sigma_x, &mut diag_y, hi, delta_c) {
                    Some(true) => {}
                    _ => {
                        status = SolveStatus::NumericFailure;
                        break 'outer;
                    }
                }
            }
            delta_x = hi;
        }
        delta_last = delta_x;

        let rx_saved: Vec<f64> = rhs[..nf].to_vec();
        kkt.solve(&mut rhs);
        let (dxf, dy_part) = rhs.split_at(nf);
        dy.copy_from_slice(dy_part);
        dw[..nf].copy_from_slice(dxf);
        for (p, &r) in ineq_rows.iter().enumerate() {
            dw[nf + p] = (rs[p] + dy[r]) / sigma[nf + p];
        }

        // Nearly singular systems on degenerate problems can return huge
        // directions whose trial points wreck feasibility; scale the whole
        // direction down to a sane magnitude and let the line search work.
        let w_scale = w.iter().fold(1.0_f64, |a, &v| a.max(v.abs()));
        let step_cap = 10.0 * w_scale;
        let dw_norm = dw.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
        if dw_norm > step_cap {
            let shrink = step_cap / dw_norm;
            for v in dw.iter_mut() {
                *v *= shrink;
            }
            for v in dy.iter_mut() {
                *v *= shrink;
            }
        }

        // Fraction-to-boundary cap for the primal direction.
        let tau = opts.tau.max(1.0 - mu);
        let alpha_max = fraction_to_boundary(&comps, &w, &dw, tau);

        // Merit function pieces at the current point.
        let barrier0 = barrier_value(&comps, &w, mu);
        let g_norm1: f64 = (0..m)
            .map(|r| match slack_of_row[r] {
                None => (ws.cons[r] - cl[r]).abs(),
                Some(p) => (ws.cons[r] - w[nf + p]).abs(),
            })
            .sum();

        // Directional derivative of the barrier objective along (dx, ds).
        let mut dphi = 0.0_f64;
        for (p, &j) in free_x.iter().enumerate() {
            let mut g = ws.grad[j];
            if comps[p].has_lo() {
                g -= mu / (w[p] - comps[p].lo);
            }
            if comps[p].has_up() {
                g += mu / (comps[p].up - w[p]);
            }
            dphi += g * dw[p];
        }
        for p in 0..mi {
            let i = nf + p;
            let mut g = 0.0;
            if comps[i].has_lo() {
                g -= mu / (w[i] - comps[i].lo);
            }
            if comps[i].has_up() {
                g += mu / (comps[i].up - w[i]);
            }
            dphi += g * dw[i];
        }

        // Penalty large enough for a descent direction.
        if g_norm1 > 1e-14 {
            let nu_req = dphi / ((1.0 - opts.merit_rho) * g_norm1);
            if nu > 1e18 {
                status = SolveStatus::NumericFailure;
                break 'outer;
            }
            if nu_req > nu {
                nu = nu_req * 1.2 + 1.0;
            }
        }
        let d_merit = dphi - nu * g_norm1;
        let merit0 = f_val + barrier0 + nu * g_norm1;

        // Backtracking Armijo search on the merit function, with one
        // second-order correction attempt from the full trial step.
        let mut alpha = alpha_max;
        let mut accepted = false;
        let mut trial_f = f_val;
        let mut soc_available = true;
        let mut backtracks = 0;
        while backtracks < MAX_BACKTRACKS {
            let te = eval_trial(
                problem,
                alpha,
                &dw,
                &x,
                &w,
                &free_x,
                &comps,
                mu,
                nu,
                &cl,
                &slack_of_row,
                nf,
                f_scale,
                &mut ws,
            );
            if te.interior
                && te.merit.is_finite()
                && te.merit <= merit0 + opts.armijo * alpha * d_merit
            {
                accepted = true;
                trial_f = te.f;
                break;
            }

            // Second-order correction: when the full step fails without
            // reducing infeasibility, re-solve with the trial constraint
            // values folded into the right-hand side to cancel the
            // curvature of the constraint surface.
            if opts.second_order_correction
                && soc_available
                && backtracks == 0
                && m > 0
                && te.g1 >= g_norm1
            {
                soc_available = false;
                let mut rhs_soc = vec![0.0; nf + m];
                rhs_soc[..nf].copy_from_slice(&rx_saved);
                for r in 0..m {
                    rhs_soc[nf + r] = match slack_of_row[r] {
                        None => {
                            let g_old = ws.cons[r] - cl[r];
                            let g_trial = ws.trial_cons[r] - cl[r];
                            -(alpha * g_old + g_trial)
                        }
                        Some(p) => {
                            let g_old = ws.cons[r] - w[nf + p];
                            let g_trial = ws.trial_cons[r] - (w[nf + p] + alpha * dw[nf + p]);
                            -(alpha * g_old + g_trial) + rs[p] / sigma[nf + p]
                        }
                    };
                }
                kkt.solve(&mut rhs_soc);
                let mut dw_soc = vec![0.0; nw];
                dw_soc[..nf].copy_from_slice(&rhs_soc[..nf]);
                for (p, &r) in ineq_rows.iter().enumerate() {
                    dw_soc[nf + p] = (rs[p] + rhs_soc[nf + r]) / sigma[nf + p];
                }
                let alpha_soc = fraction_to_boundary(&comps, &w, &dw_soc, tau);
                let te2 = eval_trial(
                    problem,
                    alpha_soc,
                    &dw_soc,
                    &x,
                    &w,
                    &free_x,
                    &comps,
                    mu,
                    nu,
                    &cl,
                    &slack_of_row,
                    nf,
                    f_scale,
                    &mut ws,
                );
                // Take the corrected step only when it restores at least the
                // feasibility the plain trial lost; otherwise it can
                // displace a good primal-dual direction and stall.
                if te2.interior
                    && te2.merit.is_finite()
                    && te2.g1 <= te.g1
                    && te2.merit <= merit0 + opts.armijo * alpha_soc * d_merit
                {
                    dw.copy_from_slice(&dw_soc);
                    dy.copy_from_slice(&rhs_soc[nf..]);
                    alpha = alpha_soc;
                    accepted = true;
                    trial_f = te2.f;
                    break;
                }
                continue;
            }

            alpha *= 0.5;
            backtracks += 1;
            if alpha < MIN_STEP {
                break;
            }
        }

        // Bound multiplier steps from linearized complementarity, for the
        // direction finally taken.
        for i in 0..nw {
            dzl[i] = if comps[i].has_lo() {
                let gap = w[i] - comps[i].lo;
                mu / gap - zl[i] - zl[i] / gap * dw[i]
            } else {
                0.0
            };
            dzu[i] = if comps[i].has_up() {
                let gap = comps[i].up - w[i];
                mu / gap - zu[i] + zu[i] / gap * dw[i]
            } else {
                0.0
            };
        }
        let mut alpha_z = 1.0_f64;
        for i in 0..nw {
            if zl[i] > 0.0 && dzl[i] < 0.0 {
                alpha_z = alpha_z.min(-tau * zl[i] / dzl[i]);
            }
            if zu[i] > 0.0 && dzu[i] < 0.0 {
                alpha_z = alpha_z.min(-tau * zu[i] / dzu[i]);
            }
        }

        if !accepted {
            // Recovery: raise µ one notch and re-center the bound duals.
            // A second consecutive failure at the same µ gives up.
            if recoveries_at_mu.0 == mu {
                recoveries_at_mu.1 += 1;
            } else {
                recoveries_at_mu = (mu, 1);
            }
            if recoveries_at_mu.1 >= 2 {
                status = if primal_inf > (100.0 * opts.tol).max(1e-4) {
                    SolveStatus::InfeasibleDetected
                } else {
                    SolveStatus::NumericFailure
                };
                break;
            }
            mu = (mu / 0.2).min(10.0_f64.max(opts.mu_init));
            for i in 0..nw {
                if comps[i].has_lo() {
                    zl[i] = (mu / (w[i] - comps[i].lo)).clamp(1e-8, 1e8);
                }
                if comps[i].has_up() {
                    zu[i] = (mu / (comps[i].up - w[i])).clamp(1e-8, 1e8);
                }
            }
            nu = 1.0;
            iter += 1;
            continue;
        }

        // Accept the step.
        for (p, &j) in free_x.iter().enumerate() {
            x[j] += alpha * dw[p];
            w[p] = x[j];
        }
        for i in nf..nw {
            w[i] += alpha * dw[i];
        }
        for r in 0..m {
            y[r] += alpha * dy[r];
        }
        for i in 0..nw {
            zl[i] += alpha_z * dzl[i];
            zu[i] += alpha_z * dzu[i];
            // Keep multipliers inside a corridor around µ/gap so Σ stays
            // consistent with the barrier.
            if comps[i].has_lo() {
                let gap = w[i] - comps[i].lo;
                zl[i] = zl[i].clamp(mu / (KAPPA_SIGMA * gap), KAPPA_SIGMA * mu / gap);
            }
            if comps[i].has_up() {
                let gap = comps[i].up - w[i];
                zu[i] = zu[i].clamp(mu / (KAPPA_SIGMA * gap), KAPPA_SIGMA * mu / gap);
            }
        }
        f_val = trial_f;
        ws.cons.copy_from_slice(&ws.trial_cons);
        recoveries_at_mu = (f64::NAN, 0);
        // A long run of microscopic accepted steps means the search is
        // jammed against a boundary; re-center the barrier like a failed
        // line search would.
        if alpha < 1e-2 {
            crawl_iters += 1;
        } else {
            crawl_iters = 0;
        }
        if crawl_iters >= 8 && mu < 10.0 {
            mu = (mu / 0.2).min(10.0_f64.max(opts.mu_init));
            for i in 0..nw {
                if comps[i].has_lo() {
                    zl[i] = (mu / (w[i] - comps[i].lo)).clamp(1e-8, 1e8);
                }
                if comps[i].has_up() {
                    zu[i] = (mu / (comps[i].up - w[i])).clamp(1e-8, 1e8);
                }
            }
            nu = 1.0;
            crawl_iters = 0;
        }
        iter += 1;

        if opts.log {
            eprintln!(
                "{iter},{:.8e},{primal_inf:.2e},{dual_inf:.2e},{mu:.2e},{alpha:.2e},{alpha_z:.2e},{delta_last:.1e}",
                f_val / f_scale
            );
        }
    }

    // Package the final point with unscaled multipliers.
    let inv = 1.0 / f_scale;
    let iterate = Iterate {
        x: x.clone(),
        slacks: (0..mi).map(|p| w[nf + p]).collect(),
        multipliers: y.iter().map(|v| v * inv).collect(),
        ineq_rows: ineq_rows.clone(),
        bound_lower: {
            let mut out = vec![0.0; n];
            for (p, &j) in free_x.iter().enumerate() {
                out[j] = zl[p] * inv;
            }
            out
        },
        bound_upper: {
            let mut out = vec![0.0; n];
            for (p, &j) in free_x.iter().enumerate() {
                out[j] = zu[p] * inv;
            }
            out
        },
        slack_lower: (0..mi).map(|p| zl[nf + p] * inv).collect(),
        slack_upper: (0..mi).map(|p| zu[nf + p] * inv).collect(),
        mu,
        iteration: iter,
    };

    // Final unscaled residual norms for reporting.
    let (stationarity, feasibility, complementarity) = final_norms(
        problem, &x, &w, &y, &zl, &zu, &comps, &free_x, &ineq_rows, &slack_of_row, f_scale, &mut ws,
    );

    Ok(SolverResult {
        status,
        objective: f_val / f_scale,
        iterate,
        iterations: iter,
        wall_seconds: t0.elapsed().as_secs_f64(),
        stationarity,
        feasibility,
        complementarity,
    })
}

/// Largest step in `(0, 1]` keeping every bounded component at least a
/// `(1 - tau)` fraction away from its bound.
fn fraction_to_boundary(comps: &[Comp], w: &[f64], dw: &[f64], tau: f64) -> f64 {
    let mut alpha = 1.0_f64;
    for (i, c) in comps.iter().enumerate() {
        if c.has_lo() && dw[i] < 0.0 {
            alpha = alpha.min(-tau * (w[i] - c.lo) / dw[i]);
        }
        if c.has_up() && dw[i] > 0.0 {
            alpha = alpha.min(tau * (c.up - w[i]) / dw[i]);
        }
    }
    alpha
}

struct TrialEval {
    f: f64,
    merit: f64,
    interior: bool,
    g1: f64,
}

/// Evaluate objective, barrier and merit at `x + alpha dw`, leaving the
/// trial point and its constraint values in the workspace.
#[allow(clippy::too_many_arguments)]
fn eval_trial(
    problem: &dyn NlpProblem,
    alpha: f64,
    dw: &[f64],
    x: &[f64],
    w: &[f64],
    free_x: &[usize],
    comps: &[Comp],
    mu: f64,
    nu: f64,
    cl: &[f64],
    slack_of_row: &[Option<usize>],
    nf: usize,
    f_scale: f64,
    ws: &mut Workspace,
) -> TrialEval {
    ws.trial_x.copy_from_slice(x);
    for (p, &j) in free_x.iter().enumerate() {
        ws.trial_x[j] = x[j] + alpha * dw[p];
    }
    let f = problem.objective(&ws.trial_x) * f_scale;
    problem.constraints(&ws.trial_x, &mut ws.trial_cons);
    let mut barrier = 0.0;
    let mut interior = true;
    for (i, c) in comps.iter().enumerate() {
        let wi = w[i] + alpha * dw[i];
        if c.has_lo() {
            let gap = wi - c.lo;
            if gap <= 0.0 {
                interior = false;
                break;
            }
            barrier -= mu * gap.ln();
        }
        if c.has_up() {
            let gap = c.up - wi;
            if gap <= 0.0 {
                interior = false;
                break;
            }
            barrier -= mu * gap.ln();
        }
    }
    let g1: f64 = (0..slack_of_row.len())
        .map(|r| match slack_of_row[r] {
            None => (ws.trial_cons[r] - cl[r]).abs(),
            Some(p) => (ws.trial_cons[r] - (w[nf + p] + alpha * dw[nf + p])).abs(),
        })
        .sum();
    TrialEval { f, merit: f + barrier + nu * g1, interior, g1 }
}

fn barrier_value(comps: &[Comp], w: &[f64], mu: f64) -> f64 {
    let mut b = 0.0;
    for (i, c) in comps.iter().enumerate() {
        if c.has_lo() {
            b -= mu * (w[i] - c.lo).ln();
        }
        if c.has_up() {
            b -= mu * (c.up - w[i]).ln();
        }
    }
    b
}

fn next_mu(
    mu: f64,
    mu_min: f64,
    opts: &SolverOptions,
    comps: &[Comp],
    w: &[f64],
    zl: &[f64],
    zu: &[f64],
) -> f64 {
    match opts.mu_strategy {
        MuStrategy::Monotone { factor } => (factor * mu).min(mu.powf(1.5)).max(mu_min),
        MuStrategy::Adaptive => {
            // Centrality rule: push harder when products are well balanced.
            let mut min_prod = f64::INFINITY;
            let mut sum = 0.0;
            let mut count = 0usize;
            for (i, c) in comps.iter().enumerate() {
                if c.has_lo() {
                    let p = (w[i] - c.lo) * zl[i];
                    min_prod = min_prod.min(p);
                    sum += p;
                    count += 1;
                }
                if c.has_up() {
                    let p = (c.up - w[i]) * zu[i];
                    min_prod = min_prod.min(p);
                    sum += p;
                    count += 1;
                }
            }
            if count == 0 {
                return mu_min;
            }
            let avg = sum / count as f64;
            let xi = (min_prod / avg).clamp(0.0, 1.0);
            let sigma = 0.1 * (0.05 * (1.0 - xi) / xi.max(1e-12)).min(2.0).powi(3);
            (sigma * avg).clamp(mu_min, 0.5 * mu)
        }
    }
}

fn push_interior(v: f64, c: &Comp) -> f64 {
    push_interior_by(v, c, 1e-2)
}

/// Clamp `v` at least `frac`-deep inside the bounds of `c` (relative to the
/// bound magnitude and interval width).
fn push_interior_by(v: f64, c: &Comp, frac: f64) -> f64 {
    let mut v = v;
    if c.has_lo() && c.has_up() {
        let width = c.up - c.lo;
        let pad = (frac * width).min(0.5 * width);
        v = v.clamp(c.lo + pad, c.up - pad);
    } else if c.has_lo() {
        let pad = frac * (1.0 + c.lo.abs());
        v = v.max(c.lo + pad);
    } else if c.has_up() {
        let pad = frac * (1.0 + c.up.abs());
        v = v.min(c.up - pad);
    }
    v
}

#[allow(clippy::too_many_arguments)]
fn final_norms(
    problem: &dyn NlpProblem,
    x: &[f64],
    w: &[f64],
    y: &[f64],
    zl: &[f64],
    zu: &[f64],
    comps: &[Comp],
    free_x: &[usize],
    ineq_rows: &[usize],
    slack_of_row: &[Option<usize>],
    f_scale: f64,
    ws: &mut Workspace,
) -> (f64, f64, f64) {
    let nf = free_x.len();
    problem.gradient(x, &mut ws.grad);
    problem.jacobian_values(x, &mut ws.jac);
    problem.constraints(x, &mut ws.cons);
    let (jac_r, jac_c) = problem.jacobian_pattern();
    ws.jty.fill(0.0);
    for (k, (&r, &c)) in jac_r.iter().zip(&jac_c).enumerate() {
        ws.jty[c] += ws.jac[k] * y[r];
    }
    let inv = 1.0 / f_scale;
    let mut stat = 0.0_f64;
    for (p, &j) in free_x.iter().enumerate() {
        stat = stat.max((ws.grad[j] + (ws.jty[j] - zl[p] + zu[p]) * inv).abs());
    }
    for (p, &r) in ineq_rows.iter().enumerate() {
        let i = nf + p;
        stat = stat.max(((-y[r] - zl[i] + zu[i]) * inv).abs());
    }
    let mut feas = 0.0_f64;
    let (cl, _) = problem.constraint_bounds();
    for (r, cons) in ws.cons.iter().enumerate() {
        let g = match slack_of_row[r] {
            None => cons - cl[r],
            Some(p) => cons - w[nf + p],
        };
        feas = feas.max(g.abs());
    }
    let mut compl = 0.0_f64;
    for (i, c) in comps.iter().enumerate() {
        if c.has_lo() {
            compl = compl.max(((w[i] - c.lo) * zl[i] * inv).abs());
        }
        if c.has_up() {
            compl = compl.max(((c.up - w[i]) * zu[i] * inv).abs());
        }
    }
    (stat, feas, compl)
}
