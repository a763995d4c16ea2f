//! Central finite-difference checks for the analytic derivatives.

use scopf_ipm::NlpProblem;

/// Worst relative errors per derivative object, with coordinates.
#[derive(Debug, Clone)]
pub struct FdReport {
    pub gradient_error: f64,
    pub gradient_at: usize,
    pub jacobian_error: f64,
    pub jacobian_at: (usize, usize),
    pub hessian_error: f64,
    pub hessian_at: (usize, usize),
}

impl FdReport {
    pub fn max_error(&self) -> f64 {
        self.gradient_error.max(self.jacobian_error).max(self.hessian_error)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Compare the analytic gradient, Jacobian and Lagrangian Hessian against
/// central differences with step `h` (scaled by variable magnitude) at a
/// strictly interior point. Multipliers for the Hessian check are a fixed
/// deterministic pattern.
pub fn fd_check(problem: &dyn NlpProblem, x: &[f64], h: f64) -> FdReport {
    let n = problem.num_vars();
    let m = problem.num_constraints();
    assert_eq!(x.len(), n);

    let (jr, jc) = problem.jacobian_pattern();
    let (hr, hc) = problem.hessian_pattern();
    let mut jvals = vec![0.0; jr.len()];
    let mut hvals = vec![0.0; hr.len()];
    let lambda: Vec<f64> = (0..m).map(|r| ((r % 7) as f64 - 3.0) * 0.5).collect();
    let sigma = 1.0;

    // Dense accumulation so duplicate coordinate entries sum up.
    let mut grad = vec![0.0; n];
    problem.gradient(x, &mut grad);
    problem.jacobian_values(x, &mut jvals);
    let mut jac = vec![0.0; m * n];
    for ((&r, &c), &v) in jr.iter().zip(&jc).zip(&jvals) {
        jac[r * n + c] += v;
    }
    problem.hessian_values(x, sigma, &lambda, &mut hvals);
    let mut hess = vec![0.0; n * n];
    for ((&r, &c), &v) in hr.iter().zip(&hc).zip(&hvals) {
        hess[r * n + c] += v;
        if r != c {
            hess[c * n + r] += v;
        }
    }

    let lagrangian_grad = |xx: &[f64], out: &mut [f64], jbuf: &mut [f64]| {
        problem.gradient(xx, out);
        for g in out.iter_mut() {
            *g *= sigma;
        }
        problem.jacobian_values(xx, jbuf);
        for ((&r, &c), &v) in jr.iter().zip(&jc).zip(jbuf.iter()) {
            out[c] += lambda[r] * v;
        }
    };

    let mut report = FdReport {
        gradient_error: 0.0,
        gradient_at: 0,
        jacobian_error: 0.0,
        jacobian_at: (0, 0),
        hessian_error: 0.0,
        hessian_at: (0, 0),
    };

    let mut xp = x.to_vec();
    let mut cp = vec![0.0; m];
    let mut cm = vec![0.0; m];
    let mut gp = vec![0.0; n];
    let mut gm = vec![0.0; n];
    let mut jbuf = vec![0.0; jr.len()];
    for j in 0..n {
        let step = h * x[j].abs().max(1.0);
        xp[j] = x[j] + step;
        let fp = problem.objective(&xp);
        problem.constraints(&xp, &mut cp);
        lagrangian_grad(&xp, &mut gp, &mut jbuf);
        xp[j] = x[j] - step;
        let fm = problem.objective(&xp);
        problem.constraints(&xp, &mut cm);
        lagrangian_grad(&xp, &mut gm, &mut jbuf);
        xp[j] = x[j];

        let e = rel(grad[j], (fp - fm) / (2.0 * step));
        if e > report.gradient_error {
            report.gradient_error = e;
            report.gradient_at = j;
        }
        for r in 0..m {
            let e = rel(jac[r * n + j], (cp[r] - cm[r]) / (2.0 * step));
            if e > report.jacobian_error {
                report.jacobian_error = e;
                report.jacobian_at = (r, j);
            }
        }
        for i in 0..n {
            let e = rel(hess[i * n + j], (gp[i] - gm[i]) / (2.0 * step));
            if e > report.hessian_error {
                report.hessian_error = e;
                report.hessian_at = (i, j);
            }
        }
    }
    report
}
