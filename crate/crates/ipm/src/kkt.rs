//! Assembly and factorization of the primal-dual KKT system.
//!
//! The condensed system over free primal variables and one multiplier per
//! constraint row is
//!
//! ```text
//!   [ W + Σx + δx·I    Jᵀ ] [Δx]   [ rx ]
//!   [ J                 D  ] [Δy] = [ ry ]
//! ```
//!
//! where `D` carries `-δc` on equality rows and `-1/Σs - δc` on inequality
//! rows (slacks eliminated analytically). The sparsity pattern is fixed at
//! construction; per-iteration work is a value refill, an LDLᵀ
//! refactorization, and triangular solves with iterative refinement.

use crate::ldlt::{symmetric_matvec, Inertia, LdltFactor};
use crate::IpmError;

#[derive(Debug)]
enum Source {
    Hess(usize),
    Jac(usize),
    SigmaX(usize),
    DiagY(usize),
}

#[derive(Debug)]
pub struct KktSystem {
    nf: usize,
    m: usize,
    colptr: Vec<usize>,
    rowidx: Vec<usize>,
    values: Vec<f64>,
    hess_slots: Vec<usize>,
    jac_slots: Vec<usize>,
    sigma_slots: Vec<usize>,
    diag_y_slots: Vec<usize>,
    factor: LdltFactor,
    scratch: Vec<f64>,
    resid: Vec<f64>,
    sol: Vec<f64>,
}

impl KktSystem {
    /// Build the fixed structure. Hessian entries are lower-triangle
    /// coordinates over free primal positions; Jacobian entries are
    /// `(row, free primal position)`. Every constraint row must appear in
    /// the Jacobian pattern, otherwise its system column would be
    /// structurally empty and the assembly contract is broken.
    pub fn new(
        nf: usize,
        m: usize,
        hess_rows: &[usize],
        hess_cols: &[usize],
        jac_rows: &[usize],
        jac_cols: &[usize],
    ) -> Result<Self, IpmError> {
        assert_eq!(hess_rows.len(), hess_cols.len());
        assert_eq!(jac_rows.len(), jac_cols.len());
        let dim = nf + m;

        let mut row_seen = vec![false; m];
        for &r in jac_rows {
            row_seen[r] = true;
        }
        if let Some(missing) = row_seen.iter().position(|&seen| !seen) {
            return Err(IpmError::BadProblem(format!(
                "constraint row {missing} has no Jacobian entries in the pattern"
            )));
        }

        // Tagged coordinate list, deduplicated into a shared upper-tri CSC.
        let mut entries: Vec<(usize, usize, Source)> =
            Vec::with_capacity(hess_rows.len() + jac_rows.len() + dim);
        for (k, (&r, &c)) in hess_rows.iter().zip(hess_cols).enumerate() {
            if r < c || r >= nf {
                return Err(IpmError::BadProblem(format!(
                    "hessian entry ({r}, {c}) is not in the lower triangle of the free block"
                )));
            }
            // lower (r, c) with r >= c is stored as upper (c, r)
            entries.push((r, c, Source::Hess(k)));
        }
        for (k, (&r, &c)) in jac_rows.iter().zip(jac_cols).enumerate() {
            if r >= m || c >= nf {
                return Err(IpmError::BadProblem(format!(
                    "jacobian entry ({r}, {c}) is outside the system"
                )));
            }
            entries.push((nf + r, c, Source::Jac(k)));
        }
        for j in 0..nf {
            entries.push((j, j, Source::SigmaX(j)));
        }
        for r in 0..m {
            entries.push((nf + r, nf + r, Source::DiagY(r)));
        }

        // Sort by (column, row); for an entry stored as (hi, lo) the column
        // is the larger coordinate.
        entries.sort_by_key(|&(hi, lo, _)| (hi, lo));

        let mut colptr = vec![0usize; dim + 1];
        let mut rowidx = Vec::with_capacity(entries.len());
        let mut hess_slots = vec![0usize; hess_rows.len()];
        let mut jac_slots = vec![0usize; jac_rows.len()];
        let mut sigma_slots = vec![0usize; nf];
        let mut diag_y_slots = vec![0usize; m];
        let mut last: Option<(usize, usize)> = None;
        for (hi, lo, src) in &entries {
            if last != Some((*hi, *lo)) {
                rowidx.push(*lo);
                colptr[hi + 1] += 1;
                last = Some((*hi, *lo));
            }
            let slot = rowidx.len() - 1;
            match src {
                Source::Hess(k) => hess_slots[*k] = slot,
                Source::Jac(k) => jac_slots[*k] = slot,
                Source::SigmaX(j) => sigma_slots[*j] = slot,
                Source::DiagY(r) => diag_y_slots[*r] = slot,
            }
        }
        for j in 0..dim {
            colptr[j + 1] += colptr[j];
        }

        let mut dsigns = vec![1i8; nf];
        dsigns.extend(std::iter::repeat_n(-1i8, m));
        let factor = LdltFactor::analyze(dim, &colptr, &rowidx, &dsigns)?;

        let nnz = rowidx.len();
        Ok(Self {
            nf,
            m,
            colptr,
            rowidx,
            values: vec![0.0; nnz],
            hess_slots,
            jac_slots,
            sigma_slots,
            diag_y_slots,
            factor,
            scratch: Vec::new(),
            resid: vec![0.0; dim],
            sol: vec![0.0; dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.nf + self.m
    }

    /// Refill values. `sigma_x` must already include the primal
    /// regularization δx; `diag_y` is the full (2,2) diagonal including -δc.
    pub fn assemble(
        &mut self,
        hess_vals: &[f64],
        jac_vals: &[f64],
        sigma_x: &[f64],
        diag_y: &[f64],
    ) {
        assert_eq!(hess_vals.len(), self.hess_slots.len());
        assert_eq!(jac_vals.len(), self.jac_slots.len());
        assert_eq!(sigma_x.len(), self.nf);
        assert_eq!(diag_y.len(), self.m);
        self.values.fill(0.0);
        for (k, &v) in hess_vals.iter().enumerate() {
            self.values[self.hess_slots[k]] += v;
        }
        for (k, &v) in jac_vals.iter().enumerate() {
            self.values[self.jac_slots[k]] += v;
        }
        for (j, &v) in sigma_x.iter().enumerate() {
            self.values[self.sigma_slots[j]] += v;
        }
        for (r, &v) in diag_y.iter().enumerate() {
            self.values[self.diag_y_slots[r]] += v;
        }
    }

    /// True when some assembled entry is not finite.
    pub fn has_non_finite(&self) -> bool {
        self.values.iter().any(|v| !v.is_finite())
    }

    pub fn factorize(&mut self) -> Inertia {
        self.factor.refactor(&self.values)
    }

    /// Solve in place with iterative refinement, returning the final
    /// residual norm relative to the right-hand side.
    pub fn solve(&mut self, rhs: &mut [f64]) -> f64 {
        let dim = self.dim();
        assert_eq!(rhs.len(), dim);
        self.sol.copy_from_slice(rhs);
        self.factor.solve_in_place(&mut self.sol, &mut self.scratch);

        let rhs_norm = rhs.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        let mut final_rel = f64::INFINITY;
        for _ in 0..2 {
            symmetric_matvec(&self.colptr, &self.rowidx, &self.values, &self.sol, &mut self.resid);
            let mut resid_norm = 0.0_f64;
            for (ri, bi) in self.resid.iter_mut().zip(rhs.iter()) {
                *ri = bi - *ri;
                resid_norm = resid_norm.max(ri.abs());
            }
            final_rel = resid_norm / (1.0 + rhs_norm);
            if final_rel <= 1e-12 {
                break;
            }
            self.factor.solve_in_place(&mut self.resid, &mut self.scratch);
            for (zi, di) in self.sol.iter_mut().zip(self.resid.iter()) {
                *zi += di;
            }
        }
        rhs.copy_from_slice(&self.sol);
        final_rel
    }

    /// Factor fill-in, diagnostics only.
    pub fn factor_nnz(&self) -> usize {
        self.factor.factor_nnz()
    }
}
