//! Sparse LDLᵀ factorization of symmetric indefinite matrices.
//!
//! The matrix is given as the upper triangle in compressed sparse column
//! form. Ordering uses approximate minimum degree once per pattern; the
//! numeric phase is an up-looking factorization along the elimination tree.
//! There is no pivoting: callers keep the matrix factorable by regularizing
//! toward a quasidefinite sign structure, and the reported [`Inertia`]
//! (including pivots that had to be bumped away from zero) tells them when
//! stronger regularization is needed.

use crate::IpmError;

const UNKNOWN: usize = usize::MAX;

/// Signature of the diagonal factor: positive, negative and near-zero pivot
/// counts. `zero` counts pivots below the breakdown threshold that were
/// bumped to keep elimination alive; any nonzero count means the
/// factorization does not certify the matrix inertia.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// Reusable LDLᵀ factorization: symbolic analysis runs once per sparsity
/// pattern, numeric refactorization runs per value set.
#[derive(Debug)]
pub struct LdltFactor {
    n: usize,
    // permutation: perm[new] = old, iperm[old] = new
    perm: Vec<usize>,
    // permuted upper-triangular pattern
    ap: Vec<usize>,
    ai: Vec<usize>,
    av: Vec<f64>,
    // original entry slot -> permuted slot
    slot_map: Vec<usize>,
    // expected pivot signs, permuted order
    dsigns: Vec<i8>,
    etree: Vec<usize>,
    // factor storage
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    dinv: Vec<f64>,
    inertia: Inertia,
    // workspaces
    work_f: Vec<f64>,
    work_mark: Vec<bool>,
    work_idx: Vec<usize>,
    work_elim: Vec<usize>,
    work_next: Vec<usize>,
}

impl LdltFactor {
    /// Analyze the upper-triangular pattern `(colptr, rowidx)` of an
    /// `n`-by-`n` symmetric matrix. `dsigns[j]` is the pivot sign expected at
    /// original position `j` (+1 or -1).
    pub fn analyze(
        n: usize,
        colptr: &[usize],
        rowidx: &[usize],
        dsigns: &[i8],
    ) -> Result<Self, IpmError> {
        assert_eq!(colptr.len(), n + 1);
        assert_eq!(dsigns.len(), n);
        let nnz = colptr[n];
        for j in 0..n {
            let mut has_diag = false;
            for &i in &rowidx[colptr[j]..colptr[j + 1]] {
                if i > j {
                    return Err(IpmError::BadProblem(format!(
                        "matrix entry ({i}, {j}) lies below the diagonal"
                    )));
                }
                has_diag |= i == j;
            }
            // every column needs its diagonal for an unpivoted LDLT
            if !has_diag {
                return Err(IpmError::BadProblem(format!(
                    "column {j} is missing its diagonal entry"
                )));
            }
        }

        let control = amd::Control::default();
        let (perm, iperm, _info) = amd::order(n, colptr, rowidx, &control)
            .map_err(|e| IpmError::BadProblem(format!("ordering failed: {e:?}")))?;

        // Permute the upper triangle: original (i, j) lands in permuted
        // column max(iperm[i], iperm[j]), row min(...).
        let mut counts = vec![0usize; n];
        for j in 0..n {
            for &i in &rowidx[colptr[j]..colptr[j + 1]] {
                counts[iperm[i].max(iperm[j])] += 1;
            }
        }
        let mut ap = vec![0usize; n + 1];
        for j in 0..n {
            ap[j + 1] = ap[j] + counts[j];
        }
        let mut next = ap[..n].to_vec();
        let mut ai = vec![0usize; nnz];
        let mut slot_map = vec![0usize; nnz];
        for j in 0..n {
            for k in colptr[j]..colptr[j + 1] {
                let i = rowidx[k];
                let (pi, pj) = (iperm[i], iperm[j]);
                let col = pi.max(pj);
                let slot = next[col];
                ai[slot] = pi.min(pj);
                slot_map[k] = slot;
                next[col] += 1;
            }
        }
        // Column entries must be row-sorted with the diagonal last for the
        // up-looking sweep; sort each column and fix the map accordingly.
        let mut order: Vec<usize> = Vec::new();
        let mut inverse_slot = vec![0usize; nnz];
        let mut ai_sorted = vec![0usize; nnz];
        for j in 0..n {
            order.clear();
            order.extend(ap[j]..ap[j + 1]);
            order.sort_by_key(|&s| ai[s]);
            for (off, &s) in order.iter().enumerate() {
                let dst = ap[j] + off;
                ai_sorted[dst] = ai[s];
                inverse_slot[s] = dst;
            }
        }
        for m in slot_map.iter_mut() {
            *m = inverse_slot[*m];
        }
        let ai = ai_sorted;

        let mut permuted_signs = vec![0i8; n];
        for (old, &sign) in dsigns.iter().enumerate() {
            permuted_signs[iperm[old]] = sign;
        }

        // Elimination tree and column counts of L.
        let mut etree = vec![UNKNOWN; n];
        let mut lnz = vec![0usize; n];
        let mut visited = vec![UNKNOWN; n];
        for j in 0..n {
            visited[j] = j;
            for &start in &ai[ap[j]..ap[j + 1]] {
                let mut i = start;
                while visited[i] != j {
                    if etree[i] == UNKNOWN {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    visited[i] = j;
                    i = etree[i];
                }
            }
        }

        let total_lnz: usize = lnz.iter().sum();
        let mut lp = vec![0usize; n + 1];
        for j in 0..n {
            lp[j + 1] = lp[j] + lnz[j];
        }

        Ok(Self {
            n,
            perm,
            ap,
            ai,
            av: vec![0.0; nnz],
            slot_map,
            dsigns: permuted_signs,
            etree,
            li: vec![0usize; total_lnz],
            lx: vec![0.0; total_lnz],
            lp,
            d: vec![0.0; n],
            dinv: vec![0.0; n],
            inertia: Inertia { positive: 0, negative: 0, zero: 0 },
            work_f: vec![0.0; n],
            work_mark: vec![false; n],
            work_idx: vec![0usize; n],
            work_elim: vec![0usize; n],
            work_next: vec![0usize; n],
        })
    }

    /// Refactorize with new values (original slot order). Near-zero pivots
    /// are bumped to the expected sign so elimination can finish; they are
    /// reported through [`Inertia::zero`].
    pub fn refactor(&mut self, values: &[f64]) -> Inertia {
        assert_eq!(values.len(), self.slot_map.len());
        self.av.fill(0.0);
        for (k, &v) in values.iter().enumerate() {
            self.av[self.slot_map[k]] += v;
        }

        let n = self.n;
        // Breakdown thresholds are absolute; a bumped factorization is only
        // used to finish counting, callers regularize and refactor on it.
        let zero_eps = 1e-12;
        let bump = 1e-7;

        let mut inertia = Inertia { positive: 0, negative: 0, zero: 0 };
        self.work_f.fill(0.0);
        self.work_mark.fill(false);
        self.work_next.copy_from_slice(&self.lp[..n]);

        for k in 0..n {
            // Gather column k of A above the diagonal into the sparse
            // workspace and record the reach along the elimination tree.
            let mut nnz_row = 0usize;
            let mut dk = 0.0;
            for slot in self.ap[k]..self.ap[k + 1] {
                let i = self.ai[slot];
                let v = self.av[slot];
                if i == k {
                    dk = v;
                    continue;
                }
                self.work_f[i] = v;
                if !self.work_mark[i] {
                    self.work_mark[i] = true;
                    self.work_elim[0] = i;
                    let mut len = 1usize;
                    let mut p = self.etree[i];
                    while p != UNKNOWN && p < k && !self.work_mark[p] {
                        self.work_mark[p] = true;
                        self.work_elim[len] = p;
                        len += 1;
                        p = self.etree[p];
                    }
                    while len > 0 {
                        len -= 1;
                        self.work_idx[nnz_row] = self.work_elim[len];
                        nnz_row += 1;
                    }
                }
            }

            // Sparse triangular solve for row k of L, consuming the reach in
            // reverse (topological) order.
            for r in (0..nnz_row).rev() {
                let c = self.work_idx[r];
                let yc = self.work_f[c];
                let fill_end = self.work_next[c];
                for p in self.lp[c]..fill_end {
                    self.work_f[self.li[p]] -= self.lx[p] * yc;
                }
                let lkc = yc * self.dinv[c];
                self.li[fill_end] = k;
                self.lx[fill_end] = lkc;
                self.work_next[c] += 1;
                dk -= yc * lkc;
                self.work_f[c] = 0.0;
                self.work_mark[c] = false;
            }

            if dk.abs() <= zero_eps {
                inertia.zero += 1;
                dk = if self.dsigns[k] >= 0 { bump } else { -bump };
            }
            if dk > 0.0 {
                inertia.positive += 1;
            } else {
                inertia.negative += 1;
            }
            self.d[k] = dk;
            self.dinv[k] = 1.0 / dk;
        }

        self.inertia = inertia;
        inertia
    }

    pub fn inertia(&self) -> Inertia {
        self.inertia
    }

    /// Nonzero count of the factor, diagnostics only.
    pub fn factor_nnz(&self) -> usize {
        self.lx.len()
    }

    /// Solve `A x = b` in place using the current factors.
    pub fn solve_in_place(&self, b: &mut [f64], scratch: &mut Vec<f64>) {
        let n = self.n;
        assert_eq!(b.len(), n);
        scratch.resize(n, 0.0);
        for (slot, &orig) in scratch.iter_mut().zip(&self.perm) {
            *slot = b[orig];
        }
        // (L + I) y = b
        for j in 0..n {
            let yj = scratch[j];
            if yj != 0.0 {
                for p in self.lp[j]..self.lp[j + 1] {
                    scratch[self.li[p]] -= self.lx[p] * yj;
                }
            }
        }
        // D z = y
        for (z, dinv) in scratch.iter_mut().zip(&self.dinv) {
            *z *= dinv;
        }
        // (L + I)ᵀ x = z
        for j in (0..n).rev() {
            let mut acc = scratch[j];
            for p in self.lp[j]..self.lp[j + 1] {
                acc -= self.lx[p] * scratch[self.li[p]];
            }
            scratch[j] = acc;
        }
        for k in 0..n {
            b[self.perm[k]] = scratch[k];
        }
    }
}

/// `y = A x` for a symmetric matrix stored as its upper triangle in CSC.
pub(crate) fn symmetric_matvec(
    colptr: &[usize],
    rowidx: &[usize],
    values: &[f64],
    x: &[f64],
    y: &mut [f64],
) {
    y.fill(0.0);
    for j in 0..x.len() {
        for p in colptr[j]..colptr[j + 1] {
            let i = rowidx[p];
            let v = values[p];
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_to_upper_csc(a: &[&[f64]]) -> (usize, Vec<usize>, Vec<usize>, Vec<f64>) {
        let n = a.len();
        let mut colptr = vec![0usize];
        let mut rowidx = Vec::new();
        let mut values = Vec::new();
        for j in 0..n {
            for (i, row) in a.iter().enumerate().take(j + 1) {
                if row[j] != 0.0 || i == j {
                    rowidx.push(i);
                    values.push(row[j]);
                }
            }
            colptr.push(rowidx.len());
        }
        (n, colptr, rowidx, values)
    }

    #[test]
    fn identity_has_all_positive_inertia() {
        let (n, cp, ri, vals) =
            dense_to_upper_csc(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let mut f = LdltFactor::analyze(n, &cp, &ri, &[1, 1, 1]).unwrap();
        let inertia = f.refactor(&vals);
        assert_eq!(inertia, Inertia { positive: 3, negative: 0, zero: 0 });
    }

    #[test]
    fn saddle_matrix_reports_split_inertia() {
        let (n, cp, ri, vals) = dense_to_upper_csc(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let mut f = LdltFactor::analyze(n, &cp, &ri, &[1, -1]).unwrap();
        assert_eq!(f.refactor(&vals), Inertia { positive: 1, negative: 1, zero: 0 });
    }

    #[test]
    fn zero_pivot_is_bumped_and_counted() {
        let (n, cp, ri, vals) = dense_to_upper_csc(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let mut f = LdltFactor::analyze(n, &cp, &ri, &[1, -1]).unwrap();
        let inertia = f.refactor(&vals);
        assert_eq!(inertia.zero, 1);
    }

    #[test]
    fn solves_an_indefinite_system() {
        // [ 2  1  0 ]
        // [ 1  0  1 ]   (a small saddle system)
        // [ 0  1 -3 ]
        let (n, cp, ri, vals) =
            dense_to_upper_csc(&[&[2.0, 1.0, 0.0], &[1.0, 0.0, 1.0], &[0.0, 1.0, -3.0]]);
        let mut f = LdltFactor::analyze(n, &cp, &ri, &[1, -1, -1]).unwrap();
        f.refactor(&vals);
        let x_true = [1.0, -2.0, 0.5];
        let mut b = vec![0.0; 3];
        symmetric_matvec(&cp, &ri, &vals, &x_true, &mut b);
        let mut scratch = Vec::new();
        f.solve_in_place(&mut b, &mut scratch);
        for (bi, xi) in b.iter().zip(x_true.iter()) {
            assert!((bi - xi).abs() < 1e-10, "{b:?}");
        }
    }

    #[test]
    fn random_quasidefinite_round_trip() {
        // Deterministic pseudo-random quasidefinite matrix: A = [H J'; J -I]
        // with H diagonally dominant.
        let nx = 14;
        let m = 9;
        let n = nx + m;
        let mut dense = vec![vec![0.0; n]; n];
        let mut state = 0x12345678u64;
        let mut rand = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        for (i, row) in dense.iter_mut().enumerate().take(nx) {
            row[i] = 3.0 + rand().abs();
        }
        for r in 0..m {
            for _ in 0..3 {
                let c = ((rand().abs() * nx as f64) as usize).min(nx - 1);
                dense[c][nx + r] += rand();
                dense[nx + r][c] = dense[c][nx + r];
            }
            dense[nx + r][nx + r] = -1.0 - rand().abs();
        }
        let rows: Vec<&[f64]> = dense.iter().map(|r| r.as_slice()).collect();
        let (n, cp, ri, vals) = dense_to_upper_csc(&rows);
        let mut signs = vec![1i8; nx];
        signs.extend(vec![-1i8; m]);
        let mut f = LdltFactor::analyze(n, &cp, &ri, &signs).unwrap();
        let inertia = f.refactor(&vals);
        assert_eq!(inertia, Inertia { positive: nx, negative: m, zero: 0 });

        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; n];
        symmetric_matvec(&cp, &ri, &vals, &x_true, &mut b);
        let mut scratch = Vec::new();
        f.solve_in_place(&mut b, &mut scratch);
        for (bi, xi) in b.iter().zip(x_true.iter()) {
            assert!((bi - xi).abs() < 1e-8);
        }
    }
}
