//! Primal-dual interior-point solver for sparse nonlinear programs.
//!
//! Problems are posed through the [`NlpProblem`] callback trait in the form
//!
//! ```text
//!   minimize    f(x)
//!   subject to  cl <= c(x) <= cu      (cl == cu marks an equality row)
//!               xl <= x <= xu
//! ```
//!
//! Inequality rows get slack variables, bounds are handled by a logarithmic
//! barrier on a decreasing parameter µ, and each Newton step solves one
//! sparse symmetric indefinite KKT system factorized as LDLᵀ with inertia
//! correction. Steps are capped by the fraction-to-boundary rule and accepted
//! through a backtracking line search on an ℓ1 penalty merit function.
//!
//! The solve is deterministic: identical inputs and options produce identical
//! iterate sequences.

mod kkt;
mod ldlt;
mod solver;

pub use kkt::KktSystem;
pub use ldlt::{Inertia, LdltFactor};
pub use solver::{solve, Iterate, MuStrategy, SolveStatus, SolverOptions, SolverResult};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IpmError {
    #[error("{0}")]
    BadProblem(String),
}

/// Callback bundle describing one NLP instance.
///
/// Patterns are queried once and must never change; value callbacks must be
/// pure and fill slots in pattern order. The Hessian is the lower triangle of
/// `σ ∇²f + Σ λ_i ∇²c_i`.
pub trait NlpProblem {
    fn num_vars(&self) -> usize;
    fn num_constraints(&self) -> usize;

    /// Variable bounds `(lower, upper)`; use infinities for free components.
    /// Equal bounds pin the variable, which the solver then treats as a
    /// constant parameter.
    fn variable_bounds(&self) -> (Vec<f64>, Vec<f64>);

    /// Row bounds `(lower, upper)`; equal bounds mark equality rows.
    fn constraint_bounds(&self) -> (Vec<f64>, Vec<f64>);

    fn initial_point(&self) -> Vec<f64>;

    fn objective(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], grad: &mut [f64]);
    fn constraints(&self, x: &[f64], out: &mut [f64]);

    /// Jacobian coordinate pattern `(rows, cols)`, fixed across evaluations.
    fn jacobian_pattern(&self) -> (Vec<usize>, Vec<usize>);
    fn jacobian_values(&self, x: &[f64], vals: &mut [f64]);

    /// Lower-triangle Hessian coordinate pattern `(rows, cols)` with
    /// `row >= col`, fixed across evaluations.
    fn hessian_pattern(&self) -> (Vec<usize>, Vec<usize>);
    fn hessian_values(&self, x: &[f64], obj_factor: f64, lambda: &[f64], vals: &mut [f64]);
}
