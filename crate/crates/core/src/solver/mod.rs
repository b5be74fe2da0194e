//! Augmented-Lagrangian alternating solvers for multiple clustering
//! ([`mvmc`]) and multiple co-clustering ([`mvmcc`]).
//!
//! Both solvers minimize a factorization fit plus an HSIC diversity term on
//! the individuality matrices and a graph-smoothness term on the shared
//! matrix, subject to the self-representation constraints
//! `X^v = X^v (U + D)`. Each outer iteration performs one sweep of exact or
//! monotone block updates at a fixed penalty `μ`, then a multiplier ascent
//! step and `μ ← min(ρ μ, μ_max)`.

pub mod mvmc;
pub mod mvmcc;

use serde::{Deserialize, Serialize};

use crate::linalg::{solve_sylvester, Mat, SymEigen};

/// Options shared by both solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlmSettings {
    /// Weight of the HSIC diversity term.
    pub lambda1: f64,
    /// Weight of the graph smoothness term.
    pub lambda2: f64,
    pub mu0: f64,
    pub rho: f64,
    pub mu_max: f64,
    pub max_outer_iters: usize,
    /// Relative change of the augmented objective between sweeps.
    pub tol_obj: f64,
    /// Largest relative constraint residual `‖X − X(U + D)‖ / ‖X‖`.
    pub tol_feas: f64,
    pub seed: u64,
    /// Neighbourhood size of the per-view kNN graphs.
    pub epsilon_knn: usize,
    /// Factor updates per sweep.
    pub factor_inner_iters: usize,
    /// Record the augmented objective before and after every block update.
    pub record_steps: bool,
}

impl Default for AlmSettings {
    fn default() -> Self {
        AlmSettings {
            lambda1: 10.0,
            lambda2: 100.0,
            mu0: 1e-2,
            rho: 1.1,
            mu_max: 1e6,
            max_outer_iters: 200,
            tol_obj: 1e-5,
            tol_feas: 1e-4,
            seed: 0,
            epsilon_knn: 5,
            factor_inner_iters: 1,
            record_steps: false,
        }
    }
}

impl AlmSettings {
    pub(crate) fn validate(&self) -> crate::Result<()> {
        use crate::error::MvmcError;
        let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
        if !finite_nonneg(self.lambda1) || !finite_nonneg(self.lambda2) {
            return Err(MvmcError::param("lambda1 and lambda2 must be finite and >= 0"));
        }
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return Err(MvmcError::param(format!("mu0 must be positive, got {}", self.mu0)));
        }
        if !(self.rho > 1.0 && self.rho.is_finite()) {
            return Err(MvmcError::param(format!("rho must exceed 1, got {}", self.rho)));
        }
        if !(self.mu_max >= self.mu0) {
            return Err(MvmcError::param("mu_max must be at least mu0"));
        }
        if self.max_outer_iters == 0 {
            return Err(MvmcError::param("max_outer_iters must be positive"));
        }
        if self.factor_inner_iters == 0 {
            return Err(MvmcError::param("factor_inner_iters must be positive"));
        }
        Ok(())
    }
}

/// Breakdown of the augmented objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    pub fit: f64,
    pub hsic: f64,
    pub smooth: f64,
    /// Multiplier and quadratic penalty terms of the constraints.
    pub penalty: f64,
    pub total: f64,
}

impl ObjectiveTerms {
    pub(crate) fn new(fit: f64, hsic: f64, smooth: f64, penalty: f64) -> Self {
        ObjectiveTerms {
            fit,
            hsic,
            smooth,
            penalty,
            total: fit + hsic + smooth + penalty,
        }
    }
}

/// One outer iteration, recorded after the block sweep and before the
/// multiplier update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub fit: f64,
    pub hsic: f64,
    pub smooth: f64,
    pub penalty: f64,
    pub total: f64,
    pub feasibility: f64,
    pub mu: f64,
    /// Augmented objective before the sweep and after each block update.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_totals: Option<Vec<f64>>,
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("iter,fit,hsic,smooth,penalty,total,feasibility,mu\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.iter, r.fit, r.hsic, r.smooth, r.penalty, r.total, r.feasibility, r.mu
        ));
    }
    out
}

/// Relative change used by the stopping rule.
pub(crate) fn relative_change(prev: f64, cur: f64) -> f64 {
    (cur - prev).abs() / prev.abs().max(1.0)
}

/// Solves `(shift I + scale A) X + X B = C` where `A` is given by its
/// eigendecomposition and `B` optionally (absent means `B = 0`).
pub(crate) fn sylvester_shifted(
    a: &SymEigen,
    shift: f64,
    scale: f64,
    b: Option<(&SymEigen, f64)>,
    rhs: &Mat,
) -> Mat {
    // eigenvalues of PSD inputs may come out as tiny negatives
    let alpha: Vec<f64> = a
        .values
        .iter()
        .map(|&g| shift + scale * g.max(0.0))
        .collect();
    match b {
        Some((eb, b_scale)) => {
            let beta: Vec<f64> = eb.values.iter().map(|&x| b_scale * x.max(0.0)).collect();
            solve_sylvester(&a.vectors, &alpha, &eb.vectors, &beta, rhs)
        }
        None => {
            let mut core = a.vectors.tr_mul(rhs);
            for (i, mut row) in core.row_iter_mut().enumerate() {
                row /= alpha[i];
            }
            &a.vectors * core
        }
    }
}
