//! Multiple co-clusterings: one individuality matrix `D^v` and one
//! tri-factorization `X^v (U + D^v) ≈ C^v S^v (R^v)ᵀ` per view.
//!
//! Augmented objective at penalty `μ` with multipliers `ψ^v`:
//!
//! ```text
//! (1/m) Σ_v ‖X^v (U + D^v) − C^v S^v (R^v)ᵀ‖²
//!   + λ1 Σ_v tr(D^v K̃^v (D^v)ᵀ) + λ2 tr(U L̃ Uᵀ)
//!   + (1/m) Σ_v [ ⟨ψ^v, E^v⟩ + μ/2 ‖E^v‖² ],   E^v = X^v − X^v (U + D^v)
//! ```
//!
//! `(X^v)ᵀ X^v` has rank at most `d_v`, so the `D^v` and `U` blocks are
//! only positive semidefinite. Both steps add a proximal term
//! `ρ/2 ‖· − previous‖²` with a tiny `ρ`, which keeps the solve unique and
//! the sweep monotone.

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mvmc::{ridge_self_representation, InitStrategy};
use super::{relative_change, sylvester_shifted, AlmSettings, ObjectiveTerms, TraceRow};
use crate::data::MultiViewDataset;
use crate::error::{MvmcError, Result};
use crate::factorize::{harden_assignments, tri_factor_init, tri_factor_update, TriFactorTriple};
use crate::graph::{smoothness_penalty, GraphSet, WidthRule};
use crate::hsic::{aggregated_kernel, diversity_value};
use crate::linalg::{all_finite, frob2, Mat, SymEigen};

const D_INIT_SCALE: f64 = 1e-3;

/// Proximal weight relative to the mean eigenvalue of the fit operator.
const PROX_REL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MvmccConfig {
    /// Sample (column) cluster count per view; one entry is broadcast and
    /// an empty list means 2 each.
    pub r: Vec<usize>,
    /// Feature (row) cluster count per view. Required.
    pub c: Option<Vec<usize>>,
    pub use_shared: bool,
    pub init: InitStrategy,
    #[serde(flatten)]
    pub alm: AlmSettings,
}

impl Default for MvmccConfig {
    fn default() -> Self {
        MvmccConfig {
            r: Vec::new(),
            c: None,
            use_shared: true,
            init: InitStrategy::default(),
            alm: AlmSettings::default(),
        }
    }
}

fn broadcast(list: &[usize], m: usize, fallback: usize) -> Vec<usize> {
    match list.len() {
        0 => vec![fallback; m],
        1 => vec![list[0]; m],
        _ => list.to_vec(),
    }
}

impl MvmccConfig {
    pub fn col_ranks(&self, m: usize) -> Vec<usize> {
        broadcast(&self.r, m, 2)
    }

    pub fn row_ranks(&self, m: usize) -> Result<Vec<usize>> {
        match &self.c {
            Some(c) if !c.is_empty() => Ok(broadcast(c, m, 0)),
            _ => Err(MvmcError::param("row cluster counts c are required for co-clustering")),
        }
    }

    pub fn validate(&self, ds: &MultiViewDataset) -> Result<()> {
        self.alm.validate()?;
        let m = ds.m();
        let n = ds.n();
        let rows = self.row_ranks(m)?;
        let cols = self.col_ranks(m);
        if rows.len() != m || cols.len() != m {
            return Err(MvmcError::param(format!(
                "need one cluster count per view (m = {m}), got r: {}, c: {}",
                cols.len(),
                rows.len()
            )));
        }
        for (v, (&c, d)) in rows.iter().zip(ds.dims()).enumerate() {
            if c < 1 || c > d {
                return Err(MvmcError::param(format!(
                    "view {v}: row cluster count {c} outside 1..={d}"
                )));
            }
        }
        if let Some(&r) = cols.iter().find(|&&r| r < 2 || r > n) {
            return Err(MvmcError::param(format!("column cluster count {r} outside 2..={n}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MvmccState {
    pub u: Mat,
    pub ds: Vec<Mat>,
    pub triples: Vec<TriFactorTriple>,
    /// `multipliers[v]`, shape `d_v × n`.
    pub multipliers: Vec<Mat>,
    pub mu: f64,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone)]
pub struct MvmccOutcome {
    pub state: MvmccState,
    /// Feature labels per view, from `C^v`.
    pub row_labelings: Vec<Vec<usize>>,
    /// Sample labels per view, from `R^v`.
    pub col_labelings: Vec<Vec<usize>>,
    pub converged: bool,
}

/// Term breakdown of the augmented co-clustering objective.
pub fn objective_cc(
    state: &MvmccState,
    ds: &MultiViewDataset,
    graphs: &GraphSet,
    cfg: &MvmccConfig,
) -> Result<ObjectiveTerms> {
    let n = ds.n();
    let m = ds.m();
    if state.u.shape() != (n, n)
        || state.ds.len() != m
        || state.ds.iter().any(|d| d.shape() != (n, n))
        || state.triples.len() != m
        || state.multipliers.len() != m
        || graphs.laplacian_sum.shape() != (n, n)
    {
        return Err(MvmcError::shape("co-clustering state does not match the dataset"));
    }
    let scale = 1.0 / m as f64;
    let mut fit = 0.0;
    let mut penalty = 0.0;
    for (v, x) in ds.views().iter().enumerate() {
        let t = &state.triples[v];
        let target = x * (&state.u + &state.ds[v]);
        if t.c.nrows() != x.nrows() || t.r.nrows() != n || t.c.ncols() != t.s.nrows() || t.s.ncols() != t.r.ncols() {
            return Err(MvmcError::shape(format!("tri-factors of view {v} have wrong shapes")));
        }
        if state.multipliers[v].shape() != x.shape() {
            return Err(MvmcError::shape(format!("multiplier {v} has wrong shape")));
        }
        fit += frob2(&(&target - t.reconstruction()));
        let e = x - &target;
        penalty += state.multipliers[v].dot(&e) + 0.5 * state.mu * frob2(&e);
    }
    let hsic = if cfg.alm.lambda1 > 0.0 {
        cfg.alm.lambda1 * diversity_value(&state.ds)?
    } else {
        0.0
    };
    let smooth = if cfg.alm.lambda2 > 0.0 {
        cfg.alm.lambda2 * smoothness_penalty(&state.u, &graphs.laplacian_sum)?
    } else {
        0.0
    };
    Ok(ObjectiveTerms::new(scale * fit, hsic, smooth, scale * penalty))
}

pub struct MvmccSolver<'a> {
    ds: &'a MultiViewDataset,
    cfg: MvmccConfig,
    graphs: GraphSet,
    view_eigs: Vec<SymEigen>,
    gram_eig: SymEigen,
    laplacian_eig: Option<SymEigen>,
    view_prox: Vec<f64>,
    shared_prox: f64,
}

fn prox_weight(eig: &SymEigen, m: usize) -> f64 {
    let n = eig.values.len() as f64;
    let mean = eig.values.iter().map(|v| v.max(0.0)).sum::<f64>() / n;
    PROX_REL * (2.0 / m as f64) * mean.max(1.0)
}

impl<'a> MvmccSolver<'a> {
    pub fn new(ds: &'a MultiViewDataset, cfg: &MvmccConfig) -> Result<Self> {
        cfg.validate(ds)?;
        let graphs = GraphSet::build(ds, cfg.alm.epsilon_knn, WidthRule::StdDistance)?;
        Self::with_graphs(ds, cfg, graphs)
    }

    pub fn with_graphs(ds: &'a MultiViewDataset, cfg: &MvmccConfig, graphs: GraphSet) -> Result<Self> {
        cfg.validate(ds)?;
        if graphs.laplacian_sum.shape() != (ds.n(), ds.n()) {
            return Err(MvmcError::shape("graph set does not match the dataset"));
        }
        let m = ds.m();
        let view_eigs: Vec<SymEigen> = ds.views().iter().map(|x| SymEigen::new(&x.tr_mul(x))).collect();
        let gram_eig = SymEigen::new(&ds.gram_sum());
        let laplacian_eig = (cfg.use_shared && cfg.alm.lambda2 > 0.0)
            .then(|| SymEigen::new(&graphs.laplacian_sum));
        let view_prox = view_eigs.iter().map(|e| prox_weight(e, m)).collect();
        let shared_prox = prox_weight(&gram_eig, m);
        Ok(MvmccSolver {
            ds,
            cfg: cfg.clone(),
            graphs,
            view_eigs,
            gram_eig,
            laplacian_eig,
            view_prox,
            shared_prox,
        })
    }

    pub fn graphs(&self) -> &GraphSet {
        &self.graphs
    }

    pub fn config(&self) -> &MvmccConfig {
        &self.cfg
    }

    pub fn init_state(&self) -> Result<MvmccState> {
        let n = self.ds.n();
        let m = self.ds.m();
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.alm.seed);
        let u = if self.cfg.use_shared {
            Mat::identity(n, n) / n as f64
        } else {
            Mat::zeros(n, n)
        };
        let gamma = 2.0 * m as f64 / self.cfg.alm.mu0;
        let ds: Vec<Mat> = (0..m)
            .map(|v| {
                let noise = Mat::from_fn(n, n, |_, _| D_INIT_SCALE * rng.random_range(-1.0..1.0));
                match self.cfg.init {
                    InitStrategy::Noise => noise,
                    InitStrategy::ViewGroups => ridge_self_representation(self.ds, &[v], gamma) + noise,
                }
            })
            .collect();
        let rows = self.cfg.row_ranks(m)?;
        let cols = self.cfg.col_ranks(m);
        let triples = (0..m)
            .map(|v| {
                let target = self.ds.view(v) * (&u + &ds[v]);
                tri_factor_init(&target, rows[v], cols[v], self.cfg.alm.seed.wrapping_add(1 + v as u64))
            })
            .collect::<Result<Vec<_>>>()?;
        let multipliers = self.ds.views().iter().map(|x| Mat::zeros(x.nrows(), n)).collect();
        Ok(MvmccState {
            u,
            ds,
            triples,
            multipliers,
            mu: self.cfg.alm.mu0,
            trace: Vec::new(),
        })
    }

    pub fn objective(&self, state: &MvmccState) -> Result<ObjectiveTerms> {
        objective_cc(state, self.ds, &self.graphs, &self.cfg)
    }

    /// `max_v ‖X^v − X^v(U + D^v)‖_F / ‖X^v‖_F`.
    pub fn feasibility(&self, state: &MvmccState) -> f64 {
        self.ds
            .views()
            .iter()
            .zip(&state.ds)
            .map(|(x, d)| {
                let norm = x.norm().max(f64::MIN_POSITIVE);
                (x - x * (&state.u + d)).norm() / norm
            })
            .fold(0.0, f64::max)
    }

    /// Step 1: tri-factor alternations on `X^v (U + D^v)`.
    pub fn update_heads(&self, state: &mut MvmccState) -> Result<()> {
        for (v, x) in self.ds.views().iter().enumerate() {
            let target = x * (&state.u + &state.ds[v]);
            for _ in 0..self.cfg.alm.factor_inner_iters {
                state.triples[v] = tri_factor_update(&target, &state.triples[v])?;
            }
        }
        Ok(())
    }

    /// Step 2: proximal exact minimization over each `D^v`, in order.
    ///
    /// ```text
    /// [((2 + μ)/m) G_v + ρ I] D + D [4 λ1 K̃^v]
    ///     = (2/m) Xᵀ(T − X U) + (1/m) Xᵀ ψ + (μ/m) Xᵀ(X − X U) + ρ D_prev
    /// ```
    pub fn update_individual(&self, state: &mut MvmccState) -> Result<()> {
        let m = self.ds.m() as f64;
        let mu = state.mu;
        let lambda1 = self.cfg.alm.lambda1;
        for (v, x) in self.ds.views().iter().enumerate() {
            let xu = x * &state.u;
            let t = state.triples[v].reconstruction();
            let prox = self.view_prox[v];
            let mut rhs = x.tr_mul(&(&t - &xu)) * (2.0 / m);
            rhs += x.tr_mul(&state.multipliers[v]) / m;
            rhs += x.tr_mul(&(x - &xu)) * (mu / m);
            rhs += &state.ds[v] * prox;
            let kernel = (lambda1 > 0.0 && state.ds.len() > 1)
                .then(|| SymEigen::new(&aggregated_kernel(&state.ds, v)));
            state.ds[v] = sylvester_shifted(
                &self.view_eigs[v],
                prox,
                (2.0 + mu) / m,
                kernel.as_ref().map(|e| (e, 4.0 * lambda1)),
                &rhs,
            );
        }
        Ok(())
    }

    /// Step 3: proximal exact minimization over `U` (skipped when frozen).
    ///
    /// ```text
    /// [((2 + μ)/m) G + ρ I] U + U [2 λ2 L̃]
    ///     = Σ_v [(2/m) Xᵀ(T − X D) + (1/m) Xᵀ ψ + (μ/m) Xᵀ(X − X D)] + ρ U_prev
    /// ```
    pub fn update_shared(&self, state: &mut MvmccState) -> Result<()> {
        if !self.cfg.use_shared {
            return Ok(());
        }
        let m = self.ds.m() as f64;
        let mu = state.mu;
        let prox = self.shared_prox;
        let mut rhs = &state.u * prox;
        for (v, x) in self.ds.views().iter().enumerate() {
            let xd = x * &state.ds[v];
            let t = state.triples[v].reconstruction();
            rhs += x.tr_mul(&(&t - &xd)) * (2.0 / m);
            rhs += x.tr_mul(&state.multipliers[v]) / m;
            rhs += x.tr_mul(&(x - &xd)) * (mu / m);
        }
        state.u = sylvester_shifted(
            &self.gram_eig,
            prox,
            (2.0 + mu) / m,
            self.laplacian_eig
                .as_ref()
                .map(|e| (e, 2.0 * self.cfg.alm.lambda2)),
            &rhs,
        );
        Ok(())
    }

    pub fn update_multipliers(&self, state: &mut MvmccState) {
        let mu = state.mu;
        for (v, x) in self.ds.views().iter().enumerate() {
            state.multipliers[v] += (x - x * (&state.u + &state.ds[v])) * mu;
        }
        state.mu = (state.mu * self.cfg.alm.rho).min(self.cfg.alm.mu_max);
    }

    fn divergence(&self, state: &MvmccState, iteration: usize) -> MvmcError {
        MvmcError::Divergence {
            iteration,
            trace: state.trace.clone(),
        }
    }

    pub fn sweep(&self, state: &mut MvmccState, iteration: usize) -> Result<TraceRow> {
        let record = self.cfg.alm.record_steps;
        let mut steps = Vec::new();
        if record {
            steps.push(self.objective(state)?.total);
        }
        self.update_heads(state)?;
        if record {
            steps.push(self.objective(state)?.total);
        }
        self.update_individual(state)?;
        if record {
            steps.push(self.objective(state)?.total);
        }
        self.update_shared(state)?;
        let finite = all_finite(&state.u)
            && state.ds.iter().all(all_finite)
            && state
                .triples
                .iter()
                .all(|t| all_finite(&t.c) && all_finite(&t.s) && all_finite(&t.r));
        if !finite {
            return Err(self.divergence(state, iteration));
        }
        let terms = self.objective(state)?;
        if !terms.total.is_finite() {
            return Err(self.divergence(state, iteration));
        }
        if record {
            steps.push(terms.total);
        }
        Ok(TraceRow {
            iter: iteration,
            fit: terms.fit,
            hsic: terms.hsic,
            smooth: terms.smooth,
            penalty: terms.penalty,
            total: terms.total,
            feasibility: self.feasibility(state),
            mu: state.mu,
            step_totals: record.then_some(steps),
        })
    }

    pub fn run(&self) -> Result<MvmccOutcome> {
        let mut state = self.init_state()?;
        let mut converged = false;
        for iteration in 0..self.cfg.alm.max_outer_iters {
            let row = self.sweep(&mut state, iteration)?;
            let done = state.trace.last().is_some_and(|prev| {
                relative_change(prev.total, row.total) < self.cfg.alm.tol_obj
                    && row.feasibility < self.cfg.alm.tol_feas
            });
            debug!(
                "iter {iteration}: total {:.6e} feas {:.3e} mu {:.3e}",
                row.total, row.feasibility, row.mu
            );
            state.trace.push(row);
            if done {
                converged = true;
                break;
            }
            self.update_multipliers(&mut state);
        }
        let row_labelings = state.triples.iter().map(|t| harden_assignments(&t.c).labels).collect();
        let col_labelings = state.triples.iter().map(|t| harden_assignments(&t.r).labels).collect();
        Ok(MvmccOutcome {
            state,
            row_labelings,
            col_labelings,
            converged,
        })
    }
}

/// Runs the co-clustering schedule and hardens every `C^v` and `R^v`.
pub fn solve_cc(ds: &MultiViewDataset, cfg: &MvmccConfig) -> Result<MvmccOutcome> {
    MvmccSolver::new(ds, cfg)?.run()
}
