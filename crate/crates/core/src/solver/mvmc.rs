//! Multiple clusterings from one shared matrix `U` and `h` individuality
//! matrices `D^k`, each factorized by semi-NMF.
//!
//! Augmented objective at penalty `μ` with multipliers `ψ^{v,k}`:
//!
//! ```text
//! (1/h) Σ_k ‖U + D^k − B^k (R^k)ᵀ‖²
//!   + λ1 Σ_k tr(D^k K̃^k (D^k)ᵀ) + λ2 tr(U L̃ Uᵀ)
//!   + 1/(hm) Σ_{v,k} [ ⟨ψ^{v,k}, E^{v,k}⟩ + μ/2 ‖E^{v,k}‖² ],   E^{v,k} = X^v − X^v (U + D^k)
//! ```
//!
//! Sweep: semi-NMF step per head, exact minimization over each `D^k` in
//! turn (a Sylvester equation, since the HSIC term acts from the right),
//! exact minimization over `U` (another Sylvester equation with `L̃`).

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{relative_change, sylvester_shifted, AlmSettings, ObjectiveTerms, TraceRow};
use crate::data::MultiViewDataset;
use crate::error::{MvmcError, Result};
use crate::factorize::{harden_assignments, semi_nmf_init, semi_nmf_update, SemiNmfPair};
use crate::graph::{smoothness_penalty, GraphSet, WidthRule};
use crate::hsic::{aggregated_kernel, diversity_value};
use crate::linalg::{all_finite, frob2, Mat, SymEigen};

/// Scale of the uniform noise used to initialize each `D^k`.
const D_INIT_SCALE: f64 = 1e-3;

/// Starting point of the individuality matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// `D^k` starts as the ridge self-representation of its view group
    /// (views assigned to clusterings round-robin), plus small noise.
    #[default]
    ViewGroups,
    /// `D^k` starts as small uniform noise.
    Noise,
}

/// Views whose self-representation seeds clustering `k`.
pub fn view_group(k: usize, h: usize, m: usize) -> Vec<usize> {
    if h <= m {
        (0..m).filter(|v| v % h == k).collect()
    } else {
        vec![k % m]
    }
}

/// `(G + γ I)⁻¹ G` with `G = Σ_{v ∈ group} (X^v)ᵀ X^v`, the minimizer of
/// `‖X − X D‖² + γ ‖D‖²` over the stacked views of the group.
pub fn ridge_self_representation(ds: &MultiViewDataset, group: &[usize], gamma: f64) -> Mat {
    let n = ds.n();
    let gram = group
        .iter()
        .fold(Mat::zeros(n, n), |acc, &v| acc + ds.view(v).tr_mul(ds.view(v)));
    let shifted = &gram + Mat::identity(n, n) * gamma;
    match shifted.cholesky() {
        Some(c) => c.solve(&gram),
        None => Mat::zeros(n, n),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MvmcConfig {
    /// Number of alternative clusterings.
    pub h: usize,
    /// Cluster count per clustering; a single entry is reused for every
    /// clustering and an empty list means 2 each.
    pub r: Vec<usize>,
    /// `false` freezes `U` at zero (the ablation without shared information).
    pub use_shared: bool,
    pub init: InitStrategy,
    #[serde(flatten)]
    pub alm: AlmSettings,
}

impl Default for MvmcConfig {
    fn default() -> Self {
        MvmcConfig {
            h: 2,
            r: Vec::new(),
            use_shared: true,
            init: InitStrategy::default(),
            alm: AlmSettings::default(),
        }
    }
}

impl MvmcConfig {
    pub fn ranks(&self) -> Vec<usize> {
        match self.r.len() {
            0 => vec![2; self.h],
            1 => vec![self.r[0]; self.h],
            _ => self.r.clone(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.alm.validate()?;
        if self.h == 0 {
            return Err(MvmcError::param("h must be at least 1"));
        }
        let ranks = self.ranks();
        if ranks.len() != self.h {
            return Err(MvmcError::param(format!(
                "r lists {} cluster counts for h = {}",
                ranks.len(),
                self.h
            )));
        }
        if let Some(&r) = ranks.iter().find(|&&r| r < 2 || r > n) {
            return Err(MvmcError::param(format!("cluster count {r} outside 2..={n}")));
        }
        if ranks.iter().sum::<usize>() > n {
            log::warn!("sum of cluster counts exceeds n = {n}");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MvmcState {
    pub u: Mat,
    pub ds: Vec<Mat>,
    pub heads: Vec<SemiNmfPair>,
    /// `multipliers[k][v]`, shape `d_v × n`.
    pub multipliers: Vec<Vec<Mat>>,
    pub mu: f64,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone)]
pub struct MvmcOutcome {
    pub state: MvmcState,
    pub labelings: Vec<Vec<usize>>,
    /// Rows of `R^k` with no positive entry, per clustering.
    pub zero_rows: Vec<usize>,
    pub converged: bool,
}

/// Per-iteration table of a finished or running solve.
pub fn solver_trace(state: &MvmcState) -> &[TraceRow] {
    &state.trace
}

/// Term breakdown of the augmented objective.
pub fn objective(
    state: &MvmcState,
    ds: &MultiViewDataset,
    graphs: &GraphSet,
    cfg: &MvmcConfig,
) -> Result<ObjectiveTerms> {
    let n = ds.n();
    let h = state.ds.len();
    if state.u.shape() != (n, n)
        || state.ds.iter().any(|d| d.shape() != (n, n))
        || state.heads.len() != h
        || state.multipliers.len() != h
        || graphs.laplacian_sum.shape() != (n, n)
    {
        return Err(MvmcError::shape("solver state does not match the dataset"));
    }
    let fit = state
        .ds
        .iter()
        .zip(&state.heads)
        .map(|(d, head)| frob2(&(&state.u + d - head.reconstruction())))
        .sum::<f64>()
        / h as f64;
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
    let scale = 1.0 / (h * ds.m()) as f64;
    let mut penalty = 0.0;
    for (k, d) in state.ds.iter().enumerate() {
        let z = &state.u + d;
        for (v, x) in ds.views().iter().enumerate() {
            let psi = &state.multipliers[k][v];
            if psi.shape() != x.shape() {
                return Err(MvmcError::shape(format!("multiplier ({k},{v}) has wrong shape")));
            }
            let e = x - x * &z;
            penalty += psi.dot(&e) + 0.5 * state.mu * frob2(&e);
        }
    }
    Ok(ObjectiveTerms::new(fit, hsic, smooth, scale * penalty))
}

/// Holds the per-run constants (graphs, spectral factors) of one solve.
pub struct MvmcSolver<'a> {
    ds: &'a MultiViewDataset,
    cfg: MvmcConfig,
    graphs: GraphSet,
    gram_eig: SymEigen,
    laplacian_eig: Option<SymEigen>,
}

impl<'a> MvmcSolver<'a> {
    pub fn new(ds: &'a MultiViewDataset, cfg: &MvmcConfig) -> Result<Self> {
        cfg.validate(ds.n())?;
        let graphs = GraphSet::build(ds, cfg.alm.epsilon_knn, WidthRule::StdDistance)?;
        Self::with_graphs(ds, cfg, graphs)
    }

    pub fn with_graphs(ds: &'a MultiViewDataset, cfg: &MvmcConfig, graphs: GraphSet) -> Result<Self> {
        cfg.validate(ds.n())?;
        if graphs.laplacian_sum.shape() != (ds.n(), ds.n()) {
            return Err(MvmcError::shape("graph set does not match the dataset"));
        }
        let gram_eig = SymEigen::new(&ds.gram_sum());
        let laplacian_eig = (cfg.use_shared && cfg.alm.lambda2 > 0.0)
            .then(|| SymEigen::new(&graphs.laplacian_sum));
        Ok(MvmcSolver {
            ds,
            cfg: cfg.clone(),
            graphs,
            gram_eig,
            laplacian_eig,
        })
    }

    pub fn graphs(&self) -> &GraphSet {
        &self.graphs
    }

    pub fn config(&self) -> &MvmcConfig {
        &self.cfg
    }

    fn penalty_scale(&self) -> f64 {
        1.0 / (self.cfg.h * self.ds.m()) as f64
    }

    pub fn init_state(&self) -> Result<MvmcState> {
        let n = self.ds.n();
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.alm.seed);
        let u = if self.cfg.use_shared {
            Mat::identity(n, n) / n as f64
        } else {
            Mat::zeros(n, n)
        };
        // the ridge matches the D-step's own balance of fit and penalty at μ0
        let gamma = 2.0 * self.ds.m() as f64 / self.cfg.alm.mu0;
        let ds: Vec<Mat> = (0..self.cfg.h)
            .map(|k| {
                let noise = Mat::from_fn(n, n, |_, _| D_INIT_SCALE * rng.random_range(-1.0..1.0));
                match self.cfg.init {
                    InitStrategy::Noise => noise,
                    InitStrategy::ViewGroups => {
                        let group = view_group(k, self.cfg.h, self.ds.m());
                        ridge_self_representation(self.ds, &group, gamma) + noise
                    }
                }
            })
            .collect();
        let heads = ds
            .iter()
            .zip(self.cfg.ranks())
            .enumerate()
            .map(|(k, (d, rank))| {
                semi_nmf_init(&(&u + d), rank, self.cfg.alm.seed.wrapping_add(1 + k as u64))
            })
            .collect::<Result<Vec<_>>>()?;
        let multipliers = (0..self.cfg.h)
            .map(|_| self.ds.views().iter().map(|x| Mat::zeros(x.nrows(), n)).collect())
            .collect();
        Ok(MvmcState {
            u,
            ds,
            heads,
            multipliers,
            mu: self.cfg.alm.mu0,
            trace: Vec::new(),
        })
    }

    pub fn objective(&self, state: &MvmcState) -> Result<ObjectiveTerms> {
        objective(state, self.ds, &self.graphs, &self.cfg)
    }

    /// `max_{v,k} ‖X^v − X^v(U + D^k)‖_F / ‖X^v‖_F`.
    pub fn feasibility(&self, state: &MvmcState) -> f64 {
        let mut worst: f64 = 0.0;
        for d in &state.ds {
            let z = &state.u + d;
            for x in self.ds.views() {
                let norm = x.norm().max(f64::MIN_POSITIVE);
                worst = worst.max((x - x * &z).norm() / norm);
            }
        }
        worst
    }

    /// `Σ_v (X^v)ᵀ X^v M` without forming the Gram matrix product.
    fn gram_times(&self, m: &Mat) -> Mat {
        let n = self.ds.n();
        self.ds
            .views()
            .iter()
            .fold(Mat::zeros(n, m.ncols()), |acc, x| acc + x.tr_mul(&(x * m)))
    }

    fn multiplier_pullback(&self, psi: &[Mat]) -> Mat {
        let n = self.ds.n();
        self.ds
            .views()
            .iter()
            .zip(psi)
            .fold(Mat::zeros(n, n), |acc, (x, p)| acc + x.tr_mul(p))
    }

    /// Step 1: semi-NMF alternations on `U + D^k`.
    pub fn update_heads(&self, state: &mut MvmcState) -> Result<()> {
        for k in 0..state.heads.len() {
            let target = &state.u + &state.ds[k];
            for _ in 0..self.cfg.alm.factor_inner_iters {
                state.heads[k] = semi_nmf_update(&target, &state.heads[k])?;
            }
        }
        Ok(())
    }

    /// Step 2: exact block minimization over each `D^k`, in order.
    ///
    /// ```text
    /// [(2/h) I + μc G] D + D [4 λ1 K̃^k] = (2/h)(B Rᵀ − U) + c Σ_v (X^v)ᵀ ψ^{v,k} + μc (G − G U)
    /// ```
    ///
    /// with `c = 1/(hm)`; `K̃^k` is rebuilt from the current other `D`s.
    pub fn update_individual(&self, state: &mut MvmcState) -> Result<()> {
        let h = self.cfg.h as f64;
        let c = self.penalty_scale();
        let mu = state.mu;
        let n = self.ds.n();
        let g_minus_gu = self.gram_times(&(Mat::identity(n, n) - &state.u));
        let lambda1 = self.cfg.alm.lambda1;
        for k in 0..state.ds.len() {
            let mut rhs = (state.heads[k].reconstruction() - &state.u) * (2.0 / h);
            rhs += self.multiplier_pullback(&state.multipliers[k]) * c;
            rhs += &g_minus_gu * (mu * c);
            let kernel = (lambda1 > 0.0 && state.ds.len() > 1)
                .then(|| SymEigen::new(&aggregated_kernel(&state.ds, k)));
            state.ds[k] = sylvester_shifted(
                &self.gram_eig,
                2.0 / h,
                mu * c,
                kernel.as_ref().map(|e| (e, 4.0 * lambda1)),
                &rhs,
            );
        }
        Ok(())
    }

    /// Step 3: exact minimization over `U` (skipped when `U` is frozen).
    ///
    /// ```text
    /// [2 I + (μ/m) G] U + U [2 λ2 L̃] = (2/h) Σ_k (B^k R^kᵀ − D^k) + c Σ_{v,k} (X^v)ᵀ ψ^{v,k}
    ///                                   + μc Σ_k (G − G D^k)
    /// ```
    pub fn update_shared(&self, state: &mut MvmcState) -> Result<()> {
        if !self.cfg.use_shared {
            return Ok(());
        }
        let h = self.cfg.h as f64;
        let c = self.penalty_scale();
        let mu = state.mu;
        let n = self.ds.n();
        let mut resid_sum = Mat::zeros(n, n);
        let mut rhs = Mat::zeros(n, n);
        for k in 0..state.ds.len() {
            rhs += (state.heads[k].reconstruction() - &state.ds[k]) * (2.0 / h);
            rhs += self.multiplier_pullback(&state.multipliers[k]) * c;
            resid_sum += Mat::identity(n, n) - &state.ds[k];
        }
        rhs += self.gram_times(&resid_sum) * (mu * c);
        let m = self.ds.m() as f64;
        state.u = sylvester_shifted(
            &self.gram_eig,
            2.0,
            mu / m,
            self.laplacian_eig
                .as_ref()
                .map(|e| (e, 2.0 * self.cfg.alm.lambda2)),
            &rhs,
        );
        Ok(())
    }

    /// Step 4: multiplier ascent and penalty growth.
    pub fn update_multipliers(&self, state: &mut MvmcState) {
        let mu = state.mu;
        for (k, d) in state.ds.iter().enumerate() {
            let z = &state.u + d;
            for (v, x) in self.ds.views().iter().enumerate() {
                state.multipliers[k][v] += (x - x * &z) * mu;
            }
        }
        state.mu = (state.mu * self.cfg.alm.rho).min(self.cfg.alm.mu_max);
    }

    fn check_finite(&self, state: &MvmcState, iteration: usize) -> Result<()> {
        let ok = all_finite(&state.u)
            && state.ds.iter().all(all_finite)
            && state.heads.iter().all(|p| all_finite(&p.b) && all_finite(&p.r));
        if ok {
            Ok(())
        } else {
            Err(MvmcError::Divergence {
                iteration,
                trace: state.trace.clone(),
            })
        }
    }

    /// Steps 1–3 at the current `μ`; returns the trace row for this sweep.
    pub fn sweep(&self, state: &mut MvmcState, iteration: usize) -> Result<TraceRow> {
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
        self.check_finite(state, iteration)?;
        let terms = self.objective(state)?;
        if record {
            steps.push(terms.total);
        }
        if !terms.total.is_finite() {
            return Err(MvmcError::Divergence {
                iteration,
                trace: state.trace.clone(),
            });
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

    pub fn run(&self) -> Result<MvmcOutcome> {
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
        let hardened: Vec<_> = state.heads.iter().map(|p| harden_assignments(&p.r)).collect();
        Ok(MvmcOutcome {
            labelings: hardened.iter().map(|h| h.labels.clone()).collect(),
            zero_rows: hardened.iter().map(|h| h.zero_rows).collect(),
            state,
            converged,
        })
    }
}

/// Runs the full alternating schedule and hardens each `R^k`.
pub fn solve(ds: &MultiViewDataset, cfg: &MvmcConfig) -> Result<MvmcOutcome> {
    MvmcSolver::new(ds, cfg)?.run()
}
