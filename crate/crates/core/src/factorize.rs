//! Semi-NMF (`M ≈ B Rᵀ`, `R ≥ 0`) and nonnegative tri-factorization
//! (`T ≈ C S Rᵀ`, `C, R ≥ 0`) with monotone alternating updates.
//!
//! The nonnegative factors use the square-root multiplicative rule for
//! semi-NMF: for `X ≈ F Gᵀ` with `F` fixed,
//!
//! ```text
//! G ← G ∘ sqrt( [(XᵀF)⁺ + G (FᵀF)⁻] / [(XᵀF)⁻ + G (FᵀF)⁺] )
//! ```
//!
//! which never increases `‖X − F Gᵀ‖²_F` and keeps `G` entrywise nonnegative.

use crate::error::{MvmcError, Result};
use crate::kmeans::kmeans_columns;
use crate::linalg::{frob2, left_solve_gram, neg_part, pos_part, right_solve_gram, Mat};

/// Added to the denominator of the multiplicative ratio.
pub const EPS_DIV: f64 = 1e-12;

/// Mass added to every entry of a one-hot warm start.
const WARM_START_SMOOTHING: f64 = 0.2;
const WARM_START_RESTARTS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SemiNmfPair {
    /// `n × r` basis, any sign.
    pub b: Mat,
    /// `n × r` nonnegative cluster indicator.
    pub r: Mat,
}

impl SemiNmfPair {
    pub fn rank(&self) -> usize {
        self.r.ncols()
    }

    pub fn reconstruction(&self) -> Mat {
        &self.b * self.r.transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriFactorTriple {
    /// `d × c` nonnegative row-cluster indicator.
    pub c: Mat,
    /// `c × r` core, any sign.
    pub s: Mat,
    /// `n × r` nonnegative column-cluster indicator.
    pub r: Mat,
}

impl TriFactorTriple {
    pub fn reconstruction(&self) -> Mat {
        &self.c * &self.s * self.r.transpose()
    }
}

/// One multiplicative step for the nonnegative factor `g` of `X ≈ F gᵀ`,
/// given `xt_f = Xᵀ F` and `ft_f = Fᵀ F`.
fn multiplicative_step(g: &Mat, xt_f: &Mat, ft_f: &Mat) -> Mat {
    let num = pos_part(xt_f) + g * neg_part(ft_f);
    let den = neg_part(xt_f) + g * pos_part(ft_f);
    g.zip_zip_map(&num, &den, |gij, a, b| gij * (a / (b + EPS_DIV)).sqrt())
}

fn one_hot(labels: &[usize], k: usize) -> Mat {
    Mat::from_fn(labels.len(), k, |i, j| {
        WARM_START_SMOOTHING + if labels[i] == j { 1.0 } else { 0.0 }
    })
}

pub fn semi_nmf_residual(m: &Mat, pair: &SemiNmfPair) -> f64 {
    frob2(&(m - pair.reconstruction()))
}

/// Warm start: k-means on the columns of `m` gives `R`, least squares gives `B`.
pub fn semi_nmf_init(m: &Mat, rank: usize, seed: u64) -> Result<SemiNmfPair> {
    if rank > m.ncols() || rank == 0 {
        return Err(MvmcError::param(format!(
            "cluster count {rank} must lie in 1..={}",
            m.ncols()
        )));
    }
    let km = kmeans_columns(m, rank, WARM_START_RESTARTS, seed)?;
    let r = one_hot(&km.labels, rank);
    let b = right_solve_gram(&(m * &r), &r.tr_mul(&r));
    Ok(SemiNmfPair { b, r })
}

/// One alternation: closed-form `B`, then the multiplicative `R` step.
pub fn semi_nmf_update(m: &Mat, state: &SemiNmfPair) -> Result<SemiNmfPair> {
    let rank = state.r.ncols();
    if rank > m.ncols() || state.r.nrows() != m.ncols() || state.b.nrows() != m.nrows() {
        return Err(MvmcError::param(format!(
            "semi-NMF factors {:?}/{:?} do not fit a {:?} target",
            state.b.shape(),
            state.r.shape(),
            m.shape()
        )));
    }
    let r = &state.r;
    let b = right_solve_gram(&(m * r), &r.tr_mul(r));
    let r = multiplicative_step(r, &m.tr_mul(&b), &b.tr_mul(&b));
    Ok(SemiNmfPair { b, r })
}

pub fn tri_factor_residual(t: &Mat, triple: &TriFactorTriple) -> f64 {
    frob2(&(t - triple.reconstruction()))
}

fn closed_form_core(t: &Mat, c: &Mat, r: &Mat) -> Mat {
    let left = left_solve_gram(&c.tr_mul(c), &(c.tr_mul(t) * r));
    right_solve_gram(&left, &r.tr_mul(r))
}

/// Warm start: k-means over rows (for `C`) and columns (for `R`), then the
/// closed-form core.
pub fn tri_factor_init(t: &Mat, row_clusters: usize, col_clusters: usize, seed: u64) -> Result<TriFactorTriple> {
    check_tri_sizes(t, row_clusters, col_clusters)?;
    let rows = kmeans_columns(&t.transpose(), row_clusters, WARM_START_RESTARTS, seed)?;
    let cols = kmeans_columns(t, col_clusters, WARM_START_RESTARTS, seed.wrapping_add(1))?;
    let c = one_hot(&rows.labels, row_clusters);
    let r = one_hot(&cols.labels, col_clusters);
    let s = closed_form_core(t, &c, &r);
    Ok(TriFactorTriple { c, s, r })
}

fn check_tri_sizes(t: &Mat, row_clusters: usize, col_clusters: usize) -> Result<()> {
    let (d, n) = t.shape();
    if row_clusters == 0 || row_clusters > d {
        return Err(MvmcError::param(format!(
            "row cluster count {row_clusters} must lie in 1..={d}"
        )));
    }
    if col_clusters == 0 || col_clusters > n {
        return Err(MvmcError::param(format!(
            "column cluster count {col_clusters} must lie in 1..={n}"
        )));
    }
    Ok(())
}

/// One alternation of `S` (closed form), `C` and `R` (multiplicative).
pub fn tri_factor_update(t: &Mat, state: &TriFactorTriple) -> Result<TriFactorTriple> {
    check_tri_sizes(t, state.c.ncols(), state.r.ncols())?;
    if state.c.nrows() != t.nrows() || state.r.nrows() != t.ncols() {
        return Err(MvmcError::shape(format!(
            "tri-factors {:?}/{:?} do not fit a {:?} target",
            state.c.shape(),
            state.r.shape(),
            t.shape()
        )));
    }
    let s = closed_form_core(t, &state.c, &state.r);
    // Tᵀ ≈ (R Sᵀ) Cᵀ
    let f = &state.r * s.transpose();
    let c = multiplicative_step(&state.c, &(t * &f), &f.tr_mul(&f));
    // T ≈ (C S) Rᵀ
    let f = &c * &s;
    let r = multiplicative_step(&state.r, &t.tr_mul(&f), &f.tr_mul(&f));
    Ok(TriFactorTriple { c, s, r })
}

/// Hard labels from a nonnegative indicator matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hardened {
    pub labels: Vec<usize>,
    /// Rows with no positive entry; they are assigned cluster 0.
    pub zero_rows: usize,
}

/// Row-wise argmax; ties go to the lowest column index.
pub fn harden_assignments(r: &Mat) -> Hardened {
    let mut zero_rows = 0;
    let labels = r
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            if row.len() == 0 || row[best] <= 0.0 {
                zero_rows += 1;
                0
            } else {
                best
            }
        })
        .collect();
    Hardened { labels, zero_rows }
}
