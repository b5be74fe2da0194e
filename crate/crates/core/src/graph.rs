//! Per-view k-nearest-neighbour heat-kernel graphs and their summed Laplacian.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::MultiViewDataset;
use crate::error::{MvmcError, Result};
use crate::linalg::Mat;

/// How the Gaussian kernel width of a view is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WidthRule {
    /// Standard deviation of all pairwise Euclidean distances of the view.
    #[default]
    StdDistance,
    Fixed(f64),
}

/// Similarity graphs `W^v`, degrees `Λ^v` and `L̃ = Σ_v (Λ^v − W^v)`.
#[derive(Debug, Clone)]
pub struct GraphSet {
    pub similarities: Vec<Mat>,
    /// Diagonals of the degree matrices.
    pub degrees: Vec<DVector<f64>>,
    pub laplacian_sum: Mat,
    pub epsilon: usize,
    pub kernel_widths: Vec<f64>,
}

impl GraphSet {
    pub fn build(ds: &MultiViewDataset, epsilon: usize, rule: WidthRule) -> Result<Self> {
        let mut similarities = Vec::with_capacity(ds.m());
        let mut kernel_widths = Vec::with_capacity(ds.m());
        for x in ds.views() {
            let (w, sigma) = build_knn_graph_with_width(x, epsilon, rule)?;
            similarities.push(w);
            kernel_widths.push(sigma);
        }
        let degrees = similarities.iter().map(|w| w.column_sum()).collect();
        let laplacian_sum = laplacian_sum(&similarities)?;
        Ok(GraphSet {
            similarities,
            degrees,
            laplacian_sum,
            epsilon,
            kernel_widths,
        })
    }
}

fn pairwise_distances(x: &Mat) -> Mat {
    let n = x.ncols();
    let mut d = Mat::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = (x.column(i) - x.column(j)).norm();
            d[(i, j)] = dist;
            d[(j, i)] = dist;
        }
    }
    d
}

/// Standard deviation of the distances over unordered pairs.
fn distance_std(dist: &Mat) -> f64 {
    let n = dist.nrows();
    let count = (n * (n - 1) / 2) as f64;
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += dist[(i, j)];
        }
    }
    let mean = sum / count;
    let mut var = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            var += (dist[(i, j)] - mean).powi(2);
        }
    }
    (var / count).sqrt()
}

/// Symmetric kNN heat-kernel similarity matrix over the columns of `x`.
pub fn build_knn_graph(x: &Mat, epsilon: usize, rule: WidthRule) -> Result<Mat> {
    build_knn_graph_with_width(x, epsilon, rule).map(|(w, _)| w)
}

/// As [`build_knn_graph`], also returning the kernel width used.
///
/// An edge joins `i` and `j` when either is among the other's `epsilon`
/// nearest neighbours; neighbour ties go to the lower sample index.
pub fn build_knn_graph_with_width(x: &Mat, epsilon: usize, rule: WidthRule) -> Result<(Mat, f64)> {
    let n = x.ncols();
    if epsilon == 0 || epsilon >= n {
        return Err(MvmcError::param(format!(
            "neighbourhood size must satisfy 1 <= epsilon < n, got epsilon={epsilon}, n={n}"
        )));
    }
    let dist = pairwise_distances(x);
    let sigma = match rule {
        WidthRule::Fixed(s) if s > 0.0 && s.is_finite() => s,
        WidthRule::Fixed(s) => {
            return Err(MvmcError::param(format!("kernel width must be positive, got {s}")))
        }
        WidthRule::StdDistance => {
            let s = distance_std(&dist);
            // all pairwise distances equal: any width gives the same ordering
            if s > 0.0 {
                s
            } else {
                1.0
            }
        }
    };
    let mut w = Mat::zeros(n, n);
    let mut order: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| dist[(i, a)].total_cmp(&dist[(i, b)]).then(a.cmp(&b)));
        for &j in order.iter().take(epsilon) {
            let sim = (-dist[(i, j)].powi(2) / (2.0 * sigma * sigma)).exp();
            w[(i, j)] = sim;
            w[(j, i)] = sim;
        }
    }
    Ok((w, sigma))
}

/// `Σ_v (Λ^v − W^v)` for a list of similarity matrices.
pub fn laplacian_sum(graphs: &[Mat]) -> Result<Mat> {
    let first = graphs
        .first()
        .ok_or_else(|| MvmcError::param("laplacian_sum needs at least one graph"))?;
    let n = first.nrows();
    let mut l = Mat::zeros(n, n);
    for (v, w) in graphs.iter().enumerate() {
        if w.nrows() != n || w.ncols() != n {
            return Err(MvmcError::shape(format!(
                "graph {v} is {}x{}, expected {n}x{n}",
                w.nrows(),
                w.ncols()
            )));
        }
        l -= w;
        for (i, deg) in w.column_sum().iter().enumerate() {
            l[(i, i)] += deg;
        }
    }
    Ok(l)
}

/// `tr(U L̃ Uᵀ)`.
pub fn smoothness_penalty(u: &Mat, laplacian: &Mat) -> Result<f64> {
    let n = laplacian.nrows();
    if laplacian.ncols() != n || u.ncols() != n {
        return Err(MvmcError::shape(format!(
            "U is {}x{}, Laplacian is {}x{}",
            u.nrows(),
            u.ncols(),
            laplacian.nrows(),
            laplacian.ncols()
        )));
    }
    Ok((u * laplacian).dot(u))
}
