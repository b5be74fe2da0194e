//! Seeded Lloyd k-means over the columns of a matrix.
//!
//! Used for factor warm starts and as a single-view baseline in tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{MvmcError, Result};
use crate::linalg::Mat;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Mat,
    pub inertia: f64,
}

fn sq_dist_to(points: &Mat, i: usize, centroids: &Mat, c: usize) -> f64 {
    points
        .column(i)
        .iter()
        .zip(centroids.column(c).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn plus_plus_init(points: &Mat, k: usize, rng: &mut ChaCha8Rng) -> Mat {
    let n = points.ncols();
    let mut centroids = Mat::zeros(points.nrows(), k);
    let first = rng.random_range(0..n);
    centroids.set_column(0, &points.column(first));
    let mut best = vec![f64::INFINITY; n];
    for c in 1..k {
        for (i, b) in best.iter_mut().enumerate() {
            *b = b.min(sq_dist_to(points, i, &centroids, c - 1));
        }
        let total: f64 = best.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &b) in best.iter().enumerate() {
                if target < b {
                    chosen = i;
                    break;
                }
                target -= b;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.set_column(c, &points.column(pick));
    }
    centroids
}

fn lloyd(points: &Mat, mut centroids: Mat, max_iter: usize) -> KMeansResult {
    let (d, n) = points.shape();
    let k = centroids.ncols();
    let mut labels = vec![0usize; n];
    let mut inertia = f64::INFINITY;
    for _ in 0..max_iter {
        let mut changed = false;
        let mut new_inertia = 0.0;
        for (i, label) in labels.iter_mut().enumerate() {
            let (best_c, best_d) = (0..k)
                .map(|c| (c, sq_dist_to(points, i, &centroids, c)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            if *label != best_c {
                *label = best_c;
                changed = true;
            }
            new_inertia += best_d;
        }
        inertia = new_inertia;
        let mut sums = Mat::zeros(d, k);
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            let mut col = sums.column_mut(l);
            col += points.column(i);
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids.set_column(c, &(sums.column(c) / counts[c] as f64));
            } else {
                // re-seed an empty cluster at the worst-served point
                let far = (0..n)
                    .map(|i| (i, sq_dist_to(points, i, &centroids, labels[i])))
                    .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
                    .0;
                centroids.set_column(c, &points.column(far));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    KMeansResult {
        labels,
        centroids,
        inertia,
    }
}

/// Clusters the columns of `points` into `k` groups, keeping the best of
/// `restarts` k-means++ initializations.
pub fn kmeans_columns(points: &Mat, k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.ncols();
    if k == 0 || k > n {
        return Err(MvmcError::param(format!(
            "k-means needs 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        let init = plus_plus_init(points, k, &mut rng);
        let run = lloyd(points, init, 300);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_two_obvious_groups() {
        let pts = Mat::from_row_slice(1, 6, &[0.0, 0.1, 0.2, 10.0, 10.1, 10.2]);
        let res = kmeans_columns(&pts, 2, 3, 1).unwrap();
        assert_eq!(res.labels[0], res.labels[1]);
        assert_eq!(res.labels[1], res.labels[2]);
        assert_ne!(res.labels[0], res.labels[3]);
        assert!(res.inertia < 0.1);
    }

    #[test]
    fn rejects_k_larger_than_n() {
        let pts = Mat::zeros(2, 3);
        assert!(kmeans_columns(&pts, 4, 1, 0).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let pts = Mat::from_fn(3, 20, |i, j| ((i * 7 + j * 13) % 11) as f64);
        let a = kmeans_columns(&pts, 3, 4, 9).unwrap();
        let b = kmeans_columns(&pts, 3, 4, 9).unwrap();
        assert_eq!(a.labels, b.labels);
    }
}
