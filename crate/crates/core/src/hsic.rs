//! Empirical HSIC with inner-product kernels and the aggregated kernels
//! used by the diversity penalty.
//!
//! With `K^k = (D^k)ᵀ D^k` the pairwise statistic
//! `(n−1)⁻² tr(K^k H K^k' H)` equals `(n−1)⁻² ‖D^k H (D^k')ᵀ‖²_F`, which is
//! what [`hsic_pair`] evaluates: one `n³` product instead of three.

use crate::error::{MvmcError, Result};
use crate::linalg::{center_columns_of_rows, center_rows_of_columns, frob2, Mat};

/// Kernels and aggregated kernels for a set of individuality matrices.
#[derive(Debug, Clone)]
pub struct DiversityContext {
    pub h: usize,
    pub kernels: Vec<Mat>,
    pub centering: Mat,
    pub aggregated: Vec<Mat>,
}

impl DiversityContext {
    pub fn new(ds: &[Mat]) -> Result<Self> {
        let n = check_shapes(ds)?;
        let kernels: Vec<Mat> = ds.iter().map(|d| d.tr_mul(d)).collect();
        let aggregated = (0..ds.len()).map(|k| aggregated_kernel(ds, k)).collect();
        Ok(DiversityContext {
            h: ds.len(),
            kernels,
            centering: centering_matrix(n)?,
            aggregated,
        })
    }
}

fn check_shapes(ds: &[Mat]) -> Result<usize> {
    let first = ds
        .first()
        .ok_or_else(|| MvmcError::param("need at least one individuality matrix"))?;
    let n = first.ncols();
    if n < 2 {
        return Err(MvmcError::param(format!("HSIC needs n >= 2, got {n}")));
    }
    for (k, d) in ds.iter().enumerate() {
        if d.shape() != first.shape() {
            return Err(MvmcError::shape(format!(
                "matrix {k} is {:?}, expected {:?}",
                d.shape(),
                first.shape()
            )));
        }
    }
    Ok(n)
}

/// `H = I − (1/n) 11ᵀ`.
pub fn centering_matrix(n: usize) -> Result<Mat> {
    if n < 2 {
        return Err(MvmcError::param(format!("centering matrix needs n >= 2, got {n}")));
    }
    Ok(Mat::identity(n, n) - Mat::from_element(n, n, 1.0 / n as f64))
}

fn hsic_scale(n: usize) -> f64 {
    1.0 / ((n - 1) as f64).powi(2)
}

/// `(n−1)⁻² tr(K H K' H)` with `K = Dᵀ D`, `K' = D'ᵀ D'`.
pub fn hsic_pair(d: &Mat, d_other: &Mat) -> Result<f64> {
    if d.shape() != d_other.shape() {
        return Err(MvmcError::shape(format!(
            "HSIC operands are {:?} and {:?}",
            d.shape(),
            d_other.shape()
        )));
    }
    let n = d.ncols();
    if n < 2 {
        return Err(MvmcError::param(format!("HSIC needs n >= 2, got {n}")));
    }
    let cross = center_columns_of_rows(d) * d_other.transpose();
    Ok(hsic_scale(n) * frob2(&cross))
}

/// `K̃^k = (n−1)⁻² Σ_{k'≠k} H K^{k'} H`.
pub fn aggregated_kernel(ds: &[Mat], k: usize) -> Mat {
    let n = ds[k].ncols();
    let mut acc = Mat::zeros(n, n);
    for (j, d) in ds.iter().enumerate() {
        if j != k {
            let dh = center_columns_of_rows(d);
            acc += dh.tr_mul(&dh);
        }
    }
    acc * hsic_scale(n)
}

/// `Σ_k tr(D^k K̃^k (D^k)ᵀ)` together with the aggregated kernels.
pub fn diversity_penalty(ds: &[Mat]) -> Result<(f64, Vec<Mat>)> {
    check_shapes(ds)?;
    let kernels: Vec<Mat> = (0..ds.len()).map(|k| aggregated_kernel(ds, k)).collect();
    let value = ds
        .iter()
        .zip(&kernels)
        .map(|(d, kt)| (d * kt).dot(d))
        .sum();
    Ok((value, kernels))
}

/// The penalty value alone, computed pairwise; cheaper than
/// [`diversity_penalty`] when the kernels are not needed.
pub fn diversity_value(ds: &[Mat]) -> Result<f64> {
    check_shapes(ds)?;
    let mut total = 0.0;
    for i in 0..ds.len() {
        for j in (i + 1)..ds.len() {
            total += 2.0 * hsic_pair(&ds[i], &ds[j])?;
        }
    }
    Ok(total)
}

/// `H K H` for an explicit kernel, exposed for diagnostics.
pub fn center_kernel(k: &Mat) -> Mat {
    center_rows_of_columns(&center_columns_of_rows(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centering_examples() {
        let h2 = centering_matrix(2).unwrap();
        assert_eq!(h2, Mat::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]));
        let h5 = centering_matrix(5).unwrap();
        assert!((h5 * nalgebra::DVector::from_element(5, 1.0)).norm() < 1e-15);
        let h7 = centering_matrix(7).unwrap();
        assert!((&h7 * &h7 - &h7).abs().max() < 1e-10);
        assert!(centering_matrix(1).is_err());
    }

    #[test]
    fn two_by_two_against_direct_trace() {
        let d1 = Mat::identity(2, 2);
        let d2 = Mat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        // K1 = I, K2 = [[1,1],[1,1]], H K2 H = 0, so the statistic vanishes.
        let h = centering_matrix(2).unwrap();
        let direct = (d1.tr_mul(&d1) * &h * d2.tr_mul(&d2) * &h).trace();
        assert!(direct.abs() < 1e-15);
        assert!(hsic_pair(&d1, &d2).unwrap().abs() < 1e-15);
    }

    #[test]
    fn constant_partner_gives_zero() {
        let d = Mat::from_fn(4, 4, |i, j| (i as f64 - j as f64 * 0.3).sin());
        let c = Mat::from_element(4, 4, 2.5);
        assert!(hsic_pair(&d, &c).unwrap().abs() < 1e-10);
        let (phi, _) = diversity_penalty(&[d, c]).unwrap();
        assert!(phi.abs() < 1e-10);
    }

    #[test]
    fn single_matrix_has_no_pairs() {
        let d = Mat::from_fn(3, 3, |i, j| (i + 2 * j) as f64);
        let (phi, kernels) = diversity_penalty(std::slice::from_ref(&d)).unwrap();
        assert_eq!(phi, 0.0);
        assert_eq!(kernels[0], Mat::zeros(3, 3));
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(hsic_pair(&Mat::zeros(3, 3), &Mat::zeros(3, 4)).is_err());
        assert!(diversity_penalty(&[Mat::zeros(3, 3), Mat::zeros(2, 3)]).is_err());
    }
}
