//! Dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

pub type Mat = DMatrix<f64>;

/// Ridge added to Gram matrices that fail a Cholesky factorization.
pub const EPS_REG: f64 = 1e-10;

/// Elementwise positive part `(|A| + A) / 2`.
pub fn pos_part(a: &Mat) -> Mat {
    a.map(|x| if x > 0.0 { x } else { 0.0 })
}

/// Elementwise negative part `(|A| - A) / 2`.
pub fn neg_part(a: &Mat) -> Mat {
    a.map(|x| if x < 0.0 { -x } else { 0.0 })
}

pub fn frob2(a: &Mat) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub fn all_finite(a: &Mat) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// `(A + Aᵀ) / 2`
pub fn symmetrize(a: &Mat) -> Mat {
    (a + a.transpose()) * 0.5
}

/// `A H` where `H = I - 11ᵀ/n`: subtracts each row's mean.
pub fn center_columns_of_rows(a: &Mat) -> Mat {
    let mut out = a.clone();
    let n = a.ncols() as f64;
    for mut row in out.row_iter_mut() {
        let mean = row.sum() / n;
        row.add_scalar_mut(-mean);
    }
    out
}

/// `H A` where `H = I - 11ᵀ/n`: subtracts each column's mean.
pub fn center_rows_of_columns(a: &Mat) -> Mat {
    let mut out = a.clone();
    let n = a.nrows() as f64;
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
    }
    out
}

/// Eigendecomposition of a symmetric matrix, `A = Q diag(values) Qᵀ`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: DVector<f64>,
    pub vectors: Mat,
}

impl SymEigen {
    pub fn new(a: &Mat) -> Self {
        let eig = symmetrize(a).symmetric_eigen();
        SymEigen {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.min()
    }
}

/// Solves `A X + X B = C` given spectral factors of symmetric `A` and `B`.
///
/// `alpha` and `beta` are the eigenvalues to use for `A` and `B` (callers
/// fold affine shifts into them), paired with the eigenvector bases
/// `qa` and `qb`. Every `alpha_i + beta_j` must be positive.
pub fn solve_sylvester(qa: &Mat, alpha: &[f64], qb: &Mat, beta: &[f64], c: &Mat) -> Mat {
    let mut core = qa.tr_mul(c) * qb;
    for j in 0..core.ncols() {
        for i in 0..core.nrows() {
            core[(i, j)] /= alpha[i] + beta[j];
        }
    }
    qa * core * qb.transpose()
}

/// Returns `M G⁻¹` for a symmetric positive semidefinite Gram matrix `G`,
/// falling back to a trace-scaled ridge when `G` is singular.
pub fn right_solve_gram(m: &Mat, gram: &Mat) -> Mat {
    let g = symmetrize(gram);
    let chol = g.clone().cholesky().or_else(|| {
        let scale = (g.trace() / g.nrows().max(1) as f64).max(1.0);
        let ridged = &g + Mat::identity(g.nrows(), g.ncols()) * (EPS_REG * scale);
        ridged.cholesky()
    });
    match chol {
        // X G = M  <=>  G Xᵀ = Mᵀ
        Some(c) => c.solve(&m.transpose()).transpose(),
        None => {
            let pinv = g
                .pseudo_inverse(EPS_REG)
                .unwrap_or_else(|_| Mat::zeros(gram.nrows(), gram.ncols()));
            m * pinv
        }
    }
}

/// Returns `G⁻¹ M` for a symmetric positive semidefinite Gram matrix `G`.
pub fn left_solve_gram(gram: &Mat, m: &Mat) -> Mat {
    right_solve_gram(&m.transpose(), gram).transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sylvester_solution_satisfies_equation() {
        let a = Mat::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let b = Mat::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]);
        let c = Mat::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let ea = SymEigen::new(&a);
        let eb = SymEigen::new(&b);
        let x = solve_sylvester(
            &ea.vectors,
            ea.values.as_slice(),
            &eb.vectors,
            eb.values.as_slice(),
            &c,
        );
        let resid = &a * &x + &x * &b - &c;
        assert!(frob2(&resid) < 1e-20);
    }

    #[test]
    fn gram_solve_handles_singular_gram() {
        let r = Mat::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let g = r.tr_mul(&r);
        let m = Mat::from_row_slice(1, 2, &[3.0, 0.0]);
        let x = right_solve_gram(&m, &g);
        assert!(all_finite(&x));
        assert!((x[(0, 0)] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn centering_helpers_match_explicit_projector() {
        let a = Mat::from_row_slice(2, 3, &[1.0, 2.0, 6.0, -1.0, 0.0, 4.0]);
        let h = Mat::identity(3, 3) - Mat::from_element(3, 3, 1.0 / 3.0);
        assert!(frob2(&(center_columns_of_rows(&a) - &a * &h)) < 1e-24);
        let b = a.transpose();
        assert!(frob2(&(center_rows_of_columns(&b) - &h * &b)) < 1e-24);
    }
}
