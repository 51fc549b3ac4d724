//! Dense linear-algebra kernel: SPD factorization, ridge regression,
//! spectral extremes and the norms used by the diagnostics.

mod cholesky;
mod eigen;
mod matrix;

pub use cholesky::{spd_factorize, SpdFactor};
pub use eigen::{condition_number, eigen_extremes, DENSE_EIGEN_LIMIT};
pub use matrix::DenseMatrix;

use crate::error::{Error, Result};

/// Norm floor below which a column counts as degenerate.
pub const DEGENERATE_COLUMN_NORM: f64 = 1e-12;

pub fn frobenius_norm(a: &DenseMatrix) -> f64 {
    a.frobenius_norm_sq().sqrt()
}

/// `argmin_W ‖HW − Y‖_F² + λ‖W‖_F²` via a Cholesky solve of
/// `(HᵀH + λI) W = HᵀY`.
pub fn ridge_solve(h: &DenseMatrix, y: &DenseMatrix, lambda: f64) -> Result<DenseMatrix> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("ridge lambda must be positive, got {lambda}")));
    }
    if h.rows() != y.rows() {
        return Err(Error::dim("ridge_solve", format!("Y rows = {}", h.rows()), y.rows()));
    }
    h.ensure_finite("ridge_solve (H)")?;
    y.ensure_finite("ridge_solve (Y)")?;
    let mut gram = h.gram();
    gram.add_diagonal(lambda);
    let rhs = h.t_matmul(y)?;
    spd_factorize(&gram)?.solve(&rhs)
}

/// Pairwise cosine similarities between the columns of `b`.
pub fn cosine_similarity_matrix(b: &DenseMatrix) -> Result<DenseMatrix> {
    b.ensure_finite("cosine_similarity_matrix")?;
    let norms: Vec<f64> = b.column_norms_sq().into_iter().map(f64::sqrt).collect();
    if let Some(j) = norms.iter().position(|&n| !(n > DEGENERATE_COLUMN_NORM)) {
        return Err(Error::DegenerateColumn(j));
    }
    let g = b.gram();
    let l = b.cols();
    Ok(DenseMatrix::from_fn(l, l, |i, j| {
        if i == j {
            1.0
        } else {
            (g[(i, j)] / (norms[i] * norms[j])).clamp(-1.0, 1.0)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn ridge_identity() {
        let w = ridge_solve(&DenseMatrix::identity(2), &DenseMatrix::identity(2), 1.0).unwrap();
        assert!(w.max_abs_diff(&DenseMatrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn ridge_scalar_column() {
        let h = DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap();
        let w = ridge_solve(&h, &h, 0.01).unwrap();
        assert_abs_diff_eq!(w[(0, 0)], 1.0 / 1.01, epsilon = 1e-15);
        assert_abs_diff_eq!(w[(0, 0)], 0.990099, epsilon = 1e-6);
    }

    #[test]
    fn ridge_zero_target() {
        let h = DenseMatrix::from_rows(&[[1.0, 2.0], [0.3, -1.0], [4.0, 0.5]]).unwrap();
        let w = ridge_solve(&h, &DenseMatrix::zeros(3, 2), 0.1).unwrap();
        assert!(w.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ridge_errors() {
        let h = DenseMatrix::identity(2);
        assert!(matches!(
            ridge_solve(&h, &DenseMatrix::zeros(3, 1), 1.0),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(ridge_solve(&h, &h, 0.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn frobenius_of_identity() {
        assert_abs_diff_eq!(frobenius_norm(&DenseMatrix::identity(9)), 3.0, epsilon = 1e-15);
        assert_eq!(condition_number(&DenseMatrix::identity(5)).unwrap(), 1.0);
    }

    #[test]
    fn cosine_examples() {
        let orth = DenseMatrix::from_rows(&[[0.6, -0.8], [0.8, 0.6], [0.0, 0.0]]).unwrap();
        let c = cosine_similarity_matrix(&orth).unwrap();
        assert!(c.max_abs_diff(&DenseMatrix::identity(2)) < 1e-15);

        let dup = DenseMatrix::from_rows(&[[1.0, 1.0], [0.0, 0.0]]).unwrap();
        let c = cosine_similarity_matrix(&dup).unwrap();
        assert!(c.as_slice().iter().all(|&v| v == 1.0));

        let zero_col = DenseMatrix::from_rows(&[[1.0, 0.0], [2.0, 0.0]]).unwrap();
        assert!(matches!(cosine_similarity_matrix(&zero_col), Err(Error::DegenerateColumn(1))));
    }

    fn matrix_strategy(max_rows: usize, max_cols: usize) -> impl Strategy<Value = DenseMatrix> {
        (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
            proptest::collection::vec(-3.0f64..3.0, r * c)
                .prop_map(move |data| DenseMatrix::from_vec(r, c, data).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ridge_satisfies_normal_equations(
            (h, y) in (1usize..=50, 1usize..=50, 1usize..=50).prop_flat_map(|(n, l, c)| (
                proptest::collection::vec(-2.0f64..2.0, n * l)
                    .prop_map(move |d| DenseMatrix::from_vec(n, l, d).unwrap()),
                proptest::collection::vec(-2.0f64..2.0, n * c)
                    .prop_map(move |d| DenseMatrix::from_vec(n, c, d).unwrap()),
            )),
            lambda in prop::sample::select(vec![0.01, 0.1, 1.0]),
        ) {
            let w = ridge_solve(&h, &y, lambda).unwrap();
            let mut g = h.gram();
            g.add_diagonal(lambda);
            let rhs = h.t_matmul(&y).unwrap();
            let resid = frobenius_norm(&g.matmul(&w).unwrap().sub(&rhs).unwrap());
            prop_assert!(resid <= 1e-8 * (1.0 + frobenius_norm(&rhs)), "residual {resid}");
        }

        #[test]
        fn spd_solve_reproduces_rhs(b in matrix_strategy(30, 30), diag in 0.5f64..5.0) {
            // B^T B + diag*I keeps the condition number modest.
            let mut a = b.gram();
            a.add_diagonal(diag);
            let n = a.rows();
            prop_assume!(condition_number(&a).unwrap() <= 1e6);
            let x_true = DenseMatrix::from_fn(n, 1, |i, _| (i as f64 * 0.7).sin() + 0.1);
            let rhs = a.matmul(&x_true).unwrap();
            let x = spd_factorize(&a).unwrap().solve(&rhs).unwrap();
            prop_assert!(x.relative_diff(&x_true, 1e-300) <= 1e-9);
            let recon = spd_factorize(&a).unwrap().reconstruct();
            prop_assert!(recon.relative_diff(&a, 1e-300) <= 1e-10);
        }

        #[test]
        fn diagonal_extremes_are_exact(v in proptest::collection::vec(1e-6f64..1e6, 1..40)) {
            let (lo, hi) = eigen_extremes(&DenseMatrix::from_diagonal(&v)).unwrap();
            prop_assert_eq!(lo, v.iter().copied().fold(f64::INFINITY, f64::min));
            prop_assert_eq!(hi, v.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }

        #[test]
        fn cosine_matrix_is_symmetric_unit_diagonal(b in matrix_strategy(20, 12)) {
            prop_assume!(b.column_norms_sq().iter().all(|&n| n.sqrt() > DEGENERATE_COLUMN_NORM));
            let c = cosine_similarity_matrix(&b).unwrap();
            for i in 0..c.rows() {
                prop_assert_eq!(c[(i, i)], 1.0);
                for j in 0..c.cols() {
                    prop_assert_eq!(c[(i, j)], c[(j, i)]);
                    prop_assert!((-1.0..=1.0).contains(&c[(i, j)]));
                }
            }
        }
    }
}
