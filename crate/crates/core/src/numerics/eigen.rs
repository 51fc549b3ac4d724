use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{spd_factorize, DenseMatrix};
use crate::error::{Error, Result};

/// Above this dimension the dense tridiagonal eigensolver is replaced by
/// power/inverse iteration.
pub const DENSE_EIGEN_LIMIT: usize = 512;

const ITER_SEED: u64 = 0x5eed_e16e;
const MAX_ITERS: usize = 20_000;
const REL_TOL: f64 = 1e-14;

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eigen_extremes(a: &DenseMatrix) -> Result<(f64, f64)> {
    let n = a.rows();
    if n == 0 || a.cols() != n {
        return Err(Error::dim("eigen_extremes", "non-empty square matrix", format!("{:?}", a.shape())));
    }
    a.ensure_finite("eigen_extremes")?;
    let mut sym = a.clone();
    sym.symmetrize();

    if is_diagonal(&sym) {
        let d = sym.diagonal();
        let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Ok((lo, hi));
    }
    if n <= DENSE_EIGEN_LIMIT {
        Ok(dense_extremes(&sym))
    } else {
        iterative_extremes(&sym)
    }
}

fn is_diagonal(a: &DenseMatrix) -> bool {
    let n = a.rows();
    (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == 0.0))
}

fn dense_extremes(a: &DenseMatrix) -> (f64, f64) {
    let n = a.rows();
    let m = DMatrix::from_row_slice(n, n, a.as_slice());
    let eig = m.symmetric_eigenvalues();
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn matvec(a: &DenseMatrix, x: &[f64]) -> Vec<f64> {
    (0..a.rows())
        .map(|i| a.row(i).iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

fn normalize(x: &mut [f64]) -> f64 {
    let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nrm > 0.0 {
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    nrm
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Power iteration on `op`, returning the Rayleigh quotient of the dominant
/// eigenvector of `op`, evaluated against `a`.
fn power_iterate(a: &DenseMatrix, mut op: impl FnMut(&[f64]) -> Result<Vec<f64>>, seed: u64) -> Result<f64> {
    let n = a.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    normalize(&mut x);
    let mut rq = dot(&x, &matvec(a, &x));
    for _ in 0..MAX_ITERS {
        let mut y = op(&x)?;
        if normalize(&mut y) == 0.0 {
            break;
        }
        let next = dot(&y, &matvec(a, &y));
        let done = (next - rq).abs() <= REL_TOL * next.abs().max(f64::MIN_POSITIVE);
        rq = next;
        x = y;
        if done {
            break;
        }
    }
    Ok(rq)
}

fn iterative_extremes(a: &DenseMatrix) -> Result<(f64, f64)> {
    let n = a.rows();
    // Shift by the Gershgorin bound so the spectrum is positive and the
    // dominant eigenvector of the shifted operator belongs to lambda_max.
    let radius = (0..n)
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let hi = power_iterate(
        a,
        |x| {
            let mut y = matvec(a, x);
            y.iter_mut().zip(x).for_each(|(v, xi)| *v += radius * xi);
            Ok(y)
        },
        ITER_SEED,
    )?;
    let lo = match spd_factorize(a) {
        Ok(factor) => power_iterate(a, |x| factor.solve_vec(x), ITER_SEED ^ 1)?,
        Err(_) => power_iterate(
            a,
            |x| {
                let ax = matvec(a, x);
                Ok(x.iter().zip(&ax).map(|(xi, v)| hi * xi - v).collect())
            },
            ITER_SEED ^ 1,
        )?,
    };
    Ok((lo.min(hi), hi.max(lo)))
}

/// `lambda_max / lambda_min`; infinite when the matrix is singular or indefinite.
pub fn condition_number(a: &DenseMatrix) -> Result<f64> {
    let (lo, hi) = eigen_extremes(a)?;
    if lo <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((hi / lo).max(1.0))
}
