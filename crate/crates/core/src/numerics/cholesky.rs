use super::DenseMatrix;
use crate::error::{Error, Result};

/// Inputs whose relative asymmetry exceeds this are rejected outright;
/// anything below it is averaged away before factorization.
const MAX_ASYMMETRY: f64 = 1e-6;

/// Lower-triangular Cholesky factor `L` with `A = L L^T`.
#[derive(Clone, Debug)]
pub struct SpdFactor {
    lower: DenseMatrix,
}

/// Factors a symmetric positive-definite matrix.
///
/// The input is symmetrized first. Fails with [`Error::NotPositiveDefinite`]
/// on the first non-positive pivot.
pub fn spd_factorize(a: &DenseMatrix) -> Result<SpdFactor> {
    if a.rows() != a.cols() {
        return Err(Error::dim("spd_factorize", "square matrix", format!("{:?}", a.shape())));
    }
    a.ensure_finite("spd_factorize")?;
    let asym = a.asymmetry();
    if asym > MAX_ASYMMETRY {
        return Err(Error::InvalidParameter(format!(
            "spd_factorize: matrix is not symmetric (relative asymmetry {asym:e})"
        )));
    }
    let mut sym = a.clone();
    sym.symmetrize();
    cholesky_in_place(sym).map(|lower| SpdFactor { lower })
}

fn cholesky_in_place(mut m: DenseMatrix) -> Result<DenseMatrix> {
    let n = m.rows();
    for j in 0..n {
        let mut d = m[(j, j)];
        {
            let rj = &m.as_slice()[j * n..j * n + j];
            d -= rj.iter().map(|v| v * v).sum::<f64>();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        m[(j, j)] = ljj;
        for i in (j + 1)..n {
            let data = m.as_slice();
            let ri = &data[i * n..i * n + j];
            let rj = &data[j * n..j * n + j];
            let dot: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
            let v = (m[(i, j)] - dot) / ljj;
            m[(i, j)] = v;
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            m[(i, j)] = 0.0;
        }
    }
    Ok(m)
}

impl SpdFactor {
    pub fn empty() -> Self {
        Self {
            lower: DenseMatrix::zeros(0, 0),
        }
    }

    pub fn dimension(&self) -> usize {
        self.lower.rows()
    }

    pub fn lower(&self) -> &DenseMatrix {
        &self.lower
    }

    /// `L L^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.lower.transpose().gram()
    }

    /// Solves `L X = B` in place (forward substitution, column by column of `B`).
    pub fn forward_solve(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rhs(b, "forward_solve")?;
        let n = self.dimension();
        let k = b.cols();
        let l = &self.lower;
        let mut x = b.clone();
        for i in 0..n {
            for p in 0..i {
                let lip = l[(i, p)];
                if lip == 0.0 {
                    continue;
                }
                for c in 0..k {
                    let v = x[(p, c)];
                    x[(i, c)] -= lip * v;
                }
            }
            let lii = l[(i, i)];
            for v in x.row_mut(i) {
                *v /= lii;
            }
        }
        Ok(x)
    }

    /// Solves `L^T X = B` (backward substitution).
    pub fn backward_solve(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rhs(b, "backward_solve")?;
        let n = self.dimension();
        let k = b.cols();
        let l = &self.lower;
        let mut x = b.clone();
        for i in (0..n).rev() {
            for p in (i + 1)..n {
                let lpi = l[(p, i)];
                if lpi == 0.0 {
                    continue;
                }
                for c in 0..k {
                    let v = x[(p, c)];
                    x[(i, c)] -= lpi * v;
                }
            }
            let lii = l[(i, i)];
            for v in x.row_mut(i) {
                *v /= lii;
            }
        }
        Ok(x)
    }

    /// Solves `A X = B`.
    pub fn solve(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        let y = self.forward_solve(b)?;
        self.backward_solve(&y)
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        let m = DenseMatrix::from_vec(b.len(), 1, b.to_vec())?;
        Ok(self.solve(&m)?.into_vec())
    }

    /// Dense `A^{-1}`.
    pub fn inverse(&self) -> DenseMatrix {
        self.solve(&DenseMatrix::identity(self.dimension()))
            .expect("identity has matching rows")
    }

    /// Extends the factor of `A` to the factor of `[[A, B], [B^T, D]]`.
    ///
    /// `half_solved` must be `L^{-1} B` and `schur` the Cholesky factor of
    /// `D - B^T A^{-1} B`. The new factor is `[[L, 0], [half_solved^T, L_S]]`.
    pub fn extend(&self, half_solved: &DenseMatrix, schur: &SpdFactor) -> Result<SpdFactor> {
        let n = self.dimension();
        let s = schur.dimension();
        if half_solved.shape() != (n, s) {
            return Err(Error::dim(
                "SpdFactor::extend",
                format!("({n}, {s})"),
                format!("{:?}", half_solved.shape()),
            ));
        }
        let mut lower = DenseMatrix::zeros(n + s, n + s);
        for i in 0..n {
            for j in 0..=i {
                lower[(i, j)] = self.lower[(i, j)];
            }
        }
        for i in 0..s {
            for j in 0..n {
                lower[(n + i, j)] = half_solved[(j, i)];
            }
            for j in 0..=i {
                lower[(n + i, n + j)] = schur.lower[(i, j)];
            }
        }
        Ok(SpdFactor { lower })
    }

    fn check_rhs(&self, b: &DenseMatrix, context: &'static str) -> Result<()> {
        if b.rows() != self.dimension() {
            return Err(Error::dim(context, self.dimension(), b.rows()));
        }
        Ok(())
    }
}
