use crate::error::{Error, Result};
use crate::numerics::{frobenius_norm, spd_factorize, DenseMatrix, SpdFactor};

/// Default number of accepted blocks between full refactorizations.
pub const DEFAULT_REFACTOR_EVERY: usize = 20;

/// Ridge state of the accepted hidden features `H` against targets `Y`.
///
/// Holds `HᵀH`, the Cholesky factor of `HᵀH + λI`, the ridge weights and the
/// residual `E = Y − H W`. Blocks are appended through the Schur complement
/// of the augmented Gram matrix.
#[derive(Clone, Debug)]
pub struct GramState {
    lambda: f64,
    targets: DenseMatrix,
    features: DenseMatrix,
    gram: DenseMatrix,
    factor: SpdFactor,
    weights: DenseMatrix,
    residual: DenseMatrix,
    refactor_every: usize,
    since_refactor: usize,
}

/// Intermediate products of evaluating one candidate block against a state.
///
/// Produced by [`GramState::evaluate`]; [`GramState::apply_evaluated`]
/// reuses it so an accepted candidate is not recomputed.
#[derive(Clone, Debug)]
pub struct CandidateEval {
    pub(crate) h_s: DenseMatrix,
    /// `Hᵀ H_s`.
    pub(crate) cross: DenseMatrix,
    /// `L⁻¹ Hᵀ H_s` with `L Lᵀ = HᵀH + λI`.
    pub(crate) half_solved: DenseMatrix,
    pub(crate) schur: DenseMatrix,
    pub(crate) schur_factor: SpdFactor,
    /// `v = H_sᵀ E`, one column per output.
    pub(crate) v: DenseMatrix,
    /// `S⁻¹ v`: the weights of the new units.
    pub(crate) new_weights: DenseMatrix,
    /// `(HᵀH + λI)⁻¹ Hᵀ H_s S⁻¹ v`: the correction subtracted from the old weights.
    pub(crate) old_correction: DenseMatrix,
    /// `z = H_s S⁻¹ v`.
    pub(crate) z: DenseMatrix,
    /// `u = T S⁻¹ v`.
    pub(crate) u: DenseMatrix,
}

impl CandidateEval {
    pub fn schur(&self) -> &DenseMatrix {
        &self.schur
    }

    pub fn units(&self) -> usize {
        self.h_s.cols()
    }

    /// `v = H_sᵀ E`.
    pub fn projection(&self) -> &DenseMatrix {
        &self.v
    }

    pub fn z(&self) -> &DenseMatrix {
        &self.z
    }

    pub fn u(&self) -> &DenseMatrix {
        &self.u
    }
}

impl GramState {
    pub fn new(targets: DenseMatrix, lambda: f64) -> Result<Self> {
        Self::with_refactor_interval(targets, lambda, DEFAULT_REFACTOR_EVERY)
    }

    pub fn with_refactor_interval(targets: DenseMatrix, lambda: f64, refactor_every: usize) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        if refactor_every == 0 {
            return Err(Error::InvalidParameter("refactor interval must be >= 1".into()));
        }
        targets.ensure_finite("GramState targets")?;
        let n = targets.rows();
        let c = targets.cols();
        Ok(Self {
            lambda,
            features: DenseMatrix::zeros(n, 0),
            gram: DenseMatrix::zeros(0, 0),
            factor: SpdFactor::empty(),
            weights: DenseMatrix::zeros(0, c),
            residual: targets.clone(),
            targets,
            refactor_every,
            since_refactor: 0,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn targets(&self) -> &DenseMatrix {
        &self.targets
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn gram(&self) -> &DenseMatrix {
        &self.gram
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.weights
    }

    pub fn residual(&self) -> &DenseMatrix {
        &self.residual
    }

    pub fn residual_norm(&self) -> f64 {
        frobenius_norm(&self.residual)
    }

    pub fn hidden_units(&self) -> usize {
        self.features.cols()
    }

    pub fn samples(&self) -> usize {
        self.targets.rows()
    }

    /// `(H_sᵀH_s + λI) − H_sᵀH (HᵀH + λI)⁻¹ HᵀH_s`.
    pub fn schur_complement(&self, h_s: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_candidate(h_s)?;
        let cross = self.features.t_matmul(h_s)?;
        let half = self.factor.forward_solve(&cross)?;
        self.schur_from(h_s, &half)
    }

    fn schur_from(&self, h_s: &DenseMatrix, half_solved: &DenseMatrix) -> Result<DenseMatrix> {
        let mut s = h_s.gram();
        s.add_diagonal(self.lambda);
        if half_solved.rows() > 0 {
            s = s.sub(&half_solved.gram())?;
        }
        s.symmetrize();
        s.ensure_finite("schur_complement")?;
        Ok(s)
    }

    fn check_candidate(&self, h_s: &DenseMatrix) -> Result<()> {
        if h_s.rows() != self.samples() {
            return Err(Error::dim("candidate block rows", self.samples(), h_s.rows()));
        }
        if h_s.cols() == 0 {
            return Err(Error::InvalidParameter("candidate block has no columns".into()));
        }
        h_s.ensure_finite("candidate block")
    }

    /// Computes every product needed to judge and append `h_s`.
    pub fn evaluate(&self, h_s: &DenseMatrix) -> Result<CandidateEval> {
        self.check_candidate(h_s)?;
        let cross = self.features.t_matmul(h_s)?;
        let half_solved = self.factor.forward_solve(&cross)?;
        let schur = self.schur_from(h_s, &half_solved)?;
        let schur_factor = spd_factorize(&schur)?;
        let v = h_s.t_matmul(&self.residual)?;
        let new_weights = schur_factor.solve(&v)?;
        let z = h_s.matmul(&new_weights)?;
        let old_correction = self.factor.backward_solve(&half_solved.matmul(&new_weights)?)?;
        let u = self.features.matmul(&old_correction)?;
        Ok(CandidateEval {
            h_s: h_s.clone(),
            cross,
            half_solved,
            schur,
            schur_factor,
            v,
            new_weights,
            old_correction,
            z,
            u,
        })
    }

    /// Appends `h_s` with the exact ridge block update.
    pub fn apply_block(&mut self, h_s: &DenseMatrix) -> Result<()> {
        let eval = self.evaluate(h_s)?;
        self.apply_evaluated(eval)
    }

    /// Appends a candidate evaluated against the current state.
    ///
    /// New weights are `[W − Δ'; S⁻¹v]` and the residual becomes `E − z + u`.
    /// Every `refactor_every` blocks the Gram factor, weights and residual are
    /// rebuilt from the accumulated features.
    pub fn apply_evaluated(&mut self, eval: CandidateEval) -> Result<()> {
        if eval.cross.rows() != self.hidden_units() || eval.h_s.rows() != self.samples() {
            return Err(Error::dim(
                "apply_evaluated",
                format!("candidate evaluated at L={}", self.hidden_units()),
                format!("L={}", eval.cross.rows()),
            ));
        }
        let l = self.hidden_units();
        let s = eval.units();

        let mut gram = DenseMatrix::zeros(l + s, l + s);
        let hs_gram = eval.h_s.gram();
        for i in 0..l {
            gram.row_mut(i)[..l].copy_from_slice(self.gram.row(i));
            for j in 0..s {
                gram[(i, l + j)] = eval.cross[(i, j)];
                gram[(l + j, i)] = eval.cross[(i, j)];
            }
        }
        for i in 0..s {
            gram.row_mut(l + i)[l..].copy_from_slice(hs_gram.row(i));
        }

        let factor = self.factor.extend(&eval.half_solved, &eval.schur_factor)?;
        let top = self.weights.sub(&eval.old_correction)?;
        let weights = top.vstack(&eval.new_weights)?;
        let residual = self.residual.sub(&eval.z)?.add(&eval.u)?;
        let features = self.features.hstack(&eval.h_s)?;

        self.gram = gram;
        self.factor = factor;
        self.weights = weights;
        self.residual = residual;
        self.features = features;
        self.since_refactor += 1;
        if self.since_refactor >= self.refactor_every {
            self.refactorize()?;
        }
        Ok(())
    }

    /// Adds `delta` to every weight and updates the residual to match.
    /// Mutation hook for the verification suite.
    #[doc(hidden)]
    pub fn perturb_weights(&mut self, delta: f64) -> Result<()> {
        self.weights.as_mut_slice().iter_mut().for_each(|w| *w += delta);
        self.residual = self.targets.sub(&self.features.matmul(&self.weights)?)?;
        Ok(())
    }

    /// Rebuilds Gram, factor, weights and residual from the feature matrix.
    pub fn refactorize(&mut self) -> Result<()> {
        self.since_refactor = 0;
        if self.hidden_units() == 0 {
            return Ok(());
        }
        self.gram = self.features.gram();
        let mut reg = self.gram.clone();
        reg.add_diagonal(self.lambda);
        self.factor = spd_factorize(&reg)?;
        self.weights = self.factor.solve(&self.features.t_matmul(&self.targets)?)?;
        self.residual = self.targets.sub(&self.features.matmul(&self.weights)?)?;
        Ok(())
    }

    /// `‖E − (Y − H W)‖_F / max(‖Y‖_F, 1)`.
    pub fn residual_drift(&self) -> f64 {
        let fresh = self
            .targets
            .sub(&self.features.matmul(&self.weights).expect("consistent shapes"))
            .expect("consistent shapes");
        frobenius_norm(&self.residual.sub(&fresh).expect("consistent shapes"))
            / frobenius_norm(&self.targets).max(1.0)
    }

    /// Relative error of `L Lᵀ` against `HᵀH + λI`.
    pub fn factor_drift(&self) -> f64 {
        if self.hidden_units() == 0 {
            return 0.0;
        }
        let mut reg = self.gram.clone();
        reg.add_diagonal(self.lambda);
        self.factor.reconstruct().relative_diff(&reg, f64::MIN_POSITIVE)
    }
}
