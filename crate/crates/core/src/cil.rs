//! Exemplar-free analytic classifier over frozen RPL features.
//!
//! The statistic `P_t = λI + Σ_k H_kᵀH_k` and the ridge weights are updated
//! per task with recursive least squares; the result equals a joint ridge
//! fit on every task seen so far without storing any past sample.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::numerics::{condition_number, eigen_extremes, frobenius_norm, spd_factorize, DenseMatrix};
use crate::rpl::{project, RplModel};

pub type ClassId = u32;

#[derive(Clone, Debug, PartialEq)]
pub struct TaskBatch {
    pub features: DenseMatrix,
    pub labels: Vec<ClassId>,
    pub task_index: usize,
}

impl TaskBatch {
    pub fn new(features: DenseMatrix, labels: Vec<ClassId>, task_index: usize) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::InvalidParameter("task batch needs at least one sample".into()));
        }
        if labels.len() != features.rows() {
            return Err(Error::dim("TaskBatch labels", features.rows(), labels.len()));
        }
        Ok(Self {
            features,
            labels,
            task_index,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Distinct class ids in first-appearance order.
    pub fn classes(&self) -> Vec<ClassId> {
        let mut seen = HashSet::new();
        self.labels.iter().copied().filter(|c| seen.insert(*c)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SufficientStatistic {
    p: DenseMatrix,
    weights: DenseMatrix,
    classes_seen: Vec<ClassId>,
    stage: usize,
    lambda: f64,
}

/// `P = HᵀH + λI` around weights already fitted on `H` (stage 1).
pub fn init_stat(h_init: &DenseMatrix, w_beta: &DenseMatrix, classes: &[ClassId], lambda: f64) -> Result<SufficientStatistic> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    if w_beta.rows() != h_init.cols() {
        return Err(Error::dim("init_stat (weight rows)", h_init.cols(), w_beta.rows()));
    }
    if w_beta.cols() != classes.len() {
        return Err(Error::dim("init_stat (weight cols)", classes.len(), w_beta.cols()));
    }
    check_distinct(classes, &[])?;
    let mut p = h_init.gram();
    p.add_diagonal(lambda);
    Ok(SufficientStatistic {
        p,
        weights: w_beta.clone(),
        classes_seen: classes.to_vec(),
        stage: 1,
        lambda,
    })
}

fn check_distinct(new: &[ClassId], existing: &[ClassId]) -> Result<()> {
    let mut seen: HashSet<ClassId> = existing.iter().copied().collect();
    for &c in new {
        if !seen.insert(c) {
            return Err(Error::DuplicateClass(c));
        }
    }
    Ok(())
}

impl SufficientStatistic {
    pub fn p(&self) -> &DenseMatrix {
        &self.p
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.weights
    }

    pub fn classes_seen(&self) -> &[ClassId] {
        &self.classes_seen
    }

    pub fn stage(&self) -> usize {
        self.stage
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn hidden_units(&self) -> usize {
        self.p.rows()
    }

    /// Appends zero weight columns for classes not seen before.
    pub fn expand_classes(&mut self, new_classes: &[ClassId]) -> Result<()> {
        check_distinct(new_classes, &self.classes_seen)?;
        if new_classes.is_empty() {
            return Ok(());
        }
        let l = self.weights.rows();
        let old_c = self.weights.cols();
        let mut widened = DenseMatrix::zeros(l, old_c + new_classes.len());
        for i in 0..l {
            widened.row_mut(i)[..old_c].copy_from_slice(self.weights.row(i));
        }
        self.weights = widened;
        self.classes_seen.extend_from_slice(new_classes);
        Ok(())
    }

    /// One-hot targets over `classes_seen`; previously seen classes get zero columns.
    pub fn one_hot(&self, labels: &[ClassId]) -> Result<DenseMatrix> {
        one_hot(labels, &self.classes_seen)
    }

    /// `P_t = P_{t−1} + H_tᵀH_t` then
    /// `W_t = W_{t−1} + P_t⁻¹ H_tᵀ (Y_t − H_t W_{t−1})`.
    pub fn rls_update(&mut self, h_t: &DenseMatrix, y_t: &DenseMatrix) -> Result<()> {
        if h_t.rows() == 0 {
            return Err(Error::InvalidParameter("rls_update needs at least one sample".into()));
        }
        if h_t.cols() != self.hidden_units() {
            return Err(Error::dim("rls_update (H_t cols)", self.hidden_units(), h_t.cols()));
        }
        if y_t.rows() != h_t.rows() || y_t.cols() != self.classes_seen.len() {
            return Err(Error::dim(
                "rls_update (Y_t)",
                format!("({}, {})", h_t.rows(), self.classes_seen.len()),
                format!("{:?}", y_t.shape()),
            ));
        }
        h_t.ensure_finite("rls_update (H_t)")?;
        let p = self.p.add(&h_t.gram())?;
        let residual = y_t.sub(&h_t.matmul(&self.weights)?)?;
        let correction = spd_factorize(&p)?.solve(&h_t.t_matmul(&residual)?)?;
        self.weights = self.weights.add(&correction)?;
        self.p = p;
        self.stage += 1;
        Ok(())
    }

    /// Adds `delta` to every weight. Mutation hook for the verification suite.
    #[doc(hidden)]
    pub fn perturb_weights(&mut self, delta: f64) {
        self.weights.as_mut_slice().iter_mut().for_each(|w| *w += delta);
    }

    /// Runs `expand_classes` and `rls_update` for one task.
    pub fn learn_task(&mut self, model: &RplModel, batch: &TaskBatch) -> Result<()> {
        let fresh: Vec<ClassId> = batch
            .classes()
            .into_iter()
            .filter(|c| !self.classes_seen.contains(c))
            .collect();
        self.expand_classes(&fresh)?;
        let h = project(&batch.features, model)?;
        let y = self.one_hot(&batch.labels)?;
        self.rls_update(&h, &y)
    }

    /// Class scores `H W`, one row per sample.
    pub fn scores(&self, h: &DenseMatrix) -> Result<DenseMatrix> {
        h.matmul(&self.weights)
    }

    pub fn snapshot(&self) -> Result<StageSnapshot> {
        let (lambda_min, lambda_max) = if self.hidden_units() == 0 {
            (f64::NAN, f64::NAN)
        } else {
            eigen_extremes(&self.p)?
        };
        let condition = if self.hidden_units() == 0 {
            f64::NAN
        } else {
            condition_number(&self.p)?
        };
        Ok(StageSnapshot {
            stage: self.stage,
            p_frobenius: frobenius_norm(&self.p),
            lambda_min,
            lambda_max,
            condition_number: condition,
            task_accuracies: Vec::new(),
        })
    }
}

/// Spectral summary of `P_t` after a stage, plus per-task test accuracy.
#[derive(Clone, Debug, PartialEq)]
pub struct StageSnapshot {
    pub stage: usize,
    pub p_frobenius: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub condition_number: f64,
    /// `(task index, test samples, accuracy)` for every task seen so far.
    pub task_accuracies: Vec<(usize, usize, f64)>,
}

pub fn one_hot(labels: &[ClassId], classes: &[ClassId]) -> Result<DenseMatrix> {
    let mut y = DenseMatrix::zeros(labels.len(), classes.len());
    for (i, l) in labels.iter().enumerate() {
        let j = classes
            .iter()
            .position(|c| c == l)
            .ok_or_else(|| Error::InvalidParameter(format!("label {l} is not a registered class")))?;
        y[(i, j)] = 1.0;
    }
    Ok(y)
}

/// Arg-max class per row of `scores`; ties go to the lowest class id.
pub fn argmax_classes(scores: &DenseMatrix, classes: &[ClassId]) -> Vec<ClassId> {
    (0..scores.rows())
        .map(|i| {
            let row = scores.row(i);
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] || (row[j] == row[best] && classes[j] < classes[best]) {
                    best = j;
                }
            }
            classes[best]
        })
        .collect()
}

pub fn predict(stat: &SufficientStatistic, model: &RplModel, z: &DenseMatrix) -> Result<Vec<ClassId>> {
    if model.total_units() != stat.hidden_units() {
        return Err(Error::dim("predict (model units)", stat.hidden_units(), model.total_units()));
    }
    if stat.classes_seen.is_empty() {
        return Err(Error::InvalidParameter("predict needs at least one class".into()));
    }
    let h = project(z, model)?;
    Ok(argmax_classes(&stat.scores(&h)?, &stat.classes_seen))
}

pub fn accuracy(predicted: &[ClassId], truth: &[ClassId]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ridge_solve;
    use crate::rpl::{Activation, BasisBlock};

    #[test]
    fn init_on_identity() {
        let h = DenseMatrix::identity(2);
        let stat = init_stat(&h, &DenseMatrix::zeros(2, 1), &[0], 1.0).unwrap();
        assert_eq!(stat.p(), &DenseMatrix::identity(2).scale(2.0));
        assert_eq!(stat.stage(), 1);
    }

    #[test]
    fn init_with_empty_model() {
        let stat = init_stat(&DenseMatrix::zeros(4, 0), &DenseMatrix::zeros(0, 2), &[3, 5], 0.1).unwrap();
        assert_eq!(stat.p().shape(), (0, 0));
        assert_eq!(stat.weights().shape(), (0, 2));
    }

    #[test]
    fn init_random_is_floored_by_lambda() {
        let h = DenseMatrix::from_fn(7, 4, |i, j| ((i * 3 + j) as f64).sin());
        let stat = init_stat(&h, &DenseMatrix::zeros(4, 1), &[0], 0.3).unwrap();
        assert_eq!(stat.p().asymmetry(), 0.0);
        assert!(eigen_extremes(stat.p()).unwrap().0 >= 0.3 - 1e-9);
    }

    #[test]
    fn expand_classes_cases() {
        let mut stat = init_stat(&DenseMatrix::identity(2), &DenseMatrix::identity(2).hstack(&DenseMatrix::zeros(2, 1)).unwrap(), &[0, 1, 2], 1.0).unwrap();
        let before = stat.clone();
        stat.expand_classes(&[]).unwrap();
        assert_eq!(stat, before);
        stat.expand_classes(&[7, 8]).unwrap();
        assert_eq!(stat.weights().shape(), (2, 5));
        assert!(stat.weights().column(3).iter().all(|&v| v == 0.0));
        assert!(stat.weights().column(4).iter().all(|&v| v == 0.0));
        assert_eq!(stat.p(), before.p());
        assert!(matches!(stat.expand_classes(&[1]), Err(Error::DuplicateClass(1))));
        assert!(matches!(stat.expand_classes(&[9, 9]), Err(Error::DuplicateClass(9))));
    }

    #[test]
    fn two_task_identity_toy_matches_joint_ridge() {
        let h = DenseMatrix::identity(2);
        let y1 = DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap();
        let w1 = ridge_solve(&h, &y1, 1.0).unwrap();
        let mut stat = init_stat(&h, &w1, &[0], 1.0).unwrap();
        stat.expand_classes(&[1]).unwrap();
        let y2 = stat.one_hot(&[1, 1]).unwrap();
        stat.rls_update(&h, &y2).unwrap();

        let stacked_h = h.vstack(&h).unwrap();
        let stacked_y = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 0.0], [0.0, 1.0], [0.0, 1.0]]).unwrap();
        let joint = ridge_solve(&stacked_h, &stacked_y, 1.0).unwrap();
        assert!(stat.weights().max_abs_diff(&joint) < 1e-15);
        // Old class column moved even though task 2 never labels it.
        assert_ne!(stat.weights().column(0), w1.column(0));
        assert_eq!(stat.stage(), 2);
    }

    #[test]
    fn rls_rejects_empty_and_mismatched() {
        let mut stat = init_stat(&DenseMatrix::identity(2), &DenseMatrix::zeros(2, 1), &[0], 1.0).unwrap();
        assert!(stat.rls_update(&DenseMatrix::zeros(0, 2), &DenseMatrix::zeros(0, 1)).is_err());
        assert!(stat.rls_update(&DenseMatrix::zeros(1, 3), &DenseMatrix::zeros(1, 1)).is_err());
        assert!(stat.rls_update(&DenseMatrix::zeros(1, 2), &DenseMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn prediction_tie_breaks_to_lowest_id() {
        let scores = DenseMatrix::from_rows(&[[1.0, 1.0, 0.0], [0.0, 2.0, 2.0]]).unwrap();
        assert_eq!(argmax_classes(&scores, &[5, 3, 4]), vec![3, 3]);
    }

    #[test]
    fn dominant_column_predicts_first_class() {
        let block = BasisBlock::new(DenseMatrix::from_rows(&[[1.0, -1.0]]).unwrap(), vec![0.0, 0.0], 1.0).unwrap();
        let model = RplModel::from_blocks(1, Activation::Sigmoid, vec![block]).unwrap();
        let w = DenseMatrix::from_rows(&[[10.0, 0.0], [10.0, 0.0]]).unwrap();
        let stat = init_stat(&DenseMatrix::zeros(1, 2), &w, &[4, 2], 0.1).unwrap();
        let z = DenseMatrix::from_fn(5, 1, |i, _| i as f64 - 2.0);
        assert_eq!(predict(&stat, &model, &z).unwrap(), vec![4; 5]);
    }
}
