use super::gram::{CandidateEval, GramState};
use crate::error::Result;
use crate::numerics::{eigen_extremes, DenseMatrix};

/// How per-output-column terms combine into one accept/reject decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Sum left sides, thresholds and coupling terms over columns.
    #[default]
    Frobenius,
    /// Every output column must pass on its own.
    PerColumn,
}

/// Criterion terms for one output column.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColumnTerms {
    /// `2 vᵀS⁻¹v − vᵀS⁻¹H_sᵀH_sS⁻¹v`.
    pub lhs: f64,
    /// `(1 − r)‖e‖²`.
    pub threshold: f64,
    /// `−2eᵀu + 2zᵀu − uᵀu`.
    pub coupling: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionReport {
    pub accepted: bool,
    pub lhs_aggregate: f64,
    pub threshold: f64,
    pub coupling_aggregate: f64,
    /// `‖E_before‖_F² − ‖E_after‖_F²` if the block were appended.
    pub improvement: f64,
    /// Smallest eigenvalue of the Schur complement `S`.
    pub schur_min_eigenvalue: f64,
    pub columns: Vec<ColumnTerms>,
}

fn col_dot(a: &DenseMatrix, b: &DenseMatrix, q: usize) -> f64 {
    (0..a.rows()).map(|i| a[(i, q)] * b[(i, q)]).sum()
}

/// Target-aligned residual criterion for a candidate block.
///
/// Computes `v = H_sᵀE`, the left side `2vᵀS⁻¹v − zᵀz` with `z = H_sS⁻¹v`,
/// and the coupling term from `u = T S⁻¹ v`. A block is accepted when the
/// (aggregated) left side reaches `(1 − r)‖E‖²` and the (aggregated)
/// coupling term is non-negative.
pub fn evaluate_mgsm(
    state: &GramState,
    h_s: &DenseMatrix,
    r: f64,
    aggregation: Aggregation,
) -> Result<(CriterionReport, CandidateEval)> {
    let eval = state.evaluate(h_s)?;
    let report = judge(state, &eval, r, aggregation)?;
    Ok((report, eval))
}

pub(crate) fn judge(state: &GramState, eval: &CandidateEval, r: f64, aggregation: Aggregation) -> Result<CriterionReport> {
    let e = state.residual();
    let c = e.cols();
    let mut columns = Vec::with_capacity(c);
    for q in 0..c {
        let v_sinv_v: f64 = (0..eval.v.rows())
            .map(|i| eval.v[(i, q)] * eval.new_weights[(i, q)])
            .sum();
        let zz = col_dot(&eval.z, &eval.z, q);
        let eu = col_dot(e, &eval.u, q);
        let zu = col_dot(&eval.z, &eval.u, q);
        let uu = col_dot(&eval.u, &eval.u, q);
        columns.push(ColumnTerms {
            lhs: 2.0 * v_sinv_v - zz,
            threshold: (1.0 - r) * col_dot(e, e, q),
            coupling: -2.0 * eu + 2.0 * zu - uu,
        });
    }
    let lhs_aggregate: f64 = columns.iter().map(|t| t.lhs).sum();
    let threshold: f64 = columns.iter().map(|t| t.threshold).sum();
    let coupling_aggregate: f64 = columns.iter().map(|t| t.coupling).sum();
    let accepted = match aggregation {
        Aggregation::Frobenius => lhs_aggregate >= threshold && coupling_aggregate >= 0.0,
        Aggregation::PerColumn => columns.iter().all(|t| t.lhs >= t.threshold && t.coupling >= 0.0),
    };
    let (schur_min_eigenvalue, _) = eigen_extremes(&eval.schur)?;
    Ok(CriterionReport {
        accepted,
        lhs_aggregate,
        threshold,
        coupling_aggregate,
        improvement: lhs_aggregate + coupling_aggregate,
        schur_min_eigenvalue,
        columns,
    })
}

/// Greedy single-unit criterion: `⟨e_q, h⟩² ≥ ‖h‖² (1 − r − μ) ‖e_q‖²` for every
/// output column `q`.
pub fn evaluate_scsm(state: &GramState, h: &[f64], mu: f64, r: f64) -> bool {
    let e = state.residual();
    assert_eq!(h.len(), e.rows(), "candidate length must equal sample count");
    let hh: f64 = h.iter().map(|v| v * v).sum();
    (0..e.cols()).all(|q| {
        let mut eh = 0.0;
        let mut ee = 0.0;
        for (i, &hi) in h.iter().enumerate() {
            let eq = e[(i, q)];
            eh += eq * hi;
            ee += eq * eq;
        }
        eh * eh >= hh * (1.0 - r - mu) * ee
    })
}

/// Summed terms of the greedy criterion, for logging.
pub(crate) fn scsm_terms(state: &GramState, h: &[f64], mu: f64, r: f64) -> (f64, f64) {
    let e = state.residual();
    let hh: f64 = h.iter().map(|v| v * v).sum();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for q in 0..e.cols() {
        let mut eh = 0.0;
        let mut ee = 0.0;
        for (i, &hi) in h.iter().enumerate() {
            eh += e[(i, q)] * hi;
            ee += e[(i, q)] * e[(i, q)];
        }
        lhs += eh * eh / hh;
        rhs += (1.0 - r - mu) * ee;
    }
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::frobenius_norm;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orthogonal_residual_is_rejected() {
        let y = DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap();
        let state = GramState::new(y, 0.01).unwrap();
        let h = DenseMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let (rep, _) = evaluate_mgsm(&state, &h, 0.99, Aggregation::Frobenius).unwrap();
        assert_eq!(rep.lhs_aggregate, 0.0);
        assert!(rep.threshold > 0.0);
        assert!(!rep.accepted);
    }

    #[test]
    fn scalar_case_matches_hand_evaluation() {
        let e = DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap();
        let state = GramState::new(e.clone(), 0.01).unwrap();
        let (rep, _) = evaluate_mgsm(&state, &e, 0.99, Aggregation::Frobenius).unwrap();
        let expected = 2.0 / 1.01 - 1.0 / (1.01 * 1.01);
        assert_abs_diff_eq!(rep.lhs_aggregate, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.lhs_aggregate, 0.999902, epsilon = 1e-6);
        assert_abs_diff_eq!(rep.threshold, 0.01, epsilon = 1e-15);
        assert_eq!(rep.coupling_aggregate, 0.0);
        assert!(rep.accepted);
    }

    #[test]
    fn improvement_matches_recomputed_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y = DenseMatrix::from_fn(25, 3, |i, j| if i % 3 == j { 1.0 } else { 0.0 });
        let mut state = GramState::new(y, 0.01).unwrap();
        state
            .apply_block(&DenseMatrix::from_fn(25, 4, |_, _| rng.random::<f64>()))
            .unwrap();
        let h = DenseMatrix::from_fn(25, 3, |_, _| rng.random::<f64>());
        let before = frobenius_norm(state.residual()).powi(2);
        let (rep, eval) = evaluate_mgsm(&state, &h, 0.99, Aggregation::Frobenius).unwrap();
        state.apply_evaluated(eval).unwrap();
        let after = state.residual_norm().powi(2);
        assert_abs_diff_eq!(rep.improvement, before - after, epsilon = 1e-9);
    }

    #[test]
    fn per_column_is_stricter_than_frobenius() {
        // Column 0 strongly aligned with the candidate, column 1 orthogonal.
        let y = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 0.1]]).unwrap();
        let state = GramState::new(y, 0.01).unwrap();
        let h = DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap();
        let (frob, _) = evaluate_mgsm(&state, &h, 0.9, Aggregation::Frobenius).unwrap();
        let (per, _) = evaluate_mgsm(&state, &h, 0.9, Aggregation::PerColumn).unwrap();
        assert!(frob.accepted);
        assert!(!per.accepted);
    }

    #[test]
    fn scsm_examples() {
        let e = DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap();
        let state = GramState::new(e, 0.01).unwrap();
        assert!(evaluate_scsm(&state, &[2.0, 0.0], 0.005, 0.99));
        assert!(!evaluate_scsm(&state, &[0.0, 1.0], 0.005, 0.99));
        // <e,h>^2 = 0.09 against ||h||^2 * delta = 1.09 * 0.005
        assert!(evaluate_scsm(&state, &[0.3, 1.0], 0.005, 0.99));
        let (lhs, rhs) = scsm_terms(&state, &[0.3, 1.0], 0.005, 0.99);
        assert_abs_diff_eq!(lhs * 1.09, 0.09, epsilon = 1e-15);
        assert_abs_diff_eq!(rhs, 0.005, epsilon = 1e-15);
    }
}
