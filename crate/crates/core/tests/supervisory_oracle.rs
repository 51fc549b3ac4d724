use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use rand::Rng;
use rplcil::numerics::DenseMatrix;
use rplcil::rpl::seeded_rng;
use rplcil::supervisory::{evaluate_mgsm, evaluate_scsm, Aggregation, GramState};

fn na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn random(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = seeded_rng(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() * 2.0 - 1.0)
}

fn state_with(h: &DenseMatrix, y: &DenseMatrix, lambda: f64) -> GramState {
    let mut state = GramState::new(y.clone(), lambda).unwrap();
    if h.cols() > 0 {
        state.apply_block(h).unwrap();
    }
    state
}

#[test]
fn schur_complement_is_lower_right_block_of_dense_inverse() {
    let lambda = 0.1;
    let h_prev = random(20, 5, 1);
    let h_s = random(20, 3, 2);
    let y = random(20, 2, 3);
    let state = state_with(&h_prev, &y, lambda);
    let s = state.schur_complement(&h_s).unwrap();

    let full = na(&h_prev.hstack(&h_s).unwrap());
    let gram = full.transpose() * &full + DMatrix::identity(8, 8) * lambda;
    let inv = gram.try_inverse().unwrap();
    let lower_right = inv.view((5, 5), (3, 3)).into_owned();
    let s_inv = na(&s).try_inverse().unwrap();
    assert!((s_inv - lower_right).norm() < 1e-10);
}

#[test]
fn schur_of_empty_state_is_regularized_gram() {
    let y = DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap();
    let state = GramState::new(y, 0.5).unwrap();
    let h = DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap();
    assert_abs_diff_eq!(state.schur_complement(&h).unwrap()[(0, 0)], 1.5, epsilon = 1e-15);
}

#[test]
fn perfectly_redundant_block_keeps_schur_above_lambda() {
    let lambda = 0.01;
    let h = DenseMatrix::from_rows(&[[1.0], [2.0], [0.5]]).unwrap();
    let y = DenseMatrix::from_rows(&[[1.0], [0.0], [1.0]]).unwrap();
    let state = state_with(&h, &y, lambda);
    let g: f64 = 1.0 + 4.0 + 0.25;
    let expected = (g + lambda) - g * g / (g + lambda);
    let s = state.schur_complement(&h).unwrap()[(0, 0)];
    assert_abs_diff_eq!(s, expected, epsilon = 1e-12);
    assert!(s >= lambda);
}

#[test]
fn scalar_criterion_example() {
    let e = DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap();
    let state = GramState::new(e.clone(), 0.01).unwrap();
    let (report, _) = evaluate_mgsm(&state, &e, 0.99, Aggregation::Frobenius).unwrap();
    let expected = 2.0 / 1.01 - 1.0 / (1.01 * 1.01);
    assert_abs_diff_eq!(report.lhs_aggregate, expected, epsilon = 1e-14);
    assert_abs_diff_eq!(report.lhs_aggregate, 0.999902, epsilon = 1e-6);
    assert_abs_diff_eq!(report.threshold, 0.01, epsilon = 1e-15);
    assert_eq!(report.coupling_aggregate, 0.0);
    assert!(report.accepted);
}

/// Left side, coupling and improvement recomputed from dense inverses.
#[test]
fn criterion_terms_match_dense_formulas() {
    let lambda = 0.05;
    let r = 0.9;
    let h_prev = random(30, 4, 11);
    let h_s = random(30, 3, 12);
    let y = random(30, 2, 13);
    let state = state_with(&h_prev, &y, lambda);
    let (report, _) = evaluate_mgsm(&state, &h_s, r, Aggregation::Frobenius).unwrap();

    let (hp, hs, yy) = (na(&h_prev), na(&h_s), na(&y));
    let a_inv = (hp.transpose() * &hp + DMatrix::identity(4, 4) * lambda).try_inverse().unwrap();
    let w_old = &a_inv * hp.transpose() * &yy;
    let e = &yy - &hp * &w_old;
    let s = hs.transpose() * &hs + DMatrix::identity(3, 3) * lambda - hs.transpose() * &hp * &a_inv * hp.transpose() * &hs;
    let s_inv = s.try_inverse().unwrap();
    let t = &hp * &a_inv * hp.transpose() * &hs;

    let (mut lhs, mut coupling) = (0.0, 0.0);
    for q in 0..2 {
        let eq = e.column(q).into_owned();
        let v = hs.transpose() * &eq;
        let z = &hs * &s_inv * &v;
        let u = &t * &s_inv * &v;
        lhs += 2.0 * (v.transpose() * &s_inv * &v)[(0, 0)] - z.dot(&z);
        coupling += -2.0 * eq.dot(&u) + 2.0 * z.dot(&u) - u.dot(&u);
    }
    assert_abs_diff_eq!(report.lhs_aggregate, lhs, epsilon = 1e-9 * lhs.abs().max(1.0));
    assert_abs_diff_eq!(report.coupling_aggregate, coupling, epsilon = 1e-9 * coupling.abs().max(1.0));
    assert_abs_diff_eq!(report.threshold, (1.0 - r) * e.norm_squared(), epsilon = 1e-12);

    let full = na(&h_prev.hstack(&h_s).unwrap());
    let w_new = (full.transpose() * &full + DMatrix::identity(7, 7) * lambda)
        .try_inverse()
        .unwrap()
        * full.transpose()
        * &yy;
    let after = (&yy - &full * w_new).norm_squared();
    assert_abs_diff_eq!(report.improvement, e.norm_squared() - after, epsilon = 1e-9);
    assert_abs_diff_eq!(report.improvement, lhs + coupling, epsilon = 1e-9);
}

#[test]
fn per_column_aggregation_is_never_looser() {
    for seed in 0..40 {
        let y = random(25, 3, 100 + seed);
        let state = state_with(&random(25, 3, 200 + seed), &y, 0.01);
        let h_s = random(25, 2, 300 + seed);
        let (fro, _) = evaluate_mgsm(&state, &h_s, 0.95, Aggregation::Frobenius).unwrap();
        let (col, _) = evaluate_mgsm(&state, &h_s, 0.95, Aggregation::PerColumn).unwrap();
        if col.accepted {
            assert!(fro.accepted, "seed {seed}");
        }
    }
}

#[test]
fn scsm_hand_example() {
    let e = DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap();
    let state = GramState::new(e, 0.01).unwrap();
    assert!(evaluate_scsm(&state, &[0.3, 1.0], 0.005, 0.99));
    assert!(!evaluate_scsm(&state, &[0.0, 1.0], 0.005, 0.99));
}

#[test]
fn applied_blocks_match_full_resolve() {
    let lambda = 0.01;
    let y = random(40, 3, 7);
    let mut state = GramState::with_refactor_interval(y.clone(), lambda, 3).unwrap();
    let mut all = DenseMatrix::zeros(40, 0);
    for k in 0..8 {
        let h_s = random(40, 2, 50 + k);
        state.apply_block(&h_s).unwrap();
        all = all.hstack(&h_s).unwrap();
        let (h, yy) = (na(&all), na(&y));
        let l = all.cols();
        let w = (h.transpose() * &h + DMatrix::identity(l, l) * lambda)
            .cholesky()
            .unwrap()
            .solve(&(h.transpose() * &yy));
        let rel = (na(state.weights()) - &w).norm() / w.norm();
        assert!(rel < 1e-10, "block {k}: {rel}");
        assert!(state.residual_drift() < 1e-10);
        assert!(state.factor_drift() < 1e-9);
    }
}

#[test]
fn zero_targets_keep_zero_weights() {
    let mut state = GramState::new(DenseMatrix::zeros(10, 2), 0.1).unwrap();
    state.apply_block(&random(10, 3, 9)).unwrap();
    assert!(state.weights().as_slice().iter().all(|&w| w == 0.0));
    assert_eq!(state.residual_norm(), 0.0);
}
