//! Evaluate one candidate block against a partly built layer and show how
//! the acceptance test splits the exact residual decrease into the left
//! side and the coupling term.

use rplcil::cil::{one_hot, ClassId};
use rplcil::io::{generate_synthetic, SyntheticSpec};
use rplcil::numerics::DenseMatrix;
use rplcil::rpl::{activate, sample_block, seeded_rng};
use rplcil::supervisory::{evaluate_mgsm, Aggregation, GramState};

fn main() -> rplcil::Result<()> {
    let data = generate_synthetic(&SyntheticSpec {
        classes: 3,
        train_per_class: 40,
        feature_dim: 8,
        ..SyntheticSpec::default()
    })?;
    let classes: Vec<ClassId> = (0..3).collect();
    let y = one_hot(&data.train_labels, &classes)?;
    let z = &data.train_features;
    let mut rng = seeded_rng(5);
    let mut state = GramState::new(y, 0.01)?;

    for step in 0..4 {
        let block = sample_block(&mut rng, z.cols(), 5, 0.5)?;
        let h_s: DenseMatrix = activate(z, &block)?;
        let (report, _) = evaluate_mgsm(&state, &h_s, 0.99, Aggregation::Frobenius)?;
        println!(
            "step {step}: lhs {:>10.4}  threshold {:>8.4}  coupling {:>10.4}  decrease {:>8.4}  accepted {}",
            report.lhs_aggregate, report.threshold, report.coupling_aggregate, report.improvement, report.accepted
        );
        // Apply regardless so later steps see a non-empty layer.
        state.apply_block(&h_s)?;
        println!("        residual now {:.4} with {} units", state.residual_norm(), state.hidden_units());
    }
    Ok(())
}
