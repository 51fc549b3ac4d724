//! Construct on the first task, then learn four more tasks with recursive
//! ridge updates and print the accuracy grid and summary metrics.

use rplcil::io::{generate_synthetic, split_tasks, Protocol, SyntheticSpec};
use rplcil::metrics::{a_avg, a_last, f_avg};
use rplcil::pipeline::{run_incremental, PipelineConfig};
use rplcil::supervisory::{ConstructionConfig, Strategy};
use rplcil::verify::synthetic_xi_schedule;

fn main() -> rplcil::Result<()> {
    let seed = 7;
    let data = generate_synthetic(&SyntheticSpec {
        classes: 10,
        train_per_class: 40,
        test_per_class: 20,
        cluster_spread: 0.4,
        domain_gap: 1.5,
        drift_groups: 5,
        seed,
        ..SyntheticSpec::default()
    })?;
    let split = split_tasks(
        &data.train_features,
        &data.train_labels,
        &data.test_features,
        &data.test_labels,
        Protocol::new(0, 2)?,
        seed,
    )?;
    let cfg = PipelineConfig::new(ConstructionConfig {
        s: 10,
        epsilon: 2.0,
        xi_schedule: synthetic_xi_schedule(),
        max_units: 200,
        ..ConstructionConfig::new(Strategy::Mgsm)
    });
    let out = run_incremental(&split, &cfg, seed)?;

    println!("hidden units: {}", out.model.total_units());
    for (t, row) in out.grid.rows().iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|a| format!("{a:.3}")).collect();
        println!("stage {}: {}", t + 1, cells.join(" "));
    }
    for s in &out.diagnostics.snapshots {
        println!(
            "stage {}: |P|_F {:.3e}  eig [{:.3e}, {:.3e}]",
            s.stage, s.p_frobenius, s.lambda_min, s.lambda_max
        );
    }
    println!(
        "A_last {:.4}  A_avg {:.4}  F_avg {:.4}",
        a_last(&out.grid)?,
        a_avg(&out.grid)?,
        f_avg(&out.grid)?
    );
    Ok(())
}
