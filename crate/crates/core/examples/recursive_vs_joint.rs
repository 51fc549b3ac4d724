//! Recursive ridge updates task by task give the same weights as one ridge
//! fit on all tasks at once.

use rplcil::cil::ClassId;
use rplcil::io::{generate_synthetic, split_tasks, Protocol, SyntheticSpec};
use rplcil::pipeline::{joint_ridge, run_incremental, PipelineConfig};
use rplcil::supervisory::{ConstructionConfig, Strategy};
use rplcil::verify::synthetic_xi_schedule;

fn main() -> rplcil::Result<()> {
    let data = generate_synthetic(&SyntheticSpec {
        classes: 8,
        train_per_class: 30,
        seed: 2,
        ..SyntheticSpec::default()
    })?;
    let split = split_tasks(
        &data.train_features,
        &data.train_labels,
        &data.test_features,
        &data.test_labels,
        Protocol::new(2, 2)?,
        2,
    )?;
    let cfg = PipelineConfig::new(ConstructionConfig {
        s: 10,
        epsilon: 2.0,
        xi_schedule: synthetic_xi_schedule(),
        max_units: 100,
        ..ConstructionConfig::new(Strategy::Mgsm)
    });
    let out = run_incremental(&split, &cfg, 2)?;
    let classes: Vec<ClassId> = out.stat.classes_seen().to_vec();
    let joint = joint_ridge(&out.model, &split.train, &classes, cfg.construction.lambda)?;
    let diff = out.stat.weights().sub(&joint)?.frobenius_norm_sq().sqrt() / joint.frobenius_norm_sq().sqrt();
    println!("{} tasks, {} units, {} classes", split.tasks(), out.model.total_units(), classes.len());
    println!("relative difference to the joint fit: {diff:.3e}");
    Ok(())
}
