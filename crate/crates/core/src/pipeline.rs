//! End-to-end run for one seed: construct the layer on the first task, then
//! learn the remaining tasks with recursive ridge updates, evaluating on the
//! cumulative test splits after every stage.

use crate::cil::{accuracy, init_stat, one_hot, predict, ClassId, SufficientStatistic, TaskBatch};
use crate::error::{Error, Result};
use crate::io::TaskSplit;
use crate::metrics::{basis_cosine, feature_condition_number, AccuracyGrid, RunDiagnostics};
use crate::numerics::{ridge_solve, DenseMatrix};
use crate::rpl::{project, seeded_rng, RplModel};
use crate::supervisory::{construct, Construction, ConstructionConfig};

/// Offset separating the construction stream from the class-permutation stream.
const CONSTRUCTION_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub construction: ConstructionConfig,
    pub cond_subsample: usize,
    pub cosine_cap: usize,
}

impl PipelineConfig {
    pub fn new(construction: ConstructionConfig) -> Self {
        Self {
            construction,
            cond_subsample: 512,
            cosine_cap: 256,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub model: RplModel,
    pub stat: SufficientStatistic,
    pub grid: AccuracyGrid,
    pub diagnostics: RunDiagnostics,
}

pub fn construction_rng_seed(seed: u64) -> u64 {
    seed.wrapping_add(CONSTRUCTION_STREAM)
}

/// Builds the layer on one task's training data.
pub fn construct_on_task(batch: &TaskBatch, classes: &[ClassId], cfg: &ConstructionConfig, seed: u64) -> Result<Construction> {
    let y = one_hot(&batch.labels, classes)?;
    construct(&batch.features, &y, cfg, &mut seeded_rng(construction_rng_seed(seed)))
}

fn evaluate_seen(stat: &SufficientStatistic, model: &RplModel, tests: &[TaskBatch]) -> Result<Vec<f64>> {
    tests
        .iter()
        .map(|b| {
            if b.labels.is_empty() {
                return Ok(0.0);
            }
            Ok(accuracy(&predict(stat, model, &b.features)?, &b.labels))
        })
        .collect()
}

pub fn run_incremental(split: &TaskSplit, cfg: &PipelineConfig, seed: u64) -> Result<RunOutcome> {
    if split.tasks() == 0 {
        return Err(Error::InvalidParameter("split has no tasks".into()));
    }
    let first = &split.train[0];
    let first_classes = &split.task_classes[0];
    let built = construct_on_task(first, first_classes, &cfg.construction, seed)?;
    let Construction { model, state, log } = built;

    let mut stat = init_stat(state.features(), state.weights(), first_classes, cfg.construction.lambda)?;
    let test_sizes = split.test.iter().map(|b| b.labels.len()).collect();
    let mut grid = AccuracyGrid::new(test_sizes);
    let mut snapshots = Vec::with_capacity(split.tasks());

    for t in 0..split.tasks() {
        if t > 0 {
            stat.learn_task(&model, &split.train[t])?;
        }
        let accs = evaluate_seen(&stat, &model, &split.test[..=t])?;
        let mut snap = stat.snapshot()?;
        snap.task_accuracies = accs
            .iter()
            .enumerate()
            .map(|(j, &a)| (j, split.test[j].labels.len(), a))
            .collect();
        grid.push_stage(accs)?;
        snapshots.push(snap);
    }

    let cosine = if model.total_units() > 0 {
        Some(basis_cosine(&model, cfg.cosine_cap)?.1)
    } else {
        None
    };
    let feature_condition = feature_condition_number(state.features(), cfg.cond_subsample)?;
    let diagnostics = RunDiagnostics {
        termination: log.termination,
        construction: log,
        snapshots,
        final_hidden_size: model.total_units(),
        cosine,
        feature_condition,
    };
    Ok(RunOutcome {
        model,
        stat,
        grid,
        diagnostics,
    })
}

/// Ridge weights fitted jointly on every task's training data through `model`,
/// with labels over `classes`.
pub fn joint_ridge(model: &RplModel, batches: &[TaskBatch], classes: &[ClassId], lambda: f64) -> Result<DenseMatrix> {
    let mut h = DenseMatrix::zeros(0, model.total_units());
    let mut y = DenseMatrix::zeros(0, classes.len());
    for b in batches {
        h = h.vstack(&project(&b.features, model)?)?;
        y = y.vstack(&one_hot(&b.labels, classes)?)?;
    }
    ridge_solve(&h, &y, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{generate_synthetic, split_tasks, Protocol, SyntheticSpec};
    use crate::rpl::XiSchedule;
    use crate::supervisory::Strategy;

    #[test]
    fn three_task_run_fills_grid() {
        let data = generate_synthetic(&SyntheticSpec {
            classes: 6,
            train_per_class: 20,
            test_per_class: 10,
            feature_dim: 6,
            ..SyntheticSpec::default()
        })
        .unwrap();
        let split = split_tasks(
            &data.train_features,
            &data.train_labels,
            &data.test_features,
            &data.test_labels,
            Protocol::new(0, 2).unwrap(),
            1,
        )
        .unwrap();
        let cfg = PipelineConfig::new(ConstructionConfig {
            s: 5,
            b_max: 3,
            epsilon: 0.5,
            xi_schedule: XiSchedule::new(0.2, 0.2, 1.0).unwrap(),
            max_units: 60,
            ..ConstructionConfig::new(Strategy::Mgsm)
        });
        let out = run_incremental(&split, &cfg, 3).unwrap();
        assert_eq!(out.grid.stages(), 3);
        assert_eq!(out.stat.classes_seen().len(), 6);
        assert_eq!(out.diagnostics.snapshots.len(), 3);
        assert_eq!(out.diagnostics.final_hidden_size, out.model.total_units());

        let all: Vec<ClassId> = out.stat.classes_seen().to_vec();
        let joint = joint_ridge(&out.model, &split.train, &all, cfg.construction.lambda).unwrap();
        assert!(out.stat.weights().relative_diff(&joint, 1e-300) < 1e-8);
    }
}
