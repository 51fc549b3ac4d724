//! Incremental-learning metrics and the diagnostic traces of a run.

mod tables;

pub use tables::{write_construction_log, RunTables, TABLE_FILES};

use crate::cil::StageSnapshot;
use crate::error::{Error, Result};
use crate::numerics::{condition_number, cosine_similarity_matrix, DenseMatrix};
use crate::rpl::RplModel;
use crate::supervisory::{ConstructionLog, TerminationReason};

/// Lower-triangular grid `a[t][j]`: accuracy on task `j`'s test split after stage `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct AccuracyGrid {
    test_sizes: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl AccuracyGrid {
    /// Empty grid for tasks with the given test-split sizes.
    pub fn new(test_sizes: Vec<usize>) -> Self {
        Self {
            test_sizes,
            rows: Vec::new(),
        }
    }

    pub fn from_rows(test_sizes: Vec<usize>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut grid = Self::new(test_sizes);
        for r in rows {
            grid.push_stage(r)?;
        }
        Ok(grid)
    }

    /// Adds stage `t` (0-based) with accuracies on tasks `0..=t`.
    pub fn push_stage(&mut self, accuracies: Vec<f64>) -> Result<()> {
        let t = self.rows.len();
        if t >= self.test_sizes.len() {
            return Err(Error::IncompleteGrid(format!("grid already holds {t} stages")));
        }
        if accuracies.len() != t + 1 {
            return Err(Error::IncompleteGrid(format!(
                "stage {} needs {} entries, got {}",
                t + 1,
                t + 1,
                accuracies.len()
            )));
        }
        if let Some(a) = accuracies.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidParameter(format!("accuracy {a} outside [0, 1]")));
        }
        self.rows.push(accuracies);
        Ok(())
    }

    pub fn stages(&self) -> usize {
        self.rows.len()
    }

    pub fn tasks(&self) -> usize {
        self.test_sizes.len()
    }

    pub fn test_sizes(&self) -> &[usize] {
        &self.test_sizes
    }

    /// `a[t][j]`, both 0-based.
    pub fn get(&self, t: usize, j: usize) -> Option<f64> {
        self.rows.get(t).and_then(|r| r.get(j)).copied()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    fn ensure_complete(&self) -> Result<usize> {
        let t = self.test_sizes.len();
        if t == 0 || self.rows.len() != t {
            return Err(Error::IncompleteGrid(format!("{} of {t} stages recorded", self.rows.len())));
        }
        Ok(t)
    }

    /// Accuracy on the pooled test data of tasks `0..=i` after stage `i`.
    pub fn cumulative_accuracy(&self, i: usize) -> Result<f64> {
        let row = self
            .rows
            .get(i)
            .ok_or_else(|| Error::IncompleteGrid(format!("stage {} missing", i + 1)))?;
        let total: usize = self.test_sizes[..=i].iter().sum();
        if total == 0 {
            return Err(Error::Undefined("tasks have no test samples".into()));
        }
        let hits: f64 = row.iter().zip(&self.test_sizes).map(|(a, &n)| a * n as f64).sum();
        Ok(hits / total as f64)
    }
}

/// `A_T`: accuracy on all learned tasks after the last stage.
pub fn a_last(grid: &AccuracyGrid) -> Result<f64> {
    let t = grid.ensure_complete()?;
    grid.cumulative_accuracy(t - 1)
}

/// `(1/T) Σ_i A_i`.
pub fn a_avg(grid: &AccuracyGrid) -> Result<f64> {
    let t = grid.ensure_complete()?;
    let mut sum = 0.0;
    for i in 0..t {
        sum += grid.cumulative_accuracy(i)?;
    }
    Ok(sum / t as f64)
}

/// `(1/(T−1)) Σ_{j<T} (max_{t≥j} a[t][j] − a[T][j])`.
///
/// The running maximum includes the final stage, so every term is non-negative.
pub fn f_avg(grid: &AccuracyGrid) -> Result<f64> {
    let t = grid.ensure_complete()?;
    if t < 2 {
        return Err(Error::Undefined("forgetting needs at least two stages".into()));
    }
    let last = &grid.rows[t - 1];
    let mut sum = 0.0;
    for j in 0..t - 1 {
        let best = (j..t).map(|s| grid.rows[s][j]).fold(f64::NEG_INFINITY, f64::max);
        sum += best - last[j];
    }
    Ok(sum / (t - 1) as f64)
}

/// `(stage, ‖P_t‖_F)` in snapshot order.
pub fn trace_pt(snapshots: &[StageSnapshot]) -> Vec<(usize, f64)> {
    snapshots.iter().map(|s| (s.stage, s.p_frobenius)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigRow {
    pub stage: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub condition_number: f64,
}

pub fn trace_eigs(snapshots: &[StageSnapshot]) -> Vec<EigRow> {
    snapshots
        .iter()
        .map(|s| EigRow {
            stage: s.stage,
            lambda_min: s.lambda_min,
            lambda_max: s.lambda_max,
            condition_number: s.condition_number,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineSummary {
    pub columns_used: usize,
    /// Mean absolute off-diagonal cosine; 0 for fewer than two columns.
    pub mean_abs_off_diagonal: f64,
}

/// Cosine matrix of the basis input-weight vectors, down-sampled by uniform
/// stride to at most `sample_cap` columns.
pub fn basis_cosine(model: &RplModel, sample_cap: usize) -> Result<(DenseMatrix, CosineSummary)> {
    let basis = model.basis_matrix();
    let l = basis.cols();
    let cap = sample_cap.max(1);
    let basis = if l > cap {
        let idx: Vec<usize> = (0..cap).map(|k| k * l / cap).collect();
        basis.select_columns(&idx)
    } else {
        basis
    };
    let cos = cosine_similarity_matrix(&basis)?;
    Ok((cos.clone(), cosine_summary(&cos)))
}

pub fn cosine_summary(cos: &DenseMatrix) -> CosineSummary {
    let n = cos.rows();
    let mean = if n < 2 {
        0.0
    } else {
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    sum += cos[(i, j)].abs();
                }
            }
        }
        sum / (n * (n - 1)) as f64
    };
    CosineSummary {
        columns_used: n,
        mean_abs_off_diagonal: mean,
    }
}

/// Condition number of the feature Gram `HᵀH`, on at most `max_rows` rows
/// taken by uniform stride.
pub fn feature_condition_number(h: &DenseMatrix, max_rows: usize) -> Result<f64> {
    if h.cols() == 0 {
        return Ok(f64::NAN);
    }
    let n = h.rows();
    let cap = max_rows.max(1);
    let sub = if n > cap {
        let idx: Vec<usize> = (0..cap).map(|k| k * n / cap).collect();
        h.select_rows(&idx)
    } else {
        h.clone()
    };
    condition_number(&sub.gram())
}

/// Everything recorded about one seeded run.
#[derive(Clone, Debug)]
pub struct RunDiagnostics {
    pub construction: ConstructionLog,
    pub snapshots: Vec<StageSnapshot>,
    pub final_hidden_size: usize,
    pub cosine: Option<CosineSummary>,
    pub feature_condition: f64,
    pub termination: TerminationReason,
}
