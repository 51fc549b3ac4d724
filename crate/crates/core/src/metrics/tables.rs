use std::fs::File;
use std::path::Path;

use csv::Writer;

use super::{a_avg, a_last, f_avg, trace_eigs, trace_pt, AccuracyGrid, RunDiagnostics};
use crate::error::Result;
use crate::supervisory::{ConstructionLog, Strategy};

pub const TABLE_FILES: [&str; 7] = [
    "construction_log.csv",
    "stage_snapshots.csv",
    "accuracy_grid.csv",
    "metrics.csv",
    "pt_trace.csv",
    "eig_trace.csv",
    "cosine_summary.csv",
];

const CONSTRUCTION_HEADER: [&str; 13] = [
    "seed",
    "strategy",
    "iteration",
    "xi",
    "candidates",
    "accepted_index",
    "residual_norm",
    "lhs_aggregate",
    "threshold",
    "coupling_aggregate",
    "hidden_units",
    "residual_before",
    "min_schur_eigenvalue",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn log_rows(w: &mut Writer<File>, seed: u64, strategy: Strategy, log: &ConstructionLog) -> Result<()> {
    for r in &log.records {
        w.write_record([
            seed.to_string(),
            strategy.to_string(),
            r.iteration.to_string(),
            r.xi.to_string(),
            r.candidates.to_string(),
            r.accepted.map(|j| j.to_string()).unwrap_or_default(),
            r.residual_after.to_string(),
            opt(r.lhs_aggregate),
            opt(r.threshold),
            opt(r.coupling_aggregate),
            r.hidden_units.to_string(),
            r.residual_before.to_string(),
            r.min_schur_eigenvalue.to_string(),
        ])?;
    }
    Ok(())
}

/// Writes a standalone `construction_log.csv` holding one or more logs.
pub fn write_construction_log<'a, I>(path: &Path, logs: I) -> Result<()>
where
    I: IntoIterator<Item = (u64, &'a ConstructionLog)>,
{
    let mut w = Writer::from_path(path)?;
    w.write_record(CONSTRUCTION_HEADER)?;
    for (seed, log) in logs {
        log_rows(&mut w, seed, log.strategy, log)?;
    }
    w.flush()?;
    Ok(())
}

/// The seven run tables, opened together and appended per `(seed, strategy)`.
pub struct RunTables {
    construction: Writer<File>,
    snapshots: Writer<File>,
    grid: Writer<File>,
    metrics: Writer<File>,
    pt: Writer<File>,
    eigs: Writer<File>,
    cosine: Writer<File>,
}

fn open(dir: &Path, name: &str, header: &[&str]) -> Result<Writer<File>> {
    let mut w = Writer::from_path(dir.join(name))?;
    w.write_record(header)?;
    Ok(w)
}

impl RunTables {
    pub fn create(dir: &Path) -> Result<Self> {
        Ok(Self {
            construction: open(dir, TABLE_FILES[0], &CONSTRUCTION_HEADER)?,
            snapshots: open(
                dir,
                TABLE_FILES[1],
                &[
                    "seed",
                    "strategy",
                    "stage",
                    "p_frobenius",
                    "lambda_min",
                    "lambda_max",
                    "condition_number",
                    "seen_task_accuracies",
                ],
            )?,
            grid: open(dir, TABLE_FILES[2], &["seed", "strategy", "stage", "task", "test_size", "accuracy"])?,
            metrics: open(
                dir,
                TABLE_FILES[3],
                &["seed", "strategy", "a_last", "a_avg", "f_avg", "final_hidden_size"],
            )?,
            pt: open(dir, TABLE_FILES[4], &["seed", "strategy", "stage", "p_frobenius"])?,
            eigs: open(
                dir,
                TABLE_FILES[5],
                &["seed", "strategy", "stage", "lambda_min", "lambda_max", "condition_number"],
            )?,
            cosine: open(
                dir,
                TABLE_FILES[6],
                &[
                    "seed",
                    "strategy",
                    "columns_used",
                    "mean_abs_off_diagonal",
                    "feature_condition_number",
                ],
            )?,
        })
    }

    pub fn append(&mut self, seed: u64, strategy: Strategy, diag: &RunDiagnostics, grid: &AccuracyGrid) -> Result<()> {
        let (s, st) = (seed.to_string(), strategy.to_string());
        log_rows(&mut self.construction, seed, strategy, &diag.construction)?;

        for snap in &diag.snapshots {
            let accs: Vec<String> = snap.task_accuracies.iter().map(|(_, _, a)| a.to_string()).collect();
            self.snapshots.write_record([
                s.clone(),
                st.clone(),
                snap.stage.to_string(),
                snap.p_frobenius.to_string(),
                snap.lambda_min.to_string(),
                snap.lambda_max.to_string(),
                snap.condition_number.to_string(),
                accs.join(";"),
            ])?;
        }
        for (t, row) in grid.rows().iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                self.grid.write_record([
                    s.clone(),
                    st.clone(),
                    (t + 1).to_string(),
                    (j + 1).to_string(),
                    grid.test_sizes()[j].to_string(),
                    a.to_string(),
                ])?;
            }
        }
        self.metrics.write_record([
            s.clone(),
            st.clone(),
            a_last(grid)?.to_string(),
            a_avg(grid)?.to_string(),
            f_avg(grid).map(|f| f.to_string()).unwrap_or_default(),
            diag.final_hidden_size.to_string(),
        ])?;
        for (stage, p) in trace_pt(&diag.snapshots) {
            self.pt.write_record([s.clone(), st.clone(), stage.to_string(), p.to_string()])?;
        }
        for row in trace_eigs(&diag.snapshots) {
            self.eigs.write_record([
                s.clone(),
                st.clone(),
                row.stage.to_string(),
                row.lambda_min.to_string(),
                row.lambda_max.to_string(),
                row.condition_number.to_string(),
            ])?;
        }
        let (cols, mean) = diag
            .cosine
            .map(|c| (c.columns_used.to_string(), c.mean_abs_off_diagonal.to_string()))
            .unwrap_or_default();
        self.cosine
            .write_record([s, st, cols, mean, diag.feature_condition.to_string()])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        for w in [
            &mut self.construction,
            &mut self.snapshots,
            &mut self.grid,
            &mut self.metrics,
            &mut self.pt,
            &mut self.eigs,
            &mut self.cosine,
        ] {
            w.flush()?;
        }
        Ok(())
    }
}
