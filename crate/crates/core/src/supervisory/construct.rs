use std::fmt;
use std::str::FromStr;

use super::criterion::{evaluate_scsm, judge, scsm_terms, Aggregation, CriterionReport};
use super::gram::{CandidateEval, GramState, DEFAULT_REFACTOR_EVERY};
use crate::error::{Error, Result};
use crate::numerics::{frobenius_norm, DenseMatrix};
use crate::rpl::{activate, sample_block, BasisBlock, RplModel, RplRng, XiSchedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Block acceptance by the target-aligned residual criterion.
    Mgsm,
    /// Unit-by-unit greedy criterion of stochastic configuration networks.
    Scsm,
    /// Unguided random initialization.
    Ri,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Mgsm, Strategy::Scsm, Strategy::Ri];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Mgsm => "mgsm",
            Strategy::Scsm => "scsm",
            Strategy::Ri => "ri",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mgsm" => Ok(Strategy::Mgsm),
            "scsm" => Ok(Strategy::Scsm),
            "ri" => Ok(Strategy::Ri),
            other => Err(Error::InvalidParameter(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationReason {
    ResidualMet,
    XiExhausted,
    MaxUnits,
}

impl TerminationReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationReason::ResidualMet => "residual_met",
            TerminationReason::XiExhausted => "xi_exhausted",
            TerminationReason::MaxUnits => "max_units",
        }
    }
}

impl fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstructionConfig {
    /// Contraction rate, `0 < r < 1`.
    pub r: f64,
    /// Residual tolerance on `‖E‖_F`.
    pub epsilon: f64,
    /// Units per candidate block (forced to 1 for SCSM).
    pub s: usize,
    /// Candidate blocks sampled per iteration.
    pub b_max: usize,
    pub lambda: f64,
    pub xi_schedule: XiSchedule,
    pub max_units: usize,
    pub strategy: Strategy,
    pub aggregation: Aggregation,
    /// Fixed sampling scale of the RI baseline.
    pub ri_xi: f64,
    pub refactor_every: usize,
}

impl ConstructionConfig {
    /// Defaults used throughout: `r = 0.99`, `ε = 0.01`, `λ = 0.01`, `s = 50`,
    /// `B_max = 10`, `ξ ∈ {0.0008, 0.0009, …, 0.004}`.
    pub fn new(strategy: Strategy) -> Self {
        let xi_schedule = XiSchedule::new(0.0008, 0.0001, 0.004).expect("default schedule is valid");
        let s = 50;
        Self {
            r: 0.99,
            epsilon: 0.01,
            s,
            b_max: 10,
            lambda: 0.01,
            max_units: 20 * s * xi_schedule.len(),
            xi_schedule,
            strategy,
            aggregation: Aggregation::Frobenius,
            ri_xi: 1.0,
            refactor_every: DEFAULT_REFACTOR_EVERY,
        }
    }

    /// Units added per accepted block.
    pub fn block_units(&self) -> usize {
        match self.strategy {
            Strategy::Scsm => 1,
            _ => self.s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.r > 0.0 && self.r < 1.0) {
            return bad(format!("r must lie in (0, 1), got {}", self.r));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.s == 0 || self.b_max == 0 {
            return bad("s and b_max must be >= 1".into());
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if self.max_units < self.block_units() {
            return bad(format!("max_units ({}) must be >= s ({})", self.max_units, self.block_units()));
        }
        if !(self.ri_xi > 0.0) || !self.ri_xi.is_finite() {
            return bad(format!("ri_xi must be positive, got {}", self.ri_xi));
        }
        if self.refactor_every == 0 {
            return bad("refactor_every must be >= 1".into());
        }
        Ok(())
    }
}

/// One sampling round of the construction loop.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstructionRecord {
    pub iteration: usize,
    pub xi: f64,
    pub candidates: usize,
    /// Index (sampling order) of the applied candidate.
    pub accepted: Option<usize>,
    pub residual_before: f64,
    pub residual_after: f64,
    /// Criterion terms of the applied candidate, or of the best rejected one.
    /// `None` for RI, which has no criterion.
    pub lhs_aggregate: Option<f64>,
    pub threshold: Option<f64>,
    pub coupling_aggregate: Option<f64>,
    /// Smallest Schur-complement eigenvalue over the candidates of this round.
    pub min_schur_eigenvalue: f64,
    pub hidden_units: usize,
}

#[derive(Clone, Debug)]
pub struct ConstructionLog {
    pub strategy: Strategy,
    pub lambda: f64,
    pub r: f64,
    pub initial_residual: f64,
    pub records: Vec<ConstructionRecord>,
    pub termination: TerminationReason,
}

impl ConstructionLog {
    pub fn accepted(&self) -> impl Iterator<Item = &ConstructionRecord> {
        self.records.iter().filter(|r| r.accepted.is_some())
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(self.initial_residual, |r| r.residual_after)
    }
}

#[derive(Clone, Debug)]
pub struct Construction {
    pub model: RplModel,
    pub state: GramState,
    pub log: ConstructionLog,
}

impl Construction {
    pub fn termination(&self) -> TerminationReason {
        self.log.termination
    }
}

struct Scored {
    report: CriterionReport,
    eval: CandidateEval,
    block: BasisBlock,
    accepted: bool,
    // SCSM logs its own criterion terms in place of the block criterion.
    logged: (f64, f64, Option<f64>),
}

/// Grows a random projection layer on `(Z, Y)` until `‖E‖_F ≤ ε`, the ξ
/// schedule is exhausted, or the unit cap is reached.
///
/// Each round samples `b_max` candidate blocks at the current ξ and applies
/// the accepted candidate with the largest residual decrease (lowest index
/// on ties). ξ moves to the next schedule value after a round with no
/// acceptance and returns to `xi_min` after every acceptance. RI accepts
/// one block per round at `ri_xi` without any criterion.
pub fn construct(z: &DenseMatrix, y: &DenseMatrix, cfg: &ConstructionConfig, rng: &mut RplRng) -> Result<Construction> {
    cfg.validate()?;
    if z.rows() == 0 {
        return Err(Error::InvalidParameter("construction needs at least one sample".into()));
    }
    if z.rows() != y.rows() {
        return Err(Error::dim("construct (Y rows)", z.rows(), y.rows()));
    }
    z.ensure_finite("construct (Z)")?;
    let d = z.cols();
    let s = cfg.block_units();
    let mut state = GramState::with_refactor_interval(y.clone(), cfg.lambda, cfg.refactor_every)?;
    let mut model = RplModel::new(d);
    let mut records = Vec::new();
    let initial_residual = state.residual_norm();
    let mut xi_index = 0usize;

    let termination = loop {
        let before = state.residual_norm();
        if before <= cfg.epsilon {
            break TerminationReason::ResidualMet;
        }
        if state.hidden_units() + s > cfg.max_units {
            break TerminationReason::MaxUnits;
        }
        let iteration = records.len() + 1;

        if cfg.strategy == Strategy::Ri {
            let block = sample_block(rng, d, s, cfg.ri_xi)?;
            let h_s = activate(z, &block)?;
            let eval = state.evaluate(&h_s)?;
            let report = judge(&state, &eval, cfg.r, cfg.aggregation)?;
            state.apply_evaluated(eval)?;
            model.push(block)?;
            records.push(ConstructionRecord {
                iteration,
                xi: cfg.ri_xi,
                candidates: 1,
                accepted: Some(0),
                residual_before: before,
                residual_after: state.residual_norm(),
                lhs_aggregate: None,
                threshold: None,
                coupling_aggregate: None,
                min_schur_eigenvalue: report.schur_min_eigenvalue,
                hidden_units: state.hidden_units(),
            });
            continue;
        }

        let xi = cfg.xi_schedule.value(xi_index).expect("index kept in range");
        let mu = (1.0 - cfg.r) / (state.hidden_units() + 2) as f64;
        let mut candidates = Vec::with_capacity(cfg.b_max);
        for _ in 0..cfg.b_max {
            let block = sample_block(rng, d, s, xi)?;
            let h_s = activate(z, &block)?;
            let eval = state.evaluate(&h_s)?;
            let report = judge(&state, &eval, cfg.r, cfg.aggregation)?;
            let (accepted, logged) = match cfg.strategy {
                Strategy::Scsm => {
                    let col = h_s.column(0);
                    let (lhs, rhs) = scsm_terms(&state, &col, mu, cfg.r);
                    (evaluate_scsm(&state, &col, mu, cfg.r), (lhs, rhs, None))
                }
                _ => (
                    report.accepted,
                    (report.lhs_aggregate, report.threshold, Some(report.coupling_aggregate)),
                ),
            };
            candidates.push(Scored {
                report,
                eval,
                block,
                accepted,
                logged,
            });
        }
        let min_schur_eigenvalue = candidates
            .iter()
            .map(|c| c.report.schur_min_eigenvalue)
            .fold(f64::INFINITY, f64::min);

        let best = pick_best(&candidates, true);
        let accepted_index = best;
        let shown = best.or_else(|| pick_best(&candidates, false)).expect("b_max >= 1");
        let (lhs, thr, coupling) = candidates[shown].logged;

        if let Some(j) = accepted_index {
            let chosen = candidates.swap_remove(j);
            state.apply_evaluated(chosen.eval)?;
            model.push(chosen.block)?;
            xi_index = 0;
        } else {
            xi_index += 1;
        }
        records.push(ConstructionRecord {
            iteration,
            xi,
            candidates: cfg.b_max,
            accepted: accepted_index,
            residual_before: before,
            residual_after: state.residual_norm(),
            lhs_aggregate: Some(lhs),
            threshold: Some(thr),
            coupling_aggregate: coupling,
            min_schur_eigenvalue,
            hidden_units: state.hidden_units(),
        });
        if accepted_index.is_none() && xi_index >= cfg.xi_schedule.len() {
            break TerminationReason::XiExhausted;
        }
    };

    Ok(Construction {
        model,
        state,
        log: ConstructionLog {
            strategy: cfg.strategy,
            lambda: cfg.lambda,
            r: cfg.r,
            initial_residual,
            records,
            termination,
        },
    })
}

fn pick_best(candidates: &[Scored], accepted_only: bool) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, c) in candidates.iter().enumerate() {
        if accepted_only && !c.accepted {
            continue;
        }
        let score = c.report.improvement;
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((j, score));
        }
    }
    best.map(|(j, _)| j)
}

/// `‖Y‖_F`: the residual of the empty model.
pub fn initial_residual(y: &DenseMatrix) -> f64 {
    frobenius_norm(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rpl::seeded_rng;

    fn blobs(n: usize, d: usize, seed: u64) -> (DenseMatrix, DenseMatrix) {
        use rand::Rng;
        let mut rng = seeded_rng(seed);
        let z = DenseMatrix::from_fn(n, d, |i, j| {
            let centre = if i % 2 == 0 { 1.5 } else { -1.5 };
            let shift = if j == 0 { centre } else { 0.0 };
            shift + rng.random::<f64>() - 0.5
        });
        let y = DenseMatrix::from_fn(n, 2, |i, j| if i % 2 == j { 1.0 } else { 0.0 });
        (z, y)
    }

    fn small_cfg(strategy: Strategy) -> ConstructionConfig {
        ConstructionConfig {
            s: 10,
            b_max: 5,
            epsilon: 1.0,
            xi_schedule: XiSchedule::new(0.1, 0.1, 2.0).unwrap(),
            max_units: 400,
            ..ConstructionConfig::new(strategy)
        }
    }

    #[test]
    fn zero_targets_terminate_immediately() {
        let z = DenseMatrix::from_fn(5, 3, |i, j| (i + j) as f64);
        let c = construct(&z, &DenseMatrix::zeros(5, 2), &small_cfg(Strategy::Mgsm), &mut seeded_rng(0)).unwrap();
        assert_eq!(c.termination(), TerminationReason::ResidualMet);
        assert_eq!(c.model.total_units(), 0);
        assert!(c.log.records.is_empty());
    }

    #[test]
    fn separable_blobs_contract_on_every_accepted_block() {
        let (z, y) = blobs(200, 8, 1);
        let cfg = small_cfg(Strategy::Mgsm);
        let c = construct(&z, &y, &cfg, &mut seeded_rng(2)).unwrap();
        assert!(c.log.accepted().count() >= 1);
        assert!(c.state.residual_norm() < 0.2 * c.log.initial_residual);
        assert!(matches!(
            c.termination(),
            TerminationReason::ResidualMet | TerminationReason::XiExhausted
        ));
        for rec in c.log.accepted() {
            let lhs = rec.residual_after.powi(2);
            let rhs = cfg.r * rec.residual_before.powi(2) + 1e-9 * (1.0 + rec.residual_before.powi(2));
            assert!(lhs <= rhs);
        }
        assert_eq!(c.model.total_units(), c.state.hidden_units());
    }

    #[test]
    fn unusable_schedule_exhausts() {
        let (z, y) = blobs(60, 4, 3);
        let cfg = ConstructionConfig {
            r: 1e-6,
            epsilon: 1e-9,
            xi_schedule: XiSchedule::fixed(1e-4).unwrap(),
            ..small_cfg(Strategy::Mgsm)
        };
        let c = construct(&z, &y, &cfg, &mut seeded_rng(4)).unwrap();
        assert_eq!(c.termination(), TerminationReason::XiExhausted);
        assert_eq!(c.model.total_units(), 0);
        assert_eq!(c.log.records.len(), 1);
    }

    #[test]
    fn ri_fills_to_cap() {
        let (z, y) = blobs(50, 4, 5);
        let cfg = ConstructionConfig {
            epsilon: 1e-9,
            max_units: 35,
            ..small_cfg(Strategy::Ri)
        };
        let c = construct(&z, &y, &cfg, &mut seeded_rng(6)).unwrap();
        assert_eq!(c.termination(), TerminationReason::MaxUnits);
        assert_eq!(c.model.total_units(), 30);
        assert!(c.log.records.iter().all(|r| r.lhs_aggregate.is_none()));
    }

    #[test]
    fn scsm_adds_single_units() {
        let (z, y) = blobs(80, 4, 7);
        let cfg = ConstructionConfig {
            max_units: 25,
            epsilon: 1e-9,
            ..small_cfg(Strategy::Scsm)
        };
        let c = construct(&z, &y, &cfg, &mut seeded_rng(8)).unwrap();
        assert!(c.model.blocks().iter().all(|b| b.units() == 1));
        assert!(c.model.total_units() <= 25);
    }

    #[test]
    fn construction_is_deterministic() {
        let (z, y) = blobs(100, 6, 9);
        let cfg = small_cfg(Strategy::Mgsm);
        let a = construct(&z, &y, &cfg, &mut seeded_rng(10)).unwrap();
        let b = construct(&z, &y, &cfg, &mut seeded_rng(10)).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.log.records, b.log.records);
    }

    #[test]
    fn invalid_config_rejected() {
        let (z, y) = blobs(10, 2, 0);
        for cfg in [
            ConstructionConfig { r: 1.0, ..small_cfg(Strategy::Mgsm) },
            ConstructionConfig { s: 0, ..small_cfg(Strategy::Mgsm) },
            ConstructionConfig { max_units: 5, ..small_cfg(Strategy::Mgsm) },
        ] {
            assert!(construct(&z, &y, &cfg, &mut seeded_rng(0)).is_err());
        }
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("MGSM".parse::<Strategy>().unwrap(), Strategy::Mgsm);
        assert_eq!("ri".parse::<Strategy>().unwrap(), Strategy::Ri);
        assert!("foo".parse::<Strategy>().is_err());
    }
}
