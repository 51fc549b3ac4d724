//! Batch front-end: `construct`, `run` and `verify`.
//!
//! Progress goes to standard error; every table goes to the output directory.

use std::collections::HashSet;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::cil::ClassId;
use crate::error::{Error, Result};
use crate::io::{
    generate_synthetic, parse_config, parse_synthetic_spec, read_labels, read_matrix, split_tasks, write_model,
    Protocol, RunConfig, SyntheticSpec, TaskSplit,
};
use crate::metrics::{write_construction_log, RunTables};
use crate::numerics::DenseMatrix;
use crate::pipeline::{construct_on_task, run_incremental, PipelineConfig};
use crate::supervisory::{Strategy, TerminationReason};
use crate::verify::{self, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_XI_EXHAUSTED: i32 = 3;
pub const EXIT_MAX_UNITS: i32 = 4;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "RPLCIL_OUT";

/// File names expected inside a `--features` directory.
pub const FEATURE_FILES: [&str; 4] = [
    "train_features.fmat",
    "train_labels.lvec",
    "test_features.fmat",
    "test_labels.lvec",
];

#[derive(Parser, Debug)]
#[command(name = "rplcil", version, about = "Guided random projection layers for class-incremental learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the projection layer on the first task and write the model.
    Construct(RunArgs),
    /// Construct, then learn every task incrementally and write all tables.
    Run(RunArgs),
    /// Run the built-in verification checks.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (defaults to $RPLCIL_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// One or more of mgsm, scsm, ri (comma-separated for a sweep).
    #[arg(long, value_delimiter = ',', default_value = "mgsm")]
    strategy: Vec<Strategy>,
    /// Task protocol such as `B-0,Inc-2`.
    #[arg(long, default_value = "B-0,Inc-2")]
    protocol: Protocol,
    /// Synthetic data spec file.
    #[arg(long, conflicts_with = "features")]
    synthetic: Option<PathBuf>,
    /// Directory holding train/test features and labels.
    #[arg(long)]
    features: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Print check names and exit.
    #[arg(long)]
    list: bool,
    /// Overrides the exactness tolerance of the equivalence checks.
    #[arg(long)]
    verify_tolerance: Option<f64>,
    #[arg(long, hide = true)]
    perturb_update: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    Features(PathBuf),
}

/// Everything one `construct` or `run` invocation needs.
#[derive(Clone, Debug)]
pub struct Manifest {
    pub config: RunConfig,
    pub data: DataSource,
    pub protocol: Protocol,
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter("at least one seed is required".into()));
        }
        let mut seen = HashSet::new();
        for s in &self.seeds {
            if !seen.insert(s) {
                return Err(Error::InvalidParameter(format!("seed {s} is listed twice")));
            }
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidParameter("at least one strategy is required".into()));
        }
        let mut seen = HashSet::new();
        for s in &self.strategies {
            if !seen.insert(s) {
                return Err(Error::InvalidParameter(format!("strategy {s} is listed twice")));
            }
        }
        for strategy in &self.strategies {
            self.config.construction(*strategy)?;
        }
        Ok(())
    }

    fn prepare_out(&self) -> Result<()> {
        fs::create_dir_all(&self.out)?;
        if fs::metadata(&self.out)?.permissions().readonly() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::PermissionDenied,
                format!("{} is read-only", self.out.display()),
            )));
        }
        Ok(())
    }
}

/// Train and test features with labels, before the task split.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub train_features: DenseMatrix,
    pub train_labels: Vec<ClassId>,
    pub test_features: DenseMatrix,
    pub test_labels: Vec<ClassId>,
}

pub fn load_data(source: &DataSource) -> Result<Dataset> {
    match source {
        DataSource::Synthetic(spec) => {
            let d = generate_synthetic(spec)?;
            Ok(Dataset {
                train_features: d.train_features,
                train_labels: d.train_labels,
                test_features: d.test_features,
                test_labels: d.test_labels,
            })
        }
        DataSource::Features(dir) => {
            let [trx, try_, tex, tey] = FEATURE_FILES.map(|f| dir.join(f));
            let data = Dataset {
                train_features: read_matrix(&trx)?,
                train_labels: read_labels(&try_)?,
                test_features: read_matrix(&tex)?,
                test_labels: read_labels(&tey)?,
            };
            if data.train_features.cols() != data.test_features.cols() {
                return Err(Error::dim(
                    "feature directory (test columns)",
                    data.train_features.cols(),
                    data.test_features.cols(),
                ));
            }
            Ok(data)
        }
    }
}

fn split_for(data: &Dataset, protocol: Protocol, seed: u64) -> Result<TaskSplit> {
    split_tasks(
        &data.train_features,
        &data.train_labels,
        &data.test_features,
        &data.test_labels,
        protocol,
        seed,
    )
}

fn model_file(m: &Manifest, strategy: Strategy, seed: u64) -> PathBuf {
    if m.seeds.len() == 1 && m.strategies.len() == 1 {
        m.out.join("model.fmat")
    } else {
        m.out.join(format!("model_{strategy}_{seed}.fmat"))
    }
}

/// Builds the layer on the first task for every `(seed, strategy)` pair.
///
/// Returns the first termination that is not `ResidualMet`, if any.
pub fn cmd_construct(m: &Manifest) -> Result<TerminationReason> {
    m.validate()?;
    let data = load_data(&m.data)?;
    m.prepare_out()?;
    let mut sizes = csv::Writer::from_path(m.out.join("final_hidden_size.csv"))?;
    sizes.write_record(["seed", "strategy", "final_hidden_size", "termination", "final_residual"])?;
    let mut worst = TerminationReason::ResidualMet;
    let mut logs = Vec::new();

    for &seed in &m.seeds {
        let split = split_for(&data, m.protocol, seed)?;
        for &strategy in &m.strategies {
            let cfg = m.config.construction(strategy)?;
            eprintln!("construct: seed {seed}, strategy {strategy}");
            let built = construct_on_task(&split.train[0], &split.task_classes[0], &cfg, seed)?;
            eprintln!(
                "  {} units, residual {:.6}, {}",
                built.model.total_units(),
                built.state.residual_norm(),
                built.termination()
            );
            write_model(&model_file(m, strategy, seed), &built.model)?;
            sizes.write_record([
                seed.to_string(),
                strategy.to_string(),
                built.model.total_units().to_string(),
                built.termination().to_string(),
                built.state.residual_norm().to_string(),
            ])?;
            if worst == TerminationReason::ResidualMet {
                worst = built.termination();
            }
            logs.push((seed, built.log));
        }
    }
    sizes.flush()?;
    write_construction_log(&m.out.join("construction_log.csv"), logs.iter().map(|(s, l)| (*s, l)))?;
    Ok(worst)
}

/// Full pipeline for every `(seed, strategy)` pair, appending to the seven run tables.
pub fn cmd_run(m: &Manifest) -> Result<()> {
    m.validate()?;
    let data = load_data(&m.data)?;
    m.prepare_out()?;
    let mut tables = RunTables::create(&m.out)?;
    for &seed in &m.seeds {
        let split = split_for(&data, m.protocol, seed)?;
        for &strategy in &m.strategies {
            let mut cfg = PipelineConfig::new(m.config.construction(strategy)?);
            cfg.cond_subsample = m.config.cond_subsample;
            cfg.cosine_cap = m.config.cosine_cap;
            eprintln!("run: seed {seed}, strategy {strategy}, {} tasks", split.tasks());
            let out = run_incremental(&split, &cfg, seed)?;
            eprintln!(
                "  {} units ({}), final accuracy {:.4}",
                out.model.total_units(),
                out.diagnostics.termination,
                crate::metrics::a_last(&out.grid)?
            );
            tables.append(seed, strategy, &out.diagnostics, &out.grid)?;
        }
    }
    tables.finish()
}

fn exit_for(reason: TerminationReason) -> i32 {
    match reason {
        TerminationReason::ResidualMet => EXIT_OK,
        TerminationReason::XiExhausted => EXIT_XI_EXHAUSTED,
        TerminationReason::MaxUnits => EXIT_MAX_UNITS,
    }
}

fn manifest_from(args: RunArgs) -> Result<Manifest> {
    let out = match args.out {
        Some(p) => p,
        None => std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .ok_or_else(|| Error::InvalidParameter(format!("--out not given and ${OUT_ENV} is unset")))?,
    };
    let config = match &args.config {
        Some(p) => parse_config(p)?,
        None => RunConfig::default(),
    };
    let data = match (args.synthetic, args.features) {
        (Some(p), _) => DataSource::Synthetic(parse_synthetic_spec(&p)?),
        (None, Some(dir)) => DataSource::Features(dir),
        (None, None) => DataSource::Synthetic(SyntheticSpec::default()),
    };
    Ok(Manifest {
        config,
        data,
        protocol: args.protocol,
        strategies: args.strategy,
        seeds: args.seeds,
        out,
    })
}

fn run_verify(args: VerifyArgs) -> i32 {
    if args.list {
        for name in verify::CHECK_NAMES {
            println!("{name}");
        }
        return EXIT_OK;
    }
    let opts = VerifyOptions {
        tolerance: args.verify_tolerance,
        perturb_update: args.perturb_update,
    };
    let outcomes = verify::run_all(&opts);
    for o in &outcomes {
        println!("{o}");
    }
    if outcomes.iter().all(|o| o.passed) {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Verify(v) => return run_verify(v),
        Command::Construct(a) => manifest_from(a).and_then(|m| cmd_construct(&m)).map(exit_for),
        Command::Run(a) => manifest_from(a).and_then(|m| cmd_run(&m)).map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
