#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levy_smile::experiments::{
    cmd_converge_atm, cmd_converge_otm, cmd_smile, cmd_table, write_csv, ExperimentConfig, RunOutput,
    TableConfig, PRESETS,
};
use levy_smile::levy::TemperedStableParams;
use levy_smile::Error;

const THREADS_VAR: &str = "LEVY_SMILE_THREADS";

#[derive(Parser)]
#[command(name = "levy-smile", version, about = "Short-maturity smile experiments for tempered stable Levy models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reproduce the validation table of Fourier prices.
    Table {
        /// Table config (JSON); the shipped fixture when omitted.
        config: Option<PathBuf>,
        /// Monte Carlo cross-check paths per row (0 = off).
        #[arg(long, default_value_t = 0)]
        mc_paths: usize,
        #[command(flatten)]
        common: Common,
    },
    /// ATM price normalised by t^(1/alpha) against the stable constant.
    ConvergeAtm(Common),
    /// OTM price normalised by t k^(1-alpha) along k = t^(1/alpha') or the moving strike.
    ConvergeOtm(Common),
    /// Implied vol, expansion and limiting smile at the moving strike.
    Smile {
        /// Leave the limit column empty; --tol bounds |expansion/implied - 1|.
        #[arg(long)]
        expansion_only: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Same as `smile --expansion-only`.
    ApproxQuality(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Preset name (cgmy, smile-pure-jump, smile-diffusion) or a JSON file
    /// holding a config or a bare model object.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Moving-strike theta values, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    theta: Vec<f64>,
    #[arg(long)]
    alpha_prime: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for the Monte Carlo cross-check.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Tolerance,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Tolerance) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("{THREADS_VAR} must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Table {
            config,
            mc_paths,
            common,
        } => run_table(config.as_deref(), mc_paths, &common),
        Command::ConvergeAtm(common) => {
            let cfg = experiment_config(&common, "cgmy")?;
            emit(cmd_converge_atm(&cfg)?, &common)
        }
        Command::ConvergeOtm(common) => {
            let cfg = experiment_config(&common, "cgmy")?;
            emit(cmd_converge_otm(&cfg)?, &common)
        }
        Command::Smile {
            expansion_only,
            common,
        } => run_smile(&common, expansion_only),
        Command::ApproxQuality(common) => run_smile(&common, true),
    }
}

fn run_smile(common: &Common, expansion_only: bool) -> Result<(), Failure> {
    let mut cfg = experiment_config(common, "smile-pure-jump")?;
    cfg.experiment.expansion_only |= expansion_only;
    emit(cmd_smile(&cfg)?, common)
}

fn run_table(path: Option<&Path>, mc_paths: usize, common: &Common) -> Result<(), Failure> {
    let mut cfg = match path {
        None => TableConfig::default_fixture(),
        Some(p) => TableConfig::from_json(&read(p)?)?,
    };
    if let Some(tol) = common.tol {
        if !(tol >= 0.0) {
            return Err(Failure::Usage("--tol must be non-negative".into()));
        }
        cfg.tol = tol;
    }
    if mc_paths > 0 {
        cfg.mc_paths = mc_paths;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let report = cmd_table(&cfg)?;
    let mut out = open_out(common.out.as_deref())?;
    write!(out, "{report}")?;
    out.flush()?;
    if report.all_pass() {
        Ok(())
    } else {
        Err(Failure::Tolerance)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn experiment_config(common: &Common, default_preset: &str) -> Result<ExperimentConfig, Failure> {
    let name = common.model.as_deref().unwrap_or(default_preset);
    let mut cfg = match ExperimentConfig::preset(name) {
        Some(cfg) => cfg,
        None => {
            let path = Path::new(name);
            if !path.exists() {
                return Err(Failure::Usage(format!(
                    "--model {name:?} is neither a preset ({}) nor a file",
                    PRESETS.join(", ")
                )));
            }
            let text = read(path)?;
            match ExperimentConfig::from_json(&text) {
                Ok(cfg) => cfg,
                Err(first) => match TemperedStableParams::from_json(&text) {
                    Ok(model) => ExperimentConfig {
                        model,
                        experiment: Default::default(),
                    },
                    Err(_) => return Err(first.into()),
                },
            }
        }
    };
    let e = &mut cfg.experiment;
    if common.t_min.is_some() || common.t_max.is_some() || common.points.is_some() {
        e.use_t_grid = true;
    }
    if let Some(v) = common.t_min {
        e.t_min = v;
    }
    if let Some(v) = common.t_max {
        e.t_max = v;
    }
    if let Some(v) = common.points {
        e.points = v;
    }
    if !common.theta.is_empty() {
        e.theta = common.theta.clone();
    }
    if let Some(v) = common.alpha_prime {
        e.alpha_prime = v;
    }
    if let Some(v) = common.tol {
        e.tol = Some(v);
    }
    Ok(cfg)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit(output: RunOutput, common: &Common) -> Result<(), Failure> {
    let out = open_out(common.out.as_deref())?;
    write_csv(&output.rows, out)?;
    if output.warnings > 0 {
        eprintln!(
            "warning: {} rows have no implied vol (price at or outside arbitrage bounds)",
            output.warnings
        );
    }
    for f in &output.failures {
        eprintln!("FAIL {f}");
    }
    if output.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Tolerance)
    }
}
