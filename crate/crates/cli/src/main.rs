//! `qrev`: run time-reversal experiments from a TOML config.

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qrev::channels::{ChannelSpec, QuadratureConfig};

use config::ExperimentConfig;

const OUT_ENV: &str = "QREV_OUT_DIR";
const DEFAULT_OUT: &str = "qrev-out";

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config error: {0}")]
    Config(String),
    #[error("physics invariant violated: {0}")]
    Physics(qrev::Error),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("residuals above the documented thresholds")]
    Threshold,
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 2,
            AppError::Physics(_) | AppError::Threshold => 3,
            AppError::Io(_) => 4,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "qrev", version = version(), about = "Time-reversal experiments for generalized qubit measurements")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    /// Experiment configuration (TOML).
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: config `output`, then $QREV_OUT_DIR, then ./qrev-out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for ensembles; results do not depend on it.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Completeness residuals of the forward and reversed POVMs.
    PovmCheck(PovmArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    Gaussian,
    Dichotomous,
    Fluorescence,
}

#[derive(Args, Debug)]
struct PovmArgs {
    #[arg(long, value_enum, required = true, num_args = 1..)]
    family: Vec<Family>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    k: f64,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.3)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma1: f64,
    /// Fluorescence step; ε = γ₁·dt.
    #[arg(long, default_value_t = 0.2)]
    dt: f64,
    /// Gaussian grid half-width [default: 10(δ + |k|τ)].
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long, default_value_t = 4001)]
    points: usize,
    #[arg(long, default_value_t = 6.0)]
    radius: f64,
    #[arg(long, default_value_t = 400)]
    radial_cells: usize,
    #[arg(long, default_value_t = 400)]
    angular_cells: usize,
    /// Also write povm_check.csv and summary.toml here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn version() -> &'static str {
    concat!(env!("CARGO_PKG_VERSION"), " (", env!("QREV_GIT_DESCRIBE"), ")")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Some(Command::PovmCheck(args)) => povm_check(args),
        None => match &cli.config {
            Some(path) => run_config(&cli, path),
            None => Err(AppError::Config("no config file given (see `qrev --help`)".into())),
        },
    };
    match result {
        Ok(files) => {
            for f in files {
                log::info!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qrev: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn out_dir(flag: Option<&PathBuf>, config: Option<&PathBuf>) -> PathBuf {
    flag.or(config)
        .cloned()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn run_config(cli: &Cli, path: &PathBuf) -> Result<Vec<PathBuf>, AppError> {
    let started = Instant::now();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| AppError::Config(format!("--threads: {e}")))?;
    }
    let text = std::fs::read_to_string(path).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_toml(&text, path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let cfg = cfg.resolved();
    let plan = cfg.plan()?;
    let table = toml::Table::try_from(&cfg).map_err(|e| AppError::Config(format!("cannot echo config: {e}")))?;
    let config_toml = toml::to_string(&table).map_err(|e| AppError::Config(format!("cannot echo config: {e}")))?;
    let dir = out_dir(cli.out.as_ref(), cfg.output.as_ref());
    let ctx = run::Context {
        experiment: cfg.experiment.name(),
        out_dir: &dir,
        config_toml: &config_toml,
        config_table: &table,
        version: version(),
        started,
    };
    run::run(&plan, &ctx)
}

fn povm_check(a: &PovmArgs) -> Result<Vec<PathBuf>, AppError> {
    let started = Instant::now();
    let mut channels = Vec::new();
    for f in &a.family {
        let spec = match f {
            Family::Gaussian => ChannelSpec::gaussian(a.k, a.tau, a.delta),
            Family::Dichotomous => ChannelSpec::dichotomous(a.gamma),
            Family::Fluorescence => ChannelSpec::fluorescence(a.gamma1, a.dt),
        };
        channels.push(spec.map_err(run::physics)?);
    }
    let quad = QuadratureConfig {
        gaussian_half_width: a.half_width,
        gaussian_points: a.points,
        fluorescence_radius: a.radius,
        radial_cells: a.radial_cells,
        angular_cells: a.angular_cells,
    };
    quad.validate().map_err(run::physics)?;
    let rows = run::povm_rows(&channels, &quad)?;
    let Some(dir) = &a.out else {
        print!("{}", run::povm_table(&rows));
        return if rows.iter().all(run::PovmRow::pass) { Ok(Vec::new()) } else { Err(AppError::Threshold) };
    };
    // Echo the equivalent config so the files are self-describing.
    let mut table = toml::Table::new();
    table.insert("experiment".into(), "povm-check".into());
    let mut povm = toml::Table::new();
    let families: Vec<toml::Value> = a
        .family
        .iter()
        .map(|f| {
            let mut t = toml::Table::new();
            match f {
                Family::Gaussian => {
                    t.insert("family".into(), "gaussian".into());
                    t.insert("k".into(), a.k.into());
                    t.insert("tau".into(), a.tau.into());
                    t.insert("delta".into(), a.delta.into());
                    t.insert("quadrature".into(), "position".into());
                }
                Family::Dichotomous => {
                    t.insert("family".into(), "dichotomous".into());
                    t.insert("gamma".into(), a.gamma.into());
                }
                Family::Fluorescence => {
                    t.insert("family".into(), "fluorescence".into());
                    t.insert("gamma1".into(), a.gamma1.into());
                }
            }
            toml::Value::Table(t)
        })
        .collect();
    povm.insert("channels".into(), families.into());
    povm.insert("dt".into(), a.dt.into());
    let mut q = toml::Table::new();
    if let Some(h) = a.half_width {
        q.insert("gaussian_half_width".into(), h.into());
    }
    q.insert("gaussian_points".into(), (a.points as i64).into());
    q.insert("fluorescence_radius".into(), a.radius.into());
    q.insert("radial_cells".into(), (a.radial_cells as i64).into());
    q.insert("angular_cells".into(), (a.angular_cells as i64).into());
    povm.insert("quadrature".into(), q.into());
    table.insert("povm".into(), povm.into());
    let config_toml = toml::to_string(&table).map_err(|e| AppError::Config(e.to_string()))?;
    let ctx = run::Context {
        experiment: "povm-check",
        out_dir: dir,
        config_toml: &config_toml,
        config_table: &table,
        version: version(),
        started,
    };
    run::povm_files(&rows, &ctx)
}
