//! `retail-sim`: run single replications, preset experiments, and the
//! ANOVA/Tukey analysis over results files.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 bad configuration or input
//! file, 3 the simulation itself failed (a model bug).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{SecondsFormat, Utc};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use retail_sim::experiments::{
    run_replication, run_sweep, ConfigError, Execution, Experiment, ModelError, ScenarioConfig,
};
use retail_sim::report::{analyze, anova_text, descriptives_csv, ReportError, ResultTable};

const SEED_ENV: &str = "RETAIL_SIM_SEED";

#[derive(Parser)]
#[command(name = "retail-sim", version, about = "Retail department simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one replication and write a single results row.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a preset sweep: empowerment, learning or development.
    Experiment {
        name: Experiment,
        #[command(flatten)]
        run: RunArgs,
        /// Replications per level.
        #[arg(long, default_value_t = 20)]
        reps: u32,
        /// Worker threads; 1 runs serially. Defaults to every core.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Analyse an existing results CSV.
    Stats {
        results: PathBuf,
        /// Dependent variables, comma separated.
        #[arg(long, value_delimiter = ',', required_unless_present = "preset")]
        vars: Vec<String>,
        /// Use the dependent variables of a preset experiment.
        #[arg(long, conflicts_with = "vars")]
        preset: Option<Experiment>,
        /// Family-wise alpha, divided across the dependent variables.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Write anova.txt and descriptives.csv here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default configuration as JSON.
    DefaultConfig,
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed. Falls back to $RETAIL_SIM_SEED, then the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Dotted-path override, e.g. --set customers.p_expert_need=0.3
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Io(String),
    Input(String),
    Model(ModelError),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Input(_) => 2,
            Failure::Model(ModelError::Config(_)) => 2,
            Failure::Model(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Io(m) | Failure::Input(m) => f.write_str(m),
            Failure::Model(e) => write!(f, "simulation failed: {e}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::Model(e)
    }
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: String,
    config_digest: String,
    master_seed: u64,
    seed_source: &'static str,
    /// Raw value of the seed environment variable, whether or not it won.
    env_seed: Option<String>,
    started_at: String,
    finished_at: String,
    outputs: Vec<PathBuf>,
}

struct Prepared {
    cfg: ScenarioConfig,
    seed_source: &'static str,
    env_seed: Option<String>,
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn load_config(args: &RunArgs) -> Result<Prepared, Failure> {
    let base = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            ScenarioConfig::from_json(&text)?
        }
        None => ScenarioConfig::default(),
    };
    let mut cfg = base.with_overrides(&args.overrides)?;

    let env_seed = std::env::var(SEED_ENV).ok();
    let seed_source = if let Some(seed) = args.seed {
        cfg.master_seed = seed;
        "flag"
    } else if let Some(raw) = &env_seed {
        cfg.master_seed = raw
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("{SEED_ENV}={raw:?} is not a u64")))?;
        "env"
    } else {
        "config"
    };
    Ok(Prepared {
        cfg,
        seed_source,
        env_seed,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn write_manifest(dir: &Path, command: String, prep: &Prepared, started_at: String, mut outputs: Vec<PathBuf>) -> Result<(), Failure> {
    let path = dir.join("manifest.json");
    outputs.push(path.clone());
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_digest: prep.cfg.digest(),
        master_seed: prep.cfg.master_seed,
        seed_source: prep.seed_source,
        env_seed: prep.env_seed.clone(),
        started_at,
        finished_at: now(),
        outputs,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&path, &(json + "\n"))
}

fn simulate(args: &RunArgs) -> Result<(), Failure> {
    let started_at = now();
    let prep = load_config(args)?;
    let result = run_replication(&prep.cfg, 0.0, 0)?;
    fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    let csv_path = args.out.join("result.csv");
    write(&csv_path, &ResultTable::from_results(&[result]).to_csv())?;
    write_manifest(&args.out, "simulate".into(), &prep, started_at, vec![csv_path])
}

fn experiment(name: Experiment, args: &RunArgs, reps: u32, jobs: Option<usize>) -> Result<(), Failure> {
    let started_at = now();
    let prep = load_config(args)?;
    let spec = name.sweep(&prep.cfg, reps);
    spec.validate()?;
    let exec = match jobs {
        None => Execution::Parallel,
        Some(0) => return Err(Failure::Input("--jobs must be at least 1".into())),
        Some(1) => Execution::Serial,
        Some(n) => Execution::ParallelJobs(n),
    };
    let results = run_sweep(&spec, exec)?;

    // Analyse the CSV text itself so `stats` on the written file agrees.
    let csv = ResultTable::from_results(&results).to_csv();
    let table = ResultTable::parse_csv(&csv)?;
    let vars: Vec<&str> = name.dependent_vars().iter().map(|v| v.name()).collect();
    let analysis = analyze(&table, &vars, 0.05)?;

    fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    let outputs = vec![
        args.out.join("results.csv"),
        args.out.join("descriptives.csv"),
        args.out.join("anova.txt"),
    ];
    write(&outputs[0], &csv)?;
    write(&outputs[1], &descriptives_csv(&table, &vars)?)?;
    write(&outputs[2], &anova_text(&analysis))?;
    write_manifest(&args.out, format!("experiment {name}"), &prep, started_at, outputs)
}

fn stats(results: &Path, vars: &[String], preset: Option<Experiment>, alpha: f64, out: Option<&Path>) -> Result<(), Failure> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Failure::Input(format!("--alpha {alpha} must lie in (0, 1)")));
    }
    let text = fs::read_to_string(results).map_err(|e| Failure::Input(format!("{}: {e}", results.display())))?;
    let table = ResultTable::parse_csv(&text)?;
    let vars: Vec<String> = match preset {
        Some(p) => p.dependent_vars().iter().map(|v| v.name().to_string()).collect(),
        None => vars.to_vec(),
    };
    let vars: Vec<&str> = vars.iter().map(String::as_str).collect();
    let report = anova_text(&analyze(&table, &vars, alpha)?);
    match out {
        None => print!("{report}"),
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
            write(&dir.join("anova.txt"), &report)?;
            write(&dir.join("descriptives.csv"), &descriptives_csv(&table, &vars)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate { run } => simulate(run),
        Command::Experiment { name, run, reps, jobs } => experiment(*name, run, *reps, *jobs),
        Command::Stats {
            results,
            vars,
            preset,
            alpha,
            out,
        } => stats(results, vars, *preset, *alpha, out.as_deref()),
        Command::DefaultConfig => {
            println!("{}", ScenarioConfig::default().to_json_pretty());
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
