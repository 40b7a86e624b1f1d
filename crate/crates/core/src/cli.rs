//! Command-line surface. Thin sequential driver: parse arguments and a flat
//! TOML config, hand off to the engine/experiments crates, and write artifacts
//! with provenance headers.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::engine::{run_day_traced, EngineError, Mode, RunConfig};
use crate::experiments::{
    compare_baselines, regression::ALL_PREDICTORS, regression::DEFAULT_PREDICTORS, run_sweep,
    standardized_regression, ExperimentError, SweepResult, SweepSpec,
};
use crate::scenario::{generate_grid, load_scenario, GridSpec, Scenario};

pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Run(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "urbanswarm", version, about = "Stigmergy-driven waste collection simulator")]
pub struct Cli {
    /// Directory artifacts are written to.
    #[arg(long, global = true, env = "URBANSWARM_OUT", default_value = ".")]
    pub out_dir: PathBuf,
    /// Print config warnings and progress notes.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a grid scenario file.
    GenScenario(GenScenarioArgs),
    /// Execute a single simulated day and write metrics (and optionally a
    /// per-tick trace).
    Run(ConfigArgs),
    /// Execute the parameter sweep and write per-run and per-cell CSVs.
    Sweep(ConfigArgs),
    /// Run MPF, CPF and truck over paired seeds and write the comparison.
    Compare(ConfigArgs),
    /// Fit the standardized regression over a sweep CSV.
    Regress(RegressArgs),
}

#[derive(Debug, Args)]
pub struct GenScenarioArgs {
    #[arg(long, default_value_t = 20)]
    pub rows: u32,
    #[arg(long, default_value_t = 20)]
    pub cols: u32,
    #[arg(long, default_value_t = 100.0)]
    pub edge_len: f64,
    #[arg(long, default_value_t = 50)]
    pub bins: u32,
    #[arg(long, default_value_t = 0)]
    pub buildings: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file name, relative to the output directory.
    #[arg(long, default_value = "scenario.json")]
    pub output: String,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Flat TOML config file; omitted keys take their defaults.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Scenario JSON file; overrides the `scenario` config key.
    #[arg(short, long)]
    pub scenario: Option<PathBuf>,
    /// Override config keys, e.g. `--set robots=35`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Also write the per-tick trace CSV (run subcommand).
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct RegressArgs {
    /// Sweep CSV produced by the sweep subcommand.
    #[arg(short, long)]
    pub input: PathBuf,
    /// Include evaporation_rate and exploitation_rate as predictors.
    #[arg(long)]
    pub all_predictors: bool,
    #[arg(long, default_value = "regression.toml")]
    pub output: String,
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    fs::create_dir_all(&cli.out_dir)
        .map_err(|e| CliError::Usage(format!("cannot create output directory: {e}")))?;
    match &cli.command {
        Command::GenScenario(args) => gen_scenario(&cli, args),
        Command::Run(args) => run(&cli, args),
        Command::Sweep(args) => sweep(&cli, args),
        Command::Compare(args) => compare(&cli, args),
        Command::Regress(args) => regress(&cli, args),
    }
}

fn gen_scenario(cli: &Cli, args: &GenScenarioArgs) -> Result<(), CliError> {
    let spec = GridSpec {
        rows: args.rows as usize,
        cols: args.cols as usize,
        edge_len: args.edge_len,
        n_bins: args.bins as usize,
        n_buildings: args.buildings as usize,
        seed: args.seed,
    };
    let scenario = generate_grid(spec)
        .map_err(|e| CliError::Config(e.to_string()))?
        .with_meta(serde_json::json!({
            "artifact_version": ARTIFACT_VERSION,
            "generator": "grid",
            "rows": args.rows,
            "cols": args.cols,
            "edge_len": args.edge_len,
            "bins": args.bins,
            "buildings": args.buildings,
            "seed": args.seed,
        }));
    let path = cli.out_dir.join(&args.output);
    write_file(&path, scenario.to_json())?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Everything a run-like subcommand pulls out of its config file.
#[derive(Debug)]
struct LoadedConfig {
    run: RunConfig,
    sweep: SweepSpec,
    scenario_path: Option<PathBuf>,
    trace: bool,
    replications: u32,
    base_seed: u64,
}

/// Keys consumed by the driver rather than by `RunConfig`.
const SWEEP_KEYS: [&str; 5] = [
    "sweep_robots",
    "sweep_evaporation_rate",
    "sweep_exploitation_rate",
    "sweep_unit_size_l",
    "sweep_deposits",
];

fn load_config(args: &ConfigArgs) -> Result<LoadedConfig, CliError> {
    let mut table = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => toml::Table::new(),
    };

    for pair in &args.overrides {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("override `{pair}` is not KEY=VALUE")))?;
        table.insert(key.trim().to_string(), parse_override_value(value.trim()));
    }

    let take = |table: &mut toml::Table, key: &str| table.remove(key);

    let scenario_path = match args.scenario.clone() {
        Some(p) => Some(p),
        None => take(&mut table, "scenario")
            .map(|v| match v {
                toml::Value::String(s) => Ok(PathBuf::from(s)),
                other => Err(CliError::Config(format!("config key `scenario`: expected a path string, got {other}"))),
            })
            .transpose()?,
    };
    let trace = args.trace
        || matches!(take(&mut table, "trace"), Some(toml::Value::Boolean(true)));

    let mut sweep = SweepSpec::default();
    let list_f64 = |v: toml::Value, key: &str| -> Result<Vec<f64>, CliError> {
        v.try_into::<Vec<f64>>()
            .map_err(|e| CliError::Config(format!("config key `{key}`: {e}")))
    };
    for key in SWEEP_KEYS {
        let Some(value) = take(&mut table, key) else { continue };
        match key {
            "sweep_robots" => {
                sweep.robots = value
                    .try_into::<Vec<u32>>()
                    .map_err(|e| CliError::Config(format!("config key `{key}`: {e}")))?
            }
            "sweep_deposits" => {
                sweep.deposits = value
                    .try_into::<Vec<u32>>()
                    .map_err(|e| CliError::Config(format!("config key `{key}`: {e}")))?
            }
            "sweep_evaporation_rate" => sweep.evaporation_rate = list_f64(value, key)?,
            "sweep_exploitation_rate" => sweep.exploitation_rate = list_f64(value, key)?,
            "sweep_unit_size_l" => sweep.unit_size_l = list_f64(value, key)?,
            _ => unreachable!(),
        }
    }
    let scalar = |table: &mut toml::Table, key: &str, default: i64| -> Result<i64, CliError> {
        match table.remove(key) {
            None => Ok(default),
            Some(toml::Value::Integer(n)) if n >= 0 => Ok(n),
            Some(other) => {
                Err(CliError::Config(format!("config key `{key}`: expected a non-negative integer, got {other}")))
            }
        }
    };
    sweep.replications = scalar(&mut table, "replications", 10)? as u32;
    sweep.base_seed = scalar(&mut table, "base_seed", 0)? as u64;
    sweep.parallelism = scalar(&mut table, "parallelism", 0)? as usize;

    let run: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e| CliError::Config(e.to_string()))?;
    run.validate().map_err(|e| CliError::Config(e.to_string()))?;

    Ok(LoadedConfig {
        replications: sweep.replications,
        base_seed: sweep.base_seed,
        sweep: SweepSpec { base: run.clone(), ..sweep },
        run,
        scenario_path,
        trace,
    })
}

/// `--set` values are parsed as TOML, falling back to a bare string.
fn parse_override_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn load_scenario_arc(path: Option<&PathBuf>) -> Result<(Arc<Scenario>, PathBuf), CliError> {
    let path = path
        .cloned()
        .ok_or_else(|| CliError::Config("no scenario given (config key `scenario` or --scenario)".into()))?;
    let scenario =
        load_scenario(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((Arc::new(scenario), path))
}

fn emit_warnings(cli: &Cli, run: &RunConfig) {
    if let Ok(warnings) = run.validate() {
        for w in warnings {
            eprintln!("warning: {w}");
        }
    }
    if cli.verbose {
        eprintln!("config: {}", config_echo(run));
    }
}

/// Single-line config echo for provenance headers.
fn config_echo(run: &RunConfig) -> String {
    serde_json::to_string(run).expect("config serialization cannot fail")
}

fn header_lines(subcommand: &str, run: &RunConfig, scenario_path: &Path) -> Vec<String> {
    vec![
        format!("urbanswarm {subcommand} artifact v{ARTIFACT_VERSION}"),
        format!("scenario: {}", scenario_path.display()),
        format!("config: {}", config_echo(run)),
    ]
}

fn write_file(path: &Path, contents: String) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))
}

fn toml_block<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    toml::to_string(value).map_err(|e| CliError::Run(e.to_string()))
}

fn run(cli: &Cli, args: &ConfigArgs) -> Result<(), CliError> {
    let loaded = load_config(args)?;
    let (scenario, scenario_path) = load_scenario_arc(loaded.scenario_path.as_ref())?;
    emit_warnings(cli, &loaded.run);

    let headers = header_lines("run", &loaded.run, &scenario_path);
    let mut trace_rows = Vec::new();
    let metrics = run_day_traced(&loaded.run, &scenario, |row| {
        if loaded.trace {
            trace_rows.push(row);
        }
    })
    .map_err(engine_error)?;

    let mut out = String::new();
    for line in &headers {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str("\n[metrics]\n");
    out.push_str(&toml_block(&metrics)?);
    out.push_str("\n[config]\n");
    out.push_str(&toml_block(&loaded.run)?);
    let metrics_path = cli.out_dir.join("metrics.toml");
    write_file(&metrics_path, out)?;
    println!("wrote {}", metrics_path.display());

    if loaded.trace {
        let mut csv = String::new();
        for line in &headers {
            csv.push_str(&format!("# {line}\n"));
        }
        csv.push_str(
            "tick,uncollected_liters,full_bins,robots_wandering,robots_carrying,robots_recharging,delivered_liters\n",
        );
        for r in &trace_rows {
            csv.push_str(&format!(
                "{},{:.3},{},{},{},{},{:.3}\n",
                r.tick,
                r.uncollected_liters,
                r.full_bins,
                r.robots_wandering,
                r.robots_carrying,
                r.robots_recharging,
                r.delivered_liters
            ));
        }
        let trace_path = cli.out_dir.join("trace.csv");
        write_file(&trace_path, csv)?;
        println!("wrote {}", trace_path.display());
    }
    Ok(())
}

fn sweep(cli: &Cli, args: &ConfigArgs) -> Result<(), CliError> {
    let loaded = load_config(args)?;
    let (scenario, scenario_path) = load_scenario_arc(loaded.scenario_path.as_ref())?;
    emit_warnings(cli, &loaded.sweep.base);

    let result = run_sweep(&loaded.sweep, &scenario).map_err(experiment_error)?;
    let mut headers = header_lines("sweep", &loaded.sweep.base, &scenario_path);
    headers.push(format!(
        "grid: robots={:?} evaporation_rate={:?} exploitation_rate={:?} unit_size_l={:?} deposits={:?} replications={} base_seed={}",
        loaded.sweep.robots,
        loaded.sweep.evaporation_rate,
        loaded.sweep.exploitation_rate,
        loaded.sweep.unit_size_l,
        loaded.sweep.deposits,
        loaded.sweep.replications,
        loaded.sweep.base_seed,
    ));
    if result.failures() > 0 {
        eprintln!("warning: {} of {} runs failed; see the error column", result.failures(), result.rows.len());
    }

    let mut buf = Vec::new();
    result
        .write_csv(&mut buf, &headers)
        .map_err(|e| CliError::Run(e.to_string()))?;
    let csv_path = cli.out_dir.join("sweep.csv");
    write_file(&csv_path, String::from_utf8(buf).expect("csv output is utf-8"))?;
    println!("wrote {}", csv_path.display());

    let mut summary = String::new();
    for line in &headers {
        summary.push_str(&format!("# {line}\n"));
    }
    summary.push_str(
        "robots,evaporation_rate,exploitation_rate,unit_size_l,deposits,runs,failures,aut_mean,aut_sd,ftb_mean,ftb_sd\n",
    );
    for c in result.summarize() {
        summary.push_str(&format!(
            "{},{},{},{},{},{},{},{:.12},{:.12},{:.12},{:.12}\n",
            c.robots,
            c.evaporation_rate,
            c.exploitation_rate,
            c.unit_size_l,
            c.deposits,
            c.runs,
            c.failures,
            c.aut_mean,
            c.aut_sd,
            c.ftb_mean,
            c.ftb_sd
        ));
    }
    let summary_path = cli.out_dir.join("sweep_summary.csv");
    write_file(&summary_path, summary)?;
    println!("wrote {}", summary_path.display());
    Ok(())
}

fn compare(cli: &Cli, args: &ConfigArgs) -> Result<(), CliError> {
    let loaded = load_config(args)?;
    let (scenario, scenario_path) = load_scenario_arc(loaded.scenario_path.as_ref())?;
    emit_warnings(cli, &loaded.run);

    let mpf = RunConfig { mode: Mode::Mpf, ..loaded.run.clone() };
    let cpf = RunConfig { mode: Mode::Cpf, deposits: 1, ..loaded.run.clone() };
    let truck = RunConfig { mode: Mode::Truck, robots: 0, ..loaded.run.clone() };
    let report = compare_baselines(
        &scenario,
        &mpf,
        &cpf,
        &truck,
        loaded.replications,
        loaded.base_seed,
    )
    .map_err(experiment_error)?;

    let mut out = String::new();
    for line in header_lines("compare", &loaded.run, &scenario_path) {
        out.push_str(&format!("# {line}\n"));
    }
    out.push_str(&toml_block(&report)?);
    let path = cli.out_dir.join("compare.toml");
    write_file(&path, out)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn regress(cli: &Cli, args: &RegressArgs) -> Result<(), CliError> {
    let file = fs::File::open(&args.input)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.input.display())))?;
    let result = SweepResult::read_csv(file)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.input.display())))?;
    let predictors: Vec<String> = if args.all_predictors {
        ALL_PREDICTORS.iter().map(|s| s.to_string()).collect()
    } else {
        DEFAULT_PREDICTORS.iter().map(|s| s.to_string()).collect()
    };
    let excluded = result.failures();
    if excluded > 0 {
        eprintln!("note: excluding {excluded} failed rows from the regression");
    }
    let report = standardized_regression(&result.rows, &predictors)
        .map_err(|e| CliError::Run(e.to_string()))?;

    let mut out = String::new();
    out.push_str(&format!("# urbanswarm regress artifact v{ARTIFACT_VERSION}\n"));
    out.push_str(&format!("# input: {}\n", args.input.display()));
    out.push_str(&format!("# predictors: {}\n", predictors.join(", ")));
    out.push_str(&format!("# rows used: {} (excluded failures: {excluded})\n", report.rows_used));
    out.push_str(&toml_block(&report)?);
    let path = cli.out_dir.join(&args.output);
    write_file(&path, out)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn engine_error(e: EngineError) -> CliError {
    match e {
        EngineError::Config(c) => CliError::Config(c.to_string()),
        other => CliError::Run(other.to_string()),
    }
}

fn experiment_error(e: ExperimentError) -> CliError {
    match e {
        ExperimentError::Engine(inner) => engine_error(inner),
        ExperimentError::InvalidSpec(m) => CliError::Config(m),
        other => CliError::Run(other.to_string()),
    }
}
