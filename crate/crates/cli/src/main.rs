#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Parser, Subcommand};
use realisable::harness::{
    csv, rate_table, replication_seed, run_estimator, run_scenario, CellData, EstimatorEntry,
    GroupField, RunOptions, ScenarioConfig,
};
use realisable::models::dump::Dataset;
use realisable::multivariate::DescentConfig;
use realisable::{Error, Result};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Mean and regression estimation under missing-data contamination.
#[derive(Parser)]
#[command(name = "realisable", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one TAB dump per grid cell and replication.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one estimator on a dump and print the estimate as JSON.
    Estimate {
        #[arg(long)]
        estimator: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON overrides for iterative_robust_descent, e.g. '{"a3": 10}'.
        #[arg(long)]
        descent: Option<String>,
    },
    /// Run a scenario and write one CSV row per cell, replication and estimator.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 1 runs serially.
        #[arg(long)]
        workers: Option<usize>,
        /// Fill the runtime_ms column (makes output run-dependent).
        #[arg(long)]
        timings: bool,
    },
    /// Empirical quantiles and log-log slopes from a results CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        out: PathBuf,
        /// Fields kept apart besides estimator and n (default: all).
        #[arg(long, value_delimiter = ',')]
        group_by: Option<Vec<String>>,
    },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    ScenarioConfig::from_json(&text)
}

fn generate(config: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let label = cfg.model.label();
    for cell in cfg.grid.cells() {
        let model = cfg.model.instantiate(&cell)?;
        for rep in 0..cfg.reps {
            let seed = replication_seed(cfg.seed, cell.index, rep);
            let ds = match model.sample(cell.n, seed)? {
                CellData::Vectors(rows) => Dataset::from_vectors(label, seed, &rows)?,
                CellData::Regression(x, z) => Dataset::from_regression(label, seed, &x, &z)?,
            };
            let path = out.join(format!("{label}_c{}_r{rep}.tsv", cell.index));
            let mut w = create(&path)?;
            ds.write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    name: &str,
    data: &Path,
    epsilon: f64,
    q: f64,
    sigma: f64,
    delta: f64,
    seed: u64,
    descent: Option<&str>,
) -> Result<()> {
    if !(0.0..1.0).contains(&epsilon)
        || !(q > 0.0 && q <= 1.0)
        || !(sigma > 0.0)
        || !(delta > 0.0 && delta <= 1.0)
    {
        return Err(Error::Config(format!(
            "need epsilon in [0, 1), q in (0, 1], sigma > 0, delta in (0, 1]; got {epsilon}, {q}, {sigma}, {delta}"
        )));
    }
    let descent = descent
        .map(|s| {
            serde_json::from_str::<DescentConfig>(s)
                .map_err(|e| Error::Config(format!("--descent: {e}")))
        })
        .transpose()?;
    let entry = match descent {
        Some(d) => EstimatorEntry::Detailed {
            name: name.to_string(),
            descent: Some(d),
        },
        None => EstimatorEntry::Name(name.to_string()),
    };
    let spec = entry.resolve()?;
    let ds = Dataset::read(open(data)?)?;
    let cell = if ds.is_regression() {
        let (x, z) = ds.regression()?;
        CellData::Regression(x, z)
    } else {
        CellData::Vectors(ds.vectors()?)
    };
    if matches!(cell, CellData::Vectors(_)) && spec.kind.regression() {
        return Err(Error::Config(format!(
            "estimator {name} needs a regression dump"
        )));
    }
    let est = run_estimator(&spec, &cell, epsilon, q, sigma, delta, seed)?;
    if est.theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite estimate {:?}",
            est.theta
        )));
    }
    let json = serde_json::json!({ "estimate": est.theta, "diagnostics": est.diagnostics });
    println!("{json}");
    Ok(())
}

fn simulate(config: &Path, out: &Path, workers: Option<usize>, timings: bool) -> Result<()> {
    let cfg = load_config(config)?;
    let opts = RunOptions { timings };
    let output = match workers {
        Some(w) => realisable::par::with_workers(w, || run_scenario(&cfg, opts))??,
        None => run_scenario(&cfg, opts)?,
    };
    for f in &output.failures {
        eprintln!("NA: {f}");
    }
    let mut w = create(out)?;
    csv::write_records(&mut w, &output.records)?;
    w.flush()?;
    Ok(())
}

fn parse_group(names: &[String]) -> Result<Vec<GroupField>> {
    names
        .iter()
        .map(|n| {
            serde_json::from_value(serde_json::Value::String(n.trim().to_string()))
                .map_err(|_| Error::Config(format!("unknown group field {n:?}")))
        })
        .collect()
}

fn report(input: &Path, delta: f64, out: &Path, group_by: Option<&[String]>) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Config(format!("delta = {delta} outside (0, 1]")));
    }
    let group = match group_by {
        Some(names) => parse_group(names)?,
        None => GroupField::ALL.to_vec(),
    };
    let records = csv::read_records(open(input)?)?;
    let table = rate_table(&records, &group, delta)?;
    let mut w = create(out)?;
    csv::write_rate_table(&mut w, &table)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { config, out } => generate(&config, &out),
        Command::Estimate {
            estimator,
            data,
            epsilon,
            q,
            sigma,
            delta,
            seed,
            descent,
        } => estimate(
            &estimator,
            &data,
            epsilon,
            q,
            sigma,
            delta,
            seed,
            descent.as_deref(),
        ),
        Command::Simulate {
            config,
            out,
            workers,
            timings,
        } => simulate(&config, &out, workers, timings),
        Command::Report {
            input,
            delta,
            out,
            group_by,
        } => report(&input, delta, &out, group_by.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
