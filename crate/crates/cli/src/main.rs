//! Command-line front end: full experiment runs from a TOML config, one-shot
//! feature selection on a CSV, and synthetic benchmark generation.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use afsbm::baselines::{
    cross_correlation_select, mutual_information_select, rfe_select, DEFAULT_MI_BINS,
};
use afsbm::dataset::{load_csv, write_csv, SplitSpec};
use afsbm::harness::{run_experiment, ExperimentConfig};
use afsbm::learners::{GbdtParams, LearnerConfig, Task};
use afsbm::selection::{run_afs_bm, AfsBmParams};
use afsbm::synthetic::{generate, SyntheticSpec};

#[derive(Parser)]
#[command(
    name = "afsbm",
    version,
    about = "Feature selection via adaptive binary masking, with baselines and an experiment harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full (selector × learner) experiment described by a TOML config
    Run(RunArgs),
    /// One-shot feature selection on a CSV file
    Select(SelectArgs),
    /// Generate the synthetic benchmark and write it as CSV
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// Also print the full JSON report to stdout
    #[arg(long)]
    json: bool,
    /// Write report.json/report.txt here, overriding the config
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    /// One of: cross_correlation, mutual_information, rfe, afs_bm
    #[arg(long)]
    method: String,
    /// CSV file with named feature columns and a target column
    #[arg(long)]
    data: PathBuf,
    /// Target column name
    #[arg(long)]
    target: String,
    /// Optional timestamp column (parsed, but ignored by selectors)
    #[arg(long)]
    timestamp: Option<String>,
    /// regression | binary_classification
    #[arg(long, default_value = "regression")]
    task: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Method parameters as key=value, e.g. --params gamma=0.05 or
    /// --params k=10; afs_bm accepts mu, beta, delta_l, max_outer_iterations
    #[arg(short = 'P', long = "params", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output CSV path (features x0.., target column `y`)
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    samples: usize,
    #[arg(long, default_value_t = 100)]
    features: usize,
    #[arg(long, default_value_t = 10)]
    informative: usize,
    #[arg(long, default_value_t = 0.1)]
    noise_variance: f64,
    /// Lower edge of the feature distribution (must stay positive)
    #[arg(long, default_value_t = 1e-3)]
    low: f64,
    #[arg(long, default_value_t = 1.0)]
    high: f64,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Select(args) => select(args),
        Command::Synth(args) => synth(args),
    }
}

/// Prints to stdout, treating a closed pipe (e.g. `afsbm ... | head`) as
/// success instead of a panic.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(e).context("writing to stdout"),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = ExperimentConfig::load(&args.config)
        .with_context(|| format!("loading config {}", args.config.display()))?;
    if let Some(dir) = args.output_dir {
        config.output_dir = Some(dir);
    }
    let report = run_experiment(&config).context("experiment failed")?;
    emit(&report.render_table())?;
    if let Some(dir) = &config.output_dir {
        eprintln!("report written to {}", dir.display());
    }
    if args.json {
        emit(&report.to_json()?)?;
        emit("\n")?;
    }
    Ok(())
}

fn parse_task(name: &str) -> Result<Task> {
    match name {
        "regression" => Ok(Task::Regression),
        "binary_classification" => Ok(Task::BinaryClassification),
        other => bail!("unknown task {other:?}; use regression or binary_classification"),
    }
}

/// `key=value` pairs into a map; duplicate keys are an error.
fn parse_params(pairs: &[String]) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for pair in pairs {
        let Some((key, value)) = pair.split_once('=') else {
            bail!("parameter {pair:?} is not of the form key=value");
        };
        if map.insert(key.trim().to_string(), value.trim().to_string()).is_some() {
            bail!("parameter {key:?} given twice");
        }
    }
    Ok(map)
}

fn take_parsed<T: std::str::FromStr>(
    params: &mut BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match params.remove(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|e| anyhow::anyhow!("parameter {key}={raw}: {e}")),
    }
}

fn require<T>(value: Option<T>, key: &str, example: &str) -> Result<T> {
    value.ok_or_else(|| anyhow::anyhow!("method needs --params {key}=... (e.g. {example})"))
}

fn reject_leftovers(params: BTreeMap<String, String>) -> Result<()> {
    if let Some(key) = params.into_keys().next() {
        bail!("unknown parameter {key:?} for this method");
    }
    Ok(())
}

fn select(args: SelectArgs) -> Result<()> {
    let task = parse_task(&args.task)?;
    let data = load_csv(&args.data, &args.target, args.timestamp.as_deref())
        .with_context(|| format!("loading {}", args.data.display()))?;
    let mut params = parse_params(&args.params)?;
    let x = data.features().view();
    let y = data.targets().view();

    let output = match args.method.as_str() {
        "cross_correlation" => {
            let gamma = require(take_parsed(&mut params, "gamma")?, "gamma", "gamma=0.05")?;
            reject_leftovers(params)?;
            let sel = cross_correlation_select(x, y, gamma)?;
            selection_json(&args.method, &data, &sel.mask, serde_json::json!({ "gamma": gamma }))
                .tap_insert("scores", serde_json::json!(sel.scores))
        }
        "mutual_information" => {
            let k = require(take_parsed(&mut params, "k")?, "k", "k=10")?;
            let bins = take_parsed(&mut params, "bins")?.unwrap_or(DEFAULT_MI_BINS);
            reject_leftovers(params)?;
            let sel = mutual_information_select(x, y, k, bins, task)?;
            selection_json(
                &args.method,
                &data,
                &sel.mask,
                serde_json::json!({ "k": k, "bins": bins }),
            )
            .tap_insert("scores", serde_json::json!(sel.scores))
        }
        "rfe" => {
            let k = require(take_parsed(&mut params, "k")?, "k", "k=10")?;
            reject_leftovers(params)?;
            let learner = LearnerConfig::gbdt(task, GbdtParams::default(), args.seed);
            let sel = rfe_select(&learner, x, y, k)?;
            selection_json(&args.method, &data, &sel.mask, serde_json::json!({ "k": k }))
                .tap_insert("scores", serde_json::json!(sel.scores))
        }
        "afs_bm" => {
            let defaults = AfsBmParams::default();
            let afs = AfsBmParams {
                mu: take_parsed(&mut params, "mu")?.unwrap_or(defaults.mu),
                beta: take_parsed(&mut params, "beta")?.unwrap_or(defaults.beta),
                delta_l: take_parsed(&mut params, "delta_l")?.unwrap_or(defaults.delta_l),
                seed: args.seed,
                max_outer_iterations: take_parsed(&mut params, "max_outer_iterations")?
                    .unwrap_or(defaults.max_outer_iterations),
            };
            reject_leftovers(params)?;
            // the wrapper needs a held-out mask-validation split
            let split = SplitSpec {
                seed: args.seed,
                ..SplitSpec::default()
            };
            let splits = data.split(&split)?;
            let learner = LearnerConfig::gbdt(task, GbdtParams::default(), args.seed);
            let sel = run_afs_bm(&learner, &splits.train, &splits.mask_val, &afs)?;
            let mut v = selection_json(&args.method, &data, &sel.mask, serde_json::to_value(&afs)?);
            v["selection"] = serde_json::to_value(&sel)?;
            v
        }
        other => bail!(
            "unknown method {other:?}; use cross_correlation, mutual_information, rfe, or afs_bm"
        ),
    };
    emit(&serde_json::to_string_pretty(&output)?)?;
    emit("\n")?;
    Ok(())
}

fn selection_json(
    method: &str,
    data: &afsbm::dataset::Dataset,
    mask: &afsbm::dataset::BinaryMask,
    params: serde_json::Value,
) -> serde_json::Value {
    let names = data.feature_names();
    let selected: Vec<&str> = mask
        .active_indices()
        .into_iter()
        .map(|i| names[i].as_str())
        .collect();
    serde_json::json!({
        "method": method,
        "params": params,
        "total_features": names.len(),
        "selected_count": selected.len(),
        "selected_features": selected,
        "mask_bits": mask.bits(),
    })
}

/// Small helper to append a key to a JSON object inline.
trait TapInsert {
    fn tap_insert(self, key: &str, value: serde_json::Value) -> serde_json::Value;
}

impl TapInsert for serde_json::Value {
    fn tap_insert(mut self, key: &str, value: serde_json::Value) -> serde_json::Value {
        self[key] = value;
        self
    }
}

fn synth(args: SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n_samples: args.samples,
        n_features: args.features,
        n_informative: args.informative,
        noise_variance: args.noise_variance,
        feature_low: args.low,
        feature_high: args.high,
        seed: args.seed,
    };
    let (data, informative) = generate(&spec)?;
    write_csv(&data, "y", &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "wrote {} rows × {} features to {} (informative: x0..x{})",
        data.n_rows(),
        data.n_features(),
        args.out.display(),
        informative.len() - 1
    );
    Ok(())
}
