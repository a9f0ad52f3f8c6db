use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use jobshop_core::harness::{
    evaluate, generate_dataset, timing_report, write_anytime_curves, write_training_curve,
    write_violation_distribution, EvalOptions, GenSpec, Labeler, SlowdownPolicy, TtmOptions,
};
use jobshop_core::heuristics::{dispatch, DispatchRule};
use jobshop_core::io::{
    format_jsplib, instance_digest, load_model, read_dataset, read_instance, save_model, write_dataset,
};
use jobshop_core::neural::{ArchitectureKind, JmDepths};
use jobshop_core::oracle::{match_time, solve_anytime, solve_exact, AnytimeOptions};
use jobshop_core::recovery::{recover, OrderingKey};
use jobshop_core::schedule::{check_feasible, makespan_int};
use jobshop_core::training::{
    hyperparameter_search, split_indices, train, DualAggregation, GridSpec, LossKind, MultiplierGranularity,
    TrainConfig,
};
use jobshop_core::Instance;

/// Exit status for invalid flag combinations detected after parsing.
struct UsageError(String);

impl std::fmt::Debug for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "jobshop", version, about = "Job shop scheduling with learned start-time predictions")]
struct Cli {
    /// Seed for every random choice made by the command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a JSPLIB file and print its summary.
    Parse { instance: PathBuf },
    /// Solve an instance with the reference solvers.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        time_limit: f64,
        /// Branch-and-bound instead of tabu search.
        #[arg(long)]
        exact: bool,
        /// Anytime curve as CSV.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Schedule with a priority dispatch rule.
    Heuristic {
        instance: PathBuf,
        /// spt, lwr, mwr, lor, mor or all.
        #[arg(long, default_value = "all")]
        rule: String,
    },
    /// Generate a labeled dataset from a root instance.
    Gen(GenArgs),
    /// Train one model.
    Train(TrainArgs),
    /// Grid search over learning rates, multiplier steps, architectures and losses.
    Search(SearchArgs),
    /// Predict start times for an instance.
    Predict { model: PathBuf, instance: PathBuf },
    /// Turn predicted start times into a feasible schedule.
    Recover {
        instance: PathBuf,
        /// JSON array of starts, or the output of `predict`.
        starts: PathBuf,
        #[arg(long, default_value = "half_end")]
        key: String,
    },
    /// Score a model on the held-out split of a dataset.
    Eval(EvalArgs),
    /// Time for the anytime solver to reach a target makespan.
    BenchTtm {
        instance: PathBuf,
        #[arg(long)]
        target: u64,
        #[arg(long, default_value_t = 10.0)]
        time_limit: f64,
        /// Number of solver seeds, starting at --seed.
        #[arg(long, default_value_t = 5)]
        runs: u64,
        /// Anytime curves as CSV.
        #[arg(long)]
        curves_out: Option<PathBuf>,
    },
    /// Per-stage wall-clock timings.
    Timing {
        dataset: PathBuf,
        #[command(flatten)]
        train: TrainFlags,
        #[arg(long, default_value = "half_end")]
        key: String,
    },
}

#[derive(Args)]
struct GenArgs {
    root: PathBuf,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, default_value_t = 1.0)]
    factor_min: f64,
    #[arg(long, default_value_t = 1.5)]
    factor_max: f64,
    /// Slow down this machine in every sample instead of a random one.
    #[arg(long)]
    fixed_machine: Option<usize>,
    /// Seconds per label.
    #[arg(long, default_value_t = 10.0)]
    time_limit: f64,
    /// exact or anytime.
    #[arg(long, default_value = "exact")]
    labeler: String,
    #[arg(long)]
    require_optimal: bool,
    /// Keep the solver's labels as found.
    #[arg(long)]
    no_canonicalize: bool,
}

#[derive(Args, Clone)]
struct TrainFlags {
    /// jm or fc.
    #[arg(long, default_value = "jm")]
    arch: String,
    /// mse or lagrangian.
    #[arg(long, default_value = "lagrangian")]
    loss: String,
    #[arg(long, default_value_t = 0.002)]
    alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    rho: f64,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    /// epoch_mean or last_batch.
    #[arg(long, default_value = "epoch_mean")]
    dual_agg: String,
    /// constraint or class.
    #[arg(long, default_value = "constraint")]
    granularity: String,
    #[arg(long, default_value_t = 2)]
    job_layers: usize,
    #[arg(long, default_value_t = 2)]
    machine_layers: usize,
    #[arg(long, default_value_t = 2)]
    shared_layers: usize,
    /// Fraction of samples used for training.
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
}

#[derive(Args)]
struct TrainArgs {
    dataset: PathBuf,
    #[command(flatten)]
    flags: TrainFlags,
    /// Per-epoch log as CSV.
    #[arg(long)]
    log_out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    dataset: PathBuf,
    #[command(flatten)]
    flags: TrainFlags,
    /// Comma-separated architectures.
    #[arg(long, default_value = "jm,fc")]
    archs: String,
    /// Comma-separated losses.
    #[arg(long, default_value = "mse,lagrangian")]
    losses: String,
    /// Number of evenly spaced learning rates across the allowed range.
    #[arg(long, default_value_t = 3)]
    alpha_steps: usize,
    /// Number of evenly spaced multiplier steps across the allowed range.
    #[arg(long, default_value_t = 3)]
    rho_steps: usize,
    /// Model seeds per configuration, starting at --seed.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Per-sample violations of every cell as CSV.
    #[arg(long)]
    violations_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    model: PathBuf,
    dataset: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value = "half_end")]
    key: String,
    /// Also measure time-to-match with this solver budget in seconds.
    #[arg(long)]
    ttm_limit: Option<f64>,
    #[arg(long, default_value_t = 5)]
    ttm_runs: u64,
}

fn parse<T: std::str::FromStr<Err = jobshop_core::Error>>(value: &str) -> Result<T> {
    value.parse::<T>().map_err(|e| usage(e.to_string()))
}

fn parse_enum<T: serde::de::DeserializeOwned>(value: &str, what: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(value.to_string()))
        .map_err(|_| usage(format!("unknown {what} `{value}`")))
}

impl TrainFlags {
    fn config(&self, seed: u64) -> Result<TrainConfig> {
        Ok(TrainConfig {
            alpha: self.alpha,
            rho: self.rho,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
            architecture: parse::<ArchitectureKind>(&self.arch)?,
            depths: JmDepths {
                job_layers: self.job_layers,
                machine_layers: self.machine_layers,
                shared_layers: self.shared_layers,
            },
            loss: parse::<LossKind>(&self.loss)?,
            dual_aggregation: parse_enum::<DualAggregation>(&self.dual_agg, "dual aggregation")?,
            granularity: parse_enum::<MultiplierGranularity>(&self.granularity, "multiplier granularity")?,
        })
    }
}

fn emit(out: &Option<PathBuf>, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn load_instance(path: &Path) -> Result<Instance> {
    read_instance(path).with_context(|| format!("reading {}", path.display()))
}

fn read_starts(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).context("starts must be JSON")?;
    let array = match &value {
        serde_json::Value::Object(map) => map
            .get("starts")
            .cloned()
            .context("expected a `starts` field")?,
        other => other.clone(),
    };
    Ok(serde_json::from_value(array).context("starts must be an array of numbers")?)
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Parse { instance } => {
            let inst = load_instance(&instance)?;
            emit(
                &cli.out,
                &serde_json::json!({
                    "jobs": inst.num_jobs(),
                    "machines": inst.num_machines(),
                    "tasks_per_job": inst.tasks_per_job(),
                    "total_work": inst.total_work(),
                    "lower_bound": inst.trivial_lower_bound(),
                    "sha256": instance_digest(&inst),
                    "jsplib": format_jsplib(&inst),
                }),
            )
        }
        Command::Solve {
            instance,
            time_limit,
            exact,
            trace_out,
        } => {
            let inst = load_instance(&instance)?;
            if !(time_limit > 0.0) {
                return Err(usage("--time-limit must be positive"));
            }
            let result = if exact {
                solve_exact(&inst, time_limit)?
            } else {
                solve_anytime(&inst, time_limit, seed)
            };
            if let Some(path) = trace_out {
                write_anytime_curves(create(&path)?, &[(seed, result.trace.clone())])?;
            }
            emit(
                &cli.out,
                &serde_json::json!({
                    "makespan": result.makespan,
                    "proved_optimal": result.proved_optimal,
                    "solver": if exact { "exact" } else { "anytime" },
                    "steps": result.steps,
                    "starts": result.starts(),
                }),
            )
        }
        Command::Heuristic { instance, rule } => {
            let inst = load_instance(&instance)?;
            let rules: Vec<DispatchRule> = if rule.eq_ignore_ascii_case("all") {
                DispatchRule::ALL.to_vec()
            } else {
                vec![parse::<DispatchRule>(&rule)?]
            };
            let rows: Vec<_> = rules
                .into_iter()
                .map(|r| {
                    let starts = dispatch(&inst, r).integer_starts().expect("dispatch is integral");
                    serde_json::json!({
                        "rule": r.to_string(),
                        "makespan": makespan_int(&inst, &starts),
                        "starts": starts,
                    })
                })
                .collect();
            emit(&cli.out, &rows)
        }
        Command::Gen(args) => {
            let root = load_instance(&args.root)?;
            let spec = GenSpec {
                num_samples: args.samples,
                policy: args.fixed_machine.map_or(SlowdownPolicy::PerSample, SlowdownPolicy::Fixed),
                factor_range: (args.factor_min, args.factor_max),
                label_time_limit: args.time_limit,
                seed,
                labeler: parse_enum::<Labeler>(&args.labeler, "labeler")?,
                require_optimal: args.require_optimal,
                canonicalize: !args.no_canonicalize,
                ..GenSpec::default()
            };
            spec.validate(&root).map_err(|e| usage(e.to_string()))?;
            let data = generate_dataset(&root, &spec)?;
            let proved = data
                .records
                .iter()
                .filter(|r| r.solver_status == jobshop_core::SolverStatus::ProvedOptimal)
                .count();
            match &cli.out {
                Some(path) => write_dataset(path, &data)?,
                None => {
                    let mut buf = Vec::new();
                    jobshop_core::io::write_dataset_to(&data, &mut buf)?;
                    std::io::stdout().write_all(&buf)?;
                }
            }
            eprintln!("{} samples, {proved} proved optimal", data.len());
            Ok(())
        }
        Command::Train(args) => {
            let data = read_dataset(&args.dataset)?;
            let config = args.flags.config(seed)?;
            let (train_idx, val_idx) = split_indices(data.len(), args.flags.train_fraction, seed);
            let outcome = train(&data, &train_idx, &val_idx, &config)?;
            if let Some(path) = &args.log_out {
                write_training_curve(create(path)?, &outcome.log)?;
            }
            match &cli.out {
                Some(path) => save_model(path, &outcome.artifact)?,
                None => {
                    let text = jobshop_core::io::model_to_string(&outcome.artifact)?;
                    std::io::stdout().write_all(text.as_bytes())?;
                }
            }
            if let Some(last) = outcome.log.last() {
                eprintln!(
                    "epoch {}: loss {:.6}, mean overlap violation {:.4}",
                    last.epoch, last.train_loss, last.mean_overlap_violation
                );
            }
            Ok(())
        }
        Command::Search(args) => {
            let data = read_dataset(&args.dataset)?;
            let base = args.flags.config(seed)?;
            let list = |s: &str| s.split(',').map(str::trim).filter(|v| !v.is_empty()).map(str::to_string).collect::<Vec<_>>();
            let grid = GridSpec {
                architectures: list(&args.archs).iter().map(|a| parse(a)).collect::<Result<_>>()?,
                losses: list(&args.losses).iter().map(|l| parse(l)).collect::<Result<_>>()?,
                alphas: GridSpec::evenly_spaced(
                    jobshop_core::training::ALPHA_RANGE.0,
                    jobshop_core::training::ALPHA_RANGE.1,
                    args.alpha_steps,
                ),
                rhos: GridSpec::evenly_spaced(
                    jobshop_core::training::RHO_RANGE.0,
                    jobshop_core::training::RHO_RANGE.1,
                    args.rho_steps,
                ),
                base,
            };
            grid.validate().map_err(|e| usage(e.to_string()))?;
            let (train_idx, val_idx) = split_indices(data.len(), args.flags.train_fraction, seed);
            let seeds: Vec<u64> = (0..args.seeds).map(|k| seed + k).collect();
            let result = hyperparameter_search(&data, &train_idx, &val_idx, &grid, &seeds, &EvalOptions::default())?;
            if let Some(path) = &args.violations_out {
                write_violation_distribution(create(path)?, &result)?;
            }
            emit(
                &cli.out,
                &serde_json::json!({
                    "best": result.best,
                    "configs": result.configs,
                }),
            )
        }
        Command::Predict { model, instance } => {
            let artifact = load_model(&model)?;
            let inst = load_instance(&instance)?;
            let starts = artifact.model.predict(inst.durations())?;
            emit(&cli.out, &serde_json::json!({ "starts": starts }))
        }
        Command::Recover { instance, starts, key } => {
            let inst = load_instance(&instance)?;
            let predicted = read_starts(&starts)?;
            let outcome = recover(&inst, &predicted, parse::<OrderingKey>(&key)?)?;
            let (feasible, _) = check_feasible(&inst, &outcome.schedule)?;
            let int = outcome.schedule.integer_starts().expect("recovered schedules are integral");
            emit(
                &cli.out,
                &serde_json::json!({
                    "path": outcome.path,
                    "feasible": feasible,
                    "makespan": makespan_int(&inst, &int),
                    "starts": int,
                }),
            )
        }
        Command::Eval(args) => {
            let artifact = load_model(&args.model)?;
            let data = read_dataset(&args.dataset)?;
            // Score everything the model was not trained on; without training
            // metadata fall back to the seeded split.
            let test_idx: Vec<usize> = match &artifact.training {
                Some(meta) => (0..data.len()).filter(|i| !meta.train_indices.contains(i)).collect(),
                None => split_indices(data.len(), args.train_fraction, seed).1,
            };
            let opts = EvalOptions {
                key: parse::<OrderingKey>(&args.key)?,
                time_to_match: args.ttm_limit.map(|limit| TtmOptions {
                    time_limit: Duration::from_secs_f64(limit),
                    seeds: (0..args.ttm_runs).map(|k| seed + k).collect(),
                }),
            };
            let report = evaluate(&artifact, &data, &test_idx, &opts)?;
            emit(&cli.out, &report)
        }
        Command::BenchTtm {
            instance,
            target,
            time_limit,
            runs,
            curves_out,
        } => {
            let inst = load_instance(&instance)?;
            if !(time_limit > 0.0) || runs == 0 {
                return Err(usage("--time-limit and --runs must be positive"));
            }
            let mut curves = Vec::new();
            let mut times = Vec::new();
            for s in seed..seed + runs {
                let opts = AnytimeOptions {
                    time_limit: Duration::from_secs_f64(time_limit),
                    stop_at: Some(target),
                    ..AnytimeOptions::default()
                };
                let result = jobshop_core::oracle::solve_anytime_with(&inst, s, &opts);
                times.push(match_time(&result.trace, target));
                curves.push((s, result.trace));
            }
            if let Some(path) = curves_out {
                write_anytime_curves(create(&path)?, &curves)?;
            }
            let counted: Vec<f64> = times.iter().map(|t| t.unwrap_or(time_limit)).collect();
            emit(
                &cli.out,
                &serde_json::json!({
                    "target": target,
                    "seconds": times,
                    "median_seconds": jobshop_core::harness::median(counted),
                    "timeouts": times.iter().filter(|t| t.is_none()).count(),
                }),
            )
        }
        Command::Timing { dataset, train, key } => {
            let data = read_dataset(&dataset)?;
            let config = train.config(seed)?;
            let (train_idx, test_idx) = split_indices(data.len(), train.train_fraction, seed);
            let report = timing_report(&data, &train_idx, &test_idx, &config, parse::<OrderingKey>(&key)?)?;
            emit(&cli.out, &report)
        }
    }
}

fn configure_workers() -> Result<()> {
    if let Ok(value) = std::env::var("JOBSHOP_WORKERS") {
        let n: usize = value
            .parse()
            .map_err(|_| usage(format!("JOBSHOP_WORKERS must be a positive integer, got `{value}`")))?;
        if n == 0 {
            return Err(usage("JOBSHOP_WORKERS must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_workers().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
