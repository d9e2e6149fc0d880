use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use jumpgibbs::ctbn::{
    ctbn_sufficient_stats, run_ctbn_chain_with, CtbnChainConfig, CtbnObservations, CtbnProblem,
    CtbnStats, SweepOrder,
};
use jumpgibbs::diagnostics::{diagnostics_report, SufficientStats};
use jumpgibbs::experiments::{run_experiment, stream_rng, ExperimentConfig, ExperimentKind};
use jumpgibbs::io::{
    read_ctbn_model, read_ctbn_observations_csv, read_mjp_model, read_observations_csv,
    write_ctbn_trace_csv, write_json, write_trace_csv, SampleWriter, StatsWriter,
};
use jumpgibbs::oracles::{
    exact_posterior_marginals, exact_sufficient_stats, rejection_sample_endpoint,
    transition_matrix,
};
use jumpgibbs::process::{
    sufficient_stats, Interval, ObservationSet, UniformizationPolicy,
};
use jumpgibbs::sampler::{run_chain_with, ChainConfig, MjpProblem};
use jumpgibbs::Error;
use serde_json::json;

/// Posterior path sampling for Markov jump processes and continuous-time
/// Bayesian networks.
#[derive(Parser)]
#[command(name = "jumpgibbs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gibbs sampling of MJP paths given observations.
    Mjp(MjpArgs),
    /// Gibbs sampling of CTBN paths given per-node observations.
    Ctbn(CtbnArgs),
    /// Exact small-instance computations.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Predator-prey, chain-CTBN error and scaling experiments.
    Experiments(ExperimentArgs),
}

#[derive(Args)]
struct ChainArgs {
    /// Model file (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Observations file (CSV); omit for none.
    #[arg(long)]
    observations: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    t_start: f64,
    #[arg(long)]
    t_end: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Uniformization rate as a multiple of the largest leave rate (> 1).
    #[arg(long, default_value_t = 2.0)]
    omega_multiplier: f64,
    #[arg(long)]
    out: PathBuf,
    /// Also write every retained path to `paths.csv`.
    #[arg(long)]
    paths: bool,
}

#[derive(Args)]
struct MjpArgs {
    #[command(flatten)]
    common: ChainArgs,
    #[arg(long, default_value_t = 1100)]
    iterations: usize,
    #[arg(long, default_value_t = 100)]
    burn_in: usize,
    /// Compare against exact posterior statistics on this many integration
    /// steps.
    #[arg(long)]
    exact_resolution: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Ascending,
    Random,
}

#[derive(Args)]
struct CtbnArgs {
    #[command(flatten)]
    common: ChainArgs,
    #[arg(long, default_value_t = 1100)]
    sweeps: usize,
    #[arg(long, default_value_t = 100)]
    burn_in: usize,
    #[arg(long, value_enum, default_value_t = Order::Ascending)]
    order: Order,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Transition matrix exp(A t).
    Expm {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        t: f64,
    },
    /// Exact posterior marginals at the given times.
    Marginals {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        observations: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        t_start: f64,
        #[arg(long)]
        t_end: f64,
        /// Comma-separated query times.
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
    },
    /// Endpoint-conditioned paths by forward simulation and rejection.
    Reject {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        from: usize,
        #[arg(long)]
        to: usize,
        #[arg(long, default_value_t = 0.0)]
        t_start: f64,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 100_000)]
        max_attempts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact posterior expected dwell times and transition counts.
    Stats {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        observations: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        t_start: f64,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 10_000)]
        resolution: usize,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    which: Which,
    /// Config file (JSON); defaults to the built-in preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's sampler seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Lv,
    Chain,
    Scaling,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::InconsistentEvidence { .. } | Error::InconsistentNodeEvidence { .. }) => 3,
        Some(Error::AttemptsExhausted { .. }) => 4,
        Some(
            Error::Config(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::InvalidGenerator(_)
            | Error::InvalidDistribution(_)
            | Error::InvalidObservations(_)
            | Error::InvalidModel(_)
            | Error::InvalidPolicy(_)
            | Error::InvalidArgument(_)
            | Error::InvalidPath(_)
            | Error::OutOfDomain { .. },
        ) => 2,
        _ => 1,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Mjp(args) => run_mjp(args),
        Command::Ctbn(args) => run_ctbn(args),
        Command::Oracle(cmd) => run_oracle(cmd),
        Command::Experiments(args) => run_experiments(args),
    }
}

fn load_mjp(
    model: &Path,
    observations: Option<&Path>,
    t_start: f64,
    t_end: f64,
    policy: UniformizationPolicy<f64>,
) -> Result<MjpProblem<f64>> {
    let (generator, initial) =
        read_mjp_model(model).with_context(|| format!("reading {}", model.display()))?;
    let n = generator.n();
    let obs = match observations {
        Some(p) => read_observations_csv(p, n).with_context(|| format!("reading {}", p.display()))?,
        None => ObservationSet::empty(n),
    };
    Ok(MjpProblem::new(generator, initial, Interval::new(t_start, t_end)?, obs, policy)?)
}

fn run_mjp(args: MjpArgs) -> Result<()> {
    let c = &args.common;
    let policy = UniformizationPolicy::new(c.omega_multiplier)?;
    let problem = load_mjp(&c.model, c.observations.as_deref(), c.t_start, c.t_end, policy)?;
    let n = problem.n();
    let config = ChainConfig::new(args.iterations, args.burn_in)?;
    fs::create_dir_all(&c.out)?;

    let names = SufficientStats::<f64>::zeros(n).names();
    let mut stats_out = StatsWriter::create(&c.out.join("samples.csv"), &names)?;
    let mut paths_out = c.paths.then(|| SampleWriter::create(&c.out.join("paths.csv"))).transpose()?;
    let mut samples = Vec::with_capacity(config.retained());
    let mut failure = None;
    let mut rng = stream_rng(c.seed, 0);
    let trace = run_chain_with(&problem, &config, &mut rng, |it, path| {
        let result = (|| {
            let v = sufficient_stats(n, path)?.to_vec();
            stats_out.write(it, &v)?;
            if let Some(w) = paths_out.as_mut() {
                w.write(it, 0, path)?;
            }
            samples.push(v);
            Ok::<_, Error>(())
        })();
        if let Err(e) = result {
            failure.get_or_insert(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    stats_out.finish()?;
    if let Some(w) = paths_out {
        w.finish()?;
    }
    write_trace_csv(&c.out.join("trace.csv"), &trace)?;

    let truth = args
        .exact_resolution
        .map(|r| exact_sufficient_stats(&problem, r).map(|s| s.to_vec()))
        .transpose()?;
    let report = diagnostics_report(&names, &samples, truth.as_deref())?;
    let summary = json!({
        "iterations": args.iterations,
        "burn_in": args.burn_in,
        "seed": c.seed,
        "omega": problem.omega(),
        "mean_grid_size": mean_grid(trace.iter().map(|r| r.grid_size)),
        "elapsed_secs": trace.last().map(|r| r.elapsed_secs),
        "diagnostics": report,
    });
    write_json(&c.out.join("summary.json"), &summary)?;
    Ok(())
}

fn mean_grid(sizes: impl Iterator<Item = usize>) -> f64 {
    let (sum, count) = sizes.fold((0usize, 0usize), |(s, c), g| (s + g, c + 1));
    sum as f64 / count.max(1) as f64
}

fn run_ctbn(args: CtbnArgs) -> Result<()> {
    let c = &args.common;
    let policy = UniformizationPolicy::new(c.omega_multiplier)?;
    let model = read_ctbn_model(&c.model).with_context(|| format!("reading {}", c.model.display()))?;
    let obs = match &c.observations {
        Some(p) => read_ctbn_observations_csv(p, &model)
            .with_context(|| format!("reading {}", p.display()))?,
        None => CtbnObservations::empty(&model),
    };
    let problem = CtbnProblem::new(model, Interval::new(c.t_start, c.t_end)?, obs, policy)?;
    let mut config = CtbnChainConfig::new(args.sweeps, args.burn_in)?;
    config.order = match args.order {
        Order::Ascending => SweepOrder::Ascending,
        Order::Random => SweepOrder::RandomPermutation,
    };
    fs::create_dir_all(&c.out)?;

    let names = CtbnStats::zeros(&problem.model).names();
    let mut stats_out = StatsWriter::create(&c.out.join("samples.csv"), &names)?;
    let mut paths_out = c.paths.then(|| SampleWriter::create(&c.out.join("paths.csv"))).transpose()?;
    let mut samples = Vec::with_capacity(config.sweeps - config.burn_in);
    let mut failure = None;
    let mut rng = stream_rng(c.seed, 0);
    let trace = run_ctbn_chain_with(&problem, &config, &mut rng, |sweep, path| {
        let result = (|| {
            let v = ctbn_sufficient_stats(&problem.model, path).to_vec();
            stats_out.write(sweep, &v)?;
            if let Some(w) = paths_out.as_mut() {
                for (k, p) in path.paths().iter().enumerate() {
                    w.write(sweep, k, p)?;
                }
            }
            samples.push(v);
            Ok::<_, Error>(())
        })();
        if let Err(e) = result {
            failure.get_or_insert(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    stats_out.finish()?;
    if let Some(w) = paths_out {
        w.finish()?;
    }
    write_ctbn_trace_csv(&c.out.join("trace.csv"), &trace)?;
    let report = diagnostics_report(&names, &samples, None)?;
    let summary = json!({
        "sweeps": args.sweeps,
        "burn_in": args.burn_in,
        "seed": c.seed,
        "mean_grid_size": mean_grid(trace.iter().map(|r| r.grid_size)),
        "elapsed_secs": trace.last().map(|r| r.elapsed_secs),
        "diagnostics": report,
    });
    write_json(&c.out.join("summary.json"), &summary)?;
    Ok(())
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{}", serde_json::to_string_pretty(value)?) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn run_oracle(cmd: OracleCommand) -> Result<()> {
    let policy = UniformizationPolicy::default();
    match cmd {
        OracleCommand::Expm { model, t } => {
            let (generator, _) = read_mjp_model(&model)?;
            let p = transition_matrix(&generator, t)?;
            let rows: Vec<Vec<f64>> = (0..p.n()).map(|i| p.row(i).to_vec()).collect();
            print_json(&json!({ "t": t, "matrix": rows }))
        }
        OracleCommand::Marginals {
            model,
            observations,
            t_start,
            t_end,
            times,
        } => {
            let problem = load_mjp(&model, observations.as_deref(), t_start, t_end, policy)?;
            let post = exact_posterior_marginals(&problem, &times)?;
            let rows: Vec<_> = (0..post.len())
                .map(|i| json!({ "time": post.times()[i], "marginal": post.marginal(i) }))
                .collect();
            print_json(&json!(rows))
        }
        OracleCommand::Reject {
            model,
            from,
            to,
            t_start,
            t_end,
            samples,
            max_attempts,
            seed,
            out,
        } => {
            let (generator, _) = read_mjp_model(&model)?;
            let interval = Interval::new(t_start, t_end)?;
            fs::create_dir_all(&out)?;
            let mut rng = stream_rng(seed, 0);
            let mut writer = SampleWriter::create(&out.join("paths.csv"))?;
            let mut attempts = 0usize;
            for i in 0..samples {
                let draw = rejection_sample_endpoint(&generator, from, to, interval, max_attempts, &mut rng)?;
                attempts += draw.rejections + 1;
                writer.write(i, 0, &draw.path)?;
            }
            writer.finish()?;
            let exact = transition_matrix(&generator, t_end - t_start)?.get(from, to);
            let summary = json!({
                "samples": samples,
                "attempts": attempts,
                "acceptance_rate": samples as f64 / attempts.max(1) as f64,
                "exact_transition_probability": exact,
            });
            write_json(&out.join("summary.json"), &summary)?;
            print_json(&summary)
        }
        OracleCommand::Stats {
            model,
            observations,
            t_start,
            t_end,
            resolution,
        } => {
            let problem = load_mjp(&model, observations.as_deref(), t_start, t_end, policy)?;
            let stats = exact_sufficient_stats(&problem, resolution)?;
            let names = stats.names();
            let values = stats.to_vec();
            let map: serde_json::Map<String, serde_json::Value> =
                names.into_iter().zip(values.into_iter().map(|v| json!(v))).collect();
            print_json(&serde_json::Value::Object(map))
        }
    }
}

fn run_experiments(args: ExperimentArgs) -> Result<()> {
    let kind = match args.which {
        Which::Lv => ExperimentKind::Lv,
        Which::Chain => ExperimentKind::Chain,
        Which::Scaling => ExperimentKind::Scaling,
    };
    let mut config = match &args.config {
        Some(p) => ExperimentConfig::read(p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::new(kind),
    };
    if config.experiment != kind {
        return Err(Error::Config(format!(
            "config describes a `{}` experiment, not `{}`",
            config.experiment.name(),
            kind.name()
        ))
        .into());
    }
    if let Some(seed) = args.seed {
        config.sampler.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))?;
    let manifest = run_experiment(&config, &out)?;
    println!("wrote {} to {}", manifest.outputs.join(", "), out.display());
    Ok(())
}
