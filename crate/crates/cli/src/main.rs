//! CLI over the experiment library: sampled experiments (classify, census,
//! slices, dynamics), branching-process runs, the asymptotic constant table,
//! and the exhaustive oracle. Every run is reproducible from its flags; the
//! manifest written next to the outputs records them.

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gridgames::branching::{
    dual_parameter, extinction_fixed_point, gw_run, OffspringSpec,
};
use gridgames::harness::{
    emit, run_experiment, DynamicsSettings, ExperimentConfig, ExperimentKind, ExperimentOutput,
    OutputFormat, SUMMARY_CSV_HEADER,
};
use gridgames::rng::substream;
use gridgames::{asymptotics, GridShape, DEFAULT_MEM_CAP};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "gridgames", version, about = "Random games on [k]^n: connectivity, censuses, slices, branching limits, dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Player count.
    #[arg(long, global = true)]
    n: Option<u32>,

    /// Actions per player; a comma list sweeps several k values.
    #[arg(long, global = true, value_delimiter = ',')]
    k: Option<Vec<u32>>,

    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<u64>,

    /// Master seed; reruns with the same flags reproduce outputs byte for byte.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Good-sink exponent, in (0, 1/2); slice checks need it below 1/6.
    #[arg(long, global = true)]
    epsilon: Option<f64>,

    /// Worker threads (0 = all cores). Results never depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output directory (experiments) or file (asymptotics).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Summary format.
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Jsonl,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Connectivity,
    SinkCensus,
    Slices,
    Dynamics,
    Oracle,
}

#[derive(Subcommand)]
enum Command {
    /// Sample winner tables and classify best-response connectivity.
    Classify(ClassifyArgs),
    /// Sample winner tables and census good/bad sinks.
    Census,
    /// Slice cycles: bare slices at n=2, full structure checks at n>=3.
    Slices,
    /// Branching-process simulation and fixed points.
    Gw(GwArgs),
    /// Table of limiting constants over a range of n.
    Asymptotics(AsymptoticsArgs),
    /// Survey the best-response-with-inertia dynamic on sampled games.
    Dynamics(DynamicsArgs),
    /// Run any experiment kind.
    Experiment(ExperimentArgs),
    /// Exhaustive enumeration of all tables of a small shape.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct ClassifyArgs {
    /// Also sample full rankings and classify the better-response graph.
    #[arg(long)]
    better: bool,
}

#[derive(Args)]
struct GwArgs {
    /// Offspring family.
    #[arg(long, value_enum, default_value = "poisson")]
    offspring: OffspringArg,
    /// Poisson mean.
    #[arg(long, default_value_t = 2.0)]
    mean: f64,
    /// Binomial trial count.
    #[arg(long, default_value_t = 3)]
    trials: u64,
    /// Binomial success probability.
    #[arg(long, default_value_t = 0.5)]
    success: f64,
    /// Initial population.
    #[arg(long, default_value_t = 1)]
    init: u64,
    /// Simulation run count.
    #[arg(long, default_value_t = 100_000)]
    runs: u64,
    /// Cumulative population cap per run.
    #[arg(long, default_value_t = 100_000)]
    cap: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum OffspringArg {
    Poisson,
    Binomial,
}

#[derive(Args)]
struct AsymptoticsArgs {
    #[arg(long, default_value_t = 3)]
    n_min: u32,
    #[arg(long, default_value_t = 12)]
    n_max: u32,
}

#[derive(Args)]
struct DynamicsArgs {
    /// Per-step selection probability, in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    /// Random starts per sampled game.
    #[arg(long, default_value_t = 10)]
    starts: u64,
    #[arg(long, default_value_t = 100_000)]
    max_steps: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    better: bool,
    #[arg(long, default_value_t = 0.5)]
    q: f64,
    #[arg(long, default_value_t = 10)]
    starts: u64,
    #[arg(long, default_value_t = 100_000)]
    max_steps: u64,
}

#[derive(Args)]
struct OracleArgs {
    /// Largest table count the enumerator may attempt.
    #[arg(long, default_value_t = 20_000_000)]
    enumeration_cap: u64,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let n = cli.n.unwrap_or(3);
    let k_list = cli.k.clone().unwrap_or_else(|| vec![16]);
    let samples = cli.samples.unwrap_or(1000);
    let seed = cli.seed.unwrap_or(0);
    let epsilon = cli.epsilon.unwrap_or(0.1);
    let workers = cli.workers.unwrap_or(0);
    let format = match cli.format.unwrap_or(FormatArg::Csv) {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Jsonl => OutputFormat::Jsonl,
    };

    if samples < 1 {
        bail!("--samples must be at least 1");
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        bail!("--epsilon must lie in (0, 1/2), got {epsilon}");
    }

    let mut base = ExperimentConfig::new(ExperimentKind::Connectivity, n, k_list.clone());
    base.samples = samples;
    base.seed = seed;
    base.epsilon = epsilon;
    base.workers = workers;

    match &cli.command {
        Command::Classify(args) => {
            base.kind = ExperimentKind::Connectivity;
            base.include_better = args.better;
            run_and_report(&base, cli.out.as_deref(), format)
        }
        Command::Census => {
            base.kind = ExperimentKind::SinkCensus;
            run_and_report(&base, cli.out.as_deref(), format)
        }
        Command::Slices => {
            base.kind = ExperimentKind::Slices;
            base.n = cli.n.unwrap_or(2);
            run_and_report(&base, cli.out.as_deref(), format)
        }
        Command::Dynamics(args) => {
            base.kind = ExperimentKind::Dynamics;
            base.dynamics = Some(DynamicsSettings {
                select_prob: args.q,
                starts: args.starts,
                max_steps: args.max_steps,
            });
            run_and_report(&base, cli.out.as_deref(), format)
        }
        Command::Experiment(args) => {
            base.kind = match args.kind {
                KindArg::Connectivity => ExperimentKind::Connectivity,
                KindArg::SinkCensus => ExperimentKind::SinkCensus,
                KindArg::Slices => ExperimentKind::Slices,
                KindArg::Dynamics => ExperimentKind::Dynamics,
                KindArg::Oracle => ExperimentKind::Oracle,
            };
            base.include_better = args.better;
            if matches!(args.kind, KindArg::Dynamics) {
                base.dynamics = Some(DynamicsSettings {
                    select_prob: args.q,
                    starts: args.starts,
                    max_steps: args.max_steps,
                });
            }
            run_and_report(&base, cli.out.as_deref(), format)
        }
        Command::Oracle(args) => {
            let mut counts = Vec::new();
            for &k in &k_list {
                let shape = GridShape::new(n, k, DEFAULT_MEM_CAP)
                    .with_context(|| format!("shape [{k}]^{n}"))?;
                counts.push(gridgames::harness::exhaustive_oracle(&shape, args.enumeration_cap)?);
            }
            for c in &counts {
                println!("{}", serde_json::to_string_pretty(c)?);
            }
            Ok(())
        }
        Command::Gw(args) => gw_command(args, seed),
        Command::Asymptotics(args) => {
            asymptotics_command(args, cli.out.as_deref(), format)
        }
    }
}

fn run_and_report(
    cfg: &ExperimentConfig,
    out: Option<&Path>,
    format: OutputFormat,
) -> anyhow::Result<()> {
    let output = run_experiment(cfg)?;
    print_summary(&output);
    if let Some(dir) = out {
        let files = emit(&output, dir, format)?;
        write_projections(&output, dir)?;
        eprintln!(
            "wrote {} records to {} (summary {}, manifest {})",
            output.records.len(),
            files.records.display(),
            files.summary.display(),
            files.manifest.display()
        );
    }
    Ok(())
}

fn print_summary(output: &ExperimentOutput) {
    println!("{SUMMARY_CSV_HEADER}");
    for row in &output.summary {
        println!("{}", row.to_csv_line());
    }
}

/// Kind-specific flat JSONL views next to the canonical records.
fn write_projections(output: &ExperimentOutput, dir: &Path) -> anyhow::Result<()> {
    let kind = output.manifest.config.kind;
    match kind {
        ExperimentKind::SinkCensus => {
            // Census rows: {seed, n, k, epsilon, X, Y, sinks: [ids]}.
            let mut text = String::new();
            for r in &output.records {
                let row = serde_json::json!({
                    "seed": r.seed,
                    "n": r.n,
                    "k": r.k,
                    "epsilon": r.epsilon,
                    "X": r.x,
                    "Y": r.y,
                    "sinks": r.sink_ids,
                });
                text.push_str(&row.to_string());
                text.push('\n');
            }
            std::fs::write(dir.join("census_rows.jsonl"), text)?;
        }
        ExperimentKind::Dynamics => {
            // One row per run: {seed, n, k, q, start, converged, steps, sink}.
            let mut text = String::new();
            for r in &output.records {
                let d = r.dynamics.as_ref().expect("dynamics record");
                for run in &d.runs {
                    let row = serde_json::json!({
                        "seed": r.seed,
                        "n": r.n,
                        "k": r.k,
                        "q": d.q,
                        "start": run.start,
                        "converged": run.converged,
                        "steps": run.steps,
                        "sink": run.sink,
                    });
                    text.push_str(&row.to_string());
                    text.push('\n');
                }
            }
            std::fs::write(dir.join("dynamics_runs.jsonl"), text)?;
        }
        _ => {}
    }
    Ok(())
}

fn gw_command(args: &GwArgs, seed: u64) -> anyhow::Result<()> {
    let spec = match args.offspring {
        OffspringArg::Poisson => OffspringSpec::Poisson { mean: args.mean },
        OffspringArg::Binomial => {
            OffspringSpec::Binomial { trials: args.trials, success: args.success }
        }
    };
    spec.validate()?;
    if args.runs < 1 {
        bail!("--runs must be at least 1");
    }
    if args.cap < args.init {
        bail!("--cap must be at least --init");
    }
    let mut extinct = 0u64;
    let mut capped = 0u64;
    for j in 0..args.runs {
        let mut rng = substream(seed, j);
        let out = gw_run(spec, args.init, args.cap, &mut rng)?;
        extinct += out.extinct as u64;
        capped += out.cap_hit as u64;
    }
    let eta = extinction_fixed_point(spec)?;
    let dual = match spec {
        OffspringSpec::Poisson { mean } if mean > 1.0 => Some(dual_parameter(mean)?),
        _ => None,
    };
    let report = serde_json::json!({
        "offspring": spec,
        "init": args.init,
        "runs": args.runs,
        "cap": args.cap,
        "seed": seed,
        "extinct_runs": extinct,
        "cap_hit_runs": capped,
        "extinction_frequency": extinct as f64 / args.runs as f64,
        "extinction_fixed_point": eta.powi(args.init as i32),
        "dual_parameter": dual,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn asymptotics_command(
    args: &AsymptoticsArgs,
    out: Option<&Path>,
    format: OutputFormat,
) -> anyhow::Result<()> {
    if args.n_min < 3 || args.n_min > args.n_max {
        bail!("need 3 <= n-min <= n-max, got {}..{}", args.n_min, args.n_max);
    }
    let rows: Vec<_> = (args.n_min..=args.n_max)
        .map(asymptotics::constants)
        .collect::<Result<_, _>>()?;
    let text = match format {
        OutputFormat::Csv => {
            let mut text =
                String::from("n,eta,lambda,zeta,connected_fraction_limit,pne_fraction_limit\n");
            for c in &rows {
                text.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    c.n, c.eta, c.lambda_n, c.zeta, c.connected_fraction_limit,
                    c.pne_fraction_limit
                ));
            }
            text
        }
        OutputFormat::Jsonl => {
            let mut text = String::new();
            for c in &rows {
                text.push_str(&serde_json::to_string(c)?);
                text.push('\n');
            }
            text
        }
    };
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
