use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use batchrank::config::{self, parse_configs};
use batchrank::harness::output::{
    read_results, write_aggregate, write_events, write_histogram, write_results,
};
use batchrank::harness::queries::{ExaminationDecay, QueryFamily};
use batchrank::harness::{BoundInputs, Histogram, SUBOPTIMAL_REGRET};
use batchrank::plot::render_plots;
use batchrank::{run_sweep, theorem1_bound, Algorithm, Error, ExperimentConfig, ModelKind};

#[derive(Parser)]
#[command(
    name = "batchrank",
    version,
    about = "Online learning to rank in click models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of a single config.
    Run(RunArgs),
    /// Run a set of configs and aggregate the results per algorithm.
    Sweep(RunArgs),
    /// Print the BatchRank regret bound.
    Bound(BoundArgs),
    /// Draw regret and histogram charts from results CSVs.
    Plot(PlotArgs),
    /// Write synthetic query configs.
    GenQueries(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file; `sweep` accepts the flag several times.
    #[arg(long, required = true)]
    config: Vec<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Replace the configured seeds with this one.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the configured horizon.
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    window: Option<u64>,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Comma-separated histogram bin edges.
    #[arg(long)]
    bins: Option<String>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long = "K")]
    positions: usize,
    #[arg(long = "L")]
    items: usize,
    #[arg(long = "T")]
    horizon: u64,
    #[arg(long)]
    alpha_max: f64,
    #[arg(long)]
    delta_min: f64,
}

#[derive(Args)]
struct PlotArgs {
    /// Results CSVs written by `run` or `sweep`.
    #[arg(required = true)]
    results: Vec<PathBuf>,
    #[arg(long, default_value = "plots")]
    out: PathBuf,
    #[arg(long)]
    bins: Option<String>,
    /// Logarithmic regret axis.
    #[arg(long)]
    log_y: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "queries")]
    out: PathBuf,
    #[arg(long, default_value_t = 60)]
    count: usize,
    #[arg(long, default_value = "pbm")]
    model: ModelKind,
    #[arg(long = "L", default_value_t = 10)]
    items: usize,
    #[arg(long = "K", default_value_t = 5)]
    positions: usize,
    #[arg(long = "T", default_value_t = 10_000_000)]
    horizon: u64,
    #[arg(long, default_value_t = 100_000)]
    window: u64,
    /// `geometric:<rate>` or `harmonic`.
    #[arg(long, default_value = "geometric:0.7")]
    decay: String,
    /// Seed of the query generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated run seeds written into every config.
    #[arg(long, default_value = "0,1,2,3,4,5,6,7,8,9")]
    run_seeds: String,
    /// Comma-separated algorithms; one config per query and algorithm.
    #[arg(long, default_value = "batchrank,cascadeklucb,rankedexp3")]
    algorithms: String,
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>, Error> {
    raw.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid {what} entry `{}`", p.trim())))
        })
        .collect()
}

fn edges(bins: Option<&str>) -> Result<Vec<f64>, Error> {
    match bins {
        Some(raw) => parse_list(raw, "bin edge"),
        None => Ok(Histogram::default_edges()),
    }
}

fn load_configs(args: &RunArgs) -> Result<Vec<ExperimentConfig>, Error> {
    let mut configs = Vec::new();
    for path in &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let parsed = parse_configs(&text).map_err(|e| match e {
            Error::ConfigLine { line, message } => {
                Error::Config(format!("{}:{line}: {message}", path.display()))
            }
            other => other,
        })?;
        configs.extend(parsed);
    }
    for c in &mut configs {
        if let Some(seed) = args.seed {
            c.seeds = vec![seed];
        }
        if let Some(steps) = args.steps {
            c.horizon = steps;
        }
        if let Some(window) = args.window {
            c.window = window;
        }
        c.validate()?;
    }
    Ok(configs)
}

fn write_csv(
    path: &Path,
    f: impl FnOnce(BufWriter<File>) -> Result<(), Error>,
) -> Result<(), Error> {
    f(BufWriter::new(File::create(path)?))
}

fn run(args: &RunArgs, sweep: bool) -> Result<(), Error> {
    let configs = load_configs(args)?;
    if !sweep && configs.len() != 1 {
        return Err(Error::Config(format!(
            "`run` takes exactly one config, found {}; use `sweep` for several",
            configs.len()
        )));
    }
    let bins = edges(args.bins.as_deref())?;
    let result = run_sweep(&configs, args.parallelism, &bins)?;
    fs::create_dir_all(&args.out)?;
    write_csv(&args.out.join("results.csv"), |w| {
        write_results(w, &result.runs)
    })?;
    write_csv(&args.out.join("events.csv"), |w| {
        write_events(w, &result.runs)
    })?;
    if sweep {
        write_csv(&args.out.join("aggregate.csv"), |w| {
            write_aggregate(w, &result.series)
        })?;
        write_csv(&args.out.join("histogram.csv"), |w| {
            write_histogram(w, &result.series)
        })?;
    }
    for r in &result.runs {
        println!(
            "{}: cumulative regret {:.3}, final-window per-step regret {:.3e}",
            r.run_id,
            r.cumulative_regret,
            r.final_window_regret()
        );
    }
    if sweep {
        for s in &result.series {
            let suboptimal = s.histogram.count_at_least(SUBOPTIMAL_REGRET);
            println!(
                "{}: {} runs, final mean per-step regret {:.3e}, {} runs at or above 1e-3",
                s.algorithm,
                s.runs,
                s.mean_regret.last().copied().unwrap_or(0.0),
                suboptimal
            );
        }
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn bound(args: &BoundArgs) -> Result<(), Error> {
    let inputs = BoundInputs {
        positions: args.positions,
        items: args.items,
        horizon: args.horizon,
        alpha_max: args.alpha_max,
        delta_min: args.delta_min,
    };
    let total = theorem1_bound(&inputs)?;
    let k = args.positions as f64;
    let l = args.items as f64;
    let constant = 4.0 * k * l * (3.0 * std::f64::consts::E + k);
    println!("log term: {:.6e}", total - constant);
    println!("constant: {constant:.3}");
    println!("total: {total:.6e}");
    Ok(())
}

fn plot(args: &PlotArgs) -> Result<(), Error> {
    let mut rows = Vec::new();
    for path in &args.results {
        let file =
            File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        rows.extend(read_results(file)?);
    }
    let written = render_plots(&rows, &args.out, &edges(args.bins.as_deref())?, args.log_y)?;
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn gen_queries(args: &GenArgs) -> Result<(), Error> {
    let decay = match args.decay.split_once(':') {
        Some(("geometric", rate)) => ExaminationDecay::Geometric(
            rate.parse()
                .map_err(|_| Error::Config(format!("invalid decay rate `{rate}`")))?,
        ),
        None if args.decay == "harmonic" => ExaminationDecay::Harmonic,
        _ => return Err(Error::Config(format!("unknown decay `{}`", args.decay))),
    };
    let family = QueryFamily {
        model: args.model,
        items: args.items,
        positions: args.positions,
        horizon: args.horizon,
        decay,
        window: args.window,
    };
    let algorithms: Vec<Algorithm> = parse_list(&args.algorithms, "algorithm")?;
    let seeds: Vec<u64> = parse_list(&args.run_seeds, "seed")?;
    let configs = family.generate(args.count, args.seed, &algorithms, &seeds)?;
    fs::create_dir_all(&args.out)?;
    for chunk in configs.chunks(algorithms.len().max(1)) {
        let path = args.out.join(format!("{}.cfg", chunk[0].label));
        fs::write(&path, config::configs_to_text(chunk))?;
    }
    println!("wrote {} queries to {}", args.count, args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args, false),
        Command::Sweep(args) => run(args, true),
        Command::Bound(args) => bound(args),
        Command::Plot(args) => plot(args),
        Command::GenQueries(args) => gen_queries(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
