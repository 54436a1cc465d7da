use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tourneysim::report::{
    check_shared_runs, comparison_csv, convergence_csv, parse_experiments, per_team_csv,
    summary_json, write_text, EngineInfo, ReportError, Summary,
};
use tourneysim::sim::{
    convergence_run, default_checkpoints, simulate, ModelSpec, SimConfig, SimError, DEFAULT_RUNS,
    DEFAULT_SHARD_SIZE,
};
use tourneysim::{FormatId, Identification, SeedingVariant};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "tourneysim", version, about = "Tournament-design Monte Carlo simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write summary.json and per_team.csv
    Simulate(SimulateArgs),
    /// Run every experiment in a file and write one comparison table
    Compare(CompareArgs),
    /// Track running estimates over a ladder of replay counts
    Convergence(ConvergenceArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    D86,
    D47,
    D46,
}

impl From<FormatArg> for FormatId {
    fn from(f: FormatArg) -> FormatId {
        match f {
            FormatArg::D86 => FormatId::D86,
            FormatArg::D47 => FormatId::D47,
            FormatArg::D46 => FormatId::D46,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SeedingArg {
    Seeded,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum IdentificationArg {
    Correct,
    Erroneous,
}

#[derive(Args)]
struct ConfigArgs {
    /// Tournament design
    #[arg(long)]
    format: FormatArg,
    /// How the draw pots are built
    #[arg(long, value_enum, default_value_t = SeedingArg::Seeded)]
    seeding: SeedingArg,
    /// Whether perceived ranks carry the systematic error
    #[arg(long, value_enum, default_value_t = IdentificationArg::Correct)]
    identification: IdentificationArg,
    /// Discriminatory power of the contest model
    #[arg(long, conflicts_with = "matrix")]
    r: Option<f64>,
    /// Win-probability matrix: a file path, builtin:uniform, or builtin:dominance
    #[arg(long)]
    matrix: Option<String>,
    /// Number of replays
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: u64,
    /// Master seed; replay k uses RNG stream k of this seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ConfigArgs {
    fn to_config(&self) -> Result<SimConfig, String> {
        let model = match (&self.r, &self.matrix) {
            (Some(r), None) => ModelSpec::Tullock { r: *r },
            (None, Some(m)) => match m.as_str() {
                "builtin:uniform" => ModelSpec::Uniform,
                "builtin:dominance" => ModelSpec::Dominance,
                path => ModelSpec::MatrixFile {
                    path: PathBuf::from(path),
                },
            },
            _ => return Err("exactly one of --r and --matrix is required".into()),
        };
        Ok(SimConfig {
            format: self.format.into(),
            seeding: match self.seeding {
                SeedingArg::Seeded => SeedingVariant::Seeded,
                SeedingArg::Random => SeedingVariant::Random,
            },
            identification: match self.identification {
                IdentificationArg::Correct => Identification::Correct,
                IdentificationArg::Erroneous => Identification::Erroneous,
            },
            model,
            runs: self.runs,
            master_seed: self.seed,
            shard_size: DEFAULT_SHARD_SIZE,
        })
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Worker threads (0 = one per core); never affects the results
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Experiment file: `name format seeding identification r runs` per line
    #[arg(long)]
    experiments: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Comma-separated ascending replay counts; defaults to the
    /// 1/2.5/5 x 10^k ladder from 10^3 to 10^7
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<u64>>,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: PathBuf,
}

fn usage_error(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(EXIT_USAGE)
}

fn sim_error(err: SimError) -> ExitCode {
    eprintln!("error: {err}");
    match err {
        SimError::MatrixIo { .. } => ExitCode::from(EXIT_IO),
        _ => ExitCode::from(EXIT_USAGE),
    }
}

fn report_error(err: ReportError) -> ExitCode {
    eprintln!("error: {err}");
    match err {
        ReportError::Io(_) | ReportError::Json(_) => ExitCode::from(EXIT_IO),
        _ => ExitCode::from(EXIT_USAGE),
    }
}

fn in_pool<T>(threads: usize, work: impl FnOnce() -> T + Send) -> Result<T, ExitCode>
where
    T: Send,
{
    if threads == 0 {
        return Ok(work());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| usage_error(&format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(work))
}

fn cmd_simulate(args: SimulateArgs) -> ExitCode {
    let config = match args.config.to_config() {
        Ok(c) => c,
        Err(m) => return usage_error(&m),
    };
    let report = match in_pool(args.threads, || simulate(&config)) {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => return sim_error(e),
        Err(code) => return code,
    };
    let summary = Summary {
        config,
        engine: EngineInfo::current(),
        report,
    };
    let json = match summary_json(&summary) {
        Ok(j) => j,
        Err(e) => return report_error(e),
    };
    let csv = per_team_csv(&summary.report);
    for (name, text) in [("summary.json", json), ("per_team.csv", csv)] {
        if let Err(e) = write_text(&args.out.join(name), &text) {
            return report_error(e);
        }
    }
    ExitCode::SUCCESS
}

fn cmd_compare(args: CompareArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.experiments) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.experiments.display());
            return ExitCode::from(EXIT_IO);
        }
    };
    let experiments = match parse_experiments(&text, args.seed) {
        Ok(x) => x,
        Err(e) => return report_error(e),
    };
    if experiments.is_empty() {
        return usage_error("experiment file contains no experiments");
    }
    if let Err(e) = check_shared_runs(&experiments) {
        return report_error(e);
    }
    let reports = match in_pool(args.threads, || {
        experiments
            .iter()
            .map(|e| simulate(&e.config))
            .collect::<Result<Vec<_>, _>>()
    }) {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => return sim_error(e),
        Err(code) => return code,
    };
    let names: Vec<String> = experiments.iter().map(|e| e.name.clone()).collect();
    let csv = comparison_csv(&names, &reports);
    if let Err(e) = write_text(&args.out.join("comparison.csv"), &csv) {
        return report_error(e);
    }
    ExitCode::SUCCESS
}

fn cmd_convergence(args: ConvergenceArgs) -> ExitCode {
    let mut config = match args.config.to_config() {
        Ok(c) => c,
        Err(m) => return usage_error(&m),
    };
    let checkpoints = args.checkpoints.unwrap_or_else(default_checkpoints);
    if let Some(&last) = checkpoints.last() {
        // the ladder defines the horizon unless --runs asks for more
        config.runs = config.runs.max(last);
    }
    let series = match in_pool(args.threads, || convergence_run(&config, &checkpoints)) {
        Ok(Ok(s)) => s,
        Ok(Err(e)) => return sim_error(e),
        Err(code) => return code,
    };
    let csv = convergence_csv(&series);
    if let Err(e) = write_text(&args.out.join("convergence.csv"), &csv) {
        return report_error(e);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Convergence(args) => cmd_convergence(args),
    }
}
