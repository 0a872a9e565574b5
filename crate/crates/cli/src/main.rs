use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use skylattice_core::harness::{
    read_results_csv, run_batch_detailed, summarize, write_detail_jsonl, write_equity_csv, write_results_csv,
    write_summary_csv, BatchOptions,
};
use skylattice_core::scenarios::{
    count_configs, enumerate_configs, read_configs_jsonl, sample_configs, write_configs_jsonl, DEFAULT_MIN_PLAN_LENGTH,
    ENUMERATION_LIMIT,
};
use skylattice_core::sim::DEFAULT_FUEL;
use skylattice_core::verify::{determinism_check, oracle_sweep, pairwise_sweep, VerifyReport};
use skylattice_core::{Algorithm, HexLattice};

/// Multi-aircraft deconfliction experiments on hexagonal-lattice airspace.
#[derive(Parser)]
#[command(name = "skylattice", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate traffic configurations as JSONL.
    Gen(GenArgs),
    /// Run one algorithm over a configuration file and write a results CSV.
    Run(RunArgs),
    /// Summarize one or more results CSVs.
    Report(ReportArgs),
    /// Run a built-in self-check.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Enumerate,
    Sample,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long)]
    radius: u32,
    #[arg(long)]
    aircraft: usize,
    #[arg(long, default_value_t = DEFAULT_MIN_PLAN_LENGTH)]
    min_dist: u32,
    /// Defaults to enumerate when the full set is small enough, else sample.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Number of sampled configurations.
    #[arg(long)]
    count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    configs: PathBuf,
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: Algorithm,
    #[arg(long, default_value_t = DEFAULT_FUEL)]
    fuel: u32,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Results CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-run trajectories and separation events as JSONL.
    #[arg(long)]
    detail: Option<PathBuf>,
    /// Also write per-aircraft deviation totals.
    #[arg(long)]
    equity: Option<PathBuf>,
    /// Report compute seconds as zero for byte-reproducible output.
    #[arg(long)]
    no_timing: bool,
}

#[derive(clap::Args)]
struct ReportArgs {
    #[arg(long, num_args = 1.., required = true)]
    results: Vec<PathBuf>,
    /// Summary CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    /// Implicit rules on every two-aircraft configuration.
    Pairwise,
    /// Exact solver against brute-force enumeration.
    Oracle,
    /// Byte-identical output across parallelism degrees.
    Determinism,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Lattice radius; 3 for pairwise and determinism, 2 for oracle.
    #[arg(long)]
    radius: Option<u32>,
}

fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: skylattice_core::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => gen(args),
        Command::Run(args) => run(args),
        Command::Report(args) => report(args),
        Command::Verify(args) => verify(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("skylattice: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn gen(args: GenArgs) -> Result<ExitCode> {
    let lat = HexLattice::new(args.radius);
    let mode = match args.mode {
        Some(m) => m,
        None if count_configs(&lat, args.aircraft, args.min_dist)? <= u128::from(ENUMERATION_LIMIT) => Mode::Enumerate,
        None => Mode::Sample,
    };
    let mut out = output(args.out.as_deref())?;
    match mode {
        Mode::Enumerate => write_configs_jsonl(&mut out, enumerate_configs(&lat, args.aircraft, args.min_dist)?)?,
        Mode::Sample => {
            let Some(count) = args.count else { bail!("--count is required when sampling") };
            let configs = sample_configs(&lat, args.aircraft, count, args.min_dist, args.seed)?;
            write_configs_jsonl(&mut out, &configs)?;
        }
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let file = File::open(&args.configs).with_context(|| format!("cannot open {}", args.configs.display()))?;
    let configs = read_configs_jsonl(BufReader::new(file))?;
    if args.fuel == 0 {
        bail!("--fuel must be at least 1");
    }
    let opts = BatchOptions { fuel_capacity: args.fuel, parallelism: args.parallelism, timing: !args.no_timing };
    let details = run_batch_detailed(&configs, args.algorithm, &opts)?;
    let records: Vec<_> = details.iter().map(|d| d.record.clone()).collect();

    let mut out = output(args.out.as_deref())?;
    write_results_csv(&mut out, &records)?;
    out.flush()?;
    if let Some(path) = &args.detail {
        let mut f = create(path)?;
        write_detail_jsonl(&mut f, &details)?;
        f.flush()?;
    }
    if let Some(path) = &args.equity {
        let mut f = create(path)?;
        write_equity_csv(&mut f, &summarize(&records)?)?;
        f.flush()?;
    }
    for r in records.iter().filter(|r| r.fault.is_some()) {
        eprintln!("config {}: {}", r.config_id, r.fault.as_deref().unwrap_or_default());
    }
    Ok(ExitCode::SUCCESS)
}

fn report(args: ReportArgs) -> Result<ExitCode> {
    let mut records = Vec::new();
    for path in &args.results {
        let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        records.extend(read_results_csv(BufReader::new(file)).with_context(|| format!("in {}", path.display()))?);
    }
    let mut out = output(args.out.as_deref())?;
    write_summary_csv(&mut out, &summarize(&records)?)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn verify(args: VerifyArgs) -> Result<ExitCode> {
    let (name, report): (&str, VerifyReport) = match args.suite {
        Suite::Pairwise => ("pairwise", pairwise_sweep(args.radius.unwrap_or(3))?),
        Suite::Oracle => ("oracle", oracle_sweep(args.radius.unwrap_or(2), 100, 2024)?),
        Suite::Determinism => ("determinism", determinism_check(args.radius.unwrap_or(3), 4, 300, 7, &[1, 2, 8])?),
    };
    for f in report.failures.iter().take(20) {
        eprintln!("{f}");
    }
    if report.passed() {
        println!("{name}: ok ({} checked)", report.checked);
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{name}: {} failures in {} checked", report.failures.len(), report.checked);
        Ok(ExitCode::FAILURE)
    }
}
