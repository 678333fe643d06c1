use std::fs::{self, File};
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use influence_core::detectors::DetectorParams;
use influence_core::engine::{evaluate, read_reports, run_analysis, Alignment, EngineConfig, QualityKind};
use influence_core::portfolio::{load_portfolio, write_portfolio};
use influence_core::synth::{generate_synthetic, GroundTruth, SyntheticSpec};
use influence_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "influence",
    version,
    about = "Rank market factors that explain bad trading performance"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a portfolio slice by slice and write reports.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic portfolio and its ground truth.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Overrides the seed in the spec.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score reports against a synthetic ground truth.
    Eval {
        #[arg(long)]
        reports: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// Portfolio CSV.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    input: Option<PathBuf>,
    /// Synthetic spec to generate and analyze instead of a CSV.
    #[arg(long)]
    synthetic: Option<PathBuf>,
    #[arg(long, default_value_t = 0.03)]
    q: f64,
    #[arg(long, default_value_t = 0.85)]
    r: f64,
    #[arg(long, default_value_t = 3)]
    tau: usize,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pairs: bool,
    #[arg(long, default_value_t = 100)]
    min_orders: usize,
    #[arg(long, value_enum, default_value_t = QualityKind::Floor)]
    quality: QualityKind,
    /// Weight on P1 for the weighted quality.
    #[arg(long, default_value_t = 0.5)]
    weight: f64,
    #[arg(long, default_value_t = 0.8)]
    prefilter_ratio: f64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Overrides the seed of a synthetic spec.
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file with detector parameters.
    #[arg(long)]
    detector_config: Option<PathBuf>,
    #[arg(long, default_value_t = influence_core::scores::DEFAULT_WINDOW)]
    score_window: usize,
    #[arg(long, default_value_t = influence_core::scores::DEFAULT_MIN_HISTORY)]
    score_min_history: usize,
    #[arg(long, value_enum, default_value_t = Alignment::Online)]
    alignment: Alignment,
    /// Also write the enriched factors to factors.csv.
    #[arg(long)]
    dump_factors: bool,
    /// Disable parallelism within a slice.
    #[arg(long)]
    serial: bool,
}

fn read_spec(path: &PathBuf, seed: Option<u64>) -> Result<SyntheticSpec> {
    let mut spec: SyntheticSpec = fs::read_to_string(path)?.parse()?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    Ok(spec)
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let detectors = match &args.detector_config {
        Some(p) => DetectorParams::from_toml(&fs::read_to_string(p)?)?,
        None => DetectorParams::default(),
    };
    let config = EngineConfig {
        q: args.q,
        r: args.r,
        tau: args.tau,
        detectors,
        score_window: args.score_window,
        score_min_history: args.score_min_history,
        min_orders: args.min_orders,
        pairs_enabled: args.pairs,
        quality: args.quality,
        weight: args.weight,
        prefilter_ratio: args.prefilter_ratio,
        alignment: args.alignment,
        parallel: !args.serial,
        seed: args.seed.unwrap_or_default(),
    };
    config.validate()?;
    let slices = match (&args.input, &args.synthetic) {
        (Some(p), _) => load_portfolio(BufReader::new(File::open(p)?))?,
        (None, Some(p)) => generate_synthetic(&read_spec(p, args.seed)?)?.0,
        (None, None) => unreachable!("clap requires one input"),
    };
    let (_, summary) = run_analysis(&slices, &config, &args.out_dir, args.dump_factors)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Synth { spec, out_dir, seed } => {
            let spec = read_spec(&spec, seed)?;
            let (slices, truth) = generate_synthetic(&spec)?;
            fs::create_dir_all(&out_dir)?;
            write_portfolio(&slices, File::create(out_dir.join("portfolio.csv"))?)?;
            serde_json::to_writer_pretty(File::create(out_dir.join("ground_truth.json"))?, &truth)?;
            println!("wrote {} slices to {}", slices.len(), out_dir.display());
            Ok(())
        }
        Command::Eval { reports, truth } => {
            let reports = read_reports(&reports)?;
            let truth: GroundTruth = serde_json::from_reader(BufReader::new(File::open(&truth)?))?;
            println!("{}", serde_json::to_string_pretty(&evaluate(&reports, &truth))?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
