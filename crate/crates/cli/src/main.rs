use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use ddm_rfi::detect::FLAG_CSV_FORMAT_VERSION;
use ddm_rfi::ingest::RECORD_FORMAT_VERSION;
use ddm_rfi::scenario::GOLDEN_SEED;
use ddm_rfi::units::{
    DEFAULT_THRESHOLD_DB, GROUND_SPEED_KM_S, PERSISTENCE_WINDOW_S, SAT_ALTITUDE_KM,
};
use ddm_rfi::Error;

mod commands;

/// RFI detection over GNSS-R delay-Doppler map noise floors.
#[derive(Debug, Parser)]
#[command(name = "ddm-rfi")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario into NDJSON records and truth labels.
    Simulate(SimulateArgs),
    /// Run the detectors over NDJSON records and write the flag table.
    Detect(DetectArgs),
    /// Count, summarize and score a flag table.
    Evaluate(EvaluateArgs),
    /// Tabulate slant range and path-loss change over a jammer overpass.
    Geom(GeomArgs),
    /// Synthesize or analyze delay-Doppler maps in the text grid format.
    #[command(subcommand)]
    Ddm(DdmCommand),
    /// Write the scripted acceptance fixture.
    Golden(GoldenArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario TOML file.
    scenario: PathBuf,
    #[arg(long)]
    out_records: PathBuf,
    #[arg(long)]
    out_truth: PathBuf,
    #[arg(long)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    All,
    Kurtosis,
    Mean,
    Proposed,
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// NDJSON records, or `-` for stdin.
    records: String,
    #[arg(long, value_enum, default_value_t = MethodArg::All)]
    method: MethodArg,
    /// Preset name, `lat_min,lat_max,lon_min,lon_max`, or a region TOML file.
    #[arg(long, default_value = "white-sands")]
    region: String,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD_DB, allow_negative_numbers = true)]
    threshold: f64,
    /// Persistence window, seconds.
    #[arg(long, default_value_t = PERSISTENCE_WINDOW_S)]
    window: f64,
    /// Sort records by time before detection instead of requiring sorted input.
    #[arg(long)]
    sort: bool,
    /// Skip malformed lines instead of stopping.
    #[arg(long)]
    lenient: bool,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Detect over this many time partitions in parallel.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    partitions: u32,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Flag table written by `detect`.
    flags: PathBuf,
    /// Truth labels; enables score.csv.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct GeomArgs {
    /// Satellite altitude, km.
    #[arg(long, default_value_t = SAT_ALTITUDE_KM)]
    altitude: f64,
    /// Ground-track speed, km/s.
    #[arg(long, default_value_t = GROUND_SPEED_KM_S)]
    speed: f64,
    /// Largest time offset from closest approach to tabulate, seconds.
    #[arg(long, default_value_t = 100.0)]
    range: f64,
    /// Table step, seconds.
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    /// Persistence window used for the headline values, seconds.
    #[arg(long, default_value_t = PERSISTENCE_WINDOW_S)]
    window: f64,
}

#[derive(Debug, Subcommand)]
enum DdmCommand {
    /// Synthesize a map with thermal noise and a specular horseshoe.
    Synth(SynthArgs),
    /// Print the forbidden-zone noise floor of a map.
    Floor {
        /// Grid file.
        grid: PathBuf,
    },
    /// Add a jammer stripe to one Doppler column.
    Jam {
        /// Grid file.
        grid: PathBuf,
        #[arg(long)]
        doppler: usize,
        #[arg(long)]
        counts: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    gain: f64,
    #[arg(long, default_value_t = 2500.0)]
    antenna_noise: f64,
    #[arg(long, default_value_t = 2500.0)]
    receiver_noise: f64,
    #[arg(long, default_value_t = 50_000.0)]
    peak: f64,
    #[arg(long, default_value_t = 0.3)]
    roughness: f64,
    /// Averaged looks per bin; 1 gives exponential noise.
    #[arg(long, default_value_t = ddm_rfi::SynthParams::DEFAULT_LOOKS)]
    looks: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GoldenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = GOLDEN_SEED)]
    seed: u64,
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Sequencing { .. } => 3,
        Error::Schema { .. } => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let version: &'static str = Box::leak(
        format!(
            "{} (records format {RECORD_FORMAT_VERSION}, flag table format {FLAG_CSV_FORMAT_VERSION})",
            ddm_rfi::VERSION
        )
        .into_boxed_str(),
    );
    let matches = Cli::command().version(version).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Detect(a) => commands::detect(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Geom(a) => commands::geom(&a),
        Command::Ddm(c) => commands::ddm(&c),
        Command::Golden(a) => commands::golden(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ddm-rfi: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
