//! `redundis` command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure (report carries a
//! counterexample), 2 usage or configuration error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use redundis::RedundancyScheme;

#[derive(Debug, Parser)]
#[command(
    name = "redundis",
    version,
    about = "NMR / 3-of-M DMMR redundancy workbench"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a redundant system and write its netlist as JSON.
    Gen(GenArgs),
    /// Exhaustively verify the scheme's masking guarantee and its tightness.
    Verify(VerifyArgs),
    /// Area, critical-path delay and ADP of one system.
    Metrics(MetricsArgs),
    /// Compare a baseline scheme against a candidate on the same module.
    Compare(CompareArgs),
    /// System reliability curve, analytic or Monte Carlo.
    Reliability(ReliabilityArgs),
    /// Reduction percentages recomputed from the bundled FPGA results.
    PaperTable(PaperTableArgs),
    /// Emit structural Verilog for a module or a redundant system.
    ExportVerilog(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Norm {
    TwoInput,
    WideGates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Voter {
    Sop,
    Cc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Analytic,
    McGuarantee,
    McCircuit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Behavior {
    Inverted,
    Stuck0,
    Stuck1,
}

fn parse_scheme(s: &str) -> Result<RedundancyScheme, String> {
    s.parse().map_err(|e: redundis::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct ModuleArg {
    /// `braun4`, `braun:<w>`, `fulladder`, `halfadder`, or a netlist JSON path.
    #[arg(long, default_value = "braun4")]
    pub module: String,
    /// NMR voter structure; defaults to sum-of-products for n <= 5.
    #[arg(long, value_enum)]
    pub voter: Option<Voter>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: RedundancyScheme,
    #[command(flatten)]
    pub module: ModuleArg,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: RedundancyScheme,
    #[command(flatten)]
    pub module: ModuleArg,
    /// Verify this system netlist instead of a freshly generated one.
    #[arg(long)]
    pub netlist: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricOpts {
    /// Delay model JSON: {"name": ..., "delays": {"AND": 1.0, ...}, "fan_in_extra": 0.0}.
    #[arg(long)]
    pub delay_model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "two-input")]
    pub normalization: Norm,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: RedundancyScheme,
    #[command(flatten)]
    pub module: ModuleArg,
    #[command(flatten)]
    pub opts: MetricOpts,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_parser = parse_scheme)]
    pub baseline: RedundancyScheme,
    #[arg(long, value_parser = parse_scheme)]
    pub candidate: RedundancyScheme,
    #[command(flatten)]
    pub module: ModuleArg,
    #[command(flatten)]
    pub opts: MetricOpts,
}

#[derive(Debug, Args)]
pub struct ReliabilityArgs {
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: RedundancyScheme,
    #[arg(long, value_enum, default_value = "analytic")]
    pub mode: Mode,
    /// A single value `0.9` or a grid `min:max:steps`.
    #[arg(long, default_value = "0:1:101")]
    pub r: String,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "inverted")]
    pub behavior: Behavior,
    /// Random input rows per check for modules too wide to enumerate.
    #[arg(long)]
    pub samples: Option<usize>,
    #[command(flatten)]
    pub module: ModuleArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PaperTableArgs {
    /// Alternative fixture CSV; the bundled transcription is used otherwise.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Wrap the module in this scheme first.
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Option<RedundancyScheme>,
    #[command(flatten)]
    pub module: ModuleArg,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(t) = std::env::var("REDUNDIS_THREADS") {
        match t
            .parse::<usize>()
            .map_err(|e| e.to_string())
            .and_then(|n| redundis::par::configure_threads(n).map_err(|e| e.to_string()))
        {
            Ok(()) => {}
            Err(e) => {
                eprintln!("error: REDUNDIS_THREADS={t}: {e}");
                return ExitCode::from(2);
            }
        }
    }
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
