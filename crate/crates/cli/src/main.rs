mod commands;
mod config;
mod services;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use factcheck_core::evaluation::DEFAULT_SWEEP_TAUS;
use factcheck_core::BinaryLabel;
use tracing_subscriber::EnvFilter;

use config::RunArgs;

#[derive(Parser, Debug)]
#[command(
    name = "factcheck",
    version,
    about = "Urdu claim verification with cross-lingual evidence retrieval"
)]
struct Cli {
    /// More log output on stderr (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fact-check a text and write a per-claim report.
    Check(CheckArgs),
    /// Score the checker on a labeled claim dataset.
    Benchmark(BenchmarkArgs),
    /// Run the thresholded checker for several tau values.
    Sweep(SweepArgs),
    /// Measure the factuality of model answers to a QA set.
    EvalQa(EvalQaArgs),
    /// Dataset preparation.
    #[command(subcommand)]
    Data(DataCommand),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Split the text into atomic claims first.
    Free,
    /// Treat the whole text as one claim.
    Benchmark,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Text to check. Read from --file, or DIR/input.txt under --mock, when omitted.
    text: Option<String>,
    #[arg(long, value_name = "FILE", conflicts_with = "text")]
    file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Free)]
    mode: ModeArg,
    #[arg(long, value_name = "DIR", default_value = "factcheck-out")]
    out_dir: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct BenchmarkArgs {
    /// Claim dataset (JSONL with id, claim, label, source).
    #[arg(long, value_name = "FILE")]
    dataset: PathBuf,
    /// Add Random, Always-True and Always-False rows.
    #[arg(long)]
    baselines: bool,
    #[arg(long, value_name = "DIR", default_value = "factcheck-out")]
    out_dir: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_name = "FILE")]
    dataset: PathBuf,
    /// Comma-separated thresholds; sorted and deduplicated before running.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SWEEP_TAUS.to_vec())]
    taus: Vec<usize>,
    #[arg(long, value_name = "DIR", default_value = "factcheck-out")]
    out_dir: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct EvalQaArgs {
    /// QA dataset (JSONL with id, question, source).
    #[arg(long, value_name = "FILE")]
    qa: PathBuf,
    /// Answers keyed by question id: a JSON object or JSONL {id, response}.
    #[arg(long, value_name = "FILE")]
    responses: PathBuf,
    /// The model that wrote the answers; recorded in the report.
    #[arg(long)]
    model_id: String,
    #[arg(long, value_name = "DIR", default_value = "factcheck-out")]
    out_dir: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum DataCommand {
    /// Count claims per source and label, and QA items per source.
    Summarize {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Also write the summary as JSON.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Map four-way source labels to True/False, dropping unsupported rows.
    Standardize {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Keep every minority-label record and a seeded sample of the majority.
    Balance {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        cap: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_parser = parse_label, default_value = "true")]
        majority: BinaryLabel,
    },
    /// Draft Urdu translations of English records for human review.
    Curate(Box<CurateArgs>),
}

#[derive(Args, Debug)]
struct CurateArgs {
    /// English records (JSONL with id and text, claim or question).
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Exemplar pool (JSONL with source_text, target_text, source_dataset).
    #[arg(long, value_name = "FILE")]
    pool: PathBuf,
    /// Review file to write (JSONL).
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Exemplars per prompt.
    #[arg(long, default_value_t = factcheck_core::curation::DEFAULT_K)]
    k: usize,
    /// Relevance weight in exemplar selection, 0 to 1.
    #[arg(long, default_value_t = factcheck_core::curation::DEFAULT_LAMBDA)]
    lambda: f64,
    #[command(flatten)]
    run: RunArgs,
}

fn parse_label(s: &str) -> Result<BinaryLabel, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" => Ok(BinaryLabel::True),
        "false" => Ok(BinaryLabel::False),
        other => Err(format!("expected true or false, got {other:?}")),
    }
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_target(false)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    let result = match cli.command {
        Command::Check(a) => commands::check(a),
        Command::Benchmark(a) => commands::benchmark(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::EvalQa(a) => commands::eval_qa(a),
        Command::Data(d) => commands::data(d),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
