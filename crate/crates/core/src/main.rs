use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use seedqkd::harness::{completeness_check, golden_table1, run_experiment, EveChoice, ExperimentConfig};
use seedqkd::session::{DEFAULT_ABORT_THRESHOLD, DEFAULT_SACRIFICE_FRACTION};
use seedqkd::transcript::write_transcript;
use seedqkd::{Protocol, Role};

#[derive(Parser)]
#[command(name = "seedqkd", version, about = "Seed-based QKD, BB84 and key-swapping simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Bb84,
    Seed,
    Swap,
}

#[derive(Clone, Copy, ValueEnum)]
enum PublisherArg {
    Alice,
    Bob,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and print the report.
    Run {
        #[arg(long, value_enum)]
        protocol: ProtocolArg,
        #[arg(long = "n", default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0.0)]
        flip: f64,
        #[arg(long, default_value_t = 0.0)]
        loss: f64,
        /// none | ir-random | ir-fixed0 | ir-fixed1
        #[arg(long, default_value = "none")]
        eve: EveChoice,
        #[arg(long = "eve-fraction", default_value_t = 1.0)]
        eve_fraction: f64,
        /// Fraction of each key disclosed for QBER estimation (0 disables).
        #[arg(long, default_value_t = DEFAULT_SACRIFICE_FRACTION)]
        sacrifice: f64,
        #[arg(long, default_value_t = DEFAULT_ABORT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Swap only: Central sends identical strings to both recipients.
        #[arg(long = "reuse-states")]
        reuse_states: bool,
        /// Who publishes the random seed in the seed protocol.
        #[arg(long, value_enum, default_value = "alice")]
        publisher: PublisherArg,
        /// Write the report as JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write one transcript per trial into this directory.
        #[arg(long)]
        transcripts: Option<PathBuf>,
    },
    /// Check the worked N = 8 example over all 256 outcome assignments.
    Golden {
        /// Write the transcript of the first sweep here.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Exhaustive 64-case per-position completeness check.
    Oracle,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            protocol,
            n,
            trials,
            flip,
            loss,
            eve,
            eve_fraction,
            sacrifice,
            threshold,
            seed,
            reuse_states,
            publisher,
            out,
            transcripts,
        } => {
            let protocol = match protocol {
                ProtocolArg::Bb84 => Protocol::Bb84,
                ProtocolArg::Seed => Protocol::Seed,
                ProtocolArg::Swap => Protocol::Swap,
            };
            let mut config = ExperimentConfig::new(protocol, n, trials, seed);
            config.flip = flip;
            config.loss = loss;
            config.eve = eve;
            config.eve_fraction = eve_fraction;
            config.sacrifice_fraction = sacrifice;
            config.abort_threshold = threshold;
            config.reuse_states = reuse_states;
            config.seed_publisher = match publisher {
                PublisherArg::Alice => Role::Sender,
                PublisherArg::Bob => Role::Receiver,
            };
            config.output_path = out;
            config.transcript_dir = transcripts;
            if let Err(e) = config.validate() {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            match run_experiment(&config) {
                Ok(report) => {
                    print!("{}", report.render_text());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Golden { transcript } => match golden_table1() {
            Ok(outcome) => {
                let [m, s, i, j] = &outcome.keys;
                println!("worked example: {} sweeps agree", outcome.sweeps);
                println!("key_m {m}\nkey_s {s}\nkey_i {i}\nkey_j {j}");
                for c in &outcome.formula_conflicts {
                    println!("note: printed cell disagrees with formula, formula used: {c}");
                }
                if let Some(path) = transcript {
                    if let Err(e) = write_transcript(&outcome.record, &path) {
                        eprintln!("error: {e}");
                        return ExitCode::FAILURE;
                    }
                }
                ExitCode::SUCCESS
            }
            Err(failure) => {
                eprint!("{failure}");
                ExitCode::FAILURE
            }
        },
        Command::Oracle => match completeness_check() {
            Ok(report) if report.passed() => {
                println!("completeness oracle: {}/{} cases recover (m, s, i, j)", report.cases, report.cases);
                ExitCode::SUCCESS
            }
            Ok(report) => {
                for f in &report.failures {
                    eprintln!(
                        "case {}: sender {:?} receiver {:?} coins {}",
                        f.case, f.sender, f.receiver, f.coins_used
                    );
                }
                ExitCode::FAILURE
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
