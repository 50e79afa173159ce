use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use xtrials::commands;
use xtrials::manifest::BuildOptions;
use xtrials::CliError;
use xtrials_core::DEFAULT_LIMIT;

#[derive(Parser)]
#[command(name = "xtrials", version, about = "Explainable clinical-trial search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate trials and concepts and write an index directory.
    BuildIndex {
        #[arg(long)]
        trials: PathBuf,
        #[arg(long)]
        concepts: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Weights document to bundle with the index.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Sentence templates to bundle with the index.
        #[arg(long)]
        templates: Option<PathBuf>,
    },
    /// Derive feature weights and phrasing preferences from rating CSVs.
    DeriveWeights {
        #[arg(long)]
        feature_ratings: PathBuf,
        #[arg(long)]
        formulation_ratings: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the JSON API.
    Serve {
        #[arg(long)]
        index_dir: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Write one result table per engine variant for a query.
    SimulateVariants {
        #[arg(long)]
        index_dir: PathBuf,
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = DEFAULT_LIMIT)]
        limit: usize,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::BuildIndex {
            trials,
            concepts,
            out_dir,
            weights,
            templates,
        } => {
            let manifest =
                commands::cmd_build_index(&trials, &concepts, &out_dir, &BuildOptions { weights, templates })?;
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{}",
                serde_json::to_string_pretty(&manifest).expect("manifest serializes")
            );
        }
        Command::DeriveWeights {
            feature_ratings,
            formulation_ratings,
            out,
        } => {
            let derived = commands::cmd_derive_weights(&feature_ratings, &formulation_ratings, &out)?;
            for w in &derived.document.provenance.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", commands::describe_derived(&derived));
            println!("wrote {}", out.display());
        }
        Command::Serve {
            index_dir,
            weights,
            templates,
            host,
            port,
        } => {
            let state = commands::open_state(&index_dir, weights.as_deref(), templates.as_deref())?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
            runtime.block_on(commands::serve(state, &host, port))?;
        }
        Command::SimulateVariants {
            index_dir,
            weights,
            templates,
            query,
            limit,
            out,
        } => {
            if limit == 0 {
                return Err(CliError::Validation("--limit must be positive".into()));
            }
            let report = commands::cmd_simulate_variants(
                &index_dir,
                weights.as_deref(),
                templates.as_deref(),
                &query,
                limit,
                out.as_deref(),
            )?;
            if out.is_none() {
                print!("{report}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = std::io::stdout().flush();
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
