use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hoare_extract::commands::{
    cmd_check, cmd_extract, cmd_run, cmd_selftest, cmd_verify, ExtractOpts, Outcome, RunOpts,
    VerifyOpts,
};

/// Proof checker and program extractor for stateful Hoare-style derivations.
#[derive(Parser)]
#[command(name = "hoare-extract", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a bundle and kernel-check every named derivation.
    Check {
        /// Bundle stem or theory file: PATH.slt with optional PATH.slp beside it.
        path: PathBuf,
        /// Worker threads for independent derivations.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Extract the program from each checked derivation.
    Extract {
        path: PathBuf,
        /// Only this derivation (default: all).
        #[arg(long)]
        derivation: Option<String>,
        /// Contract the administrative redexes extraction introduces.
        #[arg(long)]
        cleanup_admin: bool,
        /// Erase trivially-typed components for display.
        #[arg(long)]
        simplify_units: bool,
        /// Output format.
        #[arg(long, value_parser = ["text", "json"], default_value = "text")]
        format: String,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Evaluate one extracted program against a state model.
    Run {
        path: PathBuf,
        #[arg(long)]
        derivation: Option<String>,
        /// Override the model the theory names.
        #[arg(long)]
        model: Option<String>,
        /// Initial state as JSON (default: the first sampled state).
        #[arg(long)]
        state: Option<String>,
        /// Natural-number arguments applied to the program in order.
        #[arg(long, num_args = 1..)]
        args: Vec<u64>,
        /// Log every computation-constant application.
        #[arg(long)]
        trace: bool,
        /// Sampling seed (also honours HOARE_EXTRACT_SEED).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Test each derivation's extracted program against its own triple.
    Verify {
        path: PathBuf,
        #[arg(long)]
        derivation: Option<String>,
        #[arg(long)]
        model: Option<String>,
        /// States sampled per variable assignment.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Check the built-in models against their own axioms.
    Selftest {
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| std::env::var("HOARE_EXTRACT_SEED").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Check { path, jobs } => cmd_check(&path, jobs),
        Cmd::Extract { path, derivation, cleanup_admin, simplify_units, format, jobs } => {
            cmd_extract(
                &path,
                &ExtractOpts {
                    derivation,
                    cleanup: cleanup_admin,
                    simplify: simplify_units,
                    json: format == "json",
                    jobs,
                },
            )
        }
        Cmd::Run { path, derivation, model, state, args, trace, seed } => cmd_run(
            &path,
            &RunOpts { derivation, model, state, args, trace, seed: resolve_seed(seed) },
        ),
        Cmd::Verify { path, derivation, model, samples, seed, jobs } => cmd_verify(
            &path,
            &VerifyOpts { derivation, model, samples, seed: resolve_seed(seed), jobs },
        ),
        Cmd::Selftest { seed } => cmd_selftest(resolve_seed(seed)),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(diag) => {
            eprintln!("{diag}");
            ExitCode::from(2)
        }
    }
}
