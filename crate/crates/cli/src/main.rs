use clap::{Parser, Subcommand};
use galdef_cli::{acceptance_line, emit_report, load_scenario, resolve_seed, run, verify_suite, CliError, SEED_ENV};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "galdef", version, about = "Run deformation-theory scenarios and acceptance suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and emit a JSON report.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include wall-clock timings (makes the report nondeterministic).
        #[arg(long)]
        timings: bool,
    },
    /// Run the built-in acceptance checks for a suite.
    Verify { suite: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { scenario, seed, out, timings } => (|| -> Result<(), CliError> {
            let s = load_scenario(&scenario)?;
            let env = std::env::var(SEED_ENV).ok();
            let seed = resolve_seed(seed, &s, env.as_deref())?;
            let report = run(&s, seed, timings)?;
            emit_report(&report, out.as_deref())?;
            if report.passed {
                Ok(())
            } else {
                Err(CliError::Verification("at least one item failed; see the report".into()))
            }
        })(),
        Command::Verify { suite } => verify_suite(&suite).and_then(|results| {
            for r in &results {
                println!("{}", acceptance_line(r));
            }
            match results.iter().filter(|r| !r.passed).count() {
                0 => Ok(()),
                k => Err(CliError::Verification(format!("{k} criteria failed"))),
            }
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("galdef: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
