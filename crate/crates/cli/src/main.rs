use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sandwich_cli::commands::{cmd_params, cmd_run, cmd_sweep, probe, ParamsArgs, ProbeArgs, SweepArgs};
use sandwich_cli::config::ExperimentArgs;
use sandwich_cli::suites::{cmd_verify, Suite};
use sandwich_cli::CliError;

#[derive(Parser)]
#[command(
    name = "sandwich",
    version,
    about = "Sandwich coupling of random regular graphs between binomial graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials and write one JSON line per trial plus a summary.
    Run(ExperimentArgs),
    /// Run a verification suite; exits 0 iff every check passes.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        args: ExperimentArgs,
    },
    /// Print the parameter selection and constraint report as JSON.
    Params(ParamsArgs),
    /// Conditional probability of one edge in a random factor of a host graph.
    Probe(ProbeArgs),
    /// One summary CSV row per grid point.
    Sweep(SweepArgs),
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run(args) => cmd_run(&args),
        Command::Verify { suite, args } => match cmd_verify(suite, &args)? {
            true => Ok(()),
            false => Err(CliError::Failed("verification failed".into())),
        },
        Command::Params(args) => cmd_params(&args),
        Command::Probe(args) => {
            println!("{}", probe(&args)?);
            Ok(())
        }
        Command::Sweep(args) => match cmd_sweep(&args)? {
            false => Ok(()),
            true => Err(CliError::InvariantBroken(
                "an invariant was violated at some grid point; see the error column".into(),
            )),
        },
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
