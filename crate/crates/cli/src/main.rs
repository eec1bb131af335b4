use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lydim_cli::{cmd_analyze, cmd_localdim, cmd_render, cmd_validate, cmd_verify, CliError, Overrides, Status};

#[derive(Parser)]
#[command(name = "lydim", version, about = "Dimension estimates for triangular iterated function systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// System configuration file.
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo sample size.
    #[arg(long)]
    samples: Option<usize>,
    /// Independent trials for the ergodic averages.
    #[arg(long)]
    trials: Option<usize>,
    /// Word length of the separation certificate.
    #[arg(long)]
    depth: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            samples: self.samples,
            trials: self.trials,
            depth: self.depth,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the standing hypotheses of the system.
    Validate(Common),
    /// Estimate entropy, exponents and dimensions; writes report.txt,
    /// localdim.csv and convergence.csv.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the numerical lemma checks.
    Verify(Common),
    /// Sample points of the invariant measure as CSV.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        #[arg(long, default_value = "points.csv")]
        out: PathBuf,
    },
    /// Estimate only the local dimension field.
    Localdim {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<Status, CliError> {
    match cli.command {
        Command::Validate(c) => cmd_validate(&c.config, &c.overrides(), out),
        Command::Analyze { common, out: dir } => cmd_analyze(&common.config, &dir, &common.overrides(), out).map(|_| Status::Pass),
        Command::Verify(c) => cmd_verify(&c.config, &c.overrides(), out).map(|(s, _)| s),
        Command::Render { common, count, out: file } => cmd_render(&common.config, count, &file, &common.overrides()).map(|_| Status::Pass),
        Command::Localdim { common, out: dir } => cmd_localdim(&common.config, &dir, &common.overrides(), out).map(|_| Status::Pass),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let stdout = io::stdout();
    let code = match run(cli, &mut stdout.lock()) {
        Ok(status) => status.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
