mod commands;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Stochastic probing under inner and outer constraints.
#[derive(Debug, Parser)]
#[command(name = "probe", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Instance document (an auction document for `spm`).
    #[arg(long, global = true)]
    pub instance: Option<std::path::PathBuf>,
    /// Master seed; required by `acceptance`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo trials.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Sampling scale of the rounding.
    #[arg(long, global = true)]
    pub b: Option<f64>,
    /// Inner CR scheme (default ordered-by-weight)
    #[arg(long, global = true)]
    pub inner_scheme: Option<String>,
    /// Outer CR scheme (default ordered-by-index)
    #[arg(long, global = true)]
    pub outer_scheme: Option<String>,
    /// Mechanisms sampled by `spm`, keeping the best by exact revenue.
    #[arg(long, global = true)]
    pub best_of: Option<usize>,
    /// Reject unknown fields instead of warning.
    #[arg(long, global = true)]
    pub strict: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    Greedy,
    DeadlineGreedy,
    Rounding,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Greedy by probability, exact when small.
    Greedy,
    /// Greedy with the deadline relaxation.
    GreedyDeadline,
    /// Solve the probing LP.
    Lp,
    /// Draw one non-adaptive policy from the LP rounding.
    Round,
    /// Build a sequential posted-price mechanism.
    Spm,
    /// Monte Carlo value of a policy.
    Simulate {
        #[arg(long, value_enum, default_value_t = PolicyKind::Greedy)]
        policy: PolicyKind,
    },
    /// Optimal adaptive value by dynamic programming.
    Oracle {
        /// Respect element deadlines.
        #[arg(long)]
        deadline: bool,
    },
    /// Dual certificates for every greedy path.
    Certify,
    /// Empirical retention of the contention resolution schemes.
    VerifyCr,
    /// Run the acceptance suite.
    Acceptance {
        /// Criteria to run (all when omitted).
        #[arg(long = "criterion")]
        criteria: Vec<usize>,
    },
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(&cli, argv) {
        Ok(report) => {
            let text = match cli.format {
                Format::Json => report.render_json(),
                Format::Text => report.render_text(),
            };
            print!("{text}");
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
