//! `ellipk`: high-precision elliptic integrals and `Γ(1/4)²/π^(3/2)` from
//! singular-modulus series.

mod commands;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ellipk_core::Rational64;

use crate::commands::Failure;
use crate::report::RunReport;

#[derive(Debug, Parser)]
#[command(
    name = "ellipk",
    version,
    about = "High-precision elliptic integrals and lemniscatic constants"
)]
struct Cli {
    /// Target decimal digits (a comma-separated list for `bench`).
    #[arg(long, global = true)]
    digits: Option<String>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a named constant by its series.
    Constant {
        #[arg(value_enum)]
        name: ConstantName,
    },
    /// Complete elliptic integral K or E at the singular modulus k_r.
    Elliptic {
        #[arg(value_enum)]
        kind: Kind,
        /// Positive rational `p/q` or integer.
        #[arg(long, value_parser = parse_r)]
        r: Rational64,
        #[arg(long, value_enum, default_value_t = Method::Both)]
        method: Method,
    },
    /// Run the invariant suites.
    Verify {
        /// Comma-separated subset of oracle, moduli, series, chain, all.
        #[arg(long, default_value = "all")]
        selection: String,
    },
    /// Convergence-rate benchmark of the headline series.
    Bench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConstantName {
    GammaQuarter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    #[value(name = "K")]
    K,
    #[value(name = "E")]
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Series,
    Agm,
    Both,
}

fn parse_r(s: &str) -> Result<Rational64, String> {
    let r: Rational64 = s
        .trim()
        .parse()
        .map_err(|e| format!("'{s}' is not a rational p/q: {e}"))?;
    if *r.numer() <= 0 {
        return Err(format!("r must be positive, got {r}"));
    }
    Ok(r)
}

fn parse_digits(raw: Option<&str>, default: &[u32], list: bool) -> Result<Vec<u32>, String> {
    let Some(raw) = raw else {
        return Ok(default.to_vec());
    };
    let values = raw
        .split(',')
        .map(|d| {
            d.trim()
                .parse::<u32>()
                .map_err(|_| format!("--digits: '{d}' is not a whole number"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if !list && values.len() != 1 {
        return Err("--digits takes a single value for this command".into());
    }
    Ok(values)
}

fn emit(reports: &[RunReport], format: Format, many: bool) {
    match format {
        Format::Json => {
            let text = if many {
                serde_json::to_string_pretty(reports)
            } else {
                serde_json::to_string_pretty(&reports[0])
            };
            println!("{}", text.expect("report serializes"));
        }
        Format::Text => {
            for r in reports {
                print!("{}", r.text());
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (defaults, list): (&[u32], bool) = match cli.command {
        Command::Verify { .. } => (&[250], false),
        Command::Bench => (&[500, 1000, 2000], true),
        _ => (&[100], false),
    };
    let digits = match parse_digits(cli.digits.as_deref(), defaults, list) {
        Ok(d) => d,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };

    let outcome = match &cli.command {
        Command::Constant { name } => commands::constant(*name, digits[0]).map(|r| vec![r]),
        Command::Elliptic { kind, r, method } => {
            commands::elliptic(*kind, *r, *method, digits[0]).map(|r| vec![r])
        }
        Command::Verify { selection } => {
            commands::verify(selection, digits[0], cli.format == Format::Text).map(|r| vec![r])
        }
        Command::Bench => commands::bench(&digits),
    };
    match outcome {
        Ok(reports) => {
            emit(&reports, cli.format, matches!(cli.command, Command::Bench));
            ExitCode::SUCCESS
        }
        Err(Failure::Verification(report)) => {
            emit(&[*report], cli.format, false);
            ExitCode::from(3)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
