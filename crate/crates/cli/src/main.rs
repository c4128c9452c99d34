//! `tlg`: verification and simulation front end.

mod graphs;
mod numerics;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "tlg", version, about = "Time-like graphs, Gaussian processes on them, and lattice schemes")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Master seed for stochastic commands.
    #[arg(long, global = true, env = "TLG_SEED")]
    pub seed: Option<u64>,
    /// Output directory (default `tlg-out/<command>`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    pub force: bool,
}

impl Common {
    pub fn need_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| anyhow!("this command is stochastic: pass --seed or set TLG_SEED"))
    }

    pub fn out_dir(&self, command: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("tlg-out").join(command))
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a graph file as TLG, TLG* and TLG**, writing a tower when one exists.
    Verify(graphs::VerifyArgs),
    /// Sample process paths on every edge of a model.
    Sample(graphs::SampleArgs),
    /// Exact covariance and precision at the vertices or at given points.
    Covariance(graphs::CovarianceArgs),
    /// Cell-Markov and moral-graph checks of a model.
    Cellcheck(graphs::ModelArgs),
    /// Stochastic heat equation schemes.
    She(numerics::SheArgs),
    /// Rhombus-grid field and its moment diagnostics.
    Rhombus(numerics::RhombusArgs),
    /// Galton-Watson time-like trees and branching Brownian motion.
    Gwtree(numerics::GwArgs),
    /// Maxima of independent Brownian bridges and Gaussian maxima bounds.
    Maxima(numerics::MaximaArgs),
    /// The naive sequential-bridge construction and the bridge-pair identity.
    Counterexample(graphs::CounterexampleArgs),
    /// Write the built-in example graphs and models as JSON.
    #[command(hide = true)]
    Fixtures,
}

/// Result of a command that ran to completion.
pub enum Outcome {
    Success,
    Negative,
}

fn run(cli: Cli) -> Result<Outcome> {
    let c = &cli.common;
    match cli.command {
        Command::Verify(a) => graphs::verify(c, a),
        Command::Sample(a) => graphs::sample(c, a),
        Command::Covariance(a) => graphs::covariance(c, a),
        Command::Cellcheck(a) => graphs::cellcheck(c, a),
        Command::Counterexample(a) => graphs::counterexample(c, a),
        Command::Fixtures => graphs::fixtures(c),
        Command::She(a) => numerics::she(c, a),
        Command::Rhombus(a) => numerics::rhombus(c, a),
        Command::Gwtree(a) => numerics::gwtree(c, a),
        Command::Maxima(a) => numerics::maxima(c, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Negative) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}

/// Error chain joined by `: `, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut last = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !last.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
        last = msg;
    }
    out
}

/// Splits a comma-separated list.
pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| anyhow!("bad list entry `{p}`: {e}")))
        .collect()
}

/// Parses `a:b;c:d` into pairs.
pub fn parse_pairs(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (a, b) = p.split_once(':').ok_or_else(|| anyhow!("expected `a:b`, got `{p}`"))?;
            Ok((a.trim().parse()?, b.trim().parse()?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_pairs_parse() {
        assert_eq!(parse_list::<u64>("64, 256,1024").unwrap(), vec![64, 256, 1024]);
        assert_eq!(parse_pairs("0.5:0.25; -1:2").unwrap(), vec![(0.5, 0.25), (-1.0, 2.0)]);
        assert!(parse_pairs("0.5").is_err());
        assert!(parse_list::<u64>("1,x").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
