mod commands;
mod doc;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use doc::{Failure, JobResult, Output};

#[derive(Parser)]
#[command(name = "tateperiods", version, about = "Periods of degenerating marked elliptic curves")]
struct Cli {
    /// Write the output document here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multiple zeta value ζ(k1,...,kl).
    Mzv {
        composition: String,
        #[arg(long, default_value_t = 30)]
        precision: u32,
    },
    /// Coefficients of the multiple polylogarithm Li_k(z) up to z^M.
    Polylog {
        composition: String,
        #[arg(long, default_value_t = 10)]
        order: u32,
        /// Exact partial sum at a rational point.
        #[arg(long)]
        at: Option<String>,
        #[arg(long, default_value_t = 30)]
        precision: u32,
    },
    /// Drinfeld associator truncated at weight N.
    Associator {
        #[arg(long)]
        weight: u32,
    },
    /// Numerical KZ transport from the tangent vector 1 at 0.
    Transport {
        /// Rational end point.
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        /// End at the tangent vector with this direction instead of the point.
        #[arg(long, allow_hyphen_values = true)]
        tangent: Option<String>,
        #[arg(long)]
        weight: u32,
        #[arg(long, default_value_t = 30)]
        precision: u32,
    },
    /// Eisenstein series of weight 2k (0 for the constant symbol).
    Eisenstein {
        #[arg(long)]
        weight: u32,
        #[arg(long, default_value_t = 20)]
        order: u32,
    },
    /// Iterated Eisenstein integral E(k1,...,kl).
    EisInt {
        indices: String,
        #[arg(long, default_value_t = 20)]
        order: u32,
    },
    /// Evaluates a q-series at q0 (`p/q`, a decimal, or `[re, im]`).
    EvalQ {
        #[arg(long, allow_hyphen_values = true)]
        q0: String,
        #[arg(long, default_value_t = 30)]
        precision: u32,
        #[arg(long)]
        indices: Option<String>,
        #[arg(long)]
        series: Option<PathBuf>,
        #[arg(long, default_value_t = 60)]
        order: u32,
    },
    #[command(subcommand)]
    Graph(GraphCommand),
    #[command(subcommand)]
    Moebius(MoebiusCommand),
    #[command(subcommand)]
    Check(CheckCommand),
    #[command(subcommand)]
    Period(PeriodCommand),
    /// Quick consistency checks against independent routes.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        precision: u32,
    },
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Connectivity, stability, genus and moduli of a graph file.
    Validate { file: PathBuf },
    /// The basic graph with n tails and its residues.
    Basic {
        #[arg(long)]
        tails: u32,
        #[arg(long, default_value_t = 3)]
        weight: u32,
    },
    /// A random trivalent graph with random rational moduli.
    Random {
        #[arg(long)]
        tails: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Expands a vertex along two of its branches.
    Expand {
        file: PathBuf,
        #[arg(long)]
        vertex: String,
        #[arg(long, allow_hyphen_values = true)]
        branches: String,
        #[arg(long, default_value_t = 3)]
        weight: u32,
    },
}

#[derive(Subcommand)]
enum MoebiusCommand {
    /// Fixed points and multiplier of the gluing map of an edge path.
    Fix {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        path: String,
        #[arg(long, default_value_t = 4)]
        order: u32,
        /// Test point for the fixed-point verification.
        #[arg(long, default_value = "1/997", allow_hyphen_values = true)]
        z: String,
    },
}

#[derive(Subcommand)]
enum CheckCommand {
    /// The contraction parameter of an expanded edge.
    Contraction {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        edge: String,
        #[arg(long, allow_hyphen_values = true)]
        branches: String,
        #[arg(long, default_value_t = 4)]
        order: u32,
    },
}

#[derive(Subcommand)]
enum PeriodCommand {
    /// Assembles the period series of a path.
    Assemble {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        path: PathBuf,
        #[arg(long, default_value_t = 3)]
        weight: u32,
        #[arg(long, default_value_t = 2)]
        order: u32,
    },
    /// Evaluates an assembled period series.
    Eval {
        series: PathBuf,
        #[arg(long)]
        assign: PathBuf,
        #[arg(long, default_value_t = 30)]
        precision: u32,
    },
}

fn run(command: Command) -> JobResult<(Output, bool)> {
    use commands::*;
    let done = |o: Output| (o, true);
    Ok(match command {
        Command::Mzv { composition, precision } => done(mzv(&composition, precision)?),
        Command::Polylog { composition, order, at, precision } => {
            done(polylog(&composition, order, at.as_deref(), precision)?)
        }
        Command::Associator { weight } => done(associator(weight)?),
        Command::Transport { to, tangent, weight, precision } => {
            done(transport(&to, tangent.as_deref(), weight, precision)?)
        }
        Command::Eisenstein { weight, order } => done(eisenstein(weight, order)?),
        Command::EisInt { indices, order } => done(eis_int(&indices, order)?),
        Command::EvalQ { q0, precision, indices, series, order } => {
            done(eval_q(&q0, precision, indices.as_deref(), series.as_deref(), order)?)
        }
        Command::Graph(GraphCommand::Validate { file }) => done(graph_validate(&file)?),
        Command::Graph(GraphCommand::Basic { tails, weight }) => done(graph_basic(tails, weight)?),
        Command::Graph(GraphCommand::Random { tails, seed }) => done(graph_random(tails, seed)?),
        Command::Graph(GraphCommand::Expand { file, vertex, branches, weight }) => {
            done(graph_expand(&file, &vertex, &branches, weight)?)
        }
        Command::Moebius(MoebiusCommand::Fix { file, path, order, z }) => done(moebius_fix(&file, &path, order, &z)?),
        Command::Check(CheckCommand::Contraction { file, edge, branches, order }) => {
            done(check_contraction(&file, &edge, &branches, order)?)
        }
        Command::Period(PeriodCommand::Assemble { graph, path, weight, order }) => {
            done(period_assemble(&graph, &path, weight, order)?)
        }
        Command::Period(PeriodCommand::Eval { series, assign, precision }) => {
            done(period_eval(&series, &assign, precision)?)
        }
        Command::Selftest { seed, precision } => selftest(seed, precision)?,
    })
}

fn emit(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok((output, ok)) => {
            if let Err(e) = emit(cli.out.as_ref(), &output.render()) {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure { status, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(status)
        }
    }
}
