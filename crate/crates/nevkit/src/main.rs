use clap::{Args, Parser, Subcommand};
use nevkit::harness::{execute, Overrides};
use std::path::PathBuf;

/// Numerical experiments around the difference analogue of the lemma on
/// the logarithmic derivative.
#[derive(Parser)]
#[command(name = "nevkit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiments described by a config file.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Config file: flat `key = value` pairs, plus optional [sections]
    /// describing additional experiments.
    config: PathBuf,

    /// Override the suite for every experiment.
    #[arg(long)]
    suite: Option<String>,

    /// Override the subject function (catalog text).
    #[arg(long)]
    function: Option<String>,

    /// Override the shift c (complex literal, e.g. `1`, `2i`, `1+2i`).
    #[arg(long)]
    c: Option<String>,

    #[arg(long)]
    r_start: Option<f64>,

    #[arg(long)]
    r_stop: Option<f64>,

    #[arg(long)]
    r_count: Option<usize>,

    /// Log-spaced radius grid (`--r-log true|false`).
    #[arg(long)]
    r_log: Option<bool>,

    #[arg(long)]
    alpha: Option<f64>,

    #[arg(long)]
    delta: Option<f64>,

    #[arg(long)]
    epsilon: Option<f64>,

    /// Apply the 1/r^delta factor twice, as in the theorem statement.
    #[arg(long)]
    strict_statement: bool,

    #[arg(long)]
    seed: Option<u64>,

    /// Output CSV path.
    #[arg(long)]
    out: Option<String>,

    #[arg(long)]
    quad_tol: Option<f64>,

    #[arg(long)]
    quad_max_nodes: Option<usize>,

    /// Append one synthetic failing row (exit-code contract testing).
    #[arg(long)]
    inject_failure: bool,
}

fn main() {
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;
    let overrides = Overrides {
        suite: args.suite,
        function: args.function,
        c: args.c,
        r_start: args.r_start,
        r_stop: args.r_stop,
        r_count: args.r_count,
        r_log: args.r_log,
        alpha: args.alpha,
        delta: args.delta,
        epsilon: args.epsilon,
        strict_statement: args.strict_statement,
        seed: args.seed,
        out: args.out,
        quad_tol: args.quad_tol,
        quad_max_nodes: args.quad_max_nodes,
        inject_failure: args.inject_failure,
    };
    std::process::exit(execute(&args.config, &overrides));
}
