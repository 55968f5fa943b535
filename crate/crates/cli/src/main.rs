use std::path::PathBuf;
use std::process::ExitCode;

use bipo_cli::{exit_code, run, Command, Overrides, EXIT_CONFIG};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bipo", version, about = "Bipotentials from convex lagrangian covers on sampled grids")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Conjugate and biconjugate of the configured function.
    Conjugate(Common),
    /// Synthesize b and its graph.
    Synth(Common),
    /// Full verification: axioms, graphs, Fan checks, minimax.
    Verify(Common),
    /// Minimax identities at the probe points.
    Minimax(Common),
    /// Fan bi-implicit convexity of the cover.
    FanCheck(Common),
    /// Graph of b, union graph, BB test and graph identity.
    Graph(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    exhaustive: bool,
    #[arg(long = "tol-graph")]
    tol_graph: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    slack: Option<usize>,
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("BIPO_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("BIPO_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("config error: {msg}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    let (command, args) = match cli.command {
        Cmd::Conjugate(a) => (Command::Conjugate, a),
        Cmd::Synth(a) => (Command::Synth, a),
        Cmd::Verify(a) => (Command::Verify, a),
        Cmd::Minimax(a) => (Command::Minimax, a),
        Cmd::FanCheck(a) => (Command::FanCheck, a),
        Cmd::Graph(a) => (Command::Graph, a),
    };
    let overrides = Overrides {
        out: args.out,
        seed: args.seed,
        exhaustive: args.exhaustive,
        tol_graph: args.tol_graph,
        delta: args.delta,
        slack: args.slack,
    };
    let result = run(command, &args.config, &overrides);
    match &result {
        Ok(summary) => {
            summary.print();
            let failing = summary.failing();
            if !failing.is_empty() {
                eprintln!("failed checks: {}", failing.join(", "));
            }
        }
        Err(e) => eprintln!("{e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
