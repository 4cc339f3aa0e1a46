use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hypermeasure_cli::{run, CliError, Command, Invocation};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "hypermeasure", version, about = "Equilibrium states of hyperbolic model systems")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Partition-sum pressure estimate.
    Pressure(Common),
    /// Reference measure on an unstable leaf, with its scaling and Gibbs checks.
    Refmeasure(Common),
    /// Averaged pushforwards of leaf measures and convergence diagnostics.
    Evolve(Common),
    /// Pressure curve of the geometric potential and the root of Bowen's equation.
    Dim(Common),
    /// Built-in checks against exact oracles.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a top-level config field with a JSON value, e.g. `--set order=10`.
    #[arg(long = "set", value_name = "KEY=JSON")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Output directory; overrides `output_dir` and the environment default.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn overrides(c: &Common) -> Result<Vec<(String, Value)>, CliError> {
    let mut out = Vec::new();
    for s in &c.set {
        let (k, v) = s.split_once('=').ok_or_else(|| CliError::Config(format!("--set {s}: expected KEY=JSON")))?;
        // bare words are taken as strings
        let v = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        out.push((k.to_string(), v));
    }
    let flags = [
        ("seed", c.seed.map(Value::from)),
        ("r", c.r.map(Value::from)),
        ("order", c.order.map(Value::from)),
        ("budget", c.budget.map(Value::from)),
        ("n", c.n.map(Value::from)),
    ];
    out.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match &cli.command {
        Cmd::Pressure(c) => (Command::Pressure, c),
        Cmd::Refmeasure(c) => (Command::Refmeasure, c),
        Cmd::Evolve(c) => (Command::Evolve, c),
        Cmd::Dim(c) => (Command::Dim, c),
        Cmd::Verify(c) => (Command::Verify, c),
    };
    let result = overrides(common).and_then(|overrides| {
        run(&Invocation { command, config: common.config.clone(), overrides, out: common.out.clone() })
    });
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("hypermeasure: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
