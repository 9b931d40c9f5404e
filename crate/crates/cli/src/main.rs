use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gklab_cli::commands::{self, Resolve};
use gklab_cli::config::{self, invalid, InvalidInput};
use gklab_cli::table::Table;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Numerical laboratory for gatekeeper screening: thresholds, correctness
/// maps, strategic gatekeeping and the biased two-candidate game.
#[derive(Parser)]
#[command(name = "gklab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// TOML or JSON config; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print JSON at full precision
    #[arg(long, global = true)]
    json: bool,
    /// Write output to this file instead of standard output
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Thresholds and correctness for one solo market
    Solo(commands::SoloArgs),
    /// Correctness with and without a mechanical gatekeeper over a (mu, q) grid
    CorrectnessMap(commands::CorrectnessMapArgs),
    /// Prior above which mechanical gatekeeping stops being a best response
    MuBar(commands::MuBarArgs),
    /// Equilibria of the two-candidate game over a grid of q_B
    Biased(commands::BiasedArgs),
    /// Monte Carlo run with analytic counterparts
    Simulate(commands::SimulateArgs),
}

#[derive(Parser)]
struct Top {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    cli: Cli,
}

#[derive(Serialize)]
struct JsonOut<'a, C, R> {
    command: &'a str,
    config: C,
    result: R,
}

fn main() -> ExitCode {
    let top = Top::parse();
    match run(top) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InvalidInput>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<gklab_core::Error>() {
            return match e {
                gklab_core::Error::InvalidParameter { .. }
                | gklab_core::Error::Domain(_)
                | gklab_core::Error::UniformDomain(_)
                | gklab_core::Error::Config(_) => 2,
                _ => 1,
            };
        }
        if cause.is::<std::io::Error>() {
            return 3;
        }
    }
    1
}

fn threads() -> Result<()> {
    let Ok(raw) = std::env::var("GKLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        invalid(format!(
            "GKLAB_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

fn resolve<T: Serialize + DeserializeOwned>(
    flags: &T,
    path: Option<&Path>,
    command: &str,
) -> Result<T> {
    let file = path.map(|p| config::load(p, command)).transpose()?;
    config::merge(flags, file)
}

fn emit(io: &Io, text: &str) -> Result<()> {
    match &io.output {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .context("writing to standard output")
        }
    }
}

fn emit_json<C: Serialize, R: Serialize>(
    io: &Io,
    command: &str,
    config: C,
    result: R,
) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&JsonOut {
        command,
        config,
        result,
    })?;
    text.push('\n');
    emit(io, &text)
}

fn emit_rows<C: Serialize, R: Serialize>(
    io: &Io,
    command: &str,
    config: C,
    rows: &[R],
    table: Table,
) -> Result<()> {
    if io.json {
        emit_json(io, command, config, rows)
    } else {
        emit(io, &table.render())
    }
}

fn run(top: Top) -> Result<ExitCode> {
    threads()?;
    let io = &top.io;
    let path = io.config.as_deref();
    match top.cli.command {
        Command::Solo(args) => {
            let args = resolve(&args, path, "solo")?;
            let summary = commands::solo(&args)?;
            if io.json {
                emit_json(io, "solo", args.resolved(), &summary)?;
            } else {
                emit(io, &summary.render())?;
            }
        }
        Command::CorrectnessMap(args) => {
            let args = resolve(&args, path, "correctness-map")?;
            let cells = commands::correctness_map(&args)?;
            emit_rows(
                io,
                "correctness-map",
                args.resolved(),
                &cells,
                commands::correctness_table(&cells),
            )?;
        }
        Command::MuBar(args) => {
            let args = resolve(&args, path, "mu-bar")?;
            let rows = commands::mu_bar_sweep(&args)?;
            emit_rows(
                io,
                "mu-bar",
                args.resolved(),
                &rows,
                commands::mu_bar_table(&rows),
            )?;
        }
        Command::Biased(args) => {
            let args = resolve(&args, path, "biased")?;
            let rows = commands::biased_sweep(&args)?;
            emit_rows(
                io,
                "biased",
                args.resolved(),
                &rows,
                commands::biased_table(&rows),
            )?;
            let failed = rows.iter().filter(|r| !r.converged).count();
            if failed > 0 {
                eprintln!("warning: {failed} grid point(s) did not converge");
                if args.strict {
                    return Ok(ExitCode::from(1));
                }
            }
        }
        Command::Simulate(args) => {
            let args = resolve(&args.with_scenario_flags(), path, "simulate")?;
            let result = commands::simulate(&args)?;
            emit_json(io, "simulate", args.resolved(), &result)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
