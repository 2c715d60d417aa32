use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use doublon_lab::{config, presets, run_experiment};

#[derive(Parser)]
#[command(name = "doublon-lab", version, about = "Doublon quantum-walk experiments: exact, Trotter, recompiled and noisy circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write results.csv, config.resolved and plot.gp.
    Run {
        /// Config file, or the name of a shipped preset (e.g. fig2b).
        config: String,
        /// Override a config key, e.g. --set noise.p2=0.02 (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Worker threads for sweep points.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output directory (defaults to the config's `out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Resolve defaults, check the config and print it without running.
    Validate {
        config: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Presets shipped with the binary.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// One line per preset.
    List,
    /// Print a preset's TOML.
    Show { name: String },
}

fn load(source: &str, overrides: &[String]) -> anyhow::Result<config::ExperimentConfig> {
    let text = match std::fs::read_to_string(source) {
        Ok(t) => t,
        Err(e) => match presets::get(source) {
            Some(t) => t.to_string(),
            None => return Err(e).with_context(|| format!("reading {source}")),
        },
    };
    let cfg = config::parse(&text, overrides).with_context(|| format!("invalid config {source}"))?;
    cfg.resolve().with_context(|| format!("invalid config {source}"))
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { config, overrides, jobs, out } => {
            let cfg = load(&config, &overrides)?;
            let out = out.unwrap_or_else(|| cfg.out.clone());
            let warnings = run_experiment(&cfg, jobs, &out)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", out.display());
        }
        Command::Validate { config, overrides } => {
            print!("{}", load(&config, &overrides)?.to_toml());
        }
        Command::Presets { action: PresetAction::List } => {
            for (name, text) in presets::PRESETS {
                println!("{name:7} {}", presets::summary(text));
            }
        }
        Command::Presets { action: PresetAction::Show { name } } => {
            let text = presets::get(&name).with_context(|| format!("no preset named {name}"))?;
            print!("{text}");
        }
    }
    Ok(())
}
