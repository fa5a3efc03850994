//! `superrad`: batch runs of the collective-emission models.

mod config;
mod run;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use superrad::models::presets;
use superrad::Error;

use config::{Backend, Command, RunConfig};

#[derive(Parser)]
#[command(
    name = "superrad",
    version,
    about = "Collective emission of color centers in a lossy cavity"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Steady populations, radiation and Dicke numbers across a sweep.
    SteadySweep(RunArgs),
    /// g²(τ) curves and their characteristic values.
    G2(RunArgs),
    /// Radiation after the pump is switched off.
    Pulse(RunArgs),
    /// Emission spectra and fitted peaks.
    Spectrum(RunArgs),
    /// Steady populations of the Dicke states.
    DickeMap(RunArgs),
    /// Resolve a configuration and print it without running.
    ValidateConfig(ValidateArgs),
    /// Shipped model presets.
    Presets {
        #[command(subcommand)]
        action: PresetCmd,
    },
}

#[derive(Subcommand)]
enum PresetCmd {
    /// Names and descriptions.
    List,
    /// Print a preset file.
    Show { name: String },
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML run configuration, or a CSV written by an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<Backend>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Threads for independent sweep points.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// `key=value`, applied in order; `sweep.`, `options.` and `run.` keys
    /// address those sections, anything else the model.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Validate the built-in scenario of this command instead.
    #[arg(long, value_enum)]
    command: Option<Command>,
    #[arg(long, value_enum)]
    backend: Option<Backend>,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Capacity { .. } => 3,
        Error::Stiffness { .. }
        | Error::Multiplicity { .. }
        | Error::NotStationary { .. }
        | Error::Normalization(_)
        | Error::Domain(_)
        | Error::LinearSolve(_)
        | Error::NotHermitian { .. } => 4,
        _ => 2,
    }
}

fn resolve(
    command: Option<Command>,
    config: Option<&Path>,
    backend: Option<Backend>,
    overrides: &[String],
) -> superrad::Result<RunConfig> {
    let mut cfg = match config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let cfg = RunConfig::from_text(&text)?;
            if let Some(c) = command {
                if cfg.command != c {
                    return Err(Error::Validation {
                        field: "run.command".into(),
                        reason: format!("config is for `{}`, not `{}`", cfg.command.name(), c.name()),
                    });
                }
            }
            cfg
        }
        None => {
            let c = command.ok_or_else(|| Error::Validation {
                field: "config".into(),
                reason: "give --config or --command".into(),
            })?;
            RunConfig::default_for(c)
        }
    };
    if let Some(b) = backend {
        cfg.backend = b;
    }
    for o in overrides {
        cfg.apply_override(o)?;
    }
    cfg.check()?;
    Ok(cfg)
}

/// Write through a temporary file in the same directory, then rename.
fn write_atomic(path: &Path, text: &str) -> superrad::Result<()> {
    let tmp = path.with_extension("csv.partial");
    let mut f = fs::File::create(&tmp)?;
    f.write_all(text.as_bytes())?;
    f.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn execute(command: Command, args: &RunArgs) -> superrad::Result<()> {
    let cfg = resolve(Some(command), args.config.as_deref(), args.backend, &args.overrides)?;
    let outputs = run::run(&cfg, args.workers)?;
    fs::create_dir_all(&args.out)?;
    let header = cfg.resolved_toml();
    for o in outputs {
        let path = args.out.join(o.file);
        write_atomic(&path, &o.table.to_string_with_header(&header))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::SteadySweep(a) => execute(Command::SteadySweep, a),
        Cmd::G2(a) => execute(Command::G2, a),
        Cmd::Pulse(a) => execute(Command::Pulse, a),
        Cmd::Spectrum(a) => execute(Command::Spectrum, a),
        Cmd::DickeMap(a) => execute(Command::DickeMap, a),
        Cmd::ValidateConfig(a) => resolve(a.command, a.config.as_deref(), a.backend, &a.overrides)
            .map(|cfg| print!("{}", cfg.resolved_toml())),
        Cmd::Presets { action } => match action {
            PresetCmd::List => {
                for name in presets::NAMES {
                    let desc = presets::value(name)
                        .ok()
                        .and_then(|v| v.get("description").and_then(|d| d.as_str().map(String::from)))
                        .unwrap_or_default();
                    println!("{name}\t{desc}");
                }
                Ok(())
            }
            PresetCmd::Show { name } => match presets::source(name) {
                Some(text) => {
                    print!("{text}");
                    Ok(())
                }
                None => Err(Error::Validation {
                    field: "preset".into(),
                    reason: format!("no preset named `{name}`"),
                }),
            },
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
