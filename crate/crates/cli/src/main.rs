use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::Value;
use swgate::error::Error;
use swgate::experiment::{self, RunConfig, PRESETS};

/// Simulations and error budgets for standing-wave trapped-ion gates.
#[derive(Parser, Debug)]
#[command(name = "swgate", version = experiment::VERSION)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment from a JSON config or a named preset.
    ///
    /// Any further `--key=value` or `key=value` argument overrides a config
    /// entry; nested entries use dotted keys, e.g. `--params.eta=0.04`.
    Run {
        /// RunConfig JSON file.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Named preset (see `swgate presets`).
        #[arg(long)]
        preset: Option<String>,
        /// Worker threads for scans; defaults to the number of logical cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Config overrides.
        #[arg(value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List the named presets.
    Presets,
    /// Print a preset's resolved configuration as JSON.
    Show { preset: String },
}

const EXIT_INVALID: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    if err.is_numerical() {
        ExitCode::from(EXIT_NUMERICAL)
    } else {
        ExitCode::from(EXIT_INVALID)
    }
}

const RUN_FLAGS: [&str; 5] = ["config", "preset", "jobs", "seed", "output-dir"];

/// Splits `--key=value` overrides from the arguments clap understands.
fn split_args(args: impl IntoIterator<Item = String>) -> (Vec<String>, Vec<String>) {
    let mut clap_args = Vec::new();
    let mut overrides = Vec::new();
    for arg in args {
        let key = arg.strip_prefix("--").and_then(|rest| rest.split_once('=')).map(|(k, _)| k);
        match key {
            Some(k) if !RUN_FLAGS.contains(&k) => overrides.push(arg),
            _ => clap_args.push(arg),
        }
    }
    (clap_args, overrides)
}

fn parse_override(raw: &str) -> Result<(String, String), Error> {
    let body = raw.trim_start_matches("--");
    match body.split_once('=') {
        Some((k, v)) if !k.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => Err(Error::Config(format!("expected KEY=VALUE, got `{raw}`"))),
    }
}

fn build_config(
    config: Option<PathBuf>,
    preset: Option<String>,
    seed: Option<u64>,
    output_dir: Option<PathBuf>,
    raw: &[String],
) -> Result<RunConfig, Error> {
    let base = match (&config, &preset) {
        (Some(path), _) => experiment::read_config_value(path)?,
        (None, Some(name)) => serde_json::to_value(experiment::preset(name)?)?,
        (None, None) => return Err(Error::Config("either --config or --preset is required".into())),
    };
    let mut overrides = raw.iter().map(|r| parse_override(r)).collect::<Result<Vec<_>, _>>()?;
    if let Some(s) = seed {
        overrides.push(("seed".into(), s.to_string()));
    }
    if let Some(dir) = output_dir {
        overrides.push(("output_dir".into(), Value::String(dir.display().to_string()).to_string()));
    }
    experiment::resolve_config(base, &overrides)
}

fn main() -> ExitCode {
    let (args, extra) = split_args(std::env::args());
    let cli = Cli::parse_from(args);
    match cli.command {
        Command::Presets => {
            for (name, exp) in PRESETS {
                println!("{name:<12} {}", exp.name());
            }
            ExitCode::SUCCESS
        }
        Command::Show { preset } => match experiment::preset(&preset) {
            Ok(cfg) => {
                println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
                ExitCode::SUCCESS
            }
            Err(e) => exit_for(&e),
        },
        Command::Run {
            config,
            preset,
            jobs,
            seed,
            output_dir,
            mut overrides,
        } => {
            overrides.extend(extra);
            if let Some(n) = jobs {
                if n == 0 {
                    return exit_for(&Error::Config("--jobs must be at least 1".into()));
                }
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("warning: could not size worker pool: {e}");
                }
            }
            let cfg = match build_config(config, preset, seed, output_dir, &overrides) {
                Ok(c) => c,
                Err(e) => return exit_for(&e),
            };
            match experiment::run(&cfg) {
                Ok((paths, out)) => {
                    if let Some(report) = out.report {
                        print!("{report}");
                    }
                    for p in paths {
                        eprintln!("wrote {}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => exit_for(&e),
            }
        }
    }
}
