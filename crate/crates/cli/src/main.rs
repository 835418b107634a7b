//! Command line runner for coarse entropy experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coarse_entropy::experiment::{preset, run, ExperimentConfig, PresetId, TaskKind};
use coarse_entropy::Error;

const CONFIG_INVALID: u8 = 2;

#[derive(Parser)]
#[command(name = "coarse-entropy", version, about = "Estimate coarse entropy and run the preset experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config made of entropy estimates and count audits.
    Estimate(ConfigArgs),
    /// Run a config made of box-counting dimension estimates.
    Bcd(ConfigArgs),
    /// Run a config made of coarse-map checks.
    CheckMap(ConfigArgs),
    /// Run any config; expectations are reported but do not change the exit code.
    Run(ConfigArgs),
    /// Run a preset and check its expected outcome.
    Reproduce {
        preset: String,
        /// Write the preset config to this path (`-` for stdout) instead of running it.
        #[arg(long, value_name = "PATH")]
        export_config: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// List the preset names.
    ListPresets,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct OutArgs {
    /// Directory for `<name>.json` and `<name>.csv`; overrides the config's output paths.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => CONFIG_INVALID,
                _ => 1,
            })
        }
    }
}

fn execute(command: Command) -> Result<u8, Error> {
    match command {
        Command::Estimate(args) => {
            let allowed = [TaskKind::Estimate, TaskKind::ProductAudit, TaskKind::SegmentLengths];
            run_file(&args, Some(&allowed))
        }
        Command::Bcd(args) => run_file(&args, Some(&[TaskKind::Bcd])),
        Command::CheckMap(args) => {
            run_file(&args, Some(&[TaskKind::Conjugacy, TaskKind::DefectCurve, TaskKind::Embedding]))
        }
        Command::Run(args) => run_file(&args, None),
        Command::Reproduce { preset: name, export_config, out } => {
            let id: PresetId = name.parse().map_err(Error::Config)?;
            let config = preset(id);
            if let Some(path) = export_config {
                let text = config.to_json() + "\n";
                if path.as_os_str() == "-" {
                    print!("{text}");
                } else {
                    std::fs::write(&path, text)?;
                    eprintln!("wrote {}", path.display());
                }
                return Ok(0);
            }
            execute_config(config, &out, true)
        }
        Command::ListPresets => {
            for id in PresetId::ALL {
                println!("{:<20} {}", id.name(), id.description());
            }
            Ok(0)
        }
    }
}

fn run_file(args: &ConfigArgs, allowed: Option<&[TaskKind]>) -> Result<u8, Error> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let config = ExperimentConfig::from_json(&text)?;
    if let Some(allowed) = allowed {
        if let Some(kind) = config.kinds().into_iter().find(|k| !allowed.contains(k)) {
            return Err(Error::Config(format!("task kind {kind:?} does not belong to this subcommand; use `run`")));
        }
    }
    execute_config(config, &args.out, false)
}

fn budget_override() -> Result<Option<u64>, Error> {
    match std::env::var("ORBIT_BUDGET") {
        Ok(v) => match v.trim().parse::<u64>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("ORBIT_BUDGET must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn output_paths(config: &ExperimentConfig, out: &OutArgs) -> (PathBuf, PathBuf) {
    let in_dir = |dir: &Path| (dir.join(format!("{}.json", config.name)), dir.join(format!("{}.csv", config.name)));
    match &out.out {
        Some(dir) => in_dir(dir),
        None => {
            let (json, csv) = in_dir(Path::new("results"));
            (config.output.json.clone().unwrap_or(json), config.output.csv.clone().unwrap_or(csv))
        }
    }
}

fn execute_config(mut config: ExperimentConfig, out: &OutArgs, assertions: bool) -> Result<u8, Error> {
    if let Some(n) = budget_override()? {
        config.budget.orbits = n;
    }
    let (json, csv) = output_paths(&config, out);
    let outcome = run(&config)?;
    outcome.write(&json, &csv)?;
    println!("{}", outcome.summary);
    for c in outcome.checks.iter().filter(|c| !c.passed) {
        eprintln!("check {} on {} failed: {}", c.check, c.task, c.detail);
    }
    eprintln!("wrote {} and {}", json.display(), csv.display());
    Ok(outcome.exit_code(assertions) as u8)
}
