use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::{preset, run, run_compare, run_sweep, ScenarioConfig, PRESET_NAMES};
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "pqm", version, about = "Polariton quantum memristor simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Source {
    /// Named figure preset (see `presets list`).
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    /// Scenario file in TOML.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Overrides {
    /// Number of uniform output samples.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub rtol: Option<f64>,
    #[arg(long)]
    pub atol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write trajectory, loop and summary files.
    Run {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a scenario once per parameter value.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
        /// t_peak, t_over_tau, xi_f, j, loss, initial_state or samples.
        #[arg(long)]
        parameter: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Contrast loop areas across initial states for several models.
    CompareModels {
        #[arg(long = "preset")]
        presets: Vec<String>,
        #[arg(long = "config")]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// List or print presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Check a scenario without integrating it.
    Validate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Debug, Subcommand)]
pub enum PresetAction {
    List,
    /// Print a preset as TOML.
    Show { name: String },
}

fn load(source: &Source, overrides: &Overrides) -> Result<ScenarioConfig> {
    let mut cfg = match (&source.preset, &source.config) {
        (Some(name), None) => preset(name)?,
        (None, Some(path)) => ScenarioConfig::load(path)?,
        _ => return Err(Error::Validation("give exactly one of --preset or --config".into())),
    };
    apply_overrides(&mut cfg, overrides);
    Ok(cfg)
}

fn apply_overrides(cfg: &mut ScenarioConfig, o: &Overrides) {
    if let Some(n) = o.samples {
        cfg.integrator.output_samples = n;
    }
    if let Some(r) = o.rtol {
        cfg.integrator.rtol = r;
    }
    if let Some(a) = o.atol {
        cfg.integrator.atol = a;
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.into()))?;
    println!("{text}");
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { source, overrides, out } => {
            let cfg = load(&source, &overrides)?;
            print_json(&run(&cfg, &out)?)
        }
        Command::Sweep { source, overrides, parameter, values, out } => {
            let cfg = load(&source, &overrides)?;
            print_json(&run_sweep(&cfg, &parameter, &values, &out)?)
        }
        Command::CompareModels { presets, configs, overrides, out } => {
            let mut all = presets.iter().map(|p| preset(p)).collect::<Result<Vec<_>>>()?;
            for path in &configs {
                all.push(ScenarioConfig::load(path)?);
            }
            if all.is_empty() {
                return Err(Error::Validation("compare-models needs at least one --preset or --config".into()));
            }
            all.iter_mut().for_each(|c| apply_overrides(c, &overrides));
            print_json(&run_compare(&all, &out)?)
        }
        Command::Presets { action: PresetAction::List } => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(())
        }
        Command::Presets { action: PresetAction::Show { name } } => {
            print!("{}", preset(&name)?.to_toml()?);
            Ok(())
        }
        Command::Validate { source, overrides } => {
            let cfg = load(&source, &overrides)?;
            let model = cfg.validate()?;
            print_json(&serde_json::json!({
                "name": cfg.name,
                "valid": true,
                "dimension": model.dim(),
                "duration": cfg.duration()?,
            }))
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
/// Failures print `{"error": <category>, "message": ...}` to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e.category(), "message": e.to_string() }));
            e.exit_code()
        }
    }
}
