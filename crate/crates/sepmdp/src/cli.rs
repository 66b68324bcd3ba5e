//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::args::{EpsGrid, PolicySpec};
use crate::commands::{execute, manifest_of, Command, Parameters, Rendered, RunManifest, Source};
use crate::error::CliError;
use crate::model::save_model;
use crate::montecarlo::DEFAULT_BATCHES;

#[derive(Debug, Parser)]
#[command(
    name = "sepmdp",
    version,
    about = "Exact analysis of nearly separable average-reward MDPs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Solve the separable baseline and cross-check it by enumeration.
    Solve {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Optimal gain, fixed-policy gain and suboptimality gap over an ε grid.
    Sweep {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value = "log:1e-4:1e-1:7")]
        eps_grid: EpsGrid,
        #[command(flatten)]
        output: OutputArgs,
        /// Also write the sweep table as CSV to this file.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// First-order expansion of the invariant distribution and gain of a policy.
    Expand {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value = "const:0")]
        policy: PolicySpec,
        #[arg(long, default_value = "log:1e-4:1e-2:5")]
        eps_grid: EpsGrid,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo estimate of a policy's gain.
    Simulate {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value = "const:0")]
        policy: PolicySpec,
        /// Recorded steps; a further horizon/10 steps are burned in first.
        #[arg(long, default_value_t = 1_000_000)]
        horizon: u64,
        #[arg(long, default_value_t = DEFAULT_BATCHES)]
        batches: u64,
        /// Trajectory seed; defaults to --seed.
        #[arg(long)]
        sim_seed: Option<u64>,
        /// Simulate at this ε instead of the model's own.
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write a sampled instance as a model file.
    Sample {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        states: usize,
        #[arg(long)]
        actions: usize,
        #[arg(long)]
        perturb_scale: f64,
        /// ε stored in the model file.
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Re-run the command recorded in a report's manifest.
    Replay {
        report: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Model file (JSON).
    #[arg(long, value_name = "FILE", conflicts_with_all = ["states", "actions", "perturb_scale"])]
    pub model: Option<PathBuf>,
    /// Sampler seed (also the default trajectory seed for simulate).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, requires_all = ["actions", "perturb_scale"])]
    pub states: Option<usize>,
    #[arg(long, requires_all = ["states", "perturb_scale"])]
    pub actions: Option<usize>,
    #[arg(long, requires_all = ["states", "actions"])]
    pub perturb_scale: Option<f64>,
}

impl SourceArgs {
    fn resolve(&self) -> Result<Source, CliError> {
        match (&self.model, self.states, self.actions, self.perturb_scale) {
            (Some(path), ..) => Ok(Source::Model {
                path: path.to_string_lossy().into_owned(),
            }),
            (None, Some(states), Some(actions), Some(perturb_scale)) => Ok(Source::Sampler {
                seed: self.seed,
                states,
                actions,
                perturb_scale,
            }),
            _ => Err(CliError::Usage(
                "give --model FILE or --states, --actions and --perturb-scale".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn emit(rendered: &Rendered, output: &OutputArgs) -> Result<(), CliError> {
    let text = match output.format {
        Format::Json => &rendered.json,
        Format::Csv => rendered
            .csv
            .as_ref()
            .ok_or_else(|| CliError::Usage("--format csv is only available for sweep".into()))?,
    };
    match &output.out {
        Some(path) => write_file(path, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    let (manifest, output, csv) = match cli.command {
        Cmd::Sample {
            seed,
            states,
            actions,
            perturb_scale,
            epsilon,
            out,
        } => {
            let spec = Source::Sampler {
                seed,
                states,
                actions,
                perturb_scale,
            }
            .load()?
            .with_epsilon(epsilon)?;
            match out {
                Some(path) => save_model(&spec, &path)?,
                None => print!("{}", crate::model::model_to_json(&spec)),
            }
            return Ok(0);
        }
        Cmd::Replay { report, output } => {
            let text = std::fs::read_to_string(&report).map_err(|source| CliError::Io {
                path: report.display().to_string(),
                source,
            })?;
            (manifest_of(&text)?, output, None)
        }
        Cmd::Solve { source, output } => (
            RunManifest::new(Command::Solve, source.resolve()?, Parameters::default()),
            output,
            None,
        ),
        Cmd::Sweep {
            source,
            eps_grid,
            output,
            csv,
        } => {
            let params = Parameters {
                eps_grid: Some(eps_grid),
                epsilons: Some(eps_grid.values()),
                ..Parameters::default()
            };
            (RunManifest::new(Command::Sweep, source.resolve()?, params), output, csv)
        }
        Cmd::Expand {
            source,
            policy,
            eps_grid,
            output,
        } => {
            let params = Parameters {
                eps_grid: Some(eps_grid),
                epsilons: Some(eps_grid.values()),
                policy: Some(policy),
                ..Parameters::default()
            };
            (
                RunManifest::new(Command::Expand, source.resolve()?, params),
                output,
                None,
            )
        }
        Cmd::Simulate {
            source,
            policy,
            horizon,
            batches,
            sim_seed,
            epsilon,
            output,
        } => {
            let params = Parameters {
                policy: Some(policy),
                epsilon,
                horizon: Some(horizon),
                batches: Some(batches),
                seed: Some(sim_seed.unwrap_or(source.seed)),
                ..Parameters::default()
            };
            (
                RunManifest::new(Command::Simulate, source.resolve()?, params),
                output,
                None,
            )
        }
    };

    if output.format == Format::Csv && manifest.command != Command::Sweep {
        return Err(CliError::Usage("--format csv is only available for sweep".into()));
    }
    let rendered = execute(&manifest)?;
    if let (Some(path), Some(table)) = (csv, &rendered.csv) {
        write_file(&path, table)?;
    }
    emit(&rendered, &output)?;
    Ok(rendered.exit_code)
}
