//! Command execution and report rendering.
//!
//! Every report starts with a [`RunManifest`] holding the resolved inputs.
//! [`execute`] is a pure function of the manifest (and the model file it
//! names), so replaying a report's manifest reproduces it byte for byte.

use std::time::{SystemTime, UNIX_EPOCH};

use sepmdp_core::linalg::max_abs;
use sepmdp_core::perturbation::sample_instance;
use sepmdp_core::solvers::{brute_force, policy_evaluation, DEFAULT_ENUMERATION_CAP};
use sepmdp_core::{
    acoe_residual, epsilon_max, first_order_expansion, maximizer_profile, solve_baseline, ExpansionReport, Policy,
    SeparableSpec, SweepReport,
};
use serde::{Deserialize, Serialize};

use crate::args::{EpsGrid, PolicySpec};
use crate::error::CliError;
use crate::model::{byte_offset, load_model};
use crate::montecarlo::{simulate_gain, SimEstimate, DEFAULT_BATCHES};
use crate::parallel::par_sweep;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Brute force and policy iteration must agree on the baseline gain to this.
pub const CROSS_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Sweep,
    Expand,
    Simulate,
}

/// Where the model comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Model {
        path: String,
    },
    Sampler {
        seed: u64,
        states: usize,
        actions: usize,
        perturb_scale: f64,
    },
}

impl Source {
    pub fn load(&self) -> Result<SeparableSpec, CliError> {
        match self {
            Self::Model { path } => load_model(path.as_ref()),
            Self::Sampler {
                seed,
                states,
                actions,
                perturb_scale,
            } => {
                if *states == 0 || *actions == 0 {
                    return Err(CliError::Usage("--states and --actions must be at least 1".into()));
                }
                if !(perturb_scale.is_finite() && *perturb_scale >= 0.0) {
                    return Err(CliError::Usage("--perturb-scale must be a nonnegative number".into()));
                }
                Ok(sample_instance(*seed, *states, *actions, *perturb_scale)?)
            }
        }
    }
}

/// Resolved parameters; each command fills the ones it uses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<EpsGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batches: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brute_force_cap: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub input: Source,
    pub tool_version: String,
    pub parameters: Parameters,
    /// Unix seconds; taken from `SOURCE_DATE_EPOCH` when set.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: Command, input: Source, parameters: Parameters) -> Self {
        Self {
            command,
            input,
            tool_version: TOOL_VERSION.to_owned(),
            parameters,
            timestamp: current_timestamp(),
        }
    }
}

pub fn current_timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceCheck {
    pub checked: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agrees: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub manifest: RunManifest,
    pub best_action: usize,
    pub gain: f64,
    pub per_action_gain: Vec<f64>,
    pub bias: Vec<f64>,
    pub invariant: Vec<f64>,
    pub acoe_residual_norm: f64,
    pub maximizer_profile: Policy,
    pub brute_force: BruteForceCheck,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutput {
    pub manifest: RunManifest,
    #[serde(flatten)]
    pub report: SweepReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpandOutput {
    pub manifest: RunManifest,
    #[serde(flatten)]
    pub report: ExpansionReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateOutput {
    pub manifest: RunManifest,
    pub policy: Policy,
    pub exact_gain: f64,
    #[serde(flatten)]
    pub estimate: SimEstimate,
}

/// Rendered command output.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub json: String,
    /// Sweep table, for `sweep` only.
    pub csv: Option<String>,
    /// Nonzero when a report was produced but a cross-check failed.
    pub exit_code: i32,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn sweep_csv(report: &SweepReport) -> String {
    let mut out = String::from("epsilon,optimal_gain,fixed_policy_gain,gap\n");
    for i in 0..report.epsilons.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            report.epsilons[i], report.optimal_gain[i], report.fixed_policy_gain[i], report.gap[i]
        ));
    }
    out
}

fn required<T: Clone>(value: &Option<T>, name: &str) -> Result<T, CliError> {
    value
        .clone()
        .ok_or_else(|| CliError::Usage(format!("manifest is missing parameter {name}")))
}

pub fn execute(manifest: &RunManifest) -> Result<Rendered, CliError> {
    let spec = manifest.input.load()?;
    let params = &manifest.parameters;
    match manifest.command {
        Command::Solve => solve(manifest, &spec),
        Command::Sweep => {
            let grid = required(&params.epsilons, "epsilons")?;
            let report = par_sweep(&spec, &grid)?;
            let csv = sweep_csv(&report);
            Ok(Rendered {
                json: to_json(&SweepOutput {
                    manifest: manifest.clone(),
                    report,
                }),
                csv: Some(csv),
                exit_code: 0,
            })
        }
        Command::Expand => {
            let grid = required(&params.epsilons, "epsilons")?;
            let pi = required(&params.policy, "policy")?.resolve(spec.n_states(), spec.n_actions())?;
            let report = first_order_expansion(&spec, &pi, &grid)?;
            Ok(Rendered {
                json: to_json(&ExpandOutput {
                    manifest: manifest.clone(),
                    report,
                }),
                csv: None,
                exit_code: 0,
            })
        }
        Command::Simulate => {
            let spec = match params.epsilon {
                Some(eps) => spec.with_epsilon(eps)?,
                None => spec,
            };
            let bound = epsilon_max(&spec);
            if spec.epsilon() > 0.0 && spec.epsilon() >= bound {
                return Err(sepmdp_core::Error::EpsilonOutOfRange {
                    epsilon: spec.epsilon(),
                    bound,
                }
                .into());
            }
            let m = sepmdp_core::assemble(&spec)?;
            let pi = required(&params.policy, "policy")?.resolve(spec.n_states(), spec.n_actions())?;
            let estimate = simulate_gain(
                &m,
                &pi,
                required(&params.horizon, "horizon")?,
                params.batches.unwrap_or(DEFAULT_BATCHES),
                params.seed.unwrap_or(0),
            )?;
            let exact_gain = policy_evaluation(&m, &pi)?.gain;
            Ok(Rendered {
                json: to_json(&SimulateOutput {
                    manifest: manifest.clone(),
                    policy: pi,
                    exact_gain,
                    estimate,
                }),
                csv: None,
                exit_code: 0,
            })
        }
    }
}

fn solve(manifest: &RunManifest, spec: &SeparableSpec) -> Result<Rendered, CliError> {
    let baseline = solve_baseline(spec)?;
    let m = spec.assemble_at(0.0)?;
    let residual = max_abs(&acoe_residual(&m, baseline.gain, &baseline.bias));
    let profile = maximizer_profile(&m, &baseline.bias);

    let cap = manifest.parameters.brute_force_cap.unwrap_or(DEFAULT_ENUMERATION_CAP);
    let brute = if m.policy_count() <= cap as u128 {
        let bf = brute_force(&m)?;
        BruteForceCheck {
            checked: true,
            gain: Some(bf.gain),
            agrees: Some((bf.gain - baseline.gain).abs() <= CROSS_CHECK_TOL),
            policy: Some(bf.policy.into_inner()),
        }
    } else {
        BruteForceCheck {
            checked: false,
            gain: None,
            policy: None,
            agrees: None,
        }
    };
    let exit_code = if brute.agrees == Some(false) { 5 } else { 0 };

    Ok(Rendered {
        json: to_json(&SolveReport {
            manifest: manifest.clone(),
            best_action: baseline.best_action,
            gain: baseline.gain,
            per_action_gain: baseline.per_action_gain,
            bias: baseline.bias,
            invariant: baseline.invariant,
            acoe_residual_norm: residual,
            maximizer_profile: profile,
            brute_force: brute,
        }),
        csv: None,
        exit_code,
    })
}

/// Extracts the manifest embedded in a previously emitted report.
pub fn manifest_of(report_json: &str) -> Result<RunManifest, CliError> {
    #[derive(Deserialize)]
    struct Envelope {
        manifest: RunManifest,
    }
    serde_json::from_str::<Envelope>(report_json)
        .map(|e| e.manifest)
        .map_err(|e| CliError::Parse {
            offset: byte_offset(report_json, e.line(), e.column()),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
}
