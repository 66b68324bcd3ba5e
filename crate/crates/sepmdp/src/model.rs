//! JSON model files.
//!
//! ```json
//! {
//!   "n_states": 2, "n_actions": 2,
//!   "r_state": [1.0, 0.0], "r_action": [0.0, 0.25],
//!   "kernel_action": [[0.8, 0.2], [0.5, 0.5]],
//!   "epsilon": 0.0,
//!   "reward_perturb": [[0.0, 0.0], [0.0, 0.0]],
//!   "kernel_perturb": [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]
//! }
//! ```
//!
//! `reward_perturb` (`N x M`) and `kernel_perturb` (`N x M x N`) are optional
//! and default to zero.

use std::fs;
use std::path::Path;

use sepmdp_core::{Matrix, SeparableSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub r_state: Vec<f64>,
    pub r_action: Vec<f64>,
    pub kernel_action: Vec<Vec<f64>>,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_perturb: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_perturb: Option<Vec<Vec<Vec<f64>>>>,
}

fn check_len(errors: &mut Vec<String>, field: &str, found: usize, expected: usize, what: &str) {
    if found != expected {
        errors.push(format!("{field}: expected {expected} {what}, found {found}"));
    }
}

impl ModelFile {
    pub fn from_spec(spec: &SeparableSpec) -> Self {
        Self {
            n_states: spec.n_states(),
            n_actions: spec.n_actions(),
            r_state: spec.r_state().to_vec(),
            r_action: spec.r_action().to_vec(),
            kernel_action: spec.kernel_action().to_rows(),
            epsilon: spec.epsilon(),
            reward_perturb: Some(spec.reward_perturb().to_rows()),
            kernel_perturb: Some(spec.kernel_perturb_nested()),
        }
    }

    /// Shape checks against the declared dimensions, then the model invariants.
    pub fn to_spec(&self) -> Result<SeparableSpec, CliError> {
        let (n, m) = (self.n_states, self.n_actions);
        let mut errors = Vec::new();
        if n == 0 {
            errors.push("n_states: must be at least 1".to_owned());
        }
        if m == 0 {
            errors.push("n_actions: must be at least 1".to_owned());
        }
        check_len(&mut errors, "r_state", self.r_state.len(), n, "entries");
        check_len(&mut errors, "r_action", self.r_action.len(), m, "entries");
        check_len(&mut errors, "kernel_action", self.kernel_action.len(), m, "rows");
        for (a, row) in self.kernel_action.iter().enumerate() {
            check_len(&mut errors, &format!("kernel_action[{a}]"), row.len(), n, "entries");
        }
        if let Some(rp) = &self.reward_perturb {
            check_len(&mut errors, "reward_perturb", rp.len(), n, "rows");
            for (s, row) in rp.iter().enumerate() {
                check_len(&mut errors, &format!("reward_perturb[{s}]"), row.len(), m, "entries");
            }
        }
        if let Some(q) = &self.kernel_perturb {
            check_len(&mut errors, "kernel_perturb", q.len(), n, "state blocks");
            for (s, per_a) in q.iter().enumerate() {
                check_len(
                    &mut errors,
                    &format!("kernel_perturb[{s}]"),
                    per_a.len(),
                    m,
                    "action rows",
                );
                for (a, row) in per_a.iter().enumerate() {
                    check_len(
                        &mut errors,
                        &format!("kernel_perturb[{s}][{a}]"),
                        row.len(),
                        n,
                        "entries",
                    );
                }
            }
        }
        if !errors.is_empty() {
            return Err(CliError::Validation(errors));
        }

        let kernel_action = Matrix::from_rows(&self.kernel_action)?;
        let reward_perturb = self.reward_perturb.as_deref().map(Matrix::from_rows).transpose()?;
        SeparableSpec::new(
            self.r_state.clone(),
            self.r_action.clone(),
            kernel_action,
            self.epsilon,
            reward_perturb,
            self.kernel_perturb.clone(),
        )
        .map_err(CliError::from)
    }
}

/// Byte offset of a 1-based (line, column) position in `text`.
pub(crate) fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let preceding: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    preceding + column.saturating_sub(1)
}

pub fn parse_model(text: &str) -> Result<SeparableSpec, CliError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| CliError::Parse {
        offset: byte_offset(text, e.line(), e.column()),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.to_spec()
}

pub fn load_model(path: &Path) -> Result<SeparableSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model(&text)
}

pub fn model_to_json(spec: &SeparableSpec) -> String {
    let mut text = serde_json::to_string_pretty(&ModelFile::from_spec(spec)).expect("model serializes");
    text.push('\n');
    text
}

pub fn save_model(spec: &SeparableSpec, path: &Path) -> Result<(), CliError> {
    fs::write(path, model_to_json(spec)).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const WORKED: &str = r#"{
        "n_states": 2, "n_actions": 2,
        "r_state": [1.0, 0.0], "r_action": [0.0, 0.25],
        "kernel_action": [[0.8, 0.2], [0.5, 0.5]],
        "epsilon": 0.0
    }"#;

    #[test]
    fn optional_perturbations_default_to_zero() {
        let spec = parse_model(WORKED).unwrap();
        assert!(spec.is_unperturbed());
        assert_eq!(spec.n_states(), 2);
    }

    #[test]
    fn malformed_json_reports_offset() {
        let text = "{\n  \"n_states\": 2,\n  \"n_actions\": ,\n}";
        match parse_model(text) {
            Err(CliError::Parse { offset, line, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(&text[offset..offset + 1], ",");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shape_errors_name_fields() {
        let text = WORKED.replace("[0.5, 0.5]]", "[0.5, 0.5], [1.0, 0.0]]");
        match parse_model(&text) {
            Err(CliError::Validation(msgs)) => {
                assert_eq!(msgs, vec!["kernel_action: expected 2 rows, found 3".to_owned()]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invariant_errors_are_listed() {
        let text = WORKED.replace("[0.5, 0.5]]", "[0.6, 0.6]]");
        match parse_model(&text) {
            Err(CliError::Validation(msgs)) => {
                assert_eq!(msgs.len(), 1);
                assert!(msgs[0].starts_with("kernel_action[a=1]: row sum"), "{msgs:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let text = WORKED.replace("\"epsilon\"", "\"epsilonn\": 0, \"epsilon\"");
        assert!(matches!(parse_model(&text), Err(CliError::Parse { .. })));
    }
}
