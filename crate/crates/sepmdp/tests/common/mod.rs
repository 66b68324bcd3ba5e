#![allow(dead_code)]

use std::path::Path;
use std::process::Command;

pub const WORKED: &str = r#"{
  "n_states": 2,
  "n_actions": 2,
  "r_state": [1, 0],
  "r_action": [0, 0.25],
  "kernel_action": [[0.8, 0.2], [0.5, 0.5]],
  "epsilon": 0
}
"#;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the binary in `dir` with a pinned timestamp.
pub fn sepmdp(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_sepmdp"))
        .args(args)
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap_or_else(|e| panic!("not JSON ({e}): {text}"))
}

pub fn floats(v: &serde_json::Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

/// Validates `doc` against one of the published schemas, returning the
/// error messages.
pub fn schema_errors(schema: &str, doc: &serde_json::Value) -> Vec<String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{schema}.schema.json"));
    let schema: serde_json::Value = json(&std::fs::read_to_string(path).unwrap());
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    validator.iter_errors(doc).map(|e| e.to_string()).collect()
}
