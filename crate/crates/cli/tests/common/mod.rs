#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn model_path(name: &str) -> String {
    crate_dir().join("models").join(name).display().to_string()
}

pub fn mbpre(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_mbpre"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

/// Runs with `--json`, expecting success, and returns the envelope.
pub fn mbpre_json(args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let run = mbpre(&full);
    assert_eq!(run.code, 0, "{args:?} failed: {}", run.stderr);
    serde_json::from_str(&run.stdout).expect("stdout is JSON")
}

fn load_schema(name: &str) -> Value {
    let text = std::fs::read_to_string(crate_dir().join("schemas").join(name)).expect("schema file");
    serde_json::from_str(&text).expect("schema is JSON")
}

pub fn output_validator() -> jsonschema::Validator {
    let model = jsonschema::Resource::from_contents(load_schema("model.schema.json")).expect("model schema");
    jsonschema::options()
        .with_resource("urn:mbpre:schema:model", model)
        .build(&load_schema("output.schema.json"))
        .expect("output schema compiles")
}

pub fn model_validator() -> jsonschema::Validator {
    jsonschema::validator_for(&load_schema("model.schema.json")).expect("model schema compiles")
}

pub fn schema_errors(validator: &jsonschema::Validator, value: &Value) -> Vec<String> {
    validator.iter_errors(value).map(|e| format!("{} at {}", e, e.instance_path)).collect()
}
