//! Run manifests: a JSON object with sorted keys, written next to the outputs.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Default)]
pub struct Manifest {
    pub subcommand: String,
    /// Arguments after the program name, as given.
    pub argv: Vec<String>,
    pub parameters: Map<String, Value>,
    pub sigma: Option<[f64; 2]>,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn param(&mut self, key: &str, value: impl Into<Value>) {
        self.parameters.insert(key.to_owned(), value.into());
    }

    pub fn to_value(&self) -> Value {
        // serde_json maps are ordered by key
        json!({
            "argv": self.argv,
            "outputs": self.outputs,
            "parameters": self.parameters,
            "seed": self.seed,
            "sigma": self.sigma,
            "subcommand": self.subcommand,
            "version": env!("CARGO_PKG_VERSION"),
            "wall_time_seconds": self.wall_time_seconds,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&self.to_value())?;
        text.push('\n');
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

pub fn recorded_argv(path: &Path) -> Result<Vec<String>, CliError> {
    let value: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let argv = value
        .get("argv")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::Validation(format!("{} has no argv array", path.display())))?;
    argv.iter()
        .map(|a| a.as_str().map(str::to_owned))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| CliError::Validation("argv entries must be strings".into()))
}

/// Program name plus the recorded arguments, with `--out` replaced if given.
pub fn replay_argv(recorded: Vec<String>, out: Option<PathBuf>) -> Vec<String> {
    let mut argv = vec!["implosion".to_owned()];
    let mut it = recorded.into_iter();
    while let Some(a) = it.next() {
        if out.is_some() && a == "--out" {
            it.next();
        } else if out.is_some() && a.starts_with("--out=") {
        } else {
            argv.push(a);
        }
    }
    if let Some(out) = out {
        argv.push("--out".into());
        argv.push(out.to_string_lossy().into_owned());
    }
    argv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_sorted() {
        let mut m = Manifest { subcommand: "render".into(), ..Default::default() };
        m.param("resolution", 16);
        m.param("maxiter", 100);
        let text = serde_json::to_string(&m.to_value()).unwrap();
        let pos = |k: &str| text.find(&format!("\"{k}\"")).unwrap();
        assert!(pos("argv") < pos("outputs") && pos("outputs") < pos("parameters"));
        assert!(pos("maxiter") < pos("resolution"));
    }

    #[test]
    fn replay_replaces_out() {
        let rec = vec!["render".into(), "--out".into(), "a".into(), "--resolution".into(), "16".into()];
        let argv = replay_argv(rec, Some(PathBuf::from("b")));
        assert_eq!(argv, ["implosion", "render", "--resolution", "16", "--out", "b"]);
    }
}
