//! Experiment configuration files.
//!
//! A configuration is one JSON object whose `command` field selects the
//! experiment. Networks are given inline under `spec` or by path under
//! `spec_file` (relative to the configuration file). Unknown fields are
//! rejected with the line they appear on.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::params::NetworkSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Config {
    Params(ParamsConfig),
    Simulate(SimulateConfig),
    Fluid(FluidConfig),
    FluidConverge(FluidConvergeConfig),
    Rbm(RbmConfig),
    Ssc(SscConfig),
    WorkloadLimit(WorkloadLimitConfig),
}

/// Where a command's network comes from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<NetworkSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_file: Option<PathBuf>,
}

impl SpecSource {
    pub fn inline(spec: NetworkSpec) -> Self {
        SpecSource {
            spec: Some(spec),
            spec_file: None,
        }
    }

    /// Loads `spec_file` (relative to `base`) into `spec`.
    pub fn resolve(&mut self, base: &Path) -> Result<()> {
        match (&self.spec, self.spec_file.take()) {
            (Some(_), Some(_)) => Err(Error::Config("give either `spec` or `spec_file`, not both".into())),
            (None, None) => Err(Error::Config("missing `spec` or `spec_file`".into())),
            (Some(_), None) => Ok(()),
            (None, Some(file)) => {
                let path = if file.is_absolute() { file } else { base.join(file) };
                self.spec = Some(NetworkSpec::from_file(&path)?);
                Ok(())
            }
        }
    }

    pub fn get(&self) -> Result<&NetworkSpec> {
        self.spec
            .as_ref()
            .ok_or_else(|| Error::Config("spec has not been resolved".into()))
    }
}

macro_rules! with_spec_fields {
    ($(#[$meta:meta])* pub struct $name:ident { $($(#[$fmeta:meta])* pub $field:ident : $ty:ty,)* }) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            #[serde(default, skip_serializing_if = "Option::is_none")]
            pub seed: Option<u64>,
            #[serde(default, skip_serializing_if = "Option::is_none")]
            pub spec: Option<NetworkSpec>,
            #[serde(default, skip_serializing_if = "Option::is_none")]
            pub spec_file: Option<PathBuf>,
            $($(#[$fmeta])* pub $field: $ty,)*
        }

        impl $name {
            pub fn source(&self) -> SpecSource {
                SpecSource { spec: self.spec.clone(), spec_file: self.spec_file.clone() }
            }

            fn resolve(&mut self, base: &Path) -> Result<()> {
                let mut s = self.source();
                s.resolve(base)?;
                self.spec = s.spec;
                self.spec_file = None;
                Ok(())
            }

            pub fn network(&self) -> Result<&NetworkSpec> {
                self.spec.as_ref().ok_or_else(|| Error::Config("missing `spec` or `spec_file`".into()))
            }
        }
    };
}

with_spec_fields! {
    /// Print the derived constants of a network.
    pub struct ParamsConfig {}
}

fn default_fluid_dt() -> f64 {
    crate::fluid::DEFAULT_DT
}

fn default_grid_n() -> usize {
    21
}

fn default_batches() -> usize {
    1
}

with_spec_fields! {
    pub struct SimulateConfig {
        pub horizon: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub sample_dt: Option<f64>,
        /// Record a row after every event (default: only when no `sample_dt`).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub record_events: Option<bool>,
    }
}

with_spec_fields! {
    pub struct FluidConfig {
        pub q0: Vec2,
        pub horizon: f64,
        #[serde(default = "default_fluid_dt")]
        pub dt: f64,
    }
}

with_spec_fields! {
    pub struct FluidConvergeConfig {
        #[serde(rename = "M")]
        pub m: f64,
        pub eps: f64,
        #[serde(default = "default_grid_n")]
        pub grid_n: usize,
        #[serde(default = "default_fluid_dt")]
        pub dt: f64,
    }
}

with_spec_fields! {
    pub struct SscConfig {
        pub theta: f64,
        pub n_values: Vec<u32>,
        pub q_bar0: Vec2,
        pub horizon: f64,
        pub reps: usize,
    }
}

with_spec_fields! {
    pub struct WorkloadLimitConfig {
        pub theta: f64,
        pub n_values: Vec<u32>,
        pub q_bar0: Vec2,
        pub t_probe: f64,
        pub reps: usize,
        #[serde(default = "default_batches")]
        pub batches: usize,
        /// Compare against the stationary law instead of the transient one.
        #[serde(default)]
        pub stationary: bool,
    }
}

/// Euler path output for the `rbm` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbmPath {
    pub dt: f64,
    pub horizon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbmConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub theta: f64,
    pub sigma2: f64,
    #[serde(default)]
    pub w0: f64,
    /// Evaluation time of the transient cdf.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default)]
    pub stationary: bool,
    #[serde(default)]
    pub x: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<RbmPath>,
}

impl Config {
    pub fn command(&self) -> &'static str {
        match self {
            Config::Params(_) => "params",
            Config::Simulate(_) => "simulate",
            Config::Fluid(_) => "fluid",
            Config::FluidConverge(_) => "fluid-converge",
            Config::Rbm(_) => "rbm",
            Config::Ssc(_) => "ssc",
            Config::WorkloadLimit(_) => "workload-limit",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Config::Params(c) => c.seed,
            Config::Simulate(c) => c.seed,
            Config::Fluid(c) => c.seed,
            Config::FluidConverge(c) => c.seed,
            Config::Rbm(c) => c.seed,
            Config::Ssc(c) => c.seed,
            Config::WorkloadLimit(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        let slot = match self {
            Config::Params(c) => &mut c.seed,
            Config::Simulate(c) => &mut c.seed,
            Config::Fluid(c) => &mut c.seed,
            Config::FluidConverge(c) => &mut c.seed,
            Config::Rbm(c) => &mut c.seed,
            Config::Ssc(c) => &mut c.seed,
            Config::WorkloadLimit(c) => &mut c.seed,
        };
        *slot = Some(seed);
    }

    /// Loads any `spec_file` relative to `base` and inlines it.
    pub fn resolve_specs(&mut self, base: &Path) -> Result<()> {
        match self {
            Config::Params(c) => c.resolve(base),
            Config::Simulate(c) => c.resolve(base),
            Config::Fluid(c) => c.resolve(base),
            Config::FluidConverge(c) => c.resolve(base),
            Config::Ssc(c) => c.resolve(base),
            Config::WorkloadLimit(c) => c.resolve(base),
            Config::Rbm(_) => Ok(()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize") + "\n"
    }
}

/// Line (1-based) of the first `"name"` used as an object key.
fn key_line(text: &str, name: &str) -> Option<usize> {
    let needle = format!("\"{name}\"");
    text.lines().position(|line| {
        line.match_indices(&needle)
            .any(|(i, _)| line[i + needle.len()..].trim_start().starts_with(':'))
    })
    .map(|i| i + 1)
}

fn describe(err: &serde_json::Error, text: &str, origin: &str) -> Error {
    let msg = err.to_string();
    // Errors raised after buffering carry the position of the enclosing
    // object; point at the offending key instead when it can be found.
    let field = msg
        .strip_prefix("unknown field `")
        .or_else(|| msg.strip_prefix("unknown variant `"))
        .and_then(|rest| rest.split('`').next());
    let line = field.and_then(|f| key_line(text, f)).unwrap_or(err.line());
    let bare = msg.split(" at line ").next().unwrap_or(&msg);
    Error::Config(format!("{origin}:{line}: {bare}"))
}

/// Parses a configuration from text. `origin` names the source in errors;
/// relative `spec_file` paths resolve against `base`.
pub fn parse_config_str(text: &str, origin: &str, base: &Path) -> Result<Config> {
    let mut config: Config = serde_json::from_str(text).map_err(|e| describe(&e, text, origin))?;
    config.resolve_specs(base)?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config_str(&text, &path.display().to_string(), base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::reference_spec;

    fn minimal() -> String {
        let spec = serde_json::to_string_pretty(&reference_spec()).unwrap();
        format!("{{\n  \"command\": \"fluid\",\n  \"q0\": [3, 3],\n  \"horizon\": 10,\n  \"spec\": {spec}\n}}\n")
    }

    #[test]
    fn round_trip() {
        let c = parse_config_str(&minimal(), "mem", Path::new(".")).unwrap();
        let again = parse_config_str(&c.to_json(), "mem", Path::new(".")).unwrap();
        assert_eq!(c, again);
        match &c {
            Config::Fluid(f) => assert_eq!(f.dt, 1e-3),
            other => panic!("wrong command {other:?}"),
        }
    }

    #[test]
    fn unknown_field_names_field_and_line() {
        let text = minimal().replace("\"horizon\": 10,", "\"horizon\": 10,\n  \"horizn\": 3,");
        let err = parse_config_str(&text, "cfg.json", Path::new(".")).unwrap_err().to_string();
        assert!(err.contains("horizn"), "{err}");
        assert!(err.contains("cfg.json:5:"), "{err}");
    }

    #[test]
    fn unknown_spec_field_is_rejected() {
        let text = minimal().replace("\"routing\"", "\"extra\": 1,\n    \"routing\"");
        let err = parse_config_str(&text, "cfg.json", Path::new(".")).unwrap_err().to_string();
        assert!(err.contains("extra"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let text = "{\n  \"command\": \"rbm\",\n  \"theta\": 1,,\n}";
        let err = parse_config_str(text, "cfg.json", Path::new(".")).unwrap_err().to_string();
        assert!(err.contains("cfg.json:3:"), "{err}");
    }

    #[test]
    fn unknown_command() {
        let err = parse_config_str("{\"command\": \"teleport\"}", "c", Path::new("."))
            .unwrap_err()
            .to_string();
        assert!(err.contains("teleport"), "{err}");
    }

    #[test]
    fn spec_file_is_inlined() {
        let dir = tempfile::tempdir().unwrap();
        let spec_path = dir.path().join("net.json");
        std::fs::write(&spec_path, serde_json::to_string(&reference_spec()).unwrap()).unwrap();
        let text = r#"{"command": "params", "spec_file": "net.json"}"#;
        let c = parse_config_str(text, "c", dir.path()).unwrap();
        match c {
            Config::Params(p) => {
                assert_eq!(p.spec, Some(reference_spec()));
                assert_eq!(p.spec_file, None);
            }
            other => panic!("{other:?}"),
        }
        let both = format!(
            "{{\"command\": \"params\", \"spec_file\": \"net.json\", \"spec\": {}}}",
            serde_json::to_string(&reference_spec()).unwrap()
        );
        assert!(parse_config_str(&both, "c", dir.path()).is_err());
        assert!(parse_config_str(r#"{"command": "params"}"#, "c", dir.path()).is_err());
    }
}
