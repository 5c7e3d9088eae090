//! Experiment configuration: a single versioned JSON document with a closed
//! schema.

use std::collections::BTreeMap;
use std::path::Path;

use lhdeform::ode::{CoefficientSpec, IntegratorConfig};
use lhdeform::systems::{SystemKind, SystemSpec};
use lhdeform::verify::conservation::FlowConfig;
use lhdeform::verify::DEFAULT_SEED;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub system: SystemKind,
    #[serde(default)]
    pub z: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default)]
    pub coefficients: BTreeMap<String, CoefficientSpec>,
    /// Plane points, or `(r, theta)` pairs for Bernoulli systems, one pair
    /// per copy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tspan: Option<[f64; 2]>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Uniform sample times for drift and reconstruction tables.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_samples() -> usize {
    50
}

impl ExperimentConfig {
    pub fn new(system: SystemKind) -> Self {
        Self {
            version: CONFIG_VERSION,
            system,
            z: 0.0,
            s: None,
            coefficients: BTreeMap::new(),
            initial: None,
            tspan: None,
            integrator: IntegratorConfig::default(),
            seed: default_seed(),
            samples: default_samples(),
        }
    }

    /// Reads, applies the `z` override and validates.
    pub fn load(path: &Path, z_override: Option<f64>) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Input {
            path: path.to_path_buf(),
            source,
        })?;
        let bad = |message: String| CliError::Config {
            path: path.to_path_buf(),
            message,
        };
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if let Some(z) = z_override {
            cfg.z = z;
        }
        cfg.validate().map_err(bad)?;
        Ok(cfg)
    }

    pub fn spec(&self) -> SystemSpec {
        SystemSpec {
            kind: self.system,
            z: self.z,
            s: self.s,
            coefficients: self.coefficients.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.version != CONFIG_VERSION {
            return Err(format!(
                "unsupported version {}, expected {CONFIG_VERSION}",
                self.version
            ));
        }
        let spec = self.spec();
        spec.validate().map_err(|e| e.to_string())?;
        if let Some(x0) = &self.initial {
            if x0.len() % 2 != 0 {
                return Err(format!(
                    "initial has {} coordinates; expected pairs",
                    x0.len()
                ));
            }
            spec.check_copies(x0.len() / 2).map_err(|e| e.to_string())?;
            if x0.iter().any(|v| !v.is_finite()) {
                return Err("initial state must be finite".into());
            }
        }
        if let Some([t0, t1]) = self.tspan {
            if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
                return Err(format!("tspan must satisfy t0 < t1, got [{t0}, {t1}]"));
            }
        }
        self.integrator.validate().map_err(|e| e.to_string())?;
        if self.samples < 2 {
            return Err("samples must be at least 2".into());
        }
        Ok(())
    }

    pub fn initial(&self) -> CliResult<&[f64]> {
        self.initial
            .as_deref()
            .ok_or_else(|| CliError::usage("config has no initial state"))
    }

    pub fn tspan(&self) -> CliResult<[f64; 2]> {
        self.tspan
            .ok_or_else(|| CliError::usage("config has no tspan"))
    }

    pub fn flow(&self) -> CliResult<FlowConfig> {
        let [t0, t1] = self.tspan()?;
        Ok(FlowConfig {
            initial: self.initial()?.to_vec(),
            t0,
            t1,
            samples: self.samples,
            integrator: self.integrator,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<ExperimentConfig, String> {
        let c: ExperimentConfig = serde_json::from_str(s).map_err(|e| e.to_string())?;
        c.validate()?;
        Ok(c)
    }

    #[test]
    fn minimal_and_full_documents() {
        let c = parse(r#"{"version":1,"system":"h4"}"#).unwrap();
        assert_eq!(c.seed, DEFAULT_SEED);
        let c = parse(
            r#"{"version":1,"system":"h4-deformed-prolonged","z":0.5,
                "coefficients":{"b1":[{"constant":{"c":1}}],"b2":[{"monomial":{"c":1,"k":1}}]},
                "initial":[1,0,0,1,1,1],"tspan":[0,2],"integrator":{"rel_tol":1e-11},"seed":7}"#,
        )
        .unwrap();
        assert_eq!(c.integrator.rel_tol, 1e-11);
        let back: ExperimentConfig =
            serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejections() {
        for doc in [
            r#"{"version":2,"system":"h4"}"#,
            r#"{"version":1,"system":"h5"}"#,
            r#"{"version":1,"system":"h4","colour":1}"#,
            r#"{"version":1,"system":"bernoulli"}"#,
            r#"{"version":1,"system":"h4","s":2}"#,
            r#"{"version":1,"system":"h4","initial":[1,2,3]}"#,
            r#"{"version":1,"system":"h4-prolonged","initial":[1,2]}"#,
            r#"{"version":1,"system":"h4","tspan":[1,0]}"#,
            r#"{"version":1,"system":"b2","coefficients":{"b1":[]}}"#,
            r#"{"version":1,"system":"h4","samples":1}"#,
        ] {
            assert!(parse(doc).is_err(), "{doc}");
        }
    }
}
