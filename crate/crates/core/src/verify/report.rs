use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Non-finite values are written as the strings `"inf"`, `"-inf"`, `"nan"`.
mod lenient_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub input: Vec<f64>,
    #[serde(with = "lenient_f64")]
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub z: Option<f64>,
    pub s: Option<f64>,
    pub coefficients: Option<String>,
    pub seed: u64,
    pub sample_box: Option<String>,
    pub details: BTreeMap<String, serde_json::Value>,
}

impl Metadata {
    pub fn seeded(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn z(mut self, z: f64) -> Self {
        self.z = Some(z);
        self
    }

    pub fn s(mut self, s: f64) -> Self {
        self.s = Some(s);
        self
    }

    pub fn coefficients(mut self, c: impl Into<String>) -> Self {
        self.coefficients = Some(c.into());
        self
    }

    pub fn sample_box(mut self, b: impl Into<String>) -> Self {
        self.sample_box = Some(b.into());
        self
    }

    pub fn detail(&mut self, key: &str, v: impl Serialize) {
        let v = serde_json::to_value(v).unwrap_or(serde_json::Value::Null);
        self.details.insert(key.to_string(), v);
    }
}

/// Outcome of one check. `passed` holds exactly when `measured <= tolerance`;
/// a failed report always carries at least one witness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: String,
    pub passed: bool,
    #[serde(with = "lenient_f64")]
    pub measured: f64,
    #[serde(with = "lenient_f64")]
    pub tolerance: f64,
    pub witnesses: Vec<Witness>,
    pub metadata: Metadata,
}

impl CheckReport {
    pub fn new(
        check_id: impl Into<String>,
        measured: f64,
        tolerance: f64,
        mut witnesses: Vec<Witness>,
        metadata: Metadata,
    ) -> Self {
        let passed = measured <= tolerance;
        if !passed && witnesses.is_empty() {
            witnesses.push(Witness {
                input: Vec::new(),
                residual: measured,
            });
        }
        Self {
            check_id: check_id.into(),
            passed,
            measured,
            tolerance,
            witnesses,
            metadata,
        }
    }

    /// A failed report for a check that could not be carried out.
    pub fn failure(
        check_id: impl Into<String>,
        tolerance: f64,
        err: &Error,
        mut metadata: Metadata,
    ) -> Self {
        metadata.detail("error", err.to_string());
        let input = match err {
            Error::Domain { point, .. } | Error::NonFinite { point, .. } => point.clone(),
            Error::Integration { state, .. } => state.clone(),
            _ => Vec::new(),
        };
        let witnesses = vec![Witness {
            input,
            residual: f64::INFINITY,
        }];
        Self::new(check_id, f64::INFINITY, tolerance, witnesses, metadata)
    }
}

/// Keeps the running maximum of residuals and the worst offenders above the
/// tolerance.
#[derive(Debug, Clone)]
pub struct Tally {
    tolerance: f64,
    worst: f64,
    witnesses: Vec<Witness>,
    pub count: usize,
}

const MAX_WITNESSES: usize = 16;

impl Tally {
    pub fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            worst: 0.0,
            witnesses: Vec::new(),
            count: 0,
        }
    }

    pub fn record(&mut self, input: &[f64], residual: f64) {
        let residual = if residual.is_nan() {
            f64::INFINITY
        } else {
            residual
        };
        self.count += 1;
        self.worst = self.worst.max(residual);
        if residual > self.tolerance {
            self.witnesses.push(Witness {
                input: input.to_vec(),
                residual,
            });
            self.witnesses
                .sort_by(|a, b| b.residual.total_cmp(&a.residual));
            self.witnesses.truncate(MAX_WITNESSES);
        }
    }

    pub fn worst(&self) -> f64 {
        self.worst
    }

    pub fn finish(self, check_id: impl Into<String>, mut metadata: Metadata) -> CheckReport {
        metadata.detail("samples", self.count);
        CheckReport::new(
            check_id,
            self.worst,
            self.tolerance,
            self.witnesses,
            metadata,
        )
    }
}

/// Aggregated output of a suite run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub total: usize,
    pub failed: usize,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckReport> {
        self.checks.iter().filter(|c| !c.passed)
    }
}
