//! Named systems, their flows on one or three copies, and the constants of
//! motion that apply to each.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bernoulli::{self, BernoulliConstant, BernoulliParams};
use crate::deformed;
use crate::error::{Error, Result};
use crate::ode::CoefficientSpec;
use crate::oscillator::{self, H4Coefficients, Permuted};
use crate::symplectic::VectorField;
use crate::twist;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    H4,
    H4Deformed,
    B2,
    B2Deformed,
    Bernoulli,
    BernoulliDeformed,
    H4Prolonged,
    H4DeformedProlonged,
    MinimalDeformed,
}

impl SystemKind {
    pub const ALL: [SystemKind; 9] = [
        SystemKind::H4,
        SystemKind::H4Deformed,
        SystemKind::B2,
        SystemKind::B2Deformed,
        SystemKind::Bernoulli,
        SystemKind::BernoulliDeformed,
        SystemKind::H4Prolonged,
        SystemKind::H4DeformedProlonged,
        SystemKind::MinimalDeformed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::H4 => "h4",
            SystemKind::H4Deformed => "h4-deformed",
            SystemKind::B2 => "b2",
            SystemKind::B2Deformed => "b2-deformed",
            SystemKind::Bernoulli => "bernoulli",
            SystemKind::BernoulliDeformed => "bernoulli-deformed",
            SystemKind::H4Prolonged => "h4-prolonged",
            SystemKind::H4DeformedProlonged => "h4-deformed-prolonged",
            SystemKind::MinimalDeformed => "minimal-deformed",
        }
    }

    pub fn is_bernoulli(self) -> bool {
        matches!(self, SystemKind::Bernoulli | SystemKind::BernoulliDeformed)
    }

    pub fn is_deformed(self) -> bool {
        matches!(
            self,
            SystemKind::H4Deformed
                | SystemKind::B2Deformed
                | SystemKind::BernoulliDeformed
                | SystemKind::H4DeformedProlonged
                | SystemKind::MinimalDeformed
        )
    }

    pub fn is_book(self) -> bool {
        matches!(self, SystemKind::B2 | SystemKind::B2Deformed)
    }

    /// Allowed copy counts; one-copy kinds also run on three copies, where
    /// they denote the (deformed) prolongation.
    pub fn copies(self) -> &'static [usize] {
        match self {
            SystemKind::H4Prolonged | SystemKind::H4DeformedProlonged => &[3],
            SystemKind::MinimalDeformed => &[1],
            _ => &[1, 3],
        }
    }

    pub fn coefficient_names(self) -> &'static [&'static str] {
        if self.is_bernoulli() {
            &["a1", "a2"]
        } else if self.is_book() {
            &["b2", "b3"]
        } else {
            &["b1", "b2", "b3"]
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SystemKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = SystemKind::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidInput(format!(
                    "unknown system {s:?}; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// A system together with its parameters and named coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub kind: SystemKind,
    pub z: f64,
    pub s: Option<f64>,
    pub coefficients: BTreeMap<String, CoefficientSpec>,
}

impl SystemSpec {
    pub fn new(kind: SystemKind, z: f64, s: Option<f64>) -> Self {
        Self {
            kind,
            z,
            s,
            coefficients: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, c: CoefficientSpec) -> Self {
        self.coefficients.insert(name.to_string(), c);
        self
    }

    /// Deformation parameter in effect; undeformed kinds ignore `z`.
    pub fn effective_z(&self) -> f64 {
        if self.kind.is_deformed() {
            self.z
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.z.is_finite() {
            return Err(Error::InvalidInput("z must be finite".into()));
        }
        match (self.kind.is_bernoulli(), self.s) {
            (true, None) => {
                return Err(Error::InvalidInput(format!(
                    "system {} requires s",
                    self.kind
                )));
            }
            (false, Some(_)) => {
                return Err(Error::InvalidInput(format!(
                    "s applies only to Bernoulli systems, not {}",
                    self.kind
                )));
            }
            _ => {}
        }
        let allowed = self.kind.coefficient_names();
        if let Some(bad) = self
            .coefficients
            .keys()
            .find(|k| !allowed.contains(&k.as_str()))
        {
            return Err(Error::InvalidInput(format!(
                "coefficient {bad:?} does not apply to {}; expected {}",
                self.kind,
                allowed.join(", ")
            )));
        }
        if self.kind.is_bernoulli() {
            self.bernoulli_params()?;
        }
        Ok(())
    }

    fn coefficient(&self, name: &str) -> CoefficientSpec {
        self.coefficients.get(name).cloned().unwrap_or_default()
    }

    pub fn h4_coefficients(&self) -> H4Coefficients {
        if self.kind.is_bernoulli() {
            return self
                .bernoulli_params()
                .map(|p| p.plane_coefficients())
                .unwrap_or_default();
        }
        H4Coefficients::new(
            self.coefficient("b1"),
            self.coefficient("b2"),
            self.coefficient("b3"),
        )
    }

    pub fn bernoulli_params(&self) -> Result<BernoulliParams> {
        let s = self
            .s
            .ok_or_else(|| Error::InvalidInput(format!("system {} requires s", self.kind)))?;
        BernoulliParams::new(
            s,
            self.coefficient("a1"),
            self.coefficient("a2"),
            self.effective_z(),
        )
    }

    pub fn check_copies(&self, copies: usize) -> Result<()> {
        if !self.kind.copies().contains(&copies) {
            return Err(Error::InvalidInput(format!(
                "system {} runs on {:?} copies, got {copies}",
                self.kind,
                self.kind.copies()
            )));
        }
        Ok(())
    }

    /// The flow on `copies` copies: uncoupled copies for undeformed kinds,
    /// the coupled prolonged system for deformed kinds on three copies.
    pub fn field(&self, copies: usize) -> Result<VectorField> {
        self.validate()?;
        self.check_copies(copies)?;
        let z = self.effective_z();
        let c = self.h4_coefficients();
        Ok(match self.kind {
            SystemKind::H4 | SystemKind::B2 | SystemKind::H4Prolonged => {
                oscillator::h4_field(&c, copies)
            }
            SystemKind::H4Deformed | SystemKind::B2Deformed | SystemKind::H4DeformedProlonged => {
                if copies == 1 {
                    deformed::hz_field(z, &c)
                } else {
                    deformed::prolonged_field(z, &c)
                }
            }
            SystemKind::MinimalDeformed => twist::minimal_field(z, &c),
            SystemKind::Bernoulli | SystemKind::BernoulliDeformed => {
                let p = self.bernoulli_params()?;
                if copies == 1 || z == 0.0 {
                    bernoulli::bernoulli_copies_field(&p, copies)
                } else {
                    bernoulli::bernoulli_prolonged_field(&p)
                }
            }
        })
    }
}

pub type ConstantFn = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;

/// A constant of motion on three copies.
#[derive(Clone)]
pub struct NamedConstant {
    pub name: String,
    pub eval: ConstantFn,
}

impl fmt::Debug for NamedConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NamedConstant")
            .field("name", &self.name)
            .finish()
    }
}

impl NamedConstant {
    pub fn new<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            eval: Arc::new(f),
        }
    }
}

fn copy(pp: &[f64], j: usize) -> [f64; 2] {
    [pp[2 * j], pp[2 * j + 1]]
}

fn three(pp: &[f64]) -> Result<()> {
    if pp.len() != 6 {
        return Err(Error::InvalidInput(format!(
            "constants need three copies (6 coordinates), got {}",
            pp.len()
        )));
    }
    Ok(())
}

/// Undeformed plane constants `F2, F13, F23, F3`.
pub fn h4_constants() -> Vec<NamedConstant> {
    vec![
        NamedConstant::new("F2", |p| {
            three(p)?;
            Ok(oscillator::f2(copy(p, 0), copy(p, 1)))
        }),
        NamedConstant::new("F13", |p| {
            three(p)?;
            Ok(oscillator::f2_perm(
                copy(p, 0),
                copy(p, 1),
                copy(p, 2),
                Permuted::F13,
            ))
        }),
        NamedConstant::new("F23", |p| {
            three(p)?;
            Ok(oscillator::f2_perm(
                copy(p, 0),
                copy(p, 1),
                copy(p, 2),
                Permuted::F23,
            ))
        }),
        NamedConstant::new("F3", |p| {
            three(p)?;
            Ok(oscillator::f3(copy(p, 0), copy(p, 1), copy(p, 2)))
        }),
    ]
}

/// Deformed plane constants `Fz2, Fz2_right, Fz3`.
pub fn deformed_constants(z: f64) -> Vec<NamedConstant> {
    vec![
        NamedConstant::new("Fz2", move |p| deformed::fz2(p, z)),
        NamedConstant::new("Fz2_right", move |p| deformed::fz2_right(p, z)),
        NamedConstant::new("Fz3", move |p| deformed::fz3(p, z)),
    ]
}

/// The permuted images `S12, S13, S23` of `Fz2`.
pub fn permutation_candidates(z: f64) -> Vec<NamedConstant> {
    (0..3)
        .map(|i| {
            let name = ["S12", "S13", "S23"][i];
            NamedConstant::new(name, move |p| Ok(deformed::perm_candidates(p, z)?[i]))
        })
        .collect()
}

fn bernoulli_constants(s: f64, z: f64) -> Vec<NamedConstant> {
    let polar = |name: &'static str, which: BernoulliConstant| {
        NamedConstant::new(name, move |p| {
            three(p)?;
            bernoulli::bernoulli_constants(p, s, z, which)
        })
    };
    if z == 0.0 {
        return vec![
            polar("F2", BernoulliConstant::F2),
            polar("F2_right", BernoulliConstant::F2Right),
            polar("F3", BernoulliConstant::F3),
        ];
    }
    vec![
        polar("Fz2", BernoulliConstant::Fz2),
        NamedConstant::new("Fz2_right", move |p| {
            deformed::fz2_right(&bernoulli::polar_points_to_plane(p, s)?, z)
        }),
        NamedConstant::new("Fz3", move |p| {
            deformed::fz3(&bernoulli::polar_points_to_plane(p, s)?, z)
        }),
    ]
}

/// All constants of motion of the three-copy flow of `spec`. Deformed plane
/// kinds carry no counterpart of `F23`.
pub fn constants_for(spec: &SystemSpec) -> Result<Vec<NamedConstant>> {
    spec.validate()?;
    let z = spec.effective_z();
    Ok(match spec.kind {
        SystemKind::H4 | SystemKind::B2 | SystemKind::H4Prolonged => h4_constants(),
        SystemKind::H4Deformed | SystemKind::B2Deformed | SystemKind::H4DeformedProlonged => {
            deformed_constants(z)
        }
        SystemKind::Bernoulli | SystemKind::BernoulliDeformed => {
            bernoulli_constants(spec.bernoulli_params()?.s, z)
        }
        SystemKind::MinimalDeformed => {
            return Err(Error::InvalidInput(
                "minimal-deformed is a one-copy system without listed constants".into(),
            ))
        }
    })
}
