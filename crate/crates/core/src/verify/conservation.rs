use serde::{Deserialize, Serialize};

use super::report::{CheckReport, Metadata, Tally};
use crate::error::{Error, Result};
use crate::ode::{integrate, IntegratorConfig, Trajectory};
use crate::systems::{constants_for, NamedConstant, SystemSpec};

/// Initial data, time span and sampling of a three-copy flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub initial: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
    pub samples: usize,
    pub integrator: IntegratorConfig,
}

impl FlowConfig {
    pub fn new(initial: Vec<f64>, t0: f64, t1: f64) -> Self {
        Self {
            initial,
            t0,
            t1,
            samples: 50,
            integrator: IntegratorConfig::with_tol(1e-12),
        }
    }

    pub fn samples(mut self, n: usize) -> Self {
        self.samples = n;
        self
    }

    pub fn sample_times(&self) -> Vec<f64> {
        crate::ode::uniform_grid(self.t0, self.t1, self.samples.max(2))
    }
}

/// Integrates the three-copy flow of `spec` over `flow`.
pub fn integrate_flow(spec: &SystemSpec, flow: &FlowConfig) -> Result<Trajectory> {
    let copies = flow.initial.len() / 2;
    if flow.initial.len() % 2 != 0 {
        return Err(Error::InvalidInput(
            "odd number of initial coordinates".into(),
        ));
    }
    let field = spec.field(copies)?;
    integrate(&field, &flow.initial, flow.t0, flow.t1, &flow.integrator)
}

/// `max |F(t) - F(t0)| / max(|F(t0)|, 1e-8)` over the sample times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub name: String,
    pub initial: f64,
    pub drift: f64,
    pub worst_time: f64,
}

pub fn drift_along(traj: &Trajectory, times: &[f64], c: &NamedConstant) -> Result<Drift> {
    let x0 = traj.sample(times[0])?;
    let f0 = (c.eval)(&x0)?;
    let scale = f0.abs().max(1e-8);
    let mut worst = (0.0_f64, times[0]);
    for &t in times {
        let v = (c.eval)(&traj.sample(t)?)?;
        let d = (v - f0).abs() / scale;
        if !(d <= worst.0) {
            worst = (if d.is_nan() { f64::INFINITY } else { d }, t);
        }
    }
    Ok(Drift {
        name: c.name.clone(),
        initial: f0,
        drift: worst.0,
        worst_time: worst.1,
    })
}

fn flow_metadata(spec: &SystemSpec, flow: &FlowConfig, seed: u64) -> Metadata {
    let mut m = Metadata::seeded(seed).coefficients(describe_coefficients(spec));
    if spec.kind.is_deformed() {
        m = m.z(spec.z);
    }
    if let Some(s) = spec.s {
        m = m.s(s);
    }
    m.detail("system", spec.kind.name());
    m.detail("initial", &flow.initial);
    m.detail("tspan", [flow.t0, flow.t1]);
    m
}

pub fn describe_coefficients(spec: &SystemSpec) -> String {
    serde_json::to_string(&spec.coefficients).unwrap_or_default()
}

fn find_constant(spec: &SystemSpec, name: &str) -> Result<NamedConstant> {
    constants_for(spec)?
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| {
            Error::InvalidInput(format!("constant {name} does not apply to {}", spec.kind))
        })
}

/// Relative drift of the named constant along the three-copy flow.
pub fn check_conservation(
    check_id: &str,
    spec: &SystemSpec,
    constant: &str,
    flow: &FlowConfig,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let meta = flow_metadata(spec, flow, seed);
    match find_constant(spec, constant) {
        Ok(c) => check_drift(check_id, spec, &c, flow, tol, meta),
        Err(e) => CheckReport::failure(check_id, tol, &e, meta),
    }
}

/// [`check_conservation`] for an arbitrary candidate function.
pub fn check_drift(
    check_id: &str,
    spec: &SystemSpec,
    candidate: &NamedConstant,
    flow: &FlowConfig,
    tol: f64,
    mut meta: Metadata,
) -> CheckReport {
    let times = flow.sample_times();
    let res = integrate_flow(spec, flow).and_then(|tr| {
        let d = drift_along(&tr, &times, candidate)?;
        let at = tr.sample(d.worst_time)?;
        Ok((d, at, tr.accepted()))
    });
    match res {
        Ok((d, at, steps)) => {
            meta.detail("constant", &d.name);
            meta.detail("initial_value", d.initial);
            meta.detail("steps", steps);
            let mut tally = Tally::new(tol);
            let mut input = vec![d.worst_time];
            input.extend(at);
            tally.record(&input, d.drift);
            let mut r = tally.finish(check_id, meta);
            r.metadata.detail("samples", times.len());
            r
        }
        Err(e) => CheckReport::failure(check_id, tol, &e, meta),
    }
}

/// Inverted criterion: every candidate must drift by more than `floor`.
/// `measured = floor - min drift`, passing when non-positive.
pub fn check_nonconservation(
    check_id: &str,
    spec: &SystemSpec,
    candidates: &[NamedConstant],
    flow: &FlowConfig,
    floor: f64,
    seed: u64,
) -> CheckReport {
    let mut meta = flow_metadata(spec, flow, seed);
    meta.detail("floor", floor);
    let times = flow.sample_times();
    let res = integrate_flow(spec, flow).and_then(|tr| {
        candidates
            .iter()
            .map(|c| drift_along(&tr, &times, c))
            .collect::<Result<Vec<_>>>()
    });
    match res {
        Ok(drifts) => {
            let min = drifts.iter().map(|d| d.drift).fold(f64::INFINITY, f64::min);
            let shortfall = floor - min;
            let witnesses = drifts
                .iter()
                .filter(|d| d.drift <= floor)
                .map(|d| super::report::Witness {
                    input: vec![d.worst_time, d.initial],
                    residual: d.drift,
                })
                .collect();
            let list: Vec<_> = drifts.iter().map(|d| (d.name.clone(), d.drift)).collect();
            meta.detail("drifts", list);
            CheckReport::new(check_id, shortfall, 0.0, witnesses, meta)
        }
        Err(e) => CheckReport::failure(check_id, 0.0, &e, meta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::CoefficientSpec;
    use crate::systems::{permutation_candidates, SystemKind};

    fn spec(kind: SystemKind, z: f64) -> SystemSpec {
        SystemSpec::new(kind, z, None)
            .with("b1", CoefficientSpec::constant(1.0))
            .with("b2", CoefficientSpec::monomial(1.0, 1))
            .with("b3", CoefficientSpec::sinusoid(1.0, 1.0, 0.0))
    }

    const X0: [f64; 6] = [-2.0, 0.5, -1.5, -0.7, -2.5, 1.2];

    #[test]
    fn undeformed_constants_conserved() {
        let flow = FlowConfig::new(X0.to_vec(), 0.0, 5.0);
        for c in ["F2", "F13", "F23", "F3"] {
            let r = check_conservation("c", &spec(SystemKind::H4, 0.0), c, &flow, 1e-6, 0);
            assert!(r.passed, "{c}: {}", r.measured);
        }
        let r = check_conservation("c", &spec(SystemKind::H4, 0.0), "Fz3", &flow, 1e-6, 0);
        assert!(!r.passed);
    }

    #[test]
    fn deformed_constants_and_candidates() {
        let s = spec(SystemKind::H4DeformedProlonged, 0.5);
        let flow = FlowConfig::new(X0.to_vec(), 0.0, 3.0);
        let r = check_conservation("c", &s, "Fz3", &flow, 1e-6, 0);
        assert!(r.passed, "{}", r.measured);
        let r = check_nonconservation("n", &s, &permutation_candidates(0.5), &flow, 1e-3, 0);
        assert!(r.passed, "{}", r.measured);
        let r = check_nonconservation(
            "n",
            &s,
            &crate::systems::deformed_constants(0.5),
            &flow,
            1e-3,
            0,
        );
        assert!(!r.passed && !r.witnesses.is_empty());
    }

    #[test]
    fn integration_failure_is_reported() {
        let s = spec(SystemKind::H4DeformedProlonged, 0.5);
        let flow = FlowConfig::new(vec![0.3, 0.5, -0.4, -0.7, 0.1, 1.2], 0.0, 3.0);
        let r = check_conservation("c", &s, "Fz3", &flow, 1e-6, 0);
        assert!(!r.passed);
        assert!(r.metadata.details.contains_key("error"));
    }
}
