use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::conservation::{describe_coefficients, integrate_flow, FlowConfig};
use super::report::{CheckReport, Metadata, Tally, Witness};
use super::sampling::{rng, SampleBox};
use crate::bernoulli;
use crate::deformed;
use crate::error::{Error, Result};
use crate::oscillator::{self, calibrate_branch, Branch, Permuted, SuperpositionConstants};
use crate::systems::{SystemKind, SystemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchChoice {
    Plus,
    Minus,
    Auto,
}

impl fmt::Display for BranchChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BranchChoice::Plus => "plus",
            BranchChoice::Minus => "minus",
            BranchChoice::Auto => "auto",
        })
    }
}

impl FromStr for BranchChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" => Ok(BranchChoice::Plus),
            "minus" => Ok(BranchChoice::Minus),
            "auto" => Ok(BranchChoice::Auto),
            _ => Err(Error::InvalidInput(format!(
                "branch must be plus, minus or auto, got {s:?}"
            ))),
        }
    }
}

/// The superposition rule of `spec`: `(k1, k)` from a three-copy state and
/// the first copy from the other two.
pub fn rule_constants(spec: &SystemSpec, pp: &[f64]) -> Result<(f64, f64)> {
    let z = spec.effective_z();
    if pp.len() != 6 {
        return Err(Error::InvalidInput(
            "superposition needs three copies".into(),
        ));
    }
    match spec.kind {
        SystemKind::MinimalDeformed => Err(Error::InvalidInput(
            "minimal-deformed has no superposition rule".into(),
        )),
        SystemKind::Bernoulli | SystemKind::BernoulliDeformed => {
            bernoulli::bernoulli_rule_constants(pp, &spec.bernoulli_params()?)
        }
        _ if z == 0.0 => {
            let c = |j: usize| [pp[2 * j], pp[2 * j + 1]];
            Ok((oscillator::f2(c(0), c(1)), oscillator::f3(c(0), c(1), c(2))))
        }
        _ => Ok((deformed::fz2(pp, z)?, deformed::fz3(pp, z)?)),
    }
}

pub fn apply_rule(
    spec: &SystemSpec,
    p2: [f64; 2],
    p3: [f64; 2],
    sc: &SuperpositionConstants,
) -> Result<[f64; 2]> {
    match spec.kind {
        SystemKind::MinimalDeformed => Err(Error::InvalidInput(
            "minimal-deformed has no superposition rule".into(),
        )),
        SystemKind::Bernoulli | SystemKind::BernoulliDeformed => {
            bernoulli::bernoulli_superpose(p2, p3, sc, &spec.bernoulli_params()?)
        }
        _ => deformed::superpose_deformed(p2, p3, sc, spec.effective_z()),
    }
}

/// One reconstructed sample; `error` is `None` when the rule failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionSample {
    pub t: f64,
    pub integrated: [f64; 2],
    pub reconstructed: Option<[f64; 2]>,
    pub error: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub k1: f64,
    pub k: f64,
    pub branch: Branch,
    pub calibration_error: f64,
    pub ambiguous: bool,
    pub samples: Vec<ReconstructionSample>,
}

impl Reconstruction {
    pub fn max_error(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.error.unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }

    pub fn failures(&self) -> usize {
        self.samples.iter().filter(|s| s.error.is_none()).count()
    }
}

fn err2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).abs().max((a[1] - b[1]).abs())
}

/// Integrates three copies, fixes `(k1, k)` and the branch at `t0`, and
/// rebuilds the first copy from the other two at every sample time. When
/// neither branch evaluates at `t0` the plus branch is kept, marked
/// ambiguous with infinite calibration error.
pub fn reconstruct(
    spec: &SystemSpec,
    flow: &FlowConfig,
    branch: BranchChoice,
) -> Result<Reconstruction> {
    reconstruct_with(spec, flow, branch, None)
}

/// [`reconstruct`] with `(k1, k)` supplied instead of read off the initial
/// state.
pub fn reconstruct_with(
    spec: &SystemSpec,
    flow: &FlowConfig,
    branch: BranchChoice,
    constants: Option<(f64, f64)>,
) -> Result<Reconstruction> {
    if flow.initial.len() != 6 {
        return Err(Error::InvalidInput(
            "superposition needs three copies (6 coordinates)".into(),
        ));
    }
    let (k1, k) = match constants {
        Some(c) => c,
        None => rule_constants(spec, &flow.initial)?,
    };
    let traj = integrate_flow(spec, flow)?;
    let x0 = &flow.initial;
    let (p1, p2, p3) = ([x0[0], x0[1]], [x0[2], x0[3]], [x0[4], x0[5]]);
    let sc = |b| SuperpositionConstants::new(k1, k, b);
    let (branch, calibration_error, ambiguous) = match branch {
        BranchChoice::Auto => match calibrate_branch(|b| apply_rule(spec, p2, p3, &sc(b)), p1) {
            Ok(cal) => (cal.branch, cal.error, cal.ambiguous),
            Err(_) => (Branch::Plus, f64::INFINITY, true),
        },
        BranchChoice::Plus | BranchChoice::Minus => {
            let b = if branch == BranchChoice::Plus {
                Branch::Plus
            } else {
                Branch::Minus
            };
            let e = apply_rule(spec, p2, p3, &sc(b)).map_or(f64::INFINITY, |q| err2(q, p1));
            (b, e, false)
        }
    };
    let mut samples = Vec::new();
    for t in flow.sample_times() {
        let x = traj.sample(t)?;
        let integrated = [x[0], x[1]];
        let s = match apply_rule(spec, [x[2], x[3]], [x[4], x[5]], &sc(branch)) {
            Ok(q) => ReconstructionSample {
                t,
                integrated,
                reconstructed: Some(q),
                error: Some(err2(q, integrated)),
                failure: None,
            },
            Err(e) => ReconstructionSample {
                t,
                integrated,
                reconstructed: None,
                error: None,
                failure: Some(e.to_string()),
            },
        };
        samples.push(s);
    }
    Ok(Reconstruction {
        k1,
        k,
        branch,
        calibration_error,
        ambiguous,
        samples,
    })
}

/// Max reconstruction error over the sample times.
pub fn check_superposition(
    check_id: &str,
    spec: &SystemSpec,
    flow: &FlowConfig,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let mut meta = Metadata::seeded(seed).coefficients(describe_coefficients(spec));
    if spec.kind.is_deformed() {
        meta = meta.z(spec.z);
    }
    if let Some(s) = spec.s {
        meta = meta.s(s);
    }
    meta.detail("system", spec.kind.name());
    meta.detail("initial", &flow.initial);
    meta.detail("tspan", [flow.t0, flow.t1]);
    match reconstruct(spec, flow, BranchChoice::Auto) {
        Ok(rec) => {
            meta.detail("branch", rec.branch);
            meta.detail("k1", rec.k1);
            meta.detail("k", rec.k);
            meta.detail("calibration_error", rec.calibration_error);
            let mut tally = Tally::new(tol);
            for s in &rec.samples {
                let mut input = vec![s.t];
                input.extend(s.integrated);
                tally.record(&input, s.error.unwrap_or(f64::INFINITY));
            }
            tally.finish(check_id, meta)
        }
        Err(e) => CheckReport::failure(check_id, tol, &e, meta),
    }
}

fn random_triple<R: rand::Rng>(bx: &SampleBox, r: &mut R) -> ([f64; 2], [f64; 2], [f64; 2]) {
    let p = bx.sample(r);
    ([p[0], p[1]], [p[2], p[3]], [p[4], p[5]])
}

/// The simplified and the legacy undeformed rules agree branch by branch,
/// relative to `max(1, |x1|)`.
pub fn check_legacy_agreement(check_id: &str, samples: usize, tol: f64, seed: u64) -> CheckReport {
    let bx = SampleBox::plane(3, 2.0);
    let mut meta = Metadata::seeded(seed).sample_box(bx.describe());
    let mut r = rng(seed);
    let mut tally = Tally::new(tol);
    let mut skipped = 0;
    for _ in 0..samples {
        let (p1, p2, p3) = random_triple(&bx, &mut r);
        let k1 = oscillator::f2(p1, p2);
        let k2 = oscillator::f2_perm(p1, p2, p3, Permuted::F23);
        let k3 = oscillator::f2_perm(p1, p2, p3, Permuted::F13);
        let k = k1 + k2 + k3;
        let mut worst = 0.0_f64;
        for b in Branch::both() {
            let a = oscillator::superpose_h4(p2, p3, &SuperpositionConstants::new(k1, k, b));
            let c = oscillator::superpose_h4_legacy(p2, p3, k1, k2, k3, b);
            match (a, c) {
                (Ok(a), Ok(c)) => {
                    let scale = a[0].abs().max(a[1].abs()).max(1.0);
                    worst = worst.max(err2(a, c) / scale);
                }
                (Err(_), Err(_)) => skipped += 1,
                _ => worst = f64::INFINITY,
            }
        }
        let mut input = p1.to_vec();
        input.extend(p2);
        input.extend(p3);
        tally.record(&input, worst);
    }
    meta.detail("both_failed", skipped);
    tally.finish(check_id, meta)
}

/// The stable deformed rule against the exponential form as printed.
pub fn check_printed_agreement(
    check_id: &str,
    z: f64,
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let bx = SampleBox::plane(3, 1.5);
    let mut meta = Metadata::seeded(seed).z(z).sample_box(bx.describe());
    let mut r = rng(seed);
    let mut tally = Tally::new(tol);
    let mut skipped = 0;
    for _ in 0..samples {
        let (p1, p2, p3) = random_triple(&bx, &mut r);
        let pp = [p1[0], p1[1], p2[0], p2[1], p3[0], p3[1]];
        let (k1, k) = match (deformed::fz2(&pp, z), deformed::fz3(&pp, z)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                skipped += 1;
                continue;
            }
        };
        let mut worst = 0.0_f64;
        for b in Branch::both() {
            let a = deformed::superpose_deformed(p2, p3, &SuperpositionConstants::new(k1, k, b), z);
            let c = deformed::superpose_deformed_printed(p2, p3, k1, k, b, z);
            match (a, c) {
                (Ok(a), Ok(c)) => {
                    let scale = a[0].abs().max(a[1].abs()).max(1.0);
                    worst = worst.max(err2(a, c) / scale);
                }
                (Err(_), _) => skipped += 1,
                (Ok(_), Err(_)) => worst = f64::INFINITY,
            }
        }
        tally.record(&pp, worst);
    }
    meta.detail("skipped", skipped);
    tally.finish(check_id, meta)
}

/// Plane route against the implicit polar formulas of the undeformed
/// Bernoulli rule.
pub fn check_bernoulli_implicit(
    check_id: &str,
    s: f64,
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let bx = SampleBox::polar(3, s);
    let mut meta = Metadata::seeded(seed).s(s).sample_box(bx.describe());
    let params =
        match bernoulli::BernoulliParams::new(s, Default::default(), Default::default(), 0.0) {
            Ok(p) => p,
            Err(e) => return CheckReport::failure(check_id, tol, &e, meta),
        };
    let mut r = rng(seed);
    let mut tally = Tally::new(tol);
    let mut skipped = 0;
    for _ in 0..samples {
        let q = bx.sample(&mut r);
        let (k1, k) = match bernoulli::bernoulli_rule_constants(&q, &params) {
            Ok(v) => v,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let (q2, q3) = ([q[2], q[3]], [q[4], q[5]]);
        let mut worst = 0.0_f64;
        let mut compared = false;
        for b in Branch::both() {
            let sc = SuperpositionConstants::new(k1, k, b);
            let a = bernoulli::bernoulli_superpose(q2, q3, &sc, &params);
            let c = bernoulli::bernoulli_superpose_implicit(q2, q3, &sc, s);
            // the implicit route admits both signs of sin(phi); only the
            // fundamental branch is comparable
            match (a, c) {
                (Ok(a), Ok(c)) => {
                    compared = true;
                    let scale = a[0].abs().max(a[1].abs()).max(1.0);
                    worst = worst.max(err2(a, c) / scale);
                }
                (Ok(_), Err(_)) => worst = f64::INFINITY,
                _ => {}
            }
        }
        if !compared {
            skipped += 1;
        }
        tally.record(&q, worst);
    }
    meta.detail("skipped", skipped);
    tally.finish(check_id, meta)
}

/// A reconstruction check run with a perturbed `k1` must fail.
pub fn corrupted_reconstruction_error(
    spec: &SystemSpec,
    flow: &FlowConfig,
    delta: f64,
) -> Result<f64> {
    let (k1, k) = rule_constants(spec, &flow.initial)?;
    let traj = integrate_flow(spec, flow)?;
    let x0 = &flow.initial;
    let cal = calibrate_branch(
        |b| {
            apply_rule(
                spec,
                [x0[2], x0[3]],
                [x0[4], x0[5]],
                &SuperpositionConstants::new(k1, k, b),
            )
        },
        [x0[0], x0[1]],
    )?;
    let sc = SuperpositionConstants::new(k1 + delta, k, cal.branch);
    let mut worst = 0.0_f64;
    for t in flow.sample_times() {
        let x = traj.sample(t)?;
        let e = apply_rule(spec, [x[2], x[3]], [x[4], x[5]], &sc)
            .map_or(f64::INFINITY, |q| err2(q, [x[0], x[1]]));
        worst = worst.max(e);
    }
    Ok(worst)
}

/// Failures recorded per sample become witnesses; used by callers that
/// report reconstructions directly.
pub fn reconstruction_witnesses(rec: &Reconstruction, tol: f64) -> Vec<Witness> {
    rec.samples
        .iter()
        .filter(|s| s.error.is_none_or(|e| e > tol))
        .map(|s| Witness {
            input: vec![s.t, s.integrated[0], s.integrated[1]],
            residual: s.error.unwrap_or(f64::INFINITY),
        })
        .collect()
}
