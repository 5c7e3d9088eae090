use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::report::{CheckReport, Metadata, Witness};
use super::sampling::{rng, SampleBox};
use crate::bernoulli::{self, BernoulliConstant, BernoulliParams};
use crate::deformed;
use crate::error::{Error, Result};
use crate::ode::CoefficientSpec;
use crate::oscillator::{self, calibrate_branch, H4Coefficients, SuperpositionConstants};
use crate::twist::{self, Direction};

/// Deformed objects with a known undeformed limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitFamily {
    HzHamiltonians,
    HzRhs,
    ProlongedHamiltonians,
    ProlongedRhs,
    Fz2,
    Fz2Right,
    Fz3,
    TwistOneCopy,
    TwistTwoCopy,
    MinimalRhs,
    Superposition,
    BernoulliHamiltonians,
    BernoulliRhs,
    BernoulliFz2,
    /// Distance between the first-order truncation and the full system.
    FirstOrderTruncation,
}

impl LimitFamily {
    pub const ALL: [LimitFamily; 15] = [
        LimitFamily::HzHamiltonians,
        LimitFamily::HzRhs,
        LimitFamily::ProlongedHamiltonians,
        LimitFamily::ProlongedRhs,
        LimitFamily::Fz2,
        LimitFamily::Fz2Right,
        LimitFamily::Fz3,
        LimitFamily::TwistOneCopy,
        LimitFamily::TwistTwoCopy,
        LimitFamily::MinimalRhs,
        LimitFamily::Superposition,
        LimitFamily::BernoulliHamiltonians,
        LimitFamily::BernoulliRhs,
        LimitFamily::BernoulliFz2,
        LimitFamily::FirstOrderTruncation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LimitFamily::HzHamiltonians => "hz-hamiltonians",
            LimitFamily::HzRhs => "hz-rhs",
            LimitFamily::ProlongedHamiltonians => "prolonged-hamiltonians",
            LimitFamily::ProlongedRhs => "prolonged-rhs",
            LimitFamily::Fz2 => "fz2",
            LimitFamily::Fz2Right => "fz2-right",
            LimitFamily::Fz3 => "fz3",
            LimitFamily::TwistOneCopy => "twist-one-copy",
            LimitFamily::TwistTwoCopy => "twist-two-copy",
            LimitFamily::MinimalRhs => "minimal-rhs",
            LimitFamily::Superposition => "superposition",
            LimitFamily::BernoulliHamiltonians => "bernoulli-hamiltonians",
            LimitFamily::BernoulliRhs => "bernoulli-rhs",
            LimitFamily::BernoulliFz2 => "bernoulli-fz2",
            LimitFamily::FirstOrderTruncation => "first-order-truncation",
        }
    }

    /// Convergence order the family must reach.
    pub fn required_order(self) -> f64 {
        match self {
            LimitFamily::FirstOrderTruncation => 2.0,
            _ => 1.0,
        }
    }

    fn copies(self) -> usize {
        match self {
            LimitFamily::HzHamiltonians
            | LimitFamily::HzRhs
            | LimitFamily::TwistOneCopy
            | LimitFamily::MinimalRhs
            | LimitFamily::BernoulliHamiltonians
            | LimitFamily::BernoulliRhs
            | LimitFamily::FirstOrderTruncation => 1,
            LimitFamily::TwistTwoCopy => 2,
            _ => 3,
        }
    }

    fn is_bernoulli(self) -> bool {
        matches!(
            self,
            LimitFamily::BernoulliHamiltonians
                | LimitFamily::BernoulliRhs
                | LimitFamily::BernoulliFz2
        )
    }
}

impl fmt::Display for LimitFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LimitFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LimitFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown limit family {s:?}")))
    }
}

/// Exponent of the Bernoulli families.
pub const LIMIT_S: f64 = 3.0;

fn coefficients() -> H4Coefficients {
    H4Coefficients::new(
        CoefficientSpec::constant(0.7),
        CoefficientSpec::constant(-0.4),
        CoefficientSpec::constant(1.1),
    )
}

fn bernoulli_params(z: f64) -> Result<BernoulliParams> {
    BernoulliParams::new(
        LIMIT_S,
        CoefficientSpec::constant(0.6),
        CoefficientSpec::constant(-0.4),
        z,
    )
}

/// `(deformed at z, undeformed)` for `family` at `p`.
pub fn limit_pair(family: LimitFamily, p: &[f64], z: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let c = coefficients();
    let one = || [p[0], p[1]];
    Ok(match family {
        LimitFamily::HzHamiltonians => (
            deformed::hz_hamiltonians(one(), z)?.to_vec(),
            oscillator::h4_hamiltonians(one()).to_vec(),
        ),
        LimitFamily::HzRhs => (
            deformed::hz_rhs(0.0, one(), z, &c)?.to_vec(),
            oscillator::h4_rhs(0.0, one(), &c).to_vec(),
        ),
        LimitFamily::ProlongedHamiltonians => {
            let mut sum = [0.0; 4];
            for j in 0..3 {
                let h = oscillator::h4_hamiltonians([p[2 * j], p[2 * j + 1]]);
                for i in 0..4 {
                    sum[i] += h[i];
                }
            }
            (
                deformed::prolonged_hamiltonians(p, z)?.to_vec(),
                sum.to_vec(),
            )
        }
        LimitFamily::ProlongedRhs => (
            deformed::prolonged_rhs(0.0, p, z, &c)?.to_vec(),
            oscillator::h4_field(&c, 3).eval(0.0, p)?,
        ),
        LimitFamily::Fz2 => (vec![deformed::fz2(p, z)?], vec![deformed::fz2(p, 0.0)?]),
        LimitFamily::Fz2Right => (
            vec![deformed::fz2_right(p, z)?],
            vec![deformed::fz2_right(p, 0.0)?],
        ),
        LimitFamily::Fz3 => (vec![deformed::fz3(p, z)?], vec![deformed::fz3(p, 0.0)?]),
        LimitFamily::TwistOneCopy => (
            twist::twist_vars(one(), z, Direction::Forward)?.to_vec(),
            p.to_vec(),
        ),
        LimitFamily::TwistTwoCopy => (twist::twisted_two_copy_map(p, z)?.to_vec(), p.to_vec()),
        LimitFamily::MinimalRhs => (
            twist::minimal_rhs(0.0, one(), z, &c)?.to_vec(),
            oscillator::h4_rhs(0.0, one(), &c).to_vec(),
        ),
        LimitFamily::Superposition => superposition_pair(p, z)?,
        LimitFamily::BernoulliHamiltonians => (
            bernoulli::bernoulli_deformed_hamiltonians(one(), LIMIT_S, z)?.to_vec(),
            bernoulli::bernoulli_hamiltonians(one(), LIMIT_S)?.to_vec(),
        ),
        LimitFamily::BernoulliRhs => (
            bernoulli::bernoulli_deformed_rhs(0.0, one(), &bernoulli_params(z)?)?.to_vec(),
            bernoulli::bernoulli_rhs(0.0, one(), &bernoulli_params(0.0)?)?.to_vec(),
        ),
        LimitFamily::BernoulliFz2 => (
            vec![bernoulli::bernoulli_constants(
                p,
                LIMIT_S,
                z,
                BernoulliConstant::Fz2,
            )?],
            vec![bernoulli::bernoulli_constants(
                p,
                LIMIT_S,
                0.0,
                BernoulliConstant::F2,
            )?],
        ),
        LimitFamily::FirstOrderTruncation => (
            deformed::hz_rhs_first_order(0.0, one(), z, &c).to_vec(),
            deformed::hz_rhs(0.0, one(), z, &c)?.to_vec(),
        ),
    })
}

/// The deformed rule with constants and branch taken from the undeformed
/// data at `p = (p1, p2, p3)`.
fn superposition_pair(p: &[f64], z: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (p1, p2, p3) = ([p[0], p[1]], [p[2], p[3]], [p[4], p[5]]);
    let k1 = oscillator::f2(p1, p2);
    let k = oscillator::f3(p1, p2, p3);
    let cal = calibrate_branch(
        |b| oscillator::superpose_h4(p2, p3, &SuperpositionConstants::new(k1, k, b)),
        p1,
    )?;
    let sc = SuperpositionConstants::new(k1, k, cal.branch);
    let a = deformed::superpose_deformed(p2, p3, &sc, z)?;
    let b = oscillator::superpose_h4(p2, p3, &sc)?;
    Ok((a.to_vec(), b.to_vec()))
}

/// Keeps superposition samples away from the singular set of the rule
/// (`x2 = x3`, `y2 = y3`, vanishing discriminant).
fn well_conditioned(family: LimitFamily, p: &[f64]) -> bool {
    if family != LimitFamily::Superposition {
        return true;
    }
    let (p1, p2, p3) = ([p[0], p[1]], [p[2], p[3]], [p[4], p[5]]);
    let k1 = oscillator::f2(p1, p2);
    let k = oscillator::f3(p1, p2, p3);
    let k3 = oscillator::f2(p3, p2);
    let root = oscillator::discriminant_root(k1, k, k3).unwrap_or(0.0);
    (p2[0] - p3[0]).abs() >= 0.5 && (p2[1] - p3[1]).abs() >= 0.5 && root >= 0.5
}

/// Least-squares slope of `log d` against `log z`.
pub fn fit_order(zs: &[f64], ds: &[f64]) -> f64 {
    let xs: Vec<f64> = zs.iter().map(|z| z.abs().ln()).collect();
    let ys: Vec<f64> = ds.iter().map(|d| d.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub const DEFAULT_Z_GRID: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Allowed shortfall of the fitted slope below the required order: rounding
/// of the log-log fit only.
pub const LIMIT_SLACK: f64 = 1e-9;

/// Sample box of `family`, inside every rule and map domain.
pub fn limit_box(family: LimitFamily) -> SampleBox {
    if family.is_bernoulli() {
        SampleBox::polar(family.copies(), LIMIT_S)
    } else {
        SampleBox::plane(family.copies(), 2.0)
    }
}

/// Sup-norm distance on a seeded cloud for each `z`; the fitted slope must
/// reach the family's order. `measured = required - slope`, tolerance
/// `slack`.
pub fn check_limit(
    check_id: &str,
    family: LimitFamily,
    z_grid: &[f64],
    points: usize,
    slack: f64,
    seed: u64,
) -> CheckReport {
    check_limit_with(
        check_id,
        family,
        |p, z| limit_pair(family, p, z),
        z_grid,
        points,
        slack,
        seed,
    )
}

/// [`check_limit`] with a replacement for [`limit_pair`].
pub fn check_limit_with<F>(
    check_id: &str,
    family: LimitFamily,
    pair: F,
    z_grid: &[f64],
    points: usize,
    slack: f64,
    seed: u64,
) -> CheckReport
where
    F: Fn(&[f64], f64) -> Result<(Vec<f64>, Vec<f64>)>,
{
    let bx = limit_box(family);
    let mut meta = Metadata::seeded(seed).sample_box(bx.describe());
    if family.is_bernoulli() {
        meta = meta.s(LIMIT_S);
    }
    meta.detail("family", family.name());
    meta.detail("z_grid", z_grid);
    meta.detail("required_order", family.required_order());
    if z_grid.len() < 2
        || z_grid.iter().any(|z| !(*z > 0.0))
        || z_grid.windows(2).any(|w| w[1] >= w[0])
    {
        let e =
            Error::InvalidInput("z grid must hold at least two positive decreasing values".into());
        return CheckReport::failure(check_id, slack, &e, meta);
    }
    let mut r = rng(seed);
    let mut cloud = Vec::new();
    let mut attempts = 0;
    while cloud.len() < points && attempts < 20 * points {
        attempts += 1;
        let p = bx.sample(&mut r);
        if well_conditioned(family, &p) && z_grid.iter().all(|&z| pair(&p, z).is_ok()) {
            cloud.push(p);
        }
    }
    meta.detail("points", cloud.len());
    if cloud.is_empty() {
        let e = Error::InvalidInput("no sample point inside the family domain".into());
        return CheckReport::failure(check_id, slack, &e, meta);
    }
    let dist = |z: f64| -> (f64, Vec<f64>) {
        let mut worst = (0.0_f64, Vec::new());
        for p in &cloud {
            let (a, b) = pair(p, z).expect("filtered");
            let d = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            if d >= worst.0 {
                worst = (d, p.clone());
            }
        }
        worst
    };
    let ds: Vec<(f64, Vec<f64>)> = z_grid.iter().map(|&z| dist(z)).collect();
    let dv: Vec<f64> = ds.iter().map(|d| d.0).collect();
    meta.detail("distances", &dv);
    let order = if dv.iter().all(|d| *d > 0.0 && d.is_finite()) {
        fit_order(z_grid, &dv)
    } else {
        f64::NAN
    };
    meta.detail("order", order);
    let shortfall = if order.is_nan() {
        f64::INFINITY
    } else {
        family.required_order() - order
    };
    let witnesses = if shortfall > slack {
        ds.iter()
            .zip(z_grid)
            .map(|((d, p), z)| {
                let mut input = vec![*z];
                input.extend(p);
                Witness {
                    input,
                    residual: *d,
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    CheckReport::new(check_id, shortfall, slack, witnesses, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_laws() {
        let zs = [1e-2, 1e-3, 1e-4];
        let ds: Vec<f64> = zs.iter().map(|z| 3.0 * z * z).collect();
        assert!((fit_order(&zs, &ds) - 2.0).abs() < 1e-12);
    }

    fn order(r: &CheckReport) -> f64 {
        r.metadata.details["order"].as_f64().unwrap()
    }

    #[test]
    fn every_family_reaches_its_order_approximately() {
        for f in LimitFamily::ALL {
            let r = check_limit("l", f, &DEFAULT_Z_GRID, 24, LIMIT_SLACK, 5);
            let p = order(&r);
            assert!((p - f.required_order()).abs() < 0.02, "{f}: {p}");
            assert_eq!(r.passed, p >= f.required_order() - LIMIT_SLACK, "{f}: {p}");
        }
    }

    #[test]
    fn shortfalls_in_the_suite_come_from_a_second_order_term() {
        let fine = [1e-4, 1e-5, 1e-6];
        for f in LimitFamily::ALL {
            let seed = super::super::sampling::check_seed(
                super::super::DEFAULT_SEED,
                &format!("limit.{}", f.name()),
            );
            let coarse = check_limit("l", f, &DEFAULT_Z_GRID, 24, LIMIT_SLACK, seed);
            if coarse.passed {
                continue;
            }
            let ds = coarse.metadata.details["distances"].as_array().unwrap();
            let ratios: Vec<f64> = ds
                .iter()
                .zip(DEFAULT_Z_GRID)
                .map(|(d, z)| d.as_f64().unwrap() / z)
                .collect();
            assert!(ratios.windows(2).all(|w| w[1] > w[0]), "{f}: {ratios:?}");
            let finer = check_limit("l", f, &fine, 24, LIMIT_SLACK, seed);
            assert!(order(&coarse) < order(&finer), "{f}");
            assert!(f.required_order() - order(&finer) < 1e-3, "{f}");
        }
    }

    #[test]
    fn bad_grid_rejected() {
        assert!(!check_limit("l", LimitFamily::Fz3, &[1e-3, 1e-2], 5, 0.0, 1).passed);
        assert!(!check_limit("l", LimitFamily::Fz3, &[1e-2], 5, 0.0, 1).passed);
    }
}
