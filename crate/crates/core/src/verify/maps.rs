//! Pointwise and trajectory checks for coordinate maps: twist maps,
//! the Bernoulli change of variables, and analytic gradients.

use serde::{Deserialize, Serialize};

use super::report::{CheckReport, Metadata, Tally};
use super::sampling::{rng, SampleBox};
use crate::bernoulli::{
    bernoulli_constants, bernoulli_field, bernoulli_weight, plane_to_polar, polar_points_to_plane,
    polar_to_plane, BernoulliConstant, BernoulliParams,
};
use crate::deformed::{self, hz_field};
use crate::error::{Error, Result};
use crate::ode::{integrate, CoefficientSpec, IntegratorConfig};
use crate::oscillator::{self, h4_rhs, H4Coefficients, Permuted};
use crate::symplectic::{
    symplectic_jacobian_residual, symplectic_jacobian_residual_between, ScalarField,
    SymplecticWeight,
};
use crate::twist::{
    minimal_field, minimal_rhs, twist_vars, twisted_h2_functions, twisted_two_copy_map,
    twisted_two_copy_map_inverse, Direction,
};

/// Evaluates `residual` at `samples` points of `sample_box`; evaluation
/// errors count as infinite residuals.
pub fn pointwise<F>(
    check_id: &str,
    sample_box: &SampleBox,
    samples: usize,
    tol: f64,
    metadata: Metadata,
    residual: F,
) -> CheckReport
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut r = rng(metadata.seed);
    let mut tally = Tally::new(tol);
    let mut errors = 0usize;
    let mut first_error = None;
    for _ in 0..samples {
        let p = sample_box.sample(&mut r);
        match residual(&p) {
            Ok(v) => tally.record(&p, v),
            Err(e) => {
                errors += 1;
                first_error.get_or_insert_with(|| e.to_string());
                tally.record(&p, f64::INFINITY);
            }
        }
    }
    let mut metadata = metadata.sample_box(sample_box.describe());
    if let Some(e) = first_error {
        metadata.detail("evaluation_errors", errors);
        metadata.detail("error", e);
    }
    tally.finish(check_id, metadata)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}

fn scale(v: &[f64]) -> f64 {
    v.iter().fold(1.0_f64, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TwistMapKind {
    OneCopyForward,
    OneCopyInverse,
    TwoCopy,
    TwoCopyInverse,
}

impl TwistMapKind {
    pub const ALL: [TwistMapKind; 4] = [
        TwistMapKind::OneCopyForward,
        TwistMapKind::OneCopyInverse,
        TwistMapKind::TwoCopy,
        TwistMapKind::TwoCopyInverse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TwistMapKind::OneCopyForward => "one-copy-forward",
            TwistMapKind::OneCopyInverse => "one-copy-inverse",
            TwistMapKind::TwoCopy => "two-copy",
            TwistMapKind::TwoCopyInverse => "two-copy-inverse",
        }
    }

    pub fn apply(self, p: &[f64], z: f64) -> Result<Vec<f64>> {
        match self {
            TwistMapKind::OneCopyForward => {
                Ok(twist_vars([p[0], p[1]], z, Direction::Forward)?.to_vec())
            }
            TwistMapKind::OneCopyInverse => {
                Ok(twist_vars([p[0], p[1]], z, Direction::Inverse)?.to_vec())
            }
            TwistMapKind::TwoCopy => Ok(twisted_two_copy_map(p, z)?.to_vec()),
            TwistMapKind::TwoCopyInverse => Ok(twisted_two_copy_map_inverse(p, z)?.to_vec()),
        }
    }

    fn inverse(self) -> TwistMapKind {
        match self {
            TwistMapKind::OneCopyForward => TwistMapKind::OneCopyInverse,
            TwistMapKind::OneCopyInverse => TwistMapKind::OneCopyForward,
            TwistMapKind::TwoCopy => TwistMapKind::TwoCopyInverse,
            TwistMapKind::TwoCopyInverse => TwistMapKind::TwoCopy,
        }
    }

    /// Sampling box inside the map's domain: `|z x| <= 1/2` on the
    /// coordinate entering `1 - z x`.
    pub fn sample_box(self, z: f64) -> SampleBox {
        let bound = if z == 0.0 {
            2.0
        } else {
            (0.5 / z.abs()).min(2.0)
        };
        match self {
            TwistMapKind::OneCopyForward => SampleBox::plane(1, 2.0),
            TwistMapKind::OneCopyInverse => SampleBox::plane(1, 2.0).with(0, -bound, bound),
            TwistMapKind::TwoCopy | TwistMapKind::TwoCopyInverse => {
                SampleBox::plane(2, 2.0).with(2, -bound, bound)
            }
        }
    }
}

/// Symplectic-Jacobian residual of a twist map under the canonical form.
pub fn check_twist_symplectic(
    check_id: &str,
    kind: TwistMapKind,
    z: f64,
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let mut meta = Metadata::seeded(seed).z(z);
    meta.detail("map", kind.name());
    pointwise(check_id, &kind.sample_box(z), samples, tol, meta, |p| {
        symplectic_jacobian_residual(|v| kind.apply(v, z), &SymplecticWeight::Canonical, p)
    })
}

/// `|T^{-1}(T(p)) - p| / max(1, |p|)` for every twist map.
pub fn check_twist_roundtrip(
    check_id: &str,
    z: f64,
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let mut r = rng(seed);
    let mut tally = Tally::new(tol);
    let mut boxes = Vec::new();
    for kind in TwistMapKind::ALL {
        let bx = kind.sample_box(z);
        boxes.push(format!("{}: {}", kind.name(), bx.describe()));
        for _ in 0..samples {
            let p = bx.sample(&mut r);
            let res = kind
                .apply(&p, z)
                .and_then(|q| kind.inverse().apply(&q, z))
                .map(|back| max_abs_diff(&back, &p) / scale(&p))
                .unwrap_or(f64::INFINITY);
            tally.record(&p, res);
        }
    }
    let mut meta = Metadata::seeded(seed).z(z);
    meta.detail("boxes", boxes);
    tally.finish(check_id, meta)
}

/// Twisted two-copy functions composed with the two-copy map against the
/// undeformed diagonal sums, relative to `max(1, |sum|)`.
pub fn check_twisted_hamiltonians(
    check_id: &str,
    z: f64,
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let bx = TwistMapKind::TwoCopy.sample_box(z);
    pointwise(
        check_id,
        &bx,
        samples,
        tol,
        Metadata::seeded(seed).z(z),
        |p| {
            let h = twisted_h2_functions(&twisted_two_copy_map(p, z)?, z)?;
            let a = oscillator::h4_hamiltonians([p[0], p[1]]);
            let b = oscillator::h4_hamiltonians([p[2], p[3]]);
            let sums: Vec<f64> = (0..4).map(|i| a[i] + b[i]).collect();
            Ok(max_abs_diff(&h, &sums) / scale(&sums))
        },
    )
}

/// Coefficients used by the trajectory-level map checks.
pub fn map_coefficients() -> H4Coefficients {
    H4Coefficients::new(
        CoefficientSpec::constant(1.0),
        CoefficientSpec::monomial(1.0, 1),
        CoefficientSpec::sinusoid(1.0, 1.0, 0.0),
    )
}

/// Initial data and span of the conjugacy check.
pub const CONJUGACY_X0: [f64; 2] = [-0.4, 0.8];
pub const CONJUGACY_T1: f64 = 1.0;

/// Integrates the deformed one-copy system and the minimal system from
/// twisted initial data; the residual is the endpoint mismatch after
/// pushing the first endpoint through the twist.
pub fn check_twist_conjugacy(check_id: &str, z: f64, tol: f64, seed: u64) -> CheckReport {
    let c = map_coefficients();
    let cfg = IntegratorConfig::with_tol(1e-12);
    let mut meta = Metadata::seeded(seed)
        .z(z)
        .coefficients("b1 = 1, b2 = t, b3 = sin t");
    meta.detail("initial", CONJUGACY_X0);
    meta.detail("tspan", [0.0, CONJUGACY_T1]);
    let res = (|| {
        let a = integrate(&hz_field(z, &c), &CONJUGACY_X0, 0.0, CONJUGACY_T1, &cfg)?;
        let x0t = twist_vars(CONJUGACY_X0, z, Direction::Forward)?;
        let b = integrate(&minimal_field(z, &c), &x0t, 0.0, CONJUGACY_T1, &cfg)?;
        let end = a.final_state();
        let pushed = twist_vars([end[0], end[1]], z, Direction::Forward)?;
        Ok::<_, Error>((pushed, b.final_state().to_vec()))
    })();
    match res {
        Ok((pushed, other)) => {
            let mut tally = Tally::new(tol);
            tally.record(&other, max_abs_diff(&pushed, &other));
            tally.finish(check_id, meta)
        }
        Err(e) => CheckReport::failure(check_id, tol, &e, meta),
    }
}

/// Inverted criterion: the minimal system with `z != 0` must differ from
/// the undeformed system under the identity by more than `floor` somewhere
/// on the sample box. `measured = floor - max difference`.
pub fn check_twist_essentiality(
    check_id: &str,
    z: f64,
    samples: usize,
    floor: f64,
    seed: u64,
) -> CheckReport {
    let c = map_coefficients();
    let bx = TwistMapKind::OneCopyInverse.sample_box(z);
    let mut r = rng(seed);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut meta = Metadata::seeded(seed).z(z).sample_box(bx.describe());
    for _ in 0..samples {
        let p = bx.sample(&mut r);
        let t = 0.5;
        let d = minimal_rhs(t, [p[0], p[1]], z, &c)
            .map(|m| max_abs_diff(&m, &h4_rhs(t, [p[0], p[1]], &c)))
            .unwrap_or(f64::NEG_INFINITY);
        if d > best.0 {
            best = (d, p);
        }
    }
    meta.detail("floor", floor);
    meta.detail("max_difference", best.0);
    let witnesses = if best.0 <= floor {
        vec![super::report::Witness {
            input: best.1,
            residual: best.0,
        }]
    } else {
        Vec::new()
    };
    CheckReport::new(check_id, floor - best.0, 0.0, witnesses, meta)
}

/// `|plane_to_polar(polar_to_plane(q)) - q|` on the fundamental branch.
pub fn check_bernoulli_roundtrip(
    check_id: &str,
    s: f64,
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckReport {
    pointwise(
        check_id,
        &SampleBox::polar(1, s),
        samples,
        tol,
        Metadata::seeded(seed).s(s),
        |q| {
            let back = plane_to_polar(polar_to_plane([q[0], q[1]], s)?, s)?;
            Ok(max_abs_diff(&back, q))
        },
    )
}

/// Pullback of the canonical plane form against the Bernoulli weight,
/// relative to `max(1, weight)`.
pub fn check_bernoulli_weight(
    check_id: &str,
    s: f64,
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let w = bernoulli_weight(s);
    pointwise(
        check_id,
        &SampleBox::polar(1, s),
        samples,
        tol,
        Metadata::seeded(seed).s(s),
        |q| {
            let res = symplectic_jacobian_residual_between(
                |v| Ok(polar_to_plane([v[0], v[1]], s)?.to_vec()),
                &w,
                &SymplecticWeight::Canonical,
                q,
            )?;
            Ok(res / w.density(q[0], q[1])?.abs().max(1.0))
        },
    )
}

/// Polar constants against the plane constants of the mapped points,
/// relative to `max(1, |value|)`.
pub fn check_bernoulli_constants(
    check_id: &str,
    s: f64,
    z: f64,
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let meta = Metadata::seeded(seed).s(s).z(z);
    pointwise(
        check_id,
        &SampleBox::polar(3, s),
        samples,
        tol,
        meta,
        |qq| {
            let xy = polar_points_to_plane(qq, s)?;
            let (p1, p2, p3) = ([xy[0], xy[1]], [xy[2], xy[3]], [xy[4], xy[5]]);
            let pairs = [
                (BernoulliConstant::F2, oscillator::f2(p1, p2)),
                (
                    BernoulliConstant::F2Right,
                    oscillator::f2_perm(p1, p2, p3, Permuted::F13),
                ),
                (BernoulliConstant::F3, oscillator::f3(p1, p2, p3)),
                (BernoulliConstant::Fz2, deformed::fz2(&xy, z)?),
            ];
            let mut worst = 0.0_f64;
            for (which, plane) in pairs {
                let polar = bernoulli_constants(qq, s, z, which)?;
                worst = worst.max((polar - plane).abs() / plane.abs().max(1.0));
            }
            Ok(worst)
        },
    )
}

/// Bernoulli parameters of the functoriality check.
pub fn functoriality_params(z: f64) -> BernoulliParams {
    BernoulliParams {
        s: 3.0,
        a1: CoefficientSpec::constant(0.3),
        a2: CoefficientSpec::sinusoid(1.0, 1.0, 0.0),
        z,
    }
}

pub const FUNCTORIALITY_Q0: [f64; 2] = [0.9, 0.6];
pub const FUNCTORIALITY_T1: f64 = 1.0;

/// Integrate-then-map against map-then-integrate, compared in the plane.
pub fn check_bernoulli_functoriality(check_id: &str, z: f64, tol: f64, seed: u64) -> CheckReport {
    let params = functoriality_params(z);
    let s = params.s;
    let cfg = IntegratorConfig::with_tol(1e-12);
    let mut meta = Metadata::seeded(seed)
        .s(s)
        .z(z)
        .coefficients("a1 = 0.3, a2 = sin t");
    meta.detail("initial", FUNCTORIALITY_Q0);
    meta.detail("tspan", [0.0, FUNCTORIALITY_T1]);
    let res = (|| {
        params.validate()?;
        let polar = integrate(
            &bernoulli_field(&params),
            &FUNCTORIALITY_Q0,
            0.0,
            FUNCTORIALITY_T1,
            &cfg,
        )?;
        let end = polar.final_state();
        let mapped = polar_to_plane([end[0], end[1]], s)?;
        let x0 = polar_to_plane(FUNCTORIALITY_Q0, s)?;
        let plane = integrate(
            &hz_field(z, &params.plane_coefficients()),
            &x0,
            0.0,
            FUNCTORIALITY_T1,
            &cfg,
        )?;
        Ok::<_, Error>((mapped, plane.final_state().to_vec()))
    })();
    match res {
        Ok((mapped, plane)) => {
            let mut tally = Tally::new(tol);
            tally.record(&plane, max_abs_diff(&mapped, &plane));
            tally.finish(check_id, meta)
        }
        Err(e) => CheckReport::failure(check_id, tol, &e, meta),
    }
}

/// Analytic gradient against central differences for each field,
/// relative to `max(1, |grad|)`.
pub fn check_gradients(
    check_id: &str,
    fields: &[ScalarField],
    sample_box: &SampleBox,
    samples: usize,
    tol: f64,
    mut metadata: Metadata,
) -> CheckReport {
    let names: Vec<_> = fields.iter().map(|f| f.name().to_string()).collect();
    metadata.detail("fields", names);
    pointwise(check_id, sample_box, samples, tol, metadata, |p| {
        let mut worst = 0.0_f64;
        for f in fields {
            worst = worst.max(f.gradient_error(p)?);
        }
        Ok(worst)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::h4_hamiltonian_fields;

    #[test]
    fn twist_maps_are_canonical_and_invert() {
        for z in [0.0, 0.3, 1.0] {
            for kind in TwistMapKind::ALL {
                let r = check_twist_symplectic("t", kind, z, 50, 1e-7, 4);
                assert!(r.passed, "{} z = {z}: {}", kind.name(), r.measured);
            }
            let r = check_twist_roundtrip("t", z, 50, 1e-12, 5);
            assert!(r.passed, "z = {z}: {}", r.measured);
            let r = check_twisted_hamiltonians("t", z, 50, 1e-10, 6);
            assert!(r.passed, "z = {z}: {}", r.measured);
        }
    }

    #[test]
    fn non_canonical_map_is_detected() {
        let bx = SampleBox::plane(1, 1.0);
        let r = pointwise("t", &bx, 10, 1e-7, Metadata::seeded(1), |p| {
            symplectic_jacobian_residual(
                |v| Ok(vec![2.0 * v[0], v[1]]),
                &SymplecticWeight::Canonical,
                p,
            )
        });
        assert!(!r.passed && (r.measured - 1.0).abs() < 1e-6);
    }

    #[test]
    fn conjugacy_and_essentiality() {
        for z in [0.3, 1.0] {
            let r = check_twist_conjugacy("c", z, 1e-8, 0);
            assert!(
                r.passed,
                "z = {z}: {} {:?}",
                r.measured,
                r.metadata.details.get("error")
            );
            let r = check_twist_essentiality("e", z, 50, 1e-3, 0);
            assert!(r.passed, "z = {z}: {}", r.measured);
        }
        let r = check_twist_essentiality("e", 0.0, 50, 1e-3, 0);
        assert!(!r.passed && !r.witnesses.is_empty());
    }

    #[test]
    fn bernoulli_maps() {
        for s in [3.0, 2.0, 0.5, -1.5] {
            assert!(
                check_bernoulli_roundtrip("r", s, 100, 1e-10, 1).passed,
                "s = {s}"
            );
            let r = check_bernoulli_weight("w", s, 50, 1e-7, 2);
            assert!(r.passed, "s = {s}: {}", r.measured);
            for z in [0.0, 0.5] {
                let r = check_bernoulli_constants("c", s, z, 100, 1e-10, 3);
                assert!(r.passed, "s = {s} z = {z}: {}", r.measured);
            }
        }
        for z in [0.0, 0.5] {
            let r = check_bernoulli_functoriality("f", z, 1e-8, 0);
            assert!(
                r.passed,
                "z = {z}: {} {:?}",
                r.measured,
                r.metadata.details.get("error")
            );
        }
    }

    #[test]
    fn gradient_check_catches_wrong_gradient() {
        let bx = SampleBox::plane(1, 2.0);
        let ok = check_gradients(
            "g",
            &h4_hamiltonian_fields(),
            &bx,
            100,
            1e-6,
            Metadata::seeded(1),
        );
        assert!(ok.passed, "{}", ok.measured);
        let bad = ScalarField::new(
            "bad",
            1,
            |p| Ok(p[0] * p[1]),
            |p| Ok(vec![p[1], 2.0 * p[0]]),
        );
        let r = check_gradients("g", &[bad], &bx, 20, 1e-6, Metadata::seeded(1));
        assert!(!r.passed && !r.witnesses.is_empty());
    }
}
