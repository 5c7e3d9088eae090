//! The default suite: every check id, selection by glob, and the parallel
//! runner.

use std::sync::Arc;

use globset::Glob;
use rayon::prelude::*;

use super::brackets::{self, BracketTable, InvolutionSet};
use super::conservation::{check_conservation, check_drift, check_nonconservation, FlowConfig};
use super::independence::check_independence;
use super::limits::{
    check_limit, check_limit_with, limit_pair, LimitFamily, DEFAULT_Z_GRID, LIMIT_SLACK,
};
use super::maps::{self, TwistMapKind};
use super::report::{CheckReport, Metadata, SuiteReport, Witness};
use super::sampling::{check_seed, SampleBox};
use super::superposition::{
    check_bernoulli_implicit, check_legacy_agreement, check_printed_agreement, check_superposition,
    corrupted_reconstruction_error,
};
use crate::bernoulli::bernoulli_hamiltonian_fields;
use crate::deformed;
use crate::error::{Error, Result};
use crate::ode::CoefficientSpec;
use crate::oscillator::{h4_constant_fields, h4_diagonal_fields, h4_hamiltonian_fields};
use crate::symplectic::{symplectic_jacobian_residual, ScalarField, SymplecticWeight};
use crate::systems::{
    deformed_constants, permutation_candidates, NamedConstant, SystemKind, SystemSpec,
};
use crate::twist::twisted_h2_fields;

/// Points per pointwise check.
pub const SAMPLES: usize = 100;
/// Points per independence check.
pub const INDEPENDENCE_SAMPLES: usize = 200;
/// Fraction of generic points that must have full rank.
pub const INDEPENDENCE_FRACTION: f64 = 0.95;
/// Points per limit cloud.
pub const LIMIT_POINTS: usize = 24;

pub const BRACKET_TOL: f64 = 1e-9;
pub const INVOLUTION_TOL: f64 = 1e-9;
pub const COMMUTATOR_TOL: f64 = 1e-6;
pub const DRIFT_TOL: f64 = 1e-6;
pub const DRIFT_FLOOR: f64 = 1e-3;
pub const RECONSTRUCTION_TOL: f64 = 1e-6;
pub const LEGACY_TOL: f64 = 1e-10;
pub const PRINTED_TOL: f64 = 1e-8;
pub const IMPLICIT_TOL: f64 = 1e-10;
pub const SYMPLECTIC_TOL: f64 = 1e-7;
pub const ROUNDTRIP_TOL: f64 = 1e-12;
pub const TWISTED_TOL: f64 = 1e-10;
pub const CONJUGACY_TOL: f64 = 1e-8;
pub const POLAR_ROUNDTRIP_TOL: f64 = 1e-10;
pub const CONSTANTS_TOL: f64 = 1e-10;
pub const FUNCTORIALITY_TOL: f64 = 1e-8;
pub const GRADIENT_TOL: f64 = 1e-6;

/// Deformation parameter of the pointwise deformed tables.
pub const TABLE_Z: f64 = 1.0;
/// Bernoulli exponent of the pointwise checks.
pub const TABLE_S: f64 = 3.0;
/// Deformation parameters of the conservation checks.
pub const CONSERVATION_Z: [f64; 3] = [0.1, 0.5, 1.0];
/// Deformation parameter of the negative and superposition checks.
pub const NEGATIVE_Z: f64 = 0.5;
pub const SUPERPOSITION_Z: f64 = 0.3;

/// Three-copy plane initial data shared by the flow checks.
pub const PLANE_X0: [f64; 6] = [-2.0, 0.5, -1.5, -0.7, -2.5, 1.2];
/// Three-copy polar initial data for `s = 3`.
pub const POLAR_X0: [f64; 6] = [0.9, 0.3, 1.2, 0.15, 0.5, 0.55];

type Runner = Arc<dyn Fn(&str, u64) -> CheckReport + Send + Sync>;

/// One named check of the suite.
#[derive(Clone)]
pub struct CheckSpec {
    pub id: String,
    run: Runner,
}

impl std::fmt::Debug for CheckSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CheckSpec").field("id", &self.id).finish()
    }
}

impl CheckSpec {
    pub fn new<F>(id: impl Into<String>, run: F) -> Self
    where
        F: Fn(&str, u64) -> CheckReport + Send + Sync + 'static,
    {
        Self {
            id: id.into(),
            run: Arc::new(run),
        }
    }

    /// Runs the check with its seed derived from `suite_seed`.
    pub fn run(&self, suite_seed: u64) -> CheckReport {
        (self.run)(&self.id, check_seed(suite_seed, &self.id))
    }
}

/// `(b1, b2, b3) = (1, t, sin t)`.
pub fn plane_spec(kind: SystemKind, z: f64) -> SystemSpec {
    SystemSpec::new(kind, z, None)
        .with("b1", CoefficientSpec::constant(1.0))
        .with("b2", CoefficientSpec::monomial(1.0, 1))
        .with("b3", CoefficientSpec::sinusoid(1.0, 1.0, 0.0))
}

/// `s = 3`, `(a1, a2) = (0.3, sin t)`; `a1 = -0.3` when `z != 0`.
pub fn bernoulli_spec(z: f64) -> SystemSpec {
    let (kind, a1) = if z == 0.0 {
        (SystemKind::Bernoulli, 0.3)
    } else {
        (SystemKind::BernoulliDeformed, -0.3)
    };
    SystemSpec::new(kind, z, Some(TABLE_S))
        .with("a1", CoefficientSpec::constant(a1))
        .with("a2", CoefficientSpec::sinusoid(1.0, 1.0, 0.0))
}

fn tag(z: f64) -> String {
    format!("z{z}")
}

/// Passes iff `inner` fails with witnesses.
pub fn expect_failure(check_id: &str, inner: CheckReport) -> CheckReport {
    let detected = !inner.passed && !inner.witnesses.is_empty();
    let mut meta = inner.metadata.clone();
    meta.detail("inner_measured", inner.measured);
    meta.detail("inner_tolerance", inner.tolerance);
    meta.detail("inner_witnesses", inner.witnesses.len());
    let witnesses = if detected {
        Vec::new()
    } else {
        vec![Witness {
            input: Vec::new(),
            residual: inner.measured,
        }]
    };
    CheckReport::new(
        check_id,
        if detected { 0.0 } else { 1.0 },
        0.0,
        witnesses,
        meta,
    )
}

fn gradient_families() -> Vec<(&'static str, Vec<ScalarField>, SampleBox)> {
    let z = 0.7;
    let mut two = deformed::two_copy_hamiltonian_fields(z, 3, 0, 1).to_vec();
    two.extend(deformed::two_copy_hamiltonian_fields(z, 3, 1, 2));
    let mut dc = deformed::deformed_constant_fields(z).to_vec();
    dc.extend(deformed::perm_candidate_fields(z));
    let mut bern = bernoulli_hamiltonian_fields(TABLE_S, 0.0).to_vec();
    bern.extend(bernoulli_hamiltonian_fields(TABLE_S, z));
    vec![
        (
            "h4",
            h4_hamiltonian_fields().to_vec(),
            SampleBox::plane(1, 2.0),
        ),
        (
            "h4-diagonal",
            h4_diagonal_fields(3).to_vec(),
            SampleBox::plane(3, 2.0),
        ),
        (
            "h4-deformed",
            deformed::hz_hamiltonian_fields(z).to_vec(),
            SampleBox::plane(1, 2.0),
        ),
        (
            "prolonged",
            deformed::prolonged_hamiltonian_fields(z).to_vec(),
            SampleBox::plane(3, 2.0),
        ),
        (
            "two-copy",
            deformed::two_copy_hamiltonian_fields(z, 2, 0, 1).to_vec(),
            SampleBox::plane(2, 2.0),
        ),
        ("left-right", two, SampleBox::plane(3, 2.0)),
        (
            "constants",
            h4_constant_fields().to_vec(),
            SampleBox::plane(3, 2.0),
        ),
        ("deformed-constants", dc, SampleBox::plane(3, 2.0)),
        (
            "twisted",
            twisted_h2_fields(z).to_vec(),
            TwistMapKind::TwoCopy.sample_box(z),
        ),
        ("bernoulli", bern, SampleBox::polar(1, TABLE_S)),
    ]
}

fn selftests() -> Vec<CheckSpec> {
    vec![
        CheckSpec::new("selftest.bracket", |id, seed| {
            let setup = brackets::bracket_setup(BracketTable::H4, 0.0, TABLE_S).corrupted();
            let inner = brackets::check_bracket_relations(
                id,
                &setup,
                SAMPLES,
                BRACKET_TOL,
                Metadata::seeded(seed),
            );
            expect_failure(id, inner)
        }),
        CheckSpec::new("selftest.involution", |id, seed| {
            let [f2, _, f23, _] = h4_constant_fields();
            let set = InvolutionSet {
                fields: vec![f2, f23],
                pairs: vec![(0, 1)],
                sample_box: SampleBox::plane(3, 2.0),
            };
            let inner = brackets::check_involution(
                id,
                &set,
                SAMPLES,
                INVOLUTION_TOL,
                Metadata::seeded(seed),
            );
            expect_failure(id, inner)
        }),
        CheckSpec::new("selftest.independence", |id, seed| {
            let [f2, ..] = h4_constant_fields();
            let inner = check_independence(
                id,
                &[f2.clone(), f2],
                &SampleBox::plane(3, 2.0),
                INDEPENDENCE_SAMPLES,
                INDEPENDENCE_FRACTION,
                Metadata::seeded(seed),
            );
            expect_failure(id, inner)
        }),
        CheckSpec::new("selftest.conservation", |id, seed| {
            let spec = plane_spec(SystemKind::H4Prolonged, 0.0);
            let flow = FlowConfig::new(PLANE_X0.to_vec(), 0.0, 5.0);
            let x1 = NamedConstant::new("x1", |p| Ok(p[0]));
            let inner = check_drift(id, &spec, &x1, &flow, DRIFT_TOL, Metadata::seeded(seed));
            expect_failure(id, inner)
        }),
        CheckSpec::new("selftest.nonconservation", |id, seed| {
            let spec = plane_spec(SystemKind::H4DeformedProlonged, NEGATIVE_Z);
            let flow = FlowConfig::new(PLANE_X0.to_vec(), 0.0, 3.0);
            let inner = check_nonconservation(
                id,
                &spec,
                &deformed_constants(NEGATIVE_Z),
                &flow,
                DRIFT_FLOOR,
                seed,
            );
            expect_failure(id, inner)
        }),
        CheckSpec::new("selftest.superposition", |id, seed| {
            let spec = plane_spec(SystemKind::H4, 0.0);
            let flow = FlowConfig::new(PLANE_X0.to_vec(), 0.0, 3.0);
            let mut meta = Metadata::seeded(seed);
            meta.detail("k_offset", 0.1);
            let inner = match corrupted_reconstruction_error(&spec, &flow, 0.1) {
                Ok(e) => CheckReport::new(id, e, RECONSTRUCTION_TOL, Vec::new(), meta),
                Err(e) => CheckReport::failure(id, RECONSTRUCTION_TOL, &e, meta),
            };
            expect_failure(id, inner)
        }),
        CheckSpec::new("selftest.limit", |id, seed| {
            let family = LimitFamily::HzHamiltonians;
            let inner = check_limit_with(
                id,
                family,
                |p, z| {
                    let (a, mut b) = limit_pair(family, p, z)?;
                    b[0] += 1e-3;
                    Ok((a, b))
                },
                &DEFAULT_Z_GRID,
                LIMIT_POINTS,
                LIMIT_SLACK,
                seed,
            );
            expect_failure(id, inner)
        }),
        CheckSpec::new("selftest.gradient", |id, seed| {
            let bad = ScalarField::new(
                "xy with a wrong gradient",
                1,
                |p| Ok(p[0] * p[1]),
                |p| Ok(vec![p[1], 2.0 * p[0]]),
            );
            let inner = maps::check_gradients(
                id,
                &[bad],
                &SampleBox::plane(1, 2.0),
                SAMPLES,
                GRADIENT_TOL,
                Metadata::seeded(seed),
            );
            expect_failure(id, inner)
        }),
        CheckSpec::new("selftest.symplectic", |id, seed| {
            let inner = maps::pointwise(
                id,
                &SampleBox::plane(1, 2.0),
                SAMPLES,
                SYMPLECTIC_TOL,
                Metadata::seeded(seed),
                |p| {
                    symplectic_jacobian_residual(
                        |v| Ok(vec![2.0 * v[0], v[1]]),
                        &SymplecticWeight::Canonical,
                        p,
                    )
                },
            );
            expect_failure(id, inner)
        }),
    ]
}

/// Every check of the default suite, in report order.
pub fn registry() -> Vec<CheckSpec> {
    let mut v = Vec::new();

    for table in BracketTable::ALL {
        v.push(CheckSpec::new(
            format!("bracket.{}", table.name()),
            move |_, seed| {
                brackets::check_bracket_table(table, TABLE_Z, TABLE_S, SAMPLES, BRACKET_TOL, seed)
            },
        ));
    }
    v.push(CheckSpec::new("bracket.twisted-h2", |id, seed| {
        let meta = Metadata::seeded(seed).z(TABLE_Z);
        brackets::check_bracket_relations(
            id,
            &brackets::twisted_h2_setup(TABLE_Z),
            SAMPLES,
            BRACKET_TOL,
            meta,
        )
    }));

    v.push(CheckSpec::new("involution.h4", |id, seed| {
        brackets::check_involution(
            id,
            &brackets::h4_involution_set(),
            SAMPLES,
            INVOLUTION_TOL,
            Metadata::seeded(seed),
        )
    }));
    for z in [TABLE_Z, NEGATIVE_Z] {
        v.push(CheckSpec::new(
            format!("involution.deformed.{}", tag(z)),
            move |id, seed| {
                let meta = Metadata::seeded(seed).z(z);
                brackets::check_involution(
                    id,
                    &brackets::deformed_involution_set(z),
                    SAMPLES,
                    INVOLUTION_TOL,
                    meta,
                )
            },
        ));
    }
    v.push(CheckSpec::new("involution.left-right", |id, seed| {
        let value = brackets::left_right_bracket(NEGATIVE_Z, SAMPLES, seed);
        let mut meta = Metadata::seeded(seed).z(NEGATIVE_Z);
        meta.detail("asserted", false);
        CheckReport::new(id, value, f64::INFINITY, Vec::new(), meta)
    }));

    v.push(CheckSpec::new("commutator.h4", |id, seed| {
        brackets::check_commutators(
            id,
            &brackets::h4_commutators(),
            SAMPLES,
            COMMUTATOR_TOL,
            Metadata::seeded(seed),
        )
    }));
    v.push(CheckSpec::new(
        "commutator.prolonged-deformed",
        |id, seed| {
            let set = brackets::prolonged_deformed_commutators(TABLE_Z);
            brackets::check_commutators(
                id,
                &set,
                SAMPLES,
                COMMUTATOR_TOL,
                Metadata::seeded(seed).z(TABLE_Z),
            )
        },
    ));
    v.push(CheckSpec::new("commutator.b2-deformed", |id, seed| {
        let set = brackets::b2_deformed_commutators(TABLE_Z);
        brackets::check_commutators(
            id,
            &set,
            SAMPLES,
            COMMUTATOR_TOL,
            Metadata::seeded(seed).z(TABLE_Z),
        )
    }));
    v.push(CheckSpec::new(
        "commutator.bernoulli-deformed",
        |id, seed| {
            let set = brackets::bernoulli_deformed_commutators(TABLE_S, TABLE_Z);
            let meta = Metadata::seeded(seed).z(TABLE_Z).s(TABLE_S);
            brackets::check_commutators(id, &set, SAMPLES, COMMUTATOR_TOL, meta)
        },
    ));

    for c in ["F2", "F13", "F23", "F3"] {
        v.push(CheckSpec::new(
            format!("conservation.h4-prolonged.{c}"),
            move |id, seed| {
                let flow = FlowConfig::new(PLANE_X0.to_vec(), 0.0, 5.0);
                check_conservation(
                    id,
                    &plane_spec(SystemKind::H4Prolonged, 0.0),
                    c,
                    &flow,
                    DRIFT_TOL,
                    seed,
                )
            },
        ));
    }
    for z in CONSERVATION_Z {
        for c in ["Fz2", "Fz2_right", "Fz3"] {
            v.push(CheckSpec::new(
                format!("conservation.h4-deformed-prolonged.{}.{c}", tag(z)),
                move |id, seed| {
                    let flow = FlowConfig::new(PLANE_X0.to_vec(), 0.0, 5.0);
                    check_conservation(
                        id,
                        &plane_spec(SystemKind::H4DeformedProlonged, z),
                        c,
                        &flow,
                        DRIFT_TOL,
                        seed,
                    )
                },
            ));
        }
    }
    for c in ["F2", "F2_right", "F3"] {
        v.push(CheckSpec::new(
            format!("conservation.bernoulli.{c}"),
            move |id, seed| {
                let flow = FlowConfig::new(POLAR_X0.to_vec(), 0.0, 2.0);
                check_conservation(id, &bernoulli_spec(0.0), c, &flow, DRIFT_TOL, seed)
            },
        ));
    }
    for c in ["Fz2", "Fz2_right", "Fz3"] {
        v.push(CheckSpec::new(
            format!("conservation.bernoulli-deformed.{}.{c}", tag(NEGATIVE_Z)),
            move |id, seed| {
                let flow = FlowConfig::new(POLAR_X0.to_vec(), 0.0, 2.0);
                check_conservation(id, &bernoulli_spec(NEGATIVE_Z), c, &flow, DRIFT_TOL, seed)
            },
        ));
    }

    v.push(CheckSpec::new(
        format!("nonconservation.h4-deformed-prolonged.{}", tag(NEGATIVE_Z)),
        |id, seed| {
            let spec = plane_spec(SystemKind::H4DeformedProlonged, NEGATIVE_Z);
            let flow = FlowConfig::new(PLANE_X0.to_vec(), 0.0, 3.0);
            check_nonconservation(
                id,
                &spec,
                &permutation_candidates(NEGATIVE_Z),
                &flow,
                DRIFT_FLOOR,
                seed,
            )
        },
    ));

    v.push(CheckSpec::new("superposition.h4", |id, seed| {
        let flow = FlowConfig::new(PLANE_X0.to_vec(), 0.0, 3.0);
        check_superposition(
            id,
            &plane_spec(SystemKind::H4Prolonged, 0.0),
            &flow,
            RECONSTRUCTION_TOL,
            seed,
        )
    }));
    v.push(CheckSpec::new(
        format!("superposition.h4-deformed.{}", tag(SUPERPOSITION_Z)),
        |id, seed| {
            let flow = FlowConfig::new(PLANE_X0.to_vec(), 0.0, 3.0);
            let spec = plane_spec(SystemKind::H4DeformedProlonged, SUPERPOSITION_Z);
            check_superposition(id, &spec, &flow, RECONSTRUCTION_TOL, seed)
        },
    ));
    v.push(CheckSpec::new("superposition.bernoulli", |id, seed| {
        let flow = FlowConfig::new(POLAR_X0.to_vec(), 0.0, 2.0);
        check_superposition(id, &bernoulli_spec(0.0), &flow, RECONSTRUCTION_TOL, seed)
    }));
    v.push(CheckSpec::new(
        format!("superposition.bernoulli-deformed.{}", tag(SUPERPOSITION_Z)),
        |id, seed| {
            let flow = FlowConfig::new(POLAR_X0.to_vec(), 0.0, 2.0);
            check_superposition(
                id,
                &bernoulli_spec(SUPERPOSITION_Z),
                &flow,
                RECONSTRUCTION_TOL,
                seed,
            )
        },
    ));
    v.push(CheckSpec::new(
        "superposition.legacy-agreement",
        |id, seed| check_legacy_agreement(id, SAMPLES, LEGACY_TOL, seed),
    ));
    v.push(CheckSpec::new(
        format!("superposition.printed-agreement.{}", tag(SUPERPOSITION_Z)),
        |id, seed| check_printed_agreement(id, SUPERPOSITION_Z, SAMPLES, PRINTED_TOL, seed),
    ));
    v.push(CheckSpec::new(
        "superposition.bernoulli-implicit",
        |id, seed| check_bernoulli_implicit(id, 2.0, SAMPLES, IMPLICIT_TOL, seed),
    ));

    for family in LimitFamily::ALL {
        v.push(CheckSpec::new(
            format!("limit.{}", family.name()),
            move |id, seed| {
                check_limit(id, family, &DEFAULT_Z_GRID, LIMIT_POINTS, LIMIT_SLACK, seed)
            },
        ));
    }

    v.push(CheckSpec::new("independence.h4", |id, seed| {
        let [f2, f13, _, f3] = h4_constant_fields();
        check_independence(
            id,
            &[f2, f13, f3],
            &SampleBox::plane(3, 2.0),
            INDEPENDENCE_SAMPLES,
            INDEPENDENCE_FRACTION,
            Metadata::seeded(seed),
        )
    }));
    for z in [0.0, NEGATIVE_Z] {
        v.push(CheckSpec::new(
            format!("independence.deformed.{}", tag(z)),
            move |id, seed| {
                check_independence(
                    id,
                    &deformed::deformed_constant_fields(z),
                    &SampleBox::plane(3, 2.0),
                    INDEPENDENCE_SAMPLES,
                    INDEPENDENCE_FRACTION,
                    Metadata::seeded(seed).z(z),
                )
            },
        ));
    }

    for kind in TwistMapKind::ALL {
        v.push(CheckSpec::new(
            format!("twist.symplectic.{}", kind.name()),
            move |id, seed| {
                maps::check_twist_symplectic(id, kind, TABLE_Z, SAMPLES, SYMPLECTIC_TOL, seed)
            },
        ));
    }
    v.push(CheckSpec::new("twist.roundtrip", |id, seed| {
        maps::check_twist_roundtrip(id, TABLE_Z, SAMPLES, ROUNDTRIP_TOL, seed)
    }));
    v.push(CheckSpec::new("twist.hamiltonians", |id, seed| {
        maps::check_twisted_hamiltonians(id, TABLE_Z, SAMPLES, TWISTED_TOL, seed)
    }));
    for z in [SUPERPOSITION_Z, TABLE_Z] {
        v.push(CheckSpec::new(
            format!("twist.conjugacy.{}", tag(z)),
            move |id, seed| maps::check_twist_conjugacy(id, z, CONJUGACY_TOL, seed),
        ));
    }
    v.push(CheckSpec::new("twist.essentiality", |id, seed| {
        maps::check_twist_essentiality(id, TABLE_Z, SAMPLES, DRIFT_FLOOR, seed)
    }));

    for s in [TABLE_S, 0.5] {
        v.push(CheckSpec::new(
            format!("bernoulli.roundtrip.s{s}"),
            move |id, seed| {
                maps::check_bernoulli_roundtrip(id, s, SAMPLES, POLAR_ROUNDTRIP_TOL, seed)
            },
        ));
        v.push(CheckSpec::new(
            format!("bernoulli.weight.s{s}"),
            move |id, seed| maps::check_bernoulli_weight(id, s, SAMPLES, SYMPLECTIC_TOL, seed),
        ));
    }
    for z in [0.0, NEGATIVE_Z] {
        v.push(CheckSpec::new(
            format!("bernoulli.constants.{}", tag(z)),
            move |id, seed| {
                maps::check_bernoulli_constants(id, TABLE_S, z, SAMPLES, CONSTANTS_TOL, seed)
            },
        ));
        v.push(CheckSpec::new(
            format!("bernoulli.functoriality.{}", tag(z)),
            move |id, seed| maps::check_bernoulli_functoriality(id, z, FUNCTORIALITY_TOL, seed),
        ));
    }

    for (name, fields, bx) in gradient_families() {
        let fields = Arc::new(fields);
        v.push(CheckSpec::new(
            format!("gradients.{name}"),
            move |id, seed| {
                maps::check_gradients(
                    id,
                    &fields,
                    &bx,
                    SAMPLES,
                    GRADIENT_TOL,
                    Metadata::seeded(seed),
                )
            },
        ));
    }

    v.extend(selftests());
    v
}

/// Checks matching a comma-separated list of glob patterns; `all` selects
/// everything. A pattern that matches nothing is an error.
pub fn select(selector: &str) -> Result<Vec<CheckSpec>> {
    let all = registry();
    let mut keep = vec![false; all.len()];
    let patterns: Vec<&str> = selector
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .collect();
    if patterns.is_empty() {
        return Err(Error::InvalidInput("empty suite selector".into()));
    }
    for pat in patterns {
        if pat == "all" {
            keep.iter_mut().for_each(|k| *k = true);
            continue;
        }
        let m = Glob::new(pat)
            .map_err(|e| Error::InvalidInput(format!("bad selector {pat:?}: {e}")))?
            .compile_matcher();
        let mut hit = false;
        for (k, c) in keep.iter_mut().zip(&all) {
            if m.is_match(&c.id) {
                *k = true;
                hit = true;
            }
        }
        if !hit {
            return Err(Error::InvalidInput(format!(
                "selector {pat:?} matches no check"
            )));
        }
    }
    Ok(all
        .into_iter()
        .zip(keep)
        .filter_map(|(c, k)| k.then_some(c))
        .collect())
}

/// Runs `checks` in parallel, keeping their order in the report.
pub fn run_checks(checks: &[CheckSpec], suite_seed: u64) -> SuiteReport {
    let reports: Vec<CheckReport> = checks.par_iter().map(|c| c.run(suite_seed)).collect();
    let failed = reports.iter().filter(|r| !r.passed).count();
    SuiteReport {
        seed: suite_seed,
        total: reports.len(),
        failed,
        checks: reports,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn ids_are_unique_and_selectable() {
        let all = registry();
        let ids: BTreeSet<_> = all.iter().map(|c| c.id.clone()).collect();
        assert_eq!(ids.len(), all.len());
        let b = select("bracket.*").unwrap();
        assert_eq!(b.len(), 8);
        assert!(b.iter().all(|c| c.id.starts_with("bracket.")));
        assert_eq!(select("all").unwrap().len(), all.len());
        assert_eq!(select("bracket.h4,twist.roundtrip").unwrap().len(), 2);
        assert!(select("nonsense.*").is_err());
        assert!(select("").is_err());
    }

    #[test]
    fn selftests_pass() {
        let r = run_checks(&select("selftest.*").unwrap(), 7);
        for c in &r.checks {
            assert!(c.passed, "{}: {:?}", c.check_id, c.metadata.details);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let checks = select("bracket.h4-deformed,independence.h4").unwrap();
        let a = run_checks(&checks, 3);
        let b = run_checks(&checks, 3);
        assert_eq!(a.checks, b.checks);
        assert_eq!(a.checks[0].check_id, "bracket.h4-deformed");
    }
}
