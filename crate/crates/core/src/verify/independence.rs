use nalgebra::DMatrix;

use super::report::{CheckReport, Metadata, Tally};
use super::sampling::{rng, SampleBox};
use crate::error::{Error, Result};
use crate::symplectic::ScalarField;

/// Singular-value threshold on row-normalised gradient stacks.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// Numerical rank of the gradients of `fields` at `p`.
pub fn gradient_rank(fields: &[ScalarField], p: &[f64]) -> Result<usize> {
    let n = p.len();
    let mut m = DMatrix::<f64>::zeros(fields.len(), n);
    for (i, f) in fields.iter().enumerate() {
        let g = f.grad(p)?;
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::NonFinite {
                what: format!("gradient of {}", f.name()),
                point: p.to_vec(),
            });
        }
        if norm > 0.0 {
            for (j, v) in g.iter().enumerate() {
                m[(i, j)] = v / norm;
            }
        }
    }
    let sv = m.singular_values();
    Ok(sv.iter().filter(|s| **s > RANK_THRESHOLD).count())
}

/// Fraction of sample points where the gradient stack is rank deficient;
/// passes when it is at most `1 - required_fraction`.
pub fn check_independence(
    check_id: &str,
    fields: &[ScalarField],
    sample_box: &SampleBox,
    samples: usize,
    required_fraction: f64,
    mut metadata: Metadata,
) -> CheckReport {
    let tol = 1.0 - required_fraction;
    metadata.sample_box = Some(sample_box.describe());
    let names: Vec<_> = fields.iter().map(|f| f.name().to_string()).collect();
    metadata.detail("constants", names);
    metadata.detail("threshold", RANK_THRESHOLD);
    if fields.is_empty() || fields.iter().any(|f| 2 * f.arity() != sample_box.dim()) {
        let e = Error::InvalidInput("constants must share the arity of the sample box".into());
        return CheckReport::failure(check_id, tol, &e, metadata);
    }
    let mut r = rng(metadata.seed);
    let mut deficient = Vec::new();
    let mut min_rank = usize::MAX;
    for _ in 0..samples {
        let p = sample_box.sample(&mut r);
        let rank = gradient_rank(fields, &p).unwrap_or(0);
        min_rank = min_rank.min(rank);
        if rank < fields.len() {
            deficient.push((p, rank));
        }
    }
    let fraction = deficient.len() as f64 / samples.max(1) as f64;
    metadata.detail("min_rank", min_rank);
    metadata.detail("samples", samples);
    let mut tally = Tally::new(tol);
    if fraction > tol {
        for (p, rank) in deficient.iter().take(16) {
            tally.record(p, *rank as f64);
        }
    }
    let witnesses = tally.finish(check_id, Metadata::default()).witnesses;
    CheckReport::new(check_id, fraction, tol, witnesses, metadata)
}
