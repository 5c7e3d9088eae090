//! Time-dependent coefficients and adaptive integration of non-autonomous
//! systems.

pub mod coefficient;
pub mod dopri;
pub mod trajectory;

pub use coefficient::{eval_coefficient, CoefficientSpec, Term};
pub use dopri::{integrate, IntegratorConfig};
pub use trajectory::{uniform_grid, DenseSegment, Trajectory};

use crate::error::{Error, Result};
use crate::symplectic::VectorField;

/// Integrates on `[t0, t1]` in either direction. For `t1 < t0` the returned
/// trajectory is parametrised by the reversed time `s = t0 - t`.
pub fn integrate_signed(
    field: &VectorField,
    x0: &[f64],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>> {
    if t1 > t0 {
        Ok(integrate(field, x0, t0, t1, cfg)?.final_state().to_vec())
    } else if t1 < t0 {
        // y(s) = x(t0 - s), dy/ds = -X(t0 - s, y)
        let rev = field.time_reversed(t0);
        Ok(integrate(&rev, x0, 0.0, t0 - t1, cfg)?
            .final_state()
            .to_vec())
    } else {
        Err(Error::InvalidInput("empty integration span".into()))
    }
}
