//! Coordinate maps induced by the twist of the deformed algebra, and the
//! minimal deformed system they produce.

use serde::{Deserialize, Serialize};

use crate::deformed::{log1p_ratio, phi};
use crate::error::{Error, Result};
use crate::oscillator::H4Coefficients;
use crate::symplectic::{ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

/// `1 - z u`, required positive.
fn positive_gap(z: f64, u: f64, p: &[f64]) -> Result<f64> {
    let d = 1.0 - z * u;
    if !(d > 0.0) {
        return Err(Error::domain(p, format!("1 - z*x~ = {d} is not positive")));
    }
    Ok(d)
}

/// `1 - z u`, required nonzero.
fn nonzero_gap(z: f64, u: f64, p: &[f64]) -> Result<f64> {
    let d = 1.0 - z * u;
    if d.abs() <= f64::EPSILON {
        return Err(Error::domain(p, "1 - z*x2 vanishes"));
    }
    Ok(d)
}

/// Forward: `x~ = (1 - e^{-zx})/z`, `y~ = e^{zx} y`.
/// Inverse: `x = -ln(1 - z x~)/z`, `y = (1 - z x~) y~`.
pub fn twist_vars(p: [f64; 2], z: f64, direction: Direction) -> Result<[f64; 2]> {
    let [a, b] = p;
    match direction {
        Direction::Forward => {
            let e = (z * a).exp();
            if !e.is_finite() || e == 0.0 {
                return Err(Error::domain(&p, "e^(zx) out of range"));
            }
            Ok([a * phi(-z * a), e * b])
        }
        Direction::Inverse => {
            let d = positive_gap(z, a, &p)?;
            Ok([a * log1p_ratio(-z * a), d * b])
        }
    }
}

/// `dx~/dt = b1 + b3 x~`, `dy~/dt = b2/(1 - z x~) - b3 y~`.
pub fn minimal_rhs(t: f64, p: [f64; 2], z: f64, c: &H4Coefficients) -> Result<[f64; 2]> {
    let [b1, b2, b3] = c.eval(t);
    let d = positive_gap(z, p[0], &p)?;
    Ok([b1 + b3 * p[0], b2 / d - b3 * p[1]])
}

pub fn minimal_field(z: f64, c: &H4Coefficients) -> VectorField {
    let c = c.clone();
    VectorField::new(1, move |t, p, out| {
        out.copy_from_slice(&minimal_rhs(t, [p[0], p[1]], z, &c)?);
        Ok(())
    })
}

fn two(p: &[f64]) -> Result<[f64; 4]> {
    p.try_into()
        .map_err(|_| Error::InvalidInput(format!("expected 4 coordinates, got {}", p.len())))
}

/// `(x1', y1', x2', y2') -> (x1, y1, x2, y2)` with
/// `x1 = x1'/(1 - z x2')`, `y1 = y1'(1 - z x2')`, `x2 = x2'`,
/// `y2 = (y2'(1 - z x2') - z x1' y1')/(1 - z x2')`.
pub fn twisted_two_copy_map(pp: &[f64], z: f64) -> Result<[f64; 4]> {
    let [a1, b1, a2, b2] = two(pp)?;
    let d = nonzero_gap(z, a2, pp)?;
    Ok([a1 / d, b1 * d, a2, (b2 * d - z * a1 * b1) / d])
}

/// Inverse of [`twisted_two_copy_map`].
pub fn twisted_two_copy_map_inverse(pp: &[f64], z: f64) -> Result<[f64; 4]> {
    let [x1, y1, x2, y2] = two(pp)?;
    let d = nonzero_gap(z, x2, pp)?;
    Ok([x1 * d, y1 / d, x2, y2 + z * x1 * y1 / d])
}

/// `(h~1, h~2, h~3, h~0)` on two copies.
pub fn twisted_h2_functions(pp: &[f64], z: f64) -> Result<[f64; 4]> {
    let [x1, y1, x2, y2] = two(pp)?;
    let d = nonzero_gap(z, x2, pp)?;
    Ok([
        y1 * (1.0 + z * x1) / d + y2,
        -x1 - x2 + z * x1 * x2,
        x1 * y1 / d + x2 * y2,
        2.0,
    ])
}

pub fn twisted_h2_fields(z: f64) -> [ScalarField; 4] {
    let h1 = ScalarField::new(
        "h~1^(2)",
        2,
        move |p| Ok(twisted_h2_functions(p, z)?[0]),
        move |p| {
            let [x1, y1, x2, _] = two(p)?;
            let d = nonzero_gap(z, x2, p)?;
            Ok(vec![
                z * y1 / d,
                (1.0 + z * x1) / d,
                z * y1 * (1.0 + z * x1) / (d * d),
                1.0,
            ])
        },
    );
    let h2 = ScalarField::new(
        "h~2^(2)",
        2,
        move |p| Ok(twisted_h2_functions(p, z)?[1]),
        move |p| {
            let [x1, _, x2, _] = two(p)?;
            Ok(vec![-1.0 + z * x2, 0.0, -1.0 + z * x1, 0.0])
        },
    );
    let h3 = ScalarField::new(
        "h~3^(2)",
        2,
        move |p| Ok(twisted_h2_functions(p, z)?[2]),
        move |p| {
            let [x1, y1, x2, y2] = two(p)?;
            let d = nonzero_gap(z, x2, p)?;
            Ok(vec![y1 / d, x1 / d, z * x1 * y1 / (d * d) + y2, x2])
        },
    );
    [h1, h2, h3, ScalarField::constant("h~0^(2)", 2, 2.0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::CoefficientSpec;
    use crate::oscillator::{h4_hamiltonians, h4_rhs};
    use crate::symplectic::{symplectic_jacobian_residual, SymplecticWeight};
    use std::f64::consts::LN_2;

    #[test]
    fn one_copy_map_values() {
        let p = [0.8, -1.7];
        assert_eq!(twist_vars(p, 0.0, Direction::Forward).unwrap(), p);
        assert_eq!(twist_vars(p, 0.0, Direction::Inverse).unwrap(), p);
        let q = twist_vars([1.0, 1.0], LN_2, Direction::Forward).unwrap();
        assert!((q[0] - 1.0 / (2.0 * LN_2)).abs() < 1e-15);
        assert!((q[1] - 2.0).abs() < 1e-15);
        assert!(twist_vars([2.0, 1.0], 0.5, Direction::Inverse).is_err());
    }

    #[test]
    fn one_copy_roundtrip_and_canonicality() {
        let z = 0.7;
        for p in [[0.3, 1.2], [-1.5, 0.4], [1.9, -2.0]] {
            let q = twist_vars(p, z, Direction::Forward).unwrap();
            let r = twist_vars(q, z, Direction::Inverse).unwrap();
            assert!((r[0] - p[0]).abs() < 1e-12 && (r[1] - p[1]).abs() < 1e-12);
            let res = symplectic_jacobian_residual(
                |v| Ok(twist_vars([v[0], v[1]], z, Direction::Forward)?.to_vec()),
                &SymplecticWeight::Canonical,
                &p,
            )
            .unwrap();
            assert!(res < 1e-7, "{res}");
        }
    }

    #[test]
    fn minimal_rhs_values() {
        let c = H4Coefficients::new(
            CoefficientSpec::constant(0.4),
            CoefficientSpec::constant(1.0),
            CoefficientSpec::constant(-0.6),
        );
        assert_eq!(
            minimal_rhs(0.0, [0.3, 0.2], 0.0, &c).unwrap(),
            h4_rhs(0.0, [0.3, 0.2], &c)
        );
        let c2 = H4Coefficients::new(
            CoefficientSpec::zero(),
            CoefficientSpec::constant(1.0),
            CoefficientSpec::zero(),
        );
        assert_eq!(minimal_rhs(0.0, [1.0, 7.0], 0.5, &c2).unwrap(), [0.0, 2.0]);
        assert!(minimal_rhs(0.0, [2.0, 7.0], 0.5, &c2).is_err());
    }

    #[test]
    fn two_copy_map_properties() {
        let z = 0.45;
        let p = [0.6, -1.1, 0.9, 0.35];
        assert_eq!(twisted_two_copy_map(&p, 0.0).unwrap(), p);
        let q = twisted_two_copy_map(&p, z).unwrap();
        let r = twisted_two_copy_map_inverse(&q, z).unwrap();
        for i in 0..4 {
            assert!((r[i] - p[i]).abs() < 1e-12);
        }
        let res = symplectic_jacobian_residual(
            |v| Ok(twisted_two_copy_map(v, z)?.to_vec()),
            &SymplecticWeight::Canonical,
            &p,
        )
        .unwrap();
        assert!(res < 1e-7);
        let h = twisted_h2_functions(&q, z).unwrap();
        let a = h4_hamiltonians([p[0], p[1]]);
        let b = h4_hamiltonians([p[2], p[3]]);
        for i in 0..4 {
            assert!((h[i] - (a[i] + b[i])).abs() < 1e-10);
        }
        assert_eq!(
            twisted_h2_functions(&[0.0; 4], z).unwrap(),
            [0.0, -0.0, 0.0, 2.0]
        );
        assert!(twisted_two_copy_map(&[0.0, 0.0, 2.0, 0.0], 0.5).is_err());
    }

    #[test]
    fn analytic_gradients_match() {
        for f in twisted_h2_fields(0.45) {
            assert!(f.gradient_error(&[0.6, -1.1, 0.9, 0.35]).unwrap() < 1e-6);
        }
    }
}
