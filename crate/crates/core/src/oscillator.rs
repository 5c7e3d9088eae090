//! The undeformed oscillator system on the plane, its book-algebra restriction,
//! the diagonal prolongation, the coproduct constants and both superposition
//! rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::CoefficientSpec;
use crate::symplectic::{ScalarField, VectorField};

/// `b1(t), b2(t), b3(t)` and the central coefficient `b0(t)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct H4Coefficients {
    #[serde(default)]
    pub b1: CoefficientSpec,
    #[serde(default)]
    pub b2: CoefficientSpec,
    #[serde(default)]
    pub b3: CoefficientSpec,
    #[serde(default)]
    pub b0: CoefficientSpec,
}

impl H4Coefficients {
    pub fn new(b1: CoefficientSpec, b2: CoefficientSpec, b3: CoefficientSpec) -> Self {
        Self {
            b1,
            b2,
            b3,
            b0: CoefficientSpec::zero(),
        }
    }

    /// The book-algebra restriction `b1 = 0`.
    pub fn book(b2: CoefficientSpec, b3: CoefficientSpec) -> Self {
        Self::new(CoefficientSpec::zero(), b2, b3)
    }

    pub fn is_book(&self) -> bool {
        self.b1.is_zero()
    }

    /// `(b1(t), b2(t), b3(t))`.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        [self.b1.eval(t), self.b2.eval(t), self.b3.eval(t)]
    }
}

/// `(h1, h2, h3, h0) = (y, -x, xy, 1)`.
pub fn h4_hamiltonians(p: [f64; 2]) -> [f64; 4] {
    let [x, y] = p;
    [y, -x, x * y, 1.0]
}

/// The generators `h1, h2, h3, h0` as one-copy scalar fields.
pub fn h4_hamiltonian_fields() -> [ScalarField; 4] {
    [
        ScalarField::new("h1", 1, |p| Ok(p[1]), |_| Ok(vec![0.0, 1.0])),
        ScalarField::new("h2", 1, |p| Ok(-p[0]), |_| Ok(vec![-1.0, 0.0])),
        ScalarField::new("h3", 1, |p| Ok(p[0] * p[1]), |p| Ok(vec![p[1], p[0]])),
        ScalarField::constant("h0", 1, 1.0),
    ]
}

/// Diagonal prolongation `sum_j h_i(x_j, y_j)` of the generators to `n`
/// copies.
pub fn h4_diagonal_fields(n: usize) -> [ScalarField; 4] {
    [
        ScalarField::new(
            format!("h1^({n})"),
            n,
            |p| Ok(p.chunks(2).map(|c| c[1]).sum()),
            |p| Ok(p.chunks(2).flat_map(|_| [0.0, 1.0]).collect()),
        ),
        ScalarField::new(
            format!("h2^({n})"),
            n,
            |p| Ok(-p.chunks(2).map(|c| c[0]).sum::<f64>()),
            |p| Ok(p.chunks(2).flat_map(|_| [-1.0, 0.0]).collect()),
        ),
        ScalarField::new(
            format!("h3^({n})"),
            n,
            |p| Ok(p.chunks(2).map(|c| c[0] * c[1]).sum()),
            |p| Ok(p.chunks(2).flat_map(|c| [c[1], c[0]]).collect()),
        ),
        ScalarField::constant(format!("h0^({n})"), n, n as f64),
    ]
}

/// `(b1 + b3 x, b2 - b3 y)`.
pub fn h4_rhs(t: f64, p: [f64; 2], c: &H4Coefficients) -> [f64; 2] {
    let [b1, b2, b3] = c.eval(t);
    [b1 + b3 * p[0], b2 - b3 * p[1]]
}

/// `n` uncoupled copies of [`h4_rhs`] sharing the coefficients.
pub fn h4_field(c: &H4Coefficients, n: usize) -> VectorField {
    let c = c.clone();
    VectorField::new(n, move |t, p, out| {
        let [b1, b2, b3] = c.eval(t);
        for (q, o) in p.chunks(2).zip(out.chunks_mut(2)) {
            o[0] = b1 + b3 * q[0];
            o[1] = b2 - b3 * q[1];
        }
        Ok(())
    })
}

/// `(x1 - x2)(y1 - y2)`.
pub fn f2(p1: [f64; 2], p2: [f64; 2]) -> f64 {
    (p1[0] - p2[0]) * (p1[1] - p2[1])
}

/// Sum of [`f2`] over the three pairs.
pub fn f3(p1: [f64; 2], p2: [f64; 2], p3: [f64; 2]) -> f64 {
    f2(p1, p2) + f2(p1, p3) + f2(p2, p3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Permuted {
    /// `(x3 - x2)(y3 - y2)`
    F13,
    /// `(x1 - x3)(y1 - y3)`
    F23,
}

pub fn f2_perm(p1: [f64; 2], p2: [f64; 2], p3: [f64; 2], which: Permuted) -> f64 {
    match which {
        Permuted::F13 => f2(p3, p2),
        Permuted::F23 => f2(p1, p3),
    }
}

/// `(x_i - x_j)(y_i - y_j)` on `n` copies (zero-based copy indices).
pub fn pair_field(name: impl Into<String>, n: usize, i: usize, j: usize) -> ScalarField {
    assert!(i < n && j < n && i != j);
    ScalarField::new(
        name,
        n,
        move |p| Ok((p[2 * i] - p[2 * j]) * (p[2 * i + 1] - p[2 * j + 1])),
        move |p| {
            let dx = p[2 * i] - p[2 * j];
            let dy = p[2 * i + 1] - p[2 * j + 1];
            let mut g = vec![0.0; 2 * n];
            g[2 * i] = dy;
            g[2 * j] = -dy;
            g[2 * i + 1] = dx;
            g[2 * j + 1] = -dx;
            Ok(g)
        },
    )
}

/// The undeformed constants on three copies: `F2` (copies 1,2), `F13`
/// (copies 2,3, the right constant), `F23` (copies 1,3) and `F3`.
pub fn h4_constant_fields() -> [ScalarField; 4] {
    let f2 = pair_field("F2", 3, 0, 1);
    let f13 = pair_field("F13", 3, 1, 2);
    let f23 = pair_field("F23", 3, 0, 2);
    let f3 = ScalarField::linear_combination(
        "F3",
        vec![(1.0, f2.clone()), (1.0, f13.clone()), (1.0, f23.clone())],
    );
    [f2, f13, f23, f3]
}

/// Sign choice in the quadratic solve of a superposition rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn both() -> [Branch; 2] {
        [Branch::Plus, Branch::Minus]
    }
}

/// Values of the constants feeding a superposition rule. `k3` is recomputed
/// from the two known copies; a stored value is only compared against it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperpositionConstants {
    pub k1: f64,
    pub k: f64,
    #[serde(default)]
    pub k3: Option<f64>,
    pub branch: Branch,
}

impl SuperpositionConstants {
    pub fn new(k1: f64, k: f64, branch: Branch) -> Self {
        Self {
            k1,
            k,
            k3: None,
            branch,
        }
    }

    pub fn with_branch(self, branch: Branch) -> Self {
        Self { branch, ..self }
    }

    pub(crate) fn check_k3(&self, k3: f64) -> Result<()> {
        if let Some(stored) = self.k3 {
            if (stored - k3).abs() > 1e-6 * stored.abs().max(k3.abs()).max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "stored k3 = {stored} disagrees with the value {k3} of the known copies"
                )));
            }
        }
        Ok(())
    }
}

/// Relative slack below zero tolerated in a discriminant before it counts as
/// a constraint violation; smaller negatives are rounding and clamp to 0.
const DISCRIMINANT_SLACK: f64 = 1e-12;

/// `sqrt((k - 2(k1 + k3))^2 - 4 k1 k3)`.
pub fn discriminant_root(k1: f64, k: f64, k3: f64) -> Result<f64> {
    let d = (k - 2.0 * (k1 + k3)).powi(2) - 4.0 * k1 * k3;
    let scale = (k.abs() + 2.0 * k1.abs() + 2.0 * k3.abs()).powi(2);
    checked_sqrt(d, scale)
}

pub(crate) fn checked_sqrt(d: f64, scale: f64) -> Result<f64> {
    if !d.is_finite() {
        return Err(Error::NonFinite {
            what: "superposition discriminant".into(),
            point: vec![d],
        });
    }
    if d >= 0.0 {
        Ok(d.sqrt())
    } else if d >= -DISCRIMINANT_SLACK * scale {
        Ok(0.0)
    } else {
        Err(Error::ConstraintViolation { discriminant: d })
    }
}

/// Fails when `a` and `b` coincide to within 1e-12 relative.
pub(crate) fn nonzero_difference(a: f64, b: f64, what: &str) -> Result<f64> {
    let d = a - b;
    if d.abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0) {
        return Err(Error::Singular(format!("{what}: {a} vs {b}")));
    }
    Ok(d)
}

/// The simplified rule: copy 1 from copies 2 and 3 and the values `k1` of
/// `F2` and `k` of `F3`.
pub fn superpose_h4(p2: [f64; 2], p3: [f64; 2], sc: &SuperpositionConstants) -> Result<[f64; 2]> {
    let [x2, y2] = p2;
    let [x3, y3] = p3;
    let dy = nonzero_difference(y2, y3, "y2 = y3")?;
    let dx = nonzero_difference(x2, x3, "x2 = x3")?;
    let k3 = f2(p3, p2);
    sc.check_k3(k3)?;
    let (k1, k) = (sc.k1, sc.k);
    let b = discriminant_root(k1, k, k3)?;
    let s = sc.branch.sign();
    Ok([
        x3 + (k - 2.0 * k1 + s * b) / (2.0 * dy),
        y3 + (k - 2.0 * k1 - s * b) / (2.0 * dx),
    ])
}

/// The unsimplified rule in terms of `k1, k2, k3` (values of `F2`, `F23`,
/// `F13`).
pub fn superpose_h4_legacy(
    p2: [f64; 2],
    p3: [f64; 2],
    k1: f64,
    k2: f64,
    k3: f64,
    branch: Branch,
) -> Result<[f64; 2]> {
    let [x2, y2] = p2;
    let [x3, y3] = p3;
    let dy = nonzero_difference(y2, y3, "y2 = y3")?;
    let dx = nonzero_difference(x2, x3, "x2 = x3")?;
    let d = k1 * k1 + k2 * k2 + k3 * k3 - 2.0 * (k1 * k2 + k1 * k3 + k2 * k3);
    let scale = (k1.abs() + k2.abs() + k3.abs()).powi(2);
    let b = checked_sqrt(d, scale)?;
    let s = branch.sign();
    Ok([
        0.5 * (x2 + x3) + (k2 - k1 + s * b) / (2.0 * dy),
        0.5 * (y2 + y3) + (k2 - k1 - s * b) / (2.0 * dx),
    ])
}

/// Outcome of choosing the branch that best reproduces a known copy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub branch: Branch,
    pub error: f64,
    /// The two branches coincide (discriminant root below 1e-10).
    pub ambiguous: bool,
}

/// Evaluates `rule` on both branches and keeps the one closest to `known`.
pub fn calibrate_branch<F>(rule: F, known: [f64; 2]) -> Result<Calibration>
where
    F: Fn(Branch) -> Result<[f64; 2]>,
{
    let mut best: Option<(Branch, f64, [f64; 2])> = None;
    let mut last_err = None;
    let mut images = Vec::new();
    for br in Branch::both() {
        match rule(br) {
            Ok(p) => {
                let e = (p[0] - known[0]).abs().max((p[1] - known[1]).abs());
                images.push(p);
                if best.is_none_or(|(_, be, _)| e < be) {
                    best = Some((br, e, p));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((branch, error, _)) => {
            let ambiguous = images.len() == 2
                && (images[0][0] - images[1][0])
                    .abs()
                    .max((images[0][1] - images[1][1]).abs())
                    < 1e-10;
            Ok(Calibration {
                branch,
                error,
                ambiguous,
            })
        }
        None => Err(last_err.expect("both branches failed")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::{poisson_bracket, SymplecticWeight};

    const P1: [f64; 2] = [2.0, 3.0];
    const P2: [f64; 2] = [1.0, 0.0];
    const P3: [f64; 2] = [0.0, 1.0];

    #[test]
    fn hamiltonian_values() {
        assert_eq!(h4_hamiltonians([0.0, 0.0]), [0.0, -0.0, 0.0, 1.0]);
        assert_eq!(h4_hamiltonians([1.0, 2.0]), [2.0, -1.0, 2.0, 1.0]);
    }

    #[test]
    fn bracket_table_at_a_point() {
        let [h1, h2, h3, _] = h4_hamiltonian_fields();
        let w = SymplecticWeight::Canonical;
        let p = [0.7, -1.3];
        assert_eq!(poisson_bracket(&h1, &h2, &w, &p).unwrap(), 1.0);
        assert_eq!(
            poisson_bracket(&h1, &h3, &w, &p).unwrap(),
            -h1.eval(&p).unwrap()
        );
        assert_eq!(
            poisson_bracket(&h2, &h3, &w, &p).unwrap(),
            h2.eval(&p).unwrap()
        );
    }

    #[test]
    fn rhs_examples() {
        let zero = H4Coefficients::default();
        assert_eq!(h4_rhs(0.3, [1.0, 1.0], &zero), [0.0, 0.0]);
        let c = H4Coefficients::new(
            CoefficientSpec::constant(1.0),
            CoefficientSpec::constant(2.0),
            CoefficientSpec::constant(3.0),
        );
        assert_eq!(h4_rhs(0.0, [1.0, 1.0], &c), [4.0, -1.0]);
        let book = H4Coefficients::book(
            CoefficientSpec::constant(1.0),
            CoefficientSpec::constant(1.0),
        );
        assert!(book.is_book());
        assert_eq!(h4_rhs(0.0, [1.0, 1.0], &book), [1.0, 0.0]);
    }

    #[test]
    fn constant_values() {
        assert_eq!(f2(P1, P1), 0.0);
        assert_eq!(f2(P1, P2), 3.0);
        assert_eq!(f2(P2, P1), 3.0);
        assert_eq!(f3(P1, P1, P1), 0.0);
        assert_eq!(f3(P1, P2, P3), 6.0);
        assert_eq!(f2_perm(P1, P2, P3, Permuted::F13), -1.0);
        assert_eq!(f2_perm(P1, P2, P3, Permuted::F23), 4.0);
        assert_eq!(f2_perm(P1, P2, P2, Permuted::F13), 0.0);
        let fields = h4_constant_fields();
        let p = [2.0, 3.0, 1.0, 0.0, 0.0, 1.0];
        let vals: Vec<f64> = fields.iter().map(|f| f.eval(&p).unwrap()).collect();
        assert_eq!(vals, vec![3.0, -1.0, 4.0, 6.0]);
    }

    #[test]
    fn superposition_reproduces_known_copy() {
        let sc = SuperpositionConstants::new(3.0, 6.0, Branch::Minus);
        assert_eq!(discriminant_root(3.0, 6.0, -1.0).unwrap(), 4.0);
        assert_eq!(superpose_h4(P2, P3, &sc).unwrap(), P1);
        let other = superpose_h4(P2, P3, &sc.with_branch(Branch::Plus)).unwrap();
        assert_ne!(other, P1);
        assert_eq!(
            superpose_h4_legacy(P2, P3, 3.0, 4.0, -1.0, Branch::Minus).unwrap(),
            P1
        );
        let cal = calibrate_branch(|b| superpose_h4(P2, P3, &sc.with_branch(b)), P1).unwrap();
        assert_eq!(cal.branch, Branch::Minus);
        assert_eq!(cal.error, 0.0);
        assert!(!cal.ambiguous);
    }

    #[test]
    fn zero_constants_solve_both_equations() {
        let (p2, p3) = ([0.4, -1.1], [1.7, 0.6]);
        let k3 = f2(p3, p2);
        assert_eq!(discriminant_root(0.0, 0.0, k3).unwrap(), 2.0 * k3.abs());
        for br in Branch::both() {
            let p1 = superpose_h4(p2, p3, &SuperpositionConstants::new(0.0, 0.0, br)).unwrap();
            assert!(f2(p1, p2).abs() < 1e-12);
            assert!(f3(p1, p2, p3).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_k1_k2_is_symmetric_about_midpoint() {
        let (p2, p3) = ([0.4, -1.1], [1.7, 0.6]);
        let k3 = 5.0;
        let a = superpose_h4_legacy(p2, p3, 1.0, 1.0, k3, Branch::Plus).unwrap();
        let b = superpose_h4_legacy(p2, p3, 1.0, 1.0, k3, Branch::Minus).unwrap();
        assert!((a[0] + b[0] - (p2[0] + p3[0])).abs() < 1e-14);
        assert!((a[1] + b[1] - (p2[1] + p3[1])).abs() < 1e-14);
    }

    #[test]
    fn rule_errors() {
        let sc = SuperpositionConstants::new(3.0, 6.0, Branch::Minus);
        assert!(matches!(
            superpose_h4([1.0, 1.0], [0.0, 1.0], &sc),
            Err(Error::Singular(_))
        ));
        assert!(matches!(
            superpose_h4([0.0, 0.0], [0.0, 1.0], &sc),
            Err(Error::Singular(_))
        ));
        // k1 = 1, k = 0, k3 = 1: (0 - 4)^2 - 4 = 12 >= 0; k1 = 1, k = 4, k3 = 1: -4 < 0
        let bad = SuperpositionConstants::new(1.0, 4.0, Branch::Plus);
        assert!(matches!(
            superpose_h4([0.0, 0.0], [1.0, 1.0], &bad),
            Err(Error::ConstraintViolation { .. })
        ));
        let stale = SuperpositionConstants {
            k3: Some(5.0),
            ..sc
        };
        assert!(superpose_h4(P2, P3, &stale).is_err());
    }

    #[test]
    fn analytic_gradients_match() {
        let p = [0.3, -1.2, 1.9, 0.4, -0.7, 1.1];
        for f in h4_constant_fields()
            .iter()
            .chain(h4_diagonal_fields(3).iter())
        {
            assert!(f.gradient_error(&p).unwrap() < 1e-6, "{}", f.name());
        }
    }
}
