//! Nonstandard Poisson–Hopf deformation of the oscillator system.
//!
//! Every `(e^{zu} - 1)/z` factor is evaluated as `u * phi(z u)`, so all
//! closed forms are finite at `z = 0`, where they reduce exactly to their
//! undeformed counterparts.

use crate::error::{Error, Result};
use crate::oscillator::{
    self, checked_sqrt, discriminant_root, nonzero_difference, H4Coefficients,
    SuperpositionConstants,
};
use crate::symplectic::{ScalarField, VectorField};

/// Largest `|z u|` fed to an exponential.
pub const EXP_ARG_LIMIT: f64 = 700.0;

/// `(e^u - 1)/u`, with `phi(0) = 1`.
pub fn phi(u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        u.exp_m1() / u
    }
}

/// `ln(1 + u)/u`, with value 1 at `u = 0`.
pub fn log1p_ratio(u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        u.ln_1p() / u
    }
}

/// `e^{z u}` with the overflow guard.
fn ez(z: f64, u: f64, p: &[f64]) -> Result<f64> {
    let a = z * u;
    if !(a.abs() <= EXP_ARG_LIMIT) {
        return Err(Error::domain(
            p,
            format!("exponent z*u = {a:e} beyond +-{EXP_ARG_LIMIT}"),
        ));
    }
    Ok(a.exp())
}

/// `(e^{z u} - 1)/z = u phi(z u)`.
fn g(z: f64, u: f64) -> f64 {
    u * phi(z * u)
}

/// `(1 - e^{-z u})/z = u phi(-z u)`.
fn m(z: f64, u: f64) -> f64 {
    u * phi(-z * u)
}

/// `(h_{z,1}, h_{z,2}, h_{z,3}, h_{z,0}) = (e^{zx} y, -x, x phi(zx) y, 1)`.
pub fn hz_hamiltonians(p: [f64; 2], z: f64) -> Result<[f64; 4]> {
    let [x, y] = p;
    let e = ez(z, x, &p)?;
    Ok([e * y, -x, g(z, x) * y, 1.0])
}

pub fn hz_hamiltonian_fields(z: f64) -> [ScalarField; 4] {
    [
        ScalarField::new(
            "h_z1",
            1,
            move |p| Ok(ez(z, p[0], p)? * p[1]),
            move |p| {
                let e = ez(z, p[0], p)?;
                Ok(vec![z * e * p[1], e])
            },
        ),
        ScalarField::new("h_z2", 1, |p| Ok(-p[0]), |_| Ok(vec![-1.0, 0.0])),
        ScalarField::new(
            "h_z3",
            1,
            move |p| {
                ez(z, p[0], p)?;
                Ok(g(z, p[0]) * p[1])
            },
            move |p| Ok(vec![ez(z, p[0], p)? * p[1], g(z, p[0])]),
        ),
        ScalarField::constant("h_z0", 1, 1.0),
    ]
}

/// `dx/dt = b1 e^{zx} + b3 x phi(zx)`, `dy/dt = b2 - (b3 + z b1) e^{zx} y`.
pub fn hz_rhs(t: f64, p: [f64; 2], z: f64, c: &H4Coefficients) -> Result<[f64; 2]> {
    let [b1, b2, b3] = c.eval(t);
    let [x, y] = p;
    let e = ez(z, x, &p)?;
    Ok([b1 * e + b3 * g(z, x), b2 - (b3 + z * b1) * e * y])
}

/// Truncation of [`hz_rhs`] at first order in `z`.
pub fn hz_rhs_first_order(t: f64, p: [f64; 2], z: f64, c: &H4Coefficients) -> [f64; 2] {
    let [b1, b2, b3] = c.eval(t);
    let [x, y] = p;
    [
        b1 + (b3 + z * b1) * x + 0.5 * z * b3 * x * x,
        b2 - (b3 + z * b1) * y - z * b3 * x * y,
    ]
}

pub fn hz_field(z: f64, c: &H4Coefficients) -> VectorField {
    let c = c.clone();
    VectorField::new(1, move |t, p, out| {
        out.copy_from_slice(&hz_rhs(t, [p[0], p[1]], z, &c)?);
        Ok(())
    })
}

pub fn hz_first_order_field(z: f64, c: &H4Coefficients) -> VectorField {
    let c = c.clone();
    VectorField::new(1, move |t, p, out| {
        out.copy_from_slice(&hz_rhs_first_order(t, [p[0], p[1]], z, &c));
        Ok(())
    })
}

fn three(p: &[f64]) -> Result<[f64; 6]> {
    p.try_into()
        .map_err(|_| Error::InvalidInput(format!("expected 6 coordinates, got {}", p.len())))
}

/// The three-copy functions `(h1, h2, h3, h0)` of the deformed coproduct.
pub fn prolonged_hamiltonians(pp: &[f64], z: f64) -> Result<[f64; 4]> {
    let [x1, y1, x2, y2, x3, y3] = three(pp)?;
    let e1 = ez(z, x1, pp)?;
    let e2 = ez(z, x2, pp)?;
    let e3 = ez(z, x3, pp)?;
    let e23 = ez(z, x2 + x3, pp)?;
    Ok([
        (3.0 * e1 - 2.0) * e23 * y1 + (2.0 * e2 - 1.0) * e3 * y2 + e3 * y3,
        -(x1 + x2 + x3),
        g(z, x1) * e23 * y1 + g(z, x2) * e3 * y2 + g(z, x3) * y3,
        3.0,
    ])
}

pub fn prolonged_hamiltonian_fields(z: f64) -> [ScalarField; 4] {
    let h1 = ScalarField::new(
        "h_z1^(3)",
        3,
        move |p| Ok(prolonged_hamiltonians(p, z)?[0]),
        move |p| {
            let [x1, y1, x2, y2, x3, y3] = three(p)?;
            let e1 = ez(z, x1, p)?;
            let e2 = ez(z, x2, p)?;
            let e3 = ez(z, x3, p)?;
            let e23 = ez(z, x2 + x3, p)?;
            let t1 = (3.0 * e1 - 2.0) * e23;
            let t2 = (2.0 * e2 - 1.0) * e3;
            Ok(vec![
                3.0 * z * e1 * e23 * y1,
                t1,
                z * t1 * y1 + 2.0 * z * e2 * e3 * y2,
                t2,
                z * t1 * y1 + z * t2 * y2 + z * e3 * y3,
                e3,
            ])
        },
    );
    let h2 = ScalarField::new(
        "h_z2^(3)",
        3,
        |p| Ok(-(p[0] + p[2] + p[4])),
        |_| Ok(vec![-1.0, 0.0, -1.0, 0.0, -1.0, 0.0]),
    );
    let h3 = ScalarField::new(
        "h_z3^(3)",
        3,
        move |p| Ok(prolonged_hamiltonians(p, z)?[2]),
        move |p| {
            let [x1, y1, x2, y2, x3, y3] = three(p)?;
            let e1 = ez(z, x1, p)?;
            let e2 = ez(z, x2, p)?;
            let e3 = ez(z, x3, p)?;
            let e23 = ez(z, x2 + x3, p)?;
            let (g1, g2, g3) = (g(z, x1), g(z, x2), g(z, x3));
            Ok(vec![
                e1 * e23 * y1,
                g1 * e23,
                z * g1 * e23 * y1 + e2 * e3 * y2,
                g2 * e3,
                z * g1 * e23 * y1 + z * g2 * e3 * y2 + e3 * y3,
                g3,
            ])
        },
    );
    [h1, h2, h3, ScalarField::constant("h_z0^(3)", 3, 3.0)]
}

/// The two-copy functions of the deformed coproduct placed on copies
/// `(i, j)` of an `n`-copy space (zero-based). `(n, i, j) = (2, 0, 1)` is the
/// plain two-copy set, `(3, 0, 1)` the left set and `(3, 1, 2)` the right set.
pub fn two_copy_hamiltonian_fields(z: f64, n: usize, i: usize, j: usize) -> [ScalarField; 4] {
    assert!(i < n && j < n && i != j);
    let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
    let h1 = ScalarField::new(
        format!("h_z1^(2)[{}{}]", i + 1, j + 1),
        n,
        move |p| {
            let ei = ez(z, p[xi], p)?;
            let ej = ez(z, p[xj], p)?;
            Ok((2.0 * ei - 1.0) * ej * p[yi] + ej * p[yj])
        },
        move |p| {
            let ei = ez(z, p[xi], p)?;
            let ej = ez(z, p[xj], p)?;
            let mut gr = vec![0.0; 2 * n];
            gr[xi] = 2.0 * z * ei * ej * p[yi];
            gr[yi] = (2.0 * ei - 1.0) * ej;
            gr[xj] = z * ((2.0 * ei - 1.0) * ej * p[yi] + ej * p[yj]);
            gr[yj] = ej;
            Ok(gr)
        },
    );
    let h2 = ScalarField::new(
        format!("h_z2^(2)[{}{}]", i + 1, j + 1),
        n,
        move |p| Ok(-p[xi] - p[xj]),
        move |_| {
            let mut gr = vec![0.0; 2 * n];
            gr[xi] = -1.0;
            gr[xj] = -1.0;
            Ok(gr)
        },
    );
    let h3 = ScalarField::new(
        format!("h_z3^(2)[{}{}]", i + 1, j + 1),
        n,
        move |p| {
            ez(z, p[xi], p)?;
            let ej = ez(z, p[xj], p)?;
            Ok(g(z, p[xi]) * ej * p[yi] + g(z, p[xj]) * p[yj])
        },
        move |p| {
            let ei = ez(z, p[xi], p)?;
            let ej = ez(z, p[xj], p)?;
            let gi = g(z, p[xi]);
            let mut gr = vec![0.0; 2 * n];
            gr[xi] = ei * ej * p[yi];
            gr[yi] = gi * ej;
            gr[xj] = z * gi * ej * p[yi] + ej * p[yj];
            gr[yj] = g(z, p[xj]);
            Ok(gr)
        },
    );
    [
        h1,
        h2,
        h3,
        ScalarField::constant(format!("h_z0^(2)[{}{}]", i + 1, j + 1), n, 2.0),
    ]
}

/// The six equations of the prolonged deformed system.
pub fn prolonged_rhs(t: f64, pp: &[f64], z: f64, c: &H4Coefficients) -> Result<[f64; 6]> {
    let [b1, b2, b3] = c.eval(t);
    let [x1, y1, x2, y2, x3, y3] = three(pp)?;
    let e1 = ez(z, x1, pp)?;
    let e2 = ez(z, x2, pp)?;
    let e3 = ez(z, x3, pp)?;
    let e23 = ez(z, x2 + x3, pp)?;
    let e123 = ez(z, x1 + x2 + x3, pp)?;
    Ok([
        b1 * (3.0 * e1 - 2.0) * e23 + b3 * g(z, x1) * e23,
        b2 - (b3 + 3.0 * z * b1) * e123 * y1,
        b1 * (2.0 * e2 - 1.0) * e3 + b3 * g(z, x2) * e3,
        b2 - b3 * e23 * ((e1 - 1.0) * y1 + y2) - z * b1 * e23 * ((3.0 * e1 - 2.0) * y1 + 2.0 * y2),
        b1 * e3 + b3 * g(z, x3),
        b2 - b3 * e3 * ((e1 - 1.0) * e2 * y1 + (e2 - 1.0) * y2 + y3)
            - z * b1 * e3 * ((3.0 * e1 - 2.0) * e2 * y1 + (2.0 * e2 - 1.0) * y2 + y3),
    ])
}

pub fn prolonged_field(z: f64, c: &H4Coefficients) -> VectorField {
    let c = c.clone();
    VectorField::new(3, move |t, p, out| {
        out.copy_from_slice(&prolonged_rhs(t, p, z, &c)?);
        Ok(())
    })
}

/// Left constant `((2 - e^{-z x1} - e^{z x2})/z)(y1 - y2)`.
pub fn fz2(pp: &[f64], z: f64) -> Result<f64> {
    let [x1, y1, x2, y2, _, _] = three(pp)?;
    if z == 0.0 {
        return Ok(oscillator::f2([x1, y1], [x2, y2]));
    }
    guard_all(z, pp)?;
    Ok((m(z, x1) - g(z, x2)) * (y1 - y2))
}

/// Right constant `((2 - e^{-z x2} - e^{z x3})/z)(y2 - y3)`.
pub fn fz2_right(pp: &[f64], z: f64) -> Result<f64> {
    let [_, _, x2, y2, x3, y3] = three(pp)?;
    if z == 0.0 {
        return Ok(oscillator::f2([x3, y3], [x2, y2]));
    }
    guard_all(z, pp)?;
    Ok((m(z, x2) - g(z, x3)) * (y2 - y3))
}

/// Coefficients `(A1, A2, A3)` of `F_z^(3) = A1 y1 + A2 y2 + A3 y3`.
fn fz3_coeffs(z: f64, x1: f64, x2: f64, x3: f64) -> [f64; 3] {
    let m1 = m(z, x1);
    let g3 = g(z, x3);
    let m12 = m(z, x1 + x2);
    let g23 = g(z, x2 + x3);
    [
        2.0 * m1 - g23,
        -2.0 * m1 + m12 - 2.0 * g3 + g23,
        2.0 * g3 - m12,
    ]
}

/// Third constant, from the deformed Casimir on three copies.
pub fn fz3(pp: &[f64], z: f64) -> Result<f64> {
    let [x1, y1, x2, y2, x3, y3] = three(pp)?;
    if z == 0.0 {
        return Ok(oscillator::f3([x1, y1], [x2, y2], [x3, y3]));
    }
    guard_all(z, pp)?;
    let [a1, a2, a3] = fz3_coeffs(z, x1, x2, x3);
    Ok(a1 * y1 + a2 * y2 + a3 * y3)
}

/// `S12, S13, S23` applied to the left constant. Conserved only at `z = 0`.
pub fn perm_candidates(pp: &[f64], z: f64) -> Result<[f64; 3]> {
    let [x1, y1, x2, y2, x3, y3] = three(pp)?;
    guard_all(z, pp)?;
    Ok([
        (m(z, x2) - g(z, x1)) * (y2 - y1),
        (m(z, x3) - g(z, x2)) * (y3 - y2),
        (m(z, x1) - g(z, x3)) * (y1 - y3),
    ])
}

fn guard_all(z: f64, pp: &[f64]) -> Result<()> {
    let s: f64 = pp.iter().step_by(2).map(|x| x.abs()).sum();
    ez(z.abs(), s, pp).map(|_| ())
}

/// `((u_i phi(-z u_i) - u_j phi(z u_j))(y_i - y_j)` on copies `(i, j)`.
fn deformed_pair_field(name: &str, z: f64, i: usize, j: usize) -> ScalarField {
    let (xi, yi, xj, yj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
    ScalarField::new(
        name,
        3,
        move |p| {
            guard_all(z, p)?;
            Ok((m(z, p[xi]) - g(z, p[xj])) * (p[yi] - p[yj]))
        },
        move |p| {
            guard_all(z, p)?;
            let a = m(z, p[xi]) - g(z, p[xj]);
            let dy = p[yi] - p[yj];
            let mut gr = vec![0.0; 6];
            gr[xi] = (-z * p[xi]).exp() * dy;
            gr[xj] = -(z * p[xj]).exp() * dy;
            gr[yi] = a;
            gr[yj] = -a;
            Ok(gr)
        },
    )
}

/// `[F_z^(2), F_z(2), F_z^(3)]` as three-copy fields.
pub fn deformed_constant_fields(z: f64) -> [ScalarField; 3] {
    let f3 = ScalarField::new(
        "Fz3",
        3,
        move |p| fz3(p, z),
        move |p| {
            guard_all(z, p)?;
            let [x1, y1, x2, y2, x3, y3] = three(p)?;
            let [a1, a2, a3] = fz3_coeffs(z, x1, x2, x3);
            let em1 = (-z * x1).exp();
            let e3 = (z * x3).exp();
            let em12 = (-z * (x1 + x2)).exp();
            let e23 = (z * (x2 + x3)).exp();
            Ok(vec![
                2.0 * em1 * y1 + (-2.0 * em1 + em12) * y2 - em12 * y3,
                a1,
                -e23 * y1 + (em12 + e23) * y2 - em12 * y3,
                a2,
                -e23 * y1 + (-2.0 * e3 + e23) * y2 + 2.0 * e3 * y3,
                a3,
            ])
        },
    );
    [
        deformed_pair_field("Fz2", z, 0, 1),
        deformed_pair_field("Fz2R", z, 1, 2),
        f3,
    ]
}

/// `[S12, S13, S23]` of the left constant as three-copy fields.
pub fn perm_candidate_fields(z: f64) -> [ScalarField; 3] {
    [
        deformed_pair_field("S12", z, 1, 0),
        deformed_pair_field("S13", z, 2, 1),
        deformed_pair_field("S23", z, 0, 2),
    ]
}

/// Deformed superposition rule: copy 1 of the prolonged deformed system from
/// copies 2 and 3, `k1 = F_z^(2)` and `k = F_z^(3)`. `z = 0` dispatches to
/// the undeformed rule.
pub fn superpose_deformed(
    p2: [f64; 2],
    p3: [f64; 2],
    sc: &SuperpositionConstants,
    z: f64,
) -> Result<[f64; 2]> {
    if z == 0.0 {
        return oscillator::superpose_h4(p2, p3, sc);
    }
    let [x2, y2] = p2;
    let [x3, y3] = p3;
    let pts = [x2, y2, x3, y3];
    let e2 = ez(z, x2, &pts)?;
    ez(z, x3, &pts)?;
    let (m2, g3) = (m(z, x2), g(z, x3));
    let dy = nonzero_difference(y2, y3, "y2 = y3")?;
    // (2 - e^{-z x2} - e^{z x3})/z
    let q = m2 - g3;
    if q.abs() <= 1e-12 * m2.abs().max(g3.abs()).max(1.0) {
        return Err(Error::Singular(format!(
            "2 - e^(-z x2) - e^(z x3) vanishes at x2 = {x2}, x3 = {x3}"
        )));
    }
    let k3 = q * dy;
    sc.check_k3(k3)?;
    let (k1, k) = (sc.k1, sc.k);
    let b = discriminant_root(k1, k, k3)?;
    let s = sc.branch.sign();

    let x1 = solve_x1(z, x2, x3, dy, k1, k, s * b)?;
    let y1 = y3 / e2 - (-z * x2).exp_m1() * y2 + (k - 2.0 * k1 - s * b) / (2.0 * e2 * q);
    if !(x1.is_finite() && y1.is_finite()) {
        return Err(Error::NonFinite {
            what: "deformed superposition".into(),
            point: pts.to_vec(),
        });
    }
    Ok([x1, y1])
}

/// The exponential half of the deformed rule alone. It stays defined when
/// `2 - e^{-z x2} - e^{z x3}` vanishes, where the `y1` half is singular.
pub fn superpose_deformed_x1(
    p2: [f64; 2],
    p3: [f64; 2],
    sc: &SuperpositionConstants,
    z: f64,
) -> Result<f64> {
    if z == 0.0 {
        return Ok(oscillator::superpose_h4(p2, p3, sc)?[0]);
    }
    let [x2, y2] = p2;
    let [x3, y3] = p3;
    let pts = [x2, y2, x3, y3];
    ez(z, x2, &pts)?;
    ez(z, x3, &pts)?;
    let dy = nonzero_difference(y2, y3, "y2 = y3")?;
    let k3 = (m(z, x2) - g(z, x3)) * dy;
    sc.check_k3(k3)?;
    let b = discriminant_root(sc.k1, sc.k, k3)?;
    solve_x1(z, x2, x3, dy, sc.k1, sc.k, sc.branch.sign() * b)
}

/// `x1` from the exponential half of the deformed rule, with `sb` the signed
/// discriminant root.
fn solve_x1(z: f64, x2: f64, x3: f64, dy: f64, k1: f64, k: f64, sb: f64) -> Result<f64> {
    let pts = [x2, x3];
    let e2 = ez(z, x2, &pts)?;
    let e3 = ez(z, x3, &pts)?;
    let (m2, g2, g3) = (m(z, x2), g(z, x2), g(z, x3));
    let den = z * k * (e2 - 2.0) - z * k1 * (e2 * e3 - 3.0) + (e2 - 2.0) * (2.0 * e3 - 3.0) * dy;
    if den.abs() <= 1e-12 * (dy.abs() + z.abs() * (k.abs() + k1.abs())).max(f64::MIN_POSITIVE) {
        return Err(Error::Singular("denominator of e^(z x1) vanishes".into()));
    }
    // (numerator - denominator)/z, so that e^{z x1} = 1 + z w/den
    let w = dy * (-m2 + g2 + g3 - 2.0 * z * g2 * g3) + 0.5 * (2.0 * k1 - k + sb) - k * (e2 - 2.0)
        + k1 * (e2 * e3 - 3.0);
    let u = z * w / den;
    if !(u > -1.0) {
        return Err(Error::OutOfBranch(format!(
            "solved e^(z x1) = {} is not positive",
            1.0 + u
        )));
    }
    Ok((w / den) * log1p_ratio(u))
}

/// The deformed rule evaluated exactly as printed (exponential form with
/// explicit `1/z`); only meaningful for `z` away from 0.
pub fn superpose_deformed_printed(
    p2: [f64; 2],
    p3: [f64; 2],
    k1: f64,
    k: f64,
    branch: oscillator::Branch,
    z: f64,
) -> Result<[f64; 2]> {
    let [x2, y2] = p2;
    let [x3, y3] = p3;
    let (e2, e3) = ((z * x2).exp(), (z * x3).exp());
    let em2 = (-z * x2).exp();
    let k3 = ((2.0 - em2 - e3) / z) * (y2 - y3);
    let d = (k - 2.0 * (k1 + k3)).powi(2) - 4.0 * k1 * k3;
    let b = checked_sqrt(d, (k.abs() + 2.0 * k1.abs() + 2.0 * k3.abs()).powi(2))?;
    let s = branch.sign();
    let num = (1.0 + em2 - e3) * (y2 - y3) + 0.5 * z * (2.0 * k1 - k + s * b);
    let den =
        z * k * (e2 - 2.0) - z * k1 * (e2 * e3 - 3.0) + (e2 - 2.0) * (2.0 * e3 - 3.0) * (y2 - y3);
    let ratio = num / den;
    if !(ratio > 0.0) {
        return Err(Error::OutOfBranch(format!("e^(z x1) = {ratio}")));
    }
    Ok([
        ratio.ln() / z,
        em2 * y3 + (1.0 - em2) * y2 + z * (k - 2.0 * k1 - s * b) / (2.0 * e2 * (2.0 - em2 - e3)),
    ])
}
