//! Complex Bernoulli equations `w' = a1(t) w + a2(t) w^s` in polar
//! coordinates `w = r e^{i theta}`, undeformed and deformed.
//!
//! Throughout, `phi = theta (s - 1)`. The change of variables to the plane is
//! `x = r^{s-1}/sin(phi)`, `y = -cos(phi)/((s-1) r^{s-1})`; its inverse is
//! taken on the branch `sin(phi) > 0`, i.e. `x > 0`.

use serde::{Deserialize, Serialize};

use crate::deformed::{self, phi as phi_fn, EXP_ARG_LIMIT};
use crate::error::{Error, Result};
use crate::ode::CoefficientSpec;
use crate::oscillator::{
    discriminant_root, nonzero_difference, H4Coefficients, SuperpositionConstants,
};
use crate::symplectic::{ScalarField, SymplecticWeight, VectorField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BernoulliParams {
    pub s: f64,
    #[serde(default)]
    pub a1: CoefficientSpec,
    #[serde(default)]
    pub a2: CoefficientSpec,
    #[serde(default)]
    pub z: f64,
}

impl BernoulliParams {
    pub fn new(s: f64, a1: CoefficientSpec, a2: CoefficientSpec, z: f64) -> Result<Self> {
        let p = Self { s, a1, a2, z };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s.is_finite() || self.s.abs() < 1e-12 || (self.s - 1.0).abs() < 1e-12 {
            return Err(Error::InvalidInput(format!(
                "Bernoulli exponent s = {} must be finite and differ from 0 and 1",
                self.s
            )));
        }
        if !self.z.is_finite() {
            return Err(Error::InvalidInput("z must be finite".into()));
        }
        Ok(())
    }

    /// Plane coefficients of the equivalent book system:
    /// `b1 = 0`, `b2 = a2`, `b3 = (s - 1) a1`.
    pub fn plane_coefficients(&self) -> H4Coefficients {
        H4Coefficients::book(self.a2.clone(), self.a1.scaled(self.s - 1.0))
    }
}

/// Per-point quantities shared by every polar formula.
struct Polar {
    r: f64,
    /// `r^{s-1}`
    rs1: f64,
    sin: f64,
    cos: f64,
}

fn polar(q: &[f64], s: f64) -> Result<Polar> {
    let (r, theta) = (q[0], q[1]);
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(q, format!("radius r = {r} must be positive")));
    }
    let ph = theta * (s - 1.0);
    let (sin, cos) = ph.sin_cos();
    if sin.abs() < 1e-300 || !sin.is_finite() {
        return Err(Error::domain(q, "sin(theta (s - 1)) vanishes"));
    }
    let rs1 = r.powf(s - 1.0);
    if !(rs1.is_finite() && rs1 > 0.0) {
        return Err(Error::domain(q, "r^(s-1) out of range"));
    }
    Ok(Polar { r, rs1, sin, cos })
}

/// Density `(s - 1)/(r sin^2(theta (s - 1)))` of the invariant form in
/// `(r, theta)`. Negative when `s < 1`.
pub fn bernoulli_weight(s: f64) -> SymplecticWeight {
    SymplecticWeight::diagonal(move |r, theta| {
        let p = polar(&[r, theta], s)?;
        Ok((s - 1.0) / (p.r * p.sin * p.sin))
    })
}

/// `r' = a1 r + a2 r^s cos(phi)`, `theta' = a2 r^{s-1} sin(phi)`.
pub fn bernoulli_rhs(t: f64, q: [f64; 2], params: &BernoulliParams) -> Result<[f64; 2]> {
    let p = polar(&q, params.s)?;
    let (a1, a2) = (params.a1.eval(t), params.a2.eval(t));
    Ok([a1 * p.r + a2 * p.r * p.rs1 * p.cos, a2 * p.rs1 * p.sin])
}

/// `E = exp(z r^{s-1}/sin(phi))` with the overflow guard, together with
/// `X = r^{s-1}/sin(phi)`.
fn exp_factor(p: &Polar, z: f64, q: &[f64]) -> Result<(f64, f64)> {
    let x = p.rs1 / p.sin;
    let a = z * x;
    if !(a.abs() <= EXP_ARG_LIMIT) {
        return Err(Error::domain(
            q,
            format!("exponent z r^(s-1)/sin = {a:e} out of range"),
        ));
    }
    Ok((a.exp(), x))
}

/// The deformed system; at `z = 0` it coincides with [`bernoulli_rhs`].
pub fn bernoulli_deformed_rhs(t: f64, q: [f64; 2], params: &BernoulliParams) -> Result<[f64; 2]> {
    let p = polar(&q, params.s)?;
    let z = params.z;
    let (e, x) = exp_factor(&p, z, &q)?;
    let ph = phi_fn(z * x);
    let (a1, a2) = (params.a1.eval(t), params.a2.eval(t));
    Ok([
        a1 * (p.r * p.cos * p.cos * e + p.r * p.sin * p.sin * ph) + a2 * p.r * p.rs1 * p.cos,
        a1 * p.sin * p.cos * (e - ph) + a2 * p.rs1 * p.sin,
    ])
}

pub fn bernoulli_field(params: &BernoulliParams) -> VectorField {
    let params = params.clone();
    VectorField::new(1, move |t, q, out| {
        out.copy_from_slice(&bernoulli_deformed_rhs(t, [q[0], q[1]], &params)?);
        Ok(())
    })
}

/// `n` uncoupled copies of the Bernoulli system.
pub fn bernoulli_copies_field(params: &BernoulliParams, n: usize) -> VectorField {
    let params = params.clone();
    VectorField::new(n, move |t, q, out| {
        for (qi, oi) in q.chunks(2).zip(out.chunks_mut(2)) {
            oi.copy_from_slice(&bernoulli_deformed_rhs(t, [qi[0], qi[1]], &params)?);
        }
        Ok(())
    })
}

/// Polar form of the three-copy prolonged deformed system, obtained by
/// pulling back the plane system copy by copy.
pub fn bernoulli_prolonged_field(params: &BernoulliParams) -> VectorField {
    let plane = deformed::prolonged_field(params.z, &params.plane_coefficients());
    pullback_field(&plane, params.s)
}

/// Pulls a plane vector field on `n` copies back through
/// [`polar_to_plane`] applied to each copy.
pub fn pullback_field(plane: &VectorField, s: f64) -> VectorField {
    let plane = plane.clone();
    VectorField::new(plane.arity(), move |t, q, out| {
        let mut xy = vec![0.0; q.len()];
        for (qi, pi) in q.chunks(2).zip(xy.chunks_mut(2)) {
            pi.copy_from_slice(&polar_to_plane([qi[0], qi[1]], s)?);
        }
        let v = plane.eval(t, &xy)?;
        for ((qi, vi), oi) in q.chunks(2).zip(v.chunks(2)).zip(out.chunks_mut(2)) {
            let p = polar(qi, s)?;
            let sm1 = s - 1.0;
            let dx_dr = sm1 * p.rs1 / (p.r * p.sin);
            let dx_dth = -sm1 * p.rs1 * p.cos / (p.sin * p.sin);
            let dy_dr = p.cos / (p.r * p.rs1);
            let dy_dth = p.sin / p.rs1;
            let det = dx_dr * dy_dth - dx_dth * dy_dr;
            oi[0] = (dy_dth * vi[0] - dx_dth * vi[1]) / det;
            oi[1] = (-dy_dr * vi[0] + dx_dr * vi[1]) / det;
        }
        Ok(())
    })
}

/// `(r, theta) -> (x, y)`.
pub fn polar_to_plane(q: [f64; 2], s: f64) -> Result<[f64; 2]> {
    let p = polar(&q, s)?;
    Ok([p.rs1 / p.sin, -p.cos / ((s - 1.0) * p.rs1)])
}

/// `(x, y) -> (r, theta)` on the branch `theta (s - 1) in (0, pi)`.
pub fn plane_to_polar(xy: [f64; 2], s: f64) -> Result<[f64; 2]> {
    let [x, y] = xy;
    if !(x > 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(Error::domain(
            &xy,
            "x must be positive on the fundamental branch sin(theta (s - 1)) > 0",
        ));
    }
    let c = (s - 1.0) * x * y;
    let rs1 = x / c.hypot(1.0);
    let r = rs1.powf(1.0 / (s - 1.0));
    let ph = 1.0_f64.atan2(-c);
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::domain(&xy, "recovered radius out of range"));
    }
    Ok([r, ph / (s - 1.0)])
}

/// `(r, theta)` from `R = r^{s-1}/sin(phi)` and `C = cos(phi)/r^{s-1}`, taking
/// `phi` in `(-pi, pi]`.
fn polar_from_rc(rr: f64, cc: f64, s: f64) -> Result<[f64; 2]> {
    if rr == 0.0 || !rr.is_finite() || !cc.is_finite() {
        return Err(Error::OutOfBranch(format!(
            "no polar point with r^(s-1)/sin = {rr}, cos/r^(s-1) = {cc}"
        )));
    }
    let ph = (1.0 / rr).atan2(cc);
    let rs1 = rr * ph.sin();
    let r = rs1.powf(1.0 / (s - 1.0));
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::OutOfBranch(format!("recovered radius {r}")));
    }
    Ok([r, ph / (s - 1.0)])
}

/// `(h1, h2) = (-cot(phi), -r^{s-1}/sin(phi))`.
pub fn bernoulli_hamiltonians(q: [f64; 2], s: f64) -> Result<[f64; 2]> {
    let p = polar(&q, s)?;
    Ok([-p.cos / p.sin, -p.rs1 / p.sin])
}

/// `(h_{z,1}, h_{z,2})` with `h_{z,1} = -(cos(phi)/(z r^{s-1}))(E - 1)`.
pub fn bernoulli_deformed_hamiltonians(q: [f64; 2], s: f64, z: f64) -> Result<[f64; 2]> {
    let p = polar(&q, s)?;
    let (_, x) = exp_factor(&p, z, &q)?;
    Ok([-(p.cos / p.sin) * phi_fn(z * x), -x])
}

/// `[h_{z,1}, h_{z,2}]` as one-copy fields in `(r, theta)`; `z = 0` gives
/// the undeformed pair.
pub fn bernoulli_hamiltonian_fields(s: f64, z: f64) -> [ScalarField; 2] {
    let sm1 = s - 1.0;
    let h1 = ScalarField::new(
        "hb_z1",
        1,
        move |q| Ok(bernoulli_deformed_hamiltonians([q[0], q[1]], s, z)?[0]),
        move |q| {
            let p = polar(q, s)?;
            let (e, x) = exp_factor(&p, z, q)?;
            let c = p.cos / p.rs1;
            let g = x * phi_fn(z * x);
            Ok(vec![
                -((1.0 - s) * p.cos / (p.rs1 * p.r) * g + c * e * sm1 * p.rs1 / (p.r * p.sin)),
                sm1 * (p.sin / p.rs1 * g + e * p.cos * p.cos / (p.sin * p.sin)),
            ])
        },
    );
    let h2 = ScalarField::new(
        "hb_z2",
        1,
        move |q| Ok(bernoulli_hamiltonians([q[0], q[1]], s)?[1]),
        move |q| {
            let p = polar(q, s)?;
            Ok(vec![
                -sm1 * p.rs1 / (p.r * p.sin),
                sm1 * p.rs1 * p.cos / (p.sin * p.sin),
            ])
        },
    );
    [h1, h2]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BernoulliConstant {
    /// Copies (1, 2).
    F2,
    /// Copies (2, 3).
    F2Right,
    F3,
    /// Deformed left constant.
    Fz2,
}

/// `R = r^{s-1}/sin(phi)` and `C = cos(phi)/r^{s-1}` for each copy.
fn rc(qq: &[f64], s: f64) -> Result<Vec<(f64, f64)>> {
    qq.chunks(2)
        .map(|q| {
            let p = polar(q, s)?;
            Ok((p.rs1 / p.sin, p.cos / p.rs1))
        })
        .collect()
}

/// Polar closed forms of the constants on three copies.
pub fn bernoulli_constants(qq: &[f64], s: f64, z: f64, which: BernoulliConstant) -> Result<f64> {
    if qq.len() != 6 {
        return Err(Error::InvalidInput(format!(
            "expected three polar points, got {} coordinates",
            qq.len()
        )));
    }
    let v = rc(qq, s)?;
    let pair = |i: usize, j: usize| (v[i].0 - v[j].0) * (v[i].1 - v[j].1) / (1.0 - s);
    Ok(match which {
        BernoulliConstant::F2 => pair(0, 1),
        BernoulliConstant::F2Right => pair(1, 2),
        BernoulliConstant::F3 => pair(0, 1) + pair(0, 2) + pair(1, 2),
        BernoulliConstant::Fz2 => {
            let (r1, r2) = (v[0].0, v[1].0);
            for a in [z * r1, z * r2] {
                if !(a.abs() <= EXP_ARG_LIMIT) {
                    return Err(Error::domain(qq, "exponent out of range"));
                }
            }
            // (2 - e^{-z R1} - e^{z R2})/z
            let f = r1 * phi_fn(-z * r1) - r2 * phi_fn(z * r2);
            f * (v[0].1 - v[1].1) / (1.0 - s)
        }
    })
}

/// Maps each polar copy to the plane.
pub fn polar_points_to_plane(qq: &[f64], s: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(qq.len());
    for q in qq.chunks(2) {
        out.extend(polar_to_plane([q[0], q[1]], s)?);
    }
    Ok(out)
}

/// Superposition rule for the (deformed) Bernoulli system: the plane rule
/// applied to the images of `q2, q3`, mapped back on the fundamental branch.
pub fn bernoulli_superpose(
    q2: [f64; 2],
    q3: [f64; 2],
    sc: &SuperpositionConstants,
    params: &BernoulliParams,
) -> Result<[f64; 2]> {
    let p2 = polar_to_plane(q2, params.s)?;
    let p3 = polar_to_plane(q3, params.s)?;
    let p1 = deformed::superpose_deformed(p2, p3, sc, params.z)?;
    plane_to_polar(p1, params.s).map_err(|e| Error::OutOfBranch(e.to_string()))
}

/// The undeformed rule in its implicit polar form, solved for
/// `r1^{s-1}/sin(phi1)` and `cos(phi1)/r1^{s-1}`.
pub fn bernoulli_superpose_implicit(
    q2: [f64; 2],
    q3: [f64; 2],
    sc: &SuperpositionConstants,
    s: f64,
) -> Result<[f64; 2]> {
    let v = rc(&[q2[0], q2[1], q3[0], q3[1]], s)?;
    let ((r2, c2), (r3, c3)) = (v[0], v[1]);
    let dc = nonzero_difference(c2, c3, "cos/r^(s-1) of copies 2 and 3")?;
    let dr = nonzero_difference(r2, r3, "r^(s-1)/sin of copies 2 and 3")?;
    let k3 = dr * dc / (1.0 - s);
    sc.check_k3(k3)?;
    let b = discriminant_root(sc.k1, sc.k, k3)?;
    let sg = sc.branch.sign();
    let r1 = r3 + (1.0 - s) * (sc.k - 2.0 * sc.k1 + sg * b) / (2.0 * dc);
    let c1 = c3 + (1.0 - s) * (sc.k - 2.0 * sc.k1 - sg * b) / (2.0 * dr);
    polar_from_rc(r1, c1, s)
}

/// Convenience: `(k1, k)` of the undeformed or deformed rule evaluated on a
/// polar three-copy point.
pub fn bernoulli_rule_constants(qq: &[f64], params: &BernoulliParams) -> Result<(f64, f64)> {
    let xy = polar_points_to_plane(qq, params.s)?;
    if params.z == 0.0 {
        let k1 = bernoulli_constants(qq, params.s, 0.0, BernoulliConstant::F2)?;
        let k = bernoulli_constants(qq, params.s, 0.0, BernoulliConstant::F3)?;
        Ok((k1, k))
    } else {
        Ok((deformed::fz2(&xy, params.z)?, deformed::fz3(&xy, params.z)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oscillator::{self, Branch};
    use crate::symplectic::{
        hamiltonian_vector_field, poisson_bracket, symplectic_jacobian_residual_between,
    };
    use std::f64::consts::FRAC_PI_2;

    fn params(s: f64, a1: f64, a2: f64, z: f64) -> BernoulliParams {
        BernoulliParams::new(
            s,
            CoefficientSpec::constant(a1),
            CoefficientSpec::constant(a2),
            z,
        )
        .unwrap()
    }

    #[test]
    fn rejects_degenerate_exponent() {
        for s in [0.0, 1.0, f64::NAN] {
            assert!(
                BernoulliParams::new(s, CoefficientSpec::zero(), CoefficientSpec::zero(), 0.0)
                    .is_err()
            );
        }
    }

    #[test]
    fn rhs_examples() {
        let p = params(2.0, 0.0, 1.0, 0.0);
        let v = bernoulli_rhs(0.0, [1.0, FRAC_PI_2], &p).unwrap();
        assert!(v[0].abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15);
        let d = params(3.0, 0.7, 0.0, 0.0);
        let q = [1.3, 0.4];
        assert_eq!(bernoulli_rhs(0.0, q, &d).unwrap(), [0.7 * 1.3, 0.0]);
        assert!(bernoulli_rhs(0.0, [-1.0, 0.4], &d).is_err());
    }

    #[test]
    fn deformed_rhs_limits() {
        let q = [0.8, 0.9];
        let undeformed = params(3.0, 0.4, -0.6, 0.0);
        assert_eq!(
            bernoulli_deformed_rhs(0.0, q, &undeformed).unwrap(),
            bernoulli_rhs(0.0, q, &undeformed).unwrap()
        );
        let a = params(3.0, 0.0, -0.6, 0.0);
        let b = params(3.0, 0.0, -0.6, 0.8);
        assert_eq!(
            bernoulli_deformed_rhs(0.0, q, &a).unwrap(),
            bernoulli_deformed_rhs(0.0, q, &b).unwrap()
        );
    }

    #[test]
    fn deformed_rhs_matches_printed_form() {
        let (s, z) = (3.0, 0.45);
        let p = params(s, 0.4, -0.6, z);
        let (r, th) = (0.8_f64, 0.9_f64);
        let ph = th * (s - 1.0);
        let e = (z * r.powf(s - 1.0) / ph.sin()).exp();
        let printed = [
            0.4 * (r * ph.cos().powi(2) * e + ph.sin().powi(3) / (z * r.powf(s - 2.0)) * (e - 1.0))
                - 0.6 * r.powf(s) * ph.cos(),
            0.4 * ph.sin().powi(2) * (e / ph.tan() - ph.cos() / (z * r.powf(s - 1.0)) * (e - 1.0))
                - 0.6 * r.powf(s - 1.0) * ph.sin(),
        ];
        let v = bernoulli_deformed_rhs(0.0, [r, th], &p).unwrap();
        assert!((v[0] - printed[0]).abs() < 1e-13 && (v[1] - printed[1]).abs() < 1e-13);
    }

    #[test]
    fn deformed_rhs_is_hamiltonian() {
        let (s, z) = (2.5, -0.35);
        let p = params(s, 0.4, -0.6, z);
        let [h1, h2] = bernoulli_hamiltonian_fields(s, z);
        let h = ScalarField::linear_combination("h", vec![(0.4, h1), (-0.6, h2)]);
        let x = hamiltonian_vector_field(&h, &bernoulli_weight(s));
        let q = [0.8, 0.9];
        let a = x.eval(0.0, &q).unwrap();
        let b = bernoulli_deformed_rhs(0.0, q, &p).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }

    #[test]
    fn change_of_variables() {
        let xy = polar_to_plane([1.0, FRAC_PI_2], 2.0).unwrap();
        assert!((xy[0] - 1.0).abs() < 1e-15 && xy[1].abs() < 1e-15);
        for s in [3.0, 2.0, 0.5, -1.5] {
            let q = [0.7, 1.1 / (s - 1.0)];
            let back = plane_to_polar(polar_to_plane(q, s).unwrap(), s).unwrap();
            assert!(
                (back[0] - q[0]).abs() < 1e-10 && (back[1] - q[1]).abs() < 1e-10,
                "s = {s}"
            );
            let res = symplectic_jacobian_residual_between(
                |v| Ok(polar_to_plane([v[0], v[1]], s)?.to_vec()),
                &bernoulli_weight(s),
                &SymplecticWeight::Canonical,
                &q,
            )
            .unwrap();
            assert!(res < 1e-7, "s = {s}: {res}");
        }
        assert!(plane_to_polar([-1.0, 0.3], 3.0).is_err());
        assert!(plane_to_polar([0.0, 0.3], 3.0).is_err());
    }

    #[test]
    fn hamiltonians_and_brackets() {
        let s = 3.0;
        let q = [0.9, 0.6];
        let h = bernoulli_hamiltonians(q, s).unwrap();
        let hz = bernoulli_deformed_hamiltonians(q, s, 0.0).unwrap();
        assert!((h[0] - hz[0]).abs() < 1e-15 && h[1] == hz[1]);
        let w = bernoulli_weight(s);
        let [h1, h2] = bernoulli_hamiltonian_fields(s, 0.0);
        let b = poisson_bracket(&h1, &h2, &w, &q).unwrap();
        assert!((b + (s - 1.0) * h2.eval(&q).unwrap()).abs() < 1e-12);
        let z = 0.6;
        let [g1, g2] = bernoulli_hamiltonian_fields(s, z);
        let b = poisson_bracket(&g1, &g2, &w, &q).unwrap();
        let v2 = g2.eval(&q).unwrap();
        assert!((b - (s - 1.0) * ((-z * v2).exp() - 1.0) / z).abs() < 1e-12);
    }

    #[test]
    fn constants_match_plane() {
        let s = 3.0;
        let qq = [0.9, 0.6, 1.2, 0.3, 0.5, 1.1];
        let xy = polar_points_to_plane(&qq, s).unwrap();
        let f2p = oscillator::f2([xy[0], xy[1]], [xy[2], xy[3]]);
        let f2 = bernoulli_constants(&qq, s, 0.0, BernoulliConstant::F2).unwrap();
        assert!((f2 - f2p).abs() < 1e-10);
        let z = 0.4;
        let fz = bernoulli_constants(&qq, s, z, BernoulliConstant::Fz2).unwrap();
        assert!((fz - deformed::fz2(&xy, z).unwrap()).abs() < 1e-10);
        let same = [0.9, 0.6, 0.9, 0.6, 0.5, 1.1];
        assert_eq!(
            bernoulli_constants(&same, s, 0.0, BernoulliConstant::F2).unwrap(),
            0.0
        );
        let f0 = bernoulli_constants(&qq, s, 0.0, BernoulliConstant::Fz2).unwrap();
        assert!((f0 - f2).abs() < 1e-12);
    }

    #[test]
    fn implicit_and_plane_rules_agree() {
        for s in [2.0, 3.0] {
            let p = params(s, 0.0, 0.0, 0.0);
            let qq = [
                0.9,
                0.6 / (s - 1.0),
                1.2,
                0.3 / (s - 1.0),
                0.5,
                1.1 / (s - 1.0),
            ];
            let (k1, k) = bernoulli_rule_constants(&qq, &p).unwrap();
            for b in Branch::both() {
                let sc = SuperpositionConstants::new(k1, k, b);
                let a = bernoulli_superpose([qq[2], qq[3]], [qq[4], qq[5]], &sc, &p);
                let c = bernoulli_superpose_implicit([qq[2], qq[3]], [qq[4], qq[5]], &sc, s);
                if let (Ok(a), Ok(c)) = (a, c) {
                    assert!((a[0] - c[0]).abs() < 1e-10 && (a[1] - c[1]).abs() < 1e-10);
                }
            }
            let cal = oscillator::calibrate_branch(
                |b| {
                    bernoulli_superpose_implicit(
                        [qq[2], qq[3]],
                        [qq[4], qq[5]],
                        &SuperpositionConstants::new(k1, k, b),
                        s,
                    )
                },
                [qq[0], qq[1]],
            )
            .unwrap();
            assert!(cal.error < 1e-12);
        }
    }

    #[test]
    fn analytic_gradients_match() {
        for (s, z) in [(3.0, 0.0), (3.0, 0.7), (0.5, -0.4), (-2.0, 0.2)] {
            for f in bernoulli_hamiltonian_fields(s, z) {
                let e = f.gradient_error(&[0.9, 0.6 / (s - 1.0)]).unwrap();
                assert!(e < 1e-6, "{} s = {s} z = {z}: {e}", f.name());
            }
        }
    }

    #[test]
    fn pullback_matches_polar_fields() {
        let p = params(3.0, 0.4, -0.6, 0.0);
        let q = [0.9, 0.6, 1.2, 0.3, 0.5, 1.1];
        let a = bernoulli_prolonged_field(&p).eval(0.3, &q).unwrap();
        let b = bernoulli_copies_field(&p, 3).eval(0.3, &q).unwrap();
        for i in 0..6 {
            assert!((a[i] - b[i]).abs() < 1e-12, "{i}: {} vs {}", a[i], b[i]);
        }
        let pz = params(3.0, 0.4, -0.6, 0.5);
        let one = pullback_field(&deformed::hz_field(0.5, &pz.plane_coefficients()), 3.0)
            .eval(0.3, &q[..2])
            .unwrap();
        let direct = bernoulli_deformed_rhs(0.3, [q[0], q[1]], &pz).unwrap();
        assert!((one[0] - direct[0]).abs() < 1e-12 && (one[1] - direct[1]).abs() < 1e-12);
    }
}
