//! Dormand-Prince 5(4) with PI step control and 4th-order continuous
//! extension.

use serde::{Deserialize, Serialize};

use super::trajectory::{DenseSegment, Trajectory};
use crate::error::{Error, IntegrationFailureKind, Result};
use crate::symplectic::VectorField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_tol")]
    pub abs_tol: f64,
    /// Largest step; non-finite means unbounded and is written as `null`.
    #[serde(default = "default_max_step", with = "unbounded")]
    pub max_step: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_tol() -> f64 {
    1e-10
}
fn default_max_step() -> f64 {
    f64::INFINITY
}
mod unbounded {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        v.is_finite().then_some(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

fn default_max_steps() -> usize {
    1_000_000
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: default_tol(),
            abs_tol: default_tol(),
            max_step: default_max_step(),
            max_steps: default_max_steps(),
        }
    }
}

impl IntegratorConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rel_tol: tol,
            abs_tol: tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerances must be positive (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidInput("max_step must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be positive".into()));
        }
        Ok(())
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
        }
    }
}

fn combo(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..y.len() {
        let mut s = 0.0;
        for (c, k) in terms {
            s += c * k[i];
        }
        out[i] = y[i] + h * s;
    }
}

/// One trial step from `(t, y)` with size `h`. On success `k[0]` holds
/// `f(t, y)` (unchanged) and `k[6]` holds `f(t + h, y_new)`.
fn try_step(
    field: &VectorField,
    t: f64,
    y: &[f64],
    h: f64,
    st: &mut Stages,
    y_new: &mut [f64],
) -> Result<()> {
    let Stages { k, tmp } = st;
    let (k1, rest) = k.split_first_mut().expect("7 stages");
    let [k2, k3, k4, k5, k6, k7] = rest else {
        unreachable!()
    };
    combo(tmp, y, h, &[(A21, k1)]);
    field.eval_into(t + C2 * h, tmp, k2)?;
    combo(tmp, y, h, &[(A31, k1), (A32, k2)]);
    field.eval_into(t + C3 * h, tmp, k3)?;
    combo(tmp, y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
    field.eval_into(t + C4 * h, tmp, k4)?;
    combo(tmp, y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
    field.eval_into(t + C5 * h, tmp, k5)?;
    combo(
        tmp,
        y,
        h,
        &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
    );
    field.eval_into(t + h, tmp, k6)?;
    combo(
        y_new,
        y,
        h,
        &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)],
    );
    field.eval_into(t + h, y_new, k7)?;
    Ok(())
}

fn error_norm(y: &[f64], y_new: &[f64], h: f64, k: &[Vec<f64>; 7], cfg: &IntegratorConfig) -> f64 {
    let n = y.len();
    let mut acc = 0.0;
    for i in 0..n {
        let e = h
            * (E1 * k[0][i]
                + E3 * k[2][i]
                + E4 * k[3][i]
                + E5 * k[4][i]
                + E6 * k[5][i]
                + E7 * k[6][i]);
        let sk = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y_new[i].abs());
        acc += (e / sk).powi(2);
    }
    (acc / n as f64).sqrt()
}

/// Starting step size (Hairer, Norsett & Wanner, II.4).
fn initial_step(
    field: &VectorField,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    h_max: f64,
    cfg: &IntegratorConfig,
) -> f64 {
    let n = y0.len() as f64;
    let sk: Vec<f64> = y0
        .iter()
        .map(|v| cfg.abs_tol + cfg.rel_tol * v.abs())
        .collect();
    let d0 = (y0
        .iter()
        .zip(&sk)
        .map(|(v, s)| (v / s).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let d1 = (f0
        .iter()
        .zip(&sk)
        .map(|(v, s)| (v / s).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(h_max);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let d2 = match field.eval(t0 + h0, &y1) {
        Ok(f1) => {
            (f1.iter()
                .zip(f0)
                .zip(&sk)
                .map(|((a, b), s)| ((a - b) / s).powi(2))
                .sum::<f64>()
                / n)
                .sqrt()
                / h0
        }
        Err(_) => return h0 * 0.01,
    };
    let m = d1.max(d2);
    let h1 = if m <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / m).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(h_max)
}

/// Integrates `dx/dt = field(t, x)` from `t0` to `t1 > t0`.
pub fn integrate(
    field: &VectorField,
    x0: &[f64],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
        return Err(Error::InvalidInput(format!(
            "integration span must satisfy t1 > t0 (got [{t0}, {t1}])"
        )));
    }
    if x0.len() != field.dim() {
        return Err(Error::InvalidInput(format!(
            "initial state has {} coordinates, field expects {}",
            x0.len(),
            field.dim()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("initial state is not finite".into()));
    }

    let n = x0.len();
    let h_max = cfg.max_step.min(t1 - t0);
    let mut st = Stages::new(n);
    field
        .eval_into(t0, x0, &mut st.k[0])
        .map_err(|e| domain_exit(t0, x0, e))?;

    let mut t = t0;
    let mut y = x0.to_vec();
    let mut y_new = vec![0.0; n];
    let mut h = initial_step(field, t0, x0, &st.k[0].clone(), h_max, cfg);
    let mut fac_old = 1e-4_f64;
    let mut last_rejected = false;
    let mut last_domain_error: Option<Error> = None;

    let mut traj = Trajectory::start(t0, x0.to_vec());
    let mut steps = 0usize;

    while t < t1 {
        if steps >= cfg.max_steps {
            return Err(Error::Integration {
                t,
                state: y,
                kind: IntegrationFailureKind::StepLimit {
                    max_steps: cfg.max_steps,
                },
            });
        }
        let h_min = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if h < h_min {
            return Err(match last_domain_error {
                Some(e) => domain_exit(t, &y, e),
                None => Error::Integration {
                    t,
                    state: y,
                    kind: IntegrationFailureKind::StepUnderflow { step: h },
                },
            });
        }
        let last = t + h >= t1 || t + 1.01 * h >= t1;
        let h_step = if last { t1 - t } else { h };
        steps += 1;

        if let Err(e) = try_step(field, t, &y, h_step, &mut st, &mut y_new) {
            // A stage left the field's domain: retry with a smaller step.
            last_domain_error = Some(e);
            traj.rejected += 1;
            h = 0.25 * h_step;
            last_rejected = true;
            continue;
        }
        let err = error_norm(&y, &y_new, h_step, &st.k, cfg);
        if !err.is_finite() {
            traj.rejected += 1;
            h = 0.25 * h_step;
            last_rejected = true;
            continue;
        }

        let fac11 = err.powf(0.2 - BETA * 0.75);
        if err <= 1.0 {
            let mut fac = fac11 / fac_old.powf(BETA);
            fac = (1.0 / FAC_MAX).max((1.0 / FAC_MIN).min(fac / SAFETY));
            let mut h_next = h_step / fac;
            fac_old = err.max(1e-4);
            if last_rejected {
                h_next = h_next.min(h_step);
            }
            last_rejected = false;
            last_domain_error = None;

            let t_new = if last { t1 } else { t + h_step };
            let seg = dense_segment(t, h_step, &y, &y_new, &st.k);
            traj.push(t_new, y_new.clone(), seg);

            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            let (first, rest) = st.k.split_first_mut().expect("7 stages");
            first.copy_from_slice(&rest[5]);
            h = h_next.min(h_max);
        } else {
            traj.rejected += 1;
            h = h_step / (1.0 / FAC_MIN).min(fac11 / SAFETY);
            last_rejected = true;
        }
    }
    Ok(traj)
}

fn domain_exit(t: f64, y: &[f64], e: Error) -> Error {
    Error::Integration {
        t,
        state: y.to_vec(),
        kind: IntegrationFailureKind::DomainExit {
            reason: e.to_string(),
        },
    }
}

fn dense_segment(t: f64, h: f64, y: &[f64], y_new: &[f64], k: &[Vec<f64>; 7]) -> DenseSegment {
    let n = y.len();
    let mut c = [
        y.to_vec(),
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    ];
    for i in 0..n {
        let ydiff = y_new[i] - y[i];
        let bspl = h * k[0][i] - ydiff;
        c[1][i] = ydiff;
        c[2][i] = bspl;
        c[3][i] = ydiff - h * k[6][i] - bspl;
        c[4][i] = h
            * (D1 * k[0][i]
                + D3 * k[2][i]
                + D4 * k[3][i]
                + D5 * k[4][i]
                + D6 * k[5][i]
                + D7 * k[6][i]);
    }
    DenseSegment {
        t0: t,
        h,
        coeffs: c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn linear_x() -> VectorField {
        // dx/dt = 1, dy/dt = 0
        VectorField::new(1, |_, _, o| {
            o[0] = 1.0;
            o[1] = 0.0;
            Ok(())
        })
    }

    #[test]
    fn zero_field_gives_constant_trajectory() {
        let tr = integrate(
            &VectorField::zero(1),
            &[0.3, -2.0],
            0.0,
            4.0,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(tr.final_state(), &[0.3, -2.0]);
        assert_eq!(tr.sample(1.7).unwrap(), vec![0.3, -2.0]);
    }

    #[test]
    fn linear_drift_reaches_endpoint() {
        let tr = integrate(&linear_x(), &[0.0, 0.0], 0.0, 2.0, &Default::default()).unwrap();
        let end = tr.final_state();
        assert!((end[0] - 2.0).abs() < 1e-9 && end[1].abs() < 1e-9);
        assert_eq!(*tr.times().last().unwrap(), 2.0);
        let mid = tr.sample(1.0).unwrap();
        assert!((mid[0] - 1.0).abs() < 1e-9 && mid[1].abs() < 1e-9);
    }

    #[test]
    fn exponential_growth_matches_closed_form() {
        // dx/dt = 1 + x, x(0) = 0 => x(1) = e - 1
        let f = VectorField::new(1, |_, p, o| {
            o[0] = 1.0 + p[0];
            o[1] = -p[1];
            Ok(())
        });
        let tr = integrate(&f, &[0.0, 0.0], 0.0, 1.0, &Default::default()).unwrap();
        assert!((tr.final_state()[0] - (std::f64::consts::E - 1.0)).abs() < 1e-8);
    }

    #[test]
    fn stored_nodes_are_reproduced_exactly() {
        let f = VectorField::new(1, |t, p, o| {
            o[0] = t.cos() * p[1];
            o[1] = -p[0];
            Ok(())
        });
        let tr = integrate(&f, &[1.0, 0.5], 0.0, 3.0, &Default::default()).unwrap();
        for (t, s) in tr.times().iter().zip(tr.states()) {
            assert_eq!(&tr.sample(*t).unwrap(), s);
        }
        assert!(matches!(tr.sample(3.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(tr.sample(-0.1), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn dense_output_is_accurate_between_nodes() {
        // harmonic oscillator x = cos t, y = -sin t
        let f = VectorField::new(1, |_, p, o| {
            o[0] = p[1];
            o[1] = -p[0];
            Ok(())
        });
        let tr = integrate(&f, &[1.0, 0.0], 0.0, 6.0, &Default::default()).unwrap();
        for i in 0..=120 {
            let t = 0.05 * i as f64;
            let s = tr.sample(t).unwrap();
            assert!((s[0] - t.cos()).abs() < 1e-8, "t = {t}");
            assert!((s[1] + t.sin()).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn step_limit_is_reported() {
        let f = VectorField::new(1, |t, _, o| {
            o[0] = (50.0 * t).sin();
            o[1] = 0.0;
            Ok(())
        });
        let cfg = IntegratorConfig {
            max_steps: 5,
            ..Default::default()
        };
        match integrate(&f, &[0.0, 0.0], 0.0, 10.0, &cfg) {
            Err(Error::Integration {
                kind: IntegrationFailureKind::StepLimit { max_steps: 5 },
                t,
                ..
            }) => assert!(t < 10.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn domain_exit_is_reported_with_boundary() {
        // dx/dt = 1 with a wall at x = 1
        let f = VectorField::new(1, |_, p, o| {
            if p[0] >= 1.0 {
                return Err(Error::Domain {
                    point: p.to_vec(),
                    reason: "wall".into(),
                });
            }
            o[0] = 1.0;
            o[1] = 0.0;
            Ok(())
        });
        match integrate(&f, &[0.0, 0.0], 0.0, 2.0, &Default::default()) {
            Err(Error::Integration {
                kind: IntegrationFailureKind::DomainExit { reason },
                t,
                ..
            }) => {
                assert!(reason.contains("wall"));
                assert!((t - 1.0).abs() < 1e-6, "stopped at {t}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_span_and_config() {
        let f = linear_x();
        assert!(integrate(&f, &[0.0, 0.0], 1.0, 1.0, &Default::default()).is_err());
        assert!(integrate(&f, &[0.0], 0.0, 1.0, &Default::default()).is_err());
        let cfg = IntegratorConfig {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(integrate(&f, &[0.0, 0.0], 0.0, 1.0, &cfg).is_err());
    }

    #[test]
    fn deterministic() {
        let f = VectorField::new(1, |t, p, o| {
            o[0] = t.sin() + p[1] * p[0];
            o[1] = -p[0];
            Ok(())
        });
        let a = integrate(&f, &[0.2, 0.1], 0.0, 2.0, &Default::default()).unwrap();
        let b = integrate(&f, &[0.2, 0.1], 0.0, 2.0, &Default::default()).unwrap();
        assert_eq!(a.times(), b.times());
        assert_eq!(a.states(), b.states());
    }
}
