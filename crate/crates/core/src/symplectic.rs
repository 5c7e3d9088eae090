//! Symplectic structure on products of the plane.
//!
//! Phase space is `(R^2)^n` with coordinates laid out `(x1, y1, ..., xn, yn)`.
//! The symplectic form is `sum_j F_j dx_j ^ dy_j` where the per-copy density
//! `F_j` depends only on `(x_j, y_j)`; `F_j = 1` is the canonical case.
//!
//! Scalar fields and vector fields are evaluators: closures with analytic
//! gradients supplied by the caller. Finite differences are only used for
//! Jacobians (Lie brackets, canonicality) and for checking gradients.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A point of `(R^2)^n`, stored as `(x1, y1, ..., xn, yn)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    coords: Vec<f64>,
}

impl PhasePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len() % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "phase point needs an even, nonzero number of coordinates (got {})",
                coords.len()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "coordinate {i} is not finite: {}",
                coords[i]
            )));
        }
        Ok(Self { coords })
    }

    pub fn from_copies(copies: &[[f64; 2]]) -> Result<Self> {
        Self::new(copies.iter().flat_map(|c| c.iter().copied()).collect())
    }

    /// Number of plane copies.
    pub fn n(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn copy(&self, j: usize) -> [f64; 2] {
        [self.coords[2 * j], self.coords[2 * j + 1]]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

impl Deref for PhasePoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.coords
    }
}

type EvalFn = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync;

/// A smooth real function on `(R^2)^n` together with its analytic gradient.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    arity: usize,
    eval: Arc<EvalFn>,
    grad: Arc<GradFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .finish()
    }
}

impl ScalarField {
    pub fn new<E, G>(name: impl Into<String>, arity: usize, eval: E, grad: G) -> Self
    where
        E: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
        G: Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            arity,
            eval: Arc::new(eval),
            grad: Arc::new(grad),
        }
    }

    /// The constant function `value` on `(R^2)^arity`.
    pub fn constant(name: impl Into<String>, arity: usize, value: f64) -> Self {
        Self::new(
            name,
            arity,
            move |_| Ok(value),
            move |_| Ok(vec![0.0; 2 * arity]),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    fn check_len(&self, p: &[f64]) -> Result<()> {
        if p.len() != 2 * self.arity {
            return Err(Error::InvalidInput(format!(
                "{} expects {} coordinates, got {}",
                self.name,
                2 * self.arity,
                p.len()
            )));
        }
        Ok(())
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        self.check_len(p)?;
        let v = (self.eval)(p)?;
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what: self.name.clone(),
                point: p.to_vec(),
            });
        }
        Ok(v)
    }

    pub fn grad(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_len(p)?;
        let g = (self.grad)(p)?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: format!("grad {}", self.name),
                point: p.to_vec(),
            });
        }
        Ok(g)
    }

    /// Central-difference gradient of the evaluator.
    pub fn fd_grad(&self, p: &[f64]) -> Result<Vec<f64>> {
        let mut q = p.to_vec();
        let mut out = Vec::with_capacity(p.len());
        for i in 0..p.len() {
            let h = fd_step(p[i]);
            q[i] = p[i] + h;
            let fp = self.eval(&q)?;
            q[i] = p[i] - h;
            let fm = self.eval(&q)?;
            q[i] = p[i];
            out.push((fp - fm) / (2.0 * h));
        }
        Ok(out)
    }

    /// Largest discrepancy between analytic and finite-difference gradient,
    /// relative to `max(1, |grad|_inf)`.
    pub fn gradient_error(&self, p: &[f64]) -> Result<f64> {
        let g = self.grad(p)?;
        let fd = self.fd_grad(p)?;
        let scale = g.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        Ok(g.iter()
            .zip(&fd)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale)
    }

    /// Pointwise linear combination `sum c_i f_i`.
    pub fn linear_combination(name: impl Into<String>, terms: Vec<(f64, ScalarField)>) -> Self {
        let arity = terms.first().map(|(_, f)| f.arity).unwrap_or(1);
        let terms = Arc::new(terms);
        let te = Arc::clone(&terms);
        Self::new(
            name,
            arity,
            move |p| te.iter().map(|(c, f)| Ok(c * f.eval(p)?)).sum(),
            move |p| {
                let mut g = vec![0.0; p.len()];
                for (c, f) in terms.iter() {
                    for (gi, fi) in g.iter_mut().zip(f.grad(p)?) {
                        *gi += c * fi;
                    }
                }
                Ok(g)
            },
        )
    }
}

type WeightFn = dyn Fn(f64, f64) -> Result<f64> + Send + Sync;

/// Per-copy density `F(x, y)` of `omega = F dx ^ dy`.
#[derive(Clone)]
pub enum SymplecticWeight {
    Canonical,
    Diagonal(Arc<WeightFn>),
}

impl fmt::Debug for SymplecticWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymplecticWeight::Canonical => write!(f, "Canonical"),
            SymplecticWeight::Diagonal(_) => write!(f, "Diagonal(..)"),
        }
    }
}

impl SymplecticWeight {
    pub fn diagonal<F>(density: F) -> Self
    where
        F: Fn(f64, f64) -> Result<f64> + Send + Sync + 'static,
    {
        SymplecticWeight::Diagonal(Arc::new(density))
    }

    pub fn is_canonical(&self) -> bool {
        matches!(self, SymplecticWeight::Canonical)
    }

    /// Density at one copy. Nonzero and finite on the domain; a zero or
    /// non-finite density is a domain violation.
    pub fn density(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            SymplecticWeight::Canonical => Ok(1.0),
            SymplecticWeight::Diagonal(f) => {
                let w = f(x, y)?;
                if !w.is_finite() || w == 0.0 {
                    return Err(Error::domain(
                        &[x, y],
                        format!("symplectic density degenerate ({w})"),
                    ));
                }
                Ok(w)
            }
        }
    }
}

type FieldFn = dyn Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync;

/// A (possibly time-dependent) vector field on `(R^2)^arity`.
#[derive(Clone)]
pub struct VectorField {
    arity: usize,
    f: Arc<FieldFn>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("arity", &self.arity)
            .finish()
    }
}

impl VectorField {
    pub fn new<F>(arity: usize, f: F) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync + 'static,
    {
        Self {
            arity,
            f: Arc::new(f),
        }
    }

    pub fn zero(arity: usize) -> Self {
        Self::new(arity, |_, _, out| {
            out.fill(0.0);
            Ok(())
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        2 * self.arity
    }

    /// Writes the velocity at `(t, x)` into `out`. Non-finite output is
    /// reported as a domain violation.
    pub fn eval_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.dim() || out.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "vector field of dimension {} evaluated with {} coordinates",
                self.dim(),
                x.len()
            )));
        }
        (self.f)(t, x, out)?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(x, format!("non-finite velocity at t = {t}")));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, x, &mut out)?;
        Ok(out)
    }

    /// The field `s -> -X(t_end - s, x)`, whose forward flow retraces the
    /// backward flow of `self` starting at `t_end`.
    pub fn time_reversed(&self, t_end: f64) -> VectorField {
        let inner = self.clone();
        VectorField::new(self.arity, move |s, x, out| {
            inner.eval_into(t_end - s, x, out)?;
            out.iter_mut().for_each(|v| *v = -*v);
            Ok(())
        })
    }

    /// Pointwise `a X + b Y`.
    pub fn combine(a: f64, x: &VectorField, b: f64, y: &VectorField) -> VectorField {
        let (x, y) = (x.clone(), y.clone());
        let dim = x.dim();
        VectorField::new(x.arity, move |t, p, out| {
            let mut tmp = vec![0.0; dim];
            x.eval_into(t, p, out)?;
            y.eval_into(t, p, &mut tmp)?;
            for (o, v) in out.iter_mut().zip(&tmp) {
                *o = a * *o + b * v;
            }
            Ok(())
        })
    }
}

/// Central-difference step `cbrt(eps) * max(1, |x|)`.
pub fn fd_step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Central-difference Jacobian of `map` at `p`, row-major
/// (`J[i][j] = d map_i / d p_j`).
pub fn jacobian_fd<F>(map: F, p: &[f64]) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = p.len();
    let mut q = p.to_vec();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let h = fd_step(p[j]);
        q[j] = p[j] + h;
        let fp = map(&q)?;
        q[j] = p[j] - h;
        let fm = map(&q)?;
        q[j] = p[j];
        cols.push(
            fp.iter()
                .zip(&fm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect::<Vec<_>>(),
        );
    }
    let m = cols.first().map_or(0, |c| c.len());
    let jac: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..n).map(|j| cols[j][i]).collect())
        .collect();
    if jac.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "finite-difference Jacobian".into(),
            point: p.to_vec(),
        });
    }
    Ok(jac)
}

/// The Hamiltonian vector field `X_h` defined by `i_X omega = dh`: per copy
/// `(dh/dy_j, -dh/dx_j) / F_j`.
pub fn hamiltonian_vector_field(h: &ScalarField, w: &SymplecticWeight) -> VectorField {
    let (h, w) = (h.clone(), w.clone());
    VectorField::new(h.arity(), move |_, p, out| {
        let g = h.grad(p)?;
        for j in 0..p.len() / 2 {
            let f = w.density(p[2 * j], p[2 * j + 1])?;
            out[2 * j] = g[2 * j + 1] / f;
            out[2 * j + 1] = -g[2 * j] / f;
        }
        Ok(())
    })
}

/// `{f, g} = sum_j (df/dx_j dg/dy_j - df/dy_j dg/dx_j) / F_j`.
pub fn poisson_bracket(
    f: &ScalarField,
    g: &ScalarField,
    w: &SymplecticWeight,
    p: &[f64],
) -> Result<f64> {
    if f.arity() != g.arity() {
        return Err(Error::InvalidInput(format!(
            "bracket of fields with arities {} and {}",
            f.arity(),
            g.arity()
        )));
    }
    let gf = f.grad(p)?;
    let gg = g.grad(p)?;
    let mut acc = 0.0;
    for j in 0..p.len() / 2 {
        let d = w.density(p[2 * j], p[2 * j + 1])?;
        acc += (gf[2 * j] * gg[2 * j + 1] - gf[2 * j + 1] * gg[2 * j]) / d;
    }
    Ok(acc)
}

/// Lie bracket `[X, Y] = (DY) X - (DX) Y` at `(t, p)` with finite-difference
/// Jacobians.
pub fn lie_bracket(x: &VectorField, y: &VectorField, t: f64, p: &[f64]) -> Result<Vec<f64>> {
    if x.arity() != y.arity() {
        return Err(Error::InvalidInput(
            "Lie bracket of fields with different arity".into(),
        ));
    }
    let xv = x.eval(t, p)?;
    let yv = y.eval(t, p)?;
    let dx = jacobian_fd(|q| x.eval(t, q), p)?;
    let dy = jacobian_fd(|q| y.eval(t, q), p)?;
    Ok((0..p.len())
        .map(|i| {
            (0..p.len())
                .map(|j| dy[i][j] * xv[j] - dx[i][j] * yv[j])
                .sum()
        })
        .collect())
}

/// Max-norm of `J^T Omega(T(p)) J - Omega(p)`, with `J` the
/// finite-difference Jacobian of `map`, `Omega(p)` built from `source` and
/// `Omega(T(p))` from `target`. Zero (to discretisation error) iff `map`
/// carries `source` onto `target` at `p`.
pub fn symplectic_jacobian_residual_between<F>(
    map: F,
    source: &SymplecticWeight,
    target: &SymplecticWeight,
    p: &[f64],
) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let image = map(p)?;
    if image.len() != p.len() {
        return Err(Error::InvalidInput("map changes dimension".into()));
    }
    let jac = jacobian_fd(&map, p)?;
    let n = p.len();
    let omega_src = omega_matrix(source, p)?;
    let omega_dst = omega_matrix(target, &image)?;
    let mut worst = 0.0_f64;
    for a in 0..n {
        for b in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += jac[i][a] * omega_dst[i][j] * jac[j][b];
                }
            }
            worst = worst.max((s - omega_src[a][b]).abs());
        }
    }
    Ok(worst)
}

/// `symplectic_jacobian_residual_between` with the same weight on both sides.
pub fn symplectic_jacobian_residual<F>(map: F, w: &SymplecticWeight, p: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    symplectic_jacobian_residual_between(map, w, w, p)
}

fn omega_matrix(w: &SymplecticWeight, p: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = p.len();
    let mut m = vec![vec![0.0; n]; n];
    for j in 0..n / 2 {
        let d = w.density(p[2 * j], p[2 * j + 1])?;
        m[2 * j][2 * j + 1] = d;
        m[2 * j + 1][2 * j] = -d;
    }
    Ok(m)
}
