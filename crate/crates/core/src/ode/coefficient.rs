use serde::{Deserialize, Serialize};

/// One primitive of a time-dependent coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Term {
    /// `c`
    Constant { c: f64 },
    /// `c t^k`
    Monomial { c: f64, k: u32 },
    /// `c sin(omega t + phase)`
    Sinusoid {
        c: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `c e^{lambda t}`
    Exponential { c: f64, lambda: f64 },
}

impl Term {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Term::Constant { c } => c,
            Term::Monomial { c, k } => c * t.powi(k as i32),
            Term::Sinusoid { c, omega, phase } => c * (omega * t + phase).sin(),
            Term::Exponential { c, lambda } => c * (lambda * t).exp(),
        }
    }
}

/// A coefficient `b(t)` given as a sum of primitive terms. The empty sum is
/// the zero function.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoefficientSpec {
    pub terms: Vec<Term>,
}

impl CoefficientSpec {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::zero().with(Term::Constant { c })
    }

    pub fn monomial(c: f64, k: u32) -> Self {
        Self::zero().with(Term::Monomial { c, k })
    }

    pub fn sinusoid(c: f64, omega: f64, phase: f64) -> Self {
        Self::zero().with(Term::Sinusoid { c, omega, phase })
    }

    pub fn exponential(c: f64, lambda: f64) -> Self {
        Self::zero().with(Term::Exponential { c, lambda })
    }

    pub fn with(mut self, term: Term) -> Self {
        self.terms.push(term);
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Every term multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| match *t {
                Term::Constant { c } => Term::Constant { c: c * factor },
                Term::Monomial { c, k } => Term::Monomial { c: c * factor, k },
                Term::Sinusoid { c, omega, phase } => Term::Sinusoid {
                    c: c * factor,
                    omega,
                    phase,
                },
                Term::Exponential { c, lambda } => Term::Exponential {
                    c: c * factor,
                    lambda,
                },
            })
            .collect();
        Self { terms }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.eval(t)).sum()
    }
}

/// Free-function form of [`CoefficientSpec::eval`].
pub fn eval_coefficient(spec: &CoefficientSpec, t: f64) -> f64 {
    spec.eval(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(eval_coefficient(&CoefficientSpec::constant(1.0), 7.0), 1.0);
        assert_eq!(eval_coefficient(&CoefficientSpec::zero(), 3.3), 0.0);
        let spec = CoefficientSpec::monomial(2.0, 1).with(Term::Sinusoid {
            c: 1.0,
            omega: 1.0,
            phase: 0.0,
        });
        assert_eq!(spec.eval(0.0), 0.0);
        assert_eq!(CoefficientSpec::exponential(3.0, 0.0).eval(5.0), 3.0);
    }

    #[test]
    fn json_shape() {
        let spec = CoefficientSpec::constant(1.0).with(Term::Monomial { c: 0.5, k: 2 });
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            s,
            r#"[{"constant":{"c":1.0}},{"monomial":{"c":0.5,"k":2}}]"#
        );
        let back: CoefficientSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
        assert!(
            serde_json::from_str::<CoefficientSpec>(r#"[{"constant":{"c":1,"d":2}}]"#).is_err()
        );
    }

    #[test]
    fn scaled_scales_every_term() {
        let spec = CoefficientSpec::sinusoid(1.0, 2.0, 0.3).with(Term::Constant { c: 4.0 });
        let t = 0.9;
        assert!((spec.scaled(-2.5).eval(t) + 2.5 * spec.eval(t)).abs() < 1e-14);
    }
}
