use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::report::{CheckReport, Metadata, Tally};
use super::sampling::{rng, SampleBox};
use crate::bernoulli::{bernoulli_hamiltonian_fields, bernoulli_weight};
use crate::deformed::{self, phi};
use crate::error::{Error, Result};
use crate::oscillator::{h4_constant_fields, h4_diagonal_fields, h4_hamiltonian_fields};
use crate::symplectic::{
    hamiltonian_vector_field, lie_bracket, poisson_bracket, ScalarField, SymplecticWeight,
};
use crate::twist::twisted_h2_fields;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BracketTable {
    H4,
    H4Deformed,
    H4ProlongedDeformed,
    B2,
    B2Deformed,
    Bernoulli,
    BernoulliDeformed,
}

impl BracketTable {
    pub const ALL: [BracketTable; 7] = [
        BracketTable::H4,
        BracketTable::H4Deformed,
        BracketTable::H4ProlongedDeformed,
        BracketTable::B2,
        BracketTable::B2Deformed,
        BracketTable::Bernoulli,
        BracketTable::BernoulliDeformed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BracketTable::H4 => "h4",
            BracketTable::H4Deformed => "h4-deformed",
            BracketTable::H4ProlongedDeformed => "h4-prolonged-deformed",
            BracketTable::B2 => "b2",
            BracketTable::B2Deformed => "b2-deformed",
            BracketTable::Bernoulli => "bernoulli",
            BracketTable::BernoulliDeformed => "bernoulli-deformed",
        }
    }

    pub fn is_deformed(self) -> bool {
        matches!(
            self,
            BracketTable::H4Deformed
                | BracketTable::H4ProlongedDeformed
                | BracketTable::B2Deformed
                | BracketTable::BernoulliDeformed
        )
    }

    pub fn is_bernoulli(self) -> bool {
        matches!(
            self,
            BracketTable::Bernoulli | BracketTable::BernoulliDeformed
        )
    }
}

impl fmt::Display for BracketTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BracketTable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        BracketTable::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown bracket table {s:?}")))
    }
}

type Rhs = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;

/// `{fields[f], fields[g]} = rhs(values of fields)`.
#[derive(Clone)]
pub struct Relation {
    pub label: String,
    pub f: usize,
    pub g: usize,
    pub rhs: Rhs,
}

/// Everything needed to evaluate one bracket table.
#[derive(Clone)]
pub struct BracketSetup {
    pub fields: Vec<ScalarField>,
    pub weight: SymplecticWeight,
    pub relations: Vec<Relation>,
    pub sample_box: SampleBox,
}

impl BracketSetup {
    /// The same table with the sign of the first relation flipped.
    pub fn corrupted(mut self) -> Self {
        let r = self.relations[0].rhs.clone();
        self.relations[0].rhs = Arc::new(move |h| Ok(-r(h)?));
        self.relations[0].label = format!("corrupted {}", self.relations[0].label);
        self
    }
}

fn rel<F>(label: &str, f: usize, g: usize, rhs: F) -> Relation
where
    F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
{
    Relation {
        label: label.to_string(),
        f,
        g,
        rhs: Arc::new(rhs),
    }
}

/// `h0` commutes with every other generator.
fn central(relations: &mut Vec<Relation>, h0: usize, others: &[usize]) {
    for &i in others {
        relations.push(rel("{h0,hi} = 0", h0, i, |_| Ok(0.0)));
    }
}

/// `{h1,h2} = e^{-z h2} h0`, `{h1,h3} = -h1`, `{h2,h3} = (1 - e^{-z h2})/z`.
fn deformed_h4_relations(z: f64) -> Vec<Relation> {
    let mut r = vec![
        rel("{h1,h2} = exp(-z h2) h0", 0, 1, move |h| {
            Ok((-z * h[1]).exp() * h[3])
        }),
        rel("{h1,h3} = -h1", 0, 2, |h| Ok(-h[0])),
        rel("{h2,h3} = (1 - exp(-z h2))/z", 1, 2, move |h| {
            Ok(h[1] * phi(-z * h[1]))
        }),
    ];
    central(&mut r, 3, &[0, 1, 2]);
    r
}

/// Fields, weight, relations and sampling box of `table`.
pub fn bracket_setup(table: BracketTable, z: f64, s: f64) -> BracketSetup {
    let plane = |n| SampleBox::plane(n, 2.0);
    match table {
        BracketTable::H4 => {
            let mut relations = vec![
                rel("{h1,h2} = h0", 0, 1, |h| Ok(h[3])),
                rel("{h1,h3} = -h1", 0, 2, |h| Ok(-h[0])),
                rel("{h2,h3} = h2", 1, 2, |h| Ok(h[1])),
            ];
            central(&mut relations, 3, &[0, 1, 2]);
            BracketSetup {
                fields: h4_hamiltonian_fields().to_vec(),
                weight: SymplecticWeight::Canonical,
                relations,
                sample_box: plane(1),
            }
        }
        BracketTable::H4Deformed => BracketSetup {
            fields: deformed::hz_hamiltonian_fields(z).to_vec(),
            weight: SymplecticWeight::Canonical,
            relations: deformed_h4_relations(z),
            sample_box: plane(1),
        },
        BracketTable::H4ProlongedDeformed => BracketSetup {
            fields: deformed::prolonged_hamiltonian_fields(z).to_vec(),
            weight: SymplecticWeight::Canonical,
            relations: deformed_h4_relations(z),
            sample_box: plane(3),
        },
        BracketTable::B2 => BracketSetup {
            fields: h4_hamiltonian_fields()[1..3].to_vec(),
            weight: SymplecticWeight::Canonical,
            relations: vec![rel("{h2,h3} = h2", 0, 1, |h| Ok(h[0]))],
            sample_box: plane(1),
        },
        BracketTable::B2Deformed => BracketSetup {
            fields: deformed::hz_hamiltonian_fields(z)[1..3].to_vec(),
            weight: SymplecticWeight::Canonical,
            relations: vec![rel("{h2,h3} = (1 - exp(-z h2))/z", 0, 1, move |h| {
                Ok(h[0] * phi(-z * h[0]))
            })],
            sample_box: plane(1),
        },
        BracketTable::Bernoulli => BracketSetup {
            fields: bernoulli_hamiltonian_fields(s, 0.0).to_vec(),
            weight: bernoulli_weight(s),
            relations: vec![rel("{h1,h2} = -(s-1) h2", 0, 1, move |h| {
                Ok(-(s - 1.0) * h[1])
            })],
            sample_box: SampleBox::polar(1, s),
        },
        BracketTable::BernoulliDeformed => BracketSetup {
            fields: bernoulli_hamiltonian_fields(s, z).to_vec(),
            weight: bernoulli_weight(s),
            relations: vec![rel("{h1,h2} = (s-1)(exp(-z h2) - 1)/z", 0, 1, move |h| {
                Ok(-(s - 1.0) * h[1] * phi(-z * h[1]))
            })],
            sample_box: SampleBox::polar(1, s),
        },
    }
}

/// Residual `|lhs - rhs| / max(1, |rhs|)` of every relation at `samples`
/// random points of the box.
pub fn check_bracket_relations(
    check_id: &str,
    setup: &BracketSetup,
    samples: usize,
    tol: f64,
    mut metadata: Metadata,
) -> CheckReport {
    let mut r = rng(metadata.seed);
    let mut tally = Tally::new(tol);
    metadata.sample_box = Some(setup.sample_box.describe());
    let labels: Vec<_> = setup.relations.iter().map(|r| r.label.clone()).collect();
    metadata.detail("relations", labels);
    for _ in 0..samples {
        let p = setup.sample_box.sample(&mut r);
        let res = (|| -> Result<Vec<f64>> {
            let h = setup
                .fields
                .iter()
                .map(|f| f.eval(&p))
                .collect::<Result<Vec<_>>>()?;
            setup
                .relations
                .iter()
                .map(|rl| {
                    let lhs = poisson_bracket(
                        &setup.fields[rl.f],
                        &setup.fields[rl.g],
                        &setup.weight,
                        &p,
                    )?;
                    let rhs = (rl.rhs)(&h)?;
                    Ok((lhs - rhs).abs() / rhs.abs().max(1.0))
                })
                .collect()
        })();
        match res {
            Ok(v) => tally.record(&p, v.into_iter().fold(0.0, f64::max)),
            Err(_) => tally.record(&p, f64::INFINITY),
        }
    }
    tally.finish(check_id, metadata)
}

pub fn check_bracket_table(
    table: BracketTable,
    z: f64,
    s: f64,
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckReport {
    let mut meta = Metadata::seeded(seed);
    if table.is_deformed() {
        meta = meta.z(z);
    }
    if table.is_bernoulli() {
        meta = meta.s(s);
    }
    let id = format!("bracket.{}", table.name());
    check_bracket_relations(&id, &bracket_setup(table, z, s), samples, tol, meta)
}

/// The twisted two-copy functions close the undeformed table.
pub fn twisted_h2_setup(z: f64) -> BracketSetup {
    let mut relations = vec![
        rel("{h1,h2} = h0", 0, 1, |h| Ok(h[3])),
        rel("{h1,h3} = -h1", 0, 2, |h| Ok(-h[0])),
        rel("{h2,h3} = h2", 1, 2, |h| Ok(h[1])),
    ];
    central(&mut relations, 3, &[0, 1, 2]);
    BracketSetup {
        fields: twisted_h2_fields(z).to_vec(),
        weight: SymplecticWeight::Canonical,
        relations,
        sample_box: SampleBox::plane(2, 2.0).with(2, -2.0, 1.0 / z.abs().max(0.5) - 0.1),
    }
}

/// Pairs that must Poisson-commute.
pub struct InvolutionSet {
    pub fields: Vec<ScalarField>,
    pub pairs: Vec<(usize, usize)>,
    pub sample_box: SampleBox,
}

/// `{F2, F3}`, `{F13, F3}` and every constant against the diagonal
/// Hamiltonians.
pub fn h4_involution_set() -> InvolutionSet {
    let [f2, f13, _, f3] = h4_constant_fields();
    let mut fields = vec![f2, f13, f3];
    fields.extend(h4_diagonal_fields(3)[..3].iter().cloned());
    let mut pairs = vec![(0, 2), (1, 2)];
    for c in 0..3 {
        for h in 3..6 {
            pairs.push((c, h));
        }
    }
    InvolutionSet {
        fields,
        pairs,
        sample_box: SampleBox::plane(3, 2.0),
    }
}

/// `{Fz, h_i} = 0` for the three deformed constants, `{Fz2, Fz3}` and
/// `{Fz2_right, Fz3}`.
pub fn deformed_involution_set(z: f64) -> InvolutionSet {
    let mut fields = deformed::deformed_constant_fields(z).to_vec();
    fields.extend(
        deformed::prolonged_hamiltonian_fields(z)[..3]
            .iter()
            .cloned(),
    );
    let mut pairs = vec![(0, 2), (1, 2)];
    for c in 0..3 {
        for h in 3..6 {
            pairs.push((c, h));
        }
    }
    InvolutionSet {
        fields,
        pairs,
        sample_box: SampleBox::plane(3, 2.0),
    }
}

/// Worst `|{f, g}| / max(1, |grad f| |grad g|)` over the listed pairs.
pub fn check_involution(
    check_id: &str,
    set: &InvolutionSet,
    samples: usize,
    tol: f64,
    mut metadata: Metadata,
) -> CheckReport {
    let mut r = rng(metadata.seed);
    let mut tally = Tally::new(tol);
    metadata.sample_box = Some(set.sample_box.describe());
    let names: Vec<String> = set
        .pairs
        .iter()
        .map(|&(a, b)| format!("{{{},{}}}", set.fields[a].name(), set.fields[b].name()))
        .collect();
    metadata.detail("pairs", names);
    for _ in 0..samples {
        let p = set.sample_box.sample(&mut r);
        let mut worst = 0.0_f64;
        for &(a, b) in &set.pairs {
            let v = (|| -> Result<f64> {
                let pb = poisson_bracket(
                    &set.fields[a],
                    &set.fields[b],
                    &SymplecticWeight::Canonical,
                    &p,
                )?;
                let na = norm(&set.fields[a].grad(&p)?);
                let nb = norm(&set.fields[b].grad(&p)?);
                Ok(pb.abs() / (na * nb).max(1.0))
            })();
            worst = worst.max(v.unwrap_or(f64::INFINITY));
        }
        tally.record(&p, worst);
    }
    tally.finish(check_id, metadata)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Largest `|{Fz2, Fz2_right}|` over the sample, reported without a bound.
pub fn left_right_bracket(z: f64, samples: usize, seed: u64) -> f64 {
    let [a, b, _] = deformed::deformed_constant_fields(z);
    let bx = SampleBox::plane(3, 2.0);
    let mut r = rng(seed);
    (0..samples)
        .map(|_| {
            let p = bx.sample(&mut r);
            poisson_bracket(&a, &b, &SymplecticWeight::Canonical, &p).map_or(f64::NAN, f64::abs)
        })
        .fold(0.0, f64::max)
}

type Coef = Arc<dyn Fn(&[f64]) -> Result<f64> + Send + Sync>;

/// `[X_f, X_g] = coef(p) X_k` for Hamiltonian fields of `fields`.
pub struct Commutator {
    pub label: String,
    pub f: usize,
    pub g: usize,
    pub k: usize,
    pub coef: Coef,
}

pub struct CommutatorSet {
    pub fields: Vec<ScalarField>,
    pub weight: SymplecticWeight,
    pub commutators: Vec<Commutator>,
    pub sample_box: SampleBox,
}

fn com<F>(label: &str, f: usize, g: usize, k: usize, coef: F) -> Commutator
where
    F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
{
    Commutator {
        label: label.to_string(),
        f,
        g,
        k,
        coef: Arc::new(coef),
    }
}

pub fn h4_commutators() -> CommutatorSet {
    let fields = h4_hamiltonian_fields().to_vec();
    let commutators = vec![
        com("[X1,X2] = 0", 0, 1, 0, |_| Ok(0.0)),
        com("[X1,X3] = X1", 0, 2, 0, |_| Ok(1.0)),
        com("[X2,X3] = -X2", 1, 2, 1, |_| Ok(-1.0)),
    ];
    CommutatorSet {
        fields,
        weight: SymplecticWeight::Canonical,
        commutators,
        sample_box: SampleBox::plane(1, 2.0),
    }
}

pub fn prolonged_deformed_commutators(z: f64) -> CommutatorSet {
    let fields = deformed::prolonged_hamiltonian_fields(z).to_vec();
    let h2 = fields[1].clone();
    let h2b = fields[1].clone();
    let commutators = vec![
        com("[X1,X3] = X1", 0, 2, 0, |_| Ok(1.0)),
        com("[X1,X2] = z h0 exp(-z h2) X2", 0, 1, 1, move |p| {
            Ok(3.0 * z * (-z * h2.eval(p)?).exp())
        }),
        com("[X2,X3] = -exp(-z h2) X2", 1, 2, 1, move |p| {
            Ok(-(-z * h2b.eval(p)?).exp())
        }),
    ];
    CommutatorSet {
        fields,
        weight: SymplecticWeight::Canonical,
        commutators,
        sample_box: SampleBox::plane(3, 2.0),
    }
}

pub fn b2_deformed_commutators(z: f64) -> CommutatorSet {
    let fields = deformed::hz_hamiltonian_fields(z)[1..3].to_vec();
    let commutators = vec![com("[X2,X3] = -exp(zx) X2", 0, 1, 0, move |p| {
        Ok(-(z * p[0]).exp())
    })];
    CommutatorSet {
        fields,
        weight: SymplecticWeight::Canonical,
        commutators,
        sample_box: SampleBox::plane(1, 2.0),
    }
}

pub fn bernoulli_deformed_commutators(s: f64, z: f64) -> CommutatorSet {
    let fields = bernoulli_hamiltonian_fields(s, z).to_vec();
    let h2 = fields[1].clone();
    let commutators = vec![com("[Y1,Y2] = (s-1) E Y2", 0, 1, 1, move |p| {
        Ok((s - 1.0) * (-z * h2.eval(p)?).exp())
    })];
    CommutatorSet {
        fields,
        weight: bernoulli_weight(s),
        commutators,
        sample_box: SampleBox::polar(1, s),
    }
}

/// Finite-difference Lie brackets against the expected multiples,
/// relative to `max(1, |expected|)`.
pub fn check_commutators(
    check_id: &str,
    set: &CommutatorSet,
    samples: usize,
    tol: f64,
    mut metadata: Metadata,
) -> CheckReport {
    let xs: Vec<_> = set
        .fields
        .iter()
        .map(|h| hamiltonian_vector_field(h, &set.weight))
        .collect();
    let mut r = rng(metadata.seed);
    let mut tally = Tally::new(tol);
    metadata.sample_box = Some(set.sample_box.describe());
    let labels: Vec<_> = set.commutators.iter().map(|c| c.label.clone()).collect();
    metadata.detail("commutators", labels);
    for _ in 0..samples {
        let p = set.sample_box.sample(&mut r);
        let mut worst = 0.0_f64;
        for c in &set.commutators {
            let v = (|| -> Result<f64> {
                let lb = lie_bracket(&xs[c.f], &xs[c.g], 0.0, &p)?;
                let a = (c.coef)(&p)?;
                let xk = xs[c.k].eval(0.0, &p)?;
                let mut e = 0.0_f64;
                for (l, x) in lb.iter().zip(&xk) {
                    let want = a * x;
                    e = e.max((l - want).abs() / want.abs().max(1.0));
                }
                Ok(e)
            })();
            worst = worst.max(v.unwrap_or(f64::INFINITY));
        }
        tally.record(&p, worst);
    }
    tally.finish(check_id, metadata)
}
