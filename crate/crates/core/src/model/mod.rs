//! Offspring laws, environments and the model description.

mod codec;
mod environment;
mod law;

pub use codec::{parse_model, write_model};
pub use environment::{EnvironmentDistribution, EnvironmentSampler, STATIONARITY_TOLERANCE};
pub use law::{CountVector, LawSampler, OffspringLaw, MASS_TOLERANCE};

use rand::Rng;

use crate::matcore::NonNegMatrix;
use crate::{Error, Result};

/// A point of the unit cube `[0,1]^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct SValue(Vec<f64>);

impl SValue {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = s.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::contract(format!("s[{i}] = {v} is outside [0,1]")));
        }
        Ok(SValue(s))
    }

    pub fn ones(n: usize) -> Self {
        SValue(vec![1.0; n])
    }

    pub fn zeros(n: usize) -> Self {
        SValue(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Evaluates the pgf of `law` at `s`.
pub fn pgf_eval(law: &OffspringLaw, s: &SValue) -> Result<f64> {
    law.pgf(s.as_slice())
}

/// One environment state: an offspring law per parent type.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentLetter {
    pub name: String,
    pub laws: Vec<OffspringLaw>,
}

impl EnvironmentLetter {
    pub fn new(name: impl Into<String>, laws: Vec<OffspringLaw>) -> Self {
        EnvironmentLetter {
            name: name.into(),
            laws,
        }
    }

    pub fn n_types(&self) -> usize {
        self.laws.len()
    }

    /// `M(i,k) = E[#type-k children of a type-i parent]`.
    pub fn expectation_matrix(&self) -> NonNegMatrix {
        let n = self.n_types();
        NonNegMatrix::from_fn(n, |i, k| self.laws[i].mean(k))
    }

    /// Largest second factorial moment over parent type and child-type pair.
    pub fn second_moment_bound(&self) -> f64 {
        let n = self.n_types();
        let mut best: f64 = 0.0;
        for law in &self.laws {
            for i in 0..n {
                for j in 0..n {
                    best = best.max(law.factorial_moment(i, j));
                }
            }
        }
        best
    }

    /// Writes `f_theta(s)` into `out`.
    pub fn pgf_vector_into(&self, s: &[f64], out: &mut [f64]) {
        for (o, law) in out.iter_mut().zip(&self.laws) {
            *o = law.pgf_unchecked(s);
        }
    }

    pub fn pgf_vector(&self, s: &[f64]) -> Result<Vec<f64>> {
        if s.len() != self.n_types() {
            return Err(Error::Dimension {
                expected: self.n_types(),
                found: s.len(),
            });
        }
        let mut out = vec![0.0; s.len()];
        self.pgf_vector_into(s, &mut out);
        Ok(out)
    }
}

/// A validated branching process in random environment.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    n_types: usize,
    letters: Vec<EnvironmentLetter>,
    environment: EnvironmentDistribution,
}

impl ModelSpec {
    pub fn new(
        n_types: usize,
        letters: Vec<EnvironmentLetter>,
        environment: EnvironmentDistribution,
    ) -> Result<Self> {
        if n_types < 2 {
            return Err(Error::invariant(format!("n_types = {n_types}, need at least 2")));
        }
        if letters.is_empty() {
            return Err(Error::invariant("letters is empty"));
        }
        for (li, letter) in letters.iter().enumerate() {
            if letter.laws.len() != n_types {
                return Err(Error::invariant(format!(
                    "letters[{li}].laws has {} entries, expected n_types = {n_types}",
                    letter.laws.len()
                )));
            }
            for (k, law) in letter.laws.iter().enumerate() {
                if law.n_types() != n_types {
                    return Err(Error::invariant(format!(
                        "letters[{li}].laws[{k}] count vectors have length {}, expected {n_types}",
                        law.n_types()
                    )));
                }
            }
            if letters[..li].iter().any(|l| l.name == letter.name) {
                return Err(Error::invariant(format!(
                    "letter name `{}` is not unique",
                    letter.name
                )));
            }
        }
        if environment.alphabet_len() != letters.len() {
            return Err(Error::invariant(format!(
                "environment ranges over {} letters but the model has {}",
                environment.alphabet_len(),
                letters.len()
            )));
        }
        environment.validate()?;
        Ok(ModelSpec {
            n_types,
            letters,
            environment,
        })
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn letters(&self) -> &[EnvironmentLetter] {
        &self.letters
    }

    pub fn environment(&self) -> &EnvironmentDistribution {
        &self.environment
    }

    /// The same laws under a different environment law.
    pub fn with_environment(&self, environment: EnvironmentDistribution) -> Result<Self> {
        ModelSpec::new(self.n_types, self.letters.clone(), environment)
    }

    pub fn letter_index(&self, name: &str) -> Option<usize> {
        self.letters.iter().position(|l| l.name == name)
    }

    pub fn expectation_matrices(&self) -> Vec<NonNegMatrix> {
        self.letters.iter().map(|l| l.expectation_matrix()).collect()
    }

    pub fn second_moment_bound(&self) -> f64 {
        self.letters
            .iter()
            .map(|l| l.second_moment_bound())
            .fold(0.0, f64::max)
    }

    /// Fails with the first letter whose expectation matrix has an empty row
    /// or column.
    pub fn check_allowable(&self) -> Result<()> {
        for letter in &self.letters {
            let m = letter.expectation_matrix();
            if let Some(detail) = m.allowability_defects().into_iter().next() {
                return Err(Error::NotAllowable {
                    letter: letter.name.clone(),
                    detail,
                });
            }
        }
        Ok(())
    }
}

/// Smallest mass `sum_{z: z_i != 0} f_theta^(k)[z]` over the triples
/// `(theta, k, i)` with `M_theta(k, i) > 0`.
///
/// Any `alpha` strictly below the returned value satisfies the uniform
/// allowability bound.
pub fn uniform_allowability_alpha(model: &ModelSpec) -> Result<f64> {
    model.check_allowable()?;
    let n = model.n_types();
    let mut alpha = f64::INFINITY;
    for letter in model.letters() {
        let m = letter.expectation_matrix();
        for k in 0..n {
            for i in 0..n {
                if m.get(k, i) > 0.0 {
                    alpha = alpha.min(letter.laws[k].mass_with_child(i));
                }
            }
        }
    }
    Ok(alpha)
}

/// Draws one offspring vector from `law`.
pub fn sample_offspring<R: Rng + ?Sized>(law: &OffspringLaw, rng: &mut R) -> CountVector {
    law.sample(rng)
}

/// Draws the first `n` letters of an environment realisation.
pub fn sample_environment<R: Rng + ?Sized>(model: &ModelSpec, n: usize, rng: &mut R) -> Vec<usize> {
    model.environment().sampler().word(n, rng)
}
