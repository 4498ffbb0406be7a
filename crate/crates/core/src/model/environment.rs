use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use super::law::MASS_TOLERANCE;
use crate::{Error, Result};

/// Tolerance for `initial * transition == initial`.
pub const STATIONARITY_TOLERANCE: f64 = 1e-9;

/// Law of the environment sequence over a finite alphabet.
#[derive(Clone, Debug, PartialEq)]
pub enum EnvironmentDistribution {
    Iid {
        probs: Vec<f64>,
    },
    /// A stationary Markov chain: `initial` must be invariant for `transition`.
    Markov {
        initial: Vec<f64>,
        transition: Vec<Vec<f64>>,
    },
}

fn check_probability_vector(v: &[f64], what: &str) -> Result<()> {
    if let Some((i, p)) = v.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
        return Err(Error::invariant(format!("{what}[{i}] = {p} is negative")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::invariant(format!("{what} sum ≠ 1 (got {total})")));
    }
    Ok(())
}

impl EnvironmentDistribution {
    pub fn uniform(letters: usize) -> Self {
        EnvironmentDistribution::Iid {
            probs: vec![1.0 / letters as f64; letters],
        }
    }

    /// Number of letters the distribution ranges over.
    pub fn alphabet_len(&self) -> usize {
        match self {
            EnvironmentDistribution::Iid { probs } => probs.len(),
            EnvironmentDistribution::Markov { initial, .. } => initial.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnvironmentDistribution::Iid { probs } => {
                if probs.is_empty() {
                    return Err(Error::invariant("environment.probs is empty"));
                }
                check_probability_vector(probs, "environment.probs")
            }
            EnvironmentDistribution::Markov {
                initial,
                transition,
            } => {
                let l = initial.len();
                if l == 0 {
                    return Err(Error::invariant("environment.initial is empty"));
                }
                check_probability_vector(initial, "environment.initial")?;
                if transition.len() != l {
                    return Err(Error::invariant(format!(
                        "environment.transition has {} rows, expected {l}",
                        transition.len()
                    )));
                }
                for (r, row) in transition.iter().enumerate() {
                    if row.len() != l {
                        return Err(Error::invariant(format!(
                            "environment.transition[{r}] has {} entries, expected {l}",
                            row.len()
                        )));
                    }
                    check_probability_vector(row, &format!("environment.transition[{r}]"))?;
                }
                let drift = self.stationarity_defect();
                if drift > STATIONARITY_TOLERANCE {
                    return Err(Error::invariant(format!(
                        "environment.initial is not stationary for the transition matrix (defect {drift:e})"
                    )));
                }
                Ok(())
            }
        }
    }

    /// `max_j |(initial * T)_j - initial_j|`; zero for i.i.d. environments.
    pub fn stationarity_defect(&self) -> f64 {
        match self {
            EnvironmentDistribution::Iid { .. } => 0.0,
            EnvironmentDistribution::Markov {
                initial,
                transition,
            } => (0..initial.len())
                .map(|j| {
                    let pushed: f64 = initial
                        .iter()
                        .zip(transition)
                        .map(|(pi, row)| pi * row[j])
                        .sum();
                    (pushed - initial[j]).abs()
                })
                .fold(0.0, f64::max),
        }
    }

    /// Stationary probability that the environment shows `letter` at a given time.
    pub fn letter_probability(&self, letter: usize) -> f64 {
        match self {
            EnvironmentDistribution::Iid { probs } => probs[letter],
            EnvironmentDistribution::Markov { initial, .. } => initial[letter],
        }
    }

    /// Measure of the cylinder of environments starting with `word`.
    pub fn cylinder_probability(&self, word: &[usize]) -> f64 {
        match self {
            EnvironmentDistribution::Iid { probs } => word.iter().map(|&w| probs[w]).product(),
            EnvironmentDistribution::Markov {
                initial,
                transition,
            } => {
                let Some(&first) = word.first() else {
                    return 1.0;
                };
                word.windows(2)
                    .map(|w| transition[w[0]][w[1]])
                    .fold(initial[first], |acc, t| acc * t)
            }
        }
    }

    pub fn sampler(&self) -> EnvironmentSampler {
        match self {
            EnvironmentDistribution::Iid { probs } => EnvironmentSampler {
                start: Categorical::new(probs),
                rows: None,
                state: None,
            },
            EnvironmentDistribution::Markov {
                initial,
                transition,
            } => EnvironmentSampler {
                start: Categorical::new(initial),
                rows: Some(transition.iter().map(|r| Categorical::new(r)).collect()),
                state: None,
            },
        }
    }
}

#[derive(Clone, Debug)]
enum Categorical {
    Constant(usize),
    Alias(WeightedAliasIndex<f64>),
}

impl Categorical {
    fn new(probs: &[f64]) -> Self {
        let positive: Vec<usize> = (0..probs.len()).filter(|&i| probs[i] > 0.0).collect();
        if positive.len() == 1 {
            return Categorical::Constant(positive[0]);
        }
        match WeightedAliasIndex::new(probs.to_vec()) {
            Ok(a) => Categorical::Alias(a),
            Err(_) => Categorical::Constant(positive.first().copied().unwrap_or(0)),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            Categorical::Constant(i) => *i,
            Categorical::Alias(a) => a.sample(rng),
        }
    }
}

/// Streams letters of one environment realisation.
#[derive(Clone, Debug)]
pub struct EnvironmentSampler {
    start: Categorical,
    rows: Option<Vec<Categorical>>,
    state: Option<usize>,
}

impl EnvironmentSampler {
    pub fn next_letter<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let next = match (&self.rows, self.state) {
            (Some(rows), Some(prev)) => rows[prev].sample(rng),
            _ => self.start.sample(rng),
        };
        if self.rows.is_some() {
            self.state = Some(next);
        }
        next
    }

    pub fn word<R: Rng + ?Sized>(&mut self, n: usize, rng: &mut R) -> Vec<usize> {
        (0..n).map(|_| self.next_letter(rng)).collect()
    }
}
