use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Absolute tolerance on the total mass of any probability vector.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Offspring counts `z`, one entry per child type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CountVector(Vec<u32>);

impl CountVector {
    pub fn new(entries: Vec<u32>) -> Self {
        CountVector(entries)
    }

    pub fn zeros(n: usize) -> Self {
        CountVector(vec![0; n])
    }

    /// The unit vector `e_i`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        CountVector(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }

    /// `s^z = prod_k s_k^{z_k}`, with `0^0 = 1`.
    pub fn monomial(&self, s: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(s)
            .map(|(&z, &sk)| if z == 0 { 1.0 } else { sk.powi(z as i32) })
            .product()
    }
}

impl From<Vec<u32>> for CountVector {
    fn from(v: Vec<u32>) -> Self {
        CountVector(v)
    }
}

/// A finitely supported distribution on `N_0^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct OffspringLaw {
    support: Vec<(CountVector, f64)>,
}

impl OffspringLaw {
    pub fn new(support: Vec<(CountVector, f64)>) -> Result<Self> {
        let Some((first, _)) = support.first() else {
            return Err(Error::invariant("offspring law has empty support"));
        };
        let dim = first.len();
        let mut total = 0.0;
        for (z, p) in &support {
            if z.len() != dim {
                return Err(Error::invariant(format!(
                    "count vector {:?} has length {}, expected {dim}",
                    z.entries(),
                    z.len()
                )));
            }
            if !p.is_finite() || *p < 0.0 {
                return Err(Error::invariant(format!(
                    "probability {p} of {:?} is not a non-negative number",
                    z.entries()
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::invariant(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        let mut sorted: Vec<&CountVector> = support.iter().map(|(z, _)| z).collect();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invariant(format!(
                "count vector {:?} appears twice",
                w[0].entries()
            )));
        }
        Ok(OffspringLaw { support })
    }

    /// Point mass at `z`.
    pub fn point_mass(z: CountVector) -> Self {
        OffspringLaw {
            support: vec![(z, 1.0)],
        }
    }

    pub fn n_types(&self) -> usize {
        self.support[0].0.len()
    }

    pub fn support(&self) -> &[(CountVector, f64)] {
        &self.support
    }

    /// Probability of the exact outcome `z` (zero off the support).
    pub fn mass_at(&self, z: &[u32]) -> f64 {
        self.support
            .iter()
            .filter(|(w, _)| w.entries() == z)
            .map(|(_, p)| p)
            .sum()
    }

    /// The probability generating function at `s`.
    pub fn pgf(&self, s: &[f64]) -> Result<f64> {
        if s.len() != self.n_types() {
            return Err(Error::Dimension {
                expected: self.n_types(),
                found: s.len(),
            });
        }
        Ok(self.pgf_unchecked(s))
    }

    pub(crate) fn pgf_unchecked(&self, s: &[f64]) -> f64 {
        self.support.iter().map(|(z, p)| p * z.monomial(s)).sum()
    }

    /// Expected number of type-`k` children.
    pub fn mean(&self, k: usize) -> f64 {
        self.support
            .iter()
            .map(|(z, p)| p * f64::from(z.entries()[k]))
            .sum()
    }

    /// Second factorial moment `d^2 f / ds_i ds_j (1)`.
    pub fn factorial_moment(&self, i: usize, j: usize) -> f64 {
        self.support
            .iter()
            .map(|(z, p)| {
                let zi = f64::from(z.entries()[i]);
                let zj = f64::from(z.entries()[j]);
                let diag = if i == j { zi } else { 0.0 };
                p * (zi * zj - diag)
            })
            .sum()
    }

    /// Mass of the outcomes with at least one type-`i` child.
    pub fn mass_with_child(&self, i: usize) -> f64 {
        self.support
            .iter()
            .filter(|(z, _)| z.entries()[i] != 0)
            .map(|(_, p)| p)
            .sum()
    }

    /// Draws one offspring vector by inverting the cumulative distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CountVector {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (z, p) in &self.support {
            acc += p;
            if u < acc {
                return z.clone();
            }
        }
        // u landed in the rounding gap above the accumulated mass
        self.support
            .iter()
            .rev()
            .find(|(_, p)| *p > 0.0)
            .map(|(z, _)| z.clone())
            .unwrap_or_else(|| self.support[0].0.clone())
    }
}

/// Draws `count` i.i.d. offspring vectors from one law and sums them.
#[derive(Clone, Debug)]
pub struct LawSampler {
    outcomes: Vec<CountVector>,
    probs: Vec<f64>,
    alias: Option<WeightedAliasIndex<f64>>,
}

/// Below this many parents, offspring are drawn one individual at a time.
const DIRECT_DRAW_LIMIT: u64 = 32;

impl LawSampler {
    pub fn new(law: &OffspringLaw) -> Self {
        let outcomes = law.support.iter().map(|(z, _)| z.clone()).collect();
        let probs: Vec<f64> = law.support.iter().map(|(_, p)| *p).collect();
        let alias = if probs.len() > 1 {
            WeightedAliasIndex::new(probs.clone()).ok()
        } else {
            None
        };
        LawSampler {
            outcomes,
            probs,
            alias,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> &CountVector {
        match &self.alias {
            Some(a) => &self.outcomes[a.sample(rng)],
            None => &self.outcomes[0],
        }
    }

    /// Adds the children of `count` independent parents into `acc`.
    ///
    /// Small counts sum individual draws; large counts split the parents
    /// over the support with a multinomial draw (sequential binomials),
    /// which has the same distribution.
    pub fn add_offspring<R: Rng + ?Sized>(&self, count: u64, rng: &mut R, acc: &mut [u64]) {
        if count == 0 {
            return;
        }
        if self.alias.is_none() {
            add_scaled(acc, &self.outcomes[0], count);
            return;
        }
        if count <= DIRECT_DRAW_LIMIT {
            for _ in 0..count {
                add_scaled(acc, self.draw(rng), 1);
            }
            return;
        }
        let mut remaining = count;
        let mut mass_left = 1.0;
        let last = self.outcomes.len() - 1;
        for (idx, (z, &p)) in self.outcomes.iter().zip(&self.probs).enumerate() {
            if remaining == 0 {
                break;
            }
            let k = if idx == last || p >= mass_left {
                remaining
            } else if p <= 0.0 {
                0
            } else {
                let ratio = (p / mass_left).clamp(0.0, 1.0);
                Binomial::new(remaining, ratio)
                    .map(|b| b.sample(rng))
                    .unwrap_or(0)
            };
            add_scaled(acc, z, k);
            remaining -= k;
            mass_left -= p;
        }
    }
}

fn add_scaled(acc: &mut [u64], z: &CountVector, times: u64) {
    for (a, &c) in acc.iter_mut().zip(z.entries()) {
        *a += u64::from(c) * times;
    }
}
