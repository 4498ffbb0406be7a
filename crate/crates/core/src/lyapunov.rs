//! Growth exponents of random products of non-negative matrices.
//!
//! Products are accumulated in log space: the running product is divided by
//! its entry sum after every multiplication and the logarithm of the divisor
//! is added to a scalar, so words of length `10^7` neither overflow nor
//! underflow.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matcore::{mul_into, NonNegMatrix};
use crate::model::{EnvironmentDistribution, ModelSpec};
use crate::{rng, Error, Result};

/// Normal quantile used for the batch-means interval.
pub const Z_95: f64 = 1.96;

/// Which matrix reduction the exponent tracks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExponentKind {
    /// Sum of all entries.
    #[serde(rename = "sum")]
    SumNorm,
    /// Smallest column sum.
    #[serde(rename = "colmin")]
    ColMin,
    /// Smallest row sum.
    #[serde(rename = "rowmin")]
    RowMin,
}

impl ExponentKind {
    pub const ALL: [ExponentKind; 3] = [ExponentKind::SumNorm, ExponentKind::ColMin, ExponentKind::RowMin];

    pub fn name(self) -> &'static str {
        match self {
            ExponentKind::SumNorm => "sum",
            ExponentKind::ColMin => "colmin",
            ExponentKind::RowMin => "rowmin",
        }
    }

    fn reduce(self, dim: usize, data: &[f64]) -> f64 {
        match self {
            ExponentKind::SumNorm => data.iter().sum(),
            ExponentKind::ColMin => (0..dim)
                .map(|j| (0..dim).map(|i| data[i * dim + j]).sum::<f64>())
                .fold(f64::INFINITY, f64::min),
            ExponentKind::RowMin => data
                .chunks(dim)
                .map(|r| r.iter().sum::<f64>())
                .fold(f64::INFINITY, f64::min),
        }
    }
}

impl fmt::Display for ExponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExponentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(ExponentKind::SumNorm),
            "colmin" => Ok(ExponentKind::ColMin),
            "rowmin" => Ok(ExponentKind::RowMin),
            other => Err(Error::contract(format!(
                "unknown exponent kind `{other}` (expected sum, colmin or rowmin)"
            ))),
        }
    }
}

/// Point estimate with a 95% batch-means half-width, in nats per step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub kind: ExponentKind,
    pub point: f64,
    pub half_width: f64,
    pub steps_per_batch: usize,
    pub batches: usize,
}

impl LyapunovEstimate {
    pub fn lower(&self) -> f64 {
        self.point - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.point + self.half_width
    }
}

/// Running product `B_{w_1} ... B_{w_n}` held as `exp(log_scale) * current`.
#[derive(Clone, Debug)]
pub struct ProductAccumulator {
    dim: usize,
    current: Vec<f64>,
    scratch: Vec<f64>,
    log_scale: f64,
    steps: usize,
    renorm_every: usize,
    checks: Vec<ExponentKind>,
}

impl ProductAccumulator {
    /// Renormalises after every multiplication and watches the reductions in
    /// `checks` for degeneracy.
    pub fn new(dim: usize, checks: &[ExponentKind]) -> Self {
        Self::with_renorm_interval(dim, checks, 1)
    }

    pub fn with_renorm_interval(dim: usize, checks: &[ExponentKind], every: usize) -> Self {
        ProductAccumulator {
            dim,
            current: vec![0.0; dim * dim],
            scratch: vec![0.0; dim * dim],
            log_scale: 0.0,
            steps: 0,
            renorm_every: every.max(1),
            checks: checks.to_vec(),
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn push(&mut self, m: &NonNegMatrix) -> Result<()> {
        if m.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: m.dim(),
            });
        }
        if self.steps == 0 {
            self.current.copy_from_slice(m.as_slice());
        } else {
            mul_into(self.dim, &self.current, m.as_slice(), &mut self.scratch);
            std::mem::swap(&mut self.current, &mut self.scratch);
        }
        self.steps += 1;
        for &kind in &self.checks {
            if kind.reduce(self.dim, &self.current) <= 0.0 {
                return Err(Error::Degenerate {
                    step: self.steps,
                    reduction: kind.name(),
                });
            }
        }
        if self.steps.is_multiple_of(self.renorm_every) {
            let s: f64 = self.current.iter().sum();
            self.log_scale += s.ln();
            let inv = 1.0 / s;
            self.current.iter_mut().for_each(|v| *v *= inv);
        }
        Ok(())
    }

    /// `(1/n) log reduction(P)` for the accumulated product `P`.
    pub fn exponent(&self, kind: ExponentKind) -> Result<f64> {
        if self.steps == 0 {
            return Err(Error::contract("exponent of an empty product"));
        }
        let r = kind.reduce(self.dim, &self.current);
        if r <= 0.0 {
            return Err(Error::Degenerate {
                step: self.steps,
                reduction: kind.name(),
            });
        }
        Ok((self.log_scale + r.ln()) / self.steps as f64)
    }
}

fn check_word(matrices: &[NonNegMatrix], word: &[usize]) -> Result<usize> {
    if word.is_empty() {
        return Err(Error::contract("word must be non-empty"));
    }
    let dim = matrices
        .first()
        .ok_or_else(|| Error::contract("no matrices given"))?
        .dim();
    if let Some(&w) = word.iter().find(|&&w| w >= matrices.len()) {
        return Err(Error::IndexOutOfRange {
            index: w,
            len: matrices.len(),
        });
    }
    Ok(dim)
}

/// `(1/n) log reduction(B_{w_1} ... B_{w_n})`.
pub fn exponent_along_word(
    matrices: &[NonNegMatrix],
    word: &[usize],
    kind: ExponentKind,
) -> Result<f64> {
    exponent_along_word_renorm(matrices, word, kind, 1)
}

/// As [`exponent_along_word`], renormalising only every `every` steps.
pub fn exponent_along_word_renorm(
    matrices: &[NonNegMatrix],
    word: &[usize],
    kind: ExponentKind,
    every: usize,
) -> Result<f64> {
    let dim = check_word(matrices, word)?;
    let mut acc = ProductAccumulator::with_renorm_interval(dim, &[kind], every);
    for &w in word {
        acc.push(&matrices[w])?;
    }
    acc.exponent(kind)
}

fn batch_estimate(kind: ExponentKind, values: &[f64], steps: usize) -> LyapunovEstimate {
    let b = values.len() as f64;
    let mean = values.iter().sum::<f64>() / b;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0);
    LyapunovEstimate {
        kind,
        point: mean,
        half_width: Z_95 * var.sqrt() / b.sqrt(),
        steps_per_batch: steps,
        batches: values.len(),
    }
}

/// Estimates several exponent kinds on the same sampled words.
///
/// Batch `b` draws an environment word of length `steps_per_batch` from the
/// child stream `(seed, b)`; the point is the batch mean and the half-width
/// is `1.96 * sd / sqrt(batches)`.
pub fn estimate_exponents(
    matrices: &[NonNegMatrix],
    environment: &EnvironmentDistribution,
    kinds: &[ExponentKind],
    steps_per_batch: usize,
    batches: usize,
    seed: u64,
) -> Result<Vec<LyapunovEstimate>> {
    if steps_per_batch < 100 {
        return Err(Error::contract("steps_per_batch must be at least 100"));
    }
    if batches < 2 {
        return Err(Error::contract("at least 2 batches are needed"));
    }
    if kinds.is_empty() {
        return Err(Error::contract("no exponent kind requested"));
    }
    let dim = matrices
        .first()
        .ok_or_else(|| Error::contract("no matrices given"))?
        .dim();
    if environment.alphabet_len() != matrices.len() {
        return Err(Error::Dimension {
            expected: matrices.len(),
            found: environment.alphabet_len(),
        });
    }
    if let Some(m) = matrices.iter().find(|m| m.dim() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            found: m.dim(),
        });
    }

    let per_batch: Vec<Vec<f64>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng::child(seed, b as u64);
            let mut env = environment.sampler();
            let mut acc = ProductAccumulator::new(dim, kinds);
            for _ in 0..steps_per_batch {
                acc.push(&matrices[env.next_letter(&mut rng)])?;
            }
            kinds.iter().map(|&k| acc.exponent(k)).collect()
        })
        .collect::<Result<_>>()?;

    Ok(kinds
        .iter()
        .enumerate()
        .map(|(ki, &kind)| {
            let values: Vec<f64> = per_batch.iter().map(|v| v[ki]).collect();
            batch_estimate(kind, &values, steps_per_batch)
        })
        .collect())
}

pub fn estimate_exponent(
    matrices: &[NonNegMatrix],
    environment: &EnvironmentDistribution,
    kind: ExponentKind,
    steps_per_batch: usize,
    batches: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    estimate_exponents(matrices, environment, &[kind], steps_per_batch, batches, seed)
        .map(|mut v| v.remove(0))
}

/// Exponent of the model's expectation matrices under its own environment.
pub fn estimate_model_exponent(
    model: &ModelSpec,
    kind: ExponentKind,
    steps_per_batch: usize,
    batches: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    estimate_exponent(
        &model.expectation_matrices(),
        model.environment(),
        kind,
        steps_per_batch,
        batches,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn carpet() -> Vec<NonNegMatrix> {
        [
            [[1.0, 0.0], [2.0, 2.0]],
            [[2.0, 1.0], [1.0, 2.0]],
            [[2.0, 2.0], [0.0, 1.0]],
        ]
        .iter()
        .map(|r| NonNegMatrix::from_rows(&[r[0].to_vec(), r[1].to_vec()]).unwrap())
        .collect()
    }

    #[test]
    fn identity_word() {
        let n = 50;
        let word = vec![0; n];
        let e = exponent_along_word(&[NonNegMatrix::identity(2)], &word, ExponentKind::SumNorm)
            .unwrap();
        assert!((e - 2f64.ln() / n as f64).abs() < 1e-15);
    }

    #[test]
    fn single_positive_letter() {
        let e = exponent_along_word(&carpet(), &[1], ExponentKind::SumNorm).unwrap();
        assert!((e - 6f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn scalar_matrix_all_kinds() {
        let d = NonNegMatrix::diagonal(&[2.0, 2.0]).unwrap();
        let n = 1000;
        let word = vec![0; n];
        let ln2 = 2f64.ln();
        for kind in [ExponentKind::ColMin, ExponentKind::RowMin] {
            let e = exponent_along_word(std::slice::from_ref(&d), &word, kind).unwrap();
            assert!((e - ln2).abs() < 1e-12, "{kind}: {e}");
        }
        // the sum norm of 2^n I is 2^{n+1}
        let e = exponent_along_word(&[d], &word, ExponentKind::SumNorm).unwrap();
        assert!((e - ln2 * (1.0 + 1.0 / n as f64)).abs() < 1e-12);
    }

    #[test]
    fn degeneracy_names_the_step() {
        let nilpotent = NonNegMatrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let err = exponent_along_word(&[nilpotent], &[0, 0, 0], ExponentKind::SumNorm).unwrap_err();
        assert!(matches!(err, Error::Degenerate { step: 2, .. }), "{err}");
        let tri = NonNegMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let err = exponent_along_word(&[tri], &[0], ExponentKind::RowMin).unwrap_err();
        assert!(matches!(err, Error::Degenerate { step: 1, reduction: "rowmin" }));
    }

    #[test]
    fn empty_word_is_rejected() {
        assert!(exponent_along_word(&carpet(), &[], ExponentKind::SumNorm).is_err());
    }

    #[test]
    fn constant_letter_estimate_is_exact() {
        let d = NonNegMatrix::diagonal(&[3.0, 3.0]).unwrap();
        let env = EnvironmentDistribution::uniform(1);
        let est = estimate_exponent(&[d], &env, ExponentKind::ColMin, 200, 4, 1).unwrap();
        assert!((est.point - 3f64.ln()).abs() < 1e-12);
        assert_eq!(est.half_width, 0.0);
    }

    #[test]
    fn estimate_rejects_bad_parameters() {
        let env = EnvironmentDistribution::uniform(3);
        assert!(estimate_exponent(&carpet(), &env, ExponentKind::SumNorm, 99, 4, 0).is_err());
        assert!(estimate_exponent(&carpet(), &env, ExponentKind::SumNorm, 100, 1, 0).is_err());
        let wrong = EnvironmentDistribution::uniform(2);
        assert!(estimate_exponent(&carpet(), &wrong, ExponentKind::SumNorm, 100, 2, 0).is_err());
    }

    #[test]
    fn estimates_are_reproducible() {
        let env = EnvironmentDistribution::uniform(3);
        let a = estimate_exponent(&carpet(), &env, ExponentKind::SumNorm, 1000, 8, 5).unwrap();
        let b = estimate_exponent(&carpet(), &env, ExponentKind::SumNorm, 1000, 8, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.point.to_bits(), b.point.to_bits());
    }

    #[test]
    fn kind_round_trips_through_text() {
        for k in ExponentKind::ALL {
            assert_eq!(k.name().parse::<ExponentKind>().unwrap(), k);
        }
        assert!("max".parse::<ExponentKind>().is_err());
    }
}
