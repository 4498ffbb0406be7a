//! The random Sierpiński carpet and its 45° projection.
//!
//! Split the unit square along the main diagonal into an upper triangle `U`
//! (type 0) and a lower triangle `L` (type 1). Projected along `x - y`, each
//! triangle covers half of `[-1, 1]` and splits into three columns. One level
//! of the construction keeps each of the 8 non-middle sub-squares with
//! probability `p`; a kept sub-square `(i, j)` with `d = i - j` contributes
//! its upper half to the third `[(d-1)/3, d/3]` and its lower half to
//! `[d/3, (d+1)/3]`. Counting the small triangles per column gives the
//! offspring laws of a 2-type branching process whose environment picks the
//! column.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::lyapunov::{estimate_exponent, ExponentKind, LyapunovEstimate};
use crate::matcore::NonNegMatrix;
use crate::model::{CountVector, EnvironmentDistribution, EnvironmentLetter, ModelSpec, OffspringLaw};
use crate::{Error, Result};

pub const UPPER: usize = 0;
pub const LOWER: usize = 1;

/// Expectation matrices at `p = 1`, one per column.
pub const CARPET_B: [[[f64; 2]; 2]; 3] = [
    [[1.0, 0.0], [2.0, 2.0]],
    [[2.0, 1.0], [1.0, 2.0]],
    [[2.0, 2.0], [0.0, 1.0]],
];

/// Number of sub-squares feeding `(#upper, #lower)` for each column and
/// parent type; every count is an independent binomial in `p`.
const SLOTS: [[(u32, u32); 2]; 3] = [
    [(1, 0), (2, 2)],
    [(2, 1), (1, 2)],
    [(2, 2), (0, 1)],
];

/// Default ceiling on the number of squares a sampled carpet may hold.
pub const DEFAULT_SQUARE_BUDGET: usize = 10_000_000;

pub fn carpet_matrices() -> Vec<NonNegMatrix> {
    CARPET_B
        .iter()
        .map(|b| NonNegMatrix::from_fn(2, |i, j| b[i][j]))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CarpetModel {
    pub p: f64,
    pub model: ModelSpec,
}

fn binomial_pmf(n: u32, p: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut choose = 1.0;
    for k in 0..=n {
        out.push(choose * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32));
        choose = choose * (n - k) as f64 / (k + 1) as f64;
    }
    out
}

fn slot_law(n_upper: u32, n_lower: u32, p: f64) -> Result<OffspringLaw> {
    let (bu, bl) = (binomial_pmf(n_upper, p), binomial_pmf(n_lower, p));
    let mut support = Vec::new();
    for (u, pu) in bu.iter().enumerate() {
        for (l, pl) in bl.iter().enumerate() {
            let mass = pu * pl;
            if mass > 0.0 {
                support.push((CountVector::new(vec![u as u32, l as u32]), mass));
            }
        }
    }
    OffspringLaw::new(support)
}

/// The projection process at retention probability `p` in `(0, 1]`.
///
/// `p = 1` gives the deterministic carpet, whose laws are point masses.
pub fn build_carpet_model(p: f64) -> Result<CarpetModel> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::contract(format!("retention probability {p} outside (0, 1]")));
    }
    let letters = SLOTS
        .iter()
        .enumerate()
        .map(|(col, slots)| {
            let laws = slots
                .iter()
                .map(|&(u, l)| slot_law(u, l, p))
                .collect::<Result<Vec<_>>>()?;
            Ok(EnvironmentLetter::new(format!("col{col}"), laws))
        })
        .collect::<Result<Vec<_>>>()?;
    let model = ModelSpec::new(2, letters, EnvironmentDistribution::uniform(3))?;
    Ok(CarpetModel { p, model })
}

/// `lambda_B`: sum-norm exponent of the `p = 1` matrices under the uniform
/// column choice.
pub fn lambda_b(steps_per_batch: usize, batches: usize, seed: u64) -> Result<LyapunovEstimate> {
    estimate_exponent(
        &carpet_matrices(),
        &EnvironmentDistribution::uniform(3),
        ExponentKind::SumNorm,
        steps_per_batch,
        batches,
        seed,
    )
}

/// Interval for the root of `log p + lambda_B = 0`.
pub fn critical_p(lambda_b: &LyapunovEstimate) -> Result<(f64, f64)> {
    if !(lambda_b.point > 0.0) {
        return Err(Error::contract(format!(
            "lambda_B estimate {} must be positive",
            lambda_b.point
        )));
    }
    Ok((
        (-(lambda_b.point + lambda_b.half_width)).exp(),
        (-(lambda_b.point - lambda_b.half_width)).exp(),
    ))
}

/// Retained squares at one depth, as integer coordinates in `[0, 3^depth)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareSet {
    pub depth: u32,
    pub squares: Vec<(u64, u64)>,
}

const MAX_DEPTH: u32 = 39;

impl SquareSet {
    /// The unit square at depth 0.
    pub fn unit() -> Self {
        SquareSet {
            depth: 0,
            squares: vec![(0, 0)],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }

    pub fn len(&self) -> usize {
        self.squares.len()
    }

    /// True when no square sits in a discarded middle at any level.
    pub fn is_valid(&self) -> bool {
        let side = 3u64.pow(self.depth);
        self.squares.iter().all(|&(mut i, mut j)| {
            if i >= side || j >= side {
                return false;
            }
            for _ in 0..self.depth {
                if i % 3 == 1 && j % 3 == 1 {
                    return false;
                }
                i /= 3;
                j /= 3;
            }
            true
        })
    }

    /// One more level: each non-middle child of each square kept with
    /// probability `p`.
    pub fn refine<R: Rng + ?Sized>(&self, p: f64, rng: &mut R, budget: usize) -> Result<SquareSet> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::contract(format!("retention probability {p} outside [0, 1]")));
        }
        if self.depth >= MAX_DEPTH {
            return Err(Error::contract(format!("depth above {MAX_DEPTH}")));
        }
        let mut squares = Vec::with_capacity(((self.len() as f64) * 8.0 * p).ceil() as usize);
        for &(i, j) in &self.squares {
            for a in 0..3 {
                for b in 0..3 {
                    if (a, b) == (1, 1) {
                        continue;
                    }
                    if p >= 1.0 || rng.random::<f64>() < p {
                        if squares.len() == budget {
                            return Err(Error::Resource(format!(
                                "carpet sample exceeded {budget} squares"
                            )));
                        }
                        squares.push((3 * i + a, 3 * j + b));
                    }
                }
            }
        }
        Ok(SquareSet {
            depth: self.depth + 1,
            squares,
        })
    }

    /// `"depth n"` followed by one `"n i j"` line per square.
    pub fn to_text(&self) -> String {
        let mut out = format!("depth {}\n", self.depth);
        for (i, j) in &self.squares {
            out.push_str(&format!("{} {i} {j}\n", self.depth));
        }
        out
    }
}

/// A depth-`depth` carpet at retention probability `p`, grown branch by
/// branch from the unit square.
///
/// Fails before sampling when the expected size `(8p)^depth` exceeds
/// `budget`, and during sampling when the realised size does.
pub fn sample_carpet<R: Rng + ?Sized>(
    p: f64,
    depth: u32,
    rng: &mut R,
    budget: usize,
) -> Result<SquareSet> {
    if depth < 1 {
        return Err(Error::contract("depth must be at least 1"));
    }
    let expected = (8.0 * p).powi(depth as i32);
    if expected > budget as f64 {
        return Err(Error::Resource(format!(
            "expected {expected:.3e} squares exceeds the budget of {budget}"
        )));
    }
    let mut set = SquareSet::unit();
    for _ in 0..depth {
        set = set.refine(p, rng, budget)?;
        if set.is_empty() {
            set.depth = depth;
            break;
        }
    }
    Ok(set)
}

/// Merged projection intervals in units of `3^-depth`.
fn projection_runs(set: &SquareSet) -> Vec<(i64, i64)> {
    let mut diag: Vec<i64> = set.squares.iter().map(|&(i, j)| i as i64 - j as i64).collect();
    diag.sort_unstable();
    diag.dedup();
    let mut runs: Vec<(i64, i64)> = Vec::new();
    for d in diag {
        match runs.last_mut() {
            Some((_, hi)) if d - 1 <= *hi => *hi = d + 1,
            _ => runs.push((d - 1, d + 1)),
        }
    }
    runs
}

/// The union of the squares' `x - y` images, as disjoint sorted intervals.
pub fn projection_intervals(set: &SquareSet) -> Vec<(f64, f64)> {
    let scale = 3f64.powi(set.depth as i32);
    projection_runs(set)
        .into_iter()
        .map(|(lo, hi)| (lo as f64 / scale, hi as f64 / scale))
        .collect()
}

/// Lebesgue measure of the `x - y` projection, in `[0, 2]`.
pub fn projection_measure(set: &SquareSet) -> f64 {
    let total: i64 = projection_runs(set).iter().map(|(lo, hi)| hi - lo).sum();
    total as f64 / 3f64.powi(set.depth as i32)
}

pub fn intervals_csv(intervals: &[(f64, f64)]) -> String {
    let mut out = String::from("lo,hi\n");
    for (lo, hi) in intervals {
        out.push_str(&format!("{lo},{hi}\n"));
    }
    out
}

/// Column and type that the upper (`upper = true`) or lower half of
/// sub-square `(i, j)` lands in, as `(parent_type, column)`.
fn half_position(i: usize, j: usize, upper: bool) -> (usize, usize) {
    let d = i as i64 - j as i64;
    // Left end of the half's projection, in thirds of the parent's half-width.
    let lo = if upper { d - 1 } else { d };
    if lo < 0 {
        (UPPER, (lo + 3) as usize)
    } else {
        (LOWER, lo as usize)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffspringStats {
    pub column: usize,
    pub parent_type: usize,
    pub samples: usize,
    pub mean: Vec<f64>,
    /// Empirical frequencies of `(#upper, #lower)`, sorted by outcome.
    pub pmf: Vec<(CountVector, f64)>,
}

/// Offspring statistics from one level of the geometric construction,
/// restricted to one column of one parent triangle.
pub fn empirical_offspring_stats<R: Rng + ?Sized>(
    p: f64,
    column: usize,
    parent_type: usize,
    samples: usize,
    rng: &mut R,
) -> Result<OffspringStats> {
    if column > 2 {
        return Err(Error::IndexOutOfRange { index: column, len: 3 });
    }
    if parent_type > 1 {
        return Err(Error::IndexOutOfRange {
            index: parent_type,
            len: 2,
        });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::contract(format!("retention probability {p} outside [0, 1]")));
    }
    if samples == 0 {
        return Err(Error::contract("samples must be positive"));
    }
    let mut counts = std::collections::BTreeMap::<[u32; 2], usize>::new();
    let mut sums = [0u64; 2];
    for _ in 0..samples {
        let mut z = [0u32; 2];
        for i in 0..3 {
            for j in 0..3 {
                if (i, j) == (1, 1) || rng.random::<f64>() >= p {
                    continue;
                }
                for (child, upper) in [(UPPER, true), (LOWER, false)] {
                    if half_position(i, j, upper) == (parent_type, column) {
                        z[child] += 1;
                    }
                }
            }
        }
        sums[0] += z[0] as u64;
        sums[1] += z[1] as u64;
        *counts.entry(z).or_default() += 1;
    }
    let n = samples as f64;
    Ok(OffspringStats {
        column,
        parent_type,
        samples,
        mean: sums.iter().map(|&s| s as f64 / n).collect(),
        pmf: counts
            .into_iter()
            .map(|(z, c)| (CountVector::new(z.to_vec()), c as f64 / n))
            .collect(),
    })
}

/// Total-variation distance between an empirical pmf and a law.
pub fn total_variation(pmf: &[(CountVector, f64)], law: &OffspringLaw) -> f64 {
    let mut sum = 0.0;
    for (z, q) in pmf {
        sum += (q - law.mass_at(z.entries())).abs();
    }
    for (z, p) in law.support() {
        if !pmf.iter().any(|(y, _)| y == z) {
            sum += p;
        }
    }
    sum / 2.0
}
