//! Non-negative square matrices and their zero patterns.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A square matrix with non-negative finite entries, stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct NonNegMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl fmt::Debug for NonNegMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl NonNegMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Dimension {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::contract(format!("matrix entry {v} is not a non-negative number")));
        }
        Ok(NonNegMatrix { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                found: r.len(),
            });
        }
        NonNegMatrix::new(dim, rows.concat())
    }

    /// Builds the matrix from `f(row, col)`; entries must come out non-negative.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let v = f(i, j);
                debug_assert!(v >= 0.0 && v.is_finite());
                data.push(v);
            }
        }
        NonNegMatrix { dim, data }
    }

    pub fn identity(dim: usize) -> Self {
        NonNegMatrix::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let dim = values.len();
        NonNegMatrix::new(
            dim,
            (0..dim * dim)
                .map(|k| if k / dim == k % dim { values[k / dim] } else { 0.0 })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor >= 0.0, "scale factor must be non-negative");
        NonNegMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn mul(&self, rhs: &NonNegMatrix) -> Result<NonNegMatrix> {
        if rhs.dim != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: rhs.dim,
            });
        }
        let mut out = vec![0.0; self.data.len()];
        mul_into(self.dim, &self.data, &rhs.data, &mut out);
        Ok(NonNegMatrix {
            dim: self.dim,
            data: out,
        })
    }

    /// `M v` for a column vector `v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.data
            .chunks(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.dim];
        for row in self.data.chunks(self.dim) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.data.chunks(self.dim).map(|r| r.iter().sum()).collect()
    }

    /// Sum of all entries.
    pub fn norm_sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Largest column sum.
    pub fn norm_col_max(&self) -> f64 {
        self.column_sums().into_iter().fold(0.0, f64::max)
    }

    /// Smallest column sum.
    pub fn col_min(&self) -> f64 {
        min_or_zero(self.column_sums())
    }

    /// Smallest row sum.
    pub fn row_min(&self) -> f64 {
        min_or_zero(self.row_sums())
    }

    /// Smallest strictly positive entry, if any.
    pub fn min_positive(&self) -> Option<f64> {
        self.data
            .iter()
            .copied()
            .filter(|&v| v > 0.0)
            .reduce(f64::min)
    }

    pub fn is_allowable(&self) -> bool {
        self.allowability_defects().is_empty()
    }

    /// Human-readable list of all-zero rows and columns.
    pub fn allowability_defects(&self) -> Vec<String> {
        let mut defects = Vec::new();
        for i in 0..self.dim {
            if (0..self.dim).all(|j| self.get(i, j) <= 0.0) {
                defects.push(format!("row {i} has no positive entry"));
            }
        }
        for j in 0..self.dim {
            if (0..self.dim).all(|i| self.get(i, j) <= 0.0) {
                defects.push(format!("column {j} has no positive entry"));
            }
        }
        defects
    }

    pub fn pattern(&self) -> PositivityPattern {
        PositivityPattern {
            dim: self.dim,
            bits: self.data.iter().map(|&v| v > 0.0).collect(),
        }
    }
}

fn min_or_zero(v: Vec<f64>) -> f64 {
    v.into_iter().reduce(f64::min).unwrap_or(0.0)
}

pub(crate) fn mul_into(dim: usize, a: &[f64], b: &[f64], out: &mut [f64]) {
    for i in 0..dim {
        let row = &a[i * dim..(i + 1) * dim];
        for j in 0..dim {
            let mut acc = 0.0;
            for (k, aik) in row.iter().enumerate() {
                acc += aik * b[k * dim + j];
            }
            out[i * dim + j] = acc;
        }
    }
}

/// Left-to-right product `B_{w_1} ... B_{w_n}`; the empty word gives the identity.
pub fn product_along_word(matrices: &[NonNegMatrix], word: &[usize]) -> Result<NonNegMatrix> {
    let dim = match matrices.first() {
        Some(m) => m.dim,
        None if word.is_empty() => return Err(Error::contract("no matrices given")),
        None => {
            return Err(Error::IndexOutOfRange {
                index: word[0],
                len: 0,
            })
        }
    };
    if let Some(m) = matrices.iter().find(|m| m.dim != dim) {
        return Err(Error::Dimension {
            expected: dim,
            found: m.dim,
        });
    }
    let mut acc = NonNegMatrix::identity(dim);
    for &w in word {
        let m = matrices.get(w).ok_or(Error::IndexOutOfRange {
            index: w,
            len: matrices.len(),
        })?;
        acc = acc.mul(m)?;
    }
    Ok(acc)
}

/// The zero/non-zero pattern of a non-negative matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PositivityPattern {
    dim: usize,
    bits: Vec<bool>,
}

impl PositivityPattern {
    pub fn from_bits(dim: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != dim * dim {
            return Err(Error::Dimension {
                expected: dim * dim,
                found: bits.len(),
            });
        }
        Ok(PositivityPattern { dim, bits })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.dim + j]
    }

    pub fn all_true(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    /// Boolean matrix product: `(self * rhs)(i,j) = OR_k self(i,k) AND rhs(k,j)`.
    pub fn boolean_product(&self, rhs: &PositivityPattern) -> PositivityPattern {
        let n = self.dim;
        let bits = (0..n * n)
            .map(|idx| {
                let (i, j) = (idx / n, idx % n);
                (0..n).any(|k| self.get(i, k) && rhs.get(k, j))
            })
            .collect();
        PositivityPattern { dim: n, bits }
    }
}

/// Default pattern budget: `2^{N^2}` capped at `10^6`.
pub fn default_max_states(dim: usize) -> usize {
    const CAP: usize = 1_000_000;
    let exponent = dim * dim;
    if exponent >= 20 {
        CAP
    } else {
        (1usize << exponent).min(CAP)
    }
}

/// Which letters may start a word and which may follow which.
#[derive(Clone, Debug)]
pub struct WordConstraints {
    pub can_start: Vec<bool>,
    /// `can_follow[a][b]`: letter `b` may come right after letter `a`.
    pub can_follow: Vec<Vec<bool>>,
}

impl WordConstraints {
    pub fn unconstrained(letters: usize) -> Self {
        WordConstraints {
            can_start: vec![true; letters],
            can_follow: vec![vec![true; letters]; letters],
        }
    }

    fn depends_on_last_letter(&self) -> bool {
        self.can_follow
            .iter()
            .any(|row| row.iter().zip(&self.can_start).any(|(f, s)| f != s))
    }
}

/// Shortest word whose boolean product pattern is all-true, or `None` when
/// the reachable semigroup contains no such pattern.
///
/// Breadth-first over patterns, expanding by right multiplication with each
/// letter in index order; among shortest witnesses the lexicographically
/// smallest is returned. Returns `(word, length)`.
pub fn find_positive_product_word(
    patterns: &[PositivityPattern],
    max_states: usize,
) -> Result<Option<(Vec<usize>, usize)>> {
    find_positive_product_word_with(
        patterns,
        &WordConstraints::unconstrained(patterns.len()),
        max_states,
        None,
    )
}

/// [`find_positive_product_word`] restricted to words admitted by
/// `constraints`, optionally capped at `max_len` letters.
pub fn find_positive_product_word_with(
    patterns: &[PositivityPattern],
    constraints: &WordConstraints,
    max_states: usize,
    max_len: Option<usize>,
) -> Result<Option<(Vec<usize>, usize)>> {
    if max_states == 0 {
        return Err(Error::contract("max_states must be at least 1"));
    }
    let Some(first) = patterns.first() else {
        return Ok(None);
    };
    if let Some(p) = patterns.iter().find(|p| p.dim != first.dim) {
        return Err(Error::Dimension {
            expected: first.dim,
            found: p.dim,
        });
    }
    let keyed_by_last = constraints.depends_on_last_letter();

    struct Node {
        pattern: PositivityPattern,
        last: usize,
        parent: Option<usize>,
        depth: usize,
    }
    let word_of = |nodes: &[Node], mut idx: usize| {
        let mut word = Vec::with_capacity(nodes[idx].depth);
        loop {
            word.push(nodes[idx].last);
            match nodes[idx].parent {
                Some(p) => idx = p,
                None => break,
            }
        }
        word.reverse();
        word
    };

    let mut nodes: Vec<Node> = Vec::new();
    let mut seen: HashSet<(PositivityPattern, Option<usize>)> = HashSet::new();
    let mut queue = VecDeque::new();

    let mut visit = |nodes: &mut Vec<Node>,
                     queue: &mut VecDeque<usize>,
                     node: Node|
     -> Result<Option<usize>> {
        let key = (node.pattern.clone(), keyed_by_last.then_some(node.last));
        if !seen.insert(key) {
            return Ok(None);
        }
        if seen.len() > max_states {
            return Err(Error::Budget { budget: max_states });
        }
        let hit = node.pattern.all_true();
        nodes.push(node);
        let idx = nodes.len() - 1;
        queue.push_back(idx);
        Ok(hit.then_some(idx))
    };

    for (letter, p) in patterns.iter().enumerate() {
        if !constraints.can_start[letter] {
            continue;
        }
        let node = Node {
            pattern: p.clone(),
            last: letter,
            parent: None,
            depth: 1,
        };
        if let Some(idx) = visit(&mut nodes, &mut queue, node)? {
            return Ok(Some((word_of(&nodes, idx), 1)));
        }
    }
    while let Some(idx) = queue.pop_front() {
        if max_len.is_some_and(|m| nodes[idx].depth >= m) {
            continue;
        }
        for (letter, p) in patterns.iter().enumerate() {
            if !constraints.can_follow[nodes[idx].last][letter] {
                continue;
            }
            let node = Node {
                pattern: nodes[idx].pattern.boolean_product(p),
                last: letter,
                parent: Some(idx),
                depth: nodes[idx].depth + 1,
            };
            if let Some(hit) = visit(&mut nodes, &mut queue, node)? {
                let word = word_of(&nodes, hit);
                let len = word.len();
                return Ok(Some((word, len)));
            }
        }
    }
    Ok(None)
}
