//! Comparison maps behind the survival argument, and an oracle suite that
//! checks their inequalities pointwise on random inputs.
//!
//! With `A_theta = rho * M_theta` and `rho * e^lambda > 1`, the affine maps
//! `g_theta(s) = 1 - A_theta (1 - s)` dominate the pgf vectors near `1`.
//! Clamping the argument into the box `B_delta = {s : |1 - s|_inf <= delta}`
//! through `psi` gives `h_theta = g_theta o psi`, which dominates `f_theta`
//! on all of `[0,1]^N` and along every word.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::matcore::NonNegMatrix;
use crate::model::{uniform_allowability_alpha, ModelSpec};
use crate::{rng, Error, Result};

/// Safety factor applied to the allowability mass so the bound is strict.
pub const ALPHA_MARGIN: f64 = 0.999;
/// Safety factor applied to the second-moment bound so the bound is strict.
pub const MOMENT_MARGIN: f64 = 1.001;
/// Slack for floating-point comparisons in the oracle checks.
pub const CHECK_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofParams {
    pub lambda: f64,
    pub rho: f64,
    pub alpha: f64,
    pub n_types: usize,
    pub m_bound: f64,
    pub delta: f64,
    pub mu: f64,
    pub u: f64,
    /// `A_theta = rho * M_theta`, one per letter.
    pub decreased: Vec<NonNegMatrix>,
}

impl ProofParams {
    /// Fills in `rho`, `delta`, `mu` and `u` from the given constants.
    pub fn from_parts(
        lambda: f64,
        alpha: f64,
        m_bound: f64,
        expectation: &[NonNegMatrix],
    ) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::contract(format!("lambda = {lambda} must be positive")));
        }
        if !(alpha > 0.0) || !(m_bound > 0.0) {
            return Err(Error::contract("alpha and the moment bound must be positive"));
        }
        let n_types = expectation
            .first()
            .ok_or_else(|| Error::contract("no expectation matrices"))?
            .dim();
        let rho = {
            let r = (-lambda / 2.0).exp();
            if r > 0.0 && r < 1.0 {
                r
            } else {
                ((-lambda).exp() + 1.0) / 2.0
            }
        };
        let decreased: Vec<NonNegMatrix> = expectation.iter().map(|m| m.scaled(rho)).collect();
        let delta = (1.0 - rho) * alpha / (2.0 * n_types as f64 * m_bound);
        let mu = decreased
            .iter()
            .map(NonNegMatrix::col_min)
            .fold(1.0, f64::min);
        let u = decreased
            .iter()
            .filter_map(NonNegMatrix::min_positive)
            .fold(1.0, f64::min);
        Ok(ProofParams {
            lambda,
            rho,
            alpha,
            n_types,
            m_bound,
            delta,
            mu,
            u,
            decreased,
        })
    }
}

/// Constants for `model` given its (positive) Lyapunov exponent.
///
/// The moment bound is floored at `(1 - rho) alpha / N`, which keeps
/// `delta <= 1/2`; any larger bound is still a valid bound.
pub fn build_proof_params(model: &ModelSpec, lambda: f64) -> Result<ProofParams> {
    if !(lambda > 0.0) {
        return Err(Error::contract(format!("lambda = {lambda} must be positive")));
    }
    let alpha = uniform_allowability_alpha(model)? * ALPHA_MARGIN;
    let n = model.n_types() as f64;
    let rho_probe = ProofParams::from_parts(lambda, alpha, 1.0, &model.expectation_matrices())?.rho;
    let m_bound = (model.second_moment_bound() * MOMENT_MARGIN).max((1.0 - rho_probe) * alpha / n);
    ProofParams::from_parts(lambda, alpha, m_bound, &model.expectation_matrices())
}

/// Raises every coordinate below `1 - delta` to `1 - delta`.
pub fn psi(s: &[f64], delta: f64) -> Vec<f64> {
    let floor = 1.0 - delta;
    s.iter().map(|&x| if x >= floor { x } else { floor }).collect()
}

/// `1 - A (1 - s)`; may leave the unit cube.
pub fn g_eval(a: &NonNegMatrix, s: &[f64]) -> Vec<f64> {
    let gap: Vec<f64> = s.iter().map(|x| 1.0 - x).collect();
    a.apply(&gap).into_iter().map(|v| 1.0 - v).collect()
}

pub fn h_eval(a: &NonNegMatrix, s: &[f64], delta: f64) -> Vec<f64> {
    g_eval(a, &psi(s, delta))
}

/// `N - N v + v t`; every `phi_v` fixes `t = N`.
pub fn phi(v: f64, t: f64, n: usize) -> f64 {
    let n = n as f64;
    n - n * v + v * t
}

fn compose<F>(word: &[usize], s: &[f64], mut step: F) -> Vec<f64>
where
    F: FnMut(usize, &[f64]) -> Vec<f64>,
{
    word.iter().rev().fold(s.to_vec(), |acc, &w| step(w, &acc))
}

fn norm1(v: &[f64]) -> f64 {
    v.iter().sum()
}

/// One named inequality and how it fared.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    pub passed: bool,
    pub samples: usize,
    pub counterexample: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub params: ProofParams,
    pub checks: Vec<CheckResult>,
}

impl OracleReport {
    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check == name)
    }
}

/// Names of the checks in report order.
pub const CHECK_NAMES: [&str; 14] = [
    "psi_dominates_identity",
    "psi_monotone",
    "h_equals_g_near_one",
    "h_fixes_one",
    "h_monotone",
    "h_word_dominates_f_word",
    "h_nonnegative",
    "h_large_norm_forces_near_one",
    "g_dominates_f_near_one",
    "g_norm_contracts",
    "g_word_norm_contracts",
    "pgf_bounded_away_from_one",
    "zero_mean_means_no_children",
    "g_word_is_affine",
];

struct Ctx<'a> {
    model: &'a ModelSpec,
    p: &'a ProofParams,
    samples: usize,
}

impl Ctx<'_> {
    fn n(&self) -> usize {
        self.model.n_types()
    }

    fn letters(&self) -> usize {
        self.model.letters().len()
    }

    fn uniform<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.n()).map(|_| rng.random::<f64>()).collect()
    }

    fn near_one<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.n())
            .map(|_| 1.0 - self.p.delta * rng.random::<f64>())
            .collect()
    }

    fn word<R: Rng>(&self, rng: &mut R, max_len: usize) -> Vec<usize> {
        let len = rng.random_range(1..=max_len);
        (0..len).map(|_| rng.random_range(0..self.letters())).collect()
    }

    fn f(&self, letter: usize, s: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; s.len()];
        self.model.letters()[letter].pgf_vector_into(s, &mut out);
        out
    }

    fn a(&self, letter: usize) -> &NonNegMatrix {
        &self.p.decreased[letter]
    }

    fn h(&self, letter: usize, s: &[f64]) -> Vec<f64> {
        h_eval(self.a(letter), s, self.p.delta)
    }

    fn g(&self, letter: usize, s: &[f64]) -> Vec<f64> {
        g_eval(self.a(letter), s)
    }

    /// Pulls `s` toward `1` until `g(s) >= 0` componentwise.
    fn sample_g_nonnegative<R: Rng>(
        &self,
        rng: &mut R,
        g: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Vec<f64> {
        for _ in 0..64 {
            let s = self.uniform(rng);
            if g(&s).iter().all(|&v| v >= 0.0) {
                return s;
            }
        }
        let mut s = self.uniform(rng);
        while g(&s).iter().any(|&v| v < 0.0) {
            s.iter_mut().for_each(|x| *x = (1.0 + *x) / 2.0);
        }
        s
    }
}

fn leq(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| *x <= *y + CHECK_SLACK)
}

/// Runs `trial` up to `samples` times and keeps the first counterexample.
fn run_check<R: Rng>(
    name: &str,
    samples: usize,
    rng: &mut R,
    mut trial: impl FnMut(&mut R) -> Option<Value>,
) -> CheckResult {
    for _ in 0..samples {
        if let Some(cx) = trial(rng) {
            return CheckResult {
                check: name.to_string(),
                passed: false,
                samples,
                counterexample: Some(cx),
                note: None,
            };
        }
    }
    CheckResult {
        check: name.to_string(),
        passed: true,
        samples,
        counterexample: None,
        note: None,
    }
}

pub fn oracle_suite(model: &ModelSpec, lambda: f64, samples: usize, seed: u64) -> Result<OracleReport> {
    let params = build_proof_params(model, lambda)?;
    oracle_suite_with_params(model, &params, samples, seed)
}

/// Runs every check against explicitly supplied constants, e.g. deliberately
/// corrupted ones.
pub fn oracle_suite_with_params(
    model: &ModelSpec,
    params: &ProofParams,
    samples: usize,
    seed: u64,
) -> Result<OracleReport> {
    if params.decreased.len() != model.letters().len() || params.n_types != model.n_types() {
        return Err(Error::contract("proof parameters do not belong to this model"));
    }
    if !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(Error::contract(format!(
            "delta = {} must lie in (0, 1)",
            params.delta
        )));
    }
    let cx = Ctx {
        model,
        p: params,
        samples,
    };
    let checks = CHECK_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mut rng = rng::child(seed, i as u64);
            run_named(&cx, name, &mut rng)
        })
        .collect();
    Ok(OracleReport {
        params: params.clone(),
        checks,
    })
}

fn run_named<R: Rng>(cx: &Ctx, name: &str, rng: &mut R) -> CheckResult {
    let n = cx.n();
    let delta = cx.p.delta;
    let samples = cx.samples;
    match name {
        "psi_dominates_identity" => run_check(name, samples, rng, |r| {
            let s = cx.uniform(r);
            let t = psi(&s, delta);
            (!leq(&s, &t)).then(|| json!({"s": s, "psi": t}))
        }),
        "psi_monotone" => run_check(name, samples, rng, |r| {
            let s = cx.uniform(r);
            let t: Vec<f64> = s.iter().map(|x| x + r.random::<f64>() * (1.0 - x)).collect();
            let (ps, pt) = (psi(&s, delta), psi(&t, delta));
            (!leq(&ps, &pt)).then(|| json!({"s": s, "t": t, "psi_s": ps, "psi_t": pt}))
        }),
        "h_equals_g_near_one" => run_check(name, samples, rng, |r| {
            let s = cx.near_one(r);
            let letter = r.random_range(0..cx.letters());
            let (h, g) = (cx.h(letter, &s), cx.g(letter, &s));
            let same = h.iter().zip(&g).all(|(a, b)| (a - b).abs() <= CHECK_SLACK);
            (!same).then(|| json!({"s": s, "letter": letter, "h": h, "g": g}))
        }),
        "h_fixes_one" => {
            let ones = vec![1.0; n];
            let mut letters = 0..cx.letters();
            let mut res = run_check(name, cx.letters(), rng, |_| {
                let letter = letters.next()?;
                let h = cx.h(letter, &ones);
                h.iter()
                    .any(|v| (v - 1.0).abs() > CHECK_SLACK)
                    .then(|| json!({"letter": letter, "h": h}))
            });
            res.samples = cx.letters();
            res
        }
        "h_monotone" => run_check(name, samples, rng, |r| {
            let s = cx.uniform(r);
            let t: Vec<f64> = s.iter().map(|x| x + r.random::<f64>() * (1.0 - x)).collect();
            let letter = r.random_range(0..cx.letters());
            let (hs, ht) = (cx.h(letter, &s), cx.h(letter, &t));
            (!leq(&hs, &ht)).then(|| json!({"s": s, "t": t, "letter": letter, "h_s": hs, "h_t": ht}))
        }),
        "h_word_dominates_f_word" => run_check(name, samples, rng, |r| {
            let word = cx.word(r, 8);
            let s = cx.uniform(r);
            let h = compose(&word, &s, |w, x| cx.h(w, x));
            let f = compose(&word, &s, |w, x| cx.f(w, x));
            (!leq(&f, &h)).then(|| json!({"word": word, "s": s, "h": h, "f": f}))
        }),
        "h_nonnegative" => run_check(name, samples, rng, |r| {
            let s = cx.uniform(r);
            let letter = r.random_range(0..cx.letters());
            let h = cx.h(letter, &s);
            h.iter()
                .any(|&v| v < -CHECK_SLACK)
                .then(|| json!({"s": s, "letter": letter, "h": h}))
        }),
        "h_large_norm_forces_near_one" => {
            // For s outside B_delta, |h(s)| <= N - u delta, so no v above
            // that level is reached.
            let level = n as f64 - cx.p.u * delta;
            run_check(name, samples, rng, |r| {
                let mut s = cx.uniform(r);
                if s.iter().all(|&x| 1.0 - x <= delta) {
                    let j = r.random_range(0..n);
                    s[j] = (1.0 - delta) * r.random::<f64>();
                }
                let letter = r.random_range(0..cx.letters());
                let h = cx.h(letter, &s);
                (norm1(&h) > level + CHECK_SLACK)
                    .then(|| json!({"s": s, "letter": letter, "norm_h": norm1(&h), "level": level}))
            })
        }
        "g_dominates_f_near_one" => run_check(name, samples, rng, |r| {
            let s = cx.near_one(r);
            let letter = r.random_range(0..cx.letters());
            let (g, f) = (cx.g(letter, &s), cx.f(letter, &s));
            (!leq(&f, &g)).then(|| json!({"s": s, "letter": letter, "g": g, "f": f}))
        }),
        "g_norm_contracts" => run_check(name, samples, rng, |r| {
            let letter = r.random_range(0..cx.letters());
            let s = cx.sample_g_nonnegative(r, |x| cx.g(letter, x));
            let g = cx.g(letter, &s);
            let bound = phi(cx.p.mu, norm1(&s), n);
            (norm1(&g) > bound + CHECK_SLACK)
                .then(|| json!({"s": s, "letter": letter, "norm_g": norm1(&g), "bound": bound}))
        }),
        "g_word_norm_contracts" => g_word_norm_check(cx, name, rng),
        "pgf_bounded_away_from_one" => {
            let p_star = cx.p.alpha / 2.0;
            run_check(name, samples, rng, |r| {
                let letter = r.random_range(0..cx.letters());
                let k = r.random_range(0..n);
                let m = cx.model.letters()[letter].expectation_matrix();
                let support: Vec<usize> = (0..n).filter(|&i| m.get(k, i) > 0.0).collect();
                if support.is_empty() {
                    return None;
                }
                let i = support[r.random_range(0..support.len())];
                let shrink = loop {
                    let d = r.random::<f64>();
                    if d > 0.0 {
                        break d;
                    }
                };
                let mut s = cx.uniform(r);
                s[i] = (1.0 - shrink) * r.random::<f64>();
                let f = cx.model.letters()[letter].laws[k].pgf_unchecked(&s);
                let bound = 1.0 - p_star * shrink;
                (f >= bound).then(
                    || json!({"s": s, "letter": letter, "parent": k, "child": i, "shrink": shrink, "f": f, "bound": bound}),
                )
            })
        }
        "zero_mean_means_no_children" => {
            let mut offenders = Vec::new();
            let mut triples = 0;
            for (li, letter) in cx.model.letters().iter().enumerate() {
                let m = letter.expectation_matrix();
                for k in 0..n {
                    for i in 0..n {
                        if m.get(k, i) != 0.0 {
                            continue;
                        }
                        triples += 1;
                        for (z, p) in letter.laws[k].support() {
                            if z.entries()[i] > 0 && *p != 0.0 {
                                offenders.push(json!({"letter": li, "parent": k, "child": i, "z": z.entries(), "p": p}));
                            }
                        }
                    }
                }
            }
            CheckResult {
                check: name.to_string(),
                passed: offenders.is_empty(),
                samples: triples,
                counterexample: offenders.into_iter().next(),
                note: None,
            }
        }
        "g_word_is_affine" => run_check(name, samples, rng, |r| {
            let word = cx.word(r, 8);
            let s = cx.uniform(r);
            let composed = compose(&word, &s, |w, x| cx.g(w, x));
            let product = crate::matcore::product_along_word(&cx.p.decreased, &word)
                .expect("letters in range");
            let direct = g_eval(&product, &s);
            let same = composed
                .iter()
                .zip(&direct)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            (!same).then(|| json!({"word": word, "s": s, "composed": composed, "direct": direct}))
        }),
        other => unreachable!("unknown check {other}"),
    }
}

/// Along words with `(A_w)_* >= gamma^n`, `|g_w(s)| <= phi_gamma(|s|)` when
/// `g_w(s) >= 0`; `gamma = exp((log rho + lambda) / 2)`.
fn g_word_norm_check<R: Rng>(cx: &Ctx, name: &str, rng: &mut R) -> CheckResult {
    const WORD_LEN: usize = 32;
    let n = cx.n();
    let gamma = ((cx.p.rho.ln() + cx.p.lambda) / 2.0).exp();
    let mut tried = 0;
    let mut used = 0;
    let mut result = run_check(name, cx.samples, rng, |r| {
        tried += 1;
        let word: Vec<usize> = (0..WORD_LEN)
            .map(|_| r.random_range(0..cx.letters()))
            .collect();
        let a = crate::matcore::product_along_word(&cx.p.decreased, &word).expect("letters in range");
        if a.col_min() < gamma.powi(WORD_LEN as i32) {
            return None;
        }
        used += 1;
        let s = cx.sample_g_nonnegative(r, |x| g_eval(&a, x));
        let g = g_eval(&a, &s);
        let bound = phi(gamma, norm1(&s), n);
        (norm1(&g) > bound + CHECK_SLACK).then(|| json!({"word": word, "s": s, "norm_g": norm1(&g), "bound": bound}))
    });
    result.note = Some(format!(
        "gamma = {gamma:.6}; evaluated on {used} of {tried} random words of length {WORD_LEN} with column-sum minimum >= gamma^n"
    ));
    result
}
