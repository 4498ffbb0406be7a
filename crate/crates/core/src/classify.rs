//! Hypothesis checks and the survival verdict.
//!
//! The verdict follows the sign of the Lyapunov exponent, read off its
//! confidence interval rather than its point estimate.

use serde::{Deserialize, Serialize};

use crate::lyapunov::{estimate_model_exponent, ExponentKind, LyapunovEstimate};
use crate::matcore::{
    default_max_states, find_positive_product_word_with, product_along_word, WordConstraints,
};
use crate::model::{uniform_allowability_alpha, EnvironmentDistribution, ModelSpec, STATIONARITY_TOLERANCE};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllowabilityOffender {
    pub letter: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositiveWord {
    pub word: Vec<usize>,
    pub letters: Vec<String>,
    pub cylinder_probability: f64,
    /// Smallest entry of the product of expectation matrices along `word`.
    pub product_min_entry: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub ergodic_env_ok: bool,
    pub allowable_ok: bool,
    pub allowability_offenders: Vec<AllowabilityOffender>,
    pub positive_word: Option<PositiveWord>,
    /// Why no positive word was reported, when none was.
    pub positive_word_note: Option<String>,
    pub second_moment_bound: f64,
    /// `None` when some matrix is not allowable.
    pub uniform_alpha: Option<f64>,
    pub strongly_regular: bool,
    pub strong_regularity_witness: Option<String>,
}

impl ConditionReport {
    pub fn hypotheses_met(&self) -> bool {
        self.ergodic_env_ok && self.allowable_ok && self.positive_word.is_some()
    }
}

fn irreducible(transition: &[Vec<f64>]) -> bool {
    let n = transition.len();
    (0..n).all(|start| {
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(a) = stack.pop() {
            for b in 0..n {
                if transition[a][b] > 0.0 && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen.into_iter().all(|s| s)
    })
}

fn word_constraints(env: &EnvironmentDistribution) -> WordConstraints {
    match env {
        EnvironmentDistribution::Iid { probs } => {
            let allowed: Vec<bool> = probs.iter().map(|&p| p > 0.0).collect();
            WordConstraints {
                can_start: allowed.clone(),
                can_follow: vec![allowed; probs.len()],
            }
        }
        EnvironmentDistribution::Markov {
            initial,
            transition,
        } => WordConstraints {
            can_start: initial.iter().map(|&p| p > 0.0).collect(),
            can_follow: transition
                .iter()
                .map(|row| row.iter().map(|&p| p > 0.0).collect())
                .collect(),
        },
    }
}

/// Evaluates every hypothesis of the survival theorem on `model`.
///
/// The positive-word search is limited to words of at most `max_word_len`
/// letters and to the default pattern budget; findings are reported, never
/// raised.
pub fn check_conditions(model: &ModelSpec, max_word_len: usize) -> ConditionReport {
    let env = model.environment();
    let ergodic_env_ok = match env {
        EnvironmentDistribution::Iid { .. } => true,
        EnvironmentDistribution::Markov { transition, .. } => {
            env.stationarity_defect() <= STATIONARITY_TOLERANCE && irreducible(transition)
        }
    };

    let matrices = model.expectation_matrices();
    let allowability_offenders: Vec<AllowabilityOffender> = model
        .letters()
        .iter()
        .zip(&matrices)
        .flat_map(|(letter, m)| {
            m.allowability_defects()
                .into_iter()
                .map(|detail| AllowabilityOffender {
                    letter: letter.name.clone(),
                    detail,
                })
        })
        .collect();
    let allowable_ok = allowability_offenders.is_empty();

    let patterns: Vec<_> = matrices.iter().map(|m| m.pattern()).collect();
    let search = find_positive_product_word_with(
        &patterns,
        &word_constraints(env),
        default_max_states(model.n_types()),
        Some(max_word_len),
    );
    let (positive_word, positive_word_note) = match search {
        Ok(Some((word, _))) => {
            let cylinder_probability = env.cylinder_probability(&word);
            let product = product_along_word(&matrices, &word).expect("letters in range");
            let product_min_entry = product.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
            if cylinder_probability > 0.0 && product_min_entry > 0.0 {
                let letters = word.iter().map(|&w| model.letters()[w].name.clone()).collect();
                (
                    Some(PositiveWord {
                        word,
                        letters,
                        cylinder_probability,
                        product_min_entry,
                    }),
                    None,
                )
            } else {
                (None, Some(format!("witness {word:?} failed numerical re-verification")))
            }
        }
        Ok(None) => (
            None,
            Some(format!(
                "no word of length <= {max_word_len} with positive probability has a strictly positive product"
            )),
        ),
        Err(Error::Budget { budget }) => (
            None,
            Some(format!("search stopped after {budget} patterns")),
        ),
        Err(e) => (None, Some(e.to_string())),
    };

    let uniform_alpha = if allowable_ok {
        uniform_allowability_alpha(model).ok()
    } else {
        None
    };

    let strong_regularity_witness = model
        .letters()
        .iter()
        .enumerate()
        .find(|(li, letter)| {
            env.letter_probability(*li) > 0.0
                && letter.laws.iter().all(|law| {
                    law.support()
                        .iter()
                        .any(|(z, p)| *p > 0.0 && z.total() >= 2)
                })
        })
        .map(|(_, letter)| letter.name.clone());

    ConditionReport {
        ergodic_env_ok,
        allowable_ok,
        allowability_offenders,
        positive_word,
        positive_word_note,
        second_moment_bound: model.second_moment_bound(),
        uniform_alpha,
        strongly_regular: strong_regularity_witness.is_some(),
        strong_regularity_witness,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    SurvivesPositively,
    AlmostSureExtinction,
    CriticalExtinction,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub verdict: VerdictKind,
    pub lambda_estimate: Option<LyapunovEstimate>,
    pub rationale: String,
    pub caveat: Option<String>,
}

/// Verdict from the conditions and an exponent estimate; pure in its inputs.
pub fn classify(report: &ConditionReport, lambda: &LyapunovEstimate) -> Verdict {
    let verdict = |kind, rationale: &str, caveat: Option<&str>| Verdict {
        verdict: kind,
        lambda_estimate: Some(lambda.clone()),
        rationale: rationale.to_string(),
        caveat: caveat.map(str::to_string),
    };
    if !report.hypotheses_met() {
        return verdict(VerdictKind::Inconclusive, "hypotheses unmet", None);
    }
    if lambda.lower() > 0.0 {
        verdict(
            VerdictKind::SurvivesPositively,
            "lambda > 0: the process survives with positive probability from every type",
            None,
        )
    } else if lambda.upper() < 0.0 {
        verdict(
            VerdictKind::AlmostSureExtinction,
            "lambda < 0: the process dies out almost surely",
            None,
        )
    } else if report.strongly_regular {
        verdict(
            VerdictKind::CriticalExtinction,
            "extinct if lambda = 0, by strong regularity",
            Some("the confidence interval contains 0, so the sign of lambda is unresolved"),
        )
    } else {
        verdict(
            VerdictKind::Inconclusive,
            "confidence interval contains 0 and the model is not strongly regular",
            None,
        )
    }
}

/// Checks the conditions, estimates the sum-norm exponent and classifies.
pub fn classify_model(
    model: &ModelSpec,
    steps_per_batch: usize,
    batches: usize,
    seed: u64,
    max_word_len: usize,
) -> Result<(ConditionReport, Verdict)> {
    let report = check_conditions(model, max_word_len);
    match estimate_model_exponent(model, ExponentKind::SumNorm, steps_per_batch, batches, seed) {
        Ok(lambda) => {
            let verdict = classify(&report, &lambda);
            Ok((report, verdict))
        }
        Err(Error::Degenerate { step, reduction }) if !report.hypotheses_met() => {
            let verdict = Verdict {
                verdict: VerdictKind::Inconclusive,
                lambda_estimate: None,
                rationale: "hypotheses unmet".to_string(),
                caveat: Some(format!(
                    "no exponent: the product degenerated at step {step} ({reduction})"
                )),
            };
            Ok((report, verdict))
        }
        Err(e) => Err(e),
    }
}
