use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use mbpre::carpet::{
    build_carpet_model, critical_p, empirical_offspring_stats, intervals_csv, lambda_b, projection_intervals,
    projection_measure, sample_carpet, total_variation,
};
use mbpre::classify::{check_conditions, classify_model};
use mbpre::extinction::{
    annealed_extinction, extinction_converged, extinction_fixed_env, growth_rate_conditioned,
    survival_probability_mc,
};
use mbpre::lyapunov::estimate_model_exponent;
use mbpre::model::{parse_model, write_model};
use mbpre::proofkit::oracle_suite;
use mbpre::{rng, ModelSpec};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::args::*;

/// Bad arguments that clap cannot catch on its own.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// What a subcommand produced: JSON data, plus raw text to print instead
/// of the rendered data in human mode.
pub struct Output {
    pub result: Value,
    pub raw_text: Option<String>,
}

impl From<Value> for Output {
    fn from(result: Value) -> Self {
        Output {
            result,
            raw_text: None,
        }
    }
}

fn load_model(path: &Path) -> Result<ModelSpec> {
    let bytes = fs::read(path)
        .map_err(|e| usage(format!("cannot read model file {}: {e}", path.display())))?;
    parse_model(&bytes).with_context(|| format!("model file {}", path.display()))
}

fn parse_word(model: &ModelSpec, text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .map(|tok| {
            model
                .letter_index(tok)
                .or_else(|| tok.parse().ok())
                .ok_or_else(|| usage(format!("unknown letter `{tok}`")))
        })
        .collect()
}

pub fn run(command: &Command, seed: u64) -> Result<Output> {
    Ok(match command {
        Command::Check(a) => {
            let model = load_model(&a.model)?;
            serde_json::to_value(check_conditions(&model, a.max_word_len))?.into()
        }
        Command::Lyapunov(a) => {
            let model = load_model(&a.model)?;
            let est = estimate_model_exponent(&model, a.kind.into(), a.steps, a.batches, seed)?;
            serde_json::to_value(est)?.into()
        }
        Command::Extinction(a) => extinction(a, seed)?.into(),
        Command::Simulate(a) => {
            let model = load_model(&a.model)?;
            let survival = survival_probability_mc(&model, a.start_type, a.trials, a.horizon, a.cap, seed)?;
            let mut out = json!({ "survival": survival });
            if a.growth {
                let growth = growth_rate_conditioned(&model, a.start_type, a.trials, a.horizon, a.cap, seed)?;
                out["growth"] = serde_json::to_value(growth)?;
            }
            out.into()
        }
        Command::Classify(a) => {
            let model = load_model(&a.model)?;
            let (report, verdict) = classify_model(&model, a.steps, a.batches, seed, a.max_word_len)?;
            json!({ "report": report, "verdict": verdict }).into()
        }
        Command::Carpet(c) => carpet(c, seed)?,
        Command::Proofkit(a) => {
            let model = load_model(&a.model)?;
            let report = oracle_suite(&model, a.lambda, a.samples, seed)?;
            let all_passed = report.failures().is_empty();
            json!({ "all_passed": all_passed, "params": report.params, "checks": report.checks }).into()
        }
    })
}

fn extinction(a: &ExtinctionArgs, seed: u64) -> Result<Value> {
    let model = load_model(&a.model)?;
    Ok(match a.mode {
        ExtinctionMode::Fixed => {
            let text = a
                .word
                .as_deref()
                .ok_or_else(|| usage("--mode fixed needs --word"))?;
            let word = parse_word(&model, text)?;
            serde_json::to_value(extinction_fixed_env(&model, &word)?)?
        }
        ExtinctionMode::Converged => serde_json::to_value(extinction_converged(&model, seed, a.tol, a.max_depth)?)?,
        ExtinctionMode::Annealed => {
            serde_json::to_value(annealed_extinction(&model, a.envs, a.tol, a.max_depth, seed)?)?
        }
    })
}

fn carpet(c: &CarpetCommand, seed: u64) -> Result<Output> {
    Ok(match c {
        CarpetCommand::LambdaB(a) => serde_json::to_value(lambda_b(a.steps, a.batches, seed)?)?.into(),
        CarpetCommand::Critical(a) => {
            let est = lambda_b(a.estimate.steps, a.estimate.batches, seed)?;
            let (p_low, p_high) = critical_p(&est)?;
            let mut out = json!({
                "lambda_b": est,
                "p_low": p_low,
                "p_high": p_high,
                "width": p_high - p_low,
            });
            if a.bisect {
                out["bisection"] = bisect(a, seed)?;
            }
            out.into()
        }
        CarpetCommand::Project(a) => project(a, seed)?.into(),
        CarpetCommand::Offspring(a) => {
            let model = build_carpet_model(a.p)?.model;
            if a.column >= model.letters().len() {
                return Err(usage(format!("column {} outside 0..=2", a.column)));
            }
            let stats = empirical_offspring_stats(a.p, a.column, a.parent_type, a.samples, &mut rng::from_seed(seed))?;
            let law = &model.letters()[a.column].laws[a.parent_type];
            json!({
                "total_variation": total_variation(&stats.pmf, law),
                "model_mean": (0..2).map(|i| law.mean(i)).collect::<Vec<_>>(),
                "empirical": stats,
            })
            .into()
        }
        CarpetCommand::Sample(a) => {
            let set = sample_carpet(a.p, a.depth, &mut rng::from_seed(seed), a.budget)?;
            if let Some(path) = &a.out {
                fs::write(path, set.to_text())
                    .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
            }
            json!({
                "depth": set.depth,
                "squares": set.len(),
                "projection_measure": projection_measure(&set),
            })
            .into()
        }
        CarpetCommand::Model(a) => {
            let doc = write_model(&build_carpet_model(a.p)?.model);
            let value: Value = serde_json::from_str(&doc)?;
            Output {
                result: json!({ "model": value }),
                raw_text: Some(doc),
            }
        }
    })
}

fn project(a: &ProjectArgs, seed: u64) -> Result<Value> {
    if a.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    let sets: Vec<_> = (0..a.samples)
        .into_par_iter()
        .map(|k| sample_carpet(a.p, a.depth, &mut rng::child(seed, k as u64), a.budget))
        .collect::<mbpre::Result<_>>()?;
    if let Some(path) = &a.intervals_csv {
        fs::write(path, intervals_csv(&projection_intervals(&sets[0])))
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    }
    let measures: Vec<f64> = sets.iter().map(projection_measure).collect();
    let nonempty: Vec<f64> = sets
        .iter()
        .zip(&measures)
        .filter(|(s, _)| !s.is_empty())
        .map(|(_, m)| *m)
        .collect();
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    Ok(json!({
        "samples": a.samples,
        "nonempty": nonempty.len(),
        "mean_measure": mean(&measures),
        "mean_measure_nonempty": mean(&nonempty),
        "min_measure": measures.iter().copied().fold(f64::INFINITY, f64::min),
        "max_measure": measures.iter().copied().fold(0.0, f64::max),
    }))
}

/// Bisection on `p` using the simulated survival fraction of a lower
/// triangle up to the horizon. Noisy and biased upward near the threshold;
/// meant only as a cross-check of the analytic interval.
fn bisect(a: &CriticalArgs, seed: u64) -> Result<Value> {
    if !(0.0 < a.lo && a.lo < a.hi && a.hi <= 1.0) {
        return Err(usage("need 0 < --lo < --hi <= 1"));
    }
    let (mut lo, mut hi) = (a.lo, a.hi);
    let mut steps = Vec::new();
    for it in 0..a.iters {
        let mid = (lo + hi) / 2.0;
        let model = build_carpet_model(mid)?.model;
        let s = survival_probability_mc(&model, 1, a.trials, a.horizon, a.cap, seed.wrapping_add(it as u64 + 1))?;
        let survives = s.estimate > a.threshold;
        steps.push(json!({ "p": mid, "survival": s.estimate, "survives": survives }));
        if survives {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(json!({ "p_low": lo, "p_high": hi, "steps": steps }))
}
