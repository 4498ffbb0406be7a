//! Extinction probabilities and population simulation.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lyapunov::Z_95;
use crate::model::{LawSampler, ModelSpec};
use crate::{rng, Error, Result};

/// `q_n(theta)`: per starting type, the probability of being extinct by
/// generation `depth`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionVector {
    pub q: Vec<f64>,
    pub depth: usize,
}

/// Result of the depth-doubling limit `q = lim q_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergedExtinction {
    pub q: Vec<f64>,
    pub depth: usize,
    /// False when `max_depth` was reached before two successive depths agreed.
    pub converged: bool,
}

/// First depth compared against; the schedule is 32 (baseline), 64, 128, ...
pub const BASE_DEPTH: usize = 64;

fn check_letters(model: &ModelSpec, word: &[usize]) -> Result<()> {
    let len = model.letters().len();
    match word.iter().find(|&&w| w >= len) {
        Some(&index) => Err(Error::IndexOutOfRange { index, len }),
        None => Ok(()),
    }
}

/// `f_{theta_1} o ... o f_{theta_n}(0)`, evaluated from the innermost letter out.
pub fn extinction_fixed_env(model: &ModelSpec, word: &[usize]) -> Result<ExtinctionVector> {
    if word.is_empty() {
        return Err(Error::contract("environment word must be non-empty"));
    }
    check_letters(model, word)?;
    Ok(ExtinctionVector {
        q: compose_at_zero(model, word),
        depth: word.len(),
    })
}

fn compose_at_zero(model: &ModelSpec, word: &[usize]) -> Vec<f64> {
    let n = model.n_types();
    let mut s = vec![0.0; n];
    let mut next = vec![0.0; n];
    for &w in word.iter().rev() {
        model.letters()[w].pgf_vector_into(&s, &mut next);
        std::mem::swap(&mut s, &mut next);
    }
    s
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Extinction vector of one sampled environment, deepened until two
/// successive depths agree within `tol`.
pub fn extinction_converged(
    model: &ModelSpec,
    seed: u64,
    tol: f64,
    max_depth: usize,
) -> Result<ConvergedExtinction> {
    extinction_converged_with(model, &mut rng::from_seed(seed), tol, max_depth)
}

pub fn extinction_converged_with<R: Rng + ?Sized>(
    model: &ModelSpec,
    rng: &mut R,
    tol: f64,
    max_depth: usize,
) -> Result<ConvergedExtinction> {
    if !(tol > 0.0) {
        return Err(Error::contract("tol must be positive"));
    }
    if max_depth < 2 {
        return Err(Error::contract("max_depth must be at least 2"));
    }
    let mut env = model.environment().sampler();
    let mut word: Vec<usize> = Vec::new();
    let mut extend = |word: &mut Vec<usize>, depth: usize| {
        while word.len() < depth {
            word.push(env.next_letter(rng));
        }
    };

    let mut depth = BASE_DEPTH.min(max_depth);
    let baseline = (depth / 2).max(1);
    extend(&mut word, baseline);
    let mut prev = compose_at_zero(model, &word[..baseline]);
    loop {
        extend(&mut word, depth);
        let q = compose_at_zero(model, &word[..depth]);
        let converged = sup_distance(&q, &prev) < tol;
        if converged || depth >= max_depth {
            return Ok(ConvergedExtinction {
                q,
                depth,
                converged,
            });
        }
        prev = q;
        depth = (depth * 2).min(max_depth);
    }
}

/// Average of the converged extinction vector over independent environments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealedExtinction {
    pub mean_q: Vec<f64>,
    pub share_converged: f64,
    pub n_envs: usize,
}

/// Environment `e` is drawn from the child stream `(seed, e)`.
pub fn annealed_extinction(
    model: &ModelSpec,
    n_envs: usize,
    tol: f64,
    max_depth: usize,
    seed: u64,
) -> Result<AnnealedExtinction> {
    if n_envs == 0 {
        return Err(Error::contract("n_envs must be at least 1"));
    }
    let runs: Vec<ConvergedExtinction> = (0..n_envs)
        .into_par_iter()
        .map(|e| extinction_converged_with(model, &mut rng::child(seed, e as u64), tol, max_depth))
        .collect::<Result<_>>()?;
    let n = model.n_types();
    let mut mean_q = vec![0.0; n];
    for r in &runs {
        for (m, q) in mean_q.iter_mut().zip(&r.q) {
            *m += q;
        }
    }
    mean_q.iter_mut().for_each(|m| *m /= n_envs as f64);
    let converged = runs.iter().filter(|r| r.converged).count();
    Ok(AnnealedExtinction {
        mean_q,
        share_converged: converged as f64 / n_envs as f64,
        n_envs,
    })
}

/// How a simulated population run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Extinct { generation: usize },
    AliveAtHorizon,
    /// Total population passed the cap; the run was frozen at `generation`.
    CapExceeded { generation: usize },
}

impl Outcome {
    pub fn survived(&self) -> bool {
        !matches!(self, Outcome::Extinct { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `Z_0, Z_1, ...` up to the last simulated generation.
    pub generations: Vec<Vec<u64>>,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn last(&self) -> &[u64] {
        self.generations.last().expect("trajectory holds Z_0")
    }

    pub fn last_generation(&self) -> usize {
        self.generations.len() - 1
    }
}

/// Offspring samplers for every `(letter, parent type)`.
#[derive(Clone, Debug)]
pub struct PopulationSampler {
    samplers: Vec<Vec<LawSampler>>,
}

impl PopulationSampler {
    pub fn new(model: &ModelSpec) -> Self {
        PopulationSampler {
            samplers: model
                .letters()
                .iter()
                .map(|l| l.laws.iter().map(LawSampler::new).collect())
                .collect(),
        }
    }

    fn run<R: Rng + ?Sized>(
        &self,
        word: &[usize],
        z0: &[u64],
        horizon: usize,
        cap: u64,
        rng: &mut R,
    ) -> Trajectory {
        let n = z0.len();
        let mut generations = vec![z0.to_vec()];
        for g in 1..=horizon {
            let parents = &generations[g - 1];
            let mut next = vec![0u64; n];
            for (sampler, &count) in self.samplers[word[g - 1]].iter().zip(parents) {
                sampler.add_offspring(count, rng, &mut next);
            }
            let total: u64 = next.iter().sum();
            generations.push(next);
            if total == 0 {
                return Trajectory {
                    generations,
                    outcome: Outcome::Extinct { generation: g },
                };
            }
            if total > cap {
                return Trajectory {
                    generations,
                    outcome: Outcome::CapExceeded { generation: g },
                };
            }
        }
        Trajectory {
            generations,
            outcome: Outcome::AliveAtHorizon,
        }
    }
}

/// Simulates `Z_n` in the fixed environment `word` starting from `z0`.
pub fn simulate_generations<R: Rng + ?Sized>(
    model: &ModelSpec,
    word: &[usize],
    z0: &[u64],
    horizon: usize,
    cap: u64,
    rng: &mut R,
) -> Result<Trajectory> {
    if z0.len() != model.n_types() {
        return Err(Error::Dimension {
            expected: model.n_types(),
            found: z0.len(),
        });
    }
    if z0.iter().sum::<u64>() == 0 {
        return Err(Error::contract("initial population must be non-empty"));
    }
    if cap == 0 {
        return Err(Error::contract("cap must be at least 1"));
    }
    if word.len() < horizon {
        return Err(Error::contract(format!(
            "environment word has {} letters, horizon needs {horizon}",
            word.len()
        )));
    }
    check_letters(model, &word[..horizon])?;
    Ok(PopulationSampler::new(model).run(word, z0, horizon, cap, rng))
}

fn unit_start(model: &ModelSpec, start_type: usize) -> Result<Vec<u64>> {
    if start_type >= model.n_types() {
        return Err(Error::IndexOutOfRange {
            index: start_type,
            len: model.n_types(),
        });
    }
    let mut z0 = vec![0u64; model.n_types()];
    z0[start_type] = 1;
    Ok(z0)
}

/// Trial `t` draws its environment and offspring from the child stream `(seed, t)`.
fn run_trials(
    model: &ModelSpec,
    start_type: usize,
    trials: usize,
    horizon: usize,
    cap: u64,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    if trials == 0 {
        return Err(Error::contract("trials must be at least 1"));
    }
    if cap == 0 {
        return Err(Error::contract("cap must be at least 1"));
    }
    let z0 = unit_start(model, start_type)?;
    let pop = PopulationSampler::new(model);
    let env = model.environment();
    Ok((0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::child(seed, t as u64);
            let word = env.sampler().word(horizon, &mut rng);
            pop.run(&word, &z0, horizon, cap, &mut rng)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    pub estimate: f64,
    /// Half the width of the 95% Wilson interval.
    pub half_width: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub survived: usize,
    pub trials: usize,
}

fn wilson(successes: usize, n: usize) -> (f64, f64) {
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let spread = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - spread).max(0.0), (centre + spread).min(1.0))
}

/// Fraction of runs alive at the horizon; runs that pass the cap count as
/// survivors.
pub fn survival_probability_mc(
    model: &ModelSpec,
    start_type: usize,
    trials: usize,
    horizon: usize,
    cap: u64,
    seed: u64,
) -> Result<SurvivalEstimate> {
    let runs = run_trials(model, start_type, trials, horizon, cap, seed)?;
    let survived = runs.iter().filter(|r| r.outcome.survived()).count();
    let (lo, hi) = wilson(survived, trials);
    Ok(SurvivalEstimate {
        estimate: survived as f64 / trials as f64,
        half_width: (hi - lo) / 2.0,
        wilson_low: lo,
        wilson_high: hi,
        survived,
        trials,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    pub estimate: f64,
    /// `1.96 * sd / sqrt(k)` over the `k` surviving runs; `null` when `k < 2`.
    pub half_width: Option<f64>,
    pub surviving_trials: usize,
    pub trials: usize,
}

/// Mean of `(1/n*) log ||Z_{n*}||` over surviving runs, `n*` being the last
/// simulated generation (the horizon, or the generation the cap was passed).
pub fn growth_rate_conditioned(
    model: &ModelSpec,
    start_type: usize,
    trials: usize,
    horizon: usize,
    cap: u64,
    seed: u64,
) -> Result<GrowthEstimate> {
    if horizon < 20 {
        return Err(Error::contract("horizon must be at least 20"));
    }
    let runs = run_trials(model, start_type, trials, horizon, cap, seed)?;
    let rates: Vec<f64> = runs
        .iter()
        .filter(|r| r.outcome.survived())
        .map(|r| {
            let total: u64 = r.last().iter().sum();
            (total as f64).ln() / r.last_generation() as f64
        })
        .collect();
    if rates.is_empty() {
        return Err(Error::NoSurvivors { trials });
    }
    let k = rates.len() as f64;
    let mean = rates.iter().sum::<f64>() / k;
    let half_width = (rates.len() >= 2).then(|| {
        let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1.0);
        Z_95 * var.sqrt() / k.sqrt()
    });
    Ok(GrowthEstimate {
        estimate: mean,
        half_width,
        surviving_trials: rates.len(),
        trials,
    })
}
