//! Brute-force extinction probabilities by forward enumeration of the
//! population distribution, for small models and short words.

use std::collections::HashMap;

use mbpre::{CountVector, EnvironmentDistribution, EnvironmentLetter, ModelSpec, OffspringLaw};
use rand::Rng;

type Dist = HashMap<Vec<u32>, f64>;

fn convolve(a: &Dist, b: &Dist) -> Dist {
    let mut out = Dist::new();
    for (x, px) in a {
        for (y, py) in b {
            let z: Vec<u32> = x.iter().zip(y).map(|(u, v)| u + v).collect();
            *out.entry(z).or_default() += px * py;
        }
    }
    out
}

fn law_dist(law: &OffspringLaw) -> Dist {
    let mut d = Dist::new();
    for (z, p) in law.support() {
        *d.entry(z.entries().to_vec()).or_default() += p;
    }
    d
}

/// Offspring of `count` independent parents sharing `law`.
fn power(law: &OffspringLaw, count: u32, n: usize, memo: &mut HashMap<(usize, u32), Dist>, key: usize) -> Dist {
    if let Some(d) = memo.get(&(key, count)) {
        return d.clone();
    }
    let d = if count == 0 {
        Dist::from([(vec![0; n], 1.0)])
    } else {
        let prev = power(law, count - 1, n, memo, key);
        convolve(&prev, &law_dist(law))
    };
    memo.insert((key, count), d.clone());
    d
}

/// `P(Z_n = 0 | Z_0 = e_k)` for each `k`, with generation `m` using `word[m - 1]`.
pub fn extinction_by_enumeration(model: &ModelSpec, word: &[usize]) -> Vec<f64> {
    let n = model.n_types();
    let (last, prefix) = word.split_last().expect("non-empty word");
    let mut memo = HashMap::new();
    (0..n)
        .map(|k| {
            let mut dist = Dist::from([(CountVector::unit(n, k).entries().to_vec(), 1.0)]);
            for &w in prefix {
                let mut next = Dist::new();
                for (z, pz) in &dist {
                    let mut children = Dist::from([(vec![0; n], 1.0)]);
                    for (i, &c) in z.iter().enumerate() {
                        let key = w * n + i;
                        children = convolve(&children, &power(&model.letters()[w].laws[i], c, n, &mut memo, key));
                    }
                    for (y, py) in children {
                        *next.entry(y).or_default() += pz * py;
                    }
                }
                dist = next;
            }
            let zero = vec![0u32; n];
            let die: Vec<f64> = model.letters()[*last]
                .laws
                .iter()
                .map(|law| law.mass_at(&zero))
                .collect();
            dist.iter()
                .map(|(z, pz)| pz * z.iter().zip(&die).map(|(&c, d)| d.powi(c as i32)).product::<f64>())
                .sum()
        })
        .collect()
}

/// A 2-type law on a random non-empty subset of `{0,1,2}^2`.
pub fn random_small_law<R: Rng>(rng: &mut R) -> OffspringLaw {
    let mut points: Vec<(u32, u32)> = Vec::new();
    while points.is_empty() {
        points = (0..3)
            .flat_map(|a| (0..3).map(move |b| (a, b)))
            .filter(|_| rng.random_bool(0.4))
            .collect();
    }
    let weights: Vec<f64> = points.iter().map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    OffspringLaw::new(
        points
            .into_iter()
            .zip(weights)
            .map(|((a, b), w)| (CountVector::new(vec![a, b]), w / total))
            .collect(),
    )
    .expect("normalised law")
}

pub fn random_small_model<R: Rng>(rng: &mut R) -> ModelSpec {
    let letters = rng.random_range(1..=3);
    ModelSpec::new(
        2,
        (0..letters)
            .map(|l| EnvironmentLetter::new(format!("l{l}"), vec![random_small_law(rng), random_small_law(rng)]))
            .collect(),
        EnvironmentDistribution::uniform(letters),
    )
    .expect("valid model")
}
