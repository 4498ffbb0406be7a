use mbpre::carpet::{
    build_carpet_model, carpet_matrices, empirical_offspring_stats, projection_measure, sample_carpet,
    total_variation, SquareSet, DEFAULT_SQUARE_BUDGET, LOWER, UPPER,
};
use mbpre::rng;
use rand::Rng;

#[test]
fn expectations_match_scaled_b_for_random_p() {
    let mut r = rng::from_seed(1);
    let b = carpet_matrices();
    for _ in 0..100 {
        let p: f64 = r.random_range(1e-3..1.0);
        let m = build_carpet_model(p).unwrap().model.expectation_matrices();
        for (mm, bb) in m.iter().zip(&b) {
            for (x, y) in mm.as_slice().iter().zip(bb.as_slice()) {
                assert!((x - p * y).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn geometric_laws_match_the_model() {
    let p = 0.4;
    let model = build_carpet_model(p).unwrap().model;
    for column in 0..3 {
        for parent in [UPPER, LOWER] {
            let mut r = rng::child(77, (column * 2 + parent) as u64);
            let stats = empirical_offspring_stats(p, column, parent, 100_000, &mut r).unwrap();
            let law = &model.letters()[column].laws[parent];
            let tv = total_variation(&stats.pmf, law);
            assert!(tv < 0.02, "column {column} parent {parent}: tv {tv}");
        }
    }
}

#[test]
fn lower_column_zero_counts_are_uncorrelated() {
    let p = 0.5;
    let n = 100_000;
    let s = empirical_offspring_stats(p, 0, LOWER, n, &mut rng::from_seed(9)).unwrap();
    let mut exy = 0.0;
    for (z, q) in &s.pmf {
        exy += q * z.entries()[0] as f64 * z.entries()[1] as f64;
    }
    let cov = exy - s.mean[0] * s.mean[1];
    // Both counts are Bin(2, 1/2): the product has variance
    // E[X^2]E[Y^2] - (EX EY)^2 = 1.5^2 - 1 under independence.
    let sigma = ((1.5f64 * 1.5 - 1.0) / n as f64).sqrt();
    assert!(cov.abs() < 3.0 * sigma, "cov {cov}, sigma {sigma}");
}

#[test]
fn sampled_carpets_are_valid_and_sized() {
    let samples = 1000;
    let mut total = 0usize;
    for k in 0..samples {
        let set = sample_carpet(0.5, 6, &mut rng::child(4, k), DEFAULT_SQUARE_BUDGET).unwrap();
        assert!(set.is_valid());
        total += set.len();
    }
    let mean = total as f64 / samples as f64;
    assert!((mean - 4096.0).abs() < 0.05 * 4096.0, "{mean}");
}

#[test]
fn refinement_never_grows_the_projection() {
    for k in 0..50 {
        let mut r = rng::child(6, k);
        let mut set = SquareSet::unit();
        let mut prev = projection_measure(&set);
        assert_eq!(prev, 2.0);
        for _ in 0..6 {
            set = set.refine(0.6, &mut r, DEFAULT_SQUARE_BUDGET).unwrap();
            let m = projection_measure(&set);
            assert!(m <= prev + 1e-15);
            prev = m;
        }
    }
}

/// Mean projection measure at depths `from..=to` over `samples` carpets.
fn mean_measures(p: f64, from: u32, to: u32, samples: u64, seed: u64, nonempty_only: bool) -> Vec<f64> {
    let mut sums = vec![0.0; (to - from + 1) as usize];
    let mut counts = vec![0usize; sums.len()];
    for k in 0..samples {
        let mut r = rng::child(seed, k);
        let mut set = sample_carpet(p, from, &mut r, DEFAULT_SQUARE_BUDGET).unwrap();
        for d in from..=to {
            if d > from {
                set = set.refine(p, &mut r, DEFAULT_SQUARE_BUDGET).unwrap();
            }
            let i = (d - from) as usize;
            if !nonempty_only || !set.is_empty() {
                sums[i] += projection_measure(&set);
                counts[i] += 1;
            }
        }
    }
    sums.iter().zip(&counts).map(|(s, &c)| s / c.max(1) as f64).collect()
}

#[test]
fn projection_floor_above_critical() {
    let m = mean_measures(0.4, 8, 8, 200, 40, true);
    assert!(m[0] > 0.2, "{m:?}");
}

#[test]
fn projection_vanishes_below_critical() {
    let m = mean_measures(0.15, 4, 8, 200, 15, false);
    assert!(m[4] < 0.05, "{m:?}");
    assert!(m.windows(2).all(|w| w[1] < w[0]), "{m:?}");
}
