#![allow(dead_code)]

use qapnet::bench::{gen_synthetic, PairInstance, SynthConfig};
use qapnet::ngm::{Problem, Sample, Supervision};

/// Bandwidth used by the tests; the library default underflows every
/// off-ground-truth edge once the points are perturbed.
pub const TEST_SIGMA2: f64 = 5e-3;

pub fn pair(n: usize, seed: u64, sigma_n: f64, hyper: bool) -> PairInstance {
    let cfg = SynthConfig {
        num_sets: 1,
        train_per_set: 1,
        test_per_set: 0,
        inliers: n,
        sigma_n,
        sigma2: TEST_SIGMA2,
        hyper,
        seed,
        ..SynthConfig::default()
    };
    gen_synthetic(&cfg).unwrap().train[0].pair(0, 1, &cfg).unwrap()
}

pub fn problem(p: &PairInstance) -> Problem<f64> {
    let base = Problem::new(&p.association().unwrap()).unwrap();
    match &p.tensor {
        Some(t) => base.with_hyper(t).unwrap(),
        None => base,
    }
}

pub fn sample(p: &PairInstance) -> Sample<f64> {
    Sample {
        problem: problem(p),
        target: Supervision::Permutation(p.gt.clone()),
    }
}
