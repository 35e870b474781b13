//! Shared fixtures for the benchmarks.

use gslope::group_structure::{GroupPartition, GroupedDesign, WeightRule};
use gslope::nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// Nonincreasing sequence spread over `(0, 2]`.
pub fn decreasing(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 2.0 * (len - i) as f64 / len as f64)
        .collect()
}

/// Standardized Gaussian design with `m` groups of size `l`.
pub fn gaussian_design(rng: &mut ChaCha8Rng, n: usize, m: usize, l: usize) -> GroupedDesign {
    let mut x = DMatrix::from_fn(n, m * l, |_, _| rng.sample::<f64, _>(StandardNormal));
    for mut c in x.column_iter_mut() {
        let mean = c.mean();
        c.add_scalar_mut(-mean);
        let norm = c.norm();
        c /= norm;
    }
    GroupedDesign::new(x, GroupPartition::contiguous(&vec![l; m]).unwrap())
        .unwrap()
        .with_weight_rule(WeightRule::SqrtSize)
        .unwrap()
}
