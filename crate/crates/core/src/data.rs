//! Seeded mask sampling and synthetic low-tubal-rank tensors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::solver::ObservationMask;
use crate::tensor::DenseTensor;
use crate::tsvd::t_product;

/// Uniformly random mask with exactly `round(sr * numel)` observed entries.
pub fn sample_mask(shape: &[usize], sr: f64, seed: u64) -> Result<ObservationMask> {
    if !(sr > 0.0 && sr <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sampling rate must lie in (0, 1], got {sr}"
        )));
    }
    let numel: usize = shape.iter().product();
    let k = ((sr * numel as f64).round() as usize).min(numel);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observed = vec![false; numel];
    for i in rand::seq::index::sample(&mut rng, numel, k) {
        observed[i] = true;
    }
    ObservationMask::new(shape.to_vec(), observed)
}

/// Tensor of standard normal entries.
pub fn gaussian(shape: &[usize], rng: &mut ChaCha8Rng) -> Result<DenseTensor> {
    let numel: usize = shape.iter().product();
    let data = (0..numel).map(|_| StandardNormal.sample(&mut *rng)).collect();
    DenseTensor::new(shape.to_vec(), data)
}

/// `A * B` for Gaussian `A` (`n1 x r x n3`) and `B` (`r x n2 x n3`); tubal
/// rank `r` with probability one.
pub fn synth_lowrank(shape: [usize; 3], rank: usize, seed: u64) -> Result<DenseTensor> {
    let [n1, n2, n3] = shape;
    if rank == 0 || rank > n1.min(n2) {
        return Err(Error::InvalidParameter(format!(
            "rank {rank} must lie in 1..={} for shape {shape:?}",
            n1.min(n2)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian(&[n1, rank, n3], &mut rng)?;
    let b = gaussian(&[rank, n2, n3], &mut rng)?;
    t_product(&a, &b)
}
