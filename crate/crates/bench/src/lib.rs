//! Fixtures shared by the criterion benches.

use massart_core::{generate_dataset, Dataset, MassartInstance, NoiseModel};

pub const GAMMA: f64 = 0.1;
pub const ETA: f64 = 0.2;

/// Constant-noise instance at the bench margin and noise rate.
pub fn instance(dim: usize, seed: u64) -> MassartInstance {
    MassartInstance::random(dim, GAMMA, ETA, NoiseModel::ConstantRate { rate: ETA }, seed)
        .expect("valid bench instance")
}

pub fn dataset(dim: usize, n: usize, seed: u64) -> Dataset {
    generate_dataset(&instance(dim, seed), n, seed).expect("valid bench dataset")
}
