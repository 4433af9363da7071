//! Inputs shared by the criterion benchmarks.

use fgbd_core::synthetic::{dense_bits, generate, random_voxels, SyntheticKind};
use fgbd_core::{add_gaussian_noise, PointCloud};

/// Random voxel cloud in the smallest cube that holds `n` points.
pub fn random_cloud(n: usize) -> PointCloud {
    random_voxels(n, dense_bits(n), 7).expect("valid bench size")
}

/// Two-tone lattice with sigma-20 colour noise.
pub fn noisy_two_tone(n: usize) -> PointCloud {
    let clean = generate(SyntheticKind::TwoTone, n, None).expect("valid bench size").cloud;
    add_gaussian_noise(&clean, 20.0, 0).expect("sigma is valid")
}
