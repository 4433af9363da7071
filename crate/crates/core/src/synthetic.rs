//! Deterministic synthetic clouds for tests, benchmarks and desk-scale
//! experiments.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cloud::{bits_for, PointCloud, Rgb};
use crate::error::{Error, Result};

/// Mid-gray used by the constant cloud.
pub const MID_GRAY: Rgb = [128.0; 3];
/// Colours on either side of the two-tone boundary.
pub const TWO_TONE: [Rgb; 2] = [[190.0, 90.0, 70.0], [70.0, 110.0, 190.0]];
/// Ramp endpoints; colour moves linearly along the cube diagonal.
pub const RAMP_START: Rgb = [100.0, 120.0, 140.0];
pub const RAMP_SPAN: Rgb = [24.0, -16.0, 20.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Mid-gray everywhere.
    Constant,
    /// Linear colour ramp along the lattice diagonal.
    Ramp,
    /// Two flat colours; the second fills the slab between two planes
    /// normal to x (see [`two_tone_slab`]).
    TwoTone,
    /// Full `k x k x k` lattice with RGB proportional to XYZ.
    Grid,
}

impl FromStr for SyntheticKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(SyntheticKind::Constant),
            "ramp" => Ok(SyntheticKind::Ramp),
            "two-tone" => Ok(SyntheticKind::TwoTone),
            "grid" => Ok(SyntheticKind::Grid),
            _ => Err(Error::InvalidArgument(format!(
                "unknown synthetic kind `{s}` (expected constant, ramp, two-tone or grid)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub cloud: PointCloud,
    /// Side of the colour boundary per point (two-tone only).
    pub labels: Option<Vec<u8>>,
}

/// `x` range `[lo, hi)` of the second tone: a central slab, so every
/// x-directed scan line starts and ends in the first tone.
pub fn two_tone_slab(side: u32) -> (u32, u32) {
    let lo = side / 4;
    (lo, lo + side / 2)
}

/// Side length of the smallest cube holding `n` lattice points.
pub fn lattice_side(n: usize) -> u32 {
    let mut k = (n as f64).cbrt().round().max(1.0) as u64;
    while k * k * k < n as u64 {
        k += 1;
    }
    while k > 1 && (k - 1).pow(3) >= n as u64 {
        k -= 1;
    }
    k as u32
}

/// The first `n` points of a raster-filled cube (x fastest, then y, then z).
pub fn lattice(n: usize) -> Vec<[u32; 3]> {
    let k = lattice_side(n) as usize;
    (0..n).map(|i| [(i % k) as u32, ((i / k) % k) as u32, (i / (k * k)) as u32]).collect()
}

fn resolve_bits(side: u32, bits: Option<u32>) -> Result<u32> {
    let needed = bits_for(side.saturating_sub(1));
    match bits {
        None => Ok(needed),
        Some(b) if b >= needed => Ok(b),
        Some(b) => Err(Error::InvalidArgument(format!("{b} bits cannot hold a lattice of side {side}"))),
    }
}

pub fn generate(kind: SyntheticKind, n: usize, bits: Option<u32>) -> Result<Synthetic> {
    if n == 0 {
        return Err(Error::InvalidArgument("synthetic cloud needs n >= 1".into()));
    }
    let side = lattice_side(n);
    if kind == SyntheticKind::Grid && (side as usize).pow(3) != n {
        return Err(Error::InvalidArgument(format!("grid needs a cube number of points, got {n}")));
    }
    let b = resolve_bits(side, bits)?;
    let coords = lattice(n);
    let top = f64::from(side.saturating_sub(1).max(1));
    let mut labels = None;
    let colors: Vec<Rgb> = match kind {
        SyntheticKind::Constant => vec![MID_GRAY; n],
        SyntheticKind::Ramp => coords
            .iter()
            .map(|g| {
                let t = (f64::from(g[0]) + f64::from(g[1]) + f64::from(g[2])) / (3.0 * top);
                [0, 1, 2].map(|c| RAMP_START[c] + RAMP_SPAN[c] * t)
            })
            .collect(),
        SyntheticKind::TwoTone => {
            let (lo, hi) = two_tone_slab(side);
            let l: Vec<u8> = coords.iter().map(|g| u8::from((lo..hi).contains(&g[0]))).collect();
            let colors = l.iter().map(|&s| TWO_TONE[s as usize]).collect();
            labels = Some(l);
            colors
        }
        SyntheticKind::Grid => coords.iter().map(|g| g.map(|v| (255.0 * f64::from(v) / top).round())).collect(),
    };
    Ok(Synthetic { cloud: PointCloud::from_voxels(coords, colors, b)?, labels })
}

/// `n` points drawn uniformly from the `2^b` cube, with random colours.
/// Coordinates may repeat.
pub fn random_voxels(n: usize, bits: u32, seed: u64) -> Result<PointCloud> {
    crate::cloud::check_bit_depth(bits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let limit = 1u32 << bits;
    let coords = (0..n).map(|_| [0; 3].map(|_: u32| rng.random_range(0..limit))).collect();
    let colors = (0..n).map(|_| [0; 3].map(|_: u8| f64::from(rng.random::<u8>()))).collect();
    PointCloud::from_voxels(coords, colors, bits)
}

/// Smallest bit depth whose cube has at least `n` voxels.
pub fn dense_bits(n: usize) -> u32 {
    bits_for(lattice_side(n).saturating_sub(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn side_lengths() {
        assert_eq!(lattice_side(1), 1);
        assert_eq!(lattice_side(8), 2);
        assert_eq!(lattice_side(9), 3);
        assert_eq!(lattice_side(27), 3);
        assert_eq!(lattice_side(1_000_000), 100);
    }

    #[test]
    fn constant_cloud() {
        let s = generate(SyntheticKind::Constant, 8, None).unwrap();
        assert_eq!(s.cloud.len(), 8);
        assert!(s.cloud.colors().iter().all(|c| *c == MID_GRAY));
        assert!(s.labels.is_none());
    }

    #[test]
    fn grid_is_lattice() {
        let s = generate(SyntheticKind::Grid, 27, None).unwrap();
        let mut coords = s.cloud.voxels().unwrap().coords.to_vec();
        coords.sort();
        let expect: Vec<[u32; 3]> = (0..3)
            .flat_map(|x| (0..3).flat_map(move |y| (0..3).map(move |z| [x, y, z])))
            .collect();
        assert_eq!(coords, expect);
        assert!(generate(SyntheticKind::Grid, 26, None).is_err());
    }

    #[test]
    fn two_tone_labels_match_colors() {
        let s = generate(SyntheticKind::TwoTone, 1000, None).unwrap();
        let labels = s.labels.unwrap();
        for (i, c) in s.cloud.colors().iter().enumerate() {
            assert_eq!(*c, TWO_TONE[labels[i] as usize]);
            let x = s.cloud.voxels().unwrap().coords[i][0];
            assert_eq!(labels[i] == 1, (2..7).contains(&x));
        }
    }

    #[test]
    fn ramp_spans_range() {
        let s = generate(SyntheticKind::Ramp, 1000, None).unwrap();
        let r: Vec<f64> = s.cloud.colors().iter().map(|c| c[0]).collect();
        let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!((lo, hi), (RAMP_START[0], RAMP_START[0] + RAMP_SPAN[0]));
    }

    #[test]
    fn bits_checked() {
        assert!(generate(SyntheticKind::Constant, 1000, Some(3)).is_err());
        let s = generate(SyntheticKind::Constant, 1000, Some(9)).unwrap();
        assert_eq!(s.cloud.voxels().unwrap().bit_depth, 9);
        assert!(generate(SyntheticKind::Constant, 0, None).is_err());
        assert!("blob".parse::<SyntheticKind>().is_err());
    }

    #[test]
    fn random_is_seeded() {
        assert_eq!(random_voxels(100, 6, 1).unwrap(), random_voxels(100, 6, 1).unwrap());
        assert_ne!(random_voxels(100, 6, 1).unwrap(), random_voxels(100, 6, 2).unwrap());
    }
}
