//! Point-cloud data model and the colour-only operations on it: coordinate
//! quantization, additive Gaussian noise and PSNR.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ply::ExtraProperty;

/// Largest bit depth for which three packed axes fit in a `u64` scan-line code.
pub const MAX_BIT_DEPTH: u32 = 21;

/// PSNR reported when two clouds are identical.
pub const DEFAULT_PSNR_CAP: f64 = 100.0;

const PEAK: f64 = 255.0;
const NOISE_CHUNK: usize = 4096;

/// An RGB triple; components live in `[0, 255]` but stay real-valued until saved.
pub type Rgb = [f64; 3];

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// Integer voxel coordinates, every component `< 2^bit_depth`.
    Voxel { coords: Vec<[u32; 3]>, bit_depth: u32 },
    /// Unquantized coordinates as read from a file.
    Float(Vec<[f64; 3]>),
}

impl Geometry {
    pub fn len(&self) -> usize {
        match self {
            Geometry::Voxel { coords, .. } => coords.len(),
            Geometry::Float(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Borrowed view of a quantized cloud's coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Voxels<'a> {
    pub coords: &'a [[u32; 3]],
    pub bit_depth: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    geometry: Geometry,
    colors: Vec<Rgb>,
    extra: Vec<ExtraProperty>,
}

pub(crate) fn check_bit_depth(b: u32) -> Result<()> {
    if (1..=MAX_BIT_DEPTH).contains(&b) {
        Ok(())
    } else {
        Err(Error::BitDepth(b))
    }
}

/// Smallest bit depth able to hold `max_coord`.
pub fn bits_for(max_coord: u32) -> u32 {
    (32 - max_coord.leading_zeros()).max(1)
}

fn check_colors(colors: &[Rgb]) -> Result<()> {
    if let Some(i) = colors.iter().position(|c| c.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidArgument(format!("non-finite colour at point {i}")));
    }
    Ok(())
}

impl PointCloud {
    pub fn from_voxels(coords: Vec<[u32; 3]>, colors: Vec<Rgb>, bit_depth: u32) -> Result<Self> {
        check_bit_depth(bit_depth)?;
        if coords.len() != colors.len() {
            return Err(Error::SizeMismatch(coords.len(), colors.len()));
        }
        let limit = 1u64 << bit_depth;
        if let Some(i) = coords.iter().position(|c| c.iter().any(|&v| u64::from(v) >= limit)) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {:?} of point {i} does not fit in {bit_depth} bits",
                coords[i]
            )));
        }
        check_colors(&colors)?;
        Ok(PointCloud { geometry: Geometry::Voxel { coords, bit_depth }, colors, extra: Vec::new() })
    }

    pub fn from_float(positions: Vec<[f64; 3]>, colors: Vec<Rgb>) -> Result<Self> {
        if positions.len() != colors.len() {
            return Err(Error::SizeMismatch(positions.len(), colors.len()));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        check_colors(&colors)?;
        Ok(PointCloud { geometry: Geometry::Float(positions), colors, extra: Vec::new() })
    }

    pub(crate) fn with_extra(mut self, extra: Vec<ExtraProperty>) -> Self {
        self.extra = extra;
        self
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn colors(&self) -> &[Rgb] {
        &self.colors
    }

    /// Vertex properties other than position and colour, kept for saving.
    pub fn extra_properties(&self) -> &[ExtraProperty] {
        &self.extra
    }

    pub fn is_quantized(&self) -> bool {
        matches!(self.geometry, Geometry::Voxel { .. })
    }

    /// Integer coordinates, or [`Error::Unquantized`] for float clouds.
    pub fn voxels(&self) -> Result<Voxels<'_>> {
        match &self.geometry {
            Geometry::Voxel { coords, bit_depth } => Ok(Voxels { coords, bit_depth: *bit_depth }),
            Geometry::Float(_) => Err(Error::Unquantized),
        }
    }

    /// Same geometry, new colours.
    pub fn with_colors(&self, colors: Vec<Rgb>) -> Result<Self> {
        if colors.len() != self.len() {
            return Err(Error::SizeMismatch(self.len(), colors.len()));
        }
        check_colors(&colors)?;
        Ok(PointCloud { geometry: self.geometry.clone(), colors, extra: self.extra.clone() })
    }

    /// Re-labels a voxel cloud with a larger bit depth. Coordinates are untouched.
    pub fn with_bit_depth(&self, b: u32) -> Result<Self> {
        check_bit_depth(b)?;
        match &self.geometry {
            Geometry::Voxel { coords, .. } => {
                let mut out = PointCloud::from_voxels(coords.clone(), self.colors.clone(), b)?;
                out.extra = self.extra.clone();
                Ok(out)
            }
            Geometry::Float(_) => Err(Error::Unquantized),
        }
    }
}

/// Maps every axis affinely from `[min, max]` onto `[0, 2^b - 1]` and rounds.
///
/// Clouds whose coordinates are already non-negative integers below `2^b`
/// (voxel clouds, or float clouds holding integral values) pass through with
/// their coordinates unchanged. A degenerate axis (`max == min`) maps to 0.
pub fn quantize_coordinates(pc: &PointCloud, b: u32) -> Result<PointCloud> {
    check_bit_depth(b)?;
    let limit = (1u64 << b) as f64;
    let positions: Vec<[f64; 3]> = match &pc.geometry {
        Geometry::Voxel { coords, .. } => {
            if coords.iter().flatten().all(|&v| (v as f64) < limit) {
                return pc.with_bit_depth(b);
            }
            coords.iter().map(|c| c.map(f64::from)).collect()
        }
        Geometry::Float(p) => p.clone(),
    };

    let integral = positions
        .iter()
        .flatten()
        .all(|&v| v >= 0.0 && v < limit && v.fract() == 0.0);
    let coords: Vec<[u32; 3]> = if integral {
        positions.iter().map(|p| p.map(|v| v as u32)).collect()
    } else {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &positions {
            for a in 0..3 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let top = limit - 1.0;
        positions
            .iter()
            .map(|p| {
                let mut q = [0u32; 3];
                for a in 0..3 {
                    let span = hi[a] - lo[a];
                    if span > 0.0 {
                        q[a] = ((p[a] - lo[a]) / span * top).round().clamp(0.0, top) as u32;
                    }
                }
                q
            })
            .collect()
    };
    let mut out = PointCloud::from_voxels(coords, pc.colors.clone(), b)?;
    out.extra = pc.extra.clone();
    Ok(out)
}

/// Adds i.i.d. `N(0, sigma^2)` noise to every colour component and clips to
/// `[0, 255]`.
///
/// Points are split into fixed chunks, each drawing from its own ChaCha
/// stream, so the output depends only on `(pc, sigma, seed)`.
pub fn add_gaussian_noise(pc: &PointCloud, sigma: f64, seed: u64) -> Result<PointCloud> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("noise sigma must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(pc.clone());
    }
    let mut colors = pc.colors.clone();
    colors.par_chunks_mut(NOISE_CHUNK).enumerate().for_each(|(chunk, block)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        for c in block.iter_mut() {
            for v in c.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = (*v + sigma * z).clamp(0.0, PEAK);
            }
        }
    });
    pc.with_colors(colors)
}

/// Colour MSE pooled over all `3N` channel values.
pub fn color_mse(reference: &[Rgb], test: &[Rgb]) -> Result<f64> {
    if reference.len() != test.len() {
        return Err(Error::SizeMismatch(reference.len(), test.len()));
    }
    if reference.is_empty() {
        return Err(Error::InvalidArgument("PSNR of an empty cloud".into()));
    }
    let sse: f64 = reference
        .iter()
        .zip(test)
        .map(|(a, b)| (0..3).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>())
        .sum();
    Ok(sse / (3 * reference.len()) as f64)
}

/// `10 log10(255^2 / MSE)`, or [`DEFAULT_PSNR_CAP`] when the clouds match.
pub fn psnr(reference: &PointCloud, test: &PointCloud) -> Result<f64> {
    psnr_with_cap(reference, test, DEFAULT_PSNR_CAP)
}

pub fn psnr_with_cap(reference: &PointCloud, test: &PointCloud, cap: f64) -> Result<f64> {
    let mse = color_mse(reference.colors(), test.colors())?;
    if mse == 0.0 {
        return Ok(cap);
    }
    Ok((10.0 * (PEAK * PEAK / mse).log10()).min(cap))
}
