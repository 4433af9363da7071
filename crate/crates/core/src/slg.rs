//! Scan-line graph (SLG) construction.
//!
//! Each point gets three raster-scan codes, one per axis ordering. Sorting
//! the cloud by a code and linking rank-consecutive points yields two
//! neighbours per code, so the union over the three codes has degree at
//! most 6. No spatial index is built.

use rayon::prelude::*;

use crate::cloud::{PointCloud, Voxels};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::radix::argsort_u64;

/// Maximum SLG degree: two neighbours on each of three scan lines.
pub const SLG_MAX_DEGREE: usize = 6;

/// Axis ordering of a raster scan, most significant axis first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScanLine {
    /// `C1 = 2^2b z + 2^b y + x`
    Zyx,
    /// `C2 = 2^2b x + 2^b z + y`
    Xzy,
    /// `C3 = 2^2b y + 2^b x + z`
    Yxz,
}

impl ScanLine {
    pub const ALL: [ScanLine; 3] = [ScanLine::Zyx, ScanLine::Xzy, ScanLine::Yxz];

    /// Line index 1, 2 or 3.
    pub fn from_index(l: u8) -> Option<Self> {
        match l {
            1 => Some(ScanLine::Zyx),
            2 => Some(ScanLine::Xzy),
            3 => Some(ScanLine::Yxz),
            _ => None,
        }
    }

    /// Axis indices (0 = x) from most to least significant.
    fn axes(self) -> [usize; 3] {
        match self {
            ScanLine::Zyx => [2, 1, 0],
            ScanLine::Xzy => [0, 2, 1],
            ScanLine::Yxz => [1, 0, 2],
        }
    }

    #[inline]
    pub fn code(self, g: [u32; 3], bit_depth: u32) -> u64 {
        let [hi, mid, lo] = self.axes();
        (u64::from(g[hi]) << (2 * bit_depth)) | (u64::from(g[mid]) << bit_depth) | u64::from(g[lo])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanLineCodes {
    pub line: ScanLine,
    pub bit_depth: u32,
    pub codes: Vec<u64>,
}

fn voxel_codes(v: Voxels<'_>, line: ScanLine) -> ScanLineCodes {
    let codes = v.coords.par_iter().map(|&g| line.code(g, v.bit_depth)).collect();
    ScanLineCodes { line, bit_depth: v.bit_depth, codes }
}

pub fn scanline_codes(pc: &PointCloud, line: ScanLine) -> Result<ScanLineCodes> {
    Ok(voxel_codes(pc.voxels()?, line))
}

/// Stable ascending order of the codes.
pub fn sort_permutation(codes: &ScanLineCodes) -> Vec<u32> {
    argsort_u64(&codes.codes, 3 * codes.bit_depth)
}

/// Connectivity of the scan-line graph; all weights are 1 until
/// [`apply_gaussian_weights`] is called.
pub fn build_slg(pc: &PointCloud) -> Result<Graph> {
    let v = pc.voxels()?;
    let n = v.coords.len();
    let mut adj = vec![[0u32; SLG_MAX_DEGREE]; n];
    let mut deg = vec![0u8; n];
    for line in ScanLine::ALL {
        let perm = sort_permutation(&voxel_codes(v, line));
        for pair in perm.windows(2) {
            let (a, b) = (pair[0] as usize, pair[1] as usize);
            adj[a][deg[a] as usize] = pair[1];
            deg[a] += 1;
            adj[b][deg[b] as usize] = pair[0];
            deg[b] += 1;
        }
    }
    let lists: Vec<([u32; SLG_MAX_DEGREE], usize)> = adj
        .into_par_iter()
        .zip(deg.into_par_iter())
        .map(|(mut a, d)| {
            let list = &mut a[..d as usize];
            list.sort_unstable();
            let mut k = 0;
            for i in 0..list.len() {
                if k == 0 || list[i] != list[k - 1] {
                    list[k] = list[i];
                    k += 1;
                }
            }
            (a, k)
        })
        .collect();
    Ok(Graph::from_sorted_lists(n, lists.iter().map(|(a, k)| &a[..*k]), SLG_MAX_DEGREE))
}

fn squared_distance(a: [u32; 3], b: [u32; 3]) -> f64 {
    (0..3).map(|k| (f64::from(a[k]) - f64::from(b[k])).powi(2)).sum()
}

/// Mean Euclidean length over all undirected edges.
pub fn compute_sigma_g(pc: &PointCloud, g: &Graph) -> Result<f64> {
    let coords = pc.voxels()?.coords;
    check_graph_size(pc, g)?;
    let m = g.num_edges();
    if m == 0 {
        return Err(Error::EmptyGraph);
    }
    let total: f64 = g
        .edges()
        .map(|(i, j)| squared_distance(coords[i as usize], coords[j as usize]).sqrt())
        .sum();
    Ok(total / m as f64)
}

fn check_graph_size(pc: &PointCloud, g: &Graph) -> Result<()> {
    if pc.len() != g.num_vertices() {
        return Err(Error::SizeMismatch(pc.len(), g.num_vertices()));
    }
    Ok(())
}

/// Sets `w_ij = exp(-|g_i - g_j|^2 / sigma_g^2)`.
///
/// Weights that would underflow are held at the smallest positive normal so
/// every edge weight stays in `(0, 1]`.
pub fn apply_gaussian_weights(pc: &PointCloud, g: &Graph, sigma_g: f64) -> Result<Graph> {
    if !(sigma_g > 0.0) || !sigma_g.is_finite() {
        return Err(Error::InvalidArgument(format!("sigma_g must be positive, got {sigma_g}")));
    }
    let coords = pc.voxels()?.coords;
    check_graph_size(pc, g)?;
    let inv = 1.0 / (sigma_g * sigma_g);
    let (offsets, neighbors) = g.raw_parts();
    let weights: Vec<f64> = (0..g.num_vertices())
        .into_par_iter()
        .flat_map_iter(|i| {
            neighbors[offsets[i]..offsets[i + 1]].iter().map(move |&j| {
                let d2 = squared_distance(coords[i], coords[j as usize]);
                (-d2 * inv).exp().max(f64::MIN_POSITIVE)
            })
        })
        .collect();
    let mut out = g.clone();
    out.set_weights(weights, sigma_g);
    Ok(out)
}

/// SLG connectivity plus Gaussian weights with the mean-edge-length kernel
/// width. Clouds with fewer than two points give an edgeless, unweighted graph.
pub fn build_weighted_slg(pc: &PointCloud) -> Result<Graph> {
    let g = build_slg(pc)?;
    if g.num_edges() == 0 {
        return Ok(g);
    }
    let sigma = compute_sigma_g(pc, &g)?;
    // All points coincident: every edge has length 0 and any width gives w = 1.
    let sigma = if sigma > 0.0 { sigma } else { 1.0 };
    apply_gaussian_weights(pc, &g, sigma)
}
