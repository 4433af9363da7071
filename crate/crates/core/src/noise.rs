//! Noise-level estimation from graph-based patches.
//!
//! For every point with enough graph neighbours a patch vector is formed from
//! the point's colour followed by its neighbours' colours in order of
//! increasing distance. The noise variance is read off the small eigenvalues
//! of the patch covariance, one colour channel at a time.

use rayon::prelude::*;
use serde::Serialize;

use crate::cloud::PointCloud;
use crate::eigen::{symmetric_eigenvalues, SymMatrix};
use crate::error::{Error, Result};
use crate::graph::Graph;

pub const DEFAULT_PATCH_SIZE: usize = 7;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Channel {
    R = 0,
    G = 1,
    B = 2,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::R, Channel::G, Channel::B];
}

/// Divisor of the tail-eigenvalue mean.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub enum TailDivisor {
    /// `D - m`, the number of tail eigenvalues; `tau` is their plain mean.
    #[default]
    TailLength,
    /// `D - m + 1`.
    TailLengthPlusOne,
}

/// Which `m` the tail search returns.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub enum TailRule {
    /// Smallest `m` whose tail mean is strictly above the tail median.
    #[default]
    FirstExceeding,
    /// Smallest `m` whose tail mean is no longer above the tail median, i.e.
    /// the first tail without a right skew from leftover signal.
    FirstBalanced,
}

/// Distance-ordered patch vectors, one matrix per colour channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    patch_size: usize,
    points: Vec<u32>,
    channels: [Vec<f64>; 3],
}

impl PatchSet {
    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn eligible_count(&self) -> usize {
        self.points.len()
    }

    /// Source point of each patch, ascending.
    pub fn points(&self) -> &[u32] {
        &self.points
    }

    /// The `k`-th patch of one channel.
    pub fn patch(&self, k: usize, channel: Channel) -> &[f64] {
        let d = self.patch_size;
        &self.channels[channel as usize][k * d..(k + 1) * d]
    }

    pub fn channel_data(&self, channel: Channel) -> &[f64] {
        &self.channels[channel as usize]
    }

    /// Population standard deviation of the entries of patch `k`.
    pub fn patch_std(&self, k: usize, channel: Channel) -> f64 {
        let p = self.patch(k, channel);
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        (p.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / p.len() as f64).sqrt()
    }

    /// Builds a patch set directly from row-major per-channel data.
    pub fn from_raw(patch_size: usize, points: Vec<u32>, channels: [Vec<f64>; 3]) -> Result<Self> {
        if patch_size == 0 || channels.iter().any(|c| c.len() != points.len() * patch_size) {
            return Err(Error::InvalidArgument("patch data does not match patch size".into()));
        }
        Ok(PatchSet { patch_size, points, channels })
    }
}

fn squared_distance(a: [u32; 3], b: [u32; 3]) -> u64 {
    (0..3).map(|k| (i64::from(a[k]) - i64::from(b[k])).pow(2) as u64).sum()
}

/// One patch per channel for every point with at least `D - 1` neighbours.
///
/// Neighbours are ranked by squared distance, ties by index, and the
/// `D - 1` closest are used.
pub fn extract_patches(pc: &PointCloud, g: &Graph, patch_size: usize) -> Result<PatchSet> {
    let coords = pc.voxels()?.coords;
    if g.num_vertices() != pc.len() {
        return Err(Error::SizeMismatch(pc.len(), g.num_vertices()));
    }
    if patch_size < 2 {
        return Err(Error::InvalidArgument(format!("patch size must be >= 2, got {patch_size}")));
    }
    if patch_size > g.degree_bound() + 1 {
        return Err(Error::PatchTooLarge { patch_size, max_degree: g.degree_bound() });
    }
    let colors = pc.colors();
    let need = patch_size - 1;

    let parts: Vec<(Vec<u32>, [Vec<f64>; 3])> = (0..pc.len())
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut points = Vec::new();
            let mut ch: [Vec<f64>; 3] = Default::default();
            let mut ranked: Vec<(u64, u32)> = Vec::new();
            for &i in chunk {
                let nb = g.neighbors(i);
                if nb.len() < need {
                    continue;
                }
                ranked.clear();
                ranked.extend(nb.iter().map(|&j| (squared_distance(coords[i], coords[j as usize]), j)));
                ranked.sort_unstable();
                points.push(i as u32);
                for c in 0..3 {
                    ch[c].push(colors[i][c]);
                    ch[c].extend(ranked[..need].iter().map(|&(_, j)| colors[j as usize][c]));
                }
            }
            (points, ch)
        })
        .collect();

    let mut points = Vec::new();
    let mut channels: [Vec<f64>; 3] = Default::default();
    for (p, ch) in parts {
        points.extend(p);
        for c in 0..3 {
            channels[c].extend_from_slice(&ch[c]);
        }
    }
    Ok(PatchSet { patch_size, points, channels })
}

/// Population covariance of one channel's patch vectors.
///
/// Accumulates sums around the first patch (a shifted one-pass form) in
/// fixed-size chunks that are combined in index order, so the result does
/// not depend on thread scheduling.
pub fn patch_covariance(patches: &PatchSet, channel: Channel) -> Result<SymMatrix> {
    let n = patches.eligible_count();
    if n < 2 {
        return Err(Error::TooFewPatches { needed: 2, found: n });
    }
    let d = patches.patch_size();
    let data = patches.channel_data(channel);
    let shift = &data[..d];

    let partials: Vec<(Vec<f64>, Vec<f64>)> = data
        .par_chunks(CHUNK * d)
        .map(|block| {
            let mut s1 = vec![0.0; d];
            let mut s2 = vec![0.0; d * d];
            let mut centered = vec![0.0; d];
            for a in block.chunks_exact(d) {
                for k in 0..d {
                    centered[k] = a[k] - shift[k];
                    s1[k] += centered[k];
                }
                for r in 0..d {
                    for c in r..d {
                        s2[r * d + c] += centered[r] * centered[c];
                    }
                }
            }
            (s1, s2)
        })
        .collect();
    let mut s1 = vec![0.0; d];
    let mut s2 = vec![0.0; d * d];
    for (p1, p2) in partials {
        s1.iter_mut().zip(&p1).for_each(|(a, b)| *a += b);
        s2.iter_mut().zip(&p2).for_each(|(a, b)| *a += b);
    }
    let inv = 1.0 / n as f64;
    let mean: Vec<f64> = s1.iter().map(|v| v * inv).collect();
    let mut cov = SymMatrix::zeros(d);
    for r in 0..d {
        for c in r..d {
            let v = s2[r * d + c] * inv - mean[r] * mean[c];
            cov[(r, c)] = v;
            cov[(c, r)] = v;
        }
    }
    Ok(cov)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailSelection {
    /// Number of leading (signal) eigenvalues; the tail is `lambda_{m+1..D}`.
    pub m: usize,
    pub tau: f64,
    /// True when no `m` satisfied the rule and the half split was used.
    pub fallback: bool,
}

fn median(sorted_desc: &[f64]) -> f64 {
    let n = sorted_desc.len();
    if n % 2 == 1 {
        sorted_desc[n / 2]
    } else {
        0.5 * (sorted_desc[n / 2 - 1] + sorted_desc[n / 2])
    }
}

fn tail_tau(eigenvalues: &[f64], m: usize, divisor: TailDivisor) -> f64 {
    let tail = &eigenvalues[m..];
    let count = match divisor {
        TailDivisor::TailLength => tail.len(),
        TailDivisor::TailLengthPlusOne => tail.len() + 1,
    };
    tail.iter().sum::<f64>() / count as f64
}

/// Scans `m = 1..=D-2` for the tail `lambda_{m+1..D}` picked by `rule`;
/// falls back to `m = D / 2` when none qualifies.
pub fn select_tail_with(eigenvalues: &[f64], rule: TailRule, divisor: TailDivisor) -> Result<TailSelection> {
    let d = eigenvalues.len();
    if d < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 eigenvalues, got {d}")));
    }
    for m in 1..=d - 2 {
        let tau = tail_tau(eigenvalues, m, divisor);
        let skewed = tau > median(&eigenvalues[m..]);
        let hit = match rule {
            TailRule::FirstExceeding => skewed,
            TailRule::FirstBalanced => !skewed,
        };
        if hit {
            return Ok(TailSelection { m, tau, fallback: false });
        }
    }
    let m = d / 2;
    Ok(TailSelection { m, tau: tail_tau(eigenvalues, m, divisor), fallback: true })
}

/// Smallest `m` in `1..=D-2` whose tail mean exceeds the tail median,
/// otherwise `m = D / 2`.
pub fn select_tail(eigenvalues: &[f64], divisor: TailDivisor) -> Result<TailSelection> {
    select_tail_with(eigenvalues, TailRule::FirstExceeding, divisor)
}

/// Options for [`estimate_from_patches`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TailOptions {
    pub rule: TailRule,
    pub divisor: TailDivisor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelEstimate {
    pub sigma: f64,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub m: usize,
    pub tau: f64,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseEstimate {
    /// Mean of the three per-channel estimates.
    pub sigma_est: f64,
    pub channels: [ChannelEstimate; 3],
    pub eligible_count: usize,
    pub patch_size: usize,
}

impl NoiseEstimate {
    pub fn per_channel_sigma(&self) -> [f64; 3] {
        [self.channels[0].sigma, self.channels[1].sigma, self.channels[2].sigma]
    }
}

pub fn estimate_from_patches(patches: &PatchSet, tail: TailOptions) -> Result<NoiseEstimate> {
    if patches.patch_size() < 3 {
        return Err(Error::InvalidArgument("noise estimation needs patch size >= 3".into()));
    }
    let mut channels = Vec::with_capacity(3);
    for ch in Channel::ALL {
        let cov = patch_covariance(patches, ch)?;
        let eigenvalues = symmetric_eigenvalues(&cov)?;
        let sel = select_tail_with(&eigenvalues, tail.rule, tail.divisor)?;
        channels.push(ChannelEstimate {
            sigma: sel.tau.max(0.0).sqrt(),
            eigenvalues,
            m: sel.m,
            tau: sel.tau,
            fallback: sel.fallback,
        });
    }
    let channels: [ChannelEstimate; 3] = channels.try_into().expect("three channels");
    let sigma_est = channels.iter().map(|c| c.sigma).sum::<f64>() / 3.0;
    Ok(NoiseEstimate {
        sigma_est,
        channels,
        eligible_count: patches.eligible_count(),
        patch_size: patches.patch_size(),
    })
}

/// Estimates the colour noise level with the default tail rule and divisor.
pub fn estimate_noise(pc: &PointCloud, g: &Graph, patch_size: usize) -> Result<NoiseEstimate> {
    estimate_from_patches(&extract_patches(pc, g, patch_size)?, TailOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_cloud(reds: [f64; 3]) -> (PointCloud, Graph) {
        let coords = vec![[0, 0, 0], [1, 0, 0], [2, 0, 0]];
        let colors = reds.iter().map(|&r| [r, 0.0, 0.0]).collect();
        let pc = PointCloud::from_voxels(coords, colors, 2).unwrap();
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        (pc, g)
    }

    #[test]
    fn query_first_then_ties_by_index() {
        let (pc, g) = path_cloud([10.0, 20.0, 30.0]);
        let ps = extract_patches(&pc, &g, 3).unwrap();
        assert_eq!(ps.points(), &[1]);
        assert_eq!(ps.patch(0, Channel::R), &[20.0, 10.0, 30.0]);
    }

    #[test]
    fn isolated_points_excluded() {
        let pc = PointCloud::from_voxels(vec![[0, 0, 0], [1, 0, 0], [3, 3, 3]], vec![[1.0; 3]; 3], 2).unwrap();
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let ps = extract_patches(&pc, &g, 2).unwrap();
        assert_eq!(ps.points(), &[0, 1]);
        assert_eq!(ps.eligible_count(), 2);
    }

    #[test]
    fn patch_size_limits() {
        let (pc, g) = path_cloud([0.0; 3]);
        assert!(matches!(extract_patches(&pc, &g, 4), Err(Error::PatchTooLarge { .. })));
        assert!(extract_patches(&pc, &g, 1).is_err());
    }

    #[test]
    fn covariance_two_patches() {
        let ps = PatchSet::from_raw(2, vec![0, 1], [vec![0.0, 0.0, 2.0, 2.0], vec![0.0; 4], vec![0.0; 4]]).unwrap();
        let s = patch_covariance(&ps, Channel::R).unwrap();
        assert_eq!(s.as_slice(), &[1.0, 1.0, 1.0, 1.0]);
        let z = patch_covariance(&ps, Channel::G).unwrap();
        assert!(z.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn covariance_needs_two_patches() {
        let ps = PatchSet::from_raw(2, vec![0], [vec![1.0, 2.0], vec![0.0; 2], vec![0.0; 2]]).unwrap();
        assert!(matches!(patch_covariance(&ps, Channel::R), Err(Error::TooFewPatches { .. })));
    }

    #[test]
    fn tail_rule_example() {
        let eig = [50.0, 2.0, 1.0, 0.9, 0.8, 0.7, 0.6];
        let t = select_tail(&eig, TailDivisor::TailLength).unwrap();
        assert_eq!(t.m, 1);
        assert!((t.tau - 1.0).abs() < 1e-12);
        assert!(!t.fallback);
        let lit = select_tail(&eig, TailDivisor::TailLengthPlusOne).unwrap();
        assert!((lit.tau - 6.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn tail_rule_fallback_on_flat_spectrum() {
        let t = select_tail(&[4.0; 7], TailDivisor::TailLength).unwrap();
        assert_eq!((t.m, t.tau, t.fallback), (3, 4.0, true));
    }

    #[test]
    fn balanced_rule_skips_signal_eigenvalues() {
        let eig = [50.0, 2.0, 1.0, 0.9, 0.8, 0.7, 0.6];
        let t = select_tail_with(&eig, TailRule::FirstBalanced, TailDivisor::TailLength).unwrap();
        assert_eq!(t.m, 2);
        assert!((t.tau - 0.8).abs() < 1e-12);
        let flat = select_tail_with(&[4.0; 5], TailRule::FirstBalanced, TailDivisor::TailLength).unwrap();
        assert_eq!((flat.m, flat.fallback), (1, false));
    }

    #[test]
    fn tail_rule_needs_three() {
        assert!(select_tail(&[1.0, 0.5], TailDivisor::TailLength).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[5.0, 3.0, 1.0]), 3.0);
        assert_eq!(median(&[5.0, 3.0, 2.0, 1.0]), 2.5);
    }

    #[test]
    fn patch_std_values() {
        let ps = PatchSet::from_raw(2, vec![0], [vec![0.0, 2.0], vec![5.0, 5.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(ps.patch_std(0, Channel::R), 1.0);
        assert_eq!(ps.patch_std(0, Channel::G), 0.0);
    }
}
