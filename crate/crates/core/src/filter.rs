//! Vertex-domain low-pass graph filter and power-loss filter selection.
//!
//! One filter step applies the random-walk operator with self-loops,
//! `D_g^-1 W_g` where `W_g = D + W` and `D_g = 2D`:
//!
//! ```text
//! out_i = (d_i f_i + sum_j w_ij f_j) / (2 d_i)
//! ```
//!
//! Its graph-frequency response after `q` steps is `(1 - lambda / 2)^q`.

use rayon::prelude::*;
use serde::Serialize;

use crate::cloud::Rgb;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::noise::{Channel, PatchSet};

const SUM_CHUNK: usize = 4096;

/// Number of consecutive criterion increases after which selection stops.
pub const EARLY_EXIT_RUN: usize = 3;

/// One application of the filter, written into `out`.
pub fn filter_step_into(g: &Graph, signal: &[Rgb], out: &mut [Rgb]) {
    assert_eq!(signal.len(), g.num_vertices());
    assert_eq!(out.len(), signal.len());
    // Written as f_i + sum_j w_ij (f_j - f_i) / (2 d_i), which leaves constant
    // signals bit-exact.
    out.par_iter_mut().enumerate().for_each(|(i, o)| {
        let f = signal[i];
        let mut d = 0.0;
        let mut acc = [0.0; 3];
        for (&j, &w) in g.neighbors(i).iter().zip(g.weights(i)) {
            let fj = &signal[j as usize];
            d += w;
            acc[0] += w * (fj[0] - f[0]);
            acc[1] += w * (fj[1] - f[1]);
            acc[2] += w * (fj[2] - f[2]);
        }
        *o = if d > 0.0 {
            let inv = 0.5 / d;
            [f[0] + acc[0] * inv, f[1] + acc[1] * inv, f[2] + acc[2] * inv]
        } else {
            f
        };
    });
}

pub fn filter_step(g: &Graph, signal: &[Rgb]) -> Vec<Rgb> {
    let mut out = vec![[0.0; 3]; signal.len()];
    filter_step_into(g, signal, &mut out);
    out
}

/// `q` filter steps.
pub fn apply_filter(g: &Graph, signal: &[Rgb], q: usize) -> Vec<Rgb> {
    let mut cur = signal.to_vec();
    let mut next = vec![[0.0; 3]; signal.len()];
    for _ in 0..q {
        filter_step_into(g, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// Frequency response `(1 - lambda / 2)^q` of `q` filter steps.
pub fn spectral_response(lambda: f64, q: u32) -> f64 {
    (1.0 - 0.5 * lambda).powi(q as i32)
}

/// Points allowed into the selection criterion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FslrMask {
    include: Vec<bool>,
    included_count: usize,
}

impl FslrMask {
    pub fn all(n: usize) -> Self {
        FslrMask { include: vec![true; n], included_count: n }
    }

    pub fn from_include(include: Vec<bool>) -> Self {
        let included_count = include.iter().filter(|&&b| b).count();
        FslrMask { include, included_count }
    }

    pub fn include(&self) -> &[bool] {
        &self.include
    }

    pub fn included_count(&self) -> usize {
        self.included_count
    }

    pub fn excluded_count(&self) -> usize {
        self.include.len() - self.included_count
    }

    pub fn len(&self) -> usize {
        self.include.len()
    }

    pub fn is_empty(&self) -> bool {
        self.include.is_empty()
    }
}

/// Excludes points whose patches vary far more than the noise: the mean of
/// the three per-channel patch standard deviations exceeds `2 sigma_est`.
///
/// Points without a patch stay included. Below `sigma_floor` the mask is
/// disabled and every point is included.
pub fn fslr_mask(patches: &PatchSet, num_points: usize, sigma_est: f64, sigma_floor: f64) -> Result<FslrMask> {
    if patches.points().last().is_some_and(|&p| p as usize >= num_points) {
        return Err(Error::InvalidArgument("patch set refers to points beyond the cloud".into()));
    }
    if sigma_est < sigma_floor {
        return Ok(FslrMask::all(num_points));
    }
    let limit = 2.0 * sigma_est;
    let mut include = vec![true; num_points];
    for (k, &p) in patches.points().iter().enumerate() {
        let mean_std = Channel::ALL.iter().map(|&c| patches.patch_std(k, c)).sum::<f64>() / 3.0;
        if mean_std > limit {
            include[p as usize] = false;
        }
    }
    let mask = FslrMask::from_include(include);
    if mask.included_count() == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(mask)
}

/// How the three colour channels enter the selection criterion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub enum CriterionMode {
    /// One criterion over all `3 * included` entries.
    #[default]
    Pooled,
    /// Mean over channels of the per-channel criterion.
    PerChannel,
}

/// Per-channel sum of squares over the included points, accumulated in
/// fixed chunks and combined in order.
fn masked_power(signal: &[Rgb], mask: &FslrMask) -> [f64; 3] {
    let parts: Vec<[f64; 3]> = signal
        .par_chunks(SUM_CHUNK)
        .zip(mask.include().par_chunks(SUM_CHUNK))
        .map(|(s, m)| {
            let mut acc = [0.0; 3];
            for (v, &inc) in s.iter().zip(m) {
                if inc {
                    for c in 0..3 {
                        acc[c] += v[c] * v[c];
                    }
                }
            }
            acc
        })
        .collect();
    parts.iter().fold([0.0; 3], |a, p| [a[0] + p[0], a[1] + p[1], a[2] + p[2]])
}

fn criterion_from_power(y_power: [f64; 3], x_power: [f64; 3], included: usize, sigma_est: f64, mode: CriterionMode) -> f64 {
    let s2 = sigma_est * sigma_est;
    match mode {
        CriterionMode::Pooled => {
            let lost = (0..3).map(|c| y_power[c] - x_power[c]).sum::<f64>() / (3 * included) as f64;
            (s2 - lost).abs()
        }
        CriterionMode::PerChannel => {
            (0..3).map(|c| (s2 - (y_power[c] - x_power[c]) / included as f64).abs()).sum::<f64>() / 3.0
        }
    }
}

/// `|sigma_est^2 - (sum y^2 - sum x_q^2) / (3 * included)|` over the masked points.
pub fn selection_criterion(y: &[Rgb], x_q: &[Rgb], mask: &FslrMask, sigma_est: f64, mode: CriterionMode) -> Result<f64> {
    if y.len() != x_q.len() {
        return Err(Error::SizeMismatch(y.len(), x_q.len()));
    }
    if mask.len() != y.len() {
        return Err(Error::SizeMismatch(y.len(), mask.len()));
    }
    if mask.included_count() == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(criterion_from_power(masked_power(y, mask), masked_power(x_q, mask), mask.included_count(), sigma_est, mode))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectOptions {
    pub q_max: usize,
    pub mode: CriterionMode,
    /// Stop after [`EARLY_EXIT_RUN`] consecutive increases past the best `q`.
    pub early_exit: bool,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub q: usize,
    pub signal: Vec<Rgb>,
    pub criterion: f64,
    /// Criterion for every evaluated `q`, starting at 0.
    pub trace: Vec<f64>,
}

/// Finds the integer `q` in `[0, q_max]` minimizing the selection criterion,
/// preferring the smaller `q` on ties, and returns the filtered signal.
pub fn select_q(g: &Graph, y: &[Rgb], sigma_est: f64, mask: &FslrMask, opts: SelectOptions) -> Result<Selection> {
    if !(sigma_est >= 0.0) {
        return Err(Error::InvalidArgument(format!("sigma_est must be >= 0, got {sigma_est}")));
    }
    if y.len() != g.num_vertices() || mask.len() != y.len() {
        return Err(Error::SizeMismatch(y.len(), g.num_vertices()));
    }
    if mask.included_count() == 0 {
        return Err(Error::EmptyMask);
    }
    let included = mask.included_count();
    let y_power = masked_power(y, mask);
    let eval = |x: &[Rgb]| criterion_from_power(y_power, masked_power(x, mask), included, sigma_est, opts.mode);

    let mut cur = y.to_vec();
    let mut next = vec![[0.0; 3]; y.len()];
    let mut best = Selection { q: 0, signal: cur.clone(), criterion: eval(&cur), trace: Vec::new() };
    best.trace.push(best.criterion);
    let mut rising = 0;
    for q in 1..=opts.q_max {
        filter_step_into(g, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        let c = eval(&cur);
        let prev = *best.trace.last().unwrap();
        best.trace.push(c);
        if c < best.criterion {
            best.q = q;
            best.criterion = c;
            best.signal.copy_from_slice(&cur);
        }
        rising = if c > prev { rising + 1 } else { 0 };
        if opts.early_exit && rising >= EARLY_EXIT_RUN && q > best.q {
            break;
        }
    }
    Ok(best)
}
