//! End-to-end denoising: graph construction, noise estimation, filter
//! selection and filtering.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::filter::{apply_filter, fslr_mask, select_q, CriterionMode, FslrMask, SelectOptions};
use crate::noise::{estimate_from_patches, extract_patches, TailDivisor, TailOptions, TailRule, DEFAULT_PATCH_SIZE};
use crate::slg::build_weighted_slg;

pub const STAGE_GRAPH: &str = "graph_construction";
pub const STAGE_NOISE: &str = "noise_estimation";
pub const STAGE_FILTER: &str = "low_pass_filter";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterConfig {
    pub q_max: usize,
    /// Report threshold on the selection criterion; `None` means
    /// `1e-3 * sigma_est^2`.
    pub epsilon: Option<f64>,
    pub fslr_enabled: bool,
    pub patch_size: usize,
    /// Frames between full noise estimations in a sequence.
    pub interval: usize,
    /// FSLR is skipped when `sigma_est` falls below this.
    pub fslr_sigma_floor: f64,
    pub tail_rule: TailRule,
    pub tail_divisor: TailDivisor,
    pub criterion_mode: CriterionMode,
    pub early_exit: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            q_max: 64,
            epsilon: None,
            fslr_enabled: true,
            patch_size: DEFAULT_PATCH_SIZE,
            interval: 10,
            fslr_sigma_floor: 0.5,
            tail_rule: TailRule::FirstExceeding,
            tail_divisor: TailDivisor::TailLength,
            criterion_mode: CriterionMode::Pooled,
            early_exit: true,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.interval == 0 {
            return Err(Error::InvalidArgument("re-estimation interval must be >= 1".into()));
        }
        if self.patch_size < 3 {
            return Err(Error::InvalidArgument("patch size must be >= 3".into()));
        }
        if self.epsilon.is_some_and(|e| !(e >= 0.0)) || !(self.fslr_sigma_floor >= 0.0) {
            return Err(Error::InvalidArgument("epsilon and FSLR floor must be >= 0".into()));
        }
        Ok(())
    }

    pub fn tail_options(&self) -> TailOptions {
        TailOptions { rule: self.tail_rule, divisor: self.tail_divisor }
    }

    /// Whether frame `f` of a sequence runs full noise estimation.
    pub fn estimates_at(&self, frame: usize) -> bool {
        frame % self.interval.max(1) == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DenoiseReport {
    pub num_points: usize,
    pub num_edges: usize,
    pub selected_q: usize,
    /// `None` when `q` came from a previous frame and estimation was skipped.
    pub sigma_est: Option<f64>,
    pub per_channel_sigma: Option<[f64; 3]>,
    pub eligible_patches: usize,
    pub masked_fraction: f64,
    /// FSLR excluded every point, so selection ran unmasked.
    pub fslr_fallback: bool,
    pub criterion: Option<f64>,
    /// Criterion at the selected `q` is within epsilon.
    pub converged: Option<bool>,
    /// Seconds per stage.
    pub stage_timings: BTreeMap<String, f64>,
    pub psnr_db: Option<f64>,
}

impl DenoiseReport {
    pub fn total_seconds(&self) -> f64 {
        self.stage_timings.values().sum()
    }

    pub fn used_cache(&self) -> bool {
        self.sigma_est.is_none()
    }
}

/// Denoises the colours of a voxel cloud. With `cached_q` the estimation and
/// selection stages are skipped and `cached_q` filter steps are applied.
pub fn denoise(pc: &PointCloud, cfg: &FilterConfig, cached_q: Option<usize>) -> Result<(PointCloud, DenoiseReport)> {
    cfg.validate()?;
    pc.voxels()?;
    let n = pc.len();
    let mut report = DenoiseReport { num_points: n, ..Default::default() };
    if n < 2 {
        report.sigma_est = Some(0.0);
        return Ok((pc.clone(), report));
    }
    let mut timings = BTreeMap::new();

    let t = Instant::now();
    let graph = build_weighted_slg(pc)?;
    timings.insert(STAGE_GRAPH.to_string(), t.elapsed().as_secs_f64());
    report.num_edges = graph.num_edges();

    let colors = pc.colors();
    let out = match cached_q {
        Some(q) => {
            let t = Instant::now();
            let out = apply_filter(&graph, colors, q);
            timings.insert(STAGE_FILTER.to_string(), t.elapsed().as_secs_f64());
            report.selected_q = q;
            out
        }
        None => {
            let t = Instant::now();
            let patches = extract_patches(pc, &graph, cfg.patch_size)?;
            let estimate = estimate_from_patches(&patches, cfg.tail_options())?;
            timings.insert(STAGE_NOISE.to_string(), t.elapsed().as_secs_f64());
            let sigma = estimate.sigma_est;
            report.sigma_est = Some(sigma);
            report.per_channel_sigma = Some(estimate.per_channel_sigma());
            report.eligible_patches = estimate.eligible_count;

            let t = Instant::now();
            let mask = if cfg.fslr_enabled {
                match fslr_mask(&patches, n, sigma, cfg.fslr_sigma_floor) {
                    Ok(m) => m,
                    Err(Error::EmptyMask) => {
                        report.fslr_fallback = true;
                        FslrMask::all(n)
                    }
                    Err(e) => return Err(e),
                }
            } else {
                FslrMask::all(n)
            };
            report.masked_fraction = mask.excluded_count() as f64 / n as f64;
            let opts = SelectOptions { q_max: cfg.q_max, mode: cfg.criterion_mode, early_exit: cfg.early_exit };
            let sel = select_q(&graph, colors, sigma, &mask, opts)?;
            timings.insert(STAGE_FILTER.to_string(), t.elapsed().as_secs_f64());

            let eps = cfg.epsilon.unwrap_or(1e-3 * sigma * sigma);
            report.selected_q = sel.q;
            report.criterion = Some(sel.criterion);
            report.converged = Some(sel.criterion <= eps);
            sel.signal
        }
    };
    report.stage_timings = timings;
    Ok((pc.with_colors(out)?, report))
}
