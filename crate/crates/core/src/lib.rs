//! Fast graph-based denoising of point-cloud colours.
//!
//! The pipeline has four stages:
//!
//! 1. build a scan-line graph from the voxel coordinates ([`slg`]),
//! 2. estimate the colour noise level from graph patches ([`noise`]),
//! 3. pick the number of low-pass filter iterations so that the removed
//!    signal power matches the noise power, ignoring strongly textured
//!    regions ([`filter`]),
//! 4. run the vertex-domain filter.
//!
//! [`pipeline::denoise`] chains them.

pub mod cloud;
pub mod eigen;
pub mod error;
pub mod filter;
pub mod graph;
pub mod knn;
pub mod noise;
pub mod pipeline;
pub mod ply;
pub mod radix;
pub mod slg;
pub mod synthetic;

pub use cloud::{add_gaussian_noise, psnr, psnr_with_cap, quantize_coordinates, Geometry, PointCloud, Rgb};
pub use error::{Error, PlyError, Result};
pub use filter::{
    apply_filter, filter_step, fslr_mask, select_q, selection_criterion, spectral_response, CriterionMode, FslrMask,
};
pub use graph::Graph;
pub use knn::build_knn_brute;
pub use noise::{
    estimate_noise, extract_patches, patch_covariance, select_tail, select_tail_with, NoiseEstimate, PatchSet, TailDivisor,
    TailOptions, TailRule,
};
pub use pipeline::{denoise, DenoiseReport, FilterConfig};
pub use ply::{load_ply, load_ply_path, save_ply, save_ply_path, PlyFormat};
pub use slg::{apply_gaussian_weights, build_slg, build_weighted_slg, compute_sigma_g, scanline_codes, ScanLine};
