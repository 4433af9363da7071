use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fgbd_core::noise::{estimate_from_patches, TailOptions};
use fgbd_core::synthetic::{dense_bits, generate, random_voxels, SyntheticKind};
use fgbd_core::{
    add_gaussian_noise, build_knn_brute, build_slg, build_weighted_slg, extract_patches, load_ply_path, psnr_with_cap,
    quantize_coordinates, save_ply_path, DenoiseReport, FilterConfig, Graph, PointCloud,
};
use log::info;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::args::{AddNoiseArgs, BenchArgs, DenoiseArgs, EstimateArgs, GenArgs, PsnrArgs};
use crate::manifest::Manifest;
use crate::{list_frames, CliError, CliResult};

pub const BENCH_CSV_HEADER: &str = "n,slg_s,bf_knn_s,mean_degree,overlap";

fn say(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> CliResult<()> {
    writeln!(out, "{line}").map_err(|e| CliError::Output(format!("stdout: {e}")))
}

fn load(path: &Path) -> CliResult<PointCloud> {
    load_ply_path(path).map_err(|e| match e {
        fgbd_core::Error::Ply(_) | fgbd_core::Error::Io(_) => CliError::input(path, e),
        e => CliError::pipeline(path.display(), e),
    })
}

fn save(pc: &PointCloud, format: crate::args::Format, path: &Path) -> CliResult<()> {
    save_ply_path(pc, format.into(), path).map_err(|e| CliError::output(path, e))
}

/// Quantizes float clouds with `bits`, or re-declares the depth of a voxel
/// cloud when `bits` is given.
pub fn prepare(pc: PointCloud, bits: Option<u32>, path: &Path) -> CliResult<PointCloud> {
    let res = match (pc.is_quantized(), bits) {
        (true, None) => return Ok(pc),
        (true, Some(b)) => pc.with_bit_depth(b),
        (false, Some(b)) => quantize_coordinates(&pc, b),
        (false, None) => {
            return Err(CliError::Pipeline(format!(
                "{}: floating-point coordinates; pass --bits to quantize",
                path.display()
            )))
        }
    };
    res.map_err(|e| CliError::pipeline(path.display(), e))
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameRecord {
    pub frame: usize,
    pub input: PathBuf,
    pub output: PathBuf,
    /// Full noise estimation ran on this frame.
    pub estimated: bool,
    pub report: DenoiseReport,
}

struct FrameJob {
    index: usize,
    input: PathBuf,
    output: PathBuf,
    truth: Option<PathBuf>,
}

fn run_frame(a: &DenoiseArgs, cfg: &FilterConfig, job: &FrameJob, cached_q: Option<usize>) -> CliResult<FrameRecord> {
    let pc = prepare(load(&job.input)?, a.bits, &job.input)?;
    let (noisy, mut truth) = match a.sigma {
        Some(s) => {
            let noisy = add_gaussian_noise(&pc, s, a.seed.wrapping_add(job.index as u64))
                .map_err(|e| CliError::pipeline("--sigma", e))?;
            (noisy, Some(pc))
        }
        None => (pc, None),
    };
    if let Some(t) = &job.truth {
        truth = Some(load(t)?);
    }
    let (out, mut report) = fgbd_core::denoise(&noisy, cfg, cached_q).map_err(|e| CliError::pipeline(job.input.display(), e))?;
    if let Some(t) = &truth {
        report.psnr_db = Some(fgbd_core::psnr(t, &out).map_err(|e| CliError::pipeline("ground truth", e))?);
    }
    save(&out, a.format, &job.output)?;
    Ok(FrameRecord { frame: job.index, input: job.input.clone(), output: job.output.clone(), estimated: cached_q.is_none(), report })
}

pub fn denoise(a: &DenoiseArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = a.filter_config();
    cfg.validate().map_err(|e| CliError::pipeline("configuration", e))?;
    let sequence = a.input.is_dir();
    let jobs: Vec<FrameJob> = if sequence {
        std::fs::create_dir_all(&a.output).map_err(|e| CliError::output(&a.output, e))?;
        list_frames(&a.input)?
            .into_iter()
            .enumerate()
            .map(|(index, input)| {
                let name = input.file_name().unwrap().to_owned();
                FrameJob {
                    index,
                    output: a.output.join(&name),
                    truth: a.ground_truth.as_ref().map(|g| g.join(&name)),
                    input,
                }
            })
            .collect()
    } else {
        if !a.input.is_file() {
            return Err(CliError::input(&a.input, "no such file"));
        }
        vec![FrameJob { index: 0, input: a.input.clone(), output: a.output.clone(), truth: a.ground_truth.clone() }]
    };

    let mut records: Vec<FrameRecord> = Vec::with_capacity(jobs.len());
    let mut f = 0;
    while f < jobs.len() {
        // A block is one estimating frame plus the frames that reuse its q.
        let end = (f + 1..jobs.len()).find(|&g| cfg.estimates_at(g)).unwrap_or(jobs.len());
        let head = run_frame(a, &cfg, &jobs[f], None)?;
        let q = head.report.selected_q;
        records.push(head);
        let rest = &jobs[f + 1..end];
        let tail: Vec<FrameRecord> = if a.parallel {
            rest.par_iter().map(|j| run_frame(a, &cfg, j, Some(q))).collect::<CliResult<_>>()?
        } else {
            rest.iter().map(|j| run_frame(a, &cfg, j, Some(q))).collect::<CliResult<_>>()?
        };
        records.extend(tail);
        f = end;
    }

    let mut manifest = Manifest::new(
        "denoise",
        json!({
            "filter": cfg,
            "bits": a.bits,
            "seed": a.seed,
            "sigma": a.sigma,
            "input": a.input,
            "output": a.output,
            "ground_truth": a.ground_truth,
            "parallel": a.parallel,
            "format": format!("{:?}", a.format).to_lowercase(),
        }),
    );
    for r in &records {
        let rep = &r.report;
        let psnr = rep.psnr_db.map(|p| format!(" psnr {p:.3} dB")).unwrap_or_default();
        let sigma = rep.sigma_est.map(|s| format!("sigma_est {s:.3}")).unwrap_or_else(|| "cached q".into());
        say(
            out,
            format_args!(
                "frame {} {}: q {} {sigma} masked {:.4} time {:.3} s{psnr}",
                r.frame,
                r.input.file_name().unwrap_or_default().to_string_lossy(),
                rep.selected_q,
                rep.masked_fraction,
                rep.total_seconds()
            ),
        )?;
        manifest.push(r)?;
    }
    let path = a.manifest.clone().unwrap_or_else(|| {
        if sequence {
            a.output.join("manifest.jsonl")
        } else {
            a.output.with_extension("manifest.jsonl")
        }
    });
    manifest.write(&path)?;
    info!("manifest written to {}", path.display());
    Ok(())
}

pub fn add_noise(a: &AddNoiseArgs, out: &mut dyn Write) -> CliResult<()> {
    let pc = load(&a.input)?;
    let noisy = add_gaussian_noise(&pc, a.sigma, a.seed).map_err(|e| CliError::pipeline("--sigma", e))?;
    save(&noisy, a.format, &a.output)?;
    let mut manifest = Manifest::new(
        "add-noise",
        json!({ "sigma": a.sigma, "seed": a.seed, "input": a.input, "output": a.output }),
    );
    manifest.push(json!({ "input": a.input, "output": a.output, "points": pc.len() }))?;
    manifest.write(&a.manifest.clone().unwrap_or_else(|| a.output.with_extension("manifest.jsonl")))?;
    say(out, format_args!("added sigma {} noise (seed {}) to {} points", a.sigma, a.seed, pc.len()))
}

pub fn estimate_noise(a: &EstimateArgs, out: &mut dyn Write) -> CliResult<()> {
    let pc = prepare(load(&a.input)?, a.bits, &a.input)?;
    let fail = |e| CliError::pipeline(a.input.display(), e);
    let g = build_weighted_slg(&pc).map_err(fail)?;
    let patches = extract_patches(&pc, &g, a.estimation.patch_size).map_err(fail)?;
    let tail = TailOptions { rule: a.estimation.tail_rule(), divisor: a.estimation.tail_divisor() };
    let est = estimate_from_patches(&patches, tail).map_err(fail)?;
    say(out, format_args!("points {}", pc.len()))?;
    say(out, format_args!("eligible patches {} (D = {})", est.eligible_count, est.patch_size))?;
    say(out, format_args!("sigma_est {:.4}", est.sigma_est))?;
    for (name, ch) in ["R", "G", "B"].iter().zip(&est.channels) {
        let eig: Vec<String> = ch.eigenvalues.iter().map(|v| format!("{v:.4}")).collect();
        say(
            out,
            format_args!(
                "channel {name}: sigma {:.4} m {} tau {:.4}{}",
                ch.sigma,
                ch.m,
                ch.tau,
                if ch.fallback { " (fallback split)" } else { "" }
            ),
        )?;
        say(out, format_args!("  eigenvalues {}", eig.join(" ")))?;
    }
    if let Some(actual) = a.actual_sigma {
        say(out, format_args!("E_ne {:.4}", (est.sigma_est - actual).abs()))?;
    }
    Ok(())
}

pub fn psnr(a: &PsnrArgs, out: &mut dyn Write) -> CliResult<()> {
    let r = load(&a.reference)?;
    let t = load(&a.test)?;
    let p = psnr_with_cap(&r, &t, a.cap).map_err(|e| CliError::pipeline("psnr", e))?;
    say(out, format_args!("{p:.4}"))
}

/// Label file written next to a two-tone cloud: one `0`/`1` per point.
pub fn labels_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".labels");
    PathBuf::from(s)
}

pub fn gen_synthetic(a: &GenArgs, out: &mut dyn Write) -> CliResult<()> {
    let bad = |e| CliError::pipeline("gen-synthetic", e);
    let kind: SyntheticKind = a.kind.parse().map_err(bad)?;
    let s = generate(kind, a.n, a.bits).map_err(bad)?;
    save(&s.cloud, a.format, &a.output)?;
    if let Some(labels) = &s.labels {
        let path = labels_path(&a.output);
        let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
        std::fs::write(&path, text).map_err(|e| CliError::output(&path, e))?;
    }
    say(out, format_args!("wrote {} points to {}", s.cloud.len(), a.output.display()))
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub slg_s: f64,
    pub bf_knn_s: f64,
    pub mean_degree: f64,
    pub max_degree: usize,
    pub overlap: f64,
}

/// Share of the 6-NN edges that the scan-line graph also contains.
pub fn edge_overlap(slg: &Graph, knn: &Graph) -> f64 {
    let total = knn.num_edges();
    if total == 0 {
        return 1.0;
    }
    let shared = knn.edges().filter(|&(i, j)| slg.neighbors(i as usize).binary_search(&j).is_ok()).count();
    shared as f64 / total as f64
}

fn fastest<T>(repeats: usize, mut f: impl FnMut() -> T) -> (f64, T) {
    let mut best = f64::INFINITY;
    let mut last = None;
    for _ in 0..repeats.max(1) {
        let t = Instant::now();
        let v = f();
        best = best.min(t.elapsed().as_secs_f64());
        last = Some(v);
    }
    (best, last.unwrap())
}

pub fn bench_rows(a: &BenchArgs) -> CliResult<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &n in &a.sizes {
        if n < 7 {
            return Err(CliError::Pipeline(format!("bench size {n} is below 7 points")));
        }
        let bits = a.bits.unwrap_or_else(|| dense_bits(n));
        let fail = |e| CliError::pipeline(format!("n = {n}"), e);
        let pc = random_voxels(n, bits, a.seed).map_err(fail)?;
        let (slg_s, slg) = fastest(a.repeats, || build_slg(&pc));
        let slg = slg.map_err(fail)?;
        let (bf_knn_s, knn) = fastest(a.repeats, || build_knn_brute(&pc, 6));
        let knn = knn.map_err(fail)?;
        rows.push(BenchRow {
            n,
            slg_s,
            bf_knn_s,
            mean_degree: slg.mean_degree(),
            max_degree: slg.max_degree(),
            overlap: edge_overlap(&slg, &knn),
        });
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s = format!("{BENCH_CSV_HEADER}\n");
    for r in rows {
        s.push_str(&format!("{},{:.6},{:.6},{:.4},{:.4}\n", r.n, r.slg_s, r.bf_knn_s, r.mean_degree, r.overlap));
    }
    s
}

pub fn bench_graph(a: &BenchArgs, out: &mut dyn Write) -> CliResult<()> {
    let rows = bench_rows(a)?;
    say(out, format_args!("{:>9} {:>11} {:>11} {:>8} {:>9} {:>4} {:>8}", "n", "slg_s", "bf_knn_s", "speedup", "mean_deg", "max", "overlap"))?;
    for r in &rows {
        say(
            out,
            format_args!(
                "{:>9} {:>11.6} {:>11.6} {:>8.1} {:>9.3} {:>4} {:>8.4}",
                r.n,
                r.slg_s,
                r.bf_knn_s,
                r.bf_knn_s / r.slg_s,
                r.mean_degree,
                r.max_degree,
                r.overlap
            ),
        )?;
    }
    if let Some(path) = &a.csv {
        std::fs::write(path, bench_csv(&rows)).map_err(|e| CliError::output(path, e))?;
    }
    Ok(())
}
