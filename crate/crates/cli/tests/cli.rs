use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fgbd_cli::manifest;
use fgbd_core::synthetic::{generate, SyntheticKind};
use fgbd_core::{add_gaussian_noise, load_ply_path, save_ply_path, PlyFormat, PointCloud};

fn fgbd(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fgbd")).args(args).current_dir(cwd).output().unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let o = fgbd(args, cwd);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn value_after(text: &str, key: &str) -> f64 {
    let line = text.lines().find(|l| l.starts_with(key)).unwrap_or_else(|| panic!("no `{key}` in\n{text}"));
    line[key.len()..].split_whitespace().next().unwrap().parse().unwrap()
}

fn write_frames(dir: &Path, frames: usize, n: usize) -> Vec<PathBuf> {
    std::fs::create_dir_all(dir).unwrap();
    let clean = generate(SyntheticKind::TwoTone, n, None).unwrap().cloud;
    (0..frames)
        .map(|f| {
            let p = dir.join(format!("frame_{f:03}.ply"));
            let noisy = add_gaussian_noise(&clean, 15.0, f as u64).unwrap();
            save_ply_path(&noisy, PlyFormat::BinaryLittleEndian, &p).unwrap();
            p
        })
        .collect()
}

#[test]
fn synthetic_generators() {
    let t = tempfile::tempdir().unwrap();
    ok(&["gen-synthetic", "--kind", "constant", "-n", "8", "-o", "c.ply"], t.path());
    let c = load_ply_path(t.path().join("c.ply")).unwrap();
    assert_eq!(c.len(), 8);
    assert!(c.colors().windows(2).all(|w| w[0] == w[1]));

    ok(&["gen-synthetic", "--kind", "grid", "-n", "27", "-o", "g.ply", "--format", "ascii"], t.path());
    let g = load_ply_path(t.path().join("g.ply")).unwrap();
    let mut coords = g.voxels().unwrap().coords.to_vec();
    coords.sort();
    coords.dedup();
    assert_eq!(coords.len(), 27);
    assert!(coords.iter().flatten().all(|&v| v < 3));

    ok(&["gen-synthetic", "--kind", "two-tone", "-n", "1000", "-o", "t.ply"], t.path());
    let labels = std::fs::read_to_string(t.path().join("t.ply.labels")).unwrap();
    let tt = load_ply_path(t.path().join("t.ply")).unwrap();
    assert_eq!(labels.lines().count(), tt.len());
    let first = tt.colors().iter().zip(labels.lines()).find(|(_, l)| *l == "0").unwrap().0;
    for (c, l) in tt.colors().iter().zip(labels.lines()) {
        assert_eq!(c == first, l == "0");
    }

    let o = fgbd(&["gen-synthetic", "--kind", "blob", "-n", "8", "-o", "x.ply"], t.path());
    assert_eq!(o.status.code(), Some(fgbd_cli::EXIT_PIPELINE));
}

#[test]
fn noise_then_psnr() {
    let t = tempfile::tempdir().unwrap();
    ok(&["gen-synthetic", "--kind", "constant", "-n", "100000", "-o", "c.ply"], t.path());
    ok(&["add-noise", "c.ply", "-o", "zero.ply", "--sigma", "0"], t.path());
    assert_eq!(load_ply_path(t.path().join("zero.ply")).unwrap(), load_ply_path(t.path().join("c.ply")).unwrap());

    ok(&["add-noise", "c.ply", "-o", "n.ply", "--sigma", "10"], t.path());
    let lines = manifest::read(&t.path().join("n.manifest.jsonl")).unwrap();
    assert_eq!(lines[0]["config"]["seed"], 0);
    assert_eq!(lines[0]["version"], manifest::SCHEMA_VERSION);
    let p: f64 = ok(&["psnr", "c.ply", "n.ply"], t.path()).trim().parse().unwrap();
    assert!((p - 28.145).abs() <= 0.3, "{p}");
    let cap: f64 = ok(&["psnr", "c.ply", "c.ply"], t.path()).trim().parse().unwrap();
    assert_eq!(cap, 100.0);

    let o = fgbd(&["add-noise", "c.ply", "-o", "m.ply", "--sigma=-1"], t.path());
    assert_eq!(o.status.code(), Some(fgbd_cli::EXIT_PIPELINE));
}

#[test]
fn noise_estimation_report() {
    let t = tempfile::tempdir().unwrap();
    ok(&["gen-synthetic", "--kind", "constant", "-n", "50000", "-o", "c.ply"], t.path());
    let clean = ok(&["estimate-noise", "c.ply"], t.path());
    assert_eq!(value_after(&clean, "sigma_est"), 0.0);
    ok(&["add-noise", "c.ply", "-o", "n.ply", "--sigma", "30", "--seed", "4"], t.path());
    let rep = ok(&["estimate-noise", "n.ply", "--actual-sigma", "30"], t.path());
    assert!(value_after(&rep, "E_ne") <= 1.0, "{rep}");
    assert_eq!(rep.lines().filter(|l| l.trim_start().starts_with("eigenvalues")).count(), 3);

    std::fs::write(t.path().join("bad.ply"), "not a point cloud").unwrap();
    assert_eq!(fgbd(&["estimate-noise", "bad.ply"], t.path()).status.code(), Some(fgbd_cli::EXIT_INPUT));
    assert_eq!(fgbd(&["estimate-noise", "missing.ply"], t.path()).status.code(), Some(fgbd_cli::EXIT_INPUT));
    assert_eq!(fgbd(&["estimate-noise"], t.path()).status.code(), Some(2));
}

#[test]
fn graph_benchmark_table() {
    let t = tempfile::tempdir().unwrap();
    ok(&["bench-graph", "--sizes", "1000", "--repeats", "3", "--csv", "b.csv"], t.path());
    let csv = std::fs::read_to_string(t.path().join("b.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,slg_s,bf_knn_s,mean_degree,overlap"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 1000.0);
    assert!(row[1] < row[2], "slg {} vs knn {}", row[1], row[2]);
    assert!(row[3] > 0.0 && row[3] <= 6.0);
    assert!((0.0..=1.0).contains(&row[4]));
}

#[test]
fn float_clouds_need_bits() {
    let t = tempfile::tempdir().unwrap();
    let pos = (0..500).map(|i| [f64::from(i) * 0.01, f64::from(i % 7), f64::from(i % 11) * 0.5]).collect();
    let pc = PointCloud::from_float(pos, vec![[100.0, 50.0, 25.0]; 500]).unwrap();
    save_ply_path(&pc, PlyFormat::Ascii, t.path().join("f.ply")).unwrap();
    assert_eq!(fgbd(&["denoise", "f.ply", "-o", "o.ply"], t.path()).status.code(), Some(fgbd_cli::EXIT_PIPELINE));
    ok(&["denoise", "f.ply", "-o", "o.ply", "--bits", "8"], t.path());
    assert!(load_ply_path(t.path().join("o.ply")).unwrap().is_quantized());
}

#[test]
fn sequence_reuses_q_between_estimations() {
    let t = tempfile::tempdir().unwrap();
    write_frames(&t.path().join("in"), 20, 1000);
    ok(&["denoise", "in", "-o", "out", "--interval", "10"], t.path());
    let lines = manifest::read(&t.path().join("out/manifest.jsonl")).unwrap();
    assert_eq!(lines.len(), 21);
    let estimated: Vec<u64> =
        lines[1..].iter().filter(|r| r["estimated"] == true).map(|r| r["frame"].as_u64().unwrap()).collect();
    assert_eq!(estimated, vec![0, 10]);
    for r in &lines[1..] {
        let f = r["frame"].as_u64().unwrap() as usize;
        let head = &lines[1 + f / 10 * 10];
        assert_eq!(r["report"]["selected_q"], head["report"]["selected_q"]);
        assert_eq!(r["report"]["sigma_est"].is_null(), f % 10 != 0);
        assert!(r["input"].as_str().unwrap().ends_with(&format!("frame_{f:03}.ply")));
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let t = tempfile::tempdir().unwrap();
    write_frames(&t.path().join("in"), 5, 8000);
    for out in ["a", "b"] {
        ok(&["denoise", "in", "-o", out, "--interval", "2", "--seed", "7", "--sigma", "5"], t.path());
    }
    ok(&["denoise", "in", "-o", "p", "--interval", "2", "--seed", "7", "--sigma", "5", "--parallel"], t.path());
    for f in 0..5 {
        let name = format!("frame_{f:03}.ply");
        let a = std::fs::read(t.path().join("a").join(&name)).unwrap();
        assert_eq!(a, std::fs::read(t.path().join("b").join(&name)).unwrap());
        assert_eq!(a, std::fs::read(t.path().join("p").join(&name)).unwrap());
    }
    let strip = |dir: &str| {
        let mut lines = manifest::read(&t.path().join(dir).join("manifest.jsonl")).unwrap();
        for l in &mut lines[1..] {
            l["report"]["stage_timings"] = serde_json::Value::Null;
            l["output"] = serde_json::Value::Null;
        }
        lines[0]["config"]["output"] = serde_json::Value::Null;
        lines
    };
    assert_eq!(strip("a"), strip("b"));
    let psnr = strip("a")[1]["report"]["psnr_db"].as_f64().unwrap();
    assert!(psnr > 0.0);
}

#[test]
fn ground_truth_directory_gives_psnr() {
    let t = tempfile::tempdir().unwrap();
    let clean = generate(SyntheticKind::TwoTone, 27_000, None).unwrap().cloud;
    std::fs::create_dir_all(t.path().join("gt")).unwrap();
    std::fs::create_dir_all(t.path().join("in")).unwrap();
    for f in 0..2 {
        let name = format!("{f}.ply");
        save_ply_path(&clean, PlyFormat::BinaryLittleEndian, t.path().join("gt").join(&name)).unwrap();
        let noisy = add_gaussian_noise(&clean, 20.0, f).unwrap();
        save_ply_path(&noisy, PlyFormat::BinaryLittleEndian, t.path().join("in").join(&name)).unwrap();
    }
    let out = ok(&["denoise", "in", "-o", "out", "--ground-truth", "gt", "--manifest", "run.jsonl"], t.path());
    assert_eq!(out.lines().count(), 2);
    let lines = manifest::read(&t.path().join("run.jsonl")).unwrap();
    for r in &lines[1..] {
        assert!(r["report"]["psnr_db"].as_f64().unwrap() > 26.0);
    }
    let missing = fgbd(&["denoise", "nowhere", "-o", "x"], t.path());
    assert_eq!(missing.status.code(), Some(fgbd_cli::EXIT_INPUT));
}
