use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use fgbd_bench::noisy_two_tone;
use fgbd_core::noise::estimate_from_patches;
use fgbd_core::{apply_filter, build_weighted_slg, denoise, extract_patches, FilterConfig};

fn stages(c: &mut Criterion) {
    let n = 100_000;
    let pc = noisy_two_tone(n);
    let g = build_weighted_slg(&pc).unwrap();
    let mut group = c.benchmark_group("stages");
    group.throughput(Throughput::Elements(n as u64));
    group.bench_function("noise_estimation", |b| {
        b.iter(|| estimate_from_patches(&extract_patches(&pc, &g, 7).unwrap(), Default::default()).unwrap())
    });
    group.bench_function("filter_q4", |b| b.iter(|| apply_filter(&g, pc.colors(), 4)));
    group.finish();
}

fn end_to_end(c: &mut Criterion) {
    let mut group = c.benchmark_group("denoise");
    group.sample_size(10);
    let cfg = FilterConfig::default();
    for n in [100_000usize, 1_000_000] {
        let pc = noisy_two_tone(n);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &pc, |b, pc| b.iter(|| denoise(pc, &cfg, None).unwrap()));
        group.bench_with_input(BenchmarkId::new("cached_q", n), &pc, |b, pc| b.iter(|| denoise(pc, &cfg, Some(4)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, stages, end_to_end);
criterion_main!(benches);
