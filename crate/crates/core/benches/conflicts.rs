//! Compares the rayon-backed conflict scan against the sequential baseline
//! on generated bundles of increasing size. With `--no-default-features`
//! the "parallel" group degenerates to a second sequential run.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fairadapt_core::engine::{detect_conflicts, detect_conflicts_seq};
use fairadapt_core::fixtures::{random_conflict_bundle, Rng};

fn bench_conflict_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("detect_conflicts");
    for &frs in &[8usize, 32, 64] {
        let mut rng = Rng::new(0x5eed_0000 + frs as u64);
        let bundle = random_conflict_bundle(&mut rng, frs, frs * 2, 12);
        group.bench_with_input(BenchmarkId::new("parallel", frs), &bundle, |b, bundle| {
            b.iter(|| detect_conflicts(bundle).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", frs), &bundle, |b, bundle| {
            b.iter(|| detect_conflicts_seq(bundle).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_conflict_scan);
criterion_main!(benches);
