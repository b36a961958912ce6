use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ffic_core::regions::{nofb_inner, ChannelSpec};
use ffic_core::{Execution, McConfig, Shape};

fn executors(c: &mut Criterion) {
    let ch = ChannelSpec::symmetric(1e3, 10f64.powf(1.5), Shape::Rayleigh).unwrap();
    let mut group = c.benchmark_group("nofb_inner");
    group.sample_size(10);
    for samples in [100_000u64, 1_000_000] {
        for exec in [Execution::Sequential, Execution::Parallel] {
            let cfg = McConfig::new(samples, 42).with_execution(exec);
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), samples), &cfg, |b, cfg| {
                b.iter(|| nofb_inner(&ch, cfg).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, executors);
criterion_main!(benches);
