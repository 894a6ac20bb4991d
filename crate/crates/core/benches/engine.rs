//! Parallel versus sequential node evaluation on the same runs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use distcolor::coloring::{congest_list_coloring, local_list_coloring, ListInstance};
use distcolor::simcore::{generate, GenSpec};
use distcolor::{EngineConfig, Simulator};

fn bench_list_coloring(c: &mut Criterion) {
    let mut group = c.benchmark_group("list-coloring");
    group.sample_size(10);
    for (n, d) in [(1024, 8), (4096, 16)] {
        let g = generate(&GenSpec::RandomRegular { n, d }, 1).unwrap();
        let inst = ListInstance::delta_plus_one(g.topology().clone());
        let label = format!("n={n},d={d}");
        for (name, cfg) in [
            ("local/parallel", EngineConfig::local()),
            ("local/sequential", EngineConfig::local().sequential()),
        ] {
            group.bench_with_input(BenchmarkId::new(name, &label), &inst, |b, inst| {
                b.iter(|| local_list_coloring(&mut Simulator::new(cfg.clone()), inst).unwrap())
            });
        }
        for (name, cfg) in [
            ("congest/parallel", EngineConfig::congest(256)),
            ("congest/sequential", EngineConfig::congest(256).sequential()),
        ] {
            group.bench_with_input(BenchmarkId::new(name, &label), &inst, |b, inst| {
                b.iter(|| congest_list_coloring(&mut Simulator::new(cfg.clone()), inst).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_list_coloring);
criterion_main!(benches);
