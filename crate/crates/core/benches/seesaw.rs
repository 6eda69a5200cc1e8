use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use eapm_core::optimize::{seesaw, SeesawConfig};
use eapm_core::par;
use eapm_core::protocols::{make_game, Scenario};

fn restarts(c: &mut Criterion) {
    let game = make_game(3, Scenario::Eapm).unwrap();
    let mut group = c.benchmark_group("seesaw_d3_eapm_8_restarts");
    group.sample_size(10);
    let parallel = par::default_workers().max(2);
    for workers in [1, parallel] {
        let cfg = SeesawConfig {
            restarts: 8,
            seed: 3,
            workers,
            ..SeesawConfig::default()
        };
        let label = if workers == 1 { "sequential" } else { "rayon" };
        group.bench_with_input(BenchmarkId::new(label, workers), &cfg, |b, cfg| {
            b.iter(|| seesaw(&game, cfg).unwrap().best_score)
        });
    }
    group.finish();
}

criterion_group!(benches, restarts);
criterion_main!(benches);
