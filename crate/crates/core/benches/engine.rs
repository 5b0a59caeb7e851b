//! Multiscale gossip on the rayon pool versus a single worker.
//!
//! `cargo bench -p msgossip` compares both inside one build. Running it
//! again with `--no-default-features` times the plain sequential loops,
//! where both groups take the same path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use msgossip::harness::initial_values;
use msgossip::harness::InitMode;
use msgossip::multiscale::{multiscale_gossip, MultiscaleConfig};
use msgossip::{par, GeoGraph};

fn multiscale(c: &mut Criterion) {
    let mut group = c.benchmark_group("multiscale");
    group.sample_size(10);
    for n in [1000usize, 4000] {
        let g = GeoGraph::generate_connected(n, 3.0, 7, 100).unwrap();
        let v = initial_values(n, 7, InitMode::Uniform);
        let cfg = MultiscaleConfig::default();
        let mode = if par::is_parallel() {
            "rayon"
        } else {
            "sequential-build"
        };
        group.bench_with_input(BenchmarkId::new(mode, n), &n, |b, _| {
            b.iter(|| multiscale_gossip(&g, &v, &cfg, 1).unwrap().ledger.total)
        });
        group.bench_with_input(BenchmarkId::new("one-worker", n), &n, |b, _| {
            b.iter(|| par::with_workers(Some(1), || multiscale_gossip(&g, &v, &cfg, 1).unwrap().ledger.total))
        });
    }
    group.finish();
}

criterion_group!(benches, multiscale);
criterion_main!(benches);
