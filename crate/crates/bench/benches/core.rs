use std::hint::black_box;

use brwre_bench::{binary_config, binary_tree, poisson_mixture};
use brwre_core::rng::derived_rng;
use brwre_core::{pmf_zi, sample_q, simulate, DisplacementModel, LimitConfig, OffspringLaw, QMode};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn replication(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate");
    group.sample_size(20);
    for n in [8usize, 12, 14] {
        let cfg = binary_config(n);
        let mut rep = 0;
        group.bench_with_input(BenchmarkId::new("binary_iid", n), &cfg, |b, cfg| {
            b.iter(|| {
                rep += 1;
                simulate(black_box(cfg), &mut derived_rng(1, rep)).unwrap()
            })
        });
    }
    group.finish();
}

fn quenched_pmf(c: &mut Criterion) {
    let mut group = c.benchmark_group("pmf_zi");
    for i in [5usize, 10, 20] {
        let env = vec![OffspringLaw::Poisson { lambda: 2.0 }; i];
        group.bench_with_input(BenchmarkId::new("poisson2", i), &env, |b, env| {
            b.iter(|| pmf_zi(black_box(env), 4096))
        });
    }
    group.finish();
}

fn limit_q(c: &mut Criterion) {
    let cfg = LimitConfig::default();
    let iid = DisplacementModel::iid(2.0, 1.0).unwrap();
    let full = DisplacementModel::full_dep(2.0, 1.0).unwrap();
    let mut group = c.benchmark_group("sample_q");
    for (name, env, disp, mode) in [
        ("binary_shortcut", binary_tree(), &iid, QMode::Shortcut),
        ("binary_general", binary_tree(), &full, QMode::General),
        ("poisson_mixture_shortcut", poisson_mixture(), &iid, QMode::Shortcut),
    ] {
        let mut i = 0;
        group.bench_function(name, |b| {
            b.iter(|| {
                i += 1;
                sample_q(disp, &env, mode, &cfg, &mut derived_rng(2, i)).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, replication, quenched_pmf, limit_q);
criterion_main!(benches);
