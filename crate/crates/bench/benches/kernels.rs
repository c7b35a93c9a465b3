use std::hint::black_box;
use std::time::Instant;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lrtc_core::data::{sample_mask, synth_lowrank};
use lrtc_core::{t_svd, tensor_ptau_prox, unfold_q, FourierOptions, PenaltySpec, SolverConfig, SolverState};

fn bench_tsvd(c: &mut Criterion) {
    let mut group = c.benchmark_group("t_svd");
    for n in [16, 32, 64] {
        let x = synth_lowrank([n, n, 20], 3, 1).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &x, |b, x| {
            b.iter(|| t_svd(black_box(x)).unwrap())
        });
    }
    group.finish();
}

fn bench_prox(c: &mut Criterion) {
    let x = synth_lowrank([30, 30, 20], 5, 2).unwrap();
    let spec = PenaltySpec::mpcp(0.5, 10.0).unwrap();
    c.bench_function("tensor_ptau_prox/30x30x20", |b| {
        b.iter(|| tensor_ptau_prox(black_box(&x), 50.0, &spec).unwrap())
    });
    c.bench_function("unfold_q/30x30x20/q=3", |b| b.iter(|| unfold_q(black_box(&x), 3).unwrap()));
}

fn bench_step(c: &mut Criterion) {
    let x = synth_lowrank([30, 30, 20], 3, 3).unwrap();
    let mask = sample_mask(x.shape(), 0.5, 3).unwrap();
    let observed = mask.project(&x).unwrap();
    let mut group = c.benchmark_group("admm_step");
    for symmetric in [true, false] {
        let mut cfg = SolverConfig::new(PenaltySpec::from_tau_p(lrtc_core::PenaltyKind::Mpcp, 0.1, 100.0).unwrap());
        cfg.fourier = FourierOptions { conjugate_symmetry: symmetric };
        let state = SolverState::init(&observed, &mask, &cfg).unwrap();
        let label = if symmetric { "conjugate_symmetry" } else { "all_slices" };
        group.bench_function(label, |b| {
            b.iter_batched(
                || state.clone(),
                |mut s| s.step(&observed, &mask, &cfg, Instant::now()).unwrap(),
                criterion::BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, bench_tsvd, bench_prox, bench_step);
criterion_main!(benches);
