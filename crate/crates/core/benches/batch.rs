use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use henon_core::par::Execution;
use henon_core::radial::ProblemParams;
use henon_core::shooting::{classify_batch, ShootOptions};

// 32 shooting parameters straddling β₀ ≈ −1.558 for N = 5, α = 0.
fn betas() -> Vec<f64> {
    (0..32).map(|i| -3.0 + 3.0 * i as f64 / 31.0).collect()
}

fn batch(c: &mut Criterion) {
    let template = ProblemParams::with_beta(5, 0.0, 0.0).unwrap();
    let opts = ShootOptions::default();
    let betas = betas();
    let mut group = c.benchmark_group("classify_batch");
    group.sample_size(10);
    for (name, exec) in [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)] {
        group.bench_function(name, |b| b.iter(|| classify_batch(black_box(&template), black_box(&betas), &opts, exec)));
    }
    group.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);
