use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qei_core::exec;
use qei_core::qei::{scaling_curve, worldline_qwei_bound, BoundTarget};
use qei_core::weights::Weight;

fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// One full scaling curve: a bound evaluation per grid point, fanned out by
/// the active execution backend.
fn curve_bench(c: &mut Criterion) {
    let w = Weight::gaussian(1.0, 0.0).unwrap();
    let target = BoundTarget::Mass(1.0);
    let mut group = c.benchmark_group("scaling_curve");
    for count in [8usize, 32] {
        let grid = log_grid(0.25, 4.0, count);
        group.bench_with_input(BenchmarkId::from_parameter(count), &grid, |b, grid| {
            b.iter(|| scaling_curve(&w, &target, grid, 1e-9).unwrap())
        });
    }
    group.finish();
}

/// The same per-point work pushed through both backends explicitly, so the
/// parallel build reports its speedup against the sequential baseline.
fn backend_bench(c: &mut Criterion) {
    let w = Weight::gaussian(1.0, 0.0).unwrap();
    let grid = log_grid(0.25, 4.0, 32);
    let eval = |tau: &f64| worldline_qwei_bound(&w.rescale(*tau).unwrap(), 1.0, 1e-9).unwrap().q_value;

    let mut group = c.benchmark_group("bound_grid_backend");
    group.bench_function("active", |b| {
        b.iter(|| exec::map_ordered(&grid, eval).iter().sum::<f64>())
    });
    group.bench_function("sequential", |b| {
        b.iter(|| exec::map_ordered_seq(&grid, eval).iter().sum::<f64>())
    });
    group.finish();
}

criterion_group!(benches, curve_bench, backend_bench);
criterion_main!(benches);
