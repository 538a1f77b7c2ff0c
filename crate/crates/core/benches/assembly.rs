use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tevp_core::diagnostics::weyl_count_sweep;
use tevp_core::geometry::{build_surface, Shape};
use tevp_core::layerpot::{assemble, OperatorKind};
use tevp_core::par::Execution;
use tevp_core::spectral::SystemOptions;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn curve_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("kite_single_layer");
    group.sample_size(10);
    for n in [128, 256, 512] {
        let s = build_surface(&Shape::Kite, n).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &s, |b, s| {
                b.iter(|| assemble(s, 6.0, OperatorKind::Single, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn sphere_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sphere_weyl_sweep");
    group.sample_size(10);
    let s = build_surface(&Shape::Sphere { radius: 1.0 }, 16).unwrap();
    let kappas: Vec<f64> = (0..8).map(|i| 10.0 + 2.5 * i as f64).collect();
    for (name, exec) in MODES {
        let opts = SystemOptions { exec, ..Default::default() };
        group.bench_function(name, |b| b.iter(|| weyl_count_sweep(&s, 2.0, 0.1, &kappas, &opts).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, curve_assembly, sphere_sweep);
criterion_main!(benches);
