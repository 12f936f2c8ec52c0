use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nldg::studies::{run_convergence, StudyConfig};
use nldg::{stiffness_matrix, DgSpace, Execution, KernelSpec, SQuadConfig, SchemeVariant};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn stiffness(c: &mut Criterion) {
    let mut group = c.benchmark_group("stiffness");
    group.sample_size(20);
    // wide horizon: many panels and many shifts per panel
    let space = DgSpace::new(0.0, 1.0, 80, 3).unwrap();
    let kernel = KernelSpec::new(0.5, 0.2).unwrap();
    for (name, execution) in MODES {
        let squad = SQuadConfig {
            execution,
            ..SQuadConfig::default()
        };
        group.bench_function(BenchmarkId::new(name, "N80_k3_delta0.2"), |b| {
            b.iter(|| stiffness_matrix(&space, &kernel, &squad, SchemeVariant::Forward).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("convergence_sweep");
    group.sample_size(10);
    for (name, execution) in MODES {
        let cfg = StudyConfig {
            alphas: vec![0.25, 0.5, 1.5, 2.5],
            degrees: vec![1, 2],
            cells: vec![10, 20],
            dt: 1e-3,
            t_final: 0.2,
            execution,
            ..StudyConfig::converge()
        };
        group.bench_function(BenchmarkId::new(name, "16_cases"), |b| b.iter(|| run_convergence(&cfg).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, stiffness, sweep);
criterion_main!(benches);
