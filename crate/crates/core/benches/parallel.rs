use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use photostereo::experiments::{phase_angle_sweep, SweepSettings};
use photostereo::integrate::{integrate_with, normals_to_gradients, IntegrationSettings};
use photostereo::panel::uniform_ring;
use photostereo::render::{render_stack, render_with, RenderSettings, SphereScene};
use photostereo::solver::{solve_stack_with, Thresholds};
use photostereo::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn bench_render(c: &mut Criterion) {
    let scene = SphereScene::with_size(256);
    let settings = RenderSettings::default();
    let mut g = c.benchmark_group("render_256");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| render_with(&scene, &settings, exec))
        });
    }
    g.finish();
}

fn bench_solve(c: &mut Criterion) {
    let scene = SphereScene::with_size(256);
    let stack = render_stack(
        &scene,
        &RenderSettings::default(),
        &uniform_ring(30.0, 6),
        false,
        Execution::Sequential,
    )
    .unwrap();
    let mut g = c.benchmark_group("solve_256x6");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| solve_stack_with(&stack, &Thresholds::default(), exec))
        });
    }
    g.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let grid: Vec<f64> = (1..=89).step_by(4).map(f64::from).collect();
    let mut g = c.benchmark_group("phase_sweep_64");
    g.sample_size(10);
    for (name, exec) in MODES {
        let s = SweepSettings {
            scene: SphereScene::with_size(64),
            execution: exec,
            ..SweepSettings::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| phase_angle_sweep(&s, &grid))
        });
    }
    g.finish();
}

fn bench_integrate(c: &mut Criterion) {
    let field = normals_to_gradients(&SphereScene::with_size(128).ground_truth(), 0.1);
    let mut g = c.benchmark_group("integrate_128");
    g.sample_size(10);
    for (name, exec) in MODES {
        let settings = IntegrationSettings {
            execution: exec,
            ..IntegrationSettings::default()
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| integrate_with(&field, &settings).unwrap())
        });
    }
    g.finish();
}

criterion_group!(
    benches,
    bench_render,
    bench_solve,
    bench_sweep,
    bench_integrate
);
criterion_main!(benches);
