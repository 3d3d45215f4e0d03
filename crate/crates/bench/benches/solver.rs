use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::{DMatrix, DVector};
use sicp_core::benchmarks::{make_problem, BenchmarkId};
use sicp_core::lp::{solve_bounded_lp, BoundedLp};
use sicp_core::moment::{maximize_expectation, MomentSettings, MomentSpec, SampleBudget, SampleDomain};
use sicp_core::CutMethod;
use std::hint::black_box;

fn cutting_loop(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve");
    for (name, id, method) in [
        ("ex1 surface", BenchmarkId::Ex1, CutMethod::Surface),
        ("ex1 plane", BenchmarkId::Ex1, CutMethod::Plane),
        ("seb1 surface", BenchmarkId::Seb1, CutMethod::Surface),
        ("ex4e n=5 surface", BenchmarkId::Ex4e { n: 5 }, CutMethod::Surface),
    ] {
        let mut bench = make_problem(id).unwrap();
        let mut config = bench.config.clone();
        config.method = method;
        g.bench_function(name, |b| b.iter(|| black_box(bench.solve(&config).unwrap().objective)));
    }
    g.finish();
}

/// Moment-matching LP on a grid: `max sum_k h(t_k) w_k` with the first four
/// uniform moments pinned.
fn grid_lp(points: usize) -> BoundedLp {
    let m = 4;
    let ts: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let a = DMatrix::from_fn(m + 1, points, |i, j| ts[j].powi(i as i32));
    let rhs = DVector::from_fn(m + 1, |i, _| 1.0 / (i + 1) as f64);
    let c = DVector::from_fn(points, |j, _| (7.0 * ts[j]).sin() * ts[j].sqrt());
    BoundedLp { a, c, l: rhs.clone(), u: rhs }
}

fn simplex(c: &mut Criterion) {
    let mut g = c.benchmark_group("lp");
    for points in [50, 200, 1000] {
        let lp = grid_lp(points);
        g.bench_function(format!("moment grid {points}"), |b| b.iter(|| black_box(solve_bounded_lp(&lp).unwrap().value)));
    }
    g.finish();
}

fn moment_oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("moment oracle");
    g.sample_size(20);
    let domain = SampleDomain::interval(0.0, 1.0).unwrap();
    let h = |xi: &DVector<f64>| (5.0 * xi[0]).sin() + xi[0] * xi[0];
    for m in [1, 3, 6] {
        let spec = MomentSpec::uniform_moments(m);
        let settings = MomentSettings { budget: SampleBudget::Fixed(1000), ..MomentSettings::default() };
        g.bench_function(format!("uniform moments m={m}"), |b| {
            b.iter(|| black_box(maximize_expectation(&h, &spec, &domain, &settings, 1, None).unwrap().value))
        });
    }
    g.finish();
}

criterion_group!(benches, cutting_loop, simplex, moment_oracle);
criterion_main!(benches);
