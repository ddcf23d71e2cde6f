use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use kcurv::solver::Problem;
use kcurv::{f_eval, CurvatureSpec, TrigField};
use kcurv_bench::{banded, manufactured};

fn symmetric(c: &mut Criterion) {
    let mut g = c.benchmark_group("f_eval");
    for (n, k) in [(2, 2), (5, 3)] {
        let spec = CurvatureSpec::new(n, k).unwrap();
        let lambda: Vec<f64> = (0..n).map(|i| 1.0 + 0.3 * i as f64).collect();
        g.bench_with_input(BenchmarkId::from_parameter(format!("n{n}k{k}")), &lambda, |b, l| {
            b.iter(|| f_eval(black_box(l), spec))
        });
    }
    g.finish();
}

fn residual(c: &mut Criterion) {
    let mut g = c.benchmark_group("residual");
    for (nt, np) in [(17, 32), (65, 128)] {
        let cfg = manufactured(nt, np);
        let problem = Problem::new(&cfg).unwrap();
        let u = TrigField::manufactured(0.5, 0.1).sample(cfg.grid);
        g.bench_function(format!("evaluate/{nt}x{np}"), |b| b.iter(|| problem.evaluate(black_box(&u), 1.0).unwrap()));
        g.bench_function(format!("jacobian/{nt}x{np}"), |b| {
            b.iter(|| problem.jacobian(black_box(&u), 1.0, false).unwrap())
        });
    }
    g.finish();
}

fn banded_lu(c: &mut Criterion) {
    let mut g = c.benchmark_group("banded_lu");
    for (n, bw) in [(480, 34), (8064, 130)] {
        let m = banded(n, bw, bw);
        let rhs: Vec<f64> = (0..n).map(|i| (i % 7) as f64).collect();
        g.bench_function(format!("factor_solve/{n}/{bw}"), |b| {
            b.iter(|| m.clone().factor().unwrap().solve(black_box(&rhs)))
        });
    }
    g.finish();
}

fn solve(c: &mut Criterion) {
    let cfg = manufactured(17, 32);
    let mut g = c.benchmark_group("solve");
    g.sample_size(10);
    g.bench_function("manufactured/17x32", |b| b.iter(|| kcurv::solve(black_box(&cfg)).unwrap()));
    g.finish();
}

criterion_group!(benches, symmetric, residual, banded_lu, solve);
criterion_main!(benches);
