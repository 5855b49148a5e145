use std::hint::black_box;
use std::sync::Arc;

use ch_bench::{grid, pair, piecewise_constant, pipeline, single};
use ch_core::grw::{solve_two_monotone_grw, QueryModel};
use ch_core::kuhn::{interpolate, KuhnError};
use ch_core::solvers::{solve_grid_with, solve_piecewise_constant_lp, solve_single_agent, solve_two_monotone, GridOptions};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn single_agent(c: &mut Criterion) {
    let (v, l) = single();
    let mut g = c.benchmark_group("single_agent");
    for k in [8, 16, 24] {
        g.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| solve_single_agent(&v, l / 2f64.powi(k), l).unwrap())
        });
    }
    g.finish();
}

fn two_agents(c: &mut Criterion) {
    let (v1, v2, l) = pair();
    let mut g = c.benchmark_group("two_agents");
    for k in [8, 16] {
        let eps = l / 2f64.powi(k);
        g.bench_with_input(BenchmarkId::new("eval", k), &eps, |b, &eps| b.iter(|| solve_two_monotone(&v1, &v2, eps, l).unwrap()));
        g.bench_with_input(BenchmarkId::new("grw", k), &eps, |b, &eps| {
            b.iter(|| solve_two_monotone_grw(&v1, &v2, eps, l, QueryModel::Grw, None).unwrap())
        });
    }
    g.finish();
}

fn grid_solver(c: &mut Criterion) {
    let mut g = c.benchmark_group("grid");
    g.sample_size(10);
    let opts = GridOptions { guided: false, ..GridOptions::default() };
    for n in [1, 2, 3] {
        let ch = Arc::new(grid(n, 4.0));
        g.bench_with_input(BenchmarkId::new("additive", n), &ch, |b, ch| b.iter(|| solve_grid_with(Arc::clone(ch), &opts).unwrap()));
    }
    let ch = Arc::new(pipeline(9));
    g.bench_function("general_pipeline_n9", |b| b.iter(|| solve_grid_with(Arc::clone(&ch), &GridOptions::default()).unwrap()));
    g.finish();
}

fn lp(c: &mut Criterion) {
    let mut g = c.benchmark_group("lp");
    g.sample_size(10);
    for n in [1, 2, 3] {
        let agents = piecewise_constant(n, 6);
        g.bench_with_input(BenchmarkId::from_parameter(n), &agents, |b, a| b.iter(|| solve_piecewise_constant_lp(a).unwrap()));
    }
    g.finish();
}

fn kuhn(c: &mut Criterion) {
    let m = 64;
    let x = [0.3141, 0.5926, 0.5358];
    c.bench_function("kuhn_interpolate_3d", |b| {
        b.iter(|| interpolate::<KuhnError>(black_box(&x), m, |v| Ok(vec![v.iter().sum::<usize>() as f64])).unwrap())
    });
}

criterion_group!(benches, single_agent, two_agents, grid_solver, lp, kuhn);
criterion_main!(benches);
