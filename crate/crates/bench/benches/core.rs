//! Timings for the hot paths: the curvature LP, the transport defect search,
//! the nonlinear upper estimator, and heat-operator construction and use.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use curvgraph_core::curvature::linear::{k_linear, k_ollivier};
use curvgraph_core::curvature::nonlinear::{k_quadratic_estimate, OptimizerConfig};
use curvgraph_core::generators::{generate, LatticeSpec};
use curvgraph_core::graph::WeightedGraph;
use curvgraph_core::semigroup::{random_test_functions, HeatOperator};
use curvgraph_core::transport::defect;

fn hex() -> WeightedGraph {
    generate(&LatticeSpec::HexTorus { width: 6, height: 6 }).unwrap().graph
}

fn gnp(n: usize, p: f64, seed: u64) -> WeightedGraph {
    generate(&LatticeSpec::Gnp { n, p, seed }).unwrap().graph
}

/// First vertex exactly two steps from vertex 0.
fn scale_two_partner(g: &WeightedGraph) -> usize {
    g.vertices().find(|&y| g.distance(0, y) == Some(2)).unwrap()
}

fn curvature_lp(c: &mut Criterion) {
    let g = hex();
    let y = scale_two_partner(&g);
    c.bench_function("k_linear hex6x6 r2", |b| {
        b.iter(|| k_linear(black_box(&g), 0, y, 2).unwrap());
    });
    let dense = gnp(14, 0.4, 5);
    let (x, e) = dense
        .vertices()
        .find_map(|x| dense.neighbors(x).first().map(|&(y, _)| (x, y)))
        .unwrap();
    c.bench_function("k_ollivier gnp14", |b| {
        b.iter(|| k_ollivier(black_box(&dense), x, e).unwrap());
    });
}

fn transport_search(c: &mut Criterion) {
    let g = hex();
    let y = scale_two_partner(&g);
    c.bench_function("defect hex6x6 r2", |b| {
        b.iter(|| defect(black_box(&g), y, 0, 2).unwrap());
    });
    let dense = gnp(12, 0.3, 5);
    c.bench_function("defect gnp12 edge sweep r1", |b| {
        b.iter(|| {
            for x in dense.vertices() {
                for &(y, _) in dense.neighbors(x) {
                    black_box(defect(&dense, y, x, 1).unwrap());
                }
            }
        });
    });
}

fn nonlinear_estimate(c: &mut Criterion) {
    let g = hex();
    let y = scale_two_partner(&g);
    let cfg = OptimizerConfig { restarts: 1, max_iters: 40, seed: 7, ..OptimizerConfig::default() };
    let mut group = c.benchmark_group("nonlinear");
    group.sample_size(10);
    group.bench_function("k_quadratic hex6x6 r2", |b| {
        b.iter(|| k_quadratic_estimate(black_box(&g), 0, y, 2, &cfg).unwrap());
    });
    group.finish();
}

fn heat(c: &mut Criterion) {
    let g = gnp(60, 0.12, 3);
    let op = HeatOperator::new(&g);
    let f = random_test_functions(g.n(), 1, 11).remove(0);
    c.bench_function("heat build n60", |b| {
        b.iter(|| HeatOperator::new(black_box(&g)));
    });
    c.bench_function("heat apply n60", |b| {
        b.iter(|| op.apply(0.7, black_box(&f)).unwrap());
    });
}

criterion_group!(benches, curvature_lp, transport_search, nonlinear_estimate, heat);
criterion_main!(benches);
