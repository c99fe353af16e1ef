use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wftg::{
    build_knn_graph, gen_sphere, LaplacianKind, MaskFamily, PlanOptions, SphereSignal, SphereSpec,
    TransformPlan,
};

const FAMILIES: [MaskFamily; 3] = [MaskFamily::Haar, MaskFamily::Linear, MaskFamily::Quadratic];

fn sphere(vertices: usize) -> (wftg::Graph, Vec<f64>) {
    let (pc, f) = gen_sphere(&SphereSpec {
        vertex_count: vertices,
        seed: 1,
        signal: SphereSignal::Cap,
    })
    .unwrap();
    (build_knn_graph(&pc, 10, 10.0).unwrap(), f)
}

fn plan(g: &wftg::Graph, family: MaskFamily, levels: usize) -> TransformPlan {
    let opts = PlanOptions {
        levels,
        ..PlanOptions::default()
    };
    TransformPlan::new(g, family, LaplacianKind::Unnormalized, &opts).unwrap()
}

fn transform(c: &mut Criterion) {
    let (g, f) = sphere(2000);
    let mut group = c.benchmark_group("sphere2000_L4");
    for family in FAMILIES {
        let p = plan(&g, family, 4);
        let coeffs = p.decompose(&f).unwrap();
        group.bench_with_input(BenchmarkId::new("decompose", family), &f, |b, f| {
            b.iter(|| p.decompose(black_box(f)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("reconstruct", family), &coeffs, |b, c| {
            b.iter(|| p.reconstruct(black_box(c)).unwrap())
        });
    }
    group.finish();
}

fn scaling(c: &mut Criterion) {
    let mut group = c.benchmark_group("linear_L1_roundtrip");
    group.sample_size(20);
    for vertices in [1000, 4000, 16000] {
        let (g, f) = sphere(vertices);
        let p = plan(&g, MaskFamily::Linear, 1);
        group.bench_with_input(BenchmarkId::from_parameter(vertices), &f, |b, f| {
            b.iter(|| p.reconstruct(&p.decompose(black_box(f)).unwrap()).unwrap())
        });
    }
    group.finish();
}

fn setup(c: &mut Criterion) {
    let (pc, _) = gen_sphere(&SphereSpec {
        vertex_count: 2000,
        seed: 1,
        signal: SphereSignal::Cap,
    })
    .unwrap();
    c.bench_function("knn_graph_2000", |b| {
        b.iter(|| build_knn_graph(black_box(&pc), 10, 10.0).unwrap())
    });
    let g = build_knn_graph(&pc, 10, 10.0).unwrap();
    c.bench_function("plan_linear_2000", |b| {
        b.iter(|| plan(black_box(&g), MaskFamily::Linear, 4))
    });
}

criterion_group!(benches, transform, scaling, setup);
criterion_main!(benches);
