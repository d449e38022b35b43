use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hhs::audit::audit_axioms;
use hhs::fixtures::free_product_z2_z3;
use hhs::regions::distance_formula_fit;
use hhs::tree::{build_combined, CombineOptions};
use hhs_bench::audit_models;

fn audits(c: &mut Criterion) {
    let mut g = c.benchmark_group("audit_axioms");
    g.sample_size(10);
    for (name, m) in audit_models() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &m, |b, m| b.iter(|| audit_axioms(m)));
    }
    g.finish();
}

fn distance_formula(c: &mut Criterion) {
    let mut g = c.benchmark_group("distance_formula_fit");
    for (name, m) in audit_models() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &m, |b, m| b.iter(|| distance_formula_fit(m, 1)));
    }
    g.finish();
}

fn combine(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_combined");
    g.sample_size(10);
    for r in 1..=2 {
        let t = free_product_z2_z3(r);
        g.bench_with_input(BenchmarkId::new("free-product-z2-z3", r), &t, |b, t| {
            b.iter(|| build_combined(t, &CombineOptions::default()).expect("combines"))
        });
    }
    g.finish();
}

criterion_group!(benches, audits, distance_formula, combine);
criterion_main!(benches);
