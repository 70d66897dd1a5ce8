//! Sequential vs. rayon execution of the sampled checkers.
//!
//! Without the `parallel` feature both arms run sequentially, which makes
//! the fallback's overhead visible too.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gfix_core::{
    check_axioms, check_condition, check_convexity, make_affine_contraction, make_perimeter_space, ContractionSpec,
    Execution, Point, SamplePlan, DEFAULT_TOL,
};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn axioms(c: &mut Criterion) {
    let mut group = c.benchmark_group("check_axioms");
    group.sample_size(10);
    for dim in [1, 3] {
        let cs = make_perimeter_space(dim).unwrap();
        for (label, exec) in MODES {
            let plan = SamplePlan::new(7, 10_000, dim).with_execution(exec);
            group.bench_with_input(BenchmarkId::new(label, dim), &plan, |b, plan| {
                b.iter(|| check_axioms(&cs, plan, DEFAULT_TOL).unwrap())
            });
        }
    }
    group.finish();
}

fn convexity(c: &mut Criterion) {
    let mut group = c.benchmark_group("check_convexity");
    group.sample_size(10);
    let cs = make_perimeter_space(2).unwrap();
    for (label, exec) in MODES {
        let plan = SamplePlan::new(3, 10_000, 2).with_execution(exec);
        group.bench_function(label, |b| b.iter(|| check_convexity(&cs, &plan, DEFAULT_TOL).unwrap()));
    }
    group.finish();
}

fn condition(c: &mut Criterion) {
    let mut group = c.benchmark_group("check_condition");
    group.sample_size(10);
    let cs = make_perimeter_space(4).unwrap();
    let t = make_affine_contraction(Point::zeros(4), 0.5).unwrap();
    let spec = ContractionSpec::Sum { a: 0.5, b: 0.1 };
    for (label, exec) in MODES {
        let plan = SamplePlan::new(11, 20_000, 4).with_execution(exec);
        group.bench_function(label, |b| b.iter(|| check_condition(&spec, &cs, &t, &plan, DEFAULT_TOL).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, axioms, convexity, condition);
criterion_main!(benches);
