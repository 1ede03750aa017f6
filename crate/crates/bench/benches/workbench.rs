use criterion::{black_box, criterion_group, criterion_main, Criterion};

use amw_bench::{load, samples_dir};
use amw_core::testgen::{derive, CoverageGoal, CoverageKind, ParamDomain};
use amw_core::testkit::{run_suite, SuiteFilter};
use amw_core::{check_wellformed, parse_source, print_model};

fn bench_parse(c: &mut Criterion) {
    let text = std::fs::read_to_string(samples_dir().join("hotel/model.amw")).expect("read");
    c.bench_function("parse_hotel", |b| {
        b.iter(|| parse_source(black_box(&text)).expect("parses"))
    });
}

fn bench_print(c: &mut Criterion) {
    let model = load("hotel");
    c.bench_function("print_hotel", |b| b.iter(|| print_model(black_box(&model))));
}

fn bench_check(c: &mut Criterion) {
    let model = load("hotel");
    c.bench_function("check_hotel", |b| {
        b.iter(|| check_wellformed(black_box(&model)))
    });
}

fn bench_suite(c: &mut Criterion) {
    let model = load("hotel");
    let filter = SuiteFilter::default();
    c.bench_function("suite_hotel", |b| {
        b.iter(|| run_suite(black_box(&model), &filter))
    });
}

fn bench_testgen(c: &mut Criterion) {
    let model = load("charts");
    let chart = model.find_chart("Meter").expect("present").clone();
    let domain = ParamDomain::default();
    c.bench_function("derive_meter_transitions", |b| {
        b.iter(|| {
            derive(
                black_box(&model),
                &chart,
                CoverageGoal::new(CoverageKind::Transition, 3),
                None,
                &domain,
            )
            .expect("derives")
        })
    });
}

criterion_group!(
    benches,
    bench_parse,
    bench_print,
    bench_check,
    bench_suite,
    bench_testgen
);
criterion_main!(benches);
