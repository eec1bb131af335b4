use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lydim_core::benchmarks;
use lydim_core::cocycle::{word_bounds, word_cocycle};
use lydim_core::expr::{range_bound, Expression};
use lydim_core::Interval;

fn expressions(c: &mut Criterion) {
    let e = Expression::parse("0.5*x + 0.02*sin(2*pi*x) + 0.03*x*(1-x)*exp(-y)").unwrap();
    c.bench_function("expr/value", |b| b.iter(|| e.value(black_box(0.3), black_box(0.7))));
    c.bench_function("expr/partials", |b| b.iter(|| e.eval_with_partials(black_box(0.3), black_box(0.7))));
    let unit = Interval::new(0.0, 1.0);
    c.bench_function("expr/range_bound_depth6", |b| b.iter(|| range_bound(&e, black_box(unit), unit, 6)));
}

fn cocycles(c: &mut Criterion) {
    let sys = benchmarks::system("nonlin1").unwrap();
    let w: Vec<usize> = (0..12).map(|k| (k * 7 + 3) % 4).collect();
    c.bench_function("cocycle/word12", |b| b.iter(|| word_cocycle(&sys, black_box(&w), [0.3, 0.6])));
    c.bench_function("cocycle/word12_singular_values", |b| {
        b.iter(|| word_cocycle(&sys, black_box(&w), [0.3, 0.6]).singular_values())
    });
    c.bench_function("cocycle/word12_bounds", |b| b.iter(|| word_bounds(&sys, black_box(&w))));
}

criterion_group!(benches, expressions, cocycles);
criterion_main!(benches);
