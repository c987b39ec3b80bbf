use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ym_core::estimates::{check_gamma1_symbol, delta_integral_ellipse, SampleConfig};
use ym_core::evolve::{evolve_and_monitor, EvolveConfig};
use ym_core::ym::{assemble_rhs, constraint_residuals};
use ym_core::{Field, Symbol};

fn spectral(c: &mut Criterion) {
    let mut g = c.benchmark_group("spectral");
    for n in [32, 64, 128] {
        let s = ym_bench::state(n);
        let u = s.a[0].value.clone();
        let v = s.a[1].value.clone();
        let sym = Symbol::dpow(2.0);
        g.bench_with_input(BenchmarkId::new("multiplier", n), &n, |b, _| b.iter(|| u.apply(&sym)));
        g.bench_with_input(BenchmarkId::new("bracket", n), &n, |b, _| b.iter(|| u.bracket(&v).unwrap()));
    }
    g.finish();
}

fn yang_mills(c: &mut Criterion) {
    let mut g = c.benchmark_group("ym");
    g.sample_size(10);
    for n in [32, 64] {
        let s = ym_bench::state(n);
        g.bench_with_input(BenchmarkId::new("rhs", n), &n, |b, _| b.iter(|| assemble_rhs(&s).unwrap()));
        g.bench_with_input(BenchmarkId::new("constraints", n), &n, |b, _| b.iter(|| constraint_residuals(&s).unwrap()));
        let cfg = EvolveConfig { dt: 1e-3, t_end: 1e-2, twin: false, ..Default::default() };
        g.bench_with_input(BenchmarkId::new("rk4_ten_steps", n), &n, |b, _| {
            b.iter(|| evolve_and_monitor(&s, &cfg, &mut |_, _, _| Ok(())).unwrap())
        });
    }
    g.finish();
}

fn estimates(c: &mut Criterion) {
    let mut g = c.benchmark_group("estimates");
    g.sample_size(10);
    let cfg = SampleConfig { count: 100_000, ..Default::default() };
    g.bench_function("gamma1_1e5", |b| b.iter(|| check_gamma1_symbol(&cfg).unwrap()));
    g.bench_function("ellipse_near_cone", |b| {
        b.iter(|| delta_integral_ellipse(10.0, [9.99, 0.0], (0.55, 0.55)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, spectral, yang_mills, estimates);
criterion_main!(benches);
