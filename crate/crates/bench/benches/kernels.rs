use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use deformed_lindblad::bessel::{bessel_k_complex_order, bessel_k_integer_family};
use deformed_lindblad::dissipator::{integrate_to, Generator};
use deformed_lindblad::wigner::wigner_closed;
use deformed_lindblad::{Complex64, GridSpec, ReservoirParams};
use deformed_lindblad_bench::{docs_state, morse15};
use std::hint::black_box;

fn liouvillian(c: &mut Criterion) {
    let params = morse15();
    let gen = Generator::morse(&params, &ReservoirParams::default()).unwrap();
    let rho = docs_state(&params);
    c.bench_function("liouvillian_apply/n15", |b| b.iter(|| gen.apply(black_box(&rho.entries))));
    c.bench_function("rk4/n15/t1", |b| b.iter(|| integrate_to(black_box(&rho), &gen, 1.0, 1e-3).unwrap()));
}

fn bessel(c: &mut Criterion) {
    let mut group = c.benchmark_group("bessel_k");
    for &x in &[0.01, 1.0, 30.0] {
        group.bench_with_input(BenchmarkId::new("single", x), &x, |b, &x| {
            b.iter(|| bessel_k_complex_order(black_box(Complex64::new(7.0, -8.0)), x).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("family15", x), &x, |b, &x| {
            b.iter(|| bessel_k_integer_family(14, black_box(-8.0), x).unwrap())
        });
    }
    group.finish();
}

fn wigner(c: &mut Criterion) {
    let params = morse15();
    let rho = docs_state(&params);
    let spec = GridSpec::default().with_points(41, 41);
    let mut group = c.benchmark_group("wigner_closed");
    group.sample_size(10);
    group.bench_function("docs/41x41", |b| b.iter(|| wigner_closed(black_box(&rho), &params, &spec).unwrap()));
    group.finish();
}

criterion_group!(benches, liouvillian, bessel, wigner);
criterion_main!(benches);
