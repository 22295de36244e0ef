use criterion::{black_box, criterion_group, criterion_main, Criterion};
use cycle_density::asymptotics::{kappa_explicit_bound_best, nu_saddle};
use cycle_density::special::{xi, zeta0_r};
use cycle_density::{SpecialFunction, SpecialGrid, SpecialGrids};

fn grids(c: &mut Criterion) {
    let mut g = c.benchmark_group("grid_build");
    g.sample_size(10);
    g.bench_function("dickman_100", |b| {
        b.iter(|| SpecialGrid::build(SpecialFunction::Dickman, 100, 1024).unwrap())
    });
    g.bench_function("buchstab_40", |b| {
        b.iter(|| SpecialGrid::build(SpecialFunction::Buchstab, 40, 1024).unwrap())
    });
    g.finish();
}

fn pointwise(c: &mut Criterion) {
    let shared = SpecialGrids::shared();
    c.bench_function("rho_lookup", |b| {
        b.iter(|| shared.rho(black_box(7.3)).unwrap())
    });
    c.bench_function("omega_lookup", |b| {
        b.iter(|| shared.omega(black_box(7.3)).unwrap())
    });
    c.bench_function("xi", |b| b.iter(|| xi(black_box(55.0)).unwrap()));
    c.bench_function("zeta0", |b| b.iter(|| zeta0_r(black_box(55.0)).unwrap()));
    c.bench_function("nu_saddle_1e6_1e3", |b| {
        b.iter(|| nu_saddle(black_box(1_000_000), 1_000).unwrap())
    });
    c.bench_function("kappa_explicit_bound_best", |b| {
        b.iter(|| kappa_explicit_bound_best(black_box(10_000), 100).unwrap())
    });
}

criterion_group!(benches, grids, pointwise);
criterion_main!(benches);
