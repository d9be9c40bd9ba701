use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stochhr::grid::build_grid;
use stochhr::solver::step_imex;
use stochhr::{
    ou_from_wiener, sample_wiener, Grid, GridSpec, Params, ProfileSet, Role, ScalarField,
    StateTriple, TimeGrid,
};

fn square(n: usize) -> Arc<Grid> {
    build_grid(&GridSpec::two_d(1.0, 1.0, n, n)).expect("grid")
}

fn bumpy(grid: &Arc<Grid>) -> ScalarField {
    ScalarField::from_fn(grid.clone(), |x, y| {
        (3.0 * x).sin() * (2.0 * y).cos() + 0.3 * (7.0 * x * y).cos()
    })
}

fn laplacian(c: &mut Criterion) {
    let mut group = c.benchmark_group("laplacian");
    for n in [32, 64, 128] {
        let grid = square(n);
        let f = bumpy(&grid);
        let mut out = vec![0.0; grid.len()];
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| grid.laplacian_into(black_box(f.values()), &mut out))
        });
    }
    group.finish();
}

fn helmholtz(c: &mut Criterion) {
    let mut group = c.benchmark_group("helmholtz_solve");
    for n in [32, 64, 128] {
        let grid = square(n);
        let f = bumpy(&grid);
        let mut x = vec![0.0; grid.len()];
        let mut scratch = vec![0.0; grid.len()];
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| grid.solve_helmholtz(1e-3, black_box(f.values()), &mut x, &mut scratch))
        });
    }
    group.finish();
}

fn imex(c: &mut Criterion) {
    let mut group = c.benchmark_group("imex_step");
    for n in [32, 64] {
        let grid = square(n);
        let params = Params::demo(2);
        let profiles = ProfileSet::new(&params, &grid).expect("profiles");
        let state = StateTriple::new(
            Role::Transformed,
            [bumpy(&grid), bumpy(&grid).scale(0.5), bumpy(&grid).scale(0.1)],
        )
        .expect("state");
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| step_imex(&params, &profiles, black_box(&state), [0.1, -0.2, 0.05], 1e-2))
        });
    }
    group.finish();
}

fn noise(c: &mut Criterion) {
    let grid = TimeGrid::new(-40.0, 10.0, 0.01).expect("time grid");
    c.bench_function("wiener_sample_5000_steps", |b| {
        b.iter(|| sample_wiener(black_box(7), grid))
    });
    let w = sample_wiener(7, grid);
    c.bench_function("ou_from_wiener_5000_steps", |b| {
        b.iter(|| ou_from_wiener(black_box(&w), 1.0))
    });
}

criterion_group!(benches, laplacian, helmholtz, imex, noise);
criterion_main!(benches);
