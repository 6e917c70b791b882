//! Microbenchmarks of the hot numerical kernels: periodized-kernel assembly,
//! Perron power iteration, block-tridiagonal determinants, the Jacobi
//! monodromy pass, and one Lax-Oleinik sweep.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mather_core::hessian::{assemble_hessian, block_determinant, monodromy_map};
use mather_core::model::{iterate_twist, DiscreteLagrangian, TrigPotential};
use mather_core::transfer::{build_mechanical_kernel, principal_eigenpair};
use mather_core::weakkam::CostMatrix;
use mather_core::TorusGrid;

fn test_lagrangian() -> DiscreteLagrangian {
    DiscreteLagrangian::new(TrigPotential::cosine_series(&[0.05, 0.02]), vec![0.1])
}

fn bench_kernel_assembly(c: &mut Criterion) {
    let lag = test_lagrangian();
    let mut group = c.benchmark_group("kernel_assembly");
    for &m in &[64usize, 128, 256] {
        let grid = TorusGrid::new(1, m).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, _| {
            b.iter(|| build_mechanical_kernel(&lag, grid, 50.0, None).unwrap())
        });
    }
    group.finish();
}

fn bench_power_iteration(c: &mut Criterion) {
    let lag = test_lagrangian();
    let grid = TorusGrid::new(1, 128).unwrap();
    let kernel = build_mechanical_kernel(&lag, grid, 50.0, None).unwrap();
    c.bench_function("principal_eigenpair_m128", |b| {
        b.iter(|| principal_eigenpair(&kernel).unwrap())
    });
}

fn bench_determinants(c: &mut Criterion) {
    let lag = test_lagrangian();
    let orbit = iterate_twist(&lag, &[0.11], &[0.17], 1024).unwrap();
    let hess = assemble_hessian(&lag, &orbit).unwrap();
    c.bench_function("block_determinant_n1024", |b| {
        b.iter(|| block_determinant(&hess))
    });
    c.bench_function("monodromy_map_n1024", |b| {
        b.iter(|| monodromy_map(&lag, &orbit).unwrap())
    });
}

fn bench_lax_sweep(c: &mut Criterion) {
    let lag = test_lagrangian();
    let grid = TorusGrid::new(1, 128).unwrap();
    let cost = CostMatrix::build(&lag, grid, 3).unwrap();
    let u = vec![0.0f64; 128];
    c.bench_function("lax_backward_m128", |b| b.iter(|| cost.lax_backward(&u)));
}

criterion_group!(
    benches,
    bench_kernel_assembly,
    bench_power_iteration,
    bench_determinants,
    bench_lax_sweep
);
criterion_main!(benches);
