use std::hint::black_box;

use blockade_bench::{chain, small_sweep, spin1_blockade, spin32_v2};
use blockade_core::coherent::{make_spin_family, make_su3_family, Quadrature};
use blockade_core::experiments::run_sweep;
use blockade_core::liealg::lie_closure;
use blockade_core::syncmeas::{sync_max, z_matrix};
use blockade_core::{build_liouvillian, steady_state};
use criterion::{criterion_group, criterion_main, Criterion};

fn steady_states(c: &mut Criterion) {
    let spin1 = build_liouvillian(&spin1_blockade());
    let spin32 = build_liouvillian(&spin32_v2());
    c.bench_function("steady_state spin-1", |b| b.iter(|| steady_state(black_box(&spin1))));
    c.bench_function("steady_state spin-3/2", |b| b.iter(|| steady_state(black_box(&spin32))));
}

fn closures(c: &mut Criterion) {
    for dim in [4, 6] {
        let gens = chain(dim);
        c.bench_function(&format!("lie_closure chain {dim}"), |b| {
            b.iter(|| lie_closure(black_box(&gens), dim * dim - 1))
        });
    }
}

fn measures(c: &mut Criterion) {
    let su3 = make_su3_family();
    let quad = Quadrature::reference(&su3);
    c.bench_function("z_matrix su3", |b| b.iter(|| z_matrix(black_box(&su3), &quad)));

    let spin = make_spin_family(3).unwrap();
    let z = z_matrix(&spin, &Quadrature::reference(&spin));
    let rho = steady_state(&build_liouvillian(&spin1_blockade())).unwrap().rho;
    c.bench_function("sync_max spin-1", |b| b.iter(|| sync_max(&spin, &z, black_box(&rho), 12)));
}

fn sweeps(c: &mut Criterion) {
    let spec = small_sweep();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("spin-1 8x4", |b| b.iter(|| run_sweep(black_box(&spec), 0)));
    group.finish();
}

criterion_group!(benches, steady_states, closures, measures, sweeps);
criterion_main!(benches);
