//! Sign enumeration, SDP restarts and kernel assembly on a one-thread pool
//! versus the default pool. Build with `--no-default-features` to time the
//! sequential fallback instead.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gkit_core::kernels::{make_grid, Builtin, Rule};
use gkit_core::sdp::{sdp_value, SdpParams};
use gkit_core::spaces::{bilinear_norm, BilinearForm};
use gkit_core::{rng, NormOptions};
use nalgebra::DMatrix;

type Work = Box<dyn Fn() + Send + Sync>;

fn workloads() -> Vec<(&'static str, Work)> {
    let signs = BilinearForm::linf(DMatrix::from_row_slice(
        40,
        18,
        &rng::signs(1, "bench", 0, 40 * 18),
    ))
    .unwrap();
    let dense = BilinearForm::linf(DMatrix::from_row_slice(
        30,
        30,
        &rng::gaussians(1, "bench", 1, 900),
    ))
    .unwrap();
    let grid = make_grid(600, 0.0, 1.0, Rule::GaussLegendre).unwrap();
    vec![
        (
            "sign_enumeration_40x18",
            Box::new(move || {
                bilinear_norm(&signs, &NormOptions::default()).unwrap();
            }),
        ),
        (
            "sdp_8_restarts_30x30",
            Box::new(move || {
                sdp_value(&dense, &SdpParams::for_shape(30, 30).with_restarts(8)).unwrap();
            }),
        ),
        (
            "kernel_assembly_600",
            Box::new(move || {
                Builtin::Gauss(0.2).discretize(&grid, &grid).unwrap();
            }),
        ),
    ]
}

#[cfg(feature = "parallel")]
fn bench(c: &mut Criterion) {
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    eprintln!("default pool: {} threads", all.current_num_threads());
    let mut g = c.benchmark_group("parallel_vs_sequential");
    g.sample_size(10);
    for (name, work) in workloads() {
        g.bench_function(BenchmarkId::new("pool=1", name), |b| {
            b.iter(|| single.install(&work))
        });
        g.bench_function(BenchmarkId::new("pool=default", name), |b| {
            b.iter(|| all.install(&work))
        });
    }
    g.finish();
}

#[cfg(not(feature = "parallel"))]
fn bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("parallel_vs_sequential");
    g.sample_size(10);
    for (name, work) in workloads() {
        g.bench_function(BenchmarkId::new("sequential", name), |b| b.iter(&work));
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
