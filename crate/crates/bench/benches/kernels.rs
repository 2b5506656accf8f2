use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ndarray::Array2;
use num_complex::Complex64;
use oirs_core::fixtures::{desk_opa, ma_bench, three_disk_targets, MA_RANGE};
use oirs_core::{
    aim_array, fading_samples, fraunhofer, optimize_grouping, power_matrices, receiver_power_density, received_power,
    FieldGrid, OpticalSetup, Receiver, SplitConfig, Window,
};

fn fourier(c: &mut Criterion) {
    let setup = OpticalSetup::new(532e-9, 0.25).unwrap();
    let field = FieldGrid::new(
        Array2::from_shape_fn((512, 512), |(i, j)| Complex64::from_polar(1.0, (i * 7 + j * 3) as f64 * 0.01)),
        1e-6,
        1e-6,
    )
    .unwrap();
    c.bench_function("fraunhofer_512", |b| b.iter(|| fraunhofer(black_box(&field), &setup)));
    let desk = desk_opa().unwrap();
    c.bench_function("desk_efficiency", |b| {
        b.iter(|| oirs_core::opa_efficiency(&desk.array, black_box(&desk.incident), &desk.setup).unwrap())
    });
}

fn mirrors(c: &mut Criterion) {
    let f = ma_bench();
    c.bench_function("aim_array_4x4", |b| b.iter(|| aim_array(&f.array, &f.beam, black_box(f.target)).unwrap()));
    let spec = three_disk_targets(MA_RANGE);
    let mats = power_matrices(&f.array, &f.beam, &spec).unwrap();
    let weights = spec.weights();
    let cfg = SplitConfig::default();
    c.bench_function("optimize_grouping_4x4_m3", |b| {
        b.iter(|| optimize_grouping(black_box(&mats), &weights, &cfg))
    });
}

fn receiver(c: &mut Criterion) {
    let f = ma_bench();
    let aim = aim_array(&f.array, &f.beam, f.target).unwrap();
    let map = receiver_power_density(&f.array, &f.beam, &aim, Window::square(0.03), 256, None).unwrap();
    let rx = Receiver::new((0.0, 0.0), 0.005).unwrap();
    c.bench_function("received_power_256", |b| b.iter(|| received_power(black_box(&map), &rx).unwrap()));
    c.bench_function("fading_10k", |b| b.iter(|| fading_samples(&map, &rx, 0.001, 10_000, black_box(1)).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = fourier, mirrors, receiver
}
criterion_main!(benches);
