use criterion::{criterion_group, criterion_main, Criterion};
use crystalfp::compare::bottleneck_distance;
use crystalfp::fingerprint::{fingerprint, FingerprintConfig};
use crystalfp::geometry::{Lattice, PeriodicSet};
use crystalfp::zones::build_zones;
use std::hint::black_box;

fn cubic_lattice() -> PeriodicSet {
    let lat = Lattice::new(
        3,
        &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    )
    .unwrap();
    PeriodicSet::new(lat, vec![[0.0; 3]], None).unwrap()
}

fn oblique_pair() -> (PeriodicSet, PeriodicSet) {
    let lat = Lattice::new(2, &[[1.1, 0.0, 0.0], [0.3, 0.95, 0.0]]).unwrap();
    let a = PeriodicSet::new(
        lat.clone(),
        vec![[0.0; 3], [0.31, 0.57, 0.0], [0.72, 0.14, 0.0]],
        None,
    )
    .unwrap();
    let b = PeriodicSet::new(
        lat,
        vec![[0.05, 0.02, 0.0], [0.33, 0.55, 0.0], [0.70, 0.18, 0.0]],
        None,
    )
    .unwrap();
    (a, b)
}

fn bench_zones(c: &mut Criterion) {
    let set = cubic_lattice();
    c.bench_function("zones_cubic_k4", |b| {
        b.iter(|| build_zones(black_box(&set), 0, 4).unwrap())
    });
}

fn bench_fingerprint(c: &mut Criterion) {
    let (a, _) = oblique_pair();
    let cfg = FingerprintConfig::new(4, 32);
    c.bench_function("fingerprint_2d_k4", |b| {
        b.iter(|| fingerprint(black_box(&a), &cfg).unwrap())
    });
}

fn bench_bottleneck(c: &mut Criterion) {
    let (a, b) = oblique_pair();
    c.bench_function("bottleneck_3point", |bv| {
        bv.iter(|| bottleneck_distance(black_box(&a), black_box(&b)).unwrap())
    });
}

criterion_group!(benches, bench_zones, bench_fingerprint, bench_bottleneck);
criterion_main!(benches);
