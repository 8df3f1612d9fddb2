use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use qm2arl_bench::fixture;
use qm2arl_core::qcore::rotation_gate;
use qm2arl_core::train::MetaObjective;
use qm2arl_core::{pole_grid_probe, Axis, QnnConfig, Statevector};

fn statevector(c: &mut Criterion) {
    let gate = rotation_gate(Axis::Y, 0.3).unwrap();
    let mut group = c.benchmark_group("statevector");
    for n in [3usize, 6, 10] {
        group.bench_with_input(BenchmarkId::new("ry_and_cnot_layer", n), &n, |b, &n| {
            let mut s = Statevector::zero(n).unwrap();
            b.iter(|| {
                for q in 1..=n {
                    s.apply_1q(&gate, q).unwrap();
                }
                for q in 1..n {
                    s.apply_cnot(q, q + 1).unwrap();
                }
                black_box(s.norm_sqr())
            })
        });
    }
    group.finish();
}

fn qnn(c: &mut Criterion) {
    let f = fixture(QnnConfig::two_step(), 0);
    let mut group = c.benchmark_group("qnn_two_step");
    group.bench_function("q_values_all", |b| {
        b.iter(|| {
            f.qnn
                .q_values_all(black_box(&f.obs), &f.phi, &f.theta)
                .unwrap()
        })
    });
    group.bench_function("grad_angle_shift", |b| {
        b.iter(|| {
            f.qnn
                .grad_angle_shift(black_box(&f.obs), 1, &f.phi, &f.theta)
                .unwrap()
        })
    });
    group.bench_function("grad_pole_shift", |b| {
        b.iter(|| {
            f.qnn
                .grad_pole_shift(black_box(&f.obs), 1, &f.phi, &f.theta)
                .unwrap()
        })
    });
    let obj = MetaObjective::new(&f.qnn, &f.samples).unwrap();
    group.bench_function("meta_loss_and_grad", |b| {
        b.iter(|| {
            obj.loss_and_grad(black_box(&f.phi), &f.phi, &f.theta)
                .unwrap()
        })
    });
    group.bench_function("pole_grid_probe", |b| {
        b.iter(|| {
            pole_grid_probe(&f.qnn, &f.phi, &f.theta, black_box(&f.obs), [2, 4], "s").unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, statevector, qnn);
criterion_main!(benches);
