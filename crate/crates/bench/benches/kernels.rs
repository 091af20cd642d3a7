use criterion::{black_box, criterion_group, criterion_main, Criterion};

use pfuchs::diffmod::{gamma_action_exact, ActionTower};
use pfuchs::fixtures::{lambda_fixtures, rank4_tensor, twisted_rank2};
use pfuchs::fuchs::{compute_s, decompose, descend_exponent, FuchsConfig};
use pfuchs::rat::{q, qf};
use pfuchs::scalar::{CycScalar, PadicScalar};
use pfuchs::weier::factor_monic_times_unit;
use pfuchs::{ExponentMultiset, LaurentSeries};

fn scalars(c: &mut Criterion) {
    let x = PadicScalar::from_rational(5, &qf(-7, 3), 64);
    let y = PadicScalar::from_rational(5, &qf(11, 2), 64);
    c.bench_function("padic_mul_64", |b| b.iter(|| black_box(&x).mul(black_box(&y))));
    c.bench_function("padic_inv_64", |b| b.iter(|| black_box(&x).inv()));
    let z = CycScalar::root_power(3, 3, 5, 32);
    let w = CycScalar::root_power(3, 3, 7, 32).add(&z);
    c.bench_function("cyc_mul_level3", |b| b.iter(|| black_box(&z).mul(black_box(&w))));
}

fn series(c: &mut Criterion) {
    let f = LaurentSeries::from_coeffs_1(3, 32, -8, &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17]);
    c.bench_function("laurent_mul_17x17", |b| b.iter(|| black_box(&f).mul(black_box(&f))));
    let g = LaurentSeries::from_coeffs_1(3, 32, -1, &[1, 1, 1]);
    c.bench_function("weierstrass_tinv_1_t", |b| b.iter(|| factor_monic_times_unit(black_box(&g), &[q(0)])));
}

fn actions(c: &mut Criterion) {
    let m = twisted_rank2();
    c.bench_function("gamma_exact_rank2_k2", |b| b.iter(|| gamma_action_exact(black_box(&m), 2)));
    let e = gamma_action_exact(&m, 2).expect("certified");
    let a = ExponentMultiset::from_rationals(3, &[vec![q(0)], vec![qf(1, 2)]]).expect("valid");
    c.bench_function("compute_s_rank2_k2", |b| b.iter(|| compute_s(black_box(&e), &a)));
}

fn engine(c: &mut Criterion) {
    let mut g = c.benchmark_group("engine");
    g.sample_size(10);
    for f in lambda_fixtures().into_iter().filter(|f| f.lambda.len() == 2) {
        let m = f.module().expect("fixture");
        let tower = ActionTower::exact(&m, 3).expect("certified");
        g.bench_function(format!("descend_{}", f.name), |b| b.iter(|| descend_exponent(black_box(&tower.levels), 3)));
    }
    let m4 = rank4_tensor();
    let cfg = FuchsConfig::default();
    g.bench_function("decompose_rank4", |b| b.iter(|| decompose(black_box(&m4), None, None, &cfg)));
    g.finish();
}

criterion_group!(kernels, scalars, series, actions, engine);
criterion_main!(kernels);
