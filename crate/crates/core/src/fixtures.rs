//! Bundled test modules.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::diffmod::{DiffModule, StandardForm};
use crate::error::Result;
use crate::expcalc::{ExponentEntry, ExponentMultiset};
use crate::laurent::{LaurentSeries, LogRadiusBox, PadicCtx};
use crate::matrix::Matrix;
use crate::rat::{q, qf, Q};
use crate::scalar::PadicScalar;

pub const FIXTURE_PREC: u32 = 32;

/// A named rank-one module `M_λ`.
#[derive(Clone, Debug)]
pub struct LambdaFixture {
    pub name: String,
    pub p: u64,
    pub lambda: Vec<Q>,
}

/// The rank-one fixtures used for exponent recovery.
pub fn lambda_fixtures() -> Vec<LambdaFixture> {
    let raw: &[(u64, &[(i64, i64)])] = &[
        (3, &[(1, 2)]),
        (3, &[(1, 4)]),
        (3, &[(2, 5)]),
        (3, &[(-1, 2)]),
        (3, &[(5, 8)]),
        (3, &[(1, 2), (1, 4)]),
        (2, &[(1, 3)]),
        (2, &[(-1, 3)]),
        (2, &[(2, 5)]),
        (5, &[(1, 2), (1, 3)]),
        (5, &[(3, 4)]),
        (5, &[(-2, 3)]),
    ];
    raw.iter()
        .map(|(p, xs)| {
            let lambda: Vec<Q> = xs.iter().map(|(a, b)| qf(*a, *b)).collect();
            let name = format!(
                "m_lambda_p{p}_{}",
                lambda
                    .iter()
                    .map(|x| x.to_string().replace('/', "over").replace('-', "minus"))
                    .collect::<Vec<_>>()
                    .join("_")
            );
            LambdaFixture { name, p: *p, lambda }
        })
        .collect()
}

impl LambdaFixture {
    pub fn module(&self) -> Result<DiffModule> {
        crate::diffmod::m_lambda(self.p, FIXTURE_PREC, &self.lambda)
    }
}

fn ser(p: u64, n: usize, terms: &[(Vec<i64>, i64)]) -> LaurentSeries {
    LaurentSeries::from_ints(p, FIXTURE_PREC, n, terms)
}

fn origin(n: usize) -> LogRadiusBox {
    LogRadiusBox::point(vec![q(0); n])
}

/// `U = [[1, t], [0, 1]]` over `Q_p`.
pub fn shear_twist(p: u64) -> Matrix<LaurentSeries> {
    Matrix::from_rows(vec![
        vec![ser(p, 1, &[(vec![0], 1)]), ser(p, 1, &[(vec![1], 1)])],
        vec![ser(p, 1, &[]), ser(p, 1, &[(vec![0], 1)])],
    ])
    .expect("square")
}

/// `Λ = diag(0, 1/2)` at `p = 3`, twisted by `[[1, t], [0, 1]]`.
pub fn twisted_rank2() -> DiffModule {
    let sf = StandardForm::diagonal(3, FIXTURE_PREC, &[vec![q(0)], vec![qf(1, 2)]]).expect("valid");
    let m = DiffModule::from_standard_form(sf).expect("valid");
    m.apply_twist(&shear_twist(3), &origin(1)).expect("unit twist")
}

/// `Λ = 0`, `S = [[0, 1], [0, 0]]` at `p = 3`, twisted by `[[1, t], [0, 1]]` when `twisted`.
pub fn unipotent(twisted: bool) -> DiffModule {
    let a = ExponentMultiset::from_rationals(3, &[vec![q(0)], vec![q(0)]]).expect("valid");
    let z = PadicScalar::zero(3);
    let o = PadicScalar::one(3, FIXTURE_PREC);
    let s = Matrix::from_rows(vec![vec![z.clone(), o], vec![z.clone(), z]]).expect("square");
    let m = DiffModule::from_standard_form(StandardForm::new(a, vec![s], FIXTURE_PREC).expect("valid")).expect("valid");
    if twisted {
        m.apply_twist(&shear_twist(3), &origin(1)).expect("unit twist")
    } else {
        m
    }
}

/// `Λ = 0` rank two at `p = 3` (no nilpotent part) twisted by `[[1, t], [0, 1]]`.
pub fn twisted_trivial() -> DiffModule {
    let sf = StandardForm::diagonal(3, FIXTURE_PREC, &[vec![q(0)], vec![q(0)]]).expect("valid");
    DiffModule::from_standard_form(sf)
        .expect("valid")
        .apply_twist(&shear_twist(3), &origin(1))
        .expect("unit twist")
}

/// `(M_0 ⊕ M_{1/2}) ⊗ (M_0 ⊕ M_{1/3})` at `p = 5`, twisted by a unitriangular matrix.
pub fn rank4_tensor() -> DiffModule {
    let p = 5;
    let a = DiffModule::from_standard_form(StandardForm::diagonal(p, FIXTURE_PREC, &[vec![q(0)], vec![qf(1, 2)]]).expect("valid"))
        .expect("valid");
    let b = DiffModule::from_standard_form(StandardForm::diagonal(p, FIXTURE_PREC, &[vec![q(0)], vec![qf(1, 3)]]).expect("valid"))
        .expect("valid");
    let m = a.tensor(&b).expect("same ring");
    let one = |e: i64| ser(p, 1, &[(vec![e], 1)]);
    let zero = ser(p, 1, &[]);
    let u = Matrix::from_rows(vec![
        vec![one(0), one(1), zero.clone(), ser(p, 1, &[(vec![2], 5)])],
        vec![zero.clone(), one(0), ser(p, 1, &[(vec![-1], 2)]), zero.clone()],
        vec![zero.clone(), zero.clone(), one(0), one(1)],
        vec![zero.clone(), zero.clone(), zero.clone(), one(0)],
    ])
    .expect("square");
    m.apply_twist(&u, &origin(1)).expect("unit twist")
}

/// A certified module with its planted standard form, drawn from a seeded generator.
#[derive(Clone, Debug)]
pub struct RandomFixture {
    pub seed: u64,
    pub module: DiffModule,
}

fn small_rational<R: Rng>(rng: &mut R, p: u64) -> Q {
    loop {
        let d: i64 = rng.gen_range(1..=6);
        if (d as u64).is_multiple_of(p) {
            continue;
        }
        let n: i64 = rng.gen_range(-5..=5);
        return qf(n, d);
    }
}

/// Random certified module: `p ∈ {2,3,5}`, one or two variables (two only for
/// `p <= 3`), rank one to three, rational exponents, an optional nilpotent block
/// between equal exponents, and a twist `diag(t^d) · (unitriangular)`.
pub fn random_certified(seed: u64) -> RandomFixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = [2u64, 3, 5][rng.gen_range(0..3)];
    let n = if p <= 3 && rng.gen_bool(0.3) { 2 } else { 1 };
    let m = rng.gen_range(1..=3usize);
    let mut lambda: Vec<Vec<Q>> = (0..m).map(|_| (0..n).map(|_| small_rational(&mut rng, p)).collect()).collect();
    let nilpotent_pair = m >= 2 && rng.gen_bool(0.4);
    if nilpotent_pair {
        lambda[1] = lambda[0].clone();
    }
    let entries: Vec<ExponentEntry> = lambda.iter().map(|l| ExponentEntry::rational(l)).collect();
    let a = ExponentMultiset::new(p, entries).expect("valid");
    let z = PadicScalar::zero(p);
    let mut nil = vec![Matrix::zeros(m, m, &z); n];
    if nilpotent_pair {
        nil[0].set(0, 1, PadicScalar::from_i64(p, rng.gen_range(1..=4), FIXTURE_PREC));
    }
    let sf = StandardForm::new(a, nil, FIXTURE_PREC).expect("valid");
    let module = DiffModule::from_standard_form(sf).expect("valid");
    let ctx = PadicCtx { p, prec: FIXTURE_PREC };
    let mut u = Matrix::identity(m, &LaurentSeries::one(n, &ctx));
    for i in 0..m {
        for j in i + 1..m {
            if rng.gen_bool(0.7) {
                let e: Vec<i64> = (0..n).map(|_| rng.gen_range(-2..=2)).collect();
                let c: i64 = rng.gen_range(1..=(p as i64 * 2));
                u.set(i, j, ser(p, n, &[(e, c)]));
            }
        }
    }
    let d = Matrix::diag(
        (0..m)
            .map(|_| {
                let e: Vec<i64> = (0..n).map(|_| rng.gen_range(-1..=1)).collect();
                ser(p, n, &[(e, 1)])
            })
            .collect(),
    );
    let u = d.mul(&u);
    let module = module.apply_twist(&u, &origin(n)).expect("monomial determinant");
    RandomFixture { seed, module }
}

pub fn random_certified_set(count: usize, base_seed: u64) -> Vec<RandomFixture> {
    (0..count as u64).map(|i| random_certified(base_seed + i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_certified() {
        twisted_rank2().check_certificate().unwrap();
        unipotent(true).check_certificate().unwrap();
        rank4_tensor().check_certificate().unwrap();
        for f in random_certified_set(20, 1000) {
            assert!(f.module.is_certified());
            f.module.check_certificate().unwrap();
        }
        assert!(lambda_fixtures().len() >= 10);
    }
}
