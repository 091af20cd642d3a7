use num_bigint::BigInt;
use proptest::prelude::*;
use rand::SeedableRng;

use pfuchs::diffmod::{integrability_defect, ActionTower};
use pfuchs::expcalc::{bracket_int, strict_equiv, weak_equiv, StrictEquiv};
use pfuchs::fixtures::random_certified;
use pfuchs::fuchs::telescoping_check;
use pfuchs::json::{FixtureFile, Header, Payload};
use pfuchs::rat::{lognorm_add, q, qf, Q};
use pfuchs::weier::{factor_monic_times_unit, planted_product};
use pfuchs::{ExponentMultiset, LaurentSeries, LogRadiusBox, PadicScalar};

const PREC: u32 = 20;

fn prime() -> impl Strategy<Value = u64> {
    prop_oneof![Just(2u64), Just(3), Just(5), Just(7)]
}

fn rational() -> impl Strategy<Value = (i64, i64)> {
    (-200i64..200, 1i64..40)
}

fn unit_rational(p: u64, (a, b): (i64, i64)) -> Option<Q> {
    (b % p as i64 != 0).then(|| qf(a, b))
}

type Terms = Vec<(Vec<i64>, i64)>;

fn terms(n: usize) -> impl Strategy<Value = Terms> {
    prop::collection::vec((prop::collection::vec(-5i64..=5, n), (-80i64..80).prop_filter("nonzero", |c| *c != 0)), 1..6)
}

fn series(p: u64, n: usize, t: &Terms) -> LaurentSeries {
    let mut out = LaurentSeries::zero(n, &LaurentSeries::padic_ctx(p, PREC));
    for (e, c) in t {
        out = out.add(&LaurentSeries::from_ints(p, PREC, n, &[(e.clone(), *c)]));
    }
    out
}

fn point(n: usize) -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((-6i64..=6, 1i64..=4), n)
}

fn to_q(v: &[(i64, i64)]) -> Vec<Q> {
    v.iter().map(|(a, b)| qf(*a, *b)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_ring_laws(p in prime(), x in rational(), y in rational(), z in rational()) {
        let (Some(x), Some(y), Some(z)) = (unit_rational(p, x), unit_rational(p, y), unit_rational(p, z)) else {
            return Ok(());
        };
        let (a, b, c) = (
            PadicScalar::from_rational(p, &x, PREC),
            PadicScalar::from_rational(p, &y, PREC),
            PadicScalar::from_rational(p, &z, PREC),
        );
        prop_assert!(a.add(&b).eq_at_prec(&b.add(&a)));
        prop_assert!(a.mul(&b).eq_at_prec(&b.mul(&a)));
        prop_assert!(a.mul(&b).mul(&c).eq_at_prec(&a.mul(&b.mul(&c))));
        prop_assert!(a.mul(&b.add(&c)).eq_at_prec(&a.mul(&b).add(&a.mul(&c))));
        prop_assert!(a.mul(&b).eq_at_prec(&PadicScalar::from_rational(p, &(&x * &y), PREC)));
        prop_assert!(a.add(&b).sub(&b).eq_at_prec(&a));
        if let Ok(inv) = a.inv() {
            prop_assert!(a.mul(&inv).eq_at_prec(&PadicScalar::one(p, PREC)));
        }
    }

    #[test]
    fn gauss_norm_and_width_are_multiplicative(
        p in prime(),
        (n, t1, t2, pt) in (1usize..=2).prop_flat_map(|n| (Just(n), terms(n), terms(n), point(n))),
    ) {
        let (f, g, s) = (series(p, n, &t1), series(p, n, &t2), to_q(&pt));
        if f.is_zero() || g.is_zero() {
            return Ok(());
        }
        let fg = f.mul(&g);
        prop_assert_eq!(fg.gauss_lognorm(&s), lognorm_add(&f.gauss_lognorm(&s), &g.gauss_lognorm(&s)));
        let (wf, wg, wfg) = (f.width_vector(&s).unwrap(), g.width_vector(&s).unwrap(), fg.width_vector(&s).unwrap());
        let sum: Vec<i64> = wf.iter().zip(&wg).map(|(a, b)| a + b).collect();
        prop_assert_eq!(wfg, sum);
    }

    #[test]
    fn theta_derivation_is_a_derivation(p in prime(), t1 in terms(2), t2 in terms(2), i in 0usize..2) {
        let (f, g) = (series(p, 2, &t1), series(p, 2, &t2));
        let lhs = f.mul(&g).theta_deriv(i);
        let rhs = f.theta_deriv(i).mul(&g).add(&f.mul(&g.theta_deriv(i)));
        prop_assert!(lhs.sub(&rhs).is_zero());
    }

    #[test]
    fn sup_norm_is_attained_at_a_vertex(p in prime(), t in terms(2), lo in point(2), w in prop::collection::vec(0i64..=6, 2)) {
        let f = series(p, 2, &t);
        let lo = to_q(&lo);
        let hi: Vec<Q> = lo.iter().zip(&w).map(|(a, d)| a + qf(*d, 2)).collect();
        let bx = LogRadiusBox::new(lo.clone(), hi.clone()).unwrap();
        let mid: Vec<Q> = lo.iter().zip(&hi).map(|(a, b)| (a + b) / q(2)).collect();
        let sup = f.sup_lognorm(&bx);
        prop_assert!(f.gauss_lognorm(&mid) <= sup);
        let best = bx.vertices().iter().map(|v| f.gauss_lognorm(v)).max().unwrap();
        prop_assert_eq!(best, sup);
    }

    #[test]
    fn bracket_laws_at_large_horizon(p in prime(), x in any::<i64>(), y in any::<i64>(), m in 1u32..=12) {
        let (x, y) = (BigInt::from(x), BigInt::from(y));
        let bx = bracket_int(&x, p, m);
        prop_assert_eq!(&bx, &bracket_int(&-&x, p, m));
        prop_assert!(bracket_int(&(&x + &y), p, m) <= &bx + bracket_int(&y, p, m));
        prop_assert!(bracket_int(&(&x * p), p, m) <= &bx * p);
        prop_assert!(bx * 2u32 <= pfuchs::scalar::ppow(p, m));
    }

    #[test]
    fn equivalences_are_reflexive_and_symmetric(
        p in prime(),
        xs in prop::collection::vec(rational(), 1..5),
        shifts in prop::collection::vec(-3i64..=3, 5),
    ) {
        let rows: Vec<Vec<Q>> = xs.iter().filter_map(|x| unit_rational(p, *x)).map(|x| vec![x]).collect();
        if rows.is_empty() {
            return Ok(());
        }
        let shifted: Vec<Vec<Q>> = rows.iter().zip(&shifts).map(|(r, s)| vec![&r[0] + q(*s)]).rev().collect();
        let a = ExponentMultiset::from_rationals(p, &rows).unwrap();
        let b = ExponentMultiset::from_rationals(p, &shifted).unwrap();
        let c_max = q(100);
        prop_assert_eq!(weak_equiv(&a, &a, 5, &c_max).unwrap().certified().cloned(), Some(q(0)));
        let ab = weak_equiv(&a, &b, 5, &c_max).unwrap();
        let ba = weak_equiv(&b, &a, 5, &c_max).unwrap();
        prop_assert_eq!(ab.certified(), ba.certified());
        let max_shift = shifts.iter().take(rows.len()).map(|s| s.abs()).max().unwrap_or(0);
        prop_assert!(ab.certified().is_some_and(|c| *c <= q(max_shift)));
        prop_assert!(matches!(strict_equiv(&a, &b).unwrap(), StrictEquiv::Equivalent(_)));
        prop_assert!(matches!(strict_equiv(&b, &a).unwrap(), StrictEquiv::Equivalent(_)));
    }

    #[test]
    fn series_json_round_trip(p in prime(), (n, t) in (1usize..=2).prop_flat_map(|n| (Just(n), terms(n)))) {
        let f = series(p, n, &t);
        let file = FixtureFile::new(Header { p, prec: PREC, nvars: n }, Payload::Series(f));
        let text = file.emit();
        let back = FixtureFile::parse(&text).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.emit(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn planted_products_refactor(seed in any::<u64>(), p in prop_oneof![Just(2u64), Just(3), Just(5)], s in -1i64..=1, deg in 0usize..=3) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (f, pp, _) = planted_product(&mut rng, p, 32, s, deg);
        let sq = [q(s)];
        let r = factor_monic_times_unit(&f, &sq).unwrap();
        prop_assert_eq!(r.upper - r.lower, deg as i64);
        prop_assert!(r.relative_residual(&f, &sq).is_none_or(|v| v <= q(-30)));
        let diff = r.p_poly.sub(&pp).gauss_lognorm(&sq);
        let tol = pp.gauss_lognorm(&sq).map(|v| v - q(28));
        prop_assert!(diff.is_none() || diff <= tol);
    }

    #[test]
    fn certified_modules_are_integrable_and_telescope(seed in 0u64..5000) {
        let m = random_certified(seed).module;
        m.check_certificate().unwrap();
        prop_assert!(integrability_defect(&m.theta, &m.domain).is_none());
        let tower = ActionTower::exact(&m, 2).unwrap();
        let a = &m.standard_form().unwrap().lambda;
        let r = telescoping_check(tower.level(1).unwrap(), tower.level(2).unwrap(), a).unwrap();
        prop_assert!(r.is_none());
    }
}
