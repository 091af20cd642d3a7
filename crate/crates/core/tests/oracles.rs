//! Values checked against small independent computations done here, not in the library.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use pfuchs::diffmod::{gamma_action_exact, m_lambda};
use pfuchs::expcalc::{bracket, liouville_witness, Coord};
use pfuchs::rat::{q, qf, Q};
use pfuchs::scalar::CycScalar;
use pfuchs::weier::factor_monic_times_unit;
use pfuchs::{LaurentSeries, LogRadiusBox, PadicScalar};

/// `x` in `[0, p^k)` with `b x ≡ a`, by search.
fn brute_residue(a: i64, b: i64, p: u64, k: u32) -> u64 {
    let m = p.pow(k) as i64;
    (0..m).find(|x| (b * x - a).rem_euclid(m) == 0).expect("b prime to p") as u64
}

#[test]
fn rational_residues_match_search() {
    // Frozen from the search above: 1/2, 1/4, 2/5, -1/2, 5/8 mod 27.
    let frozen = [((1, 2), 14u64), ((1, 4), 7), ((2, 5), 22), ((-1, 2), 13), ((5, 8), 4)];
    for ((a, b), want) in frozen {
        assert_eq!(brute_residue(a, b, 3, 3), want);
        let x = PadicScalar::from_rational(3, &qf(a, b), 3);
        assert_eq!(x.mantissa(), BigInt::from(want), "{a}/{b}");
    }
    for p in [2u64, 3, 5, 7] {
        for b in 1..12i64 {
            if (b as u64).is_multiple_of(p) {
                continue;
            }
            for a in -9..9i64 {
                if a.rem_euclid(p as i64) == 0 {
                    continue;
                }
                let x = PadicScalar::from_rational(p, &qf(a, b), 4);
                assert_eq!(x.valuation(), Some(0));
                assert_eq!(x.mantissa(), BigInt::from(brute_residue(a, b, p, 4)), "p={p} {a}/{b}");
            }
        }
    }
}

fn brute_bracket(a: i64, b: i64, p: u64, m: u32) -> i64 {
    let pm = p.pow(m) as i64;
    let r = brute_residue(a, b, p, m) as i64;
    r.min(pm - r)
}

#[test]
fn brackets_match_balanced_residues() {
    assert_eq!(brute_bracket(1, 2, 3, 2), 4);
    for p in [2u64, 3, 5] {
        for m in 1..=5 {
            for (a, b) in [(1, 3), (1, 2), (-2, 7), (5, 9), (3, 1), (-1, 1)] {
                if (b as u64).is_multiple_of(p) {
                    continue;
                }
                let got = bracket(&Coord::Rat(qf(a, b)), p, m).unwrap();
                assert_eq!(got, BigInt::from(brute_bracket(a, b, p, m)), "p={p} m={m} {a}/{b}");
            }
        }
    }
}

/// `max_e (e·s - v(c_e))` from the raw terms.
fn direct_gauss(f: &LaurentSeries, s: &[Q]) -> Option<Q> {
    f.terms()
        .filter_map(|(e, c)| {
            let v = c.valuation()?;
            let dot: Q = e.iter().zip(s).map(|(x, y)| q(*x) * y).sum();
            Some(dot - q(v))
        })
        .max()
}

#[test]
fn gauss_norms_match_direct_evaluation() {
    let f = LaurentSeries::from_ints(
        3,
        16,
        2,
        &[(vec![2, -1], 9), (vec![-3, 0], 2), (vec![0, 4], 27), (vec![1, 1], -5)],
    );
    let lo = [qf(-1, 2), q(-1)];
    let hi = [qf(1, 3), q(1)];
    let bx = LogRadiusBox::new(lo.to_vec(), hi.to_vec()).unwrap();
    let mut best: Option<Q> = None;
    // A grid containing the vertices; the norm is convex in log-radius, so the grid
    // maximum is the box maximum.
    for i in 0..=6 {
        for j in 0..=6 {
            let s0 = &lo[0] + (&hi[0] - &lo[0]) * qf(i, 6);
            let s1 = &lo[1] + (&hi[1] - &lo[1]) * qf(j, 6);
            let s = [s0, s1];
            let d = direct_gauss(&f, &s);
            assert_eq!(f.gauss_lognorm(&s), d);
            best = best.max(d);
        }
    }
    assert_eq!(f.sup_lognorm(&bx), best);
}

#[test]
fn geometric_inverse_matches_expansion() {
    let f = LaurentSeries::from_coeffs_1(3, 12, 0, &[1, 3]);
    let bx = LogRadiusBox::point(vec![q(0)]);
    let (inv, tail) = f.invert_unit(&bx, &vec![(0, 3)]).unwrap();
    // 1/(1+x) = 1 - x + x^2 - x^3 + ... with x = 3t.
    let want = LaurentSeries::from_coeffs_1(3, 12, 0, &[1, -3, 9, -27]);
    assert!(inv.eq_at_prec(&want), "{inv}");
    assert!(tail.unwrap() <= q(-4));
    let resid = f.mul(&inv).sub(&LaurentSeries::from_coeffs_1(3, 12, 0, &[1]));
    assert!(resid.gauss_lognorm(&[q(0)]).unwrap() <= q(-4));
}

#[test]
fn rank_one_action_is_a_root_power() {
    // E(a) for M_λ is ζ^{a λ}; with λ ≡ r mod p^k this is the root ζ^{a r}.
    for (p, lam) in [(3u64, qf(1, 2)), (2, qf(1, 3)), (5, qf(-2, 3))] {
        let m = m_lambda(p, 24, std::slice::from_ref(&lam)).unwrap();
        for k in 1..=2u32 {
            let e = gamma_action_exact(&m, k).unwrap();
            let qk = p.pow(k);
            let num = i64::try_from(lam.numer()).unwrap();
            let den = i64::try_from(lam.denom()).unwrap();
            let r = brute_residue(num, den, p, k);
            for a in 0..qk {
                let got = e.get(&[a]).get(0, 0).constant_term();
                let want = CycScalar::root_power(p, k, (a * r) % qk, 24);
                assert!(got.sub(&want).is_zero(), "p={p} k={k} a={a}");
            }
        }
    }
}

#[test]
fn liouville_witness_tower() {
    // a_1 = 1, a_{k+1} = 2^{a_k}: 1, 2, 4, 16.
    let (w, exps) = liouville_witness(2, 20);
    assert_eq!(exps, vec![1, 2, 4, 16]);
    let value: BigInt = exps.iter().map(|e| BigInt::one() << *e).sum();
    assert_eq!(w.mantissa() << w.valuation().unwrap() as usize, value);
    assert!(!value.is_zero());
}

#[test]
fn three_term_laurent_polynomial_factors() {
    let f = LaurentSeries::from_coeffs_1(3, 32, -1, &[1, 1, 1]);
    let r = factor_monic_times_unit(&f, &[q(0)]).unwrap();
    assert_eq!(r.p_poly, LaurentSeries::from_coeffs_1(3, 32, 0, &[1, 1, 1]));
    assert_eq!(r.unit, LaurentSeries::from_coeffs_1(3, 32, -1, &[1]));
    assert!(r.p_poly.mul(&r.unit).sub(&f).is_zero());
}
