//! Exact rationals and log-norm values.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

/// A base-p logarithm of a norm. `None` stands for the norm of zero (minus infinity),
/// which conveniently sorts below every finite value.
pub type LogNorm = Option<Q>;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `a`, `-a` or `a/b`.
pub fn parse_q(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Malformed(format!("bad rational '{s}'"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: BigInt = a.trim().parse().map_err(|_| bad())?;
            let b: BigInt = b.trim().parse().map_err(|_| bad())?;
            if b.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(a, b))
        }
        None => Ok(Q::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn fmt_lognorm(x: &LogNorm) -> String {
    match x {
        None => "-inf".to_string(),
        Some(v) => fmt_q(v),
    }
}

pub fn lognorm_add(a: &LogNorm, b: &LogNorm) -> LogNorm {
    match (a, b) {
        (Some(x), Some(y)) => Some(x + y),
        _ => None,
    }
}

/// p-adic valuation of a nonzero integer, together with the p-free part.
pub fn split_p(x: &BigInt, p: u64) -> (u32, BigInt) {
    debug_assert!(!x.is_zero());
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut y = x.clone();
    loop {
        let (d, r) = y.div_rem(&pb);
        if !r.is_zero() {
            return (v, y);
        }
        y = d;
        v += 1;
    }
}

/// Valuation of a nonzero rational.
pub fn val_q(x: &Q, p: u64) -> i64 {
    let (a, _) = split_p(x.numer(), p);
    let (b, _) = split_p(x.denom(), p);
    a as i64 - b as i64
}

/// `x mod p^k` for a rational whose denominator is prime to p, as an integer in `[0, p^k)`.
pub fn rational_mod_pk(x: &Q, p: u64, k: u32) -> Result<BigInt> {
    let m = BigInt::from(p).pow(k);
    let d = x.denom();
    if (d % BigInt::from(p)).is_zero() {
        return Err(Error::DenominatorDivisibleByP);
    }
    let inv = mod_inverse(&d.mod_floor(&m), &m).ok_or(Error::DenominatorDivisibleByP)?;
    Ok((x.numer() * inv).mod_floor(&m))
}

/// Inverse of `a` modulo `m` by the extended Euclidean algorithm.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    if m.is_one() {
        return Some(BigInt::zero());
    }
    let e = a.mod_floor(m).extended_gcd(m);
    if !e.gcd.is_one() {
        return None;
    }
    Some(e.x.mod_floor(m))
}

pub fn abs_i(x: &BigInt) -> BigInt {
    x.abs()
}

/// Rational reconstruction: the fraction `a/b` with `|a|, b <= sqrt(m/2)` congruent to `x` mod `m`.
pub fn reconstruct_rational(x: &BigInt, m: &BigInt) -> Option<Q> {
    let bound = (m / BigInt::from(2)).sqrt();
    let (mut r0, mut r1) = (m.clone(), x.mod_floor(m));
    let (mut s0, mut s1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let qq = &r0 / &r1;
        let r2 = &r0 - &qq * &r1;
        let s2 = &s0 - &qq * &s1;
        r0 = r1;
        r1 = r2;
        s0 = s1;
        s1 = s2;
    }
    if s1.is_zero() || s1.abs() > bound {
        return None;
    }
    let out = Q::new(r1, s1);
    if !(out.denom().gcd(m)).is_one() {
        return None;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_q("-3/6").unwrap(), qf(-1, 2));
        assert_eq!(fmt_q(&qf(4, 2)), "2");
        assert!(parse_q("1/0").is_err());
    }

    #[test]
    fn modular_half() {
        assert_eq!(rational_mod_pk(&qf(1, 2), 3, 2).unwrap(), BigInt::from(5));
        assert_eq!(rational_mod_pk(&qf(1, 2), 3, 3).unwrap(), BigInt::from(14));
        assert_eq!(rational_mod_pk(&qf(-1, 2), 3, 1).unwrap(), BigInt::from(1));
        assert!(rational_mod_pk(&qf(1, 3), 3, 1).is_err());
    }

    #[test]
    fn reconstruct_small_fractions() {
        let m = BigInt::from(27);
        assert_eq!(reconstruct_rational(&BigInt::from(14), &m), Some(qf(1, 2)));
        let m = BigInt::from(125);
        let x = rational_mod_pk(&qf(5, 6), 5, 3).unwrap();
        assert_eq!(reconstruct_rational(&x, &m), Some(qf(5, 6)));
    }
}
