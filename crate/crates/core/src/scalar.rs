//! Truncated arithmetic in Q_p and in the cyclotomic rings Z_p[zeta_{p^k}].
//!
//! A [`PadicScalar`] stores `p^shift * mantissa` with `rel_prec` known base-p digits,
//! so the value is known modulo `p^(shift + rel_prec)`. Cancellation that leaves no
//! known digit produces an *exhausted* zero which remembers the absolute precision
//! at which it is known to vanish; it is never confused with the exact zero.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rat::{mod_inverse, split_p, Q};

thread_local! {
    static POW_CACHE: RefCell<HashMap<(u64, u32), BigInt>> = RefCell::new(HashMap::new());
}

/// `p^k` as a big integer (memoised per thread).
pub fn ppow(p: u64, k: u32) -> BigInt {
    POW_CACHE.with(|c| {
        c.borrow_mut()
            .entry((p, k))
            .or_insert_with(|| BigInt::from(p).pow(k))
            .clone()
    })
}

/// Trial division; primes here are small.
pub fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

pub fn ppow_u64(p: u64, k: u32) -> u64 {
    p.pow(k)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Zero,
    Exhausted(i64),
    Unit {
        shift: i64,
        mantissa: BigInt,
        prec: u32,
    },
}

/// An element of Q_p known to a finite relative precision.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PadicScalar {
    p: u64,
    repr: Repr,
}

/// Which arithmetic operation [`padic_arith`] performs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Neg,
}

impl PadicScalar {
    pub fn zero(p: u64) -> Self {
        PadicScalar { p, repr: Repr::Zero }
    }

    /// Zero known only modulo `p^abs`.
    pub fn exhausted(p: u64, abs: i64) -> Self {
        PadicScalar {
            p,
            repr: Repr::Exhausted(abs),
        }
    }

    /// `p^base * x` known modulo `p^abs`.
    pub fn from_parts(p: u64, base: i64, x: BigInt, abs: i64) -> Self {
        let width = abs - base;
        if width <= 0 {
            return Self::exhausted(p, abs);
        }
        let m = ppow(p, width as u32);
        let x = x.mod_floor(&m);
        if x.is_zero() {
            return Self::exhausted(p, abs);
        }
        let (v, u) = split_p(&x, p);
        let prec = width as u32 - v;
        PadicScalar {
            p,
            repr: Repr::Unit {
                shift: base + v as i64,
                mantissa: u.mod_floor(&ppow(p, prec)),
                prec,
            },
        }
    }

    /// `p^shift * mantissa` with `prec` relative digits after normalisation.
    pub fn new(p: u64, shift: i64, mantissa: BigInt, prec: u32) -> Self {
        if mantissa.is_zero() {
            return Self::zero(p);
        }
        let (v, u) = split_p(&mantissa, p);
        let shift = shift + v as i64;
        Self::from_parts(p, shift, u, shift + prec as i64)
    }

    pub fn from_i64(p: u64, x: i64, prec: u32) -> Self {
        Self::new(p, 0, BigInt::from(x), prec)
    }

    pub fn from_bigint(p: u64, x: &BigInt, prec: u32) -> Self {
        Self::new(p, 0, x.clone(), prec)
    }

    pub fn one(p: u64, prec: u32) -> Self {
        Self::from_i64(p, 1, prec)
    }

    /// A rational number with `prec` relative digits.
    pub fn from_rational(p: u64, x: &Q, prec: u32) -> Self {
        if x.is_zero() {
            return Self::zero(p);
        }
        let (va, a) = split_p(x.numer(), p);
        let (vb, b) = split_p(x.denom(), p);
        let m = ppow(p, prec);
        let binv = mod_inverse(&b.mod_floor(&m), &m).expect("p-free denominator");
        let shift = va as i64 - vb as i64;
        Self::from_parts(p, shift, a * binv, shift + prec as i64)
    }

    /// `p^k` with the given relative precision.
    pub fn p_power(p: u64, k: i64, prec: u32) -> Self {
        Self::new(p, k, BigInt::one(), prec)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// True for the exact zero and for exhausted zeros.
    pub fn is_zero(&self) -> bool {
        !matches!(self.repr, Repr::Unit { .. })
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero)
    }

    pub fn is_exhausted(&self) -> bool {
        matches!(self.repr, Repr::Exhausted(_))
    }

    pub fn valuation(&self) -> Option<i64> {
        match &self.repr {
            Repr::Unit { shift, .. } => Some(*shift),
            _ => None,
        }
    }

    pub fn shift(&self) -> i64 {
        self.valuation().unwrap_or(0)
    }

    pub fn mantissa(&self) -> BigInt {
        match &self.repr {
            Repr::Unit { mantissa, .. } => mantissa.clone(),
            _ => BigInt::zero(),
        }
    }

    pub fn rel_prec(&self) -> Option<u32> {
        match &self.repr {
            Repr::Unit { prec, .. } => Some(*prec),
            _ => None,
        }
    }

    /// Exponent `a` such that the value is known modulo `p^a`; `None` for the exact zero.
    pub fn abs_prec(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero => None,
            Repr::Exhausted(a) => Some(*a),
            Repr::Unit { shift, prec, .. } => Some(shift + *prec as i64),
        }
    }

    /// `log_p |x|`, or `None` for zero.
    pub fn lognorm(&self) -> Option<Q> {
        self.valuation().map(|v| Q::from_integer(BigInt::from(-v)))
    }

    fn check(&self, o: &Self) {
        assert_eq!(self.p, o.p, "p-adic operands with different primes");
    }

    pub fn add(&self, o: &Self) -> Self {
        self.check(o);
        match (&self.repr, &o.repr) {
            (Repr::Zero, _) => o.clone(),
            (_, Repr::Zero) => self.clone(),
            (Repr::Exhausted(a), Repr::Exhausted(b)) => Self::exhausted(self.p, (*a).min(*b)),
            (Repr::Exhausted(a), _) => o.truncate_abs(*a),
            (_, Repr::Exhausted(b)) => self.truncate_abs(*b),
            (
                Repr::Unit {
                    shift: sa,
                    mantissa: ma,
                    prec: pa,
                },
                Repr::Unit {
                    shift: sb,
                    mantissa: mb,
                    prec: pb,
                },
            ) => {
                let abs = (sa + *pa as i64).min(sb + *pb as i64);
                let base = (*sa).min(*sb);
                let x = ma * ppow(self.p, (sa - base) as u32) + mb * ppow(self.p, (sb - base) as u32);
                Self::from_parts(self.p, base, x, abs)
            }
        }
    }

    pub fn neg(&self) -> Self {
        match &self.repr {
            Repr::Unit {
                shift,
                mantissa,
                prec,
            } => PadicScalar {
                p: self.p,
                repr: Repr::Unit {
                    shift: *shift,
                    mantissa: ppow(self.p, *prec) - mantissa,
                    prec: *prec,
                },
            },
            _ => self.clone(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.check(o);
        match (&self.repr, &o.repr) {
            (Repr::Zero, _) | (_, Repr::Zero) => Self::zero(self.p),
            (Repr::Exhausted(a), Repr::Exhausted(b)) => Self::exhausted(self.p, a + b),
            (Repr::Exhausted(a), Repr::Unit { shift, .. }) | (Repr::Unit { shift, .. }, Repr::Exhausted(a)) => {
                Self::exhausted(self.p, a + shift)
            }
            (
                Repr::Unit {
                    shift: sa,
                    mantissa: ma,
                    prec: pa,
                },
                Repr::Unit {
                    shift: sb,
                    mantissa: mb,
                    prec: pb,
                },
            ) => {
                let prec = (*pa).min(*pb);
                PadicScalar {
                    p: self.p,
                    repr: Repr::Unit {
                        shift: sa + sb,
                        mantissa: (ma * mb).mod_floor(&ppow(self.p, prec)),
                        prec,
                    },
                }
            }
        }
    }

    /// Multiplication by an ordinary integer (exact, no precision is lost beyond the
    /// valuation it contributes).
    pub fn mul_int(&self, k: i64) -> Self {
        if k == 0 {
            return Self::zero(self.p);
        }
        match &self.repr {
            Repr::Zero => self.clone(),
            Repr::Exhausted(a) => {
                let (v, _) = split_p(&BigInt::from(k), self.p);
                Self::exhausted(self.p, a + v as i64)
            }
            Repr::Unit {
                shift,
                mantissa,
                prec,
            } => {
                let (v, u) = split_p(&BigInt::from(k), self.p);
                PadicScalar {
                    p: self.p,
                    repr: Repr::Unit {
                        shift: shift + v as i64,
                        mantissa: (mantissa * u).mod_floor(&ppow(self.p, *prec)),
                        prec: *prec,
                    },
                }
            }
        }
    }

    /// Multiplication by `p^k` (exact shift).
    pub fn mul_p_power(&self, k: i64) -> Self {
        match &self.repr {
            Repr::Zero => self.clone(),
            Repr::Exhausted(a) => Self::exhausted(self.p, a + k),
            Repr::Unit {
                shift,
                mantissa,
                prec,
            } => PadicScalar {
                p: self.p,
                repr: Repr::Unit {
                    shift: shift + k,
                    mantissa: mantissa.clone(),
                    prec: *prec,
                },
            },
        }
    }

    pub fn inv(&self) -> Result<Self> {
        match &self.repr {
            Repr::Zero => Err(Error::ZeroInput),
            Repr::Exhausted(a) => Err(Error::PrecisionExhausted(format!(
                "cannot invert a value known only to be 0 mod p^{a}"
            ))),
            Repr::Unit {
                shift,
                mantissa,
                prec,
            } => {
                let m = ppow(self.p, *prec);
                let inv = mod_inverse(mantissa, &m).expect("mantissa is a unit");
                Ok(PadicScalar {
                    p: self.p,
                    repr: Repr::Unit {
                        shift: -shift,
                        mantissa: inv,
                        prec: *prec,
                    },
                })
            }
        }
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Ok(self.mul(&o.inv()?))
    }

    /// Forget every digit at or beyond `p^abs`.
    pub fn truncate_abs(&self, abs: i64) -> Self {
        match &self.repr {
            Repr::Zero => Self::exhausted(self.p, abs),
            Repr::Exhausted(a) => Self::exhausted(self.p, (*a).min(abs)),
            Repr::Unit {
                shift,
                mantissa,
                prec,
            } => {
                let cur = shift + *prec as i64;
                if abs >= cur {
                    self.clone()
                } else {
                    Self::from_parts(self.p, *shift, mantissa.clone(), abs)
                }
            }
        }
    }

    /// Lower the relative precision to at most `prec`.
    pub fn with_rel_prec(&self, prec: u32) -> Self {
        match &self.repr {
            Repr::Unit { shift, mantissa, prec: cur } if *cur > prec => {
                Self::from_parts(self.p, *shift, mantissa.clone(), shift + prec as i64)
            }
            _ => self.clone(),
        }
    }

    /// The value modulo `p^k` as an integer in `[0, p^k)`. Requires a p-adic integer
    /// known to at least `k` digits.
    pub fn mod_pk(&self, k: u32) -> Result<BigInt> {
        match &self.repr {
            Repr::Zero => Ok(BigInt::zero()),
            Repr::Exhausted(a) => {
                if *a >= k as i64 {
                    Ok(BigInt::zero())
                } else {
                    Err(Error::InsufficientPrecision(format!(
                        "value known mod p^{a}, need p^{k}"
                    )))
                }
            }
            Repr::Unit {
                shift,
                mantissa,
                prec,
            } => {
                if *shift < 0 {
                    return Err(Error::InsufficientPrecision(
                        "not a p-adic integer".to_string(),
                    ));
                }
                if *shift >= k as i64 {
                    return Ok(BigInt::zero());
                }
                if shift + (*prec as i64) < k as i64 {
                    return Err(Error::InsufficientPrecision(format!(
                        "value known mod p^{}, need p^{k}",
                        shift + *prec as i64
                    )));
                }
                Ok((mantissa * ppow(self.p, *shift as u32)).mod_floor(&ppow(self.p, k)))
            }
        }
    }

    /// An integer representative `p^shift * mantissa` (only meaningful for shift >= 0).
    pub fn to_bigint(&self) -> Option<BigInt> {
        match &self.repr {
            Repr::Zero | Repr::Exhausted(_) => Some(BigInt::zero()),
            Repr::Unit { shift, mantissa, .. } if *shift >= 0 => Some(mantissa * ppow(self.p, *shift as u32)),
            _ => None,
        }
    }

    /// Rational value of the stored representative `p^shift * mantissa`.
    pub fn to_rational(&self) -> Q {
        match &self.repr {
            Repr::Unit { shift, mantissa, .. } => {
                if *shift >= 0 {
                    Q::from_integer(mantissa * ppow(self.p, *shift as u32))
                } else {
                    Q::new(mantissa.clone(), ppow(self.p, (-shift) as u32))
                }
            }
            _ => Q::zero(),
        }
    }

    /// The representative in the symmetric range, which reads better for small negatives.
    pub fn balanced_mantissa(&self) -> BigInt {
        match &self.repr {
            Repr::Unit { mantissa, prec, .. } => {
                let m = ppow(self.p, *prec);
                if mantissa * 2 > m {
                    mantissa - m
                } else {
                    mantissa.clone()
                }
            }
            _ => BigInt::zero(),
        }
    }

    /// Value equality at the common known precision.
    pub fn eq_at_prec(&self, o: &Self) -> bool {
        self.sub(o).is_zero()
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Zero => write!(f, "0"),
            Repr::Exhausted(a) => write!(f, "O({}^{})", self.p, a),
            Repr::Unit { shift, prec, .. } => {
                let m = self.balanced_mantissa();
                if *shift == 0 {
                    write!(f, "{m} + O({}^{})", self.p, prec)
                } else {
                    write!(f, "{}^{}*{m} + O({}^{})", self.p, shift, self.p, shift + *prec as i64)
                }
            }
        }
    }
}

/// Spec-level entry point for the four ring operations; `b` is ignored for negation.
pub fn padic_arith(a: &PadicScalar, b: &PadicScalar, op: ArithOp) -> Result<PadicScalar> {
    if op != ArithOp::Neg && a.p != b.p {
        return Err(Error::PrimeMismatch(a.p, b.p));
    }
    Ok(match op {
        ArithOp::Add => a.add(b),
        ArithOp::Sub => a.sub(b),
        ArithOp::Mul => a.mul(b),
        ArithOp::Neg => a.neg(),
    })
}

pub fn padic_invert(a: &PadicScalar) -> Result<PadicScalar> {
    a.inv()
}

/// Euler's phi of `p^k` (with `phi(p^0) = 1`).
pub fn phi(p: u64, k: u32) -> usize {
    if k == 0 {
        1
    } else {
        ((p - 1) * p.pow(k - 1)) as usize
    }
}

/// Element of Z_p[zeta] for a primitive `p^level`-th root of unity zeta, in the basis
/// `1, zeta, ..., zeta^(phi-1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CycScalar {
    p: u64,
    level: u32,
    coords: Vec<PadicScalar>,
}

impl CycScalar {
    pub fn zero(p: u64, level: u32) -> Self {
        CycScalar {
            p,
            level,
            coords: vec![PadicScalar::zero(p); phi(p, level)],
        }
    }

    pub fn from_coords(p: u64, level: u32, coords: Vec<PadicScalar>) -> Result<Self> {
        if coords.len() != phi(p, level) {
            return Err(Error::DimensionMismatch(format!(
                "level {level} needs {} coordinates, got {}",
                phi(p, level),
                coords.len()
            )));
        }
        Ok(CycScalar { p, level, coords })
    }

    pub fn from_base(x: &PadicScalar, level: u32) -> Self {
        let mut c = Self::zero(x.p(), level);
        c.coords[0] = x.clone();
        c
    }

    pub fn one(p: u64, level: u32, prec: u32) -> Self {
        Self::from_base(&PadicScalar::one(p, prec), level)
    }

    /// `coef * zeta^e`.
    pub fn monomial(coef: &PadicScalar, level: u32, e: u64) -> Self {
        let p = coef.p();
        let mut acc = GroupRingAcc::new(p, level);
        acc.add_at(e, coef);
        acc.to_cyc()
    }

    pub fn root_power(p: u64, level: u32, e: u64, prec: u32) -> Self {
        Self::monomial(&PadicScalar::one(p, prec), level, e)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coords(&self) -> &[PadicScalar] {
        &self.coords
    }

    pub fn order(&self) -> u64 {
        self.p.pow(self.level)
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.p != o.p {
            return Err(Error::PrimeMismatch(self.p, o.p));
        }
        if self.level != o.level {
            return Err(Error::LevelMismatch(self.level, o.level));
        }
        Ok(())
    }

    pub fn try_add(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(self.add(o))
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self> {
        self.check(o)?;
        Ok(self.mul(o))
    }

    pub fn add(&self, o: &Self) -> Self {
        debug_assert!(self.check(o).is_ok());
        CycScalar {
            p: self.p,
            level: self.level,
            coords: self.coords.iter().zip(&o.coords).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        CycScalar {
            p: self.p,
            level: self.level,
            coords: self.coords.iter().map(|a| a.neg()).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        debug_assert!(self.check(o).is_ok());
        let mut acc = GroupRingAcc::new(self.p, self.level);
        let n = acc.len() as u64;
        for (i, a) in self.coords.iter().enumerate() {
            if a.is_exact_zero() {
                continue;
            }
            for (j, b) in o.coords.iter().enumerate() {
                if b.is_exact_zero() {
                    continue;
                }
                acc.add_at((i as u64 + j as u64) % n, &a.mul(b));
            }
        }
        acc.to_cyc()
    }

    pub fn mul_base(&self, x: &PadicScalar) -> Self {
        CycScalar {
            p: self.p,
            level: self.level,
            coords: self.coords.iter().map(|a| a.mul(x)).collect(),
        }
    }

    pub fn mul_int(&self, k: i64) -> Self {
        CycScalar {
            p: self.p,
            level: self.level,
            coords: self.coords.iter().map(|a| a.mul_int(k)).collect(),
        }
    }

    /// Multiplication by `zeta^e`.
    pub fn mul_root(&self, e: u64) -> Self {
        let mut acc = GroupRingAcc::new(self.p, self.level);
        acc.add_cyc_shifted(self, e);
        acc.to_cyc()
    }

    /// The Galois automorphism `zeta -> zeta^c` (`c` prime to p).
    pub fn galois(&self, c: u64) -> Self {
        let mut acc = GroupRingAcc::new(self.p, self.level);
        let n = acc.len() as u64;
        for (i, a) in self.coords.iter().enumerate() {
            if !a.is_exact_zero() {
                acc.add_at((i as u64 * c) % n, a);
            }
        }
        acc.to_cyc()
    }

    /// Image under `zeta_k = zeta_{k+1}^p`.
    pub fn embed(&self) -> Self {
        let mut out = Self::zero(self.p, self.level + 1);
        if self.level == 0 {
            out.coords[0] = self.coords[0].clone();
            return out;
        }
        for (i, a) in self.coords.iter().enumerate() {
            out.coords[i * self.p as usize] = a.clone();
        }
        out
    }

    pub fn embed_to(&self, level: u32) -> Self {
        let mut x = self.clone();
        while x.level < level {
            x = x.embed();
        }
        x
    }

    /// Inverse of [`CycScalar::embed`] when the element lies in the smaller ring.
    pub fn descend_level(&self) -> Result<Self> {
        if self.level == 0 {
            return Err(Error::LevelMismatch(0, 0));
        }
        let mut out = Self::zero(self.p, self.level - 1);
        if self.level == 1 {
            if self.coords[1..].iter().any(|c| !c.is_zero()) {
                return Err(Error::NonDescendable);
            }
            out.coords[0] = self.coords[0].clone();
            return Ok(out);
        }
        for (i, a) in self.coords.iter().enumerate() {
            if i % self.p as usize == 0 {
                out.coords[i / self.p as usize] = a.clone();
            } else if !a.is_zero() {
                return Err(Error::NonDescendable);
            }
        }
        Ok(out)
    }

    /// The constant coordinate, provided every other coordinate vanishes at its precision.
    pub fn descend_to_base(&self) -> Result<PadicScalar> {
        if self.coords[1..].iter().any(|c| !c.is_zero()) {
            return Err(Error::NonDescendable);
        }
        Ok(self.coords[0].clone())
    }

    /// Valuation normalised by `v(p) = 1`, computed in the basis `(zeta - 1)^j` whose
    /// valuations `j / phi` have distinct fractional parts.
    pub fn valuation(&self) -> Option<Q> {
        let n = self.coords.len();
        let ph = BigInt::from(n as u64);
        let mut best: Option<Q> = None;
        let mut row = vec![BigInt::one()];
        let mut d: Vec<PadicScalar> = vec![PadicScalar::zero(self.p); n];
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                let mut next = vec![BigInt::one(); i + 1];
                for j in 1..i {
                    next[j] = &row[j - 1] + &row[j];
                }
                row = next;
            }
            if c.is_zero() {
                continue;
            }
            for (j, b) in row.iter().enumerate() {
                d[j] = d[j].add(&c.mul(&PadicScalar::from_bigint(self.p, b, c.rel_prec().unwrap_or(1))));
            }
        }
        for (j, dj) in d.iter().enumerate() {
            if let Some(v) = dj.valuation() {
                let cand = Q::from_integer(BigInt::from(v)) + Q::new(BigInt::from(j as u64), ph.clone());
                if best.as_ref().is_none_or(|b| cand < *b) {
                    best = Some(cand);
                }
            }
        }
        best
    }

    pub fn lognorm(&self) -> Option<Q> {
        self.valuation().map(|v| -v)
    }

    /// Minimum absolute precision over the coordinates.
    pub fn abs_prec(&self) -> Option<i64> {
        self.coords.iter().filter_map(|c| c.abs_prec()).min()
    }

    /// Inverse by solving the multiplication-by-self linear system over Q_p.
    pub fn inv(&self) -> Result<Self> {
        let n = self.coords.len();
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            cols.push(self.mul_root(j as u64).coords);
        }
        let mat: Vec<Vec<PadicScalar>> = (0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect();
        let prec = self.coords.iter().filter_map(|c| c.rel_prec()).max().unwrap_or(1);
        let mut rhs = vec![PadicScalar::zero(self.p); n];
        rhs[0] = PadicScalar::one(self.p, prec);
        let x = crate::linalg::solve(&mat, &rhs)?;
        CycScalar::from_coords(self.p, self.level, x)
    }

    /// Truncate every coordinate at absolute precision `abs`.
    pub fn truncate_abs(&self, abs: i64) -> Self {
        CycScalar {
            p: self.p,
            level: self.level,
            coords: self.coords.iter().map(|c| if c.is_exact_zero() { c.clone() } else { c.truncate_abs(abs) }).collect(),
        }
    }

    pub fn eq_at_prec(&self, o: &Self) -> bool {
        self.sub(o).is_zero()
    }
}

/// `zeta^(a * (lambda mod p^k))` for a primitive `p^k`-th root zeta.
pub fn power_by_padic(k: u32, a: u64, lambda: &PadicScalar, prec: u32) -> Result<CycScalar> {
    let p = lambda.p();
    if lambda.valuation().is_some_and(|v| v < 0) {
        return Err(Error::InsufficientPrecision("exponent is not a p-adic integer".into()));
    }
    let r = lambda.mod_pk(k)?;
    let n = BigInt::from(p.pow(k));
    let e = (r * BigInt::from(a)).mod_floor(&n);
    let e: u64 = e.try_into().expect("small exponent");
    Ok(CycScalar::root_power(p, k, e, prec))
}

/// Unnormalised running sum `p^base * x` known modulo `p^abs`.
#[derive(Clone, Debug)]
enum Slot {
    Empty,
    Exh(i64),
    Val { base: i64, x: BigInt, abs: i64 },
}

impl Slot {
    fn add(&mut self, p: u64, y: &PadicScalar) {
        match &y.repr {
            Repr::Zero => {}
            Repr::Exhausted(a) => match self {
                Slot::Empty => *self = Slot::Exh(*a),
                Slot::Exh(b) => *b = (*b).min(*a),
                Slot::Val { abs, .. } => *abs = (*abs).min(*a),
            },
            Repr::Unit { shift, mantissa, prec } => {
                let a = shift + *prec as i64;
                match self {
                    Slot::Empty => {
                        *self = Slot::Val {
                            base: *shift,
                            x: mantissa.clone(),
                            abs: a,
                        }
                    }
                    Slot::Exh(b) => {
                        *self = Slot::Val {
                            base: *shift,
                            x: mantissa.clone(),
                            abs: a.min(*b),
                        }
                    }
                    Slot::Val { base, x, abs } => {
                        *abs = (*abs).min(a);
                        if *shift >= *abs {
                            return;
                        }
                        if *shift >= *base {
                            *x += mantissa * ppow(p, (*shift - *base) as u32);
                        } else {
                            *x = &*x * ppow(p, (*base - *shift) as u32) + mantissa;
                            *base = *shift;
                        }
                    }
                }
            }
        }
    }

    fn finish(&self, p: u64) -> PadicScalar {
        match self {
            Slot::Empty => PadicScalar::zero(p),
            Slot::Exh(a) => PadicScalar::exhausted(p, *a),
            Slot::Val { base, x, abs } => PadicScalar::from_parts(p, *base, x.clone(), *abs),
        }
    }
}

/// An element of the group ring Q_p[Z/p^k], i.e. an unreduced polynomial in zeta.
/// Sums of many root-of-unity terms are accumulated here and reduced once.
#[derive(Clone, Debug)]
pub struct GroupRingAcc {
    p: u64,
    level: u32,
    slots: Vec<Slot>,
}

impl GroupRingAcc {
    pub fn new(p: u64, level: u32) -> Self {
        GroupRingAcc {
            p,
            level,
            slots: vec![Slot::Empty; p.pow(level) as usize],
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.iter().all(|s| matches!(s, Slot::Empty))
    }

    pub fn add_at(&mut self, e: u64, x: &PadicScalar) {
        let i = (e % self.slots.len() as u64) as usize;
        self.slots[i].add(self.p, x);
    }

    /// Adds `c * zeta^e`.
    pub fn add_cyc_shifted(&mut self, c: &CycScalar, e: u64) {
        let n = self.slots.len() as u64;
        for (i, a) in c.coords.iter().enumerate() {
            if !a.is_exact_zero() {
                let idx = ((i as u64 + e) % n) as usize;
                self.slots[idx].add(self.p, a);
            }
        }
    }

    pub fn add_acc(&mut self, o: &GroupRingAcc) {
        for (s, x) in self.slots.iter_mut().zip(&o.slots) {
            s.add(self.p, &x.finish(self.p));
        }
    }

    /// Multiplication by `zeta^e`.
    pub fn rotate(&self, e: u64) -> GroupRingAcc {
        let n = self.slots.len();
        let e = (e % n as u64) as usize;
        let mut slots = vec![Slot::Empty; n];
        for (i, x) in self.slots.iter().enumerate() {
            slots[(i + e) % n] = x.clone();
        }
        GroupRingAcc {
            p: self.p,
            level: self.level,
            slots,
        }
    }

    /// Reduction modulo the cyclotomic polynomial
    /// `Phi_{p^k}(X) = sum_{j<p} X^(j p^(k-1))`.
    pub fn to_cyc(&self) -> CycScalar {
        let ph = phi(self.p, self.level);
        let vals: Vec<PadicScalar> = self.slots.iter().map(|s| s.finish(self.p)).collect();
        let mut coords: Vec<PadicScalar> = vals[..ph].to_vec();
        if self.level == 0 {
            return CycScalar {
                p: self.p,
                level: 0,
                coords,
            };
        }
        let step = self.p.pow(self.level - 1) as usize;
        for (r, x) in vals[ph..].iter().enumerate() {
            if x.is_exact_zero() {
                continue;
            }
            for j in 0..(self.p as usize - 1) {
                let idx = r + j * step;
                coords[idx] = coords[idx].sub(x);
            }
        }
        CycScalar {
            p: self.p,
            level: self.level,
            coords,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::qf;

    fn s(p: u64, x: i64) -> PadicScalar {
        PadicScalar::from_i64(p, x, 8)
    }

    #[test]
    fn carry_into_shift() {
        let r = s(3, 1).add(&s(3, 2));
        assert_eq!(r.valuation(), Some(1));
        assert_eq!(r.mantissa(), BigInt::from(1));
        assert_eq!(r.rel_prec(), Some(7));
    }

    #[test]
    fn half_times_two_is_one() {
        let half = PadicScalar::from_rational(3, &qf(1, 2), 5);
        assert_eq!(half.mantissa(), BigInt::from(122));
        assert!(half.mul(&s(3, 2)).eq_at_prec(&s(3, 1)));
    }

    #[test]
    fn inverse_examples() {
        let two = PadicScalar::from_i64(3, 2, 3);
        assert_eq!(two.inv().unwrap().mantissa(), BigInt::from(14));
        let p = PadicScalar::from_i64(3, 3, 4);
        let ip = p.inv().unwrap();
        assert_eq!((ip.valuation(), ip.mantissa()), (Some(-1), BigInt::from(1)));
        assert!(PadicScalar::zero(3).inv().is_err());
    }

    #[test]
    fn cancellation_is_flagged() {
        let a = s(5, 7);
        let z = a.sub(&a);
        assert!(z.is_exhausted());
        assert_eq!(z.abs_prec(), Some(8));
        assert!(z.add(&PadicScalar::p_power(5, 10, 4)).is_exhausted());
        assert_eq!(a.add(&PadicScalar::zero(5)), a);
    }

    #[test]
    fn cyclotomic_reduction() {
        let z = CycScalar::root_power(3, 1, 1, 8);
        let z2 = z.mul(&z);
        assert_eq!(z2, CycScalar::root_power(3, 1, 2, 8));
        let z3 = z2.mul(&z);
        assert!(z3.eq_at_prec(&CycScalar::one(3, 1, 8)));
        let m = z2.mul(&z.mul(&CycScalar::one(3, 1, 8)));
        assert!(m.eq_at_prec(&CycScalar::one(3, 1, 8)));
        let i = CycScalar::root_power(2, 2, 1, 8);
        assert!(i.mul(&i).eq_at_prec(&CycScalar::one(2, 2, 8).neg()));
    }

    #[test]
    fn zeta_squared_times_zeta_reduces() {
        // zeta^2 itself reduces to -1 - zeta at p = 3, level 1.
        let z2 = CycScalar::root_power(3, 1, 2, 8);
        assert_eq!(z2.coords()[0], s(3, -1));
        assert_eq!(z2.coords()[1], s(3, -1));
    }

    #[test]
    fn descend_examples() {
        let five = CycScalar::from_base(&s(3, 5), 1);
        assert_eq!(five.descend_to_base().unwrap(), s(3, 5));
        let sum = CycScalar::one(3, 1, 8)
            .add(&CycScalar::root_power(3, 1, 1, 8))
            .add(&CycScalar::root_power(3, 1, 2, 8));
        assert!(sum.descend_to_base().unwrap().is_zero());
        assert_eq!(
            CycScalar::root_power(3, 1, 1, 8).descend_to_base(),
            Err(Error::NonDescendable)
        );
    }

    #[test]
    fn power_by_padic_examples() {
        let half = PadicScalar::from_rational(3, &qf(1, 2), 8);
        assert_eq!(
            power_by_padic(1, 1, &half, 8).unwrap(),
            CycScalar::root_power(3, 1, 2, 8)
        );
        assert_eq!(
            power_by_padic(2, 1, &half, 8).unwrap(),
            CycScalar::root_power(3, 2, 5, 8)
        );
        assert_eq!(
            power_by_padic(2, 1, &PadicScalar::zero(3), 8).unwrap(),
            CycScalar::one(3, 2, 8)
        );
        let short = PadicScalar::from_i64(3, 1, 1);
        assert!(power_by_padic(2, 1, &short, 8).is_err());
    }

    #[test]
    fn root_valuations() {
        let z = CycScalar::root_power(3, 2, 1, 8);
        let one = CycScalar::one(3, 2, 8);
        assert_eq!(z.sub(&one).valuation(), Some(qf(1, 6)));
        assert_eq!(one.valuation(), Some(qf(0, 1)));
        let three = CycScalar::from_base(&s(3, 3), 2);
        assert_eq!(three.valuation(), Some(qf(1, 1)));
        let w = CycScalar::root_power(3, 2, 1, 8).sub(&CycScalar::root_power(3, 2, 5, 8));
        assert_eq!(w.valuation(), Some(qf(1, 6)));
    }

    #[test]
    fn cyclotomic_inverse() {
        let z = CycScalar::root_power(5, 1, 3, 10);
        let x = z.add(&CycScalar::from_base(&s(5, 5), 1));
        let y = x.inv().unwrap();
        assert!(x.mul(&y).eq_at_prec(&CycScalar::one(5, 1, 10)));
    }
}
