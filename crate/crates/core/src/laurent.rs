//! Finite-support Laurent polynomials in n variables with Gauss norms on log-radius boxes.
//!
//! Radii are stored through `s = log_p(rho)`, so a term `c t^i` has log-norm
//! `-v(c) + i.s`, an affine function of `s`. Box norms are therefore maxima over the
//! vertices of the box.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::rat::{LogNorm, Q};
use crate::scalar::{CycScalar, PadicScalar};

/// Coefficient rings a [`Series`] can be built over.
pub trait Coeff: Clone + fmt::Debug + PartialEq + Send + Sync {
    type Ctx: Clone + fmt::Debug + PartialEq + Send + Sync;
    fn zero(ctx: &Self::Ctx) -> Self;
    fn one(ctx: &Self::Ctx) -> Self;
    fn from_padic(ctx: &Self::Ctx, x: &PadicScalar) -> Self;
    fn p_of(ctx: &Self::Ctx) -> u64;
    fn prec_of(ctx: &Self::Ctx) -> u32;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn mul_int(&self, k: i64) -> Self;
    /// Valuation with `v(p) = 1`; `None` for zero.
    fn valuation(&self) -> Option<Q>;
    fn inverse(&self) -> Result<Self>;
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PadicCtx {
    pub p: u64,
    pub prec: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CycCtx {
    pub p: u64,
    pub level: u32,
    pub prec: u32,
}

impl Coeff for PadicScalar {
    type Ctx = PadicCtx;
    fn zero(ctx: &PadicCtx) -> Self {
        PadicScalar::zero(ctx.p)
    }
    fn one(ctx: &PadicCtx) -> Self {
        PadicScalar::one(ctx.p, ctx.prec)
    }
    fn from_padic(_: &PadicCtx, x: &PadicScalar) -> Self {
        x.clone()
    }
    fn p_of(ctx: &PadicCtx) -> u64 {
        ctx.p
    }
    fn prec_of(ctx: &PadicCtx) -> u32 {
        ctx.prec
    }
    fn is_zero(&self) -> bool {
        PadicScalar::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        PadicScalar::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        PadicScalar::sub(self, o)
    }
    fn neg(&self) -> Self {
        PadicScalar::neg(self)
    }
    fn mul(&self, o: &Self) -> Self {
        PadicScalar::mul(self, o)
    }
    fn mul_int(&self, k: i64) -> Self {
        PadicScalar::mul_int(self, k)
    }
    fn valuation(&self) -> Option<Q> {
        PadicScalar::valuation(self).map(|v| Q::from_integer(BigInt::from(v)))
    }
    fn inverse(&self) -> Result<Self> {
        self.inv()
    }
}

impl Coeff for CycScalar {
    type Ctx = CycCtx;
    fn zero(ctx: &CycCtx) -> Self {
        CycScalar::zero(ctx.p, ctx.level)
    }
    fn one(ctx: &CycCtx) -> Self {
        CycScalar::one(ctx.p, ctx.level, ctx.prec)
    }
    fn from_padic(ctx: &CycCtx, x: &PadicScalar) -> Self {
        CycScalar::from_base(x, ctx.level)
    }
    fn p_of(ctx: &CycCtx) -> u64 {
        ctx.p
    }
    fn prec_of(ctx: &CycCtx) -> u32 {
        ctx.prec
    }
    fn is_zero(&self) -> bool {
        CycScalar::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        CycScalar::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        CycScalar::sub(self, o)
    }
    fn neg(&self) -> Self {
        CycScalar::neg(self)
    }
    fn mul(&self, o: &Self) -> Self {
        CycScalar::mul(self, o)
    }
    fn mul_int(&self, k: i64) -> Self {
        CycScalar::mul_int(self, k)
    }
    fn valuation(&self) -> Option<Q> {
        CycScalar::valuation(self)
    }
    fn inverse(&self) -> Result<Self> {
        self.inv()
    }
}

/// Per-variable inclusive exponent bounds.
pub type Window = Vec<(i64, i64)>;

/// Box `lo <= s <= hi` of log-radii.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LogRadiusBox {
    pub lo: Vec<Q>,
    pub hi: Vec<Q>,
}

impl LogRadiusBox {
    pub fn new(lo: Vec<Q>, hi: Vec<Q>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch("box bounds differ in length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::Malformed("box has lo > hi".into()));
        }
        Ok(LogRadiusBox { lo, hi })
    }

    pub fn point(s: Vec<Q>) -> Self {
        LogRadiusBox {
            lo: s.clone(),
            hi: s,
        }
    }

    pub fn nvars(&self) -> usize {
        self.lo.len()
    }

    /// The `2^n` corners (duplicates collapse for degenerate directions).
    pub fn vertices(&self) -> Vec<Vec<Q>> {
        let n = self.lo.len();
        let mut out: Vec<Vec<Q>> = vec![Vec::with_capacity(n)];
        for i in 0..n {
            let mut next = Vec::with_capacity(out.len() * 2);
            for v in &out {
                let mut a = v.clone();
                a.push(self.lo[i].clone());
                next.push(a);
                if self.hi[i] != self.lo[i] {
                    let mut b = v.clone();
                    b.push(self.hi[i].clone());
                    next.push(b);
                }
            }
            out = next;
        }
        out
    }

    /// Shrinks every direction by `d_i` on both sides (`d_i = log_p eta_i`).
    pub fn shrink(&self, d: &[Q]) -> Result<Self> {
        let lo: Vec<Q> = self.lo.iter().zip(d).map(|(a, e)| a + e).collect();
        let hi: Vec<Q> = self.hi.iter().zip(d).map(|(a, e)| a - e).collect();
        LogRadiusBox::new(lo, hi)
    }

    /// The default shrink `log_p eta_i = (hi_i - lo_i)/4`, which halves the box.
    pub fn default_shrink(&self) -> Vec<Q> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) / Q::from_integer(BigInt::from(4)))
            .collect()
    }

    pub fn halved(&self) -> Self {
        self.shrink(&self.default_shrink()).expect("halving keeps lo <= hi")
    }
}

/// What [`Series::mul_clipped`] discarded.
#[derive(Clone, Debug, PartialEq)]
pub struct ClipReport {
    pub clipped_terms: usize,
    pub max_discarded: LogNorm,
}

/// A Laurent polynomial with coefficients in `C`.
#[derive(Clone, Debug)]
pub struct Series<C: Coeff> {
    nvars: usize,
    ctx: C::Ctx,
    terms: BTreeMap<Vec<i64>, C>,
}

pub type LaurentSeries = Series<PadicScalar>;
pub type CycSeries = Series<CycScalar>;

impl<C: Coeff> PartialEq for Series<C> {
    fn eq(&self, o: &Self) -> bool {
        self.nvars == o.nvars && self.terms == o.terms
    }
}

fn in_window(e: &[i64], w: &Window) -> bool {
    e.iter().zip(w).all(|(x, (lo, hi))| lo <= x && x <= hi)
}

fn term_lognorm<C: Coeff>(c: &C, e: &[i64], s: &[Q]) -> LogNorm {
    let v = c.valuation()?;
    let mut out = -v;
    for (i, x) in e.iter().zip(s) {
        if *i != 0 {
            out += x * Q::from_integer(BigInt::from(*i));
        }
    }
    Some(out)
}

impl<C: Coeff> Series<C> {
    pub fn zero(nvars: usize, ctx: &C::Ctx) -> Self {
        Series {
            nvars,
            ctx: ctx.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, ctx: &C::Ctx, c: C) -> Self {
        Self::monomial(nvars, ctx, vec![0; nvars], c)
    }

    pub fn one(nvars: usize, ctx: &C::Ctx) -> Self {
        Self::constant(nvars, ctx, C::one(ctx))
    }

    pub fn monomial(nvars: usize, ctx: &C::Ctx, exp: Vec<i64>, c: C) -> Self {
        assert_eq!(exp.len(), nvars);
        let mut s = Self::zero(nvars, ctx);
        if !c.is_zero() {
            s.terms.insert(exp, c);
        }
        s
    }

    /// The variable `t_i` with coefficient one.
    pub fn var(nvars: usize, ctx: &C::Ctx, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, ctx, e, C::one(ctx))
    }

    pub fn from_terms<I: IntoIterator<Item = (Vec<i64>, C)>>(nvars: usize, ctx: &C::Ctx, it: I) -> Self {
        let mut s = Self::zero(nvars, ctx);
        for (e, c) in it {
            s.add_term(e, &c);
        }
        s
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn ctx(&self) -> &C::Ctx {
        &self.ctx
    }

    pub fn p(&self) -> u64 {
        C::p_of(&self.ctx)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &[i64]) -> C {
        self.terms.get(e).cloned().unwrap_or_else(|| C::zero(&self.ctx))
    }

    pub fn constant_term(&self) -> C {
        self.coeff(&vec![0; self.nvars])
    }

    /// Adds `c t^e` in place.
    pub fn add_term(&mut self, e: Vec<i64>, c: &C) {
        debug_assert_eq!(e.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(x) => {
                let y = x.add(c);
                if y.is_zero() {
                    self.terms.remove(&e);
                } else {
                    *x = y;
                }
            }
            None => {
                self.terms.insert(e, c.clone());
            }
        }
    }

    /// Bounding box of the support; `None` for zero.
    pub fn support_window(&self) -> Option<Window> {
        let mut it = self.terms.keys();
        let first = it.next()?;
        let mut w: Window = first.iter().map(|&x| (x, x)).collect();
        for e in it {
            for (b, &x) in w.iter_mut().zip(e) {
                b.0 = b.0.min(x);
                b.1 = b.1.max(x);
            }
        }
        Some(w)
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!(self.nvars, o.nvars, "series with different numbers of variables");
        let mut out = self.clone();
        for (e, c) in &o.terms {
            out.add_term(e.clone(), c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        Series {
            nvars: self.nvars,
            ctx: self.ctx.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.mul_filtered(o, |_| true).0
    }

    fn mul_filtered<F: Fn(&[i64]) -> bool>(&self, o: &Self, keep: F) -> (Self, Vec<(Vec<i64>, C)>) {
        assert_eq!(self.nvars, o.nvars, "series with different numbers of variables");
        let mut acc: BTreeMap<Vec<i64>, C> = BTreeMap::new();
        let mut dropped: BTreeMap<Vec<i64>, C> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e: Vec<i64> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                let prod = ca.mul(cb);
                let target = if keep(&e) { &mut acc } else { &mut dropped };
                match target.get_mut(&e) {
                    Some(x) => *x = x.add(&prod),
                    None => {
                        target.insert(e, prod);
                    }
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        let out = Series {
            nvars: self.nvars,
            ctx: self.ctx.clone(),
            terms: acc,
        };
        (out, dropped.into_iter().filter(|(_, c)| !c.is_zero()).collect())
    }

    /// Product restricted to `window`; the report measures the discarded mass on `bx`.
    pub fn mul_clipped(&self, o: &Self, window: &Window, bx: &LogRadiusBox) -> (Self, ClipReport) {
        let (out, dropped) = self.mul_filtered(o, |e| in_window(e, window));
        let mut worst: LogNorm = None;
        for (e, c) in &dropped {
            let m = Series::monomial(self.nvars, &self.ctx, e.clone(), c.clone()).sup_lognorm(bx);
            worst = worst.max(m);
        }
        (
            out,
            ClipReport {
                clipped_terms: dropped.len(),
                max_discarded: worst,
            },
        )
    }

    /// Like [`Series::mul_clipped`] but refuses to discard anything.
    pub fn mul_checked(&self, o: &Self, window: &Window) -> Result<Self> {
        let (out, dropped) = self.mul_filtered(o, |e| in_window(e, window));
        if dropped.is_empty() {
            Ok(out)
        } else {
            Err(Error::WindowOverflow(format!("{} product terms fall outside the window", dropped.len())))
        }
    }

    /// Keeps only the terms with exponents in `window`.
    pub fn clip(&self, window: &Window) -> Self {
        self.filter(|e| in_window(e, window))
    }

    pub fn filter<F: Fn(&[i64]) -> bool>(&self, keep: F) -> Self {
        Series {
            nvars: self.nvars,
            ctx: self.ctx.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| keep(e))
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn map_coeffs<D: Coeff, F: Fn(&C) -> D>(&self, ctx: &D::Ctx, f: F) -> Series<D> {
        let mut out = Series::zero(self.nvars, ctx);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), &f(c));
        }
        out
    }

    pub fn mul_coeff(&self, c: &C) -> Self {
        self.map_coeffs(&self.ctx, |x| x.mul(c))
    }

    pub fn mul_int(&self, k: i64) -> Self {
        self.map_coeffs(&self.ctx, |x| x.mul_int(k))
    }

    /// Multiplication by the monomial `t^e`.
    pub fn shift(&self, e: &[i64]) -> Self {
        Series {
            nvars: self.nvars,
            ctx: self.ctx.clone(),
            terms: self
                .terms
                .iter()
                .map(|(x, c)| (x.iter().zip(e).map(|(a, b)| a + b).collect(), c.clone()))
                .collect(),
        }
    }

    /// The substitution `t_i -> c_i t_i`.
    pub fn scale_substitute(&self, c: &[C]) -> Result<Self> {
        if c.len() != self.nvars {
            return Err(Error::DimensionMismatch("one scale per variable".into()));
        }
        let mut inv: Vec<Option<C>> = vec![None; c.len()];
        let mut out = Self::zero(self.nvars, &self.ctx);
        for (e, coef) in &self.terms {
            let mut x = coef.clone();
            for (i, &d) in e.iter().enumerate() {
                let base = if d < 0 {
                    if inv[i].is_none() {
                        inv[i] = Some(c[i].inverse()?);
                    }
                    inv[i].clone().unwrap()
                } else {
                    c[i].clone()
                };
                for _ in 0..d.unsigned_abs() {
                    x = x.mul(&base);
                }
            }
            out.add_term(e.clone(), &x);
        }
        Ok(out)
    }

    /// The derivation `t_i d/dt_i`.
    pub fn theta_deriv(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars, &self.ctx);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), &c.mul_int(e[i]));
        }
        out
    }

    /// `log_p |f|_rho` at `s = log_p rho`; `None` is minus infinity.
    pub fn gauss_lognorm(&self, s: &[Q]) -> LogNorm {
        self.terms.iter().map(|(e, c)| term_lognorm(c, e, s)).max().flatten()
    }

    /// `log_p` of the sup norm over the box.
    pub fn sup_lognorm(&self, bx: &LogRadiusBox) -> LogNorm {
        if self.is_zero() {
            return None;
        }
        bx.vertices().iter().map(|v| self.gauss_lognorm(v)).max().flatten()
    }

    /// Exponents attaining the Gauss norm at `s`, in lexicographic order.
    pub fn argmax(&self, s: &[Q]) -> Vec<Vec<i64>> {
        let best = self.gauss_lognorm(s);
        if best.is_none() {
            return Vec::new();
        }
        self.terms
            .iter()
            .filter(|(e, c)| term_lognorm(*c, e, s) == best)
            .map(|(e, _)| e.clone())
            .collect()
    }

    /// Lexicographic max minus lexicographic min of the norm-attaining exponents.
    pub fn width_vector(&self, s: &[Q]) -> Result<Vec<i64>> {
        let am = self.argmax(s);
        match (am.first(), am.last()) {
            (Some(lo), Some(hi)) => Ok(hi.iter().zip(lo).map(|(a, b)| a - b).collect()),
            _ => Err(Error::ZeroInput),
        }
    }

    /// The index of a monomial strictly dominating on the whole box, if any.
    pub fn is_unit_on_box(&self, bx: &LogRadiusBox) -> Result<Option<Vec<i64>>> {
        if self.is_zero() {
            return Err(Error::ZeroInput);
        }
        let verts = bx.vertices();
        let am = self.argmax(&verts[0]);
        if am.len() != 1 {
            return Ok(None);
        }
        let cand = &am[0];
        let cc = &self.terms[cand];
        for v in &verts {
            let top = term_lognorm(cc, cand, v);
            for (e, c) in &self.terms {
                if e != cand && term_lognorm(c, e, v) >= top {
                    return Ok(None);
                }
            }
        }
        Ok(Some(cand.clone()))
    }

    /// Truncated geometric-series inverse of a unit on `bx`, restricted to `window`.
    /// Returns the inverse together with the sup log-norm of `f * inv - 1` on `bx`.
    pub fn invert_unit(&self, bx: &LogRadiusBox, window: &Window) -> Result<(Self, LogNorm)> {
        let idx = self.is_unit_on_box(bx)?.ok_or(Error::NotUnit)?;
        let c = self.terms[&idx].clone();
        let cinv = c.inverse()?;
        let neg_idx: Vec<i64> = idx.iter().map(|x| -x).collect();
        let one = Self::one(self.nvars, &self.ctx);
        // f = c t^i (1 - x)
        let x = one.sub(&self.shift(&neg_idx).mul_coeff(&cinv));
        // inv = c^{-1} t^{-i} sum x^n; the powers live in window + i
        let xw: Window = window.iter().zip(&idx).map(|((a, b), i)| (a + i, b + i)).collect();
        let gap = x.sup_lognorm(bx);
        let target = -Q::from_integer(BigInt::from(C::prec_of(&self.ctx) as i64));
        let mut total = one.clip(&xw);
        let mut pow = one.clone();
        let max_rounds = match &gap {
            None => 0,
            Some(g) => {
                let g = -g.clone();
                let r = (-target.clone() / g).ceil().to_integer();
                r.abs().try_into().unwrap_or(4096usize).min(4096) + 1
            }
        };
        for _ in 0..max_rounds {
            pow = pow.mul(&x).clip(&xw);
            if pow.is_zero() {
                break;
            }
            total = total.add(&pow);
            if pow.sup_lognorm(bx).is_none_or(|v| v <= target) {
                break;
            }
        }
        let inv = total.shift(&neg_idx).mul_coeff(&cinv);
        let resid = self.mul(&inv).sub(&one).sup_lognorm(bx);
        Ok((inv, resid))
    }

    /// Splits by the degree of variable `var`: degree -> coefficient series in the other
    /// variables (with the same number of variables minus one).
    pub fn split_var(&self, var: usize) -> BTreeMap<i64, Self> {
        let mut out: BTreeMap<i64, Self> = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut rest = e.clone();
            let d = rest.remove(var);
            out.entry(d)
                .or_insert_with(|| Series::zero(self.nvars - 1, &self.ctx))
                .add_term(rest, c);
        }
        out
    }

    /// Inverse of [`Series::split_var`].
    pub fn join_var(nvars: usize, ctx: &C::Ctx, var: usize, parts: &BTreeMap<i64, Self>) -> Self {
        let mut out = Self::zero(nvars, ctx);
        for (d, s) in parts {
            for (e, c) in &s.terms {
                let mut full = e.clone();
                full.insert(var, *d);
                out.add_term(full, c);
            }
        }
        out
    }

    /// Equality at the tracked precision of the coefficients.
    pub fn eq_at_prec(&self, o: &Self) -> bool {
        self.sub(o).is_zero()
    }
}

impl LaurentSeries {
    pub fn padic_ctx(p: u64, prec: u32) -> PadicCtx {
        PadicCtx { p, prec }
    }

    /// Convenience constructor from integer coefficients in one or more variables.
    pub fn from_ints(p: u64, prec: u32, nvars: usize, terms: &[(Vec<i64>, i64)]) -> Self {
        let ctx = PadicCtx { p, prec };
        Series::from_terms(
            nvars,
            &ctx,
            terms
                .iter()
                .map(|(e, c)| (e.clone(), PadicScalar::from_i64(p, *c, prec))),
        )
    }

    /// One-variable polynomial `sum c_i t^(lo+i)`.
    pub fn from_coeffs_1(p: u64, prec: u32, lo: i64, coeffs: &[i64]) -> Self {
        let terms: Vec<(Vec<i64>, i64)> = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (vec![lo + i as i64], *c))
            .collect();
        Self::from_ints(p, prec, 1, &terms)
    }

    pub fn prec(&self) -> u32 {
        self.ctx.prec
    }

    /// Lifts the coefficients into the cyclotomic ring of the given level.
    pub fn to_cyc(&self, level: u32) -> CycSeries {
        let ctx = CycCtx {
            p: self.ctx.p,
            level,
            prec: self.ctx.prec,
        };
        self.map_coeffs(&ctx, |c| CycScalar::from_base(c, level))
    }
}

impl CycSeries {
    pub fn level(&self) -> u32 {
        self.ctx.level
    }

    /// The substitution `t_i -> zeta^(a_i) t_i`.
    pub fn substitute_roots(&self, a: &[u64]) -> Self {
        let n = self.ctx.p.pow(self.ctx.level) as i128;
        let mut out = Series::zero(self.nvars, &self.ctx);
        for (e, c) in &self.terms {
            let mut r: i128 = 0;
            for (x, y) in e.iter().zip(a) {
                r += *x as i128 * *y as i128;
            }
            out.add_term(e.clone(), &c.mul_root(r.rem_euclid(n) as u64));
        }
        out
    }

    /// Descends every coefficient to the base field.
    pub fn descend(&self) -> Result<LaurentSeries> {
        let ctx = PadicCtx {
            p: self.ctx.p,
            prec: self.ctx.prec,
        };
        let mut out = Series::zero(self.nvars, &ctx);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), &c.descend_to_base()?);
        }
        Ok(out)
    }

    /// Applies `zeta -> zeta^c` to the coefficients.
    pub fn galois(&self, c: u64) -> Self {
        self.map_coeffs(&self.ctx, |x| x.galois(c))
    }

    pub fn embed(&self) -> Self {
        let ctx = CycCtx {
            p: self.ctx.p,
            level: self.ctx.level + 1,
            prec: self.ctx.prec,
        };
        self.map_coeffs(&ctx, |x| x.embed())
    }
}

impl<C: Coeff> fmt::Display for Series<C>
where
    C: fmt::Display,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            for (i, d) in e.iter().enumerate() {
                if *d != 0 {
                    write!(f, "*t{}^{}", i + 1, d)?;
                }
            }
        }
        Ok(())
    }
}

/// Maximum of two log-norms.
pub fn lognorm_max(a: LogNorm, b: LogNorm) -> LogNorm {
    a.max(b)
}

/// Smallest index magnitude in variable `var`, `None` for zero.
pub fn min_abs_degree<C: Coeff>(f: &Series<C>, var: usize) -> Option<i64> {
    f.terms().map(|(e, _)| e[var].abs()).min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qf};

    fn f1(coeffs: &[i64], lo: i64) -> LaurentSeries {
        LaurentSeries::from_coeffs_1(3, 16, lo, coeffs)
    }

    #[test]
    fn products() {
        let a = f1(&[1, 1], 0);
        let b = f1(&[1, -1], 0);
        assert_eq!(a.mul(&b), f1(&[1, 0, -1], 0));
        let c = f1(&[3, 1], 0);
        assert_eq!(c.mul(&c), f1(&[9, 6, 1], 0));
    }

    #[test]
    fn gauss_norm_examples() {
        assert_eq!(LaurentSeries::zero(1, &PadicCtx { p: 3, prec: 8 }).gauss_lognorm(&[q(0)]), None);
        assert_eq!(f1(&[1, 3], 0).gauss_lognorm(&[q(0)]), Some(q(0)));
        assert_eq!(f1(&[3, 1], 0).gauss_lognorm(&[q(-1)]), Some(q(-1)));
        let bx = LogRadiusBox::new(vec![q(-2)], vec![q(0)]).unwrap();
        assert_eq!(f1(&[3, 1], 0).sup_lognorm(&bx), Some(q(0)));
    }

    #[test]
    fn widths() {
        let f = f1(&[3, 1], 0);
        assert_eq!(f.width_vector(&[q(-1)]).unwrap(), vec![1]);
        assert_eq!(f.mul(&f).width_vector(&[q(-1)]).unwrap(), vec![2]);
        assert_eq!(f1(&[0, 0, 5], 0).width_vector(&[q(0)]).unwrap(), vec![0]);
    }

    #[test]
    fn unit_detection() {
        let pt = LogRadiusBox::point(vec![q(0)]);
        assert_eq!(f1(&[1, 3], 0).is_unit_on_box(&pt).unwrap(), Some(vec![0]));
        assert_eq!(f1(&[0, 1], 0).is_unit_on_box(&pt).unwrap(), Some(vec![1]));
        let bx = LogRadiusBox::new(vec![q(-2)], vec![q(0)]).unwrap();
        assert_eq!(f1(&[3, 1], 0).is_unit_on_box(&bx).unwrap(), None);
    }

    #[test]
    fn geometric_inverse() {
        let pt = LogRadiusBox::point(vec![q(0)]);
        let (inv, res) = f1(&[1, 3], 0).invert_unit(&pt, &vec![(0, 3)]).unwrap();
        assert_eq!(inv, f1(&[1, -3, 9, -27], 0));
        assert_eq!(res, Some(q(-4)));
        let (inv, res) = f1(&[0, 1], 0).invert_unit(&pt, &vec![(-5, 5)]).unwrap();
        assert_eq!(inv, f1(&[1], -1));
        assert_eq!(res, None);
    }

    #[test]
    fn substitution_by_root() {
        let ctx = CycCtx { p: 3, level: 1, prec: 8 };
        let t2 = CycSeries::monomial(1, &ctx, vec![2], CycScalar::one(3, 1, 8));
        let z2 = t2.substitute_roots(&[1]);
        assert_eq!(z2.coeff(&[2]), CycScalar::root_power(3, 1, 2, 8));
    }

    #[test]
    fn shrink_bound_example() {
        let bx = LogRadiusBox::new(vec![q(-1)], vec![q(1)]).unwrap();
        let f = f1(&[1, 0, 0, 1], -1);
        let d = bx.default_shrink();
        assert_eq!(d, vec![qf(1, 2)]);
        let small = bx.shrink(&d).unwrap();
        let lhs = f.sup_lognorm(&small).unwrap();
        let rhs = f.sup_lognorm(&bx).unwrap() - qf(1, 2);
        assert!(lhs <= rhs);
    }
}
