//! Weierstrass-type factorisation over a width-zero polyannulus.
//!
//! The last variable `t_n` is the distinguished one; the first `n - 1` variables form the
//! coefficient ring `R`, which sits at the fixed radii `s[..n-1]`.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::laurent::{LaurentSeries, LogRadiusBox, PadicCtx, Series, Window};
use crate::linalg;
use crate::rat::{LogNorm, Q};
use crate::scalar::PadicScalar;

/// Outcome of a successful bidistinguished test.
#[derive(Clone, Debug, PartialEq)]
pub struct BidistReport {
    pub lower: i64,
    pub upper: i64,
    /// Coefficients of `t_n^lower` and `t_n^upper`, series in the first `n - 1` variables.
    pub f_lower: LaurentSeries,
    pub f_upper: LaurentSeries,
    /// Gap between `|f|` and the largest term of degree outside `[lower, upper]`.
    pub margin: Option<Q>,
    pub norm: Q,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Bidist {
    Yes(BidistReport),
    /// Names the extremal degree whose coefficient is not a unit in `R`.
    No { degree: i64, lower: i64, upper: i64 },
}

fn last(f: &LaurentSeries) -> usize {
    f.nvars() - 1
}

fn qi(x: i64) -> Q {
    Q::from_integer(BigInt::from(x))
}

/// Decides whether `f` is `t_n`-bidistinguished at the single radius `s`.
pub fn is_bidistinguished(f: &LaurentSeries, s: &[Q]) -> Result<Bidist> {
    if f.is_zero() {
        return Err(Error::ZeroInput);
    }
    if s.len() != f.nvars() || f.nvars() == 0 {
        return Err(Error::DimensionMismatch("radius must have one entry per variable".into()));
    }
    let n = last(f);
    let norm = f.gauss_lognorm(s).expect("nonzero");
    let parts = f.split_var(n);
    let rs = &s[..n];
    let mut attained = Vec::new();
    let mut outside: BTreeMap<i64, Q> = BTreeMap::new();
    for (d, g) in &parts {
        let v = g.gauss_lognorm(rs).expect("nonzero part") + &s[n] * qi(*d);
        if v == norm {
            attained.push(*d);
        } else {
            outside.insert(*d, v);
        }
    }
    let lower = *attained.first().unwrap();
    let upper = *attained.last().unwrap();
    let pt = LogRadiusBox::point(rs.to_vec());
    for d in [lower, upper] {
        if parts[&d].is_unit_on_box(&pt)?.is_none() {
            return Ok(Bidist::No { degree: d, lower, upper });
        }
    }
    let margin = outside
        .iter()
        .filter(|(d, _)| **d < lower || **d > upper)
        .map(|(_, v)| &norm - v)
        .min();
    Ok(Bidist::Yes(BidistReport {
        lower,
        upper,
        f_lower: parts[&lower].clone(),
        f_upper: parts[&upper].clone(),
        margin,
        norm,
    }))
}

fn require_bidist(f: &LaurentSeries, s: &[Q]) -> Result<BidistReport> {
    match is_bidistinguished(f, s)? {
        Bidist::Yes(r) => Ok(r),
        Bidist::No { degree, .. } => Err(Error::NotBidistinguished(format!(
            "coefficient of t_n^{degree} is not a unit"
        ))),
    }
}

/// The automorphism `t_i -> t_i (w t_n^s_exp)^(j^(n-i))` for `i < n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Shear {
    pub j: i64,
    pub w: PadicScalar,
    pub s_exp: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShearResult {
    pub shear: Shear,
    pub sheared: LaurentSeries,
    pub report: BidistReport,
}

impl Shear {
    fn weights(&self, n: usize) -> Vec<i64> {
        // weight of t_i (0-based) is j^(n-1-i) for i < n-1
        (0..n - 1).map(|i| self.j.pow((n - 1 - i) as u32)).collect()
    }

    fn apply_signed(&self, f: &LaurentSeries, sign: i64) -> Result<LaurentSeries> {
        let n = f.nvars();
        let wts = self.weights(n);
        let winv = self.w.inv()?;
        let mut out = Series::zero(n, f.ctx());
        for (e, c) in f.terms() {
            let k: i64 = e[..n - 1].iter().zip(&wts).map(|(a, b)| a * b).sum::<i64>() * sign;
            let mut e2 = e.clone();
            e2[n - 1] += self.s_exp * k;
            let base = if k >= 0 { &self.w } else { &winv };
            let mut coef = c.clone();
            for _ in 0..k.unsigned_abs() {
                coef = coef.mul(base);
            }
            out.add_term(e2, &coef);
        }
        Ok(out)
    }

    pub fn apply(&self, f: &LaurentSeries) -> Result<LaurentSeries> {
        self.apply_signed(f, 1)
    }

    pub fn invert(&self, f: &LaurentSeries) -> Result<LaurentSeries> {
        self.apply_signed(f, -1)
    }
}

fn shear_params(s_n: &Q) -> Result<(i64, i64)> {
    let s_exp: i64 = s_n
        .denom()
        .try_into()
        .map_err(|_| Error::NoShearExponent(crate::rat::fmt_q(s_n)))?;
    let e: i64 = (s_n * qi(s_exp))
        .to_integer()
        .try_into()
        .map_err(|_| Error::NoShearExponent(crate::rat::fmt_q(s_n)))?;
    Ok((s_exp, e))
}

fn attaining_bound(f: &LaurentSeries, s: &[Q]) -> i64 {
    f.argmax(s).iter().flat_map(|e| e.iter().map(|x| x.abs())).max().unwrap_or(0)
}

/// Makes `f` bidistinguished by a monomial shear with `j = 3L + 1`.
pub fn shear_to_bidistinguished(f: &LaurentSeries, s: &[Q]) -> Result<ShearResult> {
    let l = attaining_bound(f, s);
    shear_with_j(f, s, 3 * l + 1)
}

/// One `j` that works for every input (`j = 3 max L + 1`).
pub fn shear_batch(fs: &[LaurentSeries], s: &[Q]) -> Result<Vec<ShearResult>> {
    let l = fs.iter().map(|f| attaining_bound(f, s)).max().unwrap_or(0);
    fs.iter().map(|f| shear_with_j(f, s, 3 * l + 1)).collect()
}

fn shear_with_j(f: &LaurentSeries, s: &[Q], j: i64) -> Result<ShearResult> {
    if f.is_zero() {
        return Err(Error::ZeroInput);
    }
    if f.nvars() < 2 {
        return Err(Error::DimensionMismatch("shearing needs at least two variables".into()));
    }
    let n = f.nvars();
    let (s_exp, e) = shear_params(&s[n - 1])?;
    let prec = f.prec();
    let w = PadicScalar::p_power(f.p(), e, prec);
    let shear = Shear { j, w, s_exp };
    let sheared = shear.apply(f)?;
    let report = require_bidist(&sheared, s)?;
    Ok(ShearResult { shear, sheared, report })
}

/// `f = t_n^shift * g * h` with `g - 1` in positive degrees and `h` in degrees `<= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitResult {
    pub shift: i64,
    pub g: LaurentSeries,
    pub h: LaurentSeries,
    pub residual: LogNorm,
    /// Residual log-norm after each round.
    pub trace: Vec<LogNorm>,
    pub rounds: usize,
}

pub const DEFAULT_BUDGET: usize = 64;

fn default_window(f: &LaurentSeries, pad: i64) -> Window {
    f.support_window()
        .unwrap_or_else(|| vec![(0, 0); f.nvars()])
        .into_iter()
        .map(|(a, b)| (a - pad, b + pad))
        .collect()
}

fn part_by_last<F: Fn(i64) -> bool>(f: &LaurentSeries, keep: F) -> LaurentSeries {
    let n = last(f);
    f.filter(|e| keep(e[n]))
}

/// Constant coefficient in `t_n`, as a series in all `n` variables.
fn t0_part(f: &LaurentSeries) -> LaurentSeries {
    part_by_last(f, |d| d == 0)
}

/// Two-sided splitting of a bidistinguished series by fixed-point iteration.
pub fn split_tails(f: &LaurentSeries, s: &[Q], window: Option<&Window>, budget: usize) -> Result<SplitResult> {
    let rep = require_bidist(f, s)?;
    let n = last(f);
    let mut shift_e = vec![0; f.nvars()];
    shift_e[n] = -rep.upper;
    let ff = f.shift(&shift_e);
    let win = window.cloned().unwrap_or_else(|| default_window(&ff, 16));
    let tol = -qi(f.prec() as i64);
    let rs = &s[..n];
    let rbox = LogRadiusBox::point(rs.to_vec());
    let one = LaurentSeries::one(f.nvars(), f.ctx());
    let mut g = one.clone();
    let mut h = part_by_last(&ff, |d| d <= 0);
    let mut trace = Vec::new();
    let mut rounds = 0;
    let pt = LogRadiusBox::point(s.to_vec());
    for _ in 0..budget {
        let e = ff.sub(&g.mul(&h)).clip(&win);
        let r = e.sup_lognorm(&pt);
        trace.push(r.clone());
        if r.as_ref().is_none_or(|v| *v <= tol) {
            break;
        }
        rounds += 1;
        let h0 = t0_part(&h);
        let h0r = drop_last(&h0);
        let (h0inv, _) = h0r.invert_unit(&rbox, &drop_last_window(&win))?;
        let h0inv = add_last(&h0inv);
        let dg = part_by_last(&e, |d| d > 0).mul(&h0inv).clip(&win);
        let dh = part_by_last(&e, |d| d <= 0);
        g = g.add(&dg);
        h = h.add(&dh);
    }
    let residual = ff.sub(&g.mul(&h)).sup_lognorm(&pt);
    if residual.as_ref().is_some_and(|v| *v > tol) && rounds >= budget {
        return Err(Error::BudgetExhausted(format!(
            "split stopped at residual {} after {budget} rounds",
            crate::rat::fmt_lognorm(&residual)
        )));
    }
    Ok(SplitResult {
        shift: rep.upper,
        g,
        h,
        residual,
        trace,
        rounds,
    })
}

/// Removes the (degree-0) last variable.
fn drop_last(f: &LaurentSeries) -> LaurentSeries {
    let n = last(f);
    let mut out = Series::zero(n, f.ctx());
    for (e, c) in f.terms() {
        out.add_term(e[..n].to_vec(), c);
    }
    out
}

fn add_last(f: &LaurentSeries) -> LaurentSeries {
    let mut out = Series::zero(f.nvars() + 1, f.ctx());
    for (e, c) in f.terms() {
        let mut e2 = e.clone();
        e2.push(0);
        out.add_term(e2, c);
    }
    out
}

fn drop_last_window(w: &Window) -> Window {
    w[..w.len() - 1].to_vec()
}

/// `t_n -> t_n^{-1}`.
pub fn reflect_last(f: &LaurentSeries) -> LaurentSeries {
    let n = last(f);
    let mut out = Series::zero(f.nvars(), f.ctx());
    for (e, c) in f.terms() {
        let mut e2 = e.clone();
        e2[n] = -e2[n];
        out.add_term(e2, c);
    }
    out
}

/// `f = P u` with `P` monic in `t_n` of degree `upper - lower` and `u` a unit.
#[derive(Clone, Debug, PartialEq)]
pub struct Factorization {
    pub p_poly: LaurentSeries,
    pub unit: LaurentSeries,
    pub lower: i64,
    pub upper: i64,
    /// `log_p |f - P u|` at the radius.
    pub residual: LogNorm,
    /// `log_p` of the digits of `f - P u` that the tracked precision cannot resolve.
    pub precision_floor: LogNorm,
    pub method: &'static str,
}

impl Factorization {
    /// The larger of the residual and the precision floor.
    pub fn certified_residual(&self) -> LogNorm {
        self.residual.clone().max(self.precision_floor.clone())
    }

    /// [`Factorization::certified_residual`] relative to `|f|`.
    pub fn relative_residual(&self, f: &LaurentSeries, s: &[Q]) -> LogNorm {
        let n = f.gauss_lognorm(s)?;
        self.certified_residual().map(|v| v - n)
    }
}

/// `log_p` of the uncertainty of the stored coefficients at `s`.
pub fn precision_floor(f: &LaurentSeries, s: &[Q]) -> LogNorm {
    f.terms()
        .filter_map(|(e, c)| {
            let a = c.abs_prec()?;
            let mut v = -qi(a);
            for (i, x) in e.iter().zip(s) {
                v += x * qi(*i);
            }
            Some(v)
        })
        .max()
}

fn product_floor(a: &LaurentSeries, b: &LaurentSeries, s: &[Q]) -> LogNorm {
    let x = crate::rat::lognorm_add(&precision_floor(a, s), &b.gauss_lognorm(s));
    let y = crate::rat::lognorm_add(&precision_floor(b, s), &a.gauss_lognorm(s));
    x.max(y)
}

/// Weierstrass preparation at a single radius.
pub fn factor_monic_times_unit(f: &LaurentSeries, s: &[Q]) -> Result<Factorization> {
    let rep = require_bidist(f, s)?;
    if f.nvars() == 1 {
        if s[0].is_integer() && !s[0].is_zero() {
            // rescale t = p^{-s} t' so the circle becomes |t'| = 1
            let k: i64 = s[0].to_integer().try_into().map_err(|_| Error::WindowOverflow("radius".into()))?;
            let fs = scale_var(f, -k);
            let rep0 = require_bidist(&fs, &[Q::zero()])?;
            let r = factor_newton_1(&fs, &[Q::zero()], &rep0)?;
            let pp = scale_var(&r.p_poly, k);
            let d = rep.upper - rep.lower;
            let pp = pp.mul_coeff(&PadicScalar::p_power(f.p(), -k * d, f.prec()));
            let u = scale_var(&r.unit, k).mul_coeff(&PadicScalar::p_power(f.p(), k * d, f.prec()));
            return Ok(finish(f, s, pp, u, &rep, "newton"));
        }
        factor_newton_1(f, s, &rep)
    } else {
        factor_by_splitting(f, s, &rep, None)
    }
}

fn finish(f: &LaurentSeries, s: &[Q], pp: LaurentSeries, u: LaurentSeries, rep: &BidistReport, method: &'static str) -> Factorization {
    let e = f.sub(&pp.mul(&u));
    let residual = e.sup_lognorm(&LogRadiusBox::point(s.to_vec()));
    let floor = product_floor(&pp, &u, s).max(precision_floor(f, s));
    Factorization {
        p_poly: pp,
        unit: u,
        lower: rep.lower,
        upper: rep.upper,
        residual,
        precision_floor: floor,
        method,
    }
}

/// `f(p^m t)` in one variable.
fn scale_var(f: &LaurentSeries, m: i64) -> LaurentSeries {
    let mut out = LaurentSeries::zero(1, f.ctx());
    for (e, c) in f.terms() {
        out.add_term(e.clone(), &c.mul_p_power(m * e[0]));
    }
    out
}

/// One variable: Newton iteration on `u dP + P du = f - P u`, each step an exact square
/// linear solve because `u = f / P` is itself a Laurent polynomial for planted inputs.
fn factor_newton_1(f: &LaurentSeries, s: &[Q], rep: &BidistReport) -> Result<Factorization> {
    let p = f.p();
    let prec = f.prec();
    let ctx = f.ctx().clone();
    let d = rep.upper - rep.lower;
    let fmu = rep.f_upper.constant_term();
    let fmu_inv = fmu.inv()?;
    let mut pp = LaurentSeries::zero(1, &ctx);
    for k in rep.lower..=rep.upper {
        pp.add_term(vec![k - rep.lower], &f.coeff(&[k]).mul(&fmu_inv));
    }
    let mut u = LaurentSeries::monomial(1, &ctx, vec![rep.lower], fmu.clone());
    if d == 0 {
        return Ok(finish(f, s, LaurentSeries::one(1, &ctx), f.clone(), rep, "newton"));
    }
    let w = f.support_window().expect("nonzero");
    let (lo, hi) = w[0];
    let pt = LogRadiusBox::point(s.to_vec());
    let fnorm = rep.norm.clone();
    let target = &fnorm - qi(prec as i64);
    let mut best: Option<(LogNorm, LaurentSeries, LaurentSeries)> = None;
    for _ in 0..(2 * (prec as usize).max(8)) {
        let e = f.sub(&pp.mul(&u));
        let r = e.sup_lognorm(&pt);
        if best.as_ref().is_none_or(|(b, _, _)| r < *b) {
            best = Some((r.clone(), pp.clone(), u.clone()));
        } else {
            break;
        }
        if r.as_ref().is_none_or(|v| *v <= target) {
            break;
        }
        // unknowns: dP_0..dP_{d-1}, du_lo..du_{hi-d}; equations: degrees lo..hi
        let nu = (hi - d - lo + 1).max(0) as usize;
        let neq = (hi - lo + 1) as usize;
        let nunk = d as usize + nu;
        if nunk != neq {
            return Err(Error::WindowOverflow("inconsistent Newton system".into()));
        }
        let zero = PadicScalar::zero(p);
        let mut a = vec![vec![zero.clone(); nunk]; neq];
        for i in 0..d as usize {
            for (ue, uc) in u.terms() {
                let k = ue[0] + i as i64;
                if k >= lo && k <= hi {
                    a[(k - lo) as usize][i] = uc.clone();
                }
            }
        }
        for jj in 0..nu {
            let j = lo + jj as i64;
            for (pe, pc) in pp.terms() {
                let k = pe[0] + j;
                if k >= lo && k <= hi {
                    a[(k - lo) as usize][d as usize + jj] = pc.clone();
                }
            }
        }
        let b: Vec<PadicScalar> = (lo..=hi).map(|k| e.coeff(&[k])).collect();
        let x = match linalg::solve(&a, &b) {
            Ok(x) => x,
            Err(_) => break,
        };
        for i in 0..d as usize {
            pp.add_term(vec![i as i64], &x[i]);
        }
        for jj in 0..nu {
            u.add_term(vec![lo + jj as i64], &x[d as usize + jj]);
        }
    }
    let (_, pp, u) = best.expect("at least one round");
    Ok(finish(f, s, pp, u, rep, "newton"))
}

/// Several variables: split off the forward tail, then the backward tail of what remains.
pub fn factor_by_splitting(f: &LaurentSeries, s: &[Q], rep: &BidistReport, window: Option<&Window>) -> Result<Factorization> {
    let n = last(f);
    let nv = f.nvars();
    let d = rep.upper - rep.lower;
    let first = split_tails(f, s, window, DEFAULT_BUDGET)?;
    // h1 has its dominant band in degrees [lower - upper, 0]
    let mut sh = vec![0; nv];
    sh[n] = -d;
    let refl = reflect_last(&first.h).shift(&sh);
    let mut s2 = s.to_vec();
    s2[n] = -s2[n].clone();
    let second = split_tails(&refl, &s2, window, DEFAULT_BUDGET)?;
    // reflect back: h1 t^d = reflect(g2) * reflect(h2 t^{shift2})
    let mut sh2 = vec![0; nv];
    sh2[n] = second.shift;
    let q = reflect_last(&second.h.shift(&sh2));
    let g2r = reflect_last(&second.g);
    let qd = q.split_var(n).get(&d).cloned().ok_or(Error::PivotFailure("no leading coefficient".into()))?;
    let rbox = LogRadiusBox::point(s[..n].to_vec());
    let win = window.cloned().unwrap_or_else(|| default_window(f, 16));
    let (qd_inv, _) = qd.invert_unit(&rbox, &drop_last_window(&win))?;
    let qd_full = add_last(&qd);
    let qd_inv_full = add_last(&qd_inv);
    let pp = q.mul(&qd_inv_full).clip(&win);
    let mut lower_shift = vec![0; nv];
    lower_shift[n] = rep.lower;
    let u = first.g.mul(&g2r).mul(&qd_full).shift(&lower_shift).clip(&win);
    let pp = monic_clean(&pp, n, d);
    Ok(finish(f, s, pp, u, rep, "split"))
}

/// Forces the leading coefficient to exactly one and drops stray degrees.
fn monic_clean(pp: &LaurentSeries, n: usize, d: i64) -> LaurentSeries {
    let mut out = pp.filter(|e| e[n] >= 0 && e[n] < d);
    let mut lead = vec![0; pp.nvars()];
    lead[n] = d;
    out.add_term(lead, &PadicScalar::one(pp.p(), pp.prec()));
    out
}

/// Random planted product `P u` in one variable for testing and the self-test suite.
/// `P` is monic of degree `deg` with roots on `|t| = p^s`; `u = c t^e (1 + x)` with
/// `|x| < 1` there.
pub fn planted_product<R: rand::Rng>(rng: &mut R, p: u64, prec: u32, s: i64, deg: usize) -> (LaurentSeries, LaurentSeries, LaurentSeries) {
    let ctx = PadicCtx { p, prec };
    let unit = |rng: &mut R| -> BigInt {
        loop {
            let x: i64 = rng.gen_range(1..(p as i64).pow(3));
            if x % p as i64 != 0 {
                return BigInt::from(if rng.gen_bool(0.5) { x } else { -x });
            }
        }
    };
    let mut pp = LaurentSeries::one(1, &ctx);
    for _ in 0..deg {
        // root r with v(r) = -s
        let r = PadicScalar::new(p, -s, unit(rng), prec);
        let lin = Series::from_terms(1, &ctx, vec![(vec![1], PadicScalar::one(p, prec)), (vec![0], r.neg())]);
        pp = pp.mul(&lin);
    }
    let c = PadicScalar::new(p, rng.gen_range(-2..=2), unit(rng), prec);
    let e: i64 = rng.gen_range(-3..=3);
    let mut x = LaurentSeries::zero(1, &ctx);
    let span = 6 - deg as i64;
    for k in -span..=span {
        if k == 0 || rng.gen_bool(0.4) {
            continue;
        }
        // |x_k| rho^k < 1  <=>  v(x_k) > k s
        let v = k * s + rng.gen_range(1..=3);
        x.add_term(vec![k], &PadicScalar::new(p, v, unit(rng), prec));
    }
    let u = LaurentSeries::one(1, &ctx)
        .add(&x)
        .mul(&LaurentSeries::monomial(1, &ctx, vec![e], c));
    (pp.mul(&u), pp, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qf};

    fn f1(c: &[i64], lo: i64) -> LaurentSeries {
        LaurentSeries::from_coeffs_1(3, 24, lo, c)
    }

    #[test]
    fn bidist_examples() {
        match is_bidistinguished(&f1(&[1, 1, 1], -1), &[q(0)]).unwrap() {
            Bidist::Yes(r) => {
                assert_eq!((r.lower, r.upper), (-1, 1));
                assert_eq!(r.margin, None);
            }
            other => panic!("{other:?}"),
        }
        match is_bidistinguished(&f1(&[3, 1], 0), &[q(0)]).unwrap() {
            Bidist::Yes(r) => {
                assert_eq!((r.lower, r.upper), (1, 1));
                assert_eq!(r.margin, Some(q(1)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shear_examples() {
        let f = LaurentSeries::from_ints(3, 16, 2, &[(vec![1, 0], 1), (vec![0, 1], 1)]);
        let r = shear_to_bidistinguished(&f, &[q(0), q(0)]).unwrap();
        assert_eq!(r.shear.j, 4);
        assert_eq!((r.report.lower, r.report.upper), (1, 4));
        let want = LaurentSeries::from_ints(3, 16, 2, &[(vec![1, 4], 1), (vec![0, 1], 1)]);
        assert_eq!(r.sheared, want);
        assert_eq!(r.shear.invert(&r.sheared).unwrap(), f);
        let g = LaurentSeries::from_ints(3, 16, 2, &[(vec![1, 0], 1), (vec![0, 1], 3)]);
        let r = shear_to_bidistinguished(&g, &[q(0), q(-1)]).unwrap();
        let degs: Vec<i64> = r.sheared.terms().map(|(e, _)| e[1]).collect();
        assert_eq!(degs, vec![1, 4]);
    }

    #[test]
    fn split_examples() {
        let s = [q(0)];
        let r = split_tails(&f1(&[5], 0), &s, None, 64).unwrap();
        assert_eq!(r.g, f1(&[1], 0));
        let r = split_tails(&f1(&[3, 1], -1), &s, None, 64).unwrap();
        assert_eq!(r.g, f1(&[1], 0));
        assert_eq!(r.h, f1(&[3, 1], -1));
        let prod = f1(&[1, 3], 0).mul(&f1(&[3, 1], -1));
        let r = split_tails(&prod, &s, None, 64).unwrap();
        assert!(r.g.eq_at_prec(&f1(&[1, 3], 0)));
        assert!(r.h.eq_at_prec(&f1(&[3, 1], -1)));
        assert!(r.residual.is_none_or(|v| v <= q(-23)));
    }

    #[test]
    fn factor_examples() {
        let r = factor_monic_times_unit(&f1(&[1, 1, 1], -1), &[q(0)]).unwrap();
        assert_eq!(r.p_poly, f1(&[1, 1, 1], 0));
        assert_eq!(r.unit, f1(&[1], -1));
        assert_eq!(r.residual, None);
        let r = factor_monic_times_unit(&f1(&[1, 3], 0), &[q(0)]).unwrap();
        assert_eq!(r.p_poly, f1(&[1], 0));
        assert_eq!(r.unit, f1(&[1, 3], 0));
        let r = factor_monic_times_unit(&f1(&[3, 1], 0), &[qf(-1, 2)]).unwrap();
        assert_eq!((r.lower, r.upper), (1, 1));
        assert_eq!(r.p_poly, f1(&[1], 0));
    }

    #[test]
    fn planted_products_recover() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..40 {
            let p = [3u64, 5][trial % 2];
            let s = [0i64, -1][(trial / 2) % 2];
            let deg = trial % 4;
            let (f, pp, u) = planted_product(&mut rng, p, 32, s, deg);
            let r = factor_monic_times_unit(&f, &[q(s)]).unwrap();
            assert_eq!(r.upper - r.lower, deg as i64, "trial {trial}");
            let cr = r.certified_residual();
            let fnorm = f.gauss_lognorm(&[q(s)]).unwrap();
            assert!(cr.clone().is_none_or(|v| v - &fnorm <= q(-30)), "trial {trial}: {:?} {:?} f={} P={} u={}", r.residual, r.precision_floor, f, r.p_poly, r.unit);
            let sq = [q(s)];
            for (got, want) in [(&r.p_poly, &pp), (&r.unit, &u)] {
                let d = got.sub(want).gauss_lognorm(&sq);
                let bound = want.gauss_lognorm(&sq).unwrap() - q(28);
                assert!(d.clone().is_none_or(|v| v <= bound), "trial {trial}: {d:?}");
            }
        }
    }
}
