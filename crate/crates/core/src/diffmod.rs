//! Differential modules with connection matrices for `t_i d/dt_i`, standard forms,
//! gauge twists and the semilinear action of tuples of `p`-power roots of unity.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::expcalc::{Coord, ExponentMultiset};
use crate::laurent::{CycCtx, CycSeries, LaurentSeries, LogRadiusBox, PadicCtx};
use crate::matrix::Matrix;
use crate::rat::{LogNorm, Q};
use crate::scalar::{phi, ppow_u64, CycScalar, PadicScalar};

pub(crate) fn coord_scalar(c: &Coord, p: u64, prec: u32) -> PadicScalar {
    match c {
        Coord::Rat(q) => PadicScalar::from_rational(p, q, prec),
        Coord::Padic(x) => x.clone(),
    }
}

fn coord_is_integral(c: &Coord, p: u64) -> bool {
    match c {
        Coord::Rat(q) => !(q.denom() % p).is_zero(),
        Coord::Padic(x) => x.valuation().is_none_or(|v| v >= 0),
    }
}

/// Constant connection `Λ_i + S_i` per direction with diagonal `Λ_i` and nilpotent `S_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardForm {
    pub p: u64,
    pub prec: u32,
    pub lambda: ExponentMultiset,
    pub nilpotent: Vec<Matrix<PadicScalar>>,
}

impl StandardForm {
    pub fn new(lambda: ExponentMultiset, nilpotent: Vec<Matrix<PadicScalar>>, prec: u32) -> Result<Self> {
        let p = lambda.p;
        let m = lambda.len();
        let n = lambda.dim();
        if m == 0 {
            return Err(Error::InvalidStandardForm("rank zero".into()));
        }
        if nilpotent.len() != n {
            return Err(Error::InvalidStandardForm(format!("{} nilpotent matrices for {n} directions", nilpotent.len())));
        }
        if nilpotent.iter().any(|s| s.rows() != m || s.cols() != m) {
            return Err(Error::InvalidStandardForm("nilpotent matrix has the wrong size".into()));
        }
        for e in &lambda.entries {
            if e.coords.iter().any(|c| !coord_is_integral(c, p)) {
                return Err(Error::InvalidStandardForm(format!("exponent {e} is not a p-adic integer")));
            }
        }
        let sf = StandardForm { p, prec, lambda, nilpotent };
        for (i, s) in sf.nilpotent.iter().enumerate() {
            if !s.pow(m as u32).is_zero() {
                return Err(Error::InvalidStandardForm(format!("S_{} is not nilpotent", i + 1)));
            }
        }
        let cs: Vec<_> = (0..n).map(|i| sf.constant(i)).collect();
        for i in 0..n {
            for j in i + 1..n {
                if !cs[i].commutator(&cs[j]).is_zero() {
                    return Err(Error::InvalidStandardForm(format!(
                        "directions {} and {} do not commute",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(sf)
    }

    /// Diagonal standard form with rational exponents and no nilpotent part.
    pub fn diagonal(p: u64, prec: u32, lambda: &[Vec<Q>]) -> Result<Self> {
        let a = ExponentMultiset::from_rationals(p, lambda)?;
        let m = a.len();
        let n = a.dim();
        let z = PadicScalar::zero(p);
        Self::new(a, vec![Matrix::zeros(m, m, &z); n], prec)
    }

    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    pub fn nvars(&self) -> usize {
        self.lambda.dim()
    }

    pub fn lambda_matrix(&self, i: usize) -> Matrix<PadicScalar> {
        Matrix::diag(
            self.lambda
                .entries
                .iter()
                .map(|e| coord_scalar(&e.coords[i], self.p, self.prec))
                .collect(),
        )
    }

    /// `Λ_i + S_i`.
    pub fn constant(&self, i: usize) -> Matrix<PadicScalar> {
        self.lambda_matrix(i).add(&self.nilpotent[i])
    }

    fn ctx(&self) -> PadicCtx {
        PadicCtx { p: self.p, prec: self.prec }
    }

    pub fn dual(&self) -> Self {
        let lambda = ExponentMultiset {
            p: self.p,
            entries: self.lambda.entries.iter().map(|e| e.neg()).collect(),
        };
        StandardForm {
            p: self.p,
            prec: self.prec,
            lambda,
            nilpotent: self.nilpotent.iter().map(|s| s.transpose().neg()).collect(),
        }
    }

    pub fn tensor(&self, o: &Self) -> Result<Self> {
        let mut entries = Vec::new();
        for a in &self.lambda.entries {
            for b in &o.lambda.entries {
                entries.push(a.add(b, self.p)?);
            }
        }
        let ia = Matrix::identity(self.rank(), &PadicScalar::one(self.p, self.prec));
        let ib = Matrix::identity(o.rank(), &PadicScalar::one(self.p, self.prec));
        let nil = self
            .nilpotent
            .iter()
            .zip(&o.nilpotent)
            .map(|(sa, sb)| sa.kron(&ib).add(&ia.kron(sb)))
            .collect::<Vec<_>>();
        Ok(StandardForm {
            p: self.p,
            prec: self.prec.min(o.prec),
            lambda: ExponentMultiset::new(self.p, entries)?,
            nilpotent: nil,
        })
    }

    pub fn direct_sum(&self, o: &Self) -> Result<Self> {
        let mut entries = self.lambda.entries.clone();
        entries.extend(o.lambda.entries.iter().cloned());
        Ok(StandardForm {
            p: self.p,
            prec: self.prec.min(o.prec),
            lambda: ExponentMultiset::new(self.p, entries)?,
            nilpotent: self
                .nilpotent
                .iter()
                .zip(&o.nilpotent)
                .map(|(a, b)| a.block_diag(b))
                .collect(),
        })
    }
}

/// How a module's connection came about.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    General,
    /// `Θ_i = W^{-1}(Λ_i + S_i)W + W^{-1} t_i∂_i W` with an exactly invertible twist `W`.
    Certified {
        standard: StandardForm,
        twist: Matrix<LaurentSeries>,
        twist_inv: Matrix<LaurentSeries>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiffModule {
    pub p: u64,
    pub prec: u32,
    pub nvars: usize,
    pub rank: usize,
    pub theta: Vec<Matrix<LaurentSeries>>,
    pub domain: LogRadiusBox,
    pub provenance: Provenance,
}

/// Gauge transform `W^{-1} Θ W + W^{-1} t_i∂_i W` for every direction.
pub fn gauge(theta: &[Matrix<LaurentSeries>], w: &Matrix<LaurentSeries>, w_inv: &Matrix<LaurentSeries>) -> Vec<Matrix<LaurentSeries>> {
    theta
        .iter()
        .enumerate()
        .map(|(i, th)| w_inv.mul(&th.mul(w)).add(&w_inv.mul(&w.theta_deriv(i))))
        .collect()
}

/// `t_i∂_i Θ_j - t_j∂_j Θ_i + [Θ_i, Θ_j]` over all pairs, `None` when every one vanishes.
pub fn integrability_defect(theta: &[Matrix<LaurentSeries>], bx: &LogRadiusBox) -> LogNorm {
    let mut worst: LogNorm = None;
    for i in 0..theta.len() {
        for j in i + 1..theta.len() {
            let d = theta[j]
                .theta_deriv(i)
                .sub(&theta[i].theta_deriv(j))
                .add(&theta[i].commutator(&theta[j]));
            worst = worst.max(d.sup_lognorm(bx));
        }
    }
    worst
}

/// Exact inverse of a matrix whose determinant is a single monomial.
pub fn exact_inverse(u: &Matrix<LaurentSeries>) -> Option<Matrix<LaurentSeries>> {
    if !u.is_square() {
        return None;
    }
    let d = u.det();
    if d.len() != 1 {
        return None;
    }
    let (e, c) = d.terms().next()?;
    let cinv = c.inv().ok()?;
    let neg: Vec<i64> = e.iter().map(|x| -x).collect();
    let dinv = LaurentSeries::monomial(d.nvars(), d.ctx(), neg, cinv);
    Some(u.adjugate().map(|x| x.mul(&dinv)))
}

fn constant_series(m: &Matrix<PadicScalar>, n: usize, ctx: &PadicCtx) -> Matrix<LaurentSeries> {
    m.map(|x| LaurentSeries::constant(n, ctx, x.clone()))
}

impl DiffModule {
    /// A module with no certificate; integrability is checked.
    pub fn general(p: u64, prec: u32, theta: Vec<Matrix<LaurentSeries>>, domain: LogRadiusBox) -> Result<Self> {
        let nvars = domain.nvars();
        if theta.len() != nvars || nvars == 0 {
            return Err(Error::DimensionMismatch("one connection matrix per direction".into()));
        }
        let rank = theta[0].rows();
        if theta.iter().any(|t| t.rows() != rank || t.cols() != rank) {
            return Err(Error::DimensionMismatch("connection matrices differ in size".into()));
        }
        if theta.iter().flat_map(|t| t.entries()).any(|x| x.nvars() != nvars || x.p() != p) {
            return Err(Error::DimensionMismatch("entries disagree with the header".into()));
        }
        if integrability_defect(&theta, &domain).is_some() {
            return Err(Error::InvalidStandardForm("connection is not integrable".into()));
        }
        Ok(DiffModule {
            p,
            prec,
            nvars,
            rank,
            theta,
            domain,
            provenance: Provenance::General,
        })
    }

    /// `Θ_i = Λ_i + S_i` on the unit circle (log-radius box `{0}^n`).
    pub fn from_standard_form(sf: StandardForm) -> Result<Self> {
        let n = sf.nvars();
        Self::from_standard_form_on(sf, LogRadiusBox::point(vec![Q::from_integer(0.into()); n]))
    }

    pub fn from_standard_form_on(sf: StandardForm, domain: LogRadiusBox) -> Result<Self> {
        let sf = StandardForm::new(sf.lambda, sf.nilpotent, sf.prec)?;
        let n = sf.nvars();
        if domain.nvars() != n {
            return Err(Error::DimensionMismatch("box dimension".into()));
        }
        let ctx = sf.ctx();
        let theta: Vec<_> = (0..n).map(|i| constant_series(&sf.constant(i), n, &ctx)).collect();
        let id = Matrix::identity(sf.rank(), &LaurentSeries::one(n, &ctx));
        Ok(DiffModule {
            p: sf.p,
            prec: sf.prec,
            nvars: n,
            rank: sf.rank(),
            theta,
            domain,
            provenance: Provenance::Certified {
                standard: sf,
                twist: id.clone(),
                twist_inv: id,
            },
        })
    }

    pub fn is_certified(&self) -> bool {
        matches!(self.provenance, Provenance::Certified { .. })
    }

    pub fn standard_form(&self) -> Option<&StandardForm> {
        match &self.provenance {
            Provenance::Certified { standard, .. } => Some(standard),
            Provenance::General => None,
        }
    }

    pub fn ctx(&self) -> PadicCtx {
        PadicCtx { p: self.p, prec: self.prec }
    }

    /// Gauge transform by `u`. Certification survives when `det u` is a monomial, so
    /// that the composed twist keeps an exact inverse; otherwise the result is general.
    pub fn apply_twist(&self, u: &Matrix<LaurentSeries>, domain: &LogRadiusBox) -> Result<Self> {
        if u.rows() != self.rank || u.cols() != self.rank {
            return Err(Error::DimensionMismatch("twist size".into()));
        }
        let d = u.det();
        if d.is_zero() || d.is_unit_on_box(domain)?.is_none() {
            return Err(Error::NotUnit);
        }
        let (u_inv, exact) = match exact_inverse(u) {
            Some(inv) => (inv, true),
            None => {
                let win = u.padded_window(16);
                let (inv, _) = u.inverse_on_box(domain, &win)?;
                (inv, false)
            }
        };
        let theta = gauge(&self.theta, u, &u_inv);
        let provenance = match (&self.provenance, exact) {
            (Provenance::Certified { standard, twist, twist_inv }, true) => Provenance::Certified {
                standard: standard.clone(),
                twist: twist.mul(u),
                twist_inv: u_inv.mul(twist_inv),
            },
            _ => Provenance::General,
        };
        Ok(DiffModule {
            theta,
            domain: domain.clone(),
            provenance,
            ..self.clone()
        })
    }

    /// Re-derives `Θ` from the certificate and compares at tracked precision.
    pub fn check_certificate(&self) -> Result<()> {
        if let Provenance::Certified { standard, twist, twist_inv } = &self.provenance {
            let ctx = self.ctx();
            let base: Vec<_> = (0..self.nvars)
                .map(|i| constant_series(&standard.constant(i), self.nvars, &ctx))
                .collect();
            let id = Matrix::identity(self.rank, &LaurentSeries::one(self.nvars, &ctx));
            if !twist.mul(twist_inv).eq_at_prec(&id) {
                return Err(Error::CertificationFailed("twist inverse is not exact".into()));
            }
            if twist.det().is_unit_on_box(&self.domain)?.is_none() {
                return Err(Error::NotUnit);
            }
            let want = gauge(&base, twist, twist_inv);
            if want.iter().zip(&self.theta).any(|(a, b)| !a.eq_at_prec(b)) {
                return Err(Error::CertificationFailed("connection differs from the twisted standard form".into()));
            }
        }
        Ok(())
    }

    fn combine_check(&self, o: &Self) -> Result<()> {
        if self.p != o.p || self.nvars != o.nvars {
            return Err(Error::DimensionMismatch("modules live over different rings".into()));
        }
        if self.domain != o.domain {
            return Err(Error::DimensionMismatch("boxes differ".into()));
        }
        Ok(())
    }

    pub fn dual(&self) -> Self {
        let theta = self.theta.iter().map(|t| t.transpose().neg()).collect();
        let provenance = match &self.provenance {
            Provenance::Certified { standard, twist, twist_inv } => Provenance::Certified {
                standard: standard.dual(),
                twist: twist_inv.transpose(),
                twist_inv: twist.transpose(),
            },
            Provenance::General => Provenance::General,
        };
        DiffModule {
            theta,
            provenance,
            ..self.clone()
        }
    }

    pub fn tensor(&self, o: &Self) -> Result<Self> {
        self.combine_check(o)?;
        let ctx = self.ctx();
        let one = LaurentSeries::one(self.nvars, &ctx);
        let ia = Matrix::identity(self.rank, &one);
        let ib = Matrix::identity(o.rank, &one);
        let theta = self
            .theta
            .iter()
            .zip(&o.theta)
            .map(|(a, b)| a.kron(&ib).add(&ia.kron(b)))
            .collect();
        let provenance = match (&self.provenance, &o.provenance) {
            (
                Provenance::Certified { standard: sa, twist: ua, twist_inv: va },
                Provenance::Certified { standard: sb, twist: ub, twist_inv: vb },
            ) => Provenance::Certified {
                standard: sa.tensor(sb)?,
                twist: ua.kron(ub),
                twist_inv: va.kron(vb),
            },
            _ => Provenance::General,
        };
        Ok(DiffModule {
            p: self.p,
            prec: self.prec.min(o.prec),
            nvars: self.nvars,
            rank: self.rank * o.rank,
            theta,
            domain: self.domain.clone(),
            provenance,
        })
    }

    pub fn direct_sum(&self, o: &Self) -> Result<Self> {
        self.combine_check(o)?;
        let theta = self.theta.iter().zip(&o.theta).map(|(a, b)| a.block_diag(b)).collect();
        let provenance = match (&self.provenance, &o.provenance) {
            (
                Provenance::Certified { standard: sa, twist: ua, twist_inv: va },
                Provenance::Certified { standard: sb, twist: ub, twist_inv: vb },
            ) => Provenance::Certified {
                standard: sa.direct_sum(sb)?,
                twist: ua.block_diag(ub),
                twist_inv: va.block_diag(vb),
            },
            _ => Provenance::General,
        };
        Ok(DiffModule {
            p: self.p,
            prec: self.prec.min(o.prec),
            nvars: self.nvars,
            rank: self.rank + o.rank,
            theta,
            domain: self.domain.clone(),
            provenance,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TensorOp {
    Tensor,
    Dual,
    DirectSum,
}

pub fn tensor_dual_sum(a: &DiffModule, b: Option<&DiffModule>, op: TensorOp) -> Result<DiffModule> {
    let need = || b.ok_or_else(|| Error::DimensionMismatch("second module missing".into()));
    match op {
        TensorOp::Dual => Ok(a.dual()),
        TensorOp::Tensor => a.tensor(need()?),
        TensorOp::DirectSum => a.direct_sum(need()?),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Exactness {
    Exact,
    Truncated { order: u32, tail: LogNorm },
}

/// Matrices `E(a)` of `ζ^a` for all `a ∈ (Z/p^k)^n`, listed in lexicographic order of `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaMatrix {
    pub p: u64,
    pub level: u32,
    pub nvars: usize,
    pub rank: usize,
    pub prec: u32,
    pub domain: LogRadiusBox,
    pub table: Vec<Matrix<CycSeries>>,
    pub exactness: Exactness,
}

/// All tuples of `(Z/q)^n` in lexicographic order.
pub fn tuples(q: u64, n: usize) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * q as usize);
        for t in &out {
            for x in 0..q {
                let mut t2 = t.clone();
                t2.push(x);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

impl GammaMatrix {
    pub fn order(&self) -> u64 {
        ppow_u64(self.p, self.level)
    }

    pub fn index(&self, a: &[u64]) -> usize {
        let q = self.order();
        a.iter().fold(0usize, |acc, x| acc * q as usize + (x % q) as usize)
    }

    pub fn get(&self, a: &[u64]) -> &Matrix<CycSeries> {
        &self.table[self.index(a)]
    }

    pub fn tuples(&self) -> Vec<Vec<u64>> {
        tuples(self.order(), self.nvars)
    }

    pub fn is_exact(&self) -> bool {
        self.exactness == Exactness::Exact
    }

    pub fn cyc_ctx(&self) -> CycCtx {
        CycCtx {
            p: self.p,
            level: self.level,
            prec: self.prec,
        }
    }
}

/// The terminating action of a certified module:
/// `E(a) = W(t)^{-1} diag(ζ^{a·λ_j}) W(ζ^a t)`.
pub fn gamma_action_exact(m: &DiffModule, k: u32) -> Result<GammaMatrix> {
    let Provenance::Certified { standard, twist, twist_inv } = &m.provenance else {
        return Err(Error::Uncertified);
    };
    if k == 0 {
        return Err(Error::InsufficientPrecision("level must be at least 1".into()));
    }
    if (m.prec as u64) < k as u64 * m.nvars as u64 + 2 {
        return Err(Error::InsufficientPrecision(format!("precision {} too small for level {k}", m.prec)));
    }
    let q = ppow_u64(m.p, k);
    let res = standard.lambda.residues_u64(k)?;
    let w = twist.to_cyc(k);
    let w_inv = twist_inv.to_cyc(k);
    let mut table = Vec::new();
    for a in tuples(q, m.nvars) {
        let ws = w.substitute_roots(&a);
        let exps: Vec<u64> = res
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&a)
                    .fold(0u128, |acc, (x, y)| (acc + *x as u128 * *y as u128) % q as u128) as u64
            })
            .collect();
        let scaled = Matrix::from_fn(m.rank, m.rank, |i, j| {
            ws.get(i, j).map_coeffs(ws.get(i, j).ctx(), |c| c.mul_root(exps[i]))
        });
        table.push(w_inv.mul(&scaled));
    }
    Ok(GammaMatrix {
        p: m.p,
        level: k,
        nvars: m.nvars,
        rank: m.rank,
        prec: m.prec,
        domain: m.domain.clone(),
        table,
        exactness: Exactness::Exact,
    })
}

/// `F -> Θ_i F + t_i∂_i F`.
fn apply_d(theta: &Matrix<LaurentSeries>, i: usize, f: &Matrix<LaurentSeries>) -> Matrix<LaurentSeries> {
    theta.mul(f).add(&f.theta_deriv(i))
}

/// Binomial-series action truncated at total degree `order`.
pub fn gamma_action_series(m: &DiffModule, k: u32, order: u32) -> Result<GammaMatrix> {
    if k == 0 {
        return Err(Error::InsufficientPrecision("level must be at least 1".into()));
    }
    let n = m.nvars;
    let p = m.p;
    let ctx = m.ctx();
    let id = Matrix::identity(m.rank, &LaurentSeries::one(n, &ctx));
    // B_α = Π binom(D_i, α_i)(I) for |α| <= order
    let mut terms: Vec<(Vec<u32>, Matrix<LaurentSeries>)> = vec![(Vec::new(), id)];
    for i in 0..n {
        let mut next = Vec::new();
        for (alpha, base) in &terms {
            let used: u32 = alpha.iter().sum();
            let mut cur = base.clone();
            for j in 0..=(order - used) {
                if j > 0 {
                    let shifted = apply_d(&m.theta[i], i, &cur).sub(&cur.mul_coeff(&PadicScalar::from_i64(p, (j - 1) as i64, m.prec)));
                    let inv_j = PadicScalar::from_rational(p, &Q::new(1.into(), (j as i64).into()), m.prec);
                    cur = shifted.mul_coeff(&inv_j);
                }
                let mut a2 = alpha.clone();
                a2.push(j);
                next.push((a2, cur.clone()));
            }
        }
        terms = next;
    }
    let q = ppow_u64(p, k);
    let cyc: Vec<(Vec<u32>, Matrix<CycSeries>)> = terms.iter().map(|(a, b)| (a.clone(), b.to_cyc(k))).collect();
    let one = CycScalar::one(p, k, m.prec);
    let mut table = Vec::new();
    for a in tuples(q, n) {
        let zm1: Vec<CycScalar> = a.iter().map(|x| CycScalar::root_power(p, k, *x, m.prec).sub(&one)).collect();
        let mut acc: Option<Matrix<CycSeries>> = None;
        for (alpha, b) in &cyc {
            let mut c = one.clone();
            for (z, e) in zm1.iter().zip(alpha) {
                for _ in 0..*e {
                    c = c.mul(z);
                }
            }
            if c.is_zero() {
                continue;
            }
            let t = b.mul_coeff(&c);
            acc = Some(match acc {
                None => t,
                Some(x) => x.add(&t),
            });
        }
        table.push(acc.expect("alpha = 0 is always present"));
    }
    let tail = Some(-Q::new(((order + 1) as i64).into(), (phi(p, k) as i64).into()));
    Ok(GammaMatrix {
        p,
        level: k,
        nvars: n,
        rank: m.rank,
        prec: m.prec,
        domain: m.domain.clone(),
        table,
        exactness: Exactness::Truncated { order, tail },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionLaws {
    /// Max log-norm of `E(a+b) - E(a) σ_a(E(b))`.
    pub group_law_residual: LogNorm,
    /// Max log-norm of `σ_c(E(a)) - E(ca)` over units `c`.
    pub galois_residual: LogNorm,
    /// Least `l >= 0` with `|E(a)| <= p^{lk}` on the box.
    pub growth_l: i64,
    pub pairs_checked: usize,
    /// Set when only pairs `(a, e_i)` were checked; by induction on `b` these imply the
    /// law for every pair.
    pub generators_only: bool,
    pub identity_residual: LogNorm,
}

fn diff_lognorm(a: &Matrix<CycSeries>, b: &Matrix<CycSeries>, bx: &LogRadiusBox) -> LogNorm {
    a.sub(b).sup_lognorm(bx)
}

/// Pair budget above which the group law is checked on generators only.
pub const FULL_PAIR_LIMIT: usize = 40_000;

pub fn verify_action_laws(e: &GammaMatrix) -> ActionLaws {
    let q = e.order();
    let tups = e.tuples();
    let bx = &e.domain;
    let mut group: LogNorm = None;
    let generators_only = tups.len() * tups.len() > FULL_PAIR_LIMIT;
    let bs: Vec<Vec<u64>> = if generators_only {
        (0..e.nvars)
            .map(|i| (0..e.nvars).map(|j| u64::from(i == j)).collect())
            .collect()
    } else {
        tups.clone()
    };
    let mut pairs = 0;
    for a in &tups {
        let ea = e.get(a);
        for b in &bs {
            let sum: Vec<u64> = a.iter().zip(b).map(|(x, y)| (x + y) % q).collect();
            let rhs = ea.mul(&e.get(b).substitute_roots(a));
            group = group.max(diff_lognorm(e.get(&sum), &rhs, bx));
            pairs += 1;
        }
    }
    let mut galois: LogNorm = None;
    for c in (1..q).filter(|c| c % e.p != 0) {
        for a in &tups {
            let ca: Vec<u64> = a.iter().map(|x| (x * c) % q).collect();
            galois = galois.max(diff_lognorm(&e.get(a).galois(c), e.get(&ca), bx));
        }
    }
    let zero = vec![0u64; e.nvars];
    let one = Matrix::identity(e.rank, &CycSeries::one(e.nvars, &e.cyc_ctx()));
    let identity_residual = diff_lognorm(e.get(&zero), &one, bx);
    let worst = e.table.iter().map(|m| m.sup_lognorm(bx)).max().flatten();
    let growth_l = match worst {
        Some(w) if w > Q::from_integer(0.into()) => (w / Q::from_integer((e.level as i64).into())).ceil().to_integer().try_into().unwrap_or(i64::MAX),
        _ => 0,
    };
    ActionLaws {
        group_law_residual: group,
        galois_residual: galois,
        growth_l,
        pairs_checked: pairs,
        generators_only,
        identity_residual,
    }
}

/// Exact actions at levels `1..=k_max`.
#[derive(Clone, Debug)]
pub struct ActionTower {
    pub levels: Vec<GammaMatrix>,
}

impl ActionTower {
    pub fn exact(m: &DiffModule, k_max: u32) -> Result<Self> {
        let levels = (1..=k_max).map(|k| gamma_action_exact(m, k)).collect::<Result<_>>()?;
        Ok(ActionTower { levels })
    }

    pub fn k_max(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn level(&self, k: u32) -> Result<&GammaMatrix> {
        self.levels
            .get((k as usize).wrapping_sub(1))
            .ok_or_else(|| Error::InsufficientPrecision(format!("no action table at level {k}")))
    }
}

/// Rank-one `M_λ` in standard form.
pub fn m_lambda(p: u64, prec: u32, lambda: &[Q]) -> Result<DiffModule> {
    DiffModule::from_standard_form(StandardForm::diagonal(p, prec, &[lambda.to_vec()])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::Series;
    use crate::rat::{q, qf};

    fn ser(p: u64, terms: &[(i64, i64)]) -> LaurentSeries {
        let t: Vec<_> = terms.iter().map(|(e, c)| (vec![*e], *c)).collect();
        LaurentSeries::from_ints(p, 24, 1, &t)
    }

    fn twisted() -> DiffModule {
        let sf = StandardForm::diagonal(3, 24, &[vec![q(0)], vec![qf(1, 2)]]).unwrap();
        let m = DiffModule::from_standard_form(sf).unwrap();
        let u = Matrix::from_rows(vec![vec![ser(3, &[(0, 1)]), ser(3, &[(1, 1)])], vec![ser(3, &[]), ser(3, &[(0, 1)])]]).unwrap();
        m.apply_twist(&u, &m.domain.clone()).unwrap()
    }

    #[test]
    fn twist_connection() {
        let m = twisted();
        assert!(m.is_certified());
        let half = LaurentSeries::constant(1, &m.ctx(), PadicScalar::from_rational(3, &qf(1, 2), 24));
        let t_half = half.shift(&[1]);
        let want = Matrix::from_rows(vec![vec![ser(3, &[]), t_half], vec![ser(3, &[]), half]]).unwrap();
        assert!(m.theta[0].eq_at_prec(&want));
        m.check_certificate().unwrap();
    }

    #[test]
    fn exact_action_example() {
        let m = twisted();
        let e = gamma_action_exact(&m, 2).unwrap();
        let z = |k| CycScalar::root_power(3, 2, k, 24);
        let ctx = e.cyc_ctx();
        let got = e.get(&[1]);
        let off = Series::monomial(1, &ctx, vec![1], z(1).sub(&z(5)));
        assert!(got.get(0, 1).eq_at_prec(&off));
        assert!(got.get(1, 1).eq_at_prec(&Series::constant(1, &ctx, z(5))));
        let laws = verify_action_laws(&e);
        assert_eq!(laws.group_law_residual, None);
        assert_eq!(laws.galois_residual, None);
        assert_eq!(laws.identity_residual, None);
        assert_eq!(laws.growth_l, 0);
    }

    #[test]
    fn series_matches_exact_for_half() {
        let m = m_lambda(3, 24, &[qf(1, 2)]).unwrap();
        let ex = gamma_action_exact(&m, 1).unwrap();
        let se = gamma_action_series(&m, 1, 6).unwrap();
        let Exactness::Truncated { tail, .. } = se.exactness.clone() else { panic!() };
        for a in ex.tuples() {
            let d = ex.get(&a).sub(se.get(&a)).sup_lognorm(&m.domain);
            assert!(d <= tail, "{a:?}: {d:?} vs {tail:?}");
        }
    }

    #[test]
    fn tensor_and_dual() {
        let h = m_lambda(3, 24, &[qf(1, 2)]).unwrap();
        let t = h.tensor(&h).unwrap();
        let sf = t.standard_form().unwrap();
        assert_eq!(sf.lambda, ExponentMultiset::from_rationals(3, &[vec![q(1)]]).unwrap());
        let m = twisted();
        assert_eq!(m.dual().dual(), m);
        m.dual().check_certificate().unwrap();
        m.tensor(&m).unwrap().check_certificate().unwrap();
    }
}
