//! Exponents of certified modules, projector iteration, decomposition along Liouville
//! partitions and constant bases.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use crate::diffmod::{exact_inverse, gauge, tuples, ActionTower, DiffModule, Exactness, GammaMatrix};
use crate::error::{Error, Result};
use crate::expcalc::{
    check_liouville_partition, partition_cosets, reconstruct_multiset, strict_equiv, weak_equiv, Coord, ExponentEntry,
    ExponentMultiset, PartitionCheck, PartitionMode, StrictEquiv, WeakEquiv, WitnessTree,
};
use crate::laurent::{CycSeries, LaurentSeries, LogRadiusBox, PadicCtx};
use crate::matrix::Matrix;
use crate::rat::{fmt_lognorm, q, LogNorm, Q};
use crate::scalar::{ppow_u64, GroupRingAcc, PadicScalar};

#[derive(Clone, Debug, PartialEq)]
pub struct FuchsConfig {
    pub k_max: u32,
    /// `log_p τ` for the decay test.
    pub log_tau: Q,
    /// Per-direction log shrink of the box; `None` halves it.
    pub shrink: Option<Vec<Q>>,
    pub h_max: u32,
    pub c_max: Q,
    /// Padding for windows of truncated inverses.
    pub pad: i64,
}

impl Default for FuchsConfig {
    fn default() -> Self {
        FuchsConfig {
            k_max: 3,
            log_tau: q(-1),
            shrink: None,
            h_max: 3,
            c_max: q(10),
            pad: 16,
        }
    }
}

impl FuchsConfig {
    fn shrunk(&self, bx: &LogRadiusBox) -> Result<LogRadiusBox> {
        match &self.shrink {
            Some(d) => bx.shrink(d),
            None => Ok(bx.halved()),
        }
    }
}

/// Relative precision of `S_{k,A}` computed from a table at level `k`.
pub fn s_precision(e: &GammaMatrix) -> u32 {
    e.prec.saturating_sub(e.nvars as u32 * e.level)
}

fn require_exact(e: &GammaMatrix) -> Result<()> {
    if e.is_exact() {
        Ok(())
    } else {
        Err(Error::TruncatedAction)
    }
}

type RowAccs = Vec<BTreeMap<Vec<i64>, GroupRingAcc>>;

/// Columns `j` of `S_{k, r + step·d}` for every digit vector `d` in `digits`, where
/// `step·p` is the group order. The sum over `a` is split by `a mod p` once; each
/// candidate then only rotates the partial sums by `ζ^{-step (a·d)}`.
fn s_columns(e: &GammaMatrix, j: usize, r: &[u64], step: u64, digits: &[Vec<u64>]) -> Result<Vec<Vec<LaurentSeries>>> {
    let p = e.p;
    let k = e.level;
    let qk = e.order();
    debug_assert!(digits.iter().all(|d| d.iter().all(|x| *x == 0)) || step * p == qk);
    let classes = ppow_u64(p, e.nvars as u32) as usize;
    let mut parts: Vec<RowAccs> = vec![vec![BTreeMap::new(); e.rank]; classes];
    for (idx, a) in e.tuples().iter().enumerate() {
        let dot = r.iter().zip(a).fold(0u128, |acc, (x, y)| (acc + *x as u128 * *y as u128) % qk as u128) as u64;
        let shift = (qk - dot) % qk;
        let class = a.iter().fold(0usize, |c, x| c * p as usize + (x % p) as usize);
        let m = &e.table[idx];
        for (l, acc) in parts[class].iter_mut().enumerate() {
            for (ex, c) in m.get(l, j).terms() {
                match acc.get_mut(ex) {
                    Some(g) => g.add_cyc_shifted(c, shift),
                    None => {
                        let mut g = GroupRingAcc::new(p, k);
                        g.add_cyc_shifted(c, shift);
                        acc.insert(ex.clone(), g);
                    }
                }
            }
        }
    }
    let class_vec = |mut c: usize| -> Vec<u64> {
        let mut v = vec![0u64; e.nvars];
        for x in v.iter_mut().rev() {
            *x = (c % p as usize) as u64;
            c /= p as usize;
        }
        v
    };
    let class_vecs: Vec<Vec<u64>> = (0..classes).map(class_vec).collect();
    digits
        .iter()
        .map(|d| {
            let mut total: RowAccs = vec![BTreeMap::new(); e.rank];
            for (cv, part) in class_vecs.iter().zip(&parts) {
                let dot = cv.iter().zip(d).map(|(x, y)| x * y).sum::<u64>() % p;
                let rot = (qk - (step * dot) % qk) % qk;
                for (t, acc) in total.iter_mut().zip(part) {
                    for (ex, g) in acc {
                        let g = g.rotate(rot);
                        match t.get_mut(ex) {
                            Some(h) => h.add_acc(&g),
                            None => {
                                t.insert(ex.clone(), g);
                            }
                        }
                    }
                }
            }
            finish_column(e, total)
        })
        .collect()
}

fn finish_column(e: &GammaMatrix, accs: RowAccs) -> Result<Vec<LaurentSeries>> {
    let prec_out = s_precision(e);
    let ctx = PadicCtx { p: e.p, prec: prec_out };
    let scale = -(e.nvars as i64) * e.level as i64;
    let mut col = Vec::with_capacity(e.rank);
    for acc in accs {
        let mut s = LaurentSeries::zero(e.nvars, &ctx);
        for (ex, g) in acc {
            let c = g.to_cyc().descend_to_base()?;
            s.add_term(ex, &c.mul_p_power(scale).with_rel_prec(prec_out));
        }
        col.push(s);
    }
    Ok(col)
}

/// Column `j` of `S_{k,r}` for the residue vector `r` (mod `p^k`).
fn s_column(e: &GammaMatrix, j: usize, r: &[u64]) -> Result<Vec<LaurentSeries>> {
    let zero = vec![0u64; e.nvars];
    Ok(s_columns(e, j, r, 0, &[zero])?.pop().expect("one digit vector"))
}

fn from_columns(cols: Vec<Vec<LaurentSeries>>) -> Matrix<LaurentSeries> {
    Matrix::from_columns(&cols)
}

/// `S_{k,A} = p^{-nk} Σ_a E(a) ζ^{-A·a}`, descended to the base field.
pub fn compute_s(e: &GammaMatrix, a: &ExponentMultiset) -> Result<Matrix<LaurentSeries>> {
    require_exact(e)?;
    if a.len() != e.rank || (a.dim() != e.nvars) {
        return Err(Error::DimensionMismatch("exponent does not match the action".into()));
    }
    if e.prec < e.nvars as u32 * e.level + 2 {
        return Err(Error::InsufficientPrecision(format!(
            "precision {} leaves nothing after averaging at level {}",
            e.prec, e.level
        )));
    }
    let res = a.residues_u64(e.level)?;
    let cols = (0..e.rank).map(|j| s_column(e, j, &res[j])).collect::<Result<Vec<_>>>()?;
    Ok(from_columns(cols))
}

/// `Σ_b S_{k+1, A + p^k b} - S_{k,A}` over `b ∈ (Z/p)^n`.
pub fn telescoping_check(ek: &GammaMatrix, ek1: &GammaMatrix, a: &ExponentMultiset) -> Result<LogNorm> {
    require_exact(ek1)?;
    if ek1.level != ek.level + 1 {
        return Err(Error::DimensionMismatch("tables must be at consecutive levels".into()));
    }
    let sk = compute_s(ek, a)?;
    let res = a.residues_u64(ek1.level)?;
    let step = ppow_u64(ek.p, ek.level);
    let digits = tuples(ek.p, ek.nvars);
    let mut cols = Vec::with_capacity(ek.rank);
    for j in 0..ek.rank {
        let per = s_columns(ek1, j, &res[j], step, &digits)?;
        let sum = per
            .into_iter()
            .reduce(|a, c| a.iter().zip(&c).map(|(x, y)| x.add(y)).collect())
            .expect("p^n >= 1 digit vectors");
        cols.push(sum);
    }
    let total = from_columns(cols);
    Ok(total.sub(&sk).sup_lognorm(&ek.domain))
}

fn det_constant_lognorm(s: &Matrix<LaurentSeries>) -> LogNorm {
    s.det().constant_term().lognorm()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelTrace {
    pub level: u32,
    pub det_constant_lognorm: Q,
    pub candidates: usize,
    /// Chosen digit vector per entry.
    pub digits: Vec<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Descent {
    pub k_max: u32,
    /// Residues mod `p^{k_max}` per entry and direction.
    pub residues: Vec<Vec<u64>>,
    pub exponent: ExponentMultiset,
    pub trace: Vec<LevelTrace>,
}

impl Descent {
    pub fn det_trace(&self) -> Vec<Q> {
        self.trace.iter().map(|t| t.det_constant_lognorm.clone()).collect()
    }
}

/// Greedy digit descent maximising `log |det(S_{k,A})_0|`; the first strict maximum in
/// lexicographic order of digit matrices wins.
pub fn descend_exponent(levels: &[GammaMatrix], k_max: u32) -> Result<Descent> {
    let first = levels.first().ok_or_else(|| Error::InsufficientPrecision("no action tables".into()))?;
    let (p, n, m) = (first.p, first.nvars, first.rank);
    let mut res: Vec<Vec<u64>> = vec![vec![0; n]; m];
    let mut trace = Vec::new();
    let digits = tuples(p, n);
    for k in 1..=k_max {
        let e = levels
            .iter()
            .find(|t| t.level == k)
            .ok_or_else(|| Error::InsufficientPrecision(format!("no action table at level {k}")))?;
        require_exact(e)?;
        let step = ppow_u64(p, k - 1);
        let mut options: Vec<Vec<Vec<LaurentSeries>>> = Vec::with_capacity(m);
        for j in 0..m {
            options.push(s_columns(e, j, &res[j], step, &digits)?);
        }
        let nd = digits.len();
        let total = nd.pow(m as u32);
        let mut best: Option<(Q, usize)> = None;
        for combo in 0..total {
            let mut idx = Vec::with_capacity(m);
            let mut c = combo;
            for _ in 0..m {
                idx.push(c % nd);
                c /= nd;
            }
            idx.reverse();
            let cols: Vec<Vec<LaurentSeries>> = idx.iter().enumerate().map(|(j, &i)| options[j][i].clone()).collect();
            if let Some(v) = det_constant_lognorm(&from_columns(cols)) {
                if best.as_ref().is_none_or(|(b, _)| v > *b) {
                    best = Some((v, combo));
                }
            }
        }
        let (v, combo) = best.ok_or(Error::DescentFailed(k))?;
        if v < q(0) {
            return Err(Error::DescentFailed(k));
        }
        let mut idx = Vec::with_capacity(m);
        let mut c = combo;
        for _ in 0..m {
            idx.push(c % nd);
            c /= nd;
        }
        idx.reverse();
        let chosen: Vec<Vec<u64>> = idx.iter().map(|&i| digits[i].clone()).collect();
        for (r, b) in res.iter_mut().zip(&chosen) {
            for (x, d) in r.iter_mut().zip(b) {
                *x += step * d;
            }
        }
        trace.push(LevelTrace {
            level: k,
            det_constant_lognorm: v,
            candidates: total,
            digits: chosen,
        });
    }
    Ok(Descent {
        k_max,
        exponent: ExponentMultiset::from_residues(p, k_max, &res),
        residues: res,
        trace,
    })
}

/// Inverse of a square series matrix: exact when the determinant is a monomial,
/// otherwise a truncated inverse on the box. `None` when not invertible on the box.
pub fn invert_on(m: &Matrix<LaurentSeries>, bx: &LogRadiusBox, pad: i64) -> Option<(Matrix<LaurentSeries>, bool)> {
    let d = m.det();
    if d.is_zero() {
        return None;
    }
    if let Some(inv) = exact_inverse(m) {
        return Some((inv, true));
    }
    d.is_unit_on_box(bx).ok()?.as_ref()?;
    let (inv, _) = m.inverse_on_box(bx, &m.padded_window(pad)).ok()?;
    Some((inv, false))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelRecord {
    pub level: u32,
    pub s: Matrix<LaurentSeries>,
    /// Max over `a` of `|E(a) σ_a(S) - S ζ^{A·a}|`.
    pub semilinearity_residual: LogNorm,
    pub det_constant_lognorm: LogNorm,
    pub sup_lognorm_s: LogNorm,
    pub invertible: bool,
    pub inverse_sup_lognorm: LogNorm,
    /// `|S^{-1}| <= p^{(m-1)kl}` with the fitted `l`.
    pub inverse_bound_ok: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentCertificate {
    pub exponent: ExponentMultiset,
    pub records: Vec<LevelRecord>,
    pub growth_l: i64,
    pub passed: bool,
    pub failures: Vec<String>,
}

fn scale_columns_by_roots(m: &Matrix<CycSeries>, exps: &[u64]) -> Matrix<CycSeries> {
    Matrix::from_fn(m.rows(), m.cols(), |i, j| {
        let x = m.get(i, j);
        x.map_coeffs(x.ctx(), |c| c.mul_root(exps[j]))
    })
}

fn semilinearity_residual(e: &GammaMatrix, s: &Matrix<LaurentSeries>, res: &[Vec<u64>]) -> LogNorm {
    let qk = e.order();
    let sc = s.to_cyc(e.level);
    let mut worst: LogNorm = None;
    for (idx, a) in e.tuples().iter().enumerate() {
        let exps: Vec<u64> = res
            .iter()
            .map(|r| r.iter().zip(a).fold(0u128, |acc, (x, y)| (acc + *x as u128 * *y as u128) % qk as u128) as u64)
            .collect();
        let lhs = e.table[idx].mul(&sc.substitute_roots(a));
        let rhs = scale_columns_by_roots(&sc, &exps);
        worst = worst.max(lhs.sub(&rhs).sup_lognorm(&e.domain));
    }
    worst
}

fn fit_l(sups: &[(u32, LogNorm)]) -> i64 {
    let mut l = 0i64;
    for (k, s) in sups {
        if let Some(v) = s {
            let need = (v / q(*k as i64)).ceil().to_integer();
            let need: i64 = need.try_into().unwrap_or(i64::MAX);
            l = l.max(need);
        }
    }
    l
}

/// Checks the three defining conditions of an exponent over the given levels.
pub fn verify_exponent_certificate(levels: &[GammaMatrix], a: &ExponentMultiset, ks: RangeInclusive<u32>) -> Result<ExponentCertificate> {
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for k in ks {
        let e = levels
            .iter()
            .find(|t| t.level == k)
            .ok_or_else(|| Error::InsufficientPrecision(format!("no action table at level {k}")))?;
        require_exact(e)?;
        let s = compute_s(e, a)?;
        let res = a.residues_u64(k)?;
        let semi = semilinearity_residual(e, &s, &res);
        let det0 = det_constant_lognorm(&s);
        let sup = s.sup_lognorm(&e.domain);
        let inv = invert_on(&s, &e.domain, 16);
        if semi.is_some() {
            failures.push(format!("level {k}: semilinearity residual {}", fmt_lognorm(&semi)));
        }
        if det0.as_ref().is_none_or(|v| *v < q(0)) {
            failures.push(format!("level {k}: det constant term has log-norm {}", fmt_lognorm(&det0)));
        }
        records.push(LevelRecord {
            level: k,
            semilinearity_residual: semi,
            det_constant_lognorm: det0,
            sup_lognorm_s: sup,
            invertible: inv.is_some(),
            inverse_sup_lognorm: inv.as_ref().and_then(|(i, _)| i.sup_lognorm(&e.domain)),
            inverse_bound_ok: None,
            s,
        });
    }
    let sups: Vec<_> = records.iter().map(|r| (r.level, r.sup_lognorm_s.clone())).collect();
    let l = fit_l(&sups);
    let m = a.len() as i64;
    for r in &mut records {
        if r.invertible {
            let bound = q((m - 1) * r.level as i64 * l);
            r.inverse_bound_ok = Some(r.inverse_sup_lognorm.as_ref().is_none_or(|v| *v <= bound));
        }
    }
    Ok(ExponentCertificate {
        exponent: a.clone(),
        passed: failures.is_empty(),
        records,
        growth_l: l,
        failures,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectorReport {
    pub block: Vec<usize>,
    pub levels: Vec<u32>,
    pub projectors: Vec<Matrix<LaurentSeries>>,
    /// `(k, |N_k - N_{k+1}|)` on the shrunk box.
    pub decay: Vec<(u32, LogNorm)>,
    pub limit: Matrix<LaurentSeries>,
    pub idempotency_residual: LogNorm,
    pub horizontality_residual: LogNorm,
    pub exact_inverses: bool,
}

fn diag_block(m: usize, block: &[usize], proto: &LaurentSeries) -> Matrix<LaurentSeries> {
    let zero = LaurentSeries::zero(proto.nvars(), proto.ctx());
    Matrix::diag((0..m).map(|i| if block.contains(&i) { proto.clone() } else { zero.clone() }).collect())
}

/// `Σ_i |t_i∂_i N + Θ_i N - N Θ_i|`.
pub fn horizontality_residual(theta: &[Matrix<LaurentSeries>], n: &Matrix<LaurentSeries>, bx: &LogRadiusBox) -> LogNorm {
    theta
        .iter()
        .enumerate()
        .map(|(i, th)| n.theta_deriv(i).add(&th.mul(n)).sub(&n.mul(th)).sup_lognorm(bx))
        .max()
        .flatten()
}

fn converged(decay: &[(u32, LogNorm)], log_tau: &Q) -> bool {
    if decay.is_empty() {
        return false;
    }
    if decay.iter().all(|(_, d)| d.is_none()) {
        return true;
    }
    let mut run = 0;
    let mut prev: Option<u32> = None;
    for (k, d) in decay {
        let ok = d.as_ref().is_none_or(|v| *v <= log_tau * q(*k as i64));
        let consecutive = prev.is_none_or(|pk| pk + 1 == *k);
        run = if ok { if consecutive { run + 1 } else { 1 } } else { 0 };
        prev = Some(*k);
        if run >= 3 {
            return true;
        }
    }
    false
}

fn projector_unchecked(
    theta: &[Matrix<LaurentSeries>],
    levels: &[GammaMatrix],
    a: &ExponentMultiset,
    block: &[usize],
    ks: RangeInclusive<u32>,
    cfg: &FuchsConfig,
) -> Result<ProjectorReport> {
    let bx = &levels.first().ok_or(Error::Uncertified)?.domain;
    let shrunk = cfg.shrunk(bx)?;
    let mut projectors = Vec::new();
    let mut lv = Vec::new();
    let mut exact = true;
    for k in ks {
        let e = levels
            .iter()
            .find(|t| t.level == k)
            .ok_or_else(|| Error::InsufficientPrecision(format!("no action table at level {k}")))?;
        let s = compute_s(e, a)?;
        let Some((inv, ex)) = invert_on(&s, bx, cfg.pad) else {
            continue;
        };
        exact &= ex;
        let one = LaurentSeries::one(e.nvars, &PadicCtx { p: e.p, prec: s_precision(e) });
        let d = diag_block(e.rank, block, &one);
        projectors.push(s.mul(&d).mul(&inv));
        lv.push(k);
    }
    let mut decay = Vec::new();
    for i in 1..projectors.len() {
        decay.push((lv[i - 1], projectors[i - 1].sub(&projectors[i]).sup_lognorm(&shrunk)));
    }
    if !converged(&decay, &cfg.log_tau) {
        let trace: Vec<String> = decay.iter().map(|(k, d)| format!("{k}:{}", fmt_lognorm(d))).collect();
        return Err(Error::DecayNotObserved(format!("decay trace [{}]", trace.join(", "))));
    }
    let limit = projectors.last().expect("decay needs two levels").clone();
    Ok(ProjectorReport {
        block: block.to_vec(),
        idempotency_residual: limit.mul(&limit).sub(&limit).sup_lognorm(&shrunk),
        horizontality_residual: horizontality_residual(theta, &limit, &shrunk),
        limit,
        levels: lv,
        projectors,
        decay,
        exact_inverses: exact,
    })
}

/// Projectors `N_k = S_k diag(1_B, 0) S_k^{-1}` for a split `B | complement`.
pub fn projector_sequence(
    theta: &[Matrix<LaurentSeries>],
    levels: &[GammaMatrix],
    a: &ExponentMultiset,
    block: &[usize],
    ks: RangeInclusive<u32>,
    cfg: &FuchsConfig,
) -> Result<ProjectorReport> {
    let rest: Vec<usize> = (0..a.len()).filter(|i| !block.contains(i)).collect();
    if !rest.is_empty() {
        match check_liouville_partition(a, &[block.to_vec(), rest], PartitionMode::Recursive)? {
            PartitionCheck::Valid(_) => {}
            PartitionCheck::Invalid(why) => return Err(Error::InvalidPartition(why)),
            PartitionCheck::Inconclusive(why) => return Err(Error::Inconclusive(why)),
        }
    }
    projector_unchecked(theta, levels, a, block, ks, cfg)
}

/// Norm-pivoted column selection: returns `r` column indices of `n` whose columns span
/// its image. Pivots are the largest entries on the box, preferring entries dominated by
/// their constant term, then the smallest `(col, row)`.
pub fn pivot_columns(n: &Matrix<LaurentSeries>, r: usize, bx: &LogRadiusBox, pad: i64) -> Result<Vec<usize>> {
    let mut w = n.clone();
    let mut cols_used: Vec<usize> = Vec::new();
    let mut rows_used: Vec<usize> = Vec::new();
    let zero_idx = vec![0i64; bx.nvars()];
    for _ in 0..r {
        let mut best: Option<(Q, bool, usize, usize)> = None;
        for c in (0..w.cols()).filter(|c| !cols_used.contains(c)) {
            for rr in (0..w.rows()).filter(|x| !rows_used.contains(x)) {
                let x = w.get(rr, c);
                let Some(v) = x.sup_lognorm(bx) else { continue };
                let unit = x.is_unit_on_box(bx)?;
                let Some(idx) = unit else { continue };
                let pref = idx == zero_idx;
                let better = match &best {
                    None => true,
                    Some((bv, bp, _, _)) => v > *bv || (v == *bv && pref && !*bp),
                };
                if better {
                    best = Some((v, pref, c, rr));
                }
            }
        }
        let (_, _, c, rr) = best.ok_or_else(|| Error::PivotFailure("no unit pivot on the box".into()))?;
        let piv = w.get(rr, c).clone();
        let win = w.padded_window(pad);
        let (pinv, _) = piv.invert_unit(bx, &win)?;
        let pc = w.column(c);
        for c2 in (0..w.cols()).filter(|x| *x != c && !cols_used.contains(x)) {
            let f = w.get(rr, c2).mul(&pinv);
            if f.is_zero() {
                continue;
            }
            for i in 0..w.rows() {
                let v = w.get(i, c2).sub(&pc[i].mul(&f));
                w.set(i, c2, v);
            }
        }
        cols_used.push(c);
        rows_used.push(rr);
    }
    Ok(cols_used)
}

#[derive(Clone, Debug)]
pub struct Factor {
    /// Indices into the full exponent.
    pub indices: Vec<usize>,
    pub exponent: ExponentMultiset,
    /// Columns in the original basis.
    pub basis: Matrix<LaurentSeries>,
    pub theta: Vec<Matrix<LaurentSeries>>,
    pub levels: Vec<GammaMatrix>,
    pub certificate: ExponentCertificate,
    pub descent: Option<Descent>,
    pub reconstructed: Option<ExponentMultiset>,
    pub strict: Option<StrictEquiv>,
    pub weak: Option<WeakEquiv>,
    /// Largest entry of the discarded off-diagonal blocks of the connection.
    pub off_block_residual: LogNorm,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub exponent: ExponentMultiset,
    pub blocks: Vec<Vec<usize>>,
    pub tree: WitnessTree,
    pub factors: Vec<Factor>,
    pub projectors: Vec<ProjectorReport>,
    pub exact: bool,
}

struct Piece {
    theta: Vec<Matrix<LaurentSeries>>,
    levels: Vec<GammaMatrix>,
    idx: Vec<usize>,
    basis: Matrix<LaurentSeries>,
    off_block: LogNorm,
}

fn sub_table(e: &GammaMatrix, range: &[usize], w: &Matrix<LaurentSeries>, w_inv: &Matrix<LaurentSeries>) -> GammaMatrix {
    let wc = w.to_cyc(e.level);
    let wic = w_inv.to_cyc(e.level);
    let table = e
        .tuples()
        .iter()
        .enumerate()
        .map(|(i, a)| wic.mul(&e.table[i]).mul(&wc.substitute_roots(a)).submatrix(range, range))
        .collect();
    GammaMatrix {
        rank: range.len(),
        table,
        ..e.clone()
    }
}

fn mark_inexact(e: &mut GammaMatrix) {
    e.exactness = Exactness::Truncated { order: 0, tail: None };
}

fn off_block_lognorm(m: &Matrix<LaurentSeries>, ranges: &[Vec<usize>], bx: &LogRadiusBox) -> LogNorm {
    let mut worst: LogNorm = None;
    for (x, rx) in ranges.iter().enumerate() {
        for (y, ry) in ranges.iter().enumerate() {
            if x != y {
                worst = worst.max(m.submatrix(rx, ry).sup_lognorm(bx));
            }
        }
    }
    worst
}

fn split_piece(
    piece: Piece,
    tree: &WitnessTree,
    blocks: &[Vec<usize>],
    a: &ExponentMultiset,
    cfg: &FuchsConfig,
    out: &mut Vec<Piece>,
    reports: &mut Vec<ProjectorReport>,
    exact: &mut bool,
) -> Result<()> {
    let children = match tree {
        WitnessTree::Leaf(_) => {
            out.push(piece);
            return Ok(());
        }
        WitnessTree::Split { children, .. } => children,
    };
    let local_a = a.select(&piece.idx);
    let bx = piece.levels[0].domain.clone();
    let mut cols = Vec::new();
    let mut ranges = Vec::new();
    let mut child_idx = Vec::new();
    for ch in children {
        let members: Vec<usize> = ch.blocks().iter().flat_map(|b| blocks[*b].iter().copied()).collect();
        let local: Vec<usize> = piece
            .idx
            .iter()
            .enumerate()
            .filter(|(_, g)| members.contains(g))
            .map(|(i, _)| i)
            .collect();
        let rep = projector_unchecked(&piece.theta, &piece.levels, &local_a, &local, 1..=cfg.k_max, cfg)?;
        let chosen = pivot_columns(&rep.limit, local.len(), &bx, cfg.pad)?;
        let start = cols.len();
        for c in chosen {
            cols.push(rep.limit.column(c));
        }
        ranges.push((start..cols.len()).collect::<Vec<_>>());
        child_idx.push(local.iter().map(|&i| piece.idx[i]).collect::<Vec<_>>());
        *exact &= rep.exact_inverses;
        reports.push(rep);
    }
    let w = Matrix::from_columns(&cols);
    let det = w.det();
    if det.is_zero() || det.is_unit_on_box(&bx)?.is_none() {
        return Err(Error::PivotFailure("assembled basis is not invertible on the box".into()));
    }
    let (w_inv, w_exact) = invert_on(&w, &bx, cfg.pad).ok_or_else(|| Error::PivotFailure("basis inverse".into()))?;
    *exact &= w_exact;
    let theta = gauge(&piece.theta, &w, &w_inv);
    let off = theta.iter().map(|t| off_block_lognorm(t, &ranges, &bx)).max().flatten();
    for ((ch, range), idx) in children.iter().zip(&ranges).zip(child_idx) {
        let mut levels: Vec<GammaMatrix> = piece.levels.iter().map(|e| sub_table(e, range, &w, &w_inv)).collect();
        if !w_exact {
            levels.iter_mut().for_each(mark_inexact);
        }
        let sub = Piece {
            theta: theta.iter().map(|t| t.submatrix(range, range)).collect(),
            levels,
            basis: piece.basis.mul(&w.submatrix(&(0..w.rows()).collect::<Vec<_>>(), range)),
            idx,
            off_block: piece.off_block.clone().max(off.clone()),
        };
        split_piece(sub, ch, blocks, a, cfg, out, reports, exact)?;
    }
    Ok(())
}

/// Splits a certified module along a Liouville partition of its exponent. When
/// `exponent` is `None` it is recovered by descent and rational reconstruction; when
/// `blocks` is `None` the coset partition is used.
pub fn decompose(m: &DiffModule, exponent: Option<&ExponentMultiset>, blocks: Option<&[Vec<usize>]>, cfg: &FuchsConfig) -> Result<Decomposition> {
    if !m.is_certified() {
        return Err(Error::Uncertified);
    }
    let tower = ActionTower::exact(m, cfg.k_max)?;
    let a = match exponent {
        Some(a) => a.clone(),
        None => {
            let d = descend_exponent(&tower.levels, cfg.k_max)?;
            reconstruct_multiset(&d.exponent, cfg.k_max)
                .ok_or_else(|| Error::Inconclusive("exponent residues do not reconstruct to small rationals".into()))?
        }
    };
    let blocks: Vec<Vec<usize>> = match blocks {
        Some(b) => b.to_vec(),
        None => partition_cosets(&a)?,
    };
    let tree = match check_liouville_partition(&a, &blocks, PartitionMode::Recursive)? {
        PartitionCheck::Valid(t) => t,
        PartitionCheck::Invalid(why) => return Err(Error::InvalidPartition(why)),
        PartitionCheck::Inconclusive(why) => return Err(Error::Inconclusive(why)),
    };
    let one = LaurentSeries::one(m.nvars, &m.ctx());
    let root = Piece {
        theta: m.theta.clone(),
        levels: tower.levels,
        idx: (0..m.rank).collect(),
        basis: Matrix::identity(m.rank, &one),
        off_block: None,
    };
    let mut pieces = Vec::new();
    let mut reports = Vec::new();
    let mut exact = true;
    split_piece(root, &tree, &blocks, &a, cfg, &mut pieces, &mut reports, &mut exact)?;
    let mut factors = Vec::new();
    for pc in pieces {
        let ex = a.select(&pc.idx);
        let certificate = match verify_exponent_certificate(&pc.levels, &ex, 1..=cfg.k_max) {
            Ok(c) => c,
            Err(Error::TruncatedAction) => ExponentCertificate {
                exponent: ex.clone(),
                records: Vec::new(),
                growth_l: 0,
                passed: false,
                failures: vec!["action of the factor is not exact".into()],
            },
            Err(e) => return Err(e),
        };
        let descent = descend_exponent(&pc.levels, cfg.k_max).ok();
        let reconstructed = descent.as_ref().and_then(|d| reconstruct_multiset(&d.exponent, cfg.k_max));
        let strict = reconstructed.as_ref().and_then(|r| strict_equiv(r, &ex).ok());
        let weak = descent
            .as_ref()
            .and_then(|d| weak_equiv(&d.exponent, &ex, cfg.h_max.min(cfg.k_max), &cfg.c_max).ok());
        factors.push(Factor {
            indices: pc.idx,
            exponent: ex,
            basis: pc.basis,
            theta: pc.theta,
            levels: pc.levels,
            certificate,
            descent,
            reconstructed,
            strict,
            weak,
            off_block_residual: pc.off_block,
        });
    }
    Ok(Decomposition {
        exponent: a,
        blocks,
        tree,
        factors,
        projectors: reports,
        exact,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantBasis {
    pub onset: u32,
    /// Basis change `W`: the new basis is the columns of `W`.
    pub basis: Matrix<LaurentSeries>,
    /// `N_i + λ_i I` per direction.
    pub constants: Vec<Matrix<PadicScalar>>,
    /// Characteristic-polynomial coefficients `c_1..c_m` of each `N_i`.
    pub charpoly: Vec<Vec<PadicScalar>>,
    pub nilpotent: bool,
    /// `(k, |I - R_k S_k^{-1} S_{k+1} R_{k+1}^{-1}|)`.
    pub decay: Vec<(u32, LogNorm)>,
    pub constancy_residual: LogNorm,
    pub exact: bool,
}

/// Coefficients `c_1..c_m` of `det(xI - A) = x^m + c_1 x^{m-1} + ... + c_m`
/// by the Faddeev-LeVerrier recursion.
pub fn charpoly(a: &Matrix<PadicScalar>, prec: u32) -> Vec<PadicScalar> {
    let m = a.rows();
    let p = a.get(0, 0).p();
    let one = PadicScalar::one(p, prec);
    let id = Matrix::identity(m, &one);
    let mut mk = Matrix::zeros(m, m, &PadicScalar::zero(p));
    let mut c_prev = one.clone();
    let mut out = Vec::with_capacity(m);
    for k in 1..=m {
        mk = a.mul(&mk).add(&id.scale(&c_prev));
        let am = a.mul(&mk);
        let mut tr = PadicScalar::zero(p);
        for i in 0..m {
            tr = tr.add(am.get(i, i));
        }
        let inv_k = PadicScalar::from_rational(p, &Q::new((-1).into(), (k as i64).into()), prec);
        let c = tr.mul(&inv_k);
        out.push(c.clone());
        c_prev = c;
    }
    out
}

fn constant_inverse(r: &Matrix<PadicScalar>) -> Result<Matrix<PadicScalar>> {
    let d = r.det();
    let dinv = d.inv()?;
    Ok(r.adjugate().scale(&dinv))
}

fn twist_table(e: &GammaMatrix, lambda: &[u64]) -> GammaMatrix {
    let qk = e.order();
    let table = e
        .tuples()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let dot = lambda.iter().zip(a).fold(0u128, |acc, (x, y)| (acc + *x as u128 * *y as u128) % qk as u128) as u64;
            let sh = (qk - dot) % qk;
            e.table[i].map(|x| x.map_coeffs(x.ctx(), |c| c.mul_root(sh)))
        })
        .collect();
    GammaMatrix { table, ..e.clone() }
}

/// Constant basis for a piece whose exponent is congruent to `lambda` modulo integers.
pub fn constant_basis(theta: &[Matrix<LaurentSeries>], levels: &[GammaMatrix], lambda: &ExponentEntry, cfg: &FuchsConfig) -> Result<ConstantBasis> {
    let first = levels.first().ok_or(Error::Uncertified)?;
    let (p, n, m) = (first.p, first.nvars, first.rank);
    let bx = first.domain.clone();
    let lam: Vec<PadicScalar> = lambda
        .coords
        .iter()
        .map(|c| crate::diffmod::coord_scalar(c, p, first.prec))
        .collect();
    let ctx = theta[0].get(0, 0).ctx().clone();
    let one = LaurentSeries::one(n, &ctx);
    let id = Matrix::identity(m, &one);
    let theta0: Vec<_> = theta
        .iter()
        .zip(&lam)
        .map(|(t, l)| t.sub(&id.mul_coeff(l)))
        .collect();
    let zero_exp = ExponentMultiset::new(p, vec![ExponentEntry::new(vec![Coord::int(0); n]); m])?;
    let mut ss = Vec::new();
    for k in 1..=cfg.k_max {
        let e = levels
            .iter()
            .find(|t| t.level == k)
            .ok_or_else(|| Error::InsufficientPrecision(format!("no action table at level {k}")))?;
        let res = lambda.residues(p, k)?;
        let res: Vec<u64> = res.iter().map(|x| u64::try_from(x).expect("small residue")).collect();
        let e0 = twist_table(e, &res);
        let s = compute_s(&e0, &zero_exp)?;
        ss.push((k, s));
    }
    let mut invs = Vec::new();
    let mut exact = true;
    for (k, s) in &ss {
        if let Some((inv, ex)) = invert_on(s, &bx, cfg.pad) {
            invs.push((*k, s.clone(), inv));
            exact &= ex;
        } else if !invs.is_empty() {
            return Err(Error::NotInvertible(format!("S at level {k} after the onset")));
        }
    }
    let onset = invs.first().map(|x| x.0).ok_or_else(|| Error::NotInvertible("no invertible S in range".into()))?;
    let mut r = Matrix::identity(m, &PadicScalar::one(p, first.prec));
    let to_series = |x: &Matrix<PadicScalar>| x.map(|c| LaurentSeries::constant(n, &ctx, c.clone()));
    let mut decay = Vec::new();
    for w in invs.windows(2) {
        let (k, _, ref sinv) = w[0];
        let (_, ref s1, _) = w[1];
        let t = to_series(&r).mul(sinv).mul(s1);
        let r1 = t.constant_terms().map(|x| x.constant_term());
        let r1inv = constant_inverse(&r1)?;
        let d = id.sub(&t.mul(&to_series(&r1inv))).sup_lognorm(&bx);
        decay.push((k, d));
        r = r1;
    }
    let (_, s_last, _) = invs.last().expect("onset exists").clone();
    let rinv = constant_inverse(&r)?;
    let w = s_last.mul(&to_series(&rinv));
    let (w_inv, w_exact) = invert_on(&w, &bx, cfg.pad).ok_or_else(|| Error::NotInvertible("basis change".into()))?;
    exact &= w_exact;
    let th = gauge(&theta0, &w, &w_inv);
    let mut constants = Vec::new();
    let mut polys = Vec::new();
    let mut constancy: LogNorm = None;
    let mut nilpotent = true;
    for (i, t) in th.iter().enumerate() {
        let c = t.constant_terms();
        constancy = constancy.max(t.sub(&c).sup_lognorm(&bx));
        let nmat = c.map(|x| x.constant_term());
        let cp = charpoly(&nmat, first.prec);
        nilpotent &= cp.iter().all(|x| x.is_zero());
        let lam_id = Matrix::identity(m, &PadicScalar::one(p, first.prec)).scale(&lam[i]);
        constants.push(nmat.add(&lam_id));
        polys.push(cp);
    }
    let ok = decay
        .iter()
        .all(|(k, d)| d.as_ref().is_none_or(|v| *v <= &cfg.log_tau * q(*k as i64)));
    if !ok {
        let trace: Vec<String> = decay.iter().map(|(k, d)| format!("{k}:{}", fmt_lognorm(d))).collect();
        return Err(Error::DecayNotObserved(format!("decay trace [{}]", trace.join(", "))));
    }
    Ok(ConstantBasis {
        onset,
        basis: w,
        constants,
        charpoly: polys,
        nilpotent,
        decay,
        constancy_residual: constancy,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffmod::{m_lambda, StandardForm};
    use crate::rat::qf;

    fn ser(terms: &[(i64, i64)]) -> LaurentSeries {
        let t: Vec<_> = terms.iter().map(|(e, c)| (vec![*e], *c)).collect();
        LaurentSeries::from_ints(3, 24, 1, &t)
    }

    fn twisted() -> DiffModule {
        let sf = StandardForm::diagonal(3, 24, &[vec![q(0)], vec![qf(1, 2)]]).unwrap();
        let m = DiffModule::from_standard_form(sf).unwrap();
        let u = Matrix::from_rows(vec![vec![ser(&[(0, 1)]), ser(&[(1, 1)])], vec![ser(&[]), ser(&[(0, 1)])]]).unwrap();
        m.apply_twist(&u, &m.domain.clone()).unwrap()
    }

    #[test]
    fn s_for_m_half() {
        let m = m_lambda(3, 24, &[qf(1, 2)]).unwrap();
        let e = crate::diffmod::gamma_action_exact(&m, 2).unwrap();
        let good = ExponentMultiset::from_rationals(3, &[vec![qf(1, 2)]]).unwrap();
        let bad = ExponentMultiset::from_rationals(3, &[vec![q(0)]]).unwrap();
        assert!(compute_s(&e, &good).unwrap().get(0, 0).eq_at_prec(&ser(&[(0, 1)])));
        assert!(compute_s(&e, &bad).unwrap().get(0, 0).is_zero());
    }

    #[test]
    fn twisted_s_is_u_inverse() {
        let m = twisted();
        let tower = ActionTower::exact(&m, 3).unwrap();
        let a = ExponentMultiset::from_rationals(3, &[vec![q(0)], vec![qf(1, 2)]]).unwrap();
        let want = Matrix::from_rows(vec![vec![ser(&[(0, 1)]), ser(&[(1, -1)])], vec![ser(&[]), ser(&[(0, 1)])]]).unwrap();
        for k in 1..=2 {
            assert!(compute_s(tower.level(k).unwrap(), &a).unwrap().eq_at_prec(&want));
        }
        assert_eq!(telescoping_check(tower.level(1).unwrap(), tower.level(2).unwrap(), &a).unwrap(), None);
        let d = descend_exponent(&tower.levels, 2).unwrap();
        assert_eq!(d.residues, vec![vec![0], vec![5]]);
        let cert = verify_exponent_certificate(&tower.levels, &a, 1..=3).unwrap();
        assert!(cert.passed, "{:?}", cert.failures);
        assert_eq!(cert.growth_l, 0);
    }

    #[test]
    fn twisted_decomposes() {
        let m = twisted();
        let cfg = FuchsConfig::default();
        let a = ExponentMultiset::from_rationals(3, &[vec![q(0)], vec![qf(1, 2)]]).unwrap();
        let tower = ActionTower::exact(&m, 3).unwrap();
        let rep = projector_sequence(&m.theta, &tower.levels, &a, &[0], 1..=3, &cfg).unwrap();
        let want = Matrix::from_rows(vec![vec![ser(&[(0, 1)]), ser(&[(1, 1)])], vec![ser(&[]), ser(&[])]]).unwrap();
        assert!(rep.limit.eq_at_prec(&want));
        assert_eq!(rep.horizontality_residual, None);
        let dec = decompose(&m, None, None, &cfg).unwrap();
        assert_eq!(dec.factors.len(), 2);
        for f in &dec.factors {
            assert!(f.certificate.passed);
            assert!(matches!(f.strict, Some(StrictEquiv::Equivalent(_))));
        }
        let v2 = dec.factors[1].basis.column(0);
        assert!(v2[0].eq_at_prec(&ser(&[(1, -1)])));
        assert!(v2[1].eq_at_prec(&ser(&[(0, 1)])));
    }

    #[test]
    fn unipotent_constant_basis() {
        let a = ExponentMultiset::from_rationals(3, &[vec![q(0)], vec![q(0)]]).unwrap();
        let z = PadicScalar::zero(3);
        let o = PadicScalar::one(3, 24);
        let s = Matrix::from_rows(vec![vec![z.clone(), o], vec![z.clone(), z]]).unwrap();
        let sf = StandardForm::new(a, vec![s.clone()], 24).unwrap();
        let m = DiffModule::from_standard_form(sf).unwrap();
        let u = Matrix::from_rows(vec![vec![ser(&[(0, 1)]), ser(&[(1, 1)])], vec![ser(&[]), ser(&[(0, 1)])]]).unwrap();
        let m = m.apply_twist(&u, &m.domain.clone()).unwrap();
        let tower = ActionTower::exact(&m, 3).unwrap();
        let cfg = FuchsConfig::default();
        let cb = constant_basis(&m.theta, &tower.levels, &ExponentEntry::rational(&[q(0)]), &cfg).unwrap();
        assert!(cb.nilpotent);
        assert!(cb.constants[0].sub(&s).is_zero());
        assert_eq!(cb.constancy_residual, None);
        assert!(cb.decay.iter().all(|(_, d)| d.is_none()));
    }
}
