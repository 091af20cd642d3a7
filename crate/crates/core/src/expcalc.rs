//! Multisets of points of Z_p^n: the balanced bracket, Liouville classification, weak and
//! strict equivalence, and Liouville partitions.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rat::{fmt_q, rational_mod_pk, Q};
use crate::scalar::{ppow, PadicScalar};

/// One coordinate of an exponent: an exact rational in Z_(p) or a truncated p-adic integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coord {
    Rat(Q),
    Padic(PadicScalar),
}

impl Coord {
    pub fn int(x: i64) -> Self {
        Coord::Rat(Q::from_integer(BigInt::from(x)))
    }

    /// Residue modulo `p^m` in `[0, p^m)`.
    pub fn residue(&self, p: u64, m: u32) -> Result<BigInt> {
        match self {
            Coord::Rat(x) => rational_mod_pk(x, p, m),
            Coord::Padic(x) => {
                if x.p() != p {
                    return Err(Error::PrimeMismatch(x.p(), p));
                }
                x.mod_pk(m)
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Coord::Rat(_))
    }

    pub fn neg(&self) -> Self {
        match self {
            Coord::Rat(x) => Coord::Rat(-x),
            Coord::Padic(x) => Coord::Padic(x.neg()),
        }
    }

    fn as_padic(&self, p: u64, prec: u32) -> Result<PadicScalar> {
        match self {
            Coord::Rat(x) => {
                if (x.denom() % BigInt::from(p)).is_zero() {
                    return Err(Error::DenominatorDivisibleByP);
                }
                Ok(PadicScalar::from_rational(p, x, prec))
            }
            Coord::Padic(x) => Ok(x.clone()),
        }
    }

    pub fn add(&self, o: &Self, p: u64) -> Result<Self> {
        match (self, o) {
            (Coord::Rat(a), Coord::Rat(b)) => Ok(Coord::Rat(a + b)),
            (Coord::Padic(a), b) | (b, Coord::Padic(a)) => {
                let prec = a.abs_prec().unwrap_or(crate::DEFAULT_PREC as i64).max(1) as u32;
                Ok(Coord::Padic(a.add(&b.as_padic(p, prec)?)))
            }
        }
    }

    pub fn sub(&self, o: &Self, p: u64) -> Result<Self> {
        self.add(&o.neg(), p)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coord::Rat(x) => write!(f, "{}", fmt_q(x)),
            Coord::Padic(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentEntry {
    pub coords: Vec<Coord>,
}

impl ExponentEntry {
    pub fn new(coords: Vec<Coord>) -> Self {
        ExponentEntry { coords }
    }

    pub fn rational(xs: &[Q]) -> Self {
        ExponentEntry {
            coords: xs.iter().cloned().map(Coord::Rat).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_exact(&self) -> bool {
        self.coords.iter().all(Coord::is_exact)
    }

    pub fn rationals(&self) -> Option<Vec<Q>> {
        self.coords
            .iter()
            .map(|c| match c {
                Coord::Rat(x) => Some(x.clone()),
                Coord::Padic(_) => None,
            })
            .collect()
    }

    pub fn residues(&self, p: u64, m: u32) -> Result<Vec<BigInt>> {
        self.coords.iter().map(|c| c.residue(p, m)).collect()
    }

    pub fn add(&self, o: &Self, p: u64) -> Result<Self> {
        if self.dim() != o.dim() {
            return Err(Error::DimensionMismatch("entries of different dimension".into()));
        }
        Ok(ExponentEntry {
            coords: self.coords.iter().zip(&o.coords).map(|(a, b)| a.add(b, p)).collect::<Result<_>>()?,
        })
    }

    pub fn neg(&self) -> Self {
        ExponentEntry {
            coords: self.coords.iter().map(Coord::neg).collect(),
        }
    }

    pub fn sub(&self, o: &Self, p: u64) -> Result<Self> {
        self.add(&o.neg(), p)
    }
}

impl fmt::Display for ExponentEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A multiset of exponent entries over a fixed prime.
#[derive(Clone, Debug)]
pub struct ExponentMultiset {
    pub p: u64,
    pub entries: Vec<ExponentEntry>,
}

impl PartialEq for ExponentMultiset {
    /// Multiset equality: the order of entries is irrelevant.
    fn eq(&self, o: &Self) -> bool {
        if self.p != o.p || self.entries.len() != o.entries.len() {
            return false;
        }
        let mut used = vec![false; o.entries.len()];
        'outer: for a in &self.entries {
            for (j, b) in o.entries.iter().enumerate() {
                if !used[j] && a == b {
                    used[j] = true;
                    continue 'outer;
                }
            }
            return false;
        }
        true
    }
}

impl ExponentMultiset {
    pub fn new(p: u64, entries: Vec<ExponentEntry>) -> Result<Self> {
        if let Some(d) = entries.first().map(ExponentEntry::dim) {
            if entries.iter().any(|e| e.dim() != d) {
                return Err(Error::DimensionMismatch("entries of different dimension".into()));
            }
        }
        for e in &entries {
            for c in &e.coords {
                match c {
                    Coord::Rat(x) => {
                        if (x.denom() % BigInt::from(p)).is_zero() {
                            return Err(Error::DenominatorDivisibleByP);
                        }
                    }
                    Coord::Padic(x) => {
                        if x.p() != p {
                            return Err(Error::PrimeMismatch(x.p(), p));
                        }
                        if x.valuation().is_some_and(|v| v < 0) {
                            return Err(Error::Malformed("exponent coordinate is not a p-adic integer".into()));
                        }
                    }
                }
            }
        }
        Ok(ExponentMultiset { p, entries })
    }

    /// From rows of rationals.
    pub fn from_rationals(p: u64, rows: &[Vec<Q>]) -> Result<Self> {
        Self::new(p, rows.iter().map(|r| ExponentEntry::rational(r)).collect())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.entries.first().map_or(0, ExponentEntry::dim)
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().all(ExponentEntry::is_exact)
    }

    /// The entries with the given indices.
    pub fn select(&self, idx: &[usize]) -> Self {
        ExponentMultiset {
            p: self.p,
            entries: idx.iter().map(|&i| self.entries[i].clone()).collect(),
        }
    }

    /// Residues modulo `p^k`, entry by entry.
    pub fn residues(&self, k: u32) -> Result<Vec<Vec<BigInt>>> {
        self.entries.iter().map(|e| e.residues(self.p, k)).collect()
    }

    /// Residues as machine integers (for indexing roots of unity).
    pub fn residues_u64(&self, k: u32) -> Result<Vec<Vec<u64>>> {
        Ok(self
            .residues(k)?
            .into_iter()
            .map(|r| r.into_iter().map(|x| u64::try_from(x).expect("small residue")).collect())
            .collect())
    }

    /// Truncated multiset with entries `r / 1` in `[0, p^k)`, as produced by descent.
    pub fn from_residues(p: u64, k: u32, res: &[Vec<u64>]) -> Self {
        ExponentMultiset {
            p,
            entries: res
                .iter()
                .map(|r| ExponentEntry {
                    coords: r
                        .iter()
                        .map(|&x| Coord::Padic(PadicScalar::from_parts(p, 0, BigInt::from(x), k as i64)))
                        .collect(),
                })
                .collect(),
        }
    }
}

impl fmt::Display for ExponentMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

/// `p^m <x / p^m>`: the balanced residue `min(r, p^m - r)` with `r = x mod p^m`.
pub fn bracket(x: &Coord, p: u64, m: u32) -> Result<BigInt> {
    let r = x.residue(p, m)?;
    Ok(balanced(&r, &ppow(p, m)))
}

fn balanced(r: &BigInt, pm: &BigInt) -> BigInt {
    let s = pm - r;
    if *r <= s {
        r.clone()
    } else {
        s
    }
}

/// Bracket of a plain integer.
pub fn bracket_int(x: &BigInt, p: u64, m: u32) -> BigInt {
    let pm = ppow(p, m);
    balanced(&x.mod_floor(&pm), &pm)
}

/// The finite prefix `(p^m/m) <x/p^m>` for `m = 1..=m_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleProfile {
    pub values: Vec<Q>,
    pub min_value: Option<Q>,
    /// True when the prefix never decreases (consistent with non-Liouville growth).
    pub nondecreasing: bool,
}

pub fn liouville_profile(x: &Coord, p: u64, m_max: u32) -> Result<LiouvilleProfile> {
    let mut values = Vec::with_capacity(m_max as usize);
    for m in 1..=m_max {
        let b = bracket(x, p, m)?;
        values.push(Q::new(b, BigInt::from(m)));
    }
    let min_value = values.iter().min().cloned();
    let nondecreasing = values.windows(2).all(|w| w[0] <= w[1]);
    Ok(LiouvilleProfile {
        values,
        min_value,
        nondecreasing,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RationalClass {
    Integer,
    NonLiouvilleNonInteger,
}

/// Rationals in Z_(p) are never Liouville: a non-integer `a/w` has balanced residues at
/// least `p^m / (2w)` for large `m`.
pub fn classify_rational(x: &Q, p: u64) -> Result<RationalClass> {
    if (x.denom() % BigInt::from(p)).is_zero() {
        return Err(Error::DenominatorDivisibleByP);
    }
    Ok(if x.is_integer() {
        RationalClass::Integer
    } else {
        RationalClass::NonLiouvilleNonInteger
    })
}

/// A truncated p-adic integer `sum_k p^(a_k)` with tower-growth exponents
/// `a_1 = 1, a_(k+1) = p^(a_k)`, known to `prec` digits. Such numbers have bounded
/// `(p^m/m)<x/p^m>` along `m = a_k`, i.e. they behave like Liouville numbers.
pub fn liouville_witness(p: u64, prec: u32) -> (PadicScalar, Vec<u32>) {
    let mut exps = Vec::new();
    let mut a: u64 = 1;
    while a < prec as u64 {
        exps.push(a as u32);
        a = match p.checked_pow(a as u32) {
            Some(x) => x,
            None => break,
        };
    }
    let mut x = BigInt::zero();
    for &e in &exps {
        x += ppow(p, e);
    }
    (PadicScalar::from_parts(p, 0, x, prec as i64), exps)
}

/// Kuhn's augmenting-path matching. `adj[j]` lists admissible left vertices for right
/// vertex `j`; returns `left_of[j]` for a perfect matching if one exists.
pub fn perfect_matching(m: usize, adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    fn augment(j: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &i in &adj[j] {
            if seen[i] {
                continue;
            }
            seen[i] = true;
            if owner[i].is_none_or(|o| augment(o, adj, seen, owner)) {
                owner[i] = Some(j);
                return true;
            }
        }
        false
    }
    let mut owner: Vec<Option<usize>> = vec![None; m];
    for j in 0..adj.len() {
        let mut seen = vec![false; m];
        if !augment(j, adj, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut left_of = vec![0; adj.len()];
    for (i, o) in owner.iter().enumerate() {
        if let Some(j) = o {
            left_of[*j] = i;
        }
    }
    Some(left_of)
}

/// Minimises the largest cost over perfect matchings. `cost[i][j]` is the cost of
/// pairing left `i` with right `j`; returns the bottleneck and `left_of[j]`.
pub fn bottleneck_assignment(cost: &[Vec<BigInt>]) -> (BigInt, Vec<usize>) {
    let m = cost.len();
    if m == 0 {
        return (BigInt::zero(), Vec::new());
    }
    let mut levels: Vec<BigInt> = cost.iter().flatten().cloned().collect();
    levels.sort();
    levels.dedup();
    let (mut lo, mut hi) = (0usize, levels.len() - 1);
    let build = |t: &BigInt| -> Vec<Vec<usize>> {
        (0..m).map(|j| (0..m).filter(|&i| cost[i][j] <= *t).collect()).collect()
    };
    while lo < hi {
        let mid = (lo + hi) / 2;
        if perfect_matching(m, &build(&levels[mid])).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let t = levels[lo].clone();
    let matching = perfect_matching(m, &build(&t)).expect("the largest level admits every edge");
    (t, matching)
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeakEquiv {
    Certified {
        c: Q,
        /// `matchings[h-1][j]` is the index in A matched with `B_j` at horizon `h`.
        matchings: Vec<Vec<usize>>,
        costs: Vec<BigInt>,
    },
    NotWithinBudget {
        c_observed: Q,
        worst_h: u32,
        costs: Vec<BigInt>,
    },
}

impl WeakEquiv {
    pub fn certified(&self) -> Option<&Q> {
        match self {
            WeakEquiv::Certified { c, .. } => Some(c),
            _ => None,
        }
    }
}

fn check_sizes(a: &ExponentMultiset, b: &ExponentMultiset) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::CardinalityMismatch(a.len(), b.len()));
    }
    if a.p != b.p {
        return Err(Error::PrimeMismatch(a.p, b.p));
    }
    if a.dim() != b.dim() && !a.is_empty() {
        return Err(Error::DimensionMismatch("multisets of different dimension".into()));
    }
    Ok(())
}

/// Bottleneck cost at horizon `h`: pairs are charged the largest coordinate bracket of
/// their difference.
pub fn horizon_cost(a: &ExponentMultiset, b: &ExponentMultiset, h: u32) -> Result<(BigInt, Vec<usize>)> {
    let p = a.p;
    let ra = a.residues(h)?;
    let rb = b.residues(h)?;
    let pm = ppow(p, h);
    let m = a.len();
    let mut cost = vec![vec![BigInt::zero(); m]; m];
    for i in 0..m {
        for j in 0..m {
            let mut worst = BigInt::zero();
            for (x, y) in ra[i].iter().zip(&rb[j]) {
                let d = balanced(&(x - y).mod_floor(&pm), &pm);
                if d > worst {
                    worst = d;
                }
            }
            cost[i][j] = worst;
        }
    }
    Ok(bottleneck_assignment(&cost))
}

/// Certifies the least `c` with `cost_h <= c h` for `h = 1..=h_max`.
pub fn weak_equiv(a: &ExponentMultiset, b: &ExponentMultiset, h_max: u32, c_max: &Q) -> Result<WeakEquiv> {
    check_sizes(a, b)?;
    let mut c = Q::zero();
    let mut worst_h = 1;
    let mut matchings = Vec::new();
    let mut costs = Vec::new();
    for h in 1..=h_max {
        let (cost, sigma) = horizon_cost(a, b, h).map_err(|e| match e {
            Error::InsufficientPrecision(m) => Error::InsufficientPrecision(format!("horizon {h}: {m}")),
            other => other,
        })?;
        let ratio = Q::new(cost.clone(), BigInt::from(h));
        if ratio > c {
            c = ratio;
            worst_h = h;
        }
        costs.push(cost);
        matchings.push(sigma);
    }
    if c > *c_max {
        return Ok(WeakEquiv::NotWithinBudget {
            c_observed: c,
            worst_h,
            costs,
        });
    }
    Ok(WeakEquiv::Certified { c, matchings, costs })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StrictEquiv {
    /// `perm[j]` is the index in A matched with `B_j`.
    Equivalent(Vec<usize>),
    NotEquivalent,
    Inconclusive,
}

enum Edge {
    Certain,
    Maybe,
    No,
}

fn integer_difference(a: &ExponentEntry, b: &ExponentEntry) -> Edge {
    let mut maybe = false;
    for (x, y) in a.coords.iter().zip(&b.coords) {
        match (x, y) {
            (Coord::Rat(x), Coord::Rat(y)) => {
                if !(x - y).is_integer() {
                    return Edge::No;
                }
            }
            _ => maybe = true,
        }
    }
    if maybe {
        Edge::Maybe
    } else {
        Edge::Certain
    }
}

/// Exact for rational entries; truncated entries can only make the answer inconclusive.
pub fn strict_equiv(a: &ExponentMultiset, b: &ExponentMultiset) -> Result<StrictEquiv> {
    check_sizes(a, b)?;
    let m = a.len();
    let mut certain = vec![Vec::new(); m];
    let mut any = vec![Vec::new(); m];
    for j in 0..m {
        for i in 0..m {
            match integer_difference(&a.entries[i], &b.entries[j]) {
                Edge::Certain => {
                    certain[j].push(i);
                    any[j].push(i);
                }
                Edge::Maybe => any[j].push(i),
                Edge::No => {}
            }
        }
    }
    if let Some(perm) = perfect_matching(m, &certain) {
        return Ok(StrictEquiv::Equivalent(perm));
    }
    if perfect_matching(m, &any).is_some() {
        return Ok(StrictEquiv::Inconclusive);
    }
    Ok(StrictEquiv::NotEquivalent)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlgebraOp {
    Union,
    PairwiseSum,
    Negate,
    Difference,
}

/// Union, pairwise sum `{a + b}`, negation of `a`, and the difference set `{a_i - a_j}`
/// of `a` (the second operand is ignored for the unary operations).
pub fn exponent_algebra(a: &ExponentMultiset, b: &ExponentMultiset, op: AlgebraOp) -> Result<ExponentMultiset> {
    let p = a.p;
    let entries = match op {
        AlgebraOp::Union => a.entries.iter().chain(&b.entries).cloned().collect(),
        AlgebraOp::PairwiseSum => {
            let mut v = Vec::with_capacity(a.len() * b.len());
            for x in &a.entries {
                for y in &b.entries {
                    v.push(x.add(y, p)?);
                }
            }
            v
        }
        AlgebraOp::Negate => a.entries.iter().map(ExponentEntry::neg).collect(),
        AlgebraOp::Difference => {
            let mut v = Vec::with_capacity(a.len() * a.len());
            for x in &a.entries {
                for y in &a.entries {
                    v.push(x.sub(y, p)?);
                }
            }
            v
        }
    };
    ExponentMultiset::new(p, entries)
}

/// Groups rational entries by their class modulo Z^n; blocks are index lists in order of
/// first appearance.
pub fn partition_cosets(a: &ExponentMultiset) -> Result<Vec<Vec<usize>>> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut keys: BTreeMap<Vec<Q>, usize> = BTreeMap::new();
    for (i, e) in a.entries.iter().enumerate() {
        let r = e
            .rationals()
            .ok_or_else(|| Error::Inconclusive("truncated entries have no decidable coset".into()))?;
        let key: Vec<Q> = r.iter().map(|x| x - x.floor()).collect();
        match keys.get(&key) {
            Some(&b) => blocks[b].push(i),
            None => {
                keys.insert(key, blocks.len());
                blocks.push(vec![i]);
            }
        }
    }
    Ok(blocks)
}

/// How a partition was certified: splits along a direction, down to the original blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessTree {
    Leaf(usize),
    Split { direction: usize, children: Vec<WitnessTree> },
}

impl WitnessTree {
    /// Indices of the original blocks below this node.
    pub fn blocks(&self) -> Vec<usize> {
        match self {
            WitnessTree::Leaf(b) => vec![*b],
            WitnessTree::Split { children, .. } => children.iter().flat_map(|c| c.blocks()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartitionCheck {
    Valid(WitnessTree),
    Invalid(String),
    Inconclusive(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionMode {
    /// Zero-based direction index.
    Direction(usize),
    Recursive,
}

fn validate_blocks(m: usize, blocks: &[Vec<usize>]) -> Result<()> {
    let mut seen = vec![false; m];
    for &i in blocks.iter().flatten() {
        if i >= m || seen[i] {
            return Err(Error::NotAPartition);
        }
        seen[i] = true;
    }
    if seen.iter().any(|s| !s) || blocks.iter().any(|b| b.is_empty()) {
        return Err(Error::NotAPartition);
    }
    Ok(())
}

enum Cross {
    Good,
    Bad(String),
    Unknown(String),
}

fn cross_ok(a: &ExponentMultiset, x: usize, y: usize, r: usize) -> Result<Cross> {
    let d = a.entries[x].coords[r].sub(&a.entries[y].coords[r], a.p)?;
    match d {
        Coord::Rat(q) => Ok(match classify_rational(&q, a.p)? {
            RationalClass::Integer => Cross::Bad(format!(
                "entries {x} and {y} differ by the integer {} in direction {}",
                fmt_q(&q),
                r + 1
            )),
            RationalClass::NonLiouvilleNonInteger => Cross::Good,
        }),
        Coord::Padic(_) => Ok(Cross::Unknown(format!(
            "difference of entries {x} and {y} is truncated in direction {}",
            r + 1
        ))),
    }
}

/// Checks a Liouville partition of `a` given by index blocks.
pub fn check_liouville_partition(a: &ExponentMultiset, blocks: &[Vec<usize>], mode: PartitionMode) -> Result<PartitionCheck> {
    validate_blocks(a.len(), blocks)?;
    if blocks.len() == 1 {
        return Ok(PartitionCheck::Valid(WitnessTree::Leaf(0)));
    }
    match mode {
        PartitionMode::Direction(r) => {
            if r >= a.dim() {
                return Err(Error::DimensionMismatch(format!("direction {} out of range", r + 1)));
            }
            let mut unknown = None;
            for (bi, b) in blocks.iter().enumerate() {
                for c in &blocks[bi + 1..] {
                    for &x in b {
                        for &y in c {
                            match cross_ok(a, x, y, r)? {
                                Cross::Good => {}
                                Cross::Bad(w) => return Ok(PartitionCheck::Invalid(w)),
                                Cross::Unknown(w) => unknown = Some(w),
                            }
                        }
                    }
                }
            }
            if let Some(w) = unknown {
                return Ok(PartitionCheck::Inconclusive(w));
            }
            Ok(PartitionCheck::Valid(WitnessTree::Split {
                direction: r,
                children: (0..blocks.len()).map(WitnessTree::Leaf).collect(),
            }))
        }
        PartitionMode::Recursive => {
            let ids: Vec<usize> = (0..blocks.len()).collect();
            recursive_check(a, blocks, &ids)
        }
    }
}

fn recursive_check(a: &ExponentMultiset, blocks: &[Vec<usize>], ids: &[usize]) -> Result<PartitionCheck> {
    if ids.len() == 1 {
        return Ok(PartitionCheck::Valid(WitnessTree::Leaf(ids[0])));
    }
    let mut last_problem = String::from("no direction separates the blocks");
    let mut saw_unknown = false;
    for r in 0..a.dim() {
        // union-find over the blocks in `ids`: join when some cross difference is not
        // certified as a non-Liouville non-integer
        let mut parent: Vec<usize> = (0..ids.len()).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut x = x;
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for u in 0..ids.len() {
            for v in u + 1..ids.len() {
                let mut joined = false;
                for &x in &blocks[ids[u]] {
                    for &y in &blocks[ids[v]] {
                        match cross_ok(a, x, y, r)? {
                            Cross::Good => {}
                            Cross::Bad(w) => {
                                last_problem = w;
                                joined = true;
                            }
                            Cross::Unknown(w) => {
                                last_problem = w;
                                saw_unknown = true;
                                joined = true;
                            }
                        }
                        if joined {
                            break;
                        }
                    }
                    if joined {
                        break;
                    }
                }
                if joined {
                    let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
                    parent[ru] = rv;
                }
            }
        }
        let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for u in 0..ids.len() {
            let root = find(&mut parent, u);
            comps.entry(root).or_default().push(ids[u]);
        }
        if comps.len() < 2 {
            continue;
        }
        let mut groups: Vec<Vec<usize>> = comps.into_values().collect();
        groups.sort();
        let mut children = Vec::with_capacity(groups.len());
        let mut ok = true;
        for g in &groups {
            match recursive_check(a, blocks, g)? {
                PartitionCheck::Valid(t) => children.push(t),
                PartitionCheck::Invalid(w) => {
                    last_problem = w;
                    ok = false;
                    break;
                }
                PartitionCheck::Inconclusive(w) => {
                    last_problem = w;
                    saw_unknown = true;
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(PartitionCheck::Valid(WitnessTree::Split { direction: r, children }));
        }
    }
    if saw_unknown {
        Ok(PartitionCheck::Inconclusive(last_problem))
    } else {
        Ok(PartitionCheck::Invalid(last_problem))
    }
}

/// Rational reconstruction of a truncated coordinate (`x mod p^k` to a small fraction).
pub fn reconstruct_entry(e: &ExponentEntry, p: u64, k: u32) -> Option<ExponentEntry> {
    let m = ppow(p, k);
    let mut out = Vec::with_capacity(e.dim());
    for c in &e.coords {
        match c {
            Coord::Rat(x) => out.push(Coord::Rat(x.clone())),
            Coord::Padic(_) => {
                let r = c.residue(p, k).ok()?;
                out.push(Coord::Rat(crate::rat::reconstruct_rational(&r, &m)?));
            }
        }
    }
    Some(ExponentEntry { coords: out })
}

pub fn reconstruct_multiset(a: &ExponentMultiset, k: u32) -> Option<ExponentMultiset> {
    let entries: Option<Vec<_>> = a.entries.iter().map(|e| reconstruct_entry(e, a.p, k)).collect();
    Some(ExponentMultiset { p: a.p, entries: entries? })
}

/// `"r mod p^k"` rendering of each residue.
pub fn fmt_residue(r: &BigInt, p: u64, k: u32) -> String {
    format!("{} mod {}", r, ppow(p, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qf};

    fn ms(p: u64, xs: &[Q]) -> ExponentMultiset {
        ExponentMultiset::from_rationals(p, &xs.iter().map(|x| vec![x.clone()]).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn bracket_examples() {
        assert_eq!(bracket(&Coord::int(0), 3, 4).unwrap(), BigInt::from(0));
        assert_eq!(bracket(&Coord::Rat(qf(1, 2)), 3, 2).unwrap(), BigInt::from(4));
        assert_eq!(bracket(&Coord::int(5), 3, 1).unwrap(), BigInt::from(1));
    }

    #[test]
    fn half_profile_grows() {
        let prof = liouville_profile(&Coord::Rat(qf(1, 2)), 3, 5).unwrap();
        for (i, v) in prof.values.iter().enumerate() {
            let m = i as i64 + 1;
            assert_eq!(*v, qf((3i64.pow(m as u32) - 1) / 2, m));
        }
        assert!(prof.nondecreasing);
    }

    #[test]
    fn classification() {
        assert_eq!(classify_rational(&q(7), 3).unwrap(), RationalClass::Integer);
        assert_eq!(classify_rational(&qf(1, 2), 3).unwrap(), RationalClass::NonLiouvilleNonInteger);
        assert!(classify_rational(&qf(1, 3), 3).is_err());
    }

    #[test]
    fn weak_examples() {
        let a = ms(3, &[q(0)]);
        let b = ms(3, &[q(7)]);
        match weak_equiv(&a, &b, 6, &q(10)).unwrap() {
            WeakEquiv::Certified { c, costs, .. } => {
                assert_eq!(c, qf(7, 3));
                let want: Vec<BigInt> = [1, 2, 7, 7, 7, 7].iter().map(|&x| BigInt::from(x)).collect();
                assert_eq!(costs, want);
            }
            other => panic!("{other:?}"),
        }
        let h = ms(3, &[qf(1, 2)]);
        match weak_equiv(&a, &h, 6, &q(10)).unwrap() {
            WeakEquiv::NotWithinBudget { costs, .. } => assert_eq!(costs[5], BigInt::from(364)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn strict_examples() {
        let a = ExponentMultiset::from_rationals(3, &[vec![qf(1, 2), q(0)]]).unwrap();
        let b = ExponentMultiset::from_rationals(3, &[vec![qf(11, 2), q(-3)]]).unwrap();
        assert_eq!(strict_equiv(&a, &b).unwrap(), StrictEquiv::Equivalent(vec![0]));
        assert_eq!(
            strict_equiv(&ms(3, &[q(0)]), &ms(3, &[qf(1, 2)])).unwrap(),
            StrictEquiv::NotEquivalent
        );
    }

    #[test]
    fn algebra_and_cosets() {
        let a = ms(3, &[q(0), qf(1, 2)]);
        let d = exponent_algebra(&a, &a, AlgebraOp::Difference).unwrap();
        assert_eq!(d, ms(3, &[q(0), qf(-1, 2), qf(1, 2), q(0)]));
        let c = ms(3, &[q(0), q(3), qf(1, 2)]);
        assert_eq!(partition_cosets(&c).unwrap(), vec![vec![0, 1], vec![2]]);
        let two = ExponentMultiset::from_rationals(3, &[vec![q(0), qf(1, 2)], vec![q(1), qf(1, 2)], vec![q(0), q(0)]]).unwrap();
        assert_eq!(partition_cosets(&two).unwrap(), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn partitions() {
        let a = ms(3, &[q(0), qf(1, 2)]);
        assert!(matches!(
            check_liouville_partition(&a, &[vec![0], vec![1]], PartitionMode::Direction(0)).unwrap(),
            PartitionCheck::Valid(_)
        ));
        let b = ms(3, &[q(0), q(3)]);
        assert!(matches!(
            check_liouville_partition(&b, &[vec![0], vec![1]], PartitionMode::Direction(0)).unwrap(),
            PartitionCheck::Invalid(_)
        ));
        assert!(matches!(
            check_liouville_partition(&b, &[vec![0, 1]], PartitionMode::Recursive).unwrap(),
            PartitionCheck::Valid(WitnessTree::Leaf(0))
        ));
        assert_eq!(
            check_liouville_partition(&b, &[vec![0]], PartitionMode::Recursive),
            Err(Error::NotAPartition)
        );
    }

    #[test]
    fn recursive_needs_two_directions() {
        // direction 1 separates {0,1} from {2}; inside, only direction 2 separates
        let a = ExponentMultiset::from_rationals(
            5,
            &[vec![q(0), q(0)], vec![q(1), qf(1, 2)], vec![qf(1, 3), q(0)]],
        )
        .unwrap();
        let blocks = vec![vec![0], vec![1], vec![2]];
        assert!(matches!(
            check_liouville_partition(&a, &blocks, PartitionMode::Direction(0)).unwrap(),
            PartitionCheck::Invalid(_)
        ));
        match check_liouville_partition(&a, &blocks, PartitionMode::Recursive).unwrap() {
            PartitionCheck::Valid(WitnessTree::Split { direction, children }) => {
                assert_eq!(direction, 0);
                assert_eq!(children.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn witness_profile_is_bounded_on_gaps() {
        let (x, exps) = liouville_witness(2, 20);
        assert_eq!(exps, vec![1, 2, 4, 16]);
        let c = Coord::Padic(x);
        for &m in &exps[1..] {
            let b = bracket(&c, 2, m).unwrap();
            assert!(b <= BigInt::from(2 * m));
        }
    }
}
