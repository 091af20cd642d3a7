//! Dense linear algebra over Q_p with valuation pivoting.

use crate::error::{Error, Result};
use crate::scalar::PadicScalar;

fn pivot_row(a: &[Vec<PadicScalar>], col: usize, from: usize) -> Option<usize> {
    let mut best: Option<(i64, usize)> = None;
    for (r, row) in a.iter().enumerate().skip(from) {
        if let Some(v) = row[col].valuation() {
            if best.is_none_or(|(bv, _)| v < bv) {
                best = Some((v, r));
            }
        }
    }
    best.map(|(_, r)| r)
}

/// Solves `a x = b` for square `a`.
pub fn solve(a: &[Vec<PadicScalar>], b: &[PadicScalar]) -> Result<Vec<PadicScalar>> {
    let n = a.len();
    if b.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("solve needs a square system".into()));
    }
    let mut m: Vec<Vec<PadicScalar>> = a
        .iter()
        .zip(b)
        .map(|(r, x)| {
            let mut r = r.clone();
            r.push(x.clone());
            r
        })
        .collect();
    for c in 0..n {
        let r = pivot_row(&m, c, c).ok_or_else(|| Error::NotInvertible("singular linear system".into()))?;
        m.swap(c, r);
        let inv = m[c][c].inv()?;
        for j in c..=n {
            m[c][j] = m[c][j].mul(&inv);
        }
        for i in 0..n {
            if i == c || m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone();
            for j in c..=n {
                let t = f.mul(&m[c][j]);
                m[i][j] = m[i][j].sub(&t);
            }
        }
    }
    Ok(m.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

/// Least-squares-free solve of a possibly overdetermined but consistent system: pivots
/// on the columns, then checks the leftover rows vanish. Returns the solution and the
/// minimum valuation of the leftover rows (`None` if they vanish at precision).
pub fn solve_consistent(a: &[Vec<PadicScalar>], b: &[PadicScalar]) -> Result<(Vec<PadicScalar>, Option<i64>)> {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    if b.len() != rows {
        return Err(Error::DimensionMismatch("rhs length".into()));
    }
    let mut m: Vec<Vec<PadicScalar>> = a
        .iter()
        .zip(b)
        .map(|(r, x)| {
            let mut r = r.clone();
            r.push(x.clone());
            r
        })
        .collect();
    let mut piv_rows = Vec::with_capacity(cols);
    let mut next = 0;
    for c in 0..cols {
        let r = pivot_row(&m, c, next).ok_or_else(|| Error::NotInvertible("rank deficient system".into()))?;
        m.swap(next, r);
        let inv = m[next][c].inv()?;
        for j in c..=cols {
            m[next][j] = m[next][j].mul(&inv);
        }
        for i in 0..rows {
            if i == next || m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].clone();
            for j in c..=cols {
                let t = f.mul(&m[next][j]);
                m[i][j] = m[i][j].sub(&t);
            }
        }
        piv_rows.push(next);
        next += 1;
    }
    let leftover = m[next..].iter().filter_map(|r| r[cols].valuation()).min();
    Ok((piv_rows.iter().map(|&r| m[r][cols].clone()).collect(), leftover))
}

/// Determinant by elimination.
pub fn det(a: &[Vec<PadicScalar>]) -> PadicScalar {
    let n = a.len();
    let p = a[0][0].p();
    let mut m = a.to_vec();
    let mut d = PadicScalar::one(p, crate::DEFAULT_PREC);
    for c in 0..n {
        let Some(r) = pivot_row(&m, c, c) else {
            return PadicScalar::zero(p);
        };
        if r != c {
            m.swap(c, r);
            d = d.neg();
        }
        d = d.mul(&m[c][c]);
        let inv = m[c][c].inv().expect("pivot is nonzero");
        for i in c + 1..n {
            if m[i][c].is_zero() {
                continue;
            }
            let f = m[i][c].mul(&inv);
            for j in c..n {
                let t = f.mul(&m[c][j]);
                m[i][j] = m[i][j].sub(&t);
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: i64) -> PadicScalar {
        PadicScalar::from_i64(5, x, 12)
    }

    #[test]
    fn small_system() {
        let a = vec![vec![s(2), s(1)], vec![s(1), s(3)]];
        let x = solve(&a, &[s(5), s(10)]).unwrap();
        assert!(x[0].eq_at_prec(&s(1)));
        assert!(x[1].eq_at_prec(&s(3)));
        assert!(det(&a).eq_at_prec(&s(5)));
    }
}
