//! Small dense matrices over a commutative ring.

use std::fmt;

use crate::error::{Error, Result};
use crate::laurent::{Coeff, CycSeries, LaurentSeries, LogRadiusBox, Series, Window};
use crate::rat::LogNorm;
use crate::scalar::{CycScalar, PadicScalar};

/// The ring operations a [`Matrix`] needs. `zero_like`/`one_like` build constants of
/// the same flavour (prime, level, variables) as an existing element.
pub trait Ring: Clone + PartialEq + fmt::Debug {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn is_zero_elt(&self) -> bool;
    fn radd(&self, o: &Self) -> Self;
    fn rsub(&self, o: &Self) -> Self;
    fn rmul(&self, o: &Self) -> Self;
    fn rneg(&self) -> Self;
}

impl<C: Coeff> Ring for Series<C> {
    fn zero_like(&self) -> Self {
        Series::zero(self.nvars(), self.ctx())
    }
    fn one_like(&self) -> Self {
        Series::one(self.nvars(), self.ctx())
    }
    fn is_zero_elt(&self) -> bool {
        self.is_zero()
    }
    fn radd(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn rsub(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn rmul(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn rneg(&self) -> Self {
        self.neg()
    }
}

impl Ring for PadicScalar {
    fn zero_like(&self) -> Self {
        PadicScalar::zero(self.p())
    }
    fn one_like(&self) -> Self {
        PadicScalar::one(self.p(), self.rel_prec().unwrap_or(crate::DEFAULT_PREC))
    }
    fn is_zero_elt(&self) -> bool {
        self.is_zero()
    }
    fn radd(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn rsub(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn rmul(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn rneg(&self) -> Self {
        self.neg()
    }
}

impl Ring for CycScalar {
    fn zero_like(&self) -> Self {
        CycScalar::zero(self.p(), self.level())
    }
    fn one_like(&self) -> Self {
        let prec = self.coords().iter().filter_map(|c| c.rel_prec()).max().unwrap_or(crate::DEFAULT_PREC);
        CycScalar::one(self.p(), self.level(), prec)
    }
    fn is_zero_elt(&self) -> bool {
        self.is_zero()
    }
    fn radd(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn rsub(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn rmul(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn rneg(&self) -> Self {
        self.neg()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Ring> Matrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn<F: FnMut(usize, usize) -> T>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize, proto: &T) -> Self {
        let z = proto.zero_like();
        Self::from_fn(rows, cols, |_, _| z.clone())
    }

    pub fn identity(m: usize, proto: &T) -> Self {
        let z = proto.zero_like();
        let o = proto.one_like();
        Self::from_fn(m, m, |i, j| if i == j { o.clone() } else { z.clone() })
    }

    pub fn diag(d: Vec<T>) -> Self {
        let m = d.len();
        let z = d[0].zero_like();
        Self::from_fn(m, m, |i, j| if i == j { d[i].clone() } else { z.clone() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: T) {
        self.data[i * self.cols + j] = x;
    }

    pub fn entries(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn row_vecs(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec()).collect()
    }

    pub fn map<U: Ring, F: Fn(&T) -> U>(&self, f: F) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn try_map<U: Ring, F: Fn(&T) -> Result<U>>(&self, f: F) -> Result<Matrix<U>> {
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect::<Result<_>>()?,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero_elt())
    }

    fn same_shape(&self, o: &Self) -> Result<()> {
        if self.rows != o.rows || self.cols != o.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Self {
        self.same_shape(o).expect("matrix shapes");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.radd(b)).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.same_shape(o).expect("matrix shapes");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.rsub(b)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.map(|x| x.rneg())
    }

    pub fn try_mul(&self, o: &Self) -> Result<Self> {
        if self.cols != o.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let mut data = Vec::with_capacity(self.rows * o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut acc: Option<T> = None;
                for l in 0..self.cols {
                    let a = self.get(i, l);
                    let b = o.get(l, j);
                    if a.is_zero_elt() || b.is_zero_elt() {
                        continue;
                    }
                    let prod = a.rmul(b);
                    acc = Some(match acc {
                        Some(x) => x.radd(&prod),
                        None => prod,
                    });
                }
                data.push(acc.unwrap_or_else(|| self.data[0].zero_like()));
            }
        }
        Ok(Matrix {
            rows: self.rows,
            cols: o.cols,
            data,
        })
    }

    pub fn mul(&self, o: &Self) -> Self {
        self.try_mul(o).expect("matrix shapes")
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|x| x.rmul(c))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    /// Kronecker product, rows and columns ordered as `(i_a, i_b)` lexicographically.
    pub fn kron(&self, o: &Self) -> Self {
        Self::from_fn(self.rows * o.rows, self.cols * o.cols, |i, j| {
            self.get(i / o.rows, j / o.cols).rmul(o.get(i % o.rows, j % o.cols))
        })
    }

    pub fn block_diag(&self, o: &Self) -> Self {
        let z = self.data.first().or(o.data.first()).expect("nonempty").zero_like();
        Self::from_fn(self.rows + o.rows, self.cols + o.cols, |i, j| {
            if i < self.rows && j < self.cols {
                self.get(i, j).clone()
            } else if i >= self.rows && j >= self.cols {
                o.get(i - self.rows, j - self.cols).clone()
            } else {
                z.clone()
            }
        })
    }

    /// Rows `ri` and columns `ci`.
    pub fn submatrix(&self, ri: &[usize], ci: &[usize]) -> Self {
        Self::from_fn(ri.len(), ci.len(), |i, j| self.get(ri[i], ci[j]).clone())
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn from_columns(cols: &[Vec<T>]) -> Self {
        let r = cols[0].len();
        Self::from_fn(r, cols.len(), |i, j| cols[j][i].clone())
    }

    /// Determinant by cofactor expansion along the first row (ranks here are at most 4).
    pub fn det(&self) -> T {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let idx: Vec<usize> = (0..self.rows).collect();
        self.minor_det(&idx, &idx)
    }

    fn minor_det(&self, ri: &[usize], ci: &[usize]) -> T {
        match ri.len() {
            0 => self.data[0].one_like(),
            1 => self.get(ri[0], ci[0]).clone(),
            2 => {
                let a = self.get(ri[0], ci[0]).rmul(self.get(ri[1], ci[1]));
                let b = self.get(ri[0], ci[1]).rmul(self.get(ri[1], ci[0]));
                a.rsub(&b)
            }
            _ => {
                let mut acc = self.data[0].zero_like();
                let rest_r = &ri[1..];
                for (k, &c) in ci.iter().enumerate() {
                    let a = self.get(ri[0], c);
                    if a.is_zero_elt() {
                        continue;
                    }
                    let rest_c: Vec<usize> = ci.iter().copied().filter(|&x| x != c).collect();
                    let term = a.rmul(&self.minor_det(rest_r, &rest_c));
                    acc = if k % 2 == 0 { acc.radd(&term) } else { acc.rsub(&term) };
                }
                acc
            }
        }
    }

    /// Classical adjoint: `A * adj(A) = det(A) I`.
    pub fn adjugate(&self) -> Self {
        let m = self.rows;
        if m == 1 {
            return Self::identity(1, &self.data[0]);
        }
        Self::from_fn(m, m, |i, j| {
            let ri: Vec<usize> = (0..m).filter(|&x| x != j).collect();
            let ci: Vec<usize> = (0..m).filter(|&x| x != i).collect();
            let d = self.minor_det(&ri, &ci);
            if (i + j) % 2 == 0 {
                d
            } else {
                d.rneg()
            }
        })
    }

    pub fn commutator(&self, o: &Self) -> Self {
        self.mul(o).sub(&o.mul(self))
    }

    /// `self^k` for `k >= 0`.
    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.rows, &self.data[0]);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }
}

impl<C: Coeff> Matrix<Series<C>> {
    pub fn sup_lognorm(&self, bx: &LogRadiusBox) -> LogNorm {
        self.data.iter().map(|x| x.sup_lognorm(bx)).max().flatten()
    }

    pub fn theta_deriv(&self, i: usize) -> Self {
        self.map(|x| x.theta_deriv(i))
    }

    pub fn constant_terms(&self) -> Self {
        self.map(|x| Series::constant(x.nvars(), x.ctx(), x.constant_term()))
    }

    pub fn eq_at_prec(&self, o: &Self) -> bool {
        self.rows == o.rows && self.cols == o.cols && self.sub(o).is_zero()
    }

    pub fn mul_coeff(&self, c: &C) -> Self {
        self.map(|x| x.mul_coeff(c))
    }

    /// Inverse on a box: adjugate times a geometric-series inverse of the determinant.
    /// The second value bounds `A * inv - I` on the box (minus infinity when exact).
    pub fn inverse_on_box(&self, bx: &LogRadiusBox, window: &Window) -> Result<(Self, LogNorm)> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("inverse of a non-square matrix".into()));
        }
        let d = self.det();
        if d.is_zero() {
            return Err(Error::NotInvertible("determinant vanishes".into()));
        }
        let (dinv, _) = d.invert_unit(bx, window).map_err(|e| match e {
            Error::NotUnit => Error::NotInvertible("determinant is not a unit on the box".into()),
            other => other,
        })?;
        let inv = self.adjugate().map(|x| x.mul(&dinv));
        let id = Self::identity(self.rows, &self.data[0]);
        let resid = self.mul(&inv).sub(&id).sup_lognorm(bx);
        Ok((inv, resid))
    }

    /// Window large enough for inverses of entries of this matrix: the support hull
    /// widened by `pad` in every direction.
    pub fn padded_window(&self, pad: i64) -> Window {
        let n = self.data.first().map_or(0, |x| x.nvars());
        let mut w: Window = vec![(0, 0); n];
        for x in &self.data {
            if let Some(s) = x.support_window() {
                for (b, (lo, hi)) in w.iter_mut().zip(s) {
                    b.0 = b.0.min(lo);
                    b.1 = b.1.max(hi);
                }
            }
        }
        let span = w.iter().map(|(a, b)| b - a).max().unwrap_or(0);
        w.iter().map(|(a, b)| (a - pad - span, b + pad + span)).collect()
    }
}

impl Matrix<LaurentSeries> {
    pub fn to_cyc(&self, level: u32) -> Matrix<CycSeries> {
        self.map(|x| x.to_cyc(level))
    }
}

impl Matrix<CycSeries> {
    pub fn substitute_roots(&self, a: &[u64]) -> Self {
        self.map(|x| x.substitute_roots(a))
    }

    pub fn descend(&self) -> Result<Matrix<LaurentSeries>> {
        self.try_map(|x| x.descend())
    }

    pub fn galois(&self, c: u64) -> Self {
        self.map(|x| x.galois(c))
    }
}

impl<T: Ring + fmt::Display> fmt::Display for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    fn s(c: &[i64], lo: i64) -> LaurentSeries {
        LaurentSeries::from_coeffs_1(3, 12, lo, c)
    }

    #[test]
    fn unipotent_inverse_is_exact() {
        let u = Matrix::from_rows(vec![vec![s(&[1], 0), s(&[0, 1], 0)], vec![s(&[0], 0), s(&[1], 0)]]).unwrap();
        let bx = LogRadiusBox::point(vec![q(0)]);
        let (inv, res) = u.inverse_on_box(&bx, &vec![(-8, 8)]).unwrap();
        assert_eq!(res, None);
        assert_eq!(*inv.get(0, 1), s(&[0, -1], 0));
    }

    #[test]
    fn det_and_adjugate() {
        let m = Matrix::from_rows(vec![
            vec![s(&[2], 0), s(&[1], 0), s(&[0], 0)],
            vec![s(&[0], 0), s(&[1], 0), s(&[1], 0)],
            vec![s(&[1], 0), s(&[0], 0), s(&[1], 0)],
        ])
        .unwrap();
        assert!(m.det().eq_at_prec(&s(&[3], 0)));
        let id = Matrix::identity(3, &s(&[1], 0)).map(|x| x.mul_int(3));
        assert!(m.mul(&m.adjugate()).eq_at_prec(&id));
    }
}
