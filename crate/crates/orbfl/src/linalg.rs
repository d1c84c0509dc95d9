//! Dense matrices over the scalar types used throughout the crate.

use std::fmt;

use crate::base_rings::{ArithError, Series};

/// Ring operations needed by [`Matrix`]; elements carry their own context.
pub trait Scalar: Clone + fmt::Debug + PartialEq {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn negate(&self) -> Self;
    fn vanishes(&self) -> bool;
    fn try_inverse(&self) -> Result<Self, ArithError>;
    /// Smaller is a better pivot; `i32::MAX` for zero.
    fn weight(&self) -> i32;

    fn approx_eq(&self, o: &Self) -> bool {
        self.minus(o).vanishes()
    }
}

impl Scalar for Series {
    fn zero_like(&self) -> Self {
        Series::zero(self.field(), self.prec().max(self.rel_prec()))
    }
    fn one_like(&self) -> Self {
        Series::one(self.field(), self.prec().max(self.rel_prec()).max(1))
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn negate(&self) -> Self {
        -self
    }
    fn vanishes(&self) -> bool {
        self.is_zero()
    }
    fn try_inverse(&self) -> Result<Self, ArithError> {
        self.inv()
    }
    fn weight(&self) -> i32 {
        self.valuation()
    }
}

#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: fmt::Display> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.data[i * self.cols + j].to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl<T: Clone> Matrix<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn from_columns(cols: &[Vec<T>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, |x| x.len());
        Matrix::from_fn(r, c, |i, j| cols[j][i].clone())
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

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<T>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        (0..self.cols).map(|j| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn try_map<U: Clone, E>(&self, f: impl Fn(&T) -> Result<U, E>) -> Result<Matrix<U>, E> {
        let data = self.data.iter().map(f).collect::<Result<Vec<_>, _>>()?;
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn entries(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    /// Rows `r0..r1`, columns `c0..c1`.
    pub fn submatrix(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Matrix::from_fn(r1 - r0, c1 - c0, |i, j| self.get(r0 + i, c0 + j).clone())
    }

    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        Matrix::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                other.get(i, j - self.cols).clone()
            }
        })
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros_like(rows: usize, cols: usize, proto: &T) -> Self {
        let z = proto.zero_like();
        Matrix::from_fn(rows, cols, |_, _| z.clone())
    }

    pub fn identity_like(n: usize, proto: &T) -> Self {
        let (z, o) = (proto.zero_like(), proto.one_like());
        Matrix::from_fn(n, n, |i, j| if i == j { o.clone() } else { z.clone() })
    }

    pub fn scalar_like(n: usize, s: &T) -> Self {
        let z = s.zero_like();
        Matrix::from_fn(n, n, |i, j| if i == j { s.clone() } else { z.clone() })
    }

    /// Block matrix `[[a, b], [c, d]]`.
    pub fn blocks(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        assert!(a.rows == b.rows && c.rows == d.rows && a.cols == c.cols && b.cols == d.cols);
        Matrix::from_fn(a.rows + c.rows, a.cols + b.cols, |i, j| match (i < a.rows, j < a.cols) {
            (true, true) => a.get(i, j).clone(),
            (true, false) => b.get(i, j - a.cols).clone(),
            (false, true) => c.get(i - a.rows, j).clone(),
            (false, false) => d.get(i - a.rows, j - a.cols).clone(),
        })
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in product");
        Matrix::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = self.get(i, 0).times(other.get(0, j));
            for k in 1..self.cols {
                acc = acc.plus(&self.get(i, k).times(other.get(k, j)));
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = self.get(i, 0).times(&v[0]);
                for k in 1..self.cols {
                    acc = acc.plus(&self.get(i, k).times(&v[k]));
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(self.rows == other.rows && self.cols == other.cols);
        Matrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).plus(other.get(i, j)))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert!(self.rows == other.rows && self.cols == other.cols);
        Matrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).minus(other.get(i, j)))
    }

    pub fn neg(&self) -> Self {
        self.map(|x| x.negate())
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| s.times(x))
    }

    pub fn trace(&self) -> T {
        assert!(self.is_square());
        let mut acc = self.get(0, 0).clone();
        for i in 1..self.rows {
            acc = acc.plus(self.get(i, i));
        }
        acc
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Matrix::identity_like(self.rows, self.get(0, 0));
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.vanishes())
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.sub(other).is_zero()
    }

    /// Gauss-Jordan inverse, pivoting on the smallest weight in each column.
    pub fn inverse(&self) -> Result<Self, ArithError> {
        assert!(self.is_square(), "inverse of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity_like(n, self.get(0, 0));
        for col in 0..n {
            let piv = (col..n)
                .filter(|&r| !a.get(r, col).vanishes())
                .min_by_key(|&r| a.get(r, col).weight())
                .ok_or_else(|| ArithError::NotInvertible(format!("singular at column {col}")))?;
            a.swap_rows(piv, col);
            inv.swap_rows(piv, col);
            let pinv = a.get(col, col).try_inverse()?;
            a.scale_row(col, &pinv);
            inv.scale_row(col, &pinv);
            for r in 0..n {
                if r != col && !a.get(r, col).vanishes() {
                    let factor = a.get(r, col).clone();
                    a.axpy_row(r, col, &factor);
                    inv.axpy_row(r, col, &factor);
                }
            }
        }
        Ok(inv)
    }

    /// Determinant by elimination over the fraction field.
    pub fn det(&self) -> Result<T, ArithError> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = self.get(0, 0).one_like();
        for col in 0..n {
            let piv = match (col..n)
                .filter(|&r| !a.get(r, col).vanishes())
                .min_by_key(|&r| a.get(r, col).weight())
            {
                Some(p) => p,
                None => return Ok(self.get(0, 0).zero_like()),
            };
            if piv != col {
                a.swap_rows(piv, col);
                det = det.negate();
            }
            let p = a.get(col, col).clone();
            det = det.times(&p);
            let pinv = p.try_inverse()?;
            for r in col + 1..n {
                if !a.get(r, col).vanishes() {
                    let factor = a.get(r, col).times(&pinv);
                    a.axpy_row(r, col, &factor);
                }
            }
        }
        Ok(det)
    }

    /// Characteristic polynomial `det(x - self)`, coefficients from the constant term up.
    ///
    /// Division free (Samuelson-Berkowitz), so it is safe in every characteristic.
    pub fn charpoly(&self) -> Vec<T> {
        assert!(self.is_square());
        let n = self.rows;
        let one = self.get(0, 0).one_like();
        // descending coefficient vector, leading 1 first
        let mut p = vec![one.clone(), self.get(n - 1, n - 1).negate()];
        for k in (0..n - 1).rev() {
            let m = n - k;
            let a11 = self.get(k, k).clone();
            let r: Vec<T> = (k + 1..n).map(|j| self.get(k, j).clone()).collect();
            let c: Vec<T> = (k + 1..n).map(|i| self.get(i, k).clone()).collect();
            let a1 = self.submatrix(k + 1, n, k + 1, n);
            let mut toeplitz = vec![one.clone(), a11.negate()];
            let mut v = c.clone();
            for _ in 2..=m {
                let mut s = r[0].times(&v[0]);
                for i in 1..r.len() {
                    s = s.plus(&r[i].times(&v[i]));
                }
                toeplitz.push(s.negate());
                v = a1.mul_vec(&v);
            }
            let mut next = Vec::with_capacity(m + 1);
            for i in 0..=m {
                let mut acc = one.zero_like();
                for (j, pj) in p.iter().enumerate() {
                    if i >= j {
                        acc = acc.plus(&toeplitz[i - j].times(pj));
                    }
                }
                next.push(acc);
            }
            p = next;
        }
        p.reverse();
        p
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn scale_row(&mut self, r: usize, s: &T) {
        for j in 0..self.cols {
            let v = s.times(self.get(r, j));
            self.set(r, j, v);
        }
    }

    /// row[r] -= factor * row[src]
    fn axpy_row(&mut self, r: usize, src: usize, factor: &T) {
        for j in 0..self.cols {
            let v = self.get(r, j).minus(&factor.times(self.get(src, j)));
            self.set(r, j, v);
        }
    }

    /// Basis of the right null space over a field, one vector per free column.
    pub fn nullspace(&self) -> Result<Vec<Vec<T>>, ArithError> {
        let proto = self.get(0, 0).clone();
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let piv = (row..self.rows)
                .filter(|&r| !a.get(r, col).vanishes())
                .min_by_key(|&r| a.get(r, col).weight());
            let Some(piv) = piv else { continue };
            a.swap_rows(piv, row);
            let pinv = a.get(row, col).try_inverse()?;
            a.scale_row(row, &pinv);
            for r in 0..self.rows {
                if r != row && !a.get(r, col).vanishes() {
                    let factor = a.get(r, col).clone();
                    a.axpy_row(r, row, &factor);
                }
            }
            pivots.push(col);
            row += 1;
        }
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|c| !pivots.contains(c)) {
            let mut v = vec![proto.zero_like(); self.cols];
            v[free] = proto.one_like();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = a.get(r, free).negate();
            }
            basis.push(v);
        }
        Ok(basis)
    }
}

/// Evaluates a polynomial (constant term first) at a square matrix.
pub fn poly_at_matrix<T: Scalar>(coeffs: &[T], m: &Matrix<T>) -> Matrix<T> {
    let n = m.rows();
    let proto = m.get(0, 0);
    let mut acc = Matrix::zeros_like(n, n, proto);
    for c in coeffs.iter().rev() {
        acc = acc.mul(m).add(&Matrix::scalar_like(n, c));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base_rings::ResidueField;

    fn s(f: ResidueField, v: &[i64]) -> Series {
        Series::from_ints(f, 0, v, 20)
    }

    #[test]
    fn inverse_roundtrip() {
        let f = ResidueField::new(5, 1).unwrap();
        let m = Matrix::from_rows(vec![
            vec![s(f, &[0, 1]), s(f, &[1])],
            vec![s(f, &[2]), s(f, &[0, 0, 3])],
        ]);
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).approx_eq(&Matrix::identity_like(2, &s(f, &[1]))));
    }

    #[test]
    fn charpoly_matches_cayley_hamilton() {
        let f = ResidueField::new(3, 1).unwrap();
        let m = Matrix::from_fn(4, 4, |i, j| Series::from_ints(f, 0, &[(i * 3 + j * 5 + 1) as i64, (i + j) as i64], 20));
        let cp = m.charpoly();
        assert_eq!(cp.len(), 5);
        assert!(cp[4].approx_eq(&s(f, &[1])));
        assert!(poly_at_matrix(&cp, &m).is_zero());
        let det = m.det().unwrap();
        let sign = if m.rows() % 2 == 0 { det.clone() } else { det.negate() };
        assert!(cp[0].approx_eq(&sign));
    }

    #[test]
    fn nullspace_of_rank_one() {
        let f = ResidueField::new(5, 1).unwrap();
        let m = Matrix::from_rows(vec![
            vec![s(f, &[1]), s(f, &[2])],
            vec![s(f, &[2]), s(f, &[4])],
        ]);
        let ns = m.nullspace().unwrap();
        assert_eq!(ns.len(), 1);
        assert!(m.mul_vec(&ns[0]).iter().all(|x| x.vanishes()));
    }
}
