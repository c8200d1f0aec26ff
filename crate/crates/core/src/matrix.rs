//! Dense square matrices over exact rationals.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type ExactScalar = BigRational;

/// Row-major `n x n` matrix of exact rationals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    n: usize,
    data: Vec<ExactScalar>,
}

impl RatMatrix {
    pub fn zeros(n: usize) -> Self {
        RatMatrix { n, data: vec![ExactScalar::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = ExactScalar::one();
        }
        m
    }

    pub fn diagonal(diag: &[ExactScalar]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = d.clone();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<ExactScalar>>) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(RatMatrix { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Option<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| ExactScalar::from_integer(BigInt::from(x))).collect())
                .collect(),
        )
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<ExactScalar>> {
        self.data.chunks(self.n).map(|c| c.to_vec()).collect()
    }

    pub fn entries(&self) -> &[ExactScalar] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn scale(&self, c: &ExactScalar) -> Self {
        RatMatrix { n: self.n, data: self.data.iter().map(|x| x * c).collect() }
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self[(i, j)].is_zero()))
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self[(i, j)].is_zero()))
    }

    /// Determinant by fraction-exact Gaussian elimination.
    pub fn det(&self) -> ExactScalar {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = ExactScalar::one();
        for k in 0..n {
            let Some(piv) = (k..n).find(|&r| !a[r * n + k].is_zero()) else {
                return ExactScalar::zero();
            };
            if piv != k {
                for c in 0..n {
                    a.swap(k * n + c, piv * n + c);
                }
                det = -det;
            }
            let pv = a[k * n + k].clone();
            det *= &pv;
            for r in (k + 1)..n {
                if a[r * n + k].is_zero() {
                    continue;
                }
                let f = &a[r * n + k] / &pv;
                for c in k..n {
                    let t = &f * &a[k * n + c];
                    a[r * n + c] -= t;
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan elimination; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for k in 0..n {
            let piv = (k..n).find(|&r| !a[(r, k)].is_zero())?;
            if piv != k {
                a.swap_rows(piv, k);
                inv.swap_rows(piv, k);
            }
            let pv = a[(k, k)].clone();
            if !pv.is_one() {
                let recip = pv.recip();
                a.scale_row(k, &recip);
                inv.scale_row(k, &recip);
            }
            for r in 0..n {
                if r == k || a[(r, k)].is_zero() {
                    continue;
                }
                let f = a[(r, k)].clone();
                a.add_row_multiple(r, k, &-&f);
                inv.add_row_multiple(r, k, &-&f);
            }
        }
        Some(inv)
    }

    pub fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.n {
            self.data.swap(i * self.n + c, j * self.n + c);
        }
    }

    pub fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.n {
            self.data.swap(r * self.n + i, r * self.n + j);
        }
    }

    pub fn negate_row(&mut self, i: usize) {
        for c in 0..self.n {
            let x = &mut self.data[i * self.n + c];
            *x = -std::mem::take(x);
        }
    }

    pub fn negate_col(&mut self, j: usize) {
        for r in 0..self.n {
            let x = &mut self.data[r * self.n + j];
            *x = -std::mem::take(x);
        }
    }

    pub fn scale_row(&mut self, i: usize, c: &ExactScalar) {
        for k in 0..self.n {
            self.data[i * self.n + k] *= c;
        }
    }

    /// `row[dst] += c * row[src]`
    pub fn add_row_multiple(&mut self, dst: usize, src: usize, c: &ExactScalar) {
        if c.is_zero() {
            return;
        }
        for k in 0..self.n {
            let t = c * &self.data[src * self.n + k];
            self.data[dst * self.n + k] += t;
        }
    }

    /// `col[dst] += c * col[src]`
    pub fn add_col_multiple(&mut self, dst: usize, src: usize, c: &ExactScalar) {
        if c.is_zero() {
            return;
        }
        for k in 0..self.n {
            let t = c * &self.data[k * self.n + src];
            self.data[k * self.n + dst] += t;
        }
    }

    /// Signed row swap `(r_i, r_j) <- (r_j, -r_i)`; determinant preserving.
    pub fn signed_swap_rows(&mut self, i: usize, j: usize) {
        if i != j {
            self.swap_rows(i, j);
            self.negate_row(j);
        }
    }

    /// Signed column swap `(c_i, c_j) <- (c_j, -c_i)`; determinant preserving.
    pub fn signed_swap_cols(&mut self, i: usize, j: usize) {
        if i != j {
            self.swap_cols(i, j);
            self.negate_col(j);
        }
    }

    pub fn max_abs_height(&self) -> usize {
        self.data
            .iter()
            .map(|x| x.numer().abs().bits().max(x.denom().bits()) as usize)
            .max()
            .unwrap_or(0)
    }
}

impl Index<(usize, usize)> for RatMatrix {
    type Output = ExactScalar;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &ExactScalar {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for RatMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut ExactScalar {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &RatMatrix {
    type Output = RatMatrix;
    fn mul(self, rhs: &RatMatrix) -> RatMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix product");
        let n = self.n;
        let mut out = RatMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &rhs.data[k * n + j];
                    if !b.is_zero() {
                        out.data[i * n + j] += a * b;
                    }
                }
            }
        }
        out
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, row) in self.data.chunks(self.n).enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            write!(f, "{}", cells.join(" "))?;
        }
        write!(f, "]")
    }
}
