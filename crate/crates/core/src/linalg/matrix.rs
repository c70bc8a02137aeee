//! Dense matrices over a [`Ring`] value.
//!
//! Matrices are row-major and carry their ring.  Shape mismatches in matrix
//! arithmetic are programming errors and panic; all user-supplied shapes are
//! validated when documents are parsed, before any arithmetic runs.

use std::cmp::Ordering;

use super::ring::Ring;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<R: Ring> {
    ring: R,
    rows: usize,
    cols: usize,
    data: Vec<R::Elem>,
}

impl<R: Ring> Matrix<R> {
    pub fn zero(ring: &R, rows: usize, cols: usize) -> Self {
        let data = vec![ring.zero(); rows * cols];
        Matrix {
            ring: ring.clone(),
            rows,
            cols,
            data,
        }
    }

    pub fn identity(ring: &R, n: usize) -> Self {
        let mut m = Self::zero(ring, n, n);
        for i in 0..n {
            *m.at_mut(i, i) = ring.one();
        }
        m
    }

    pub fn from_fn(ring: &R, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> R::Elem) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix {
            ring: ring.clone(),
            rows,
            cols,
            data,
        }
    }

    /// Build from explicit rows; every row must have the same length.
    pub fn from_rows(ring: &R, rows: Vec<Vec<R::Elem>>) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|r| r.len() == ncols),
            "ragged rows in matrix literal"
        );
        let nrows = rows.len();
        Matrix {
            ring: ring.clone(),
            rows: nrows,
            cols: ncols,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// Convenience constructor from `i64` entries (tests and builtins).
    pub fn from_i64(ring: &R, rows: &[&[i64]]) -> Self {
        Self::from_rows(
            ring,
            rows.iter()
                .map(|r| r.iter().map(|&n| ring.from_i64(n)).collect())
                .collect(),
        )
    }

    /// Column vector from a slice.
    pub fn column(ring: &R, v: &[R::Elem]) -> Self {
        Matrix {
            ring: ring.clone(),
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn ring(&self) -> &R {
        &self.ring
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &R::Elem {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut R::Elem {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: R::Elem) {
        *self.at_mut(i, j) = v;
    }

    pub fn row_slice(&self, i: usize) -> &[R::Elem] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col_vec(&self, j: usize) -> Vec<R::Elem> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<R::Elem>> {
        (0..self.cols).map(|j| self.col_vec(j)).collect()
    }

    pub fn from_columns(ring: &R, nrows: usize, cols: &[Vec<R::Elem>]) -> Self {
        assert!(cols.iter().all(|c| c.len() == nrows), "ragged columns");
        Matrix::from_fn(ring, nrows, cols.len(), |i, j| cols[j][i].clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| self.ring.is_zero(e))
    }

    pub fn transpose(&self) -> Self {
        Matrix::from_fn(&self.ring, self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in add");
        Matrix::from_fn(&self.ring, self.rows, self.cols, |i, j| {
            self.ring.add(self.at(i, j), other.at(i, j))
        })
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch in sub");
        Matrix::from_fn(&self.ring, self.rows, self.cols, |i, j| {
            self.ring.sub(self.at(i, j), other.at(i, j))
        })
    }

    pub fn neg(&self) -> Self {
        Matrix::from_fn(&self.ring, self.rows, self.cols, |i, j| self.ring.neg(self.at(i, j)))
    }

    pub fn scale(&self, c: &R::Elem) -> Self {
        Matrix::from_fn(&self.ring, self.rows, self.cols, |i, j| self.ring.mul(c, self.at(i, j)))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in mul");
        let r = &self.ring;
        Matrix::from_fn(r, self.rows, other.cols, |i, j| {
            let mut acc = r.zero();
            for k in 0..self.cols {
                acc = r.add(&acc, &r.mul(self.at(i, k), other.at(k, j)));
            }
            acc
        })
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[R::Elem]) -> Vec<R::Elem> {
        assert_eq!(self.cols, v.len(), "shape mismatch in apply");
        let r = &self.ring;
        (0..self.rows)
            .map(|i| {
                let mut acc = r.zero();
                for k in 0..self.cols {
                    acc = r.add(&acc, &r.mul(self.at(i, k), &v[k]));
                }
                acc
            })
            .collect()
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "shape mismatch in hstack");
        Matrix::from_fn(&self.ring, self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.at(i, j).clone()
            } else {
                other.at(i, j - self.cols).clone()
            }
        })
    }

    /// Vertical concatenation.
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "shape mismatch in vstack");
        Matrix::from_fn(&self.ring, self.rows + other.rows, self.cols, |i, j| {
            if i < self.rows {
                self.at(i, j).clone()
            } else {
                other.at(i - self.rows, j).clone()
            }
        })
    }

    /// Select the listed columns, in order.
    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Matrix::from_fn(&self.ring, self.rows, idx.len(), |i, j| self.at(i, idx[j]).clone())
    }

    /// First `n` columns.
    pub fn left_cols(&self, n: usize) -> Self {
        assert!(n <= self.cols);
        Matrix::from_fn(&self.ring, self.rows, n, |i, j| self.at(i, j).clone())
    }

    pub fn map_ring<S: Ring>(&self, ring: &S, mut f: impl FnMut(&R::Elem) -> S::Elem) -> Matrix<S> {
        Matrix::from_fn(ring, self.rows, self.cols, |i, j| f(self.at(i, j)))
    }

    /// Determinant by fraction-free (Bareiss) elimination; exact over any of
    /// the supported rings.  Panics unless the matrix is square.
    pub fn det(&self) -> R::Elem {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let r = self.ring.clone();
        if n == 0 {
            return r.one();
        }
        let mut a: Vec<Vec<R::Elem>> = (0..n).map(|i| self.row_slice(i).to_vec()).collect();
        let mut sign_flip = false;
        let mut prev = r.one();
        for k in 0..n - 1 {
            if r.is_zero(&a[k][k]) {
                match (k + 1..n).find(|&i| !r.is_zero(&a[i][k])) {
                    Some(i) => {
                        a.swap(k, i);
                        sign_flip = !sign_flip;
                    }
                    None => return r.zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = r.sub(&r.mul(&a[k][k], &a[i][j]), &r.mul(&a[i][k], &a[k][j]));
                    a[i][j] = r
                        .div_exact(&num, &prev)
                        .expect("Bareiss pivot division is exact");
                }
            }
            prev = a[k][k].clone();
        }
        let d = a[n - 1][n - 1].clone();
        if sign_flip {
            r.neg(&d)
        } else {
            d
        }
    }

    /// Entry closest to zero under `size_cmp` among the nonzero entries of the
    /// submatrix with `i >= i0, j >= j0`; ties break on the smaller `(i, j)`.
    pub fn min_nonzero_in(&self, i0: usize, j0: usize) -> Option<(usize, usize)> {
        let r = &self.ring;
        let mut best: Option<(usize, usize)> = None;
        for i in i0..self.rows {
            for j in j0..self.cols {
                if r.is_zero(self.at(i, j)) {
                    continue;
                }
                best = match best {
                    None => Some((i, j)),
                    Some((bi, bj)) => {
                        if r.size_cmp(self.at(i, j), self.at(bi, bj)) == Ordering::Less {
                            Some((i, j))
                        } else {
                            Some((bi, bj))
                        }
                    }
                };
            }
        }
        best
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.ring.format_elem(self.at(i, j))).collect();
            out.push_str(&format!("[{}]\n", row.join(", ")));
        }
        out
    }
}

/// Row-major tensor (Kronecker) product of vectors: the entry at multi-index
/// `(i_1, ..., i_n)` sits at position `i_1 * (l_2 ... l_n) + ... + i_n`.
pub fn tensor_vec<R: Ring>(ring: &R, factors: &[&[R::Elem]]) -> Vec<R::Elem> {
    let mut acc = vec![ring.one()];
    for f in factors {
        let mut next = Vec::with_capacity(acc.len() * f.len());
        for a in &acc {
            for b in *f {
                next.push(ring.mul(a, b));
            }
        }
        acc = next;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ring::Integers;

    #[test]
    fn det_matches_cofactor_expansion() {
        let z = Integers;
        let m = Matrix::from_i64(&z, &[&[2, 0, 1], &[1, 3, -1], &[0, 4, 2]]);
        // 2*(6+4) - 0 + 1*(4-0) = 24
        assert_eq!(m.det(), z.from_i64(24));
        let singular = Matrix::from_i64(&z, &[&[1, 2], &[2, 4]]);
        assert_eq!(singular.det(), z.from_i64(0));
    }

    #[test]
    fn tensor_index_order_is_row_major() {
        let z = Integers;
        let a = [z.from_i64(1), z.from_i64(2)];
        let b = [z.from_i64(10), z.from_i64(100)];
        let t = tensor_vec(&z, &[&a, &b]);
        assert_eq!(
            t,
            vec![z.from_i64(10), z.from_i64(100), z.from_i64(20), z.from_i64(200)]
        );
    }
}
