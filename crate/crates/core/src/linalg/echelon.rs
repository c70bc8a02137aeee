//! Column echelon form with transform tracking.
//!
//! [`ColumnBasis`] reduces a set of ambient vectors (the columns of a matrix)
//! to a canonical column echelon form — the column-style Hermite normal form
//! over the integers, reduced echelon over a field — while tracking which
//! combinations of the original columns produced each echelon column.  One
//! structure then answers all the span questions the engine needs:
//!
//! * membership (`contains`) and canonical coset representatives (`reduce`),
//! * solving `M x = v` in the original column coordinates (`solve`),
//! * an exact kernel basis over the ring (`kernel_matrix`), including a
//!   genuine lattice kernel over the integers,
//! * canonical span comparison (`span_eq`), since the echelon columns are
//!   uniquely determined by the span.

use super::matrix::Matrix;
use super::ring::Ring;

/// Errors surfaced by the linear-algebra layer.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    /// `M x = v` has no solution over the ring (reports the canonical
    /// residual so callers can show a witness).
    #[error("no solution over {ring}: residual {residual} in {context}")]
    NoSolution {
        ring: String,
        residual: String,
        context: String,
    },

    /// A claimed submodule is not contained in the span it must live in.
    #[error("column {col} of the relation matrix lies outside the generator span in {context}")]
    NotASubmodule { col: usize, context: String },
}

#[derive(Clone, Debug)]
pub struct ColumnBasis<R: Ring> {
    ring: R,
    nrows: usize,
    orig_cols: usize,
    /// Echelon columns; pivot rows strictly increasing, canonical form.
    cols: Vec<Vec<R::Elem>>,
    /// Pivot row of each echelon column.
    pivots: Vec<usize>,
    /// For each echelon column, the original-column coefficients producing it.
    transform: Vec<Vec<R::Elem>>,
    /// Original-column coefficient vectors spanning the kernel.
    kernel: Vec<Vec<R::Elem>>,
}

impl<R: Ring> ColumnBasis<R> {
    /// Echelonize the columns of `m`.
    pub fn new(m: &Matrix<R>) -> Self {
        let ring = m.ring().clone();
        let nrows = m.rows();
        let ncols = m.cols();
        let mut cols: Vec<Vec<R::Elem>> = m.columns();
        let mut trans: Vec<Vec<R::Elem>> = (0..ncols)
            .map(|j| {
                let mut e = vec![ring.zero(); ncols];
                e[j] = ring.one();
                e
            })
            .collect();

        let mut pivots: Vec<usize> = Vec::new();
        let mut k = 0; // number of pivot columns fixed so far
        for row in 0..nrows {
            // Fold every active column with a nonzero entry at `row` into one
            // carrier column via Bezout rotations (plain elimination when the
            // carrier entry already divides).
            let mut carrier: Option<usize> = None;
            for idx in k..cols.len() {
                if ring.is_zero(&cols[idx][row]) {
                    continue;
                }
                let Some(ci) = carrier else {
                    carrier = Some(idx);
                    continue;
                };
                let a = cols[ci][row].clone();
                let b = cols[idx][row].clone();
                if let Some(q) = ring.div_exact(&b, &a) {
                    let nq = ring.neg(&q);
                    col_axpy(&ring, &mut cols, idx, ci, &nq);
                    col_axpy(&ring, &mut trans, idx, ci, &nq);
                } else {
                    let (g, x, y) = super::ring::bezout(&ring, &a, &b);
                    let a_g = ring.div_exact(&a, &g).expect("gcd divides");
                    let b_g = ring.div_exact(&b, &g).expect("gcd divides");
                    // (carrier, idx) <- (x*carrier + y*idx, -b/g*carrier + a/g*idx),
                    // a determinant-one change of basis among the two columns.
                    col_rotate(&ring, &mut cols, ci, idx, &x, &y, &ring.neg(&b_g), &a_g);
                    col_rotate(&ring, &mut trans, ci, idx, &x, &y, &ring.neg(&b_g), &a_g);
                }
            }
            if let Some(ci) = carrier {
                cols.swap(k, ci);
                trans.swap(k, ci);
                let (u, _) = ring.unit_part(&cols[k][row]);
                if u != ring.one() {
                    let u_inv = ring.div_exact(&ring.one(), &u).expect("unit");
                    col_scale(&ring, &mut cols, k, &u_inv);
                    col_scale(&ring, &mut trans, k, &u_inv);
                }
                pivots.push(row);
                k += 1;
            }
        }

        // Off-pivot reduction: entries of earlier columns in later pivot
        // rows become canonical remainders (zero over a field, in
        // `[0, pivot)` over the integers), making the echelon form unique.
        // Columns left of the pivot column are the only ones that can be
        // nonzero in its pivot row; increasing `l` never disturbs rows
        // already canonicalized, because column `l` is zero above its pivot.
        for l in 0..k {
            let prow = pivots[l];
            for j in 0..l {
                let e = cols[j][prow].clone();
                if ring.is_zero(&e) {
                    continue;
                }
                let (q, _) = ring.div_rem(&e, &cols[l][prow]);
                if !ring.is_zero(&q) {
                    let nq = ring.neg(&q);
                    col_axpy(&ring, &mut cols, j, l, &nq);
                    col_axpy(&ring, &mut trans, j, l, &nq);
                }
            }
        }

        let kernel = trans.split_off(k);
        debug_assert!(cols[k..].iter().all(|c| c.iter().all(|e| ring.is_zero(e))));
        cols.truncate(k);

        ColumnBasis {
            ring,
            nrows,
            orig_cols: ncols,
            cols,
            pivots,
            transform: trans,
            kernel,
        }
    }

    pub fn rank(&self) -> usize {
        self.cols.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.nrows
    }

    pub fn pivot_rows(&self) -> &[usize] {
        &self.pivots
    }

    /// The canonical echelon basis of the span, as a matrix.
    pub fn basis_matrix(&self) -> Matrix<R> {
        Matrix::from_columns(&self.ring, self.nrows, &self.cols)
    }

    /// Basis of the kernel of the original matrix, one column per generator.
    /// Over the integers this is a basis of the full kernel lattice.
    pub fn kernel_matrix(&self) -> Matrix<R> {
        Matrix::from_columns(&self.ring, self.orig_cols, &self.kernel)
    }

    /// Canonical representative of `v + span`: eliminate pivot-row entries,
    /// leaving the unique remainder in each pivot row.
    pub fn reduce(&self, v: &[R::Elem]) -> Vec<R::Elem> {
        self.reduce_with_coeffs(v).0
    }

    fn reduce_with_coeffs(&self, v: &[R::Elem]) -> (Vec<R::Elem>, Vec<R::Elem>) {
        assert_eq!(v.len(), self.nrows, "ambient dimension mismatch");
        let ring = &self.ring;
        let mut w = v.to_vec();
        let mut coeffs = vec![ring.zero(); self.cols.len()];
        for (l, &prow) in self.pivots.iter().enumerate() {
            if ring.is_zero(&w[prow]) {
                continue;
            }
            let (q, _) = ring.div_rem(&w[prow], &self.cols[l][prow]);
            if ring.is_zero(&q) {
                continue;
            }
            for i in 0..self.nrows {
                let t = ring.mul(&q, &self.cols[l][i]);
                w[i] = ring.sub(&w[i], &t);
            }
            coeffs[l] = ring.add(&coeffs[l], &q);
        }
        (w, coeffs)
    }

    pub fn contains(&self, v: &[R::Elem]) -> bool {
        self.reduce(v).iter().all(|e| self.ring.is_zero(e))
    }

    /// Coefficients with respect to the canonical echelon basis, if `v` lies
    /// in the span.
    pub fn coords_in_echelon(&self, v: &[R::Elem]) -> Option<Vec<R::Elem>> {
        let (w, coeffs) = self.reduce_with_coeffs(v);
        if w.iter().all(|e| self.ring.is_zero(e)) {
            Some(coeffs)
        } else {
            None
        }
    }

    /// Solve `M x = v` in the original column coordinates.
    pub fn solve(&self, v: &[R::Elem]) -> Option<Vec<R::Elem>> {
        let coeffs = self.coords_in_echelon(v)?;
        let ring = &self.ring;
        let mut x = vec![ring.zero(); self.orig_cols];
        for (l, c) in coeffs.iter().enumerate() {
            if ring.is_zero(c) {
                continue;
            }
            for (xi, ti) in x.iter_mut().zip(&self.transform[l]) {
                *xi = ring.add(xi, &ring.mul(c, ti));
            }
        }
        Some(x)
    }

    /// Spans are equal iff their canonical echelon data agree.
    pub fn span_eq(&self, other: &Self) -> bool {
        self.nrows == other.nrows && self.pivots == other.pivots && self.cols == other.cols
    }

    /// Is `other`'s span contained in this span?
    pub fn span_contains(&self, other: &Self) -> bool {
        other.cols.iter().all(|c| self.contains(c))
    }
}

fn col_axpy<R: Ring>(ring: &R, cols: &mut [Vec<R::Elem>], dst: usize, src: usize, c: &R::Elem) {
    for i in 0..cols[dst].len() {
        let t = ring.mul(c, &cols[src][i]);
        cols[dst][i] = ring.add(&cols[dst][i], &t);
    }
}

fn col_scale<R: Ring>(ring: &R, cols: &mut [Vec<R::Elem>], dst: usize, c: &R::Elem) {
    for e in &mut cols[dst] {
        *e = ring.mul(c, e);
    }
}

/// Replace columns `(a, b)` by `(x*a + y*b, z*a + w*b)`.
#[allow(clippy::too_many_arguments)]
fn col_rotate<R: Ring>(
    ring: &R,
    cols: &mut [Vec<R::Elem>],
    a: usize,
    b: usize,
    x: &R::Elem,
    y: &R::Elem,
    z: &R::Elem,
    w: &R::Elem,
) {
    for i in 0..cols[a].len() {
        let na = ring.add(&ring.mul(x, &cols[a][i]), &ring.mul(y, &cols[b][i]));
        let nb = ring.add(&ring.mul(z, &cols[a][i]), &ring.mul(w, &cols[b][i]));
        cols[a][i] = na;
        cols[b][i] = nb;
    }
}

/// Solve `m x = v`, reporting the canonical residual on failure.
pub fn solve<R: Ring>(m: &Matrix<R>, v: &[R::Elem], context: &str) -> Result<Vec<R::Elem>, LinalgError> {
    let basis = ColumnBasis::new(m);
    basis.solve(v).ok_or_else(|| {
        let res = basis.reduce(v);
        let ring = m.ring();
        LinalgError::NoSolution {
            ring: ring.kind().to_string(),
            residual: format!(
                "[{}]",
                res.iter().map(|e| ring.format_elem(e)).collect::<Vec<_>>().join(", ")
            ),
            context: context.to_string(),
        }
    })
}

/// Kernel basis of `m` (columns of the result), exact over the ring.
pub fn kernel<R: Ring>(m: &Matrix<R>) -> Matrix<R> {
    ColumnBasis::new(m).kernel_matrix()
}

/// Reduced row echelon form over a field, returned with pivot columns.
/// Rejected at compile time for non-fields via the `Field` bound.
pub fn rref<F: super::ring::Field>(m: &Matrix<F>) -> (Matrix<F>, Vec<usize>) {
    let ring = m.ring().clone();
    let mut rows: Vec<Vec<F::Elem>> = (0..m.rows()).map(|i| m.row_slice(i).to_vec()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m.cols() {
        let Some(pr) = (r..rows.len()).find(|&i| !ring.is_zero(&rows[i][c])) else {
            continue;
        };
        rows.swap(r, pr);
        let inv = ring.inv(&rows[r][c].clone());
        for e in &mut rows[r] {
            *e = ring.mul(&inv, e);
        }
        for i in 0..rows.len() {
            if i == r || ring.is_zero(&rows[i][c]) {
                continue;
            }
            let f = rows[i][c].clone();
            for j in 0..m.cols() {
                let t = ring.mul(&f, &rows[r][j]);
                rows[i][j] = ring.sub(&rows[i][j], &t);
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    (Matrix::from_rows(&ring, rows), pivots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ring::{Integers, PrimeField, Rationals};

    #[test]
    fn hermite_form_is_canonical_for_the_span() {
        let z = Integers;
        // Columns (4,0),(6,2) and (2,2),(4,0) generate the same lattice
        // {(x,y) : y even, x = y mod 4}; the echelon data must coincide.
        let a = ColumnBasis::new(&Matrix::from_i64(&z, &[&[4, 6], &[0, 2]]));
        let b = ColumnBasis::new(&Matrix::from_i64(&z, &[&[2, 4], &[2, 0]]));
        assert!(a.span_eq(&b));
        // 2Z^2 contains (2,0), which fails x = y mod 4, so it strictly
        // contains the lattice above.
        let c = ColumnBasis::new(&Matrix::from_i64(&z, &[&[2, 0], &[0, 2]]));
        assert!(!a.span_eq(&c));
        assert!(c.span_contains(&a) && !a.span_contains(&c));
    }

    #[test]
    fn canonicalization_reduces_early_columns_at_later_pivot_rows() {
        let z = Integers;
        // Both present 2Z^2; the left one leaves a -2 below the first pivot
        // that must be reduced away by the second pivot.
        let a = ColumnBasis::new(&Matrix::from_i64(&z, &[&[2, -2], &[-2, 0]]));
        let b = ColumnBasis::new(&Matrix::from_i64(&z, &[&[2, 0], &[0, 2]]));
        assert!(a.span_eq(&b));
        // The kernel of x -> 8x + y mod 9 equals the image of (8, -1),
        // both taken together with the relation column (9, 0).
        let a = ColumnBasis::new(&Matrix::from_i64(&z, &[&[-1, 0, 9], &[8, -9, 0]]));
        let b = ColumnBasis::new(&Matrix::from_i64(&z, &[&[8, 9], &[-1, 0]]));
        assert!(a.span_eq(&b));
        // Field case: the reduced form clears pivot rows entirely.
        let f = PrimeField::new(5).unwrap();
        let a = ColumnBasis::new(&Matrix::from_i64(&f, &[&[1, 0], &[3, 1]]));
        let b = ColumnBasis::new(&Matrix::identity(&f, 2));
        assert!(a.span_eq(&b));
    }

    #[test]
    fn kernel_of_sum_map_is_antidiagonal() {
        let z = Integers;
        let m = Matrix::from_i64(&z, &[&[1, 1]]);
        let k = kernel(&m);
        assert_eq!((k.rows(), k.cols()), (2, 1));
        let v = k.col_vec(0);
        let pm = [z.from_i64(1), z.from_i64(-1)];
        let mp = [z.from_i64(-1), z.from_i64(1)];
        assert!(v == pm || v == mp);
    }

    #[test]
    fn kernel_of_zero_map_is_identity_lattice() {
        let z = Integers;
        let m = Matrix::zero(&z, 2, 3);
        let k = kernel(&m);
        let kb = ColumnBasis::new(&k);
        assert!(kb.span_eq(&ColumnBasis::new(&Matrix::identity(&z, 3))));
    }

    #[test]
    fn solve_respects_integrality() {
        let z = Integers;
        let m = Matrix::from_i64(&z, &[&[2]]);
        assert!(solve(&m, &[z.from_i64(3)], "test").is_err());
        assert_eq!(solve(&m, &[z.from_i64(4)], "test").unwrap(), vec![z.from_i64(2)]);
    }

    #[test]
    fn reduce_gives_unique_coset_representatives() {
        let z = Integers;
        // span of (2, 0) and (0, 3) inside Z^2
        let m = Matrix::from_i64(&z, &[&[2, 0], &[0, 3]]);
        let cb = ColumnBasis::new(&m);
        let r = cb.reduce(&[z.from_i64(-1), z.from_i64(7)]);
        assert_eq!(r, vec![z.from_i64(1), z.from_i64(1)]);
        // representatives of equal cosets coincide
        let r2 = cb.reduce(&[z.from_i64(5), z.from_i64(-2)]);
        assert_eq!(r2, vec![z.from_i64(1), z.from_i64(1)]);
    }

    #[test]
    fn rref_collapses_dependent_rows() {
        let q = Rationals;
        let m = Matrix::from_i64(&q, &[&[1, 2], &[2, 4]]);
        let (r, pivots) = rref(&m);
        assert_eq!(pivots, vec![0]);
        assert_eq!(r, Matrix::from_i64(&q, &[&[1, 2], &[0, 0]]));
    }

    #[test]
    fn field_spans_over_f5() {
        let f5 = PrimeField::new(5).unwrap();
        let m = Matrix::from_i64(&f5, &[&[2, 1], &[4, 2]]);
        // second column = 3 * first (1 = 3*2 mod 5, 2 = 3*4 mod 5)
        let cb = ColumnBasis::new(&m);
        assert_eq!(cb.rank(), 1);
        assert_eq!(cb.kernel_matrix().cols(), 1);
        let k = cb.kernel_matrix().col_vec(0);
        assert!(m.apply(&k).iter().all(|e| f5.is_zero(e)));
    }
}
