//! Smith normal form over a Euclidean ring, with invertible transforms.
//!
//! `u * m * v = d` with `d` diagonal, each diagonal entry dividing the next,
//! diagonal entries canonical associates (nonnegative over the integers).
//! Both transforms and their inverses are accumulated from elementary
//! operations, so `u * u_inv = v * v_inv = I` holds exactly.  Over a field
//! the result is `diag(1, ..., 1, 0, ..., 0)`.
//!
//! Pivot selection minimizes `size_cmp` over the remaining submatrix (ties to
//! the smallest index pair), which keeps integer entry growth tame in
//! practice.

use super::matrix::Matrix;
use super::ring::{bezout, Ring};

#[derive(Clone, Debug)]
pub struct Smith<R: Ring> {
    pub d: Matrix<R>,
    pub u: Matrix<R>,
    pub u_inv: Matrix<R>,
    pub v: Matrix<R>,
    pub v_inv: Matrix<R>,
}

impl<R: Ring> Smith<R> {
    /// Diagonal entries, padded with zeros to `min(rows, cols)`.
    pub fn diagonal(&self) -> Vec<R::Elem> {
        let n = self.d.rows().min(self.d.cols());
        (0..n).map(|i| self.d.at(i, i).clone()).collect()
    }
}

struct Work<R: Ring> {
    ring: R,
    a: Matrix<R>,
    u: Matrix<R>,
    u_inv: Matrix<R>,
    v: Matrix<R>,
    v_inv: Matrix<R>,
}

impl<R: Ring> Work<R> {
    // Row operations act as a = E*a, u = E*u, u_inv = u_inv*E^{-1};
    // column operations as a = a*F, v = v*F, v_inv = F^{-1}*v_inv.

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for m in [&mut self.a, &mut self.u] {
            for c in 0..m.cols() {
                let t = m.at(i, c).clone();
                let s = m.at(j, c).clone();
                m.set(i, c, s);
                m.set(j, c, t);
            }
        }
        let m = &mut self.u_inv;
        for r in 0..m.rows() {
            let t = m.at(r, i).clone();
            let s = m.at(r, j).clone();
            m.set(r, i, s);
            m.set(r, j, t);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for m in [&mut self.a, &mut self.v] {
            for r in 0..m.rows() {
                let t = m.at(r, i).clone();
                let s = m.at(r, j).clone();
                m.set(r, i, s);
                m.set(r, j, t);
            }
        }
        let m = &mut self.v_inv;
        for c in 0..m.cols() {
            let t = m.at(i, c).clone();
            let s = m.at(j, c).clone();
            m.set(i, c, s);
            m.set(j, c, t);
        }
    }

    /// row_i += c * row_j
    fn add_row(&mut self, i: usize, j: usize, c: &R::Elem) {
        let ring = self.ring.clone();
        for m in [&mut self.a, &mut self.u] {
            for col in 0..m.cols() {
                let t = ring.mul(c, m.at(j, col));
                let s = ring.add(m.at(i, col), &t);
                m.set(i, col, s);
            }
        }
        // inverse: col_j -= c * col_i
        let m = &mut self.u_inv;
        let nc = ring.neg(c);
        for r in 0..m.rows() {
            let t = ring.mul(&nc, m.at(r, i));
            let s = ring.add(m.at(r, j), &t);
            m.set(r, j, s);
        }
    }

    /// col_i += c * col_j
    fn add_col(&mut self, i: usize, j: usize, c: &R::Elem) {
        let ring = self.ring.clone();
        for m in [&mut self.a, &mut self.v] {
            for r in 0..m.rows() {
                let t = ring.mul(c, m.at(r, j));
                let s = ring.add(m.at(r, i), &t);
                m.set(r, i, s);
            }
        }
        // inverse: row_j -= c * row_i
        let m = &mut self.v_inv;
        let nc = ring.neg(c);
        for col in 0..m.cols() {
            let t = ring.mul(&nc, m.at(i, col));
            let s = ring.add(m.at(j, col), &t);
            m.set(j, col, s);
        }
    }

    /// rows (i, j) <- (x*i + y*j, z*i + w*j) with xw - yz = 1.
    #[allow(clippy::too_many_arguments)]
    fn rotate_rows(&mut self, i: usize, j: usize, x: &R::Elem, y: &R::Elem, z: &R::Elem, w: &R::Elem) {
        let ring = self.ring.clone();
        for m in [&mut self.a, &mut self.u] {
            for c in 0..m.cols() {
                let a = m.at(i, c).clone();
                let b = m.at(j, c).clone();
                m.set(i, c, ring.add(&ring.mul(x, &a), &ring.mul(y, &b)));
                m.set(j, c, ring.add(&ring.mul(z, &a), &ring.mul(w, &b)));
            }
        }
        // inverse of [[x,y],[z,w]] (det 1) is [[w,-y],[-z,x]], applied on the
        // column side of u_inv: cols (i, j) <- (w*i - z*j, -y*i + x*j).
        let m = &mut self.u_inv;
        for r in 0..m.rows() {
            let a = m.at(r, i).clone();
            let b = m.at(r, j).clone();
            m.set(r, i, ring.sub(&ring.mul(w, &a), &ring.mul(z, &b)));
            m.set(r, j, ring.sub(&ring.mul(x, &b), &ring.mul(y, &a)));
        }
    }

    /// cols (i, j) <- (x*i + y*j, z*i + w*j) with xw - yz = 1.
    #[allow(clippy::too_many_arguments)]
    fn rotate_cols(&mut self, i: usize, j: usize, x: &R::Elem, y: &R::Elem, z: &R::Elem, w: &R::Elem) {
        let ring = self.ring.clone();
        for m in [&mut self.a, &mut self.v] {
            for r in 0..m.rows() {
                let a = m.at(r, i).clone();
                let b = m.at(r, j).clone();
                m.set(r, i, ring.add(&ring.mul(x, &a), &ring.mul(y, &b)));
                m.set(r, j, ring.add(&ring.mul(z, &a), &ring.mul(w, &b)));
            }
        }
        let m = &mut self.v_inv;
        for c in 0..m.cols() {
            let a = m.at(i, c).clone();
            let b = m.at(j, c).clone();
            m.set(i, c, ring.sub(&ring.mul(w, &a), &ring.mul(z, &b)));
            m.set(j, c, ring.sub(&ring.mul(x, &b), &ring.mul(y, &a)));
        }
    }

    fn scale_row_by_unit(&mut self, i: usize, u: &R::Elem) {
        let ring = self.ring.clone();
        let u_inv = ring.div_exact(&ring.one(), u).expect("unit");
        for m in [&mut self.a, &mut self.u] {
            for c in 0..m.cols() {
                let t = ring.mul(u, m.at(i, c));
                m.set(i, c, t);
            }
        }
        let m = &mut self.u_inv;
        for r in 0..m.rows() {
            let t = ring.mul(&u_inv, m.at(r, i));
            m.set(r, i, t);
        }
    }
}

/// Compute the Smith normal form of `m`.
pub fn smith<R: Ring>(m: &Matrix<R>) -> Smith<R> {
    let ring = m.ring().clone();
    let (nr, nc) = (m.rows(), m.cols());
    let mut w = Work {
        ring: ring.clone(),
        a: m.clone(),
        u: Matrix::identity(&ring, nr),
        u_inv: Matrix::identity(&ring, nr),
        v: Matrix::identity(&ring, nc),
        v_inv: Matrix::identity(&ring, nc),
    };

    let n = nr.min(nc);
    for k in 0..n {
        'pivot: loop {
            let Some((pi, pj)) = w.a.min_nonzero_in(k, k) else {
                break 'pivot; // remaining submatrix is zero
            };
            w.swap_rows(k, pi);
            w.swap_cols(k, pj);

            // Clear the pivot column.
            for i in k + 1..nr {
                if ring.is_zero(w.a.at(i, k)) {
                    continue;
                }
                let piv = w.a.at(k, k).clone();
                let e = w.a.at(i, k).clone();
                if let Some(q) = ring.div_exact(&e, &piv) {
                    w.add_row(i, k, &ring.neg(&q));
                } else {
                    let (g, x, y) = bezout(&ring, &piv, &e);
                    let pg = ring.div_exact(&piv, &g).expect("gcd divides");
                    let eg = ring.div_exact(&e, &g).expect("gcd divides");
                    w.rotate_rows(k, i, &x, &y, &ring.neg(&eg), &pg);
                    continue 'pivot; // pivot changed; restart elimination
                }
            }
            // Clear the pivot row.
            for j in k + 1..nc {
                if ring.is_zero(w.a.at(k, j)) {
                    continue;
                }
                let piv = w.a.at(k, k).clone();
                let e = w.a.at(k, j).clone();
                if let Some(q) = ring.div_exact(&e, &piv) {
                    w.add_col(j, k, &ring.neg(&q));
                } else {
                    let (g, x, y) = bezout(&ring, &piv, &e);
                    let pg = ring.div_exact(&piv, &g).expect("gcd divides");
                    let eg = ring.div_exact(&e, &g).expect("gcd divides");
                    w.rotate_cols(k, j, &x, &y, &ring.neg(&eg), &pg);
                    continue 'pivot;
                }
            }
            // Row and column are clear.  Enforce that the pivot divides the
            // rest of the submatrix, so diagonal divisibility holds.
            let piv = w.a.at(k, k).clone();
            let mut fixed = true;
            'scan: for i in k + 1..nr {
                for j in k + 1..nc {
                    if !ring.divides(&piv, w.a.at(i, j)) {
                        w.add_row(k, i, &ring.one());
                        fixed = false;
                        break 'scan;
                    }
                }
            }
            if fixed {
                break 'pivot;
            }
        }
        // Normalize the pivot to its canonical associate.
        let piv = w.a.at(k, k).clone();
        if !ring.is_zero(&piv) {
            let (u, _) = ring.unit_part(&piv);
            if u != ring.one() {
                let u_inv = ring.div_exact(&ring.one(), &u).expect("unit");
                w.scale_row_by_unit(k, &u_inv);
            }
        }
    }

    Smith {
        d: w.a,
        u: w.u,
        u_inv: w.u_inv,
        v: w.v,
        v_inv: w.v_inv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ring::Integers;

    fn check_transforms(m: &Matrix<Integers>, s: &Smith<Integers>) {
        assert_eq!(s.u.mul(m).mul(&s.v), s.d);
        assert_eq!(s.u.mul(&s.u_inv), Matrix::identity(&Integers, m.rows()));
        assert_eq!(s.v.mul(&s.v_inv), Matrix::identity(&Integers, m.cols()));
    }

    #[test]
    fn coprime_diagonal_merges() {
        let z = Integers;
        let m = Matrix::from_i64(&z, &[&[2, 0], &[0, 3]]);
        let s = smith(&m);
        assert_eq!(s.diagonal(), vec![z.from_i64(1), z.from_i64(6)]);
        check_transforms(&m, &s);
    }

    #[test]
    fn divisibility_chain_and_sign_normalization() {
        let z = Integers;
        let m = Matrix::from_i64(&z, &[&[-4, 2, 6], &[2, -2, 0], &[6, 0, 12]]);
        let s = smith(&m);
        let d = s.diagonal();
        for w in d.windows(2) {
            if !z.is_zero(&w[1]) {
                assert!(z.divides(&w[0], &w[1]), "divisibility chain broken");
            }
        }
        for e in &d {
            assert!(*e >= z.zero());
        }
        check_transforms(&m, &s);
    }

    #[test]
    fn rectangular_and_zero_matrices() {
        let z = Integers;
        for m in [
            Matrix::zero(&z, 2, 3),
            Matrix::from_i64(&z, &[&[6, 10, 15]]),
            Matrix::from_i64(&z, &[&[1], &[2], &[3]]),
        ] {
            let s = smith(&m);
            check_transforms(&m, &s);
            // off-diagonal must be zero
            for i in 0..m.rows() {
                for j in 0..m.cols() {
                    if i != j {
                        assert!(z.is_zero(s.d.at(i, j)));
                    }
                }
            }
        }
        assert_eq!(
            smith(&Matrix::from_i64(&z, &[&[6, 10, 15]])).diagonal(),
            vec![z.from_i64(1)]
        );
    }
}
