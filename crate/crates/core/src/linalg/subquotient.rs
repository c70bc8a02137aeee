//! Finitely generated subquotients `span(Z) / span(B)` of a free ambient
//! module, with a normal form splitting torsion and free parts.
//!
//! Construction: echelonize `Z` into a canonical basis of the subspan, check
//! `B` lands inside it (else [`LinalgError::NotASubmodule`]), express `B` in
//! the span coordinates and take the Smith normal form of that coordinate
//! matrix.  The Smith transforms give normal-form generators: first the
//! torsion generators (invariant factors that are neither units nor zero, in
//! ascending divisibility order), then the free generators.  Over a field the
//! torsion list is always empty.
//!
//! `project` maps an ambient vector to its normal-form coordinates (a partial
//! map, total on `span(Z)`); `lift` picks the stored representative of a
//! normal-form class; `project(lift(x)) = x` exactly, and torsion coordinates
//! are always reduced into `[0, d_i)`.

use super::echelon::{ColumnBasis, LinalgError};
use super::matrix::Matrix;
use super::ring::Ring;
use super::smith::smith;

#[derive(Clone, Debug)]
pub struct Subquotient<R: Ring> {
    ring: R,
    ambient_rank: usize,
    /// Echelonized generators of the subspan (`Z`).
    span: ColumnBasis<R>,
    /// Echelonized relation vectors (`B`), for zero-class tests in the ambient.
    boundary: ColumnBasis<R>,
    /// Smith row transform on span coordinates (`u * X * v = diag`); maps
    /// span coordinates to Smith coordinates in `project`.
    u: Matrix<R>,
    /// Invariant factor for each kept normal-form generator: the torsion
    /// generators carry their factor, the free generators carry zero.
    factors: Vec<R::Elem>,
    /// Indices (in Smith coordinates) of the kept generators: torsion first,
    /// then free.
    kept: Vec<usize>,
    /// Ambient representatives of the normal-form generators, one column each.
    lift_mat: Matrix<R>,
    torsion_count: usize,
}

impl<R: Ring> Subquotient<R> {
    /// Build `span(gens) / span(rels)` inside a free ambient of the given rank.
    ///
    /// `gens` and `rels` are `ambient_rank x k` matrices (columns are
    /// vectors).  Fails with [`LinalgError::NotASubmodule`] when some
    /// relation lies outside the generator span.
    pub fn new(
        ambient_rank: usize,
        gens: &Matrix<R>,
        rels: &Matrix<R>,
        context: &str,
    ) -> Result<Self, LinalgError> {
        let ring = gens.ring().clone();
        assert_eq!(gens.rows(), ambient_rank, "generator ambient mismatch");
        assert_eq!(rels.rows(), ambient_rank, "relation ambient mismatch");

        let span = ColumnBasis::new(gens);
        let r = span.rank();

        // Relations in span coordinates.
        let mut x_cols: Vec<Vec<R::Elem>> = Vec::with_capacity(rels.cols());
        for j in 0..rels.cols() {
            let col = rels.col_vec(j);
            match span.coords_in_echelon(&col) {
                Some(c) => x_cols.push(c),
                None => {
                    return Err(LinalgError::NotASubmodule {
                        col: j,
                        context: context.to_string(),
                    })
                }
            }
        }
        let x = Matrix::from_columns(&ring, r, &x_cols);
        let sm = smith(&x);

        let mut diag = sm.diagonal();
        diag.resize(r, ring.zero());

        // In Smith coordinates the quotient splits: unit factors die, nonunit
        // nonzero factors give torsion, zero factors give free summands.  The
        // Smith convention (divisibility chain, units first, zeros last)
        // makes the natural index order exactly "torsion then free".
        let mut kept = Vec::new();
        let mut factors = Vec::new();
        let mut torsion_count = 0;
        for (i, d) in diag.iter().enumerate() {
            if ring.is_zero(d) {
                kept.push(i);
                factors.push(ring.zero());
            } else if !ring.is_unit(d) {
                kept.push(i);
                factors.push(d.clone());
                torsion_count += 1;
            }
        }

        // Ambient representatives: normal-form generator s corresponds to the
        // span-coordinate vector u_inv * e_s.
        let basis = span.basis_matrix();
        let lift_cols: Vec<Vec<R::Elem>> = kept
            .iter()
            .map(|&s| basis.apply(&sm.u_inv.col_vec(s)))
            .collect();
        let lift_mat = Matrix::from_columns(&ring, ambient_rank, &lift_cols);

        Ok(Subquotient {
            ring,
            ambient_rank,
            span,
            boundary: ColumnBasis::new(rels),
            u: sm.u,
            factors,
            kept,
            lift_mat,
            torsion_count,
        })
    }

    /// The zero module inside an ambient of the given rank.
    pub fn zero_module(ring: &R, ambient_rank: usize) -> Self {
        let empty = Matrix::zero(ring, ambient_rank, 0);
        Self::new(ambient_rank, &empty, &empty, "zero module").expect("zero module")
    }

    /// Free module on the full ambient.
    pub fn full_module(ring: &R, ambient_rank: usize) -> Self {
        let empty = Matrix::zero(ring, ambient_rank, 0);
        Self::new(ambient_rank, &Matrix::identity(ring, ambient_rank), &empty, "full module")
            .expect("full module")
    }

    pub fn ring(&self) -> &R {
        &self.ring
    }

    pub fn ambient_rank(&self) -> usize {
        self.ambient_rank
    }

    /// Number of normal-form generators (torsion + free).
    pub fn gen_count(&self) -> usize {
        self.kept.len()
    }

    pub fn free_rank(&self) -> usize {
        self.kept.len() - self.torsion_count
    }

    /// Invariant factors of the torsion generators, ascending divisibility.
    pub fn torsion(&self) -> &[R::Elem] {
        &self.factors[..self.torsion_count]
    }

    /// Invariant factor of normal-form generator `s` (zero for free ones).
    pub fn factor(&self, s: usize) -> &R::Elem {
        &self.factors[s]
    }

    pub fn is_trivial(&self) -> bool {
        self.kept.is_empty()
    }

    /// Ambient representative of the normal-form class `nf`.
    pub fn lift(&self, nf: &[R::Elem]) -> Vec<R::Elem> {
        assert_eq!(nf.len(), self.kept.len(), "normal-form length mismatch");
        self.lift_mat.apply(nf)
    }

    /// Ambient representatives of all normal-form generators (columns).
    pub fn lift_matrix(&self) -> &Matrix<R> {
        &self.lift_mat
    }

    /// Normal-form coordinates of an ambient vector; `None` when the vector
    /// lies outside `span(Z)` (the projection is a partial map).
    pub fn project(&self, v: &[R::Elem]) -> Option<Vec<R::Elem>> {
        let c = self.span.coords_in_echelon(v)?;
        let y = self.u.apply(&c);
        let nf: Vec<R::Elem> = self.kept.iter().map(|&s| y[s].clone()).collect();
        Some(self.reduce_nf(&nf))
    }

    /// Canonicalize normal-form coordinates: torsion coordinates are reduced
    /// into `[0, d_i)`; free coordinates are untouched.
    pub fn reduce_nf(&self, nf: &[R::Elem]) -> Vec<R::Elem> {
        assert_eq!(nf.len(), self.kept.len(), "normal-form length mismatch");
        nf.iter()
            .zip(&self.factors)
            .map(|(c, d)| {
                if self.ring.is_zero(d) {
                    c.clone()
                } else {
                    self.ring.div_rem(c, d).1
                }
            })
            .collect()
    }

    pub fn nf_is_zero(&self, nf: &[R::Elem]) -> bool {
        self.reduce_nf(nf).iter().all(|e| self.ring.is_zero(e))
    }

    pub fn nf_eq(&self, a: &[R::Elem], b: &[R::Elem]) -> bool {
        self.reduce_nf(a) == self.reduce_nf(b)
    }

    /// Does the ambient vector lie in `span(Z)`?
    pub fn contains_ambient(&self, v: &[R::Elem]) -> bool {
        self.span.coords_in_echelon(v).is_some()
    }

    /// Is the ambient vector zero in the subquotient (i.e. in `span(B)`)?
    pub fn ambient_is_zero_class(&self, v: &[R::Elem]) -> bool {
        self.boundary.contains(v)
    }

    pub fn span_basis(&self) -> &ColumnBasis<R> {
        &self.span
    }

    pub fn boundary_basis(&self) -> &ColumnBasis<R> {
        &self.boundary
    }

    /// Isomorphism-type comparison: equal free rank and identical invariant
    /// factors.
    pub fn same_invariants(&self, other: &Self) -> bool {
        self.free_rank() == other.free_rank() && self.torsion() == other.torsion()
    }

    /// `free_rank` together with the formatted invariant factors.
    pub fn invariants(&self) -> (usize, Vec<String>) {
        (
            self.free_rank(),
            self.torsion().iter().map(|d| self.ring.format_elem(d)).collect(),
        )
    }

    /// Group/module order description: `None` when infinite (positive free
    /// rank over the integers, or any nonzero module over a field of
    /// characteristic zero is infinite but we only use this over Z).
    pub fn describe(&self) -> String {
        let (fr, tor) = self.invariants();
        let mut parts = Vec::new();
        if fr > 0 {
            parts.push(format!("free^{fr}"));
        }
        for t in tor {
            parts.push(format!("cyclic({t})"));
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ring::{Integers, PrimeField};

    #[test]
    fn z3_modulo_doubled_generator() {
        let z = Integers;
        // Z = <e1, e2> in Z^3, B = <2 e1>: quotient Z/2 + Z.
        let gens = Matrix::from_i64(&z, &[&[1, 0], &[0, 1], &[0, 0]]);
        let rels = Matrix::from_i64(&z, &[&[2], &[0], &[0]]);
        let sq = Subquotient::new(3, &gens, &rels, "test").unwrap();
        assert_eq!(sq.free_rank(), 1);
        assert_eq!(sq.torsion(), &[z.from_i64(2)]);
        assert_eq!(sq.gen_count(), 2);

        // project . lift = id on every normal-form generator
        for s in 0..sq.gen_count() {
            let mut nf = vec![z.zero(); sq.gen_count()];
            nf[s] = z.one();
            let amb = sq.lift(&nf);
            assert_eq!(sq.project(&amb).unwrap(), nf);
        }

        // the relation vector itself is the zero class
        let rel = [z.from_i64(2), z.zero(), z.zero()];
        assert!(sq.nf_is_zero(&sq.project(&rel).unwrap()));
        assert!(sq.ambient_is_zero_class(&rel));

        // e3 is outside the span: projection undefined
        assert!(sq.project(&[z.zero(), z.zero(), z.one()]).is_none());
    }

    #[test]
    fn relation_outside_span_is_rejected() {
        let z = Integers;
        let gens = Matrix::from_i64(&z, &[&[1], &[0]]);
        let rels = Matrix::from_i64(&z, &[&[0], &[1]]);
        let err = Subquotient::new(2, &gens, &rels, "test").unwrap_err();
        assert!(matches!(err, LinalgError::NotASubmodule { col: 0, .. }));
    }

    #[test]
    fn torsion_coordinates_reduce_canonically() {
        let z = Integers;
        let gens = Matrix::identity(&z, 1);
        let rels = Matrix::from_i64(&z, &[&[4]]);
        let sq = Subquotient::new(1, &gens, &rels, "test").unwrap();
        assert_eq!(sq.torsion(), &[z.from_i64(4)]);
        assert_eq!(sq.reduce_nf(&[z.from_i64(-1)]), vec![z.from_i64(3)]);
        assert!(sq.nf_eq(&[z.from_i64(7)], &[z.from_i64(-1)]));
        assert!(sq.nf_is_zero(&[z.from_i64(8)]));
    }

    #[test]
    fn field_subquotients_are_free() {
        let f5 = PrimeField::new(5).unwrap();
        let gens = Matrix::from_i64(&f5, &[&[1, 1], &[0, 1], &[0, 0]]);
        let rels = Matrix::from_i64(&f5, &[&[3], &[3], &[0]]);
        let sq = Subquotient::new(3, &gens, &rels, "test").unwrap();
        assert!(sq.torsion().is_empty());
        assert_eq!(sq.free_rank(), 1);
    }

    #[test]
    fn invariant_factors_sorted_by_divisibility() {
        let z = Integers;
        let gens = Matrix::identity(&z, 3);
        let rels = Matrix::from_i64(&z, &[&[12, 0, 0], &[0, 2, 0], &[0, 0, 30]]);
        let sq = Subquotient::new(3, &gens, &rels, "test").unwrap();
        // diag(12, 2, 30) has invariant factors 2 | 6 | 60
        assert_eq!(
            sq.torsion(),
            &[z.from_i64(2), z.from_i64(6), z.from_i64(60)]
        );
        assert_eq!(sq.free_rank(), 0);
    }
}
