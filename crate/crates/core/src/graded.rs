//! Finitely supported bigraded modules, graded maps of fixed bidegree, and
//! homology with representative lifting.
//!
//! Components sit at bidegrees `(p, q)`: `p` is the horizontal (filtration)
//! index, `q` the vertical (complex) index, and differentials lower the
//! vertical degree by one.  A component is an ordered labeled basis,
//! optionally with a relation matrix presenting a quotient of the free module
//! on the labels (integral spectral sequences need torsion components, e.g.
//! the mod-q reduction of an integral complex).
//!
//! The Koszul sign of an element is governed by its vertical degree `q`, the
//! degree of the underlying complex; the filtration index is bookkeeping and
//! carries no sign (a filtration stage and its image one column up are the
//! same element of the underlying algebra).  Likewise a graded map of
//! bidegree `(a, b)` is a chain map when `f . d = (-1)^b d . f`: only the
//! vertical part of the map interacts with the differential, so horizontal
//! maps like `i` (degree `(1,0)`) and `j` (degree `(0,0)`) commute strictly.

use std::collections::BTreeMap;
use std::fmt;

use crate::linalg::{ColumnBasis, LinalgError, Matrix, Ring, Subquotient};

/// A position `(p, q)` in the plane of bidegrees, or a displacement between
/// positions (map bidegrees are displacements).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Bidegree {
    pub p: i64,
    pub q: i64,
}

/// Shorthand constructor.
pub fn bd(p: i64, q: i64) -> Bidegree {
    Bidegree { p, q }
}

impl Bidegree {
    pub fn plus(&self, other: Bidegree) -> Bidegree {
        bd(self.p + other.p, self.q + other.q)
    }

    pub fn minus(&self, other: Bidegree) -> Bidegree {
        bd(self.p - other.p, self.q - other.q)
    }

    /// Total degree, the grading that carries Koszul signs.
    pub fn total(&self) -> i64 {
        self.p + self.q
    }
}

impl fmt::Display for Bidegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.q)
    }
}

/// Errors raised by the graded layer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GradedError {
    #[error("block of `{map}` at {at} has shape {found_rows}x{found_cols}, expected {want_rows}x{want_cols}")]
    ShapeMismatch {
        map: String,
        at: Bidegree,
        want_rows: usize,
        want_cols: usize,
        found_rows: usize,
        found_cols: usize,
    },

    #[error("d\u{b2} != 0 at {at}: the composite differential has a nonzero column\n{product}")]
    ComplexViolation { at: Bidegree, product: String },

    #[error("`{map}` does not commute with the differentials at {at} (sign {sign:+})")]
    ChainMapViolation {
        map: String,
        at: Bidegree,
        sign: i64,
    },

    #[error("`{map}` does not preserve the component relations at {at}")]
    NotWellDefined { map: String, at: Bidegree },

    #[error("image of a homology representative under `{map}` at {at} is not a cycle")]
    ProjectUndefined { map: String, at: Bidegree },

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// One component of a bigraded module: an ordered labeled basis, with an
/// optional relation matrix (columns are relation vectors) presenting a
/// quotient of the free module on the labels.
#[derive(Clone, Debug)]
pub struct Component<R: Ring> {
    labels: Vec<String>,
    relations: Matrix<R>,
}

impl<R: Ring> Component<R> {
    pub fn free(ring: &R, labels: Vec<String>) -> Self {
        let n = labels.len();
        Component {
            labels,
            relations: Matrix::zero(ring, n, 0),
        }
    }

    pub fn presented(labels: Vec<String>, relations: Matrix<R>) -> Self {
        assert_eq!(relations.rows(), labels.len(), "relation ambient mismatch");
        Component { labels, relations }
    }

    pub fn rank(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn relations(&self) -> &Matrix<R> {
        &self.relations
    }

    pub fn is_free(&self) -> bool {
        self.relations.cols() == 0
    }
}

/// A finitely supported bigraded module over `R`.
#[derive(Clone, Debug)]
pub struct BigradedModule<R: Ring> {
    ring: R,
    components: BTreeMap<Bidegree, Component<R>>,
}

impl<R: Ring> BigradedModule<R> {
    pub fn new(ring: &R) -> Self {
        BigradedModule {
            ring: ring.clone(),
            components: BTreeMap::new(),
        }
    }

    pub fn ring(&self) -> &R {
        &self.ring
    }

    pub fn insert(&mut self, at: Bidegree, c: Component<R>) {
        if c.rank() > 0 {
            self.components.insert(at, c);
        }
    }

    pub fn component(&self, at: Bidegree) -> Option<&Component<R>> {
        self.components.get(&at)
    }

    pub fn rank(&self, at: Bidegree) -> usize {
        self.components.get(&at).map_or(0, Component::rank)
    }

    /// Relation matrix at a bidegree (rank x 0 when free or absent).
    pub fn relations(&self, at: Bidegree) -> Matrix<R> {
        match self.components.get(&at) {
            Some(c) => c.relations.clone(),
            None => Matrix::zero(&self.ring, 0, 0),
        }
    }

    /// Occupied bidegrees, in lexicographic order.
    pub fn support(&self) -> impl Iterator<Item = Bidegree> + '_ {
        self.components.keys().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    /// Are two ambient vectors equal in the (possibly presented) component?
    pub fn vectors_equal(&self, at: Bidegree, a: &[R::Elem], b: &[R::Elem]) -> bool {
        let diff: Vec<R::Elem> = a
            .iter()
            .zip(b)
            .map(|(x, y)| self.ring.sub(x, y))
            .collect();
        self.vector_is_zero(at, &diff)
    }

    /// Is an ambient vector zero in the (possibly presented) component?
    pub fn vector_is_zero(&self, at: Bidegree, v: &[R::Elem]) -> bool {
        match self.components.get(&at) {
            None => v.iter().all(|e| self.ring.is_zero(e)),
            Some(c) => {
                if c.is_free() {
                    v.iter().all(|e| self.ring.is_zero(e))
                } else {
                    ColumnBasis::new(&c.relations).contains(v)
                }
            }
        }
    }
}

/// A graded map of fixed bidegree between bigraded modules.  Blocks are keyed
/// by source bidegree; a missing block is the zero map.
#[derive(Clone, Debug)]
pub struct GradedMap<R: Ring> {
    name: String,
    bidegree: Bidegree,
    blocks: BTreeMap<Bidegree, Matrix<R>>,
}

impl<R: Ring> GradedMap<R> {
    pub fn new(name: impl Into<String>, bidegree: Bidegree) -> Self {
        GradedMap {
            name: name.into(),
            bidegree,
            blocks: BTreeMap::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bidegree(&self) -> Bidegree {
        self.bidegree
    }

    pub fn set_block(&mut self, at: Bidegree, m: Matrix<R>) {
        if m.rows() == 0 || m.cols() == 0 || m.is_zero() {
            self.blocks.remove(&at);
        } else {
            self.blocks.insert(at, m);
        }
    }

    pub fn stored_blocks(&self) -> impl Iterator<Item = (Bidegree, &Matrix<R>)> {
        self.blocks.iter().map(|(k, v)| (*k, v))
    }

    /// The block at a source bidegree, materialized with the correct shape
    /// (zero when absent).
    pub fn block(&self, src: &BigradedModule<R>, tgt: &BigradedModule<R>, at: Bidegree) -> Matrix<R> {
        let rows = tgt.rank(at.plus(self.bidegree));
        let cols = src.rank(at);
        match self.blocks.get(&at) {
            Some(m) => m.clone(),
            None => Matrix::zero(src.ring(), rows, cols),
        }
    }

    /// Apply to an ambient vector at a source bidegree.
    pub fn apply(
        &self,
        src: &BigradedModule<R>,
        tgt: &BigradedModule<R>,
        at: Bidegree,
        v: &[R::Elem],
    ) -> Vec<R::Elem> {
        self.block(src, tgt, at).apply(v)
    }

    /// Verify block shapes against source and target supports: every stored
    /// block must match the component ranks, and blocks with a nonzero entry
    /// must land in an occupied target bidegree.
    pub fn check_shapes(
        &self,
        src: &BigradedModule<R>,
        tgt: &BigradedModule<R>,
    ) -> Result<(), GradedError> {
        for (&at, m) in &self.blocks {
            let want_rows = tgt.rank(at.plus(self.bidegree));
            let want_cols = src.rank(at);
            if m.rows() != want_rows || m.cols() != want_cols {
                return Err(GradedError::ShapeMismatch {
                    map: self.name.clone(),
                    at,
                    want_rows,
                    want_cols,
                    found_rows: m.rows(),
                    found_cols: m.cols(),
                });
            }
        }
        Ok(())
    }

    /// Verify the map respects component relations: each relation of the
    /// source maps into the relation span of the target.
    pub fn check_well_defined(
        &self,
        src: &BigradedModule<R>,
        tgt: &BigradedModule<R>,
    ) -> Result<(), GradedError> {
        for at in src.support() {
            let srels = src.relations(at);
            if srels.cols() == 0 {
                continue;
            }
            let img = self.block(src, tgt, at).mul(&srels);
            for j in 0..img.cols() {
                if !tgt.vector_is_zero(at.plus(self.bidegree), &img.col_vec(j)) {
                    return Err(GradedError::NotWellDefined {
                        map: self.name.clone(),
                        at,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Compose graded maps: `(g . f)` with `f` applied first.
pub fn compose<R: Ring>(
    g: &GradedMap<R>,
    f: &GradedMap<R>,
    src: &BigradedModule<R>,
    mid: &BigradedModule<R>,
    tgt: &BigradedModule<R>,
) -> GradedMap<R> {
    let mut out = GradedMap::new(
        format!("{}.{}", g.name, f.name),
        f.bidegree.plus(g.bidegree),
    );
    for at in src.support() {
        let m = g.block(mid, tgt, at.plus(f.bidegree)).mul(&f.block(src, mid, at));
        out.set_block(at, m);
    }
    out
}

/// A bigraded module with a differential.  The differential's bidegree is
/// parametric — `(0, -1)` for the input complexes, `(-r, -1)` for spectral
/// sequence pages — but must always lower the vertical degree by one.
#[derive(Clone, Debug)]
pub struct DgModule<R: Ring> {
    pub module: BigradedModule<R>,
    pub d: GradedMap<R>,
}

impl<R: Ring> DgModule<R> {
    pub fn new(module: BigradedModule<R>, d: GradedMap<R>) -> Result<Self, GradedError> {
        d.check_shapes(&module, &module)?;
        d.check_well_defined(&module, &module)?;
        Ok(DgModule { module, d })
    }

    pub fn ring(&self) -> &R {
        self.module.ring()
    }

    /// Verify `d . d = 0` (in the presented sense) at every bidegree.
    pub fn check_complex(&self) -> Result<(), GradedError> {
        let dd = compose(&self.d, &self.d, &self.module, &self.module, &self.module);
        for at in self.module.support() {
            let m = dd.block(&self.module, &self.module, at);
            let out_bd = at.plus(dd.bidegree());
            for j in 0..m.cols() {
                if !self.module.vector_is_zero(out_bd, &m.col_vec(j)) {
                    return Err(GradedError::ComplexViolation {
                        at,
                        product: m.render(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Homology at every occupied bidegree, with lift/project data.
    ///
    /// At a presented component `F/R`: cycles are the ambient vectors whose
    /// boundary lies in the target relation span, boundaries are the incoming
    /// differential image together with the component's own relations, and
    /// homology is the corresponding subquotient of `F`.
    pub fn homology(&self) -> Result<Homology<R>, GradedError> {
        let ring = self.module.ring().clone();
        let deg = self.d.bidegree();
        let mut h = BTreeMap::new();
        for at in self.module.support() {
            let n = self.module.rank(at);
            let d_out = self.d.block(&self.module, &self.module, at);
            let tgt_rels = self.module.relations(at.plus(deg));
            // cycles: x with d(x) in span(tgt_rels) — project the kernel of
            // [d | tgt_rels] onto the x-coordinates
            let z = if d_out.rows() == 0 {
                Matrix::identity(&ring, n)
            } else if tgt_rels.cols() == 0 {
                crate::linalg::kernel(&d_out)
            } else {
                let aug = d_out.hstack(&tgt_rels);
                let k = crate::linalg::kernel(&aug);
                Matrix::from_fn(&ring, n, k.cols(), |i, j| k.at(i, j).clone())
            };
            // boundaries: incoming image plus own relations
            let src_bd = at.minus(deg);
            let d_in = self.d.block(&self.module, &self.module, src_bd);
            let own_rels = self.module.relations(at);
            let b = d_in.hstack(&own_rels);
            let sq = Subquotient::new(n, &z, &b, &format!("homology at {at}"))?;
            h.insert(at, sq);
        }
        Ok(Homology { h })
    }
}

/// Homology of a [`DgModule`]: one subquotient per occupied bidegree, whose
/// lift/project maps embed homology classes as cycle representatives.
#[derive(Clone, Debug)]
pub struct Homology<R: Ring> {
    h: BTreeMap<Bidegree, Subquotient<R>>,
}

impl<R: Ring> Homology<R> {
    pub fn at(&self, at: Bidegree) -> Option<&Subquotient<R>> {
        self.h.get(&at)
    }

    pub fn support(&self) -> impl Iterator<Item = Bidegree> + '_ {
        self.h.keys().copied()
    }

    pub fn rank(&self, at: Bidegree) -> usize {
        self.h.get(&at).map_or(0, Subquotient::gen_count)
    }

    /// Present the homology as a bigraded module in normal form: one labeled
    /// generator per normal-form generator, torsion recorded as diagonal
    /// relations.
    pub fn as_module(&self, ring: &R, prefix: &str) -> BigradedModule<R> {
        let mut m = BigradedModule::new(ring);
        for (&at, sq) in &self.h {
            let n = sq.gen_count();
            if n == 0 {
                continue;
            }
            let labels = (0..n)
                .map(|s| format!("{prefix}[{},{}]#{s}", at.p, at.q))
                .collect();
            let mut rels = Matrix::zero(ring, n, 0);
            let tor = sq.torsion();
            if !tor.is_empty() {
                rels = Matrix::from_fn(ring, n, tor.len(), |i, j| {
                    if i == j {
                        tor[j].clone()
                    } else {
                        ring.zero()
                    }
                });
            }
            m.insert(at, Component::presented(labels, rels));
        }
        m
    }
}

/// Verify `f . d = (-1)^b d . f` where `b` is the vertical component of `f`'s
/// bidegree.
pub fn check_chain_map<R: Ring>(
    f: &GradedMap<R>,
    src: &DgModule<R>,
    tgt: &DgModule<R>,
) -> Result<(), GradedError> {
    f.check_shapes(&src.module, &tgt.module)?;
    f.check_well_defined(&src.module, &tgt.module)?;
    let sign = if f.bidegree().q.rem_euclid(2) == 0 { 1 } else { -1 };
    let fd = compose(f, &src.d, &src.module, &src.module, &tgt.module);
    let df = compose(&tgt.d, f, &src.module, &tgt.module, &tgt.module);
    for at in src.module.support() {
        let lhs = fd.block(&src.module, &tgt.module, at);
        let mut rhs = df.block(&src.module, &tgt.module, at);
        if sign < 0 {
            rhs = rhs.neg();
        }
        let diff = lhs.sub(&rhs);
        let out_bd = at.plus(fd.bidegree());
        for j in 0..diff.cols() {
            if !tgt.module.vector_is_zero(out_bd, &diff.col_vec(j)) {
                return Err(GradedError::ChainMapViolation {
                    map: f.name().to_string(),
                    at,
                    sign: sign as i64,
                });
            }
        }
    }
    Ok(())
}

/// The map induced on homology by a chain map, as blocks on normal-form
/// generators, keyed by source bidegree.
pub fn induced_map_on_homology<R: Ring>(
    f: &GradedMap<R>,
    src: &DgModule<R>,
    tgt: &DgModule<R>,
    hs: &Homology<R>,
    ht: &Homology<R>,
) -> Result<BTreeMap<Bidegree, Matrix<R>>, GradedError> {
    let ring = src.module.ring().clone();
    let mut out = BTreeMap::new();
    for at in hs.support() {
        let sq = hs.at(at).unwrap();
        let tgt_bd = at.plus(f.bidegree());
        let n_tgt = ht.rank(tgt_bd);
        let mut cols = Vec::with_capacity(sq.gen_count());
        for s in 0..sq.gen_count() {
            let mut nf = vec![ring.zero(); sq.gen_count()];
            nf[s] = ring.one();
            let v = sq.lift(&nf);
            let w = f.apply(&src.module, &tgt.module, at, &v);
            // the image must be a cycle in the target
            let dw = tgt.d.apply(&tgt.module, &tgt.module, tgt_bd, &w);
            if !tgt.module.vector_is_zero(tgt_bd.plus(tgt.d.bidegree()), &dw) {
                return Err(GradedError::ProjectUndefined {
                    map: f.name().to_string(),
                    at,
                });
            }
            let nf_t = match ht.at(tgt_bd) {
                Some(t) => t.project(&w).ok_or(GradedError::ProjectUndefined {
                    map: f.name().to_string(),
                    at,
                })?,
                None => {
                    if w.iter().all(|e| ring.is_zero(e)) {
                        vec![]
                    } else {
                        return Err(GradedError::ProjectUndefined {
                            map: f.name().to_string(),
                            at,
                        });
                    }
                }
            };
            cols.push(nf_t);
        }
        out.insert(at, Matrix::from_columns(&ring, n_tgt, &cols));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Integers, PrimeField};

    fn z_mod2_complex() -> DgModule<Integers> {
        // rank-1 components at q = 1, 0 with d = [2]: H_0 = Z/2, H_1 = 0
        let z = Integers;
        let mut m = BigradedModule::new(&z);
        m.insert(bd(0, 1), Component::free(&z, vec!["a".into()]));
        m.insert(bd(0, 0), Component::free(&z, vec!["b".into()]));
        let mut d = GradedMap::new("d", bd(0, -1));
        d.set_block(bd(0, 1), Matrix::from_i64(&z, &[&[2]]));
        DgModule::new(m, d).unwrap()
    }

    #[test]
    fn integral_homology_of_multiplication_by_two() {
        let c = z_mod2_complex();
        c.check_complex().unwrap();
        let h = c.homology().unwrap();
        let h0 = h.at(bd(0, 0)).unwrap();
        assert_eq!(h0.free_rank(), 0);
        assert_eq!(h0.torsion(), &[Integers.from_i64(2)]);
        let h1 = h.at(bd(0, 1)).unwrap();
        assert!(h1.is_trivial());
    }

    #[test]
    fn doubling_is_a_chain_map_and_kills_torsion_homology() {
        let z = Integers;
        let c = z_mod2_complex();
        let mut f = GradedMap::new("x2", bd(0, 0));
        f.set_block(bd(0, 1), Matrix::from_i64(&z, &[&[2]]));
        f.set_block(bd(0, 0), Matrix::from_i64(&z, &[&[2]]));
        check_chain_map(&f, &c, &c).unwrap();
        let h = c.homology().unwrap();
        let ind = induced_map_on_homology(&f, &c, &c, &h, &h).unwrap();
        // x2 on Z/2 is zero
        let m0 = &ind[&bd(0, 0)];
        assert!(h.at(bd(0, 0)).unwrap().nf_is_zero(&m0.col_vec(0)));
    }

    #[test]
    fn three_term_identity_differential_fails_d_squared() {
        let f2 = PrimeField::new(2).unwrap();
        let mut m = BigradedModule::new(&f2);
        for q in 0..3 {
            m.insert(bd(0, q), Component::free(&f2, vec![format!("e{q}")]));
        }
        let mut d = GradedMap::new("d", bd(0, -1));
        d.set_block(bd(0, 2), Matrix::identity(&f2, 1));
        d.set_block(bd(0, 1), Matrix::identity(&f2, 1));
        let dg = DgModule::new(m, d).unwrap();
        let err = dg.check_complex().unwrap_err();
        assert!(matches!(err, GradedError::ComplexViolation { at, .. } if at == bd(0, 2)));
    }

    #[test]
    fn two_term_identity_differential_is_fine() {
        // d^2 lands in the zero module, so the identity block is legal
        let f2 = PrimeField::new(2).unwrap();
        let mut m = BigradedModule::new(&f2);
        m.insert(bd(0, 1), Component::free(&f2, vec!["a".into()]));
        m.insert(bd(0, 0), Component::free(&f2, vec!["b".into()]));
        let mut d = GradedMap::new("d", bd(0, -1));
        d.set_block(bd(0, 1), Matrix::identity(&f2, 1));
        let dg = DgModule::new(m, d).unwrap();
        dg.check_complex().unwrap();
        let h = dg.homology().unwrap();
        assert!(h.at(bd(0, 1)).unwrap().is_trivial());
        assert!(h.at(bd(0, 0)).unwrap().is_trivial());
    }

    #[test]
    fn presented_component_homology_mod_two() {
        // C = Z/4 at q=1 and q=0 with d = multiplication by 2:
        // cycles at q=1: {x : 2x = 0 mod 4} = 2Z + 4Z ambient = span(2)
        // boundaries at q=0: im(2) + rels(4) = span(2); H_0 = span(1)/span(2) = Z/2
        let z = Integers;
        let mut m = BigradedModule::new(&z);
        let four = Matrix::from_i64(&z, &[&[4]]);
        m.insert(bd(0, 1), Component::presented(vec!["u".into()], four.clone()));
        m.insert(bd(0, 0), Component::presented(vec!["v".into()], four));
        let mut d = GradedMap::new("d", bd(0, -1));
        d.set_block(bd(0, 1), Matrix::from_i64(&z, &[&[2]]));
        let dg = DgModule::new(m, d).unwrap();
        dg.check_complex().unwrap();
        let h = dg.homology().unwrap();
        let h1 = h.at(bd(0, 1)).unwrap();
        assert_eq!(h1.free_rank(), 0);
        assert_eq!(h1.torsion(), &[z.from_i64(2)]);
        let h0 = h.at(bd(0, 0)).unwrap();
        assert_eq!(h0.torsion(), &[z.from_i64(2)]);
    }
}
