//! Symmetric dg operads presented by finite tables, algebras over them on
//! bigraded complexes, and the induced structure on homology.
//!
//! An operad here is a finite window of components `P(n)` for arities
//! `1 <= n <= arity_cap`.  Each component is graded by an internal degree
//! `s`, carries matrices for the adjacent transpositions `t_1 .. t_{n-1}`
//! generating the symmetric group action, a differential `delta` of internal
//! degree `-1`, and partial-composition tables
//! `o_i : P(n) (x) P(m) -> P(n+m-1)` stored as matrices on tensor bases
//! (row-major, last factor fastest).  A distinguished element of `P(1)` in
//! degree zero is the unit.
//!
//! Permutations act on the *inputs* of an operation: on an algebra,
//! `(t_h . a)(y_1, .., y_n)` evaluates `a` with `y_h` and `y_{h+1}`
//! exchanged (and the Koszul sign of that exchange).  With this convention
//! the compatibilities between the group action and partial composition are
//! forced; `check_operad` verifies the five resulting identities, which pin
//! down exactly how a transposition of the outer factor slides past a
//! composition depending on the relative position of the slot.
//!
//! Internal operad degrees carry Koszul signs of their own: the differential
//! satisfies `delta(a o_i b) = delta(a) o_i b + (-1)^{|a|} a o_i delta(b)`,
//! and an algebra over the operad takes an operation of internal degree `s`
//! and inputs at bidegrees `(p_i, q_i)` to an output at
//! `(sum p_i, sum q_i + s)`.  Element signs on the algebra side are governed
//! by the vertical degree `q` alone: the horizontal index records a
//! filtration stage, not a grading of the underlying algebra.

use std::collections::BTreeMap;

use crate::graded::{bd, Bidegree, DgModule, GradedError, GradedMap, Homology};
use crate::linalg::{kernel, tensor_vec, LinalgError, Matrix, Ring, Subquotient};

/// Errors raised by operad construction, validation and algebra checks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OperadError {
    #[error("operad `{name}`: {what} at arity {arity}, degree {degree} has shape {found_rows}x{found_cols}, expected {want_rows}x{want_cols}")]
    ShapeMismatch {
        name: String,
        what: String,
        arity: usize,
        degree: i64,
        want_rows: usize,
        want_cols: usize,
        found_rows: usize,
        found_cols: usize,
    },

    #[error("operad `{name}`: transposition t_{h} missing on P({arity}) in degree {degree}")]
    MissingTransposition {
        name: String,
        arity: usize,
        h: usize,
        degree: i64,
    },

    #[error("composition P({n}) o_{i} P({m}) leaves the arity window (cap {cap})")]
    ArityOverflow { n: usize, m: usize, i: usize, cap: usize },

    #[error("axiom `{axiom}` fails: {context}")]
    AxiomViolation { axiom: &'static str, context: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("homology of P({arity}) in degree {degree} has torsion; the induced operad cannot be presented on a free basis")]
    TorsionHomology { arity: usize, degree: i64 },

    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error(transparent)]
    Graded(#[from] GradedError),
}

/// An element of one graded piece `P(arity)` in internal degree `degree`,
/// as a coefficient vector over the basis of that piece.
#[derive(Clone, Debug, PartialEq)]
pub struct OpElem<R: Ring> {
    pub arity: usize,
    pub degree: i64,
    pub coeffs: Vec<R::Elem>,
}

type CompKey = (usize, usize, usize, i64, i64);

/// A symmetric dg operad in a finite arity window, presented by tables.
#[derive(Clone, Debug)]
pub struct Operad<R: Ring> {
    ring: R,
    name: String,
    arity_cap: usize,
    /// labels of the basis of `P(n)` in internal degree `s`, keyed `(n, s)`
    basis: BTreeMap<(usize, i64), Vec<String>>,
    /// differential blocks `P(n)_s -> P(n)_{s-1}`, keyed `(n, s)`
    delta: BTreeMap<(usize, i64), Matrix<R>>,
    /// adjacent transposition `t_h` on `P(n)_s`, keyed `(n, h, s)`
    transpositions: BTreeMap<(usize, usize, i64), Matrix<R>>,
    /// composition `P(n)_sa o_i P(m)_sb -> P(n+m-1)_{sa+sb}`,
    /// keyed `(n, m, i, sa, sb)`; the block acts on the tensor basis
    compositions: BTreeMap<CompKey, Matrix<R>>,
    /// coefficients of the unit in `P(1)_0`
    unit_coeffs: Vec<R::Elem>,
}

impl<R: Ring> Operad<R> {
    pub fn new(ring: &R, name: impl Into<String>, arity_cap: usize) -> Self {
        Operad {
            ring: ring.clone(),
            name: name.into(),
            arity_cap,
            basis: BTreeMap::new(),
            delta: BTreeMap::new(),
            transpositions: BTreeMap::new(),
            compositions: BTreeMap::new(),
            unit_coeffs: Vec::new(),
        }
    }

    pub fn ring(&self) -> &R {
        &self.ring
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity_cap(&self) -> usize {
        self.arity_cap
    }

    pub fn set_basis(&mut self, arity: usize, degree: i64, labels: Vec<String>) {
        assert!(arity >= 1 && arity <= self.arity_cap, "arity outside window");
        if !labels.is_empty() {
            self.basis.insert((arity, degree), labels);
        }
    }

    pub fn set_delta(&mut self, arity: usize, degree: i64, m: Matrix<R>) {
        if m.is_zero() {
            self.delta.remove(&(arity, degree));
        } else {
            self.delta.insert((arity, degree), m);
        }
    }

    pub fn set_transposition(&mut self, arity: usize, h: usize, degree: i64, m: Matrix<R>) {
        assert!(h >= 1 && h < arity, "transposition index out of range");
        self.transpositions.insert((arity, h, degree), m);
    }

    pub fn set_composition(&mut self, n: usize, m: usize, i: usize, sa: i64, sb: i64, block: Matrix<R>) {
        assert!(i >= 1 && i <= n, "composition slot out of range");
        assert!(n + m - 1 <= self.arity_cap, "composition target outside window");
        if block.is_zero() {
            self.compositions.remove(&(n, m, i, sa, sb));
        } else {
            self.compositions.insert((n, m, i, sa, sb), block);
        }
    }

    pub fn set_unit(&mut self, coeffs: Vec<R::Elem>) {
        self.unit_coeffs = coeffs;
    }

    pub fn rank(&self, arity: usize, degree: i64) -> usize {
        self.basis.get(&(arity, degree)).map_or(0, Vec::len)
    }

    pub fn labels(&self, arity: usize, degree: i64) -> &[String] {
        self.basis.get(&(arity, degree)).map_or(&[], Vec::as_slice)
    }

    /// Internal degrees in which `P(arity)` is nonzero, ascending.
    pub fn degrees(&self, arity: usize) -> Vec<i64> {
        self.basis
            .range((arity, i64::MIN)..=(arity, i64::MAX))
            .map(|((_, s), _)| *s)
            .collect()
    }

    /// Arities with at least one nonzero piece, ascending.
    pub fn arities(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.basis.keys().map(|(n, _)| *n).collect();
        out.dedup();
        out
    }

    pub fn zero(&self, arity: usize, degree: i64) -> OpElem<R> {
        OpElem {
            arity,
            degree,
            coeffs: vec![self.ring.zero(); self.rank(arity, degree)],
        }
    }

    pub fn basis_elem(&self, arity: usize, degree: i64, idx: usize) -> OpElem<R> {
        let mut e = self.zero(arity, degree);
        e.coeffs[idx] = self.ring.one();
        e
    }

    pub fn unit(&self) -> OpElem<R> {
        OpElem {
            arity: 1,
            degree: 0,
            coeffs: self.unit_coeffs.clone(),
        }
    }

    /// The differential block on `P(n)_s`, materialized with shape
    /// `rank(n, s-1) x rank(n, s)`.
    pub fn delta_block(&self, arity: usize, degree: i64) -> Matrix<R> {
        match self.delta.get(&(arity, degree)) {
            Some(m) => m.clone(),
            None => Matrix::zero(&self.ring, self.rank(arity, degree - 1), self.rank(arity, degree)),
        }
    }

    pub fn apply_delta(&self, a: &OpElem<R>) -> OpElem<R> {
        OpElem {
            arity: a.arity,
            degree: a.degree - 1,
            coeffs: self.delta_block(a.arity, a.degree).apply(&a.coeffs),
        }
    }

    fn transposition_block(&self, arity: usize, h: usize, degree: i64) -> Option<&Matrix<R>> {
        self.transpositions.get(&(arity, h, degree))
    }

    /// Apply the adjacent transposition `t_h` (exchanging inputs `h` and
    /// `h+1`) to an element.  The matrices are required data for every
    /// nonzero piece; `check_operad` reports them if missing.
    pub fn act_t(&self, h: usize, a: &OpElem<R>) -> OpElem<R> {
        if a.coeffs.is_empty() {
            return a.clone();
        }
        let m = self
            .transposition_block(a.arity, h, a.degree)
            .unwrap_or_else(|| {
                panic!(
                    "operad `{}`: missing t_{h} on P({}) in degree {}",
                    self.name, a.arity, a.degree
                )
            });
        OpElem {
            arity: a.arity,
            degree: a.degree,
            coeffs: m.apply(&a.coeffs),
        }
    }

    fn composition_block(&self, key: CompKey) -> Matrix<R> {
        let (n, m, _i, sa, sb) = key;
        match self.compositions.get(&key) {
            Some(b) => b.clone(),
            None => Matrix::zero(
                &self.ring,
                self.rank(n + m - 1, sa + sb),
                self.rank(n, sa) * self.rank(m, sb),
            ),
        }
    }

    /// Partial composition `a o_i b`.  Missing table entries are zero maps;
    /// compositions leaving the arity window are errors.
    pub fn compose(&self, a: &OpElem<R>, i: usize, b: &OpElem<R>) -> Result<OpElem<R>, OperadError> {
        if i < 1 || i > a.arity || a.arity + b.arity - 1 > self.arity_cap {
            return Err(OperadError::ArityOverflow {
                n: a.arity,
                m: b.arity,
                i,
                cap: self.arity_cap,
            });
        }
        let block = self.composition_block((a.arity, b.arity, i, a.degree, b.degree));
        let t = tensor_vec(&self.ring, &[&a.coeffs, &b.coeffs]);
        Ok(OpElem {
            arity: a.arity + b.arity - 1,
            degree: a.degree + b.degree,
            coeffs: block.apply(&t),
        })
    }

    fn elem_eq(&self, x: &OpElem<R>, y: &OpElem<R>) -> bool {
        x.arity == y.arity
            && x.degree == y.degree
            && x.coeffs
                .iter()
                .zip(&y.coeffs)
                .all(|(a, b)| self.ring.is_zero(&self.ring.sub(a, b)))
    }

    fn elem_add(&self, x: &OpElem<R>, y: &OpElem<R>) -> OpElem<R> {
        OpElem {
            arity: x.arity,
            degree: x.degree,
            coeffs: x
                .coeffs
                .iter()
                .zip(&y.coeffs)
                .map(|(a, b)| self.ring.add(a, b))
                .collect(),
        }
    }

    fn elem_scale(&self, c: &R::Elem, x: &OpElem<R>) -> OpElem<R> {
        OpElem {
            arity: x.arity,
            degree: x.degree,
            coeffs: x.coeffs.iter().map(|a| self.ring.mul(c, a)).collect(),
        }
    }

    /// Verify every structural axiom of the presented operad.
    pub fn check(&self) -> Result<(), OperadError> {
        self.check_shapes()?;
        self.check_symmetric_action()?;
        self.check_unit_laws()?;
        self.check_associativity()?;
        self.check_equivariance()?;
        self.check_differential()?;
        Ok(())
    }

    fn shape_err(
        &self,
        what: &str,
        arity: usize,
        degree: i64,
        want: (usize, usize),
        found: (usize, usize),
    ) -> OperadError {
        OperadError::ShapeMismatch {
            name: self.name.clone(),
            what: what.to_string(),
            arity,
            degree,
            want_rows: want.0,
            want_cols: want.1,
            found_rows: found.0,
            found_cols: found.1,
        }
    }

    fn check_shapes(&self) -> Result<(), OperadError> {
        for (&(n, s), labels) in &self.basis {
            let r = labels.len();
            if let Some(d) = self.delta.get(&(n, s)) {
                let want = (self.rank(n, s - 1), r);
                if (d.rows(), d.cols()) != want {
                    return Err(self.shape_err("delta", n, s, want, (d.rows(), d.cols())));
                }
            }
            for h in 1..n {
                match self.transposition_block(n, h, s) {
                    None => {
                        return Err(OperadError::MissingTransposition {
                            name: self.name.clone(),
                            arity: n,
                            h,
                            degree: s,
                        })
                    }
                    Some(t) => {
                        if (t.rows(), t.cols()) != (r, r) {
                            return Err(self.shape_err(
                                &format!("t_{h}"),
                                n,
                                s,
                                (r, r),
                                (t.rows(), t.cols()),
                            ));
                        }
                    }
                }
            }
        }
        for (&(n, m, i, sa, sb), block) in &self.compositions {
            let want = (self.rank(n + m - 1, sa + sb), self.rank(n, sa) * self.rank(m, sb));
            if (block.rows(), block.cols()) != want {
                return Err(self.shape_err(
                    &format!("composition P({n}) o_{i} P({m})"),
                    n + m - 1,
                    sa + sb,
                    want,
                    (block.rows(), block.cols()),
                ));
            }
        }
        if self.unit_coeffs.len() != self.rank(1, 0) {
            return Err(self.shape_err("unit", 1, 0, (self.rank(1, 0), 1), (self.unit_coeffs.len(), 1)));
        }
        Ok(())
    }

    fn check_symmetric_action(&self) -> Result<(), OperadError> {
        for (&(n, s), labels) in &self.basis {
            let r = labels.len();
            let id = Matrix::identity(&self.ring, r);
            let t = |h: usize| self.transposition_block(n, h, s).unwrap().clone();
            for h in 1..n {
                if !t(h).mul(&t(h)).sub(&id).is_zero() {
                    return Err(OperadError::AxiomViolation {
                        axiom: "involution",
                        context: format!("t_{h} on P({n}) degree {s}"),
                    });
                }
            }
            for h in 1..n.saturating_sub(1) {
                let lhs = t(h).mul(&t(h + 1)).mul(&t(h));
                let rhs = t(h + 1).mul(&t(h)).mul(&t(h + 1));
                if !lhs.sub(&rhs).is_zero() {
                    return Err(OperadError::AxiomViolation {
                        axiom: "braid",
                        context: format!("t_{h}, t_{} on P({n}) degree {s}", h + 1),
                    });
                }
            }
            for h in 1..n {
                for g in h + 2..n {
                    if !t(h).mul(&t(g)).sub(&t(g).mul(&t(h))).is_zero() {
                        return Err(OperadError::AxiomViolation {
                            axiom: "distant-commute",
                            context: format!("t_{h}, t_{g} on P({n}) degree {s}"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn check_unit_laws(&self) -> Result<(), OperadError> {
        let unit = self.unit();
        for (&(n, s), labels) in &self.basis {
            for idx in 0..labels.len() {
                let e = self.basis_elem(n, s, idx);
                let left = self.compose(&unit, 1, &e)?;
                if !self.elem_eq(&left, &e) {
                    return Err(OperadError::AxiomViolation {
                        axiom: "unit-left",
                        context: format!("unit o_1 {} on P({n}) degree {s}", labels[idx]),
                    });
                }
                for i in 1..=n {
                    let right = self.compose(&e, i, &unit)?;
                    if !self.elem_eq(&right, &e) {
                        return Err(OperadError::AxiomViolation {
                            axiom: "unit-right",
                            context: format!("{} o_{i} unit on P({n}) degree {s}", labels[idx]),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn sign_of(&self, exponent: i64) -> R::Elem {
        if exponent.rem_euclid(2) == 0 {
            self.ring.one()
        } else {
            self.ring.neg(&self.ring.one())
        }
    }

    fn check_associativity(&self) -> Result<(), OperadError> {
        let keys: Vec<(usize, i64)> = self.basis.keys().copied().collect();
        for &(n, sa) in &keys {
            for &(m, sb) in &keys {
                for &(l, sc) in &keys {
                    if n + m + l - 2 > self.arity_cap {
                        continue;
                    }
                    for ia in 0..self.rank(n, sa) {
                        let a = self.basis_elem(n, sa, ia);
                        for ib in 0..self.rank(m, sb) {
                            let b = self.basis_elem(m, sb, ib);
                            for ic in 0..self.rank(l, sc) {
                                let c = self.basis_elem(l, sc, ic);
                                self.assoc_for_triple(&a, &b, &c)?;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn assoc_for_triple(
        &self,
        a: &OpElem<R>,
        b: &OpElem<R>,
        c: &OpElem<R>,
    ) -> Result<(), OperadError> {
        let (n, m) = (a.arity, b.arity);
        if n + m - 1 > self.arity_cap {
            return Ok(());
        }
        // nested: (a o_i b) o_{i+j-1} c = a o_i (b o_j c)
        if m + c.arity - 1 <= self.arity_cap {
            for i in 1..=n {
                let ab = self.compose(a, i, b)?;
                for j in 1..=m {
                    let lhs = self.compose(&ab, i + j - 1, c)?;
                    let rhs = self.compose(a, i, &self.compose(b, j, c)?)?;
                    if !self.elem_eq(&lhs, &rhs) {
                        return Err(OperadError::AxiomViolation {
                            axiom: "assoc-nested",
                            context: format!(
                                "arities ({n},{m},{}) slots (i,j)=({i},{j}) degrees ({},{},{})",
                                c.arity, a.degree, b.degree, c.degree
                            ),
                        });
                    }
                }
            }
        }
        // disjoint: (a o_i b) o_{j+m-1} c = (-1)^{|b||c|} (a o_j c) o_i b, i < j
        if n + c.arity - 1 <= self.arity_cap {
            let sign = self.sign_of(b.degree * c.degree);
            for i in 1..=n {
                for j in (i + 1)..=n {
                    let lhs = self.compose(&self.compose(a, i, b)?, j + m - 1, c)?;
                    let rhs = self.elem_scale(&sign, &self.compose(&self.compose(a, j, c)?, i, b)?);
                    if !self.elem_eq(&lhs, &rhs) {
                        return Err(OperadError::AxiomViolation {
                            axiom: "assoc-disjoint",
                            context: format!(
                                "arities ({n},{m},{}) slots (i,j)=({i},{j}) degrees ({},{},{})",
                                c.arity, a.degree, b.degree, c.degree
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// The five identities tying the symmetric action to composition.  With
    /// inputs permuted by the action, a transposition `t_h` of the outer
    /// factor slides past `o_i` as follows (`a` of arity `n`, `b` of arity
    /// `m`):
    ///
    /// * slot right of the pair (`i > h+1`): `(t_h a) o_i b = t_h (a o_i b)`
    /// * slot left of the pair (`i < h`): `(t_h a) o_i b = t_{h+m-1} (a o_i b)`
    /// * slot hits the first strand (`i = h`): the block of `b`'s inputs
    ///   moves right past one input, `(t_h a) o_h b = t_{h+m-1} .. t_{h+1} t_h (a o_{h+1} b)`
    ///   (the `t_h` factor applied first)
    /// * slot hits the second strand (`i = h+1`): the block moves left,
    ///   `(t_h a) o_{h+1} b = t_h t_{h+1} .. t_{h+m-1} (a o_h b)`
    ///   (the `t_{h+m-1}` factor applied first)
    /// * transposition inside the inner factor: `a o_i (t_g b) = t_{i+g-1} (a o_i b)`
    fn check_equivariance(&self) -> Result<(), OperadError> {
        let keys: Vec<(usize, i64)> = self.basis.keys().copied().collect();
        for &(n, sa) in &keys {
            for &(m, sb) in &keys {
                if n + m - 1 > self.arity_cap {
                    continue;
                }
                for ia in 0..self.rank(n, sa) {
                    let a = self.basis_elem(n, sa, ia);
                    for ib in 0..self.rank(m, sb) {
                        let b = self.basis_elem(m, sb, ib);
                        self.equivariance_for_pair(&a, &b)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn equivariance_for_pair(&self, a: &OpElem<R>, b: &OpElem<R>) -> Result<(), OperadError> {
        let (n, m) = (a.arity, b.arity);
        let fail = |axiom: &'static str, h: usize, i: usize| OperadError::AxiomViolation {
            axiom,
            context: format!(
                "arities ({n},{m}) t_{h}, slot {i}, degrees ({},{})",
                a.degree, b.degree
            ),
        };
        for h in 1..n {
            let ta = self.act_t(h, a);
            for i in 1..=n {
                let lhs = self.compose(&ta, i, b)?;
                if i > h + 1 {
                    let rhs = self.act_t(h, &self.compose(a, i, b)?);
                    if !self.elem_eq(&lhs, &rhs) {
                        return Err(fail("equivariance-high", h, i));
                    }
                } else if i < h {
                    let rhs = self.act_t(h + m - 1, &self.compose(a, i, b)?);
                    if !self.elem_eq(&lhs, &rhs) {
                        return Err(fail("equivariance-low", h, i));
                    }
                } else if i == h {
                    let mut rhs = self.compose(a, h + 1, b)?;
                    for g in h..h + m {
                        rhs = self.act_t(g, &rhs);
                    }
                    if !self.elem_eq(&lhs, &rhs) {
                        return Err(fail("equivariance-clash-left", h, i));
                    }
                } else {
                    // i == h + 1
                    let mut rhs = self.compose(a, h, b)?;
                    for g in (h..h + m).rev() {
                        rhs = self.act_t(g, &rhs);
                    }
                    if !self.elem_eq(&lhs, &rhs) {
                        return Err(fail("equivariance-clash-right", h, i));
                    }
                }
            }
        }
        for g in 1..m {
            let tb = self.act_t(g, b);
            for i in 1..=n {
                let lhs = self.compose(a, i, &tb)?;
                let rhs = self.act_t(i + g - 1, &self.compose(a, i, b)?);
                if !self.elem_eq(&lhs, &rhs) {
                    return Err(fail("equivariance-inner", g, i));
                }
            }
        }
        Ok(())
    }

    fn check_differential(&self) -> Result<(), OperadError> {
        // delta . delta = 0 and compatibility with the symmetric action
        for (&(n, s), _) in &self.basis {
            let d1 = self.delta_block(n, s);
            let d2 = self.delta_block(n, s - 1);
            if !d2.mul(&d1).is_zero() {
                return Err(OperadError::AxiomViolation {
                    axiom: "delta-squared",
                    context: format!("P({n}) degree {s}"),
                });
            }
            for h in 1..n {
                if self.rank(n, s - 1) == 0 {
                    continue;
                }
                let t_here = self.transposition_block(n, h, s).unwrap();
                let t_below = match self.transposition_block(n, h, s - 1) {
                    Some(t) => t.clone(),
                    None => Matrix::identity(&self.ring, self.rank(n, s - 1)),
                };
                if !d1.mul(t_here).sub(&t_below.mul(&d1)).is_zero() {
                    return Err(OperadError::AxiomViolation {
                        axiom: "delta-equivariance",
                        context: format!("t_{h} on P({n}) degree {s}"),
                    });
                }
            }
        }
        // delta(unit) = 0
        let du = self.apply_delta(&self.unit());
        if !du.coeffs.iter().all(|e| self.ring.is_zero(e)) {
            return Err(OperadError::AxiomViolation {
                axiom: "delta-unit",
                context: "delta(unit) != 0".to_string(),
            });
        }
        // Leibniz: delta(a o_i b) = delta(a) o_i b + (-1)^{|a|} a o_i delta(b)
        let keys: Vec<(usize, i64)> = self.basis.keys().copied().collect();
        for &(n, sa) in &keys {
            for &(m, sb) in &keys {
                if n + m - 1 > self.arity_cap {
                    continue;
                }
                let sign = self.sign_of(sa);
                for ia in 0..self.rank(n, sa) {
                    let a = self.basis_elem(n, sa, ia);
                    let da = self.apply_delta(&a);
                    for ib in 0..self.rank(m, sb) {
                        let b = self.basis_elem(m, sb, ib);
                        let db = self.apply_delta(&b);
                        for i in 1..=n {
                            let lhs = self.apply_delta(&self.compose(&a, i, &b)?);
                            let rhs = self.elem_add(
                                &self.compose(&da, i, &b)?,
                                &self.elem_scale(&sign, &self.compose(&a, i, &db)?),
                            );
                            if !self.elem_eq(&lhs, &rhs) {
                                return Err(OperadError::AxiomViolation {
                                    axiom: "delta-leibniz",
                                    context: format!(
                                        "arities ({n},{m}) slot {i} degrees ({sa},{sb})"
                                    ),
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Verify every structural axiom of a presented operad.
pub fn check_operad<R: Ring>(op: &Operad<R>) -> Result<(), OperadError> {
    op.check()
}

// ---------------------------------------------------------------------------
// builtin operads
// ---------------------------------------------------------------------------

/// The commutative operad: every `P(n)` is free of rank one in degree zero,
/// with trivial symmetric action, and all compositions send generators to
/// generators.
pub fn builtin_comm<R: Ring>(ring: &R, arity_cap: usize) -> Operad<R> {
    let mut op = Operad::new(ring, "comm", arity_cap);
    for n in 1..=arity_cap {
        op.set_basis(n, 0, vec![format!("mu{n}")]);
        for h in 1..n {
            op.set_transposition(n, h, 0, Matrix::identity(ring, 1));
        }
    }
    for n in 1..=arity_cap {
        for m in 1..=arity_cap {
            if n + m - 1 > arity_cap {
                continue;
            }
            for i in 1..=n {
                op.set_composition(n, m, i, 0, 0, Matrix::identity(ring, 1));
            }
        }
    }
    op.set_unit(vec![ring.one()]);
    op
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    // all one-line words on 1..=n in lexicographic order
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (1..=n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(k) = (0..n.saturating_sub(1)).rev().find(|&k| cur[k] < cur[k + 1]) else {
            break;
        };
        let l = (k + 1..n).rev().find(|&l| cur[l] > cur[k]).unwrap();
        cur.swap(k, l);
        cur[k + 1..].reverse();
    }
    out
}

/// The associative operad: `P(n)` is free on the permutations of `n` letters
/// (lexicographic one-line order), where the word `w` represents the
/// operation `(x_1, .., x_n) -> x_{w(1)} x_{w(2)} .. x_{w(n)}`.  The
/// symmetric action is the left regular action and partial composition is
/// substitution of words.
pub fn builtin_assoc<R: Ring>(ring: &R, arity_cap: usize) -> Operad<R> {
    let mut op = Operad::new(ring, "assoc", arity_cap);
    let perms: Vec<Vec<Vec<usize>>> = (0..=arity_cap).map(permutations).collect();
    let index_of = |w: &[usize]| -> usize {
        perms[w.len()].binary_search_by(|c| c.as_slice().cmp(w)).unwrap()
    };
    for n in 1..=arity_cap {
        let labels = perms[n]
            .iter()
            .map(|w| w.iter().map(usize::to_string).collect::<Vec<_>>().join(""))
            .collect();
        op.set_basis(n, 0, labels);
        for h in 1..n {
            let r = perms[n].len();
            let mut t = Matrix::zero(ring, r, r);
            for (col, w) in perms[n].iter().enumerate() {
                // left regular action: swap the *values* h and h+1 in the word
                let img: Vec<usize> = w
                    .iter()
                    .map(|&v| {
                        if v == h {
                            h + 1
                        } else if v == h + 1 {
                            h
                        } else {
                            v
                        }
                    })
                    .collect();
                t.set(index_of(&img), col, ring.one());
            }
            op.set_transposition(n, h, 0, t);
        }
    }
    for n in 1..=arity_cap {
        for m in 1..=arity_cap {
            if n + m - 1 > arity_cap {
                continue;
            }
            let rows = perms[n + m - 1].len();
            for i in 1..=n {
                let mut block = Matrix::zero(ring, rows, perms[n].len() * perms[m].len());
                for (ca, wa) in perms[n].iter().enumerate() {
                    for (cb, wb) in perms[m].iter().enumerate() {
                        // substitute the inner word into slot i of the outer
                        let mut word = Vec::with_capacity(n + m - 1);
                        for &s in wa {
                            if s < i {
                                word.push(s);
                            } else if s > i {
                                word.push(s + m - 1);
                            } else {
                                for &v in wb {
                                    word.push(i - 1 + v);
                                }
                            }
                        }
                        block.set(index_of(&word), ca * perms[m].len() + cb, ring.one());
                    }
                }
                op.set_composition(n, m, i, 0, 0, block);
            }
        }
    }
    op.set_unit(vec![ring.one()]);
    op
}

/// The Lie operad through arity three: `P(2)` is spanned by the bracket `b`
/// with `t_1 . b = -b`, and `P(3)` is free on `b o_1 b` and `b o_2 b`; the
/// symmetric action on `P(3)` encodes antisymmetry and the Jacobi identity.
/// Requires `2` to be invertible-free, i.e. a coefficient ring of
/// characteristic different from two, and an arity cap of at most three.
pub fn builtin_lie<R: Ring>(ring: &R, arity_cap: usize) -> Result<Operad<R>, OperadError> {
    if arity_cap > 3 {
        return Err(OperadError::Unsupported(format!(
            "the lie operad is tabulated through arity 3 (asked for cap {arity_cap})"
        )));
    }
    if let crate::linalg::RingKind::PrimeField(2) = ring.kind() {
        return Err(OperadError::Unsupported(
            "the lie operad needs coefficients of characteristic != 2".to_string(),
        ));
    }
    let mut op = Operad::new(ring, "lie", arity_cap);
    op.set_basis(1, 0, vec!["id".to_string()]);
    op.set_composition(1, 1, 1, 0, 0, Matrix::identity(ring, 1));
    op.set_unit(vec![ring.one()]);
    if arity_cap >= 2 {
        op.set_basis(2, 0, vec!["b".to_string()]);
        op.set_transposition(2, 1, 0, Matrix::from_i64(ring, &[&[-1]]));
        op.set_composition(1, 2, 1, 0, 0, Matrix::identity(ring, 1));
        op.set_composition(2, 1, 1, 0, 0, Matrix::identity(ring, 1));
        op.set_composition(2, 1, 2, 0, 0, Matrix::identity(ring, 1));
    }
    if arity_cap >= 3 {
        op.set_basis(3, 0, vec!["b.1b".to_string(), "b.2b".to_string()]);
        op.set_transposition(3, 1, 0, Matrix::from_i64(ring, &[&[-1, -1], &[0, 1]]));
        op.set_transposition(3, 2, 0, Matrix::from_i64(ring, &[&[1, 0], &[-1, -1]]));
        // b o_1 b and b o_2 b are the chosen basis of P(3)
        op.set_composition(2, 2, 1, 0, 0, Matrix::from_i64(ring, &[&[1], &[0]]));
        op.set_composition(2, 2, 2, 0, 0, Matrix::from_i64(ring, &[&[0], &[1]]));
        op.set_composition(1, 3, 1, 0, 0, Matrix::identity(ring, 2));
        for i in 1..=3 {
            op.set_composition(3, 1, i, 0, 0, Matrix::identity(ring, 2));
        }
    }
    Ok(op)
}

// ---------------------------------------------------------------------------
// algebras
// ---------------------------------------------------------------------------

type GammaKey = (usize, i64, usize, Vec<Bidegree>);

/// An algebra over an operad, carried by a bigraded complex.  The action is
/// stored as one matrix per operad basis element and tuple of input
/// bidegrees: the block takes the tensor basis of the inputs (row-major,
/// last factor fastest) to the component at `(sum p_i, sum q_i + s)`.
#[derive(Clone, Debug)]
pub struct OperadAlgebra<R: Ring> {
    pub operad: Operad<R>,
    pub dg: DgModule<R>,
    gamma: BTreeMap<GammaKey, Matrix<R>>,
    /// When set, outputs land at column `min(sum p_i, clip)`: the carrier is
    /// the window `[0, clip]` of a filtered algebra whose filtration is
    /// exhausted at the clip column, so products overshooting the window are
    /// recorded in the top stage.
    column_clip: Option<i64>,
}

impl<R: Ring> OperadAlgebra<R> {
    pub fn new(operad: Operad<R>, dg: DgModule<R>) -> Self {
        OperadAlgebra {
            operad,
            dg,
            gamma: BTreeMap::new(),
            column_clip: None,
        }
    }

    pub fn ring(&self) -> &R {
        self.dg.ring()
    }

    /// Clip output columns into `[0, clip]`.  Requires every occupied column
    /// to lie in `[0, clip]` already; nonnegative columns are what makes the
    /// clipped composition law coherent (a partial product can then never
    /// overshoot the window unless the total does too).
    pub fn set_column_clip(&mut self, clip: Option<i64>) -> Result<(), OperadError> {
        if let Some(c) = clip {
            for at in self.dg.module.support() {
                if at.p < 0 || at.p > c {
                    return Err(OperadError::Unsupported(format!(
                        "column clip {c} requires the support to lie in columns 0..={c}, found {at}"
                    )));
                }
            }
        }
        self.column_clip = clip;
        Ok(())
    }

    pub fn column_clip(&self) -> Option<i64> {
        self.column_clip
    }

    /// Output bidegree of an operation of internal degree `s` on the given
    /// input bidegrees, before clipping.
    pub fn out_bidegree(s: i64, inputs: &[Bidegree]) -> Bidegree {
        let p = inputs.iter().map(|b| b.p).sum();
        let q: i64 = inputs.iter().map(|b| b.q).sum();
        bd(p, q + s)
    }

    /// Output bidegree with the column clip applied.
    pub fn out_at(&self, s: i64, inputs: &[Bidegree]) -> Bidegree {
        let raw = Self::out_bidegree(s, inputs);
        match self.column_clip {
            Some(c) if raw.p > c => bd(c, raw.q),
            _ => raw,
        }
    }

    /// Install the action block of basis element `idx` of `P(n)_s` on the
    /// given input bidegrees.
    pub fn set_gamma(
        &mut self,
        n: usize,
        s: i64,
        idx: usize,
        inputs: Vec<Bidegree>,
        block: Matrix<R>,
    ) -> Result<(), OperadError> {
        let want_rows = self.dg.module.rank(self.out_at(s, &inputs));
        let want_cols: usize = inputs.iter().map(|b| self.dg.module.rank(*b)).product();
        if block.rows() != want_rows || block.cols() != want_cols {
            return Err(OperadError::ShapeMismatch {
                name: format!("gamma[{}]", self.operad.name()),
                what: format!("action block, inputs {inputs:?}"),
                arity: n,
                degree: s,
                want_rows,
                want_cols,
                found_rows: block.rows(),
                found_cols: block.cols(),
            });
        }
        if block.is_zero() {
            self.gamma.remove(&(n, s, idx, inputs));
        } else {
            self.gamma.insert((n, s, idx, inputs), block);
        }
        Ok(())
    }

    /// Install the identity action for the operad unit at every occupied
    /// bidegree.  Requires the unit to be a basis vector of `P(1)`.
    pub fn set_unit_identity(&mut self) -> Result<(), OperadError> {
        let ring = self.ring().clone();
        let unit = self.operad.unit();
        let mut idx = None;
        for (k, c) in unit.coeffs.iter().enumerate() {
            if ring.is_zero(c) {
                continue;
            }
            if idx.is_some() || !ring.is_zero(&ring.sub(c, &ring.one())) {
                return Err(OperadError::Unsupported(
                    "the operad unit is not a basis vector; install its action blocks directly"
                        .to_string(),
                ));
            }
            idx = Some(k);
        }
        let Some(idx) = idx else {
            return Err(OperadError::Unsupported("the operad has a zero unit".to_string()));
        };
        let support: Vec<Bidegree> = self.dg.module.support().collect();
        for at in support {
            let r = self.dg.module.rank(at);
            self.set_gamma(1, 0, idx, vec![at], Matrix::identity(&ring, r))?;
        }
        Ok(())
    }

    /// The action block, materialized with the correct shape (zero when
    /// absent).
    pub fn gamma_block(&self, n: usize, s: i64, idx: usize, inputs: &[Bidegree]) -> Matrix<R> {
        let key = (n, s, idx, inputs.to_vec());
        match self.gamma.get(&key) {
            Some(m) => m.clone(),
            None => {
                let rows = self.dg.module.rank(self.out_at(s, inputs));
                let cols = inputs.iter().map(|b| self.dg.module.rank(*b)).product();
                Matrix::zero(self.ring(), rows, cols)
            }
        }
    }

    pub fn stored_gamma(&self) -> impl Iterator<Item = (&GammaKey, &Matrix<R>)> {
        self.gamma.iter()
    }

    /// Evaluate the action of an operad element on input vectors (each an
    /// ambient vector at its bidegree).  Returns the output bidegree and
    /// ambient vector.
    pub fn act(
        &self,
        pi: &OpElem<R>,
        inputs: &[(Bidegree, Vec<R::Elem>)],
    ) -> Result<(Bidegree, Vec<R::Elem>), OperadError> {
        if pi.arity != inputs.len() || pi.arity > self.operad.arity_cap() {
            return Err(OperadError::ArityOverflow {
                n: pi.arity,
                m: inputs.len(),
                i: 0,
                cap: self.operad.arity_cap(),
            });
        }
        let ring = self.ring().clone();
        let bds: Vec<Bidegree> = inputs.iter().map(|(b, _)| *b).collect();
        let out_bd = self.out_at(pi.degree, &bds);
        let mut out = vec![ring.zero(); self.dg.module.rank(out_bd)];
        let vecs: Vec<&[R::Elem]> = inputs.iter().map(|(_, v)| v.as_slice()).collect();
        let tensor = tensor_vec(&ring, &vecs);
        for (idx, coeff) in pi.coeffs.iter().enumerate() {
            if ring.is_zero(coeff) {
                continue;
            }
            let col = self.gamma_block(pi.arity, pi.degree, idx, &bds).apply(&tensor);
            for (o, c) in out.iter_mut().zip(&col) {
                *o = ring.add(o, &ring.mul(coeff, c));
            }
        }
        Ok((out_bd, out))
    }

    /// Verify the algebra laws over every tuple of occupied bidegrees:
    /// unit, equivariance under adjacent transpositions, compatibility with
    /// partial composition, the derivation (Leibniz) law for the
    /// differential, and well-definedness on presented components.
    pub fn check(&self) -> Result<(), OperadError> {
        self.check_gamma_shapes()?;
        let support: Vec<Bidegree> = self.dg.module.support().collect();
        self.check_unit(&support)?;
        self.check_equivariance_alg(&support)?;
        self.check_composition_alg(&support)?;
        self.check_derivation(&support)?;
        self.check_relations(&support)?;
        Ok(())
    }

    /// Verify only the derivation (Leibniz) law, on every basis tuple.
    pub fn check_leibniz(&self) -> Result<(), OperadError> {
        let support: Vec<Bidegree> = self.dg.module.support().collect();
        self.check_derivation(&support)
    }

    fn check_gamma_shapes(&self) -> Result<(), OperadError> {
        for ((n, s, idx, inputs), block) in &self.gamma {
            let ok = *n >= 1
                && *n <= self.operad.arity_cap()
                && *idx < self.operad.rank(*n, *s)
                && inputs.len() == *n;
            let want_rows = self.dg.module.rank(self.out_at(*s, inputs));
            let want_cols: usize = inputs.iter().map(|b| self.dg.module.rank(*b)).product();
            if !ok || block.rows() != want_rows || block.cols() != want_cols {
                return Err(OperadError::ShapeMismatch {
                    name: format!("gamma[{}]", self.operad.name()),
                    what: format!("action block {idx}, inputs {inputs:?}"),
                    arity: *n,
                    degree: *s,
                    want_rows,
                    want_cols,
                    found_rows: block.rows(),
                    found_cols: block.cols(),
                });
            }
        }
        Ok(())
    }

    fn check_unit(&self, support: &[Bidegree]) -> Result<(), OperadError> {
        let unit = self.operad.unit();
        for &at in support {
            let n = self.dg.module.rank(at);
            for j in 0..n {
                let e = basis_vec(self.ring(), n, j);
                let (_, out) = self.act(&unit, &[(at, e.clone())])?;
                if !self.dg.module.vectors_equal(at, &out, &e) {
                    return Err(OperadError::AxiomViolation {
                        axiom: "algebra-unit",
                        context: format!("unit action at {at}"),
                    });
                }
            }
        }
        Ok(())
    }

    fn tuples(&self, support: &[Bidegree], n: usize) -> Vec<Vec<Bidegree>> {
        let mut out: Vec<Vec<Bidegree>> = vec![vec![]];
        for _ in 0..n {
            let mut next = Vec::with_capacity(out.len() * support.len());
            for t in &out {
                for &b in support {
                    let mut t2 = t.clone();
                    t2.push(b);
                    next.push(t2);
                }
            }
            out = next;
        }
        out
    }

    fn check_equivariance_alg(&self, support: &[Bidegree]) -> Result<(), OperadError> {
        let ring = self.ring().clone();
        for n in self.operad.arities() {
            if n < 2 {
                continue;
            }
            for s in self.operad.degrees(n) {
                let r = self.operad.rank(n, s);
                for tuple in self.tuples(support, n) {
                    let out_bd = self.out_at(s, &tuple);
                    if self.dg.module.rank(out_bd) == 0 {
                        continue;
                    }
                    let ranks: Vec<usize> =
                        tuple.iter().map(|b| self.dg.module.rank(*b)).collect();
                    let total: usize = ranks.iter().product();
                    if total == 0 {
                        continue;
                    }
                    for h in 1..n {
                        let mut swapped = tuple.clone();
                        swapped.swap(h - 1, h);
                        let sign =
                            sign_elem(&ring, tuple[h - 1].q * tuple[h].q);
                        let mut swapped_ranks = ranks.clone();
                        swapped_ranks.swap(h - 1, h);
                        for idx in 0..r {
                            // left side: gamma of t_h . pi
                            let tpi = self.operad.act_t(h, &self.operad.basis_elem(n, s, idx));
                            let mut lhs = Matrix::zero(
                                &ring,
                                self.dg.module.rank(out_bd),
                                total,
                            );
                            for (k, c) in tpi.coeffs.iter().enumerate() {
                                if ring.is_zero(c) {
                                    continue;
                                }
                                lhs = lhs.add(&self.gamma_block(n, s, k, &tuple).scale(c));
                            }
                            let rhs_block = self.gamma_block(n, s, idx, &swapped);
                            for flat in 0..total {
                                let mut digits = decode_multi(flat, &ranks);
                                digits.swap(h - 1, h);
                                let flat_sw = encode_multi(&digits, &swapped_ranks);
                                let lcol = lhs.col_vec(flat);
                                let rcol: Vec<R::Elem> = rhs_block
                                    .col_vec(flat_sw)
                                    .iter()
                                    .map(|e| ring.mul(&sign, e))
                                    .collect();
                                if !self.dg.module.vectors_equal(out_bd, &lcol, &rcol) {
                                    return Err(OperadError::AxiomViolation {
                                        axiom: "algebra-equivariance",
                                        context: format!(
                                            "t_{h} on basis {idx} of P({n}) degree {s}, inputs {tuple:?}"
                                        ),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn check_composition_alg(&self, support: &[Bidegree]) -> Result<(), OperadError> {
        let ring = self.ring().clone();
        let cap = self.operad.arity_cap();
        for n in self.operad.arities() {
            for m in self.operad.arities() {
                if n + m - 1 > cap {
                    continue;
                }
                for sa in self.operad.degrees(n) {
                    for sb in self.operad.degrees(m) {
                        for tuple in self.tuples(support, n + m - 1) {
                            let out_bd = self.out_at(sa + sb, &tuple);
                            if self.dg.module.rank(out_bd) == 0 {
                                continue;
                            }
                            self.composition_at(&ring, n, m, sa, sb, &tuple, out_bd)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn composition_at(
        &self,
        ring: &R,
        n: usize,
        m: usize,
        sa: i64,
        sb: i64,
        tuple: &[Bidegree],
        out_bd: Bidegree,
    ) -> Result<(), OperadError> {
        let ranks: Vec<usize> = tuple.iter().map(|b| self.dg.module.rank(*b)).collect();
        let total: usize = ranks.iter().product();
        if total == 0 {
            return Ok(());
        }
        for i in 1..=n {
            for ia in 0..self.operad.rank(n, sa) {
                let a = self.operad.basis_elem(n, sa, ia);
                for ib in 0..self.operad.rank(m, sb) {
                    let b = self.operad.basis_elem(m, sb, ib);
                    let ab = self.operad.compose(&a, i, &b)?;
                    // sign from moving b (degree sb) past y_1 .. y_{i-1}
                    let passed: i64 = tuple[..i - 1].iter().map(|b| b.q).sum();
                    let sign = sign_elem(ring, sb * passed);
                    for flat in 0..total {
                        let digits = decode_multi(flat, &ranks);
                        let inputs: Vec<(Bidegree, Vec<R::Elem>)> = tuple
                            .iter()
                            .zip(&digits)
                            .map(|(bdg, &j)| {
                                (*bdg, basis_vec(ring, self.dg.module.rank(*bdg), j))
                            })
                            .collect();
                        let (_, lhs) = self.act(&ab, &inputs)?;
                        let inner = self.act(&b, &inputs[i - 1..i - 1 + m])?;
                        let mut outer: Vec<(Bidegree, Vec<R::Elem>)> =
                            inputs[..i - 1].to_vec();
                        outer.push(inner);
                        outer.extend_from_slice(&inputs[i - 1 + m..]);
                        let (_, rhs_raw) = self.act(&a, &outer)?;
                        let rhs: Vec<R::Elem> =
                            rhs_raw.iter().map(|e| ring.mul(&sign, e)).collect();
                        if !self.dg.module.vectors_equal(out_bd, &lhs, &rhs) {
                            return Err(OperadError::AxiomViolation {
                                axiom: "algebra-composition",
                                context: format!(
                                    "P({n}) o_{i} P({m}) basis ({ia},{ib}) degrees ({sa},{sb}), inputs {tuple:?}"
                                ),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn check_derivation(&self, support: &[Bidegree]) -> Result<(), OperadError> {
        let ring = self.ring().clone();
        let d_bd = self.dg.d.bidegree();
        for n in self.operad.arities() {
            for s in self.operad.degrees(n) {
                for tuple in self.tuples(support, n) {
                    let out_bd = self.out_at(s, &tuple);
                    if self.dg.module.rank(out_bd.plus(d_bd)) == 0 {
                        continue;
                    }
                    let ranks: Vec<usize> =
                        tuple.iter().map(|b| self.dg.module.rank(*b)).collect();
                    let total: usize = ranks.iter().product();
                    if total == 0 {
                        continue;
                    }
                    for idx in 0..self.operad.rank(n, s) {
                        let pi = self.operad.basis_elem(n, s, idx);
                        let dpi = self.operad.apply_delta(&pi);
                        for flat in 0..total {
                            let digits = decode_multi(flat, &ranks);
                            let inputs: Vec<(Bidegree, Vec<R::Elem>)> = tuple
                                .iter()
                                .zip(&digits)
                                .map(|(bdg, &j)| {
                                    (*bdg, basis_vec(&ring, self.dg.module.rank(*bdg), j))
                                })
                                .collect();
                            let (obd, gv) = self.act(&pi, &inputs)?;
                            let lhs = self
                                .dg
                                .d
                                .apply(&self.dg.module, &self.dg.module, obd, &gv);
                            // the structure-differential term lands at
                            // (sum p, sum q + s - 1); with a chain
                            // differential of nonzero horizontal degree that
                            // term must vanish for the law to typecheck
                            let target = out_bd.plus(d_bd);
                            let mut rhs =
                                vec![ring.zero(); self.dg.module.rank(target)];
                            if dpi.coeffs.iter().any(|c| !ring.is_zero(c)) {
                                let (obd2, v) = self.act(&dpi, &inputs)?;
                                if obd2 != target {
                                    return Err(OperadError::AxiomViolation {
                                        axiom: "algebra-derivation",
                                        context: format!(
                                            "structure differential lands at {obd2} but the chain differential lands at {target}"
                                        ),
                                    });
                                }
                                for (r0, t0) in rhs.iter_mut().zip(&v) {
                                    *r0 = ring.add(r0, t0);
                                }
                            }
                            for h in 0..n {
                                let passed: i64 = tuple[..h].iter().map(|b| b.q).sum();
                                let sign = sign_elem(&ring, s + passed);
                                let dy = self.dg.d.apply(
                                    &self.dg.module,
                                    &self.dg.module,
                                    tuple[h],
                                    &inputs[h].1,
                                );
                                let mut modified = inputs.clone();
                                modified[h] = (tuple[h].plus(d_bd), dy);
                                let (_, term) = self.act(&pi, &modified)?;
                                for (r0, t0) in rhs.iter_mut().zip(&term) {
                                    *r0 = ring.add(r0, &ring.mul(&sign, t0));
                                }
                            }
                            if !self
                                .dg
                                .module
                                .vectors_equal(out_bd.plus(d_bd), &lhs, &rhs)
                            {
                                return Err(OperadError::AxiomViolation {
                                    axiom: "algebra-derivation",
                                    context: format!(
                                        "basis {idx} of P({n}) degree {s}, inputs {tuple:?}"
                                    ),
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn check_relations(&self, support: &[Bidegree]) -> Result<(), OperadError> {
        let ring = self.ring().clone();
        for n in self.operad.arities() {
            for s in self.operad.degrees(n) {
                for tuple in self.tuples(support, n) {
                    let out_bd = self.out_at(s, &tuple);
                    if self.dg.module.rank(out_bd) == 0 {
                        continue;
                    }
                    // slots whose component is presented
                    for h in 0..n {
                        let rels = self.dg.module.relations(tuple[h]);
                        if rels.cols() == 0 {
                            continue;
                        }
                        let ranks: Vec<usize> =
                            tuple.iter().map(|b| self.dg.module.rank(*b)).collect();
                        let others: usize = ranks
                            .iter()
                            .enumerate()
                            .filter(|(k, _)| *k != h)
                            .map(|(_, r)| *r)
                            .product();
                        for idx in 0..self.operad.rank(n, s) {
                            let pi = self.operad.basis_elem(n, s, idx);
                            for rc in 0..rels.cols() {
                                for flat in 0..others {
                                    let mut rest = decode_multi(
                                        flat,
                                        &ranks
                                            .iter()
                                            .enumerate()
                                            .filter(|(k, _)| *k != h)
                                            .map(|(_, r)| *r)
                                            .collect::<Vec<_>>(),
                                    );
                                    let mut inputs = Vec::with_capacity(n);
                                    for (k, bdg) in tuple.iter().enumerate() {
                                        if k == h {
                                            inputs.push((*bdg, rels.col_vec(rc)));
                                        } else {
                                            let j = rest.remove(0);
                                            inputs.push((
                                                *bdg,
                                                basis_vec(&ring, ranks[k], j),
                                            ));
                                        }
                                    }
                                    let (obd, out) = self.act(&pi, &inputs)?;
                                    if !self.dg.module.vector_is_zero(obd, &out) {
                                        return Err(OperadError::AxiomViolation {
                                            axiom: "algebra-relations",
                                            context: format!(
                                                "relation {rc} at {} in slot {} of P({n}) basis {idx}",
                                                tuple[h],
                                                h + 1
                                            ),
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Verify the algebra laws of an operad action.
pub fn check_algebra<R: Ring>(alg: &OperadAlgebra<R>) -> Result<(), OperadError> {
    alg.check()
}

pub(crate) fn basis_vec<R: Ring>(ring: &R, len: usize, idx: usize) -> Vec<R::Elem> {
    let mut v = vec![ring.zero(); len];
    v[idx] = ring.one();
    v
}

fn sign_elem<R: Ring>(ring: &R, exponent: i64) -> R::Elem {
    if exponent.rem_euclid(2) == 0 {
        ring.one()
    } else {
        ring.neg(&ring.one())
    }
}

pub(crate) fn decode_multi(mut flat: usize, ranks: &[usize]) -> Vec<usize> {
    let mut digits = vec![0usize; ranks.len()];
    for (k, r) in ranks.iter().enumerate().rev() {
        digits[k] = flat % r;
        flat /= r;
    }
    digits
}

fn encode_multi(digits: &[usize], ranks: &[usize]) -> usize {
    let mut flat = 0usize;
    for (d, r) in digits.iter().zip(ranks) {
        flat = flat * r + d;
    }
    flat
}

// ---------------------------------------------------------------------------
// homology
// ---------------------------------------------------------------------------

fn homology_operad_with_data<R: Ring>(
    op: &Operad<R>,
) -> Result<(Operad<R>, BTreeMap<(usize, i64), Subquotient<R>>), OperadError> {
    let ring = op.ring().clone();
    let mut sub = BTreeMap::new();
    let mut hop = Operad::new(&ring, format!("h({})", op.name()), op.arity_cap());
    for n in op.arities() {
        for s in op.degrees(n) {
            let r = op.rank(n, s);
            let z = kernel(&op.delta_block(n, s));
            let b = op.delta_block(n, s + 1);
            let sq = Subquotient::new(r, &z, &b, &format!("operad homology P({n}) deg {s}"))?;
            if !sq.torsion().is_empty() {
                return Err(OperadError::TorsionHomology { arity: n, degree: s });
            }
            if sq.gen_count() > 0 {
                let labels = (0..sq.gen_count())
                    .map(|k| format!("h{n}d{s}#{k}"))
                    .collect();
                hop.set_basis(n, s, labels);
            }
            sub.insert((n, s), sq);
        }
    }
    let project = |sq: &Subquotient<R>, v: &[R::Elem]| -> Result<Vec<R::Elem>, OperadError> {
        sq.project(v).ok_or_else(|| {
            OperadError::Unsupported("operad differential data is inconsistent".to_string())
        })
    };
    // transposition and composition tables descend along lift/project
    for (&(n, s), sq) in &sub {
        let rh = sq.gen_count();
        if rh == 0 {
            continue;
        }
        for h in 1..n {
            let mut cols = Vec::with_capacity(rh);
            for k in 0..rh {
                let rep = sq.lift(&basis_vec(&ring, rh, k));
                let img = op.act_t(
                    h,
                    &OpElem {
                        arity: n,
                        degree: s,
                        coeffs: rep,
                    },
                );
                cols.push(project(sq, &img.coeffs)?);
            }
            hop.set_transposition(n, h, s, Matrix::from_columns(&ring, rh, &cols));
        }
    }
    let keys: Vec<(usize, i64)> = sub.keys().copied().collect();
    for &(n, sa) in &keys {
        for &(m, sb) in &keys {
            if n + m - 1 > op.arity_cap() {
                continue;
            }
            let (ra, rb) = (sub[&(n, sa)].gen_count(), sub[&(m, sb)].gen_count());
            if ra == 0 || rb == 0 {
                continue;
            }
            let out_sq = match sub.get(&(n + m - 1, sa + sb)) {
                Some(sq) => sq,
                None => continue,
            };
            for i in 1..=n {
                let mut cols = Vec::with_capacity(ra * rb);
                for ka in 0..ra {
                    let a = OpElem {
                        arity: n,
                        degree: sa,
                        coeffs: sub[&(n, sa)].lift(&basis_vec(&ring, ra, ka)),
                    };
                    for kb in 0..rb {
                        let b = OpElem {
                            arity: m,
                            degree: sb,
                            coeffs: sub[&(m, sb)].lift(&basis_vec(&ring, rb, kb)),
                        };
                        let ab = op.compose(&a, i, &b)?;
                        cols.push(project(out_sq, &ab.coeffs)?);
                    }
                }
                hop.set_composition(
                    n,
                    m,
                    i,
                    sa,
                    sb,
                    Matrix::from_columns(&ring, out_sq.gen_count(), &cols),
                );
            }
        }
    }
    let unit_sq = &sub[&(1, 0)];
    hop.set_unit(project(unit_sq, &op.unit().coeffs)?);
    Ok((hop, sub))
}

/// The operad induced on the homology of a dg operad.  Over the integers the
/// homology must be torsion-free in every piece.
pub fn homology_operad<R: Ring>(op: &Operad<R>) -> Result<Operad<R>, OperadError> {
    homology_operad_with_data(op).map(|(h, _)| h)
}

/// The induced algebra on homology: the homology of the underlying complex,
/// carried over the homology operad, with the action computed on cycle
/// representatives.  Also returns the homology data (whose `lift`/`project`
/// tie the new generators to representatives in the original complex).
pub fn homology_action<R: Ring>(
    alg: &OperadAlgebra<R>,
) -> Result<(OperadAlgebra<R>, Homology<R>), OperadError> {
    let ring = alg.ring().clone();
    let (hop, op_sub) = homology_operad_with_data(&alg.operad)?;
    let ha = alg.dg.homology()?;
    let h_module = ha.as_module(&ring, "h");
    let h_dg = DgModule::new(h_module, GradedMap::new("d", bd(0, -1)))?;
    let mut out = OperadAlgebra::new(hop, h_dg);
    out.set_column_clip(alg.column_clip())?;
    let support: Vec<Bidegree> = ha.support().filter(|b| ha.rank(*b) > 0).collect();
    for n in out.operad.arities() {
        for s in out.operad.degrees(n) {
            let op_sq = &op_sub[&(n, s)];
            for tuple in out.tuples(&support, n) {
                let out_bd = alg.out_at(s, &tuple);
                let out_sq = match ha.at(out_bd) {
                    Some(sq) if sq.gen_count() > 0 => sq,
                    _ => continue,
                };
                let ranks: Vec<usize> = tuple.iter().map(|b| ha.rank(*b)).collect();
                let total: usize = ranks.iter().product();
                for idx in 0..out.operad.rank(n, s) {
                    let pi = OpElem {
                        arity: n,
                        degree: s,
                        coeffs: op_sq.lift(&basis_vec(&ring, op_sq.gen_count(), idx)),
                    };
                    let mut cols = Vec::with_capacity(total);
                    for flat in 0..total {
                        let digits = decode_multi(flat, &ranks);
                        let inputs: Vec<(Bidegree, Vec<R::Elem>)> = tuple
                            .iter()
                            .zip(&digits)
                            .map(|(bdg, &j)| {
                                let sq = ha.at(*bdg).unwrap();
                                (*bdg, sq.lift(&basis_vec(&ring, sq.gen_count(), j)))
                            })
                            .collect();
                        let (obd, v) = alg.act(&pi, &inputs)?;
                        debug_assert_eq!(obd, out_bd);
                        let cls = out_sq.project(&v).ok_or(GradedError::ProjectUndefined {
                            map: "homology action".to_string(),
                            at: out_bd,
                        })?;
                        cols.push(cls);
                    }
                    out.set_gamma(
                        n,
                        s,
                        idx,
                        tuple.clone(),
                        Matrix::from_columns(&ring, out_sq.gen_count(), &cols),
                    )?;
                }
            }
        }
    }
    Ok((out, ha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::{BigradedModule, Component};
    use crate::linalg::{Integers, PrimeField, Rationals};

    #[test]
    fn comm_operad_passes_all_axioms() {
        check_operad(&builtin_comm(&Integers, 3)).unwrap();
        check_operad(&builtin_comm(&PrimeField::new(2).unwrap(), 4)).unwrap();
    }

    #[test]
    fn assoc_operad_substitutes_words() {
        let op = builtin_assoc(&Rationals, 3);
        check_operad(&op).unwrap();
        // [2,1] o_1 [2,1]: substitute "ba" into the first slot of "ba",
        // giving x3 x2 x1 = the word [3,2,1]
        let swap2 = op.basis_elem(2, 0, 1);
        assert_eq!(op.labels(2, 0)[1], "21");
        let got = op.compose(&swap2, 1, &swap2).unwrap();
        let idx = op.labels(3, 0).iter().position(|l| l == "321").unwrap();
        let want = op.basis_elem(3, 0, idx);
        assert_eq!(got, want);
    }

    #[test]
    fn lie_operad_encodes_antisymmetry_and_jacobi() {
        let op = builtin_lie(&Rationals, 3).unwrap();
        check_operad(&op).unwrap();
        let b = op.basis_elem(2, 0, 0);
        let tb = op.act_t(1, &b);
        assert_eq!(tb.coeffs, vec![Rationals.from_i64(-1)]);
        // cyclic Jacobi: (1 + c + c^2)(b o_1 b) = 0 with c = t_1 t_2
        let e1 = op.basis_elem(3, 0, 0);
        let c = |x: &OpElem<Rationals>| op.act_t(1, &op.act_t(2, x));
        let ce1 = c(&e1);
        let cce1 = c(&ce1);
        let sum = op.elem_add(&op.elem_add(&e1, &ce1), &cce1);
        assert!(sum.coeffs.iter().all(|e| Rationals.is_zero(e)));

        assert!(builtin_lie(&PrimeField::new(2).unwrap(), 3).is_err());
        assert!(builtin_lie(&Rationals, 4).is_err());
    }

    #[test]
    fn corrupted_equivariance_is_detected() {
        let mut op = builtin_lie(&Rationals, 3).unwrap();
        // flip the antisymmetry of the bracket
        op.set_transposition(2, 1, 0, Matrix::identity(&Rationals, 1));
        let err = check_operad(&op).unwrap_err();
        assert!(matches!(
            err,
            OperadError::AxiomViolation { axiom, .. }
                if axiom.starts_with("equivariance")
        ));
    }

    /// A two-generator contractible algebra: `u` at `(0,1)`, `v` at `(0,0)`,
    /// `d(u) = v`, with `v.v = v`, `u.v = v.u = u`, and `u.u = 0` by degree.
    fn contractible_algebra() -> OperadAlgebra<Rationals> {
        let q = Rationals;
        let op = builtin_comm(&q, 3);
        let mut m = BigradedModule::new(&q);
        m.insert(bd(0, 1), Component::free(&q, vec!["u".into()]));
        m.insert(bd(0, 0), Component::free(&q, vec!["v".into()]));
        let mut d = GradedMap::new("d", bd(0, -1));
        d.set_block(bd(0, 1), Matrix::identity(&q, 1));
        let dg = DgModule::new(m, d).unwrap();
        let mut alg = OperadAlgebra::new(op, dg);
        alg.set_unit_identity().unwrap();
        let one = Matrix::identity(&q, 1);
        let (u, v) = (bd(0, 1), bd(0, 0));
        alg.set_gamma(2, 0, 0, vec![v, v], one.clone()).unwrap();
        alg.set_gamma(2, 0, 0, vec![u, v], one.clone()).unwrap();
        alg.set_gamma(2, 0, 0, vec![v, u], one.clone()).unwrap();
        alg.set_gamma(3, 0, 0, vec![v, v, v], one.clone()).unwrap();
        alg.set_gamma(3, 0, 0, vec![u, v, v], one.clone()).unwrap();
        alg.set_gamma(3, 0, 0, vec![v, u, v], one.clone()).unwrap();
        alg.set_gamma(3, 0, 0, vec![v, v, u], one).unwrap();
        alg
    }

    #[test]
    fn contractible_algebra_satisfies_all_laws() {
        let alg = contractible_algebra();
        check_algebra(&alg).unwrap();
        // its homology vanishes, so the induced algebra is empty
        let (halg, ha) = homology_action(&alg).unwrap();
        assert!(ha.support().all(|at| ha.rank(at) == 0));
        check_algebra(&halg).unwrap();
    }

    #[test]
    fn broken_symmetry_or_leibniz_fails_named_law() {
        let q = Rationals;
        let (u, v) = (bd(0, 1), bd(0, 0));
        // v.u = -u breaks equivariance (the sign is (+1) here)
        let mut alg = contractible_algebra();
        alg.set_gamma(2, 0, 0, vec![v, u], Matrix::from_i64(&q, &[&[-1]]))
            .unwrap();
        let err = check_algebra(&alg).unwrap_err();
        assert!(matches!(
            err,
            OperadError::AxiomViolation { axiom: "algebra-equivariance", .. }
        ));
        // u.v = 0 (with the ternary products adjusted to stay associative)
        // breaks only the derivation law: d(u.v) = 0 != v.v + 0 = v
        let mut alg = contractible_algebra();
        let zero = Matrix::zero(&q, 1, 1);
        alg.set_gamma(2, 0, 0, vec![u, v], zero.clone()).unwrap();
        alg.set_gamma(2, 0, 0, vec![v, u], zero.clone()).unwrap();
        alg.set_gamma(3, 0, 0, vec![u, v, v], zero.clone()).unwrap();
        alg.set_gamma(3, 0, 0, vec![v, u, v], zero.clone()).unwrap();
        alg.set_gamma(3, 0, 0, vec![v, v, u], zero).unwrap();
        let err = check_algebra(&alg).unwrap_err();
        assert!(matches!(
            err,
            OperadError::AxiomViolation { axiom: "algebra-derivation", .. }
        ));
        // dropping the ternary product breaks composition compatibility
        let mut alg = contractible_algebra();
        alg.set_gamma(3, 0, 0, vec![v, v, v], Matrix::zero(&q, 1, 1))
            .unwrap();
        let err = check_algebra(&alg).unwrap_err();
        assert!(matches!(
            err,
            OperadError::AxiomViolation { axiom: "algebra-composition", .. }
        ));
    }

    /// `u` at `(0,1)`, `v` at `(0,0)` over the integers with `d(u) = 2v`:
    /// the homology is `Z/2` on `[v]`, and `[v].[v] = [v]` survives.
    #[test]
    fn torsion_homology_keeps_its_product() {
        let z = Integers;
        let op = builtin_comm(&z, 3);
        let mut m = BigradedModule::new(&z);
        m.insert(bd(0, 1), Component::free(&z, vec!["u".into()]));
        m.insert(bd(0, 0), Component::free(&z, vec!["v".into()]));
        let mut d = GradedMap::new("d", bd(0, -1));
        d.set_block(bd(0, 1), Matrix::from_i64(&z, &[&[2]]));
        let dg = DgModule::new(m, d).unwrap();
        let mut alg = OperadAlgebra::new(op, dg);
        alg.set_unit_identity().unwrap();
        let one = Matrix::identity(&z, 1);
        let (u, v) = (bd(0, 1), bd(0, 0));
        alg.set_gamma(2, 0, 0, vec![v, v], one.clone()).unwrap();
        alg.set_gamma(2, 0, 0, vec![u, v], one.clone()).unwrap();
        alg.set_gamma(2, 0, 0, vec![v, u], one.clone()).unwrap();
        alg.set_gamma(3, 0, 0, vec![v, v, v], one.clone()).unwrap();
        alg.set_gamma(3, 0, 0, vec![u, v, v], one.clone()).unwrap();
        alg.set_gamma(3, 0, 0, vec![v, u, v], one.clone()).unwrap();
        alg.set_gamma(3, 0, 0, vec![v, v, u], one).unwrap();
        check_algebra(&alg).unwrap();
        let (halg, ha) = homology_action(&alg).unwrap();
        let h0 = ha.at(bd(0, 0)).unwrap();
        assert_eq!(h0.torsion(), &[z.from_i64(2)]);
        check_algebra(&halg).unwrap();
        // [v].[v] = [v] in Z/2
        let square = halg.gamma_block(2, 0, 0, &[bd(0, 0), bd(0, 0)]);
        assert!(h0.nf_eq(&square.col_vec(0), &[z.one()]));
        // representative independence: act on v + 2v instead of v
        let rep = vec![z.from_i64(3)];
        let (obd, out) = alg
            .act(&alg.operad.basis_elem(2, 0, 0), &[(bd(0, 0), rep.clone()), (bd(0, 0), rep)])
            .unwrap();
        let cls = h0.project(&out).unwrap();
        assert!(h0.nf_eq(&cls, &[z.one()]));
        let _ = obd;
    }

    /// A dg operad with `P(1)` spanned by `1, e` in degree zero and `f` in
    /// degree one, `delta(f) = e`, and all non-unital composites zero.
    fn dg_line_operad<R: Ring>(ring: &R, df: i64) -> Operad<R> {
        let mut op = Operad::new(ring, "line", 1);
        op.set_basis(1, 0, vec!["one".into(), "e".into()]);
        op.set_basis(1, 1, vec!["f".into()]);
        op.set_delta(
            1,
            1,
            Matrix::from_fn(ring, 2, 1, |i, _| {
                if i == 1 {
                    ring.from_i64(df)
                } else {
                    ring.zero()
                }
            }),
        );
        // unit composites only: 1 o 1 = 1, 1 o e = e o 1 = e, 1 o f = f o 1 = f
        let c00 = Matrix::from_i64(
            ring,
            &[&[1, 0, 0, 0], &[0, 1, 1, 0]],
        );
        op.set_composition(1, 1, 1, 0, 0, c00);
        // bases: degree 0 = {1, e} and degree 1 = {f}; tensor order (a, b)
        let c01 = Matrix::from_i64(ring, &[&[1, 0]]);
        op.set_composition(1, 1, 1, 0, 1, c01);
        let c10 = Matrix::from_i64(ring, &[&[1, 0]]);
        op.set_composition(1, 1, 1, 1, 0, c10);
        op.set_unit(vec![ring.one(), ring.zero()]);
        op
    }

    #[test]
    fn dg_operad_homology_collapses_to_the_unit() {
        let op = dg_line_operad(&Rationals, 1);
        check_operad(&op).unwrap();
        let hop = homology_operad(&op).unwrap();
        check_operad(&hop).unwrap();
        assert_eq!(hop.rank(1, 0), 1);
        assert_eq!(hop.rank(1, 1), 0);
        let u = hop.unit();
        let uu = hop.compose(&u, 1, &u).unwrap();
        assert!(hop.elem_eq(&uu, &u));
    }

    #[test]
    fn integral_torsion_in_operad_homology_is_rejected() {
        let op = dg_line_operad(&Integers, 2);
        check_operad(&op).unwrap();
        let err = homology_operad(&op).unwrap_err();
        assert!(matches!(err, OperadError::TorsionHomology { arity: 1, degree: 0 }));
    }
}
