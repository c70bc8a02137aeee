//! PROPs presented by finite tables, and PROP-algebras with tensor-power
//! outputs.
//!
//! A PROP extends an operad to operations with several outputs: components
//! `P(m, n)` of operations with `m` inputs and `n` outputs, for
//! `m + n <= biarity_cap`.  There are two compositions — horizontal
//! (juxtaposition `P(m1,n1) (x) P(m2,n2) -> P(m1+m2, n1+n2)`) and vertical
//! (`P(n,k) (x) P(m,n) -> P(m,k)`, second factor applied first) — tied
//! together by the interchange law, plus commuting left/right symmetric
//! group actions on inputs and outputs (presented by adjacent
//! transpositions), a vertical unit in `P(1,1)` and an empty diagram in
//! `P(0,0)`.
//!
//! A PROP-algebra carries the action on a bigraded complex: an operation in
//! `P(m,n)` of internal degree `s` takes `m` inputs to an element of the
//! `n`-fold tensor power, stored as a formal sum of terms over output
//! component tuples whose bidegrees add up to the input total shifted by
//! `(0, s)`.

use std::collections::BTreeMap;

use crate::graded::{bd, Bidegree, BigradedModule, DgModule, GradedError};
use crate::linalg::{tensor_vec, ColumnBasis, LinalgError, Matrix, Ring};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PropError {
    #[error("prop `{name}`: {what} at ({m},{n}) degree {degree} has shape {found_rows}x{found_cols}, expected {want_rows}x{want_cols}")]
    ShapeMismatch {
        name: String,
        what: String,
        m: usize,
        n: usize,
        degree: i64,
        want_rows: usize,
        want_cols: usize,
        found_rows: usize,
        found_cols: usize,
    },

    #[error("prop `{name}`: transposition {side} t_{h} missing on P({m},{n}) in degree {degree}")]
    MissingTransposition {
        name: String,
        side: &'static str,
        m: usize,
        n: usize,
        h: usize,
        degree: i64,
    },

    #[error("composition leaves the biarity window (cap {cap}): {context}")]
    BiarityOverflow { cap: usize, context: String },

    #[error("axiom `{axiom}` fails: {context}")]
    AxiomViolation { axiom: &'static str, context: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error(transparent)]
    Graded(#[from] GradedError),
}

/// An element of `P(inputs, outputs)` in one internal degree.
#[derive(Clone, Debug, PartialEq)]
pub struct PropElem<R: Ring> {
    pub inputs: usize,
    pub outputs: usize,
    pub degree: i64,
    pub coeffs: Vec<R::Elem>,
}

/// A PROP in a finite biarity window, presented by tables.
#[derive(Clone, Debug)]
pub struct Prop<R: Ring> {
    ring: R,
    name: String,
    biarity_cap: usize,
    /// basis labels, keyed `(m, n, degree)`
    basis: BTreeMap<(usize, usize, i64), Vec<String>>,
    /// input transposition `t_h` (`1 <= h < m`), keyed `(m, n, h, degree)`
    in_t: BTreeMap<(usize, usize, usize, i64), Matrix<R>>,
    /// output transposition, keyed `(m, n, h, degree)` with `1 <= h < n`
    out_t: BTreeMap<(usize, usize, usize, i64), Matrix<R>>,
    /// horizontal composition, keyed `(m1, n1, s1, m2, n2, s2)`
    horizontal: BTreeMap<(usize, usize, i64, usize, usize, i64), Matrix<R>>,
    /// vertical composition `g . f` with `f: m -> n`, `g: n -> k`,
    /// keyed `(m, n, k, s_g, s_f)`; columns index `g (x) f`
    vertical: BTreeMap<(usize, usize, usize, i64, i64), Matrix<R>>,
    /// the identity in `P(1,1)` degree 0
    unit11: Vec<R::Elem>,
    /// the empty diagram in `P(0,0)` degree 0
    unit00: Vec<R::Elem>,
}

impl<R: Ring> Prop<R> {
    pub fn new(ring: &R, name: impl Into<String>, biarity_cap: usize) -> Self {
        Prop {
            ring: ring.clone(),
            name: name.into(),
            biarity_cap,
            basis: BTreeMap::new(),
            in_t: BTreeMap::new(),
            out_t: BTreeMap::new(),
            horizontal: BTreeMap::new(),
            vertical: BTreeMap::new(),
            unit11: Vec::new(),
            unit00: Vec::new(),
        }
    }

    pub fn ring(&self) -> &R {
        &self.ring
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn biarity_cap(&self) -> usize {
        self.biarity_cap
    }

    pub fn set_basis(&mut self, m: usize, n: usize, degree: i64, labels: Vec<String>) {
        assert!(m + n <= self.biarity_cap, "biarity outside window");
        if !labels.is_empty() {
            self.basis.insert((m, n, degree), labels);
        }
    }

    pub fn set_in_transposition(&mut self, m: usize, n: usize, h: usize, degree: i64, t: Matrix<R>) {
        assert!(h >= 1 && h < m);
        self.in_t.insert((m, n, h, degree), t);
    }

    pub fn set_out_transposition(&mut self, m: usize, n: usize, h: usize, degree: i64, t: Matrix<R>) {
        assert!(h >= 1 && h < n);
        self.out_t.insert((m, n, h, degree), t);
    }

    pub fn set_horizontal(
        &mut self,
        (m1, n1, s1): (usize, usize, i64),
        (m2, n2, s2): (usize, usize, i64),
        block: Matrix<R>,
    ) {
        assert!(m1 + m2 + n1 + n2 <= self.biarity_cap);
        if block.is_zero() {
            self.horizontal.remove(&(m1, n1, s1, m2, n2, s2));
        } else {
            self.horizontal.insert((m1, n1, s1, m2, n2, s2), block);
        }
    }

    pub fn set_vertical(
        &mut self,
        m: usize,
        n: usize,
        k: usize,
        s_g: i64,
        s_f: i64,
        block: Matrix<R>,
    ) {
        if block.is_zero() {
            self.vertical.remove(&(m, n, k, s_g, s_f));
        } else {
            self.vertical.insert((m, n, k, s_g, s_f), block);
        }
    }

    pub fn set_unit11(&mut self, coeffs: Vec<R::Elem>) {
        self.unit11 = coeffs;
    }

    pub fn set_unit00(&mut self, coeffs: Vec<R::Elem>) {
        self.unit00 = coeffs;
    }

    pub fn rank(&self, m: usize, n: usize, degree: i64) -> usize {
        self.basis.get(&(m, n, degree)).map_or(0, Vec::len)
    }

    pub fn labels(&self, m: usize, n: usize, degree: i64) -> &[String] {
        self.basis.get(&(m, n, degree)).map_or(&[], Vec::as_slice)
    }

    pub fn degrees(&self, m: usize, n: usize) -> Vec<i64> {
        self.basis
            .range((m, n, i64::MIN)..=(m, n, i64::MAX))
            .map(|((_, _, s), _)| *s)
            .collect()
    }

    /// Occupied biarities `(m, n)`, ascending, without duplicates.
    pub fn biarities(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self.basis.keys().map(|(m, n, _)| (*m, *n)).collect();
        out.dedup();
        out
    }

    pub fn zero(&self, m: usize, n: usize, degree: i64) -> PropElem<R> {
        PropElem {
            inputs: m,
            outputs: n,
            degree,
            coeffs: vec![self.ring.zero(); self.rank(m, n, degree)],
        }
    }

    pub fn basis_elem(&self, m: usize, n: usize, degree: i64, idx: usize) -> PropElem<R> {
        let mut e = self.zero(m, n, degree);
        e.coeffs[idx] = self.ring.one();
        e
    }

    pub fn unit11(&self) -> PropElem<R> {
        PropElem {
            inputs: 1,
            outputs: 1,
            degree: 0,
            coeffs: self.unit11.clone(),
        }
    }

    pub fn unit00(&self) -> PropElem<R> {
        PropElem {
            inputs: 0,
            outputs: 0,
            degree: 0,
            coeffs: self.unit00.clone(),
        }
    }

    /// `n`-fold horizontal power of the vertical unit (`n = 0` gives the
    /// empty diagram).
    pub fn unit_power(&self, n: usize) -> Result<PropElem<R>, PropError> {
        let mut out = self.unit00();
        for _ in 0..n {
            out = self.horizontal(&out, &self.unit11())?;
        }
        Ok(out)
    }

    /// Horizontal composition `a (x) b` (inputs and outputs of `a` first).
    pub fn horizontal(&self, a: &PropElem<R>, b: &PropElem<R>) -> Result<PropElem<R>, PropError> {
        let (m, n) = (a.inputs + b.inputs, a.outputs + b.outputs);
        if m + n > self.biarity_cap {
            return Err(PropError::BiarityOverflow {
                cap: self.biarity_cap,
                context: format!(
                    "({},{}) (x) ({},{})",
                    a.inputs, a.outputs, b.inputs, b.outputs
                ),
            });
        }
        let key = (a.inputs, a.outputs, a.degree, b.inputs, b.outputs, b.degree);
        let block = match self.horizontal.get(&key) {
            Some(b) => b.clone(),
            None => Matrix::zero(
                &self.ring,
                self.rank(m, n, a.degree + b.degree),
                a.coeffs.len() * b.coeffs.len(),
            ),
        };
        Ok(PropElem {
            inputs: m,
            outputs: n,
            degree: a.degree + b.degree,
            coeffs: block.apply(&tensor_vec(&self.ring, &[&a.coeffs, &b.coeffs])),
        })
    }

    /// Vertical composition `g . f` (apply `f` first); `f`'s outputs must
    /// match `g`'s inputs.
    pub fn vertical(&self, g: &PropElem<R>, f: &PropElem<R>) -> Result<PropElem<R>, PropError> {
        if f.outputs != g.inputs {
            return Err(PropError::BiarityOverflow {
                cap: self.biarity_cap,
                context: format!(
                    "vertical ({},{}) after ({},{})",
                    g.inputs, g.outputs, f.inputs, f.outputs
                ),
            });
        }
        let key = (f.inputs, f.outputs, g.outputs, g.degree, f.degree);
        let block = match self.vertical.get(&key) {
            Some(b) => b.clone(),
            None => Matrix::zero(
                &self.ring,
                self.rank(f.inputs, g.outputs, g.degree + f.degree),
                g.coeffs.len() * f.coeffs.len(),
            ),
        };
        Ok(PropElem {
            inputs: f.inputs,
            outputs: g.outputs,
            degree: g.degree + f.degree,
            coeffs: block.apply(&tensor_vec(&self.ring, &[&g.coeffs, &f.coeffs])),
        })
    }

    fn t_block(&self, side: &'static str, m: usize, n: usize, h: usize, s: i64) -> &Matrix<R> {
        let map = if side == "in" { &self.in_t } else { &self.out_t };
        map.get(&(m, n, h, s)).unwrap_or_else(|| {
            panic!(
                "prop `{}`: missing {side} t_{h} on P({m},{n}) degree {s}",
                self.name
            )
        })
    }

    pub fn act_in_t(&self, h: usize, x: &PropElem<R>) -> PropElem<R> {
        if x.coeffs.is_empty() {
            return x.clone();
        }
        PropElem {
            coeffs: self
                .t_block("in", x.inputs, x.outputs, h, x.degree)
                .apply(&x.coeffs),
            ..x.clone()
        }
    }

    pub fn act_out_t(&self, h: usize, x: &PropElem<R>) -> PropElem<R> {
        if x.coeffs.is_empty() {
            return x.clone();
        }
        PropElem {
            coeffs: self
                .t_block("out", x.inputs, x.outputs, h, x.degree)
                .apply(&x.coeffs),
            ..x.clone()
        }
    }

    fn elem_eq(&self, x: &PropElem<R>, y: &PropElem<R>) -> bool {
        x.inputs == y.inputs
            && x.outputs == y.outputs
            && x.degree == y.degree
            && x.coeffs
                .iter()
                .zip(&y.coeffs)
                .all(|(a, b)| self.ring.is_zero(&self.ring.sub(a, b)))
    }

    fn elem_scale(&self, c: &R::Elem, x: &PropElem<R>) -> PropElem<R> {
        PropElem {
            coeffs: x.coeffs.iter().map(|a| self.ring.mul(c, a)).collect(),
            ..x.clone()
        }
    }

    /// Verify every structural axiom of the presented PROP.
    pub fn check(&self) -> Result<(), PropError> {
        self.check_shapes()?;
        self.check_actions()?;
        self.check_units()?;
        self.check_compositions()?;
        Ok(())
    }

    fn check_shapes(&self) -> Result<(), PropError> {
        let err = |what: &str, m: usize, n: usize, s: i64, want: (usize, usize), found: (usize, usize)| {
            Err(PropError::ShapeMismatch {
                name: self.name.clone(),
                what: what.to_string(),
                m,
                n,
                degree: s,
                want_rows: want.0,
                want_cols: want.1,
                found_rows: found.0,
                found_cols: found.1,
            })
        };
        for (&(m, n, s), labels) in &self.basis {
            let r = labels.len();
            for h in 1..m {
                match self.in_t.get(&(m, n, h, s)) {
                    None => {
                        return Err(PropError::MissingTransposition {
                            name: self.name.clone(),
                            side: "in",
                            m,
                            n,
                            h,
                            degree: s,
                        })
                    }
                    Some(t) if (t.rows(), t.cols()) != (r, r) => {
                        return err(&format!("in t_{h}"), m, n, s, (r, r), (t.rows(), t.cols()))
                    }
                    _ => {}
                }
            }
            for h in 1..n {
                match self.out_t.get(&(m, n, h, s)) {
                    None => {
                        return Err(PropError::MissingTransposition {
                            name: self.name.clone(),
                            side: "out",
                            m,
                            n,
                            h,
                            degree: s,
                        })
                    }
                    Some(t) if (t.rows(), t.cols()) != (r, r) => {
                        return err(&format!("out t_{h}"), m, n, s, (r, r), (t.rows(), t.cols()))
                    }
                    _ => {}
                }
            }
        }
        for (&(m1, n1, s1, m2, n2, s2), block) in &self.horizontal {
            let want = (
                self.rank(m1 + m2, n1 + n2, s1 + s2),
                self.rank(m1, n1, s1) * self.rank(m2, n2, s2),
            );
            if (block.rows(), block.cols()) != want {
                return err(
                    "horizontal block",
                    m1 + m2,
                    n1 + n2,
                    s1 + s2,
                    want,
                    (block.rows(), block.cols()),
                );
            }
        }
        for (&(m, n, k, sg, sf), block) in &self.vertical {
            let want = (
                self.rank(m, k, sg + sf),
                self.rank(n, k, sg) * self.rank(m, n, sf),
            );
            if (block.rows(), block.cols()) != want {
                return err("vertical block", m, k, sg + sf, want, (block.rows(), block.cols()));
            }
        }
        if self.unit11.len() != self.rank(1, 1, 0) {
            return err("unit11", 1, 1, 0, (self.rank(1, 1, 0), 1), (self.unit11.len(), 1));
        }
        if self.unit00.len() != self.rank(0, 0, 0) {
            return err("unit00", 0, 0, 0, (self.rank(0, 0, 0), 1), (self.unit00.len(), 1));
        }
        Ok(())
    }

    fn check_actions(&self) -> Result<(), PropError> {
        for (&(m, n, s), labels) in &self.basis {
            let r = labels.len();
            let id = Matrix::identity(&self.ring, r);
            let int = |h: usize| self.t_block("in", m, n, h, s).clone();
            let outt = |h: usize| self.t_block("out", m, n, h, s).clone();
            let fail = |axiom: &'static str, ctx: String| -> Result<(), PropError> {
                Err(PropError::AxiomViolation { axiom, context: ctx })
            };
            for h in 1..m {
                if !int(h).mul(&int(h)).sub(&id).is_zero() {
                    return fail("in-involution", format!("t_{h} on P({m},{n}) degree {s}"));
                }
            }
            for h in 1..n {
                if !outt(h).mul(&outt(h)).sub(&id).is_zero() {
                    return fail("out-involution", format!("t_{h} on P({m},{n}) degree {s}"));
                }
            }
            for h in 1..m.saturating_sub(1) {
                let lhs = int(h).mul(&int(h + 1)).mul(&int(h));
                let rhs = int(h + 1).mul(&int(h)).mul(&int(h + 1));
                if !lhs.sub(&rhs).is_zero() {
                    return fail("in-braid", format!("P({m},{n}) degree {s}"));
                }
            }
            for h in 1..n.saturating_sub(1) {
                let lhs = outt(h).mul(&outt(h + 1)).mul(&outt(h));
                let rhs = outt(h + 1).mul(&outt(h)).mul(&outt(h + 1));
                if !lhs.sub(&rhs).is_zero() {
                    return fail("out-braid", format!("P({m},{n}) degree {s}"));
                }
            }
            for h in 1..m {
                for g in h + 2..m {
                    if !int(h).mul(&int(g)).sub(&int(g).mul(&int(h))).is_zero() {
                        return fail("in-distant", format!("P({m},{n}) degree {s}"));
                    }
                }
            }
            for h in 1..n {
                for g in h + 2..n {
                    if !outt(h).mul(&outt(g)).sub(&outt(g).mul(&outt(h))).is_zero() {
                        return fail("out-distant", format!("P({m},{n}) degree {s}"));
                    }
                }
            }
            for h in 1..m {
                for g in 1..n {
                    if !int(h).mul(&outt(g)).sub(&outt(g).mul(&int(h))).is_zero() {
                        return fail("inout-commute", format!("P({m},{n}) degree {s}"));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_units(&self) -> Result<(), PropError> {
        for (&(m, n, s), labels) in &self.basis {
            for idx in 0..labels.len() {
                let e = self.basis_elem(m, n, s, idx);
                let l = self.horizontal(&self.unit00(), &e)?;
                let r = self.horizontal(&e, &self.unit00())?;
                if !self.elem_eq(&l, &e) || !self.elem_eq(&r, &e) {
                    return Err(PropError::AxiomViolation {
                        axiom: "unit-horizontal",
                        context: format!("{} on P({m},{n}) degree {s}", labels[idx]),
                    });
                }
                // the n-fold unit lives in P(n,n); only check what the
                // biarity window can represent
                if 2 * n <= self.biarity_cap {
                    let left = self.vertical(&self.unit_power(n)?, &e)?;
                    if !self.elem_eq(&left, &e) {
                        return Err(PropError::AxiomViolation {
                            axiom: "unit-vertical-left",
                            context: format!("{} on P({m},{n}) degree {s}", labels[idx]),
                        });
                    }
                }
                if 2 * m <= self.biarity_cap {
                    let right = self.vertical(&e, &self.unit_power(m)?)?;
                    if !self.elem_eq(&right, &e) {
                        return Err(PropError::AxiomViolation {
                            axiom: "unit-vertical-right",
                            context: format!("{} on P({m},{n}) degree {s}", labels[idx]),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn check_compositions(&self) -> Result<(), PropError> {
        let keys: Vec<(usize, usize, i64)> = self.basis.keys().copied().collect();
        // horizontal associativity
        for &(m1, n1, s1) in &keys {
            for &(m2, n2, s2) in &keys {
                if m1 + m2 + n1 + n2 > self.biarity_cap {
                    continue;
                }
                for &(m3, n3, s3) in &keys {
                    if m1 + m2 + m3 + n1 + n2 + n3 > self.biarity_cap
                        || m2 + m3 + n2 + n3 > self.biarity_cap
                    {
                        continue;
                    }
                    for ia in 0..self.rank(m1, n1, s1) {
                        let a = self.basis_elem(m1, n1, s1, ia);
                        for ib in 0..self.rank(m2, n2, s2) {
                            let b = self.basis_elem(m2, n2, s2, ib);
                            for ic in 0..self.rank(m3, n3, s3) {
                                let c = self.basis_elem(m3, n3, s3, ic);
                                let lhs = self.horizontal(&self.horizontal(&a, &b)?, &c)?;
                                let rhs = self.horizontal(&a, &self.horizontal(&b, &c)?)?;
                                if !self.elem_eq(&lhs, &rhs) {
                                    return Err(PropError::AxiomViolation {
                                        axiom: "horizontal-assoc",
                                        context: format!(
                                            "({m1},{n1}) (x) ({m2},{n2}) (x) ({m3},{n3})"
                                        ),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        // vertical associativity: h . (g . f) = (h . g) . f
        for &(m, n, sf) in &keys {
            for &(n2, k, sg) in &keys {
                if n2 != n {
                    continue;
                }
                for &(k2, l, sh) in &keys {
                    if k2 != k {
                        continue;
                    }
                    // both intermediate composites must be representable in
                    // the biarity window, or truncation would fake a failure
                    if m + k > self.biarity_cap || n + l > self.biarity_cap {
                        continue;
                    }
                    for iff in 0..self.rank(m, n, sf) {
                        let f = self.basis_elem(m, n, sf, iff);
                        for ig in 0..self.rank(n, k, sg) {
                            let g = self.basis_elem(n, k, sg, ig);
                            for ih in 0..self.rank(k, l, sh) {
                                let h = self.basis_elem(k, l, sh, ih);
                                let lhs = self.vertical(&h, &self.vertical(&g, &f)?)?;
                                let rhs = self.vertical(&self.vertical(&h, &g)?, &f)?;
                                if !self.elem_eq(&lhs, &rhs) {
                                    return Err(PropError::AxiomViolation {
                                        axiom: "vertical-assoc",
                                        context: format!("({m},{n}) then ({n},{k}) then ({k},{l})"),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        // interchange: (g1 . f1) (x) (g2 . f2) = (-1)^{|g2||f1|} ((g1 (x) g2) . (f1 (x) f2))
        for &(m1, n1, sf1) in &keys {
            for &(n1b, k1, sg1) in &keys {
                if n1b != n1 {
                    continue;
                }
                for &(m2, n2, sf2) in &keys {
                    for &(n2b, k2, sg2) in &keys {
                        if n2b != n2 {
                            continue;
                        }
                        if m1 + m2 + n1 + n2 > self.biarity_cap
                            || n1 + n2 + k1 + k2 > self.biarity_cap
                            || m1 + m2 + k1 + k2 > self.biarity_cap
                            || m1 + k1 > self.biarity_cap
                            || m2 + k2 > self.biarity_cap
                        {
                            continue;
                        }
                        let sign = if (sg2 * sf1).rem_euclid(2) == 0 {
                            self.ring.one()
                        } else {
                            self.ring.neg(&self.ring.one())
                        };
                        for if1 in 0..self.rank(m1, n1, sf1) {
                            let f1 = self.basis_elem(m1, n1, sf1, if1);
                            for ig1 in 0..self.rank(n1, k1, sg1) {
                                let g1 = self.basis_elem(n1, k1, sg1, ig1);
                                for if2 in 0..self.rank(m2, n2, sf2) {
                                    let f2 = self.basis_elem(m2, n2, sf2, if2);
                                    for ig2 in 0..self.rank(n2, k2, sg2) {
                                        let g2 = self.basis_elem(n2, k2, sg2, ig2);
                                        let lhs = self.horizontal(
                                            &self.vertical(&g1, &f1)?,
                                            &self.vertical(&g2, &f2)?,
                                        )?;
                                        let rhs = self.elem_scale(
                                            &sign,
                                            &self.vertical(
                                                &self.horizontal(&g1, &g2)?,
                                                &self.horizontal(&f1, &f2)?,
                                            )?,
                                        );
                                        if !self.elem_eq(&lhs, &rhs) {
                                            return Err(PropError::AxiomViolation {
                                                axiom: "interchange",
                                                context: format!(
                                                    "f1 ({m1},{n1}), g1 ({n1},{k1}), f2 ({m2},{n2}), g2 ({n2},{k2})"
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
        }
        // a permutation in the middle can act on f's outputs or g's inputs
        for &(m, n, sf) in &keys {
            for &(n2, k, sg) in &keys {
                if n2 != n || n < 2 {
                    continue;
                }
                for iff in 0..self.rank(m, n, sf) {
                    let f = self.basis_elem(m, n, sf, iff);
                    for ig in 0..self.rank(n, k, sg) {
                        let g = self.basis_elem(n, k, sg, ig);
                        for h in 1..n {
                            let lhs = self.vertical(&self.act_in_t(h, &g), &f)?;
                            let rhs = self.vertical(&g, &self.act_out_t(h, &f))?;
                            if !self.elem_eq(&lhs, &rhs) {
                                return Err(PropError::AxiomViolation {
                                    axiom: "middle-permutation",
                                    context: format!("t_{h} between ({m},{n}) and ({n},{k})"),
                                });
                            }
                        }
                    }
                }
            }
        }
        // horizontal equivariance within each block of inputs/outputs
        for &(m1, n1, s1) in &keys {
            for &(m2, n2, s2) in &keys {
                if m1 + m2 + n1 + n2 > self.biarity_cap {
                    continue;
                }
                for ia in 0..self.rank(m1, n1, s1) {
                    let a = self.basis_elem(m1, n1, s1, ia);
                    for ib in 0..self.rank(m2, n2, s2) {
                        let b = self.basis_elem(m2, n2, s2, ib);
                        let ab = self.horizontal(&a, &b)?;
                        for h in 1..m1 {
                            let lhs = self.act_in_t(h, &ab);
                            let rhs = self.horizontal(&self.act_in_t(h, &a), &b)?;
                            if !self.elem_eq(&lhs, &rhs) {
                                return Err(PropError::AxiomViolation {
                                    axiom: "horizontal-equivariance",
                                    context: format!("in t_{h} on ({m1},{n1}) (x) ({m2},{n2})"),
                                });
                            }
                        }
                        for h in 1..m2 {
                            let lhs = self.act_in_t(m1 + h, &ab);
                            let rhs = self.horizontal(&a, &self.act_in_t(h, &b))?;
                            if !self.elem_eq(&lhs, &rhs) {
                                return Err(PropError::AxiomViolation {
                                    axiom: "horizontal-equivariance",
                                    context: format!("in t_{h} on second factor ({m2},{n2})"),
                                });
                            }
                        }
                        for h in 1..n1 {
                            let lhs = self.act_out_t(h, &ab);
                            let rhs = self.horizontal(&self.act_out_t(h, &a), &b)?;
                            if !self.elem_eq(&lhs, &rhs) {
                                return Err(PropError::AxiomViolation {
                                    axiom: "horizontal-equivariance",
                                    context: format!("out t_{h} on ({m1},{n1}) (x) ({m2},{n2})"),
                                });
                            }
                        }
                        for h in 1..n2 {
                            let lhs = self.act_out_t(n1 + h, &ab);
                            let rhs = self.horizontal(&a, &self.act_out_t(h, &b))?;
                            if !self.elem_eq(&lhs, &rhs) {
                                return Err(PropError::AxiomViolation {
                                    axiom: "horizontal-equivariance",
                                    context: format!("out t_{h} on second factor ({m2},{n2})"),
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

/// Verify every structural axiom of a presented PROP.
pub fn check_prop<R: Ring>(p: &Prop<R>) -> Result<(), PropError> {
    p.check()
}

/// The endomorphism PROP of a free module of the given rank: `P(m, n)` is
/// spanned by the matrix units `E[J|I]` mapping the `I`-th tensor basis
/// vector of `V^(x)m` to the `J`-th of `V^(x)n`; horizontal composition is
/// the tensor product and vertical composition is composition of maps.
pub fn endomorphism_prop<R: Ring>(ring: &R, v: usize, biarity_cap: usize) -> Prop<R> {
    let mut p = Prop::new(ring, format!("endo({v})"), biarity_cap);
    let pow = |e: usize| v.pow(e as u32);
    let digits = |mut x: usize, len: usize| -> Vec<usize> {
        let mut d = vec![0usize; len];
        for k in (0..len).rev() {
            d[k] = x % v;
            x /= v;
        }
        d
    };
    let undigits = |d: &[usize]| -> usize { d.iter().fold(0, |acc, &x| acc * v + x) };
    for m in 0..=biarity_cap {
        for n in 0..=biarity_cap.saturating_sub(m) {
            let rank = pow(m + n);
            let labels = (0..rank)
                .map(|idx| {
                    let (j, i) = (idx / pow(m), idx % pow(m));
                    let show = |d: &[usize]| {
                        d.iter().map(usize::to_string).collect::<Vec<_>>().join("")
                    };
                    format!("E[{}|{}]", show(&digits(j, n)), show(&digits(i, m)))
                })
                .collect();
            p.set_basis(m, n, 0, labels);
            // input action: swap positions h-1, h of I
            for h in 1..m {
                let mut t = Matrix::zero(ring, rank, rank);
                for idx in 0..rank {
                    let (j, i) = (idx / pow(m), idx % pow(m));
                    let mut id = digits(i, m);
                    id.swap(h - 1, h);
                    t.set(j * pow(m) + undigits(&id), idx, ring.one());
                }
                p.set_in_transposition(m, n, h, 0, t);
            }
            // output action: swap positions h-1, h of J
            for h in 1..n {
                let mut t = Matrix::zero(ring, rank, rank);
                for idx in 0..rank {
                    let (j, i) = (idx / pow(m), idx % pow(m));
                    let mut jd = digits(j, n);
                    jd.swap(h - 1, h);
                    t.set(undigits(&jd) * pow(m) + i, idx, ring.one());
                }
                p.set_out_transposition(m, n, h, 0, t);
            }
        }
    }
    // horizontal: E[J1|I1] (x) E[J2|I2] = E[J1 ++ J2 | I1 ++ I2]
    let biar: Vec<(usize, usize)> = p.biarities();
    for &(m1, n1) in &biar {
        for &(m2, n2) in &biar {
            if m1 + m2 + n1 + n2 > biarity_cap {
                continue;
            }
            let (r1, r2) = (pow(m1 + n1), pow(m2 + n2));
            let rows = pow(m1 + m2 + n1 + n2);
            let mut block = Matrix::zero(ring, rows, r1 * r2);
            for x1 in 0..r1 {
                let (j1, i1) = (x1 / pow(m1), x1 % pow(m1));
                for x2 in 0..r2 {
                    let (j2, i2) = (x2 / pow(m2), x2 % pow(m2));
                    let j = undigits(&[digits(j1, n1), digits(j2, n2)].concat());
                    let i = undigits(&[digits(i1, m1), digits(i2, m2)].concat());
                    block.set(j * pow(m1 + m2) + i, x1 * r2 + x2, ring.one());
                }
            }
            p.set_horizontal((m1, n1, 0), (m2, n2, 0), block);
        }
    }
    // vertical: E[K|J'] . E[J|I] = delta_{J',J} E[K|I]
    for &(m, n) in &biar {
        for &(n2, k) in &biar {
            if n2 != n || m + k > biarity_cap {
                continue;
            }
            let (rg, rf) = (pow(n + k), pow(m + n));
            let rows = pow(m + k);
            let mut block = Matrix::zero(ring, rows, rg * rf);
            for xg in 0..rg {
                let (kk, jp) = (xg / pow(n), xg % pow(n));
                for xf in 0..rf {
                    let (j, i) = (xf / pow(m), xf % pow(m));
                    if jp == j {
                        block.set(kk * pow(m) + i, xg * rf + xf, ring.one());
                    }
                }
            }
            p.set_vertical(m, n, k, 0, 0, block);
        }
    }
    // units: the identity map and the empty diagram
    let mut unit11 = vec![ring.zero(); pow(2)];
    for a in 0..v {
        unit11[a * v + a] = ring.one();
    }
    p.set_unit11(unit11);
    p.set_unit00(vec![ring.one()]);
    p
}

// ---------------------------------------------------------------------------
// prop algebras
// ---------------------------------------------------------------------------

/// An element of a tensor power of a bigraded module: a formal sum of terms,
/// each a coefficient vector over the tensor basis of one tuple of
/// components (row-major, last factor fastest).
#[derive(Clone, Debug)]
pub struct TensorElement<R: Ring> {
    pub factors: usize,
    pub terms: BTreeMap<Vec<Bidegree>, Vec<R::Elem>>,
}

impl<R: Ring> TensorElement<R> {
    pub fn zero(factors: usize) -> Self {
        TensorElement {
            factors,
            terms: BTreeMap::new(),
        }
    }

    /// A pure term (drops it when the coefficient vector is zero).
    pub fn pure(ring: &R, tuple: Vec<Bidegree>, coeffs: Vec<R::Elem>) -> Self {
        let mut te = TensorElement::zero(tuple.len());
        te.accumulate(ring, tuple, &coeffs);
        te
    }

    pub fn accumulate(&mut self, ring: &R, tuple: Vec<Bidegree>, coeffs: &[R::Elem]) {
        assert_eq!(tuple.len(), self.factors);
        if coeffs.iter().all(|c| ring.is_zero(c)) {
            return;
        }
        let entry = self
            .terms
            .entry(tuple)
            .or_insert_with(|| vec![ring.zero(); coeffs.len()]);
        for (e, c) in entry.iter_mut().zip(coeffs) {
            *e = ring.add(e, c);
        }
    }

    pub fn add(&self, ring: &R, other: &TensorElement<R>) -> TensorElement<R> {
        let mut out = self.clone();
        for (tuple, coeffs) in &other.terms {
            out.accumulate(ring, tuple.clone(), coeffs);
        }
        out
    }

    pub fn scale(&self, ring: &R, c: &R::Elem) -> TensorElement<R> {
        let mut out = TensorElement::zero(self.factors);
        for (tuple, coeffs) in &self.terms {
            let scaled: Vec<R::Elem> = coeffs.iter().map(|x| ring.mul(c, x)).collect();
            out.accumulate(ring, tuple.clone(), &scaled);
        }
        out
    }

    /// Concatenate tensor factors: `self (x) other`, with no sign (signs are
    /// the caller's business, they depend on what moved past what).
    pub fn concat(&self, ring: &R, other: &TensorElement<R>) -> TensorElement<R> {
        let mut out = TensorElement::zero(self.factors + other.factors);
        for (t1, c1) in &self.terms {
            for (t2, c2) in &other.terms {
                let mut tuple = t1.clone();
                tuple.extend_from_slice(t2);
                out.accumulate(ring, tuple, &tensor_vec(ring, &[c1, c2]));
            }
        }
        out
    }

    /// Swap adjacent factors `h` and `h+1` (1-based) with the Koszul sign of
    /// the exchanged bidegrees.
    pub fn swap_factors(&self, module: &BigradedModule<R>, h: usize) -> TensorElement<R> {
        let ring = module.ring();
        let mut out = TensorElement::zero(self.factors);
        for (tuple, coeffs) in &self.terms {
            let ranks: Vec<usize> = tuple.iter().map(|b| module.rank(*b)).collect();
            let mut swapped_tuple = tuple.clone();
            swapped_tuple.swap(h - 1, h);
            let mut swapped_ranks = ranks.clone();
            swapped_ranks.swap(h - 1, h);
            let sign_neg = (tuple[h - 1].q * tuple[h].q).rem_euclid(2) == 1;
            let total: usize = ranks.iter().product();
            let mut newc = vec![ring.zero(); total];
            for flat in 0..total {
                let mut digits = decode_multi(flat, &ranks);
                digits.swap(h - 1, h);
                let dst = encode_multi(&digits, &swapped_ranks);
                newc[dst] = if sign_neg {
                    ring.neg(&coeffs[flat])
                } else {
                    coeffs[flat].clone()
                };
            }
            out.accumulate(ring, swapped_tuple, &newc);
        }
        out
    }

    /// The tensor differential: `sum_k (-1)^{|x_1|+..+|x_{k-1}|}
    /// 1 (x) .. (x) d (x) .. (x) 1`.
    pub fn differential(&self, dg: &DgModule<R>) -> TensorElement<R> {
        let ring = dg.ring();
        let d_bd = dg.d.bidegree();
        let mut out = TensorElement::zero(self.factors);
        for (tuple, coeffs) in &self.terms {
            let ranks: Vec<usize> = tuple.iter().map(|b| dg.module.rank(*b)).collect();
            for k in 0..self.factors {
                let passed: i64 = tuple[..k].iter().map(|b| b.q).sum();
                let sign_neg = passed.rem_euclid(2) == 1;
                let dblock = dg.d.block(&dg.module, &dg.module, tuple[k]);
                if dblock.rows() == 0 {
                    continue;
                }
                let mut new_tuple = tuple.clone();
                new_tuple[k] = tuple[k].plus(d_bd);
                let mut new_ranks = ranks.clone();
                new_ranks[k] = dblock.rows();
                let total_new: usize = new_ranks.iter().product();
                let mut newc = vec![ring.zero(); total_new];
                let total: usize = ranks.iter().product();
                for flat in 0..total {
                    let digits = decode_multi(flat, &ranks);
                    if ring.is_zero(&coeffs[flat]) {
                        continue;
                    }
                    for row in 0..dblock.rows() {
                        let c = ring.mul(&coeffs[flat], dblock.at(row, digits[k]));
                        if ring.is_zero(&c) {
                            continue;
                        }
                        let mut nd = digits.clone();
                        nd[k] = row;
                        let dst = encode_multi(&nd, &new_ranks);
                        let val = if sign_neg { ring.neg(&c) } else { c };
                        newc[dst] = ring.add(&newc[dst], &val);
                    }
                }
                out.accumulate(ring, new_tuple, &newc);
            }
        }
        out
    }

    /// Zero test in the tensor power of (possibly presented) components: a
    /// term is zero when its coefficient vector lies in the span of the
    /// relation tensors `R_k (x) (basis of the others)`.
    pub fn is_zero(&self, module: &BigradedModule<R>) -> bool {
        let ring = module.ring();
        for (tuple, coeffs) in &self.terms {
            if coeffs.iter().all(|c| ring.is_zero(c)) {
                continue;
            }
            let rels = tensor_relations(module, tuple);
            if rels.cols() == 0 {
                return false;
            }
            if !ColumnBasis::new(&rels).contains(coeffs) {
                return false;
            }
        }
        true
    }

    pub fn eq(&self, module: &BigradedModule<R>, other: &TensorElement<R>) -> bool {
        let ring = module.ring();
        let minus = other.scale(ring, &ring.neg(&ring.one()));
        self.add(ring, &minus).is_zero(module)
    }
}

/// Relations of a tensor product of presented components: for each factor
/// with relations, the tensors of a relation column with basis vectors of
/// the other factors.
fn tensor_relations<R: Ring>(module: &BigradedModule<R>, tuple: &[Bidegree]) -> Matrix<R> {
    let ring = module.ring();
    let ranks: Vec<usize> = tuple.iter().map(|b| module.rank(*b)).collect();
    let total: usize = ranks.iter().product();
    let mut cols: Vec<Vec<R::Elem>> = Vec::new();
    for (k, at) in tuple.iter().enumerate() {
        let rels = module.relations(*at);
        if rels.cols() == 0 {
            continue;
        }
        let others: usize = ranks
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, r)| *r)
            .product();
        for rc in 0..rels.cols() {
            for flat in 0..others {
                let other_ranks: Vec<usize> = ranks
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .map(|(_, r)| *r)
                    .collect();
                let mut rest = decode_multi(flat, &other_ranks);
                let mut factors: Vec<Vec<R::Elem>> = Vec::with_capacity(tuple.len());
                for (j, r) in ranks.iter().enumerate() {
                    if j == k {
                        factors.push(rels.col_vec(rc));
                    } else {
                        let mut e = vec![ring.zero(); *r];
                        e[rest.remove(0)] = ring.one();
                        factors.push(e);
                    }
                }
                let slices: Vec<&[R::Elem]> = factors.iter().map(Vec::as_slice).collect();
                cols.push(tensor_vec(ring, &slices));
            }
        }
    }
    Matrix::from_columns(ring, total, &cols)
}

fn decode_multi(mut flat: usize, ranks: &[usize]) -> Vec<usize> {
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

type PropGammaKey = (usize, usize, i64, usize, Vec<Bidegree>);

/// An algebra over a PROP: structure maps from tensor powers of the carrier
/// to tensor powers, one block per basis operation, input tuple and output
/// tuple.
#[derive(Clone, Debug)]
pub struct PropAlgebra<R: Ring> {
    pub prop: Prop<R>,
    pub dg: DgModule<R>,
    gamma: BTreeMap<PropGammaKey, BTreeMap<Vec<Bidegree>, Matrix<R>>>,
}

impl<R: Ring> PropAlgebra<R> {
    pub fn new(prop: Prop<R>, dg: DgModule<R>) -> Self {
        PropAlgebra {
            prop,
            dg,
            gamma: BTreeMap::new(),
        }
    }

    pub fn ring(&self) -> &R {
        self.dg.ring()
    }

    /// Install one block: basis element `idx` of `P(m,n)_s`, on the given
    /// input tuple, contributing to the given output tuple.  Output tuple
    /// bidegrees must sum to the input total shifted by `(0, s)`.
    pub fn set_gamma(
        &mut self,
        (m, n, s, idx): (usize, usize, i64, usize),
        in_tuple: Vec<Bidegree>,
        out_tuple: Vec<Bidegree>,
        block: Matrix<R>,
    ) -> Result<(), PropError> {
        let sum = |t: &[Bidegree]| {
            t.iter()
                .fold(bd(0, 0), |acc, b| acc.plus(*b))
        };
        let want = sum(&in_tuple).plus(bd(0, s));
        if in_tuple.len() != m || out_tuple.len() != n || sum(&out_tuple) != want {
            return Err(PropError::Unsupported(format!(
                "gamma block tuples do not conserve bidegree at P({m},{n}) degree {s}"
            )));
        }
        let want_rows: usize = out_tuple.iter().map(|b| self.dg.module.rank(*b)).product();
        let want_cols: usize = in_tuple.iter().map(|b| self.dg.module.rank(*b)).product();
        if block.rows() != want_rows || block.cols() != want_cols {
            return Err(PropError::ShapeMismatch {
                name: "prop gamma".to_string(),
                what: format!("block for inputs {in_tuple:?} outputs {out_tuple:?}"),
                m,
                n,
                degree: s,
                want_rows,
                want_cols,
                found_rows: block.rows(),
                found_cols: block.cols(),
            });
        }
        let outer = self.gamma.entry((m, n, s, idx, in_tuple)).or_default();
        if block.is_zero() {
            outer.remove(&out_tuple);
        } else {
            outer.insert(out_tuple, block);
        }
        Ok(())
    }

    /// Evaluate the action on input vectors given as a coefficient vector
    /// over the tensor basis of the input tuple.
    pub fn act_on_tensor(
        &self,
        pi: &PropElem<R>,
        in_tuple: &[Bidegree],
        tensor_coeffs: &[R::Elem],
    ) -> Result<TensorElement<R>, PropError> {
        if pi.inputs != in_tuple.len() {
            return Err(PropError::BiarityOverflow {
                cap: self.prop.biarity_cap(),
                context: format!(
                    "action of P({},{}) on {} inputs",
                    pi.inputs,
                    pi.outputs,
                    in_tuple.len()
                ),
            });
        }
        let ring = self.ring().clone();
        let mut out = TensorElement::zero(pi.outputs);
        for (idx, c) in pi.coeffs.iter().enumerate() {
            if ring.is_zero(c) {
                continue;
            }
            let key = (pi.inputs, pi.outputs, pi.degree, idx, in_tuple.to_vec());
            if let Some(blocks) = self.gamma.get(&key) {
                for (out_tuple, block) in blocks {
                    let v = block.apply(tensor_coeffs);
                    let scaled: Vec<R::Elem> = v.iter().map(|x| ring.mul(c, x)).collect();
                    out.accumulate(&ring, out_tuple.clone(), &scaled);
                }
            }
        }
        Ok(out)
    }

    /// Evaluate the action on separate input vectors.
    pub fn act(
        &self,
        pi: &PropElem<R>,
        inputs: &[(Bidegree, Vec<R::Elem>)],
    ) -> Result<TensorElement<R>, PropError> {
        let tuple: Vec<Bidegree> = inputs.iter().map(|(b, _)| *b).collect();
        let vecs: Vec<&[R::Elem]> = inputs.iter().map(|(_, v)| v.as_slice()).collect();
        self.act_on_tensor(pi, &tuple, &tensor_vec(self.ring(), &vecs))
    }

    /// Evaluate on a tensor element (term by term), as needed to compose
    /// actions vertically.
    pub fn act_tensor(
        &self,
        pi: &PropElem<R>,
        te: &TensorElement<R>,
    ) -> Result<TensorElement<R>, PropError> {
        let ring = self.ring().clone();
        let mut out = TensorElement::zero(pi.outputs);
        for (tuple, coeffs) in &te.terms {
            let part = self.act_on_tensor(pi, tuple, coeffs)?;
            out = out.add(&ring, &part);
        }
        Ok(out)
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

    /// Verify the PROP-algebra laws on every tuple of occupied bidegrees.
    pub fn check(&self) -> Result<(), PropError> {
        let ring = self.ring().clone();
        let support: Vec<Bidegree> = self.dg.module.support().collect();
        // unit
        for &at in &support {
            let r = self.dg.module.rank(at);
            for j in 0..r {
                let mut e = vec![ring.zero(); r];
                e[j] = ring.one();
                let got = self.act(&self.prop.unit11(), &[(at, e.clone())])?;
                let want = TensorElement::pure(&ring, vec![at], e);
                if !got.eq(&self.dg.module, &want) {
                    return Err(PropError::AxiomViolation {
                        axiom: "prop-algebra-unit",
                        context: format!("unit action at {at}"),
                    });
                }
            }
        }
        let biar = self.prop.biarities();
        // vertical compatibility and equivariance and derivation
        for &(m, n) in &biar {
            for s in self.prop.degrees(m, n) {
                for tuple in self.tuples(&support, m) {
                    let ranks: Vec<usize> =
                        tuple.iter().map(|b| self.dg.module.rank(*b)).collect();
                    let total: usize = ranks.iter().product();
                    if total == 0 {
                        continue;
                    }
                    for idx in 0..self.prop.rank(m, n, s) {
                        let pi = self.prop.basis_elem(m, n, s, idx);
                        self.check_equivariance_at(&ring, &pi, &tuple, &ranks)?;
                        self.check_derivation_at(&ring, &pi, &tuple, &ranks)?;
                        self.check_relations_at(&ring, &pi, &tuple, &ranks)?;
                    }
                }
            }
        }
        self.check_vertical(&support)?;
        self.check_horizontal(&support)?;
        Ok(())
    }

    fn check_equivariance_at(
        &self,
        ring: &R,
        pi: &PropElem<R>,
        tuple: &[Bidegree],
        ranks: &[usize],
    ) -> Result<(), PropError> {
        let total: usize = ranks.iter().product();
        // inputs
        for h in 1..pi.inputs {
            let tpi = self.prop.act_in_t(h, pi);
            let mut swapped = tuple.to_vec();
            swapped.swap(h - 1, h);
            let sign_neg =
                (tuple[h - 1].q * tuple[h].q).rem_euclid(2) == 1;
            let mut swapped_ranks = ranks.to_vec();
            swapped_ranks.swap(h - 1, h);
            for flat in 0..total {
                let digits = decode_multi(flat, ranks);
                let mut e = vec![ring.zero(); total];
                e[flat] = ring.one();
                let lhs = self.act_on_tensor(&tpi, tuple, &e)?;
                let mut sd = digits.clone();
                sd.swap(h - 1, h);
                let sflat = encode_multi(&sd, &swapped_ranks);
                let stotal: usize = swapped_ranks.iter().product();
                let mut se = vec![ring.zero(); stotal];
                se[sflat] = ring.one();
                let mut rhs = self.act_on_tensor(pi, &swapped, &se)?;
                if sign_neg {
                    rhs = rhs.scale(ring, &ring.neg(&ring.one()));
                }
                if !lhs.eq(&self.dg.module, &rhs) {
                    return Err(PropError::AxiomViolation {
                        axiom: "prop-algebra-equivariance-in",
                        context: format!("in t_{h}, inputs {tuple:?}"),
                    });
                }
            }
        }
        // outputs
        for h in 1..pi.outputs {
            let tpi = self.prop.act_out_t(h, pi);
            for flat in 0..total {
                let mut e = vec![ring.zero(); total];
                e[flat] = ring.one();
                let lhs = self.act_on_tensor(&tpi, tuple, &e)?;
                let rhs = self.act_on_tensor(pi, tuple, &e)?.swap_factors(&self.dg.module, h);
                if !lhs.eq(&self.dg.module, &rhs) {
                    return Err(PropError::AxiomViolation {
                        axiom: "prop-algebra-equivariance-out",
                        context: format!("out t_{h}, inputs {tuple:?}"),
                    });
                }
            }
        }
        Ok(())
    }

    fn check_derivation_at(
        &self,
        ring: &R,
        pi: &PropElem<R>,
        tuple: &[Bidegree],
        ranks: &[usize],
    ) -> Result<(), PropError> {
        let total: usize = ranks.iter().product();
        let d_bd = self.dg.d.bidegree();
        for flat in 0..total {
            let digits = decode_multi(flat, ranks);
            let inputs: Vec<(Bidegree, Vec<R::Elem>)> = tuple
                .iter()
                .zip(&digits)
                .map(|(b, &j)| {
                    let mut e = vec![ring.zero(); self.dg.module.rank(*b)];
                    e[j] = ring.one();
                    (*b, e)
                })
                .collect();
            let lhs = self.act(pi, &inputs)?.differential(&self.dg);
            let mut rhs = TensorElement::zero(pi.outputs);
            for h in 0..pi.inputs {
                let passed: i64 = tuple[..h].iter().map(|b| b.q).sum();
                let sign_neg = (pi.degree + passed).rem_euclid(2) == 1;
                let dy = self.dg.d.apply(
                    &self.dg.module,
                    &self.dg.module,
                    tuple[h],
                    &inputs[h].1,
                );
                let mut modified = inputs.clone();
                modified[h] = (tuple[h].plus(d_bd), dy);
                let mut term = self.act(pi, &modified)?;
                if sign_neg {
                    term = term.scale(ring, &ring.neg(&ring.one()));
                }
                rhs = rhs.add(ring, &term);
            }
            if !lhs.eq(&self.dg.module, &rhs) {
                return Err(PropError::AxiomViolation {
                    axiom: "prop-algebra-derivation",
                    context: format!("inputs {tuple:?}"),
                });
            }
        }
        Ok(())
    }

    fn check_relations_at(
        &self,
        ring: &R,
        pi: &PropElem<R>,
        tuple: &[Bidegree],
        ranks: &[usize],
    ) -> Result<(), PropError> {
        for h in 0..tuple.len() {
            let rels = self.dg.module.relations(tuple[h]);
            if rels.cols() == 0 {
                continue;
            }
            let other_ranks: Vec<usize> = ranks
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != h)
                .map(|(_, r)| *r)
                .collect();
            let others: usize = other_ranks.iter().product();
            for rc in 0..rels.cols() {
                for flat in 0..others {
                    let mut rest = decode_multi(flat, &other_ranks);
                    let mut inputs = Vec::with_capacity(tuple.len());
                    for (k, b) in tuple.iter().enumerate() {
                        if k == h {
                            inputs.push((*b, rels.col_vec(rc)));
                        } else {
                            let mut e = vec![ring.zero(); ranks[k]];
                            e[rest.remove(0)] = ring.one();
                            inputs.push((*b, e));
                        }
                    }
                    let out = self.act(pi, &inputs)?;
                    if !out.is_zero(&self.dg.module) {
                        return Err(PropError::AxiomViolation {
                            axiom: "prop-algebra-relations",
                            context: format!("relation {rc} in slot {} of {tuple:?}", h + 1),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn check_vertical(&self, support: &[Bidegree]) -> Result<(), PropError> {
        let biar = self.prop.biarities();
        for &(m, n) in &biar {
            for &(n2, k) in &biar {
                if n2 != n || m + k > self.prop.biarity_cap() {
                    continue;
                }
                for sf in self.prop.degrees(m, n) {
                    for sg in self.prop.degrees(n, k) {
                        for tuple in self.tuples(support, m) {
                            let ranks: Vec<usize> =
                                tuple.iter().map(|b| self.dg.module.rank(*b)).collect();
                            let total: usize = ranks.iter().product();
                            if total == 0 {
                                continue;
                            }
                            for iff in 0..self.prop.rank(m, n, sf) {
                                let f = self.prop.basis_elem(m, n, sf, iff);
                                for ig in 0..self.prop.rank(n, k, sg) {
                                    let g = self.prop.basis_elem(n, k, sg, ig);
                                    let gf = self.prop.vertical(&g, &f)?;
                                    for flat in 0..total {
                                        let mut e =
                                            vec![self.ring().zero(); total];
                                        e[flat] = self.ring().one();
                                        let lhs = self.act_on_tensor(&gf, &tuple, &e)?;
                                        let mid = self.act_on_tensor(&f, &tuple, &e)?;
                                        let rhs = self.act_tensor(&g, &mid)?;
                                        if !lhs.eq(&self.dg.module, &rhs) {
                                            return Err(PropError::AxiomViolation {
                                                axiom: "prop-algebra-vertical",
                                                context: format!(
                                                    "({m},{n}) then ({n},{k}), inputs {tuple:?}"
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
        }
        Ok(())
    }

    fn check_horizontal(&self, support: &[Bidegree]) -> Result<(), PropError> {
        let ring = self.ring().clone();
        let biar = self.prop.biarities();
        for &(m1, n1) in &biar {
            for &(m2, n2) in &biar {
                if m1 + m2 + n1 + n2 > self.prop.biarity_cap() {
                    continue;
                }
                for s1 in self.prop.degrees(m1, n1) {
                    for s2 in self.prop.degrees(m2, n2) {
                        for tuple in self.tuples(support, m1 + m2) {
                            let ranks: Vec<usize> =
                                tuple.iter().map(|b| self.dg.module.rank(*b)).collect();
                            let total: usize = ranks.iter().product();
                            if total == 0 {
                                continue;
                            }
                            // sign: the second operation (degree s2) moves
                            // past the first block of inputs
                            let passed: i64 = tuple[..m1].iter().map(|b| b.q).sum();
                            let sign_neg = (s2 * passed).rem_euclid(2) == 1;
                            for ia in 0..self.prop.rank(m1, n1, s1) {
                                let a = self.prop.basis_elem(m1, n1, s1, ia);
                                for ib in 0..self.prop.rank(m2, n2, s2) {
                                    let b = self.prop.basis_elem(m2, n2, s2, ib);
                                    let ab = self.prop.horizontal(&a, &b)?;
                                    for flat in 0..total {
                                        let digits = decode_multi(flat, &ranks);
                                        let inputs: Vec<(Bidegree, Vec<R::Elem>)> = tuple
                                            .iter()
                                            .zip(&digits)
                                            .map(|(bdg, &j)| {
                                                let mut e = vec![
                                                    ring.zero();
                                                    self.dg.module.rank(*bdg)
                                                ];
                                                e[j] = ring.one();
                                                (*bdg, e)
                                            })
                                            .collect();
                                        let lhs = self.act(&ab, &inputs)?;
                                        let first = self.act(&a, &inputs[..m1])?;
                                        let second = self.act(&b, &inputs[m1..])?;
                                        let mut rhs = first.concat(&ring, &second);
                                        if sign_neg {
                                            rhs = rhs.scale(&ring, &ring.neg(&ring.one()));
                                        }
                                        if !lhs.eq(&self.dg.module, &rhs) {
                                            return Err(PropError::AxiomViolation {
                                                axiom: "prop-algebra-horizontal",
                                                context: format!(
                                                    "({m1},{n1}) (x) ({m2},{n2}), inputs {tuple:?}"
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
        }
        Ok(())
    }
}

/// Verify the PROP-algebra laws.
pub fn check_prop_algebra<R: Ring>(alg: &PropAlgebra<R>) -> Result<(), PropError> {
    alg.check()
}

/// The tautological algebra of the endomorphism PROP on a rank-`v` component
/// at `(0, 0)` with zero differential: `E[J|I]` sends the `I`-th tensor
/// basis vector to the `J`-th.
pub fn tautological_prop_algebra<R: Ring>(
    ring: &R,
    v: usize,
    biarity_cap: usize,
) -> Result<PropAlgebra<R>, PropError> {
    let prop = endomorphism_prop(ring, v, biarity_cap);
    let mut module = BigradedModule::new(ring);
    let labels = (0..v).map(|k| format!("v{k}")).collect();
    module.insert(bd(0, 0), crate::graded::Component::free(ring, labels));
    let dg = DgModule::new(module, crate::graded::GradedMap::new("d", bd(0, -1)))?;
    let mut alg = PropAlgebra::new(prop, dg);
    let pow = |e: usize| v.pow(e as u32);
    for (m, n) in alg.prop.biarities() {
        for idx in 0..alg.prop.rank(m, n, 0) {
            let (j, i) = (idx / pow(m), idx % pow(m));
            let mut block = Matrix::zero(ring, pow(n), pow(m));
            block.set(j, i, ring.one());
            alg.set_gamma(
                (m, n, 0, idx),
                vec![bd(0, 0); m],
                vec![bd(0, 0); n],
                block,
            )?;
        }
    }
    Ok(alg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Integers, PrimeField};

    #[test]
    fn trivial_prop_passes() {
        let z = Integers;
        let mut p = Prop::new(&z, "trivial", 2);
        p.set_basis(0, 0, 0, vec!["empty".into()]);
        p.set_basis(1, 1, 0, vec!["id".into()]);
        p.set_unit00(vec![z.one()]);
        p.set_unit11(vec![z.one()]);
        p.set_horizontal((0, 0, 0), (0, 0, 0), Matrix::identity(&z, 1));
        p.set_horizontal((0, 0, 0), (1, 1, 0), Matrix::identity(&z, 1));
        p.set_horizontal((1, 1, 0), (0, 0, 0), Matrix::identity(&z, 1));
        p.set_vertical(0, 0, 0, 0, 0, Matrix::identity(&z, 1));
        p.set_vertical(1, 1, 1, 0, 0, Matrix::identity(&z, 1));
        check_prop(&p).unwrap();
    }

    #[test]
    fn endomorphism_prop_rank_one_has_unit_components() {
        let p = endomorphism_prop(&Integers, 1, 4);
        check_prop(&p).unwrap();
        for (m, n) in p.biarities() {
            assert_eq!(p.rank(m, n, 0), 1);
        }
    }

    #[test]
    fn endomorphism_prop_rank_two_is_exhaustively_lawful() {
        let f5 = PrimeField::new(5).unwrap();
        let p = endomorphism_prop(&f5, 2, 4);
        assert_eq!(p.rank(2, 1, 0), 8);
        assert_eq!(p.rank(1, 1, 0), 4);
        check_prop(&p).unwrap();
    }

    #[test]
    fn corrupted_vertical_table_is_detected_with_a_named_axiom() {
        let f5 = PrimeField::new(5).unwrap();
        let mut p = endomorphism_prop(&f5, 2, 3);
        // corrupt E[a|b] . E[b|c] by bumping one entry of the (1,1,1) block
        let rank = p.rank(1, 1, 0);
        let mut block = Matrix::zero(&f5, rank, rank * rank);
        for xg in 0..rank {
            for xf in 0..rank {
                let g = p.basis_elem(1, 1, 0, xg);
                let f = p.basis_elem(1, 1, 0, xf);
                let gf = p.vertical(&g, &f).unwrap();
                for (row, c) in gf.coeffs.iter().enumerate() {
                    block.set(row, xg * rank + xf, c.clone());
                }
            }
        }
        let cur = block.at(0, 0).clone();
        block.set(0, 0, f5.add(&cur, &f5.one()));
        p.set_vertical(1, 1, 1, 0, 0, block);
        let err = check_prop(&p).unwrap_err();
        assert!(matches!(err, PropError::AxiomViolation { .. }));
    }

    #[test]
    fn tautological_algebra_is_lawful_and_mutations_fail() {
        let f5 = PrimeField::new(5).unwrap();
        let alg = tautological_prop_algebra(&f5, 2, 3).unwrap();
        check_prop_algebra(&alg).unwrap();

        // corrupting one action block breaks a named law
        let mut bad = tautological_prop_algebra(&f5, 2, 3).unwrap();
        let mut block = Matrix::zero(&f5, 2, 2);
        block.set(0, 0, f5.one());
        block.set(1, 1, f5.one());
        // E[0|0] now acts as the identity instead of the matrix unit
        bad.set_gamma((1, 1, 0, 0), vec![bd(0, 0)], vec![bd(0, 0)], block)
            .unwrap();
        let err = check_prop_algebra(&bad).unwrap_err();
        assert!(matches!(err, PropError::AxiomViolation { .. }));
    }

    #[test]
    fn swapping_odd_tensor_factors_flips_the_sign() {
        let z = Integers;
        let mut m = BigradedModule::new(&z);
        m.insert(bd(0, 1), crate::graded::Component::free(&z, vec!["u".into()]));
        m.insert(bd(1, 1), crate::graded::Component::free(&z, vec!["w".into()]));
        m.insert(bd(0, 0), crate::graded::Component::free(&z, vec!["v".into()]));
        m.insert(bd(1, 0), crate::graded::Component::free(&z, vec!["t".into()]));
        let odd_odd = TensorElement::pure(&z, vec![bd(0, 1), bd(0, 1)], vec![z.one()]);
        let swapped = odd_odd.swap_factors(&m, 1);
        assert_eq!(swapped.terms[&vec![bd(0, 1), bd(0, 1)]], vec![z.from_i64(-1)]);
        let odd_even = TensorElement::pure(&z, vec![bd(0, 1), bd(0, 0)], vec![z.one()]);
        let swapped = odd_even.swap_factors(&m, 1);
        assert_eq!(swapped.terms[&vec![bd(0, 0), bd(0, 1)]], vec![z.one()]);
        // the column index carries no sign: (1,1) is still vertically odd
        let ee = TensorElement::pure(&z, vec![bd(1, 1), bd(0, 1)], vec![z.one()]);
        let swapped = ee.swap_factors(&m, 1);
        assert_eq!(swapped.terms[&vec![bd(0, 1), bd(1, 1)]], vec![z.from_i64(-1)]);
        let he = TensorElement::pure(&z, vec![bd(1, 0), bd(0, 1)], vec![z.one()]);
        let swapped = he.swap_factors(&m, 1);
        assert_eq!(swapped.terms[&vec![bd(0, 1), bd(1, 0)]], vec![z.one()]);
    }

    #[test]
    fn tensor_element_differential_signs_square_to_zero() {
        // two odd generators: d applied twice through the tensor power
        // vanishes only because of the Koszul sign
        let z = Integers;
        let mut m = BigradedModule::new(&z);
        m.insert(bd(0, 1), crate::graded::Component::free(&z, vec!["u".into()]));
        m.insert(bd(0, 0), crate::graded::Component::free(&z, vec!["v".into()]));
        let mut d = crate::graded::GradedMap::new("d", bd(0, -1));
        d.set_block(bd(0, 1), Matrix::identity(&z, 1));
        let dg = DgModule::new(m, d).unwrap();
        let te = TensorElement::pure(&z, vec![bd(0, 1), bd(0, 1)], vec![z.one()]);
        let dd = te.differential(&dg).differential(&dg);
        assert!(dd.is_zero(&dg.module));
        let d1 = te.differential(&dg);
        assert!(!d1.is_zero(&dg.module));
        assert_eq!(d1.terms.len(), 2);
    }
}
