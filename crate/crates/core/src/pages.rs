//! Pages of the spectral sequence of a tower, by two independent routes,
//! with page-level operad actions, Leibniz verification, stabilization
//! detection, and the limit page.
//!
//! Route one ([`SpectralSequence::page_via_derivation`]) iterates the
//! couple derivation `E ↦ H(E, jk)`.  Route two
//! ([`SpectralSequence::page_via_cycles`]) works entirely in level-1 data:
//!
//! ```text
//! Z^r = k¹⁻¹( im(i¹)^{r-1} ),   B^r = j¹( ker(i¹)^{r-1} ),   E^r = Z^r/B^r,
//! ```
//!
//! with the differential `d_r[z] = [j(w)]` for any `w` with
//! `i^{r-1}(w) = k(z)`.  [`SpectralSequence::cross_check`] verifies the two
//! agree: equal invariant factors, equal cycle and boundary spans inside
//! `E¹`, and the identity on representatives intertwines the differentials.
//!
//! [`page_action`] pushes the operad action of the quotient algebra onto a
//! page: representatives act through the induced action on `E¹ = H(C)`, the
//! result is reduced modulo boundaries, closure and representative
//! independence are checked exactly, and the finished algebra (with `d_r` as
//! its differential) is verified in full — in particular the Leibniz rule on
//! the page, with no operad-differential term since the acting operad is the
//! homology operad with zero differential.
//!
//! Pages live on the stored window.  Everything above it is handled inside
//! the extended couple, so incoming differentials from the repeated columns
//! of a `RepeatLastMap` tower are accounted for on both routes.

use std::collections::BTreeMap;

use crate::couple::{
    first_couple, presented_kernel, spans_match, AlgebraTower, Couple, CoupleError,
};
use crate::graded::{bd, Bidegree, BigradedModule, Component, DgModule, GradedError, GradedMap};
use crate::linalg::{kernel, solve, ColumnBasis, LinalgError, Matrix, Ring, Subquotient};
use crate::operad::{
    basis_vec, check_algebra, decode_multi, homology_action, OperadAlgebra, OperadError,
};

/// Which construction produced a page.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PageRoute {
    Derivation,
    Cycles,
}

/// Outcome of stabilization detection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stabilization {
    /// All pages from `r0` on are equal with zero differentials; the
    /// certificate records why the bound is sound.
    Stable { r0: usize, certificate: String },
    /// No certificate within the configured page budget.
    Undetermined { r_max: usize },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PagesError {
    #[error("the two page routes disagree at level {r}, {at}: {what}")]
    RouteMismatch {
        r: usize,
        at: Bidegree,
        what: &'static str,
    },

    #[error("page action fails closure at {at}: {context}")]
    ClosureViolation { at: Bidegree, context: String },

    #[error("no {what} preimage at {at} on page {r}")]
    PreimageFailed {
        what: &'static str,
        at: Bidegree,
        r: usize,
    },

    #[error("nesting fails between pages {r} and {next} at {at}: {what}", next = r + 1)]
    NestingViolation {
        r: usize,
        at: Bidegree,
        what: &'static str,
    },

    #[error("stabilization certificate fails at {at}: {what}")]
    CertificateFailed { at: Bidegree, what: &'static str },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Couple(#[from] CoupleError),

    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error(transparent)]
    Graded(#[from] GradedError),

    #[error(transparent)]
    Operad(#[from] OperadError),
}

/// One page of the spectral sequence, on the stored window.
///
/// Components are subquotients of the level-1 ambient `E¹ = H(C)`, so every
/// page class carries an explicit `E¹` representative (and through the
/// homology normal forms, a cycle representative in `C`).  Differential
/// blocks are stored in internal page coordinates, keyed by source.
#[derive(Clone, Debug)]
pub struct Page<R: Ring> {
    r: usize,
    route: PageRoute,
    e1: BigradedModule<R>,
    components: BTreeMap<Bidegree, Subquotient<R>>,
    d_blocks: BTreeMap<Bidegree, Matrix<R>>,
}

impl<R: Ring> Page<R> {
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn route(&self) -> PageRoute {
        self.route
    }

    /// The ambient `E¹` presentation the components are carved out of.
    pub fn e1_ambient(&self) -> &BigradedModule<R> {
        &self.e1
    }

    pub fn support(&self) -> impl Iterator<Item = Bidegree> + '_ {
        self.components.keys().copied()
    }

    pub fn component(&self, at: Bidegree) -> Option<&Subquotient<R>> {
        self.components.get(&at)
    }

    pub fn gen_count(&self, at: Bidegree) -> usize {
        self.components.get(&at).map_or(0, Subquotient::gen_count)
    }

    /// `(free rank, torsion invariant factors)` of the component; trivial
    /// when the bidegree is absent.
    pub fn invariants(&self, at: Bidegree) -> (usize, Vec<String>) {
        self.components
            .get(&at)
            .map_or((0, Vec::new()), Subquotient::invariants)
    }

    /// `d_r` out of `at` in internal page coordinates (rows indexed by the
    /// component at `(p - r, q - 1)`), materialized as zero when absent.
    pub fn d_block(&self, at: Bidegree) -> Matrix<R> {
        match self.d_blocks.get(&at) {
            Some(m) => m.clone(),
            None => {
                let ring = self.e1.ring();
                let tgt = bd(at.p - self.r as i64, at.q - 1);
                Matrix::zero(ring, self.gen_count(tgt), self.gen_count(at))
            }
        }
    }

    /// True when every component is trivial.
    pub fn is_zero(&self) -> bool {
        self.components.values().all(Subquotient::is_trivial)
    }

    /// The `E¹` representative of an internal page class.
    pub fn representative(&self, at: Bidegree, class_nf: &[R::Elem]) -> Option<Vec<R::Elem>> {
        self.components.get(&at).map(|sq| sq.lift(class_nf))
    }
}

/// A cycle in `C` representing a homology class of `C` given in normal-form
/// coordinates: the chain-level representative behind an `E¹` class.
pub fn cycle_representative<R: Ring>(
    t: &AlgebraTower<R>,
    at: Bidegree,
    class_nf: &[R::Elem],
) -> Result<Vec<R::Elem>, PagesError> {
    let h_c = t.c.dg.homology()?;
    Ok(match h_c.at(at) {
        Some(sq) => sq.lift(class_nf),
        None => Vec::new(),
    })
}

/// The spectral sequence of a tower: the derived couples, computed lazily up
/// to a page budget, plus the page constructions and their verifications.
#[derive(Clone, Debug)]
pub struct SpectralSequence<R: Ring> {
    pub tower: AlgebraTower<R>,
    r_max: usize,
    couples: Vec<Couple<R>>,
}

impl<R: Ring> SpectralSequence<R> {
    /// Set up the level-1 couple with a window margin wide enough for
    /// `r_max` derivation steps (plus one extra level for stabilization
    /// double-checks).  The tower is assumed verified; run
    /// [`crate::couple::check_tower`] first when in doubt.
    pub fn new(tower: AlgebraTower<R>, r_max: usize) -> Result<Self, PagesError> {
        if r_max < 1 {
            return Err(PagesError::Unsupported(
                "the page budget r_max must be at least 1".to_string(),
            ));
        }
        let c1 = first_couple(&tower, r_max)?;
        Ok(SpectralSequence {
            tower,
            r_max,
            couples: vec![c1],
        })
    }

    pub fn r_max(&self) -> usize {
        self.r_max
    }

    fn ensure_level(&mut self, level: usize) -> Result<(), PagesError> {
        while self.couples.len() < level {
            let next = self.couples.last().unwrap().derive()?;
            self.couples.push(next);
        }
        Ok(())
    }

    /// The derived couple at a level (1-based), deriving as needed.
    pub fn level_couple(&mut self, level: usize) -> Result<&Couple<R>, PagesError> {
        if level < 1 {
            return Err(PagesError::Unsupported(
                "couple levels start at 1".to_string(),
            ));
        }
        self.ensure_level(level)?;
        Ok(&self.couples[level - 1])
    }

    fn material_support(&self) -> Vec<Bidegree> {
        self.couples[0]
            .e_support()
            .filter(|b| b.p <= self.tower.p_max)
            .collect()
    }

    /// Page `E^r` by iterated couple derivation.
    pub fn page_via_derivation(&mut self, r: usize) -> Result<Page<R>, PagesError> {
        if r < 1 {
            return Err(PagesError::Unsupported("pages start at r = 1".to_string()));
        }
        self.ensure_level(r)?;
        let p_max = self.tower.p_max;
        let c = &self.couples[r - 1];
        let mut components = BTreeMap::new();
        let mut d_blocks = BTreeMap::new();
        for at in c.e_support().filter(|b| b.p <= p_max) {
            let blk = c.d_r_block(at)?;
            if blk.rows() > 0 && blk.cols() > 0 {
                d_blocks.insert(at, blk);
            }
            components.insert(at, c.e_component(at).unwrap().clone());
        }
        Ok(Page {
            r,
            route: PageRoute::Derivation,
            e1: c.e1_ambient().clone(),
            components,
            d_blocks,
        })
    }

    /// The cycle and boundary spans `Z^r`, `B^r` at a bidegree, as columns
    /// in `E¹` ambient coordinates.
    fn zb_spans(&self, r: usize, at: Bidegree) -> (Matrix<R>, Matrix<R>) {
        let c1 = &self.couples[0];
        let ring = c1.ring().clone();
        let steps = r - 1;
        let k = c1.k1_block(at);
        let kt = bd(at.p - 1, at.q - 1);
        let w = c1.i1_power(bd(at.p - r as i64, at.q - 1), steps);
        let rd_in = c1.d1_ambient().relations(kt);
        let ext = k.hstack(&w).hstack(&rd_in);
        let kk = kernel(&ext);
        let z = Matrix::from_fn(&ring, k.cols(), kk.cols(), |i, j| kk.at(i, j).clone());
        let up = bd(at.p + steps as i64, at.q);
        let rd_out = c1.d1_ambient().relations(up);
        let kx = presented_kernel(&c1.i1_power(at, steps), &rd_out);
        let b = c1.j1_block(at).mul(&kx);
        (z, b)
    }

    /// Page `E^r` straight from level-1 data: `Z^r = k⁻¹(im i^{r-1})`,
    /// `B^r = j(ker i^{r-1})`, `E^r = Z^r/B^r`, with the differential given
    /// by solving `i^{r-1}(w) = k(z)` and pushing `w` through `j`.
    pub fn page_via_cycles(&self, r: usize) -> Result<Page<R>, PagesError> {
        if r < 1 {
            return Err(PagesError::Unsupported("pages start at r = 1".to_string()));
        }
        let c1 = &self.couples[0];
        let ring = c1.ring().clone();
        let e1 = c1.e1_ambient().clone();
        let mut components = BTreeMap::new();
        for at in self.material_support() {
            let (z, b) = self.zb_spans(r, at);
            let rels = b.hstack(&e1.relations(at));
            components.insert(
                at,
                Subquotient::new(e1.rank(at), &z, &rels, &format!("E^{r} at {at} (cycles)"))?,
            );
        }
        let mut d_blocks = BTreeMap::new();
        for (&at, sq) in &components {
            if sq.gen_count() == 0 {
                continue;
            }
            let tgt_bd = bd(at.p - r as i64, at.q - 1);
            let n_tgt = components.get(&tgt_bd).map_or(0, Subquotient::gen_count);
            let k = c1.k1_block(at);
            let kt = bd(at.p - 1, at.q - 1);
            let w = c1.i1_power(bd(at.p - r as i64, at.q - 1), r - 1);
            let ext = w.hstack(&c1.d1_ambient().relations(kt));
            let jt = c1.j1_block(tgt_bd);
            let mut cols = Vec::with_capacity(sq.gen_count());
            for g in 0..sq.gen_count() {
                let z_amb = sq.lift(&basis_vec(&ring, sq.gen_count(), g));
                let v = k.apply(&z_amb);
                let xy = solve(&ext, &v, "i-power preimage for the cycles-route differential")
                    .map_err(|_| PagesError::PreimageFailed {
                        what: "i^(r-1)",
                        at,
                        r,
                    })?;
                let wv: Vec<R::Elem> = xy[..w.cols()].to_vec();
                let u = jt.apply(&wv);
                let col = match components.get(&tgt_bd) {
                    Some(tsq) if tsq.gen_count() > 0 => {
                        tsq.project(&u).ok_or(PagesError::PreimageFailed {
                            what: "a cycle-span class for the differential",
                            at: tgt_bd,
                            r,
                        })?
                    }
                    _ => Vec::new(),
                };
                cols.push(col);
            }
            if n_tgt > 0 {
                d_blocks.insert(at, Matrix::from_columns(&ring, n_tgt, &cols));
            }
        }
        Ok(Page {
            r,
            route: PageRoute::Cycles,
            e1,
            components,
            d_blocks,
        })
    }

    /// Verify both routes produce the same page `E^r`.
    pub fn cross_check(&mut self, r: usize) -> Result<(), PagesError> {
        let pd = self.page_via_derivation(r)?;
        let pc = self.page_via_cycles(r)?;
        cross_check_pages(&pd, &pc)
    }

    /// `B^r ⊆ B^{r+1}` and `Z^{r+1} ⊆ Z^r` as submodules of `E¹`.
    pub fn check_nesting(&self, r: usize) -> Result<(), PagesError> {
        let c1 = &self.couples[0];
        for at in self.material_support() {
            let rels = c1.e1_ambient().relations(at);
            let (z_lo, b_lo) = self.zb_spans(r, at);
            let (z_hi, b_hi) = self.zb_spans(r + 1, at);
            let b_big = ColumnBasis::new(&b_hi.hstack(&rels));
            for c in 0..b_lo.cols() {
                if !b_big.contains(&b_lo.col_vec(c)) {
                    return Err(PagesError::NestingViolation {
                        r,
                        at,
                        what: "boundaries do not grow",
                    });
                }
            }
            let z_big = ColumnBasis::new(&z_lo.hstack(&rels));
            for c in 0..z_hi.cols() {
                if !z_big.contains(&z_hi.col_vec(c)) {
                    return Err(PagesError::NestingViolation {
                        r,
                        at,
                        what: "cycles do not shrink",
                    });
                }
            }
        }
        Ok(())
    }

    /// The page action on `E^r` (derivation route), fully verified.
    pub fn checked_page_action(&mut self, r: usize) -> Result<OperadAlgebra<R>, PagesError> {
        let page = self.page_via_derivation(r)?;
        page_action(&self.tower, &page)
    }

    /// The Leibniz rule `d_r(Γ(π; x⃗)) = Σ_h ± Γ(π; …, d_r x_h, …)` on page
    /// `r`, through the fully verified page action.
    pub fn check_leibniz(&mut self, r: usize) -> Result<(), PagesError> {
        let alg = self.checked_page_action(r)?;
        alg.check_leibniz()?;
        Ok(())
    }

    /// Certify a level from which all pages are equal with zero
    /// differentials, or report that the budget is too small.
    ///
    /// Sound for both policies because towers vanish below the window:
    /// `Z^r` at column `p` is constant once `r > p - p_min` (the incoming
    /// stage power starts below the window), and `B^r` is constant once the
    /// kernel chain of the top stage endomorphism has stabilized, which is
    /// detected exactly.  The certified level is double-checked by comparing
    /// `E^{r0}` with `E^{r0+1}` and verifying `d_{r0} = 0`.
    pub fn detect_stabilization(&mut self) -> Result<Stabilization, PagesError> {
        let p_min = self.tower.p_min;
        let p_max = self.tower.p_max;
        let support = self.material_support();
        if support.is_empty() {
            return Ok(Stabilization::Stable {
                r0: 1,
                certificate: "the first page is empty".to_string(),
            });
        }
        let c1 = &self.couples[0];
        let ring = c1.ring().clone();
        let mut m_ker: BTreeMap<i64, Option<usize>> = BTreeMap::new();
        for q in support.iter().map(|b| b.q) {
            m_ker.entry(q).or_insert_with(|| {
                let top = bd(p_max, q);
                let t1 = c1.i1_block(top);
                let rels = c1.d1_ambient().relations(top);
                let mut pow = Matrix::identity(&ring, t1.cols());
                let mut prev = presented_kernel(&pow, &rels);
                for m in 0..=self.r_max {
                    let next_pow = t1.mul(&pow);
                    let next = presented_kernel(&next_pow, &rels);
                    if spans_match(&prev, &next, &rels) {
                        return Some(m);
                    }
                    pow = next_pow;
                    prev = next;
                }
                None
            });
        }
        let mut r0 = 1usize;
        for at in &support {
            let Some(m) = m_ker[&at.q] else {
                return Ok(Stabilization::Undetermined { r_max: self.r_max });
            };
            r0 = r0
                .max((at.p - p_min + 1) as usize)
                .max((p_max - at.p) as usize + m + 1);
        }
        if r0 > self.r_max {
            return Ok(Stabilization::Undetermined { r_max: self.r_max });
        }
        let pa = self.page_via_derivation(r0)?;
        let pb = self.page_via_derivation(r0 + 1)?;
        for at in &support {
            let same = match (pa.component(*at), pb.component(*at)) {
                (Some(a), Some(b)) => a.same_invariants(b),
                (None, None) => true,
                (Some(a), None) => a.is_trivial(),
                (None, Some(b)) => b.is_trivial(),
            };
            if !same {
                return Err(PagesError::CertificateFailed {
                    at: *at,
                    what: "the certified level still moves",
                });
            }
        }
        for (&at, blk) in &pa.d_blocks {
            let tgt = pa
                .component(bd(at.p - r0 as i64, at.q - 1))
                .expect("stored differential blocks target present components");
            for c in 0..blk.cols() {
                if !tgt.nf_is_zero(&tgt.lift(&blk.col_vec(c))) {
                    return Err(PagesError::CertificateFailed {
                        at,
                        what: "the certified level has a nonzero differential",
                    });
                }
            }
        }
        Ok(Stabilization::Stable {
            r0,
            certificate: format!(
                "cycles are constant above r = p - p_min and boundaries once the top stage \
                 kernel chain stabilizes; both bounds reached by r = {r0}, and E^{r0} = E^{} \
                 with d_{r0} = 0 was verified directly",
                r0 + 1
            ),
        })
    }

    /// The limit page: the certified stable page, or the flagged candidate
    /// at the page budget when no certificate exists.
    pub fn e_infinity(&mut self) -> Result<(Page<R>, Stabilization), PagesError> {
        let st = self.detect_stabilization()?;
        let r = match &st {
            Stabilization::Stable { r0, .. } => *r0,
            Stabilization::Undetermined { r_max } => *r_max,
        };
        let page = self.page_via_derivation(r)?;
        Ok((page, st))
    }
}

/// Compare two constructions of the same page: equal invariant factors,
/// equal cycle and boundary spans inside `E¹`, and differentials intertwined
/// by the identity on representatives.
pub fn cross_check_pages<R: Ring>(pd: &Page<R>, pc: &Page<R>) -> Result<(), PagesError> {
    let r = pd.r;
    let ring = pd.e1.ring().clone();
    let mut keys: Vec<Bidegree> = pd.components.keys().copied().collect();
    for k in pc.components.keys() {
        if !pd.components.contains_key(k) {
            keys.push(*k);
        }
    }
    for &at in &keys {
        let rels = pd.e1.relations(at);
        match (pd.component(at), pc.component(at)) {
            (Some(a), Some(b)) => {
                if !a.same_invariants(b) {
                    return Err(PagesError::RouteMismatch {
                        r,
                        at,
                        what: "invariant factors",
                    });
                }
                let ga = a.span_basis().basis_matrix();
                let gb = b.span_basis().basis_matrix();
                if !spans_match(&ga, &gb, &rels) {
                    return Err(PagesError::RouteMismatch {
                        r,
                        at,
                        what: "cycle spans",
                    });
                }
                let ba = a.boundary_basis().basis_matrix();
                let bb = b.boundary_basis().basis_matrix();
                if !spans_match(&ba, &bb, &rels) {
                    return Err(PagesError::RouteMismatch {
                        r,
                        at,
                        what: "boundary spans",
                    });
                }
            }
            (Some(a), None) if !a.is_trivial() => {
                return Err(PagesError::RouteMismatch {
                    r,
                    at,
                    what: "support",
                })
            }
            (None, Some(b)) if !b.is_trivial() => {
                return Err(PagesError::RouteMismatch {
                    r,
                    at,
                    what: "support",
                })
            }
            _ => {}
        }
    }
    for (&at, sq_d) in &pd.components {
        if sq_d.gen_count() == 0 {
            continue;
        }
        let tgt_bd = bd(at.p - r as i64, at.q - 1);
        let (Some(td), Some(tc)) = (pd.component(tgt_bd), pc.component(tgt_bd)) else {
            continue;
        };
        if tc.gen_count() == 0 {
            continue;
        }
        let sq_c = &pc.components[&at];
        let bd_d = pd.d_block(at);
        let bd_c = pc.d_block(at);
        for g in 0..sq_d.gen_count() {
            let amb = sq_d.lift(&basis_vec(&ring, sq_d.gen_count(), g));
            let via_d = td.lift(&bd_d.col_vec(g));
            let y = sq_c.project(&amb).ok_or(PagesError::RouteMismatch {
                r,
                at,
                what: "representative transport",
            })?;
            let via_c = tc.lift(&bd_c.apply(&y));
            let pa = tc.project(&via_d);
            let pb = tc.project(&via_c);
            if pa != pb || pa.is_none() {
                return Err(PagesError::RouteMismatch {
                    r,
                    at,
                    what: "differentials",
                });
            }
        }
    }
    Ok(())
}

/// The operad action on a page: act on `E¹` representatives through the
/// induced action on `H(C)`, reduce modulo boundaries, and verify closure,
/// representative independence, and every algebra law (including the
/// Leibniz rule against `d_r`).
pub fn page_action<R: Ring>(
    t: &AlgebraTower<R>,
    page: &Page<R>,
) -> Result<OperadAlgebra<R>, PagesError> {
    let ring = t.ring().clone();
    let (e1alg, _) = homology_action(&t.c)?;
    let mut carrier = BigradedModule::new(&ring);
    for (&at, sq) in &page.components {
        if sq.gen_count() == 0 {
            continue;
        }
        let labels = (0..sq.gen_count())
            .map(|g| format!("E{}[{},{}]#{g}", page.r, at.p, at.q))
            .collect();
        let tor = sq.torsion();
        let rels = Matrix::from_fn(&ring, sq.gen_count(), tor.len(), |i, j| {
            if i == j {
                tor[j].clone()
            } else {
                ring.zero()
            }
        });
        carrier.insert(at, Component::presented(labels, rels));
    }
    let mut d = GradedMap::new("d_r", bd(-(page.r as i64), -1));
    for (&at, blk) in &page.d_blocks {
        if blk.rows() > 0 && blk.cols() > 0 {
            d.set_block(at, blk.clone());
        }
    }
    let dg = DgModule::new(carrier, d)?;
    let mut alg = OperadAlgebra::new(e1alg.operad.clone(), dg);
    alg.set_column_clip(Some(t.p_max))?;

    let keys: Vec<(usize, i64, usize, Vec<Bidegree>)> =
        e1alg.stored_gamma().map(|(k, _)| k.clone()).collect();
    for (n, s, idx, tuple) in &keys {
        let ranks: Vec<usize> = tuple.iter().map(|b| page.gen_count(*b)).collect();
        if ranks.iter().any(|&x| x == 0) {
            continue;
        }
        let obd = alg.out_at(*s, tuple);
        let out_sq = page.component(obd);
        let pi = e1alg.operad.basis_elem(*n, *s, *idx);
        let total: usize = ranks.iter().product();
        let mut cols = Vec::with_capacity(total);
        for flat in 0..total {
            let digits = decode_multi(flat, &ranks);
            let inputs: Vec<(Bidegree, Vec<R::Elem>)> = tuple
                .iter()
                .zip(&digits)
                .map(|(b, &g)| {
                    let sq = page.component(*b).unwrap();
                    (*b, sq.lift(&basis_vec(&ring, sq.gen_count(), g)))
                })
                .collect();
            let (obd2, w) = e1alg.act(&pi, &inputs)?;
            debug_assert_eq!(obd2, obd);
            match out_sq {
                Some(osq) if osq.gen_count() > 0 => {
                    cols.push(osq.project(&w).ok_or_else(|| PagesError::ClosureViolation {
                        at: obd,
                        context: format!(
                            "operation #{idx} of arity {n} in degree {s} on {tuple:?} leaves \
                             the cycle span"
                        ),
                    })?);
                }
                Some(osq) => {
                    if !osq.span_basis().contains(&w) {
                        return Err(PagesError::ClosureViolation {
                            at: obd,
                            context: format!(
                                "operation #{idx} of arity {n} in degree {s} on {tuple:?} \
                                 leaves the (trivial) cycle span"
                            ),
                        });
                    }
                    cols.push(Vec::new());
                }
                None => {
                    if !page.e1.vector_is_zero(obd, &w) {
                        return Err(PagesError::ClosureViolation {
                            at: obd,
                            context: format!(
                                "operation #{idx} of arity {n} in degree {s} on {tuple:?} \
                                 lands outside the page support"
                            ),
                        });
                    }
                    cols.push(Vec::new());
                }
            }
        }
        let rows = out_sq.map_or(0, Subquotient::gen_count);
        if rows > 0 {
            alg.set_gamma(
                *n,
                *s,
                *idx,
                tuple.clone(),
                Matrix::from_columns(&ring, rows, &cols),
            )?;
        }
    }

    // representative independence: perturbing any slot by a boundary moves
    // the output by a boundary
    for (n, s, idx, tuple) in &keys {
        let ranks: Vec<usize> = tuple.iter().map(|b| page.gen_count(*b)).collect();
        if ranks.iter().any(|&x| x == 0) {
            continue;
        }
        let obd = alg.out_at(*s, tuple);
        let pi = e1alg.operad.basis_elem(*n, *s, *idx);
        for h in 0..*n {
            let boundaries = page.components[&tuple[h]].boundary_basis().basis_matrix();
            let mut other_ranks = ranks.clone();
            other_ranks[h] = 1;
            let total: usize = other_ranks.iter().product();
            for bcol in 0..boundaries.cols() {
                for flat in 0..total {
                    let digits = decode_multi(flat, &other_ranks);
                    let inputs: Vec<(Bidegree, Vec<R::Elem>)> = tuple
                        .iter()
                        .enumerate()
                        .map(|(l, b)| {
                            if l == h {
                                (*b, boundaries.col_vec(bcol))
                            } else {
                                let sq = page.component(*b).unwrap();
                                (*b, sq.lift(&basis_vec(&ring, sq.gen_count(), digits[l])))
                            }
                        })
                        .collect();
                    let (obd2, w) = e1alg.act(&pi, &inputs)?;
                    debug_assert_eq!(obd2, obd);
                    let dies = match page.component(obd) {
                        Some(osq) => osq.nf_is_zero(&w),
                        None => page.e1.vector_is_zero(obd, &w),
                    };
                    if !dies {
                        return Err(PagesError::ClosureViolation {
                            at: obd,
                            context: format!(
                                "operation #{idx} of arity {n} in degree {s} on {tuple:?} is \
                                 not boundary-independent in slot {}",
                                h + 1
                            ),
                        });
                    }
                }
            }
        }
    }

    check_algebra(&alg)?;
    Ok(alg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couple::fixtures::{bockstein_tower, ideal_tower};
    use crate::couple::check_tower;
    use crate::linalg::Integers;

    #[test]
    fn both_routes_agree_on_the_fixture_towers() {
        for t in [ideal_tower(), bockstein_tower()] {
            check_tower(&t).unwrap();
            let mut ss = SpectralSequence::new(t, 6).unwrap();
            for r in 1..=4 {
                ss.cross_check(r).unwrap();
                ss.check_nesting(r).unwrap();
            }
        }
    }

    #[test]
    fn bockstein_pages_match_the_classical_picture() {
        let mut ss = SpectralSequence::new(bockstein_tower(), 6).unwrap();
        let p1 = ss.page_via_derivation(1).unwrap();
        for at in [bd(0, 0), bd(1, 0), bd(1, 1)] {
            assert_eq!(p1.invariants(at), (0, vec!["2".to_string()]));
        }
        let p2 = ss.page_via_derivation(2).unwrap();
        assert!(p2.is_zero(), "the mod-2 reduction of Z/2 homology dies at E^2");
        match ss.detect_stabilization().unwrap() {
            Stabilization::Stable { r0, .. } => assert!(r0 <= 3),
            other => panic!("expected a certificate, got {other:?}"),
        }
        let (einf, _) = ss.e_infinity().unwrap();
        assert!(einf.is_zero());
    }

    #[test]
    fn ideal_tower_stabilizes_with_its_product() {
        let mut ss = SpectralSequence::new(ideal_tower(), 6).unwrap();
        let st = ss.detect_stabilization().unwrap();
        match &st {
            Stabilization::Stable { r0, .. } => assert_eq!(*r0, 2),
            other => panic!("expected stability, got {other:?}"),
        }
        let (einf, _) = ss.e_infinity().unwrap();
        assert_eq!(einf.invariants(bd(1, 0)), (0, vec!["2".to_string()]));
        // the limit page keeps the product: the class of 1 squares to itself
        let alg = page_action(&ss.tower, &einf).unwrap();
        let blk = alg.gamma_block(2, 0, 0, &[bd(1, 0), bd(1, 0)]);
        assert_eq!(blk, Matrix::from_i64(&Integers, &[&[1]]));
    }

    #[test]
    fn leibniz_holds_on_every_computed_page() {
        for t in [ideal_tower(), bockstein_tower()] {
            let mut ss = SpectralSequence::new(t, 5).unwrap();
            for r in 1..=4 {
                ss.check_leibniz(r).unwrap();
            }
        }
    }

    #[test]
    fn mismatched_page_levels_are_reported_as_route_mismatches() {
        // stand-in for an off-by-one exponent in the cycles route: compare
        // E^2 (trivial for the Bockstein tower) against the cycles E^1
        let mut ss = SpectralSequence::new(bockstein_tower(), 4).unwrap();
        let pd = ss.page_via_derivation(2).unwrap();
        let pc = ss.page_via_cycles(1).unwrap();
        match cross_check_pages(&pd, &pc) {
            Err(PagesError::RouteMismatch { .. }) => {}
            other => panic!("expected a route mismatch, got {other:?}"),
        }
    }

    #[test]
    fn the_next_page_action_is_the_homology_of_the_current_one() {
        let mut ss = SpectralSequence::new(ideal_tower(), 5).unwrap();
        for r in 1..=3 {
            let alg_r = ss.checked_page_action(r).unwrap();
            let (halg, h) = homology_action(&alg_r).unwrap();
            let page_next = ss.page_via_derivation(r + 1).unwrap();
            let next_alg = page_action(&ss.tower, &page_next).unwrap();
            // carrier sizes agree bidegree by bidegree
            for at in ss.material_support() {
                assert_eq!(
                    h.rank(at),
                    page_next.gen_count(at),
                    "H(E^{r}, d_{r}) and E^{} disagree at {at}",
                    r + 1
                );
            }
            // transport each homology class of the page complex into the
            // next page and compare the product blocks through the bridge
            let ring = Integers;
            let bridge = |at: Bidegree, v_h: &[<Integers as Ring>::Elem]| -> Vec<_> {
                // homology class of (E^r, d_r) -> internal E^r cycle ->
                // E^1 ambient -> class in E^{r+1}
                let cyc = h.at(at).unwrap().lift(v_h);
                let amb = ss.couples[r - 1].e_component(at).unwrap().lift_matrix().apply(&cyc);
                page_next.component(at).unwrap().project(&amb).unwrap()
            };
            for (key, blk) in halg.stored_gamma() {
                let (n, s, idx, tuple) = key;
                let ranks: Vec<usize> = tuple.iter().map(|b| h.rank(*b)).collect();
                if ranks.iter().any(|&x| x == 0) {
                    continue;
                }
                let obd = halg.out_at(*s, tuple);
                if page_next.gen_count(obd) == 0 {
                    continue;
                }
                let total: usize = ranks.iter().product();
                for flat in 0..total {
                    let digits = decode_multi(flat, &ranks);
                    let pi = next_alg.operad.basis_elem(*n, *s, *idx);
                    let inputs: Vec<(Bidegree, Vec<_>)> = tuple
                        .iter()
                        .zip(&digits)
                        .map(|(b, &g)| (*b, bridge(*b, &basis_vec(&ring, h.rank(*b), g))))
                        .collect();
                    let (_, via_next) = next_alg.act(&pi, &inputs).unwrap();
                    let via_h = bridge(obd, &blk.col_vec(flat));
                    assert!(
                        next_alg.dg.module.vectors_equal(obd, &via_next, &via_h),
                        "page action mismatch at level {} for {tuple:?}",
                        r + 1
                    );
                }
            }
        }
    }

    #[test]
    fn a_tight_budget_reports_undetermined() {
        let mut ss = SpectralSequence::new(bockstein_tower(), 1).unwrap();
        match ss.detect_stabilization().unwrap() {
            Stabilization::Undetermined { r_max } => assert_eq!(r_max, 1),
            other => panic!("expected an undetermined report, got {other:?}"),
        }
    }
}
