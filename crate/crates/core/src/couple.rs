//! Filtered towers of differential graded operad algebras and the exact
//! couples they generate.
//!
//! An [`AlgebraTower`] is a finite window `p_min..=p_max` of filtration
//! stages: one operad algebra `A` whose column `p` is the stage `A_p`, stage
//! maps `i : A_p -> A_{p+1}`, and stage quotients `j : A_p -> C_p` forming a
//! short exact sequence `0 -> A_{p-1} -> A_p -> C_p -> 0` in every column.
//! Stages are zero below the window and continue above it by an
//! [`ExtensionPolicy`].  The structure maps of both algebras land in the
//! clipped column `min(sum p_h, p_max)`, and the whole package is verified by
//! [`check_tower`]: chain maps, exactness in every bidegree (including the
//! virtual column above the window), and the two compatibility conditions
//!
//! * condition (i):  `j(Γ(π; x_1..x_k)) = Γ(π; j x_1 .. j x_k)`,
//! * condition (ii): `i(Γ(π; x_1..x_k)) = Γ(π; x_1, .., i x_h, .., x_k)`
//!   for each slot `h`,
//!
//! where an `i` applied in the top column means the top stage map.
//!
//! [`first_couple`] passes to homology and assembles the level-1 exact
//! couple `⟨E¹, D¹, i, j, k⟩` with `k` the connecting homomorphism of the
//! stage sequence; [`Couple::derive`] performs one derivation step
//! `E ↦ H(E, jk)`, `D ↦ i(D)`, re-verifying exactness.  Every level is
//! presented inside the fixed level-1 normal forms, so classes on any page
//! trace back to explicit homology representatives.

use std::collections::{BTreeMap, BTreeSet};

use crate::graded::{
    bd, check_chain_map, induced_map_on_homology, Bidegree, BigradedModule, Component,
    GradedError, GradedMap, Homology,
};
use crate::linalg::{kernel, solve, ColumnBasis, LinalgError, Matrix, Ring, Subquotient};
use crate::operad::{basis_vec, check_algebra, decode_multi, OperadAlgebra, OperadError};

/// How a tower continues above its stored window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExtensionPolicy {
    /// Stages are constant above the window: the top stage map is the
    /// identity and quotients above the top vanish.  Models exhaustive
    /// filtrations.
    ConstantAbove,
    /// The top stage map and top quotient repeat forever: every column above
    /// the window is another copy of the short exact sequence
    /// `0 -> A_top -> A_top -> C_top -> 0`.  Models Bockstein-style towers.
    RepeatLastMap,
}

/// Errors raised by tower verification and couple derivation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoupleError {
    #[error("tower check `{check}` fails: {context}")]
    TowerViolation { check: &'static str, context: String },

    #[error("exactness fails at level {level}, corner `{corner}` at {at}")]
    ExactnessViolation {
        level: usize,
        corner: &'static str,
        at: Bidegree,
    },

    #[error("cannot lift {what} at {at}")]
    LiftFailed { what: String, at: Bidegree },

    #[error("no `{map}` preimage at {at} (level {level})")]
    PreimageFailed {
        map: &'static str,
        at: Bidegree,
        level: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error(transparent)]
    Graded(#[from] GradedError),

    #[error(transparent)]
    Operad(#[from] OperadError),
}

// ---------------------------------------------------------------------------
// towers

/// A window of a filtered differential graded operad algebra, presented as
/// stages, stage maps and stage quotients.
#[derive(Clone, Debug)]
pub struct AlgebraTower<R: Ring> {
    /// The stages: column `p` of the carrier is the stage `A_p`.  Components
    /// are free and the structure maps clip into the top column.
    pub a: OperadAlgebra<R>,
    /// The stage quotients `C_p = A_p / A_{p-1}` (presented components
    /// allowed), another algebra over the same operad.
    pub c: OperadAlgebra<R>,
    /// Stage map of bidegree `(1, 0)`, blocks at sources `p_min..p_max-1`.
    pub i: GradedMap<R>,
    /// The top stage map `A_top -> A_top`, bidegree `(0, 0)` with blocks in
    /// the top column only: the continuation `A_top -> A_{top+1}` under the
    /// identification of all higher stages with the top one.
    pub top: GradedMap<R>,
    /// Stage quotient map of bidegree `(0, 0)`.
    pub j: GradedMap<R>,
    pub policy: ExtensionPolicy,
    pub p_min: i64,
    pub p_max: i64,
}

impl<R: Ring> AlgebraTower<R> {
    /// Assemble and lightly validate a tower.  For
    /// [`ExtensionPolicy::ConstantAbove`] no top map may be supplied (it is
    /// the identity); for [`ExtensionPolicy::RepeatLastMap`] one is required.
    /// Column clips are installed on both carriers here.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mut a: OperadAlgebra<R>,
        mut c: OperadAlgebra<R>,
        i: GradedMap<R>,
        j: GradedMap<R>,
        top: Option<GradedMap<R>>,
        policy: ExtensionPolicy,
        p_min: i64,
        p_max: i64,
    ) -> Result<Self, CoupleError> {
        if p_min < 0 || p_min > p_max {
            return Err(CoupleError::Unsupported(format!(
                "the window [{p_min}, {p_max}] must satisfy 0 <= p_min <= p_max"
            )));
        }
        for at in a.dg.module.support().chain(c.dg.module.support()) {
            if at.p < p_min || at.p > p_max {
                return Err(CoupleError::TowerViolation {
                    check: "window",
                    context: format!("component at {at} lies outside columns {p_min}..={p_max}"),
                });
            }
        }
        for at in a.dg.module.support() {
            if let Some(comp) = a.dg.module.component(at) {
                if !comp.is_free() {
                    return Err(CoupleError::TowerViolation {
                        check: "free stages",
                        context: format!("the stage component at {at} carries relations"),
                    });
                }
            }
        }
        if i.bidegree() != bd(1, 0) {
            return Err(CoupleError::TowerViolation {
                check: "stage map bidegree",
                context: format!("i has bidegree {}, expected (1, 0)", i.bidegree()),
            });
        }
        if j.bidegree() != bd(0, 0) {
            return Err(CoupleError::TowerViolation {
                check: "quotient map bidegree",
                context: format!("j has bidegree {}, expected (0, 0)", j.bidegree()),
            });
        }
        for (at, _) in i.stored_blocks() {
            if at.p < p_min || at.p >= p_max {
                return Err(CoupleError::TowerViolation {
                    check: "stage map window",
                    context: format!(
                        "i stores a block at source {at}; sources must lie in {p_min}..{p_max}"
                    ),
                });
            }
        }
        let top = match (policy, top) {
            (ExtensionPolicy::ConstantAbove, Some(_)) => {
                return Err(CoupleError::Unsupported(
                    "constant_above towers determine their own top stage map (the identity)"
                        .to_string(),
                ))
            }
            (ExtensionPolicy::ConstantAbove, None) => {
                let ring = a.ring().clone();
                let mut t = GradedMap::new("i_top", bd(0, 0));
                let tops: Vec<Bidegree> = a
                    .dg
                    .module
                    .support()
                    .filter(|at| at.p == p_max)
                    .collect();
                for at in tops {
                    let n = a.dg.module.rank(at);
                    t.set_block(at, Matrix::identity(&ring, n));
                }
                t
            }
            (ExtensionPolicy::RepeatLastMap, None) => {
                return Err(CoupleError::Unsupported(
                    "repeat_last_map towers need an explicit top stage map".to_string(),
                ))
            }
            (ExtensionPolicy::RepeatLastMap, Some(t)) => {
                if t.bidegree() != bd(0, 0) {
                    return Err(CoupleError::TowerViolation {
                        check: "top stage map bidegree",
                        context: format!("top has bidegree {}, expected (0, 0)", t.bidegree()),
                    });
                }
                for (at, _) in t.stored_blocks() {
                    if at.p != p_max {
                        return Err(CoupleError::TowerViolation {
                            check: "top stage map window",
                            context: format!(
                                "top stores a block at {at}; only column {p_max} is allowed"
                            ),
                        });
                    }
                }
                t
            }
        };
        a.set_column_clip(Some(p_max))?;
        c.set_column_clip(Some(p_max))?;
        Ok(AlgebraTower {
            a,
            c,
            i,
            top,
            j,
            policy,
            p_min,
            p_max,
        })
    }

    pub fn ring(&self) -> &R {
        self.a.ring()
    }

    /// Verify every tower invariant: both carriers are lawful dg algebras,
    /// `i`, `j` and the top map are chain maps, every column is a short exact
    /// sequence (including the virtual one above the window, per policy), and
    /// the structure maps satisfy conditions (i) and (ii).
    pub fn check(&self) -> Result<(), CoupleError> {
        self.a.dg.check_complex()?;
        self.c.dg.check_complex()?;
        check_algebra(&self.a)?;
        check_algebra(&self.c)?;
        check_chain_map(&self.i, &self.a.dg, &self.a.dg)?;
        check_chain_map(&self.j, &self.a.dg, &self.c.dg)?;
        check_chain_map(&self.top, &self.a.dg, &self.a.dg)?;
        self.check_exact_columns()?;
        self.check_condition_one()?;
        self.check_condition_two()?;
        Ok(())
    }

    /// Exactness of `0 -> A_{p-1} -> A_p -> C_p -> 0` in every bidegree,
    /// plus the virtual column above the window.
    fn check_exact_columns(&self) -> Result<(), CoupleError> {
        let ring = self.ring().clone();
        let am = &self.a.dg.module;
        let cm = &self.c.dg.module;
        let mut bds: BTreeSet<Bidegree> = am.support().collect();
        bds.extend(cm.support());
        for &at in &bds {
            let ra = am.rank(at);
            let rc = cm.rank(at);
            if at.p < self.p_max {
                let ib = self.i.block(am, am, at);
                if kernel(&ib).cols() > 0 {
                    return Err(CoupleError::TowerViolation {
                        check: "i is injective",
                        context: format!("the stage map out of {at} has a nontrivial kernel"),
                    });
                }
            }
            let jb = self.j.block(am, cm, at);
            let rels = cm.relations(at);
            let ker_j = presented_kernel(&jb, &rels);
            let im_i = if at.p > self.p_min {
                self.i.block(am, am, bd(at.p - 1, at.q))
            } else {
                Matrix::zero(&ring, ra, 0)
            };
            if !ColumnBasis::new(&ker_j).span_eq(&ColumnBasis::new(&im_i)) {
                return Err(CoupleError::TowerViolation {
                    check: "ker j = im i",
                    context: format!("exactness fails in the middle of the column at {at}"),
                });
            }
            let onto = ColumnBasis::new(&jb.hstack(&rels));
            for g in 0..rc {
                if !onto.contains(&basis_vec(&ring, rc, g)) {
                    return Err(CoupleError::TowerViolation {
                        check: "j is surjective",
                        context: format!("generator #{g} of the quotient at {at} is not hit"),
                    });
                }
            }
            if at.p == self.p_max {
                let tb = self.top.block(am, am, at);
                match self.policy {
                    ExtensionPolicy::ConstantAbove => {
                        if tb != Matrix::identity(&ring, ra) {
                            return Err(CoupleError::TowerViolation {
                                check: "top stage map is the identity",
                                context: format!("at {at}"),
                            });
                        }
                    }
                    ExtensionPolicy::RepeatLastMap => {
                        if kernel(&tb).cols() > 0 {
                            return Err(CoupleError::TowerViolation {
                                check: "top stage map is injective",
                                context: format!("at {at}"),
                            });
                        }
                        if !ColumnBasis::new(&ker_j).span_eq(&ColumnBasis::new(&tb)) {
                            return Err(CoupleError::TowerViolation {
                                check: "ker j = im i above the window",
                                context: format!(
                                    "the repeated column is not a short exact sequence at {at}"
                                ),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `j(Γ(π; x⃗)) = Γ(π; j x⃗)` on every basis tuple of every stored key of
    /// either structure table.
    fn check_condition_one(&self) -> Result<(), CoupleError> {
        let ring = self.ring().clone();
        let am = &self.a.dg.module;
        let cm = &self.c.dg.module;
        let mut keys: BTreeSet<(usize, i64, usize, Vec<Bidegree>)> =
            self.a.stored_gamma().map(|(k, _)| k.clone()).collect();
        keys.extend(self.c.stored_gamma().map(|(k, _)| k.clone()));
        for (n, s, idx, tuple) in &keys {
            let pi = self.a.operad.basis_elem(*n, *s, *idx);
            let ranks: Vec<usize> = tuple.iter().map(|b| am.rank(*b)).collect();
            if ranks.iter().any(|&x| x == 0) {
                continue;
            }
            let total: usize = ranks.iter().product();
            for flat in 0..total {
                let digits = decode_multi(flat, &ranks);
                let inputs: Vec<(Bidegree, Vec<R::Elem>)> = tuple
                    .iter()
                    .zip(&digits)
                    .map(|(b, &g)| (*b, basis_vec(&ring, am.rank(*b), g)))
                    .collect();
                let (obd, va) = self.a.act(&pi, &inputs)?;
                let lhs = self.j.apply(am, cm, obd, &va);
                let inputs_c: Vec<(Bidegree, Vec<R::Elem>)> = tuple
                    .iter()
                    .zip(&digits)
                    .map(|(b, &g)| (*b, self.j.block(am, cm, *b).col_vec(g)))
                    .collect();
                let (obd_c, rhs) = self.c.act(&pi, &inputs_c)?;
                if obd_c != obd || !cm.vectors_equal(obd, &lhs, &rhs) {
                    return Err(CoupleError::TowerViolation {
                        check: "condition (i)",
                        context: format!(
                            "operation #{idx} of arity {n} in degree {s} on inputs {tuple:?}, \
                             basis tuple {digits:?}, output at {obd}"
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    /// `i(Γ(π; x⃗)) = Γ(π; .., i x_h, ..)` for every slot, on every stored
    /// key and every slot-lowered variant (so both sides of each stage
    /// relation are exercised).  An `i` landing above the window means the
    /// top stage map.
    fn check_condition_two(&self) -> Result<(), CoupleError> {
        let ring = self.ring().clone();
        let am = &self.a.dg.module;
        let mut keys: BTreeSet<(usize, i64, usize, Vec<Bidegree>)> =
            self.a.stored_gamma().map(|(k, _)| k.clone()).collect();
        for (n, s, idx, tuple) in keys.clone() {
            for h in 0..tuple.len() {
                if tuple[h].p > self.p_min {
                    let mut low = tuple.clone();
                    low[h] = bd(low[h].p - 1, low[h].q);
                    keys.insert((n, s, idx, low));
                }
            }
        }
        for (n, s, idx, tuple) in &keys {
            let pi = self.a.operad.basis_elem(*n, *s, *idx);
            let ranks: Vec<usize> = tuple.iter().map(|b| am.rank(*b)).collect();
            if ranks.iter().any(|&x| x == 0) {
                continue;
            }
            let total: usize = ranks.iter().product();
            for h in 0..*n {
                for flat in 0..total {
                    let digits = decode_multi(flat, &ranks);
                    let inputs: Vec<(Bidegree, Vec<R::Elem>)> = tuple
                        .iter()
                        .zip(&digits)
                        .map(|(b, &g)| (*b, basis_vec(&ring, am.rank(*b), g)))
                        .collect();
                    let (obd, v) = self.a.act(&pi, &inputs)?;
                    let (tgt, lhs) = if obd.p < self.p_max {
                        (bd(obd.p + 1, obd.q), self.i.apply(am, am, obd, &v))
                    } else {
                        (obd, self.top.apply(am, am, obd, &v))
                    };
                    let bh = tuple[h];
                    let (nb, col) = if bh.p < self.p_max {
                        (
                            bd(bh.p + 1, bh.q),
                            self.i.block(am, am, bh).col_vec(digits[h]),
                        )
                    } else {
                        (bh, self.top.block(am, am, bh).col_vec(digits[h]))
                    };
                    let mut bumped = inputs;
                    bumped[h] = (nb, col);
                    let (obd2, rhs) = self.a.act(&pi, &bumped)?;
                    if obd2 != tgt || !am.vectors_equal(tgt, &lhs, &rhs) {
                        return Err(CoupleError::TowerViolation {
                            check: "condition (ii)",
                            context: format!(
                                "operation #{idx} of arity {n} in degree {s} on inputs {tuple:?}, \
                                 slot {}, basis tuple {digits:?}",
                                h + 1
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Verify all invariants of a tower; names the failed condition on error.
pub fn check_tower<R: Ring>(t: &AlgebraTower<R>) -> Result<(), CoupleError> {
    t.check()
}

/// The connecting homomorphism `k = i^{-1} . d . j^{-1}` on a homology class
/// of `C` at `at` (normal-form coordinates), returning the target bidegree
/// `(p-1, q-1)` and the class there.  Both solves are deterministic; the
/// result is independent of the choices by exactness.
pub fn connecting<R: Ring>(
    t: &AlgebraTower<R>,
    at: Bidegree,
    class_nf: &[R::Elem],
) -> Result<(Bidegree, Vec<R::Elem>), CoupleError> {
    if at.p < t.p_min || at.p > t.p_max {
        return Err(CoupleError::Unsupported(format!(
            "connecting is computed on the stored window; {at} is outside it"
        )));
    }
    let h_a = t.a.dg.homology()?;
    let h_c = t.c.dg.homology()?;
    let block = connecting_block(t, &h_a, &h_c, at, false)?;
    Ok((bd(at.p - 1, at.q - 1), block.apply(class_nf)))
}

/// The full connecting block at an E-side bidegree: lift each normal-form
/// generator of `H(C)` through `j`, push through the stage differential, and
/// solve against the stage map (`via_top`: against the top stage map, for the
/// repeated column above the window).
fn connecting_block<R: Ring>(
    t: &AlgebraTower<R>,
    h_a: &Homology<R>,
    h_c: &Homology<R>,
    at: Bidegree,
    via_top: bool,
) -> Result<Matrix<R>, CoupleError> {
    let ring = t.ring().clone();
    let am = &t.a.dg.module;
    let cm = &t.c.dg.module;
    let tgt = if via_top {
        bd(at.p, at.q - 1)
    } else {
        bd(at.p - 1, at.q - 1)
    };
    let rows = h_a.rank(tgt);
    let n = h_c.rank(at);
    let sqc = match h_c.at(at) {
        Some(sq) if sq.gen_count() > 0 => sq,
        _ => return Ok(Matrix::zero(&ring, rows, 0)),
    };
    let jb = t.j.block(am, cm, at);
    let j_ext = jb.hstack(&cm.relations(at));
    let ra = am.rank(at);
    let d_at = t.a.dg.d.block(am, am, at);
    let stage = if via_top {
        t.top.block(am, am, bd(at.p, at.q - 1))
    } else {
        t.i.block(am, am, tgt)
    };
    let mut cols = Vec::with_capacity(n);
    for g in 0..n {
        let z = sqc.lift(&basis_vec(&ring, n, g));
        let xy = solve(&j_ext, &z, "j-preimage for the connecting map").map_err(|_| {
            CoupleError::LiftFailed {
                what: format!("a j-preimage of class #{g}"),
                at,
            }
        })?;
        let x: Vec<R::Elem> = xy[..ra].to_vec();
        let dx = d_at.apply(&x);
        let w = if stage.cols() == 0 {
            if dx.iter().any(|e| !ring.is_zero(e)) {
                return Err(CoupleError::LiftFailed {
                    what: format!("an i-preimage of the boundary of class #{g}"),
                    at,
                });
            }
            Vec::new()
        } else {
            solve(&stage, &dx, "i-preimage for the connecting map").map_err(|_| {
                CoupleError::LiftFailed {
                    what: format!("an i-preimage of the boundary of class #{g}"),
                    at,
                }
            })?
        };
        let col = match h_a.at(tgt) {
            Some(sq) if sq.gen_count() > 0 => {
                sq.project(&w).ok_or_else(|| CoupleError::LiftFailed {
                    what: format!("the connecting representative of class #{g} as a cycle"),
                    at,
                })?
            }
            _ => Vec::new(),
        };
        cols.push(col);
    }
    Ok(Matrix::from_columns(&ring, rows, &cols))
}

// ---------------------------------------------------------------------------
// couples

/// An exact couple at some level `r >= 1`, presented inside the level-1
/// normal forms.
///
/// The level-1 ambients are the homologies `D¹ = H(A)` and `E¹ = H(C)` in
/// normal form (torsion recorded as diagonal relations), extended above the
/// window by the tower's policy: every column above the top is a clone of the
/// top column, the stage map above the top is the induced top endomorphism,
/// and quotient data above the top is cloned (repeat) or absent (constant).
/// `D^r` and `E^r` at each bidegree are subquotients of those ambients;
/// `j_r` (bidegree `(-(r-1), 0)`) is stored in internal coordinates, while
/// `i_r`, `k_r` are restrictions of the level-1 blocks computed on demand.
///
/// The extended window shrinks from the top by `r` at each derivation (the
/// incoming differential reaches that far); `valid_top` tracks the highest
/// trustworthy column.  It never drops below `p_max + 1`, so the stored
/// window is always fully covered.
#[derive(Clone, Debug)]
pub struct Couple<R: Ring> {
    ring: R,
    level: usize,
    policy: ExtensionPolicy,
    p_min: i64,
    p_max: i64,
    valid_top: i64,
    d1_amb: BigradedModule<R>,
    e1_amb: BigradedModule<R>,
    i1: BTreeMap<Bidegree, Matrix<R>>,
    j1: BTreeMap<Bidegree, Matrix<R>>,
    k1: BTreeMap<Bidegree, Matrix<R>>,
    d_sub: BTreeMap<Bidegree, Subquotient<R>>,
    e_sub: BTreeMap<Bidegree, Subquotient<R>>,
    jr: BTreeMap<Bidegree, Matrix<R>>,
}

impl<R: Ring> Couple<R> {
    pub fn ring(&self) -> &R {
        &self.ring
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn policy(&self) -> ExtensionPolicy {
        self.policy
    }

    pub fn p_min(&self) -> i64 {
        self.p_min
    }

    pub fn p_max(&self) -> i64 {
        self.p_max
    }

    /// Highest column of the extended window that is still fully derived.
    pub fn valid_top(&self) -> i64 {
        self.valid_top
    }

    /// The level-1 ambient `D¹ = H(A)` as a presented module.
    pub fn d1_ambient(&self) -> &BigradedModule<R> {
        &self.d1_amb
    }

    /// The level-1 ambient `E¹ = H(C)` as a presented module.
    pub fn e1_ambient(&self) -> &BigradedModule<R> {
        &self.e1_amb
    }

    /// `D^r` at a bidegree, as a subquotient of the level-1 ambient.
    pub fn d_component(&self, at: Bidegree) -> Option<&Subquotient<R>> {
        self.d_sub.get(&at)
    }

    /// `E^r` at a bidegree, as a subquotient of the level-1 ambient.
    pub fn e_component(&self, at: Bidegree) -> Option<&Subquotient<R>> {
        self.e_sub.get(&at)
    }

    pub fn d_support(&self) -> impl Iterator<Item = Bidegree> + '_ {
        self.d_sub.keys().copied()
    }

    pub fn e_support(&self) -> impl Iterator<Item = Bidegree> + '_ {
        self.e_sub.keys().copied()
    }

    fn gen_d(&self, at: Bidegree) -> usize {
        self.d_sub.get(&at).map_or(0, Subquotient::gen_count)
    }

    fn gen_e(&self, at: Bidegree) -> usize {
        self.e_sub.get(&at).map_or(0, Subquotient::gen_count)
    }

    /// Level-1 stage block out of `at` (the induced top endomorphism above
    /// the window), materialized as zero when absent.
    pub fn i1_block(&self, at: Bidegree) -> Matrix<R> {
        block_or_zero(
            &self.i1,
            &self.ring,
            &self.d1_amb,
            &self.d1_amb,
            at,
            bd(at.p + 1, at.q),
        )
    }

    /// Level-1 quotient block at `at`.
    pub fn j1_block(&self, at: Bidegree) -> Matrix<R> {
        block_or_zero(&self.j1, &self.ring, &self.d1_amb, &self.e1_amb, at, at)
    }

    /// Level-1 connecting block at `at` (target `(p-1, q-1)`).
    pub fn k1_block(&self, at: Bidegree) -> Matrix<R> {
        block_or_zero(
            &self.k1,
            &self.ring,
            &self.e1_amb,
            &self.d1_amb,
            at,
            bd(at.p - 1, at.q - 1),
        )
    }

    /// Composite of `steps` level-1 stage blocks starting at `from`.
    pub fn i1_power(&self, from: Bidegree, steps: usize) -> Matrix<R> {
        let mut m = Matrix::identity(&self.ring, self.d1_amb.rank(from));
        let mut src = from;
        for _ in 0..steps {
            m = self.i1_block(src).mul(&m);
            src = bd(src.p + 1, src.q);
        }
        m
    }

    /// `i_r`: the restriction of the stage map to `D^r`, in internal
    /// coordinates.
    pub fn i_r_block(&self, at: Bidegree) -> Result<Matrix<R>, CoupleError> {
        let up = bd(at.p + 1, at.q);
        let (nc, nr) = (self.gen_d(at), self.gen_d(up));
        if nc == 0 || nr == 0 {
            return Ok(Matrix::zero(&self.ring, nr, nc));
        }
        internal_block(
            &self.d_sub[&at],
            &self.d_sub[&up],
            &self.i1_block(at),
            "i",
            at,
            self.level,
        )
    }

    /// `k_r`: the restriction of the connecting map to `E^r`, in internal
    /// coordinates (target `D^r` at `(p-1, q-1)`).
    pub fn k_r_block(&self, at: Bidegree) -> Result<Matrix<R>, CoupleError> {
        let tgt = bd(at.p - 1, at.q - 1);
        let (nc, nr) = (self.gen_e(at), self.gen_d(tgt));
        if nc == 0 || nr == 0 {
            return Ok(Matrix::zero(&self.ring, nr, nc));
        }
        internal_block(
            &self.e_sub[&at],
            &self.d_sub[&tgt],
            &self.k1_block(at),
            "k",
            at,
            self.level,
        )
    }

    /// `j_r` out of a D-side bidegree (bidegree `(-(r-1), 0)`), in internal
    /// coordinates.
    pub fn j_r_block(&self, at: Bidegree) -> Matrix<R> {
        match self.jr.get(&at) {
            Some(m) => m.clone(),
            None => {
                let tgt = bd(at.p - (self.level as i64 - 1), at.q);
                Matrix::zero(&self.ring, self.gen_e(tgt), self.gen_d(at))
            }
        }
    }

    /// The page differential `d_r = j_r . k_r` out of an E-side bidegree,
    /// in internal coordinates (bidegree `(-r, -1)`).
    pub fn d_r_block(&self, at: Bidegree) -> Result<Matrix<R>, CoupleError> {
        let mid = bd(at.p - 1, at.q - 1);
        Ok(self.j_r_block(mid).mul(&self.k_r_block(at)?))
    }

    /// Exactness at all three corners, plus `d_r . d_r = 0`, at every
    /// bidegree whose partners are still inside the valid window.
    pub fn check_exactness(&self) -> Result<(), CoupleError> {
        let r = self.level as i64;
        for (&at, ds) in &self.d_sub {
            let r_src = internal_rels(&self.ring, Some(ds));
            let up = bd(at.p + 1, at.q);
            if up.p <= self.valid_top {
                let i_int = self.i_r_block(at)?;
                let tgt_rels = internal_rels(&self.ring, self.d_sub.get(&up));
                let ker_i = presented_kernel(&i_int, &tgt_rels);
                let k_in = self.k_r_block(bd(at.p + 1, at.q + 1))?;
                if !spans_match(&ker_i, &k_in, &r_src) {
                    return Err(CoupleError::ExactnessViolation {
                        level: self.level,
                        corner: "ker i = im k",
                        at,
                    });
                }
            }
            let j_int = self.j_r_block(at);
            let j_tgt = bd(at.p - (r - 1), at.q);
            let j_rels = internal_rels(&self.ring, self.e_sub.get(&j_tgt));
            let ker_j = presented_kernel(&j_int, &j_rels);
            let below = bd(at.p - 1, at.q);
            let i_in = if self.d_sub.contains_key(&below) {
                self.i_r_block(below)?
            } else {
                Matrix::zero(&self.ring, ds.gen_count(), 0)
            };
            if !spans_match(&ker_j, &i_in, &r_src) {
                return Err(CoupleError::ExactnessViolation {
                    level: self.level,
                    corner: "ker j = im i",
                    at,
                });
            }
        }
        for (&at, es) in &self.e_sub {
            let r_src = internal_rels(&self.ring, Some(es));
            let k_int = self.k_r_block(at)?;
            let k_tgt = bd(at.p - 1, at.q - 1);
            let k_rels = internal_rels(&self.ring, self.d_sub.get(&k_tgt));
            let ker_k = presented_kernel(&k_int, &k_rels);
            let j_src = bd(at.p + (r - 1), at.q);
            if j_src.p <= self.valid_top {
                let j_in = self.j_r_block(j_src);
                if !spans_match(&ker_k, &j_in, &r_src) {
                    return Err(CoupleError::ExactnessViolation {
                        level: self.level,
                        corner: "ker k = im j",
                        at,
                    });
                }
            }
            let m1 = self.d_r_block(at)?;
            let t1 = bd(at.p - r, at.q - 1);
            if self.gen_e(t1) > 0 {
                let m2 = self.d_r_block(t1)?;
                let t2 = bd(at.p - 2 * r, at.q - 2);
                if let Some(es2) = self.e_sub.get(&t2) {
                    let prod = m2.mul(&m1);
                    for c in 0..prod.cols() {
                        if !es2.nf_is_zero(&prod.col_vec(c)) {
                            return Err(CoupleError::ExactnessViolation {
                                level: self.level,
                                corner: "d . d = 0",
                                at,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// One derivation step: `E^{r+1} = H(E^r, d_r)` and `D^{r+1} = i(D^r)`,
    /// with `j_{r+1}(a) = [j(i^{-r}(a))]` solved against the stage
    /// composite.  The result is verified exact before being returned.
    pub fn derive(&self) -> Result<Couple<R>, CoupleError> {
        let r = self.level;
        let new_valid = self.valid_top - r as i64;
        if new_valid <= self.p_max {
            return Err(CoupleError::Unsupported(format!(
                "the derivation window is exhausted at level {}; rebuild the couple with a \
                 larger r_max",
                r + 1
            )));
        }
        let mut d_r: BTreeMap<Bidegree, Matrix<R>> = BTreeMap::new();
        for &at in self.e_sub.keys() {
            d_r.insert(at, self.d_r_block(at)?);
        }
        let mut new_e = BTreeMap::new();
        for (&at, es) in &self.e_sub {
            if at.p > new_valid {
                continue;
            }
            let m = &d_r[&at];
            let out_bd = bd(at.p - r as i64, at.q - 1);
            let tgt_rels = internal_rels(&self.ring, self.e_sub.get(&out_bd));
            let cycles = presented_kernel(m, &tgt_rels);
            let lift = es.lift_matrix();
            let boundaries = es.boundary_basis().basis_matrix();
            let amb = self.e1_amb.relations(at);
            let gens = lift.mul(&cycles).hstack(&boundaries).hstack(&amb);
            let mut rels = boundaries.hstack(&amb);
            if let Some(inc) = d_r.get(&bd(at.p + r as i64, at.q + 1)) {
                rels = lift.mul(inc).hstack(&rels);
            }
            new_e.insert(
                at,
                Subquotient::new(
                    self.e1_amb.rank(at),
                    &gens,
                    &rels,
                    &format!("E^{} at {at}", r + 1),
                )?,
            );
        }
        let mut new_d = BTreeMap::new();
        for &at in self.d_sub.keys() {
            if at.p > new_valid {
                continue;
            }
            let amb = self.d1_amb.relations(at);
            let below = bd(at.p - 1, at.q);
            let gens = match self.d_sub.get(&below) {
                Some(ds) => self
                    .i1_block(below)
                    .mul(&ds.span_basis().basis_matrix())
                    .hstack(&amb),
                None => amb.clone(),
            };
            new_d.insert(
                at,
                Subquotient::new(
                    self.d1_amb.rank(at),
                    &gens,
                    &amb,
                    &format!("D^{} at {at}", r + 1),
                )?,
            );
        }
        let mut new_jr = BTreeMap::new();
        for (&at, ds) in &new_d {
            let tgt = bd(at.p - r as i64, at.q);
            let n_tgt = new_e.get(&tgt).map_or(0, Subquotient::gen_count);
            let comp = self.i1_power(tgt, r);
            let ext = comp.hstack(&self.d1_amb.relations(at));
            let mut cols = Vec::with_capacity(ds.gen_count());
            for g in 0..ds.gen_count() {
                let a_amb = ds.lift(&basis_vec(&self.ring, ds.gen_count(), g));
                let xy =
                    solve(&ext, &a_amb, "stage-composite preimage for the derived j").map_err(
                        |_| CoupleError::PreimageFailed {
                            map: "i^r",
                            at,
                            level: r + 1,
                        },
                    )?;
                let x: Vec<R::Elem> = xy[..comp.cols()].to_vec();
                let w = self.j1_block(tgt).apply(&x);
                let col = match new_e.get(&tgt) {
                    Some(es) => es.project(&w).ok_or(CoupleError::PreimageFailed {
                        map: "j",
                        at: tgt,
                        level: r + 1,
                    })?,
                    None => {
                        if !self.e1_amb.vector_is_zero(tgt, &w) {
                            return Err(CoupleError::PreimageFailed {
                                map: "j",
                                at: tgt,
                                level: r + 1,
                            });
                        }
                        Vec::new()
                    }
                };
                cols.push(col);
            }
            new_jr.insert(at, Matrix::from_columns(&self.ring, n_tgt, &cols));
        }
        let out = Couple {
            ring: self.ring.clone(),
            level: r + 1,
            policy: self.policy,
            p_min: self.p_min,
            p_max: self.p_max,
            valid_top: new_valid,
            d1_amb: self.d1_amb.clone(),
            e1_amb: self.e1_amb.clone(),
            i1: self.i1.clone(),
            j1: self.j1.clone(),
            k1: self.k1.clone(),
            d_sub: new_d,
            e_sub: new_e,
            jr: new_jr,
        };
        out.check_exactness()?;
        Ok(out)
    }
}

/// Build the level-1 exact couple of a tower: `D¹ = H(A)`, `E¹ = H(C)`,
/// induced stage/quotient maps, and the connecting homomorphism, all on an
/// extended window sized so that `r_max` derivation steps stay valid over
/// the stored columns.  Exactness is verified before returning.
pub fn first_couple<R: Ring>(
    t: &AlgebraTower<R>,
    r_max: usize,
) -> Result<Couple<R>, CoupleError> {
    let ring = t.ring().clone();
    let h_a = t.a.dg.homology()?;
    let h_c = t.c.dg.homology()?;
    let margin = (r_max * (r_max + 1)) / 2 + 2;
    let view_top = t.p_max + margin as i64;

    let mut d1_amb = BigradedModule::new(&ring);
    for at in h_a.support() {
        if h_a.rank(at) > 0 {
            d1_amb.insert(at, presented_component(&ring, "D", at, h_a.at(at).unwrap()));
        }
    }
    let top_d: Vec<Bidegree> = h_a
        .support()
        .filter(|at| at.p == t.p_max && h_a.rank(*at) > 0)
        .collect();
    for &at in &top_d {
        for p in (t.p_max + 1)..=view_top {
            let here = bd(p, at.q);
            d1_amb.insert(
                here,
                presented_component(&ring, "D", here, h_a.at(at).unwrap()),
            );
        }
    }
    let mut e1_amb = BigradedModule::new(&ring);
    for at in h_c.support() {
        if h_c.rank(at) > 0 {
            e1_amb.insert(at, presented_component(&ring, "E", at, h_c.at(at).unwrap()));
        }
    }
    let top_e: Vec<Bidegree> = h_c
        .support()
        .filter(|at| at.p == t.p_max && h_c.rank(*at) > 0)
        .collect();
    if t.policy == ExtensionPolicy::RepeatLastMap {
        for &at in &top_e {
            for p in (t.p_max + 1)..=view_top {
                let here = bd(p, at.q);
                e1_amb.insert(
                    here,
                    presented_component(&ring, "E", here, h_c.at(at).unwrap()),
                );
            }
        }
    }

    let mut i1 = induced_map_on_homology(&t.i, &t.a.dg, &t.a.dg, &h_a, &h_a)?;
    i1.retain(|_, m| m.rows() > 0 && m.cols() > 0);
    let t1 = induced_map_on_homology(&t.top, &t.a.dg, &t.a.dg, &h_a, &h_a)?;
    for &at in &top_d {
        let blk = &t1[&at];
        for p in t.p_max..view_top {
            i1.insert(bd(p, at.q), blk.clone());
        }
    }
    let mut j1 = induced_map_on_homology(&t.j, &t.a.dg, &t.c.dg, &h_a, &h_c)?;
    j1.retain(|_, m| m.rows() > 0 && m.cols() > 0);
    if t.policy == ExtensionPolicy::RepeatLastMap {
        for &at in &top_e {
            if let Some(blk) = j1.get(&at).cloned() {
                for p in (t.p_max + 1)..=view_top {
                    j1.insert(bd(p, at.q), blk.clone());
                }
            }
        }
    }
    let mut k1: BTreeMap<Bidegree, Matrix<R>> = BTreeMap::new();
    for at in h_c.support().collect::<Vec<_>>() {
        if h_c.rank(at) == 0 {
            continue;
        }
        let blk = connecting_block(t, &h_a, &h_c, at, false)?;
        if blk.rows() > 0 && blk.cols() > 0 {
            k1.insert(at, blk);
        }
    }
    if t.policy == ExtensionPolicy::RepeatLastMap {
        for &at in &top_e {
            let blk = connecting_block(t, &h_a, &h_c, at, true)?;
            if blk.rows() > 0 && blk.cols() > 0 {
                for p in (t.p_max + 1)..=view_top {
                    k1.insert(bd(p, at.q), blk.clone());
                }
            }
        }
    }

    let mut d_sub = BTreeMap::new();
    for at in d1_amb.support().collect::<Vec<_>>() {
        d_sub.insert(
            at,
            full_with_rels(&ring, d1_amb.rank(at), &d1_amb.relations(at), at, "D^1")?,
        );
    }
    let mut e_sub = BTreeMap::new();
    for at in e1_amb.support().collect::<Vec<_>>() {
        e_sub.insert(
            at,
            full_with_rels(&ring, e1_amb.rank(at), &e1_amb.relations(at), at, "E^1")?,
        );
    }
    let mut jr = BTreeMap::new();
    for (&at, ds) in &d_sub {
        let blk = block_or_zero(&j1, &ring, &d1_amb, &e1_amb, at, at);
        let m = match e_sub.get(&at) {
            Some(es) => internal_block(ds, es, &blk, "j", at, 1)?,
            None => Matrix::zero(&ring, 0, ds.gen_count()),
        };
        jr.insert(at, m);
    }

    let couple = Couple {
        ring,
        level: 1,
        policy: t.policy,
        p_min: t.p_min,
        p_max: t.p_max,
        valid_top: view_top,
        d1_amb,
        e1_amb,
        i1,
        j1,
        k1,
        d_sub,
        e_sub,
        jr,
    };
    couple.check_exactness()?;
    Ok(couple)
}

// ---------------------------------------------------------------------------
// helpers

fn presented_component<R: Ring>(
    ring: &R,
    prefix: &str,
    at: Bidegree,
    sq: &Subquotient<R>,
) -> Component<R> {
    let n = sq.gen_count();
    let labels = (0..n)
        .map(|s| format!("{prefix}[{},{}]#{s}", at.p, at.q))
        .collect();
    let tor = sq.torsion();
    let rels = Matrix::from_fn(ring, n, tor.len(), |i, j| {
        if i == j {
            tor[j].clone()
        } else {
            ring.zero()
        }
    });
    Component::presented(labels, rels)
}

/// The full presented module as a subquotient of its own generator space.
fn full_with_rels<R: Ring>(
    ring: &R,
    n: usize,
    rels: &Matrix<R>,
    at: Bidegree,
    what: &str,
) -> Result<Subquotient<R>, CoupleError> {
    let gens = Matrix::identity(ring, n).hstack(rels);
    Ok(Subquotient::new(n, &gens, rels, &format!("{what} at {at}"))?)
}

/// Diagonal torsion relations of a subquotient's internal presentation.
pub(crate) fn internal_rels<R: Ring>(ring: &R, sq: Option<&Subquotient<R>>) -> Matrix<R> {
    match sq {
        None => Matrix::zero(ring, 0, 0),
        Some(s) => {
            let tor = s.torsion();
            Matrix::from_fn(ring, s.gen_count(), tor.len(), |i, j| {
                if i == j {
                    tor[j].clone()
                } else {
                    ring.zero()
                }
            })
        }
    }
}

/// Kernel of a map of presented modules: all `x` with `m x` in the span of
/// the target relations, as columns in source coordinates.
pub(crate) fn presented_kernel<R: Ring>(m: &Matrix<R>, tgt_rels: &Matrix<R>) -> Matrix<R> {
    let ext = m.hstack(tgt_rels);
    let k = kernel(&ext);
    Matrix::from_fn(m.ring(), m.cols(), k.cols(), |i, j| k.at(i, j).clone())
}

/// Span equality of `[a | rels]` and `[b | rels]`: equality of submodules of
/// the presented module both live in.
pub(crate) fn spans_match<R: Ring>(a: &Matrix<R>, b: &Matrix<R>, rels: &Matrix<R>) -> bool {
    ColumnBasis::new(&a.hstack(rels)).span_eq(&ColumnBasis::new(&b.hstack(rels)))
}

fn block_or_zero<R: Ring>(
    map: &BTreeMap<Bidegree, Matrix<R>>,
    ring: &R,
    src_amb: &BigradedModule<R>,
    tgt_amb: &BigradedModule<R>,
    src: Bidegree,
    tgt: Bidegree,
) -> Matrix<R> {
    match map.get(&src) {
        Some(m) => m.clone(),
        None => Matrix::zero(ring, tgt_amb.rank(tgt), src_amb.rank(src)),
    }
}

/// Express an ambient-level block as a map of internal coordinates:
/// lift each generator, apply, project.
fn internal_block<R: Ring>(
    src: &Subquotient<R>,
    tgt: &Subquotient<R>,
    amb: &Matrix<R>,
    map: &'static str,
    at: Bidegree,
    level: usize,
) -> Result<Matrix<R>, CoupleError> {
    let ring = amb.ring().clone();
    let mut cols = Vec::with_capacity(src.gen_count());
    for g in 0..src.gen_count() {
        let v = src.lift(&basis_vec(&ring, src.gen_count(), g));
        let w = amb.apply(&v);
        cols.push(
            tgt.project(&w)
                .ok_or(CoupleError::PreimageFailed { map, at, level })?,
        );
    }
    Ok(Matrix::from_columns(&ring, tgt.gen_count(), &cols))
}

#[cfg(test)]
pub(crate) mod fixtures {
    //! Small hand-verified towers shared by this crate's test suites.
    use super::*;
    use crate::graded::DgModule;
    use crate::linalg::Integers;
    use crate::operad::builtin_comm;

    /// The two-stage filtration of `X = Z[e]/(e^2)` with `d e = 2` by the
    /// ideal `(2, e)`:  stage 0 is the ideal (basis `f = 2`, `g = e`, with
    /// `d g = f`), stage 1 is all of `X` (basis `1`, `e`, with `d e = 2`),
    /// and the quotient is `Z/2` in the top column.
    pub(crate) fn ideal_tower() -> AlgebraTower<Integers> {
        let z = Integers;
        let op = builtin_comm(&z, 2);

        let mut am = BigradedModule::new(&z);
        am.insert(bd(0, 0), Component::free(&z, vec!["f".into()]));
        am.insert(bd(0, 1), Component::free(&z, vec!["g".into()]));
        am.insert(bd(1, 0), Component::free(&z, vec!["one".into()]));
        am.insert(bd(1, 1), Component::free(&z, vec!["e".into()]));
        let mut da = GradedMap::new("d", bd(0, -1));
        da.set_block(bd(0, 1), Matrix::from_i64(&z, &[&[1]]));
        da.set_block(bd(1, 1), Matrix::from_i64(&z, &[&[2]]));
        let mut a = OperadAlgebra::new(op.clone(), DgModule::new(am, da).unwrap());
        a.set_column_clip(Some(1)).unwrap();
        a.set_unit_identity().unwrap();
        for (t, blk) in [
            (vec![bd(0, 0), bd(0, 0)], 2),
            (vec![bd(0, 0), bd(0, 1)], 2),
            (vec![bd(0, 1), bd(0, 0)], 2),
            (vec![bd(0, 0), bd(1, 0)], 2),
            (vec![bd(1, 0), bd(0, 0)], 2),
            (vec![bd(0, 0), bd(1, 1)], 2),
            (vec![bd(1, 1), bd(0, 0)], 2),
            (vec![bd(0, 1), bd(1, 0)], 1),
            (vec![bd(1, 0), bd(0, 1)], 1),
            (vec![bd(1, 0), bd(1, 0)], 1),
            (vec![bd(1, 0), bd(1, 1)], 1),
            (vec![bd(1, 1), bd(1, 0)], 1),
        ] {
            a.set_gamma(2, 0, 0, t, Matrix::from_i64(&z, &[&[blk]])).unwrap();
        }

        let mut cm = BigradedModule::new(&z);
        cm.insert(bd(0, 0), Component::free(&z, vec!["f~".into()]));
        cm.insert(bd(0, 1), Component::free(&z, vec!["g~".into()]));
        cm.insert(
            bd(1, 0),
            Component::presented(vec!["u".into()], Matrix::from_i64(&z, &[&[2]])),
        );
        let mut dc = GradedMap::new("d", bd(0, -1));
        dc.set_block(bd(0, 1), Matrix::from_i64(&z, &[&[1]]));
        let mut c = OperadAlgebra::new(op, DgModule::new(cm, dc).unwrap());
        c.set_column_clip(Some(1)).unwrap();
        c.set_unit_identity().unwrap();
        for (t, blk) in [
            (vec![bd(0, 0), bd(0, 0)], 2),
            (vec![bd(0, 0), bd(0, 1)], 2),
            (vec![bd(0, 1), bd(0, 0)], 2),
            (vec![bd(0, 0), bd(1, 0)], 2),
            (vec![bd(1, 0), bd(0, 0)], 2),
            (vec![bd(1, 0), bd(1, 0)], 1),
        ] {
            c.set_gamma(2, 0, 0, t, Matrix::from_i64(&z, &[&[blk]])).unwrap();
        }

        let mut i = GradedMap::new("i", bd(1, 0));
        i.set_block(bd(0, 0), Matrix::from_i64(&z, &[&[2]]));
        i.set_block(bd(0, 1), Matrix::from_i64(&z, &[&[1]]));
        let mut j = GradedMap::new("j", bd(0, 0));
        j.set_block(bd(0, 0), Matrix::identity(&z, 1));
        j.set_block(bd(0, 1), Matrix::identity(&z, 1));
        j.set_block(bd(1, 0), Matrix::identity(&z, 1));

        AlgebraTower::new(a, c, i, j, None, ExtensionPolicy::ConstantAbove, 0, 1).unwrap()
    }

    /// The Bockstein tower of `X = Z[a]/(a^2)` with `d a = 2` (so `H(X)` is
    /// `Z/2` in degree 0): every stage is `X`, the stage map is
    /// multiplication by 2, and the top quotient is `X (x) Z/2`.
    pub(crate) fn bockstein_tower() -> AlgebraTower<Integers> {
        let z = Integers;
        let op = builtin_comm(&z, 2);

        let mut am = BigradedModule::new(&z);
        for p in 0..=1 {
            am.insert(bd(p, 0), Component::free(&z, vec![format!("b{p}")]));
            am.insert(bd(p, 1), Component::free(&z, vec![format!("a{p}")]));
        }
        let mut da = GradedMap::new("d", bd(0, -1));
        da.set_block(bd(0, 1), Matrix::from_i64(&z, &[&[2]]));
        da.set_block(bd(1, 1), Matrix::from_i64(&z, &[&[2]]));
        let mut a = OperadAlgebra::new(op.clone(), DgModule::new(am, da).unwrap());
        a.set_column_clip(Some(1)).unwrap();
        a.set_unit_identity().unwrap();
        // b is the unit of X and a.a = 0: all products are either the
        // identity block or absent, in the clipped output column.
        for pa in 0..=1i64 {
            for pb in 0..=1i64 {
                a.set_gamma(2, 0, 0, vec![bd(pa, 0), bd(pb, 0)], Matrix::identity(&z, 1))
                    .unwrap();
                a.set_gamma(2, 0, 0, vec![bd(pa, 0), bd(pb, 1)], Matrix::identity(&z, 1))
                    .unwrap();
                a.set_gamma(2, 0, 0, vec![bd(pa, 1), bd(pb, 0)], Matrix::identity(&z, 1))
                    .unwrap();
            }
        }

        let mut cm = BigradedModule::new(&z);
        cm.insert(bd(0, 0), Component::free(&z, vec!["b~".into()]));
        cm.insert(bd(0, 1), Component::free(&z, vec!["a~".into()]));
        cm.insert(
            bd(1, 0),
            Component::presented(vec!["b2".into()], Matrix::from_i64(&z, &[&[2]])),
        );
        cm.insert(
            bd(1, 1),
            Component::presented(vec!["a2".into()], Matrix::from_i64(&z, &[&[2]])),
        );
        let mut dc = GradedMap::new("d", bd(0, -1));
        dc.set_block(bd(0, 1), Matrix::from_i64(&z, &[&[2]]));
        dc.set_block(bd(1, 1), Matrix::from_i64(&z, &[&[2]]));
        let mut c = OperadAlgebra::new(op, DgModule::new(cm, dc).unwrap());
        c.set_column_clip(Some(1)).unwrap();
        c.set_unit_identity().unwrap();
        for pa in 0..=1i64 {
            for pb in 0..=1i64 {
                c.set_gamma(2, 0, 0, vec![bd(pa, 0), bd(pb, 0)], Matrix::identity(&z, 1))
                    .unwrap();
                c.set_gamma(2, 0, 0, vec![bd(pa, 0), bd(pb, 1)], Matrix::identity(&z, 1))
                    .unwrap();
                c.set_gamma(2, 0, 0, vec![bd(pa, 1), bd(pb, 0)], Matrix::identity(&z, 1))
                    .unwrap();
            }
        }

        let mut i = GradedMap::new("i", bd(1, 0));
        i.set_block(bd(0, 0), Matrix::from_i64(&z, &[&[2]]));
        i.set_block(bd(0, 1), Matrix::from_i64(&z, &[&[2]]));
        let mut top = GradedMap::new("i_top", bd(0, 0));
        top.set_block(bd(1, 0), Matrix::from_i64(&z, &[&[2]]));
        top.set_block(bd(1, 1), Matrix::from_i64(&z, &[&[2]]));
        let mut j = GradedMap::new("j", bd(0, 0));
        for p in 0..=1 {
            j.set_block(bd(p, 0), Matrix::identity(&z, 1));
            j.set_block(bd(p, 1), Matrix::identity(&z, 1));
        }

        AlgebraTower::new(
            a,
            c,
            i,
            j,
            Some(top),
            ExtensionPolicy::RepeatLastMap,
            0,
            1,
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::{bockstein_tower, ideal_tower};
    use super::*;
    use crate::graded::DgModule;
    use crate::linalg::Integers;
    use crate::operad::builtin_comm;

    #[test]
    fn two_stage_ideal_filtration_tower_passes_and_derives() {
        let t = ideal_tower();
        check_tower(&t).unwrap();
        let c1 = first_couple(&t, 4).unwrap();
        assert_eq!(c1.level(), 1);
        // H(ideal) is trivial; H(X) = Z/2 in degree 0.
        assert_eq!(c1.d1_ambient().rank(bd(0, 0)), 0);
        assert_eq!(c1.d1_ambient().rank(bd(1, 0)), 1);
        assert_eq!(c1.e1_ambient().rank(bd(1, 0)), 1);
        let e = c1.e_component(bd(1, 0)).unwrap();
        assert_eq!(e.invariants(), (0, vec!["2".to_string()]));

        let c2 = c1.derive().unwrap();
        // the filtration is exhausted: D^2 below the colimit column is gone,
        // E^2 = E^1 (the couple is stable).
        assert!(c2.d_component(bd(1, 0)).unwrap().is_trivial());
        assert!(!c2.d_component(bd(2, 0)).unwrap().is_trivial());
        let e2 = c2.e_component(bd(1, 0)).unwrap();
        assert!(e.same_invariants(e2));
        let c3 = c2.derive().unwrap();
        assert!(e.same_invariants(c3.e_component(bd(1, 0)).unwrap()));
    }

    #[test]
    fn bockstein_connecting_hits_the_order_two_witness() {
        let t = bockstein_tower();
        check_tower(&t).unwrap();
        let z = Integers;
        // the degree-1 class of X/2 connects to the order-2 class of H(X)
        let (tgt, out) = connecting(&t, bd(1, 1), &[z.one()]).unwrap();
        assert_eq!(tgt, bd(0, 0));
        assert_eq!(out, vec![z.one()]);
        // a d-closed j-preimage connects to zero (here: into a trivial group)
        let (tgt0, out0) = connecting(&t, bd(1, 0), &[z.one()]).unwrap();
        assert_eq!(tgt0, bd(0, -1));
        assert!(out0.is_empty());
    }

    #[test]
    fn bockstein_first_couple_collapses_at_the_second_page() {
        let t = bockstein_tower();
        let c1 = first_couple(&t, 4).unwrap();
        // E^1 in the window: Z/2 at (0,0), (1,0), (1,1)
        assert_eq!(c1.e_component(bd(0, 0)).unwrap().gen_count(), 1);
        assert_eq!(c1.e_component(bd(1, 1)).unwrap().gen_count(), 1);
        assert_eq!(c1.k1_block(bd(1, 1)), Matrix::from_i64(&Integers, &[&[1]]));
        // d_1 out of (1,1) is the isomorphism Z/2 -> Z/2
        let d1 = c1.d_r_block(bd(1, 1)).unwrap();
        assert_eq!(d1.rows(), 1);
        assert_eq!(d1.cols(), 1);
        assert!(!Integers.is_zero(d1.at(0, 0)));
        // everything cancels: E^2 = 0 on the whole window
        let c2 = c1.derive().unwrap();
        for at in [bd(0, 0), bd(1, 0), bd(1, 1), bd(2, 0), bd(2, 1)] {
            if let Some(e) = c2.e_component(at) {
                assert!(e.is_trivial(), "E^2 at {at} should vanish");
            }
        }
    }

    #[test]
    fn a_tower_with_zero_differentials_reproduces_its_carrier() {
        let z = Integers;
        let op = builtin_comm(&z, 2);
        let mut am = BigradedModule::new(&z);
        am.insert(bd(0, 0), Component::free(&z, vec!["x".into()]));
        am.insert(bd(1, 0), Component::free(&z, vec!["y".into()]));
        let mut a = OperadAlgebra::new(op.clone(), DgModule::new(am, GradedMap::new("d", bd(0, -1))).unwrap());
        a.set_unit_identity().unwrap();
        let mut cm = BigradedModule::new(&z);
        cm.insert(bd(0, 0), Component::free(&z, vec!["x~".into()]));
        let mut c = OperadAlgebra::new(op, DgModule::new(cm, GradedMap::new("d", bd(0, -1))).unwrap());
        c.set_unit_identity().unwrap();
        let mut i = GradedMap::new("i", bd(1, 0));
        i.set_block(bd(0, 0), Matrix::identity(&z, 1));
        let mut j = GradedMap::new("j", bd(0, 0));
        j.set_block(bd(0, 0), Matrix::identity(&z, 1));
        let t = AlgebraTower::new(a, c, i, j, None, ExtensionPolicy::ConstantAbove, 0, 1).unwrap();
        check_tower(&t).unwrap();
        let c1 = first_couple(&t, 3).unwrap();
        assert_eq!(c1.d1_ambient().rank(bd(0, 0)), 1);
        assert_eq!(c1.d1_ambient().rank(bd(1, 0)), 1);
        assert_eq!(c1.e1_ambient().rank(bd(0, 0)), 1);
        assert_eq!(c1.e1_ambient().rank(bd(1, 0)), 0);
        assert_eq!(c1.j1_block(bd(0, 0)), Matrix::identity(&z, 1));
        assert_eq!(c1.i1_block(bd(0, 0)), Matrix::identity(&z, 1));
    }

    #[test]
    fn corrupted_towers_are_named_by_the_checker() {
        // condition (ii): flip the sign of the top stage map only.  It stays
        // a chain map and keeps the virtual column exact, but now disagrees
        // with the interior stage map against the products across the seam.
        let mut t = bockstein_tower();
        let mut top = GradedMap::new("i_top", bd(0, 0));
        top.set_block(bd(1, 0), Matrix::from_i64(&Integers, &[&[-2]]));
        top.set_block(bd(1, 1), Matrix::from_i64(&Integers, &[&[-2]]));
        t.top = top;
        match check_tower(&t) {
            Err(CoupleError::TowerViolation { check, .. }) => {
                assert_eq!(check, "condition (ii)")
            }
            other => panic!("expected a condition (ii) violation, got {other:?}"),
        }

        // condition (i): break the quotient product
        let mut t = ideal_tower();
        t.c.set_gamma(
            2,
            0,
            0,
            vec![bd(1, 0), bd(1, 0)],
            Matrix::from_i64(&Integers, &[&[0]]),
        )
        .unwrap();
        match check_tower(&t) {
            Err(CoupleError::TowerViolation { check, .. }) => assert_eq!(check, "condition (i)"),
            other => panic!("expected a condition (i) violation, got {other:?}"),
        }

        // exactness: rescale the stage map (still a chain map, still
        // injective, but its image is too small)
        let mut t = ideal_tower();
        let mut i = GradedMap::new("i", bd(1, 0));
        i.set_block(bd(0, 0), Matrix::from_i64(&Integers, &[&[4]]));
        i.set_block(bd(0, 1), Matrix::from_i64(&Integers, &[&[2]]));
        t.i = i;
        match check_tower(&t) {
            Err(CoupleError::TowerViolation { check, .. }) => assert_eq!(check, "ker j = im i"),
            other => panic!("expected an exactness violation, got {other:?}"),
        }
    }

    #[test]
    fn the_virtual_column_above_a_repeat_tower_must_be_exact() {
        let mut t = bockstein_tower();
        let mut top = GradedMap::new("i_top", bd(0, 0));
        top.set_block(bd(1, 0), Matrix::from_i64(&Integers, &[&[3]]));
        top.set_block(bd(1, 1), Matrix::from_i64(&Integers, &[&[3]]));
        t.top = top;
        match check_tower(&t) {
            Err(CoupleError::TowerViolation { check, .. }) => {
                assert_eq!(check, "ker j = im i above the window")
            }
            other => panic!("expected a virtual-column violation, got {other:?}"),
        }
    }

    #[test]
    fn derivation_stops_cleanly_when_the_window_is_exhausted() {
        let t = bockstein_tower();
        let c1 = first_couple(&t, 1).unwrap();
        let c2 = c1.derive().unwrap();
        match c2.derive() {
            Err(CoupleError::Unsupported(msg)) => {
                assert!(msg.contains("exhausted"), "unexpected message: {msg}")
            }
            other => panic!("expected window exhaustion, got {other:?}"),
        }
    }
}
