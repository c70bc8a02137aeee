//! Example and test-tower generators.
//!
//! * `filtered_dga` / `random_tower` — a finite-dimensional graded-commutative
//!   algebra on capped generators, filtered by the powers of a differential
//!   ideal: `F_p = I^(p_max - p)`.  Products satisfy
//!   `F_a · F_b ⊆ F_(a+b-p_max)`, one step better than a plain multiplicative
//!   filtration, which is exactly what makes the quotient action and the
//!   clipped stage action compatible at the top column.  The differential
//!   sends odd generators into the even (closed) subalgebra, so its square
//!   vanishes identically, and ideal generators map into the ideal, so every
//!   stage is a subcomplex.
//! * `bockstein` — an integer complex with prescribed homology, basis-scrambled
//!   by unimodular changes so the matrices look generic, in the constant
//!   multiply-by-q tower.
//! * `bicomplex` — the cone of a random chain map `f : B -> A`, filtered by
//!   its two columns.
//!
//! All generators are deterministic per seed and always emit documents that
//! pass verification.

use std::collections::BTreeMap;

use opsseq_core::graded::{bd, Bidegree, BigradedModule, Component, DgModule, GradedMap};
use opsseq_core::linalg::{Integers, Matrix, PrimeField, Ring};
use opsseq_core::operad::{builtin_assoc, builtin_comm, builtin_lie, OperadAlgebra};
use opsseq_core::{AlgebraTower, ExtensionPolicy};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::doc::TowerDocument;

// ---------------------------------------------------------------------------
// weighted monomial algebras

/// One generator of a monomial algebra: vertical degree, ideal weight (`1`
/// marks a generator of the filtering ideal), and exponent cap (odd-degree
/// generators square to zero, so their cap must be one).
#[derive(Clone, Debug)]
pub struct GenSpec {
    pub label: String,
    pub q: i64,
    pub w: i64,
    pub cap: u8,
}

/// A dg algebra presented by generators, filtered by powers of the ideal
/// spanned by the positive-weight generators.  The differential sends each
/// odd generator to a polynomial in the even (closed) ones — so the square
/// of the differential vanishes identically — and raises no monomial out of
/// its ideal power.
#[derive(Clone, Debug)]
pub struct DgaSpec {
    pub gens: Vec<GenSpec>,
    /// `d(gens[g]) = sum of (monomial, coefficient)`; must be empty for
    /// even-degree generators, and every target of an ideal generator must
    /// lie in the ideal.
    pub d: Vec<Vec<(Mono, i64)>>,
}

/// Exponent vector over the generators of a [`DgaSpec`].
pub type Mono = Vec<u8>;

fn mono_q(gens: &[GenSpec], m: &Mono) -> i64 {
    gens.iter().zip(m).map(|(g, &e)| g.q * e as i64).sum()
}

fn mono_w(gens: &[GenSpec], m: &Mono) -> i64 {
    gens.iter().zip(m).map(|(g, &e)| g.w * e as i64).sum()
}

fn mono_label(gens: &[GenSpec], m: &Mono) -> String {
    let parts: Vec<String> = gens
        .iter()
        .zip(m)
        .filter(|(_, &e)| e > 0)
        .map(|(g, &e)| {
            if e == 1 {
                g.label.clone()
            } else {
                format!("{}^{e}", g.label)
            }
        })
        .collect();
    if parts.is_empty() {
        "1".to_string()
    } else {
        parts.join(".")
    }
}

fn enumerate_monomials(gens: &[GenSpec]) -> Vec<Mono> {
    let mut out = vec![vec![0u8; gens.len()]];
    for (k, g) in gens.iter().enumerate() {
        let prev = std::mem::take(&mut out);
        for m in prev {
            for e in 0..=g.cap {
                let mut m2 = m.clone();
                m2[k] = e;
                out.push(m2);
            }
        }
    }
    out.sort();
    out
}

/// Multiply two monomials: `None` on exponent overflow, otherwise the
/// product with the Koszul sign from moving the right letters past the left
/// ones (`-1` for each crossing of odd-degree letters).
fn mono_mul(gens: &[GenSpec], m1: &Mono, m2: &Mono) -> Option<(Mono, i64)> {
    let mut out = vec![0u8; gens.len()];
    for k in 0..gens.len() {
        let e = m1[k] + m2[k];
        if e > gens[k].cap {
            return None;
        }
        out[k] = e;
    }
    let mut crossings = 0i64;
    for i in 0..gens.len() {
        for j in 0..i {
            crossings += m1[i] as i64 * m2[j] as i64 * gens[i].q * gens[j].q;
        }
    }
    Some((out, if crossings % 2 == 0 { 1 } else { -1 }))
}

/// The differential on a monomial, by the Leibniz rule over the odd letters.
fn mono_d(spec: &DgaSpec, m: &Mono) -> Vec<(Mono, i64)> {
    let gens = &spec.gens;
    let mut out: BTreeMap<Mono, i64> = BTreeMap::new();
    for (g, table) in spec.d.iter().enumerate() {
        if m[g] == 0 || table.is_empty() {
            continue;
        }
        // odd letters have exponent at most one; the Koszul prefix counts
        // the odd letters strictly before position g
        let prefix: i64 = (0..g).map(|k| m[k] as i64 * gens[k].q).sum();
        let sign = if prefix % 2 == 0 { 1 } else { -1 };
        let mut rest = m.clone();
        rest[g] = 0;
        for (target, coeff) in table {
            if let Some((prod, s2)) = mono_mul(gens, &rest, target) {
                *out.entry(prod).or_insert(0) += sign * s2 * coeff;
            }
        }
    }
    out.into_iter().filter(|(_, c)| *c != 0).collect()
}

/// Basis of the stage `F_p = I^(p_max - p)` in the given vertical degree:
/// every monomial with ideal weight at least `p_max - p`.
fn stage_basis(gens: &[GenSpec], monos: &[Mono], p_max: i64, p: i64, q: i64) -> Vec<usize> {
    monos
        .iter()
        .enumerate()
        .filter(|(_, m)| mono_w(gens, m) >= p_max - p && mono_q(gens, m) == q)
        .map(|(k, _)| k)
        .collect()
}

/// Whether a monomial of ideal weight `w` represents a basis class of the
/// quotient `C_p = F_p / F_(p-1)`: weight exactly `p_max - p`, except at the
/// bottom stage, which is all of `F_0`.
fn quotient_member(p_max: i64, p: i64, w: i64) -> bool {
    if p == 0 {
        w >= p_max
    } else {
        w == p_max - p
    }
}

fn quotient_basis(gens: &[GenSpec], monos: &[Mono], p_max: i64, p: i64, q: i64) -> Vec<usize> {
    monos
        .iter()
        .enumerate()
        .filter(|(_, m)| quotient_member(p_max, p, mono_w(gens, m)) && mono_q(gens, m) == q)
        .map(|(k, _)| k)
        .collect()
}

/// Build the ideal-power tower of a monomial dg algebra over `ring`.
pub fn monomial_tower<R: Ring>(
    ring: &R,
    spec: &DgaSpec,
    assoc: bool,
) -> Result<AlgebraTower<R>, String> {
    let gens = &spec.gens;
    for (g, table) in spec.d.iter().enumerate() {
        if table.is_empty() {
            continue;
        }
        if gens[g].q % 2 == 0 {
            return Err(format!("generator `{}` is even but has a differential", gens[g].label));
        }
        for (m, _) in table {
            if mono_q(gens, m) != gens[g].q - 1 {
                return Err(format!("differential of `{}` is not of degree -1", gens[g].label));
            }
            if mono_w(gens, m) < gens[g].w {
                return Err(format!(
                    "differential of `{}` leaves its ideal power",
                    gens[g].label
                ));
            }
            if m.iter().enumerate().any(|(k, &e)| e > 0 && !spec.d[k].is_empty()) {
                return Err(format!(
                    "differential of `{}` hits a non-closed generator",
                    gens[g].label
                ));
            }
        }
    }

    let monos = enumerate_monomials(gens);
    let p_max = monos.iter().map(|m| mono_w(gens, m)).max().unwrap_or(0);
    let qs: Vec<i64> = {
        let mut v: Vec<i64> = monos.iter().map(|m| mono_q(gens, m)).collect();
        v.sort_unstable();
        v.dedup();
        v
    };

    let op = if assoc {
        builtin_assoc(ring, 2)
    } else {
        builtin_comm(ring, 2)
    };

    // the A side: stage p holds the ideal power I^(p_max - p)
    let mut am = BigradedModule::new(ring);
    for p in 0..=p_max {
        for &q in &qs {
            let basis = stage_basis(gens, &monos, p_max, p, q);
            if basis.is_empty() {
                continue;
            }
            let labels = basis.iter().map(|&k| mono_label(gens, &monos[k])).collect();
            am.insert(bd(p, q), Component::free(ring, labels));
        }
    }
    let mut da = GradedMap::new("d", bd(0, -1));
    for p in 0..=p_max {
        for &q in &qs {
            let src = stage_basis(gens, &monos, p_max, p, q);
            let tgt = stage_basis(gens, &monos, p_max, p, q - 1);
            if src.is_empty() || tgt.is_empty() {
                continue;
            }
            let mut blk = Matrix::zero(ring, tgt.len(), src.len());
            for (c, &sk) in src.iter().enumerate() {
                for (m, coeff) in mono_d(spec, &monos[sk]) {
                    let r = tgt
                        .iter()
                        .position(|&tk| monos[tk] == m)
                        .expect("the differential preserves each ideal power");
                    blk.set(r, c, ring.from_i64(coeff));
                }
            }
            da.set_block(bd(p, q), blk);
        }
    }
    let mut a = OperadAlgebra::new(
        op.clone(),
        DgModule::new(am, da).map_err(|e| e.to_string())?,
    );
    a.set_column_clip(Some(p_max)).map_err(|e| e.to_string())?;
    a.set_unit_identity().map_err(|e| e.to_string())?;

    // the C side: stage p modulo stage p-1 keeps the weight-exactly
    // monomials (all of F_0 at the bottom), which form a free module
    let mut cm = BigradedModule::new(ring);
    for p in 0..=p_max {
        for &q in &qs {
            let basis = quotient_basis(gens, &monos, p_max, p, q);
            if basis.is_empty() {
                continue;
            }
            let labels = basis
                .iter()
                .map(|&k| format!("{}~", mono_label(gens, &monos[k])))
                .collect();
            cm.insert(bd(p, q), Component::free(ring, labels));
        }
    }
    let mut dc = GradedMap::new("d", bd(0, -1));
    for p in 0..=p_max {
        for &q in &qs {
            let src = quotient_basis(gens, &monos, p_max, p, q);
            let tgt = quotient_basis(gens, &monos, p_max, p, q - 1);
            if src.is_empty() || tgt.is_empty() {
                continue;
            }
            let mut blk = Matrix::zero(ring, tgt.len(), src.len());
            for (c, &sk) in src.iter().enumerate() {
                for (m, coeff) in mono_d(spec, &monos[sk]) {
                    if let Some(r) = tgt.iter().position(|&tk| monos[tk] == m) {
                        blk.set(r, c, ring.from_i64(coeff));
                    }
                }
            }
            dc.set_block(bd(p, q), blk);
        }
    }
    let mut c = OperadAlgebra::new(op, DgModule::new(cm, dc).map_err(|e| e.to_string())?);
    c.set_column_clip(Some(p_max)).map_err(|e| e.to_string())?;
    c.set_unit_identity().map_err(|e| e.to_string())?;

    // binary products on both sides; for the associative operad both
    // ordering operations act by the same block on a commutative carrier
    let idx_range = if assoc { 2 } else { 1 };
    for p1 in 0..=p_max {
        for p2 in 0..=p_max {
            for &q1 in &qs {
                for &q2 in &qs {
                    let b1 = stage_basis(gens, &monos, p_max, p1, q1);
                    let b2 = stage_basis(gens, &monos, p_max, p2, q2);
                    let po = (p1 + p2).min(p_max);
                    let bo = stage_basis(gens, &monos, p_max, po, q1 + q2);
                    if b1.is_empty() || b2.is_empty() || bo.is_empty() {
                        continue;
                    }
                    let mut blk = Matrix::zero(ring, bo.len(), b1.len() * b2.len());
                    let mut nonzero = false;
                    for (c1, &k1) in b1.iter().enumerate() {
                        for (c2, &k2) in b2.iter().enumerate() {
                            if let Some((m, s)) = mono_mul(gens, &monos[k1], &monos[k2]) {
                                let r = bo
                                    .iter()
                                    .position(|&tk| monos[tk] == m)
                                    .expect("ideal weights add under multiplication");
                                blk.set(r, c1 * b2.len() + c2, ring.from_i64(s));
                                nonzero = true;
                            }
                        }
                    }
                    if !nonzero {
                        continue;
                    }
                    for idx in 0..idx_range {
                        a.set_gamma(2, 0, idx, vec![bd(p1, q1), bd(p2, q2)], blk.clone())
                            .map_err(|e| e.to_string())?;
                    }

                    let e1 = quotient_basis(gens, &monos, p_max, p1, q1);
                    let e2 = quotient_basis(gens, &monos, p_max, p2, q2);
                    let eo = quotient_basis(gens, &monos, p_max, po, q1 + q2);
                    if e1.is_empty() || e2.is_empty() || eo.is_empty() {
                        continue;
                    }
                    let mut cblk = Matrix::zero(ring, eo.len(), e1.len() * e2.len());
                    let mut cnz = false;
                    for (c1, &k1) in e1.iter().enumerate() {
                        for (c2, &k2) in e2.iter().enumerate() {
                            if let Some((m, s)) = mono_mul(gens, &monos[k1], &monos[k2]) {
                                if let Some(r) = eo.iter().position(|&tk| monos[tk] == m) {
                                    cblk.set(r, c1 * e2.len() + c2, ring.from_i64(s));
                                    cnz = true;
                                }
                            }
                        }
                    }
                    if cnz {
                        for idx in 0..idx_range {
                            c.set_gamma(2, 0, idx, vec![bd(p1, q1), bd(p2, q2)], cblk.clone())
                                .map_err(|e| e.to_string())?;
                        }
                    }
                }
            }
        }
    }

    // stage inclusions and stage quotients
    let mut i = GradedMap::new("i", bd(1, 0));
    for p in 0..p_max {
        for &q in &qs {
            let src = stage_basis(gens, &monos, p_max, p, q);
            let tgt = stage_basis(gens, &monos, p_max, p + 1, q);
            if src.is_empty() {
                continue;
            }
            let mut blk = Matrix::zero(ring, tgt.len(), src.len());
            for (c, sk) in src.iter().enumerate() {
                let r = tgt.iter().position(|tk| tk == sk).unwrap();
                blk.set(r, c, ring.one());
            }
            i.set_block(bd(p, q), blk);
        }
    }
    let mut j = GradedMap::new("j", bd(0, 0));
    for p in 0..=p_max {
        for &q in &qs {
            let src = stage_basis(gens, &monos, p_max, p, q);
            let tgt = quotient_basis(gens, &monos, p_max, p, q);
            if src.is_empty() || tgt.is_empty() {
                continue;
            }
            let mut blk = Matrix::zero(ring, tgt.len(), src.len());
            for (c, sk) in src.iter().enumerate() {
                if let Some(r) = tgt.iter().position(|tk| tk == sk) {
                    blk.set(r, c, ring.one());
                }
            }
            j.set_block(bd(p, q), blk);
        }
    }

    AlgebraTower::new(a, c, i, j, None, ExtensionPolicy::ConstantAbove, 0, p_max)
        .map_err(|e| e.to_string())
}

/// A constant tower of height `p_max` on a monomial algebra with zero
/// differential: every stage is the whole algebra, the stage maps are
/// identities, and the only nonzero stage quotient is the bottom one.
pub fn constant_tower<R: Ring>(
    ring: &R,
    gens: &[GenSpec],
    assoc: bool,
    p_max: i64,
) -> Result<AlgebraTower<R>, String> {
    let monos = enumerate_monomials(gens);
    let qs: Vec<i64> = {
        let mut v: Vec<i64> = monos.iter().map(|m| mono_q(gens, m)).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let full = |q: i64| -> Vec<usize> {
        monos
            .iter()
            .enumerate()
            .filter(|(_, m)| mono_q(gens, m) == q)
            .map(|(k, _)| k)
            .collect()
    };
    let op = if assoc {
        builtin_assoc(ring, 2)
    } else {
        builtin_comm(ring, 2)
    };

    let mut am = BigradedModule::new(ring);
    for p in 0..=p_max {
        for &q in &qs {
            let basis = full(q);
            if basis.is_empty() {
                continue;
            }
            let labels = basis.iter().map(|&k| mono_label(gens, &monos[k])).collect();
            am.insert(bd(p, q), Component::free(ring, labels));
        }
    }
    let da = GradedMap::new("d", bd(0, -1));
    let mut a = OperadAlgebra::new(
        op.clone(),
        DgModule::new(am, da).map_err(|e| e.to_string())?,
    );
    a.set_column_clip(Some(p_max)).map_err(|e| e.to_string())?;
    a.set_unit_identity().map_err(|e| e.to_string())?;

    let mut cm = BigradedModule::new(ring);
    for &q in &qs {
        let basis = full(q);
        if basis.is_empty() {
            continue;
        }
        let labels = basis
            .iter()
            .map(|&k| format!("{}~", mono_label(gens, &monos[k])))
            .collect();
        cm.insert(bd(0, q), Component::free(ring, labels));
    }
    let dc = GradedMap::new("d", bd(0, -1));
    let mut c = OperadAlgebra::new(op, DgModule::new(cm, dc).map_err(|e| e.to_string())?);
    c.set_column_clip(Some(p_max)).map_err(|e| e.to_string())?;
    c.set_unit_identity().map_err(|e| e.to_string())?;

    let idx_range = if assoc { 2 } else { 1 };
    for p1 in 0..=p_max {
        for p2 in 0..=p_max {
            for &q1 in &qs {
                for &q2 in &qs {
                    let b1 = full(q1);
                    let b2 = full(q2);
                    let po = (p1 + p2).min(p_max);
                    let bo = full(q1 + q2);
                    if b1.is_empty() || b2.is_empty() || bo.is_empty() {
                        continue;
                    }
                    let mut blk = Matrix::zero(ring, bo.len(), b1.len() * b2.len());
                    let mut nonzero = false;
                    for (c1, &k1) in b1.iter().enumerate() {
                        for (c2, &k2) in b2.iter().enumerate() {
                            if let Some((m, s)) = mono_mul(gens, &monos[k1], &monos[k2]) {
                                let r = bo.iter().position(|&tk| monos[tk] == m).unwrap();
                                blk.set(r, c1 * b2.len() + c2, ring.from_i64(s));
                                nonzero = true;
                            }
                        }
                    }
                    if !nonzero {
                        continue;
                    }
                    for idx in 0..idx_range {
                        a.set_gamma(2, 0, idx, vec![bd(p1, q1), bd(p2, q2)], blk.clone())
                            .map_err(|e| e.to_string())?;
                        if po == 0 {
                            c.set_gamma(2, 0, idx, vec![bd(p1, q1), bd(p2, q2)], blk.clone())
                                .map_err(|e| e.to_string())?;
                        }
                    }
                }
            }
        }
    }

    let mut i = GradedMap::new("i", bd(1, 0));
    for p in 0..p_max {
        for &q in &qs {
            let n = full(q).len();
            if n > 0 {
                i.set_block(bd(p, q), Matrix::identity(ring, n));
            }
        }
    }
    let mut j = GradedMap::new("j", bd(0, 0));
    for &q in &qs {
        let n = full(q).len();
        if n > 0 {
            j.set_block(bd(0, q), Matrix::identity(ring, n));
        }
    }

    AlgebraTower::new(a, c, i, j, None, ExtensionPolicy::ConstantAbove, 0, p_max)
        .map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// seeded sampling

fn sample_dga(rng: &mut ChaCha8Rng) -> DgaSpec {
    loop {
        let n_even = rng.random_range(1..=2usize);
        let n_odd = rng.random_range(1..=2usize);
        let mut gens = Vec::new();
        for k in 0..n_even {
            gens.push(GenSpec {
                label: format!("x{k}"),
                q: [0, 2][rng.random_range(0..2usize)],
                w: rng.random_range(0..=1),
                cap: rng.random_range(1..=2),
            });
        }
        for k in 0..n_odd {
            gens.push(GenSpec {
                label: format!("e{k}"),
                q: [1, 1, 3][rng.random_range(0..3usize)],
                w: rng.random_range(0..=1),
                cap: 1,
            });
        }
        let monos = enumerate_monomials(&gens);
        let p_max: i64 = monos.iter().map(|m| mono_w(&gens, m)).max().unwrap_or(0);
        let q_max: i64 = monos.iter().map(|m| mono_q(&gens, m)).max().unwrap_or(0);
        if p_max == 0 || p_max > 4 || q_max > 6 {
            continue;
        }
        let mut rank_ok = true;
        for q in 0..=q_max {
            if stage_basis(&gens, &monos, p_max, p_max, q).len() > 4 {
                rank_ok = false;
                break;
            }
        }
        if !rank_ok {
            continue;
        }
        // differentials: each odd generator maps into the even subalgebra
        // without leaving its ideal power
        let even_monos: Vec<Mono> = monos
            .iter()
            .filter(|m| gens.iter().zip(m.iter()).all(|(g, &e)| e == 0 || g.q % 2 == 0))
            .cloned()
            .collect();
        let mut d = vec![Vec::new(); gens.len()];
        let mut has_d = false;
        for (g, spec) in gens.iter().enumerate() {
            if spec.q % 2 == 0 {
                continue;
            }
            let mut table = Vec::new();
            for m in &even_monos {
                if mono_q(&gens, m) == spec.q - 1 && mono_w(&gens, m) >= spec.w {
                    let coeff = [0, 0, 1, 2, -1][rng.random_range(0..5usize)];
                    if coeff != 0 {
                        table.push((m.clone(), coeff));
                        has_d = true;
                    }
                }
            }
            d[g] = table;
        }
        if !has_d && rng.random_range(0..4usize) > 0 {
            continue; // bias toward towers with nonzero differentials
        }
        return DgaSpec { gens, d };
    }
}

/// A commutative dg algebra over the integers, filtered by the powers of a
/// differential ideal.
pub fn filtered_dga(seed: u64) -> TowerDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf11e_d6a5);
    let spec = sample_dga(&mut rng);
    let t = monomial_tower(&Integers, &spec, false).expect("constructed to satisfy");
    TowerDocument::from_tower(&t)
}

/// A seeded verified tower over a small prime field, commutative or
/// associative.
pub fn random_tower(seed: u64) -> TowerDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a9d_0b5e);
    let spec = sample_dga(&mut rng);
    let p = if rng.random_range(0..2usize) == 0 { 2 } else { 5 };
    let assoc = rng.random_range(0..2usize) == 1;
    let ring = PrimeField::new(p).unwrap();
    let t = monomial_tower(&ring, &spec, assoc).expect("constructed to satisfy");
    TowerDocument::from_tower(&t)
}

/// The sampled spec behind [`random_tower`], for callers that need to build
/// both the commutative and the associative variant of the same algebra.
pub fn random_tower_spec(seed: u64) -> (DgaSpec, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a9d_0b5e);
    let spec = sample_dga(&mut rng);
    let p = if rng.random_range(0..2usize) == 0 { 2 } else { 5 };
    (spec, p)
}

// ---------------------------------------------------------------------------
// towers with prescribed integral homology

/// Prescription for one vertical degree: a free rank and a list of torsion
/// exponents `s` (contributing `Z/q^s`).
#[derive(Clone, Debug, Default)]
pub struct DegreeSpec {
    pub free: usize,
    pub torsion: Vec<u32>,
}

/// An integer complex with `H_n = Z^free ⊕ ⊕ Z/q^s`, built from elementary
/// pieces and then conjugated by random unimodular matrices so the
/// differentials look generic while the homology stays exactly as
/// prescribed.
#[derive(Clone, Debug)]
pub struct ScrambledComplex {
    /// Rank of the chain group per degree.
    pub ranks: BTreeMap<i64, usize>,
    /// `d` block per source degree (target is one lower).
    pub d: BTreeMap<i64, Matrix<Integers>>,
    /// The prescription the complex was built from.
    pub spec: BTreeMap<i64, DegreeSpec>,
}

fn random_unimodular(rng: &mut ChaCha8Rng, n: usize) -> (Matrix<Integers>, Matrix<Integers>) {
    let z = Integers;
    let mut u = Matrix::identity(&z, n);
    let mut uinv = Matrix::identity(&z, n);
    if n < 2 {
        return (u, uinv);
    }
    for _ in 0..(2 * n) {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n);
        if i == j {
            j = (j + 1) % n;
        }
        let c = [1i64, -1, 2][rng.random_range(0..3usize)];
        // u <- E u, uinv <- uinv E^{-1} with E = I + c e_{ij}
        let mut e = Matrix::identity(&z, n);
        e.set(i, j, z.from_i64(c));
        let mut einv = Matrix::identity(&z, n);
        einv.set(i, j, z.from_i64(-c));
        u = e.mul(&u);
        uinv = uinv.mul(&einv);
    }
    (u, uinv)
}

/// Build a complex with the prescribed homology over `Z`, scrambled.
pub fn scrambled_complex(
    rng: &mut ChaCha8Rng,
    q: u64,
    spec: &BTreeMap<i64, DegreeSpec>,
) -> ScrambledComplex {
    let z = Integers;
    // chain rank per degree: free generators, torsion bottoms, and torsion
    // tops from one degree below
    let mut ranks: BTreeMap<i64, usize> = BTreeMap::new();
    let deg_lo = spec.keys().next().copied().unwrap_or(0);
    let deg_hi = spec.keys().next_back().copied().unwrap_or(0) + 1;
    for n in deg_lo..=deg_hi {
        let own = spec.get(&n).map_or(0, |s| s.free + s.torsion.len());
        let tops = spec.get(&(n - 1)).map_or(0, |s| s.torsion.len());
        let r = own + tops;
        if r > 0 {
            ranks.insert(n, r);
        }
    }
    // model differential: each torsion top in degree n+1 hits its bottom in
    // degree n with coefficient q^s
    let mut d: BTreeMap<i64, Matrix<Integers>> = BTreeMap::new();
    for (&n, s) in spec {
        if s.torsion.is_empty() {
            continue;
        }
        let src_rank = ranks[&(n + 1)];
        let tgt_rank = ranks[&n];
        let own_below = spec.get(&(n + 1)).map_or(0, |x| x.free + x.torsion.len());
        let mut blk = Matrix::zero(&z, tgt_rank, src_rank);
        for (k, &e) in s.torsion.iter().enumerate() {
            // bottoms sit after the free generators of degree n
            blk.set(s.free + k, own_below + k, z.from_i64((q as i64).pow(e)));
        }
        d.insert(n + 1, blk);
    }
    // scramble
    let mut us: BTreeMap<i64, (Matrix<Integers>, Matrix<Integers>)> = BTreeMap::new();
    for (&n, &r) in &ranks {
        us.insert(n, random_unimodular(rng, r));
    }
    let mut ds = BTreeMap::new();
    for (&n, blk) in &d {
        let (u_tgt, _) = &us[&(n - 1)];
        let (_, uinv_src) = &us[&n];
        ds.insert(n, u_tgt.mul(blk).mul(uinv_src));
    }
    ScrambledComplex {
        ranks,
        d: ds,
        spec: spec.clone(),
    }
}

/// The constant multiply-by-`q` tower on a scrambled integer complex: the
/// bottom quotient is the bottom stage itself, higher quotients are the
/// mod-`q` reductions.  Products are trivial apart from the operad unit.
/// The window height is `s_max + 1` so that every prescribed torsion class
/// can die within reach of the window.
pub fn bockstein_tower(q: u64, x: &ScrambledComplex) -> AlgebraTower<Integers> {
    let z = Integers;
    let s_max = x
        .spec
        .values()
        .flat_map(|s| s.torsion.iter().copied())
        .max()
        .unwrap_or(1) as i64;
    let p_max = s_max + 1;
    let op = builtin_comm(&z, 2);

    let mut am = BigradedModule::new(&z);
    for (&n, &r) in &x.ranks {
        for p in 0..=p_max {
            let labels = (0..r).map(|k| format!("x{n}.{k}")).collect();
            am.insert(bd(p, n), Component::free(&z, labels));
        }
    }
    let mut da = GradedMap::new("d", bd(0, -1));
    for (&n, blk) in &x.d {
        for p in 0..=p_max {
            da.set_block(bd(p, n), blk.clone());
        }
    }
    let mut a = OperadAlgebra::new(op.clone(), DgModule::new(am, da).unwrap());
    a.set_column_clip(Some(p_max)).unwrap();
    a.set_unit_identity().unwrap();

    let mut cm = BigradedModule::new(&z);
    for (&n, &r) in &x.ranks {
        // bottom quotient: C_0 = A_0 itself (nothing below the window)
        let labels = (0..r).map(|k| format!("x{n}.{k}~")).collect();
        cm.insert(bd(0, n), Component::free(&z, labels));
        for p in 1..=p_max {
            let labels = (0..r).map(|k| format!("x{n}.{k}~")).collect();
            let rels = Matrix::from_fn(&z, r, r, |i, j| {
                if i == j {
                    z.from_i64(q as i64)
                } else {
                    z.zero()
                }
            });
            cm.insert(bd(p, n), Component::presented(labels, rels));
        }
    }
    let mut dc = GradedMap::new("d", bd(0, -1));
    for (&n, blk) in &x.d {
        for p in 0..=p_max {
            dc.set_block(bd(p, n), blk.clone());
        }
    }
    let mut c = OperadAlgebra::new(op, DgModule::new(cm, dc).unwrap());
    c.set_column_clip(Some(p_max)).unwrap();
    c.set_unit_identity().unwrap();

    let mut i = GradedMap::new("i", bd(1, 0));
    let mut top = GradedMap::new("top", bd(0, 0));
    let mut j = GradedMap::new("j", bd(0, 0));
    for (&n, &r) in &x.ranks {
        let qid = Matrix::from_fn(&z, r, r, |a_, b_| {
            if a_ == b_ {
                z.from_i64(q as i64)
            } else {
                z.zero()
            }
        });
        for p in 0..p_max {
            i.set_block(bd(p, n), qid.clone());
        }
        top.set_block(bd(p_max, n), qid.clone());
        for p in 0..=p_max {
            j.set_block(bd(p, n), Matrix::identity(&z, r));
        }
    }

    AlgebraTower::new(a, c, i, j, Some(top), ExtensionPolicy::RepeatLastMap, 0, p_max).unwrap()
}

/// Sample a homology prescription and return the tower document together
/// with the prescription (the oracle for page dimensions).
pub fn bockstein_sampled(
    q: u64,
    seed: u64,
) -> (TowerDocument, BTreeMap<i64, DegreeSpec>, ScrambledComplex) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb0c5_731a ^ q);
    let mut spec: BTreeMap<i64, DegreeSpec> = BTreeMap::new();
    for n in 0..3i64 {
        let free = rng.random_range(0..=1usize);
        let mut torsion = Vec::new();
        for _ in 0..rng.random_range(0..=2usize) {
            torsion.push(rng.random_range(1..=4u32));
        }
        if free > 0 || !torsion.is_empty() {
            spec.insert(n, DegreeSpec { free, torsion });
        }
    }
    if spec.is_empty() {
        spec.insert(
            0,
            DegreeSpec {
                free: 1,
                torsion: vec![2],
            },
        );
    }
    let x = scrambled_complex(&mut rng, q, &spec);
    let t = bockstein_tower(q, &x);
    (TowerDocument::from_tower(&t), spec, x)
}

/// The document form of a prescribed Bockstein tower.
pub fn bockstein(q: u64, spec: &BTreeMap<i64, DegreeSpec>, seed: u64) -> TowerDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb0c5_731a ^ q);
    let x = scrambled_complex(&mut rng, q, spec);
    TowerDocument::from_tower(&bockstein_tower(q, &x))
}

// ---------------------------------------------------------------------------
// bicomplexes (cones of chain maps)

/// The raw data of a two-column bicomplex: two scrambled complexes and a
/// chain map between them.
#[derive(Clone, Debug)]
pub struct BicomplexParts {
    pub a: ScrambledComplex,
    pub b: ScrambledComplex,
    /// `f : B_n -> A_n` blocks by degree.
    pub f: BTreeMap<i64, Matrix<Integers>>,
}

/// Sample two small complexes and a chain map; the map is assembled from
/// elementary pieces on the model bases and transported through the
/// scrambles, so it is a chain map exactly.
pub fn bicomplex_parts(seed: u64) -> BicomplexParts {
    let z = Integers;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1c0_3eed);
    let q = if rng.random_range(0..2usize) == 0 { 2 } else { 3 };
    let sample_spec = |rng: &mut ChaCha8Rng| -> BTreeMap<i64, DegreeSpec> {
        let mut spec = BTreeMap::new();
        for n in 0..2i64 {
            let free = rng.random_range(0..=1usize);
            let mut torsion = Vec::new();
            if rng.random_range(0..2usize) == 0 {
                torsion.push(rng.random_range(1..=2u32));
            }
            if free > 0 || !torsion.is_empty() {
                spec.insert(n, DegreeSpec { free, torsion });
            }
        }
        if spec.is_empty() {
            spec.insert(0, DegreeSpec { free: 1, torsion: vec![] });
        }
        spec
    };
    let spec_a = sample_spec(&mut rng);
    let spec_b = sample_spec(&mut rng);

    // build the models and remember the scrambles
    let mut rng_a = ChaCha8Rng::seed_from_u64(seed ^ 0xaaaa_0001);
    let mut rng_b = ChaCha8Rng::seed_from_u64(seed ^ 0xbbbb_0002);
    let a = scrambled_complex(&mut rng_a, q, &spec_a);
    let b = scrambled_complex(&mut rng_b, q, &spec_b);
    // reconstruct the same unimodular pairs by replaying the generators
    let mut rng_a = ChaCha8Rng::seed_from_u64(seed ^ 0xaaaa_0001);
    let mut rng_b = ChaCha8Rng::seed_from_u64(seed ^ 0xbbbb_0002);
    let us_a = replay_scrambles(&mut rng_a, &a);
    let us_b = replay_scrambles(&mut rng_b, &b);

    // elementary chain maps on the models
    let layout = |spec: &BTreeMap<i64, DegreeSpec>, n: i64| -> (usize, usize, usize) {
        // (free count, bottom count, top count) in degree n
        let own = spec.get(&n).map(|s| (s.free, s.torsion.len())).unwrap_or((0, 0));
        let tops = spec.get(&(n - 1)).map_or(0, |s| s.torsion.len());
        (own.0, own.1, tops)
    };
    let mut f_model: BTreeMap<i64, Matrix<Integers>> = BTreeMap::new();
    let degs: Vec<i64> = a
        .ranks
        .keys()
        .chain(b.ranks.keys())
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    for &n in &degs {
        let ra = a.ranks.get(&n).copied().unwrap_or(0);
        let rb = b.ranks.get(&n).copied().unwrap_or(0);
        if ra == 0 || rb == 0 {
            continue;
        }
        f_model.insert(n, Matrix::zero(&z, ra, rb));
    }
    // free(B,n) -> free(A,n) and free(B,n) -> bottom(A,n)
    for &n in &degs {
        let (fa, ba, _) = layout(&spec_a, n);
        let (fb, _, _) = layout(&spec_b, n);
        if let Some(m) = f_model.get_mut(&n) {
            for kb in 0..fb {
                for ka in 0..fa {
                    m.set(ka, kb, z.from_i64(rng.random_range(-1..=1)));
                }
                for ka in 0..ba {
                    m.set(fa + ka, kb, z.from_i64(rng.random_range(-1..=1)));
                }
            }
        }
    }
    // torsion pair (B) -> torsion pair (A), degree-matched: top over bottom
    // with exponent-balancing scalars so the squares commute
    for (&n, sb) in &spec_b {
        let Some(sa) = spec_a.get(&n) else { continue };
        for (kb, &eb) in sb.torsion.iter().enumerate() {
            for (ka, &ea) in sa.torsion.iter().enumerate() {
                let c = rng.random_range(-1..=1i64);
                if c == 0 {
                    continue;
                }
                let (fa, _, _) = layout(&spec_a, n);
                let (fb, _, _) = layout(&spec_b, n);
                let (fa1, ba1, _) = layout(&spec_a, n + 1);
                let (fb1, bb1, _) = layout(&spec_b, n + 1);
                let (c_top, c_bot) = if eb >= ea {
                    (c * (q as i64).pow(eb - ea), c)
                } else {
                    (c, c * (q as i64).pow(ea - eb))
                };
                if let Some(m) = f_model.get_mut(&(n + 1)) {
                    m.set(fa1 + ba1 + ka, fb1 + bb1 + kb, z.from_i64(c_top));
                }
                if let Some(m) = f_model.get_mut(&n) {
                    m.set(fa + ka, fb + kb, z.from_i64(c_bot));
                }
            }
        }
    }
    // transport through the scrambles: f' = U_A f U_B^{-1}
    let mut f = BTreeMap::new();
    for (&n, m) in &f_model {
        let ua = &us_a[&n].0;
        let ubinv = &us_b[&n].1;
        let scr = ua.mul(m).mul(ubinv);
        if !scr.is_zero() {
            f.insert(n, scr);
        }
    }
    BicomplexParts { a, b, f }
}

fn replay_scrambles(
    rng: &mut ChaCha8Rng,
    x: &ScrambledComplex,
) -> BTreeMap<i64, (Matrix<Integers>, Matrix<Integers>)> {
    let mut us = BTreeMap::new();
    for (&n, &r) in &x.ranks {
        us.insert(n, random_unimodular(rng, r));
    }
    us
}

/// The two-column tower of the cone of `f : B -> A`: stage 0 is `A` with its
/// own differential, stage 1 is the cone, and the quotients are `A` at the
/// bottom and `B` shifted at the top.
pub fn bicomplex_tower(parts: &BicomplexParts) -> AlgebraTower<Integers> {
    let z = Integers;
    let op = builtin_comm(&z, 2);
    let ra = |n: i64| parts.a.ranks.get(&n).copied().unwrap_or(0);
    let rb = |n: i64| parts.b.ranks.get(&n).copied().unwrap_or(0);
    let da = |n: i64| -> Matrix<Integers> {
        parts
            .a
            .d
            .get(&n)
            .cloned()
            .unwrap_or_else(|| Matrix::zero(&z, ra(n - 1), ra(n)))
    };
    let db = |n: i64| -> Matrix<Integers> {
        parts
            .b
            .d
            .get(&n)
            .cloned()
            .unwrap_or_else(|| Matrix::zero(&z, rb(n - 1), rb(n)))
    };
    let fblk = |n: i64| -> Matrix<Integers> {
        parts
            .f
            .get(&n)
            .cloned()
            .unwrap_or_else(|| Matrix::zero(&z, ra(n), rb(n)))
    };
    let degs: Vec<i64> = {
        let mut v: Vec<i64> = parts
            .a
            .ranks
            .keys()
            .copied()
            .chain(parts.b.ranks.keys().map(|&n| n + 1))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };

    let mut am = BigradedModule::new(&z);
    for &n in &degs {
        if ra(n) > 0 {
            let labels = (0..ra(n)).map(|k| format!("a{n}.{k}")).collect();
            am.insert(bd(0, n), Component::free(&z, labels));
        }
        let rtot = ra(n) + rb(n - 1);
        if rtot > 0 {
            let labels = (0..ra(n))
                .map(|k| format!("a{n}.{k}"))
                .chain((0..rb(n - 1)).map(|k| format!("b{}.{k}", n - 1)))
                .collect();
            am.insert(bd(1, n), Component::free(&z, labels));
        }
    }
    let mut dmap = GradedMap::new("d", bd(0, -1));
    for &n in &degs {
        if ra(n) > 0 && ra(n - 1) > 0 {
            dmap.set_block(bd(0, n), da(n));
        }
        let (src, tgt) = (ra(n) + rb(n - 1), ra(n - 1) + rb(n - 2));
        if src > 0 && tgt > 0 {
            // cone differential: D(a, b) = (d a + f b, -d b)
            let dan = da(n);
            let fb = fblk(n - 1);
            let dbn = db(n - 1);
            let blk = Matrix::from_fn(&z, tgt, src, |r, c| {
                if r < ra(n - 1) {
                    if c < ra(n) {
                        dan.at(r, c).clone()
                    } else {
                        fb.at(r, c - ra(n)).clone()
                    }
                } else if c < ra(n) {
                    z.zero()
                } else {
                    z.neg(dbn.at(r - ra(n - 1), c - ra(n)))
                }
            });
            dmap.set_block(bd(1, n), blk);
        }
    }
    let mut a = OperadAlgebra::new(op.clone(), DgModule::new(am, dmap).unwrap());
    a.set_column_clip(Some(1)).unwrap();
    a.set_unit_identity().unwrap();

    let mut cm = BigradedModule::new(&z);
    for &n in &degs {
        if ra(n) > 0 {
            let labels = (0..ra(n)).map(|k| format!("a{n}.{k}~")).collect();
            cm.insert(bd(0, n), Component::free(&z, labels));
        }
        if rb(n - 1) > 0 {
            let labels = (0..rb(n - 1)).map(|k| format!("b{}.{k}~", n - 1)).collect();
            cm.insert(bd(1, n), Component::free(&z, labels));
        }
    }
    let mut dc = GradedMap::new("d", bd(0, -1));
    for &n in &degs {
        if ra(n) > 0 && ra(n - 1) > 0 {
            dc.set_block(bd(0, n), da(n));
        }
        if rb(n - 1) > 0 && rb(n - 2) > 0 {
            let dbn = db(n - 1);
            dc.set_block(
                bd(1, n),
                Matrix::from_fn(&z, rb(n - 2), rb(n - 1), |r, c| z.neg(dbn.at(r, c))),
            );
        }
    }
    let mut c = OperadAlgebra::new(op, DgModule::new(cm, dc).unwrap());
    c.set_column_clip(Some(1)).unwrap();
    c.set_unit_identity().unwrap();

    let mut i = GradedMap::new("i", bd(1, 0));
    for &n in &degs {
        if ra(n) == 0 {
            continue;
        }
        let rows = ra(n) + rb(n - 1);
        let blk = Matrix::from_fn(&z, rows, ra(n), |r, c| {
            if r == c {
                z.one()
            } else {
                z.zero()
            }
        });
        i.set_block(bd(0, n), blk);
    }
    let mut j = GradedMap::new("j", bd(0, 0));
    for &n in &degs {
        if ra(n) > 0 {
            j.set_block(bd(0, n), Matrix::identity(&z, ra(n)));
        }
        if rb(n - 1) > 0 {
            let cols = ra(n) + rb(n - 1);
            let blk = Matrix::from_fn(&z, rb(n - 1), cols, |r, c| {
                if c == ra(n) + r {
                    z.one()
                } else {
                    z.zero()
                }
            });
            j.set_block(bd(1, n), blk);
        }
    }

    AlgebraTower::new(a, c, i, j, None, ExtensionPolicy::ConstantAbove, 0, 1).unwrap()
}

/// Document form of a seeded two-column bicomplex.
pub fn bicomplex(seed: u64) -> TowerDocument {
    TowerDocument::from_tower(&bicomplex_tower(&bicomplex_parts(seed)))
}

// ---------------------------------------------------------------------------
// fixtures and mutations

/// A graded Lie algebra fixture at arity cap three: a Heisenberg pair with a
/// central class killed to order two, so the bracket survives to homology.
pub fn lie_fixture() -> OperadAlgebra<Integers> {
    let z = Integers;
    let op = builtin_lie(&z, 3).unwrap();
    let mut m = BigradedModule::new(&z);
    m.insert(
        bd(0, 0),
        Component::free(&z, vec!["x".into(), "y".into(), "z".into()]),
    );
    m.insert(bd(0, 1), Component::free(&z, vec!["w".into()]));
    let mut d = GradedMap::new("d", bd(0, -1));
    // d w = 2 z
    d.set_block(bd(0, 1), Matrix::from_i64(&z, &[&[0], &[0], &[2]]));
    let mut alg = OperadAlgebra::new(op, DgModule::new(m, d).unwrap());
    alg.set_column_clip(Some(0)).unwrap();
    alg.set_unit_identity().unwrap();
    // [x,y] = z, all other brackets zero; the triple brackets vanish, which
    // matches the Jacobi-closed composites of the stored binary ones
    let mut blk = Matrix::zero(&z, 3, 9);
    blk.set(2, 1, z.one()); // [x,y] = z at flat column 0*3+1
    blk.set(2, 3, z.from_i64(-1)); // [y,x] = -z at flat column 1*3+0
    alg.set_gamma(2, 0, 0, vec![bd(0, 0), bd(0, 0)], blk).unwrap();
    alg
}

/// Scale one stored binary C-side action block, breaking the compatibility
/// of the quotient action with the stage action (the first tower
/// hypothesis) while leaving complexes, chain maps, and exactness intact.
pub fn mutate_gamma_c<R: Ring>(t: &mut AlgebraTower<R>, which: usize, scale: i64) -> bool {
    let keys: Vec<_> = t
        .c
        .stored_gamma()
        .filter(|((n, _, _, _), m)| *n == 2 && !m.is_zero())
        .map(|(k, _)| k.clone())
        .collect();
    if keys.is_empty() {
        return false;
    }
    let (n, s, idx, tuple) = keys[which % keys.len()].clone();
    let ring = t.ring().clone();
    let old = t.c.gamma_block(n, s, idx, &tuple);
    let scaled = Matrix::from_fn(&ring, old.rows(), old.cols(), |r, c| {
        ring.mul(&ring.from_i64(scale), old.at(r, c))
    });
    if scaled == old {
        return false;
    }
    t.c.set_gamma(n, s, idx, tuple, scaled).is_ok()
}

/// Scale one stored binary A-side action block (same footprint as
/// [`mutate_gamma_c`], hitting the stage-side hypothesis instead).
pub fn mutate_gamma_a<R: Ring>(t: &mut AlgebraTower<R>, which: usize, scale: i64) -> bool {
    let keys: Vec<_> = t
        .a
        .stored_gamma()
        .filter(|((n, _, _, _), m)| *n == 2 && !m.is_zero())
        .map(|(k, _)| k.clone())
        .collect();
    if keys.is_empty() {
        return false;
    }
    let (n, s, idx, tuple) = keys[which % keys.len()].clone();
    let ring = t.ring().clone();
    let old = t.a.gamma_block(n, s, idx, &tuple);
    let scaled = Matrix::from_fn(&ring, old.rows(), old.cols(), |r, c| {
        ring.mul(&ring.from_i64(scale), old.at(r, c))
    });
    if scaled == old {
        return false;
    }
    t.a.set_gamma(n, s, idx, tuple, scaled).is_ok()
}

/// Negate a single stage-map block: still a chain map with the same image,
/// but no longer compatible with the action (the second tower hypothesis).
pub fn mutate_i_sign<R: Ring>(t: &mut AlgebraTower<R>, which: usize) -> bool {
    let keys: Vec<Bidegree> = t.i.stored_blocks().map(|(at, _)| at).collect();
    if keys.is_empty() {
        return false;
    }
    let at = keys[which % keys.len()];
    let ring = t.ring().clone();
    let old = t.i.stored_blocks().find(|(k, _)| *k == at).unwrap().1.clone();
    let negated = Matrix::from_fn(&ring, old.rows(), old.cols(), |r, c| ring.neg(old.at(r, c)));
    t.i.set_block(at, negated);
    true
}

/// CLI surface: build a named example from a seed.
pub fn gen_example(name: &str, seed: u64) -> Result<TowerDocument, String> {
    match name {
        "filtered_dga" => Ok(filtered_dga(seed)),
        "random" => Ok(random_tower(seed)),
        "bockstein" => {
            let q = if seed % 2 == 0 { 2 } else { 3 };
            Ok(bockstein_sampled(q, seed).0)
        }
        "bicomplex" => Ok(bicomplex(seed)),
        other => Err(format!(
            "unknown generator `{other}` (expected `filtered_dga`, `bockstein`, `bicomplex`, or `random`)"
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use opsseq_core::check_tower;

    #[test]
    fn generated_towers_verify_and_are_deterministic() {
        for seed in 0..6u64 {
            let d1 = filtered_dga(seed);
            let d2 = filtered_dga(seed);
            assert_eq!(d1, d2, "filtered_dga must be deterministic per seed");
            match d1.realize().unwrap() {
                crate::doc::TowerCase::Z(t) => check_tower(&t).unwrap(),
                _ => panic!("filtered_dga is an integer tower"),
            }

            let r1 = random_tower(seed);
            assert_eq!(r1, random_tower(seed));
            match r1.realize().unwrap() {
                crate::doc::TowerCase::Fp(t) => check_tower(&t).unwrap(),
                _ => panic!("random towers live over prime fields"),
            }
        }
    }

    #[test]
    fn scrambled_complexes_have_the_prescribed_homology() {
        let mut spec = BTreeMap::new();
        spec.insert(0, DegreeSpec { free: 1, torsion: vec![2] });
        spec.insert(1, DegreeSpec { free: 0, torsion: vec![1, 3] });
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let x = scrambled_complex(&mut rng, 2, &spec);
        let z = Integers;
        let mut m = BigradedModule::new(&z);
        for (&n, &r) in &x.ranks {
            let labels = (0..r).map(|k| format!("t{n}.{k}")).collect();
            m.insert(bd(0, n), Component::free(&z, labels));
        }
        let mut d = GradedMap::new("d", bd(0, -1));
        for (&n, blk) in &x.d {
            d.set_block(bd(0, n), blk.clone());
        }
        let dg = DgModule::new(m, d).unwrap();
        let h = dg.homology().unwrap();
        assert_eq!(
            h.at(bd(0, 0)).unwrap().invariants(),
            (1, vec!["4".to_string()])
        );
        assert_eq!(
            h.at(bd(0, 1)).unwrap().invariants(),
            (0, vec!["2".to_string(), "8".to_string()])
        );
    }

    #[test]
    fn bockstein_and_bicomplex_towers_verify() {
        for seed in 0..4u64 {
            let (doc, _, _) = bockstein_sampled(2, seed);
            match doc.realize().unwrap() {
                crate::doc::TowerCase::Z(t) => check_tower(&t).unwrap(),
                _ => panic!("bockstein towers are integral"),
            }
            let doc = bicomplex(seed);
            match doc.realize().unwrap() {
                crate::doc::TowerCase::Z(t) => check_tower(&t).unwrap(),
                _ => panic!("bicomplex towers are integral"),
            }
        }
    }

    #[test]
    fn constant_towers_verify() {
        let gens = vec![
            GenSpec {
                label: "x".into(),
                q: 0,
                w: 0,
                cap: 2,
            },
            GenSpec {
                label: "e".into(),
                q: 1,
                w: 0,
                cap: 1,
            },
        ];
        let t = constant_tower(&Integers, &gens, false, 2).unwrap();
        check_tower(&t).unwrap();
        let t1 = constant_tower(&Integers, &gens, true, 0).unwrap();
        check_tower(&t1).unwrap();
    }

    #[test]
    fn the_lie_fixture_passes_all_axioms_and_its_homology_keeps_the_bracket() {
        use opsseq_core::operad::{check_algebra, homology_action};
        let alg = lie_fixture();
        check_algebra(&alg).unwrap();
        let (halg, h) = homology_action(&alg).unwrap();
        check_algebra(&halg).unwrap();
        // H in degree zero is Z x + Z y + (Z/2) z and the bracket of the
        // first two generators is the torsion class
        assert_eq!(h.at(bd(0, 0)).unwrap().invariants(), (2, vec!["2".to_string()]));
        let blk = halg.gamma_block(2, 0, 0, &[bd(0, 0), bd(0, 0)]);
        assert!(!blk.is_zero());
    }
}
