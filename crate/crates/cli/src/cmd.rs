//! The command layer: each subcommand parses a tower document, runs the
//! requested computation, and returns a deterministic plain-text report.
//! Errors carry the process exit code: 2 for unreadable or malformed input,
//! 3 for a violated axiom, 4 for a failed page cross-check.

use std::fmt;
use std::path::Path;

use opsseq_core::graded::bd;
use opsseq_core::linalg::{Matrix, Ring, Subquotient};
use opsseq_core::operad::check_operad;
use opsseq_core::pages::{SpectralSequence, Stabilization};
use opsseq_core::prop::{
    check_prop, check_prop_algebra, endomorphism_prop, tautological_prop_algebra,
};
use opsseq_core::{
    bounded_below, check_gamma_iso, check_gamma_multiplicative, check_tower, colimit, gamma_map,
    AlgebraTower, ConvergeError,
};

use crate::chart::{format_cell, ChartDocument, ChartGrading};
use crate::doc::{parse_file, DocError, PropDoc, RingCase, TowerDocument};
use crate::gen;
use crate::with_tower;

/// Page budget used when no `--rmax` flag is given.
const DEFAULT_RMAX: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PageRouteFlag {
    Derivation,
    Cycles,
    Both,
}

impl PageRouteFlag {
    fn label(self) -> &'static str {
        match self {
            PageRouteFlag::Derivation => "derivation",
            PageRouteFlag::Cycles => "cycles",
            PageRouteFlag::Both => "both",
        }
    }
}

/// Chart output format.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartFormat {
    Ascii,
    Svg,
}

#[derive(Debug)]
pub enum CmdError {
    /// Unreadable, unparseable, or structurally malformed input (exit 2).
    Parse(String),
    /// A mathematical axiom or verification failed (exit 3).
    Axiom(String),
    /// The two page constructions disagreed (exit 4).
    CrossCheck(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Parse(_) => 2,
            CmdError::Axiom(_) => 3,
            CmdError::CrossCheck(_) => 4,
        }
    }
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Parse(m) => write!(f, "error: {m}"),
            CmdError::Axiom(m) => write!(f, "axiom violation: {m}"),
            CmdError::CrossCheck(m) => write!(f, "cross-check mismatch: {m}"),
        }
    }
}

impl std::error::Error for CmdError {}

impl From<DocError> for CmdError {
    fn from(e: DocError) -> Self {
        CmdError::Parse(e.to_string())
    }
}

fn ax(e: impl fmt::Display) -> CmdError {
    CmdError::Axiom(e.to_string())
}

fn inv_text(free: usize, torsion: &[String]) -> String {
    format_cell(free, torsion).unwrap_or_else(|| "0".to_string())
}

fn matrix_text<R: Ring>(ring: &R, m: &Matrix<R>) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|r| {
            let cells: Vec<String> = (0..m.cols())
                .map(|c| ring.format_elem(m.at(r, c)))
                .collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn doc_summary(doc: &TowerDocument) -> String {
    let mut s = format!(
        "ring {}, policy {}, window p in [{}, {}], q in [{}, {}]\noperad: {} (arity cap {})\n",
        doc.ring,
        doc.policy,
        doc.p_min,
        doc.p_max,
        doc.q_min,
        doc.q_max,
        doc.operad_kind,
        doc.arity_cap
    );
    if let Some(p) = &doc.prop {
        s.push_str(&format!(
            "prop: {} (rank {}, biarity cap {})\n",
            p.kind, p.rank, p.biarity_cap
        ));
    }
    s
}

// ---------------------------------------------------------------------------
// verify

fn prop_battery<R: Ring>(ring: &R, pd: &PropDoc) -> Result<(), CmdError> {
    let p = endomorphism_prop(ring, pd.rank, pd.biarity_cap);
    check_prop(&p).map_err(ax)?;
    let alg = tautological_prop_algebra(ring, pd.rank, pd.biarity_cap).map_err(ax)?;
    check_prop_algebra(&alg).map_err(ax)?;
    Ok(())
}

pub fn cmd_verify(path: &Path) -> Result<String, CmdError> {
    let doc = parse_file(path)?;
    let mut report = format!("document: {}\n", path.display());
    report.push_str(&doc_summary(&doc));
    let case = doc.realize()?;
    with_tower!(&case, |t| {
        check_operad(&t.a.operad).map_err(ax)?;
        report.push_str("operad axioms: ok\n");
        check_tower(t).map_err(ax)?;
        report.push_str(
            "tower axioms: ok (complexes, chain maps, exactness, algebra laws, \
             quotient and stage-map compatibility)\n",
        );
    });
    if let Some(pd) = &doc.prop {
        match crate::doc::parse_ring(&doc.ring).map_err(CmdError::Parse)? {
            RingCase::Z(r) => prop_battery(&r, pd)?,
            RingCase::Q(r) => prop_battery(&r, pd)?,
            RingCase::Fp(r) => prop_battery(&r, pd)?,
        }
        report.push_str("prop axioms: ok\n");
    }
    report.push_str("verdict: ok\n");
    Ok(report)
}

// ---------------------------------------------------------------------------
// pages

fn page_dump<R: Ring>(ss: &mut SpectralSequence<R>, r: usize, route: PageRouteFlag) -> Result<String, CmdError> {
    let page = match route {
        PageRouteFlag::Cycles => ss.page_via_cycles(r).map_err(ax)?,
        _ => ss.page_via_derivation(r).map_err(ax)?,
    };
    let ring = ss.tower.ring().clone();
    let mut s = format!("E^{r}\n");
    for at in page.support().collect::<Vec<_>>() {
        let (free, torsion) = page.invariants(at);
        s.push_str(&format!("  ({},{}): {}\n", at.p, at.q, inv_text(free, &torsion)));
    }
    for at in page.support().collect::<Vec<_>>() {
        let blk = page.d_block(at);
        if blk.is_zero() {
            continue;
        }
        s.push_str(&format!(
            "  d{r}: ({},{}) -> ({},{})  {}\n",
            at.p,
            at.q,
            at.p - r as i64,
            at.q - 1,
            matrix_text(&ring, &blk)
        ));
    }
    Ok(s)
}

fn pages_report<R: Ring>(
    t: AlgebraTower<R>,
    rmax: Option<usize>,
    route: PageRouteFlag,
) -> Result<String, CmdError> {
    check_tower(&t).map_err(ax)?;
    let budget = rmax.unwrap_or(DEFAULT_RMAX);
    let mut ss = SpectralSequence::new(t, budget).map_err(ax)?;
    let (_, stab) = ss.e_infinity().map_err(ax)?;
    let r_hi = match &stab {
        Stabilization::Stable { r0, .. } => *r0,
        Stabilization::Undetermined { r_max } => *r_max,
    };
    let mut report = format!("route: {}\n", route.label());
    for r in 1..=r_hi {
        if route == PageRouteFlag::Both {
            ss.cross_check(r)
                .map_err(|e| CmdError::CrossCheck(e.to_string()))?;
        }
        report.push_str(&page_dump(&mut ss, r, route)?);
    }
    if route == PageRouteFlag::Both {
        report.push_str(&format!("cross-check: ok (pages 1..={r_hi})\n"));
    }
    match &stab {
        Stabilization::Stable { r0, certificate } => {
            report.push_str(&format!("stable at r={r0}\ncertificate: {certificate}\n"));
        }
        Stabilization::Undetermined { r_max } => {
            report.push_str(&format!(
                "no stabilization certificate within the page budget r_max={r_max}\n"
            ));
        }
    }
    Ok(report)
}

pub fn cmd_pages(
    path: &Path,
    rmax: Option<usize>,
    route: PageRouteFlag,
) -> Result<String, CmdError> {
    let doc = parse_file(path)?;
    let mut report = format!("document: {}\n", path.display());
    report.push_str(&doc_summary(&doc));
    let case = doc.realize()?;
    let body = with_tower!(case, |t| pages_report(t, rmax, route)?);
    report.push_str(&body);
    Ok(report)
}

// ---------------------------------------------------------------------------
// converge

fn converge_report<R: Ring>(t: AlgebraTower<R>) -> Result<String, CmdError> {
    check_tower(&t).map_err(ax)?;
    let ring = t.ring().clone();
    let mut report = String::new();
    let cd = match colimit(&t) {
        Ok(cd) => cd,
        Err(ConvergeError::Unsupported(msg)) => {
            report.push_str("colimit unsupported; E^infinity only\n");
            report.push_str(&format!("note: {msg}\n"));
            let mut ss = SpectralSequence::new(t, DEFAULT_RMAX).map_err(ax)?;
            let (einf, stab) = ss.e_infinity().map_err(ax)?;
            report.push_str(&format!("E^infinity (r={})\n", einf.r()));
            for at in einf.support().collect::<Vec<_>>() {
                let (free, torsion) = einf.invariants(at);
                report.push_str(&format!(
                    "  ({},{}): {}\n",
                    at.p,
                    at.q,
                    inv_text(free, &torsion)
                ));
            }
            match stab {
                Stabilization::Stable { r0, .. } => {
                    report.push_str(&format!("stable at r={r0}\n"));
                }
                Stabilization::Undetermined { r_max } => {
                    report.push_str(&format!(
                        "no stabilization certificate within the page budget r_max={r_max}\n"
                    ));
                }
            }
            return Ok(report);
        }
        Err(e) => return Err(ax(e)),
    };

    let qs: Vec<i64> = {
        let mut v: Vec<i64> = t.a.dg.module.support().map(|b| b.q).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    for &q in &qs {
        let (free, torsion) = cd.h_invariants(q);
        report.push_str(&format!("H_{q}: {}\n", inv_text(free, &torsion)));
    }
    report.push_str("filtration:\n");
    for &q in &qs {
        for p in t.p_min..=t.p_max {
            if let Some(sq) = cd.filtration_at(bd(p, q)) {
                let (free, torsion) = sq.invariants();
                report.push_str(&format!("  F_{p} H_{q}: {}\n", inv_text(free, &torsion)));
            }
        }
    }

    let gr = cd.associated_graded().map_err(ax)?;
    report.push_str("associated graded:\n");
    for at in gr.dg.module.support().collect::<Vec<_>>() {
        let comp_rank = gr.dg.module.rank(at);
        let rels = gr.dg.module.relations(at);
        let sq = Subquotient::new(
            comp_rank,
            &Matrix::identity(&ring, comp_rank),
            &rels,
            "graded piece display",
        )
        .map_err(ax)?;
        let (free, torsion) = sq.invariants();
        report.push_str(&format!(
            "  gr[{},{}]: {}\n",
            at.p,
            at.q,
            inv_text(free, &torsion)
        ));
    }

    let cert = bounded_below(&t);
    let mut ss = SpectralSequence::new(t, DEFAULT_RMAX).map_err(ax)?;
    let gm = gamma_map(&cd, &mut ss, &gr).map_err(ax)?;
    let r0 = match &gm.stabilization {
        Stabilization::Stable { r0, .. } => *r0,
        Stabilization::Undetermined { r_max } => *r_max,
    };
    check_gamma_iso(&gm, &cert).map_err(ax)?;
    report.push_str(&format!(
        "comparison map gamma: isomorphism onto E^infinity (stable at r={r0})\n"
    ));
    check_gamma_multiplicative(&cd, &gr, &gm).map_err(ax)?;
    report.push_str("multiplicative: ok\n");
    report.push_str("verdict: converges as operad algebras\n");
    Ok(report)
}

pub fn cmd_converge(path: &Path) -> Result<String, CmdError> {
    let doc = parse_file(path)?;
    let mut report = format!("document: {}\n", path.display());
    report.push_str(&doc_summary(&doc));
    let case = doc.realize()?;
    let body = with_tower!(case, |t| converge_report(t)?);
    report.push_str(&body);
    Ok(report)
}

// ---------------------------------------------------------------------------
// chart

fn chart_report<R: Ring>(
    t: AlgebraTower<R>,
    format: ChartFormat,
    grading: ChartGrading,
) -> Result<String, CmdError> {
    check_tower(&t).map_err(ax)?;
    let mut ss = SpectralSequence::new(t, DEFAULT_RMAX).map_err(ax)?;
    let (_, stab) = ss.e_infinity().map_err(ax)?;
    let r_hi = match stab {
        Stabilization::Stable { r0, .. } => r0,
        Stabilization::Undetermined { r_max } => r_max,
    };
    let mut chart = ChartDocument::new(grading);
    for r in 1..=r_hi {
        let page = ss.page_via_derivation(r).map_err(ax)?;
        chart.add_page(&page);
    }
    Ok(match format {
        ChartFormat::Ascii => chart.render_ascii(),
        ChartFormat::Svg => chart.render_svg(),
    })
}

pub fn cmd_chart(
    path: &Path,
    format: ChartFormat,
    grading: ChartGrading,
) -> Result<String, CmdError> {
    let doc = parse_file(path)?;
    let case = doc.realize()?;
    with_tower!(case, |t| chart_report(t, format, grading))
}

// ---------------------------------------------------------------------------
// gen

pub fn cmd_gen(name: &str, seed: u64) -> Result<String, CmdError> {
    let doc = gen::gen_example(name, seed).map_err(CmdError::Parse)?;
    Ok(doc.serialize())
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(name: &str, contents: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("opsseq-cmd-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn a_generated_document_verifies_and_pages_cross_check() {
        let text = cmd_gen("filtered_dga", 3).unwrap();
        let path = write_temp("gen3.tower", &text);
        let report = cmd_verify(&path).unwrap();
        assert!(report.ends_with("verdict: ok\n"), "{report}");
        let report = cmd_pages(&path, None, PageRouteFlag::Both).unwrap();
        assert!(report.contains("cross-check: ok"), "{report}");
        assert!(report.contains("stable at r="), "{report}");
    }

    #[test]
    fn missing_files_and_broken_documents_map_to_exit_codes() {
        let missing = cmd_verify(Path::new("/nonexistent/nowhere.tower")).unwrap_err();
        assert_eq!(missing.exit_code(), 2);

        let path = write_temp("broken.tower", "format = \"tower/1\"\nring = [1,2]\n");
        let broken = cmd_verify(&path).unwrap_err();
        assert_eq!(broken.exit_code(), 2);
    }

    #[test]
    fn converge_reports_the_unsupported_branch_for_repeat_towers() {
        let text = cmd_gen("bockstein", 0).unwrap();
        let path = write_temp("bock0.tower", &text);
        let report = cmd_converge(&path).unwrap();
        assert!(
            report.contains("colimit unsupported; E^infinity only"),
            "{report}"
        );
    }

    #[test]
    fn charts_render_in_both_formats_and_gradings() {
        let text = cmd_gen("bicomplex", 1).unwrap();
        let path = write_temp("bic1.tower", &text);
        let ascii = cmd_chart(&path, ChartFormat::Ascii, ChartGrading::Paper).unwrap();
        assert!(ascii.starts_with("grading: paper (p, q)\n"), "{ascii}");
        let svg = cmd_chart(&path, ChartFormat::Svg, ChartGrading::Reindexed).unwrap();
        assert!(svg.starts_with("<svg xmlns"), "{svg}");
        assert!(svg.ends_with("</svg>\n"));
    }
}
