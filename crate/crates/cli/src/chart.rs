//! Page charts: a grid of cells per page with the nonzero differentials as
//! arrows, rendered as plain text or SVG.
//!
//! Cells print the free rank followed by the invariant factors in brackets,
//! so `2[4,2]` is a free rank-two part plus torsion of orders four and two.
//! The default grading displays a class at its internal bidegree `(p, q)`;
//! the re-indexed convention displays it at `(p, q - p)`, turning the
//! differential displacement from `(-r, -1)` into `(-r, r - 1)`.

use std::collections::BTreeMap;

use opsseq_core::graded::bd;
use opsseq_core::linalg::Ring;
use opsseq_core::pages::Page;

/// Display convention for the chart grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartGrading {
    /// Cells at `(p, q)` as stored.
    Paper,
    /// Cells at `(p, q - p)`.
    Reindexed,
}

impl ChartGrading {
    fn display(self, p: i64, q: i64) -> (i64, i64) {
        match self {
            ChartGrading::Paper => (p, q),
            ChartGrading::Reindexed => (p, q - p),
        }
    }

    fn label(self) -> &'static str {
        match self {
            ChartGrading::Paper => "paper (p, q)",
            ChartGrading::Reindexed => "reindexed (p, q - p)",
        }
    }
}

/// One page of a chart: nontrivial cells keyed by display coordinates, and
/// arrows for the nonzero differential blocks.  Arrows are only recorded
/// between cells present in the grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartPage {
    pub r: usize,
    pub cells: BTreeMap<(i64, i64), String>,
    pub arrows: Vec<((i64, i64), (i64, i64))>,
}

/// A chart for a run of pages under one display convention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartDocument {
    pub grading: ChartGrading,
    pub pages: Vec<ChartPage>,
}

/// `2[4,2]`-style cell text; `None` for a trivial component.
pub fn format_cell(free: usize, torsion: &[String]) -> Option<String> {
    if free == 0 && torsion.is_empty() {
        return None;
    }
    let mut s = free.to_string();
    if !torsion.is_empty() {
        s.push('[');
        s.push_str(&torsion.join(","));
        s.push(']');
    }
    Some(s)
}

impl ChartDocument {
    pub fn new(grading: ChartGrading) -> Self {
        ChartDocument {
            grading,
            pages: Vec::new(),
        }
    }

    /// Record one spectral-sequence page.
    pub fn add_page<R: Ring>(&mut self, page: &Page<R>) {
        let r = page.r();
        let mut cells = BTreeMap::new();
        for at in page.support() {
            let (free, torsion) = page.invariants(at);
            if let Some(text) = format_cell(free, &torsion) {
                cells.insert(self.grading.display(at.p, at.q), text);
            }
        }
        let mut arrows = Vec::new();
        for at in page.support() {
            if page.d_block(at).is_zero() {
                continue;
            }
            let tgt = bd(at.p - r as i64, at.q - 1);
            let src_key = self.grading.display(at.p, at.q);
            let tgt_key = self.grading.display(tgt.p, tgt.q);
            if cells.contains_key(&src_key) && cells.contains_key(&tgt_key) {
                arrows.push((src_key, tgt_key));
            }
        }
        arrows.sort();
        self.pages.push(ChartPage { r, cells, arrows });
    }

    /// Plain-text rendering: one grid per page (rows by descending vertical
    /// coordinate, columns by ascending horizontal coordinate), arrows
    /// listed below each grid.
    pub fn render_ascii(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("grading: {}\n", self.grading.label()));
        for page in &self.pages {
            out.push('\n');
            out.push_str(&format!("E^{}\n", page.r));
            if page.cells.is_empty() {
                out.push_str("  (all cells trivial)\n");
                continue;
            }
            let xs: Vec<i64> = {
                let mut v: Vec<i64> = page.cells.keys().map(|&(x, _)| x).collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            let (y_lo, y_hi) = page
                .cells
                .keys()
                .fold((i64::MAX, i64::MIN), |(lo, hi), &(_, y)| {
                    (lo.min(y), hi.max(y))
                });
            let width = page
                .cells
                .values()
                .map(String::len)
                .chain(xs.iter().map(|x| x.to_string().len()))
                .max()
                .unwrap_or(1)
                .max(1);
            let row_label_width = (y_lo..=y_hi).map(|y| y.to_string().len()).max().unwrap_or(1);
            for y in (y_lo..=y_hi).rev() {
                out.push_str(&format!("  {:>row_label_width$} |", y));
                for &x in &xs {
                    let cell = page
                        .cells
                        .get(&(x, y))
                        .map_or(".", String::as_str);
                    out.push_str(&format!(" {cell:<width$}"));
                }
                out.push('\n');
            }
            out.push_str(&format!(
                "  {:>row_label_width$} +{}\n",
                "",
                "-".repeat((width + 1) * xs.len())
            ));
            out.push_str(&format!("  {:>row_label_width$}  ", ""));
            for &x in &xs {
                out.push_str(&format!(" {x:<width$}"));
            }
            out.push('\n');
            for (src, tgt) in &page.arrows {
                out.push_str(&format!(
                    "  d{}: ({},{}) -> ({},{})\n",
                    page.r, src.0, src.1, tgt.0, tgt.1
                ));
            }
        }
        out
    }

    /// SVG rendering against a fixed template: a monospace text node per
    /// cell and a marker-tipped line per arrow, pages stacked vertically.
    /// All coordinates are integers, so the output is byte-stable.
    pub fn render_svg(&self) -> String {
        const CELL_W: i64 = 72;
        const CELL_H: i64 = 36;
        const PAD: i64 = 48;

        struct Placed {
            caption: (i64, i64, String),
            cells: Vec<(i64, i64, String)>,
            arrows: Vec<(i64, i64, i64, i64)>,
        }

        let mut placed = Vec::new();
        let mut y_base = PAD;
        let mut max_x = 2 * PAD;
        for page in &self.pages {
            let xs: Vec<i64> = {
                let mut v: Vec<i64> = page.cells.keys().map(|&(x, _)| x).collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            let ys: Vec<i64> = {
                let mut v: Vec<i64> = page.cells.keys().map(|&(_, y)| y).collect();
                v.sort_unstable();
                v.dedup();
                v
            };
            let col = |x: i64| xs.iter().position(|&v| v == x).unwrap() as i64;
            let row = |y: i64| {
                (ys.len() - 1) as i64 - ys.iter().position(|&v| v == y).unwrap() as i64
            };
            let caption = (PAD, y_base, format!("E^{} ({})", page.r, self.grading.label()));
            let origin_y = y_base + CELL_H;
            let mut cells = Vec::new();
            for (&(x, y), text) in &page.cells {
                cells.push((
                    PAD + col(x) * CELL_W,
                    origin_y + row(y) * CELL_H,
                    text.clone(),
                ));
            }
            let mut arrows = Vec::new();
            for &(src, tgt) in &page.arrows {
                arrows.push((
                    PAD + col(src.0) * CELL_W,
                    origin_y + row(src.1) * CELL_H - 12,
                    PAD + col(tgt.0) * CELL_W + 24,
                    origin_y + row(tgt.1) * CELL_H - 12,
                ));
            }
            let rows_used = ys.len().max(1) as i64;
            max_x = max_x.max(PAD + xs.len() as i64 * CELL_W + PAD);
            y_base = origin_y + rows_used * CELL_H + PAD / 2;
            placed.push(Placed {
                caption,
                cells,
                arrows,
            });
        }

        let height = y_base;
        let mut s = String::new();
        s.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{max_x}\" height=\"{height}\" \
             viewBox=\"0 0 {max_x} {height}\">\n"
        ));
        s.push_str(
            "  <defs><marker id=\"tip\" markerWidth=\"8\" markerHeight=\"8\" refX=\"7\" \
             refY=\"4\" orient=\"auto\"><path d=\"M0,0 L8,4 L0,8 z\"/></marker></defs>\n",
        );
        s.push_str("  <g font-family=\"monospace\" font-size=\"14\">\n");
        for p in &placed {
            s.push_str(&format!(
                "    <text x=\"{}\" y=\"{}\" font-weight=\"bold\">{}</text>\n",
                p.caption.0,
                p.caption.1,
                xml_escape(&p.caption.2)
            ));
            for (x, y, text) in &p.cells {
                s.push_str(&format!(
                    "    <text x=\"{x}\" y=\"{y}\">{}</text>\n",
                    xml_escape(text)
                ));
            }
            for (x1, y1, x2, y2) in &p.arrows {
                s.push_str(&format!(
                    "    <line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" \
                     stroke=\"black\" marker-end=\"url(#tip)\"/>\n"
                ));
            }
        }
        s.push_str("  </g>\n</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_formatting_prints_rank_then_bracketed_torsion() {
        assert_eq!(format_cell(2, &["4".into(), "2".into()]).unwrap(), "2[4,2]");
        assert_eq!(format_cell(3, &[]).unwrap(), "3");
        assert_eq!(format_cell(0, &["2".into()]).unwrap(), "0[2]");
        assert_eq!(format_cell(0, &[]), None);
    }

    #[test]
    fn reindexed_grading_moves_cells_down_the_diagonal() {
        assert_eq!(ChartGrading::Reindexed.display(2, 5), (2, 3));
        assert_eq!(ChartGrading::Paper.display(2, 5), (2, 5));
    }
}
