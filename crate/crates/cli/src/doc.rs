//! The tower document format: a TOML dialect with explicit field names and
//! string-encoded exact scalars, one canonical serialization (sorted keys,
//! fixed whitespace), and positioned parse errors.
//!
//! A document names a coefficient ring, a window, an operad, two sides `a`
//! and `c` (basis labels, relations, differential and action tables per
//! bidegree), and the structure maps `i`, `j` and — for repeated towers —
//! `top`.  `parse` and `serialize` are mutually inverse: parsing normalizes
//! scalar spellings through the declared ring, so `serialize(parse(x))` is
//! canonical and `parse(serialize(t))` returns `t` exactly.

use std::collections::BTreeMap;
use std::fmt;

use opsseq_core::graded::{bd, Bidegree, BigradedModule, Component, DgModule, GradedMap};
use opsseq_core::linalg::{Integers, Matrix, PrimeField, Rationals, Ring, RingKind};
use opsseq_core::operad::{builtin_assoc, builtin_comm, builtin_lie, Operad, OperadAlgebra};
use opsseq_core::{AlgebraTower, ExtensionPolicy};

/// Row-major matrix with ring elements spelled as exact strings.
pub type MatrixDoc = Vec<Vec<String>>;

/// An action-table key: arity, internal degree, basis index, input bidegrees.
pub type GammaKeyDoc = (usize, i64, usize, Vec<Bidegree>);

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SideDoc {
    pub basis: BTreeMap<Bidegree, Vec<String>>,
    pub relations: BTreeMap<Bidegree, MatrixDoc>,
    pub d: BTreeMap<Bidegree, MatrixDoc>,
    pub gamma: BTreeMap<GammaKeyDoc, MatrixDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropDoc {
    pub kind: String,
    pub rank: usize,
    pub biarity_cap: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerDocument {
    pub ring: String,
    pub policy: String,
    pub p_min: i64,
    pub p_max: i64,
    pub q_min: i64,
    pub q_max: i64,
    pub operad_kind: String,
    pub arity_cap: usize,
    pub prop: Option<PropDoc>,
    pub a: SideDoc,
    pub c: SideDoc,
    pub i: BTreeMap<Bidegree, MatrixDoc>,
    pub j: BTreeMap<Bidegree, MatrixDoc>,
    pub top: BTreeMap<Bidegree, MatrixDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DocError {
    Io {
        path: String,
        msg: String,
    },
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    Field {
        path: String,
        line: Option<usize>,
        msg: String,
    },
}

impl fmt::Display for DocError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DocError::Io { path, msg } => write!(f, "cannot read `{path}`: {msg}"),
            DocError::Syntax { line, col, msg } => {
                write!(f, "syntax error at line {line}, column {col}: {msg}")
            }
            DocError::Field { path, line, msg } => {
                if let Some(l) = line {
                    write!(f, "line {l}, field `{path}`: {msg}")
                } else {
                    write!(f, "field `{path}`: {msg}")
                }
            }
        }
    }
}

impl std::error::Error for DocError {}

/// The three coefficient rings a document may declare.
#[derive(Clone, Debug)]
pub enum RingCase {
    Z(Integers),
    Q(Rationals),
    Fp(PrimeField),
}

/// A realized tower over whichever ring the document declared.
#[derive(Clone, Debug)]
pub enum TowerCase {
    Z(AlgebraTower<Integers>),
    Q(AlgebraTower<Rationals>),
    Fp(AlgebraTower<PrimeField>),
}

/// Run a generic closure against whichever concrete tower the case holds.
#[macro_export]
macro_rules! with_tower {
    ($case:expr, |$t:ident| $body:expr) => {
        match $case {
            $crate::doc::TowerCase::Z($t) => $body,
            $crate::doc::TowerCase::Q($t) => $body,
            $crate::doc::TowerCase::Fp($t) => $body,
        }
    };
}

pub fn parse_ring(descr: &str) -> Result<RingCase, String> {
    match descr {
        "Z" => Ok(RingCase::Z(Integers)),
        "Q" => Ok(RingCase::Q(Rationals)),
        _ => {
            let Some(p) = descr.strip_prefix('F') else {
                return Err(format!(
                    "unknown ring `{descr}` (expected `Z`, `Q`, or `F<p>`)"
                ));
            };
            let p: u64 = p
                .parse()
                .map_err(|_| format!("unknown ring `{descr}` (expected `Z`, `Q`, or `F<p>`)"))?;
            Ok(RingCase::Fp(PrimeField::new(p).map_err(|e| e.to_string())?))
        }
    }
}

pub fn ring_descriptor(kind: &RingKind) -> String {
    match kind {
        RingKind::Integers => "Z".to_string(),
        RingKind::Rationals => "Q".to_string(),
        RingKind::PrimeField(p) => format!("F{p}"),
    }
}

fn policy_name(p: ExtensionPolicy) -> &'static str {
    match p {
        ExtensionPolicy::ConstantAbove => "constant_above",
        ExtensionPolicy::RepeatLastMap => "repeat_last_map",
    }
}

fn parse_policy(s: &str) -> Result<ExtensionPolicy, String> {
    match s {
        "constant_above" => Ok(ExtensionPolicy::ConstantAbove),
        "repeat_last_map" => Ok(ExtensionPolicy::RepeatLastMap),
        other => Err(format!(
            "unknown policy `{other}` (expected `constant_above` or `repeat_last_map`)"
        )),
    }
}

fn build_operad<R: Ring>(ring: &R, kind: &str, cap: usize) -> Result<Operad<R>, String> {
    match kind {
        "comm" => Ok(builtin_comm(ring, cap)),
        "assoc" => Ok(builtin_assoc(ring, cap)),
        "lie" => builtin_lie(ring, cap).map_err(|e| e.to_string()),
        other => Err(format!(
            "unknown operad `{other}` (expected `comm`, `assoc`, or `lie`)"
        )),
    }
}

// ---------------------------------------------------------------------------
// keys

fn format_bd(at: Bidegree) -> String {
    format!("{},{}", at.p, at.q)
}

fn parse_bd(s: &str) -> Result<Bidegree, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("bad bidegree key `{s}` (expected `p,q`)"));
    }
    let p = parts[0]
        .trim()
        .parse::<i64>()
        .map_err(|_| format!("bad bidegree key `{s}` (expected `p,q`)"))?;
    let q = parts[1]
        .trim()
        .parse::<i64>()
        .map_err(|_| format!("bad bidegree key `{s}` (expected `p,q`)"))?;
    Ok(bd(p, q))
}

fn format_gamma_key(k: &GammaKeyDoc) -> String {
    let (n, s, idx, tuple) = k;
    let inputs: Vec<String> = tuple.iter().map(|b| format_bd(*b)).collect();
    format!("{n},{s},{idx} @ {}", inputs.join(" ; "))
}

fn parse_gamma_key(s: &str) -> Result<GammaKeyDoc, String> {
    let (head, tail) = s
        .split_once('@')
        .ok_or_else(|| format!("bad action key `{s}` (expected `n,s,idx @ p,q ; ...`)"))?;
    let hp: Vec<&str> = head.trim().split(',').collect();
    if hp.len() != 3 {
        return Err(format!("bad action key `{s}` (expected `n,s,idx @ p,q ; ...`)"));
    }
    let n: usize = hp[0].trim().parse().map_err(|_| format!("bad arity in action key `{s}`"))?;
    let deg: i64 = hp[1].trim().parse().map_err(|_| format!("bad degree in action key `{s}`"))?;
    let idx: usize = hp[2].trim().parse().map_err(|_| format!("bad index in action key `{s}`"))?;
    let mut tuple = Vec::new();
    for part in tail.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        tuple.push(parse_bd(part)?);
    }
    if tuple.len() != n {
        return Err(format!(
            "action key `{s}` declares arity {n} but lists {} inputs",
            tuple.len()
        ));
    }
    if n == 0 {
        return Err(format!("action key `{s}`: arity 0 tables are not supported"));
    }
    Ok((n, deg, idx, tuple))
}

// ---------------------------------------------------------------------------
// parsing

fn byte_to_line_col(src: &str, byte: usize) -> (usize, usize) {
    let byte = byte.min(src.len());
    let mut line = 1;
    let mut col = 1;
    for (i, ch) in src.char_indices() {
        if i >= byte {
            break;
        }
        if ch == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    (line, col)
}

/// 1-based line of the first occurrence of a quoted key, for positioned
/// semantic errors.
fn locate(src: &str, needle: &str) -> Option<usize> {
    let quoted = format!("\"{needle}\"");
    for (k, line) in src.lines().enumerate() {
        if line.contains(&quoted) || line.trim_start().starts_with(needle) {
            return Some(k + 1);
        }
    }
    None
}

struct Walker<'a> {
    src: &'a str,
}

impl<'a> Walker<'a> {
    fn field_err(&self, path: &str, key: &str, msg: String) -> DocError {
        DocError::Field {
            path: path.to_string(),
            line: locate(self.src, key),
            msg,
        }
    }

    fn take_str(&self, t: &toml::Table, path: &str, key: &str) -> Result<String, DocError> {
        match t.get(key) {
            Some(toml::Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(self.field_err(path, key, "expected a string".to_string())),
            None => Err(self.field_err(path, key, "missing required field".to_string())),
        }
    }

    fn take_int(&self, t: &toml::Table, path: &str, key: &str) -> Result<i64, DocError> {
        match t.get(key) {
            Some(toml::Value::Integer(n)) => Ok(*n),
            Some(_) => Err(self.field_err(path, key, "expected an integer".to_string())),
            None => Err(self.field_err(path, key, "missing required field".to_string())),
        }
    }

    fn sub_table<'t>(
        &self,
        t: &'t toml::Table,
        path: &str,
        key: &str,
    ) -> Result<Option<&'t toml::Table>, DocError> {
        match t.get(key) {
            None => Ok(None),
            Some(toml::Value::Table(s)) => Ok(Some(s)),
            Some(_) => Err(self.field_err(path, key, "expected a table".to_string())),
        }
    }

    fn matrix(
        &self,
        v: &toml::Value,
        path: &str,
        key: &str,
        normalize: &dyn Fn(&str) -> Result<String, String>,
    ) -> Result<MatrixDoc, DocError> {
        let toml::Value::Array(rows) = v else {
            return Err(self.field_err(path, key, "expected an array of rows".to_string()));
        };
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            let toml::Value::Array(cells) = row else {
                return Err(self.field_err(path, key, "expected each row to be an array".to_string()));
            };
            let mut r = Vec::with_capacity(cells.len());
            for cell in cells {
                let toml::Value::String(s) = cell else {
                    return Err(self.field_err(
                        path,
                        key,
                        "expected entries as exact strings".to_string(),
                    ));
                };
                r.push(normalize(s).map_err(|e| self.field_err(path, key, e))?);
            }
            out.push(r);
        }
        let width = out.first().map_or(0, Vec::len);
        if out.iter().any(|r| r.len() != width) {
            return Err(self.field_err(path, key, "rows have unequal lengths".to_string()));
        }
        Ok(out)
    }

    fn matrix_map(
        &self,
        t: &toml::Table,
        path: &str,
        key: &str,
        normalize: &dyn Fn(&str) -> Result<String, String>,
    ) -> Result<BTreeMap<Bidegree, MatrixDoc>, DocError> {
        let mut out = BTreeMap::new();
        if let Some(sub) = self.sub_table(t, path, key)? {
            for (k, v) in sub {
                let spath = format!("{path}.{key}.\"{k}\"");
                let at = parse_bd(k).map_err(|e| self.field_err(&spath, k, e))?;
                out.insert(at, self.matrix(v, &spath, k, normalize)?);
            }
        }
        Ok(out)
    }

    fn side(
        &self,
        t: &toml::Table,
        name: &str,
        normalize: &dyn Fn(&str) -> Result<String, String>,
    ) -> Result<SideDoc, DocError> {
        let Some(sub) = self.sub_table(t, "", name)? else {
            return Ok(SideDoc::default());
        };
        for k in sub.keys() {
            if !matches!(k.as_str(), "basis" | "relations" | "d" | "gamma") {
                return Err(self.field_err(name, k, format!("unknown field `{name}.{k}`")));
            }
        }
        let mut basis = BTreeMap::new();
        if let Some(b) = self.sub_table(sub, name, "basis")? {
            for (k, v) in b {
                let spath = format!("{name}.basis.\"{k}\"");
                let at = parse_bd(k).map_err(|e| self.field_err(&spath, k, e))?;
                let toml::Value::Array(items) = v else {
                    return Err(self.field_err(&spath, k, "expected an array of labels".to_string()));
                };
                let mut labels = Vec::with_capacity(items.len());
                for item in items {
                    let toml::Value::String(s) = item else {
                        return Err(self.field_err(&spath, k, "expected string labels".to_string()));
                    };
                    labels.push(s.clone());
                }
                if labels.is_empty() {
                    return Err(self.field_err(&spath, k, "empty basis lists are omitted".to_string()));
                }
                basis.insert(at, labels);
            }
        }
        let relations = self.matrix_map(sub, name, "relations", normalize)?;
        let d = self.matrix_map(sub, name, "d", normalize)?;
        let mut gamma = BTreeMap::new();
        if let Some(g) = self.sub_table(sub, name, "gamma")? {
            for (k, v) in g {
                let spath = format!("{name}.gamma.\"{k}\"");
                let gk = parse_gamma_key(k).map_err(|e| self.field_err(&spath, k, e))?;
                gamma.insert(gk, self.matrix(v, &spath, k, normalize)?);
            }
        }
        Ok(SideDoc {
            basis,
            relations,
            d,
            gamma,
        })
    }
}

/// Parse a document from text, normalizing scalar spellings through the
/// declared ring so that the result serializes canonically.
pub fn parse(src: &str) -> Result<TowerDocument, DocError> {
    let table: toml::Table = src.parse().map_err(|e: toml::de::Error| {
        let (line, col) = e
            .span()
            .map(|s| byte_to_line_col(src, s.start))
            .unwrap_or((1, 1));
        DocError::Syntax {
            line,
            col,
            msg: e.message().to_string(),
        }
    })?;
    let w = Walker { src };
    for k in table.keys() {
        if !matches!(
            k.as_str(),
            "format" | "ring" | "policy" | "window" | "operad" | "prop" | "a" | "c" | "maps"
        ) {
            return Err(w.field_err("", k, format!("unknown top-level field `{k}`")));
        }
    }
    let format = w.take_str(&table, "", "format")?;
    if format != "tower/1" {
        return Err(w.field_err("format", "format", format!("unsupported format `{format}`")));
    }
    let ring = w.take_str(&table, "", "ring")?;
    let ring_case = parse_ring(&ring).map_err(|e| w.field_err("ring", "ring", e))?;
    let policy = w.take_str(&table, "", "policy")?;
    parse_policy(&policy).map_err(|e| w.field_err("policy", "policy", e))?;

    let normalize: Box<dyn Fn(&str) -> Result<String, String>> = match &ring_case {
        RingCase::Z(r) => {
            let r = r.clone();
            Box::new(move |s: &str| Ok(r.format_elem(&r.parse_elem(s)?)))
        }
        RingCase::Q(r) => {
            let r = r.clone();
            Box::new(move |s: &str| Ok(r.format_elem(&r.parse_elem(s)?)))
        }
        RingCase::Fp(r) => {
            let r = r.clone();
            Box::new(move |s: &str| Ok(r.format_elem(&r.parse_elem(s)?)))
        }
    };

    let window = w
        .sub_table(&table, "", "window")?
        .ok_or_else(|| w.field_err("window", "window", "missing required table".to_string()))?;
    let p_min = w.take_int(window, "window", "p_min")?;
    let p_max = w.take_int(window, "window", "p_max")?;
    let q_min = w.take_int(window, "window", "q_min")?;
    let q_max = w.take_int(window, "window", "q_max")?;
    if p_min > p_max || q_min > q_max {
        return Err(w.field_err("window", "window", "empty window".to_string()));
    }

    let operad = w
        .sub_table(&table, "", "operad")?
        .ok_or_else(|| w.field_err("operad", "operad", "missing required table".to_string()))?;
    let operad_kind = w.take_str(operad, "operad", "kind")?;
    let arity_cap = w.take_int(operad, "operad", "arity_cap")?;
    if arity_cap < 1 {
        return Err(w.field_err("operad", "arity_cap", "arity_cap must be at least 1".to_string()));
    }
    if !matches!(operad_kind.as_str(), "comm" | "assoc" | "lie") {
        return Err(w.field_err(
            "operad",
            "kind",
            format!("unknown operad `{operad_kind}` (expected `comm`, `assoc`, or `lie`)"),
        ));
    }

    let prop = match w.sub_table(&table, "", "prop")? {
        None => None,
        Some(pt) => {
            let kind = w.take_str(pt, "prop", "kind")?;
            if kind != "endo" {
                return Err(w.field_err("prop", "kind", format!("unknown prop `{kind}` (expected `endo`)")));
            }
            let rank = w.take_int(pt, "prop", "rank")?;
            let biarity_cap = w.take_int(pt, "prop", "biarity_cap")?;
            if rank < 1 || biarity_cap < 1 {
                return Err(w.field_err("prop", "rank", "prop rank and biarity_cap must be positive".to_string()));
            }
            Some(PropDoc {
                kind,
                rank: rank as usize,
                biarity_cap: biarity_cap as usize,
            })
        }
    };

    let a = w.side(&table, "a", normalize.as_ref())?;
    let c = w.side(&table, "c", normalize.as_ref())?;

    let (i, j, top) = match w.sub_table(&table, "", "maps")? {
        None => (BTreeMap::new(), BTreeMap::new(), BTreeMap::new()),
        Some(m) => {
            for k in m.keys() {
                if !matches!(k.as_str(), "i" | "j" | "top") {
                    return Err(w.field_err("maps", k, format!("unknown field `maps.{k}`")));
                }
            }
            (
                w.matrix_map(m, "maps", "i", normalize.as_ref())?,
                w.matrix_map(m, "maps", "j", normalize.as_ref())?,
                w.matrix_map(m, "maps", "top", normalize.as_ref())?,
            )
        }
    };

    Ok(TowerDocument {
        ring,
        policy,
        p_min,
        p_max,
        q_min,
        q_max,
        operad_kind,
        arity_cap: arity_cap as usize,
        prop,
        a,
        c,
        i,
        j,
        top,
    })
}

pub fn parse_file(path: &std::path::Path) -> Result<TowerDocument, DocError> {
    let src = std::fs::read_to_string(path).map_err(|e| DocError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse(&src)
}

// ---------------------------------------------------------------------------
// serialization

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(ch),
        }
    }
    out
}

fn write_matrix(out: &mut String, m: &MatrixDoc) {
    out.push('[');
    for (ri, row) in m.iter().enumerate() {
        if ri > 0 {
            out.push_str(", ");
        }
        out.push('[');
        for (ci, cell) in row.iter().enumerate() {
            if ci > 0 {
                out.push_str(", ");
            }
            out.push('"');
            out.push_str(&escape(cell));
            out.push('"');
        }
        out.push(']');
    }
    out.push(']');
}

fn write_matrix_section(out: &mut String, name: &str, map: &BTreeMap<Bidegree, MatrixDoc>) {
    if map.is_empty() {
        return;
    }
    out.push_str(&format!("\n[{name}]\n"));
    for (at, m) in map {
        out.push_str(&format!("\"{}\" = ", format_bd(*at)));
        write_matrix(out, m);
        out.push('\n');
    }
}

fn write_side(out: &mut String, name: &str, side: &SideDoc) {
    if !side.basis.is_empty() {
        out.push_str(&format!("\n[{name}.basis]\n"));
        for (at, labels) in &side.basis {
            let items: Vec<String> = labels.iter().map(|l| format!("\"{}\"", escape(l))).collect();
            out.push_str(&format!("\"{}\" = [{}]\n", format_bd(*at), items.join(", ")));
        }
    }
    write_matrix_section(out, &format!("{name}.d"), &side.d);
    if !side.gamma.is_empty() {
        out.push_str(&format!("\n[{name}.gamma]\n"));
        for (k, m) in &side.gamma {
            out.push_str(&format!("\"{}\" = ", format_gamma_key(k)));
            write_matrix(out, m);
            out.push('\n');
        }
    }
    write_matrix_section(out, &format!("{name}.relations"), &side.relations);
}

impl TowerDocument {
    /// The canonical text form: fixed section order, sorted keys, fixed
    /// whitespace.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str("format = \"tower/1\"\n");
        out.push_str(&format!("policy = \"{}\"\n", self.policy));
        out.push_str(&format!("ring = \"{}\"\n", self.ring));
        out.push_str("\n[window]\n");
        out.push_str(&format!("p_max = {}\n", self.p_max));
        out.push_str(&format!("p_min = {}\n", self.p_min));
        out.push_str(&format!("q_max = {}\n", self.q_max));
        out.push_str(&format!("q_min = {}\n", self.q_min));
        out.push_str("\n[operad]\n");
        out.push_str(&format!("arity_cap = {}\n", self.arity_cap));
        out.push_str(&format!("kind = \"{}\"\n", self.operad_kind));
        if let Some(p) = &self.prop {
            out.push_str("\n[prop]\n");
            out.push_str(&format!("biarity_cap = {}\n", p.biarity_cap));
            out.push_str(&format!("kind = \"{}\"\n", p.kind));
            out.push_str(&format!("rank = {}\n", p.rank));
        }
        write_side(&mut out, "a", &self.a);
        write_side(&mut out, "c", &self.c);
        write_matrix_section(&mut out, "maps.i", &self.i);
        write_matrix_section(&mut out, "maps.j", &self.j);
        write_matrix_section(&mut out, "maps.top", &self.top);
        out
    }
}

impl fmt::Display for TowerDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

// ---------------------------------------------------------------------------
// realization

fn doc_matrix<R: Ring>(
    ring: &R,
    m: &MatrixDoc,
    rows: usize,
    cols: usize,
    path: &str,
) -> Result<Matrix<R>, DocError> {
    let found_rows = m.len();
    let found_cols = m.first().map_or(0, Vec::len);
    if found_rows != rows || found_cols != cols {
        return Err(DocError::Field {
            path: path.to_string(),
            line: None,
            msg: format!("block has shape {found_rows}x{found_cols}, expected {rows}x{cols}"),
        });
    }
    let mut out = Matrix::zero(ring, rows, cols);
    for (r, row) in m.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            let e = ring.parse_elem(cell).map_err(|e| DocError::Field {
                path: path.to_string(),
                line: None,
                msg: e,
            })?;
            out.set(r, c, e);
        }
    }
    Ok(out)
}

fn field<T>(path: &str, r: Result<T, impl fmt::Display>) -> Result<T, DocError> {
    r.map_err(|e| DocError::Field {
        path: path.to_string(),
        line: None,
        msg: e.to_string(),
    })
}

impl TowerDocument {
    fn in_window(&self, at: Bidegree) -> bool {
        at.p >= self.p_min && at.p <= self.p_max && at.q >= self.q_min && at.q <= self.q_max
    }

    fn realize_side<R: Ring>(
        &self,
        ring: &R,
        name: &str,
        side: &SideDoc,
        operad: &Operad<R>,
    ) -> Result<OperadAlgebra<R>, DocError> {
        let mut module = BigradedModule::new(ring);
        for (&at, labels) in &side.basis {
            if !self.in_window(at) {
                return Err(DocError::Field {
                    path: format!("{name}.basis.\"{}\"", format_bd(at)),
                    line: None,
                    msg: "bidegree outside the declared window".to_string(),
                });
            }
            let comp = match side.relations.get(&at) {
                None => Component::free(ring, labels.clone()),
                Some(m) => {
                    let cols = m.first().map_or(0, Vec::len);
                    let rels = doc_matrix(
                        ring,
                        m,
                        labels.len(),
                        cols,
                        &format!("{name}.relations.\"{}\"", format_bd(at)),
                    )?;
                    Component::presented(labels.clone(), rels)
                }
            };
            module.insert(at, comp);
        }
        for at in side.relations.keys() {
            if !side.basis.contains_key(at) {
                return Err(DocError::Field {
                    path: format!("{name}.relations.\"{}\"", format_bd(*at)),
                    line: None,
                    msg: "relations reference a bidegree with no basis".to_string(),
                });
            }
        }
        let mut d = GradedMap::new("d", bd(0, -1));
        for (&at, m) in &side.d {
            let rows = module.rank(bd(at.p, at.q - 1));
            let cols = module.rank(at);
            if cols == 0 {
                return Err(DocError::Field {
                    path: format!("{name}.d.\"{}\"", format_bd(at)),
                    line: None,
                    msg: "differential block at a bidegree with no basis".to_string(),
                });
            }
            d.set_block(
                at,
                doc_matrix(ring, m, rows, cols, &format!("{name}.d.\"{}\"", format_bd(at)))?,
            );
        }
        let dg = field(&format!("{name}.d"), DgModule::new(module, d))?;
        let mut alg = OperadAlgebra::new(operad.clone(), dg);
        field(name, alg.set_column_clip(Some(self.p_max)))?;
        for ((n, s, idx, tuple), m) in &side.gamma {
            let path = format!(
                "{name}.gamma.\"{}\"",
                format_gamma_key(&(*n, *s, *idx, tuple.clone()))
            );
            let rows = alg.dg.module.rank(alg.out_at(*s, tuple));
            let cols = tuple.iter().map(|b| alg.dg.module.rank(*b)).product();
            let blk = doc_matrix(ring, m, rows, cols, &path)?;
            field(&path, alg.set_gamma(*n, *s, *idx, tuple.clone(), blk))?;
        }
        Ok(alg)
    }

    fn realize_over<R: Ring>(&self, ring: &R) -> Result<AlgebraTower<R>, DocError> {
        let operad = build_operad(ring, &self.operad_kind, self.arity_cap)
            .map_err(|e| DocError::Field {
                path: "operad".to_string(),
                line: None,
                msg: e,
            })?;
        let a = self.realize_side(ring, "a", &self.a, &operad)?;
        let c = self.realize_side(ring, "c", &self.c, &operad)?;
        let mut i = GradedMap::new("i", bd(1, 0));
        for (&at, m) in &self.i {
            let rows = a.dg.module.rank(bd(at.p + 1, at.q));
            let cols = a.dg.module.rank(at);
            i.set_block(
                at,
                doc_matrix(ring, m, rows, cols, &format!("maps.i.\"{}\"", format_bd(at)))?,
            );
        }
        let mut j = GradedMap::new("j", bd(0, 0));
        for (&at, m) in &self.j {
            let rows = c.dg.module.rank(at);
            let cols = a.dg.module.rank(at);
            j.set_block(
                at,
                doc_matrix(ring, m, rows, cols, &format!("maps.j.\"{}\"", format_bd(at)))?,
            );
        }
        let policy = parse_policy(&self.policy).map_err(|e| DocError::Field {
            path: "policy".to_string(),
            line: None,
            msg: e,
        })?;
        let top = if policy == ExtensionPolicy::RepeatLastMap {
            let mut t = GradedMap::new("top", bd(0, 0));
            for (&at, m) in &self.top {
                let rows = a.dg.module.rank(at);
                let cols = a.dg.module.rank(at);
                t.set_block(
                    at,
                    doc_matrix(ring, m, rows, cols, &format!("maps.top.\"{}\"", format_bd(at)))?,
                );
            }
            Some(t)
        } else {
            if !self.top.is_empty() {
                return Err(DocError::Field {
                    path: "maps.top".to_string(),
                    line: None,
                    msg: "top map must be omitted for constant_above towers".to_string(),
                });
            }
            None
        };
        field(
            "tower",
            AlgebraTower::new(a, c, i, j, top, policy, self.p_min, self.p_max),
        )
    }

    /// Build the tower over whichever ring the document declares.
    pub fn realize(&self) -> Result<TowerCase, DocError> {
        let rc = parse_ring(&self.ring).map_err(|e| DocError::Field {
            path: "ring".to_string(),
            line: None,
            msg: e,
        })?;
        Ok(match rc {
            RingCase::Z(r) => TowerCase::Z(self.realize_over(&r)?),
            RingCase::Q(r) => TowerCase::Q(self.realize_over(&r)?),
            RingCase::Fp(r) => TowerCase::Fp(self.realize_over(&r)?),
        })
    }

    /// Extract a document from a realized tower (the inverse of
    /// [`TowerDocument::realize`] up to zero-block omission).
    pub fn from_tower<R: Ring>(t: &AlgebraTower<R>) -> TowerDocument {
        let ring = t.ring();
        let fmt_mat = |m: &Matrix<R>| -> MatrixDoc {
            (0..m.rows())
                .map(|r| (0..m.cols()).map(|c| ring.format_elem(m.at(r, c))).collect())
                .collect()
        };
        let side = |alg: &OperadAlgebra<R>| -> SideDoc {
            let mut s = SideDoc::default();
            for at in alg.dg.module.support() {
                let comp = alg.dg.module.component(at).unwrap();
                s.basis.insert(at, comp.labels().to_vec());
                if !comp.is_free() {
                    s.relations.insert(at, fmt_mat(comp.relations()));
                }
            }
            for (at, m) in alg.dg.d.stored_blocks() {
                s.d.insert(at, fmt_mat(m));
            }
            for (k, m) in alg.stored_gamma() {
                // zero and empty blocks are implied; omitting them keeps the
                // serialization canonical
                if m.rows() == 0 || m.cols() == 0 || m.is_zero() {
                    continue;
                }
                s.gamma.insert(k.clone(), fmt_mat(m));
            }
            s
        };
        let blocks = |g: &GradedMap<R>| -> BTreeMap<Bidegree, MatrixDoc> {
            g.stored_blocks().map(|(at, m)| (at, fmt_mat(m))).collect()
        };
        let mut qs: Vec<i64> = t
            .a
            .dg
            .module
            .support()
            .chain(t.c.dg.module.support())
            .map(|b| b.q)
            .collect();
        qs.sort_unstable();
        TowerDocument {
            ring: ring_descriptor(&ring.kind()),
            policy: policy_name(t.policy).to_string(),
            p_min: t.p_min,
            p_max: t.p_max,
            q_min: qs.first().copied().unwrap_or(0),
            q_max: qs.last().copied().unwrap_or(0),
            operad_kind: t.a.operad.name().to_string(),
            arity_cap: t.a.operad.arity_cap(),
            prop: None,
            a: side(&t.a),
            c: side(&t.c),
            i: blocks(&t.i),
            j: blocks(&t.j),
            top: if t.policy == ExtensionPolicy::RepeatLastMap {
                blocks(&t.top)
            } else {
                BTreeMap::new()
            },
        }
    }
}
