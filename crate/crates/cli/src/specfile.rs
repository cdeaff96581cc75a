//! Spec files: a sectioned `key = value` text format describing either a
//! foliated chart or a Finsler function.
//!
//! ```text
//! [manifold]              # or [finsler]
//! name = mixed
//! n = 2
//! p = 1
//! coords = x1, x2, x3     # finsler: base = x1, x2 / fiber = y1, y2 / F = <expr>
//!
//! [metric]                # manifold only; 1-based, upper triangle, missing = 0
//! 1,3 = x1*x3
//!
//! [weyl]                  # 1-based; finsler indices run over dx then dy
//! 1 = 1
//!
//! [constants]
//! k = 0.3
//!
//! [domain]                # coordinate name or 1-based index
//! x1 = -0.9, 0.9
//! ```

use std::fs;
use std::path::Path;

use subweyl_core::expr::parse;
use subweyl_core::finsler::{self, FinslerSpec};
use subweyl_core::geom::{self, ManifoldSpec};

/// A loaded and validated spec.
#[derive(Debug, Clone, PartialEq)]
pub enum Spec {
    Manifold(ManifoldSpec),
    Finsler(FinslerSpec),
}

impl Spec {
    pub fn name(&self) -> &str {
        match self {
            Spec::Manifold(s) => &s.name,
            Spec::Finsler(f) => &f.name,
        }
    }

    pub fn subject(&self) -> subweyl_core::verify::Subject<'_> {
        match self {
            Spec::Manifold(s) => subweyl_core::verify::Subject::Manifold(s),
            Spec::Finsler(f) => subweyl_core::verify::Subject::Finsler(f),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Validation(String),
}

impl LoadError {
    pub fn name(&self) -> &'static str {
        match self {
            LoadError::Io { .. } => "IoError",
            LoadError::Parse { .. } => "ParseError",
            LoadError::Validation(_) => "ValidationError",
        }
    }
}

type Result<T> = std::result::Result<T, LoadError>;

const SECTIONS: [&str; 6] = ["manifold", "finsler", "metric", "weyl", "constants", "domain"];

struct Entry {
    line: usize,
    key: String,
    value: String,
}

struct Section {
    name: String,
    entries: Vec<Entry>,
}

fn parse_err(line: usize, message: impl Into<String>) -> LoadError {
    LoadError::Parse { line, message: message.into() }
}

fn invalid(message: impl Into<String>) -> LoadError {
    LoadError::Validation(message.into())
}

fn sections(text: &str) -> Result<Vec<Section>> {
    let mut out: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| parse_err(line, "unterminated section header"))?.trim();
            if !SECTIONS.contains(&name) {
                return Err(parse_err(line, format!("unknown section [{name}]")));
            }
            if out.iter().any(|s| s.name == name) {
                return Err(parse_err(line, format!("duplicate section [{name}]")));
            }
            out.push(Section { name: name.to_string(), entries: Vec::new() });
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| parse_err(line, "expected `key = value`"))?;
        let sec = out.last_mut().ok_or_else(|| parse_err(line, "entry before any section header"))?;
        sec.entries.push(Entry { line, key: key.trim().to_string(), value: value.trim().to_string() });
    }
    Ok(out)
}

fn find<'a>(secs: &'a [Section], name: &str) -> &'a [Entry] {
    secs.iter().find(|s| s.name == name).map_or(&[], |s| &s.entries)
}

struct Header<'a> {
    entries: &'a [Entry],
    section: &'static str,
}

impl Header<'_> {
    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn required(&self, key: &str) -> Result<&Entry> {
        self.get(key).ok_or_else(|| invalid(format!("[{}] is missing `{key}`", self.section)))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        let e = self.required(key)?;
        e.value.parse().map_err(|_| parse_err(e.line, format!("`{key}` must be a non-negative integer")))
    }

    fn names(&self, key: &str) -> Result<Vec<String>> {
        let e = self.required(key)?;
        let names: Vec<String> = e.value.split(',').map(|s| s.trim().to_string()).collect();
        for s in &names {
            let ok = s.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !ok {
                return Err(parse_err(e.line, format!("invalid coordinate name `{s}`")));
            }
        }
        Ok(names)
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for e in self.entries {
            if !allowed.contains(&e.key.as_str()) {
                return Err(parse_err(e.line, format!("unknown key `{}` in [{}]", e.key, self.section)));
            }
        }
        Ok(())
    }
}

fn index(e: &Entry, text: &str, dim: usize) -> Result<usize> {
    let i: usize = text.trim().parse().map_err(|_| parse_err(e.line, format!("invalid index `{}`", text.trim())))?;
    if i == 0 || i > dim {
        return Err(invalid(format!("index out of range: `{}` at line {} (valid 1..={dim})", e.key, e.line)));
    }
    Ok(i - 1)
}

fn constants(secs: &[Section]) -> Result<Vec<(String, f64)>> {
    find(secs, "constants")
        .iter()
        .map(|e| {
            let v: f64 = e.value.parse().map_err(|_| parse_err(e.line, format!("constant `{}` is not a number", e.key)))?;
            if !v.is_finite() {
                return Err(parse_err(e.line, format!("constant `{}` is not finite", e.key)));
            }
            Ok((e.key.clone(), v))
        })
        .collect()
}

fn domain(secs: &[Section], coords: &[String]) -> Result<Vec<(f64, f64)>> {
    let mut out = vec![(-1.0, 1.0); coords.len()];
    for e in find(secs, "domain") {
        let i = match coords.iter().position(|c| *c == e.key) {
            Some(i) => i,
            None => index(e, &e.key, coords.len())?,
        };
        let (lo, hi) = e.value.split_once(',').ok_or_else(|| parse_err(e.line, "expected `lo, hi`"))?;
        let num = |s: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| parse_err(e.line, format!("`{}` is not a number", s.trim())))
        };
        let (lo, hi) = (num(lo)?, num(hi)?);
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid(format!("domain for `{}` at line {} needs finite lo < hi", e.key, e.line)));
        }
        out[i] = (lo, hi);
    }
    Ok(out)
}

fn check_names(coords: &[String], consts: &[(String, f64)]) -> Result<()> {
    for (i, c) in coords.iter().enumerate() {
        if coords[..i].contains(c) {
            return Err(invalid(format!("coordinate `{c}` declared twice")));
        }
        if consts.iter().any(|(k, _)| k == c) {
            return Err(invalid(format!("`{c}` is both a coordinate and a constant")));
        }
    }
    Ok(())
}

fn expr_err(line: usize, e: subweyl_core::Error) -> LoadError {
    parse_err(line, format!("{}: {e}", e.name()))
}

/// Parses and validates spec text.
pub fn parse_spec(text: &str) -> Result<Spec> {
    let secs = sections(text)?;
    let has = |n: &str| secs.iter().any(|s| s.name == n);
    match (has("manifold"), has("finsler")) {
        (true, false) => manifold(&secs).map(Spec::Manifold),
        (false, true) => finsler_spec(&secs).map(Spec::Finsler),
        _ => Err(invalid("exactly one of [manifold] or [finsler] is required")),
    }
}

fn manifold(secs: &[Section]) -> Result<ManifoldSpec> {
    let h = Header { entries: find(secs, "manifold"), section: "manifold" };
    h.check_keys(&["name", "n", "p", "coords"])?;
    let (n, p) = (h.usize("n")?, h.usize("p")?);
    let coords = h.names("coords")?;
    let dim = n + p;
    if coords.len() != dim {
        return Err(invalid(format!("{} coordinate names given for n + p = {dim}", coords.len())));
    }
    let consts = constants(secs)?;
    check_names(&coords, &consts)?;
    let refs: Vec<&str> = coords.iter().map(String::as_str).collect();
    let mut spec = ManifoldSpec::new(n, p, &refs).map_err(|e| invalid(e.to_string()))?;
    spec.name = h.get("name").map_or("unnamed", |e| e.value.as_str()).to_string();
    spec.constants = consts;
    let mut seen = Vec::new();
    for e in find(secs, "metric") {
        let (a, b) = e.key.split_once(',').ok_or_else(|| parse_err(e.line, "metric keys are `a,b`"))?;
        let (a, b) = (index(e, a, dim)?, index(e, b, dim)?);
        if a > b {
            return Err(invalid(format!("metric entry `{}` at line {} is below the diagonal", e.key, e.line)));
        }
        if seen.contains(&(a, b)) {
            return Err(parse_err(e.line, format!("metric entry `{}` given twice", e.key)));
        }
        seen.push((a, b));
        spec.set_metric_str(a, b, &e.value).map_err(|err| expr_err(e.line, err))?;
    }
    for e in find(secs, "weyl") {
        let a = index(e, &e.key, dim)?;
        spec.set_weyl_str(a, &e.value).map_err(|err| expr_err(e.line, err))?;
    }
    spec.domain = domain(secs, &spec.coords)?;
    let center = spec.center();
    let frame = geom::adapted_frame(&spec, &center).map_err(|e| invalid(format!("at the box center: {}", e.name())))?;
    geom::adapt_weyl(&spec, &center, &frame).map_err(|e| invalid(format!("at the box center: {}", e.name())))?;
    Ok(spec)
}

fn has_section(secs: &[Section], name: &str) -> bool {
    secs.iter().any(|s| s.name == name)
}

fn finsler_spec(secs: &[Section]) -> Result<FinslerSpec> {
    let h = Header { entries: find(secs, "finsler"), section: "finsler" };
    h.check_keys(&["name", "n", "base", "fiber", "F"])?;
    if has_section(secs, "metric") {
        return Err(invalid("[metric] is not allowed in a finsler spec; the metric comes from F"));
    }
    let n = h.usize("n")?;
    let (base, fiber) = (h.names("base")?, h.names("fiber")?);
    if base.len() != n || fiber.len() != n {
        return Err(invalid(format!("base and fiber need {n} names each")));
    }
    let consts = constants(secs)?;
    let all: Vec<String> = base.iter().chain(&fiber).cloned().collect();
    check_names(&all, &consts)?;
    let b: Vec<&str> = base.iter().map(String::as_str).collect();
    let f: Vec<&str> = fiber.iter().map(String::as_str).collect();
    let mut spec = FinslerSpec::new(n, &b, &f).map_err(|e| invalid(e.to_string()))?;
    spec.name = h.get("name").map_or("unnamed", |e| e.value.as_str()).to_string();
    spec.constants = consts;
    let fe = h.required("F")?;
    let parsed = parse(&fe.value, &spec.symbols()).map_err(|err| expr_err(fe.line, err))?;
    spec.f = parsed;
    for e in find(secs, "weyl") {
        let a = index(e, &e.key, 2 * n)?;
        spec.set_weyl_str(a, &e.value).map_err(|err| expr_err(e.line, err))?;
    }
    spec.domain = domain(secs, &spec.coords)?;
    let c = spec.center();
    let y = fiber_probe(&c[n..]);
    finsler::hessian_metric(&spec, &c[..n], &y).map_err(|e| invalid(format!("at the box center: {}", e.name())))?;
    Ok(spec)
}

/// A fiber direction away from the zero section.
pub fn fiber_probe(y: &[f64]) -> Vec<f64> {
    if y.iter().map(|v| v * v).sum::<f64>().sqrt() >= 0.1 {
        y.to_vec()
    } else {
        (0..y.len()).map(|j| 1.0 + 0.25 * j as f64).collect()
    }
}

/// Reads and validates a spec file.
pub fn load(path: &Path) -> Result<Spec> {
    let text = fs::read_to_string(path)
        .map_err(|e| LoadError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_spec(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[manifold]\nname = t\nn = 2\np = 1\ncoords = x1, x2, x3\n";

    #[test]
    fn loads_minimal_manifold() {
        let text = format!("{BASE}[metric]\n1,1 = 1\n2,2 = 1\n3,3 = 1\n");
        let Spec::Manifold(s) = parse_spec(&text).unwrap() else { panic!("expected a manifold") };
        assert_eq!((s.n, s.p), (2, 1));
        assert_eq!(s.domain, vec![(-1.0, 1.0); 3]);
    }

    #[test]
    fn index_out_of_range_is_a_validation_error() {
        let text = format!("{BASE}[metric]\n1,1 = 1\n2,2 = 1\n3,3 = 1\n4,4 = 1\n");
        let err = parse_spec(&text).unwrap_err();
        assert_eq!(err.name(), "ValidationError");
        assert!(err.to_string().contains("index out of range"));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let text = format!("{BASE}[metric]\n1,1 = 1 +\n");
        match parse_spec(&text).unwrap_err() {
            LoadError::Parse { line, .. } => assert_eq!(line, 7),
            other => panic!("unexpected {other:?}"),
        }
        let err = parse_spec("[manifold]\nn 2\n").unwrap_err();
        assert!(matches!(err, LoadError::Parse { line: 2, .. }));
    }

    #[test]
    fn needs_exactly_one_kind() {
        assert_eq!(parse_spec("[metric]\n").unwrap_err().name(), "ValidationError");
        let both = format!("{BASE}[finsler]\nn = 1\n");
        assert_eq!(parse_spec(&both).unwrap_err().name(), "ValidationError");
    }

    #[test]
    fn degenerate_center_is_rejected() {
        let text = format!("{BASE}[metric]\n1,1 = 1\n3,3 = 1\n");
        assert!(parse_spec(&text).unwrap_err().to_string().contains("DegenerateMetric"));
    }

    #[test]
    fn constants_and_domain_by_index() {
        let text = format!("{BASE}[constants]\nk = 2\n[metric]\n1,1 = k\n2,2 = 1\n3,3 = 1\n[domain]\n3 = 0, 2\n");
        let Spec::Manifold(s) = parse_spec(&text).unwrap() else { panic!("expected a manifold") };
        assert_eq!(s.metric(0, 0).eval(&[0.0, 0.0, 0.0]).unwrap(), 2.0);
        assert_eq!(s.domain[2], (0.0, 2.0));
    }

    #[test]
    fn finsler_rejects_indefinite_hessian() {
        let text = "[finsler]\nn = 1\nbase = x\nfiber = y\nF = x\n";
        assert!(parse_spec(text).unwrap_err().to_string().contains("NotPositiveDefinite"));
    }
}
