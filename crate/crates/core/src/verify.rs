//! Named property suites over seeded sample points.
//!
//! Each suite evaluates identities of the engine against independent oracles
//! and reports per-check residual statistics. Foliated-chart suites also run
//! on Finsler specs through the coordinate Sasaki metric of `TN`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::adapted::AdaptedConnection;
use crate::conn;
use crate::error::{Error, Result};
use crate::expr::{parse, Expr, Func, Symbols};
use crate::finsler::{self, FinslerSpec, SasakiSource, TangentWeyl, TnVector};
use crate::geom::{self, connection_at, field_jets, ManifoldSpec, MetricSource};
use crate::jet::Jet;
use crate::linalg;
use crate::tensor::Tensor;

/// Every suite id, in the order `all` runs them.
pub const SUITES: [&str; 14] = [
    "compatibility",
    "gauge",
    "oracle-uniqueness",
    "dprime-torsion",
    "curvature-oracle",
    "recurrence",
    "bundle-like",
    "homogeneity",
    "finsler-axioms",
    "riemannian-reduction",
    "flatness",
    "vertical-flat",
    "liouville",
    "nonvanishing-47",
];

/// Smallest `|y|` produced when sampling a Finsler spec.
pub const FIBER_EXCLUSION: f64 = 0.1;

const MAX_REJECTIONS: usize = 10_000;

/// Invariants of the geometry layers and the suite and checks that witness
/// each one: `(invariant, suite, checks)`.
pub const COVERAGE: &[(&str, &str, &[&str])] = &[
    ("frame orthogonality", "compatibility", &["orthogonality"]),
    ("frame symmetry", "compatibility", &["A symmetry"]),
    ("leaf christoffel metricity", "compatibility", &["leaf christoffel metricity"]),
    ("frame gauge invariance", "gauge", &["gauge frame invariance"]),
    ("compatibility", "compatibility", &["compatibility", "full weyl compatibility"]),
    ("uniqueness witness", "oracle-uniqueness", &["koszul coefficients", "global oracle coefficients"]),
    ("gauge covariance", "gauge", &["gauge compatible coefficients", "gauge vranceanu coefficients"]),
    ("quasi-connection recurrence", "recurrence", &["quasi-connection recurrence"]),
    ("torsion and integrability", "dprime-torsion", &["torsion bracket oracle", "nijenhuis identity"]),
    (
        "curvature formula matches commutator",
        "curvature-oracle",
        &[
            "curvature ttt vs commutator",
            "curvature tts vs commutator",
            "curvature tss vs commutator",
            "curvature stt vs commutator",
            "curvature sts vs commutator",
            "curvature sss vs commutator",
        ],
    ),
    ("metric derivative closed forms", "recurrence", &["closed forms vs coefficient form"]),
    (
        "homogeneity cascade",
        "homogeneity",
        &["homogeneity F", "homogeneity F^2", "homogeneity g", "homogeneity G", "homogeneity G_b"],
    ),
    ("euler identity", "homogeneity", &["euler identity"]),
    ("riemannian reduction", "riemannian-reduction", &["C vanishes", "D equals base christoffel"]),
    ("cartan coefficient paths", "homogeneity", &["cartan coefficient paths"]),
    ("torsion flatness", "flatness", &["torsion vanishes"]),
    ("vertical flatness", "vertical-flat", &["vertical flatness"]),
    ("vertical-horizontal curvature nonvanishing", "nonvanishing-47", &["vertical-horizontal curvature nonvanishing"]),
];

/// The object a suite runs on.
#[derive(Debug, Clone, Copy)]
pub enum Subject<'a> {
    Manifold(&'a ManifoldSpec),
    Finsler(&'a FinslerSpec),
}

impl Subject<'_> {
    pub fn name(&self) -> &str {
        match self {
            Subject::Manifold(s) => &s.name,
            Subject::Finsler(f) => &f.name,
        }
    }

    fn domain(&self) -> &[(f64, f64)] {
        match self {
            Subject::Manifold(s) => &s.domain,
            Subject::Finsler(f) => &f.domain,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub suite: String,
    pub samples: usize,
    pub seed: u64,
    /// Replaces every upper-bound tolerance of the suite.
    pub tol: Option<f64>,
}

impl SuiteConfig {
    pub fn new(suite: &str) -> Self {
        SuiteConfig { suite: suite.to_string(), samples: 100, seed: 42, tol: None }
    }
}

/// How a residual statistic is compared with its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// Holds when the largest value is below the tolerance.
    Upper,
    /// Holds when the smallest value exceeds the tolerance.
    LowerAll,
    /// Holds when the largest value exceeds the tolerance.
    LowerAny,
}

impl Bound {
    pub fn name(self) -> &'static str {
        match self {
            Bound::Upper => "upper",
            Bound::LowerAll => "lower-all",
            Bound::LowerAny => "lower-any",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    pub tol: f64,
    pub bound: Bound,
    pub holds: bool,
    /// `None` for informational checks, which always pass.
    pub expected: Option<bool>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub suite: String,
    pub spec: String,
    pub points: usize,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Acc {
    name: String,
    bound: Bound,
    tol: f64,
    expected: Option<bool>,
    max: f64,
    min: f64,
    sum: f64,
    count: usize,
}

struct Collector {
    tol: Option<f64>,
    accs: Vec<Acc>,
    notes: Vec<String>,
}

impl Collector {
    fn new(tol: Option<f64>) -> Self {
        Collector { tol, accs: Vec::new(), notes: Vec::new() }
    }

    fn record(&mut self, name: &str, bound: Bound, tol: f64, expected: Option<bool>, v: f64) {
        let tol = match (bound, self.tol) {
            (Bound::Upper, Some(t)) => t,
            _ => tol,
        };
        let idx = match self.accs.iter().position(|a| a.name == name) {
            Some(i) => i,
            None => {
                self.accs.push(Acc {
                    name: name.to_string(),
                    bound,
                    tol,
                    expected,
                    max: f64::NEG_INFINITY,
                    min: f64::INFINITY,
                    sum: 0.0,
                    count: 0,
                });
                self.accs.len() - 1
            }
        };
        let a = &mut self.accs[idx];
        // NaN residuals propagate into max so the check fails
        a.max = if v.is_nan() || a.max.is_nan() { f64::NAN } else { a.max.max(v) };
        a.min = if v.is_nan() || a.min.is_nan() { f64::NAN } else { a.min.min(v) };
        a.sum += v;
        a.count += 1;
    }

    fn upper(&mut self, name: &str, tol: f64, v: f64) {
        self.record(name, Bound::Upper, tol, Some(true), v);
    }

    fn info(&mut self, name: &str, bound: Bound, tol: f64, v: f64) {
        self.record(name, bound, tol, None, v);
    }

    fn finish(self, suite: &str, spec: &str, points: usize, seed: u64) -> VerificationReport {
        let checks: Vec<CheckResult> = self
            .accs
            .into_iter()
            .map(|a| {
                let holds = match a.bound {
                    Bound::Upper => a.max < a.tol,
                    Bound::LowerAll => a.min > a.tol,
                    Bound::LowerAny => a.max > a.tol,
                };
                let pass = a.expected.is_none_or(|e| e == holds);
                CheckResult {
                    name: a.name,
                    max: a.max,
                    min: a.min,
                    mean: a.sum / a.count as f64,
                    tol: a.tol,
                    bound: a.bound,
                    holds,
                    expected: a.expected,
                    pass,
                }
            })
            .collect();
        let pass = checks.iter().all(|c| c.pass);
        VerificationReport {
            suite: suite.to_string(),
            spec: spec.to_string(),
            points,
            seed,
            checks,
            notes: self.notes,
            pass,
        }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Deterministic uniform samples of the domain box, one ChaCha8 stream per
/// point index. Finsler points avoid `|y| < 0.1`.
pub fn sample_points(subject: Subject<'_>, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let domain = subject.domain();
    if count == 0 || domain.iter().any(|(lo, hi)| !(lo <= hi)) {
        return Err(Error::EmptyDomain);
    }
    let fiber = match subject {
        Subject::Finsler(f) => Some(f.n),
        Subject::Manifold(_) => None,
    };
    (0..count)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            for _ in 0..MAX_REJECTIONS {
                let p: Vec<f64> = domain.iter().map(|(lo, hi)| lo + (hi - lo) * uniform(&mut rng)).collect();
                match fiber {
                    Some(n) if libm::sqrt(p[n..].iter().map(|v| v * v).sum::<f64>()) < FIBER_EXCLUSION => {}
                    _ => return Ok(p),
                }
            }
            Err(Error::EmptyDomain)
        })
        .collect()
}

/// Auxiliary tangent vectors with components in `[-1, 1]`, on streams
/// disjoint from the point streams.
fn sample_vector(seed: u64, index: usize, dim: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, (1u64 << 63) | index as u64);
    (0..dim).map(|_| 2.0 * uniform(&mut rng) - 1.0).collect()
}

/// True when `suite` can run on `subject` (given that it is a known id).
pub fn applicable(subject: Subject<'_>, suite: &str) -> bool {
    match suite {
        "compatibility" | "gauge" | "oracle-uniqueness" | "dprime-torsion" | "curvature-oracle" | "recurrence"
        | "bundle-like" => true,
        "homogeneity" | "finsler-axioms" | "vertical-flat" | "liouville" => matches!(subject, Subject::Finsler(_)),
        "riemannian-reduction" | "flatness" | "nonvanishing-47" => match subject {
            Subject::Finsler(f) => {
                let c = f.center();
                let y = fiber_probe(f, &c);
                finsler::is_riemannian(f, &c[..f.n], &y).unwrap_or(false)
            }
            Subject::Manifold(_) => false,
        },
        _ => false,
    }
}

fn fiber_probe(f: &FinslerSpec, point: &[f64]) -> Vec<f64> {
    let y = &point[f.n..];
    if libm::sqrt(y.iter().map(|v| v * v).sum::<f64>()) >= FIBER_EXCLUSION {
        y.to_vec()
    } else {
        (0..f.n).map(|j| 1.0 + 0.25 * j as f64).collect()
    }
}

/// Runs one suite.
pub fn run_suite(subject: Subject<'_>, cfg: &SuiteConfig) -> Result<VerificationReport> {
    let suite = cfg.suite.as_str();
    if !SUITES.contains(&suite) {
        return Err(Error::UnknownSuite(cfg.suite.clone()));
    }
    if !applicable(subject, suite) {
        let reason = match subject {
            Subject::Manifold(_) => "requires a Finsler spec",
            Subject::Finsler(_) => "requires a Riemannian base",
        };
        return Err(Error::SuiteInapplicable { suite: cfg.suite.clone(), reason: reason.to_string() });
    }
    let points = sample_points(subject, cfg.samples, cfg.seed)?;
    let mut col = Collector::new(cfg.tol);
    match subject {
        Subject::Manifold(spec) => {
            let chart = Chart { src: spec, manifold: Some(spec), finsler: None };
            chart_suite(&chart, suite, &points, cfg.seed, &mut col)?;
        }
        Subject::Finsler(fs) => {
            let weyl = if fs.weyl.is_some() { TangentWeyl::Spec } else { TangentWeyl::Cartan };
            let src = SasakiSource { spec: fs, weyl };
            let internal: Vec<Vec<f64>> = points.iter().map(|p| fs.internal_point(&p[..fs.n], &p[fs.n..])).collect();
            let chart = Chart { src: &src, manifold: None, finsler: Some((fs, weyl)) };
            if !finsler_suite(fs, suite, &points, cfg.seed, &mut col)? {
                chart_suite(&chart, suite, &internal, cfg.seed, &mut col)?;
            }
        }
    }
    Ok(col.finish(suite, subject.name(), points.len(), cfg.seed))
}

struct Chart<'a> {
    src: &'a dyn MetricSource,
    manifold: Option<&'a ManifoldSpec>,
    finsler: Option<(&'a FinslerSpec, TangentWeyl)>,
}

fn chart_suite(chart: &Chart<'_>, suite: &str, points: &[Vec<f64>], seed: u64, col: &mut Collector) -> Result<()> {
    let src = chart.src;
    let (n, p) = (src.n(), src.p());
    let dim = n + p;
    match suite {
        "compatibility" => {
            for pt in points {
                let c = connection_at(src, pt, 0)?;
                col.upper("compatibility", 1e-9, c.compatibility_tensor().max_abs());
                col.upper("full weyl compatibility", 1e-9, conn::full_weyl_compatibility(src, pt)?.max_abs());
                col.upper("leaf christoffel metricity", 1e-9, christoffel_metricity(&c));
                let (g, _) = field_jets(src, pt, 0)?;
                let g = linalg::values(&g);
                let a = c.fields.a.map_ref(Jet::value);
                let mut orth = 0.0f64;
                let mut sym = 0.0f64;
                for al in 0..p {
                    for i in 0..n {
                        let v = g[[i, n + al]] - (0..n).map(|j| a[[al, j]] * g[[i, j]]).sum::<f64>();
                        orth = orth.max(v.abs());
                    }
                    for be in 0..p {
                        let v: f64 = (0..n).map(|i| a[[al, i]] * g[[i, n + be]] - a[[be, i]] * g[[i, n + al]]).sum();
                        sym = sym.max(v.abs());
                    }
                }
                col.upper("orthogonality", 1e-10, orth);
                col.upper("A symmetry", 1e-10, sym);
            }
        }
        "gauge" => gauge_suite(chart, points, col)?,
        "oracle-uniqueness" => {
            for pt in points {
                let k = conn::vranceanu_coeffs(src, pt)?;
                let (kc, kd) = conn::koszul_coeffs(src, pt)?;
                col.upper("koszul coefficients", 1e-10, k.c.max_abs_diff(&kc).max(k.d.max_abs_diff(&kd)));
                let o = conn::vranceanu_global_oracle(src, pt)?;
                col.upper("global oracle coefficients", 1e-9, k.max_abs_diff(&o));
                let mut sym = k.l.max_abs();
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            sym = sym.max((k.c[[a, b, c]] - k.c[[a, c, b]]).abs());
                        }
                    }
                }
                for a in 0..p {
                    for b in 0..p {
                        for c in 0..p {
                            sym = sym.max((k.f[[a, b, c]] - k.f[[a, c, b]]).abs());
                        }
                    }
                }
                col.upper("coefficient symmetry", 1e-12, sym);
                if let Some((fs, weyl)) = chart.finsler {
                    let direct = finsler::vranceanu_finsler(fs, weyl, &pt[n..], &pt[..n])?;
                    col.upper("sasaki chart coefficients", 1e-9, direct.max_abs_diff(&k));
                }
            }
        }
        "dprime-torsion" => {
            let block_diagonal = p == 1
                || chart.manifold.is_some_and(|s| (0..n).all(|i| (n..dim).all(|al| s.metric(i, al).is_zero())));
            for pt in points {
                let c = connection_at(src, pt, 0)?;
                let mut res = 0.0f64;
                for x in 0..dim {
                    for y in 0..dim {
                        res = conn::dprime_residual(&c, x, y).iter().fold(res, |m, v| m.max(v.abs()));
                    }
                }
                col.upper("dprime torsion residual", 1e-10, res);
                let t = c.torsion();
                col.upper("torsion bracket oracle", 1e-10, t.max_abs_diff(&conn::bracket_torsion(&c.fields)));
                let mut anti = 0.0f64;
                let mut nij = 0.0f64;
                for x in 0..dim {
                    for y in 0..dim {
                        let nv = conn::nijenhuis(&c.fields, x, y);
                        for (comp, v) in nv.iter().enumerate() {
                            let want = if x >= n && y >= n && comp < n { 4.0 * t[[comp, x - n, y - n]] } else { 0.0 };
                            nij = nij.max((v - want).abs());
                        }
                    }
                }
                for k in 0..n {
                    for a in 0..p {
                        for b in 0..p {
                            anti = anti.max((t[[k, a, b]] + t[[k, b, a]]).abs());
                        }
                    }
                }
                col.upper("nijenhuis identity", 1e-9, nij);
                col.upper("torsion antisymmetry", 1e-12, anti);
                if block_diagonal {
                    col.upper("torsion vanishes", 1e-10, t.max_abs());
                } else {
                    col.info("torsion magnitude", Bound::LowerAny, 1e-3, t.max_abs());
                }
            }
        }
        "curvature-oracle" => {
            for pt in points {
                let c = connection_at(src, pt, 1)?;
                curvature_checks(&c, col);
                if let Some((fs, weyl)) = chart.finsler {
                    let direct = finsler::finsler_curvature(fs, weyl, &pt[n..], &pt[..n])?;
                    col.upper("direct engine curvature", 1e-8, direct.max_abs_diff(&c.curvature()));
                }
            }
        }
        "recurrence" => {
            for (idx, pt) in points.iter().enumerate() {
                let x = sample_vector(seed, idx, dim);
                let c = connection_at(src, pt, 0)?;
                let e5 = c.compatibility_tensor();
                let mut rec = 0.0f64;
                for i in 0..n {
                    for j in 0..n {
                        let v: f64 = (0..n).map(|k| x[k] * e5[[k, i, j]]).sum();
                        rec = rec.max(v.abs());
                    }
                }
                col.upper("quasi-connection recurrence", 1e-9, rec);
                let printed = c.nabla_g_printed(&x);
                let closed = c.nabla_g_closed(&x);
                let def = c.nabla_g_definitional(&x);
                col.upper("closed forms vs coefficient form", 1e-9, printed.max_abs_diff(&closed));
                col.upper("mixed block vanishes", 1e-9, def.mixed.max_abs());
                col.upper("transversal block vs definition", 1e-9, def.transversal.max_abs_diff(&printed.transversal));
                col.info(
                    "structural block vs definition",
                    Bound::Upper,
                    1e-9,
                    def.structural.max_abs_diff(&printed.structural),
                );
            }
        }
        "bundle-like" => {
            let mut worst = 0.0f64;
            for (idx, pt) in points.iter().enumerate() {
                let x = sample_vector(seed, idx, dim);
                let c = connection_at(src, pt, 0)?;
                let t = c.nabla_g_printed(&x).transversal;
                let fl = &c.fields;
                let xr: f64 = (0..p).map(|m| x[n + m] * fl.rho[m].value()).sum();
                let mut rec = 0.0f64;
                let mut ch = 0.0f64;
                for a in 0..p {
                    for b in 0..p {
                        let r = t[[a, b]] + xr * fl.gt[[a, b]].value();
                        let leafwise: f64 = (0..n).map(|i| x[i] * fl.gt[[a, b]].d(i).value()).sum();
                        rec = rec.max(r.abs());
                        ch = ch.max((r - leafwise).abs());
                    }
                }
                worst = worst.max(rec);
                col.info("transversal recurrence", Bound::Upper, 1e-9, rec);
                col.upper("recurrence characterization", 1e-9, ch);
            }
            let verdict = if worst < 1e-9 { "bundle-like: yes" } else { "bundle-like: no" };
            col.notes.push(verdict.to_string());
        }
        _ => unreachable!("dispatched by run_suite"),
    }
    Ok(())
}

fn christoffel_metricity(c: &AdaptedConnection) -> f64 {
    let n = c.n();
    let g = &c.fields.gs;
    let gam = &c.christoffel;
    let mut m = 0.0f64;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut r = g[[i, j]].d(k).value();
                for h in 0..n {
                    r -= gam[[h, i, k]].value() * g[[h, j]].value();
                    r -= gam[[h, j, k]].value() * g[[i, h]].value();
                }
                m = m.max(r.abs());
            }
        }
    }
    m
}

fn curvature_checks(c: &AdaptedConnection, col: &mut Collector) {
    let r = c.curvature();
    let (o, leak) = c.curvature_from_oracle();
    for ((name, a), (_, b)) in r.blocks().iter().zip(o.blocks().iter()) {
        let short = name.rsplit('_').next().unwrap_or(name);
        col.upper(&format!("curvature {short} vs commutator"), 1e-8, a.max_abs_diff(b));
    }
    col.upper("curvature adaptedness", 1e-8, leak);
    let (n, p) = (c.n(), c.p());
    let mut anti = 0.0f64;
    for h in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    anti = anti.max((r.sss[[h, i, j, k]] + r.sss[[h, i, k, j]]).abs());
                }
            }
        }
    }
    for m in 0..p {
        for a in 0..p {
            for b in 0..p {
                for g in 0..p {
                    anti = anti.max((r.ttt[[m, a, b, g]] + r.ttt[[m, a, g, b]]).abs());
                }
            }
        }
    }
    col.upper("curvature antisymmetry", 1e-10, anti);
}

/// A chart rescaled by `e^u` with Weyl form shifted by `-du`.
struct Gauged<'a> {
    inner: &'a dyn MetricSource,
    u: Expr,
    du: Vec<Expr>,
}

impl<'a> Gauged<'a> {
    fn new(inner: &'a dyn MetricSource, u: Expr, names: &[String]) -> Self {
        let du = (0..inner.dim())
            .map(|a| Expr::Partial { index: a, name: names[a].clone(), inner: Box::new(u.clone()) })
            .collect();
        Gauged { inner, u, du }
    }
}

impl MetricSource for Gauged<'_> {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn p(&self) -> usize {
        self.inner.p()
    }
    fn order_loss(&self) -> usize {
        self.inner.order_loss()
    }
    fn fields(&self, coords: &[Jet]) -> Result<(Tensor<Jet>, Vec<Jet>)> {
        let (g, w) = self.inner.fields(coords)?;
        let f = self.u.eval_jet(coords)?.exp();
        let g = g.map(|v| &f * &v);
        let w = w
            .iter()
            .zip(&self.du)
            .map(|(wa, d)| Ok(wa - &d.eval_jet(coords)?))
            .collect::<Result<Vec<_>>>()?;
        Ok((g, w))
    }
}

fn gauge_functions(names: &[String]) -> Result<Vec<Expr>> {
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let syms = Symbols::new(&refs);
    let mut out = vec![Expr::coord(0, refs[0])];
    if refs.len() > 1 {
        out.push(Expr::Call(Func::Sin, Box::new(Expr::coord(1, refs[1]))));
    }
    if refs.len() > 2 {
        out.push(parse(&format!("{}*{}", refs[0], refs[2]), &syms)?);
    }
    Ok(out)
}

fn gauge_suite(chart: &Chart<'_>, points: &[Vec<f64>], col: &mut Collector) -> Result<()> {
    let src = chart.src;
    let names: Vec<String> = match (chart.manifold, chart.finsler) {
        (Some(s), _) => s.coords.clone(),
        (None, Some((fs, _))) => fs.coords[fs.n..].iter().chain(&fs.coords[..fs.n]).cloned().collect(),
        _ => unreachable!("a chart is a manifold or a tangent bundle"),
    };
    let us = gauge_functions(&names)?;
    let specs: Vec<Option<(ManifoldSpec, ManifoldSpec)>> = us
        .iter()
        .map(|u| {
            chart.manifold.map(|s| {
                let fwd = geom::gauge_transform(s, u);
                let back = geom::gauge_transform(&fwd, &Expr::Neg(Box::new(u.clone())));
                (fwd, back)
            })
        })
        .collect();
    let wrapped: Vec<Gauged<'_>> = us.iter().map(|u| Gauged::new(src, u.clone(), &names)).collect();
    for pt in points {
        let base = connection_at(src, pt, 0)?;
        let k = base.coeffs();
        for (w, s) in wrapped.iter().zip(&specs) {
            let g: &dyn MetricSource = match s {
                Some((fwd, _)) => fwd,
                None => w,
            };
            let c = connection_at(g, pt, 0)?;
            let kg = c.coeffs();
            // relative to the coefficient scale; Minkowski coefficients grow like 1/|y| near the zero section
            let scale = 1.0 + k.blocks().iter().map(|(_, t)| t.max_abs()).fold(0.0, f64::max);
            let compat = k.c.max_abs_diff(&kg.c).max(k.d.max_abs_diff(&kg.d));
            col.upper("gauge compatible coefficients", 1e-9, compat / scale);
            col.upper("gauge vranceanu coefficients", 1e-9, k.max_abs_diff(&kg) / scale);
            let a0 = base.fields.a.map_ref(Jet::value);
            col.upper("gauge frame invariance", 1e-12, a0.max_abs_diff(&c.fields.a.map_ref(Jet::value)));
            if let Some((_, back)) = s {
                let (g0, w0) = field_jets(src, pt, 0)?;
                let (g1, w1) = field_jets(back, pt, 0)?;
                let gd = linalg::values(&g0).max_abs_diff(&linalg::values(&g1));
                let wd = w0.iter().zip(&w1).fold(0.0f64, |m, (a, b)| m.max((a.value() - b.value()).abs()));
                col.upper("gauge round trip", 1e-12, gd.max(wd));
            }
        }
    }
    Ok(())
}

/// Finsler-only suites; returns `false` when `suite` is a chart suite.
fn finsler_suite(fs: &FinslerSpec, suite: &str, points: &[Vec<f64>], seed: u64, col: &mut Collector) -> Result<bool> {
    let n = fs.n;
    let split = |p: &Vec<f64>| (p[..n].to_vec(), p[n..].to_vec());
    match suite {
        "homogeneity" => {
            const NAMES: [&str; 5] = ["homogeneity F", "homogeneity F^2", "homogeneity g", "homogeneity G", "homogeneity G_b"];
            for pt in points {
                let (x, y) = split(pt);
                let mut worst = [0.0f64; 5];
                for lam in [0.5, 2.0, 3.0] {
                    let e = finsler::homogeneity_errors(fs, &x, &y, lam)?;
                    for (w, v) in worst.iter_mut().zip(e) {
                        *w = w.max(v);
                    }
                }
                for (name, v) in NAMES.iter().zip(worst) {
                    col.upper(name, 1e-8, v);
                }
                let sp = finsler::spray(fs, &x, &y)?;
                let mut sym = 0.0f64;
                for a in 0..n {
                    for b in 0..n {
                        for c in 0..n {
                            sym = sym.max((sp.gbc[[a, b, c]] - sp.gbc[[a, c, b]]).abs());
                        }
                    }
                }
                col.upper("spray hessian symmetry", 1e-10, sym);
                let eu = finsler::euler_residual(fs, &x, &y)?;
                col.upper("euler identity", 1e-9, eu.iter().fold(0.0f64, |m, v| m.max(v.abs())));
                let k = finsler::vranceanu_finsler(fs, TangentWeyl::Cartan, &x, &y)?;
                let f44 = finsler::cartan_horizontal_coeffs(fs, &x, &y)?;
                col.upper("cartan coefficient paths", 1e-9, k.f.max_abs_diff(&f44));
            }
        }
        "finsler-axioms" => {
            for pt in points {
                let (x, y) = split(pt);
                col.record("F positive", Bound::LowerAll, 0.0, Some(true), fs.value(&x, &y)?);
                let h = finsler::hessian_metric(fs, &x, &y)?;
                let trace: f64 = (0..n).map(|a| h.g[[a, a]]).sum();
                let ratio = linalg::min_eigenvalue(&h.g) / (trace / n as f64);
                col.record("fundamental tensor positive definite", Bound::LowerAll, 1e-10, Some(true), ratio);
                let mut asym = 0.0f64;
                for a in 0..n {
                    for b in 0..n {
                        asym = asym.max((h.g[[a, b]] - h.g[[b, a]]).abs());
                    }
                }
                col.upper("fundamental tensor symmetry", 1e-12, asym);
                let fr = finsler::horizontal_frame(fs, &x, &y)?;
                let id = Tensor::from_fn(&[2 * n, 2 * n], |i| f64::from(u8::from(i[0] == i[1])));
                col.upper("frame coframe pairing", 1e-12, fr.pairing().max_abs_diff(&id));
                let s = finsler::sasaki_metric(fs, &x, &y)?;
                let want = Tensor::from_fn(&[2 * n, 2 * n], |i| {
                    if (i[0] < n) == (i[1] < n) {
                        h.g[[i[0] % n, i[1] % n]]
                    } else {
                        0.0
                    }
                });
                col.upper("sasaki block structure", 1e-12, s.max_abs_diff(&want));
                col.record("sasaki positive definite", Bound::LowerAll, 0.0, Some(true), linalg::min_eigenvalue(&s));
            }
        }
        "riemannian-reduction" => {
            for (idx, pt) in points.iter().enumerate() {
                let (x, y) = split(pt);
                let k = finsler::vranceanu_finsler(fs, TangentWeyl::Cartan, &x, &y)?;
                let gam = finsler::base_christoffel(fs, &x, &y)?;
                col.upper("C vanishes", 1e-10, k.c.max_abs());
                col.upper("D equals base christoffel", 1e-9, k.d.max_abs_diff(&gam));
                col.upper("L vanishes", 1e-12, k.l.max_abs());
                let g = finsler::hessian_metric(fs, &x, &y)?.g;
                let kd = |a: usize, b: usize| f64::from(u8::from(a == b));
                let f48 = Tensor::from_fn(&[n, n, n], |ix| {
                    let (c, a, b) = (ix[0], ix[1], ix[2]);
                    let w: f64 = (0..n)
                        .map(|u| y[u] * (g[[u, b]] * kd(c, a) + g[[a, u]] * kd(c, b) - g[[a, b]] * kd(c, u)))
                        .sum();
                    gam[[c, a, b]] + 0.5 * w
                });
                col.upper("F closed form", 1e-9, k.f.max_abs_diff(&f48));
                col.upper("landsberg residual", 1e-9, finsler::landsberg_residual(fs, &x, &y)?.max_abs());
                let v = sample_vector(seed, idx, 2 * n);
                let xv = TnVector::new(v[..n].to_vec(), v[n..].to_vec());
                let printed = finsler::nabla_sasaki(fs, &xv, &x, &y)?;
                let closed = finsler::nabla_sasaki_closed(fs, &xv, &x, &y)?;
                let def = finsler::nabla_sasaki_definitional(fs, &xv, &x, &y)?;
                col.upper("sasaki derivative closed form", 1e-9, printed.max_abs_diff(&closed));
                col.info("sasaki derivative vs definition", Bound::Upper, 1e-9, printed.max_abs_diff(&def));
            }
        }
        "flatness" => {
            let mut rows = Vec::with_capacity(points.len());
            let mut base_max = 0.0f64;
            for pt in points {
                let (x, y) = split(pt);
                let r = finsler::finsler_curvature_torsion(fs, &x, &y)?;
                let closed = finsler::riemannian_closed_forms(fs, &x, &y)?;
                base_max = base_max.max(closed.structural.max_abs());
                rows.push((r.torsion.max_abs(), r.structural.max_abs(), r.max_abs_diff(&closed)));
            }
            let flat = base_max < 1e-10;
            let mut torsion_free = true;
            let mut hv_flat = true;
            for (t, s, d) in rows {
                col.record("torsion vanishes", Bound::Upper, 1e-10, Some(flat), t);
                col.record("horizontal curvature on vertical vanishes", Bound::Upper, 1e-10, Some(flat), s);
                col.upper("curvature torsion closed forms", 1e-9, d);
                torsion_free &= t < col.tol.unwrap_or(1e-10);
                hv_flat &= s < col.tol.unwrap_or(1e-10);
            }
            let consistent = torsion_free == flat && hv_flat == flat;
            let label = if flat { "base flat: consistent" } else { "base not flat: consistent" };
            col.upper(label, 0.5, if consistent { 0.0 } else { 1.0 });
            let tg = if torsion_free { "projection totally geodesic: yes" } else { "projection totally geodesic: no" };
            col.notes.push(tg.to_string());
        }
        "vertical-flat" => {
            for pt in points {
                let (x, y) = split(pt);
                col.upper("vertical flatness", 1e-9, finsler::vertical_curvature_max(fs, TangentWeyl::Cartan, &x, &y)?);
            }
        }
        "liouville" => {
            let probe = probe_one_form(fs)?;
            for (idx, pt) in points.iter().enumerate() {
                let (x, y) = split(pt);
                let v = sample_vector(seed, idx, 2 * n);
                let xv = TnVector::new(v[..n].to_vec(), v[n..].to_vec());
                let raw = finsler::liouville_derivatives(fs, TangentWeyl::Cartan, &xv, &x, &y)?;
                let global = finsler::liouville_global(fs, &xv, &x, &y)?;
                let closed = finsler::liouville_closed(fs, TangentWeyl::Cartan, &xv, &x, &y)?;
                col.upper("liouville vertical identity", 1e-10, raw.l.max_abs_diff(&global.l));
                col.upper("transversal liouville identity", 1e-9, raw.l_star.max_abs_diff(&global.l_star));
                col.upper("cartan closed form", 1e-9, raw.max_abs_diff(&closed));
                let raw = finsler::liouville_derivatives(&probe, TangentWeyl::Spec, &xv, &x, &y)?;
                let closed = finsler::liouville_closed(&probe, TangentWeyl::Spec, &xv, &x, &y)?;
                col.upper("general one-form closed form", 1e-9, raw.max_abs_diff(&closed));
                let raw = finsler::liouville_derivatives(fs, TangentWeyl::Zero, &xv, &x, &y)?;
                let closed = finsler::liouville_closed(fs, TangentWeyl::Zero, &xv, &x, &y)?;
                col.upper("zero one-form closed form", 1e-9, raw.max_abs_diff(&closed));
            }
        }
        "nonvanishing-47" => {
            for pt in points {
                let (x, y) = split(pt);
                let r = finsler::finsler_curvature_torsion(fs, &x, &y)?;
                let closed = finsler::riemannian_closed_forms(fs, &x, &y)?;
                col.record("vertical-horizontal curvature nonvanishing", Bound::LowerAny, 0.1, Some(true), r.vh.max_abs());
                col.upper("vertical-horizontal curvature closed form", 1e-8, r.vh.max_abs_diff(&closed.vh));
            }
        }
        _ => return Ok(false),
    }
    Ok(true)
}

/// The spec itself when it carries a one-form, otherwise a copy with a
/// fixed one-form depending on both `x` and `y`.
fn probe_one_form(fs: &FinslerSpec) -> Result<FinslerSpec> {
    if fs.weyl.is_some() {
        return Ok(fs.clone());
    }
    let n = fs.n;
    let mut out = fs.clone();
    let (xs, ys) = (&fs.coords[..n], &fs.coords[n..]);
    for a in 0..n {
        out.set_weyl_str(a, &format!("0.3*{} + 0.1*{}", ys[a], xs[0]))?;
        out.set_weyl_str(n + a, &format!("0.2 + 0.1*{}*{}", xs[a], ys[0]))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclidean3() -> ManifoldSpec {
        let mut s = ManifoldSpec::new(2, 1, &["x1", "x2", "x3"]).unwrap();
        for a in 0..3 {
            s.set_metric(a, a, Expr::Num(1.0));
        }
        s.name = "euclidean3".into();
        s
    }

    #[test]
    fn sampling_is_deterministic_and_in_box() {
        let mut s = euclidean3();
        s.domain = vec![(0.0, 1.0); 3];
        let a = sample_points(Subject::Manifold(&s), 3, 42).unwrap();
        let b = sample_points(Subject::Manifold(&s), 3, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|v| (0.0..=1.0).contains(v)));
        assert_ne!(a, sample_points(Subject::Manifold(&s), 3, 43).unwrap());
        assert!(matches!(sample_points(Subject::Manifold(&s), 0, 42), Err(Error::EmptyDomain)));
    }

    #[test]
    fn seed_42_triple_is_pinned() {
        let mut s = euclidean3();
        s.domain = vec![(0.0, 1.0); 3];
        let pts = sample_points(Subject::Manifold(&s), 3, 42).unwrap();
        let want = [
            [0.6818961923066714, 0.950275407672484, 0.4275164028565197],
            [0.7167916525047883, 0.16691033976292213, 0.48241492362471194],
            [0.1836103536378716, 0.2943592884835813, 0.5144259945044409],
        ];
        for (p, w) in pts.iter().zip(want) {
            assert_eq!(p.as_slice(), w.as_slice());
        }
    }

    #[test]
    fn finsler_sampling_avoids_zero_section() {
        let mut fs = FinslerSpec::new(2, &["x1", "x2"], &["y1", "y2"]).unwrap();
        fs.set_f_str("sqrt(y1^2+y2^2)").unwrap();
        fs.domain = vec![(-1.0, 1.0), (-1.0, 1.0), (-0.15, 0.15), (-0.15, 0.15)];
        for p in sample_points(Subject::Finsler(&fs), 200, 7).unwrap() {
            assert!((p[2] * p[2] + p[3] * p[3]).sqrt() >= FIBER_EXCLUSION);
        }
    }

    #[test]
    fn unknown_and_inapplicable_suites() {
        let s = euclidean3();
        assert!(matches!(run_suite(Subject::Manifold(&s), &SuiteConfig::new("bogus")), Err(Error::UnknownSuite(_))));
        assert!(matches!(
            run_suite(Subject::Manifold(&s), &SuiteConfig::new("flatness")),
            Err(Error::SuiteInapplicable { .. })
        ));
    }

    #[test]
    fn flat_chart_passes_compatibility() {
        let s = euclidean3();
        let mut cfg = SuiteConfig::new("compatibility");
        cfg.samples = 10;
        let r = run_suite(Subject::Manifold(&s), &cfg).unwrap();
        assert!(r.pass);
        assert!(r.check("compatibility").unwrap().max < 1e-9);
        assert_eq!(r, run_suite(Subject::Manifold(&s), &cfg).unwrap());
    }

    #[test]
    fn coverage_names_suites() {
        for (_, suite, checks) in COVERAGE {
            assert!(SUITES.contains(suite));
            assert!(!checks.is_empty());
        }
    }
}
