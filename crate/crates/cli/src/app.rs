//! Command surface and dispatch.

use std::path::Path;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use subweyl_core::finsler::{self, FinslerSpec, SasakiSource, TangentWeyl, TnVector};
use subweyl_core::geom::ManifoldSpec;
use subweyl_core::verify::{self, SuiteConfig, SUITES};
use subweyl_core::conn;

use crate::catalog;
use crate::output::{Block, Doc, Format, ReportOut, VerifyOut};
use crate::specfile::{self, LoadError, Spec};

#[derive(Debug, Parser)]
#[command(name = "subweyl", version, about = "Adapted Weyl and Vranceanu connections on foliations and Finsler tangent bundles")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, global = true, default_value = "text")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Connection {
    Compatible,
    Vranceanu,
    FullWeyl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FinslerObject {
    Spray,
    Sasaki,
    Cartan,
    Liouville,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum CatalogCommand {
    /// Names of the built-in fixtures.
    List,
    /// Prints a fixture as a spec file.
    Export { name: String },
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Connection coefficients.
    Coeffs {
        /// Spec file path or catalog name.
        #[arg(long)]
        spec: String,
        /// Point: "v1,v2,..", or "x1,..;y1,.." for Finsler specs.
        #[arg(long)]
        at: String,
        #[arg(long, value_enum, default_value = "vranceanu")]
        connection: Connection,
    },
    /// Curvature blocks of the Vranceanu connection.
    Curvature {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        at: String,
    },
    /// Transversal torsion.
    Torsion {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        at: String,
    },
    /// Covariant derivative of the metric along X.
    Covderiv {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        at: String,
        /// Adapted-frame components of X; "h1,..;v1,.." for Finsler specs.
        #[arg(long = "X")]
        x: String,
    },
    /// Finsler objects at a point of TN.
    Finsler {
        #[arg(value_enum)]
        object: FinslerObject,
        #[arg(long)]
        spec: String,
        #[arg(long)]
        at: String,
        #[arg(long = "X")]
        x: Option<String>,
    },
    /// Runs a property suite; exits 0 only when every check passes.
    Verify {
        #[arg(long)]
        spec: String,
        /// Suite id or "all".
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Replaces every upper-bound tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Built-in fixtures.
    Catalog {
        #[command(subcommand)]
        action: CatalogCommand,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Core(#[from] subweyl_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Load(e) => e.name(),
            CliError::Core(e) => e.name(),
            CliError::Usage(_) => "UsageError",
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Rendered output and whether the command succeeded.
pub struct Outcome {
    pub text: String,
    pub pass: bool,
}

/// Resolves `--spec`: an existing path first, then a catalog name.
pub fn resolve_spec(s: &str) -> Result<Spec> {
    let path = Path::new(s);
    if path.exists() {
        return Ok(specfile::load(path)?);
    }
    catalog::get(s).ok_or_else(|| {
        CliError::Load(LoadError::Io { path: s.to_string(), message: "no such file or catalog entry".to_string() })
    })
}

fn numbers(text: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let v = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("{what}: `{}` is not a number", s.trim()))))
        .collect::<Result<Vec<f64>>>()?;
    if v.len() != expected {
        return Err(CliError::Usage(format!("{what}: expected {expected} components, found {}", v.len())));
    }
    Ok(v)
}

fn split_pair(text: &str, n: usize, what: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let (a, b) = text.split_once(';').ok_or_else(|| CliError::Usage(format!("{what}: expected `a1,..;b1,..`")))?;
    Ok((numbers(a, n, what)?, numbers(b, n, what)?))
}

fn finsler_weyl(fs: &FinslerSpec) -> TangentWeyl {
    if fs.weyl.is_some() {
        TangentWeyl::Spec
    } else {
        TangentWeyl::Cartan
    }
}

fn weyl_note(choice: TangentWeyl) -> String {
    match choice {
        TangentWeyl::Spec => "one-form: spec".to_string(),
        TangentWeyl::Cartan => "one-form: cartan".to_string(),
        TangentWeyl::Zero => "one-form: zero".to_string(),
    }
}

fn coeff_blocks(k: &subweyl_core::adapted::ConnectionCoeffs, which: Connection) -> Vec<Block> {
    let all = k.blocks();
    let keep = if which == Connection::Compatible { 2 } else { 4 };
    all.iter().take(keep).map(|(name, t)| Block::tensor(name, t)).collect()
}

fn doc(command: &str, spec: &Spec, point: &str, blocks: Vec<Block>, notes: Vec<String>) -> Doc {
    Doc { command: command.to_string(), spec: spec.name().to_string(), point: point.to_string(), blocks, notes }
}

fn manifold_point(s: &ManifoldSpec, at: &str) -> Result<Vec<f64>> {
    numbers(at, s.dim(), "--at")
}

fn curvature_blocks(cd: &subweyl_core::adapted::CurvatureData) -> Vec<Block> {
    cd.blocks().iter().map(|(name, t)| Block::tensor(name, t)).collect()
}

fn nabla_blocks(ng: &subweyl_core::adapted::NablaG, names: [&str; 3]) -> Vec<Block> {
    vec![
        Block::tensor(names[0], &ng.structural),
        Block::tensor(names[1], &ng.transversal),
        Block::tensor(names[2], &ng.mixed),
    ]
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let format = cli.format;
    let done = |d: Doc| Ok(Outcome { text: d.render(format), pass: true });
    match &cli.command {
        Command::Catalog { action } => Ok(Outcome { text: catalog_command(action)?, pass: true }),
        Command::Verify { spec, suite, samples, seed, tol } => {
            let spec = resolve_spec(spec)?;
            let out = verify_command(&spec, suite, *samples, *seed, *tol)?;
            Ok(Outcome { text: out.render(format), pass: out.pass })
        }
        Command::Coeffs { spec, at, connection } => {
            let spec = resolve_spec(spec)?;
            let (blocks, notes) = match &spec {
                Spec::Manifold(s) => {
                    let pt = manifold_point(s, at)?;
                    match connection {
                        Connection::FullWeyl => (vec![Block::tensor("Gamma", &conn::full_weyl_connection(s, &pt)?)], vec![]),
                        c => (coeff_blocks(&conn::vranceanu_coeffs(s, &pt)?, *c), vec![]),
                    }
                }
                Spec::Finsler(fs) => {
                    let (x, y) = split_pair(at, fs.n, "--at")?;
                    let choice = finsler_weyl(fs);
                    let notes = vec![weyl_note(choice), "blocks: C vertical, F horizontal".to_string()];
                    match connection {
                        Connection::FullWeyl => {
                            let src = SasakiSource { spec: fs, weyl: choice };
                            let g = conn::full_weyl_connection(&src, &fs.internal_point(&x, &y))?;
                            (vec![Block::tensor("Gamma", &g)], vec![weyl_note(choice), "chart order: y, x".to_string()])
                        }
                        c => (coeff_blocks(&finsler::vranceanu_finsler(fs, choice, &x, &y)?, *c), notes),
                    }
                }
            };
            done(doc("coeffs", &spec, at, blocks, notes))
        }
        Command::Curvature { spec, at } => {
            let spec = resolve_spec(spec)?;
            let (blocks, notes) = match &spec {
                Spec::Manifold(s) => (curvature_blocks(&conn::curvature(s, &manifold_point(s, at)?)?), vec![]),
                Spec::Finsler(fs) => {
                    let (x, y) = split_pair(at, fs.n, "--at")?;
                    let choice = finsler_weyl(fs);
                    let mut blocks = curvature_blocks(&finsler::finsler_curvature(fs, choice, &x, &y)?);
                    let mut notes = vec![weyl_note(choice), "structural = vertical, transversal = horizontal".to_string()];
                    if finsler::is_riemannian(fs, &x, &y)? {
                        let r = finsler::finsler_curvature_torsion(fs, &x, &y)?;
                        blocks.push(Block::tensor("vertical_horizontal", &r.vh));
                        blocks.push(Block::tensor("base_riemann", &finsler::base_riemann(fs, &x, &y)?));
                        notes.push("vertical_horizontal uses the cartan one-form".to_string());
                    }
                    (blocks, notes)
                }
            };
            done(doc("curvature", &spec, at, blocks, notes))
        }
        Command::Torsion { spec, at } => {
            let spec = resolve_spec(spec)?;
            let t = match &spec {
                Spec::Manifold(s) => conn::torsion_transversal(s, &manifold_point(s, at)?)?,
                Spec::Finsler(fs) => {
                    let (x, y) = split_pair(at, fs.n, "--at")?;
                    finsler::finsler_connection(fs, TangentWeyl::Cartan, &x, &y, 0)?.torsion()
                }
            };
            done(doc("torsion", &spec, at, vec![Block::tensor("T", &t)], vec![]))
        }
        Command::Covderiv { spec, at, x } => {
            let spec = resolve_spec(spec)?;
            let blocks = match &spec {
                Spec::Manifold(s) => {
                    let pt = manifold_point(s, at)?;
                    let xv = numbers(x, s.dim(), "--X")?;
                    nabla_blocks(&conn::nabla_g(s, &pt, &xv)?, ["structural", "transversal", "mixed"])
                }
                Spec::Finsler(fs) => {
                    let (px, py) = split_pair(at, fs.n, "--at")?;
                    let (h, v) = split_pair(x, fs.n, "--X")?;
                    let ng = finsler::nabla_sasaki(fs, &TnVector::new(h, v), &px, &py)?;
                    nabla_blocks(&ng, ["vertical", "horizontal", "mixed"])
                }
            };
            done(doc("covderiv", &spec, at, blocks, vec![]))
        }
        Command::Finsler { object, spec, at, x } => {
            let spec = resolve_spec(spec)?;
            let Spec::Finsler(fs) = &spec else {
                return Err(CliError::Usage(format!("`finsler` needs a finsler spec; `{}` is a manifold", spec.name())));
            };
            let (px, py) = split_pair(at, fs.n, "--at")?;
            let (blocks, notes) = finsler_object(fs, *object, &px, &py, x.as_deref())?;
            let name = match object {
                FinslerObject::Spray => "finsler spray",
                FinslerObject::Sasaki => "finsler sasaki",
                FinslerObject::Cartan => "finsler cartan",
                FinslerObject::Liouville => "finsler liouville",
            };
            done(doc(name, &spec, at, blocks, notes))
        }
    }
}

fn finsler_object(
    fs: &FinslerSpec,
    object: FinslerObject,
    x: &[f64],
    y: &[f64],
    xv: Option<&str>,
) -> Result<(Vec<Block>, Vec<String>)> {
    Ok(match object {
        FinslerObject::Spray => {
            let s = finsler::spray(fs, x, y)?;
            (vec![Block::vector("G", &s.g), Block::tensor("G_b", &s.gb), Block::tensor("G_bc", &s.gbc)], vec![])
        }
        FinslerObject::Sasaki => {
            let h = finsler::hessian_metric(fs, x, y)?;
            let s = finsler::sasaki_metric(fs, x, y)?;
            let notes = vec!["sasaki components in the coordinate frame (x, y)".to_string()];
            (vec![Block::scalar("F", fs.value(x, y)?), Block::tensor("g", &h.g), Block::tensor("sasaki", &s)], notes)
        }
        FinslerObject::Cartan => {
            let c = finsler::cartan_form(fs, x, y)?;
            (vec![Block::vector("rho", &c.rho), Block::vector("theta", &c.theta)], vec![])
        }
        FinslerObject::Liouville => {
            let text = xv.ok_or_else(|| CliError::Usage("`finsler liouville` needs --X \"h1,..;v1,..\"".to_string()))?;
            let (h, v) = split_pair(text, fs.n, "--X")?;
            let choice = finsler_weyl(fs);
            let l = finsler::liouville_derivatives(fs, choice, &TnVector::new(h, v), x, y)?;
            let blocks = vec![
                Block::vector("nabla_L_horizontal", &l.l.horizontal),
                Block::vector("nabla_L_vertical", &l.l.vertical),
                Block::vector("nabla_Lstar_horizontal", &l.l_star.horizontal),
                Block::vector("nabla_Lstar_vertical", &l.l_star.vertical),
            ];
            (blocks, vec![weyl_note(choice)])
        }
    })
}

fn catalog_command(action: &CatalogCommand) -> Result<String> {
    match action {
        CatalogCommand::List => Ok(catalog::CATALOG.iter().map(|(n, _)| format!("{n}\n")).collect()),
        CatalogCommand::Export { name } => catalog::text(name)
            .map(str::to_string)
            .ok_or_else(|| CliError::Usage(format!("no catalog entry `{name}`"))),
    }
}

/// Runs one suite or every applicable suite.
pub fn verify_command(spec: &Spec, suite: &str, samples: usize, seed: u64, tol: Option<f64>) -> Result<VerifyOut> {
    if samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".to_string()));
    }
    if tol.is_some_and(|t| !(t > 0.0)) {
        return Err(CliError::Usage("--tol must be positive".to_string()));
    }
    let subject = spec.subject();
    let run = |id: &str| -> Result<ReportOut> {
        let cfg = SuiteConfig { suite: id.to_string(), samples, seed, tol };
        let start = Instant::now();
        let r = verify::run_suite(subject, &cfg)?;
        Ok(ReportOut::new(&r, start.elapsed().as_secs_f64()))
    };
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    if suite == "all" {
        for id in SUITES {
            if verify::applicable(subject, id) {
                reports.push(run(id)?);
            } else {
                skipped.push(id.to_string());
            }
        }
    } else {
        reports.push(run(suite)?);
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok(VerifyOut { reports, skipped, pass })
}
