//! Tangent-bundle geometry of a Finsler function: fundamental tensor, spray,
//! nonlinear connection, Sasaki metric, Cartan form, the Vranceanu connection
//! of the vertical foliation and Liouville derivatives.
//!
//! Public points are `(x, y)` with `x` on the base and `y` in the fiber.
//! Internally the chart on `TN` is ordered `(y, x)`: the vertical bundle is
//! the structural distribution (`∂/∂y^i`, indices `0..n`) and the horizontal
//! bundle the transversal one (`δ/δx^a`, indices `n..2n`), with
//! `δ/δx^a = ∂/∂x^a - G^b_a ∂/∂y^b`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::adapted::{AdaptedConnection, AdaptedFields, ConnectionCoeffs, CurvatureData, NablaG};
use crate::error::{Error, Result};
use crate::expr::{parse, Expr, Symbols};
use crate::geom::MetricSource;
use crate::jet::{self, Jet};
use crate::linalg;
use crate::tensor::Tensor;

/// `|y|` below which a point counts as lying on the zero section.
pub const ZERO_SECTION_TOL: f64 = 1e-8;
/// Relative spread of `g(x, ·)` over fiber probes tolerated for a
/// Riemannian base.
pub const RIEMANNIAN_TOL: f64 = 1e-10;

const COEFF_ORDER: usize = 4;

/// A Finsler function `F(x, y)` with an optional one-form on `TN` given
/// against `(dx^1..dx^n, dy^1..dy^n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FinslerSpec {
    pub name: String,
    pub n: usize,
    /// Base names followed by fiber names.
    pub coords: Vec<String>,
    pub f: Expr,
    pub weyl: Option<Vec<Expr>>,
    pub constants: Vec<(String, f64)>,
    /// Sampling box over `(x, y)`.
    pub domain: Vec<(f64, f64)>,
}

/// Which one-form on `TN` drives the Weyl terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentWeyl {
    /// The Cartan form `½ ∂F²/∂y^a dx^a`.
    Cartan,
    Zero,
    /// The spec's own one-form (zero when absent).
    Spec,
}

/// A tangent vector of `TN` in the frame `{δ/δx^a, ∂/∂y^i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TnVector {
    pub horizontal: Vec<f64>,
    pub vertical: Vec<f64>,
}

impl TnVector {
    pub fn new(horizontal: Vec<f64>, vertical: Vec<f64>) -> Self {
        TnVector { horizontal, vertical }
    }

    /// Components in the internal order, vertical first.
    fn internal(&self) -> Vec<f64> {
        self.vertical.iter().chain(&self.horizontal).copied().collect()
    }

    fn from_internal(v: &[f64], n: usize) -> Self {
        TnVector { horizontal: v[n..].to_vec(), vertical: v[..n].to_vec() }
    }

    pub fn max_abs_diff(&self, o: &TnVector) -> f64 {
        self.horizontal
            .iter()
            .zip(&o.horizontal)
            .chain(self.vertical.iter().zip(&o.vertical))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianMetric {
    pub g: Tensor<f64>,
    pub g_inv: Tensor<f64>,
}

/// `G^a`, `G^a_b = ∂G^a/∂y^b` and `∂²G^a/∂y^b∂y^c` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct SprayData {
    pub g: Vec<f64>,
    pub gb: Tensor<f64>,
    pub gbc: Tensor<f64>,
}

/// The frame `{δ/δx^a, ∂/∂y^a}` and coframe `{dx^a, δy^a}` in coordinate
/// components over `(x, y)`; row `r` is the `r`-th element.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizontalFrame {
    pub frame: Tensor<f64>,
    pub coframe: Tensor<f64>,
}

impl HorizontalFrame {
    /// `pairing[[r, s]] = coframe_r(frame_s)`.
    pub fn pairing(&self) -> Tensor<f64> {
        let m = self.frame.shape()[0];
        Tensor::from_fn(&[m, m], |ix| (0..m).map(|c| self.coframe[[ix[0], c]] * self.frame[[ix[1], c]]).sum())
    }
}

/// Adapted components `W = ρ_a dx^a + θ_a δy^a` and their raised forms.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentWeylAdapted {
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
    pub rho_up: Vec<f64>,
    pub theta_up: Vec<f64>,
}

/// Curvature and torsion blocks for a Riemannian base:
/// `vh[[c, a, b, i]] = R*^c_abi`, `torsion[[c, a, b]] = T*^c_ab`,
/// `structural[[j, i, a, b]] = R*^j_iab`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannianCurvature {
    pub vh: Tensor<f64>,
    pub torsion: Tensor<f64>,
    pub structural: Tensor<f64>,
}

impl RiemannianCurvature {
    pub fn max_abs_diff(&self, o: &RiemannianCurvature) -> f64 {
        self.vh
            .max_abs_diff(&o.vh)
            .max(self.torsion.max_abs_diff(&o.torsion))
            .max(self.structural.max_abs_diff(&o.structural))
    }
}

/// `∇*_X L` and `∇*_X L*`.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouville {
    pub l: TnVector,
    pub l_star: TnVector,
}

impl Liouville {
    pub fn max_abs_diff(&self, o: &Liouville) -> f64 {
        self.l.max_abs_diff(&o.l).max(self.l_star.max_abs_diff(&o.l_star))
    }
}

impl FinslerSpec {
    /// `F = 0`, no one-form, box `[-1, 1]` in every coordinate.
    pub fn new(n: usize, base: &[&str], fiber: &[&str]) -> Result<Self> {
        if base.len() != n || fiber.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: base.len().max(fiber.len()) });
        }
        if n == 0 || 2 * n > jet::MAX_VARS {
            return Err(Error::InvalidSpec(format!("unsupported base dimension {n}")));
        }
        Ok(FinslerSpec {
            name: String::new(),
            n,
            coords: base.iter().chain(fiber).map(|s| s.to_string()).collect(),
            f: Expr::Num(0.0),
            weyl: None,
            constants: Vec::new(),
            domain: vec![(-1.0, 1.0); 2 * n],
        })
    }

    pub fn symbols(&self) -> Symbols {
        Symbols { coords: self.coords.clone(), constants: self.constants.clone() }
    }

    pub fn set_f_str(&mut self, text: &str) -> Result<()> {
        self.f = parse(text, &self.symbols())?;
        Ok(())
    }

    /// Sets component `a` of the one-form: `0..n` against `dx`, `n..2n`
    /// against `dy`.
    pub fn set_weyl_str(&mut self, a: usize, text: &str) -> Result<()> {
        let e = parse(text, &self.symbols())?;
        let w = self.weyl.get_or_insert_with(|| vec![Expr::Num(0.0); 2 * self.n]);
        w[a] = e;
        Ok(())
    }

    pub fn center(&self) -> Vec<f64> {
        self.domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    /// `F(x, y)` over reals.
    pub fn value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check(x, y)?;
        let pt: Vec<f64> = x.iter().chain(y).copied().collect();
        self.f.eval(&pt)
    }

    fn check(&self, x: &[f64], y: &[f64]) -> Result<()> {
        for v in [x, y] {
            if v.len() != self.n {
                return Err(Error::DimensionMismatch { expected: self.n, found: v.len() });
            }
        }
        Ok(())
    }

    /// A point of the internal chart `(y, x)`.
    pub fn internal_point(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        y.iter().chain(x).copied().collect()
    }
}

/// Every field of the construction as jets in the internal chart.
struct FinslerJets {
    n: usize,
    y: Vec<Jet>,
    l: Jet,
    g: Tensor<Jet>,
    g_inv: Tensor<Jet>,
    spray: Vec<Jet>,
    /// `nl[[a, b]] = G^a_b`.
    nl: Tensor<Jet>,
    w: Option<Vec<Jet>>,
}

impl FinslerJets {
    fn from_coords(fs: &FinslerSpec, coords: &[Jet]) -> Result<Self> {
        let n = fs.n;
        let user: Vec<Jet> = coords[n..].iter().chain(&coords[..n]).cloned().collect();
        let f = fs.f.eval_jet(&user)?;
        let l = &f * &f;
        let ly: Vec<Jet> = (0..n).map(|a| l.d(a)).collect();
        let g = Tensor::from_fn(&[n, n], |ix| ly[ix[0]].d(ix[1]).scale(0.5));
        let gv = linalg::values(&g);
        let trace: f64 = (0..n).map(|a| gv[[a, a]]).sum();
        if !(linalg::min_eigenvalue(&gv) > 1e-10 * trace / n as f64) {
            return Err(Error::NotPositiveDefinite);
        }
        let g_inv = linalg::invert_jets(&g, Error::NotPositiveDefinite)?;
        let y: Vec<Jet> = coords[..n].to_vec();
        let rhs: Vec<Jet> = (0..n)
            .map(|b| {
                let mix: Jet = (0..n).map(|c| &ly[b].d(n + c) * &y[c]).sum();
                &mix - &l.d(n + b)
            })
            .collect();
        let spray: Vec<Jet> =
            (0..n).map(|a| (0..n).map(|b| &g_inv[[a, b]] * &rhs[b]).sum::<Jet>().scale(0.25)).collect();
        let nl = Tensor::from_fn(&[n, n], |ix| spray[ix[0]].d(ix[1]));
        let w = match &fs.weyl {
            Some(ws) => Some(ws.iter().map(|e| e.eval_jet(&user)).collect::<Result<Vec<_>>>()?),
            None => None,
        };
        Ok(FinslerJets { n, y, l, g, g_inv, spray, nl, w })
    }

    fn at(fs: &FinslerSpec, x: &[f64], y: &[f64], order: usize) -> Result<Self> {
        fs.check(x, y)?;
        let norm = libm::sqrt(y.iter().map(|v| v * v).sum::<f64>());
        if !(norm >= ZERO_SECTION_TOL) {
            return Err(Error::OnZeroSection(norm));
        }
        let coords = jet::lift_coordinates(&fs.internal_point(x, y), order);
        FinslerJets::from_coords(fs, &coords)
    }

    /// `(θ_a, ρ_a)` as jets.
    fn weyl(&self, choice: TangentWeyl) -> (Vec<Jet>, Vec<Jet>) {
        let n = self.n;
        match (choice, &self.w) {
            (TangentWeyl::Cartan, _) => (vec![Jet::zero(); n], (0..n).map(|a| self.l.d(a).scale(0.5)).collect()),
            (TangentWeyl::Spec, Some(w)) => {
                let theta: Vec<Jet> = w[n..].to_vec();
                let rho = (0..n)
                    .map(|b| {
                        let mut r = w[b].clone();
                        for a in 0..n {
                            r -= &theta[a] * &self.nl[[a, b]];
                        }
                        r
                    })
                    .collect();
                (theta, rho)
            }
            _ => (vec![Jet::zero(); n], vec![Jet::zero(); n]),
        }
    }

    fn fields(&self, choice: TangentWeyl) -> Result<AdaptedFields> {
        let n = self.n;
        let a = Tensor::from_fn(&[n, n], |ix| self.nl[[ix[1], ix[0]]].clone());
        let (theta, rho) = self.weyl(choice);
        AdaptedFields::from_parts(a, self.g.clone(), self.g.clone(), theta, rho)
    }
}

/// `g_bc = ½ ∂²F²/∂y^b∂y^c` and its inverse.
pub fn hessian_metric(fs: &FinslerSpec, x: &[f64], y: &[f64]) -> Result<HessianMetric> {
    let fj = FinslerJets::at(fs, x, y, 2)?;
    Ok(HessianMetric { g: linalg::values(&fj.g), g_inv: linalg::values(&fj.g_inv) })
}

/// Spray coefficients `G^a = ¼ g^ab (∂²F²/∂y^b∂x^c y^c - ∂F²/∂x^b)` and
/// their fiber derivatives.
pub fn spray(fs: &FinslerSpec, x: &[f64], y: &[f64]) -> Result<SprayData> {
    let n = fs.n;
    let fj = FinslerJets::at(fs, x, y, COEFF_ORDER)?;
    Ok(SprayData {
        g: fj.spray.iter().map(Jet::value).collect(),
        gb: fj.nl.map_ref(Jet::value),
        gbc: Tensor::from_fn(&[n, n, n], |ix| fj.nl[[ix[0], ix[1]]].d(ix[2]).value()),
    })
}

pub fn horizontal_frame(fs: &FinslerSpec, x: &[f64], y: &[f64]) -> Result<HorizontalFrame> {
    let n = fs.n;
    let sp = spray(fs, x, y)?;
    let frame = Tensor::from_fn(&[2 * n, 2 * n], |ix| {
        let (r, c) = (ix[0], ix[1]);
        match (r < n, c < n) {
            (true, true) => f64::from(u8::from(r == c)),
            (true, false) => -sp.gb[[c - n, r]],
            (false, false) => f64::from(u8::from(r == c)),
            (false, true) => 0.0,
        }
    });
    let coframe = Tensor::from_fn(&[2 * n, 2 * n], |ix| {
        let (r, c) = (ix[0], ix[1]);
        match (r < n, c < n) {
            (true, true) => f64::from(u8::from(r == c)),
            (true, false) => 0.0,
            (false, true) => sp.gb[[r - n, c]],
            (false, false) => f64::from(u8::from(r == c)),
        }
    });
    Ok(HorizontalFrame { frame, coframe })
}

/// The Sasaki metric `g_ab dx^a dx^b + g_ab δy^a δy^b` on the frame
/// `{δ/δx^a, ∂/∂y^a}`, evaluated from its coordinate expression.
pub fn sasaki_metric(fs: &FinslerSpec, x: &[f64], y: &[f64]) -> Result<Tensor<f64>> {
    let n = fs.n;
    let h = hessian_metric(fs, x, y)?;
    let fr = horizontal_frame(fs, x, y)?;
    let m = 2 * n;
    let coord = Tensor::from_fn(&[m, m], |ix| {
        let (r, s) = (ix[0], ix[1]);
        let mut v = 0.0;
        for a in 0..n {
            for b in 0..n {
                let g = h.g[[a, b]];
                v += g * fr.coframe[[a, r]] * fr.coframe[[b, s]];
                v += g * fr.coframe[[n + a, r]] * fr.coframe[[n + b, s]];
            }
        }
        v
    });
    Ok(Tensor::from_fn(&[m, m], |ix| {
        let mut v = 0.0;
        for r in 0..m {
            for s in 0..m {
                v += fr.frame[[ix[0], r]] * coord[[r, s]] * fr.frame[[ix[1], s]];
            }
        }
        v
    }))
}

/// Adapted components of the chosen one-form at a point.
pub fn tangent_weyl(fs: &FinslerSpec, choice: TangentWeyl, x: &[f64], y: &[f64]) -> Result<TangentWeylAdapted> {
    let fj = FinslerJets::at(fs, x, y, 3)?;
    let (theta, rho) = fj.weyl(choice);
    let gi = linalg::values(&fj.g_inv);
    let n = fs.n;
    let vals = |v: &[Jet]| -> Vec<f64> { v.iter().map(Jet::value).collect() };
    let (theta, rho) = (vals(&theta), vals(&rho));
    let raise = |v: &[f64]| -> Vec<f64> { (0..n).map(|a| (0..n).map(|b| gi[[a, b]] * v[b]).sum()).collect() };
    Ok(TangentWeylAdapted { rho_up: raise(&rho), theta_up: raise(&theta), rho, theta })
}

/// The Cartan form `ρ_a = ½ ∂F²/∂y^a`, `θ = 0`.
pub fn cartan_form(fs: &FinslerSpec, x: &[f64], y: &[f64]) -> Result<TangentWeylAdapted> {
    tangent_weyl(fs, TangentWeyl::Cartan, x, y)
}

/// The Vranceanu connection of the vertical foliation of `(TN, G, W)` with
/// coefficient jets of at least `order`.
pub fn finsler_connection(
    fs: &FinslerSpec,
    choice: TangentWeyl,
    x: &[f64],
    y: &[f64],
    order: usize,
) -> Result<AdaptedConnection> {
    let fj = FinslerJets::at(fs, x, y, order + COEFF_ORDER)?;
    Ok(AdaptedConnection::new(fj.fields(choice)?))
}

/// `C^c_ab`, `D^c_ab = ∂²G^c/∂y^a∂y^b`, `L = 0` and `F^c_ab`.
pub fn vranceanu_finsler(fs: &FinslerSpec, choice: TangentWeyl, x: &[f64], y: &[f64]) -> Result<ConnectionCoeffs> {
    Ok(finsler_connection(fs, choice, x, y, 0)?.coeffs())
}

fn horizontal_christoffel(fj: &FinslerJets, fields: &AdaptedFields) -> Tensor<Jet> {
    let n = fj.n;
    let dg = Tensor::from_fn(&[n, n, n], |ix| fields.delta(&fj.g[[ix[1], ix[2]]], ix[0]));
    Tensor::from_fn(&[n, n, n], |ix| {
        let (c, a, b) = (ix[0], ix[1], ix[2]);
        (0..n)
            .map(|d| &fj.g_inv[[c, d]] * &(&(&dg[[a, d, b]] + &dg[[b, a, d]]) - &dg[[d, a, b]]))
            .sum::<Jet>()
            .scale(0.5)
    })
}

/// `½ g^cd (δ_a g_db + δ_b g_ad - δ_d g_ab) - ∂G^c_a/∂y^b`, `[[c, a, b]]`.
pub fn landsberg_residual(fs: &FinslerSpec, x: &[f64], y: &[f64]) -> Result<Tensor<f64>> {
    let n = fs.n;
    let fj = FinslerJets::at(fs, x, y, COEFF_ORDER)?;
    let fields = fj.fields(TangentWeyl::Zero)?;
    let lc = horizontal_christoffel(&fj, &fields);
    Ok(Tensor::from_fn(&[n, n, n], |ix| {
        lc[[ix[0], ix[1], ix[2]]].value() - fj.nl[[ix[0], ix[1]]].d(ix[2]).value()
    }))
}

/// `F^c_ab` for the Cartan form written with `∂F²/∂y^v = 2 g_vu y^u`:
/// horizontal Christoffel part plus `½ y^u (g_ub δ^c_a + g_au δ^c_b - g_ab δ^c_u)`.
pub fn cartan_horizontal_coeffs(fs: &FinslerSpec, x: &[f64], y: &[f64]) -> Result<Tensor<f64>> {
    let n = fs.n;
    let fj = FinslerJets::at(fs, x, y, COEFF_ORDER)?;
    let fields = fj.fields(TangentWeyl::Zero)?;
    let lc = horizontal_christoffel(&fj, &fields);
    let g = linalg::values(&fj.g);
    Ok(Tensor::from_fn(&[n, n, n], |ix| {
        let (c, a, b) = (ix[0], ix[1], ix[2]);
        let mut w = -g[[a, b]] * y[c];
        for u in 0..n {
            if c == a {
                w += y[u] * g[[u, b]];
            }
            if c == b {
                w += y[u] * g[[a, u]];
            }
        }
        lc[[c, a, b]].value() + 0.5 * w
    }))
}

/// `ρ_a - g_au y^u` for the Cartan form.
pub fn euler_residual(fs: &FinslerSpec, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let h = hessian_metric(fs, x, y)?;
    let c = cartan_form(fs, x, y)?;
    let n = fs.n;
    Ok((0..n).map(|a| c.rho[a] - (0..n).map(|u| h.g[[a, u]] * y[u]).sum::<f64>()).collect())
}

/// Relative homogeneity errors of `F`, `F²`, `g`, `G^a`, `G^a_b` under
/// `y ↦ λy` (degrees 1, 2, 0, 2, 1).
pub fn homogeneity_errors(fs: &FinslerSpec, x: &[f64], y: &[f64], lambda: f64) -> Result<[f64; 5]> {
    let ly: Vec<f64> = y.iter().map(|v| lambda * v).collect();
    let rel = |a: &[f64], b: &[f64], deg: i32| -> f64 {
        let s = libm::pow(lambda, f64::from(deg));
        let scale = a.iter().fold(0.0f64, |m, v| m.max((s * v).abs())).max(1e-300);
        a.iter().zip(b).fold(0.0f64, |m, (u, v)| m.max((s * u - v).abs())) / scale.max(1.0)
    };
    let (f0, f1) = (fs.value(x, y)?, fs.value(x, &ly)?);
    let (h0, h1) = (hessian_metric(fs, x, y)?, hessian_metric(fs, x, &ly)?);
    let (s0, s1) = (spray(fs, x, y)?, spray(fs, x, &ly)?);
    Ok([
        rel(&[f0], &[f1], 1),
        rel(&[f0 * f0], &[f1 * f1], 2),
        rel(h0.g.data(), h1.g.data(), 0),
        rel(&s0.g, &s1.g, 2),
        rel(s0.gb.data(), s1.gb.data(), 1),
    ])
}

fn fiber_probes(n: usize, y: &[f64]) -> Vec<Vec<f64>> {
    let mut probes: Vec<Vec<f64>> =
        (0..n).map(|k| (0..n).map(|j| if j == k { 1.0 } else { 0.3 + 0.2 * j as f64 }).collect()).collect();
    probes.push(y.iter().enumerate().map(|(j, v)| if j == 0 { -v } else { 2.0 * v + 0.3 }).collect());
    probes
}

/// True when `g(x, ·)` agrees over a fixed set of fiber directions.
pub fn is_riemannian(fs: &FinslerSpec, x: &[f64], y: &[f64]) -> Result<bool> {
    let g0 = hessian_metric(fs, x, y)?.g;
    let scale = 1.0 + g0.max_abs();
    for probe in fiber_probes(fs.n, y) {
        if probe.iter().map(|v| v * v).sum::<f64>() < ZERO_SECTION_TOL {
            continue;
        }
        match hessian_metric(fs, x, &probe) {
            Ok(h) if h.g.max_abs_diff(&g0) <= RIEMANNIAN_TOL * scale => {}
            Ok(_) | Err(Error::NotPositiveDefinite) => return Ok(false),
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

fn require_riemannian(fs: &FinslerSpec, x: &[f64], y: &[f64]) -> Result<()> {
    if is_riemannian(fs, x, y)? {
        Ok(())
    } else {
        Err(Error::NotRiemannianBase)
    }
}

/// Christoffel symbols of the base metric, `[[c, a, b]]`, for a Riemannian
/// base.
pub fn base_christoffel(fs: &FinslerSpec, x: &[f64], y: &[f64]) -> Result<Tensor<f64>> {
    require_riemannian(fs, x, y)?;
    let fj = FinslerJets::at(fs, x, y, 3)?;
    Ok(base_christoffel_jets(&fj).map(|j| j.value()))
}

fn base_christoffel_jets(fj: &FinslerJets) -> Tensor<Jet> {
    let n = fj.n;
    let dg = Tensor::from_fn(&[n, n, n], |ix| fj.g[[ix[1], ix[2]]].d(n + ix[0]));
    Tensor::from_fn(&[n, n, n], |ix| {
        let (c, a, b) = (ix[0], ix[1], ix[2]);
        (0..n)
            .map(|d| &fj.g_inv[[c, d]] * &(&(&dg[[a, d, b]] + &dg[[b, a, d]]) - &dg[[d, a, b]]))
            .sum::<Jet>()
            .scale(0.5)
    })
}

/// Base Riemann tensor `R^a_bcd = ∂_c Γ^a_db - ∂_d Γ^a_cb + Γ^a_ce Γ^e_db - Γ^a_de Γ^e_cb`.
pub fn base_riemann(fs: &FinslerSpec, x: &[f64], y: &[f64]) -> Result<Tensor<f64>> {
    require_riemannian(fs, x, y)?;
    let fj = FinslerJets::at(fs, x, y, 4)?;
    Ok(riemann_from(&fj))
}

fn riemann_from(fj: &FinslerJets) -> Tensor<f64> {
    let n = fj.n;
    let gam = base_christoffel_jets(fj);
    Tensor::from_fn(&[n, n, n, n], |ix| {
        let (a, b, c, d) = (ix[0], ix[1], ix[2], ix[3]);
        let mut r = gam[[a, d, b]].d(n + c).value() - gam[[a, c, b]].d(n + d).value();
        for e in 0..n {
            r += gam[[a, c, e]].value() * gam[[e, d, b]].value();
            r -= gam[[a, d, e]].value() * gam[[e, c, b]].value();
        }
        r
    })
}

/// `R*^c_abi`, `T*^c_ab` and `R*^j_iab` of the Cartan-form connection over a
/// Riemannian base, from the connection coefficients.
pub fn finsler_curvature_torsion(fs: &FinslerSpec, x: &[f64], y: &[f64]) -> Result<RiemannianCurvature> {
    require_riemannian(fs, x, y)?;
    let conn = finsler_connection(fs, TangentWeyl::Cartan, x, y, 1)?;
    let cd = conn.curvature();
    Ok(RiemannianCurvature { vh: cd.tts, torsion: conn.torsion(), structural: cd.stt })
}

/// The same blocks from the base Riemann tensor and metric alone:
/// `R*^c_abi = ½(g_ib δ^c_a + g_ai δ^c_b - g_ab δ^c_i)`,
/// `T*^c_ab = R^c_dba y^d`, `R*^j_iab = R^j_iab`.
pub fn riemannian_closed_forms(fs: &FinslerSpec, x: &[f64], y: &[f64]) -> Result<RiemannianCurvature> {
    require_riemannian(fs, x, y)?;
    let n = fs.n;
    let fj = FinslerJets::at(fs, x, y, 4)?;
    let g = linalg::values(&fj.g);
    let r = riemann_from(&fj);
    let kd = |a: usize, b: usize| f64::from(u8::from(a == b));
    Ok(RiemannianCurvature {
        vh: Tensor::from_fn(&[n, n, n, n], |ix| {
            let (c, a, b, i) = (ix[0], ix[1], ix[2], ix[3]);
            0.5 * (g[[i, b]] * kd(c, a) + g[[a, i]] * kd(c, b) - g[[a, b]] * kd(c, i))
        }),
        torsion: Tensor::from_fn(&[n, n, n], |ix| (0..n).map(|d| r[[ix[0], d, ix[2], ix[1]]] * y[d]).sum()),
        structural: r,
    })
}

/// All curvature blocks of the chosen connection from the coefficient
/// formulas.
pub fn finsler_curvature(fs: &FinslerSpec, choice: TangentWeyl, x: &[f64], y: &[f64]) -> Result<CurvatureData> {
    Ok(finsler_connection(fs, choice, x, y, 1)?.curvature())
}

/// Largest component of `R*(V·, V·)` from the commutator definition.
pub fn vertical_curvature_max(fs: &FinslerSpec, choice: TangentWeyl, x: &[f64], y: &[f64]) -> Result<f64> {
    let n = fs.n;
    let conn = finsler_connection(fs, choice, x, y, 1)?;
    let mut m = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            for z in 0..2 * n {
                m = conn.curvature_oracle(a, b, z).iter().fold(m, |m, v| m.max(v.abs()));
            }
        }
    }
    Ok(m)
}

/// `∇*_X G` for the Cartan-form connection over a Riemannian base, blocks as
/// the coefficient formula states them (structural = vertical).
pub fn nabla_sasaki(fs: &FinslerSpec, xv: &TnVector, x: &[f64], y: &[f64]) -> Result<NablaG> {
    require_riemannian(fs, x, y)?;
    Ok(finsler_connection(fs, TangentWeyl::Cartan, x, y, 0)?.nabla_g_printed(&xv.internal()))
}

/// `X^a ∂g_ij/∂x^a` on the vertical block and `-(g_ci X^c y^i) g_ab` on the
/// horizontal one.
pub fn nabla_sasaki_closed(fs: &FinslerSpec, xv: &TnVector, x: &[f64], y: &[f64]) -> Result<NablaG> {
    require_riemannian(fs, x, y)?;
    let n = fs.n;
    let fj = FinslerJets::at(fs, x, y, 3)?;
    let g = linalg::values(&fj.g);
    let s: f64 = (0..n).flat_map(|c| (0..n).map(move |i| (c, i))).map(|(c, i)| g[[c, i]] * xv.horizontal[c] * y[i]).sum();
    Ok(NablaG {
        structural: Tensor::from_fn(&[n, n], |ix| {
            (0..n).map(|a| xv.horizontal[a] * fj.g[[ix[0], ix[1]]].d(n + a).value()).sum()
        }),
        transversal: g.map_ref(|v| -s * v),
        mixed: Tensor::zeros(&[n, n]),
    })
}

/// `∇*_X G` from the definition of the covariant derivative of a tensor.
pub fn nabla_sasaki_definitional(fs: &FinslerSpec, xv: &TnVector, x: &[f64], y: &[f64]) -> Result<NablaG> {
    Ok(finsler_connection(fs, TangentWeyl::Cartan, x, y, 0)?.nabla_g_definitional(&xv.internal()))
}

/// `∇*_X L` and `∇*_X L*` for `L = y^i ∂/∂y^i`, `L* = y^a δ/δx^a`, from the
/// connection coefficients and the frame derivatives of the components.
pub fn liouville_derivatives(
    fs: &FinslerSpec,
    choice: TangentWeyl,
    xv: &TnVector,
    x: &[f64],
    y: &[f64],
) -> Result<Liouville> {
    let n = fs.n;
    let fj = FinslerJets::at(fs, x, y, COEFF_ORDER)?;
    let conn = AdaptedConnection::new(fj.fields(choice)?);
    let xi = xv.internal();
    let zero = vec![Jet::zero(); n];
    let l: Vec<Jet> = fj.y.iter().cloned().chain(zero.iter().cloned()).collect();
    let l_star: Vec<Jet> = zero.iter().cloned().chain(fj.y.iter().cloned()).collect();
    let derive = |v: &[Jet]| -> Vec<f64> {
        (0..2 * n)
            .map(|c| {
                let mut s = 0.0;
                for (b, &xb) in xi.iter().enumerate() {
                    let mut r = conn.fields.frame_derivative(&v[c], b).value();
                    for (a, va) in v.iter().enumerate() {
                        r += va.value() * conn.omega(c, a, b).value();
                    }
                    s += xb * r;
                }
                s
            })
            .collect()
    };
    Ok(Liouville { l: TnVector::from_internal(&derive(&l), n), l_star: TnVector::from_internal(&derive(&l_star), n) })
}

/// The closed forms
/// `∇*_X L = [X^i + ½ X^j y^k (θ_j δ^i_k + θ_k δ^i_j - θ^i g_jk)] ∂/∂y^i` and
/// `∇*_X L* = [X^i δ^a_i + ½ X^b y^c (ρ_b δ^a_c + ρ_c δ^a_b - ρ^a g_bc)] δ/δx^a`.
pub fn liouville_closed(
    fs: &FinslerSpec,
    choice: TangentWeyl,
    xv: &TnVector,
    x: &[f64],
    y: &[f64],
) -> Result<Liouville> {
    let n = fs.n;
    let w = tangent_weyl(fs, choice, x, y)?;
    let g = hessian_metric(fs, x, y)?.g;
    let term = |xs: &[f64], form: &[f64], up: &[f64], i: usize| -> f64 {
        let xf: f64 = (0..n).map(|j| xs[j] * form[j]).sum();
        let yf: f64 = (0..n).map(|k| y[k] * form[k]).sum();
        let xy: f64 = (0..n).flat_map(|j| (0..n).map(move |k| (j, k))).map(|(j, k)| xs[j] * y[k] * g[[j, k]]).sum();
        0.5 * (xf * y[i] + yf * xs[i] - up[i] * xy)
    };
    let vert: Vec<f64> = (0..n).map(|i| xv.vertical[i] + term(&xv.vertical, &w.theta, &w.theta_up, i)).collect();
    let hor: Vec<f64> = (0..n).map(|a| xv.vertical[a] + term(&xv.horizontal, &w.rho, &w.rho_up, a)).collect();
    Ok(Liouville {
        l: TnVector::new(vec![0.0; n], vert),
        l_star: TnVector::new(hor, vec![0.0; n]),
    })
}

/// The Cartan-form identities `∇*_X L = VX`, `∇*_X L* = Θ(X) + ½ F² HX`, with
/// `Θ` sending `∂/∂y^i` to `δ/δx^i`.
pub fn liouville_global(fs: &FinslerSpec, xv: &TnVector, x: &[f64], y: &[f64]) -> Result<Liouville> {
    let n = fs.n;
    let f = fs.value(x, y)?;
    let hor = (0..n).map(|a| xv.vertical[a] + 0.5 * f * f * xv.horizontal[a]).collect();
    Ok(Liouville {
        l: TnVector::new(vec![0.0; n], xv.vertical.clone()),
        l_star: TnVector::new(hor, vec![0.0; n]),
    })
}

/// The Sasaki metric and one-form of a Finsler spec as a coordinate metric
/// on the internal chart `(y, x)`, so the generic foliated-chart machinery
/// (Koszul and global oracles, commutator curvature) applies to `TN`.
#[derive(Debug, Clone, Copy)]
pub struct SasakiSource<'a> {
    pub spec: &'a FinslerSpec,
    pub weyl: TangentWeyl,
}

impl MetricSource for SasakiSource<'_> {
    fn n(&self) -> usize {
        self.spec.n
    }
    fn p(&self) -> usize {
        self.spec.n
    }
    fn order_loss(&self) -> usize {
        3
    }
    fn fields(&self, coords: &[Jet]) -> Result<(Tensor<Jet>, Vec<Jet>)> {
        let n = self.spec.n;
        let fj = FinslerJets::from_coords(self.spec, coords)?;
        let (theta, rho) = fj.weyl(self.weyl);
        // gn[[a, b]] = g_ac G^c_b
        let gn = Tensor::from_fn(&[n, n], |ix| (0..n).map(|c| &fj.g[[ix[0], c]] * &fj.nl[[c, ix[1]]]).sum::<Jet>());
        let g = Tensor::from_fn(&[2 * n, 2 * n], |ix| {
            let (r, s) = (ix[0], ix[1]);
            match (r < n, s < n) {
                (true, true) => fj.g[[r, s]].clone(),
                (true, false) => gn[[r, s - n]].clone(),
                (false, true) => gn[[s, r - n]].clone(),
                (false, false) => {
                    let (a, b) = (r - n, s - n);
                    let mut v = fj.g[[a, b]].clone();
                    for c in 0..n {
                        v += &fj.nl[[c, a]] * &gn[[c, b]];
                    }
                    v
                }
            }
        });
        let mut w = theta.clone();
        for b in 0..n {
            let mut v = rho[b].clone();
            for a in 0..n {
                v += &theta[a] * &fj.nl[[a, b]];
            }
            w.push(v);
        }
        Ok((g, w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conn;

    fn euclid() -> FinslerSpec {
        let mut fs = FinslerSpec::new(2, &["x1", "x2"], &["y1", "y2"]).unwrap();
        fs.set_f_str("sqrt(y1^2+y2^2)").unwrap();
        fs
    }

    fn sphere() -> FinslerSpec {
        let mut fs = FinslerSpec::new(2, &["x1", "x2"], &["y1", "y2"]).unwrap();
        fs.set_f_str("sqrt(y1^2 + sin(x1)^2*y2^2)").unwrap();
        fs
    }

    fn quartic() -> FinslerSpec {
        let mut fs = FinslerSpec::new(2, &["x1", "x2"], &["y1", "y2"]).unwrap();
        fs.set_f_str("(y1^4+y2^4)^0.25").unwrap();
        fs
    }

    const QUARTER_PI: f64 = core::f64::consts::FRAC_PI_4;

    #[test]
    fn euclidean_hessian_and_cartan() {
        let fs = euclid();
        let h = hessian_metric(&fs, &[0.3, 0.1], &[3.0, 4.0]).unwrap();
        assert!(h.g.max_abs_diff(&Tensor::from_fn(&[2, 2], |i| f64::from(u8::from(i[0] == i[1])))) < 1e-14);
        let c = cartan_form(&fs, &[0.3, 0.1], &[3.0, 4.0]).unwrap();
        assert!((c.rho[0] - 3.0).abs() < 1e-13 && (c.rho[1] - 4.0).abs() < 1e-13);
        assert_eq!(c.theta, vec![0.0, 0.0]);
        assert!(matches!(hessian_metric(&fs, &[0.0, 0.0], &[0.0, 0.0]), Err(Error::OnZeroSection(_))));
    }

    #[test]
    fn quartic_hessian() {
        let h = hessian_metric(&quartic(), &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let r2 = core::f64::consts::SQRT_2;
        assert!((h.g[[0, 0]] - r2).abs() < 1e-13);
        assert!((h.g[[1, 1]] - r2).abs() < 1e-13);
        assert!((h.g[[0, 1]] + r2 / 2.0).abs() < 1e-13);
        let sp = spray(&quartic(), &[0.2, 0.1], &[1.0, 0.5]).unwrap();
        assert!(sp.g.iter().chain(sp.gb.data()).chain(sp.gbc.data()).all(|v| v.abs() < 1e-14));
        assert!(!is_riemannian(&quartic(), &[0.0, 0.0], &[1.0, 1.0]).unwrap());
    }

    #[test]
    fn sphere_spray_and_christoffel() {
        let fs = sphere();
        let (x, y) = ([QUARTER_PI, 0.2], [1.0, 1.0]);
        let sp = spray(&fs, &x, &y).unwrap();
        assert!((sp.g[0] + 0.25).abs() < 1e-13, "{:?}", sp.g);
        assert!((sp.g[1] - 1.0).abs() < 1e-13);
        let gam = base_christoffel(&fs, &x, &y).unwrap();
        assert!((gam[[0, 1, 1]] + 0.5).abs() < 1e-13);
        assert!((gam[[1, 0, 1]] - 1.0).abs() < 1e-13);
        let k = vranceanu_finsler(&fs, TangentWeyl::Cartan, &x, &y).unwrap();
        assert!(k.c.max_abs() < 1e-13);
        assert!(k.d.max_abs_diff(&gam) < 1e-12);
        let c = cartan_form(&fs, &x, &[0.0, 1.0]).unwrap();
        assert!(c.rho[0].abs() < 1e-14 && (c.rho[1] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn frame_pairing_is_identity() {
        let fs = sphere();
        let fr = horizontal_frame(&fs, &[0.9, 0.1], &[0.4, -1.1]).unwrap();
        let id = Tensor::from_fn(&[4, 4], |i| f64::from(u8::from(i[0] == i[1])));
        assert!(fr.pairing().max_abs_diff(&id) < 1e-14);
        let s = sasaki_metric(&fs, &[0.9, 0.1], &[0.4, -1.1]).unwrap();
        let g = hessian_metric(&fs, &[0.9, 0.1], &[0.4, -1.1]).unwrap().g;
        for a in 0..2 {
            for b in 0..2 {
                assert!((s[[a, b]] - g[[a, b]]).abs() < 1e-14);
                assert!((s[[a + 2, b + 2]] - g[[a, b]]).abs() < 1e-14);
                assert!(s[[a, b + 2]].abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sphere_curvature_closed_forms() {
        let fs = sphere();
        let (x, y) = ([QUARTER_PI, 0.2], [1.0, 1.0]);
        let r = base_riemann(&fs, &x, &y).unwrap();
        assert!((r[[0, 1, 0, 1]] - 0.5).abs() < 1e-12);
        let a = finsler_curvature_torsion(&fs, &x, &y).unwrap();
        let b = riemannian_closed_forms(&fs, &x, &y).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10, "{a:?}\n{b:?}");
        assert!((a.torsion[[0, 0, 1]] + 0.5).abs() < 1e-12);
        assert!(vertical_curvature_max(&fs, TangentWeyl::Cartan, &x, &y).unwrap() < 1e-12);
    }

    #[test]
    fn flat_base_has_no_torsion() {
        let fs = euclid();
        let a = finsler_curvature_torsion(&fs, &[0.1, 0.2], &[0.7, -0.3]).unwrap();
        assert!(a.torsion.max_abs() < 1e-14 && a.structural.max_abs() < 1e-14);
        assert!((a.vh[[0, 0, 0, 0]] - 0.5).abs() < 1e-14);
        assert!(matches!(finsler_curvature_torsion(&quartic(), &[0.0; 2], &[1.0, 0.3]), Err(Error::NotRiemannianBase)));
    }

    #[test]
    fn liouville_on_euclidean() {
        let fs = euclid();
        let (x, y) = ([0.0, 0.0], [3.0, 4.0]);
        let xv = TnVector::new(vec![1.0, 0.0], vec![0.0, 0.0]);
        let l = liouville_derivatives(&fs, TangentWeyl::Cartan, &xv, &x, &y).unwrap();
        assert!((l.l_star.horizontal[0] - 12.5).abs() < 1e-12 && l.l_star.horizontal[1].abs() < 1e-12);
        let xv = TnVector::new(vec![0.0, 0.0], vec![1.0, 2.0]);
        let l = liouville_derivatives(&fs, TangentWeyl::Cartan, &xv, &x, &y).unwrap();
        assert!((l.l.vertical[0] - 1.0).abs() < 1e-13 && (l.l.vertical[1] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn liouville_forms_agree() {
        for fs in [sphere(), quartic()] {
            let (x, y) = ([0.8, 0.3], [0.6, -1.3]);
            let xv = TnVector::new(vec![0.4, -0.9], vec![1.1, 0.2]);
            let raw = liouville_derivatives(&fs, TangentWeyl::Cartan, &xv, &x, &y).unwrap();
            let closed = liouville_closed(&fs, TangentWeyl::Cartan, &xv, &x, &y).unwrap();
            let global = liouville_global(&fs, &xv, &x, &y).unwrap();
            assert!(raw.max_abs_diff(&closed) < 1e-10, "{raw:?}\n{closed:?}");
            assert!(raw.max_abs_diff(&global) < 1e-10);
        }
    }

    #[test]
    fn general_weyl_liouville() {
        let mut fs = sphere();
        fs.set_weyl_str(0, "x2*y1").unwrap();
        fs.set_weyl_str(2, "0.5").unwrap();
        fs.set_weyl_str(3, "x1*y2").unwrap();
        let (x, y) = ([0.8, 0.3], [0.6, -1.3]);
        let xv = TnVector::new(vec![0.4, -0.9], vec![1.1, 0.2]);
        let raw = liouville_derivatives(&fs, TangentWeyl::Spec, &xv, &x, &y).unwrap();
        let closed = liouville_closed(&fs, TangentWeyl::Spec, &xv, &x, &y).unwrap();
        assert!(raw.max_abs_diff(&closed) < 1e-10, "{raw:?}\n{closed:?}");
    }

    #[test]
    fn sasaki_source_matches_direct_connection() {
        let mut fs = sphere();
        fs.set_weyl_str(1, "x1*y2").unwrap();
        fs.set_weyl_str(2, "y1").unwrap();
        let (x, y) = ([0.7, 0.1], [0.5, 0.9]);
        let pt = fs.internal_point(&x, &y);
        for choice in [TangentWeyl::Cartan, TangentWeyl::Spec] {
            let src = SasakiSource { spec: &fs, weyl: choice };
            let direct = vranceanu_finsler(&fs, choice, &x, &y).unwrap();
            let via = conn::vranceanu_coeffs(&src, &pt).unwrap();
            assert!(direct.max_abs_diff(&via) < 1e-11);
            let global = conn::vranceanu_global_oracle(&src, &pt).unwrap();
            assert!(direct.max_abs_diff(&global) < 1e-10, "{direct:?}\n{global:?}");
        }
    }

    #[test]
    fn cartan_paths_agree_and_landsberg() {
        for fs in [sphere(), quartic()] {
            let (x, y) = ([0.8, 0.3], [0.6, -1.3]);
            let k = vranceanu_finsler(&fs, TangentWeyl::Cartan, &x, &y).unwrap();
            let f44 = cartan_horizontal_coeffs(&fs, &x, &y).unwrap();
            assert!(k.f.max_abs_diff(&f44) < 1e-12);
            assert!(landsberg_residual(&fs, &x, &y).unwrap().max_abs() < 1e-11);
            assert!(euler_residual(&fs, &x, &y).unwrap().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn homogeneity_cascade() {
        for fs in [sphere(), quartic()] {
            for lam in [0.5, 2.0, 3.0] {
                let e = homogeneity_errors(&fs, &[0.8, 0.3], &[0.6, -1.3], lam).unwrap();
                assert!(e.iter().all(|v| *v < 1e-12), "{e:?}");
            }
        }
    }

    #[test]
    fn nabla_sasaki_forms() {
        let fs = sphere();
        let (x, y) = ([0.8, 0.3], [0.6, -1.3]);
        let xv = TnVector::new(vec![0.4, -0.9], vec![1.1, 0.2]);
        let printed = nabla_sasaki(&fs, &xv, &x, &y).unwrap();
        let closed = nabla_sasaki_closed(&fs, &xv, &x, &y).unwrap();
        assert!(printed.max_abs_diff(&closed) < 1e-12, "{printed:?}\n{closed:?}");
        let vert_only = TnVector::new(vec![0.0, 0.0], vec![1.1, 0.2]);
        assert!(nabla_sasaki(&fs, &vert_only, &x, &y).unwrap().transversal.max_abs() < 1e-14);
    }
}
