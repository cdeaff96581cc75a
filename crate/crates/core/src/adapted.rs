//! Adapted connections on a chart split into structural and transversal
//! coordinates, shared by the foliated-manifold and tangent-bundle layers.
//!
//! Coordinates `0..n` are structural (`∂_i`), `n..n+p` transversal. The
//! adapted frame is `E_i = ∂_i`, `E_{n+α} = δ_α = ∂_{n+α} - A^i_α ∂_i`. Every
//! field is held as a jet in all `n + p` coordinates, so derivatives of the
//! coefficients come from the same evaluation.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::linalg::invert_jets;
use crate::tensor::Tensor;

/// Frame-level data of the split: `A`, both metric blocks and the adapted
/// Weyl components.
#[derive(Debug, Clone)]
pub struct AdaptedFields {
    pub n: usize,
    pub p: usize,
    /// `a[[α, i]] = A^i_α`.
    pub a: Tensor<Jet>,
    pub gs: Tensor<Jet>,
    pub gs_inv: Tensor<Jet>,
    pub gt: Tensor<Jet>,
    pub gt_inv: Tensor<Jet>,
    pub theta: Vec<Jet>,
    pub rho: Vec<Jet>,
}

impl AdaptedFields {
    /// Splits a coordinate metric and Weyl form.
    pub fn from_metric(n: usize, p: usize, g: &Tensor<Jet>, w: &[Jet]) -> Result<Self> {
        let gs = Tensor::from_fn(&[n, n], |i| g[[i[0], i[1]]].clone());
        let gs_inv = invert_jets(&gs, Error::DegenerateMetric)?;
        let a = Tensor::from_fn(&[p, n], |ix| {
            let (al, i) = (ix[0], ix[1]);
            (0..n).map(|j| &gs_inv[[i, j]] * &g[[j, n + al]]).sum()
        });
        let gt = Tensor::from_fn(&[p, p], |ix| {
            let (al, be) = (n + ix[0], n + ix[1]);
            let mut v = g[[al, be]].clone();
            for i in 0..n {
                v -= &a[[ix[0], i]] * &g[[i, be]];
                v -= &a[[ix[1], i]] * &g[[al, i]];
                for j in 0..n {
                    v += &(&a[[ix[0], i]] * &a[[ix[1], j]]) * &g[[i, j]];
                }
            }
            v
        });
        let gt_inv = invert_jets(&gt, Error::DegenerateTransversalMetric)?;
        let theta = w[..n].to_vec();
        let rho = (0..p)
            .map(|al| {
                let mut r = w[n + al].clone();
                for i in 0..n {
                    r -= &w[i] * &a[[al, i]];
                }
                r
            })
            .collect();
        Ok(AdaptedFields { n, p, a, gs, gs_inv, gt, gt_inv, theta, rho })
    }

    /// Builds the split directly from adapted data.
    pub fn from_parts(
        a: Tensor<Jet>,
        gs: Tensor<Jet>,
        gt: Tensor<Jet>,
        theta: Vec<Jet>,
        rho: Vec<Jet>,
    ) -> Result<Self> {
        let (p, n) = (a.shape()[0], a.shape()[1]);
        let gs_inv = invert_jets(&gs, Error::DegenerateMetric)?;
        let gt_inv = invert_jets(&gt, Error::DegenerateTransversalMetric)?;
        Ok(AdaptedFields { n, p, a, gs, gs_inv, gt, gt_inv, theta, rho })
    }

    pub fn dim(&self) -> usize {
        self.n + self.p
    }

    /// `δ_α f = ∂_{n+α} f - A^i_α ∂_i f`.
    pub fn delta(&self, f: &Jet, alpha: usize) -> Jet {
        let mut r = f.d(self.n + alpha);
        for i in 0..self.n {
            r -= &self.a[[alpha, i]] * &f.d(i);
        }
        r
    }

    /// Derivative along the adapted frame vector `E_b`.
    pub fn frame_derivative(&self, f: &Jet, b: usize) -> Jet {
        if b < self.n {
            f.d(b)
        } else {
            self.delta(f, b - self.n)
        }
    }

    pub fn theta_up(&self) -> Vec<Jet> {
        raise(&self.gs_inv, &self.theta)
    }

    pub fn rho_up(&self) -> Vec<Jet> {
        raise(&self.gt_inv, &self.rho)
    }

    /// Coordinate components of the adapted frame vector `E_b`.
    pub fn frame_field(&self, b: usize) -> Vec<Jet> {
        let mut v = vec![Jet::zero(); self.dim()];
        v[b] = Jet::constant(1.0);
        if b >= self.n {
            for i in 0..self.n {
                v[i] = -&self.a[[b - self.n, i]];
            }
        }
        v
    }

    /// Adapted components of a vector given in coordinates.
    pub fn to_adapted(&self, v: &[Jet]) -> Vec<Jet> {
        let mut out = v.to_vec();
        for i in 0..self.n {
            for al in 0..self.p {
                out[i] += &self.a[[al, i]] * &v[self.n + al];
            }
        }
        out
    }

    /// Coordinate components of a vector given in adapted components.
    pub fn from_adapted(&self, v: &[Jet]) -> Vec<Jet> {
        let mut out = v.to_vec();
        for i in 0..self.n {
            for al in 0..self.p {
                out[i] -= &self.a[[al, i]] * &v[self.n + al];
            }
        }
        out
    }

    /// The adapted metric `diag(gs, gt)` entry for frame indices `a, b`.
    pub fn adapted_metric(&self, a: usize, b: usize) -> Jet {
        let n = self.n;
        match (a < n, b < n) {
            (true, true) => self.gs[[a, b]].clone(),
            (false, false) => self.gt[[a - n, b - n]].clone(),
            _ => Jet::zero(),
        }
    }
}

fn raise(inv: &Tensor<Jet>, v: &[Jet]) -> Vec<Jet> {
    let m = v.len();
    (0..m).map(|k| (0..m).map(|l| &inv[[k, l]] * &v[l]).sum()).collect()
}

/// Lie bracket of two vector fields given by coordinate-component jets.
pub fn bracket(u: &[Jet], v: &[Jet]) -> Vec<Jet> {
    let dim = u.len();
    (0..dim)
        .map(|c| {
            let mut r = Jet::zero();
            for a in 0..dim {
                if !is_zero(&u[a]) {
                    r += &u[a] * &v[c].d(a);
                }
                if !is_zero(&v[a]) {
                    r -= &v[a] * &u[c].d(a);
                }
            }
            r
        })
        .collect()
}

fn is_zero(j: &Jet) -> bool {
    j.coeffs().iter().all(|&c| c == 0.0)
}

/// Coefficients of an adapted connection as jets:
/// `∇_{∂_j} ∂_i = C^k_ij ∂_k`, `∇_{δ_α} ∂_i = D^k_iα ∂_k`,
/// `∇_{∂_i} δ_α = 0`, `∇_{δ_β} δ_α = F^γ_αβ δ_γ`.
#[derive(Debug, Clone)]
pub struct AdaptedConnection {
    pub fields: AdaptedFields,
    /// `christoffel[[k, i, j]]`, structural derivatives only.
    pub christoffel: Tensor<Jet>,
    /// `c[[k, i, j]] = C^k_ij`.
    pub c: Tensor<Jet>,
    /// `d[[k, i, α]] = D^k_iα = ∂_i A^k_α`.
    pub d: Tensor<Jet>,
    /// `f[[γ, α, β]] = F^γ_αβ`.
    pub f: Tensor<Jet>,
}

/// Real-valued curvature blocks.
///
/// `ttt[[μ,α,β,γ]]`: `R(δ_γ, δ_β) δ_α`; `tts[[μ,α,β,i]]`: `R(∂_i, δ_β) δ_α`;
/// `tss[[μ,α,i,j]]`: `R(∂_j, ∂_i) δ_α`; `stt[[h,i,α,β]]`: `R(δ_α, δ_β) ∂_i`;
/// `sts[[h,i,α,k]]`: `R(∂_k, δ_α) ∂_i`; `sss[[h,i,j,k]]`: `R(∂_k, ∂_j) ∂_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    pub ttt: Tensor<f64>,
    pub tts: Tensor<f64>,
    pub tss: Tensor<f64>,
    pub stt: Tensor<f64>,
    pub sts: Tensor<f64>,
    pub sss: Tensor<f64>,
}

impl CurvatureData {
    pub fn blocks(&self) -> [(&'static str, &Tensor<f64>); 6] {
        [
            ("transversal_ttt", &self.ttt),
            ("transversal_tts", &self.tts),
            ("transversal_tss", &self.tss),
            ("structural_stt", &self.stt),
            ("structural_sts", &self.sts),
            ("structural_sss", &self.sss),
        ]
    }

    /// Largest entrywise difference over all blocks.
    pub fn max_abs_diff(&self, other: &CurvatureData) -> f64 {
        self.blocks()
            .iter()
            .zip(other.blocks().iter())
            .map(|((_, a), (_, b))| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// The three blocks of `∇_X g` in the adapted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct NablaG {
    /// `(∇_X g)(∂_i, ∂_j)`.
    pub structural: Tensor<f64>,
    /// `(∇_X g)(δ_α, δ_β)`.
    pub transversal: Tensor<f64>,
    /// `(∇_X g)(∂_i, δ_α)`.
    pub mixed: Tensor<f64>,
}

impl NablaG {
    pub fn max_abs_diff(&self, o: &NablaG) -> f64 {
        self.structural
            .max_abs_diff(&o.structural)
            .max(self.transversal.max_abs_diff(&o.transversal))
            .max(self.mixed.max_abs_diff(&o.mixed))
    }
}

/// Real-valued connection coefficients in the adapted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoeffs {
    pub n: usize,
    pub p: usize,
    /// `c[[k, i, j]] = C^k_ij`.
    pub c: Tensor<f64>,
    /// `d[[k, i, α]] = D^k_iα`.
    pub d: Tensor<f64>,
    /// `l[[γ, α, i]] = L^γ_αi`.
    pub l: Tensor<f64>,
    /// `f[[γ, α, β]] = F^γ_αβ`.
    pub f: Tensor<f64>,
}

impl ConnectionCoeffs {
    pub fn blocks(&self) -> [(&'static str, &Tensor<f64>); 4] {
        [("C", &self.c), ("D", &self.d), ("L", &self.l), ("F", &self.f)]
    }

    pub fn max_abs_diff(&self, o: &ConnectionCoeffs) -> f64 {
        self.blocks()
            .iter()
            .zip(o.blocks().iter())
            .map(|((_, a), (_, b))| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    /// `ω^C_AB` with `∇_{E_B} E_A = ω^C_AB E_C` over frame indices.
    pub fn omega(&self, out: usize, a: usize, b: usize) -> f64 {
        let n = self.n;
        match (a < n, b < n, out < n) {
            (true, true, true) => self.c[[out, a, b]],
            (true, false, true) => self.d[[out, a, b - n]],
            (false, true, false) => self.l[[out - n, a - n, b]],
            (false, false, false) => self.f[[out - n, a - n, b - n]],
            _ => 0.0,
        }
    }

    /// Rebuilds the blocks from a full `ω` table `[C, A, B]`.
    pub fn from_omega(n: usize, p: usize, omega: &Tensor<f64>) -> Self {
        ConnectionCoeffs {
            n,
            p,
            c: Tensor::from_fn(&[n, n, n], |i| omega[[i[0], i[1], i[2]]]),
            d: Tensor::from_fn(&[n, n, p], |i| omega[[i[0], i[1], n + i[2]]]),
            l: Tensor::from_fn(&[p, p, n], |i| omega[[n + i[0], n + i[1], i[2]]]),
            f: Tensor::from_fn(&[p, p, p], |i| omega[[n + i[0], n + i[1], n + i[2]]]),
        }
    }
}

impl AdaptedConnection {
    /// The adapted connection whose structural part is the Weyl-compatible
    /// connection built from `gs, θ` and whose transversal part is the
    /// transversal Weyl connection built from `gt, ρ`.
    pub fn new(fields: AdaptedFields) -> Self {
        let (n, p) = (fields.n, fields.p);
        let dgs = Tensor::from_fn(&[n, n, n], |ix| fields.gs[[ix[1], ix[2]]].d(ix[0]));
        let christoffel = Tensor::from_fn(&[n, n, n], |ix| {
            let (k, i, j) = (ix[0], ix[1], ix[2]);
            let s: Jet = (0..n)
                .map(|l| &fields.gs_inv[[k, l]] * &(&(&dgs[[i, l, j]] + &dgs[[j, i, l]]) - &dgs[[l, i, j]]))
                .sum();
            s.scale(0.5)
        });
        let theta_up = fields.theta_up();
        let c = Tensor::from_fn(&[n, n, n], |ix| {
            let (k, i, j) = (ix[0], ix[1], ix[2]);
            let mut w = -&(&fields.gs[[i, j]] * &theta_up[k]);
            if k == j {
                w += &fields.theta[i];
            }
            if k == i {
                w += &fields.theta[j];
            }
            &christoffel[[k, i, j]] + &w.scale(0.5)
        });
        let d = Tensor::from_fn(&[n, n, p], |ix| fields.a[[ix[2], ix[0]]].d(ix[1]));
        let dgt = Tensor::from_fn(&[p, p, p], |ix| fields.delta(&fields.gt[[ix[1], ix[2]]], ix[0]));
        let rho_up = fields.rho_up();
        let f = Tensor::from_fn(&[p, p, p], |ix| {
            let (g, al, be) = (ix[0], ix[1], ix[2]);
            let lc: Jet = (0..p)
                .map(|mu| {
                    &fields.gt_inv[[g, mu]]
                        * &(&(&dgt[[al, mu, be]] + &dgt[[be, al, mu]]) - &dgt[[mu, al, be]])
                })
                .sum();
            let mut w = -&(&fields.gt[[al, be]] * &rho_up[g]);
            if g == be {
                w += &fields.rho[al];
            }
            if g == al {
                w += &fields.rho[be];
            }
            (&lc + &w).scale(0.5)
        });
        AdaptedConnection { fields, christoffel, c, d, f }
    }

    pub fn n(&self) -> usize {
        self.fields.n
    }

    pub fn p(&self) -> usize {
        self.fields.p
    }

    /// `ω^C_AB` as a jet.
    pub fn omega(&self, out: usize, a: usize, b: usize) -> Jet {
        let n = self.n();
        match (a < n, b < n, out < n) {
            (true, true, true) => self.c[[out, a, b]].clone(),
            (true, false, true) => self.d[[out, a, b - n]].clone(),
            (false, false, false) => self.f[[out - n, a - n, b - n]].clone(),
            _ => Jet::zero(),
        }
    }

    pub fn coeffs(&self) -> ConnectionCoeffs {
        let (n, p) = (self.n(), self.p());
        ConnectionCoeffs {
            n,
            p,
            c: self.c.map_ref(Jet::value),
            d: self.d.map_ref(Jet::value),
            l: Tensor::zeros(&[p, p, n]),
            f: self.f.map_ref(Jet::value),
        }
    }

    /// `T^k_αβ = δ_β A^k_α - δ_α A^k_β`, the structural part of `[δ_α, δ_β]`.
    pub fn torsion_jets(&self) -> Tensor<Jet> {
        let fl = &self.fields;
        Tensor::from_fn(&[self.n(), self.p(), self.p()], |ix| {
            let (k, al, be) = (ix[0], ix[1], ix[2]);
            &fl.delta(&fl.a[[al, k]], be) - &fl.delta(&fl.a[[be, k]], al)
        })
    }

    pub fn torsion(&self) -> Tensor<f64> {
        self.torsion_jets().map(|j| j.value())
    }

    /// Curvature blocks from the closed coefficient formulas.
    pub fn curvature(&self) -> CurvatureData {
        let (n, p) = (self.n(), self.p());
        let fl = &self.fields;
        let (c, d, f) = (&self.c, &self.d, &self.f);
        let t = self.torsion_jets();
        let ttt = Tensor::from_fn(&[p, p, p, p], |ix| {
            let (mu, al, be, ga) = (ix[0], ix[1], ix[2], ix[3]);
            let mut r = &fl.delta(&f[[mu, al, be]], ga) - &fl.delta(&f[[mu, al, ga]], be);
            for e in 0..p {
                r += &f[[e, al, be]] * &f[[mu, e, ga]];
                r -= &f[[e, al, ga]] * &f[[mu, e, be]];
            }
            r.value()
        });
        let tts = Tensor::from_fn(&[p, p, p, n], |ix| f[[ix[0], ix[1], ix[2]]].d(ix[3]).value());
        let tss = Tensor::zeros(&[p, p, n, n]);
        let stt = Tensor::from_fn(&[n, n, p, p], |ix| {
            let (h, i, al, be) = (ix[0], ix[1], ix[2], ix[3]);
            let mut r = &fl.delta(&d[[h, i, be]], al) - &fl.delta(&d[[h, i, al]], be);
            for k in 0..n {
                r += &d[[k, i, be]] * &d[[h, k, al]];
                r -= &d[[k, i, al]] * &d[[h, k, be]];
                r -= &t[[k, al, be]] * &c[[h, i, k]];
            }
            r.value()
        });
        let sts = Tensor::from_fn(&[n, n, p, n], |ix| {
            let (h, i, al, k) = (ix[0], ix[1], ix[2], ix[3]);
            let mut r = &d[[h, i, al]].d(k) - &fl.delta(&c[[h, i, k]], al);
            for j in 0..n {
                r += &d[[j, i, al]] * &c[[h, j, k]];
                r -= &c[[j, i, k]] * &d[[h, j, al]];
                r += &d[[j, k, al]] * &c[[h, i, j]];
            }
            r.value()
        });
        let sss = Tensor::from_fn(&[n, n, n, n], |ix| {
            let (h, i, j, k) = (ix[0], ix[1], ix[2], ix[3]);
            let mut r = &c[[h, i, j]].d(k) - &c[[h, i, k]].d(j);
            for l in 0..n {
                r += &c[[l, i, j]] * &c[[h, l, k]];
                r -= &c[[l, i, k]] * &c[[h, l, j]];
            }
            r.value()
        });
        CurvatureData { ttt, tts, tss, stt, sts, sss }
    }

    /// Adapted components of `R(E_x, E_y) E_z` from the definition
    /// `∇_X ∇_Y Z - ∇_Y ∇_X Z - ∇_[X,Y] Z`, with the bracket of the frame
    /// fields taken in coordinates.
    pub fn curvature_oracle(&self, x: usize, y: usize, z: usize) -> Vec<f64> {
        let dim = self.fields.dim();
        let fl = &self.fields;
        let br = fl.to_adapted(&bracket(&fl.frame_field(x), &fl.frame_field(y)));
        (0..dim)
            .map(|out| {
                let mut r = &fl.frame_derivative(&self.omega(out, z, y), x)
                    - &fl.frame_derivative(&self.omega(out, z, x), y);
                for dd in 0..dim {
                    r += &self.omega(dd, z, y) * &self.omega(out, dd, x);
                    r -= &self.omega(dd, z, x) * &self.omega(out, dd, y);
                    r -= &br[dd] * &self.omega(out, z, dd);
                }
                r.value()
            })
            .collect()
    }

    /// Every curvature block rebuilt from [`AdaptedConnection::curvature_oracle`],
    /// together with the largest component that leaves its distribution
    /// (zero for an adapted connection).
    pub fn curvature_from_oracle(&self) -> (CurvatureData, f64) {
        let (n, p) = (self.n(), self.p());
        let dim = n + p;
        let mut table: Vec<Option<Vec<f64>>> = vec![None; dim * dim * dim];
        let mut leak = 0.0f64;
        let mut get = |x: usize, y: usize, z: usize| -> Vec<f64> {
            let slot = &mut table[(x * dim + y) * dim + z];
            if slot.is_none() {
                let v = self.curvature_oracle(x, y, z);
                let off = if z < n { &v[n..] } else { &v[..n] };
                leak = off.iter().fold(leak, |m, c| m.max(c.abs()));
                *slot = Some(v);
            }
            slot.clone().expect("filled")
        };
        let ttt = Tensor::from_fn(&[p, p, p, p], |ix| get(n + ix[3], n + ix[2], n + ix[1])[n + ix[0]]);
        let tts = Tensor::from_fn(&[p, p, p, n], |ix| get(ix[3], n + ix[2], n + ix[1])[n + ix[0]]);
        let tss = Tensor::from_fn(&[p, p, n, n], |ix| get(ix[3], ix[2], n + ix[1])[n + ix[0]]);
        let stt = Tensor::from_fn(&[n, n, p, p], |ix| get(n + ix[2], n + ix[3], ix[1])[ix[0]]);
        let sts = Tensor::from_fn(&[n, n, p, n], |ix| get(ix[3], n + ix[2], ix[1])[ix[0]]);
        let sss = Tensor::from_fn(&[n, n, n, n], |ix| get(ix[3], ix[2], ix[1])[ix[0]]);
        // mixed argument orders not covered by the six blocks
        for x in 0..dim {
            for y in 0..dim {
                for z in 0..dim {
                    get(x, y, z);
                }
            }
        }
        (CurvatureData { ttt, tts, tss, stt, sts, sss }, leak)
    }

    /// `E5[[k, i, j]] = (∇_{∂_k} g)(∂_i, ∂_j) + θ_k g_ij`.
    pub fn compatibility_tensor(&self) -> Tensor<f64> {
        let n = self.n();
        let fl = &self.fields;
        Tensor::from_fn(&[n, n, n], |ix| {
            let (k, i, j) = (ix[0], ix[1], ix[2]);
            let mut r = fl.gs[[i, j]].d(k);
            for h in 0..n {
                r -= &self.c[[h, i, k]] * &fl.gs[[h, j]];
                r -= &self.c[[h, j, k]] * &fl.gs[[i, h]];
            }
            r += &fl.theta[k] * &fl.gs[[i, j]];
            r.value()
        })
    }

    /// `∇_X g` with the blocks written exactly as the coefficient formula
    /// for a foliated chart states them (no `D` terms in the structural
    /// block, mixed block identically zero).
    pub fn nabla_g_printed(&self, x: &[f64]) -> NablaG {
        let (n, p) = (self.n(), self.p());
        let fl = &self.fields;
        let structural = Tensor::from_fn(&[n, n], |ix| {
            let (i, j) = (ix[0], ix[1]);
            let mut s = 0.0;
            for k in 0..n {
                let mut r = fl.gs[[i, j]].d(k).value();
                for h in 0..n {
                    r -= self.c[[h, i, k]].value() * fl.gs[[h, j]].value();
                    r -= self.c[[h, k, j]].value() * fl.gs[[i, h]].value();
                }
                s += x[k] * r;
            }
            for al in 0..p {
                s += x[n + al] * fl.delta(&fl.gs[[i, j]], al).value();
            }
            s
        });
        let transversal = Tensor::from_fn(&[p, p], |ix| {
            let (al, be) = (ix[0], ix[1]);
            let mut s = 0.0;
            for i in 0..n {
                s += x[i] * fl.gt[[al, be]].d(i).value();
            }
            for mu in 0..p {
                let mut r = fl.delta(&fl.gt[[al, be]], mu).value();
                for rh in 0..p {
                    r -= self.f[[rh, al, mu]].value() * fl.gt[[rh, be]].value();
                    r -= self.f[[rh, mu, be]].value() * fl.gt[[al, rh]].value();
                }
                s += x[n + mu] * r;
            }
            s
        });
        NablaG { structural, transversal, mixed: Tensor::zeros(&[n, p]) }
    }

    /// `∇_X g` in closed form: `-(X^k θ_k) g_ij + X^α δ_α g_ij` and
    /// `X^i ∂_i g_αβ - (X^μ ρ_μ) g_αβ`.
    pub fn nabla_g_closed(&self, x: &[f64]) -> NablaG {
        let (n, p) = (self.n(), self.p());
        let fl = &self.fields;
        let xt: f64 = (0..n).map(|k| x[k] * fl.theta[k].value()).sum();
        let xr: f64 = (0..p).map(|m| x[n + m] * fl.rho[m].value()).sum();
        let structural = Tensor::from_fn(&[n, n], |ix| {
            let g = &fl.gs[[ix[0], ix[1]]];
            let along: f64 = (0..p).map(|al| x[n + al] * fl.delta(g, al).value()).sum();
            -xt * g.value() + along
        });
        let transversal = Tensor::from_fn(&[p, p], |ix| {
            let g = &fl.gt[[ix[0], ix[1]]];
            let along: f64 = (0..n).map(|i| x[i] * g.d(i).value()).sum();
            along - xr * g.value()
        });
        NablaG { structural, transversal, mixed: Tensor::zeros(&[n, p]) }
    }

    /// `∇_X g` from the definition
    /// `X(g(E_A, E_B)) - g(∇_X E_A, E_B) - g(E_A, ∇_X E_B)`.
    pub fn nabla_g_definitional(&self, x: &[f64]) -> NablaG {
        let (n, p) = (self.n(), self.p());
        let dim = n + p;
        let fl = &self.fields;
        let entry = |a: usize, b: usize| -> f64 {
            let mut s = 0.0;
            for (xb, &xv) in x.iter().enumerate() {
                if xv == 0.0 {
                    continue;
                }
                let g = fl.adapted_metric(a, b);
                let mut r = if g.nvars() == 0 { 0.0 } else { fl.frame_derivative(&g, xb).value() };
                for cc in 0..dim {
                    r -= self.omega(cc, a, xb).value() * fl.adapted_metric(cc, b).value();
                    r -= self.omega(cc, b, xb).value() * fl.adapted_metric(a, cc).value();
                }
                s += xv * r;
            }
            s
        };
        NablaG {
            structural: Tensor::from_fn(&[n, n], |ix| entry(ix[0], ix[1])),
            transversal: Tensor::from_fn(&[p, p], |ix| entry(n + ix[0], n + ix[1])),
            mixed: Tensor::from_fn(&[n, p], |ix| entry(ix[0], n + ix[1])),
        }
    }
}
