//! Compatible and Vranceanu connections of a foliated chart, their torsion,
//! curvature and metric derivatives, each paired with an oracle computed from
//! the defining identities rather than the coefficient formulas.

use alloc::vec;
use alloc::vec::Vec;

pub use crate::adapted::{ConnectionCoeffs, CurvatureData, NablaG};
use crate::adapted::{bracket, AdaptedConnection, AdaptedFields};
use crate::error::{Error, Result};
use crate::geom::{connection_at, field_jets, MetricSource};
use crate::jet::Jet;
use crate::linalg;
use crate::tensor::Tensor;

/// `C^k_ij` and `D^k_iα` of the compatible connection.
pub fn compatible_coeffs(src: &dyn MetricSource, point: &[f64]) -> Result<(Tensor<f64>, Tensor<f64>)> {
    let c = connection_at(src, point, 0)?;
    let k = c.coeffs();
    Ok((k.c, k.d))
}

/// All four coefficient blocks of the Vranceanu connection.
pub fn vranceanu_coeffs(src: &dyn MetricSource, point: &[f64]) -> Result<ConnectionCoeffs> {
    Ok(connection_at(src, point, 0)?.coeffs())
}

/// `2 g(∇_{∂_j} ∂_i, ∂_k)` from the Koszul-type formula with Weyl terms;
/// coordinate fields commute, so no bracket terms survive.
pub fn koszul_oracle(src: &dyn MetricSource, point: &[f64], i: usize, j: usize, k: usize) -> Result<f64> {
    let (g, w) = field_jets(src, point, 1)?;
    Ok(koszul_value(&g, &w, i, j, k))
}

fn koszul_value(g: &Tensor<Jet>, w: &[Jet], i: usize, j: usize, k: usize) -> f64 {
    g[[i, k]].d(j).value() + g[[k, j]].d(i).value() - g[[j, i]].d(k).value()
        + w[j].value() * g[[i, k]].value()
        + w[i].value() * g[[k, j]].value()
        - w[k].value() * g[[j, i]].value()
}

/// `C` solved from the Koszul values and `D` from `Q[δ_α, ∂_i]`.
pub fn koszul_coeffs(src: &dyn MetricSource, point: &[f64]) -> Result<(Tensor<f64>, Tensor<f64>)> {
    let (n, p) = (src.n(), src.p());
    let (g, w) = field_jets(src, point, 1)?;
    let gs = Tensor::from_fn(&[n, n], |i| g[[i[0], i[1]]].value());
    if linalg::is_degenerate(&gs) {
        return Err(Error::DegenerateMetric);
    }
    let mut c = Tensor::zeros(&[n, n, n]);
    for i in 0..n {
        for j in 0..n {
            let rhs: Vec<f64> = (0..n).map(|k| 0.5 * koszul_value(&g, &w, i, j, k)).collect();
            let x = linalg::solve(&gs, &rhs).ok_or(Error::DegenerateMetric)?;
            for (h, v) in x.into_iter().enumerate() {
                c[[h, i, j]] = v;
            }
        }
    }
    let fields = AdaptedFields::from_metric(n, p, &g, &w)?;
    let mut d = Tensor::zeros(&[n, n, p]);
    for al in 0..p {
        for i in 0..n {
            let b = fields.to_adapted(&bracket(&fields.frame_field(n + al), &fields.frame_field(i)));
            for k in 0..n {
                d[[k, i, al]] = b[k].value();
            }
        }
    }
    Ok((c, d))
}

fn full_weyl_jets(g: &Tensor<Jet>, w: &[Jet]) -> Result<Tensor<Jet>> {
    let dim = w.len();
    let inv = linalg::invert_jets(g, Error::DegenerateFullMetric)?;
    let wup: Vec<Jet> = (0..dim).map(|c| (0..dim).map(|d| &inv[[c, d]] * &w[d]).sum()).collect();
    Ok(Tensor::from_fn(&[dim, dim, dim], |ix| {
        let (c, a, b) = (ix[0], ix[1], ix[2]);
        let lc: Jet = (0..dim)
            .map(|d| &inv[[c, d]] * &(&(&g[[d, b]].d(a) + &g[[a, d]].d(b)) - &g[[a, b]].d(d)))
            .sum();
        let mut wt = -&(&g[[a, b]] * &wup[c]);
        if c == b {
            wt += &w[a];
        }
        if c == a {
            wt += &w[b];
        }
        (&lc + &wt).scale(0.5)
    }))
}

/// `Γ̃^c_ab` of the Weyl connection of the full metric, `[[c, a, b]]`.
pub fn full_weyl_connection(src: &dyn MetricSource, point: &[f64]) -> Result<Tensor<f64>> {
    let (g, w) = field_jets(src, point, 1)?;
    Ok(full_weyl_jets(&g, &w)?.map(|j| j.value()))
}

/// `(∇̃_{∂_c} g)(∂_a, ∂_b) + w_c g_ab`, `[[c, a, b]]`.
pub fn full_weyl_compatibility(src: &dyn MetricSource, point: &[f64]) -> Result<Tensor<f64>> {
    let (g, w) = field_jets(src, point, 1)?;
    let gamma = full_weyl_jets(&g, &w)?;
    let dim = w.len();
    Ok(Tensor::from_fn(&[dim, dim, dim], |ix| {
        let (c, a, b) = (ix[0], ix[1], ix[2]);
        let mut r = g[[a, b]].d(c).value() + w[c].value() * g[[a, b]].value();
        for d in 0..dim {
            r -= gamma[[d, c, a]].value() * g[[d, b]].value();
            r -= gamma[[d, c, b]].value() * g[[a, d]].value();
        }
        r
    }))
}

fn project(fields: &AdaptedFields, v: &[Jet], keep_structural: bool) -> Vec<Jet> {
    let mut ad = fields.to_adapted(v);
    let n = fields.n;
    for (idx, c) in ad.iter_mut().enumerate() {
        if (idx < n) != keep_structural {
            *c = Jet::zero();
        }
    }
    fields.from_adapted(&ad)
}

fn weyl_derivative(gamma: &Tensor<Jet>, u: &[Jet], v: &[Jet]) -> Vec<Jet> {
    let dim = u.len();
    (0..dim)
        .map(|c| {
            let mut r = Jet::zero();
            for a in 0..dim {
                r += &u[a] * &v[c].d(a);
                for b in 0..dim {
                    r += &(&u[a] * &v[b]) * &gamma[[c, a, b]];
                }
            }
            r
        })
        .collect()
}

/// The Vranceanu connection rebuilt from the global formula
/// `Q∇̃_{QX}QY + Q⊥∇̃_{Q⊥X}Q⊥Y + Q[Q⊥X, QY] + Q⊥[QX, Q⊥Y]` on frame fields.
pub fn vranceanu_global_oracle(src: &dyn MetricSource, point: &[f64]) -> Result<ConnectionCoeffs> {
    let (n, p) = (src.n(), src.p());
    let dim = n + p;
    let (g, w) = field_jets(src, point, 1)?;
    let gamma = full_weyl_jets(&g, &w)?;
    let fl = AdaptedFields::from_metric(n, p, &g, &w)?;
    let mut omega = Tensor::zeros(&[dim, dim, dim]);
    for b in 0..dim {
        let x = fl.frame_field(b);
        let (qx, px) = (project(&fl, &x, true), project(&fl, &x, false));
        for a in 0..dim {
            let y = fl.frame_field(a);
            let (qy, py) = (project(&fl, &y, true), project(&fl, &y, false));
            let t1 = project(&fl, &weyl_derivative(&gamma, &qx, &qy), true);
            let t2 = project(&fl, &weyl_derivative(&gamma, &px, &py), false);
            let t3 = project(&fl, &bracket(&px, &qy), true);
            let t4 = project(&fl, &bracket(&qx, &py), false);
            let sum: Vec<Jet> = (0..dim).map(|c| &(&t1[c] + &t2[c]) + &(&t3[c] + &t4[c])).collect();
            for (c, v) in fl.to_adapted(&sum).iter().enumerate() {
                omega[[c, a, b]] = v.value();
            }
        }
    }
    Ok(ConnectionCoeffs::from_omega(n, p, &omega))
}

/// `∇_X QY - ∇_{QY} QX - Q[X, QY]` for frame fields `X = E_x`, `Y = E_y`,
/// structural components.
pub fn dprime_torsion_residual(src: &dyn MetricSource, point: &[f64], x: usize, y: usize) -> Result<Vec<f64>> {
    let conn = connection_at(src, point, 0)?;
    Ok(dprime_residual(&conn, x, y))
}

pub(crate) fn dprime_residual(conn: &AdaptedConnection, x: usize, y: usize) -> Vec<f64> {
    let n = conn.n();
    let fl = &conn.fields;
    let mut r = vec![0.0; n];
    if y >= n {
        return r;
    }
    let br = fl.to_adapted(&bracket(&fl.frame_field(x), &fl.frame_field(y)));
    for (k, slot) in r.iter_mut().enumerate() {
        let mut v = conn.omega(k, y, x).value() - br[k].value();
        if x < n {
            v -= conn.omega(k, x, y).value();
        }
        *slot = v;
    }
    r
}

/// `T^k_αβ`, `[[k, α, β]]`.
pub fn torsion_transversal(src: &dyn MetricSource, point: &[f64]) -> Result<Tensor<f64>> {
    Ok(connection_at(src, point, 0)?.torsion())
}

/// Structural part of `[δ_α, δ_β]` from the coordinate bracket of the frame
/// fields, `[[k, α, β]]`.
pub fn torsion_bracket_oracle(src: &dyn MetricSource, point: &[f64]) -> Result<Tensor<f64>> {
    let conn = connection_at(src, point, 0)?;
    Ok(bracket_torsion(&conn.fields))
}

pub(crate) fn bracket_torsion(fl: &AdaptedFields) -> Tensor<f64> {
    let (n, p) = (fl.n, fl.p);
    let mut t = Tensor::zeros(&[n, p, p]);
    for al in 0..p {
        for be in 0..p {
            let b = fl.to_adapted(&bracket(&fl.frame_field(n + al), &fl.frame_field(n + be)));
            for k in 0..n {
                t[[k, al, be]] = b[k].value();
            }
        }
    }
    t
}

pub fn curvature(src: &dyn MetricSource, point: &[f64]) -> Result<CurvatureData> {
    Ok(connection_at(src, point, 1)?.curvature())
}

/// Adapted components of `R(E_x, E_y) E_z` from the commutator definition.
pub fn curvature_commutator_oracle(
    src: &dyn MetricSource,
    point: &[f64],
    x: usize,
    y: usize,
    z: usize,
) -> Result<Vec<f64>> {
    Ok(connection_at(src, point, 1)?.curvature_oracle(x, y, z))
}

/// Every curvature block from the commutator definition, plus the largest
/// component leaving its distribution.
pub fn curvature_oracle_blocks(src: &dyn MetricSource, point: &[f64]) -> Result<(CurvatureData, f64)> {
    Ok(connection_at(src, point, 1)?.curvature_from_oracle())
}

/// `∇*_X g` for `X` in adapted components, blocks as the coefficient formula
/// states them.
pub fn nabla_g(src: &dyn MetricSource, point: &[f64], x: &[f64]) -> Result<NablaG> {
    check_len(src, x)?;
    Ok(connection_at(src, point, 0)?.nabla_g_printed(x))
}

/// `∇*_X g` in the recurrence form `-(X^k θ_k) g_ij + X^α δ_α g_ij`,
/// `X^i ∂_i g_αβ - (X^μ ρ_μ) g_αβ`.
pub fn nabla_g_closed(src: &dyn MetricSource, point: &[f64], x: &[f64]) -> Result<NablaG> {
    check_len(src, x)?;
    Ok(connection_at(src, point, 0)?.nabla_g_closed(x))
}

/// `∇*_X g` from the definition of the covariant derivative of a tensor.
pub fn nabla_g_definitional(src: &dyn MetricSource, point: &[f64], x: &[f64]) -> Result<NablaG> {
    check_len(src, x)?;
    Ok(connection_at(src, point, 0)?.nabla_g_definitional(x))
}

fn check_len(src: &dyn MetricSource, x: &[f64]) -> Result<()> {
    if x.len() != src.dim() {
        return Err(Error::DimensionMismatch { expected: src.dim(), found: x.len() });
    }
    Ok(())
}

/// `(∇_{∂_k} g)(∂_i, ∂_j) + θ_k g_ij` for the compatible connection.
pub fn compatibility_residual(src: &dyn MetricSource, point: &[f64]) -> Result<Tensor<f64>> {
    Ok(connection_at(src, point, 0)?.compatibility_tensor())
}

/// Adapted components of `N_P(E_x, E_y)` for `P = Q - Q⊥`.
pub fn nijenhuis_p(src: &dyn MetricSource, point: &[f64], x: usize, y: usize) -> Result<Vec<f64>> {
    let conn = connection_at(src, point, 0)?;
    Ok(nijenhuis(&conn.fields, x, y))
}

pub(crate) fn nijenhuis(fl: &AdaptedFields, x: usize, y: usize) -> Vec<f64> {
    let pmap = |v: &[Jet]| -> Vec<Jet> {
        let mut ad = fl.to_adapted(v);
        for c in ad.iter_mut().skip(fl.n) {
            *c = -&*c;
        }
        fl.from_adapted(&ad)
    };
    let (u, v) = (fl.frame_field(x), fl.frame_field(y));
    let (pu, pv) = (pmap(&u), pmap(&v));
    let t1 = bracket(&pu, &pv);
    let t2 = pmap(&bracket(&pu, &v));
    let t3 = pmap(&bracket(&u, &pv));
    let t4 = bracket(&u, &v);
    let sum: Vec<Jet> = (0..u.len()).map(|c| &(&t1[c] - &t2[c]) - &(&t3[c] - &t4[c])).collect();
    fl.to_adapted(&sum).iter().map(Jet::value).collect()
}
