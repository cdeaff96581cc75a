//! Foliated semi-Riemannian data in adapted coordinates.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::adapted::{AdaptedConnection, AdaptedFields};
use crate::error::{Error, Result};
use crate::expr::{BinOp, Expr, Func, Symbols};
use crate::jet::{self, Jet};
use crate::linalg;
use crate::tensor::Tensor;

/// A metric and Weyl form given in coordinates, evaluable on jets.
///
/// Coordinates `0..n` are structural and `n..n+p` transversal.
pub trait MetricSource {
    fn n(&self) -> usize;
    fn p(&self) -> usize;
    /// Coordinate metric `g[[a, b]]` and Weyl components `w[a]`.
    fn fields(&self, coords: &[Jet]) -> Result<(Tensor<Jet>, Vec<Jet>)>;
    /// Derivative orders consumed by [`MetricSource::fields`].
    fn order_loss(&self) -> usize {
        0
    }
    fn dim(&self) -> usize {
        self.n() + self.p()
    }
}

/// Metric and Weyl jets at `point`, expanded to `order` in every coordinate.
pub fn field_jets(src: &dyn MetricSource, point: &[f64], order: usize) -> Result<(Tensor<Jet>, Vec<Jet>)> {
    if point.len() != src.dim() {
        return Err(Error::DimensionMismatch { expected: src.dim(), found: point.len() });
    }
    let coords = jet::lift_coordinates(point, order + src.order_loss());
    src.fields(&coords)
}

/// Adapted connection of `src` with coefficient jets of at least `order`.
pub fn connection_at(src: &dyn MetricSource, point: &[f64], order: usize) -> Result<AdaptedConnection> {
    let (g, w) = field_jets(src, point, order + 1)?;
    let fields = AdaptedFields::from_metric(src.n(), src.p(), &g, &w)?;
    Ok(AdaptedConnection::new(fields))
}

/// A foliated chart: dimensions, coordinate names, metric and Weyl form as
/// expressions, named constants and a sampling box.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSpec {
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub coords: Vec<String>,
    /// Upper triangle of the metric, row-major (`a <= b`).
    metric: Vec<Expr>,
    pub weyl: Vec<Expr>,
    pub constants: Vec<(String, f64)>,
    pub domain: Vec<(f64, f64)>,
}

fn tri(dim: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * dim - a * (a + 1) / 2 + b
}

impl ManifoldSpec {
    /// A chart with zero metric and Weyl form and the box `[-1, 1]` per
    /// coordinate.
    pub fn new(n: usize, p: usize, coords: &[&str]) -> Result<Self> {
        let dim = n + p;
        if coords.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: coords.len() });
        }
        if n == 0 || dim > jet::MAX_VARS {
            return Err(Error::InvalidSpec(format!("unsupported dimensions n={n}, p={p}")));
        }
        Ok(ManifoldSpec {
            name: String::new(),
            n,
            p,
            coords: coords.iter().map(|s| s.to_string()).collect(),
            metric: vec![Expr::Num(0.0); dim * (dim + 1) / 2],
            weyl: vec![Expr::Num(0.0); dim],
            constants: Vec::new(),
            domain: vec![(-1.0, 1.0); dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.n + self.p
    }

    pub fn symbols(&self) -> Symbols {
        Symbols { coords: self.coords.clone(), constants: self.constants.clone() }
    }

    pub fn metric(&self, a: usize, b: usize) -> &Expr {
        &self.metric[tri(self.dim(), a, b)]
    }

    pub fn set_metric(&mut self, a: usize, b: usize, e: Expr) {
        let d = self.dim();
        self.metric[tri(d, a, b)] = e;
    }

    /// Parses and sets a metric entry (0-based indices).
    pub fn set_metric_str(&mut self, a: usize, b: usize, text: &str) -> Result<()> {
        let e = crate::expr::parse(text, &self.symbols())?;
        self.set_metric(a, b, e);
        Ok(())
    }

    /// Parses and sets a Weyl component (0-based index).
    pub fn set_weyl_str(&mut self, a: usize, text: &str) -> Result<()> {
        self.weyl[a] = crate::expr::parse(text, &self.symbols())?;
        Ok(())
    }

    /// The center of the sampling box.
    pub fn center(&self) -> Vec<f64> {
        self.domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }
}

impl MetricSource for ManifoldSpec {
    fn n(&self) -> usize {
        self.n
    }
    fn p(&self) -> usize {
        self.p
    }
    fn fields(&self, coords: &[Jet]) -> Result<(Tensor<Jet>, Vec<Jet>)> {
        let dim = self.dim();
        let mut upper = Vec::with_capacity(self.metric.len());
        for e in &self.metric {
            upper.push(e.eval_jet(coords)?);
        }
        let g = Tensor::from_fn(&[dim, dim], |i| upper[tri(dim, i[0], i[1])].clone());
        let w = self.weyl.iter().map(|e| e.eval_jet(coords)).collect::<Result<Vec<_>>>()?;
        Ok((g, w))
    }
}

/// Coordinate metric blocks at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricBlocks {
    /// `g_ij`.
    pub structural: Tensor<f64>,
    /// `g_iα`.
    pub mixed: Tensor<f64>,
    /// `g_αβ` in the coordinate frame.
    pub transversal: Tensor<f64>,
}

fn values_at(src: &dyn MetricSource, point: &[f64]) -> Result<(Tensor<f64>, Vec<f64>)> {
    if point.len() != src.dim() {
        return Err(Error::DimensionMismatch { expected: src.dim(), found: point.len() });
    }
    let coords: Vec<Jet> = point.iter().map(|&v| Jet::constant(v)).collect();
    let (g, w) = src.fields(&coords)?;
    Ok((g.map(|j| j.value()), w.into_iter().map(|j| j.value()).collect()))
}

pub fn metric_eval(src: &dyn MetricSource, point: &[f64]) -> Result<MetricBlocks> {
    let (n, p) = (src.n(), src.p());
    let (g, _) = values_at(src, point)?;
    let structural = Tensor::from_fn(&[n, n], |i| g[[i[0], i[1]]]);
    if linalg::is_degenerate(&structural) {
        return Err(Error::DegenerateMetric);
    }
    Ok(MetricBlocks {
        structural,
        mixed: Tensor::from_fn(&[n, p], |i| g[[i[0], n + i[1]]]),
        transversal: Tensor::from_fn(&[p, p], |i| g[[n + i[0], n + i[1]]]),
    })
}

/// `A`, the inverse structural metric and the adapted transversal metric.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedFrameData {
    /// `a[[α, i]] = A^i_α`.
    pub a: Tensor<f64>,
    pub g_inv: Tensor<f64>,
    /// `g(δ_α, δ_β)`.
    pub g_trans: Tensor<f64>,
}

impl AdaptedFrameData {
    /// Coordinate components of `δ_α`.
    pub fn delta_vector(&self, alpha: usize) -> Vec<f64> {
        let (p, n) = (self.a.shape()[0], self.a.shape()[1]);
        let mut v = vec![0.0; n + p];
        for i in 0..n {
            v[i] = -self.a[[alpha, i]];
        }
        v[n + alpha] = 1.0;
        v
    }
}

pub fn adapted_frame(src: &dyn MetricSource, point: &[f64]) -> Result<AdaptedFrameData> {
    let (n, p) = (src.n(), src.p());
    let (g, _) = values_at(src, point)?;
    let gs = Tensor::from_fn(&[n, n], |i| g[[i[0], i[1]]]);
    let g_inv = linalg::invert(&gs).ok_or(Error::DegenerateMetric)?;
    let a = Tensor::from_fn(&[p, n], |ix| (0..n).map(|j| g_inv[[ix[1], j]] * g[[j, n + ix[0]]]).sum());
    let g_trans = Tensor::from_fn(&[p, p], |ix| {
        let (da, db) = (delta(&a, n, ix[0]), delta(&a, n, ix[1]));
        let dim = n + p;
        let mut s = 0.0;
        for u in 0..dim {
            for v in 0..dim {
                s += da[u] * g[[u, v]] * db[v];
            }
        }
        s
    });
    Ok(AdaptedFrameData { a, g_inv, g_trans })
}

fn delta(a: &Tensor<f64>, n: usize, alpha: usize) -> Vec<f64> {
    let p = a.shape()[0];
    let mut v = vec![0.0; n + p];
    for i in 0..n {
        v[i] = -a[[alpha, i]];
    }
    v[n + alpha] = 1.0;
    v
}

/// Adapted Weyl components and their raised forms.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylAdapted {
    /// Components against `δx^i`.
    pub theta: Vec<f64>,
    /// Components against `dx^α`.
    pub rho: Vec<f64>,
    pub theta_up: Vec<f64>,
    pub rho_up: Vec<f64>,
}

pub fn adapt_weyl(src: &dyn MetricSource, point: &[f64], frame: &AdaptedFrameData) -> Result<WeylAdapted> {
    let (n, p) = (src.n(), src.p());
    let (_, w) = values_at(src, point)?;
    let theta = w[..n].to_vec();
    let rho: Vec<f64> =
        (0..p).map(|al| w[n + al] - (0..n).map(|i| w[i] * frame.a[[al, i]]).sum::<f64>()).collect();
    let gt_inv = linalg::invert(&frame.g_trans).ok_or(Error::DegenerateTransversalMetric)?;
    let theta_up = (0..n).map(|k| (0..n).map(|l| frame.g_inv[[k, l]] * theta[l]).sum()).collect();
    let rho_up = (0..p).map(|g| (0..p).map(|a| gt_inv[[g, a]] * rho[a]).sum()).collect();
    Ok(WeylAdapted { theta, rho, theta_up, rho_up })
}

/// Christoffel symbols `Γ^k_ij` of the structural block, differentiated
/// along structural coordinates only.
pub fn christoffel(src: &dyn MetricSource, point: &[f64]) -> Result<Tensor<f64>> {
    let (g, _) = field_jets(src, point, 1)?;
    let n = src.n();
    let gs = Tensor::from_fn(&[n, n], |i| g[[i[0], i[1]]].clone());
    let gs_inv = linalg::invert_jets(&gs, Error::DegenerateMetric)?;
    Ok(Tensor::from_fn(&[n, n, n], |ix| {
        let (k, i, j) = (ix[0], ix[1], ix[2]);
        0.5 * (0..n)
            .map(|l| {
                gs_inv[[k, l]].value()
                    * (gs[[l, j]].d(i).value() + gs[[i, l]].d(j).value() - gs[[i, j]].d(l).value())
            })
            .sum::<f64>()
    }))
}

/// The conformally related chart `e^u g` with Weyl form `W - du`.
pub fn gauge_transform(spec: &ManifoldSpec, u: &Expr) -> ManifoldSpec {
    let mut out = spec.clone();
    let dim = spec.dim();
    let factor = Expr::Call(Func::Exp, Box::new(u.clone()));
    for a in 0..dim {
        for b in a..dim {
            let g = spec.metric(a, b);
            if !g.is_zero() {
                out.set_metric(a, b, Expr::bin(BinOp::Mul, factor.clone(), g.clone()));
            }
        }
        let du = Expr::Partial { index: a, name: spec.coords[a].clone(), inner: Box::new(u.clone()) };
        out.weyl[a] = Expr::bin(BinOp::Sub, spec.weyl[a].clone(), du);
    }
    out
}

/// Components of `dW` (`∂_a w_b - ∂_b w_a`, `a < b`) at a point.
pub fn weyl_differential(src: &dyn MetricSource, point: &[f64]) -> Result<Vec<f64>> {
    let (_, w) = field_jets(src, point, 1)?;
    let dim = src.dim();
    let mut out = Vec::new();
    for a in 0..dim {
        for b in (a + 1)..dim {
            out.push(w[b].d(a).value() - w[a].d(b).value());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn euclidean3() -> ManifoldSpec {
        let mut s = ManifoldSpec::new(2, 1, &["x1", "x2", "x3"]).unwrap();
        for a in 0..3 {
            s.set_metric(a, a, Expr::Num(1.0));
        }
        s
    }

    fn mixed() -> ManifoldSpec {
        let mut s = euclidean3();
        s.set_metric_str(0, 2, "x1*x3").unwrap();
        s.set_metric_str(2, 2, "8").unwrap();
        s
    }

    #[test]
    fn identity_blocks() {
        let b = metric_eval(&euclidean3(), &[0.3, -0.2, 0.9]).unwrap();
        assert_eq!(b.structural.data(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(b.mixed.data(), &[0.0, 0.0]);
    }

    #[test]
    fn mixed_entry_and_frame() {
        let s = mixed();
        let b = metric_eval(&s, &[1.0, 0.0, 2.0]).unwrap();
        assert_eq!(b.mixed[[0, 0]], 2.0);
        let f = adapted_frame(&s, &[1.0, 0.0, 2.0]).unwrap();
        assert_eq!(f.a.data(), &[2.0, 0.0]);
        // g(δ_3, ∂_i) = 0
        let d = f.delta_vector(0);
        for i in 0..2 {
            let r: f64 = (0..3)
                .map(|c| d[c] * s.metric(c, i).eval(&[1.0, 0.0, 2.0]).unwrap())
                .sum();
            assert!(r.abs() < 1e-15);
        }
        assert_eq!(f.g_trans[[0, 0]], 8.0 - 4.0);
    }

    #[test]
    fn weyl_adaptation() {
        let mut s = mixed();
        s.set_weyl_str(0, "1").unwrap();
        let pt = [1.0, 0.0, 2.0];
        let f = adapted_frame(&s, &pt).unwrap();
        let w = adapt_weyl(&s, &pt, &f).unwrap();
        assert_eq!(w.theta, vec![1.0, 0.0]);
        assert_eq!(w.rho, vec![-2.0]);
        // W(δ_3) = ρ_3 by pairing the coordinate form with the frame vector
        let pairing: f64 = f.delta_vector(0).iter().zip([1.0, 0.0, 0.0]).map(|(a, b)| a * b).sum();
        assert_eq!(pairing, w.rho[0]);
    }

    #[test]
    fn degenerate_structural_block() {
        let mut s = euclidean3();
        s.set_metric(0, 0, Expr::Num(1.0));
        s.set_metric(0, 1, Expr::Num(1.0));
        s.set_metric(1, 1, Expr::Num(1.0));
        assert_eq!(metric_eval(&s, &[0.0; 3]), Err(Error::DegenerateMetric));
        assert_eq!(christoffel(&s, &[0.0; 3]), Err(Error::DegenerateMetric));
    }

    #[test]
    fn leafwarp_christoffel() {
        let mut s = euclidean3();
        s.set_metric_str(0, 0, "exp(2*x2)").unwrap();
        let g = christoffel(&s, &[0.4, 0.0, -0.1]).unwrap();
        assert!((g[[0, 0, 1]] - 1.0).abs() < 1e-15);
        assert!((g[[0, 1, 0]] - 1.0).abs() < 1e-15);
        assert!((g[[1, 0, 0]] + 1.0).abs() < 1e-15);
        assert_eq!(g[[1, 1, 1]], 0.0);
    }

    #[test]
    fn transversal_dependence_is_invisible_to_christoffel() {
        let mut s = euclidean3();
        s.set_metric_str(0, 0, "exp(2*x3)").unwrap();
        s.set_metric_str(1, 1, "exp(2*x3)").unwrap();
        assert_eq!(christoffel(&s, &[0.1, 0.2, 0.7]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn gauge_round_trip() {
        let mut s = mixed();
        s.set_weyl_str(1, "x1*x3").unwrap();
        let u = parse("sin(x2) + x1*x3", &s.symbols()).unwrap();
        let back = gauge_transform(&gauge_transform(&s, &u), &Expr::Neg(Box::new(u.clone())));
        let pt = [0.3, -0.4, 1.1];
        let (g0, w0) = values_at(&s, &pt).unwrap();
        let (g1, w1) = values_at(&back, &pt).unwrap();
        assert!(g0.max_abs_diff(&g1) < 1e-12);
        for (a, b) in w0.iter().zip(&w1) {
            assert!((a - b).abs() < 1e-12);
        }
        let zero = gauge_transform(&s, &Expr::Num(0.0));
        let (g2, w2) = values_at(&zero, &pt).unwrap();
        assert_eq!(g0, g2);
        assert_eq!(w0, w2);
        // frame invariance
        let f0 = adapted_frame(&s, &pt).unwrap();
        let f1 = adapted_frame(&gauge_transform(&s, &u), &pt).unwrap();
        assert!(f0.a.max_abs_diff(&f1.a) < 1e-12);
    }

    #[test]
    fn gauge_preserves_closedness() {
        let mut s = mixed();
        s.set_weyl_str(0, "x3").unwrap();
        s.set_weyl_str(2, "x1").unwrap();
        let u = parse("x1*x2 + sin(x3)", &s.symbols()).unwrap();
        let pt = [0.2, 0.5, -0.3];
        let d0 = weyl_differential(&s, &pt).unwrap();
        assert!(d0.iter().all(|c| c.abs() < 1e-15));
        let d1 = weyl_differential(&gauge_transform(&s, &u), &pt).unwrap();
        assert!(d1.iter().all(|c| c.abs() < 1e-12));
    }
}
