//! Truncated multivariate Taylor expansions ("jets").
//!
//! A [`Jet`] stores the Taylor coefficients (derivative divided by the
//! factorials of the multi-index) of a scalar function in a handful of seed
//! variables, truncated at a total degree. Arithmetic and the elementary
//! functions propagate the expansion exactly through the truncation order, so
//! every partial derivative that the geometry needs is exact up to rounding.
//!
//! Coefficients are stored in graded order (all degree-0 terms, then degree 1,
//! and so on), which makes a lower-order jet a prefix of a higher-order one.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use once_cell::race::OnceBox;

use crate::error::{Error, Result};

/// Highest order accepted by [`lift`].
pub const MAX_ORDER: usize = 4;
/// Highest order used internally, where a formula needs derivatives of
/// quantities that already contain derivatives.
pub const INTERNAL_ORDER: usize = 6;
/// Largest number of seed variables in one jet.
pub const MAX_VARS: usize = 10;

const NONE: u32 = u32::MAX;

/// Per-variable exponents of a monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn new(exponents: &[u8]) -> Self {
        MultiIndex(exponents.to_vec())
    }

    /// The multi-index of a single first derivative along `var`.
    pub fn unit(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Product of the factorials of the exponents.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&e| factorial(e as usize)).product()
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Number of monomials of exactly degree `d` in `v` variables.
fn monomials_of_degree(v: usize, d: usize) -> usize {
    if v == 0 {
        return usize::from(d == 0);
    }
    binomial(d + v - 1, v - 1)
}

/// Number of monomials of degree at most `d` in `v` variables.
pub fn coeff_count(v: usize, d: usize) -> usize {
    binomial(d + v, v)
}

/// Index tables for one variable count, valid up to [`INTERNAL_ORDER`].
struct Layout {
    nvars: usize,
    exps: Vec<u8>,
    /// `count[d]`: number of monomials with degree `<= d`.
    count: [usize; INTERNAL_ORDER + 1],
    /// `(i, j, k)` with `m_i + m_j = m_k`, sorted by `k`.
    pairs: Vec<[u32; 3]>,
    /// `pair_count[d]`: number of pairs whose product has degree `<= d`.
    pair_count: [usize; INTERNAL_ORDER + 1],
    /// `shift[var * len + i]`: index of `m_i + e_var`, or `NONE`.
    shift: Vec<u32>,
}

impl Layout {
    fn build(nvars: usize) -> Layout {
        let mut exps = Vec::new();
        let mut count = [0; INTERNAL_ORDER + 1];
        let mut cur = vec![0u8; nvars];
        for d in 0..=INTERNAL_ORDER {
            push_degree(&mut exps, &mut cur, 0, d);
            count[d] = exps.len() / nvars.max(1);
        }
        if nvars == 0 {
            count = [1; INTERNAL_ORDER + 1];
        }
        let len = count[INTERNAL_ORDER];
        let mut layout = Layout {
            nvars,
            exps,
            count,
            pairs: Vec::new(),
            pair_count: [0; INTERNAL_ORDER + 1],
            shift: vec![NONE; nvars * len],
        };
        let mut scratch = vec![0u8; nvars];
        for var in 0..nvars {
            for i in 0..len {
                scratch.copy_from_slice(layout.exp(i));
                scratch[var] += 1;
                if (scratch.iter().map(|&e| e as usize).sum::<usize>()) <= INTERNAL_ORDER {
                    layout.shift[var * len + i] = layout.rank(&scratch) as u32;
                }
            }
        }
        let mut pairs = Vec::new();
        let mut pair_count = [0; INTERNAL_ORDER + 1];
        let mut divisor = vec![0u8; nvars];
        let mut other = vec![0u8; nvars];
        for k in 0..len {
            let mk = layout.exp(k).to_vec();
            divisor.iter_mut().for_each(|e| *e = 0);
            loop {
                for v in 0..nvars {
                    other[v] = mk[v] - divisor[v];
                }
                pairs.push([layout.rank(&divisor) as u32, layout.rank(&other) as u32, k as u32]);
                // odometer over 0..=mk[v]
                let mut v = 0;
                while v < nvars {
                    if divisor[v] < mk[v] {
                        divisor[v] += 1;
                        break;
                    }
                    divisor[v] = 0;
                    v += 1;
                }
                if v == nvars {
                    break;
                }
            }
            let deg = mk.iter().map(|&e| e as usize).sum::<usize>();
            for slot in pair_count.iter_mut().skip(deg) {
                *slot = pairs.len();
            }
        }
        layout.pairs = pairs;
        layout.pair_count = pair_count;
        layout
    }

    fn exp(&self, i: usize) -> &[u8] {
        &self.exps[i * self.nvars..(i + 1) * self.nvars]
    }

    fn degree(&self, i: usize) -> usize {
        self.exp(i).iter().map(|&e| e as usize).sum()
    }

    /// Position of a monomial in graded, descending-lexicographic order.
    fn rank(&self, m: &[u8]) -> usize {
        let v = self.nvars;
        let d: usize = m.iter().map(|&e| e as usize).sum();
        let mut idx = if d == 0 { 0 } else { coeff_count(v, d - 1) };
        let mut rem = d;
        for (t, &mt) in m.iter().enumerate().take(v.saturating_sub(1)) {
            let mt = mt as usize;
            for e in (mt + 1)..=rem {
                idx += monomials_of_degree(v - 1 - t, rem - e);
            }
            rem -= mt;
        }
        idx
    }
}

fn push_degree(out: &mut Vec<u8>, cur: &mut [u8], pos: usize, d: usize) {
    if pos + 1 >= cur.len() {
        if let Some(last) = cur.last_mut() {
            *last = d as u8;
            out.extend_from_slice(cur);
        }
        return;
    }
    for e in (0..=d).rev() {
        cur[pos] = e as u8;
        push_degree(out, cur, pos + 1, d - e);
    }
}

fn layout(nvars: usize) -> &'static Layout {
    const INIT: OnceBox<Layout> = OnceBox::new();
    static LAYOUTS: [OnceBox<Layout>; MAX_VARS + 2] = [INIT; MAX_VARS + 2];
    LAYOUTS[nvars].get_or_init(|| Box::new(Layout::build(nvars)))
}

/// Truncated Taylor expansion of a scalar in `nvars` seed variables.
///
/// `coeffs` may be shorter than the full coefficient count for `order`; the
/// missing tail is zero. A jet with a single coefficient is a constant and
/// combines with jets of any variable count.
#[derive(Clone, PartialEq)]
pub struct Jet {
    nvars: u8,
    order: u8,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(n={}, o={}, {:?})", self.nvars, self.order, self.coeffs)
    }
}

impl Jet {
    /// A constant, compatible with jets of any shape.
    pub fn constant(value: f64) -> Jet {
        Jet { nvars: 0, order: INTERNAL_ORDER as u8, coeffs: vec![value] }
    }

    pub fn zero() -> Jet {
        Jet::constant(0.0)
    }

    /// The jet of `value + t_var`.
    pub fn variable(nvars: usize, order: usize, value: f64, var: usize) -> Jet {
        Jet::affine(nvars, order, value, &unit_vec(nvars, var))
    }

    /// The jet of `value + sum_s slope[s] t_s`.
    pub fn affine(nvars: usize, order: usize, value: f64, slope: &[f64]) -> Jet {
        assert!(nvars <= MAX_VARS + 1 && order <= INTERNAL_ORDER);
        assert_eq!(slope.len(), nvars);
        let mut coeffs = vec![value];
        if order >= 1 {
            coeffs.extend_from_slice(slope);
        }
        Jet { nvars: nvars as u8, order: order as u8, coeffs }
    }

    /// Builds a jet from raw Taylor coefficients in graded order.
    pub fn from_coeffs(nvars: usize, order: usize, coeffs: Vec<f64>) -> Jet {
        assert!(nvars <= MAX_VARS + 1 && order <= INTERNAL_ORDER);
        assert!(coeffs.len() <= coeff_count(nvars, order));
        Jet { nvars: nvars as u8, order: order as u8, coeffs }
    }

    pub fn nvars(&self) -> usize {
        self.nvars as usize
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    pub fn value(&self) -> f64 {
        self.coeffs.first().copied().unwrap_or(0.0)
    }

    /// Stored coefficients in graded order (the tail may be implicit zeros).
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().skip(1).all(|&c| c == 0.0)
    }

    fn get(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    /// Taylor coefficient (derivative divided by factorials) at `idx`.
    pub fn taylor(&self, idx: &MultiIndex) -> f64 {
        if idx.degree() > self.order() {
            return f64::NAN;
        }
        if idx.degree() == 0 {
            return self.value();
        }
        assert_eq!(idx.len(), self.nvars(), "multi-index length");
        self.get(layout(self.nvars()).rank(idx.exponents()))
    }

    /// Mixed partial derivative at `idx`; NaN if `idx` exceeds the order.
    pub fn derivative(&self, idx: &MultiIndex) -> f64 {
        self.taylor(idx) * idx.factorial()
    }

    /// The jet of the partial derivative along seed `var`, one order lower.
    pub fn d(&self, var: usize) -> Jet {
        if self.coeffs.len() <= 1 {
            let order = self.order.saturating_sub(1);
            return Jet { nvars: self.nvars, order, coeffs: vec![0.0] };
        }
        assert!(self.order >= 1, "derivative of an order-0 jet");
        assert!(var < self.nvars(), "derivative variable out of range");
        let lay = layout(self.nvars());
        let order = self.order() - 1;
        let n = lay.count[order].min(self.coeffs.len());
        let full = lay.count[INTERNAL_ORDER];
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let j = lay.shift[var * full + i];
            let c = if j == NONE { 0.0 } else { self.get(j as usize) };
            out.push(c * (lay.exp(i)[var] as f64 + 1.0));
        }
        if out.is_empty() {
            out.push(0.0);
        }
        Jet { nvars: self.nvars, order: order as u8, coeffs: out }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let mut coeffs = self.coeffs.clone();
        if self.nvars > 0 {
            coeffs.truncate(layout(self.nvars()).count[order].max(1));
        }
        Jet { nvars: self.nvars, order: order as u8, coeffs }
    }

    /// Re-expresses this jet in `nvars + 1` variables (the new one last) at
    /// the given order; coefficients above this jet's order are taken as zero.
    pub(crate) fn embed_with_extra_var(&self, order: usize) -> Jet {
        let nv = self.nvars();
        if self.coeffs.len() <= 1 {
            return Jet { nvars: (nv + 1) as u8, order: order as u8, coeffs: self.coeffs.clone() };
        }
        let src = layout(nv);
        let dst = layout(nv + 1);
        let mut out = vec![0.0; dst.count[order.min(self.order())]];
        let mut m = vec![0u8; nv + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            if src.degree(i) > order {
                break;
            }
            m[..nv].copy_from_slice(src.exp(i));
            out[dst.rank(&m)] = c;
        }
        Jet { nvars: (nv + 1) as u8, order: order as u8, coeffs: out }
    }

    /// Inverse of [`Jet::embed_with_extra_var`] for the derivative along the
    /// extra (last) variable, evaluated where that variable is zero.
    pub(crate) fn extra_var_derivative(&self) -> Jet {
        let order = self.order().saturating_sub(1);
        if self.coeffs.len() <= 1 {
            return Jet { nvars: 0, order: order as u8, coeffs: vec![0.0] };
        }
        let nv = self.nvars() - 1;
        let src = layout(nv + 1);
        let dst = layout(nv);
        let mut out = Vec::with_capacity(dst.count[order]);
        let mut m = vec![0u8; nv + 1];
        for i in 0..dst.count[order] {
            m[..nv].copy_from_slice(dst.exp(i));
            m[nv] = 1;
            out.push(self.get(src.rank(&m)));
        }
        Jet { nvars: nv as u8, order: order as u8, coeffs: out }
    }

    fn combine_shape(&self, other: &Jet) -> (usize, usize) {
        let order = self.order.min(other.order) as usize;
        let nvars = if self.coeffs.len() <= 1 {
            other.nvars()
        } else if other.coeffs.len() <= 1 {
            self.nvars()
        } else {
            assert_eq!(self.nvars, other.nvars, "jets seeded in different variables");
            self.nvars()
        };
        (nvars, order)
    }

    fn capacity(nvars: usize, order: usize) -> usize {
        if nvars == 0 {
            1
        } else {
            layout(nvars).count[order]
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { nvars: self.nvars, order: self.order, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    fn add_impl(&self, other: &Jet, sign: f64) -> Jet {
        let (nvars, order) = self.combine_shape(other);
        let cap = Jet::capacity(nvars, order);
        let n = self.coeffs.len().max(other.coeffs.len()).min(cap);
        let coeffs = (0..n).map(|i| self.get(i) + sign * other.get(i)).collect();
        Jet { nvars: nvars as u8, order: order as u8, coeffs }
    }

    fn mul_impl(&self, other: &Jet) -> Jet {
        let (nvars, order) = self.combine_shape(other);
        if self.coeffs.len() <= 1 {
            return other.scale(self.value()).with_shape(nvars, order);
        }
        if other.coeffs.len() <= 1 {
            return self.scale(other.value()).with_shape(nvars, order);
        }
        let lay = layout(nvars);
        let (la, lb) = (self.coeffs.len(), other.coeffs.len());
        let mut out = vec![0.0; lay.count[order]];
        for &[i, j, k] in &lay.pairs[..lay.pair_count[order]] {
            let (i, j) = (i as usize, j as usize);
            if i < la && j < lb {
                out[k as usize] += self.coeffs[i] * other.coeffs[j];
            }
        }
        Jet { nvars: nvars as u8, order: order as u8, coeffs: out }
    }

    fn with_shape(mut self, nvars: usize, order: usize) -> Jet {
        self.nvars = nvars as u8;
        if order < self.order() {
            self = self.truncate(order);
        }
        self.order = order as u8;
        self
    }

    /// Quotient via the degree-by-degree recurrence `q b = a`; the value is
    /// exactly `a0 / b0`.
    pub fn try_div(&self, other: &Jet) -> Result<Jet> {
        let b0 = other.value();
        if b0 == 0.0 {
            return Err(Error::Domain("division by zero"));
        }
        let (nvars, order) = self.combine_shape(other);
        if other.coeffs.len() <= 1 {
            let coeffs = self.coeffs.iter().map(|c| c / b0).collect();
            return Ok(Jet { nvars: self.nvars, order: self.order, coeffs }.with_shape(nvars, order));
        }
        let lay = layout(nvars);
        let n = lay.count[order];
        let mut out = vec![0.0; n];
        let pairs = &lay.pairs[..lay.pair_count[order]];
        let mut p = 0;
        for k in 0..n {
            let mut acc = self.get(k);
            while p < pairs.len() && pairs[p][2] as usize == k {
                let [i, j, _] = pairs[p];
                if j != 0 {
                    acc -= out[i as usize] * other.get(j as usize);
                }
                p += 1;
            }
            out[k] = acc / b0;
        }
        Ok(Jet { nvars: nvars as u8, order: order as u8, coeffs: out })
    }

    pub fn recip(&self) -> Result<Jet> {
        Jet::constant(1.0).try_div(self)
    }

    /// `sum_k c[k] h^k` where `h = self - value`.
    fn compose(&self, c: &[f64]) -> Jet {
        let order = self.order();
        let mut h = self.clone();
        if let Some(h0) = h.coeffs.first_mut() {
            *h0 = 0.0;
        }
        let top = order.min(c.len() - 1);
        if self.coeffs.len() <= 1 {
            return Jet { nvars: self.nvars, order: self.order, coeffs: vec![c[0]] };
        }
        let mut r = Jet::constant(c[top]);
        for k in (0..top).rev() {
            r = &(&r * &h) + c[k];
        }
        r.with_shape(self.nvars(), order)
    }

    pub fn exp(&self) -> Jet {
        let e = libm::exp(self.value());
        let c: Vec<f64> = (0..=self.order()).map(|k| e / factorial(k)).collect();
        self.compose(&c)
    }

    pub fn sin(&self) -> Jet {
        let (s, co) = (libm::sin(self.value()), libm::cos(self.value()));
        let cyc = [s, co, -s, -co];
        let c: Vec<f64> = (0..=self.order()).map(|k| cyc[k % 4] / factorial(k)).collect();
        self.compose(&c)
    }

    pub fn cos(&self) -> Jet {
        let (s, co) = (libm::sin(self.value()), libm::cos(self.value()));
        let cyc = [co, -s, -co, s];
        let c: Vec<f64> = (0..=self.order()).map(|k| cyc[k % 4] / factorial(k)).collect();
        self.compose(&c)
    }

    pub fn ln(&self) -> Result<Jet> {
        let a = self.value();
        if a <= 0.0 {
            return Err(Error::Domain("log of a non-positive value"));
        }
        let mut c = vec![libm::log(a)];
        for k in 1..=self.order() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            c.push(sign / (k as f64 * libm::pow(a, k as f64)));
        }
        Ok(self.compose(&c))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let a = self.value();
        if a < 0.0 || (a == 0.0 && !self.is_constant_for_derivatives()) {
            return Err(Error::Domain("sqrt of a non-positive value"));
        }
        Ok(self.compose(&power_series(libm::sqrt(a), a, 0.5, self.order())))
    }

    /// True when derivatives are irrelevant: order 0 or no non-constant terms.
    fn is_constant_for_derivatives(&self) -> bool {
        self.order == 0 || self.is_constant()
    }

    /// `self^r` for a constant real exponent, with the same value semantics as
    /// [`pow_value`].
    pub fn powf(&self, r: f64) -> Result<Jet> {
        if let Some(n) = small_integer(r) {
            return if n >= 0 {
                Ok(ipow(self, n as u32, Jet::constant(1.0), |a, b| a * b))
            } else {
                ipow(self, (-n) as u32, Jet::constant(1.0), |a, b| a * b).recip()
            };
        }
        let a = self.value();
        if a > 0.0 {
            let p = libm::pow(a, r);
            return Ok(self.compose(&power_series(p, a, r, self.order())));
        }
        if a == 0.0 && r > 0.0 && self.is_constant_for_derivatives() {
            return Ok(Jet::constant(0.0).with_shape(self.nvars(), self.order()));
        }
        Err(Error::Domain("power of a non-positive base"))
    }

    /// General power; a non-constant exponent needs a positive base.
    pub fn pow(&self, exponent: &Jet) -> Result<Jet> {
        if exponent.is_constant() {
            return self.powf(exponent.value()).map(|j| {
                let (nv, o) = self.combine_shape(exponent);
                j.with_shape(nv, o)
            });
        }
        let a = self.value();
        if a <= 0.0 {
            return Err(Error::Domain("power with variable exponent needs a positive base"));
        }
        let u = exponent * &self.ln()?;
        let p = pow_value(a, exponent.value())?;
        let c: Vec<f64> = (0..=u.order()).map(|k| p / factorial(k)).collect();
        Ok(u.compose(&c))
    }
}

fn unit_vec(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

/// Coefficients of `(a + h)^r = p sum_k binom(r, k) (h / a)^k` with `p = a^r`.
fn power_series(p: f64, a: f64, r: f64, order: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(order + 1);
    let mut binom = 1.0;
    let mut apow = 1.0;
    for k in 0..=order {
        c.push(p * binom / apow);
        binom *= (r - k as f64) / (k as f64 + 1.0);
        apow *= a;
    }
    c
}

pub(crate) fn small_integer(r: f64) -> Option<i32> {
    if r == libm::trunc(r) && r.abs() <= 64.0 {
        Some(r as i32)
    } else {
        None
    }
}

/// Square-and-multiply, shared by the real and jet evaluators so both produce
/// bit-identical values.
pub(crate) fn ipow<T: Clone>(x: &T, mut n: u32, one: T, mul: impl Fn(&T, &T) -> T) -> T {
    let mut acc = one;
    let mut base = x.clone();
    let mut first = true;
    while n > 0 {
        if n & 1 == 1 {
            acc = if first { base.clone() } else { mul(&acc, &base) };
            first = false;
        }
        n >>= 1;
        if n > 0 {
            base = mul(&base, &base);
        }
    }
    acc
}

/// Real power with the evaluator's domain rules: integer exponents (|r| <= 64)
/// by repeated multiplication, otherwise `libm::pow` on a non-negative base.
pub fn pow_value(a: f64, r: f64) -> Result<f64> {
    if let Some(n) = small_integer(r) {
        let p = ipow(&a, n.unsigned_abs(), 1.0, |x, y| x * y);
        return if n >= 0 {
            Ok(p)
        } else if p == 0.0 {
            Err(Error::Domain("division by zero"))
        } else {
            Ok(1.0 / p)
        };
    }
    if a > 0.0 || (a == 0.0 && r > 0.0) {
        Ok(libm::pow(a, r))
    } else {
        Err(Error::Domain("power of a non-positive base"))
    }
}

macro_rules! bin_ops {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                $body(self, rhs)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                $body(&self, &rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                $body(&self, rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                $body(self, &rhs)
            }
        }
        impl $tr<f64> for &Jet {
            type Output = Jet;
            fn $m(self, rhs: f64) -> Jet {
                $body(self, &Jet::constant(rhs))
            }
        }
        impl $tr<f64> for Jet {
            type Output = Jet;
            fn $m(self, rhs: f64) -> Jet {
                $body(&self, &Jet::constant(rhs))
            }
        }
        impl $tr<&Jet> for f64 {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                $body(&Jet::constant(self), rhs)
            }
        }
        impl $tr<Jet> for f64 {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                $body(&Jet::constant(self), &rhs)
            }
        }
    };
}

bin_ops!(Add, add, |a: &Jet, b: &Jet| a.add_impl(b, 1.0));
bin_ops!(Sub, sub, |a: &Jet, b: &Jet| a.add_impl(b, -1.0));
bin_ops!(Mul, mul, |a: &Jet, b: &Jet| a.mul_impl(b));

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        *self = self.add_impl(rhs, 1.0);
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = self.add_impl(&rhs, 1.0);
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        *self = self.add_impl(rhs, -1.0);
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, rhs: Jet) {
        *self = self.add_impl(&rhs, -1.0);
    }
}

impl core::iter::Sum for Jet {
    fn sum<I: Iterator<Item = Jet>>(iter: I) -> Jet {
        iter.fold(Jet::zero(), |a, b| a + b)
    }
}

/// Coordinate jets for every coordinate of `point`, seeded along `seeds`.
///
/// Coordinate `j` becomes `point[j] + sum_s seeds[s][j] t_s`.
pub fn lift(point: &[f64], seeds: &[Vec<f64>], order: usize) -> Result<Vec<Jet>> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::OrderOutOfRange(order));
    }
    if seeds.len() > MAX_VARS {
        return Err(Error::TooManySeeds(seeds.len(), MAX_VARS));
    }
    for s in seeds {
        if s.len() != point.len() {
            return Err(Error::DimensionMismatch { expected: point.len(), found: s.len() });
        }
    }
    if rank(seeds) < seeds.len() {
        return Err(Error::DependentSeeds);
    }
    Ok(lift_unchecked(point, seeds, order))
}

pub(crate) fn lift_unchecked(point: &[f64], seeds: &[Vec<f64>], order: usize) -> Vec<Jet> {
    (0..point.len())
        .map(|j| {
            let slope: Vec<f64> = seeds.iter().map(|s| s[j]).collect();
            Jet::affine(seeds.len(), order, point[j], &slope)
        })
        .collect()
}

/// Coordinate jets seeded along every coordinate axis.
pub fn lift_coordinates(point: &[f64], order: usize) -> Vec<Jet> {
    let n = point.len();
    (0..n).map(|j| Jet::variable(n, order, point[j], j)).collect()
}

fn rank(rows: &[Vec<f64>]) -> usize {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let ncols = m.first().map_or(0, |r| r.len());
    let scale = m.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
    let tol = 1e-12 * scale.max(1e-300);
    let mut r = 0;
    for col in 0..ncols {
        let Some(piv) = (r..m.len()).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
        else {
            break;
        };
        if m[piv][col].abs() <= tol {
            continue;
        }
        m.swap(r, piv);
        for i in (r + 1)..m.len() {
            let f = m[i][col] / m[r][col];
            for c in col..ncols {
                m[i][c] -= f * m[r][c];
            }
        }
        r += 1;
    }
    r
}

/// A scalar field that can be evaluated on coordinate jets.
pub trait ScalarField {
    /// Number of coordinates the field depends on.
    fn dim(&self) -> usize;
    fn eval_jet(&self, coords: &[Jet]) -> Result<Jet>;
}

impl<F> ScalarField for (usize, F)
where
    F: Fn(&[Jet]) -> Result<Jet>,
{
    fn dim(&self) -> usize {
        self.0
    }
    fn eval_jet(&self, coords: &[Jet]) -> Result<Jet> {
        (self.1)(coords)
    }
}

/// Exact mixed partial derivative of `field` at `point`.
///
/// Only the coordinates that appear in `idx` are seeded.
pub fn partial(field: &dyn ScalarField, point: &[f64], idx: &MultiIndex) -> Result<f64> {
    if point.len() != field.dim() || idx.len() != field.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), found: point.len() });
    }
    let degree = idx.degree();
    if degree > MAX_ORDER {
        return Err(Error::OrderOutOfRange(degree));
    }
    let active: Vec<usize> = (0..point.len()).filter(|&j| idx.exponents()[j] > 0).collect();
    let order = degree.max(1);
    let nv = active.len();
    let coords: Vec<Jet> = (0..point.len())
        .map(|j| match active.iter().position(|&a| a == j) {
            Some(s) => Jet::variable(nv, order, point[j], s),
            None => Jet::constant(point[j]),
        })
        .collect();
    let jet = field.eval_jet(&coords)?;
    if degree == 0 {
        return Ok(jet.value());
    }
    let sub = MultiIndex(active.iter().map(|&j| idx.exponents()[j]).collect());
    if jet.coeffs.len() <= 1 {
        return Ok(0.0);
    }
    Ok(jet.derivative(&sub))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn coefficient_counts() {
        assert_eq!(coeff_count(2, 2), 6);
        assert_eq!(coeff_count(4, 4), 70);
        let lay = layout(3);
        assert_eq!(lay.count[0], 1);
        assert_eq!(lay.count[1], 4);
        assert_eq!(lay.count[2], 10);
        for i in 0..lay.count[INTERNAL_ORDER] {
            assert_eq!(lay.rank(lay.exp(i)), i);
        }
    }

    #[test]
    fn pairs_cover_all_products() {
        let lay = layout(2);
        let per_k = |k: usize| lay.pairs.iter().filter(|p| p[2] as usize == k).count();
        // x^2 y has divisors 1, x, x^2, y, xy, x^2y
        let k = lay.rank(&[2, 1]);
        assert_eq!(per_k(k), 6);
        assert!(lay.pairs.windows(2).all(|w| w[0][2] <= w[1][2]));
    }

    #[test]
    fn lift_first_coordinate() {
        let jets = lift(&[2.0, 3.0], &[vec![1.0, 0.0]], 2).unwrap();
        assert_eq!(jets[0].coeffs(), &[2.0, 1.0]);
        assert_eq!(jets[0].taylor(&MultiIndex::new(&[2])), 0.0);
        assert_eq!(jets[1].value(), 3.0);
        assert_eq!(jets[1].taylor(&MultiIndex::new(&[1])), 0.0);
    }

    #[test]
    fn lift_identity_seeding() {
        let seeds = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let jets = lift(&[0.0, 0.0], &seeds, 1).unwrap();
        assert_eq!(jets[0].coeffs(), &[0.0, 1.0, 0.0]);
        assert_eq!(jets[1].coeffs(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn lift_rejects_bad_order_and_dependent_seeds() {
        assert_eq!(lift(&[1.0, 1.0], &[vec![1.0, 0.0]], 5), Err(Error::OrderOutOfRange(5)));
        assert_eq!(lift(&[1.0, 1.0], &[vec![1.0, 0.0]], 0), Err(Error::OrderOutOfRange(0)));
        let dep = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert_eq!(lift(&[1.0, 1.0], &dep, 2), Err(Error::DependentSeeds));
    }

    #[test]
    fn square_of_coordinate() {
        let x = Jet::variable(1, 2, 3.0, 0);
        let sq = &x * &x;
        assert_eq!(sq.coeffs(), &[9.0, 6.0, 1.0]);
        // derivatives: value, first, second
        assert_eq!(sq.derivative(&MultiIndex::new(&[2])), 2.0);
    }

    #[test]
    fn exp_of_zero() {
        let z = Jet::variable(1, 4, 0.0, 0).scale(0.0);
        let e = z.exp();
        assert_eq!(e.value(), 1.0);
        assert!(e.coeffs().iter().skip(1).all(|&c| c == 0.0));
        let x = Jet::variable(1, 4, 0.0, 0);
        let ex = x.exp();
        assert!(close(ex.coeffs()[4], 1.0 / 24.0, 1e-15));
    }

    #[test]
    fn reciprocal_at_zero_is_domain_error() {
        let x = Jet::variable(1, 2, 0.0, 0);
        assert_eq!(x.recip(), Err(Error::Domain("division by zero")));
        assert!(x.ln().is_err());
        assert!(x.sqrt().is_err());
        assert!((-&x + (-1.0)).sqrt().is_err());
    }

    #[test]
    fn division_matches_series() {
        // 1/(1+x) = 1 - x + x^2 - x^3
        let x = Jet::variable(1, 3, 0.0, 0);
        let q = (&x + 1.0).recip().unwrap();
        assert_eq!(q.coeffs(), &[1.0, -1.0, 1.0, -1.0]);
        // (x y) / (x + y) at (1, 2)
        let a = Jet::variable(2, 2, 1.0, 0);
        let b = Jet::variable(2, 2, 2.0, 1);
        let q = (&a * &b).try_div(&(&a + &b)).unwrap();
        let back = &q * &(&a + &b);
        let prod = &a * &b;
        for (u, v) in back.coeffs().iter().zip(prod.coeffs()) {
            assert!(close(*u, *v, 1e-15));
        }
    }

    #[test]
    fn sin_cos_third_derivatives() {
        let x = Jet::variable(1, 3, 0.0, 0);
        assert!(close(x.sin().derivative(&MultiIndex::new(&[3])), -1.0, 1e-15));
        assert!(close(x.cos().derivative(&MultiIndex::new(&[2])), -1.0, 1e-15));
    }

    #[test]
    fn integer_powers_allow_negative_bases() {
        let x = Jet::variable(1, 3, -2.0, 0);
        let c = x.powf(3.0).unwrap();
        assert_eq!(c.coeffs(), &[-8.0, 12.0, -6.0, 1.0]);
        let inv = x.powf(-1.0).unwrap();
        assert!(close(inv.coeffs()[1], -0.25, 1e-15));
        assert!(x.powf(0.5).is_err());
    }

    #[test]
    fn fractional_power_series() {
        let x = Jet::variable(1, 4, 4.0, 0);
        let s = x.powf(0.5).unwrap();
        let r = x.sqrt().unwrap();
        assert_eq!(s.value(), 2.0);
        for (a, b) in s.coeffs().iter().zip(r.coeffs()) {
            assert!(close(*a, *b, 1e-15));
        }
        // d/dx sqrt(x) = 1/(2 sqrt x) = 0.25
        assert!(close(s.coeffs()[1], 0.25, 1e-15));
    }

    #[test]
    fn variable_exponent_power() {
        // x^y at (2, 3): d/dy = x^y ln x
        let x = Jet::variable(2, 2, 2.0, 0);
        let y = Jet::variable(2, 2, 3.0, 1);
        let p = x.pow(&y).unwrap();
        assert_eq!(p.value(), 8.0);
        assert!(close(p.derivative(&MultiIndex::new(&[0, 1])), 8.0 * libm::log(2.0), 1e-14));
        assert!(close(p.derivative(&MultiIndex::new(&[1, 0])), 12.0, 1e-14));
    }

    #[test]
    fn derivative_operator_shifts_coefficients() {
        // f = x^2 y at (2, 3)
        let x = Jet::variable(2, 3, 2.0, 0);
        let y = Jet::variable(2, 3, 3.0, 1);
        let f = &(&x * &x) * &y;
        let fx = f.d(0);
        assert_eq!(fx.order(), 2);
        assert_eq!(fx.value(), 12.0);
        assert_eq!(fx.d(0).value(), 6.0);
        assert_eq!(fx.d(1).value(), 4.0);
        assert_eq!(f.d(1).d(0).d(0).value(), 2.0);
    }

    #[test]
    fn partial_of_polynomial() {
        let field = (2usize, |c: &[Jet]| Ok(&(&c[0] * &c[0]) * &c[1]));
        assert_eq!(partial(&field, &[2.0, 3.0], &MultiIndex::new(&[2, 0])).unwrap(), 6.0);
        assert_eq!(partial(&field, &[2.0, 3.0], &MultiIndex::new(&[0, 0])).unwrap(), 12.0);
        assert_eq!(partial(&field, &[2.0, 3.0], &MultiIndex::new(&[1, 1])).unwrap(), 4.0);
        assert_eq!(partial(&field, &[2.0, 3.0], &MultiIndex::new(&[0, 2])).unwrap(), 0.0);
        assert!(partial(&field, &[2.0, 3.0], &MultiIndex::new(&[3, 2])).is_err());
    }

    #[test]
    fn extra_variable_round_trip() {
        // g(x) = sin(x0 * x1); derivative along x0 through an embedded variable
        let x = lift_coordinates(&[0.4, 1.3], 2);
        let xs: Vec<Jet> = x.iter().map(|j| j.embed_with_extra_var(3)).collect();
        let s = Jet::variable(3, 3, 0.0, 2);
        let shifted = &xs[0] + &s;
        let g = (&shifted * &xs[1]).sin();
        let dg = g.extra_var_derivative();
        let direct = (&x[0] * &x[1]).sin();
        // d/dx0 sin(x0 x1) = x1 cos(x0 x1), compare full order-2 jets
        let reference = lift_coordinates(&[0.4, 1.3], 3);
        let r = (&reference[0] * &reference[1]).sin().d(0);
        assert_eq!(dg.order(), 2);
        for (a, b) in dg.coeffs().iter().zip(r.coeffs()) {
            assert!(close(*a, *b, 1e-14), "{a} vs {b}");
        }
        assert_eq!(direct.order(), 2);
    }

    #[test]
    fn constants_combine_with_any_shape() {
        let x = Jet::variable(3, 2, 1.5, 1);
        let y = &x * 2.0 + 1.0;
        assert_eq!(y.nvars(), 3);
        assert_eq!(y.value(), 4.0);
        assert_eq!(y.d(1).value(), 2.0);
        let t = x.truncate(1);
        assert_eq!((&t * &x).order(), 1);
    }
}
