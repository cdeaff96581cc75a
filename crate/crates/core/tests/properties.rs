//! Invariants over randomly generated charts, expressions and Finsler
//! functions.

use proptest::prelude::*;
use subweyl_core::conn;
use subweyl_core::expr::{parse, BinOp, Expr, Func, Symbols};
use subweyl_core::finsler::{self, FinslerSpec, SasakiSource, TangentWeyl, TnVector};
use subweyl_core::geom::{self, ManifoldSpec};
use subweyl_core::jet::lift_coordinates;
use subweyl_core::MultiIndex;

const NAMES: [&str; 4] = ["x1", "x2", "x3", "x4"];

fn coeff() -> impl Strategy<Value = f64> {
    (-20i32..=20).prop_map(|k| f64::from(k) * 0.01)
}

/// A chart near the origin whose metric is a small perturbation of a
/// diagonal positive matrix, with a Weyl form of the same kind.
fn chart(n: usize, p: usize) -> impl Strategy<Value = ManifoldSpec> {
    let dim = n + p;
    let entries = dim * (dim + 1) / 2;
    (
        prop::collection::vec((1.0f64..2.0, coeff(), coeff(), coeff()), entries),
        prop::collection::vec((coeff(), coeff()), dim),
    )
        .prop_map(move |(m, w)| {
            let mut s = ManifoldSpec::new(n, p, &NAMES[..dim]).unwrap();
            let mut k = 0;
            for a in 0..dim {
                for b in a..dim {
                    let (d, c1, c2, c3) = m[k];
                    k += 1;
                    let base = if a == b { d } else { 0.0 };
                    let text = format!(
                        "{base} + {c1}*{} + {c2}*sin({}) + {c3}*{}*{}",
                        NAMES[(a + b) % dim],
                        NAMES[a],
                        NAMES[b],
                        NAMES[(a + 1) % dim]
                    );
                    s.set_metric_str(a, b, &text).unwrap();
                }
            }
            for (a, (c1, c2)) in w.into_iter().enumerate() {
                s.set_weyl_str(a, &format!("{c1} + {c2}*{}", NAMES[(a + 1) % dim])).unwrap();
            }
            s.domain = vec![(-0.3, 0.3); dim];
            s
        })
}

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.3f64..0.3, dim)
}

fn chart_and_point() -> impl Strategy<Value = (ManifoldSpec, Vec<f64>)> {
    prop_oneof![(1usize..=2, 1usize..=2), Just((3usize, 1usize))]
        .prop_flat_map(|(n, p)| (chart(n, p), point(n + p)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn compatibility_holds((s, pt) in chart_and_point()) {
        let e5 = conn::compatibility_residual(&s, &pt).unwrap();
        prop_assert!(e5.max_abs() < 1e-9);
    }

    #[test]
    fn local_and_koszul_coefficients_agree((s, pt) in chart_and_point()) {
        let k = conn::vranceanu_coeffs(&s, &pt).unwrap();
        let (c, d) = conn::koszul_coeffs(&s, &pt).unwrap();
        prop_assert!(k.c.max_abs_diff(&c) < 1e-10);
        prop_assert!(k.d.max_abs_diff(&d) < 1e-10);
        let global = conn::vranceanu_global_oracle(&s, &pt).unwrap();
        prop_assert!(k.max_abs_diff(&global) < 1e-9);
    }

    #[test]
    fn complement_is_orthogonal_and_symmetric((s, pt) in chart_and_point()) {
        let (n, p) = (s.n, s.p);
        let blocks = geom::metric_eval(&s, &pt).unwrap();
        let fr = geom::adapted_frame(&s, &pt).unwrap();
        for al in 0..p {
            for i in 0..n {
                let v: f64 = blocks.mixed[[i, al]] - (0..n).map(|j| fr.a[[al, j]] * blocks.structural[[i, j]]).sum::<f64>();
                prop_assert!(v.abs() < 1e-10);
            }
            for be in 0..p {
                let l: f64 = (0..n).map(|i| fr.a[[al, i]] * blocks.mixed[[i, be]]).sum();
                let r: f64 = (0..n).map(|i| fr.a[[be, i]] * blocks.mixed[[i, al]]).sum();
                prop_assert!((l - r).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn coefficients_are_gauge_invariant((s, pt) in chart_and_point(), a in coeff(), b in coeff()) {
        let syms = s.symbols();
        let u = parse(&format!("{a}*x1 + {b}*sin(x2)"), &syms).unwrap();
        let g = geom::gauge_transform(&s, &u);
        let k0 = conn::vranceanu_coeffs(&s, &pt).unwrap();
        let k1 = conn::vranceanu_coeffs(&g, &pt).unwrap();
        prop_assert!(k0.max_abs_diff(&k1) < 1e-9);
    }

    #[test]
    fn torsion_is_antisymmetric_and_a_bracket((s, pt) in chart_and_point()) {
        let t = conn::torsion_transversal(&s, &pt).unwrap();
        let o = conn::torsion_bracket_oracle(&s, &pt).unwrap();
        prop_assert!(t.max_abs_diff(&o) < 1e-10);
        for (ix, v) in t.indexed() {
            prop_assert!((v + t[[ix[0], ix[2], ix[1]]]).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn curvature_matches_commutator((s, pt) in chart_and_point()) {
        let (r, leak) = conn::curvature_oracle_blocks(&s, &pt).unwrap();
        let direct = conn::curvature(&s, &pt).unwrap();
        prop_assert!(direct.max_abs_diff(&r) < 1e-8);
        prop_assert!(leak < 1e-8);
    }
}

fn expr_tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..50).prop_map(|k| Expr::Num(f64::from(k) * 0.1)),
        (0usize..2).prop_map(|i| Expr::coord(i, NAMES[i])),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::bin(BinOp::Add, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::bin(BinOp::Sub, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::bin(BinOp::Mul, a, b)),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            inner.clone().prop_map(|a| Expr::Call(Func::Sin, Box::new(a))),
            inner.clone().prop_map(|a| Expr::Call(Func::Exp, Box::new(Expr::Call(Func::Cos, Box::new(a))))),
            inner.prop_map(|a| Expr::bin(BinOp::Pow, a, Expr::Num(2.0))),
        ]
    })
}

/// Fourth-order accurate central difference with one Richardson step.
fn richardson(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn display_round_trips(e in expr_tree()) {
        let syms = Symbols::new(&NAMES[..2]);
        prop_assert_eq!(parse(&e.to_string(), &syms).unwrap(), e);
    }

    #[test]
    fn jet_gradient_matches_finite_differences(e in expr_tree(), pt in prop::collection::vec(-1.0f64..1.0, 2)) {
        let j = e.eval_jet(&lift_coordinates(&pt, 2)).unwrap();
        for i in 0..2 {
            let f = |h: f64| {
                let mut q = pt.clone();
                q[i] += h;
                e.eval(&q).unwrap()
            };
            let mut m = [0u8; 2];
            m[i] = 1;
            // constant subtrees collapse to jets without variables
            let exact = if j.nvars() == 0 { 0.0 } else { j.derivative(&MultiIndex::new(&m)) };
            let fd = richardson(&f, 1e-3);
            prop_assert!((exact - fd).abs() / (1.0 + exact.abs()) < 1e-5, "{} vs {}", exact, fd);
        }
    }

    #[test]
    fn product_rule(a in expr_tree(), b in expr_tree(), pt in prop::collection::vec(-1.0f64..1.0, 2)) {
        let c = lift_coordinates(&pt, 2);
        let (ja, jb) = (a.eval_jet(&c).unwrap(), b.eval_jet(&c).unwrap());
        let prod = &ja * &jb;
        let d = |j: &subweyl_core::Jet, i: usize| if j.nvars() == 0 { 0.0 } else { j.d(i).value() };
        for i in 0..2 {
            let want = d(&ja, i) * jb.value() + ja.value() * d(&jb, i);
            let got = d(&prod, i);
            prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }
}

/// A Riemannian `F` with `x`-dependent coefficients or a Randers `F`.
fn finsler_fn() -> impl Strategy<Value = (FinslerSpec, bool)> {
    (coeff(), coeff(), coeff(), any::<bool>()).prop_map(|(p, q, r, randers)| {
        let mut fs = FinslerSpec::new(2, &["x1", "x2"], &["y1", "y2"]).unwrap();
        let text = if randers {
            format!("sqrt(y1^2 + y2^2) + {p}*y1 + {q}*x1*y2")
        } else {
            format!("sqrt((1 + {p}*x1^2)*y1^2 + (1 + {q}*sin(x2))*y2^2 + {r}*x1*y1*y2)")
        };
        fs.set_f_str(&text).unwrap();
        (fs, !randers)
    })
}

fn tn_point() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-0.5f64..0.5, 2),
        (0.3f64..1.5, 0.0f64..std::f64::consts::TAU).prop_map(|(r, t)| vec![r * t.cos(), r * t.sin()]),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn homogeneity_and_euler(((fs, _), (x, y)) in (finsler_fn(), tn_point()), lam in 0.3f64..3.0) {
        for e in finsler::homogeneity_errors(&fs, &x, &y, lam).unwrap() {
            prop_assert!(e < 1e-8);
        }
        for r in finsler::euler_residual(&fs, &x, &y).unwrap() {
            prop_assert!(r.abs() < 1e-9);
        }
    }

    #[test]
    fn vertical_distribution_is_flat(((fs, _), (x, y)) in (finsler_fn(), tn_point())) {
        prop_assert!(finsler::vertical_curvature_max(&fs, TangentWeyl::Cartan, &x, &y).unwrap() < 1e-9);
    }

    #[test]
    fn sasaki_chart_matches_direct_coefficients(((fs, _), (x, y)) in (finsler_fn(), tn_point())) {
        let src = SasakiSource { spec: &fs, weyl: TangentWeyl::Cartan };
        let via_chart = conn::vranceanu_coeffs(&src, &fs.internal_point(&x, &y)).unwrap();
        let direct = finsler::vranceanu_finsler(&fs, TangentWeyl::Cartan, &x, &y).unwrap();
        prop_assert!(via_chart.max_abs_diff(&direct) < 1e-9);
    }

    #[test]
    fn riemannian_reduction(((fs, riemannian), (x, y)) in (finsler_fn(), tn_point())) {
        prop_assert_eq!(finsler::is_riemannian(&fs, &x, &y).unwrap(), riemannian);
        if riemannian {
            let k = finsler::vranceanu_finsler(&fs, TangentWeyl::Cartan, &x, &y).unwrap();
            prop_assert!(k.c.max_abs() < 1e-10);
            prop_assert!(k.d.max_abs_diff(&finsler::base_christoffel(&fs, &x, &y).unwrap()) < 1e-9);
            let r = finsler::finsler_curvature_torsion(&fs, &x, &y).unwrap();
            let closed = finsler::riemannian_closed_forms(&fs, &x, &y).unwrap();
            prop_assert!(r.max_abs_diff(&closed) < 1e-8);
        }
    }

    #[test]
    fn liouville_identities(((fs, _), (x, y)) in (finsler_fn(), tn_point()), v in prop::collection::vec(-1.0f64..1.0, 4)) {
        let xv = TnVector::new(v[..2].to_vec(), v[2..].to_vec());
        let raw = finsler::liouville_derivatives(&fs, TangentWeyl::Cartan, &xv, &x, &y).unwrap();
        let global = finsler::liouville_global(&fs, &xv, &x, &y).unwrap();
        prop_assert!(raw.l.max_abs_diff(&global.l) < 1e-10);
        prop_assert!(raw.l_star.max_abs_diff(&global.l_star) < 1e-9);
    }
}
