use std::io::Write;
use std::process::{Command, Output};

use subweyl::catalog;
use subweyl::Spec;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subweyl")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn spec_file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".spec").tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn block(v: &serde_json::Value, name: &str) -> Vec<f64> {
    let b = v["blocks"].as_array().unwrap().iter().find(|b| b["name"] == name).unwrap();
    b["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn flat_coefficients_are_zero() {
    let o = bin(&["coeffs", "--spec", "euclidean3", "--at", "0,0,0"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let values: Vec<&str> = text.lines().filter(|l| l.contains('[')).collect();
    assert_eq!(values.len(), 8 + 4 + 2 + 1);
    assert!(values.iter().all(|l| l.ends_with("= 0.0000000000000000e0")));
}

#[test]
fn sphere_flatness_reports_consistent_curved_base() {
    let o = bin(&["verify", "--spec", "sphere-riemann", "--suite", "flatness"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("check = base not flat: consistent;"));
    let torsion = text.lines().find(|l| l.starts_with("check = torsion vanishes;")).unwrap();
    assert!(torsion.contains("holds = false; expected = fails; pass = true"));
}

#[test]
fn nonintegrable_torsion_is_pinned() {
    // A^1_4 = x5, A^1_5 = k, A^2_5 = x4, so [δ4, δ5] = ∂1 - ∂2
    let o = bin(&["--format", "json", "torsion", "--spec", "p2-nonintegrable", "--at", "0.1,-0.2,0.3,0.25,-0.4"]);
    assert!(o.status.success());
    let t = block(&json(&o), "T");
    let want = [0.0, 1.0, -1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    for (a, b) in t.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{t:?}");
    }
}

#[test]
fn catalog_lists_and_exports() {
    let o = bin(&["catalog", "list"]);
    let names: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(names.len(), 9);
    for (name, _) in catalog::CATALOG {
        assert!(names.iter().any(|n| n == name));
        let text = stdout(&bin(&["catalog", "export", name]));
        let f = spec_file(&text);
        assert_eq!(subweyl::load(f.path()).unwrap(), catalog::get(name).unwrap());
    }
    let bad = bin(&["catalog", "export", "nope"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn out_of_range_metric_index_is_a_validation_error() {
    let f = spec_file("[manifold]\nn = 2\np = 1\ncoords = a, b, c\n[metric]\n1,1 = 1\n2,2 = 1\n3,3 = 1\n4,4 = 1\n");
    let o = bin(&["coeffs", "--spec", f.path().to_str().unwrap(), "--at", "0,0,0"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("ValidationError") && err.contains("index out of range"), "{err}");
}

#[test]
fn parse_errors_name_the_line() {
    let f = spec_file("[manifold]\nn = 2\np = 1\ncoords = a, b, c\n[metric]\n1,1 = (1\n");
    let o = bin(&["coeffs", "--spec", f.path().to_str().unwrap(), "--at", "0,0,0"]);
    assert!(stderr(&o).contains("ParseError: line 6"), "{}", stderr(&o));
}

#[test]
fn euclidean_finsler_file_passes_axioms() {
    let f = spec_file("[finsler]\nname = plane\nn = 2\nbase = x1, x2\nfiber = y1, y2\nF = sqrt(y1^2+y2^2)\n");
    let o = bin(&["verify", "--spec", f.path().to_str().unwrap(), "--suite", "finsler-axioms", "--samples", "20"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn euclidean_transversal_liouville() {
    let f = spec_file("[finsler]\nname = plane\nn = 2\nbase = x1, x2\nfiber = y1, y2\nF = sqrt(y1^2+y2^2)\n");
    let path = f.path().to_str().unwrap();
    let o = bin(&["--format", "json", "finsler", "liouville", "--spec", path, "--at", "0,0;3,4", "--X", "1,0;0,0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    let h = block(&v, "nabla_Lstar_horizontal");
    assert!((h[0] - 12.5).abs() < 1e-9 && h[1].abs() < 1e-9, "{h:?}");
}

#[test]
fn sphere_spray_at_quarter_turn() {
    let at = format!("{},0;1,1", std::f64::consts::FRAC_PI_4);
    let o = bin(&["--format", "json", "finsler", "spray", "--spec", "sphere-riemann", "--at", &at]);
    let g = block(&json(&o), "G");
    assert!((g[0] + 0.25).abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12, "{g:?}");
}

#[test]
fn contract_errors_exit_nonzero_with_names() {
    let o = bin(&["verify", "--spec", "euclidean3", "--suite", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("UnknownSuite"));
    let o = bin(&["verify", "--spec", "euclidean3", "--suite", "flatness"]);
    assert!(stderr(&o).contains("SuiteInapplicable"));
    let o = bin(&["finsler", "spray", "--spec", "euclidean3", "--at", "0,0;1,1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&["coeffs", "--spec", "euclidean3", "--at", "0,0"]);
    assert!(stderr(&o).contains("expected 3 components"));
    let o = bin(&["torsion", "--spec", "sphere-riemann", "--at", "1,0;0,0"]);
    assert!(stderr(&o).contains("OnZeroSection"), "{}", stderr(&o));
    let o = bin(&["nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failing_verification_exits_one() {
    let o = bin(&["verify", "--spec", "mixed", "--suite", "compatibility", "--samples", "5", "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("pass = false"));
}

#[test]
fn json_report_fields_are_stable() {
    let o = bin(&["--format", "json", "verify", "--spec", "bundlelike", "--suite", "recurrence", "--samples", "10"]);
    let v = json(&o);
    let r = &v["reports"][0];
    for key in ["suite", "spec", "points", "seed", "checks", "notes", "pass", "wall_time_s"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    for key in ["name", "max", "min", "mean", "tol", "bound", "holds", "expected", "pass"] {
        assert!(r["checks"][0].get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["points"], 10);
    assert_eq!(v["pass"], true);
}

#[test]
fn verify_all_skips_inapplicable_suites() {
    let o = bin(&["verify", "--spec", "quartic-minkowski", "--suite", "all", "--samples", "5"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("skipped = flatness"));
    assert!(text.contains("overall = pass"));
}

#[test]
fn every_command_runs_on_every_fixture() {
    for spec in catalog::all() {
        let name = spec.name().to_string();
        let (at, x) = match &spec {
            Spec::Manifold(s) => {
                let c: Vec<String> = s.center().iter().map(|v| format!("{v}")).collect();
                (c.join(","), vec!["0.5"; s.dim()].join(","))
            }
            Spec::Finsler(f) => {
                let c = f.center();
                (format!("{},{};0.6,0.8", c[0], c[1]), "0.5,-0.25;1,0.5".to_string())
            }
        };
        let mut runs: Vec<Vec<&str>> = vec![
            vec!["coeffs", "--connection", "compatible"],
            vec!["coeffs", "--connection", "vranceanu"],
            vec!["coeffs", "--connection", "full-weyl"],
            vec!["curvature"],
            vec!["torsion"],
            vec!["covderiv", "--X", &x],
        ];
        if matches!(spec, Spec::Finsler(_)) {
            runs.push(vec!["finsler", "spray"]);
            runs.push(vec!["finsler", "sasaki"]);
            runs.push(vec!["finsler", "cartan"]);
            runs.push(vec!["finsler", "liouville", "--X", &x]);
        }
        for args in runs {
            let mut full = args.clone();
            full.extend(["--spec", &name, "--at", &at]);
            let o = bin(&full);
            if name == "quartic-minkowski" && args[0] == "covderiv" {
                // the metric derivative along X is defined for Riemannian bases only
                assert!(stderr(&o).contains("NotRiemannianBase"), "{}", stderr(&o));
                continue;
            }
            assert!(o.status.success(), "{full:?}: {}", stderr(&o));
            assert_eq!(o.stdout, bin(&full).stdout, "{full:?} is not deterministic");
        }
    }
}
