//! Built-in fixture specs.

use crate::specfile::{parse_spec, Spec};

/// `(name, spec text)` for every shipped fixture.
pub const CATALOG: [(&str, &str); 9] = [
    ("euclidean3", include_str!("../fixtures/euclidean3.spec")),
    ("leafwarp", include_str!("../fixtures/leafwarp.spec")),
    ("leafwarp-transversal", include_str!("../fixtures/leafwarp-transversal.spec")),
    ("mixed", include_str!("../fixtures/mixed.spec")),
    ("p2-nonintegrable", include_str!("../fixtures/p2-nonintegrable.spec")),
    ("bundlelike", include_str!("../fixtures/bundlelike.spec")),
    ("sphere-riemann", include_str!("../fixtures/sphere-riemann.spec")),
    ("flat-riemann", include_str!("../fixtures/flat-riemann.spec")),
    ("quartic-minkowski", include_str!("../fixtures/quartic-minkowski.spec")),
];

pub fn text(name: &str) -> Option<&'static str> {
    CATALOG.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Parses a catalog entry; shipped fixtures always validate.
pub fn get(name: &str) -> Option<Spec> {
    text(name).map(|t| parse_spec(t).expect("catalog fixtures validate"))
}

pub fn all() -> Vec<Spec> {
    CATALOG.iter().map(|(n, _)| get(n).expect("listed")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_loads_under_its_own_name() {
        for (name, _) in CATALOG {
            assert_eq!(get(name).unwrap().name(), name);
        }
    }

    #[test]
    fn euclidean3_shape() {
        let Some(Spec::Manifold(s)) = get("euclidean3") else { panic!("expected a manifold") };
        assert_eq!((s.n, s.p), (2, 1));
    }
}
