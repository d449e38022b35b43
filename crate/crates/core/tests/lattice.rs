use hhs::fixtures::fixture_b_product;
use hhs::lattice::{IndexLattice, LatticeError, LatticeJson, RelationKind};
use hhs::report::Rule;
use proptest::prelude::*;

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("U{i}")).collect()
}

fn rels(list: &[(&str, &str, RelationKind)]) -> Vec<(String, String, RelationKind)> {
    list.iter().map(|(a, b, k)| (a.to_string(), b.to_string(), *k)).collect()
}

fn ids(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Chain `U0 ⊑ U1 ⊑ ... ⊑ U{n-1}`.
fn chain(n: usize) -> IndexLattice {
    IndexLattice::from_fn(names(n), n - 1, |i, j| if i < j { RelationKind::NestedIn } else { RelationKind::Contains }).unwrap()
}

/// Elements are nonempty subsets of `{0..k}` given as bitmasks; the full set is on top.
/// Nesting is inclusion, orthogonality is disjointness.
fn subset_lattice(masks: &[u32]) -> IndexLattice {
    let top = masks.iter().position(|&m| m == *masks.iter().max().unwrap()).unwrap();
    IndexLattice::from_fn(masks.iter().map(|m| format!("{m:b}")).collect(), top, |i, j| {
        let (a, b) = (masks[i], masks[j]);
        if a & b == 0 {
            RelationKind::Orthogonal
        } else if a & b == a {
            RelationKind::NestedIn
        } else if a & b == b {
            RelationKind::Contains
        } else {
            RelationKind::Transverse
        }
    })
    .unwrap()
}

fn masks(k: u32) -> impl Strategy<Value = Vec<u32>> {
    let full = (1u32 << k) - 1;
    proptest::collection::btree_set(1..full, 0..8).prop_map(move |s| {
        let mut v: Vec<u32> = s.into_iter().collect();
        v.push(full);
        v
    })
}

/// Maximal common lower bounds, straight from the definition.
fn oracle_wedge(l: &IndexLattice, a: usize, b: usize) -> Vec<usize> {
    let common: Vec<usize> = (0..l.len()).filter(|&w| l.nested(w, a) && l.nested(w, b)).collect();
    common.iter().copied().filter(|&w| !common.iter().any(|&z| z != w && l.nested(w, z))).collect()
}

#[test]
fn singleton_has_complexity_one() {
    let l = IndexLattice::singleton("S");
    assert_eq!(l.complexity(), 1);
    assert_eq!(l.wedge(0, 0), Ok(Some(0)));
    assert!(l.validate_relations().is_ok());
}

#[test]
fn chain_complexity_is_length() {
    for n in 1..7 {
        assert_eq!(chain(n).complexity(), n);
    }
}

#[test]
fn wedge_with_top_is_identity() {
    let l = chain(4);
    for u in 0..4 {
        assert_eq!(l.wedge(3, u), Ok(Some(u)));
        assert_eq!(l.join(u, u), Ok(u));
    }
}

#[test]
fn fixture_b_relations() {
    let m = fixture_b_product();
    let l = &m.lattice;
    let i = |s: &str| l.index_of(s).unwrap();
    assert_eq!(l.len(), 5);
    assert_eq!(l.complexity(), 3);
    assert_eq!(l.id(l.maximal()), "S");
    assert!(l.orth(i("S_1"), i("S_2")));
    assert!(l.orth(i("S_1"), i("V(S_1)")));
    assert!(l.nested(i("S_2"), i("V(S_1)")));
    assert_eq!(l.wedge(i("S_1"), i("V(S_2)")), Ok(Some(i("S_1"))));
    assert_eq!(l.wedge(i("S_1"), i("S_2")), Ok(None));
    assert_eq!(l.join(i("S_1"), i("S_2")), Ok(i("S")));
    assert_eq!(l.container(i("S_1")), Some(i("V(S_1)")));
    assert_eq!(l.container(i("S_2")), Some(i("V(S_2)")));
    assert!(l.validate_relations().is_ok());
    assert!(l.verify_intersection_property().is_ok());
    assert!(l.verify_clean_containers().is_ok());
}

#[test]
fn json_roundtrip() {
    let l = fixture_b_product().lattice;
    let j = l.to_json();
    let text = serde_json::to_string(&j).unwrap();
    let back: LatticeJson = serde_json::from_str(&text).unwrap();
    let l2 = IndexLattice::from_json(&back).unwrap();
    assert_eq!(l2.to_json(), j);
    for a in 0..l.len() {
        for b in 0..l.len() {
            assert_eq!(l.relation(a, b), l2.relation(a, b));
        }
    }
}

#[test]
fn missing_relation_is_a_schema_error() {
    let e = IndexLattice::from_relations(&ids(&["S", "A", "B"]), "S", &rels(&[("A", "S", RelationKind::NestedIn)]));
    assert!(matches!(e, Err(LatticeError::MissingRelation(..))));
}

#[test]
fn two_meets_fail_intersection_property() {
    // A, B ⊑ C, D ⊑ S with A ⋔ B and C ⋔ D: wedge(C, D) has two maximal candidates.
    let r = rels(&[
        ("A", "C", RelationKind::NestedIn),
        ("A", "D", RelationKind::NestedIn),
        ("B", "C", RelationKind::NestedIn),
        ("B", "D", RelationKind::NestedIn),
        ("A", "S", RelationKind::NestedIn),
        ("B", "S", RelationKind::NestedIn),
        ("C", "S", RelationKind::NestedIn),
        ("D", "S", RelationKind::NestedIn),
        ("A", "B", RelationKind::Transverse),
        ("C", "D", RelationKind::Transverse),
    ]);
    let l = IndexLattice::from_relations(&ids(&["A", "B", "C", "D", "S"]), "S", &r).unwrap();
    let (c, d) = (l.index_of("C").unwrap(), l.index_of("D").unwrap());
    assert!(matches!(l.wedge(c, d), Err(LatticeError::NotALattice { .. })));
    let rep = l.verify_intersection_property();
    assert!(rep.has(Rule::WedgeNotUnique));
}

#[test]
fn container_containing_its_element_is_not_clean() {
    // V1, V2 ⊥ U are transverse to each other, so their least common container W also holds U.
    let r = rels(&[
        ("U", "V1", RelationKind::Orthogonal),
        ("U", "V2", RelationKind::Orthogonal),
        ("V1", "V2", RelationKind::Transverse),
        ("U", "W", RelationKind::NestedIn),
        ("V1", "W", RelationKind::NestedIn),
        ("V2", "W", RelationKind::NestedIn),
        ("U", "S", RelationKind::NestedIn),
        ("V1", "S", RelationKind::NestedIn),
        ("V2", "S", RelationKind::NestedIn),
        ("W", "S", RelationKind::NestedIn),
    ]);
    let l = IndexLattice::from_relations(&ids(&["U", "V1", "V2", "W", "S"]), "S", &r).unwrap();
    assert!(l.validate_relations().violations.iter().all(|v| v.rule == Rule::ContainerMissing));
    let (u, w) = (l.index_of("U").unwrap(), l.index_of("W").unwrap());
    assert_eq!(l.container(u), Some(w));
    let rep = l.verify_clean_containers();
    assert!(rep.has(Rule::ContainerNotClean));
    assert!(rep.has(Rule::JoinOrthogonality));
}

#[test]
fn orthogonality_inheritance_violation() {
    let r = rels(&[
        ("A", "B", RelationKind::NestedIn),
        ("B", "C", RelationKind::Orthogonal),
        ("A", "C", RelationKind::Transverse),
        ("A", "S", RelationKind::NestedIn),
        ("B", "S", RelationKind::NestedIn),
        ("C", "S", RelationKind::NestedIn),
    ]);
    let l = IndexLattice::from_relations(&ids(&["A", "B", "C", "S"]), "S", &r).unwrap();
    let rep = l.validate_relations();
    assert!(rep.has(Rule::OrthogonalityInheritance));
}

#[test]
fn nesting_must_be_transitive() {
    let r = rels(&[
        ("A", "B", RelationKind::NestedIn),
        ("B", "C", RelationKind::NestedIn),
        ("A", "C", RelationKind::Transverse),
        ("A", "S", RelationKind::NestedIn),
        ("B", "S", RelationKind::NestedIn),
        ("C", "S", RelationKind::NestedIn),
    ]);
    let l = IndexLattice::from_relations(&ids(&["A", "B", "C", "S"]), "S", &r).unwrap();
    assert!(l.validate_relations().has(Rule::NestingNotTransitive));
}

#[test]
fn hasse_dot_lists_every_element() {
    let l = fixture_b_product().lattice;
    let dot = l.to_dot("B");
    for id in l.ids() {
        assert!(dot.contains(id.as_str()), "{id} missing");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, rng_seed: proptest::test_runner::RngSeed::Fixed(7), ..ProptestConfig::default() })]

    #[test]
    fn subset_lattices_satisfy_relation_axioms(m in masks(4)) {
        let l = subset_lattice(&m);
        let rep = l.validate_relations();
        // Containers may be missing in a sparse family; the relation rules always hold.
        prop_assert!(rep.violations.iter().all(|v| v.rule == Rule::ContainerMissing), "{:?}", rep);
        prop_assert!(l.complexity() <= l.len());
    }

    #[test]
    fn wedge_matches_definition(m in masks(4)) {
        let l = subset_lattice(&m);
        for a in 0..l.len() {
            for b in 0..l.len() {
                let oracle = oracle_wedge(&l, a, b);
                match l.wedge(a, b) {
                    Ok(None) => prop_assert!(oracle.is_empty()),
                    Ok(Some(w)) => prop_assert_eq!(oracle, vec![w]),
                    Err(_) => prop_assert!(oracle.len() > 1),
                }
                prop_assert_eq!(l.wedge(a, b).ok(), l.brute_wedge(a, b).ok());
            }
        }
    }

    #[test]
    fn wedge_laws(m in masks(4)) {
        let l = subset_lattice(&m);
        for a in 0..l.len() {
            for b in 0..l.len() {
                let Ok(w) = l.wedge(a, b) else { continue };
                prop_assert_eq!(Ok(w), l.wedge(b, a));
                if let Some(w) = w {
                    prop_assert!(l.nested(w, a) && l.nested(w, b));
                }
                prop_assert_eq!(w == Some(b), l.nested(b, a));
                if l.orth(a, b) {
                    prop_assert_eq!(w, None);
                }
            }
        }
    }

    #[test]
    fn join_is_monotone(m in masks(4)) {
        let l = subset_lattice(&m);
        for a in 0..l.len() {
            for b in 0..l.len() {
                let Ok(j) = l.join(a, b) else { continue };
                prop_assert!(l.nested(a, j) && l.nested(b, j));
                for c in 0..l.len() {
                    if l.nested(a, c) {
                        if let Ok(j2) = l.join(c, b) {
                            prop_assert!(l.nested(j, j2));
                        }
                    }
                }
            }
        }
    }
}
