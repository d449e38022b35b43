use hhs::fixtures::fixture_b_product;
use hhs::hiero::{compose_verified, verify_fullness, verify_index_map, verify_wedge_join_commute, HieroError, IndexMap};
use hhs::lattice::{IndexLattice, RelationKind};
use hhs::product::product_lattice;
use hhs::report::Rule;

fn chain(n: usize) -> IndexLattice {
    let ids = (0..n).map(|i| format!("U{i}")).collect();
    IndexLattice::from_fn(ids, n - 1, |i, j| if i < j { RelationKind::NestedIn } else { RelationKind::Contains }).unwrap()
}

/// `A, B ⊑ S` with `A` and `B` related by `k`.
fn pair(k: RelationKind) -> IndexLattice {
    let ids = ["A", "B", "S"].map(String::from).to_vec();
    IndexLattice::from_fn(ids, 2, move |i, j| match (i, j) {
        (_, 2) => RelationKind::NestedIn,
        (2, _) => RelationKind::Contains,
        _ => k,
    })
    .unwrap()
}

#[test]
fn identity_passes_everything() {
    let l = fixture_b_product().lattice;
    let id = IndexMap::identity(l.len());
    assert!(verify_index_map(&id, &l, &l).is_ok());
    assert!(verify_fullness(&id, &l, &l).is_ok());
    assert!(verify_wedge_join_commute(&id, &l, &l).is_ok());
}

#[test]
fn factor_inclusion_into_product_is_full() {
    for factor in [IndexLattice::singleton("S"), chain(3)] {
        let other = chain(2);
        let (p, lay) = product_lattice(&factor, &other);
        for side in 0..2 {
            let src = if side == 0 { &factor } else { &other };
            let m = IndexMap { map: (0..src.len()).map(|u| lay.factor(side, u)).collect() };
            assert!(verify_index_map(&m, src, &p).is_ok());
            assert!(verify_fullness(&m, src, &p).is_ok());
            assert!(verify_wedge_join_commute(&m, src, &p).is_ok());
        }
    }
}

#[test]
fn orthogonal_pair_sent_to_transverse_pair_fails() {
    let (src, tgt) = (pair(RelationKind::Orthogonal), pair(RelationKind::Transverse));
    let rep = verify_index_map(&IndexMap::identity(3), &src, &tgt);
    assert!(rep.has(Rule::RelationChanged));
    assert_eq!(rep.violations[0].witness, vec!["A".to_string(), "B".to_string()]);
}

#[test]
fn non_injective_map_fails() {
    let l = chain(2);
    let rep = verify_index_map(&IndexMap { map: vec![1, 1] }, &l, &l);
    assert!(rep.has(Rule::NotInjective));
}

#[test]
fn extra_element_below_image_breaks_fullness() {
    let src = IndexLattice::singleton("S");
    let tgt = chain(2);
    let m = IndexMap { map: vec![1] };
    assert!(verify_index_map(&m, &src, &tgt).is_ok());
    let rep = verify_fullness(&m, &src, &tgt);
    assert!(rep.has(Rule::MissingPreimage));
    assert_eq!(rep.violations[0].witness, vec!["U0".to_string()]);
}

#[test]
fn dropping_an_image_element_is_reported() {
    // {A ⊥ B ⊑ S} into fixture B without the V elements: joins land on S in both,
    // but the non-full image misses V(S_1) and V(S_2).
    let src = pair(RelationKind::Orthogonal);
    let tgt = fixture_b_product().lattice;
    let i = |s: &str| tgt.index_of(s).unwrap();
    let m = IndexMap { map: vec![i("S_1"), i("S_2"), i("S")] };
    assert!(verify_index_map(&m, &src, &tgt).is_ok());
    assert!(!verify_fullness(&m, &src, &tgt).is_ok());
    assert!(verify_wedge_join_commute(&m, &src, &tgt).is_ok());
}

#[test]
fn compose_identities() {
    let l = fixture_b_product().lattice;
    let id = IndexMap::identity(l.len());
    let (m, rep) = compose_verified(&id, &id, &l, &l, &l).unwrap();
    assert_eq!(m, id);
    assert!(rep.is_ok());
}

#[test]
fn compose_along_two_edges() {
    let (a, b, c) = (IndexLattice::singleton("S"), chain(2), chain(3));
    let m1 = IndexMap { map: vec![0] };
    let m2 = IndexMap { map: vec![0, 1] };
    let (m, rep) = compose_verified(&m1, &m2, &a, &b, &c).unwrap();
    assert_eq!(m.map, vec![0]);
    assert!(rep.is_ok());
}

#[test]
fn compose_domain_mismatch() {
    let (a, b) = (chain(2), chain(3));
    let m1 = IndexMap { map: vec![0, 2] };
    let m2 = IndexMap { map: vec![0, 1] };
    assert!(matches!(compose_verified(&m1, &m2, &a, &b, &a), Err(HieroError::DomainMismatch(..))));
    assert!(matches!(m1.compose(&m2, 2), Err(HieroError::DomainMismatch(..))));
}

#[test]
fn json_roundtrip() {
    let l = fixture_b_product().lattice;
    let id = IndexMap::identity(l.len());
    let j = id.to_json(&l, &l);
    assert_eq!(IndexMap::from_json(&j, &l, &l).unwrap(), id);
}
