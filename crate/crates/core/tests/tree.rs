use hhs::audit::AuditOptions;
use hhs::fixtures::{bs12_window, fixture_b_product, free_product_z2_z3, path};
use hhs::hiero::IndexMap;
use hhs::model::HHSModel;
use hhs::regions::Hieromorphism;
use hhs::report::Rule;
use hhs::space::{CoarseMap, FiniteSpace};
use hhs::tree::{
    build_combined, combined_wedge_table, comparison_map, comparison_profile, decorate, equivalence_classes,
    support_laws, CombineOptions, TreeEdge, TreeError, TreeOfHHS, COMPARISON_BOUND,
};

/// `P3` and `P4` glued along a point carrying the one-element structure.
fn two_paths() -> TreeOfHHS {
    let (a, b) = (path(3), path(4));
    let e = HHSModel::trivial("e", FiniteSpace::point("e"));
    let into = |m: &HHSModel, x: usize| Hieromorphism {
        space_map: CoarseMap::new(vec![vec![x]], &m.space),
        index: IndexMap { map: vec![0] },
        hyp_maps: vec![CoarseMap::new(vec![vec![x]], &m.hyp[0])],
        image_hull: None,
    };
    let edge = TreeEdge { minus: 0, plus: 1, model: e, phi_minus: into(&a, 2), phi_plus: into(&b, 0) };
    TreeOfHHS {
        name: "two paths".into(),
        labels: vec!["v".into(), "w".into()],
        vertices: vec![a, b],
        edges: vec![edge],
        decoration: None,
    }
}

#[test]
fn one_edge_makes_one_class() {
    let t = two_paths();
    let cl = equivalence_classes(&t).unwrap();
    assert_eq!(cl.len(), 1);
    assert_eq!(cl.classes[0].support, vec![0, 1]);
    assert_eq!(cl.classes[0].members, vec![(0, 0), (1, 0)]);
}

#[test]
fn comparison_at_a_vertex_is_the_identity() {
    let t = two_paths();
    let cl = equivalence_classes(&t).unwrap();
    let c = comparison_map(&t, &cl, 0, 1, 1).unwrap();
    assert_eq!(c.map, CoarseMap::identity(4));
    assert_eq!((c.constants.k, c.constants.c), (1.0, 0.0));
    assert_eq!(c.distance, 0);
}

#[test]
fn two_paths_combine() {
    let c = build_combined(&two_paths(), &CombineOptions::default()).unwrap();
    assert_eq!(c.model.n_points(), 7);
    assert_eq!(c.model.space.diameter(), 6);
    assert_eq!((c.n1(), c.n2()), (1, 1));
    assert_eq!(c.model.n_elements(), 3);
}

#[test]
fn cycle_is_not_a_tree() {
    let mut t = two_paths();
    let mut back = t.edges[0].clone();
    (back.minus, back.plus) = (1, 0);
    std::mem::swap(&mut back.phi_minus, &mut back.phi_plus);
    t.edges.push(back);
    assert!(matches!(build_combined(&t, &CombineOptions::default()), Err(TreeError::NotATree(_))));
}

#[test]
fn single_vertex_adds_bounded_elements() {
    let c = build_combined(&TreeOfHHS::single("P5", path(5)), &CombineOptions::default()).unwrap();
    // [S], T_[S] and the top element
    assert_eq!(c.model.n_elements(), 3);
    assert_eq!(c.model.n_points(), 5);
    let l = &c.model.lattice;
    assert!(l.orth(0, c.support_of_class(0)));
}

#[test]
fn free_product_window_shape() {
    let c = build_combined(&free_product_z2_z3(2), &CombineOptions::default()).unwrap();
    assert_eq!(c.n1(), 1);
    assert_eq!(c.n2(), 1);
    assert_eq!(c.tree.vertices.len(), c.coned[0].base.len());
    // point edges make every comparison map constant
    let profile = comparison_profile(&c.tree, &c.classes, COMPARISON_BOUND).unwrap();
    assert!(profile.uniform());
    assert_eq!(profile.max(), 0.0);
}

#[test]
fn combined_wedges_match_brute_force() {
    let c = build_combined(&free_product_z2_z3(2), &CombineOptions::default()).unwrap();
    let w = combined_wedge_table(&c);
    assert!(w.report.is_ok(), "{:?}", w.report);
    let l = &c.model.lattice;
    for k in 0..c.n1() {
        let t = l.id(c.support_of_class(k)).to_string();
        let cont = w.containers.iter().find(|(e, _)| e == l.id(k)).unwrap();
        assert_eq!(cont.1.as_deref(), Some(t.as_str()));
        assert_eq!(l.wedge(k, c.support_of_class(k)), Ok(None));
    }
}

#[test]
fn bs12_comparison_grows_exponentially() {
    for r in [3, 4] {
        match build_combined(&bs12_window(r), &CombineOptions::default()) {
            Err(TreeError::ComparisonNotUniform { profile, constant, .. }) => {
                // doubling per step until the vertex balls run out
                for &(d, k) in &profile {
                    assert_eq!(k, f64::from(1u32 << d.min(r as u32 + 1)));
                }
                assert_eq!(constant, f64::from(1u32 << (r + 1)));
            }
            other => panic!("radius {r}: expected rejection, got {:?}", other.map(|c| c.model.name)),
        }
    }
}

#[test]
fn decorating_complexity_one_is_a_no_op() {
    let t = free_product_z2_z3(1);
    let d = decorate(&t, 1);
    assert_eq!(d.vertices.len(), t.vertices.len());
    assert_eq!(d.edges.len(), t.edges.len());
}

#[test]
fn decorating_a_product_vertex_adds_factor_leaves() {
    let t = TreeOfHHS::single("B", fixture_b_product());
    let d = decorate(&t, 1);
    // a leaf for each V(S_i), then one for the factor below it
    assert_eq!(d.labels, ["v0", "v0/V(S_1)#0", "v0/V(S_2)#0", "v0/V(S_1)#0/S_2#0", "v0/V(S_2)#0/S_1#0"]);
    let c = build_combined(&d, &CombineOptions::default()).unwrap();
    assert!(c.decorated());
    assert!(support_laws(&c, true).is_ok(), "{:?}", support_laws(&c, true));
}

#[test]
fn undecorated_shared_supports_are_reported() {
    let c = build_combined(&TreeOfHHS::single("B", fixture_b_product()), &CombineOptions::default()).unwrap();
    assert!(support_laws(&c, false).is_ok());
    assert!(support_laws(&c, true).has(Rule::DistinctSupports));
    let a = hhs::tree::audit_combined(&c, AuditOptions::default());
    assert!(!a.decorated);
}
