use hhs::audit::audit_axioms;
use hhs::fixtures::{cyclic, fixture_b_product, free_product_spec, raag_path, z_ball};
use hhs::graph::{build, free_product_window, split, GraphError, LevelKind, PointEdges, ProductSpec};
use hhs::regions::distance_formula_fit;

fn spec(n: usize, edges: &[(usize, usize)]) -> ProductSpec {
    let names = (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    ProductSpec::new(names, edges, (0..n).map(|_| cyclic(2)).collect(), 1).unwrap()
}

#[test]
fn path_pivots_on_its_middle() {
    let s = split(&spec(3, &[(0, 1), (1, 2)])).unwrap();
    assert_eq!(s.pivot, "b");
    assert!(s.central);
    assert_eq!(s.link, ["a", "c"]);
}

#[test]
fn complete_and_edgeless_graphs_need_no_split() {
    assert!(matches!(split(&spec(3, &[(0, 1), (1, 2), (0, 2)])), Err(GraphError::NoSplitNeeded(_))));
    assert!(matches!(split(&spec(3, &[])), Err(GraphError::NoSplitNeeded(_))));
}

#[test]
fn loops_are_rejected() {
    let r = ProductSpec::new(vec!["a".into()], &[(0, 0)], vec![cyclic(2)], 1);
    assert!(matches!(r, Err(GraphError::NotSimplicial(_))));
}

#[test]
fn non_central_pivot_is_unsupported() {
    let s = spec(4, &[(0, 1), (1, 2), (2, 3)]);
    let d = split(&s).unwrap();
    assert_eq!(d.pivot, "b");
    assert!(!d.central);
    assert!(matches!(build(&s), Err(GraphError::Unsupported { .. })));
}

#[test]
fn single_edge_is_a_direct_product() {
    let s = ProductSpec::new(vec!["a".into(), "b".into()], &[(0, 1)], vec![cyclic(2), cyclic(3)], 1).unwrap();
    let g = build(&s).unwrap();
    assert_eq!(g.model.lattice.to_json(), fixture_b_product().lattice.to_json());
    assert_eq!(g.model.n_points(), 6);
    assert!(audit_axioms(&g.model).pass());
    assert_eq!(g.chain.levels.last().unwrap().kind, LevelKind::DirectProduct);
    assert!(g.chain.pass());
}

#[test]
fn isolated_vertices_make_a_free_product() {
    let g = build(&free_product_spec(2)).unwrap();
    assert_eq!(g.chain.levels.last().unwrap().kind, LevelKind::FreeProduct);
    assert!(g.chain.pass());
    assert!(audit_axioms(&g.model).pass());
    let f = distance_formula_fit(&g.model, 1);
    assert!(f.k.is_finite() && f.c.is_finite());
}

#[test]
fn small_raag_window_certifies() {
    let g = build(&raag_path(1, 1)).unwrap();
    let kinds: Vec<LevelKind> = g.chain.levels.iter().map(|l| l.kind).collect();
    assert!(kinds.contains(&LevelKind::Amalgam));
    for level in &g.chain.levels {
        assert!(level.pass, "{:?}", level.subgraph);
        assert!(level.inclusions.iter().all(|c| c.full && c.hqc && c.isometric));
    }
}

#[test]
fn window_sizes() {
    let (a, b) = (cyclic(2), cyclic(3));
    let w0 = free_product_window(&a, &b, ("a", "b"), PointEdges::TrivialLattice, 0, usize::MAX).unwrap();
    assert_eq!(w0.vertices.len(), 1);
    // one Z/2 coset, its two Z/3 neighbours, then two more Z/2 cosets off each of those
    let w2 = free_product_window(&a, &b, ("a", "b"), PointEdges::TrivialLattice, 2, usize::MAX).unwrap();
    assert_eq!(w2.vertices.len(), 7);
    let e = free_product_window(&a, &b, ("a", "b"), PointEdges::TrivialLattice, 4, 5);
    assert!(matches!(e, Err(GraphError::WindowTooLarge { budget: 5 })));
}

#[test]
fn spec_json_roundtrip() {
    let s = ProductSpec::new(vec!["a".into(), "b".into()], &[(0, 1)], vec![z_ball(1), cyclic(3)], 2).unwrap();
    let text = serde_json::to_string(&s.to_json()).unwrap();
    let back = ProductSpec::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(serde_json::to_string(&back.to_json()).unwrap(), text);
}
