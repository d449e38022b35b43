use hhs::audit::audit_axioms;
use hhs::fixtures::{bounded_factor_product, fixture_b_product, free_product_spec, path};
use hhs::graph::build;
use hhs::product::direct_product_structure;
use hhs::regions::{
    clipped_sum_compare, concretize, distance_formula_fit, epsilon_support, gate, hq_check, product_region, realize,
    ConsistentTuple, Hieromorphism, RegionError,
};
use hhs::space::{coarse_map_constants, CoarseMap, FiniteSpace};
use proptest::prelude::*;

fn brute_twice_delta(s: &FiniteSpace) -> u32 {
    let n = s.len();
    let mut best = 0;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                for w in 0..n {
                    let mut sums = [s.d(x, y) + s.d(z, w), s.d(x, z) + s.d(y, w), s.d(x, w) + s.d(y, z)];
                    sums.sort_unstable();
                    best = best.max(sums[2] - sums[1]);
                }
            }
        }
    }
    best
}

fn grid(a: usize, b: usize) -> hhs::model::HHSModel {
    direct_product_structure(&path(a), &path(b)).0
}

#[test]
fn trees_are_zero_hyperbolic() {
    assert_eq!(FiniteSpace::point("x").four_point_twice_delta(), 0);
    assert_eq!(FiniteSpace::path(9).four_point_twice_delta(), 0);
    let labels = (0..7).map(|i| i.to_string()).collect();
    let t = FiniteSpace::from_edges(labels, &[(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (5, 6)]).unwrap();
    assert_eq!(t.four_point_twice_delta(), 0);
}

#[test]
fn grid_delta_matches_exhaustive_scan() {
    let g = FiniteSpace::path(5).product(&FiniteSpace::path(7));
    assert_eq!(g.four_point_twice_delta(), brute_twice_delta(&g));
    let c = FiniteSpace::complete(4, "k");
    assert_eq!(c.four_point_twice_delta(), brute_twice_delta(&c));
}

#[test]
fn disconnected_graph_is_rejected() {
    let labels = (0..3).map(|i| i.to_string()).collect();
    assert!(FiniteSpace::from_edges(labels, &[(0, 1)]).is_err());
}

#[test]
fn coarse_constants_of_simple_maps() {
    let p = FiniteSpace::path(6);
    let id = coarse_map_constants(&CoarseMap::identity(6), &p, &p);
    assert_eq!((id.k, id.c), (1.0, 0.0));
    let k = coarse_map_constants(&CoarseMap::constant(6, vec![2], &p), &p, &p);
    assert_eq!((k.k, k.c), (0.0, 0.0));
}

#[test]
fn trivial_model_passes_audit() {
    let r = audit_axioms(&path(6));
    assert!(r.pass(), "{r:?}");
    assert_eq!(r.axioms.len(), 9);
}

#[test]
fn fixture_b_passes_audit() {
    let r = audit_axioms(&fixture_b_product());
    assert!(r.pass(), "{r:?}");
    assert!(r.constants.kappa0 < u32::MAX);
}

#[test]
fn deleted_rho_is_a_structural_failure() {
    let mut m = fixture_b_product();
    let key = *m.rho.keys().next().unwrap();
    m.rho.remove(&key);
    assert!(!m.structural_problems().is_empty());
    let r = audit_axioms(&m);
    assert!(!r.pass());
    assert!(!r.structural.is_empty());
}

#[test]
fn realize_recovers_points() {
    let m = grid(4, 5);
    for x in 0..m.n_points() {
        let (y, defect) = realize(&m, &ConsistentTuple::of_point(&m, x, 0)).unwrap();
        assert_eq!((y, defect), (x, 0));
    }
}

#[test]
fn realize_product_tuple() {
    let m = grid(4, 5);
    let l = &m.lattice;
    let (s1, s2) = (l.index_of("S_1").unwrap(), l.index_of("S_2").unwrap());
    let mut t = ConsistentTuple::of_point(&m, 0, 0);
    // coordinates (3, 4) in the two factor paths
    t.coords[s1] = vec![3];
    t.coords[s2] = vec![4];
    let (y, defect) = realize(&m, &t).unwrap();
    assert_eq!(defect, 0);
    assert_eq!(y, 3 * 5 + 4);
}

#[test]
fn inconsistent_tuple_is_rejected() {
    let c = build(&free_product_spec(2)).unwrap().combined.unwrap();
    let m = &c.model;
    let l = &m.lattice;
    let base = ConsistentTuple::of_point(m, 0, 0);
    let kappa = (0..l.len()).map(|u| m.hyp[u].diam(&base.coords[u])).max().unwrap();
    assert!(realize(m, &ConsistentTuple { kappa, ..base.clone() }).is_ok());
    let mut found = false;
    for u in 0..l.len() {
        for v in u + 1..l.len() {
            if !l.transverse(u, v) {
                continue;
            }
            let far = |a: usize, b: usize| {
                let rho = m.rho_set(a, b).unwrap();
                (0..m.hyp[a].len()).max_by_key(|&p| m.hyp[a].point_set_dist(p, rho)).unwrap()
            };
            let (pu, pv) = (far(u, v), far(v, u));
            if m.hyp[u].point_set_dist(pu, m.rho_set(u, v).unwrap()) <= kappa
                || m.hyp[v].point_set_dist(pv, m.rho_set(v, u).unwrap()) <= kappa
            {
                continue;
            }
            let mut t = base.clone();
            t.kappa = kappa;
            t.coords[u] = vec![pu];
            t.coords[v] = vec![pv];
            assert!(matches!(realize(m, &t), Err(RegionError::NoConsistentTuple { .. })));
            found = true;
        }
    }
    assert!(found, "no transverse pair with room to violate consistency");
}

#[test]
fn product_region_of_top_is_everything() {
    let m = grid(4, 5);
    let pr = product_region(&m, m.lattice.maximal(), 0);
    assert_eq!(pr.f.len(), m.n_points());
}

#[test]
fn product_region_of_factor_is_a_fiber() {
    let m = grid(4, 5);
    let s1 = m.lattice.index_of("S_1").unwrap();
    let pr = product_region(&m, s1, 0);
    let horizontal: Vec<usize> = (0..4).map(|i| i * 5 + pr.base % 5).collect();
    let vertical: Vec<usize> = (0..5).map(|j| (pr.base / 5) * 5 + j).collect();
    assert_eq!(pr.f, horizontal);
    assert_eq!(pr.e, vertical);
    assert_eq!(pr.copies.len(), 5);
    assert!(hq_check(&m, &pr.f).pass);
}

#[test]
fn gate_on_a_fiber_is_the_projection() {
    let m = grid(4, 5);
    let fiber: Vec<usize> = (0..4).map(|i| i * 5 + 2).collect();
    for x in 0..m.n_points() {
        assert_eq!(gate(&m, &fiber, x).unwrap(), (x / 5) * 5 + 2);
    }
    for &x in &fiber {
        assert_eq!(gate(&m, &fiber, x).unwrap(), x);
    }
}

#[test]
fn whole_space_is_hierarchically_quasiconvex() {
    let m = grid(5, 7);
    let all: Vec<usize> = (0..m.n_points()).collect();
    let r = hq_check(&m, &all);
    assert!(r.pass);
    assert_eq!(r.k0, 0);
    assert!(r.kfun.iter().all(|&(_, k)| k == 0));
}

#[test]
fn grid_diagonal_is_not_hierarchically_quasiconvex() {
    let m = grid(9, 9);
    let diag: Vec<usize> = (0..9).map(|i| i * 9 + i).collect();
    let r = hq_check(&m, &diag);
    assert!(!r.pass);
    assert_eq!(r.k(0), 8);
    assert!(matches!(gate(&m, &diag, 8), Err(RegionError::NotHQC { .. })));
}

#[test]
fn supports() {
    let m = grid(5, 7);
    assert!(epsilon_support(&m, &[3], 0).is_empty());
    let all: Vec<usize> = (0..m.n_points()).collect();
    let l = &m.lattice;
    let supp = epsilon_support(&m, &all, 1);
    assert_eq!(l.join_all(&supp).unwrap(), Some(l.maximal()));
    let s1 = l.index_of("S_1").unwrap();
    let f = product_region(&m, s1, 0).f;
    assert!(epsilon_support(&m, &f, 1).iter().all(|&w| l.nested(w, s1)));
}

#[test]
fn concretize_keeps_a_concrete_model() {
    let m = grid(5, 7);
    let c = concretize(&m, 1).unwrap();
    assert!(c.removed.is_empty());
    assert_eq!(c.model.lattice.to_json(), m.lattice.to_json());
}

#[test]
fn concretize_drops_a_bounded_factor() {
    let c = concretize(&bounded_factor_product(), 1).unwrap();
    assert_eq!(c.s_eps.as_deref(), Some("S_1"));
    assert_eq!(c.removed, ["S_2", "V(S_1)", "V(S_2)", "S"]);
    assert_eq!(c.model.n_elements(), 1);
    assert_eq!(c.neighborhood, 1);
}

#[test]
fn distance_formula_exact_cases() {
    let f = distance_formula_fit(&path(8), 1);
    assert_eq!((f.k, f.c), (1.0, 0.0));
    let f = distance_formula_fit(&grid(3, 4), 1);
    assert_eq!((f.k, f.c), (1.0, 0.0));
}

#[test]
fn clipped_sums_of_identity() {
    let m = grid(3, 4);
    let f = clipped_sum_compare(&m, &m, &Hieromorphism::identity(&m), 1, 1);
    assert_eq!((f.k, f.c), (1.0, 0.0));
}

#[test]
fn json_roundtrip() {
    let m = fixture_b_product();
    let text = serde_json::to_string(&m.to_json()).unwrap();
    let back = hhs::model::HHSModel::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(back.to_json(), m.to_json());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, rng_seed: proptest::test_runner::RngSeed::Fixed(11), ..ProptestConfig::default() })]

    #[test]
    fn metric_axioms_on_random_trees(parents in proptest::collection::vec(0usize..100, 1..20)) {
        let n = parents.len() + 1;
        let edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(i, &p)| (p % (i + 1), i + 1)).collect();
        let s = FiniteSpace::from_edges((0..n).map(|i| i.to_string()).collect(), &edges).unwrap();
        prop_assert_eq!(s.four_point_twice_delta(), 0);
        for x in 0..n {
            for y in 0..n {
                prop_assert_eq!(s.d(x, y), s.d(y, x));
                prop_assert_eq!(s.d(x, y) == 0, x == y);
                for z in 0..n {
                    prop_assert!(s.d(x, z) <= s.d(x, y) + s.d(y, z));
                }
            }
        }
    }

    #[test]
    fn gate_is_closest_on_random_fibers(a in 2usize..6, b in 2usize..6, row in 0usize..6) {
        let m = grid(a, b);
        let row = row % b;
        let fiber: Vec<usize> = (0..a).map(|i| i * b + row).collect();
        for x in 0..m.n_points() {
            let g = gate(&m, &fiber, x).unwrap();
            prop_assert_eq!(m.space.d(x, g), m.space.point_set_dist(x, &fiber));
        }
    }
}
