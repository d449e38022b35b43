use hhs::fixtures::{factor_inclusion, hagen_f2, path};
use hhs::hiero::IndexMap;
use hhs::probe::{theorem_b_probe, ProbeError};
use hhs::regions::{clipped_sum_compare, Hieromorphism};

#[test]
fn identity_probe_is_clean() {
    let m = path(6);
    let r = theorem_b_probe(&m, &m, &Hieromorphism::identity(&m)).unwrap();
    // d ≤ K d + K holds with K = 5/6 at the diameter 5
    assert_eq!(r.c1_lipschitz, 5.0 / 6.0);
    assert_eq!(r.c2_qi, 1.0);
    assert_eq!(r.c3_gate_defect, 0);
    assert!(r.c4_pullback_pass);
    assert_eq!(r.c5_outside_diam, 0);
    assert!(r.eta_ok && r.rho_ok);
}

#[test]
fn factor_inclusions_stay_small() {
    for radius in 1..=3 {
        let (a, m, phi) = factor_inclusion(radius);
        let r = theorem_b_probe(&a, &m, &phi).unwrap();
        assert_eq!(r.c2_qi, 1.0);
        assert_eq!(r.c3_gate_defect, 0);
        assert!(r.c4_pullback_pass);
        assert_eq!(r.c5_outside_diam, 0);
        assert!(r.eta_ok && r.rho_ok);
    }
}

#[test]
fn hagen_conditions_degrade_together() {
    let mut last = None;
    for n in 2..=4 {
        let (src, tgt, phi) = hagen_f2(n);
        let r = theorem_b_probe(&src, &tgt, &phi).unwrap();
        let now = (r.c1_lipschitz, r.c2_qi, r.c5_outside_diam);
        if let Some((c1, c2, c5)) = last {
            assert!(now.0 > c1 && now.1 > c2 && now.2 > c5, "{now:?}");
        }
        last = Some(now);
        // only fullness is needed for the clipped-sum comparison
        let f = clipped_sum_compare(&src, &tgt, &phi, 1, 1);
        assert!(f.k.is_finite());
    }
}

#[test]
fn non_full_map_is_refused() {
    let (a, m, mut phi) = factor_inclusion(1);
    phi.index = IndexMap { map: vec![m.lattice.maximal()] };
    assert!(matches!(theorem_b_probe(&a, &m, &phi), Err(ProbeError::NotFull(_))));
}
