//! The shipped fixtures and the checks each one must pass.

use hhs::audit::{audit_axioms, AuditOptions};
use hhs::fixtures::{bs12_window, fixture_b_product, free_product_z2_z3, hagen_f2, raag_path};
use hhs::graph::build;
use hhs::probe::theorem_b_probe;
use hhs::tree::{audit_combined, build_combined, decorate, CombineOptions};
use serde_json::json;

use crate::{Failure, Outcome};

pub fn run(name: &str, radius: Option<usize>, copy_cap: Option<usize>) -> Result<Outcome, Failure> {
    match name {
        "fixture-b-product" => Ok(fixture_b()),
        "free-product-z2-z3" => free_product(radius.unwrap_or(2), copy_cap),
        "raag-path" => raag(radius.unwrap_or(1), copy_cap),
        "hagen-f2" => Ok(hagen(radius.unwrap_or(6))),
        "bs12-window" => bs12(radius.unwrap_or(4)),
        other => Err(Failure::Schema(format!("unknown example {other}; expected one of {:?}", hhs::fixtures::NAMES))),
    }
}

fn fixture_b() -> Outcome {
    let m = fixture_b_product();
    let l = &m.lattice;
    let s1 = l.index_of("S_1").expect("fixture element");
    let relations = l.validate_relations();
    let intersection = l.verify_intersection_property();
    let clean = l.verify_clean_containers();
    let audit = audit_axioms(&m);
    let cont = l.container(s1).map(|c| l.id(c).to_string());
    let pass = l.len() == 5
        && relations.is_ok()
        && intersection.is_ok()
        && clean.is_ok()
        && cont.as_deref() == Some("V(S_1)")
        && audit.pass();
    Outcome {
        header: "Direct product of two one-element structures".into(),
        pass,
        report: json!({
            "elements": l.len(),
            "lattice": l.to_json(),
            "orthogonal_container_of_S_1": cont,
            "relations": relations,
            "intersection_property": intersection,
            "clean_containers": clean,
            "audit": audit,
        }),
        dots: vec![("lattice".into(), l.to_dot(&m.name)), ("space".into(), m.space.to_dot(&m.name))],
    }
}

fn free_product(radius: usize, copy_cap: Option<usize>) -> Result<Outcome, Failure> {
    let mut t = free_product_z2_z3(radius);
    if let Some(k) = copy_cap {
        t = decorate(&t, k);
    }
    let c = build_combined(&t, &CombineOptions::default()).map_err(Failure::hypothesis)?;
    let audit = audit_combined(&c, AuditOptions::default());
    Ok(Outcome {
        header: format!("Free product Z/2 * Z/3, Bass-Serre window of radius {radius}"),
        pass: audit.pass,
        report: json!({ "combined": c.to_json(), "audit": audit }),
        dots: c.dots(),
    })
}

fn raag(radius: usize, copy_cap: Option<usize>) -> Result<Outcome, Failure> {
    let mut spec = raag_path(2, radius);
    if let Some(k) = copy_cap {
        spec.copy_cap = k;
    }
    let g = build(&spec).map_err(Failure::hypothesis)?;
    let audit = g.combined.as_ref().map(|c| audit_combined(c, AuditOptions::default()));
    let pass = g.chain.pass() && audit.as_ref().is_some_and(|a| a.pass);
    let dots = g.combined.as_ref().map(|c| c.dots()).unwrap_or_default();
    Ok(Outcome {
        header: format!("Right-angled Artin group on the path a-b-c, Z-balls of radius 2, window radius {radius}"),
        pass,
        report: json!({
            "points": g.model.n_points(),
            "elements": g.model.n_elements(),
            "chain": g.chain,
            "combined": g.combined.as_ref().map(|c| c.to_json()),
            "audit": audit,
        }),
        dots,
    })
}

/// Conditions (1), (2) and (5) across radii `2..=radius`. The first two must grow strictly;
/// (5) must never drop and must end above where it started.
fn hagen(radius: usize) -> Outcome {
    let mut rows = Vec::new();
    let mut segments = true;
    for n in 2..=radius.max(2) {
        let (s, t, phi) = hagen_f2(n);
        let row = match theorem_b_probe(&s, &t, &phi) {
            Ok(r) => {
                for m in 0..n {
                    let (a, b) = (phi.space_map.image(m)[0], phi.space_map.image(m + 1)[0]);
                    segments &= t.space.d(a, b) as usize == 2 * m + 2;
                }
                json!({
                    "radius": n,
                    "c1_lipschitz": r.c1_lipschitz,
                    "c2_qi": r.c2_qi,
                    "c3_gate_defect": r.c3_gate_defect,
                    "c4_pullback_pass": r.c4_pullback_pass,
                    "c5_outside_diam": r.c5_outside_diam,
                    "c5_witness": r.c5_witness,
                })
            }
            Err(e) => json!({ "radius": n, "error": e.to_string() }),
        };
        rows.push(row);
    }
    let col = |k: &str| rows.iter().map(|r| r[k].as_f64()).collect::<Option<Vec<f64>>>();
    let strictly = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
    let (c1, c2, c5) = (col("c1_lipschitz"), col("c2_qi"), col("c5_outside_diam"));
    let c1_grows = c1.as_deref().is_some_and(strictly);
    let c2_grows = c2.as_deref().is_some_and(strictly);
    let c5_grows = c5.as_deref().is_some_and(|v| v.windows(2).all(|w| w[1] >= w[0]) && v.last() > v.first());
    Outcome {
        header: "Path into the Cayley tree of F2 along m -> a^m b^m".into(),
        pass: c1_grows && c2_grows && (c5_grows || radius <= 2) && segments,
        report: json!({
            "rows": rows,
            "c1_strictly_increasing": c1_grows,
            "c2_strictly_increasing": c2_grows,
            "c5_increasing": c5_grows,
            "segment_lengths_exact": segments,
        }),
        dots: vec![],
    }
}

fn bs12(radius: usize) -> Result<Outcome, Failure> {
    let t = bs12_window(radius);
    let c = build_combined(&t, &CombineOptions::default()).map_err(Failure::hypothesis)?;
    let audit = audit_combined(&c, AuditOptions::default());
    Ok(Outcome {
        header: format!("BS(1,2), Bass-Serre window of radius {radius}"),
        pass: audit.pass,
        report: json!({ "combined": c.to_json(), "audit": audit }),
        dots: c.dots(),
    })
}
