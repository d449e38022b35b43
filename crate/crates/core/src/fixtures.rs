//! Desk-scale models shared by the tests, the benches and the command line tool.

use std::collections::BTreeMap;

use crate::graph::{free_product_window, identity_point, PointEdges, ProductSpec};
use crate::hiero::IndexMap;
use crate::lattice::{IndexLattice, RelationKind};
use crate::model::{HHSModel, Rho};
use crate::product::direct_product_structure;
use crate::regions::Hieromorphism;
use crate::space::{CoarseMap, FiniteSpace};
use crate::tree::{build_combined, CombineOptions, TreeEdge, TreeOfHHS};

/// `ℤ/n` on its complete Cayley graph with the trivial structure.
pub fn cyclic(n: usize) -> HHSModel {
    HHSModel::trivial(&format!("Z/{n}"), FiniteSpace::complete(n, ""))
}

/// Ball of radius `r` in ℤ with the trivial structure.
pub fn z_ball(r: usize) -> HHSModel {
    HHSModel::trivial(&format!("Z ball r={r}"), FiniteSpace::z_ball(r))
}

pub fn path(n: usize) -> HHSModel {
    HHSModel::trivial(&format!("P{n}"), FiniteSpace::path(n))
}

/// Direct product of two one-element structures: the five-element lattice.
pub fn fixture_b_product() -> HHSModel {
    direct_product_structure(&cyclic(2), &cyclic(3)).0
}

/// Window of radius `radius` of the Bass–Serre tree of `ℤ/2 * ℤ/3`, trivial edges.
pub fn free_product_z2_z3(radius: usize) -> TreeOfHHS {
    free_product_window(&cyclic(2), &cyclic(3), ("Z/2", "Z/3"), PointEdges::TrivialLattice, radius, usize::MAX).expect("unbounded budget")
}

/// The path `a - b - c` with `ℤ`-ball bases of radius `ball`.
pub fn raag_path(ball: usize, window_radius: usize) -> ProductSpec {
    let names = ["a", "b", "c"].map(String::from).to_vec();
    let bases = (0..3).map(|_| z_ball(ball)).collect();
    ProductSpec::new(names, &[(0, 1), (1, 2)], bases, window_radius).expect("valid path spec")
}

/// Two isolated vertices with bases `ℤ/2` and `ℤ/3`.
pub fn free_product_spec(window_radius: usize) -> ProductSpec {
    ProductSpec::new(vec!["a".into(), "b".into()], &[], vec![cyclic(2), cyclic(3)], window_radius).expect("valid spec")
}

/// Label of a tree vertex reached by a word in `u`, `d0`, `d1`.
fn bs_label(word: &str) -> String {
    format!("v0{word}")
}

/// Window of radius `radius` of the Bass–Serre tree of `BS(1,2)`.
///
/// Every vertex carries a ball of radius `R = 2^radius + 1` in `⟨a⟩`; every edge
/// carries the ball of radius `(R - 1) / 2`, included as `x ↦ x` into the lower
/// vertex and as `x ↦ 2x + k` into the upper one, `k ∈ {0, 1}` naming the down edge.
pub fn bs12_window(radius: usize) -> TreeOfHHS {
    let big = (1usize << radius) + 1;
    let small = (big - 1) / 2;
    let vm = z_ball(big);
    let em = z_ball(small);
    let mut t = TreeOfHHS {
        name: format!("BS(1,2) window r={radius}"),
        labels: vec![bs_label("")],
        vertices: vec![vm.clone()],
        edges: vec![],
        decoration: None,
    };
    let incl = |scale: i64, k: i64| {
        let images: Vec<Vec<usize>> =
            (0..em.n_points()).map(|x| vec![((x as i64 - small as i64) * scale + k + big as i64) as usize]).collect();
        let map = CoarseMap::new(images, &vm.space);
        Hieromorphism { space_map: map.clone(), index: IndexMap { map: vec![0] }, hyp_maps: vec![map], image_hull: None }
    };
    // (vertex, word, depth, port back to the parent)
    let mut queue = std::collections::VecDeque::from([(0usize, String::new(), 0usize, None::<&str>)]);
    while let Some((v, word, depth, back)) = queue.pop_front() {
        if depth == radius {
            continue;
        }
        for port in ["u", "d0", "d1"] {
            if back == Some(port) {
                continue;
            }
            let w = format!("{word}{port}");
            let id = t.vertices.len();
            t.labels.push(bs_label(&w));
            t.vertices.push(vm.clone());
            let (edge, back_port) = if port == "u" {
                // new vertex is the upper end; we are its d0 child
                (TreeEdge { minus: id, plus: v, model: em.clone(), phi_minus: incl(2, 0), phi_plus: incl(1, 0) }, "d0")
            } else {
                let k = if port == "d0" { 0 } else { 1 };
                (TreeEdge { minus: v, plus: id, model: em.clone(), phi_minus: incl(2, k), phi_plus: incl(1, 0) }, "u")
            };
            t.edges.push(edge);
            queue.push_back((id, w, depth + 1, Some(back_port)));
        }
    }
    t
}

/// Comb in the Cayley tree of `F₂ = ⟨a, b⟩`: the axis `e..aⁿ` and the teeth `aᵏ b^j`, `j ≤ k`,
/// with the path `0..n` sent to `m ↦ aᵐ bᵐ`.
///
/// Returns the source model, the target model and the map.
pub fn hagen_f2(n: usize) -> (HHSModel, HHSModel, Hieromorphism) {
    assert!(n >= 1);
    // points: axis a^0..a^n, then tooth k (k >= 1) points a^k b^j for j = 1..=k
    let mut labels: Vec<String> = (0..=n).map(|k| format!("a{k}")).collect();
    let mut edges: Vec<(usize, usize)> = (1..=n).map(|k| (k - 1, k)).collect();
    let mut tooth: Vec<Vec<usize>> = vec![vec![]];
    for k in 1..=n {
        let mut pts = vec![k];
        for j in 1..=k {
            let id = labels.len();
            labels.push(format!("a{k}b{j}"));
            edges.push((*pts.last().unwrap(), id));
            pts.push(id);
        }
        tooth.push(pts);
    }
    let space = FiniteSpace::from_edges(labels, &edges).expect("comb");
    let npts = space.len();
    let axis: Vec<usize> = (0..=n).collect();
    // element 0 = M, 1 = axis, 1 + k = tooth k
    let axes: Vec<Vec<usize>> = std::iter::once(axis.clone()).chain((1..=n).map(|k| tooth[k].clone())).collect();
    let mut ids = vec!["M".to_string(), "A".to_string()];
    ids.extend((1..=n).map(|k| format!("B{k}")));
    let lattice = IndexLattice::from_fn(ids, 0, |i, j| {
        if i == 0 {
            RelationKind::Contains
        } else if j == 0 {
            RelationKind::NestedIn
        } else {
            RelationKind::Transverse
        }
    })
    .expect("comb lattice");
    let cone_labels: Vec<String> = (0..axes.len()).map(|i| format!("cone {}", lattice.id(i + 1))).collect();
    let cm = space.cone_off(&axes, &cone_labels);
    let mut hyp = vec![cm.clone()];
    hyp.extend(axes.iter().map(|a| FiniteSpace::path(a.len())));
    // closest point of an axis, as a position on it
    let near = |a: &[usize], x: usize| -> usize {
        let c = space.closest(x, a);
        a.iter().position(|&p| p == c[0]).unwrap()
    };
    let mut proj = vec![CoarseMap::new((0..npts).map(|x| vec![x]).collect(), &cm)];
    for (i, a) in axes.iter().enumerate() {
        proj.push(CoarseMap::new((0..npts).map(|x| vec![near(a, x)]).collect(), &hyp[i + 1]));
    }
    let mut rho = BTreeMap::new();
    for i in 0..axes.len() {
        let u = i + 1;
        rho.insert((0, u), Rho::Set(axes[i].clone()));
        // CM → C(axis): closest point on X, cone points of other axes via their ρ
        let imgs = (0..cm.len())
            .map(|p| {
                if p < npts {
                    vec![near(&axes[i], p)]
                } else if p - npts == i {
                    vec![0]
                } else {
                    vec![near(&axes[i], axes[p - npts][0])]
                }
            })
            .collect();
        rho.insert((u, 0), Rho::Map(CoarseMap::new(imgs, &hyp[u])));
        for (j, b) in axes.iter().enumerate() {
            if i != j {
                let mut s: Vec<usize> = b.iter().map(|&x| near(&axes[i], x)).collect();
                s.sort_unstable();
                s.dedup();
                rho.insert((u, j + 1), Rho::Set(s));
            }
        }
    }
    let tgt = HHSModel { name: format!("F2 comb n={n}"), space, lattice, hyp, proj, rho, constants: None };
    let src = path(n + 1);
    let image: Vec<usize> = (0..=n).map(|m| if m == 0 { 0 } else { *tooth[m].last().unwrap() }).collect();
    let phi = Hieromorphism {
        space_map: CoarseMap::new(image.iter().map(|&p| vec![p]).collect(), &tgt.space),
        index: IndexMap { map: vec![1] },
        hyp_maps: vec![CoarseMap::new((0..=n).map(|m| vec![m]).collect(), &tgt.hyp[1])],
        image_hull: Some((0..npts).collect()),
    };
    (src, tgt, phi)
}

/// The factor `ℤ`-ball of radius `r` included as a slice of its product with the
/// combined `ℤ/2 * ℤ/3` window of radius `r`.
pub fn factor_inclusion(r: usize) -> (HHSModel, HHSModel, Hieromorphism) {
    let a = z_ball(r);
    let c = build_combined(&free_product_z2_z3(r), &CombineOptions::default()).expect("free product combines");
    let b = c.model;
    let (m, lay) = direct_product_structure(&a, &b);
    let nb = b.n_points();
    let b0 = identity_point(&b);
    let phi = Hieromorphism {
        space_map: CoarseMap::new((0..a.n_points()).map(|x| vec![x * nb + b0]).collect(), &m.space),
        index: IndexMap { map: vec![lay.factor(0, 0)] },
        hyp_maps: vec![CoarseMap::identity(a.hyp[0].len())],
        image_hull: None,
    };
    (a, m, phi)
}

/// Product of the path on 7 vertices with the bounded factor `ℤ/2`.
pub fn bounded_factor_product() -> HHSModel {
    direct_product_structure(&path(7), &cyclic(2)).0
}

/// Fixture names accepted by the command line tool.
pub const NAMES: [&str; 5] = ["fixture-b-product", "free-product-z2-z3", "raag-path", "hagen-f2", "bs12-window"];
