//! Direct products of hierarchical models.

use std::collections::BTreeMap;

use crate::lattice::{IndexLattice, RelationKind};
use crate::model::{HHSModel, Rho};
use crate::space::{CoarseMap, FiniteSpace};

/// Element layout of a product lattice built by [`direct_product_structure`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductLayout {
    pub ka: usize,
    pub kb: usize,
}

impl ProductLayout {
    /// Index of a factor element: `side` 0 for the first factor, 1 for the second.
    pub fn factor(&self, side: usize, u: usize) -> usize {
        if side == 0 {
            u
        } else {
            self.ka + u
        }
    }

    /// Index of `V_U` for the factor element at union index `f`.
    pub fn v_of(&self, f: usize) -> usize {
        self.ka + self.kb + f
    }

    pub fn top(&self) -> usize {
        2 * (self.ka + self.kb)
    }

    pub fn len(&self) -> usize {
        self.top() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_factor(&self, i: usize) -> bool {
        i < self.ka + self.kb
    }
}

/// Relation table of the product index set on the union of two factor lattices.
pub fn product_lattice(a: &IndexLattice, b: &IndexLattice) -> (IndexLattice, ProductLayout) {
    let lay = ProductLayout { ka: a.len(), kb: b.len() };
    let f = lay.ka + lay.kb;
    let side = |i: usize| if i < lay.ka { (0, i) } else { (1, i - lay.ka) };
    // relation between factor elements
    let frel = |i: usize, j: usize| -> RelationKind {
        match (side(i), side(j)) {
            ((0, x), (0, y)) => a.relation(x, y),
            ((1, x), (1, y)) => b.relation(x, y),
            _ => RelationKind::Orthogonal,
        }
    };
    let mut ids: Vec<String> = Vec::with_capacity(lay.len());
    ids.extend(a.ids().iter().map(|s| format!("{s}_1")));
    ids.extend(b.ids().iter().map(|s| format!("{s}_2")));
    let factor_ids = ids.clone();
    ids.extend(factor_ids.iter().map(|s| format!("V({s})")));
    ids.push("S".into());
    let top = lay.top();
    let rel = |i: usize, j: usize| -> RelationKind {
        if i == top {
            return RelationKind::Contains;
        }
        if j == top {
            return RelationKind::NestedIn;
        }
        match (i < f, j < f) {
            (true, true) => frel(i, j),
            (true, false) => {
                let bb = j - f;
                match frel(i, bb) {
                    RelationKind::Orthogonal => RelationKind::NestedIn,
                    RelationKind::NestedIn | RelationKind::Equal => RelationKind::Orthogonal,
                    _ => RelationKind::Transverse,
                }
            }
            (false, true) => {
                let aa = i - f;
                match frel(j, aa) {
                    RelationKind::Orthogonal => RelationKind::Contains,
                    RelationKind::NestedIn | RelationKind::Equal => RelationKind::Orthogonal,
                    _ => RelationKind::Transverse,
                }
            }
            (false, false) => {
                let (x, y) = (i - f, j - f);
                match frel(x, y) {
                    // V_y ⊊ V_x when x ⊊ y
                    RelationKind::NestedIn => RelationKind::Contains,
                    RelationKind::Contains => RelationKind::NestedIn,
                    _ => RelationKind::Transverse,
                }
            }
        }
    };
    let l = IndexLattice::from_fn(ids, top, rel).expect("product lattice");
    (l, lay)
}

/// Product structure on `a.space × b.space` with point spaces for `V_U` and `S`.
pub fn direct_product_structure(a: &HHSModel, b: &HHSModel) -> (HHSModel, ProductLayout) {
    let (lattice, lay) = product_lattice(&a.lattice, &b.lattice);
    let space = a.space.product(&b.space);
    let nb = b.space.len();
    let npts = space.len();
    let f = lay.ka + lay.kb;
    let factor = |i: usize| -> (&HHSModel, usize, usize) {
        if i < lay.ka {
            (a, i, 0)
        } else {
            (b, i - lay.ka, 1)
        }
    };
    let point = FiniteSpace::point("*");
    let mut hyp = Vec::with_capacity(lay.len());
    let mut proj = Vec::with_capacity(lay.len());
    for i in 0..lay.len() {
        if i < f {
            let (m, u, s) = factor(i);
            hyp.push(m.hyp[u].clone());
            let imgs = (0..npts).map(|x| {
                let c = if s == 0 { x / nb } else { x % nb };
                m.pi(u, c).to_vec()
            });
            proj.push(CoarseMap::new(imgs.collect(), &m.hyp[u]));
        } else {
            hyp.push(point.clone());
            proj.push(CoarseMap::constant(npts, vec![0], &point));
        }
    }
    // π_U of the factor base point
    let base = |i: usize| -> Vec<usize> {
        let (m, u, _) = factor(i);
        m.pi(u, 0).to_vec()
    };
    let mut rho = BTreeMap::new();
    for i in 0..lay.len() {
        for j in 0..lay.len() {
            if i == j || lattice.orth(i, j) {
                continue;
            }
            let nested_up = lattice.properly_nested(i, j);
            let val = if i >= f {
                if nested_up {
                    Rho::Map(CoarseMap::constant(hyp[j].len(), vec![0], &point))
                } else {
                    Rho::Set(vec![0])
                }
            } else if j < f {
                let (m, u, _) = factor(i);
                let (_, v, _) = factor(j);
                m.rho[&(u, v)].clone()
            } else if nested_up {
                Rho::Map(CoarseMap::constant(hyp[j].len(), base(i), &hyp[i]))
            } else {
                // i ⋔ V_B: use ρ toward the orthogonal container of B in the factor
                let (m, u, s1) = factor(i);
                let (_, bb, s2) = factor(j - f);
                let set = if s1 == s2 {
                    m.lattice
                        .container(bb)
                        .filter(|&c| c != u)
                        .and_then(|c| m.rho_set(u, c).map(|s| s.to_vec()))
                } else {
                    None
                };
                Rho::Set(set.unwrap_or_else(|| base(i)))
            };
            rho.insert((i, j), val);
        }
    }
    let m = HHSModel {
        name: format!("{} x {}", a.name, b.name),
        space,
        lattice,
        hyp,
        proj,
        rho,
        constants: None,
    };
    (m, lay)
}
