//! Trees of hierarchical models: equivalence classes and supports, decoration,
//! comparison maps, and the combined structure on the total space.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{audit_with, AuditOptions, AuditReport};
use crate::hiero::{verify_fullness, verify_index_map, IndexMap};
use crate::lattice::{IndexLattice, LatticeJson, RelationKind};
use crate::model::{HHSModel, ModelError, ModelJson, Rho};
use crate::regions::{concretize, constants_of, default_epsilon, hq_check, product_region, HieroJson, Hieromorphism};
use crate::report::{Rule, ValidationReport};
use crate::space::{coarse_map_constants, CoarseConstants, CoarseMap, FiniteSpace};

/// Largest multiplicative constant `max d'/d` accepted for comparison maps.
pub const COMPARISON_BOUND: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
pub enum TreeError {
    #[error("not a tree: {0}")]
    NotATree(String),
    #[error("edge {edge} fails the combination hypotheses on its {side} map: {reason}")]
    HypothesisFailure { edge: String, side: String, reason: String, witness: Vec<String> },
    #[error("comparison maps are not uniform: {class} from {from} to {to} (tree distance {distance}) has constant {constant} > {bound}")]
    ComparisonNotUniform {
        class: String,
        from: String,
        to: String,
        distance: u32,
        constant: f64,
        bound: f64,
        /// Largest measured constant at each tree distance.
        profile: Vec<(u32, f64)>,
    },
    #[error("vertex {vertex} is not in the support of {class}")]
    NotInSupport { class: String, vertex: String },
    #[error("malformed tree: {0}")]
    Malformed(String),
}

impl From<ModelError> for TreeError {
    fn from(e: ModelError) -> Self {
        TreeError::Malformed(e.to_string())
    }
}

#[derive(Clone, Debug)]
pub struct TreeEdge {
    pub minus: usize,
    pub plus: usize,
    pub model: HHSModel,
    pub phi_minus: Hieromorphism,
    pub phi_plus: Hieromorphism,
}

impl TreeEdge {
    pub fn map_into(&self, v: usize) -> &Hieromorphism {
        if v == self.minus {
            &self.phi_minus
        } else {
            assert_eq!(v, self.plus, "vertex is not an endpoint");
            &self.phi_plus
        }
    }

    pub fn other(&self, v: usize) -> usize {
        if v == self.minus {
            self.plus
        } else {
            self.minus
        }
    }
}

#[derive(Clone, Debug)]
pub struct TreeOfHHS {
    pub name: String,
    pub labels: Vec<String>,
    pub vertices: Vec<HHSModel>,
    pub edges: Vec<TreeEdge>,
    /// Decoration pass, when one has been run.
    pub decoration: Option<Decoration>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decoration {
    pub copy_cap: usize,
    /// Edges from this index on attach decoration leaves.
    pub first_leaf_edge: usize,
}

impl TreeOfHHS {
    pub fn single(name: &str, model: HHSModel) -> Self {
        TreeOfHHS { name: name.to_string(), labels: vec!["v0".into()], vertices: vec![model], edges: vec![], decoration: None }
    }

    pub fn edge_label(&self, e: usize) -> String {
        format!("{}--{}", self.labels[self.edges[e].minus], self.labels[self.edges[e].plus])
    }

    /// The underlying tree; fails on cycles, multi-edges or disconnection.
    pub fn tree(&self) -> Result<FiniteSpace, TreeError> {
        let n = self.vertices.len();
        if n == 0 || self.labels.len() != n {
            return Err(TreeError::NotATree("vertex and label counts differ or are zero".into()));
        }
        let mut seen = BTreeSet::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.minus >= n || e.plus >= n || e.minus == e.plus {
                return Err(TreeError::NotATree(format!("edge {i} has bad endpoints")));
            }
            if !seen.insert((e.minus.min(e.plus), e.minus.max(e.plus))) {
                return Err(TreeError::NotATree(format!("repeated edge {}", self.edge_label(i))));
            }
        }
        if self.edges.len() + 1 != n {
            return Err(TreeError::NotATree(format!("{} vertices and {} edges", n, self.edges.len())));
        }
        let pairs: Vec<(usize, usize)> = self.edges.iter().map(|e| (e.minus, e.plus)).collect();
        FiniteSpace::from_edges(self.labels.clone(), &pairs).map_err(|e| TreeError::NotATree(e.to_string()))
    }

    pub fn edge_index(&self) -> HashMap<(usize, usize), usize> {
        let mut m = HashMap::new();
        for (i, e) in self.edges.iter().enumerate() {
            m.insert((e.minus, e.plus), i);
            m.insert((e.plus, e.minus), i);
        }
        m
    }

    pub fn to_json(&self) -> TreeJson {
        TreeJson {
            name: self.name.clone(),
            vertices: self.labels.iter().zip(&self.vertices).map(|(l, m)| VertexJson { label: l.clone(), model: m.to_json() }).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    minus: self.labels[e.minus].clone(),
                    plus: self.labels[e.plus].clone(),
                    model: e.model.to_json(),
                    phi_minus: e.phi_minus.to_json(&e.model, &self.vertices[e.minus]),
                    phi_plus: e.phi_plus.to_json(&e.model, &self.vertices[e.plus]),
                })
                .collect(),
        }
    }

    pub fn from_json(j: &TreeJson) -> Result<Self, TreeError> {
        let labels: Vec<String> = j.vertices.iter().map(|v| v.label.clone()).collect();
        let vertices = j.vertices.iter().map(|v| HHSModel::from_json(&v.model)).collect::<Result<Vec<_>, _>>()?;
        let find = |l: &str| labels.iter().position(|x| x == l).ok_or_else(|| TreeError::Malformed(format!("unknown vertex {l}")));
        let mut edges = Vec::new();
        for e in &j.edges {
            let (minus, plus) = (find(&e.minus)?, find(&e.plus)?);
            let model = HHSModel::from_json(&e.model)?;
            let phi_minus = Hieromorphism::from_json(&e.phi_minus, &model, &vertices[minus])?;
            let phi_plus = Hieromorphism::from_json(&e.phi_plus, &model, &vertices[plus])?;
            edges.push(TreeEdge { minus, plus, model, phi_minus, phi_plus });
        }
        let t = TreeOfHHS { name: j.name.clone(), labels, vertices, edges, decoration: None };
        t.tree()?;
        Ok(t)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexJson {
    pub label: String,
    pub model: ModelJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeJson {
    pub minus: String,
    pub plus: String,
    pub model: ModelJson,
    pub phi_minus: HieroJson,
    pub phi_plus: HieroJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeJson {
    pub name: String,
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<EdgeJson>,
}

/// Measured constants of one edge map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCheck {
    pub edge: String,
    pub side: String,
    pub hq_k0: u32,
    pub lipschitz: f64,
}

/// Fullness, hierarchical quasiconvexity of the image and a finite lipschitz
/// constant for both maps of every edge.
pub fn check_hypotheses(t: &TreeOfHHS) -> Result<Vec<EdgeCheck>, TreeError> {
    let mut out = Vec::new();
    for (i, e) in t.edges.iter().enumerate() {
        for (side, v, phi) in [("minus", e.minus, &e.phi_minus), ("plus", e.plus, &e.phi_plus)] {
            let tgt = &t.vertices[v];
            let fail = |reason: String, witness: Vec<String>| TreeError::HypothesisFailure {
                edge: t.edge_label(i),
                side: side.to_string(),
                reason,
                witness,
            };
            if phi.space_map.len() != e.model.n_points()
                || phi.hyp_maps.len() != e.model.n_elements()
                || phi.index.map.len() != e.model.n_elements()
            {
                return Err(fail("map tables do not match the edge model".into(), vec![]));
            }
            let mut r = verify_index_map(&phi.index, &e.model.lattice, &tgt.lattice);
            r.extend(verify_fullness(&phi.index, &e.model.lattice, &tgt.lattice));
            if let Some(v) = r.violations.first() {
                return Err(fail(format!("index map: {:?}", v.rule), v.witness.clone()));
            }
            let hq = hq_check(tgt, &phi.image());
            if !hq.pass {
                return Err(fail(format!("image is not hierarchically quasiconvex (k0 = {})", hq.k0), vec![]));
            }
            let c = coarse_map_constants(&phi.space_map, &e.model.space, &tgt.space);
            if !c.kk.is_finite() {
                return Err(fail("space map has no finite lipschitz constant".into(), vec![]));
            }
            out.push(EdgeCheck { edge: t.edge_label(i), side: side.to_string(), hq_k0: hq.k0, lipschitz: c.kk });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeConcretization {
    pub edge: String,
    pub eps: u32,
    pub s_eps: Option<String>,
    pub removed: Vec<String>,
}

/// Replaces every edge model by its concretization and restricts the index maps accordingly.
///
/// Decoration edges are left alone: their models are product regions carried
/// isometrically on both sides, and removing elements there would undo the
/// separation of supports the leaves exist for.
pub fn concretize_edges(t: &TreeOfHHS) -> Result<(TreeOfHHS, Vec<EdgeConcretization>), TreeError> {
    let results: Vec<Result<(TreeEdge, EdgeConcretization), TreeError>> = t
        .edges
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let leaf = t.decoration.is_some_and(|d| i >= d.first_leaf_edge);
            if leaf || e.model.n_elements() == 0 {
                return Ok((e.clone(), EdgeConcretization { edge: t.edge_label(i), eps: 0, s_eps: None, removed: vec![] }));
            }
            let eps = default_epsilon(&constants_of(&e.model));
            let c = concretize(&e.model, eps).map_err(|err| TreeError::Malformed(format!("{}: {err}", t.edge_label(i))))?;
            let rec = EdgeConcretization { edge: t.edge_label(i), eps, s_eps: c.s_eps.clone(), removed: c.removed.clone() };
            if c.removed.is_empty() {
                return Ok((e.clone(), rec));
            }
            let restrict = |phi: &Hieromorphism| Hieromorphism {
                space_map: phi.space_map.clone(),
                index: IndexMap { map: c.kept.iter().map(|&u| phi.index.apply(u)).collect() },
                hyp_maps: c.kept.iter().map(|&u| phi.hyp_maps[u].clone()).collect(),
                image_hull: phi.image_hull.clone(),
            };
            let edge = TreeEdge {
                minus: e.minus,
                plus: e.plus,
                phi_minus: restrict(&e.phi_minus),
                phi_plus: restrict(&e.phi_plus),
                model: c.model,
            };
            Ok((edge, rec))
        })
        .collect();
    let mut edges = Vec::new();
    let mut recs = Vec::new();
    for r in results {
        let (e, c) = r?;
        edges.push(e);
        recs.push(c);
    }
    Ok((TreeOfHHS { edges, ..t.clone() }, recs))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivClass {
    pub id: String,
    /// `(vertex, element)` pairs, sorted.
    pub members: Vec<(usize, usize)>,
    /// Sorted vertex set.
    pub support: Vec<usize>,
    pub favorite_vertex: usize,
    pub favorite_rep: usize,
}

impl EquivClass {
    pub fn contains_vertex(&self, v: usize) -> bool {
        self.support.binary_search(&v).is_ok()
    }
}

#[derive(Clone, Debug)]
pub struct ClassTable {
    pub classes: Vec<EquivClass>,
    /// Class of every element of every vertex lattice.
    pub class_of: Vec<Vec<usize>>,
    /// Per class: tree edge → edge element carrying the identification.
    pub via_edge: Vec<BTreeMap<usize, usize>>,
}

impl ClassTable {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Least representative of class `c` at vertex `v`.
    pub fn rep_at(&self, c: usize, v: usize) -> Option<usize> {
        let m = &self.classes[c].members;
        let i = m.partition_point(|&(w, _)| w < v);
        m.get(i).filter(|&&(w, _)| w == v).map(|&(_, u)| u)
    }

    pub fn common_vertices(&self, a: usize, b: usize) -> Vec<usize> {
        let sb = &self.classes[b].support;
        self.classes[a].support.iter().copied().filter(|v| sb.binary_search(v).is_ok()).collect()
    }
}

/// Closure of the edge identifications, by union-find.
pub fn equivalence_classes(t: &TreeOfHHS) -> Result<ClassTable, TreeError> {
    let tree = t.tree()?;
    let mut offset = Vec::with_capacity(t.vertices.len());
    let mut total = 0;
    for m in &t.vertices {
        offset.push(total);
        total += m.n_elements();
    }
    let mut uf = UnionFind::<usize>::new(total);
    for e in &t.edges {
        for x in 0..e.model.n_elements() {
            uf.union(offset[e.minus] + e.phi_minus.index.apply(x), offset[e.plus] + e.phi_plus.index.apply(x));
        }
    }
    let mut groups: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (v, m) in t.vertices.iter().enumerate() {
        for u in 0..m.n_elements() {
            groups.entry(uf.find(offset[v] + u)).or_default().push((v, u));
        }
    }
    let mut classes: Vec<EquivClass> = groups
        .into_values()
        .map(|mut members| {
            members.sort_unstable();
            let mut support: Vec<usize> = members.iter().map(|m| m.0).collect();
            support.dedup();
            let (fv, fr) = members[0];
            EquivClass {
                id: format!("[{}:{}]", t.labels[fv], t.vertices[fv].lattice.id(fr)),
                members,
                support,
                favorite_vertex: fv,
                favorite_rep: fr,
            }
        })
        .collect();
    classes.sort_by_key(|c| (c.favorite_vertex, c.favorite_rep));
    for c in &classes {
        if tree.induced(&c.support).is_err() {
            return Err(TreeError::Malformed(format!("support of {} is disconnected", c.id)));
        }
        if c.support.len() != c.members.len() {
            let v = c.members.windows(2).find(|w| w[0].0 == w[1].0).map(|w| w[0].0).unwrap();
            return Err(TreeError::Malformed(format!("{} has two representatives at {}", c.id, t.labels[v])));
        }
    }
    let mut class_of: Vec<Vec<usize>> = t.vertices.iter().map(|m| vec![usize::MAX; m.n_elements()]).collect();
    for (i, c) in classes.iter().enumerate() {
        for &(v, u) in &c.members {
            class_of[v][u] = i;
        }
    }
    let mut via_edge = vec![BTreeMap::new(); classes.len()];
    for (ei, e) in t.edges.iter().enumerate() {
        for x in 0..e.model.n_elements() {
            let c = class_of[e.minus][e.phi_minus.index.apply(x)];
            via_edge[c].entry(ei).or_insert(x);
        }
    }
    Ok(ClassTable { classes, class_of, via_edge })
}

/// Vertices of the tree geodesic from `u` to `v`, both included.
fn tree_path(tree: &FiniteSpace, u: usize, v: usize) -> Vec<usize> {
    let mut path = vec![u];
    let mut cur = u;
    while cur != v {
        cur = *tree.neighbors(cur).iter().find(|&&n| tree.d(n, v) + 1 == tree.d(cur, v)).expect("tree geodesic");
        path.push(cur);
    }
    path
}

/// One step of a comparison map: `hyp(V_a) → hyp(V_b)` across the edge joining `a` and `b`.
fn step_map(t: &TreeOfHHS, classes: &ClassTable, edge_of: &HashMap<(usize, usize), usize>, c: usize, a: usize, b: usize) -> CoarseMap {
    let ei = edge_of[&(a, b)];
    let e = &t.edges[ei];
    let x = classes.via_edge[c][&ei];
    let (ra, rb) = (classes.rep_at(c, a).unwrap(), classes.rep_at(c, b).unwrap());
    let (ha, hb) = (&t.vertices[a].hyp[ra], &t.vertices[b].hyp[rb]);
    let into_a = &e.map_into(a).hyp_maps[x];
    let into_b = &e.map_into(b).hyp_maps[x];
    into_a.quasi_inverse(&e.model.hyp[x], ha).then(into_b, hb)
}

/// `max d'(f x, f y) / d(x, y)` over distinct pairs.
pub fn multiplicative_constant(m: &CoarseMap, dom: &FiniteSpace, cod: &FiniteSpace) -> f64 {
    let n = dom.len();
    (0..n)
        .into_par_iter()
        .map(|x| {
            (x + 1..n)
                .map(|y| cod.diam_union(m.image(x), m.image(y)) as f64 / dom.d(x, y) as f64)
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub map: CoarseMap,
    pub constants: CoarseConstants,
    /// `max d'/d`: the constant `K` of a `(K, 0)`-lipschitz bound.
    pub multiplicative: f64,
    pub distance: u32,
}

/// The comparison map of class `c` from its representative at `u` to the one at `v`.
pub fn comparison_map(t: &TreeOfHHS, classes: &ClassTable, c: usize, u: usize, v: usize) -> Result<Comparison, TreeError> {
    let tree = t.tree()?;
    let cls = &classes.classes[c];
    for w in [u, v] {
        if !cls.contains_vertex(w) {
            return Err(TreeError::NotInSupport { class: cls.id.clone(), vertex: t.labels[w].clone() });
        }
    }
    let edge_of = t.edge_index();
    let hu = &t.vertices[u].hyp[classes.rep_at(c, u).unwrap()];
    let hv = &t.vertices[v].hyp[classes.rep_at(c, v).unwrap()];
    let path = tree_path(&tree, u, v);
    let mut map = CoarseMap::identity(hu.len());
    for w in path.windows(2) {
        let hb = &t.vertices[w[1]].hyp[classes.rep_at(c, w[1]).unwrap()];
        map = map.then(&step_map(t, classes, &edge_of, c, w[0], w[1]), hb);
    }
    let constants = coarse_map_constants(&map, hu, hv);
    let multiplicative = multiplicative_constant(&map, hu, hv);
    Ok(Comparison { map, constants, multiplicative, distance: tree.d(u, v) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonProfile {
    pub bound: f64,
    /// Largest multiplicative constant at each tree distance.
    pub by_distance: Vec<(u32, f64)>,
    /// `(class, from, to, distance, constant)` of the largest constant.
    pub worst: Option<(String, String, String, u32, f64)>,
}

impl ComparisonProfile {
    pub fn max(&self) -> f64 {
        self.worst.as_ref().map(|w| w.4).unwrap_or(0.0)
    }

    pub fn at(&self, d: u32) -> Option<f64> {
        self.by_distance.iter().find(|p| p.0 == d).map(|p| p.1)
    }

    pub fn uniform(&self) -> bool {
        self.max() <= self.bound
    }
}

/// Multiplicative constants of the comparison maps between every ordered pair of support vertices.
pub fn comparison_profile(t: &TreeOfHHS, classes: &ClassTable, bound: f64) -> Result<ComparisonProfile, TreeError> {
    let tree = t.tree()?;
    let edge_of = t.edge_index();
    let hyp = |c: usize, v: usize| &t.vertices[v].hyp[classes.rep_at(c, v).unwrap()];
    let jobs: Vec<(usize, usize)> = (0..classes.len())
        .flat_map(|c| classes.classes[c].support.iter().map(move |&u| (c, u)))
        .filter(|&(c, _)| classes.classes[c].support.len() > 1)
        .collect();
    let found: Vec<Vec<(usize, usize, usize, u32, f64)>> = jobs
        .par_iter()
        .map(|&(c, u)| {
            let cls = &classes.classes[c];
            let mut out = Vec::new();
            let mut maps: HashMap<usize, CoarseMap> = HashMap::new();
            maps.insert(u, CoarseMap::identity(hyp(c, u).len()));
            let mut queue = VecDeque::from([u]);
            while let Some(a) = queue.pop_front() {
                for &b in tree.neighbors(a) {
                    if maps.contains_key(&b) || !cls.contains_vertex(b) {
                        continue;
                    }
                    let m = maps[&a].then(&step_map(t, classes, &edge_of, c, a, b), hyp(c, b));
                    let k = multiplicative_constant(&m, hyp(c, u), hyp(c, b));
                    out.push((c, u, b, tree.d(u, b), k));
                    maps.insert(b, m);
                    queue.push_back(b);
                }
            }
            out
        })
        .collect();
    let mut by: BTreeMap<u32, f64> = BTreeMap::new();
    let mut worst: Option<(usize, usize, usize, u32, f64)> = None;
    for r in found.into_iter().flatten() {
        let e = by.entry(r.3).or_insert(0.0);
        *e = e.max(r.4);
        if worst.map_or(true, |w| r.4 > w.4) {
            worst = Some(r);
        }
    }
    Ok(ComparisonProfile {
        bound,
        by_distance: by.into_iter().collect(),
        worst: worst.map(|(c, u, v, d, k)| (classes.classes[c].id.clone(), t.labels[u].clone(), t.labels[v].clone(), d, k)),
    })
}

/// ⊑-maximal elements of `𝔖 ∖ {S}`.
fn maximal_proper(l: &IndexLattice) -> Vec<usize> {
    let top = l.maximal();
    (0..l.len()).filter(|&u| u != top && !(0..l.len()).any(|w| w != top && l.properly_nested(u, w))).collect()
}

/// Attaches, below every vertex and every ⊑-maximal proper element `U`, leaves
/// carrying parallel copies of `F_U` with the structure `𝔖_U`; recurses into
/// the new leaves until complexity one. At most `copy_cap` copies per element.
pub fn decorate(t: &TreeOfHHS, copy_cap: usize) -> TreeOfHHS {
    let mut out = t.clone();
    out.decoration = Some(Decoration { copy_cap, first_leaf_edge: t.edges.len() });
    let mut queue: VecDeque<usize> = (0..t.vertices.len()).collect();
    while let Some(v) = queue.pop_front() {
        let m = out.vertices[v].clone();
        if m.lattice.complexity() <= 1 {
            continue;
        }
        for u in maximal_proper(&m.lattice) {
            let diam = m.space.diameter();
            let pr = (0..=diam.max(1)).map(|k| product_region(&m, u, k)).find(|p| !p.p.is_empty());
            let Some(pr) = pr else { continue };
            for (i, f) in pr.copies.iter().take(copy_cap).enumerate() {
                let (lat, keep) = m.lattice.restrict_below(u);
                let (mut leaf, keep) = m.restrict_to(lat, &keep, m.space.subspace(f), Some(f));
                leaf.name = format!("{} / F({}) #{}", m.name, m.lattice.id(u), i);
                let into_v = Hieromorphism {
                    space_map: CoarseMap::new(f.iter().map(|&x| vec![x]).collect(), &m.space),
                    index: IndexMap { map: keep.clone() },
                    hyp_maps: keep.iter().map(|&w| CoarseMap::identity(m.hyp[w].len())).collect(),
                    image_hull: None,
                };
                let into_leaf = Hieromorphism::identity(&leaf);
                let id = out.vertices.len();
                out.labels.push(format!("{}/{}#{}", out.labels[v], m.lattice.id(u), i));
                out.edges.push(TreeEdge { minus: v, plus: id, model: leaf.clone(), phi_minus: into_v, phi_plus: into_leaf });
                out.vertices.push(leaf);
                queue.push_back(id);
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct ConedTree {
    pub name: String,
    /// Tree vertices, in point order.
    pub base: Vec<usize>,
    /// Coned subtrees as support indices, one cone point each after the base points.
    pub cones: Vec<usize>,
    pub space: FiniteSpace,
}

impl ConedTree {
    pub fn pos(&self, w: usize) -> Option<usize> {
        self.base.binary_search(&w).ok()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CombineOptions {
    pub comparison_bound: f64,
    pub concretize_edges: bool,
}

impl Default for CombineOptions {
    fn default() -> Self {
        CombineOptions { comparison_bound: COMPARISON_BOUND, concretize_edges: true }
    }
}

#[derive(Clone, Debug)]
pub struct CombinedStructure {
    /// The tree after edge concretization.
    pub tree: TreeOfHHS,
    pub tree_space: FiniteSpace,
    pub classes: ClassTable,
    /// Distinct supports, sorted.
    pub supports: Vec<Vec<usize>>,
    /// Least class with each support; used for the class/support relations.
    pub support_class: Vec<usize>,
    /// Support index of every class.
    pub class_support: Vec<usize>,
    pub model: HHSModel,
    /// One coned tree per support, then the coned tree of the top element.
    pub coned: Vec<ConedTree>,
    pub point_vertex: Vec<usize>,
    pub offsets: Vec<usize>,
    pub hypotheses: Vec<EdgeCheck>,
    pub comparison: ComparisonProfile,
    pub concretization: Vec<EdgeConcretization>,
    /// Values fixed where the construction leaves a free choice.
    pub choices: Vec<String>,
    /// Class pairs whose relation differs between common vertices.
    pub relation_conflicts: Vec<String>,
}

impl CombinedStructure {
    pub fn n1(&self) -> usize {
        self.classes.len()
    }

    pub fn n2(&self) -> usize {
        self.supports.len()
    }

    pub fn top(&self) -> usize {
        self.n1() + self.n2()
    }

    pub fn is_class(&self, a: usize) -> bool {
        a < self.n1()
    }

    pub fn support_element(&self, s: usize) -> usize {
        self.n1() + s
    }

    /// Element `T_{[V]}` for class `c`.
    pub fn support_of_class(&self, c: usize) -> usize {
        self.support_element(self.class_support[c])
    }

    pub fn decorated(&self) -> bool {
        self.tree.decoration.is_some()
    }

    pub fn vertex_label(&self, v: usize) -> &str {
        &self.tree.labels[v]
    }

    /// Inclusion of the vertex space at `v`: points by offset, elements to their classes,
    /// hyperbolic spaces by the comparison map to the favorite representative.
    pub fn vertex_inclusion(&self, v: usize) -> Result<Hieromorphism, TreeError> {
        let m = &self.tree.vertices[v];
        let off = self.offsets[v];
        let mut hyp_maps = Vec::with_capacity(m.n_elements());
        for u in 0..m.n_elements() {
            let c = self.classes.class_of[v][u];
            let fav = self.classes.classes[c].favorite_vertex;
            hyp_maps.push(comparison_map(&self.tree, &self.classes, c, v, fav)?.map);
        }
        Ok(Hieromorphism {
            space_map: CoarseMap::identity(m.n_points()).then(
                &CoarseMap::new((0..m.n_points()).map(|x| vec![off + x]).collect(), &self.model.space),
                &self.model.space,
            ),
            index: IndexMap { map: self.classes.class_of[v].clone() },
            hyp_maps,
            image_hull: None,
        })
    }

    pub fn to_json(&self) -> CombinedJson {
        let l = &self.tree.labels;
        CombinedJson {
            name: self.model.name.clone(),
            vertices: l.clone(),
            edges: self.tree.edges.iter().map(|e| (l[e.minus].clone(), l[e.plus].clone())).collect(),
            decoration_copy_cap: self.tree.decoration.map(|d| d.copy_cap),
            points: self.model.n_points(),
            classes: self
                .classes
                .classes
                .iter()
                .map(|c| ClassJson {
                    id: c.id.clone(),
                    members: c.members.iter().map(|&(v, u)| format!("{}:{}", l[v], self.tree.vertices[v].lattice.id(u))).collect(),
                    support: c.support.iter().map(|&v| l[v].clone()).collect(),
                    favorite: format!("{}:{}", l[c.favorite_vertex], self.tree.vertices[c.favorite_vertex].lattice.id(c.favorite_rep)),
                })
                .collect(),
            supports: self
                .supports
                .iter()
                .enumerate()
                .map(|(s, vs)| (self.model.lattice.id(self.support_element(s)).to_string(), vs.iter().map(|&v| l[v].clone()).collect()))
                .collect(),
            lattice: self.model.lattice.to_json(),
            comparison: self.comparison.clone(),
            concretization: self.concretization.clone(),
            choices: self.choices.clone(),
            relation_conflicts: self.relation_conflicts.clone(),
        }
    }

    /// DOT renderings: the coned trees and the Hasse diagram of the index set.
    pub fn dots(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self.coned.iter().map(|c| (c.name.clone(), c.space.to_dot(&c.name))).collect();
        out.push(("lattice".into(), self.model.lattice.to_dot(&self.model.name)));
        out
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassJson {
    pub id: String,
    pub members: Vec<String>,
    pub support: Vec<String>,
    pub favorite: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CombinedJson {
    pub name: String,
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String)>,
    pub decoration_copy_cap: Option<usize>,
    pub points: usize,
    pub classes: Vec<ClassJson>,
    pub supports: Vec<(String, Vec<String>)>,
    pub lattice: LatticeJson,
    pub comparison: ComparisonProfile,
    pub concretization: Vec<EdgeConcretization>,
    pub choices: Vec<String>,
    pub relation_conflicts: Vec<String>,
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}

/// Shared state of the construction.
struct Builder<'a> {
    t: &'a TreeOfHHS,
    tree: &'a FiniteSpace,
    cl: &'a ClassTable,
    edge_of: HashMap<(usize, usize), usize>,
    /// Comparison maps to the favorite representative, per `(class, vertex)`.
    to_fav: HashMap<(usize, usize), CoarseMap>,
    /// `c ∘ π_{V_{e+}}(φ_{e+}(X_e))` per `(class, edge)` for edges leaving the support.
    gates: HashMap<(usize, usize), Vec<usize>>,
}

impl Builder<'_> {
    fn fav(&self, c: usize) -> usize {
        self.cl.classes[c].favorite_vertex
    }

    fn class_hyp(&self, c: usize) -> &FiniteSpace {
        let k = &self.cl.classes[c];
        &self.t.vertices[k.favorite_vertex].hyp[k.favorite_rep]
    }

    fn in_sup(&self, c: usize, v: usize) -> bool {
        self.cl.classes[c].contains_vertex(v)
    }

    /// Closest vertex of a subtree.
    fn nearest(&self, set: &[usize], w: usize) -> usize {
        *set.iter().min_by_key(|&&s| (self.tree.d(w, s), s)).expect("nonempty subtree")
    }

    /// Last edge of the geodesic from `w` to the support of `c`, with its endpoint in the support.
    fn entry(&self, c: usize, w: usize) -> (usize, usize) {
        let u = self.nearest(&self.cl.classes[c].support, w);
        let prev = *self.tree.neighbors(u).iter().find(|&&n| self.tree.d(n, w) + 1 == self.tree.d(u, w)).expect("outside the support");
        (u, self.edge_of[&(u, prev)])
    }

    fn gate(&self, c: usize, w: usize) -> Vec<usize> {
        let (_, e) = self.entry(c, w);
        self.gates[&(c, e)].clone()
    }

    /// The fixed value used where the construction allows any choice: `π_{[V]}` of the favorite vertex's first point.
    fn default_value(&self, c: usize) -> Vec<usize> {
        let k = &self.cl.classes[c];
        self.t.vertices[k.favorite_vertex].pi(k.favorite_rep, 0).to_vec()
    }

    /// `ρ_{[V]}^{T̂}` and its relatives at a tree vertex.
    fn class_value_at(&self, c: usize, w: usize) -> Vec<usize> {
        if self.in_sup(c, w) {
            self.default_value(c)
        } else {
            self.gate(c, w)
        }
    }

    fn pi_class(&self, c: usize, v: usize, x: usize) -> Vec<usize> {
        if let Some(r) = self.cl.rep_at(c, v) {
            self.to_fav[&(c, v)].image_of_set(self.t.vertices[v].pi(r, x))
        } else {
            self.gate(c, v)
        }
    }
}

/// Builds the combined structure on the total space of `t`.
pub fn build_combined(t: &TreeOfHHS, opts: &CombineOptions) -> Result<CombinedStructure, TreeError> {
    t.tree()?;
    let hypotheses = check_hypotheses(t)?;
    let (t, concretization) = if opts.concretize_edges { concretize_edges(t)? } else { (t.clone(), vec![]) };
    let tree = t.tree()?;
    let cl = equivalence_classes(&t)?;
    let comparison = comparison_profile(&t, &cl, opts.comparison_bound)?;
    if !comparison.uniform() {
        let (class, from, to, distance, constant) = comparison.worst.clone().unwrap();
        return Err(TreeError::ComparisonNotUniform {
            class,
            from,
            to,
            distance,
            constant,
            bound: opts.comparison_bound,
            profile: comparison.by_distance.clone(),
        });
    }
    let n1 = cl.len();
    let nt = t.vertices.len();
    let edge_of = t.edge_index();

    // comparison maps to the favorite representative, grown outward from it
    let mut to_fav = HashMap::new();
    for (c, k) in cl.classes.iter().enumerate() {
        let fv = k.favorite_vertex;
        to_fav.insert((c, fv), CoarseMap::identity(t.vertices[fv].hyp[k.favorite_rep].len()));
        let mut queue = VecDeque::from([fv]);
        while let Some(a) = queue.pop_front() {
            for &b in tree.neighbors(a) {
                if to_fav.contains_key(&(c, b)) || !k.contains_vertex(b) {
                    continue;
                }
                let fav_hyp = &t.vertices[fv].hyp[k.favorite_rep];
                let m = step_map(&t, &cl, &edge_of, c, b, a).then(&to_fav[&(c, a)], fav_hyp);
                to_fav.insert((c, b), m);
                queue.push_back(b);
            }
        }
    }

    let mut supports: Vec<Vec<usize>> = cl.classes.iter().map(|k| k.support.clone()).collect();
    supports.sort();
    supports.dedup();
    let n2 = supports.len();
    let class_support: Vec<usize> = cl.classes.iter().map(|k| supports.binary_search(&k.support).unwrap()).collect();
    let support_class: Vec<usize> = (0..n2).map(|s| class_support.iter().position(|&x| x == s).unwrap()).collect();
    let top = n1 + n2;

    let mut b = Builder { t: &t, tree: &tree, cl: &cl, edge_of, to_fav, gates: HashMap::new() };
    let mut gates = HashMap::new();
    for c in 0..n1 {
        for (ei, e) in t.edges.iter().enumerate() {
            let (ia, ib) = (b.in_sup(c, e.minus), b.in_sup(c, e.plus));
            if ia == ib {
                continue;
            }
            let u = if ia { e.minus } else { e.plus };
            let r = cl.rep_at(c, u).unwrap();
            let img = e.map_into(u).image();
            let set = t.vertices[u].pi_set(r, &img);
            gates.insert((c, ei), b.to_fav[&(c, u)].image_of_set(&set));
        }
    }
    b.gates = gates;

    // relations among classes, read at common vertices
    let mut relation_conflicts = Vec::new();
    let mut crel = vec![vec![RelationKind::Equal; n1]; n1];
    for i in 0..n1 {
        for j in 0..n1 {
            if i == j {
                continue;
            }
            let common = cl.common_vertices(i, j);
            let rel_at = |v: usize| t.vertices[v].lattice.relation(cl.rep_at(i, v).unwrap(), cl.rep_at(j, v).unwrap());
            crel[i][j] = match common.first() {
                None => RelationKind::Transverse,
                Some(&v) => {
                    let r = rel_at(v);
                    if i < j {
                        if let Some(&w) = common.iter().find(|&&w| rel_at(w) != r) {
                            relation_conflicts.push(format!(
                                "{} vs {}: {:?} at {} but {:?} at {}",
                                cl.classes[i].id, cl.classes[j].id, r, t.labels[v], rel_at(w), t.labels[w]
                            ));
                        }
                    }
                    r
                }
            };
        }
    }
    let class_vs_support = |w: usize, s: usize| -> RelationKind {
        match crel[w][support_class[s]] {
            RelationKind::NestedIn | RelationKind::Equal => RelationKind::Orthogonal,
            RelationKind::Orthogonal => RelationKind::NestedIn,
            _ => RelationKind::Transverse,
        }
    };
    let rel = |a: usize, c: usize| -> RelationKind {
        if a == top {
            return RelationKind::Contains;
        }
        if c == top {
            return RelationKind::NestedIn;
        }
        match (a < n1, c < n1) {
            (true, true) => crel[a][c],
            (true, false) => class_vs_support(a, c - n1),
            (false, true) => class_vs_support(c, a - n1).inverse(),
            (false, false) => {
                let (x, y) = (&supports[a - n1], &supports[c - n1]);
                if is_subset(x, y) {
                    RelationKind::NestedIn
                } else if is_subset(y, x) {
                    RelationKind::Contains
                } else {
                    RelationKind::Transverse
                }
            }
        }
    };
    let mut ids: Vec<String> = cl.classes.iter().map(|k| k.id.clone()).collect();
    ids.extend(support_class.iter().map(|&c| format!("T{}", cl.classes[c].id)));
    ids.push("T^".into());
    let lattice = IndexLattice::from_fn(ids, top, rel).map_err(|e| TreeError::Malformed(e.to_string()))?;

    // coned trees
    let cone_label = |s: usize| format!("cone T{}", cl.classes[support_class[s]].id);
    let mut coned = Vec::with_capacity(n2 + 1);
    for (s, sup) in supports.iter().enumerate() {
        let base_tree = tree.induced(sup).map_err(|e| TreeError::Malformed(e.to_string()))?;
        let cones: Vec<usize> = (0..n2).filter(|&s2| s2 != s && is_subset(&supports[s2], sup)).collect();
        let subsets: Vec<Vec<usize>> =
            cones.iter().map(|&s2| supports[s2].iter().map(|v| sup.binary_search(v).unwrap()).collect()).collect();
        let labels: Vec<String> = cones.iter().map(|&s2| cone_label(s2)).collect();
        let space = base_tree.cone_off(&subsets, &labels);
        coned.push(ConedTree { name: format!("T{}", cl.classes[support_class[s]].id), base: sup.clone(), cones, space });
    }
    {
        let all: Vec<usize> = (0..n2).collect();
        let labels: Vec<String> = all.iter().map(|&s| cone_label(s)).collect();
        let space = tree.cone_off(&supports, &labels);
        coned.push(ConedTree { name: "T^".into(), base: (0..nt).collect(), cones: all, space });
    }
    // representative tree vertex of every point of a coned tree
    let rep_vertex = |ct: &ConedTree| -> Vec<usize> {
        ct.base.iter().copied().chain(ct.cones.iter().map(|&s2| supports[s2][0])).collect()
    };

    // total space
    let mut offsets = Vec::with_capacity(nt);
    let mut labels = Vec::new();
    let mut point_vertex = Vec::new();
    let mut local = Vec::new();
    let mut edges = Vec::new();
    for (v, m) in t.vertices.iter().enumerate() {
        let off = labels.len();
        offsets.push(off);
        for x in 0..m.n_points() {
            labels.push(format!("{}:{}", t.labels[v], m.space.label(x)));
            point_vertex.push(v);
            local.push(x);
        }
        edges.extend(m.space.edges().map(|(a, c)| (off + a, off + c)));
    }
    for e in &t.edges {
        for x in 0..e.model.n_points() {
            for &a in e.phi_minus.space_map.image(x) {
                for &c in e.phi_plus.space_map.image(x) {
                    edges.push((offsets[e.minus] + a, offsets[e.plus] + c));
                }
            }
        }
    }
    let space = FiniteSpace::from_edges(labels, &edges).map_err(|e| TreeError::Malformed(e.to_string()))?;
    let npts = space.len();

    // hyperbolic spaces and projections
    let mut hyp: Vec<FiniteSpace> = (0..n1).map(|c| b.class_hyp(c).clone()).collect();
    hyp.extend(coned.iter().map(|c| c.space.clone()));
    let mut proj = Vec::with_capacity(top + 1);
    for c in 0..n1 {
        let rows: Vec<Vec<usize>> = (0..npts).into_par_iter().map(|p| b.pi_class(c, point_vertex[p], local[p])).collect();
        proj.push(CoarseMap::new(rows, &hyp[c]));
    }
    for s in 0..n2 {
        let ct = &coned[s];
        let at: Vec<usize> = (0..nt).map(|w| ct.pos(b.nearest(&supports[s], w)).unwrap()).collect();
        proj.push(CoarseMap::new((0..npts).map(|p| vec![at[point_vertex[p]]]).collect(), &ct.space));
    }
    proj.push(CoarseMap::new((0..npts).map(|p| vec![point_vertex[p]]).collect(), &coned[n2].space));

    // ρ
    let mut choices = vec![
        "ρ values left free are π of the first point of the favorite vertex".to_string(),
        "cone points use the least vertex of their subtree".to_string(),
    ];
    let mut rho = BTreeMap::new();
    let pos_set = |s: usize, vs: &[usize]| -> Vec<usize> { vs.iter().map(|&v| coned[s].pos(v).unwrap()).collect() };
    let map_over = |ct: &ConedTree, cod: &FiniteSpace, f: &dyn Fn(usize) -> Vec<usize>| -> Rho {
        Rho::Map(CoarseMap::new(rep_vertex(ct).into_iter().map(f).collect(), cod))
    };
    for a in 0..=top {
        for c in 0..=top {
            if a == c || lattice.orth(a, c) {
                continue;
            }
            let val: Rho = if a == top {
                // ρ_{T̂}^{c}: the support, as tree vertices
                let vs = if c < n1 { cl.classes[c].support.clone() } else { supports[c - n1].clone() };
                Rho::Set(vs)
            } else if c == top {
                let ct = &coned[n2];
                if a < n1 {
                    map_over(ct, &hyp[a], &|w| b.class_value_at(a, w))
                } else {
                    let s = a - n1;
                    map_over(ct, &hyp[a], &|w| vec![coned[s].pos(b.nearest(&supports[s], w)).unwrap()])
                }
            } else if a < n1 && c < n1 {
                class_rho(&b, &lattice, a, c, &hyp, &mut relation_conflicts)
            } else if a >= n1 && c >= n1 {
                let (s, s2) = (a - n1, c - n1);
                if lattice.properly_nested(c, a) {
                    Rho::Set(pos_set(s, &supports[s2]))
                } else if lattice.properly_nested(a, c) {
                    map_over(&coned[s2], &hyp[a], &|w| vec![coned[s].pos(b.nearest(&supports[s], w)).unwrap()])
                } else {
                    let i = intersect(&supports[s], &supports[s2]);
                    if i.is_empty() {
                        Rho::Set(vec![coned[s].pos(b.nearest(&supports[s], supports[s2][0])).unwrap()])
                    } else {
                        Rho::Set(pos_set(s, &i))
                    }
                }
            } else if a < n1 {
                // class a, support c
                let s = c - n1;
                if lattice.properly_nested(a, c) {
                    map_over(&coned[s], &hyp[a], &|w| b.class_value_at(a, w))
                } else {
                    let outside: Vec<usize> = supports[s].iter().copied().filter(|&w| !b.in_sup(a, w)).collect();
                    let mut set: Vec<usize> = outside.iter().flat_map(|&w| b.gate(a, w)).collect();
                    set.sort_unstable();
                    set.dedup();
                    if set.is_empty() {
                        set = b.default_value(a);
                    }
                    Rho::Set(set)
                }
            } else {
                // support a, class c
                let s = a - n1;
                let i = intersect(&supports[s], &cl.classes[c].support);
                if i.is_empty() {
                    Rho::Set(vec![coned[s].pos(b.nearest(&supports[s], b.fav(c))).unwrap()])
                } else {
                    Rho::Set(pos_set(s, &i))
                }
            };
            rho.insert((a, c), val);
        }
    }
    if n1 > 0 {
        choices.push("ρ from a class to a transverse support meeting it: union of the gates of the support vertices outside the class".into());
    }
    relation_conflicts.sort();
    relation_conflicts.dedup();

    let model = HHSModel { name: format!("combined {}", t.name), space, lattice, hyp, proj, rho, constants: None };
    let problems = model.structural_problems();
    if let Some(p) = problems.first() {
        return Err(TreeError::Malformed(format!("combined structure: {p}")));
    }
    Ok(CombinedStructure {
        tree_space: tree.clone(),
        classes: cl.clone(),
        supports,
        support_class,
        class_support,
        model,
        coned,
        point_vertex,
        offsets,
        hypotheses,
        comparison,
        concretization,
        choices,
        relation_conflicts,
        tree: t.clone(),
    })
}

/// `ρ` between two classes: read at a common vertex and pushed to the favorite
/// representatives, or the gate of the last edge when the supports are disjoint.
fn class_rho(b: &Builder, l: &IndexLattice, a: usize, c: usize, hyp: &[FiniteSpace], conflicts: &mut Vec<String>) -> Rho {
    let cl = b.cl;
    let common = cl.common_vertices(a, c);
    let id = |x: usize| cl.classes[x].id.clone();
    if common.is_empty() {
        return Rho::Set(b.gate(a, b.fav(c)));
    }
    if l.properly_nested(a, c) {
        // map C[c] → C[a], read at the favorite vertex of the larger class when possible
        let v = if common.contains(&b.fav(c)) { b.fav(c) } else { common[0] };
        let vm = &b.t.vertices[v];
        let (ra, rc) = (cl.rep_at(a, v).unwrap(), cl.rep_at(c, v).unwrap());
        let Some(inner) = vm.rho_map(ra, rc) else {
            conflicts.push(format!("{} ⊑ {} has no ρ map at {}", id(a), id(c), b.t.labels[v]));
            return Rho::Map(CoarseMap::constant(hyp[c].len(), b.default_value(a), &hyp[a]));
        };
        let back = if v == b.fav(c) {
            CoarseMap::identity(hyp[c].len())
        } else {
            b.to_fav[&(c, v)].quasi_inverse(&vm.hyp[rc], &hyp[c])
        };
        let m = back.then(inner, &vm.hyp[ra]).then(&b.to_fav[&(a, v)], &hyp[a]);
        return Rho::Map(m);
    }
    let v = if l.properly_nested(c, a) && common.contains(&b.fav(a)) { b.fav(a) } else { common[0] };
    let vm = &b.t.vertices[v];
    let (ra, rc) = (cl.rep_at(a, v).unwrap(), cl.rep_at(c, v).unwrap());
    match vm.rho_set(ra, rc) {
        Some(s) => Rho::Set(b.to_fav[&(a, v)].image_of_set(s)),
        None => {
            conflicts.push(format!("{} and {} have no ρ set at {}", id(a), id(c), b.t.labels[v]));
            Rho::Set(b.default_value(a))
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CombinedWedgeReport {
    /// `(a, b, formula wedge)` for every unordered pair.
    pub wedges: Vec<(String, String, Option<String>)>,
    /// `(element, cont⊥ element)`.
    pub containers: Vec<(String, Option<String>)>,
    pub report: ValidationReport,
}

/// Class of the vertex-lattice wedge or join at the least common vertex.
fn class_meet(c: &CombinedStructure, a: usize, b: usize, join: bool) -> Option<Option<usize>> {
    let cl = &c.classes;
    let v = *cl.common_vertices(a, b).first()?;
    let l = &c.tree.vertices[v].lattice;
    let (ra, rb) = (cl.rep_at(a, v).unwrap(), cl.rep_at(b, v).unwrap());
    let r = if join { l.join(ra, rb).ok().map(Some) } else { l.wedge(ra, rb).ok() };
    r.map(|m| m.map(|u| cl.class_of[v][u]))
}

/// Wedge of two classes: at a common vertex, else the unique maximal common lower class.
fn class_wedge(c: &CombinedStructure, a: usize, b: usize) -> Option<usize> {
    if let Some(m) = class_meet(c, a, b, false) {
        return m;
    }
    let l = &c.model.lattice;
    let lower: Vec<usize> = (0..c.n1()).filter(|&w| l.nested(w, a) && l.nested(w, b)).collect();
    let max: Vec<usize> = lower.iter().copied().filter(|&w| !lower.iter().any(|&z| l.properly_nested(w, z))).collect();
    match max.as_slice() {
        [m] => Some(*m),
        _ => None,
    }
}

/// Class of `cont⊥` of the favorite representative of `c`, at its favorite vertex.
/// Class of `cont⊥` of the representatives of class `c`, read at every support vertex.
///
/// The favorite vertex alone is not enough: a class may meet orthogonal
/// elements only at some vertices of its support. The answer is the largest of
/// the classes found, when one contains all the others.
fn class_container(cs: &CombinedStructure, c: usize) -> Option<usize> {
    let l = &cs.model.lattice;
    let mut found: Vec<usize> = cs
        .classes
        .classes[c]
        .members
        .iter()
        .filter_map(|&(v, u)| cs.tree.vertices[v].lattice.container(u).map(|w| cs.classes.class_of[v][w]))
        .collect();
    found.sort_unstable();
    found.dedup();
    found.iter().copied().find(|&x| found.iter().all(|&y| l.nested(y, x)))
}

/// Wedges by the case formulas, cross-checked against the brute-force table,
/// plus both container identities and the support-of-join rule.
pub fn combined_wedge_table(c: &CombinedStructure) -> CombinedWedgeReport {
    let l = &c.model.lattice;
    let n1 = c.n1();
    let top = c.top();
    let id = |x: usize| l.id(x).to_string();
    let mut out = CombinedWedgeReport::default();
    let support_elem_of = |vs: &[usize]| c.supports.binary_search(&vs.to_vec()).ok().map(|s| c.support_element(s));
    for a in 0..=top {
        for b in a..=top {
            let formula: Option<usize> = if a == b {
                Some(a)
            } else if l.orth(a, b) {
                None
            } else if b == top {
                Some(a)
            } else if a < n1 && b < n1 {
                class_wedge(c, a, b)
            } else if a < n1 {
                let w = c.support_class[b - n1];
                class_container(c, w).and_then(|k| if k == a { Some(a) } else { class_wedge(c, a, k) })
            } else {
                let (s, s2) = (a - n1, b - n1);
                let i = intersect(&c.supports[s], &c.supports[s2]);
                if !i.is_empty() {
                    match support_elem_of(&i) {
                        Some(e) => Some(e),
                        None => {
                            out.report.push(Rule::SupportJoin, vec![id(a), id(b)], "intersection of supports is not a support".into());
                            None
                        }
                    }
                } else {
                    match (class_container(c, c.support_class[s]), class_container(c, c.support_class[s2])) {
                        (Some(x), Some(y)) => {
                            if x == y {
                                Some(x)
                            } else {
                                class_wedge(c, x, y)
                            }
                        }
                        _ => None,
                    }
                }
            };
            let brute = l.wedge(a, b);
            match brute {
                Ok(m) if m == formula => {}
                Ok(m) => out.report.push(
                    Rule::CombinedWedge,
                    vec![id(a), id(b)],
                    format!("formula {:?}, lattice {:?}", formula.map(id), m.map(id)),
                ),
                Err(e) => out.report.push(Rule::CombinedWedge, vec![id(a), id(b)], e.to_string()),
            }
            out.wedges.push((id(a), id(b), formula.map(id)));
        }
    }
    for x in 0..top {
        let got = l.container(x);
        out.containers.push((id(x), got.map(id)));
        let want = if x < n1 { c.support_of_class(x) } else { c.support_class[x - n1] };
        if got != Some(want) {
            out.report.push(Rule::CombinedContainer, vec![id(x)], format!("expected {}, found {:?}", id(want), got.map(id)));
        }
    }
    out.report.extend(support_laws(c, false));
    out
}

/// `[U] ⊑ [V] ⇒ T_{[V]} ⊆ T_{[U]}`, and nonempty support intersections equal the support of the join class.
/// With `converse`, also the reverse implication and distinct supports for distinct classes.
pub fn support_laws(c: &CombinedStructure, converse: bool) -> ValidationReport {
    let l = &c.model.lattice;
    let cl = &c.classes.classes;
    let mut r = ValidationReport::default();
    for u in 0..c.n1() {
        for v in 0..c.n1() {
            if u == v {
                continue;
            }
            let (su, sv) = (&cl[u].support, &cl[v].support);
            if l.nested(u, v) && !is_subset(sv, su) {
                r.push(Rule::SupportOrder, vec![cl[u].id.clone(), cl[v].id.clone()], "nested but supports not reversed".into());
            }
            if converse {
                if is_subset(sv, su) && !l.nested(u, v) {
                    r.push(Rule::SupportOrder, vec![cl[u].id.clone(), cl[v].id.clone()], "supports reversed but not nested".into());
                }
                if u < v && su == sv {
                    r.push(Rule::DistinctSupports, vec![cl[u].id.clone(), cl[v].id.clone()], String::new());
                }
            }
            if u < v {
                let i = intersect(su, sv);
                if !i.is_empty() {
                    match class_meet(c, u, v, true) {
                        Some(Some(j)) if cl[j].support == i => {}
                        Some(Some(j)) => r.push(
                            Rule::SupportJoin,
                            vec![cl[u].id.clone(), cl[v].id.clone(), cl[j].id.clone()],
                            "support of the join differs from the intersection".into(),
                        ),
                        _ => r.push(Rule::SupportJoin, vec![cl[u].id.clone(), cl[v].id.clone()], "no join at a common vertex".into()),
                    }
                }
            }
        }
    }
    r
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinedAudit {
    pub audit: AuditReport,
    pub complexity: usize,
    pub chi1: usize,
    pub chi_vertex_max: usize,
    pub complexity_ok: bool,
    /// Pairs of tree vertices times elements of `𝔖₂ ∪ {T̂}` examined.
    pub large_links_checked: usize,
    pub large_links: ValidationReport,
    pub support_laws: ValidationReport,
    pub decorated: bool,
    pub wedge: CombinedWedgeReport,
    pub lattice: ValidationReport,
    pub rho_diam_max: u32,
    pub rho_disjoint: ValidationReport,
    pub cones: ValidationReport,
    pub pass: bool,
}

/// `|Y_max| ≤ d_S(π_S x, π_S x')` for every `S ∈ 𝔖₂ ∪ {T̂}`, where `Y` collects the
/// supports properly inside `S` on which `x, x'` project more than 4 apart.
/// Projections to supports factor through the tree, so vertex pairs cover all point pairs.
pub fn large_links_support_bound(c: &CombinedStructure) -> (usize, ValidationReport) {
    let nt = c.tree.vertices.len();
    let n1 = c.n1();
    let l = &c.model.lattice;
    let rep_point: Vec<usize> = c.offsets.clone();
    let checks: Vec<(usize, ValidationReport)> = (n1..=c.top())
        .into_par_iter()
        .map(|s| {
            let mut r = ValidationReport::default();
            let mut count = 0;
            let inner: Vec<usize> = (n1..c.top()).filter(|&x| l.properly_nested(x, s)).collect();
            for v in 0..nt {
                for w in v + 1..nt {
                    count += 1;
                    let (x, y) = (rep_point[v], rep_point[w]);
                    let ys: Vec<usize> = inner.iter().copied().filter(|&z| c.model.du(z, x, y) > 4).collect();
                    let ymax = ys.iter().filter(|&&z| !ys.iter().any(|&z2| l.properly_nested(z, z2))).count();
                    let ds = c.model.du(s, x, y);
                    if ymax as u32 > ds {
                        r.push(
                            Rule::LargeLinksSupport,
                            vec![l.id(s).to_string(), c.tree.labels[v].clone(), c.tree.labels[w].clone()],
                            format!("{ymax} maximal elements, distance {ds}"),
                        );
                    }
                }
            }
            (count, r)
        })
        .collect();
    let mut total = 0;
    let mut rep = ValidationReport::default();
    for (n, r) in checks {
        total += n;
        rep.extend(r);
    }
    (total, rep)
}

/// Full audit of the combined structure plus the tree-specific checks.
pub fn audit_combined(c: &CombinedStructure, opts: AuditOptions) -> CombinedAudit {
    let audit = audit_with(&c.model, opts);
    let l = &c.model.lattice;
    let n1 = c.n1();
    let complexity = l.complexity();
    let s1 = IndexLattice::from_fn((0..n1).map(|i| l.id(i).to_string()).collect(), 0, |a, b| l.relation(a, b));
    let chi1 = match s1 {
        Ok(s) => s.complexity(),
        Err(_) => n1,
    };
    let chi_vertex_max = c.tree.vertices.iter().map(|m| m.lattice.complexity()).max().unwrap_or(0);
    let complexity_ok = complexity <= 2 * chi1 + 1 && chi1 <= chi_vertex_max + 1;
    let (large_links_checked, large_links) = large_links_support_bound(c);
    let support = support_laws(c, true);
    let wedge = combined_wedge_table(c);
    let mut lattice = l.verify_intersection_property();
    lattice.extend(l.verify_clean_containers());

    let rho_diam_max = c
        .model
        .rho
        .iter()
        .filter_map(|(&(u, _), r)| r.set().map(|s| c.model.hyp[u].diam(s)))
        .max()
        .unwrap_or(0);
    let mut rho_disjoint = ValidationReport::default();
    for v in 0..n1 {
        for w in 0..n1 {
            if v == w || !l.transverse(v, w) || !c.classes.common_vertices(v, w).is_empty() {
                continue;
            }
            let set = c.model.rho_set(v, w).unwrap();
            for (p, &pv) in c.point_vertex.iter().enumerate() {
                if c.classes.classes[w].contains_vertex(pv) && c.model.pi(v, p) != set {
                    rho_disjoint.push(
                        Rule::RhoDisjointSupport,
                        vec![l.id(v).to_string(), l.id(w).to_string(), c.model.space.label(p).to_string()],
                        String::new(),
                    );
                    break;
                }
            }
        }
    }
    let mut cones = ValidationReport::default();
    for ct in &c.coned {
        for (k, &s) in ct.cones.iter().enumerate() {
            let pts: Vec<usize> = c.supports[s].iter().map(|&v| ct.pos(v).unwrap()).collect();
            let d = ct.space.diam(&pts);
            if d > 2 {
                cones.push(Rule::ConeDiameter, vec![ct.name.clone(), format!("cone {k}")], format!("diameter {d}"));
            }
        }
    }
    let decorated = c.decorated();
    let pass = audit.pass()
        && complexity_ok
        && large_links.is_ok()
        && (if decorated { support.is_ok() } else { !support.has(Rule::SupportJoin) && support.violations.iter().all(|v| v.note != "nested but supports not reversed") })
        && wedge.report.is_ok()
        && lattice.is_ok()
        && rho_disjoint.is_ok()
        && cones.is_ok()
        && c.relation_conflicts.is_empty();
    CombinedAudit {
        audit,
        complexity,
        chi1,
        chi_vertex_max,
        complexity_ok,
        large_links_checked,
        large_links,
        support_laws: support,
        decorated,
        wedge,
        lattice,
        rho_diam_max,
        rho_disjoint,
        cones,
        pass,
    }
}
