//! Graph products of finite group models: splitting, windowed Bass–Serre
//! trees and the recursive build with its certificate chain.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::audit::{audit_with, AuditOptions};
use crate::hiero::{verify_fullness, verify_index_map, IndexMap};
use crate::model::{HHSModel, ModelJson};
use crate::product::direct_product_structure;
use crate::regions::{hq_check, Hieromorphism};
use crate::report::ValidationReport;
use crate::space::{CoarseMap, FiniteSpace};
use crate::tree::{build_combined, decorate, CombineOptions, CombinedStructure, TreeEdge, TreeError, TreeOfHHS};

/// Default limit on the number of tree vertices in a window.
pub const WINDOW_BUDGET: usize = 4096;

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
pub enum GraphError {
    #[error("malformed product spec: {0}")]
    Malformed(String),
    #[error("graph is not simplicial: {0}")]
    NotSimplicial(String),
    #[error("no base model for vertex {0}")]
    MissingBase(String),
    #[error("base model of {vertex} fails: {reason}")]
    BaseFails { vertex: String, reason: String },
    #[error("no split needed: {0}")]
    NoSplitNeeded(String),
    #[error("unsupported splitting at pivot {pivot}: {reason}")]
    Unsupported { pivot: String, reason: String },
    #[error("window has more than {budget} vertices")]
    WindowTooLarge { budget: usize },
    #[error("tree combination failed at {path:?}: {error}")]
    Tree { path: Vec<String>, error: Box<TreeError> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: Vec<String>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProductSpecJson {
    pub graph: GraphJson,
    pub bases: BTreeMap<String, ModelJson>,
    pub window_radius: usize,
    #[serde(default)]
    pub copy_cap: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct ProductSpec {
    pub vertices: Vec<String>,
    pub adj: Vec<BTreeSet<usize>>,
    pub bases: Vec<HHSModel>,
    pub window_radius: usize,
    pub copy_cap: usize,
    pub budget: usize,
}

impl ProductSpec {
    pub fn new(vertices: Vec<String>, edges: &[(usize, usize)], bases: Vec<HHSModel>, window_radius: usize) -> Result<Self, GraphError> {
        let n = vertices.len();
        if n == 0 || bases.len() != n {
            return Err(GraphError::Malformed("vertex and base counts differ or are zero".into()));
        }
        let mut adj = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(GraphError::Malformed(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(GraphError::NotSimplicial(format!("loop at {}", vertices[a])));
            }
            if !adj[a].insert(b) {
                return Err(GraphError::NotSimplicial(format!("repeated edge {}-{}", vertices[a], vertices[b])));
            }
            adj[b].insert(a);
        }
        if vertices.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(GraphError::Malformed("repeated vertex name".into()));
        }
        Ok(ProductSpec { vertices, adj, bases, window_radius, copy_cap: 1, budget: WINDOW_BUDGET })
    }

    pub fn from_json(j: &ProductSpecJson) -> Result<Self, GraphError> {
        let find = |l: &str| j.graph.vertices.iter().position(|v| v == l).ok_or_else(|| GraphError::Malformed(format!("unknown vertex {l}")));
        let edges = j.graph.edges.iter().map(|(a, b)| Ok((find(a)?, find(b)?))).collect::<Result<Vec<_>, GraphError>>()?;
        let bases = j
            .graph
            .vertices
            .iter()
            .map(|v| {
                let b = j.bases.get(v).ok_or_else(|| GraphError::MissingBase(v.clone()))?;
                HHSModel::from_json(b).map_err(|e| GraphError::BaseFails { vertex: v.clone(), reason: e.to_string() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut s = ProductSpec::new(j.graph.vertices.clone(), &edges, bases, j.window_radius)?;
        if let Some(c) = j.copy_cap {
            s.copy_cap = c;
        }
        Ok(s)
    }

    pub fn to_json(&self) -> ProductSpecJson {
        let mut edges = Vec::new();
        for (a, ns) in self.adj.iter().enumerate() {
            edges.extend(ns.iter().filter(|&&b| b > a).map(|&b| (self.vertices[a].clone(), self.vertices[b].clone())));
        }
        ProductSpecJson {
            graph: GraphJson { vertices: self.vertices.clone(), edges },
            bases: self.vertices.iter().cloned().zip(self.bases.iter().map(|b| b.to_json())).collect(),
            window_radius: self.window_radius,
            copy_cap: Some(self.copy_cap),
        }
    }

    /// Lattice checks and a full audit of every base.
    pub fn validate(&self) -> Result<(), GraphError> {
        for (v, b) in self.vertices.iter().zip(&self.bases) {
            let fail = |reason: String| GraphError::BaseFails { vertex: v.clone(), reason };
            let mut r = b.lattice.verify_intersection_property();
            r.extend(b.lattice.verify_clean_containers());
            if let Some(x) = r.violations.first() {
                return Err(fail(format!("{:?} at {:?}", x.rule, x.witness)));
            }
            if let Some(p) = b.structural_problems().first() {
                return Err(fail(p.clone()));
            }
            let a = audit_with(b, AuditOptions::default());
            if !a.pass() {
                return Err(fail("axiom audit".into()));
            }
        }
        Ok(())
    }

    fn is_complete(&self, vs: &[usize]) -> bool {
        vs.iter().all(|&a| vs.iter().all(|&b| a == b || self.adj[a].contains(&b)))
    }

    /// Connected components of the subgraph induced on `vs`, each sorted.
    fn components(&self, vs: &[usize]) -> Vec<Vec<usize>> {
        let inside: BTreeSet<usize> = vs.iter().copied().collect();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &s in vs {
            if !seen.insert(s) {
                continue;
            }
            let mut comp = vec![s];
            let mut queue = VecDeque::from([s]);
            while let Some(a) = queue.pop_front() {
                for &b in &self.adj[a] {
                    if inside.contains(&b) && seen.insert(b) {
                        comp.push(b);
                        queue.push_back(b);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    fn names(&self, vs: &[usize]) -> Vec<String> {
        vs.iter().map(|&v| self.vertices[v].clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitData {
    pub pivot: String,
    pub left: Vec<String>,
    pub link: Vec<String>,
    /// The pivot is adjacent to every other vertex, so the link is the whole remainder.
    pub central: bool,
    pub amalgam: String,
}

fn split_on(spec: &ProductSpec, vs: &[usize]) -> Result<(usize, SplitData), GraphError> {
    if vs.len() <= 1 {
        return Err(GraphError::NoSplitNeeded("single vertex".into()));
    }
    if spec.is_complete(vs) {
        return Err(GraphError::NoSplitNeeded("complete graph".into()));
    }
    if spec.components(vs).len() > 1 {
        return Err(GraphError::NoSplitNeeded("disconnected graph".into()));
    }
    let inside: BTreeSet<usize> = vs.iter().copied().collect();
    let deg = |v: usize| spec.adj[v].iter().filter(|b| inside.contains(b)).count();
    let pivot = *vs.iter().max_by_key(|&&v| (deg(v), std::cmp::Reverse(v))).unwrap();
    let left: Vec<usize> = vs.iter().copied().filter(|&v| v != pivot).collect();
    let link: Vec<usize> = left.iter().copied().filter(|v| spec.adj[pivot].contains(v)).collect();
    let name = |xs: &[usize]| format!("G{{{}}}", spec.names(xs).join(","));
    let amalgam = format!("{} *_{} ({} x G{{{}}})", name(&left), name(&link), name(&link), spec.vertices[pivot]);
    Ok((
        pivot,
        SplitData {
            pivot: spec.vertices[pivot].clone(),
            central: link.len() == left.len(),
            left: spec.names(&left),
            link: spec.names(&link),
            amalgam,
        },
    ))
}

/// Pivot of highest degree, ties to the least vertex.
pub fn split(spec: &ProductSpec) -> Result<SplitData, GraphError> {
    let all: Vec<usize> = (0..spec.vertices.len()).collect();
    split_on(spec, &all).map(|s| s.1)
}

/// Point standing for the group identity: label `e` or `0`, else the first point.
pub fn identity_point(m: &HHSModel) -> usize {
    let labels = m.space.labels();
    let exact = labels.iter().position(|l| l == "e" || l == "0");
    let suffix = || labels.iter().position(|l| l.ends_with(":e") || l.ends_with(":0"));
    exact.or_else(suffix).unwrap_or(0)
}

/// Index set carried by the one-point edges of a free product window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointEdges {
    /// `{S}`, sent to the top of both vertices: all vertex tops fall into one class.
    TrivialLattice,
    /// The empty index set: every coset keeps its own structure.
    Bare,
}

fn point_edge(kind: PointEdges) -> HHSModel {
    match kind {
        PointEdges::TrivialLattice => HHSModel::trivial("point", FiniteSpace::point("e")),
        PointEdges::Bare => HHSModel::bare("point", FiniteSpace::point("e")),
    }
}

/// The point edge sent to `p`, with its top element (if any) sent to the top of `m`.
fn point_into(kind: PointEdges, m: &HHSModel, p: usize) -> Hieromorphism {
    let space_map = CoarseMap::new(vec![vec![p]], &m.space);
    if kind == PointEdges::Bare {
        return Hieromorphism { space_map, index: IndexMap { map: vec![] }, hyp_maps: vec![], image_hull: None };
    }
    let top = m.lattice.maximal();
    Hieromorphism {
        space_map,
        index: IndexMap { map: vec![top] },
        hyp_maps: vec![CoarseMap::new(vec![m.pi(top, p).to_vec()], &m.hyp[top])],
        image_hull: None,
    }
}

/// Window of the Bass–Serre tree of `a * b` around the coset of `a` through the
/// identity: each coset of one factor meets the cosets of the other at its points.
pub fn free_product_window(
    a: &HHSModel,
    b: &HHSModel,
    names: (&str, &str),
    edges: PointEdges,
    radius: usize,
    budget: usize,
) -> Result<TreeOfHHS, GraphError> {
    let models = [a, b];
    let ids = [identity_point(a), identity_point(b)];
    let mut t = TreeOfHHS {
        name: format!("{} * {} window r={radius}", names.0, names.1),
        labels: vec![format!("{}[e]", names.0)],
        vertices: vec![a.clone()],
        edges: vec![],
        decoration: None,
    };
    // (vertex, factor side, word, depth)
    let mut queue = VecDeque::from([(0usize, 0usize, String::new(), 0usize)]);
    while let Some((v, side, word, depth)) = queue.pop_front() {
        if depth == radius {
            continue;
        }
        let m = models[side];
        let other = 1 - side;
        for p in 0..m.n_points() {
            if v != 0 && p == ids[side] {
                continue;
            }
            if t.vertices.len() >= budget {
                return Err(GraphError::WindowTooLarge { budget });
            }
            let w = if word.is_empty() { m.space.label(p).to_string() } else { format!("{word}.{}", m.space.label(p)) };
            let id = t.vertices.len();
            t.labels.push(format!("{}[{w}]", if other == 0 { names.0 } else { names.1 }));
            t.vertices.push(models[other].clone());
            t.edges.push(TreeEdge {
                minus: v,
                plus: id,
                model: point_edge(edges),
                phi_minus: point_into(edges, m, p),
                phi_plus: point_into(edges, models[other], ids[other]),
            });
            queue.push_back((id, other, w, depth + 1));
        }
    }
    Ok(t)
}

/// Window of the Bass–Serre tree of `A *_A (A × G_v)`: the coset `A` through the
/// identity, the single coset of `A × G_v`, and the cosets `gA` for the other `g ∈ G_v`.
pub fn central_window(a: &HHSModel, gv: &HHSModel, names: (&str, &str), radius: usize, budget: usize) -> Result<TreeOfHHS, GraphError> {
    let (bm, lay) = direct_product_structure(a, gv);
    let ng = gv.n_points();
    let idg = identity_point(gv);
    let mut t = TreeOfHHS {
        name: format!("{} *_{} ({} x {}) window r={radius}", names.0, names.0, names.0, names.1),
        labels: vec![format!("{}[e]", names.0)],
        vertices: vec![a.clone()],
        edges: vec![],
        decoration: None,
    };
    if radius == 0 {
        return Ok(t);
    }
    t.labels.push(format!("{} x {}[e]", names.0, names.1));
    t.vertices.push(bm.clone());
    let slice = |g: usize| Hieromorphism {
        space_map: CoarseMap::new((0..a.n_points()).map(|x| vec![x * ng + g]).collect(), &bm.space),
        index: IndexMap { map: (0..a.n_elements()).map(|u| lay.factor(0, u)).collect() },
        hyp_maps: (0..a.n_elements()).map(|u| CoarseMap::identity(a.hyp[u].len())).collect(),
        image_hull: None,
    };
    let leaves: Vec<usize> = if radius >= 2 { (0..ng).filter(|&g| g != idg).collect() } else { vec![] };
    if 2 + leaves.len() > budget {
        return Err(GraphError::WindowTooLarge { budget });
    }
    t.edges.push(TreeEdge { minus: 0, plus: 1, model: a.clone(), phi_minus: Hieromorphism::identity(a), phi_plus: slice(idg) });
    for g in leaves {
        let id = t.vertices.len();
        t.labels.push(format!("{}[{}]", names.0, gv.space.label(g)));
        t.vertices.push(a.clone());
        t.edges.push(TreeEdge { minus: id, plus: 1, model: a.clone(), phi_minus: Hieromorphism::identity(a), phi_plus: slice(g) });
    }
    Ok(t)
}

/// Certificate for one subgroup inclusion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InclusionCert {
    pub subgraph: Vec<String>,
    pub full: bool,
    pub hqc: bool,
    pub hq_k0: u32,
    pub isometric: bool,
    /// Source elements whose induced map on hyperbolic spaces is not an isometric embedding.
    pub non_isometric: Vec<String>,
    pub pass: bool,
}

/// Fullness, hierarchical quasiconvexity of the image and isometric induced maps.
pub fn certify_inclusion(subgraph: Vec<String>, src: &HHSModel, tgt: &HHSModel, phi: &Hieromorphism) -> InclusionCert {
    let mut r = verify_index_map(&phi.index, &src.lattice, &tgt.lattice);
    r.extend(verify_fullness(&phi.index, &src.lattice, &tgt.lattice));
    let full = r.is_ok();
    let hq = hq_check(tgt, &phi.image());
    let mut non_isometric = Vec::new();
    for u in 0..src.n_elements() {
        let (dom, cod, f) = (&src.hyp[u], &tgt.hyp[phi.index.apply(u)], &phi.hyp_maps[u]);
        let single = (0..dom.len()).all(|x| f.image(x).len() == 1);
        let iso = single && (0..dom.len()).all(|x| (x + 1..dom.len()).all(|y| cod.d(f.image(x)[0], f.image(y)[0]) == dom.d(x, y)));
        if !iso {
            non_isometric.push(src.lattice.id(u).to_string());
        }
    }
    let isometric = non_isometric.is_empty();
    InclusionCert { subgraph, full, hqc: hq.pass, hq_k0: hq.k0, isometric, non_isometric, pass: full && hq.pass && isometric }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LevelKind {
    Base,
    DirectProduct,
    FreeProduct,
    Amalgam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertLevel {
    pub subgraph: Vec<String>,
    pub kind: LevelKind,
    pub split: Option<SplitData>,
    pub window_radius: usize,
    pub points: usize,
    pub elements: usize,
    pub intersection_property: ValidationReport,
    pub clean_containers: ValidationReport,
    pub inclusions: Vec<InclusionCert>,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CertChain {
    pub levels: Vec<CertLevel>,
}

impl CertChain {
    pub fn pass(&self) -> bool {
        !self.levels.is_empty() && self.levels.iter().all(|l| l.pass)
    }
}

pub struct GraphProduct {
    pub model: HHSModel,
    /// Combined structure of the outermost tree, when the last step was a tree combination.
    pub combined: Option<CombinedStructure>,
    pub chain: CertChain,
}

fn level(spec: &ProductSpec, vs: &[usize], kind: LevelKind, split: Option<SplitData>, m: &HHSModel, inclusions: Vec<InclusionCert>) -> CertLevel {
    let ip = m.lattice.verify_intersection_property();
    let cc = m.lattice.verify_clean_containers();
    let pass = ip.is_ok() && cc.is_ok() && inclusions.iter().all(|i| i.pass);
    CertLevel {
        subgraph: spec.names(vs),
        kind,
        split,
        window_radius: spec.window_radius,
        points: m.n_points(),
        elements: m.n_elements(),
        intersection_property: ip,
        clean_containers: cc,
        inclusions,
        pass,
    }
}

fn combine(t: &TreeOfHHS, spec: &ProductSpec, vs: &[usize]) -> Result<CombinedStructure, GraphError> {
    let t = decorate(t, spec.copy_cap);
    build_combined(&t, &CombineOptions::default()).map_err(|error| GraphError::Tree { path: spec.names(vs), error: Box::new(error) })
}

fn vertex_cert(spec: &ProductSpec, sub: &[usize], c: &CombinedStructure, v: usize) -> Result<InclusionCert, GraphError> {
    let phi = c.vertex_inclusion(v).map_err(|error| GraphError::Tree { path: spec.names(sub), error: Box::new(error) })?;
    Ok(certify_inclusion(spec.names(sub), &c.tree.vertices[v], &c.model, &phi))
}

fn product_certs(spec: &ProductSpec, left: &[usize], right: &[usize], a: &HHSModel, b: &HHSModel, m: &HHSModel) -> Vec<InclusionCert> {
    let (na, nb) = (a.n_points(), b.n_points());
    let (ia, ib) = (identity_point(a), identity_point(b));
    let ka = a.n_elements();
    let into_a = Hieromorphism {
        space_map: CoarseMap::new((0..na).map(|x| vec![x * nb + ib]).collect(), &m.space),
        index: IndexMap { map: (0..ka).collect() },
        hyp_maps: (0..ka).map(|u| CoarseMap::identity(a.hyp[u].len())).collect(),
        image_hull: None,
    };
    let into_b = Hieromorphism {
        space_map: CoarseMap::new((0..nb).map(|y| vec![ia * nb + y]).collect(), &m.space),
        index: IndexMap { map: (0..b.n_elements()).map(|u| ka + u).collect() },
        hyp_maps: (0..b.n_elements()).map(|u| CoarseMap::identity(b.hyp[u].len())).collect(),
        image_hull: None,
    };
    vec![certify_inclusion(spec.names(left), a, m, &into_a), certify_inclusion(spec.names(right), b, m, &into_b)]
}

fn build_rec(spec: &ProductSpec, vs: &[usize], chain: &mut CertChain) -> Result<(HHSModel, Option<CombinedStructure>), GraphError> {
    if vs.len() == 1 {
        let m = spec.bases[vs[0]].clone();
        chain.levels.push(level(spec, vs, LevelKind::Base, None, &m, vec![]));
        return Ok((m, None));
    }
    if spec.is_complete(vs) {
        let mut acc = spec.bases[vs[0]].clone();
        for i in 1..vs.len() {
            let b = &spec.bases[vs[i]];
            let (m, _) = direct_product_structure(&acc, b);
            let certs = product_certs(spec, &vs[..i], &vs[i..=i], &acc, b, &m);
            chain.levels.push(level(spec, &vs[..=i], LevelKind::DirectProduct, None, &m, certs));
            acc = m;
        }
        return Ok((acc, None));
    }
    let comps = spec.components(vs);
    if comps.len() > 1 {
        let (mut acc, mut comb) = build_rec(spec, &comps[0], chain)?;
        let mut done: Vec<usize> = comps[0].clone();
        for comp in &comps[1..] {
            let (b, _) = build_rec(spec, comp, chain)?;
            let (na, nb) = (spec.names(&done).join(","), spec.names(comp).join(","));
            let t = free_product_window(&acc, &b, (&format!("G{{{na}}}"), &format!("G{{{nb}}}")), PointEdges::Bare, spec.window_radius, spec.budget)?;
            let mut all = done.clone();
            all.extend(comp);
            all.sort_unstable();
            let c = combine(&t, spec, &all)?;
            let mut certs = vec![vertex_cert(spec, &done, &c, 0)?];
            if let Some(first_b) = c.tree.edges.iter().find(|e| e.minus == 0).map(|e| e.plus) {
                certs.push(vertex_cert(spec, comp, &c, first_b)?);
            }
            chain.levels.push(level(spec, &all, LevelKind::FreeProduct, None, &c.model, certs));
            acc = c.model.clone();
            comb = Some(c);
            done = all;
        }
        return Ok((acc, comb));
    }
    let (pivot, sd) = split_on(spec, vs)?;
    if !sd.central {
        return Err(GraphError::Unsupported {
            pivot: sd.pivot.clone(),
            reason: "windows for a non-central pivot need the group law of the vertex groups".into(),
        });
    }
    let left: Vec<usize> = vs.iter().copied().filter(|&v| v != pivot).collect();
    let (a, _) = build_rec(spec, &left, chain)?;
    let gv = &spec.bases[pivot];
    let na = format!("G{{{}}}", spec.names(&left).join(","));
    let t = central_window(&a, gv, (&na, &sd.pivot), spec.window_radius, spec.budget)?;
    let c = combine(&t, spec, vs)?;
    let mut certs = vec![vertex_cert(spec, &left, &c, 0)?];
    if c.tree.vertices.len() > 1 {
        let mut star = left.clone();
        star.push(pivot);
        star.sort_unstable();
        certs.push(vertex_cert(spec, &star, &c, 1)?);
    }
    chain.levels.push(level(spec, vs, LevelKind::Amalgam, Some(sd), &c.model, certs));
    Ok((c.model.clone(), Some(c)))
}

/// Builds the structure for the whole graph, certifying every recursion level.
pub fn build(spec: &ProductSpec) -> Result<GraphProduct, GraphError> {
    spec.validate()?;
    let mut chain = CertChain::default();
    let all: Vec<usize> = (0..spec.vertices.len()).collect();
    let (model, combined) = build_rec(spec, &all, &mut chain)?;
    Ok(GraphProduct { model, combined, chain })
}
