//! Finite index sets with nesting, orthogonality and transversality.
//!
//! Elements are dense indices `0..n` with string labels. The relation table is
//! stored per ordered pair, wedges, joins and orthogonal containers are filled
//! in once at construction.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::report::{Rule, ValidationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationKind {
    NestedIn,
    Contains,
    Orthogonal,
    Transverse,
    Equal,
}

impl RelationKind {
    pub fn inverse(self) -> RelationKind {
        match self {
            RelationKind::NestedIn => RelationKind::Contains,
            RelationKind::Contains => RelationKind::NestedIn,
            k => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("relation between {0} and {1} is not listed")]
    MissingRelation(String, String),
    #[error("unknown element {0}")]
    UnknownElement(String),
    #[error("duplicate element {0}")]
    DuplicateElement(String),
    #[error("pair ({0},{1}) listed twice with different kinds")]
    DuplicateRelation(String, String),
    #[error("self relation on {0}")]
    SelfRelation(String),
    #[error("empty index set")]
    Empty,
    #[error("{a} and {b} have incomparable extremal bounds {candidates:?}")]
    NotALattice { a: String, b: String, candidates: Vec<String> },
}

/// Wedge result; `None` is the empty element.
pub type Meet = Option<usize>;

#[derive(Clone, Debug)]
enum Cached {
    Ok(Meet),
    Ambiguous(Vec<usize>),
}

#[derive(Clone, Debug)]
pub struct IndexLattice {
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
    maximal: usize,
    rel: Vec<Vec<RelationKind>>,
    reflexive_orth: BTreeSet<usize>,
    containers: BTreeMap<(usize, usize), usize>,
    container_failures: Vec<(usize, usize, Vec<usize>)>,
    wedge: Vec<Vec<Cached>>,
    join: Vec<Vec<Cached>>,
}

/// Serialized form: nesting triples are oriented `a ⊑ b`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LatticeJson {
    pub elements: Vec<String>,
    pub maximal: String,
    pub relations: Vec<(String, String, String)>,
}

impl IndexLattice {
    /// Builds a lattice from a relation function on ordered index pairs.
    /// `f(i, j)` is only called for `i != j`.
    pub fn from_fn(
        ids: Vec<String>,
        maximal: usize,
        f: impl Fn(usize, usize) -> RelationKind,
    ) -> Result<Self, LatticeError> {
        let n = ids.len();
        let rel = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { RelationKind::Equal } else { f(i, j) })
                    .collect()
            })
            .collect();
        Self::from_matrix(ids, maximal, rel, BTreeSet::new())
    }

    fn from_matrix(
        ids: Vec<String>,
        maximal: usize,
        rel: Vec<Vec<RelationKind>>,
        reflexive_orth: BTreeSet<usize>,
    ) -> Result<Self, LatticeError> {
        if ids.is_empty() {
            return Err(LatticeError::Empty);
        }
        let mut index = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(LatticeError::DuplicateElement(id.clone()));
            }
        }
        let mut l = IndexLattice {
            ids,
            index,
            maximal,
            rel,
            reflexive_orth,
            containers: BTreeMap::new(),
            container_failures: Vec::new(),
            wedge: Vec::new(),
            join: Vec::new(),
        };
        l.fill_caches();
        Ok(l)
    }

    /// The empty index set, carried by bounded spaces such as the point edges of free products.
    pub fn empty() -> Self {
        IndexLattice {
            ids: Vec::new(),
            index: BTreeMap::new(),
            maximal: 0,
            rel: Vec::new(),
            reflexive_orth: BTreeSet::new(),
            containers: BTreeMap::new(),
            container_failures: Vec::new(),
            wedge: Vec::new(),
            join: Vec::new(),
        }
    }

    pub fn from_relations(
        elements: &[String],
        maximal: &str,
        relations: &[(String, String, RelationKind)],
    ) -> Result<Self, LatticeError> {
        let n = elements.len();
        let mut index = BTreeMap::new();
        for (i, e) in elements.iter().enumerate() {
            if index.insert(e.clone(), i).is_some() {
                return Err(LatticeError::DuplicateElement(e.clone()));
            }
        }
        let look = |s: &str| index.get(s).copied().ok_or_else(|| LatticeError::UnknownElement(s.to_string()));
        let max = look(maximal)?;
        let mut explicit: Vec<Vec<Option<RelationKind>>> = vec![vec![None; n]; n];
        let mut reflexive = BTreeSet::new();
        for (a, b, k) in relations {
            let (i, j) = (look(a)?, look(b)?);
            if i == j {
                if *k == RelationKind::Orthogonal {
                    reflexive.insert(i);
                    continue;
                }
                return Err(LatticeError::SelfRelation(a.clone()));
            }
            match explicit[i][j] {
                Some(old) if old != *k => return Err(LatticeError::DuplicateRelation(a.clone(), b.clone())),
                _ => explicit[i][j] = Some(*k),
            }
        }
        let mut rel = vec![vec![RelationKind::Equal; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                rel[i][j] = match (explicit[i][j], explicit[j][i]) {
                    (Some(k), _) => k,
                    (None, Some(k)) => k.inverse(),
                    (None, None) => {
                        return Err(LatticeError::MissingRelation(elements[i].clone(), elements[j].clone()))
                    }
                };
            }
        }
        Self::from_matrix(elements.to_vec(), max, rel, reflexive)
    }

    pub fn from_json(j: &LatticeJson) -> Result<Self, LatticeError> {
        if j.elements.is_empty() && j.relations.is_empty() && j.maximal.is_empty() {
            return Ok(Self::empty());
        }
        let mut rels = Vec::with_capacity(j.relations.len());
        for (a, b, k) in &j.relations {
            let kind = match k.as_str() {
                "nested" => RelationKind::NestedIn,
                "orth" => RelationKind::Orthogonal,
                "trans" => RelationKind::Transverse,
                _ => return Err(LatticeError::UnknownElement(format!("relation kind {k}"))),
            };
            rels.push((a.clone(), b.clone(), kind));
        }
        Self::from_relations(&j.elements, &j.maximal, &rels)
    }

    pub fn to_json(&self) -> LatticeJson {
        let mut relations = Vec::new();
        for i in 0..self.len() {
            for j in 0..self.len() {
                let name = match self.rel[i][j] {
                    RelationKind::NestedIn => "nested",
                    RelationKind::Orthogonal if i < j => "orth",
                    RelationKind::Transverse if i < j => "trans",
                    _ => continue,
                };
                relations.push((self.ids[i].clone(), self.ids[j].clone(), name.to_string()));
            }
        }
        LatticeJson { elements: self.ids.clone(), maximal: self.ids.get(self.maximal).cloned().unwrap_or_default(), relations }
    }

    /// The one-element lattice `{label}`.
    pub fn singleton(label: &str) -> Self {
        Self::from_fn(vec![label.to_string()], 0, |_, _| unreachable!()).expect("singleton")
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// The ⊑-maximal element; meaningless on the empty lattice.
    pub fn maximal(&self) -> usize {
        self.maximal
    }

    pub fn relation(&self, a: usize, b: usize) -> RelationKind {
        self.rel[a][b]
    }

    /// `a ⊑ b`, reflexive.
    pub fn nested(&self, a: usize, b: usize) -> bool {
        matches!(self.rel[a][b], RelationKind::NestedIn | RelationKind::Equal)
    }

    /// `a ⊊ b`.
    pub fn properly_nested(&self, a: usize, b: usize) -> bool {
        self.rel[a][b] == RelationKind::NestedIn
    }

    pub fn orth(&self, a: usize, b: usize) -> bool {
        self.rel[a][b] == RelationKind::Orthogonal
    }

    pub fn transverse(&self, a: usize, b: usize) -> bool {
        self.rel[a][b] == RelationKind::Transverse
    }

    /// `𝔖_u`: everything nested in `u`, in index order.
    pub fn below(&self, u: usize) -> Vec<usize> {
        (0..self.len()).filter(|&w| self.nested(w, u)).collect()
    }

    fn extremal(&self, set: &[usize], lower: bool) -> Vec<usize> {
        set.iter()
            .copied()
            .filter(|&c| {
                !set.iter().any(|&d| {
                    if lower {
                        self.properly_nested(c, d)
                    } else {
                        self.properly_nested(d, c)
                    }
                })
            })
            .collect()
    }

    fn fill_caches(&mut self) {
        let n = self.len();
        let mut wedge = vec![vec![Cached::Ok(None); n]; n];
        let mut join = vec![vec![Cached::Ok(None); n]; n];
        for a in 0..n {
            for b in a..n {
                let w = if self.orth(a, b) {
                    Cached::Ok(None)
                } else {
                    let common: Vec<usize> = (0..n).filter(|&w| self.nested(w, a) && self.nested(w, b)).collect();
                    match self.extremal(&common, true).as_slice() {
                        [] => Cached::Ok(None),
                        [m] => Cached::Ok(Some(*m)),
                        many => Cached::Ambiguous(many.to_vec()),
                    }
                };
                let upper: Vec<usize> = (0..n).filter(|&w| self.nested(a, w) && self.nested(b, w)).collect();
                let j = match self.extremal(&upper, false).as_slice() {
                    [] => Cached::Ok(None),
                    [m] => Cached::Ok(Some(*m)),
                    many => Cached::Ambiguous(many.to_vec()),
                };
                wedge[a][b] = w.clone();
                wedge[b][a] = w;
                join[a][b] = j.clone();
                join[b][a] = j;
            }
        }
        self.wedge = wedge;
        self.join = join;

        for z in 0..n {
            for u in 0..n {
                if !self.nested(u, z) {
                    continue;
                }
                let partners: Vec<usize> = (0..n).filter(|&v| self.nested(v, z) && self.orth(v, u)).collect();
                if partners.is_empty() {
                    continue;
                }
                let cands: Vec<usize> = (0..n)
                    .filter(|&w| self.properly_nested(w, z) && partners.iter().all(|&p| self.nested(p, w)))
                    .collect();
                match self.extremal(&cands, false).as_slice() {
                    [c] => {
                        self.containers.insert((z, u), *c);
                    }
                    other => self.container_failures.push((z, u, other.to_vec())),
                }
            }
        }
    }

    fn ambiguity(&self, a: usize, b: usize, c: &[usize]) -> LatticeError {
        LatticeError::NotALattice {
            a: self.ids[a].clone(),
            b: self.ids[b].clone(),
            candidates: c.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }

    /// Unique maximal common lower bound, `None` for the empty element.
    pub fn wedge(&self, a: usize, b: usize) -> Result<Meet, LatticeError> {
        match &self.wedge[a][b] {
            Cached::Ok(m) => Ok(*m),
            Cached::Ambiguous(c) => Err(self.ambiguity(a, b, c)),
        }
    }

    /// Wedge extended to the empty element.
    pub fn wedge_opt(&self, a: Meet, b: Meet) -> Result<Meet, LatticeError> {
        match (a, b) {
            (Some(a), Some(b)) => self.wedge(a, b),
            _ => Ok(None),
        }
    }

    /// Unique minimal common upper bound.
    pub fn join(&self, a: usize, b: usize) -> Result<usize, LatticeError> {
        match &self.join[a][b] {
            Cached::Ok(Some(m)) => Ok(*m),
            Cached::Ok(None) => Err(self.ambiguity(a, b, &[])),
            Cached::Ambiguous(c) => Err(self.ambiguity(a, b, c)),
        }
    }

    /// Join of a nonempty family.
    pub fn join_all(&self, items: &[usize]) -> Result<Option<usize>, LatticeError> {
        let mut it = items.iter();
        let Some(&first) = it.next() else { return Ok(None) };
        let mut acc = first;
        for &x in it {
            acc = self.join(acc, x)?;
        }
        Ok(Some(acc))
    }

    /// `cont⊥^z u`, when `u ⊑ z` has an orthogonal partner below `z`.
    pub fn container_in(&self, z: usize, u: usize) -> Option<usize> {
        self.containers.get(&(z, u)).copied()
    }

    /// `cont⊥ u` relative to the maximal element.
    pub fn container(&self, u: usize) -> Option<usize> {
        self.container_in(self.maximal, u)
    }

    pub fn containers(&self) -> &BTreeMap<(usize, usize), usize> {
        &self.containers
    }

    /// Length of the longest ⊑-chain.
    pub fn complexity(&self) -> usize {
        let n = self.len();
        let mut order: Vec<usize> = (0..n).collect();
        let below_count = |u: usize| (0..n).filter(|&w| self.properly_nested(w, u)).count();
        order.sort_by_key(|&u| below_count(u));
        let mut chain = vec![1usize; n];
        for &u in &order {
            for w in 0..n {
                if self.properly_nested(w, u) && below_count(w) < below_count(u) {
                    chain[u] = chain[u].max(chain[w] + 1);
                }
            }
        }
        chain.into_iter().max().unwrap_or(0)
    }

    /// Sublattice on the elements nested in `top`, keeping labels.
    /// Returns the lattice and the map new index → old index.
    pub fn restrict_below(&self, top: usize) -> (IndexLattice, Vec<usize>) {
        let keep = self.below(top);
        let ids = keep.iter().map(|&i| self.ids[i].clone()).collect();
        let new_max = keep.iter().position(|&i| i == top).expect("top kept");
        let l = IndexLattice::from_fn(ids, new_max, |a, b| self.rel[keep[a]][keep[b]]).expect("restriction");
        (l, keep)
    }

    /// Structural rules: order axioms, orthogonality rules, containers.
    pub fn validate_relations(&self) -> ValidationReport {
        let n = self.len();
        let mut r = ValidationReport::default();
        let name = |i: usize| self.ids[i].clone();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (a, b) = (self.rel[i][j], self.rel[j][i]);
                if a.inverse() != b && i < j {
                    let rule = if a == RelationKind::Orthogonal || b == RelationKind::Orthogonal {
                        Rule::OrthogonalityNotSymmetric
                    } else {
                        Rule::InconsistentOrientation
                    };
                    r.push(rule, vec![name(i), name(j)], format!("{a:?} vs {b:?}"));
                }
            }
        }
        for &i in &self.reflexive_orth {
            r.push(Rule::OrthogonalityReflexive, vec![name(i)], String::new());
        }
        for a in 0..n {
            for b in 0..n {
                if !self.properly_nested(a, b) {
                    continue;
                }
                for c in 0..n {
                    if self.properly_nested(b, c) && !self.properly_nested(a, c) {
                        r.push(Rule::NestingNotTransitive, vec![name(a), name(b), name(c)], String::new());
                    }
                    if self.orth(b, c) && !self.orth(a, c) {
                        r.push(Rule::OrthogonalityInheritance, vec![name(a), name(b), name(c)], String::new());
                    }
                }
            }
        }
        for u in 0..n {
            if u != self.maximal && !self.properly_nested(u, self.maximal) {
                r.push(Rule::MaximalNotTop, vec![name(self.maximal), name(u)], String::new());
            }
        }
        for (z, u, cands) in &self.container_failures {
            let mut w = vec![name(*z), name(*u)];
            w.extend(cands.iter().map(|&c| name(c)));
            let note = if cands.is_empty() { "no proper container" } else { "several minimal containers" };
            r.push(Rule::ContainerMissing, w, note.to_string());
        }
        r
    }

    /// Cross-checks externally given containers `(z, u, c)` against the computed ones.
    pub fn check_given_containers(&self, given: &[(usize, usize, usize)]) -> ValidationReport {
        let mut r = ValidationReport::default();
        for &(z, u, c) in given {
            if self.container_in(z, u) != Some(c) {
                r.push(
                    Rule::ContainerMismatch,
                    vec![self.ids[z].clone(), self.ids[u].clone(), self.ids[c].clone()],
                    format!("computed {:?}", self.container_in(z, u).map(|x| self.ids[x].clone())),
                );
            }
        }
        r
    }

    /// Axioms ∧1 through ∧5 for the computed wedge, over all triples.
    pub fn verify_intersection_property(&self) -> ValidationReport {
        let n = self.len();
        let mut r = ValidationReport::default();
        let name = |i: usize| self.ids[i].clone();
        let opt_name = |m: Meet| m.map(|i| self.ids[i].clone()).unwrap_or_else(|| "∅".into());
        let mut ok = true;
        for a in 0..n {
            for b in a..n {
                if let Err(LatticeError::NotALattice { candidates, .. }) = self.wedge(a, b) {
                    let mut w = vec![name(a), name(b)];
                    w.extend(candidates);
                    r.push(Rule::WedgeNotUnique, w, String::new());
                    ok = false;
                }
            }
        }
        if !ok {
            return r;
        }
        for a in 0..n {
            if self.wedge_opt(Some(a), None) != Ok(None) || self.wedge_opt(None, Some(a)) != Ok(None) {
                r.push(Rule::Wedge1, vec![name(a)], String::new());
            }
            for b in 0..n {
                let ab = self.wedge(a, b).unwrap();
                if ab != self.wedge(b, a).unwrap() {
                    r.push(Rule::Wedge2, vec![name(a), name(b)], String::new());
                }
                if let Some(m) = ab {
                    if !self.nested(m, a) || !self.nested(m, b) {
                        r.push(Rule::Wedge4, vec![name(a), name(b), name(m)], String::new());
                    }
                }
                for c in 0..n {
                    let left = self.wedge_opt(ab, Some(c)).unwrap();
                    let right = self.wedge_opt(Some(a), self.wedge(b, c).unwrap()).unwrap();
                    if left != right {
                        r.push(
                            Rule::Wedge3,
                            vec![name(a), name(b), name(c)],
                            format!("{} vs {}", opt_name(left), opt_name(right)),
                        );
                    }
                    if self.nested(c, a) && self.nested(c, b) && !ab.is_some_and(|m| self.nested(c, m)) {
                        r.push(Rule::Wedge5, vec![name(a), name(b), name(c)], String::new());
                    }
                }
            }
        }
        r
    }

    /// Clean containers, `cont⊥^U V = U ∧ cont⊥V`, and join-orthogonality closure.
    pub fn verify_clean_containers(&self) -> ValidationReport {
        let n = self.len();
        let mut r = ValidationReport::default();
        let name = |i: usize| self.ids[i].clone();
        for (&(z, u), &c) in &self.containers {
            if !self.orth(u, c) {
                r.push(Rule::ContainerNotClean, vec![name(z), name(u), name(c)], String::new());
            }
        }
        for u in 0..n {
            for v in 0..n {
                let lhs = self.container_in(u, v);
                let rhs = match self.container(v) {
                    Some(c) => match self.wedge(u, c) {
                        Ok(m) => m,
                        Err(_) => continue,
                    },
                    None => None,
                };
                if !self.nested(v, u) {
                    continue;
                }
                if lhs != rhs {
                    r.push(
                        Rule::ContainerFormula,
                        vec![name(u), name(v)],
                        format!(
                            "{} vs {}",
                            lhs.map(name).unwrap_or_else(|| "∅".into()),
                            rhs.map(name).unwrap_or_else(|| "∅".into())
                        ),
                    );
                }
            }
        }
        for w in 0..n {
            let orth: Vec<usize> = (0..n).filter(|&x| self.orth(x, w)).collect();
            for (i, &a) in orth.iter().enumerate() {
                for &b in &orth[i..] {
                    match self.join(a, b) {
                        Ok(j) if self.orth(j, w) => {}
                        _ => r.push(Rule::JoinOrthogonality, vec![name(a), name(b), name(w)], String::new()),
                    }
                }
            }
        }
        r
    }

    /// Brute-force wedge over common lower bounds, independent of the cache.
    pub fn brute_wedge(&self, a: usize, b: usize) -> Result<Meet, Vec<usize>> {
        let common: Vec<usize> = (0..self.len()).filter(|&w| self.nested(w, a) && self.nested(w, b)).collect();
        match self.extremal(&common, true).as_slice() {
            [] => Ok(None),
            [m] => Ok(Some(*m)),
            many => Err(many.to_vec()),
        }
    }

    /// Hasse diagram in DOT.
    pub fn to_dot(&self, name: &str) -> String {
        let mut s = format!("digraph \"{name}\" {{\n  rankdir=BT;\n");
        for (i, id) in self.ids.iter().enumerate() {
            s.push_str(&format!("  n{i} [label=\"{}\"];\n", id.replace('"', "'")));
        }
        for a in 0..self.len() {
            for b in 0..self.len() {
                if self.properly_nested(a, b)
                    && !(0..self.len()).any(|c| self.properly_nested(a, c) && self.properly_nested(c, b))
                {
                    s.push_str(&format!("  n{a} -> n{b};\n"));
                }
            }
        }
        for a in 0..self.len() {
            for b in a + 1..self.len() {
                if self.orth(a, b) {
                    s.push_str(&format!("  n{a} -> n{b} [dir=none, style=dashed, constraint=false];\n"));
                }
            }
        }
        s.push_str("}\n");
        s
    }
}
