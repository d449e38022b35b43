//! Index maps between lattices: injectivity, relation preservation, fullness
//! and compatibility with wedges and joins.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::lattice::IndexLattice;
use crate::report::{Rule, ValidationReport};

/// Element table from a source lattice into a target lattice.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexMap {
    pub map: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HieroError {
    #[error("domain mismatch: first map lands in {0} elements, second expects {1}")]
    DomainMismatch(usize, usize),
    #[error("unknown element {0}")]
    UnknownElement(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IndexMapJson {
    pub map: Vec<(String, String)>,
}

impl IndexMap {
    pub fn identity(n: usize) -> Self {
        IndexMap { map: (0..n).collect() }
    }

    pub fn apply(&self, u: usize) -> usize {
        self.map[u]
    }

    /// Preimage of a target element, if any.
    pub fn preimage(&self, t: usize) -> Option<usize> {
        self.map.iter().position(|&x| x == t)
    }

    pub fn from_json(j: &IndexMapJson, source: &IndexLattice, target: &IndexLattice) -> Result<Self, HieroError> {
        let mut map = vec![usize::MAX; source.len()];
        for (a, b) in &j.map {
            let i = source.index_of(a).ok_or_else(|| HieroError::UnknownElement(a.clone()))?;
            let k = target.index_of(b).ok_or_else(|| HieroError::UnknownElement(b.clone()))?;
            map[i] = k;
        }
        if let Some(i) = map.iter().position(|&x| x == usize::MAX) {
            return Err(HieroError::UnknownElement(source.id(i).to_string()));
        }
        Ok(IndexMap { map })
    }

    pub fn to_json(&self, source: &IndexLattice, target: &IndexLattice) -> IndexMapJson {
        IndexMapJson {
            map: self.map.iter().enumerate().map(|(i, &k)| (source.id(i).to_string(), target.id(k).to_string())).collect(),
        }
    }

    /// `self` then `next`.
    pub fn compose(&self, next: &IndexMap, next_source_len: usize) -> Result<IndexMap, HieroError> {
        if let Some(&bad) = self.map.iter().find(|&&x| x >= next_source_len) {
            return Err(HieroError::DomainMismatch(bad + 1, next_source_len));
        }
        Ok(IndexMap { map: self.map.iter().map(|&x| next.map[x]).collect() })
    }
}

pub fn verify_index_map(m: &IndexMap, source: &IndexLattice, target: &IndexLattice) -> ValidationReport {
    let mut r = ValidationReport::default();
    if m.map.len() != source.len() {
        r.push(Rule::DomainMismatch, vec![], format!("{} entries for {} elements", m.map.len(), source.len()));
        return r;
    }
    let mut seen = BTreeSet::new();
    for (i, &t) in m.map.iter().enumerate() {
        if t >= target.len() {
            r.push(Rule::DomainMismatch, vec![source.id(i).to_string()], "image out of range".into());
            return r;
        }
        if !seen.insert(t) {
            r.push(Rule::NotInjective, vec![source.id(i).to_string(), target.id(t).to_string()], String::new());
        }
    }
    for a in 0..source.len() {
        for b in a + 1..source.len() {
            let (k, k2) = (source.relation(a, b), target.relation(m.map[a], m.map[b]));
            if k != k2 {
                r.push(
                    Rule::RelationChanged,
                    vec![source.id(a).to_string(), source.id(b).to_string()],
                    format!("{k:?} -> {k2:?}"),
                );
            }
        }
    }
    r
}

/// Image must be exactly the elements nested in the image of the maximal element.
pub fn verify_fullness(m: &IndexMap, source: &IndexLattice, target: &IndexLattice) -> ValidationReport {
    let mut r = ValidationReport::default();
    if source.is_empty() {
        return r;
    }
    let top = m.map[source.maximal()];
    let image: BTreeSet<usize> = m.map.iter().copied().collect();
    for t in target.below(top) {
        if !image.contains(&t) {
            r.push(Rule::MissingPreimage, vec![target.id(t).to_string()], String::new());
        }
    }
    for &t in &image {
        if !target.nested(t, top) {
            r.push(Rule::MissingPreimage, vec![target.id(t).to_string()], "image escapes the image of the maximal element".into());
        }
    }
    r
}

pub fn verify_wedge_join_commute(m: &IndexMap, source: &IndexLattice, target: &IndexLattice) -> ValidationReport {
    let mut r = ValidationReport::default();
    for a in 0..source.len() {
        for b in a..source.len() {
            let (ta, tb) = (m.map[a], m.map[b]);
            let ok = match (source.wedge(a, b), target.wedge(ta, tb)) {
                (Ok(w), Ok(tw)) => w.map(|x| m.map[x]) == tw,
                _ => false,
            };
            if !ok {
                r.push(Rule::WedgeNotPreserved, vec![source.id(a).to_string(), source.id(b).to_string()], String::new());
            }
            let ok = match (source.join(a, b), target.join(ta, tb)) {
                (Ok(j), Ok(tj)) => m.map[j] == tj,
                _ => false,
            };
            if !ok {
                r.push(Rule::JoinNotPreserved, vec![source.id(a).to_string(), source.id(b).to_string()], String::new());
            }
        }
    }
    r
}

/// Composition with the composed map re-verified for fullness.
pub fn compose_verified(
    m1: &IndexMap,
    m2: &IndexMap,
    a: &IndexLattice,
    b: &IndexLattice,
    c: &IndexLattice,
) -> Result<(IndexMap, ValidationReport), HieroError> {
    if m1.map.iter().any(|&x| x >= b.len()) || m2.map.len() != b.len() {
        return Err(HieroError::DomainMismatch(m1.map.iter().max().map_or(0, |x| x + 1), m2.map.len()));
    }
    let m = m1.compose(m2, b.len())?;
    let mut rep = verify_index_map(&m, a, c);
    let full1 = verify_fullness(m1, a, b).is_ok();
    let full2 = verify_fullness(m2, b, c).is_ok();
    let full = verify_fullness(&m, a, c);
    if full1 && full2 {
        rep.extend(full);
    }
    Ok((m, rep))
}
