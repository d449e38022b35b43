//! Finite hierarchical models: a space, an index lattice, one hyperbolic
//! graph per element, projections and ρ-data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::lattice::{IndexLattice, LatticeJson};
use crate::space::{CoarseMap, FiniteSpace, SpaceJson};

/// `ρ_U^V`, stored under the key `(U, V)` and living in `hyp(U)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rho {
    /// `V ⊊ U` or `V ⋔ U`: a subset of `hyp(U)`.
    Set(Vec<usize>),
    /// `U ⊊ V`: a map `hyp(V) → hyp(U)`.
    Map(CoarseMap),
}

impl Rho {
    pub fn set(&self) -> Option<&[usize]> {
        match self {
            Rho::Set(s) => Some(s),
            Rho::Map(_) => None,
        }
    }

    pub fn map(&self) -> Option<&CoarseMap> {
        match self {
            Rho::Map(m) => Some(m),
            Rho::Set(_) => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantsRecord {
    pub delta: Vec<f64>,
    pub xi: u32,
    pub kappa0: u32,
    pub e_bgi: u32,
    pub lambda_ll: f64,
    pub alpha_pr: u32,
    /// Pairs `(κ, θ_u(κ))`.
    pub theta_u: Vec<(u32, u32)>,
    pub proj_lip: f64,
    pub s0: u32,
    pub surj_radius: u32,
}

impl ConstantsRecord {
    pub fn theta(&self, kappa: u32) -> u32 {
        self.theta_u
            .iter()
            .take_while(|&&(k, _)| k <= kappa)
            .last()
            .map(|&(_, t)| t)
            .unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub struct HHSModel {
    pub name: String,
    pub space: FiniteSpace,
    pub lattice: IndexLattice,
    pub hyp: Vec<FiniteSpace>,
    pub proj: Vec<CoarseMap>,
    pub rho: BTreeMap<(usize, usize), Rho>,
    pub constants: Option<ConstantsRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("lattice: {0}")]
    Lattice(#[from] crate::lattice::LatticeError),
    #[error("space: {0}")]
    Space(#[from] crate::space::SpaceError),
    #[error("unknown label {0}")]
    UnknownLabel(String),
    #[error("malformed model: {0}")]
    Malformed(String),
}

impl HHSModel {
    /// One-element structure `{S}` on `space`, with the identity projection.
    pub fn trivial(name: &str, space: FiniteSpace) -> Self {
        let n = space.len();
        HHSModel {
            name: name.to_string(),
            lattice: IndexLattice::singleton("S"),
            hyp: vec![space.clone()],
            proj: vec![CoarseMap::identity(n)],
            space,
            rho: BTreeMap::new(),
            constants: None,
        }
    }

    /// `space` with the empty index set.
    pub fn bare(name: &str, space: FiniteSpace) -> Self {
        HHSModel {
            name: name.to_string(),
            lattice: IndexLattice::empty(),
            hyp: vec![],
            proj: vec![],
            space,
            rho: BTreeMap::new(),
            constants: None,
        }
    }

    pub fn n_points(&self) -> usize {
        self.space.len()
    }

    pub fn n_elements(&self) -> usize {
        self.lattice.len()
    }

    #[inline]
    pub fn pi(&self, u: usize, x: usize) -> &[usize] {
        self.proj[u].image(x)
    }

    /// `d_U(π_U x, π_U y)`.
    #[inline]
    pub fn du(&self, u: usize, x: usize, y: usize) -> u32 {
        self.hyp[u].set_dist(self.proj[u].image(x), self.proj[u].image(y))
    }

    pub fn rho_set(&self, u: usize, v: usize) -> Option<&[usize]> {
        self.rho.get(&(u, v)).and_then(|r| r.set())
    }

    pub fn rho_map(&self, u: usize, v: usize) -> Option<&CoarseMap> {
        self.rho.get(&(u, v)).and_then(|r| r.map())
    }

    /// `π_U` of a set of points.
    pub fn pi_set(&self, u: usize, xs: &[usize]) -> Vec<usize> {
        self.proj[u].image_of_set(xs)
    }

    /// Structural completeness: table sizes, ρ presence and kinds.
    pub fn structural_problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let l = &self.lattice;
        let n = l.len();
        if self.hyp.len() != n || self.proj.len() != n {
            out.push(format!("{} hyp spaces and {} projections for {} elements", self.hyp.len(), self.proj.len(), n));
            return out;
        }
        for u in 0..n {
            let p = &self.proj[u];
            if p.len() != self.space.len() {
                out.push(format!("projection to {} has {} rows", l.id(u), p.len()));
                continue;
            }
            if p.images.iter().flatten().any(|&y| y >= self.hyp[u].len()) {
                out.push(format!("projection to {} leaves its hyperbolic space", l.id(u)));
            }
        }
        for u in 0..n {
            for v in 0..n {
                if u == v || l.orth(u, v) {
                    if self.rho.contains_key(&(u, v)) {
                        out.push(format!("unexpected ρ for ({}, {})", l.id(u), l.id(v)));
                    }
                    continue;
                }
                match (self.rho.get(&(u, v)), l.properly_nested(u, v)) {
                    (None, _) => out.push(format!("missing ρ_{}^{}", l.id(u), l.id(v))),
                    (Some(Rho::Set(s)), false) => {
                        if s.is_empty() || s.iter().any(|&y| y >= self.hyp[u].len()) {
                            out.push(format!("ρ_{}^{} is empty or out of range", l.id(u), l.id(v)));
                        }
                    }
                    (Some(Rho::Map(m)), true) => {
                        if m.len() != self.hyp[v].len() || m.images.iter().flatten().any(|&y| y >= self.hyp[u].len()) {
                            out.push(format!("ρ_{}^{} has the wrong shape", l.id(u), l.id(v)));
                        }
                    }
                    (Some(_), _) => out.push(format!("ρ_{}^{} has the wrong kind", l.id(u), l.id(v))),
                }
            }
        }
        out
    }

    /// Largest distance from a point of `hyp(U)` to `π_U(X)`.
    pub fn surjectivity_radius(&self) -> u32 {
        (0..self.n_elements())
            .map(|u| {
                let range = self.proj[u].range();
                (0..self.hyp[u].len()).map(|p| self.hyp[u].point_set_dist(p, &range)).max().unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    /// Replaces each `hyp(U)` by the subspace spanned by the `r`-neighbourhood of `π_U(X)`.
    pub fn normalized(&self, r: u32) -> HHSModel {
        let n = self.n_elements();
        let mut keep: Vec<Vec<usize>> = Vec::with_capacity(n);
        let mut newpos: Vec<Vec<usize>> = Vec::with_capacity(n);
        let mut hyp = Vec::with_capacity(n);
        for u in 0..n {
            let k = self.hyp[u].neighborhood(&self.proj[u].range(), r);
            let mut pos = vec![usize::MAX; self.hyp[u].len()];
            for (i, &p) in k.iter().enumerate() {
                pos[p] = i;
            }
            hyp.push(if k.len() == self.hyp[u].len() { self.hyp[u].clone() } else { self.hyp[u].subspace(&k) });
            keep.push(k);
            newpos.push(pos);
        }
        let remap = |u: usize, set: &[usize]| -> Vec<usize> {
            let mut out: Vec<usize> = set.iter().filter_map(|&p| Some(newpos[u][p]).filter(|&q| q != usize::MAX)).collect();
            if out.is_empty() {
                out = self.hyp[u].closest_of_set(set, &keep[u]).into_iter().map(|p| newpos[u][p]).collect();
            }
            out
        };
        let proj = (0..n)
            .map(|u| CoarseMap::new(self.proj[u].images.iter().map(|im| remap(u, im)).collect(), &hyp[u]))
            .collect();
        let rho = self
            .rho
            .iter()
            .map(|(&(u, v), r)| {
                let r2 = match r {
                    Rho::Set(s) => Rho::Set(remap(u, s)),
                    Rho::Map(m) => Rho::Map(CoarseMap::new(keep[v].iter().map(|&p| remap(u, m.image(p))).collect(), &hyp[u])),
                };
                ((u, v), r2)
            })
            .collect();
        HHSModel { name: self.name.clone(), space: self.space.clone(), lattice: self.lattice.clone(), hyp, proj, rho, constants: None }
    }

    /// Restriction to the elements nested in `top`, on the same space.
    pub fn restrict_below(&self, top: usize) -> (HHSModel, Vec<usize>) {
        let (lattice, keep) = self.lattice.restrict_below(top);
        self.restrict_to(lattice, &keep, self.space.clone(), None)
    }

    /// Restriction to a sublattice (`keep[i]` = old index) and optionally to a point subset.
    pub fn restrict_to(
        &self,
        lattice: IndexLattice,
        keep: &[usize],
        space: FiniteSpace,
        points: Option<&[usize]>,
    ) -> (HHSModel, Vec<usize>) {
        let hyp = keep.iter().map(|&u| self.hyp[u].clone()).collect();
        let proj = keep
            .iter()
            .map(|&u| {
                let imgs = match points {
                    Some(ps) => ps.iter().map(|&x| self.proj[u].image(x).to_vec()).collect(),
                    None => self.proj[u].images.clone(),
                };
                CoarseMap::new(imgs, &self.hyp[u])
            })
            .collect();
        let mut rho = BTreeMap::new();
        for (i, &u) in keep.iter().enumerate() {
            for (j, &v) in keep.iter().enumerate() {
                if let Some(r) = self.rho.get(&(u, v)) {
                    rho.insert((i, j), r.clone());
                }
            }
        }
        let m = HHSModel { name: self.name.clone(), space, lattice, hyp, proj, rho, constants: None };
        (m, keep.to_vec())
    }

    /// Coordinates of a point: `π_U(x)` for every `U`.
    pub fn coords(&self, x: usize) -> Vec<Vec<usize>> {
        (0..self.n_elements()).map(|u| self.pi(u, x).to_vec()).collect()
    }

    pub fn to_json(&self) -> ModelJson {
        let l = &self.lattice;
        let lab = |u: usize, s: &[usize]| s.iter().map(|&p| self.hyp[u].label(p).to_string()).collect::<Vec<_>>();
        ModelJson {
            name: self.name.clone(),
            space: self.space.to_json(),
            lattice: l.to_json(),
            hyp: (0..l.len()).map(|u| (l.id(u).to_string(), self.hyp[u].to_json())).collect(),
            proj: (0..l.len()).map(|u| (l.id(u).to_string(), self.proj[u].images.iter().map(|im| lab(u, im)).collect())).collect(),
            rho: self
                .rho
                .iter()
                .map(|(&(u, v), r)| RhoJson {
                    at: l.id(u).to_string(),
                    from: l.id(v).to_string(),
                    set: r.set().map(|s| lab(u, s)),
                    map: r.map().map(|m| m.images.iter().map(|im| lab(u, im)).collect()),
                })
                .collect(),
        }
    }

    pub fn from_json(j: &ModelJson) -> Result<Self, ModelError> {
        let space = FiniteSpace::from_json(&j.space)?;
        let lattice = IndexLattice::from_json(&j.lattice)?;
        let n = lattice.len();
        let elem = |id: &str| lattice.index_of(id).ok_or_else(|| ModelError::UnknownLabel(id.to_string()));
        let mut hyp: Vec<Option<FiniteSpace>> = vec![None; n];
        for (id, s) in &j.hyp {
            hyp[elem(id)?] = Some(FiniteSpace::from_json(s)?);
        }
        let hyp: Vec<FiniteSpace> = hyp
            .into_iter()
            .enumerate()
            .map(|(u, h)| h.ok_or_else(|| ModelError::Malformed(format!("no hyperbolic space for {}", lattice.id(u)))))
            .collect::<Result<_, _>>()?;
        let pt = |u: usize, s: &str| {
            hyp[u].labels().iter().position(|l| l == s).ok_or_else(|| ModelError::UnknownLabel(s.to_string()))
        };
        let pts = |u: usize, s: &[String]| s.iter().map(|x| pt(u, x)).collect::<Result<Vec<_>, _>>();
        let mut proj: Vec<Option<CoarseMap>> = vec![None; n];
        for (id, rows) in &j.proj {
            let u = elem(id)?;
            if rows.len() != space.len() {
                return Err(ModelError::Malformed(format!("projection to {id} has {} rows", rows.len())));
            }
            let imgs = rows.iter().map(|r| pts(u, r)).collect::<Result<Vec<_>, _>>()?;
            if imgs.iter().any(|i| i.is_empty()) {
                return Err(ModelError::Malformed(format!("empty projection image in {id}")));
            }
            proj[u] = Some(CoarseMap::new(imgs, &hyp[u]));
        }
        let proj: Vec<CoarseMap> = proj
            .into_iter()
            .enumerate()
            .map(|(u, p)| p.ok_or_else(|| ModelError::Malformed(format!("no projection for {}", lattice.id(u)))))
            .collect::<Result<_, _>>()?;
        let mut rho = BTreeMap::new();
        for r in &j.rho {
            let (u, v) = (elem(&r.at)?, elem(&r.from)?);
            let val = match (&r.set, &r.map) {
                (Some(s), None) => Rho::Set(pts(u, s)?),
                (None, Some(rows)) => {
                    let imgs = rows.iter().map(|row| pts(u, row)).collect::<Result<Vec<_>, _>>()?;
                    if imgs.iter().any(|i| i.is_empty()) {
                        return Err(ModelError::Malformed(format!("empty ρ image at {}", r.at)));
                    }
                    Rho::Map(CoarseMap::new(imgs, &hyp[u]))
                }
                _ => return Err(ModelError::Malformed(format!("ρ entry ({}, {}) needs exactly one of set/map", r.at, r.from))),
            };
            rho.insert((u, v), val);
        }
        Ok(HHSModel { name: j.name.clone(), space, lattice, hyp, proj, rho, constants: None })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RhoJson {
    /// Element whose hyperbolic space carries the data.
    pub at: String,
    pub from: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub set: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub map: Option<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModelJson {
    pub name: String,
    pub space: SpaceJson,
    pub lattice: LatticeJson,
    pub hyp: BTreeMap<String, SpaceJson>,
    pub proj: BTreeMap<String, Vec<Vec<String>>>,
    pub rho: Vec<RhoJson>,
}
