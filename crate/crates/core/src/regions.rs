//! Consistent tuples and their realization, product regions, gates,
//! hierarchical quasiconvexity, supports, concretization and the distance formula.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audit::{audit_axioms, theta_table};
use crate::hiero::{IndexMap, IndexMapJson};
use crate::lattice::LatticeError;
use crate::model::{ConstantsRecord, HHSModel, ModelError};
use crate::space::{CoarseMap, FiniteSpace, INF};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegionError {
    #[error("tuple is not {kappa}-consistent: {witness:?}")]
    NoConsistentTuple { kappa: u32, witness: Vec<String> },
    #[error("subset is not hierarchically quasiconvex (k0 = {k0}, worst k({kappa}) = {k})")]
    NotHQC { k0: u32, kappa: u32, k: u32 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("empty subset")]
    Empty,
}

/// One coordinate set per element, in `hyp(U)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistentTuple {
    pub coords: Vec<Vec<usize>>,
    pub kappa: u32,
}

impl ConsistentTuple {
    pub fn of_point(m: &HHSModel, x: usize, kappa: u32) -> Self {
        ConsistentTuple { coords: m.coords(x), kappa }
    }
}

/// First violated consistency inequality, if any.
pub fn consistency_violation(m: &HHSModel, t: &ConsistentTuple) -> Option<Vec<String>> {
    let l = &m.lattice;
    let k = l.len();
    let id = |u: usize| l.id(u).to_string();
    for u in 0..k {
        if m.hyp[u].diam(&t.coords[u]) > t.kappa {
            return Some(vec!["diameter".into(), id(u)]);
        }
    }
    for u in 0..k {
        for v in 0..k {
            if l.transverse(u, v) && u < v {
                let a = m.hyp[u].set_dist(&t.coords[u], m.rho_set(u, v).unwrap());
                let b = m.hyp[v].set_dist(&t.coords[v], m.rho_set(v, u).unwrap());
                if a.min(b) > t.kappa {
                    return Some(vec!["transverse".into(), id(u), id(v)]);
                }
            }
            if l.properly_nested(v, u) {
                let a = m.hyp[u].set_dist(&t.coords[u], m.rho_set(u, v).unwrap());
                let img = m.rho_map(v, u).unwrap().image_of_set(&t.coords[u]);
                let b = m.hyp[v].diam_union(&t.coords[v], &img);
                if a.min(b) > t.kappa {
                    return Some(vec!["nested".into(), id(v), id(u)]);
                }
            }
        }
    }
    None
}

/// Largest coordinate deviation of `x` from the tuple.
pub fn tuple_defect(m: &HHSModel, coords: &[Vec<usize>], x: usize) -> u32 {
    (0..m.n_elements()).map(|u| m.hyp[u].set_dist(m.pi(u, x), &coords[u])).max().unwrap_or(0)
}

fn minimax_over(m: &HHSModel, coords: &[Vec<usize>], pts: &[usize]) -> (usize, u32) {
    pts.par_iter()
        .map(|&x| (tuple_defect(m, coords, x), x))
        .min()
        .map(|(d, x)| (x, d))
        .expect("nonempty point set")
}

/// Point minimizing the largest coordinate deviation, ties to the least vertex.
pub fn realize(m: &HHSModel, t: &ConsistentTuple) -> Result<(usize, u32), RegionError> {
    if let Some(w) = consistency_violation(m, t) {
        return Err(RegionError::NoConsistentTuple { kappa: t.kappa, witness: w });
    }
    let all: Vec<usize> = (0..m.n_points()).collect();
    Ok(minimax_over(m, &t.coords, &all))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductRegion {
    pub element: String,
    pub kappa: u32,
    /// The parallel copy `F_U × {e}` through the base point.
    pub f: Vec<usize>,
    /// The copy `{f} × E_U` through the base point.
    pub e: Vec<usize>,
    pub p: Vec<usize>,
    /// All parallel copies of `F_U`, ordered by least point.
    pub copies: Vec<Vec<usize>>,
    pub base: usize,
}

/// `P_U` as the points whose coordinates above or transverse to `U` sit
/// within `κ` of the ρ-sets, split into parallel copies by coordinates.
pub fn product_region(m: &HHSModel, u: usize, kappa: u32) -> ProductRegion {
    let l = &m.lattice;
    let k = l.len();
    let pinned: Vec<usize> = (0..k).filter(|&w| l.properly_nested(u, w) || l.transverse(u, w)).collect();
    let p: Vec<usize> = (0..m.n_points())
        .filter(|&x| pinned.iter().all(|&w| m.hyp[w].set_dist(m.pi(w, x), m.rho_set(w, u).unwrap()) <= kappa))
        .collect();
    let orth: Vec<usize> = (0..k).filter(|&v| l.orth(u, v)).collect();
    let nested: Vec<usize> = (0..k).filter(|&v| l.nested(v, u)).collect();
    let key = |x: usize, els: &[usize]| -> Vec<Vec<usize>> { els.iter().map(|&v| m.pi(v, x).to_vec()).collect() };
    let mut by_orth: BTreeMap<Vec<Vec<usize>>, Vec<usize>> = BTreeMap::new();
    for &x in &p {
        by_orth.entry(key(x, &orth)).or_default().push(x);
    }
    let mut copies: Vec<Vec<usize>> = by_orth.into_values().collect();
    copies.sort();
    let base = p.first().copied().unwrap_or(0);
    let f = copies.iter().find(|c| c.contains(&base)).cloned().unwrap_or_default();
    let bkey = key(base, &nested);
    let e = p.iter().copied().filter(|&x| key(x, &nested) == bkey).collect();
    ProductRegion { element: l.id(u).to_string(), kappa, f, e, p, copies, base }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HqReport {
    pub k0: u32,
    /// Pairs `(κ, k(κ))`.
    pub kfun: Vec<(u32, u32)>,
    /// Allowed value of `k(κ)` at each row of `kfun`.
    pub bound: Vec<u32>,
    pub tolerance: u32,
    pub pass: bool,
}

impl HqReport {
    /// First row `(κ, k(κ))` above its bound.
    pub fn worst(&self) -> Option<(u32, u32)> {
        self.kfun.iter().zip(&self.bound).find(|(&(_, v), &b)| v > b).map(|(&r, _)| r)
    }

    pub fn k(&self, kappa: u32) -> u32 {
        self.kfun.iter().take_while(|&&(c, _)| c <= kappa).last().map(|&(_, v)| v).unwrap_or(0)
    }
}

pub const HQ_TOLERANCE: u32 = 2;

/// Quasiconvexity of every `π_U(Y)` and the realization function
/// `k(κ) = max{ d(x, Y) : d_U(π_U x, π_U Y) ≤ κ for all U }`.
///
/// Passes when `k0 ≤ tol` and `k(κ) ≤ r(κ + tol) + tol` throughout the table, where
/// `r(c)` is the largest distance between two points of the model whose coordinates
/// all lie within `c` of each other. A point whose coordinates are all near those of
/// `Y` then sits near a point of `Y`, up to the model's own uniqueness defect.
pub fn hq_check_tol(m: &HHSModel, y: &[usize], tol: u32) -> HqReport {
    let k = m.n_elements();
    let images: Vec<Vec<usize>> = (0..k).map(|u| m.pi_set(u, y)).collect();
    let k0 = (0..k).into_par_iter().map(|u| m.hyp[u].quasiconvexity(&images[u])).max().unwrap_or(0);
    let per: Vec<(u32, u32)> = (0..m.n_points())
        .into_par_iter()
        .map(|x| {
            let c = (0..k).map(|u| m.hyp[u].set_dist(m.pi(u, x), &images[u])).max().unwrap_or(0);
            (c, m.space.point_set_dist(x, y))
        })
        .collect();
    let cmax = per.iter().map(|p| p.0).max().unwrap_or(0);
    let mut kfun = Vec::new();
    let mut running = 0;
    for kappa in 0..=cmax {
        for &(c, d) in &per {
            if c == kappa {
                running = running.max(d);
            }
        }
        kfun.push((kappa, running));
    }
    let reach = coordinate_reach(m);
    let bound: Vec<u32> = kfun.iter().map(|&(c, _)| reach_at(&reach, c + tol) + tol).collect();
    let pass = k0 <= tol && kfun.iter().zip(&bound).all(|(&(_, v), &b)| v <= b);
    HqReport { k0, kfun, bound, tolerance: tol, pass }
}

/// `r(c) = max{ d(x, y) : d_U(x, y) ≤ c for all U }` for `c` up to the largest coordinate distance.
pub fn coordinate_reach(m: &HHSModel) -> Vec<u32> {
    theta_table(m).iter().skip(1).map(|&(_, t)| t.saturating_sub(1)).collect()
}

fn reach_at(reach: &[u32], c: u32) -> u32 {
    reach.get(c as usize).or(reach.last()).copied().unwrap_or(0)
}

pub fn hq_check(m: &HHSModel, y: &[usize]) -> HqReport {
    hq_check_tol(m, y, HQ_TOLERANCE)
}

/// Gate of `x` on an hierarchically quasiconvex `target`.
pub fn gate(m: &HHSModel, target: &[usize], x: usize) -> Result<usize, RegionError> {
    if target.is_empty() {
        return Err(RegionError::Empty);
    }
    let hq = hq_check(m, target);
    if !hq.pass {
        let worst = hq.worst().unwrap_or((0, 0));
        return Err(RegionError::NotHQC { k0: hq.k0, kappa: worst.0, k: worst.1 });
    }
    Ok(gate_unchecked(m, target, x))
}

/// Gate without the quasiconvexity check.
pub fn gate_unchecked(m: &HHSModel, target: &[usize], x: usize) -> usize {
    let coords: Vec<Vec<usize>> = (0..m.n_elements())
        .map(|u| {
            let img = m.pi_set(u, target);
            m.hyp[u].closest_of_set(m.pi(u, x), &img)
        })
        .collect();
    minimax_over(m, &coords, target).0
}

/// `{ W : diam π_W(Y) > ε }`.
pub fn epsilon_support(m: &HHSModel, y: &[usize], eps: u32) -> Vec<usize> {
    (0..m.n_elements()).filter(|&w| m.hyp[w].diam(&m.pi_set(w, y)) > eps).collect()
}

/// Audited constants, computing them if the model has none.
pub fn constants_of(m: &HHSModel) -> ConstantsRecord {
    match &m.constants {
        Some(c) => c.clone(),
        None => audit_axioms(m).constants,
    }
}

/// Default support threshold `3·max{ξ, α} + 1`.
pub fn default_epsilon(c: &ConstantsRecord) -> u32 {
    3 * c.xi.max(c.alpha_pr) + 1
}

#[derive(Clone, Debug)]
pub struct Concretized {
    pub model: HHSModel,
    /// Old index of every kept element.
    pub kept: Vec<usize>,
    pub removed: Vec<String>,
    pub s_eps: Option<String>,
    pub support: Vec<String>,
    pub eps: u32,
    /// Largest distance from a point of the space to `F_{S_ε}`.
    pub neighborhood: u32,
    pub bounded: bool,
}

/// Restriction to `𝔖_{S_ε}` with `S_ε` the join of the ε-support of the whole space.
pub fn concretize(m: &HHSModel, eps: u32) -> Result<Concretized, RegionError> {
    let all: Vec<usize> = (0..m.n_points()).collect();
    let supp = epsilon_support(m, &all, eps);
    let support = supp.iter().map(|&u| m.lattice.id(u).to_string()).collect();
    let Some(top) = m.lattice.join_all(&supp)? else {
        let kept = (0..m.n_elements()).collect();
        return Ok(Concretized {
            model: m.clone(),
            kept,
            removed: vec![],
            s_eps: None,
            support,
            eps,
            neighborhood: 0,
            bounded: true,
        });
    };
    let c = constants_of(m);
    let pr = product_region(m, top, c.kappa0.max(c.alpha_pr));
    let neighborhood = if pr.f.is_empty() { INF } else { all.iter().map(|&x| m.space.point_set_dist(x, &pr.f)).max().unwrap_or(0) };
    let (mut model, kept) = m.restrict_below(top);
    model.name = format!("{} restricted below {}", m.name, m.lattice.id(top));
    let keep: BTreeSet<usize> = kept.iter().copied().collect();
    let removed = (0..m.n_elements()).filter(|u| !keep.contains(u)).map(|u| m.lattice.id(u).to_string()).collect();
    Ok(Concretized {
        model,
        kept,
        removed,
        s_eps: Some(m.lattice.id(top).to_string()),
        support,
        eps,
        neighborhood,
        bounded: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub k: f64,
    pub c: f64,
    /// Witness pair for the worst ratio at the chosen `C`.
    pub worst: Option<(String, String)>,
}

/// Tightest `(K, C)` with `a ≤ K b + C` and `b ≤ K a + C` over the given
/// `(a, b, witness)` triples; minimizes `max(K, C)` on the integer `C`-grid, ties to smaller `C`.
fn two_sided_fit(vals: &[(u64, u64, usize)]) -> (f64, f64, Option<usize>) {
    let mut distinct: Vec<(u64, u64, usize)> = Vec::new();
    let mut seen = HashSet::new();
    for &v in vals {
        if seen.insert((v.0, v.1)) {
            distinct.push(v);
        }
    }
    let cmax = distinct.iter().map(|v| v.0.max(v.1)).max().unwrap_or(0);
    let mut best = (f64::INFINITY, f64::INFINITY, None);
    for c in 0..=cmax {
        let mut kk = 0.0f64;
        let mut arg = None;
        for &(a, b, w) in &distinct {
            for (p, q) in [(a, b), (b, a)] {
                let need = p.saturating_sub(c);
                if need == 0 {
                    continue;
                }
                let r = if q == 0 { f64::INFINITY } else { need as f64 / q as f64 };
                if r > kk || arg.is_none() && r >= kk {
                    kk = r;
                    arg = Some(w);
                }
            }
        }
        if kk.max(c as f64) < best.0.max(best.1) {
            best = (kk, c as f64, arg);
        }
    }
    best
}

/// `{{a}}_s`: `a` when `a ≥ s`, else zero.
#[inline]
pub fn clip(a: u32, s: u32) -> u64 {
    if a >= s {
        a as u64
    } else {
        0
    }
}

/// Fit of `d(x,y)` against `Σ_V {{d_V(x,y)}}_s` over all pairs.
pub fn distance_formula_fit(m: &HHSModel, s: u32) -> Fit {
    let n = m.n_points();
    let k = m.n_elements();
    let vals: Vec<(u64, u64, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|x| {
            (x + 1..n).map(move |y| {
                let sum: u64 = (0..k).map(|u| clip(m.du(u, x, y), s)).sum();
                (m.space.d(x, y) as u64, sum, x * n + y)
            })
        })
        .collect();
    let (kf, c, w) = two_sided_fit(&vals);
    Fit {
        k: kf,
        c,
        worst: w.map(|p| (m.space.label(p / n).to_string(), m.space.label(p % n).to_string())),
    }
}

/// Metric hieromorphism: space map, index map and one map `hyp(U) → hyp(φ◊U)` per source element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hieromorphism {
    pub space_map: CoarseMap,
    pub index: IndexMap,
    pub hyp_maps: Vec<CoarseMap>,
    /// Image of the source's one-skeleton when edges map to paths; defaults to the image of the vertices.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub image_hull: Option<Vec<usize>>,
}

impl Hieromorphism {
    pub fn image(&self) -> Vec<usize> {
        match &self.image_hull {
            Some(h) => h.clone(),
            None => self.space_map.range(),
        }
    }

    pub fn identity(m: &HHSModel) -> Self {
        Hieromorphism {
            space_map: CoarseMap::identity(m.n_points()),
            index: IndexMap::identity(m.n_elements()),
            hyp_maps: m.hyp.iter().map(|h| CoarseMap::identity(h.len())).collect(),
            image_hull: None,
        }
    }
}

/// Fit of the source clipped sum against the clipped sum over the image of the index map.
pub fn clipped_sum_compare(src: &HHSModel, tgt: &HHSModel, phi: &Hieromorphism, s: u32, s2: u32) -> Fit {
    let n = src.n_points();
    let k = src.n_elements();
    let vals: Vec<(u64, u64, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|x| {
            (x + 1..n).map(move |y| {
                let a: u64 = (0..k).map(|u| clip(src.du(u, x, y), s)).sum();
                let (fx, fy) = (phi.space_map.image(x), phi.space_map.image(y));
                let b: u64 = (0..k)
                    .map(|u| {
                        let t = phi.index.apply(u);
                        clip(tgt.hyp[t].set_dist(&tgt.pi_set(t, fx), &tgt.pi_set(t, fy)), s2)
                    })
                    .sum();
                (a, b, x * n + y)
            })
        })
        .collect();
    let (kf, c, w) = two_sided_fit(&vals);
    Fit { k: kf, c, worst: w.map(|p| (src.space.label(p / n).to_string(), src.space.label(p % n).to_string())) }
}

/// Serialized hieromorphism: points and hyperbolic-space points by label.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HieroJson {
    /// Image rows in source point order.
    pub space_map: Vec<Vec<String>>,
    pub index: IndexMapJson,
    /// Rows per source element, in `hyp(U)` point order.
    pub hyp_maps: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub image_hull: Option<Vec<String>>,
}

impl Hieromorphism {
    pub fn to_json(&self, src: &HHSModel, tgt: &HHSModel) -> HieroJson {
        let lab = |s: &FiniteSpace, xs: &[usize]| xs.iter().map(|&x| s.label(x).to_string()).collect::<Vec<_>>();
        HieroJson {
            space_map: self.space_map.images.iter().map(|im| lab(&tgt.space, im)).collect(),
            index: self.index.to_json(&src.lattice, &tgt.lattice),
            hyp_maps: (0..src.n_elements())
                .map(|u| {
                    let t = &tgt.hyp[self.index.apply(u)];
                    (src.lattice.id(u).to_string(), self.hyp_maps[u].images.iter().map(|im| lab(t, im)).collect())
                })
                .collect(),
            image_hull: self.image_hull.as_ref().map(|h| lab(&tgt.space, h)),
        }
    }

    pub fn from_json(j: &HieroJson, src: &HHSModel, tgt: &HHSModel) -> Result<Self, ModelError> {
        let find = |s: &FiniteSpace, l: &str| {
            s.labels().iter().position(|x| x == l).ok_or_else(|| ModelError::UnknownLabel(l.to_string()))
        };
        let rows = |s: &FiniteSpace, rs: &[Vec<String>], n: usize, what: &str| -> Result<Vec<Vec<usize>>, ModelError> {
            if rs.len() != n {
                return Err(ModelError::Malformed(format!("{what} has {} rows, expected {n}", rs.len())));
            }
            rs.iter()
                .map(|r| {
                    if r.is_empty() {
                        return Err(ModelError::Malformed(format!("empty image row in {what}")));
                    }
                    r.iter().map(|l| find(s, l)).collect()
                })
                .collect()
        };
        let index =
            IndexMap::from_json(&j.index, &src.lattice, &tgt.lattice).map_err(|e| ModelError::Malformed(e.to_string()))?;
        let space_map = CoarseMap::new(rows(&tgt.space, &j.space_map, src.n_points(), "space map")?, &tgt.space);
        let mut hyp_maps = Vec::with_capacity(src.n_elements());
        for u in 0..src.n_elements() {
            let id = src.lattice.id(u);
            let t = &tgt.hyp[index.apply(u)];
            let r = j.hyp_maps.get(id).ok_or_else(|| ModelError::Malformed(format!("no hyperbolic map for {id}")))?;
            hyp_maps.push(CoarseMap::new(rows(t, r, src.hyp[u].len(), id)?, t));
        }
        let image_hull = match &j.image_hull {
            Some(h) => Some(h.iter().map(|l| find(&tgt.space, l)).collect::<Result<Vec<_>, _>>()?),
            None => None,
        };
        Ok(Hieromorphism { space_map, index, hyp_maps, image_hull })
    }
}
