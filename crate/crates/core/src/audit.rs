//! Exhaustive audit of the nine axioms on a finite model.
//!
//! Every axiom is turned into a measurement: the least constant for which the
//! axiom holds on the model, with the configuration attaining it as witness.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{ConstantsRecord, HHSModel};
use crate::space::INF;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AxiomVerdict {
    pub axiom: String,
    pub pass: bool,
    /// Least constant making the axiom true; `None` when structural data is missing.
    pub constant: Option<f64>,
    pub witness: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AuditReport {
    pub model: String,
    pub points: usize,
    pub elements: usize,
    pub axioms: Vec<AxiomVerdict>,
    pub constants: ConstantsRecord,
    pub structural: Vec<String>,
    pub flags: Vec<String>,
}

impl AuditReport {
    pub fn pass(&self) -> bool {
        self.structural.is_empty() && self.axioms.iter().all(|a| a.pass)
    }

    pub fn axiom(&self, name: &str) -> Option<&AxiomVerdict> {
        self.axioms.iter().find(|a| a.axiom == name)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AuditOptions {
    /// Work budget for partial realization, in point-coordinate evaluations.
    pub pr_budget: u64,
    /// Largest candidate count for which large-link covers are solved exactly.
    pub ll_exact_limit: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions { pr_budget: 400_000_000, ll_exact_limit: 40 }
    }
}

pub const AXIOMS: [&str; 9] = [
    "projections",
    "nesting",
    "orthogonality",
    "consistency",
    "finite-complexity",
    "large-links",
    "bounded-geodesic-image",
    "partial-realization",
    "uniqueness",
];

fn verdict(axiom: &str, constant: Option<f64>, witness: Vec<String>) -> AxiomVerdict {
    AxiomVerdict { axiom: axiom.to_string(), pass: constant.is_some_and(f64::is_finite), constant, witness, notes: Vec::new() }
}

/// Max with a witness, keeping the first maximizer in iteration order.
#[derive(Clone, Debug, Default)]
struct Worst<T: Clone> {
    value: u32,
    at: Option<T>,
}

impl<T: Clone> Worst<T> {
    fn offer(&mut self, v: u32, at: impl FnOnce() -> T) {
        if self.at.is_none() || v > self.value {
            self.value = v;
            self.at = Some(at());
        }
    }

    fn merge(mut self, o: Worst<T>) -> Worst<T> {
        if o.value > self.value || (self.at.is_none() && o.at.is_some() && o.value >= self.value) {
            self = o;
        }
        self
    }
}

/// Per-point distance to `ρ_U^V` for every point of the space.
fn rho_dist(m: &HHSModel, u: usize, v: usize) -> Vec<u32> {
    let set = m.rho_set(u, v).expect("checked structure");
    (0..m.n_points()).map(|x| m.hyp[u].set_dist(m.pi(u, x), set)).collect()
}

pub fn audit_axioms(model: &HHSModel) -> AuditReport {
    audit_with(model, AuditOptions::default())
}

pub fn audit_with(m: &HHSModel, opts: AuditOptions) -> AuditReport {
    let l = &m.lattice;
    let k = l.len();
    let n = m.n_points();
    let id = |u: usize| l.id(u).to_string();
    let pt = |x: usize| m.space.label(x).to_string();
    let structural = m.structural_problems();
    let mut flags = Vec::new();
    let mut axioms = Vec::new();
    let mut constants = ConstantsRecord {
        delta: m.hyp.iter().map(|h| h.hyperbolicity_delta()).collect(),
        surj_radius: if structural.is_empty() { m.surjectivity_radius() } else { 0 },
        ..Default::default()
    };
    if !structural.is_empty() {
        for a in AXIOMS {
            let mut v = verdict(a, None, vec![]);
            v.notes.push("model is structurally incomplete".into());
            axioms.push(v);
        }
        return AuditReport { model: m.name.clone(), points: n, elements: k, axioms, constants, structural, flags };
    }

    // (1) projections
    let xi_proj = m.proj.iter().map(|p| p.diam_bound).max().unwrap_or(0);
    let lip = (0..k)
        .into_par_iter()
        .flat_map(|u| (0..n).into_par_iter().map(move |x| (u, x)))
        .map(|(u, x)| {
            let mut best = (0.0f64, None);
            for y in x + 1..n {
                let r = m.du(u, x, y) as f64 / (m.space.d(x, y) as f64 + 1.0);
                if r > best.0 {
                    best = (r, Some((u, x, y)));
                }
            }
            best
        })
        .reduce(|| (0.0, None), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1 && b.1.is_some()) { b } else { a });
    let qc: Vec<u32> = (0..k).into_par_iter().map(|u| m.hyp[u].quasiconvexity(&m.proj[u].range())).collect();
    let qc_max = qc.iter().copied().max().unwrap_or(0);
    let proj_k = lip.0.max(qc_max as f64).max(xi_proj as f64);
    let mut w = lip.1.map(|(u, x, y)| vec![id(u), pt(x), pt(y)]).unwrap_or_default();
    if qc_max as f64 >= lip.0 && qc_max > 0 {
        let u = qc.iter().position(|&q| q == qc_max).unwrap();
        w = vec![id(u), format!("quasiconvexity {qc_max}")];
    }
    let mut v1 = verdict(AXIOMS[0], Some(proj_k), w);
    v1.notes.push(format!("lipschitz {:.3}, quasiconvexity {qc_max}, image diameter {xi_proj}", lip.0));
    axioms.push(v1);
    constants.proj_lip = proj_k;

    // (2) nesting: ρ sets bounded by ξ
    let mut xi_rho = Worst::<(usize, usize)>::default();
    for (&(u, v), r) in &m.rho {
        if let Some(s) = r.set() {
            xi_rho.offer(m.hyp[u].diam(s), || (u, v));
        }
    }
    let xi = xi_proj.max(xi_rho.value);
    constants.xi = xi;
    axioms.push(verdict(
        AXIOMS[1],
        Some(xi as f64),
        xi_rho.at.map(|(u, v)| vec![id(u), id(v)]).unwrap_or_default(),
    ));

    // (3) orthogonality
    let vr = l.validate_relations();
    let mut v3 = verdict(AXIOMS[2], Some(0.0), vec![]);
    if !vr.is_ok() {
        v3.pass = false;
        v3.constant = None;
        v3.witness = vr.violations[0].witness.clone();
        v3.notes = vr.violations.iter().map(|v| format!("{:?} {:?}", v.rule, v.witness)).collect();
    }
    axioms.push(v3);

    // (4) consistency
    let mut kappa = Worst::<Vec<String>>::default();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for u in 0..k {
        for v in 0..k {
            if (l.transverse(u, v) && u < v) || l.properly_nested(u, v) {
                pairs.push((u, v));
            }
        }
    }
    let cons = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut w = Worst::<Vec<String>>::default();
            if l.transverse(a, b) {
                let (da, db) = (rho_dist(m, a, b), rho_dist(m, b, a));
                for x in 0..n {
                    w.offer(da[x].min(db[x]), || vec!["transverse".into(), id(a), id(b), pt(x)]);
                }
            } else {
                // a ⊊ b
                let (vv, ww) = (a, b);
                let dw = rho_dist(m, ww, vv);
                let map = m.rho_map(vv, ww).expect("checked structure");
                for x in 0..n {
                    if dw[x] <= w.value {
                        continue;
                    }
                    let img = map.image_of_set(m.pi(ww, x));
                    let dd = m.hyp[vv].diam_union(m.pi(vv, x), &img);
                    w.offer(dw[x].min(dd), || vec!["nested".into(), id(vv), id(ww), pt(x)]);
                }
            }
            w
        })
        .reduce(Worst::default, Worst::merge);
    kappa = kappa.merge(cons);
    for v in 0..k {
        for wq in 0..k {
            if !l.properly_nested(v, wq) {
                continue;
            }
            for u in 0..k {
                let applies = l.properly_nested(wq, u) || (l.transverse(wq, u) && !l.orth(u, v));
                if !applies {
                    continue;
                }
                let (a, b) = (m.rho_set(u, v).unwrap(), m.rho_set(u, wq).unwrap());
                kappa.offer(m.hyp[u].set_dist(a, b), || vec!["coherence".into(), id(v), id(wq), id(u)]);
            }
        }
    }
    constants.kappa0 = kappa.value;
    axioms.push(verdict(AXIOMS[3], Some(kappa.value as f64), kappa.at.unwrap_or_default()));

    // (5) finite complexity
    let chi = l.complexity();
    axioms.push(verdict(AXIOMS[4], Some(chi as f64), vec![]));

    // (7) bounded geodesic image, measured before (6) since E feeds it
    let bgi = (0..k)
        .into_par_iter()
        .map(|wq| {
            let mut best = Worst::<Vec<String>>::default();
            let below: Vec<usize> = (0..k).filter(|&v| l.properly_nested(v, wq)).collect();
            if below.is_empty() {
                return best;
            }
            let h = &m.hyp[wq];
            let hn = h.len();
            for a in 0..hn {
                for b in a..hn {
                    let iv = h.interval(a, b);
                    for &v in &below {
                        let target = m.rho_set(wq, v).unwrap();
                        let near = h.set_dist(&iv, target);
                        if near <= best.value {
                            continue;
                        }
                        let img = m.rho_map(v, wq).unwrap().image_of_set(&iv);
                        let val = near.min(m.hyp[v].diam(&img));
                        best.offer(val, || vec![id(wq), id(v), h.label(a).to_string(), h.label(b).to_string()]);
                    }
                }
            }
            best
        })
        .reduce(Worst::default, Worst::merge);
    constants.e_bgi = bgi.value;
    let e = xi.max(kappa.value).max(bgi.value).max(1);

    // (6) large links
    let (lambda, ll_w, greedy_used) = large_links(m, e, opts);
    if greedy_used {
        flags.push("large-links: some covers solved greedily (upper bound)".into());
    }
    constants.lambda_ll = lambda;
    let mut v6 = verdict(AXIOMS[5], Some(lambda), ll_w);
    v6.notes.push(format!("E = {e}"));
    axioms.push(v6);
    let mut v7 = verdict(AXIOMS[6], Some(bgi.value as f64), bgi.at.unwrap_or_default());
    v7.notes.push("checked over geodesic intervals".into());
    axioms.push(v7);

    // (8) partial realization
    let (alpha, pr_w, sampled) = partial_realization(m, opts.pr_budget);
    if sampled {
        flags.push("partial-realization: coordinate choices subsampled to fit the work budget".into());
    }
    constants.alpha_pr = alpha;
    axioms.push(verdict(AXIOMS[7], Some(alpha as f64), pr_w));

    // (9) uniqueness
    let theta = theta_table(m);
    let worst = theta.last().map(|&(_, t)| t).unwrap_or(0);
    let mut v9 = verdict(AXIOMS[8], Some(worst as f64), vec![]);
    v9.notes.push(format!("θ_u table {:?}", theta));
    axioms.push(v9);
    constants.theta_u = theta;
    constants.s0 = xi_proj + 1;

    AuditReport { model: m.name.clone(), points: n, elements: k, axioms, constants, structural, flags }
}

/// `θ_u(κ) = 1 + max{ d(x,y) : max_V d_V(x,y) < κ }`, tabulated for `κ` up to one past the largest coordinate distance.
pub fn theta_table(m: &HHSModel) -> Vec<(u32, u32)> {
    let n = m.n_points();
    let k = m.n_elements();
    // best[c] = max d(x,y) over pairs (diagonal included) whose largest coordinate distance is c
    let rows: Vec<HashMap<u32, u32>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut best: HashMap<u32, u32> = HashMap::new();
            for y in x..n {
                let c = (0..k).map(|u| m.du(u, x, y)).max().unwrap_or(0);
                let e = best.entry(c).or_insert(0);
                *e = (*e).max(m.space.d(x, y));
            }
            best
        })
        .collect();
    let mut by_c: HashMap<u32, u32> = HashMap::new();
    for r in rows {
        for (c, d) in r {
            let e = by_c.entry(c).or_insert(0);
            *e = (*e).max(d);
        }
    }
    let cmax = by_c.keys().copied().max().unwrap_or(0);
    let mut out = Vec::new();
    let mut running: Option<u32> = None;
    for kappa in 0..=cmax + 1 {
        let theta = running.map_or(0, |d| d + 1);
        out.push((kappa, theta));
        if let Some(&d) = by_c.get(&kappa) {
            running = Some(running.map_or(d, |r| r.max(d)));
        }
    }
    out
}

fn bit(words: &mut [u64], i: usize) {
    words[i / 64] |= 1 << (i % 64);
}

fn covers(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| y & !x == 0)
}

/// Least number of candidate masks whose union contains `target`; `None` if impossible.
fn min_cover(target: &[u64], cands: &[Vec<u64>], limit: usize) -> (Option<usize>, bool) {
    if target.iter().all(|&w| w == 0) {
        return (Some(0), false);
    }
    let mut union = vec![0u64; target.len()];
    for c in cands {
        for (u, x) in union.iter_mut().zip(c) {
            *u |= x;
        }
    }
    if !covers(&union, target) {
        return (None, false);
    }
    // greedy upper bound
    let mut left = target.to_vec();
    let mut greedy = 0;
    while left.iter().any(|&w| w != 0) {
        let best = cands
            .iter()
            .max_by_key(|c| c.iter().zip(&left).map(|(a, b)| (a & b).count_ones()).sum::<u32>())
            .unwrap();
        for (l, c) in left.iter_mut().zip(best) {
            *l &= !c;
        }
        greedy += 1;
    }
    if cands.len() > limit {
        return (Some(greedy), true);
    }
    fn search(left: &[u64], cands: &[Vec<u64>], depth: usize, best: &mut usize) {
        if depth >= *best {
            return;
        }
        let Some(wi) = left.iter().position(|&w| w != 0) else {
            *best = depth;
            return;
        };
        let b = left[wi].trailing_zeros();
        for c in cands {
            if c[wi] >> b & 1 == 1 {
                let next: Vec<u64> = left.iter().zip(c).map(|(l, x)| l & !x).collect();
                search(&next, cands, depth + 1, best);
            }
        }
    }
    let mut best = greedy;
    search(target, cands, 0, &mut best);
    (Some(best), false)
}

/// Least `λ` for the large-links axiom at the given `E`.
fn large_links(m: &HHSModel, e: u32, opts: AuditOptions) -> (f64, Vec<String>, bool) {
    let l = &m.lattice;
    let k = l.len();
    let n = m.n_points();
    let words = k.div_ceil(64);
    let tops: Vec<usize> = (0..k).filter(|&w| (0..k).any(|t| l.properly_nested(t, w))).collect();
    if tops.is_empty() {
        return (0.0, vec![], false);
    }
    // strict down-sets and ρ distances
    let below: Vec<Vec<usize>> = (0..k).map(|w| (0..k).filter(|&t| l.properly_nested(t, w)).collect()).collect();
    let below_mask: Vec<Vec<u64>> = (0..k)
        .map(|t| {
            let mut msk = vec![0u64; words];
            for s in 0..k {
                if l.nested(s, t) {
                    bit(&mut msk, s);
                }
            }
            msk
        })
        .collect();
    let rd: HashMap<(usize, usize), Vec<u32>> =
        tops.iter().flat_map(|&w| below[w].iter().map(move |&t| (w, t))).map(|(w, t)| ((w, t), rho_dist(m, w, t))).collect();

    let results: Vec<(f64, Option<(usize, usize, usize)>, bool)> = (0..n)
        .into_par_iter()
        .map_init(HashMap::<(usize, Vec<u64>, Vec<u64>), (Option<usize>, bool)>::new, |memo, x| {
            let mut best = (0.0f64, None, false);
            for y in 0..n {
                if y == x {
                    continue;
                }
                let dts: Vec<u32> = (0..k).map(|t| m.du(t, x, y)).collect();
                for &w in &tops {
                    let mut bad = vec![0u64; words];
                    let mut any = false;
                    for &t in &below[w] {
                        if dts[t] >= e {
                            bit(&mut bad, t);
                            any = true;
                        }
                    }
                    if !any {
                        continue;
                    }
                    let denom = dts[w] as f64 + 1.0;
                    // candidates: strict sub-elements of w containing some bad element
                    let mut cand: Vec<(u32, usize)> = below[w]
                        .iter()
                        .filter(|&&t| below_mask[t].iter().zip(&bad).any(|(a, b)| a & b != 0))
                        .map(|&t| (rd[&(w, t)][x], t))
                        .collect();
                    cand.sort_unstable();
                    let mut thresholds: Vec<u32> = cand.iter().map(|c| c.0).collect();
                    thresholds.dedup();
                    let mut obj = f64::INFINITY;
                    let mut greedy = false;
                    for &t in &thresholds {
                        if t as f64 >= obj {
                            break;
                        }
                        let allowed: Vec<usize> = cand.iter().filter(|c| c.0 <= t).map(|c| c.1).collect();
                        let mut amask = vec![0u64; words];
                        for &a in &allowed {
                            bit(&mut amask, a);
                        }
                        let key = (w, bad.clone(), amask);
                        let (size, g) = *memo.entry(key).or_insert_with(|| {
                            let masks: Vec<Vec<u64>> = allowed.iter().map(|&a| below_mask[a].clone()).collect();
                            min_cover(&bad, &masks, opts.ll_exact_limit)
                        });
                        if let Some(s) = size {
                            let o = (s as f64).max(t as f64);
                            if o < obj {
                                obj = o;
                                greedy = g;
                            }
                        }
                    }
                    let lam = obj / denom;
                    if lam > best.0 {
                        best = (lam, Some((w, x, y)), greedy);
                    } else if greedy {
                        best.2 = true;
                    }
                }
            }
            best
        })
        .collect();
    let greedy = results.iter().any(|r| r.2);
    let top = results.iter().fold((0.0f64, None), |acc, r| if r.0 > acc.0 { (r.0, r.1) } else { acc });
    let w = top.1.map(|(w, x, y)| vec![l.id(w).to_string(), m.space.label(x).to_string(), m.space.label(y).to_string()]);
    (top.0, w.unwrap_or_default(), greedy)
}

/// All nonempty pairwise-orthogonal families, in lexicographic order.
pub fn orthogonal_families(l: &crate::lattice::IndexLattice) -> Vec<Vec<usize>> {
    let k = l.len();
    let mut out = Vec::new();
    fn grow(l: &crate::lattice::IndexLattice, cur: &mut Vec<usize>, start: usize, k: usize, out: &mut Vec<Vec<usize>>) {
        for v in start..k {
            if cur.iter().all(|&c| l.orth(c, v)) {
                cur.push(v);
                out.push(cur.clone());
                grow(l, cur, v + 1, k, out);
                cur.pop();
            }
        }
    }
    grow(l, &mut Vec::new(), 0, k, &mut out);
    out
}

/// Least `α` for partial realization over all orthogonal families and
/// coordinate choices from `π_{V_j}(X)`.
fn partial_realization(m: &HHSModel, budget: u64) -> (u32, Vec<String>, bool) {
    let l = &m.lattice;
    let k = l.len();
    let n = m.n_points();
    let fams = orthogonal_families(l);
    // r[v][x]: worst ρ-distance forced by v
    let r: Vec<Vec<u32>> = (0..k)
        .into_par_iter()
        .map(|v| {
            let mut row = vec![0u32; n];
            for wq in 0..k {
                if l.properly_nested(v, wq) || l.transverse(v, wq) {
                    let d = rho_dist(m, wq, v);
                    for x in 0..n {
                        row[x] = row[x].max(d[x]);
                    }
                }
            }
            row
        })
        .collect();
    let ranges: Vec<Vec<usize>> = (0..k).map(|v| m.proj[v].range()).collect();
    // dp[v][i][x] = d(π_v x, ranges[v][i])
    let dp: Vec<Vec<Vec<u32>>> = (0..k)
        .into_par_iter()
        .map(|v| ranges[v].iter().map(|&p| (0..n).map(|x| m.hyp[v].point_set_dist(p, m.pi(v, x))).collect()).collect())
        .collect();
    let total: u64 = fams
        .iter()
        .map(|f| f.iter().map(|&v| ranges[v].len() as u64).product::<u64>().saturating_mul(n as u64 * f.len() as u64))
        .fold(0u64, |a, b| a.saturating_add(b));
    let stride = if total > budget { total.div_ceil(budget) } else { 1 };
    let sampled = stride > 1;
    let worst = fams
        .par_iter()
        .map(|fam| {
            let sizes: Vec<usize> = fam.iter().map(|&v| ranges[v].len()).collect();
            let count: u64 = sizes.iter().map(|&s| s as u64).product();
            let mut best = Worst::<Vec<String>>::default();
            let mut c = 0u64;
            while c < count {
                let mut rem = c;
                let choice: Vec<usize> = sizes
                    .iter()
                    .map(|&s| {
                        let i = (rem % s as u64) as usize;
                        rem /= s as u64;
                        i
                    })
                    .collect();
                let mut val = INF;
                let mut arg = 0;
                for x in 0..n {
                    let mut cost = 0;
                    for (j, &v) in fam.iter().enumerate() {
                        cost = cost.max(r[v][x]).max(dp[v][choice[j]][x]);
                        if cost >= val {
                            break;
                        }
                    }
                    if cost < val {
                        val = cost;
                        arg = x;
                    }
                    if val <= best.value && best.at.is_some() {
                        break;
                    }
                }
                best.offer(val, || {
                    let mut w: Vec<String> = fam
                        .iter()
                        .zip(&choice)
                        .map(|(&v, &i)| format!("{}@{}", l.id(v), m.hyp[v].label(ranges[v][i])))
                        .collect();
                    w.push(format!("best point {}", m.space.label(arg)));
                    w
                });
                c += stride;
            }
            best
        })
        .reduce(Worst::default, Worst::merge);
    (worst.value, worst.at.unwrap_or_default(), sampled)
}
