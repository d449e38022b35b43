//! Finite connected graphs with their path metric, and set-valued maps between them.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const INF: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpaceError {
    #[error("graph is not connected ({0} unreachable from the first vertex)")]
    Disconnected(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("empty vertex set")]
    Empty,
    #[error("metric is not symmetric or violates the triangle inequality at {0}")]
    BadMetric(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSpace {
    labels: Vec<String>,
    adj: Vec<Vec<usize>>,
    dist: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpaceJson {
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String)>,
}

fn bfs(adj: &[Vec<usize>], s: usize) -> Vec<u32> {
    let mut d = vec![INF; adj.len()];
    d[s] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        for &w in &adj[v] {
            if d[w] == INF {
                d[w] = d[v] + 1;
                q.push_back(w);
            }
        }
    }
    d
}

impl FiniteSpace {
    pub fn from_edges(labels: Vec<String>, edges: &[(usize, usize)]) -> Result<Self, SpaceError> {
        let n = labels.len();
        if n == 0 {
            return Err(SpaceError::Empty);
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a == b || adj[a].contains(&b) {
                continue;
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        let dist: Vec<Vec<u32>> = (0..n).into_par_iter().map(|s| bfs(&adj, s)).collect();
        if let Some(v) = dist[0].iter().position(|&x| x == INF) {
            return Err(SpaceError::Disconnected(labels[v].clone()));
        }
        Ok(FiniteSpace { labels, adj, dist })
    }

    /// Finite metric space given by an integer distance table; edges are the pairs at distance one.
    pub fn from_metric(labels: Vec<String>, dist: Vec<Vec<u32>>) -> Result<Self, SpaceError> {
        let n = labels.len();
        if n == 0 {
            return Err(SpaceError::Empty);
        }
        for a in 0..n {
            if dist[a][a] != 0 {
                return Err(SpaceError::BadMetric(labels[a].clone()));
            }
            for b in 0..n {
                if dist[a][b] != dist[b][a] {
                    return Err(SpaceError::BadMetric(labels[a].clone()));
                }
            }
        }
        let adj = (0..n).map(|a| (0..n).filter(|&b| dist[a][b] == 1).collect()).collect();
        Ok(FiniteSpace { labels, adj, dist })
    }

    pub fn from_json(j: &SpaceJson) -> Result<Self, SpaceError> {
        let pos = |s: &str| j.vertices.iter().position(|v| v == s).ok_or_else(|| SpaceError::UnknownVertex(s.into()));
        let mut edges = Vec::new();
        for (a, b) in &j.edges {
            edges.push((pos(a)?, pos(b)?));
        }
        Self::from_edges(j.vertices.clone(), &edges)
    }

    pub fn to_json(&self) -> SpaceJson {
        SpaceJson { vertices: self.labels.clone(), edges: self.edges().map(|(a, b)| (self.labels[a].clone(), self.labels[b].clone())).collect() }
    }

    pub fn point(label: &str) -> Self {
        Self::from_edges(vec![label.to_string()], &[]).expect("point")
    }

    /// Path on `n` vertices labelled `0..n`.
    pub fn path(n: usize) -> Self {
        let labels = (0..n).map(|i| i.to_string()).collect();
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(labels, &edges).expect("path")
    }

    /// Ball of radius `r` in ℤ, labels `-r..=r`.
    pub fn z_ball(r: usize) -> Self {
        let labels = (-(r as i64)..=r as i64).map(|i| i.to_string()).collect();
        let edges: Vec<_> = (1..2 * r + 1).map(|i| (i - 1, i)).collect();
        Self::from_edges(labels, &edges).expect("z ball")
    }

    /// Complete graph on `n` vertices: the Cayley graph of a finite cyclic group on all generators.
    pub fn complete(n: usize, prefix: &str) -> Self {
        let labels = (0..n).map(|i| format!("{prefix}{i}")).collect();
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                edges.push((a, b));
            }
        }
        Self::from_edges(labels, &edges).expect("complete")
    }

    /// Cartesian product; vertex `(a, b)` has index `a * |other| + b`.
    pub fn product(&self, other: &FiniteSpace) -> Self {
        let (n, m) = (self.len(), other.len());
        let labels = (0..n * m).map(|i| format!("({},{})", self.labels[i / m], other.labels[i % m])).collect();
        let mut edges = Vec::new();
        for a in 0..n {
            for b in 0..m {
                for &a2 in &self.adj[a] {
                    if a2 > a {
                        edges.push((a * m + b, a2 * m + b));
                    }
                }
                for &b2 in &other.adj[b] {
                    if b2 > b {
                        edges.push((a * m + b, a * m + b2));
                    }
                }
            }
        }
        let adj = {
            let mut adj = vec![Vec::new(); n * m];
            for &(x, y) in &edges {
                adj[x].push(y);
                adj[y].push(x);
            }
            for l in &mut adj {
                l.sort_unstable();
            }
            adj
        };
        let dist = (0..n * m)
            .into_par_iter()
            .map(|x| (0..n * m).map(|y| self.dist[x / m][y / m] + other.dist[x % m][y % m]).collect())
            .collect();
        FiniteSpace { labels, adj, dist }
    }

    /// Induced subgraph on `verts` (order kept); fails if disconnected.
    pub fn induced(&self, verts: &[usize]) -> Result<Self, SpaceError> {
        let pos: std::collections::HashMap<usize, usize> = verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut edges = Vec::new();
        for (i, &v) in verts.iter().enumerate() {
            for w in &self.adj[v] {
                if let Some(&j) = pos.get(w) {
                    if j > i {
                        edges.push((i, j));
                    }
                }
            }
        }
        Self::from_edges(verts.iter().map(|&v| self.labels[v].clone()).collect(), &edges)
    }

    /// Subspace metric on `verts`.
    pub fn subspace(&self, verts: &[usize]) -> Self {
        let dist = verts.iter().map(|&a| verts.iter().map(|&b| self.dist[a][b]).collect()).collect();
        Self::from_metric(verts.iter().map(|&v| self.labels[v].clone()).collect(), dist).expect("subspace")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).flat_map(move |a| self.adj[a].iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    #[inline]
    pub fn d(&self, a: usize, b: usize) -> u32 {
        self.dist[a][b]
    }

    pub fn dist_row(&self, a: usize) -> &[u32] {
        &self.dist[a]
    }

    pub fn diameter(&self) -> u32 {
        self.dist.iter().flat_map(|r| r.iter().copied()).max().unwrap_or(0)
    }

    /// Minimum distance between two nonempty sets.
    pub fn set_dist(&self, a: &[usize], b: &[usize]) -> u32 {
        let mut best = INF;
        for &x in a {
            let row = &self.dist[x];
            for &y in b {
                best = best.min(row[y]);
            }
        }
        best
    }

    pub fn point_set_dist(&self, x: usize, b: &[usize]) -> u32 {
        let row = &self.dist[x];
        b.iter().map(|&y| row[y]).min().unwrap_or(INF)
    }

    pub fn diam(&self, a: &[usize]) -> u32 {
        let mut best = 0;
        for (i, &x) in a.iter().enumerate() {
            for &y in &a[i + 1..] {
                best = best.max(self.dist[x][y]);
            }
        }
        best
    }

    /// Diameter of `a ∪ b`.
    pub fn diam_union(&self, a: &[usize], b: &[usize]) -> u32 {
        self.diam(a).max(self.diam(b)).max(a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).map(|(x, y)| self.dist[x][y]).max().unwrap_or(0))
    }

    pub fn hausdorff(&self, a: &[usize], b: &[usize]) -> u32 {
        let one = |p: &[usize], q: &[usize]| p.iter().map(|&x| self.point_set_dist(x, q)).max().unwrap_or(0);
        one(a, b).max(one(b, a))
    }

    /// Points of `set` closest to `x`.
    pub fn closest(&self, x: usize, set: &[usize]) -> Vec<usize> {
        let d = self.point_set_dist(x, set);
        let mut out: Vec<usize> = set.iter().copied().filter(|&y| self.dist[x][y] == d).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Closest-point projection of a set onto `set`.
    pub fn closest_of_set(&self, xs: &[usize], set: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = xs.iter().flat_map(|&x| self.closest(x, set)).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Vertices on some geodesic from `a` to `b`.
    pub fn interval(&self, a: usize, b: usize) -> Vec<usize> {
        let dab = self.dist[a][b];
        (0..self.len()).filter(|&v| self.dist[a][v] + self.dist[v][b] == dab).collect()
    }

    pub fn neighborhood(&self, set: &[usize], r: u32) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.point_set_dist(v, set) <= r).collect()
    }

    /// Quasiconvexity constant of `set`: max distance from a geodesic-interval point to `set`.
    pub fn quasiconvexity(&self, set: &[usize]) -> u32 {
        let mut worst = 0;
        for (i, &a) in set.iter().enumerate() {
            for &b in &set[i..] {
                for v in self.interval(a, b) {
                    worst = worst.max(self.point_set_dist(v, set));
                }
            }
        }
        worst
    }

    /// Exact four-point hyperbolicity constant, as twice δ to stay integral.
    pub fn four_point_twice_delta(&self) -> u32 {
        let n = self.len();
        (0..n)
            .into_par_iter()
            .map(|a| {
                let mut best = 0u32;
                let da = &self.dist[a];
                for b in a + 1..n {
                    let db = &self.dist[b];
                    for c in b + 1..n {
                        let dc = &self.dist[c];
                        for d in c + 1..n {
                            let s1 = da[b] + dc[d];
                            let s2 = da[c] + db[d];
                            let s3 = da[d] + db[c];
                            let (mut x, mut y, mut z) = (s1, s2, s3);
                            if x < y {
                                std::mem::swap(&mut x, &mut y);
                            }
                            if y < z {
                                std::mem::swap(&mut y, &mut z);
                            }
                            if x < y {
                                std::mem::swap(&mut x, &mut y);
                            }
                            best = best.max(x - y);
                        }
                    }
                }
                best
            })
            .max()
            .unwrap_or(0)
    }

    pub fn hyperbolicity_delta(&self) -> f64 {
        self.four_point_twice_delta() as f64 / 2.0
    }

    /// Graph with extra cone vertices, one per subset, each adjacent to its subset.
    pub fn cone_off(&self, subsets: &[Vec<usize>], cone_labels: &[String]) -> Self {
        let n = self.len();
        let mut labels = self.labels.clone();
        labels.extend(cone_labels.iter().cloned());
        let mut edges: Vec<(usize, usize)> = self.edges().collect();
        for (i, s) in subsets.iter().enumerate() {
            for &v in s {
                edges.push((n + i, v));
            }
        }
        Self::from_edges(labels, &edges).expect("cone off keeps connectivity")
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut s = format!("graph \"{name}\" {{\n");
        for (i, l) in self.labels.iter().enumerate() {
            s.push_str(&format!("  v{i} [label=\"{}\"];\n", l.replace('"', "'")));
        }
        for (a, b) in self.edges() {
            s.push_str(&format!("  v{a} -- v{b};\n"));
        }
        s.push_str("}\n");
        s
    }
}

/// Set-valued map between finite spaces, stored as an image table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoarseMap {
    pub images: Vec<Vec<usize>>,
    pub diam_bound: u32,
}

/// Measured constants of a coarse map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseConstants {
    /// Best `(K, C)` on the integer `C`-grid.
    pub k: f64,
    pub c: f64,
    /// Least `K` with `d' ≤ K d + K`.
    pub kk: f64,
    /// Least `K ≥ 1` with `d/K - K ≤ d' ≤ K d + K`.
    pub qi: f64,
}

impl CoarseMap {
    pub fn new(images: Vec<Vec<usize>>, codomain: &FiniteSpace) -> Self {
        let mut images = images;
        for im in &mut images {
            im.sort_unstable();
            im.dedup();
            assert!(!im.is_empty(), "empty image");
        }
        let diam_bound = images.iter().map(|im| codomain.diam(im)).max().unwrap_or(0);
        CoarseMap { images, diam_bound }
    }

    pub fn from_fn(n: usize, codomain: &FiniteSpace, f: impl Fn(usize) -> Vec<usize>) -> Self {
        Self::new((0..n).map(f).collect(), codomain)
    }

    pub fn identity(n: usize) -> Self {
        CoarseMap { images: (0..n).map(|i| vec![i]).collect(), diam_bound: 0 }
    }

    pub fn constant(n: usize, image: Vec<usize>, codomain: &FiniteSpace) -> Self {
        Self::new(vec![image; n], codomain)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image(&self, x: usize) -> &[usize] {
        &self.images[x]
    }

    pub fn image_of_set(&self, xs: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = xs.iter().flat_map(|&x| self.images[x].iter().copied()).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Image of the whole domain.
    pub fn range(&self) -> Vec<usize> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.image_of_set(&all)
    }

    /// `self` then `next`.
    pub fn then(&self, next: &CoarseMap, codomain: &FiniteSpace) -> CoarseMap {
        CoarseMap::new(self.images.iter().map(|im| next.image_of_set(im)).collect(), codomain)
    }

    /// Quasi-inverse by closest-point preimage: `y` goes to the least domain
    /// points whose image is closest to `y`.
    pub fn quasi_inverse(&self, domain: &FiniteSpace, codomain: &FiniteSpace) -> CoarseMap {
        let imgs: Vec<Vec<usize>> = (0..codomain.len())
            .map(|y| {
                let ds: Vec<u32> = self.images.iter().map(|im| codomain.point_set_dist(y, im)).collect();
                let m = *ds.iter().min().expect("nonempty domain");
                let first = ds.iter().position(|&d| d == m).unwrap();
                vec![first]
            })
            .collect();
        CoarseMap::new(imgs, domain)
    }

    pub fn constants(&self, domain: &FiniteSpace, codomain: &FiniteSpace) -> CoarseConstants {
        coarse_map_constants(self, domain, codomain)
    }
}

/// Measured lipschitz and quasi-isometric-embedding constants of `m`.
pub fn coarse_map_constants(m: &CoarseMap, domain: &FiniteSpace, codomain: &FiniteSpace) -> CoarseConstants {
    let n = domain.len();
    // per pair: (d, diam of union, set distance)
    let rows: Vec<Vec<(u32, u32, u32)>> = (0..n)
        .into_par_iter()
        .map(|x| {
            (x..n)
                .map(|y| {
                    let (a, b) = (m.image(x), m.image(y));
                    (domain.d(x, y), codomain.diam_union(a, b), codomain.set_dist(a, b))
                })
                .collect()
        })
        .collect();
    let pairs: Vec<(u32, u32, u32)> = rows.into_iter().flatten().collect();
    let c_min = m.diam_bound;
    let c_max = pairs.iter().map(|p| p.1).max().unwrap_or(0).max(c_min);
    let mut best = (f64::INFINITY, f64::INFINITY);
    for c in c_min..=c_max {
        let k = pairs
            .iter()
            .filter(|p| p.0 > 0)
            .map(|&(d, dp, _)| dp.saturating_sub(c) as f64 / d as f64)
            .fold(0.0, f64::max);
        let (bk, bc) = best;
        if k.max(c as f64) < bk.max(bc) {
            best = (k, c as f64);
        }
    }
    let kk = pairs.iter().map(|&(d, dp, _)| dp as f64 / (d as f64 + 1.0)).fold(0.0, f64::max);
    let lower = pairs
        .iter()
        .map(|&(d, _, dm)| {
            let (d, m) = (d as f64, dm as f64);
            (-m + (m * m + 4.0 * d).sqrt()) / 2.0
        })
        .fold(1.0, f64::max);
    CoarseConstants { k: best.0, c: best.1, kk, qi: kk.max(lower) }
}
