//! Labeled graphs, the edge order, the Kruskal tree partition scheme,
//! star/cloud bipartite graph classes, and hypergraphs.
//!
//! Vertices are 0-based. Edge `{i, j}` with `i < j` has index
//! `j (j - 1) / 2 + i`; the order `≺` lists edges with larger index first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default enumeration bound for graphs and trees.
pub const DEFAULT_N_MAX: usize = 7;
/// Default enumeration bound for hypergraphs.
pub const DEFAULT_M_MAX: usize = 4;
/// Largest vertex count whose edge set fits in a `u64` mask.
const HARD_N_MAX: usize = 11;

/// An unordered pair `{i, j}`, stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
}

impl Edge {
    pub fn new(a: usize, b: usize) -> Result<Edge> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Ok(Edge { i: a, j: b }),
            std::cmp::Ordering::Greater => Ok(Edge { i: b, j: a }),
            std::cmp::Ordering::Equal => Err(Error::SelfLoop(a)),
        }
    }

    #[inline]
    pub fn index(&self) -> usize {
        edge_index(self.i, self.j)
    }

    pub fn from_index(idx: usize) -> Edge {
        let mut j = 1;
        while j * (j + 1) / 2 <= idx {
            j += 1;
        }
        Edge {
            i: idx - j * (j - 1) / 2,
            j,
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.i == v || self.j == v
    }
}

#[inline]
pub fn edge_index(i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    j * (j - 1) / 2 + i
}

#[inline]
fn pair_bit(a: usize, b: usize) -> u64 {
    let (i, j) = if a < b { (a, b) } else { (b, a) };
    1u64 << edge_index(i, j)
}

/// Number of possible edges on `n` vertices.
#[inline]
pub fn edge_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// The strict total order `e ≺ e2`: larger top vertex first, then larger bottom vertex.
pub fn edge_precedes(e: (usize, usize), e2: (usize, usize)) -> Result<bool> {
    let a = Edge::new(e.0, e.1)?;
    let b = Edge::new(e2.0, e2.1)?;
    Ok(a.index() > b.index())
}

/// A simple graph on vertices `0..n`, edges as a bit mask over edge indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledGraph {
    pub n: usize,
    pub mask: u64,
}

impl LabeledGraph {
    pub fn empty(n: usize) -> Result<Self> {
        check_size(n, HARD_N_MAX)?;
        Ok(LabeledGraph { n, mask: 0 })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for &(a, b) in edges {
            let e = Edge::new(a, b)?;
            if e.j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {{{a}, {b}}} out of range for {n} vertices"
                )));
            }
            if g.mask & (1 << e.index()) != 0 {
                return Err(Error::InvalidGraph(format!("duplicate edge {{{a}, {b}}}")));
            }
            g.mask |= 1 << e.index();
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Result<Self> {
        check_size(n, HARD_N_MAX)?;
        let m = edge_count(n);
        Ok(LabeledGraph {
            n,
            mask: if m == 64 { u64::MAX } else { (1u64 << m) - 1 },
        })
    }

    pub fn edges(&self) -> Vec<Edge> {
        iter_bits(self.mask).map(Edge::from_index).collect()
    }

    pub fn num_edges(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a != b && self.mask & pair_bit(a, b) != 0
    }

    pub fn degree(&self, v: usize) -> usize {
        (0..self.n).filter(|&u| self.has_edge(u, v)).count()
    }

    pub fn is_connected(&self) -> bool {
        is_connected_mask(self.n, self.mask)
    }

    pub fn is_tree(&self) -> bool {
        self.num_edges() + 1 == self.n && self.is_connected()
    }

    /// Vertices on the unique path from `a` to `b` in a tree, as edge mask.
    fn tree_path(&self, a: usize, b: usize) -> u64 {
        let adj = adjacency(self.n, self.mask);
        let mut parent = vec![usize::MAX; self.n];
        let mut stack = vec![a];
        parent[a] = a;
        while let Some(v) = stack.pop() {
            for u in 0..self.n {
                if adj[v] & (1 << u) != 0 && parent[u] == usize::MAX {
                    parent[u] = v;
                    stack.push(u);
                }
            }
        }
        let mut path = 0;
        let mut v = b;
        while v != a {
            path |= pair_bit(v, parent[v]);
            v = parent[v];
        }
        path
    }
}

fn check_size(n: usize, bound: usize) -> Result<()> {
    if n > bound.min(HARD_N_MAX) {
        Err(Error::EnumerationBound {
            size: n,
            bound: bound.min(HARD_N_MAX),
        })
    } else {
        Ok(())
    }
}

pub(crate) fn iter_bits(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let b = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(b)
        }
    })
}

fn adjacency(n: usize, mask: u64) -> Vec<u32> {
    let mut adj = vec![0u32; n];
    for idx in iter_bits(mask) {
        let e = Edge::from_index(idx);
        adj[e.i] |= 1 << e.j;
        adj[e.j] |= 1 << e.i;
    }
    adj
}

fn is_connected_mask(n: usize, mask: u64) -> bool {
    if n <= 1 {
        return true;
    }
    let adj = adjacency(n, mask);
    let mut seen: u32 = 1;
    let mut frontier: u32 = 1;
    while frontier != 0 {
        let v = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let new = adj[v] & !seen;
        seen |= new;
        frontier |= new;
    }
    seen == (1u32 << n) - 1
}

/// All connected graphs on `n` vertices, in increasing mask order.
pub fn enumerate_connected(n: usize, bound: usize) -> Result<Vec<LabeledGraph>> {
    if n == 0 {
        return Err(Error::InvalidParameter("graphs need at least one vertex".into()));
    }
    check_size(n, bound)?;
    let m = edge_count(n);
    Ok((0..1u64 << m)
        .filter(|&mask| is_connected_mask(n, mask))
        .map(|mask| LabeledGraph { n, mask })
        .collect())
}

/// All labeled trees on `n` vertices, decoded from Prüfer sequences.
pub fn enumerate_trees(n: usize, bound: usize) -> Result<Vec<LabeledGraph>> {
    if n == 0 {
        return Err(Error::InvalidParameter("trees need at least one vertex".into()));
    }
    check_size(n, bound)?;
    if n <= 2 {
        let mask = if n == 2 { 1 } else { 0 };
        return Ok(vec![LabeledGraph { n, mask }]);
    }
    let len = n - 2;
    let total = n.pow(len as u32);
    let mut out = Vec::with_capacity(total);
    let mut seq = vec![0usize; len];
    for code in 0..total {
        let mut c = code;
        for s in seq.iter_mut() {
            *s = c % n;
            c /= n;
        }
        out.push(LabeledGraph {
            n,
            mask: prufer_decode(n, &seq),
        });
    }
    out.sort_by_key(|g| g.mask);
    Ok(out)
}

fn prufer_decode(n: usize, seq: &[usize]) -> u64 {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut mask = 0;
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf exists");
        mask |= pair_bit(leaf, s);
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    mask | pair_bit(rest[0], rest[1])
}

/// Spanning tree kept by scanning edges in increasing `≺` order.
pub fn kruskal_tree_of(g: &LabeledGraph) -> Result<LabeledGraph> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let mut root: Vec<usize> = (0..g.n).collect();
    fn find(root: &mut [usize], v: usize) -> usize {
        let mut v = v;
        while root[v] != v {
            root[v] = root[root[v]];
            v = root[v];
        }
        v
    }
    let mut mask = 0;
    let mut idxs: Vec<usize> = iter_bits(g.mask).collect();
    idxs.sort_unstable_by(|a, b| b.cmp(a));
    for idx in idxs {
        let e = Edge::from_index(idx);
        let (a, b) = (find(&mut root, e.i), find(&mut root, e.j));
        if a != b {
            root[a] = b;
            mask |= 1 << idx;
        }
    }
    Ok(LabeledGraph { n: g.n, mask })
}

/// Non-tree edges `{i, j}` whose tree path consists of `≺`-smaller edges.
pub fn e_prime_of(tau: &LabeledGraph) -> Result<LabeledGraph> {
    if !tau.is_tree() {
        return Err(Error::NotATree);
    }
    let mut mask = 0;
    for idx in 0..edge_count(tau.n) {
        if tau.mask & (1 << idx) != 0 {
            continue;
        }
        let e = Edge::from_index(idx);
        let path = tau.tree_path(e.i, e.j);
        if iter_bits(path).all(|p| p > idx) {
            mask |= 1 << idx;
        }
    }
    Ok(LabeledGraph { n: tau.n, mask })
}

/// Result of checking that the intervals `[τ, R(τ)]` partition the connected graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub n: usize,
    pub trees: usize,
    pub connected: usize,
    /// `Σ_τ 2^{#E'(τ)}`.
    pub interval_tally: u64,
    /// Connected graphs lying in no interval or in more than one.
    pub coverage_failures: usize,
    /// Connected graphs whose Kruskal tree is not their interval's tree.
    pub kruskal_failures: usize,
    pub passed: bool,
}

pub fn partition_check(n: usize, bound: usize) -> Result<PartitionReport> {
    let trees = enumerate_trees(n, bound)?;
    let connected = enumerate_connected(n, bound)?;
    let intervals: Vec<(u64, u64)> = trees
        .iter()
        .map(|t| Ok((t.mask, t.mask | e_prime_of(t)?.mask)))
        .collect::<Result<_>>()?;
    let tally = intervals
        .iter()
        .map(|(t, r)| 1u64 << (r & !t).count_ones())
        .sum();
    let mut coverage_failures = 0;
    let mut kruskal_failures = 0;
    for g in &connected {
        let hits: Vec<u64> = intervals
            .iter()
            .filter(|(t, r)| g.mask & t == *t && g.mask & !r == 0)
            .map(|(t, _)| *t)
            .collect();
        if hits.len() != 1 {
            coverage_failures += 1;
        } else if kruskal_tree_of(g)?.mask != hits[0] {
            kruskal_failures += 1;
        }
    }
    let passed =
        tally == connected.len() as u64 && coverage_failures == 0 && kruskal_failures == 0;
    Ok(PartitionReport {
        n,
        trees: trees.len(),
        connected: connected.len(),
        interval_tally: tally,
        coverage_failures,
        kruskal_failures,
        passed,
    })
}

/// Exhaustive check of the three star/cloud implications for the partition scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrucialStarReport {
    pub checked: [usize; 3],
    pub violations: [usize; 3],
}

/// For every tree on `m + r` vertices, cloud `k ≥ m` and distinct stars `s, s' < m`
/// not adjacent in the tree:
/// (a) `{k,s}, {k,s'} ∈ E(τ)` implies `{s,s'} ∈ E'(τ)`;
/// (b) `{k,s} ∈ E(τ)`, `{k,s'} ∈ E'(τ)` implies `{s,s'} ∈ E'(τ)`;
/// (c) `{k,s}, {k,s'} ∈ E'(τ)` implies `{s,s'} ∈ E'(τ)`.
pub fn crucial_star_check(m: usize, r: usize, bound: usize) -> Result<CrucialStarReport> {
    let mut rep = CrucialStarReport {
        checked: [0; 3],
        violations: [0; 3],
    };
    if m < 2 || r < 1 {
        return Ok(rep);
    }
    for tau in enumerate_trees(m + r, bound)? {
        let ep = e_prime_of(&tau)?;
        for k in m..m + r {
            for s in 0..m {
                for t in 0..m {
                    if s == t || tau.has_edge(s, t) {
                        continue;
                    }
                    let concl = ep.has_edge(s, t);
                    let (ts, tt) = (tau.has_edge(k, s), tau.has_edge(k, t));
                    let (es, et) = (ep.has_edge(k, s), ep.has_edge(k, t));
                    let cases = [ts && tt && s < t, ts && et, es && et && s < t];
                    for (c, &hyp) in cases.iter().enumerate() {
                        if hyp {
                            rep.checked[c] += 1;
                            if !concl {
                                rep.violations[c] += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(rep)
}

/// A graph on `m` stars `0..m` and `r` clouds `m..m+r` with no cloud–cloud
/// edges and every cloud adjacent to at least two stars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BipartiteStarGraph {
    pub m: usize,
    pub r: usize,
    pub graph: LabeledGraph,
}

impl BipartiteStarGraph {
    pub fn new(m: usize, r: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let graph = LabeledGraph::from_edges(m + r, edges)?;
        let g = BipartiteStarGraph { m, r, graph };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for e in self.graph.edges() {
            if e.i >= self.m {
                return Err(Error::InvalidGraph(format!(
                    "cloud-cloud edge {{{}, {}}}",
                    e.i, e.j
                )));
            }
        }
        for k in self.m..self.m + self.r {
            if self.graph.degree(k) < 2 {
                return Err(Error::InvalidGraph(format!(
                    "cloud {k} is linked to fewer than two stars"
                )));
            }
        }
        Ok(())
    }

    pub fn star_edges(&self) -> Vec<Edge> {
        self.graph.edges().into_iter().filter(|e| e.j < self.m).collect()
    }

    pub fn cloud_edges(&self) -> Vec<Edge> {
        self.graph.edges().into_iter().filter(|e| e.j >= self.m).collect()
    }
}

/// Mask of edges allowed between stars and between stars and clouds.
fn star_allowed_mask(m: usize, r: usize) -> u64 {
    let mut mask = 0;
    for j in 1..m + r {
        for i in 0..j.min(m) {
            mask |= 1 << edge_index(i, j);
        }
    }
    mask
}

/// Enumerates subsets of `allowed`, yielding each subset mask.
fn subsets(allowed: u64) -> impl Iterator<Item = u64> {
    let mut sub: u64 = 0;
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let cur = sub;
        sub = sub.wrapping_sub(allowed) & allowed;
        if sub == 0 {
            done = true;
        }
        Some(cur)
    })
}

/// All star/cloud graphs on `m` stars and `r` clouds, optionally restricted to
/// connected graphs and to trees.
pub fn enumerate_bipartite_star(
    m: usize,
    r: usize,
    connected_only: bool,
    trees_only: bool,
    bound: usize,
) -> Result<Vec<BipartiteStarGraph>> {
    let n = m + r;
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one vertex".into()));
    }
    check_size(n, bound)?;
    let mut out = Vec::new();
    for mask in subsets(star_allowed_mask(m, r)) {
        let graph = LabeledGraph { n, mask };
        if (m..n).any(|k| graph.degree(k) < 2) {
            continue;
        }
        if trees_only && !graph.is_tree() {
            continue;
        }
        if connected_only && !graph.is_connected() {
            continue;
        }
        out.push(BipartiteStarGraph { m, r, graph });
    }
    out.sort_by_key(|g| g.graph.mask);
    Ok(out)
}

/// Trees on `m + r` vertices without cloud–cloud edges, leaf clouds allowed.
///
/// This is the class the tree-graph majorant sums over: Kruskal trees of
/// star/cloud graphs may leave a cloud attached to a single star.
pub fn majorant_trees(m: usize, r: usize, bound: usize) -> Result<Vec<LabeledGraph>> {
    let allowed = star_allowed_mask(m, r);
    Ok(enumerate_trees(m + r, bound)?
        .into_iter()
        .filter(|t| t.mask & !allowed == 0)
        .collect())
}

/// A hypergraph on `0..m` whose hyperedges are vertex masks with multiplicities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Hypergraph {
    pub m: usize,
    /// `(vertex mask, multiplicity)`, at most one entry per mask.
    pub hyperedges: Vec<(u32, u32)>,
}

impl Hypergraph {
    pub fn new(m: usize, hyperedges: &[(&[usize], u32)]) -> Result<Self> {
        if m > 31 {
            return Err(Error::EnumerationBound { size: m, bound: 31 });
        }
        let mut out: Vec<(u32, u32)> = Vec::new();
        for &(verts, mult) in hyperedges {
            let mut mask = 0u32;
            for &v in verts {
                if v >= m {
                    return Err(Error::InvalidGraph(format!("vertex {v} out of range")));
                }
                mask |= 1 << v;
            }
            if mask.count_ones() < 2 {
                return Err(Error::InvalidGraph("hyperedges need at least two vertices".into()));
            }
            if mult == 0 {
                return Err(Error::InvalidGraph("multiplicities must be positive".into()));
            }
            match out.iter_mut().find(|(msk, _)| *msk == mask) {
                Some(entry) => entry.1 += mult,
                None => out.push((mask, mult)),
            }
        }
        Ok(Hypergraph { m, hyperedges: out })
    }

    /// Connected and covering every vertex.
    pub fn is_connected(&self) -> bool {
        if self.m <= 1 {
            return true;
        }
        let full = (1u32 << self.m) - 1;
        let mut reached = 1u32;
        loop {
            let next = self
                .hyperedges
                .iter()
                .filter(|(e, _)| e & reached != 0)
                .fold(reached, |acc, (e, _)| acc | e);
            if next == reached {
                return reached == full;
            }
            reached = next;
        }
    }
}

/// All vertex subsets of `0..m` with at least two elements, in increasing mask order.
pub fn hyperedge_candidates(m: usize) -> Vec<u32> {
    (1u32..1 << m).filter(|s| s.count_ones() >= 2).collect()
}

/// All connected simple hypergraphs on `m` vertices.
pub fn enumerate_connected_hypergraphs(m: usize, bound: usize) -> Result<Vec<Hypergraph>> {
    if m < 2 {
        return Err(Error::InvalidParameter("hypergraphs need at least two vertices".into()));
    }
    if m > bound.min(5) {
        return Err(Error::EnumerationBound {
            size: m,
            bound: bound.min(5),
        });
    }
    let cand = hyperedge_candidates(m);
    let mut out = Vec::new();
    for sel in 1u64..1 << cand.len() {
        let h = Hypergraph {
            m,
            hyperedges: iter_bits(sel).map(|b| (cand[b], 1)).collect(),
        };
        if h.is_connected() {
            out.push(h);
        }
    }
    Ok(out)
}

/// One cloud per hyperedge copy, linked to the stars in that hyperedge.
pub fn hypergraph_to_bipartite(h: &Hypergraph) -> Result<BipartiteStarGraph> {
    let r: usize = h.hyperedges.iter().map(|(_, k)| *k as usize).sum();
    let n = h.m + r;
    check_size(n, HARD_N_MAX)?;
    let mut mask = 0u64;
    let mut cloud = h.m;
    for &(e, mult) in &h.hyperedges {
        for _ in 0..mult {
            for s in 0..h.m {
                if e & (1 << s) != 0 {
                    mask |= pair_bit(s, cloud);
                }
            }
            cloud += 1;
        }
    }
    let g = BipartiteStarGraph {
        m: h.m,
        r,
        graph: LabeledGraph { n, mask },
    };
    g.validate()?;
    Ok(g)
}
