//! Labeled graphs on the vertex set `0..n`.
//!
//! [`SimpleGraph`] is a packed adjacency bit-matrix, [`MultiGraph`] keeps a
//! multiplicity count per distinct pair, and [`DegreeSequence`] is the target
//! or residual degree vector consumed by the coupling.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vertex = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("vertex count mismatch: {left} vs {right}")]
    VertexCountMismatch { left: usize, right: usize },
    #[error("edge {0} is not an edge of the host graph")]
    NotInHost(Edge),
    #[error("vertex {vertex} has negative residual degree ({current} realized, {target} targeted)")]
    NegativeResidual {
        vertex: Vertex,
        target: usize,
        current: usize,
    },
    #[error("invalid degree sequence: {0}")]
    InvalidDegreeSequence(String),
    #[error("invalid edge {u}-{v} on {n} vertices")]
    InvalidEdge { u: Vertex, v: Vertex, n: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// An unordered vertex pair stored with the smaller endpoint first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge(pub Vertex, pub Vertex);

impl Edge {
    /// Canonical pair `{a, b}`. Panics on a self-loop.
    pub fn new(a: Vertex, b: Vertex) -> Self {
        assert_ne!(a, b, "self-loops are not edges");
        if a < b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    pub fn u(&self) -> Vertex {
        self.0
    }

    pub fn v(&self) -> Vertex {
        self.1
    }

    pub fn touches(&self, x: Vertex) -> bool {
        self.0 == x || self.1 == x
    }

    pub fn is_disjoint(&self, other: &Edge) -> bool {
        !self.touches(other.0) && !self.touches(other.1)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.0, self.1)
    }
}

/// Number of unordered pairs, `C(n, 2)`.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// All pairs of `K_n` in lexicographic order.
pub fn all_pairs(n: usize) -> impl Iterator<Item = Edge> {
    (0..n).flat_map(move |u| (u + 1..n).map(move |v| Edge(u, v)))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DegreeSequence(Vec<usize>);

impl DegreeSequence {
    /// Validates `value ≤ n − 1` and even sum.
    pub fn new(values: Vec<usize>) -> Result<Self, GraphError> {
        let n = values.len();
        if let Some((v, &d)) = values.iter().enumerate().find(|(_, &d)| n == 0 || d > n - 1) {
            return Err(GraphError::InvalidDegreeSequence(format!(
                "vertex {v} has degree {d} > n-1 = {}",
                n.saturating_sub(1)
            )));
        }
        let seq = DegreeSequence(values);
        if !seq.sum().is_multiple_of(2) {
            return Err(GraphError::InvalidDegreeSequence(format!(
                "degree sum {} is odd",
                seq.sum()
            )));
        }
        Ok(seq)
    }

    /// The constant sequence `d·1`.
    pub fn constant(n: usize, d: usize) -> Result<Self, GraphError> {
        Self::new(vec![d; n])
    }

    pub fn zeros(n: usize) -> Self {
        DegreeSequence(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, v: Vertex) -> usize {
        self.0[v]
    }

    pub fn sum(&self) -> usize {
        self.0.iter().sum()
    }

    /// Number of edges of any graph realizing the sequence.
    pub fn edge_target(&self) -> usize {
        self.sum() / 2
    }

    pub fn max(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn min(&self) -> usize {
        self.0.iter().copied().min().unwrap_or(0)
    }

    /// `max − min`.
    pub fn range(&self) -> usize {
        self.max() - self.min()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&d| d == 0)
    }

    /// Componentwise difference `self − other`; `None` if any entry would go negative.
    pub fn checked_sub(&self, other: &DegreeSequence) -> Option<DegreeSequence> {
        if self.len() != other.len() {
            return None;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| a.checked_sub(b))
            .collect::<Option<Vec<_>>>()
            .map(DegreeSequence)
    }

    pub fn add(&self, other: &DegreeSequence) -> DegreeSequence {
        DegreeSequence(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for DegreeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Simple undirected graph as a packed adjacency bit-matrix.
///
/// Rows are `ceil(n/64)` words each, so membership is O(1) and a neighborhood
/// scan is O(n/64).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SimpleGraph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
    edges: usize,
}

impl SimpleGraph {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        SimpleGraph {
            n,
            words,
            rows: vec![0; words * n],
            edges: 0,
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for e in all_pairs(n) {
            g.insert(e);
        }
        g
    }

    pub fn from_edges<I: IntoIterator<Item = Edge>>(n: usize, edges: I) -> Result<Self, GraphError> {
        let mut g = Self::empty(n);
        for e in edges {
            if e.1 >= n || e.0 == e.1 {
                return Err(GraphError::InvalidEdge { u: e.0, v: e.1, n });
            }
            g.insert(e);
        }
        Ok(g)
    }

    /// Convenience constructor from raw pairs; panics on invalid input.
    pub fn from_pairs(n: usize, pairs: &[(Vertex, Vertex)]) -> Self {
        Self::from_edges(n, pairs.iter().map(|&(a, b)| Edge::new(a, b))).expect("valid edge list")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn is_empty(&self) -> bool {
        self.edges == 0
    }

    #[inline]
    fn bit(&self, u: Vertex, v: Vertex) -> bool {
        self.rows[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }

    #[inline]
    fn set_bit(&mut self, u: Vertex, v: Vertex, on: bool) {
        let w = &mut self.rows[u * self.words + v / 64];
        if on {
            *w |= 1 << (v % 64);
        } else {
            *w &= !(1 << (v % 64));
        }
    }

    pub fn contains(&self, e: Edge) -> bool {
        e.1 < self.n && self.bit(e.0, e.1)
    }

    pub fn has_edge(&self, a: Vertex, b: Vertex) -> bool {
        a != b && self.contains(Edge::new(a, b))
    }

    /// Returns true if the edge was newly inserted.
    pub fn insert(&mut self, e: Edge) -> bool {
        debug_assert!(e.0 < e.1 && e.1 < self.n);
        if self.bit(e.0, e.1) {
            return false;
        }
        self.set_bit(e.0, e.1, true);
        self.set_bit(e.1, e.0, true);
        self.edges += 1;
        true
    }

    pub fn remove(&mut self, e: Edge) -> bool {
        if !self.contains(e) {
            return false;
        }
        self.set_bit(e.0, e.1, false);
        self.set_bit(e.1, e.0, false);
        self.edges -= 1;
        true
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.rows[v * self.words..(v + 1) * self.words]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        let row = &self.rows[v * self.words..(v + 1) * self.words];
        row.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(i * 64 + b)
                }
            })
        })
    }

    /// Edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.n).flat_map(move |u| self.neighbors(u).filter(move |&v| v > u).map(move |v| Edge(u, v)))
    }

    pub fn edge_vec(&self) -> Vec<Edge> {
        self.edges().collect()
    }

    fn check_n(&self, other: &SimpleGraph) -> Result<(), GraphError> {
        if self.n != other.n {
            return Err(GraphError::VertexCountMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    /// `K_n − G`.
    pub fn complement(&self) -> SimpleGraph {
        let mut out = SimpleGraph::empty(self.n);
        for e in all_pairs(self.n) {
            if !self.contains(e) {
                out.insert(e);
            }
        }
        out
    }

    /// `host − self`, requiring `self ⊆ host`.
    pub fn complement_in(&self, host: &SimpleGraph) -> Result<SimpleGraph, GraphError> {
        self.check_n(host)?;
        if let Some(e) = self.edges().find(|&e| !host.contains(e)) {
            return Err(GraphError::NotInHost(e));
        }
        Ok(host.difference(self))
    }

    /// Edges of `self` not in `other` (no containment requirement).
    pub fn difference(&self, other: &SimpleGraph) -> SimpleGraph {
        let mut out = self.clone();
        for (w, o) in out.rows.iter_mut().zip(&other.rows) {
            *w &= !o;
        }
        out.recount();
        out
    }

    pub fn union(&self, other: &SimpleGraph) -> Result<SimpleGraph, GraphError> {
        self.check_n(other)?;
        let mut out = self.clone();
        for (w, o) in out.rows.iter_mut().zip(&other.rows) {
            *w |= o;
        }
        out.recount();
        Ok(out)
    }

    pub fn intersection(&self, other: &SimpleGraph) -> Result<SimpleGraph, GraphError> {
        self.check_n(other)?;
        let mut out = self.clone();
        for (w, o) in out.rows.iter_mut().zip(&other.rows) {
            *w &= o;
        }
        out.recount();
        Ok(out)
    }

    /// Every edge of `self` is an edge of `other`.
    pub fn is_subgraph_of(&self, other: &SimpleGraph) -> Result<bool, GraphError> {
        self.check_n(other)?;
        Ok(self.rows.iter().zip(&other.rows).all(|(a, b)| a & !b == 0))
    }

    pub fn is_disjoint_from(&self, other: &SimpleGraph) -> Result<bool, GraphError> {
        self.check_n(other)?;
        Ok(self.rows.iter().zip(&other.rows).all(|(a, b)| a & b == 0))
    }

    fn recount(&mut self) {
        let ones: usize = self.rows.iter().map(|w| w.count_ones() as usize).sum();
        self.edges = ones / 2;
    }

    pub fn degree_sequence(&self) -> DegreeSequence {
        DegreeSequence((0..self.n).map(|v| self.degree(v)).collect())
    }

    /// `target − deg(self)`; fails if any vertex already exceeds its target.
    pub fn residual_degrees(&self, target: &DegreeSequence) -> Result<DegreeSequence, GraphError> {
        if target.len() != self.n {
            return Err(GraphError::VertexCountMismatch {
                left: target.len(),
                right: self.n,
            });
        }
        let mut out = Vec::with_capacity(self.n);
        for v in 0..self.n {
            let current = self.degree(v);
            let t = target.get(v);
            if current > t {
                return Err(GraphError::NegativeResidual {
                    vertex: v,
                    target: t,
                    current,
                });
            }
            out.push(t - current);
        }
        Ok(DegreeSequence(out))
    }

    /// Edge-list text: `n m` header then one `u v` line per edge, sorted.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.edges);
        for e in self.edges() {
            s.push_str(&format!("{} {}\n", e.0, e.1));
        }
        s
    }

    pub fn parse_edge_list(text: &str) -> Result<SimpleGraph, GraphError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            msg: "missing `n m` header".into(),
        })?;
        let nums = parse_two(header, hl + 1)?;
        let (n, m) = (nums.0, nums.1);
        let mut g = SimpleGraph::empty(n);
        let mut prev: Option<Edge> = None;
        let mut seen = 0;
        for (i, line) in lines {
            let lineno = i + 1;
            let (u, v) = parse_two(line, lineno)?;
            if u >= v || v >= n {
                return Err(GraphError::Parse {
                    line: lineno,
                    msg: format!("expected `u v` with u < v < {n}, got `{}`", line.trim()),
                });
            }
            let e = Edge(u, v);
            if prev.is_some_and(|p| p >= e) {
                return Err(GraphError::Parse {
                    line: lineno,
                    msg: format!("edge {e} is out of order or repeated"),
                });
            }
            prev = Some(e);
            g.insert(e);
            seen += 1;
        }
        if seen != m {
            return Err(GraphError::Parse {
                line: hl + 1,
                msg: format!("header declares {m} edges, found {seen}"),
            });
        }
        Ok(g)
    }
}

fn parse_two(line: &str, lineno: usize) -> Result<(usize, usize), GraphError> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    let bad = || GraphError::Parse {
        line: lineno,
        msg: format!("expected two non-negative integers, got `{}`", line.trim()),
    };
    if parts.len() != 2 {
        return Err(bad());
    }
    let a = parts[0].parse().map_err(|_| bad())?;
    let b = parts[1].parse().map_err(|_| bad())?;
    Ok((a, b))
}

impl fmt::Debug for SimpleGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SimpleGraph(n={}, ", self.n)?;
        f.debug_list().entries(self.edges().map(|e| (e.0, e.1))).finish()?;
        write!(f, ")")
    }
}

impl PartialOrd for SimpleGraph {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Orders by vertex count, then by sorted edge list.
impl Ord for SimpleGraph {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.n.cmp(&other.n).then_with(|| self.edges().cmp(other.edges()))
    }
}

impl Serialize for SimpleGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            n: usize,
            edges: Vec<Edge>,
        }
        Repr {
            n: self.n,
            edges: self.edge_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SimpleGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            n: usize,
            edges: Vec<Edge>,
        }
        let r = Repr::deserialize(d)?;
        SimpleGraph::from_edges(r.n, r.edges.into_iter().map(|e| Edge::new(e.0, e.1))).map_err(serde::de::Error::custom)
    }
}

/// Multigraph with a multiplicity count per distinct pair.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MultiGraph {
    n: usize,
    counts: BTreeMap<Edge, u32>,
    total: u64,
}

impl MultiGraph {
    pub fn empty(n: usize) -> Self {
        MultiGraph {
            n,
            counts: BTreeMap::new(),
            total: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, e: Edge) {
        debug_assert!(e.1 < self.n);
        *self.counts.entry(e).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn multiplicity(&self, e: Edge) -> u32 {
        self.counts.get(&e).copied().unwrap_or(0)
    }

    /// Total multiplicity, i.e. the number of insertion events.
    pub fn total_multiplicity(&self) -> u64 {
        self.total
    }

    pub fn distinct_edges(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, u32)> + '_ {
        self.counts.iter().map(|(&e, &c)| (e, c))
    }

    /// Replace every multiple edge with a single edge.
    pub fn simplify(&self) -> SimpleGraph {
        let mut g = SimpleGraph::empty(self.n);
        for &e in self.counts.keys() {
            g.insert(e);
        }
        g
    }
}

/// A host graph `S` together with the degree sequence `t` of the factor sought in it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HostedFactorSpec {
    pub host: SimpleGraph,
    pub target: DegreeSequence,
}

impl HostedFactorSpec {
    /// Validates `t_v ≤ deg_host(v)` for every vertex.
    pub fn new(host: SimpleGraph, target: DegreeSequence) -> Result<Self, GraphError> {
        let spec = Self::unchecked(host, target)?;
        for v in 0..spec.host.n() {
            if spec.target.get(v) > spec.host.degree(v) {
                return Err(GraphError::InvalidDegreeSequence(format!(
                    "target {} at vertex {v} exceeds host degree {}",
                    spec.target.get(v),
                    spec.host.degree(v)
                )));
            }
        }
        Ok(spec)
    }

    /// Only checks that the lengths agree. Used for residual specs mid-run, where an
    /// over-demanding target simply has an empty factor support.
    pub fn unchecked(host: SimpleGraph, target: DegreeSequence) -> Result<Self, GraphError> {
        if host.n() != target.len() {
            return Err(GraphError::VertexCountMismatch {
                left: host.n(),
                right: target.len(),
            });
        }
        Ok(HostedFactorSpec { host, target })
    }

    pub fn n(&self) -> usize {
        self.host.n()
    }

    /// The complementary target `t′ = deg(host) − t`.
    pub fn complementary(&self) -> Option<HostedFactorSpec> {
        let t = self.host.degree_sequence().checked_sub(&self.target)?;
        Some(HostedFactorSpec {
            host: self.host.clone(),
            target: t,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(n: usize, pairs: &[(usize, usize)]) -> SimpleGraph {
        SimpleGraph::from_pairs(n, pairs)
    }

    #[test]
    fn simplify_merges_repeats() {
        let mut m = MultiGraph::empty(3);
        m.add(Edge::new(0, 1));
        m.add(Edge::new(1, 0));
        m.add(Edge::new(1, 2));
        assert_eq!(m.total_multiplicity(), 3);
        assert_eq!(m.simplify(), g(3, &[(0, 1), (1, 2)]));
        assert!(MultiGraph::empty(4).simplify().is_empty());
    }

    #[test]
    fn complement_cases() {
        assert_eq!(SimpleGraph::complete(4).complement(), SimpleGraph::empty(4));
        assert_eq!(SimpleGraph::empty(4).complement(), SimpleGraph::complete(4));
        assert_eq!(g(3, &[(0, 1)]).complement(), g(3, &[(0, 2), (1, 2)]));
    }

    #[test]
    fn complement_in_host() {
        let k3 = SimpleGraph::complete(3);
        assert_eq!(g(3, &[(0, 1)]).complement_in(&k3).unwrap(), g(3, &[(0, 2), (1, 2)]));
        assert!(k3.complement_in(&k3).unwrap().is_empty());
        let c5 = g(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]);
        let sub = g(5, &[(0, 1), (2, 3)]);
        assert_eq!(sub.complement_in(&c5).unwrap(), g(5, &[(1, 2), (3, 4), (0, 4)]));
        assert_eq!(
            g(5, &[(0, 2)]).complement_in(&c5),
            Err(GraphError::NotInHost(Edge(0, 2)))
        );
    }

    #[test]
    fn union_and_subgraph() {
        let a = g(3, &[(0, 1)]);
        let b = g(3, &[(1, 2)]);
        assert_eq!(a.union(&b).unwrap(), g(3, &[(0, 1), (1, 2)]));
        assert_eq!(a.union(&a).unwrap(), a);
        assert_eq!(SimpleGraph::empty(3).union(&b).unwrap(), b);
        assert!(a.union(&SimpleGraph::empty(4)).is_err());

        let k3 = SimpleGraph::complete(3);
        assert!(SimpleGraph::empty(3).is_subgraph_of(&b).unwrap());
        assert!(!k3.is_subgraph_of(&g(3, &[(0, 1), (1, 2)])).unwrap());
        assert!(g(3, &[(0, 1), (1, 2)]).is_subgraph_of(&k3).unwrap());
        assert!(k3.is_subgraph_of(&SimpleGraph::complete(4)).is_err());
    }

    #[test]
    fn degree_sequences() {
        assert_eq!(SimpleGraph::complete(4).degree_sequence().values(), &[3, 3, 3, 3]);
        assert_eq!(SimpleGraph::empty(4).degree_sequence().values(), &[0, 0, 0, 0]);
        let star = g(4, &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(star.degree_sequence().values(), &[3, 1, 1, 1]);
    }

    #[test]
    fn residuals() {
        let t = DegreeSequence::constant(5, 2).unwrap();
        assert_eq!(SimpleGraph::empty(5).residual_degrees(&t).unwrap(), t);
        let t3 = DegreeSequence::constant(3, 2).unwrap();
        assert!(SimpleGraph::complete(3).residual_degrees(&t3).unwrap().is_zero());
        let t4 = DegreeSequence::constant(4, 2).unwrap();
        assert_eq!(g(4, &[(0, 1)]).residual_degrees(&t4).unwrap().values(), &[1, 1, 2, 2]);
        let t1 = DegreeSequence::new(vec![1, 1, 0, 0]).unwrap();
        assert!(matches!(
            g(4, &[(0, 1), (1, 2)]).residual_degrees(&t1),
            Err(GraphError::NegativeResidual { vertex: 1, .. })
        ));
    }

    #[test]
    fn degree_sequence_validation() {
        assert!(DegreeSequence::new(vec![1, 1, 1]).is_err());
        assert!(DegreeSequence::new(vec![3, 1, 0]).is_err());
        let d = DegreeSequence::new(vec![3, 1, 2, 2]).unwrap();
        assert_eq!((d.max(), d.min(), d.range(), d.edge_target()), (3, 1, 2, 4));
    }

    #[test]
    fn edge_list_format() {
        let c = g(4, &[(2, 3), (0, 1), (1, 2)]);
        let text = c.to_edge_list();
        assert_eq!(text, "4 3\n0 1\n1 2\n2 3\n");
        assert_eq!(SimpleGraph::parse_edge_list(&text).unwrap(), c);

        let err = SimpleGraph::parse_edge_list("4 2\n0 1\n1 x\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 3, .. }), "{err}");
        let err = SimpleGraph::parse_edge_list("4 2\n1 2\n0 1\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 3, .. }));
        let err = SimpleGraph::parse_edge_list("4 3\n0 1\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 1, .. }));
    }

    #[test]
    fn wide_graphs_cross_word_boundaries() {
        let mut a = SimpleGraph::empty(130);
        a.insert(Edge::new(3, 129));
        a.insert(Edge::new(64, 65));
        assert!(a.has_edge(129, 3));
        assert_eq!(a.neighbors(129).collect::<Vec<_>>(), vec![3]);
        assert_eq!(a.complement().edge_count(), pair_count(130) - 2);
    }

    fn arb_graph(max_n: usize) -> impl Strategy<Value = SimpleGraph> {
        (2..=max_n).prop_flat_map(|n| {
            proptest::collection::vec(any::<bool>(), pair_count(n)).prop_map(move |bits| {
                SimpleGraph::from_edges(n, all_pairs(n).zip(bits).filter(|(_, b)| *b).map(|(e, _)| e)).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn complement_is_involution(a in arb_graph(12)) {
            prop_assert_eq!(a.complement().complement(), a.clone());
            prop_assert_eq!(a.complement().edge_count() + a.edge_count(), pair_count(a.n()));
        }

        #[test]
        fn host_partition(host in arb_graph(10), mask in proptest::collection::vec(any::<bool>(), 45)) {
            let sub = SimpleGraph::from_edges(
                host.n(),
                host.edges().zip(mask.iter().cycle()).filter(|(_, b)| **b).map(|(e, _)| e),
            ).unwrap();
            let rest = sub.complement_in(&host).unwrap();
            prop_assert!(rest.is_disjoint_from(&sub).unwrap());
            prop_assert_eq!(rest.union(&sub).unwrap(), host.clone());
            prop_assert_eq!(
                rest.degree_sequence().add(&sub.degree_sequence()),
                host.degree_sequence()
            );
            let residual = sub.residual_degrees(&host.degree_sequence()).unwrap();
            prop_assert_eq!(residual.add(&sub.degree_sequence()), host.degree_sequence());
        }

        #[test]
        fn simplify_never_grows(pairs in proptest::collection::vec((0usize..7, 0usize..7), 0..40)) {
            let mut m = MultiGraph::empty(7);
            for (a, b) in pairs.into_iter().filter(|(a, b)| a != b) {
                m.add(Edge::new(a, b));
            }
            let s = m.simplify();
            prop_assert!(s.edge_count() as u64 <= m.total_multiplicity());
            prop_assert_eq!(s.edge_count(), m.distinct_edges());
            let mut again = MultiGraph::empty(7);
            s.edges().for_each(|e| again.add(e));
            prop_assert_eq!(again.simplify(), s);
        }
    }
}
