//! Random primitives: seeded streams, binomial graphs, uniform edges of `K_n`,
//! Poisson step counts and t-factor enumeration / sampling.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{all_pairs, Edge, HostedFactorSpec, SimpleGraph, Vertex};

/// Default cap on backtracking search nodes for exact factor enumeration.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;

/// Default retry cap for the rejection sampler.
pub const REJECTION_RETRIES: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SamplingError {
    #[error("factor enumeration exceeded its budget of {0} search nodes")]
    BudgetExceeded(u64),
    #[error("no factor with the target degree sequence exists ({0})")]
    NoFactorExists(&'static str),
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A seeded ChaCha8 stream. Substreams are keyed by the seed alone, so they are
/// unaffected by how much of the parent has been consumed.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        RngStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream `tag` of this stream's seed.
    pub fn substream(&self, tag: u64) -> RngStream {
        RngStream::from_seed(mix64(self.seed ^ mix64(tag.wrapping_add(0xA5A5_5A5A_0F0F_F0F0))))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Stream for trial `index` under `master`: seed `mix64(master ^ mix64(index))`.
pub fn derive_trial_stream(master: u64, index: u64) -> RngStream {
    RngStream::from_seed(derive_trial_seed(master, index))
}

pub fn derive_trial_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index))
}

/// `G(n, p)`: every pair independently with probability `p`.
pub fn gnp(n: usize, p: f64, rng: &mut RngStream) -> SimpleGraph {
    assert!((0.0..=1.0).contains(&p), "p = {p} is not a probability");
    let mut g = SimpleGraph::empty(n);
    if p == 0.0 {
        return g;
    }
    for e in all_pairs(n) {
        if p == 1.0 || rng.random::<f64>() < p {
            g.insert(e);
        }
    }
    g
}

/// A uniformly random pair of `K_n`.
pub fn uniform_edge(n: usize, rng: &mut RngStream) -> Edge {
    assert!(n >= 2, "K_{n} has no edges");
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    Edge::new(a, b)
}

/// Poisson(μ): inversion for μ ≤ 30, rand_distr's exact rejection sampler above.
pub fn poisson_steps(mu: f64, rng: &mut RngStream) -> u64 {
    assert!(mu >= 0.0 && mu.is_finite(), "Poisson mean {mu} out of range");
    if mu == 0.0 {
        return 0;
    }
    if mu <= 30.0 {
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = (-mu).exp();
        let mut cdf = p;
        while u > cdf && k < 10_000 {
            k += 1;
            p *= mu / k as f64;
            cdf += p;
            if p == 0.0 && k as f64 > mu {
                break;
            }
        }
        k
    } else {
        let d = Poisson::new(mu).expect("valid Poisson mean");
        d.sample(rng) as u64
    }
}

/// How to draw a uniform t-factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorSampleMethod {
    /// Exact: enumerate the support and pick uniformly.
    Enumerate,
    /// Configuration pairing restricted to host adjacency; exact on success.
    Rejection,
    /// Two-edge switch walk. `None` picks the defaults documented on [`switch_defaults`].
    SwitchMcmc {
        burn_in: Option<u64>,
        thinning: Option<u64>,
    },
}

impl FactorSampleMethod {
    pub fn switch() -> Self {
        FactorSampleMethod::SwitchMcmc {
            burn_in: None,
            thinning: None,
        }
    }
}

/// Burn-in `20·m·ln(m+2)` and thinning `m`, for `m` factor edges.
pub fn switch_defaults(m: usize) -> (u64, u64) {
    let mf = m as f64;
    ((20.0 * mf * (mf + 2.0).ln()).ceil() as u64, m.max(1) as u64)
}

/// Backtracking over host edges in lexicographic order with residual pruning.
struct Enumerator<'a> {
    edges: Vec<Edge>,
    residual: Vec<usize>,
    remaining: Vec<usize>,
    left: usize,
    chosen: Vec<usize>,
    nodes: u64,
    budget: u64,
    visit: &'a mut dyn FnMut(&[usize], &[Edge]) -> bool,
    stopped: bool,
}

impl Enumerator<'_> {
    fn run(&mut self, i: usize) -> Result<(), SamplingError> {
        if self.stopped {
            return Ok(());
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(SamplingError::BudgetExceeded(self.budget));
        }
        if self.left == 0 {
            if !(self.visit)(&self.chosen, &self.edges) {
                self.stopped = true;
            }
            return Ok(());
        }
        if i == self.edges.len() {
            return Ok(());
        }
        let Edge(u, v) = self.edges[i];
        self.remaining[u] -= 1;
        self.remaining[v] -= 1;
        if self.residual[u] > 0 && self.residual[v] > 0 {
            self.residual[u] -= 1;
            self.residual[v] -= 1;
            self.left -= 2;
            self.chosen.push(i);
            let r = self.run(i + 1);
            self.chosen.pop();
            self.left += 2;
            self.residual[u] += 1;
            self.residual[v] += 1;
            r?;
        }
        if self.residual[u] <= self.remaining[u] && self.residual[v] <= self.remaining[v] {
            self.run(i + 1)?;
        }
        self.remaining[u] += 1;
        self.remaining[v] += 1;
        Ok(())
    }
}

/// Calls `visit(chosen_indices, host_edges)` for every t-factor in lexicographic
/// order of sorted edge lists. `visit` returns false to stop early.
pub fn for_each_factor(
    spec: &HostedFactorSpec,
    budget: u64,
    visit: &mut dyn FnMut(&[usize], &[Edge]) -> bool,
) -> Result<(), SamplingError> {
    let n = spec.n();
    let edges = spec.host.edge_vec();
    let target = spec.target.values();
    if target.iter().sum::<usize>() % 2 != 0 {
        return Ok(());
    }
    let remaining: Vec<usize> = (0..n).map(|v| spec.host.degree(v)).collect();
    if (0..n).any(|v| target[v] > remaining[v]) {
        return Ok(());
    }
    let mut e = Enumerator {
        edges,
        residual: target.to_vec(),
        remaining,
        left: target.iter().sum(),
        chosen: Vec::new(),
        nodes: 0,
        budget,
        visit,
        stopped: false,
    };
    e.run(0)
}

/// Every factor of the spec, lexicographically ordered. An empty list is a valid answer.
pub fn enumerate_factors(spec: &HostedFactorSpec) -> Result<Vec<SimpleGraph>, SamplingError> {
    enumerate_factors_with_budget(spec, ENUMERATION_BUDGET)
}

pub fn enumerate_factors_with_budget(spec: &HostedFactorSpec, budget: u64) -> Result<Vec<SimpleGraph>, SamplingError> {
    let n = spec.n();
    let mut out = Vec::new();
    for_each_factor(spec, budget, &mut |chosen, edges| {
        let mut g = SimpleGraph::empty(n);
        for &i in chosen {
            g.insert(edges[i]);
        }
        out.push(g);
        true
    })?;
    Ok(out)
}

/// Number of factors and, per host edge (lexicographic order), the number containing it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorCounts {
    pub edges: Vec<Edge>,
    pub containing: Vec<u64>,
    pub total: u64,
}

impl FactorCounts {
    pub fn count(spec: &HostedFactorSpec, budget: u64) -> Result<FactorCounts, SamplingError> {
        let edges = spec.host.edge_vec();
        let mut containing = vec![0u64; edges.len()];
        let mut total = 0u64;
        for_each_factor(spec, budget, &mut |chosen, _| {
            total += 1;
            for &i in chosen {
                containing[i] += 1;
            }
            true
        })?;
        Ok(FactorCounts {
            edges,
            containing,
            total,
        })
    }

    pub fn index_of(&self, e: Edge) -> Option<usize> {
        self.edges.binary_search(&e).ok()
    }

    pub fn containing(&self, e: Edge) -> u64 {
        self.index_of(e).map_or(0, |i| self.containing[i])
    }
}

fn check_factor(spec: &HostedFactorSpec, g: &SimpleGraph) {
    assert!(
        g.is_subgraph_of(&spec.host).unwrap_or(false),
        "sampled factor leaves the host"
    );
    assert_eq!(
        g.degree_sequence(),
        spec.target,
        "sampled factor has the wrong degree sequence"
    );
}

/// One (approximately, for the non-enumerating methods) uniform t-factor of the host.
pub fn uniform_factor(
    spec: &HostedFactorSpec,
    method: FactorSampleMethod,
    rng: &mut RngStream,
) -> Result<SimpleGraph, SamplingError> {
    let mut out = sample_factors(spec, method, 1, rng)?;
    Ok(out.pop().expect("one sample requested"))
}

/// `count` factor samples. For the switch chain these are consecutive thinned states
/// of one chain; for the other methods they are independent.
pub fn sample_factors(
    spec: &HostedFactorSpec,
    method: FactorSampleMethod,
    count: usize,
    rng: &mut RngStream,
) -> Result<Vec<SimpleGraph>, SamplingError> {
    let out = match method {
        FactorSampleMethod::Enumerate => {
            let support = enumerate_factors(spec)?;
            if support.is_empty() {
                return Err(SamplingError::NoFactorExists("empty support"));
            }
            (0..count)
                .map(|_| support[rng.random_range(0..support.len())].clone())
                .collect()
        }
        FactorSampleMethod::Rejection => (0..count)
            .map(|_| rejection_factor(spec, REJECTION_RETRIES, rng))
            .collect::<Result<Vec<_>, _>>()?,
        FactorSampleMethod::SwitchMcmc { burn_in, thinning } => switch_chain(spec, burn_in, thinning, count, rng)?,
    };
    for g in &out {
        check_factor(spec, g);
    }
    Ok(out)
}

/// Pair up degree stubs uniformly and accept if the result is a simple subgraph of the host.
pub fn rejection_factor(
    spec: &HostedFactorSpec,
    retries: u64,
    rng: &mut RngStream,
) -> Result<SimpleGraph, SamplingError> {
    let n = spec.n();
    let mut stubs: Vec<Vertex> = (0..n)
        .flat_map(|v| std::iter::repeat_n(v, spec.target.get(v)))
        .collect();
    if !stubs.len().is_multiple_of(2) {
        return Err(SamplingError::NoFactorExists("odd degree sum"));
    }
    'retry: for _ in 0..retries {
        stubs.shuffle(rng);
        let mut g = SimpleGraph::empty(n);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b || !spec.host.has_edge(a, b) || !g.insert(Edge::new(a, b)) {
                continue 'retry;
            }
        }
        return Ok(g);
    }
    Err(SamplingError::NoFactorExists("rejection retry cap reached"))
}

/// Some factor of the spec: randomized greedy attempts, then budgeted backtracking.
pub fn initial_factor(spec: &HostedFactorSpec, rng: &mut RngStream) -> Result<SimpleGraph, SamplingError> {
    let n = spec.n();
    let mut edges = spec.host.edge_vec();
    for _ in 0..200 {
        edges.shuffle(rng);
        let mut residual = spec.target.values().to_vec();
        let mut g = SimpleGraph::empty(n);
        for &Edge(u, v) in &edges {
            if residual[u] > 0 && residual[v] > 0 {
                residual[u] -= 1;
                residual[v] -= 1;
                g.insert(Edge(u, v));
            }
        }
        if residual.iter().all(|&r| r == 0) {
            return Ok(g);
        }
    }
    let mut found = None;
    for_each_factor(spec, ENUMERATION_BUDGET, &mut |chosen, es| {
        let mut g = SimpleGraph::empty(n);
        chosen.iter().for_each(|&i| {
            g.insert(es[i]);
        });
        found = Some(g);
        false
    })
    .map_err(|_| SamplingError::NoFactorExists("no initial factor within budget"))?;
    found.ok_or(SamplingError::NoFactorExists("no initial factor"))
}

/// One switch proposal; returns true if it was applied.
fn switch_step(host: &SimpleGraph, g: &mut SimpleGraph, edges: &mut [Edge], rng: &mut RngStream) -> bool {
    let m = edges.len();
    if m < 2 {
        return false;
    }
    let i = rng.random_range(0..m);
    let mut j = rng.random_range(0..m - 1);
    if j >= i {
        j += 1;
    }
    let Edge(a, b) = edges[i];
    let (mut c, mut d) = (edges[j].0, edges[j].1);
    if rng.random::<bool>() {
        std::mem::swap(&mut c, &mut d);
    }
    if !edges[i].is_disjoint(&edges[j]) {
        return false;
    }
    let (x, y) = (Edge::new(a, c), Edge::new(b, d));
    if !host.contains(x) || !host.contains(y) || g.contains(x) || g.contains(y) {
        return false;
    }
    g.remove(edges[i]);
    g.remove(edges[j]);
    g.insert(x);
    g.insert(y);
    edges[i] = x;
    edges[j] = y;
    true
}

fn switch_chain(
    spec: &HostedFactorSpec,
    burn_in: Option<u64>,
    thinning: Option<u64>,
    count: usize,
    rng: &mut RngStream,
) -> Result<Vec<SimpleGraph>, SamplingError> {
    let mut g = initial_factor(spec, rng)?;
    let mut edges = g.edge_vec();
    let (default_burn, default_thin) = switch_defaults(edges.len());
    let burn = burn_in.unwrap_or(default_burn);
    let thin = thinning.unwrap_or(default_thin).max(1);
    for _ in 0..burn {
        switch_step(&spec.host, &mut g, &mut edges, rng);
    }
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        if k > 0 {
            for _ in 0..thin {
                switch_step(&spec.host, &mut g, &mut edges, rng);
            }
        }
        out.push(g.clone());
    }
    Ok(out)
}
