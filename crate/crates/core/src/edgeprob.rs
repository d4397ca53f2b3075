//! Conditional edge probabilities `P(jk ∈ S_t)` for a uniformly random t-factor
//! `S_t` of a host `S`, and the relative-shortfall table `η` built from them.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, HostedFactorSpec};
use crate::sampling::{sample_factors, FactorCounts, FactorSampleMethod, RngStream, SamplingError, ENUMERATION_BUDGET};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EdgeProbError {
    #[error("the spec has no factor at all")]
    EmptySupport,
    #[error("edge {0} is not an edge of the host")]
    NotInHost(Edge),
    #[error("every candidate edge has probability zero")]
    AllZeroProbabilities,
    #[error("no candidate edges")]
    NoCandidates,
    #[error(transparent)]
    Sampling(#[from] SamplingError),
}

/// Which computation backs `P(jk ∈ S_t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EstimatorHandle {
    /// Exact counting over the enumerated support.
    Exact,
    /// Erased-configuration estimate `min(1, t_j·t_k / max(1, Σt))`.
    Heuristic,
    /// Frequency over `samples` factor draws from a stream seeded with `seed`.
    Empirical {
        samples: usize,
        method: FactorSampleMethod,
        seed: u64,
    },
}

impl EstimatorHandle {
    pub fn is_exact(&self) -> bool {
        matches!(self, EstimatorHandle::Exact)
    }

    pub fn label(&self) -> String {
        match self {
            EstimatorHandle::Exact => "exact".into(),
            EstimatorHandle::Heuristic => "heuristic".into(),
            EstimatorHandle::Empirical { samples, .. } => format!("empirical:{samples}"),
        }
    }
}

/// Whether to estimate directly on `t`, or on the complementary target
/// `t′ = deg(S) − t` and flip: `P(jk ∈ S_t) = 1 − P(jk ∈ S_{t′})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ProbRoute {
    #[default]
    Direct,
    ViaComplement,
}

/// A reduced fraction `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Self {
        Fraction { num, den }
    }

    pub fn reduced(&self) -> Fraction {
        let g = gcd(self.num, self.den).max(1);
        Fraction::new(self.num / g, self.den / g)
    }

    pub fn complement(&self) -> Fraction {
        Fraction::new(self.den - self.num, self.den)
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Cross-multiplied equality.
    pub fn same_value(&self, other: &Fraction) -> bool {
        self.num as u128 * other.den as u128 == other.num as u128 * self.den as u128
    }
}

impl std::fmt::Display for Fraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let r = self.reduced();
        write!(f, "{}/{}", r.num, r.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

const CACHE_LIMIT: usize = 250_000;

thread_local! {
    static EXACT_CACHE: RefCell<HashMap<HostedFactorSpec, Rc<FactorCounts>>> = RefCell::new(HashMap::new());
}

/// Factor counts for the spec, memoized per thread.
pub fn exact_counts(spec: &HostedFactorSpec) -> Result<Rc<FactorCounts>, EdgeProbError> {
    if let Some(hit) = EXACT_CACHE.with(|c| c.borrow().get(spec).cloned()) {
        return Ok(hit);
    }
    let counts = Rc::new(FactorCounts::count(spec, ENUMERATION_BUDGET)?);
    EXACT_CACHE.with(|c| {
        let mut c = c.borrow_mut();
        if c.len() >= CACHE_LIMIT {
            c.clear();
        }
        c.insert(spec.clone(), counts.clone());
    });
    Ok(counts)
}

/// Probability of every host edge under one estimator.
#[derive(Debug, Clone)]
pub struct EdgeProbabilities {
    pub edges: Vec<Edge>,
    pub probs: Vec<f64>,
    /// Exact mode only: `(containing, total)` per edge, after any complement flip.
    pub fractions: Option<Vec<Fraction>>,
}

impl EdgeProbabilities {
    pub fn index_of(&self, e: Edge) -> Option<usize> {
        self.edges.binary_search(&e).ok()
    }

    pub fn get(&self, e: Edge) -> Option<f64> {
        self.index_of(e).map(|i| self.probs[i])
    }

    pub fn fraction(&self, e: Edge) -> Option<Fraction> {
        let i = self.index_of(e)?;
        self.fractions.as_ref().map(|f| f[i])
    }
}

fn heuristic(t: &[usize], e: Edge) -> f64 {
    let (a, b) = (t[e.0], t[e.1]);
    if a == 0 || b == 0 {
        return 0.0;
    }
    let total: usize = t.iter().sum();
    ((a * b) as f64 / total.max(1) as f64).min(1.0)
}

/// `P(jk ∈ S_t)` for every host edge `jk`, in lexicographic edge order.
pub fn edge_probabilities(spec: &HostedFactorSpec, est: &EstimatorHandle) -> Result<EdgeProbabilities, EdgeProbError> {
    let t = spec.target.values();
    match est {
        EstimatorHandle::Exact => {
            let counts = exact_counts(spec)?;
            if counts.total == 0 {
                return Err(EdgeProbError::EmptySupport);
            }
            let fractions: Vec<Fraction> = counts
                .containing
                .iter()
                .map(|&c| Fraction::new(c, counts.total))
                .collect();
            Ok(EdgeProbabilities {
                edges: counts.edges.clone(),
                probs: fractions.iter().map(Fraction::value).collect(),
                fractions: Some(fractions),
            })
        }
        EstimatorHandle::Heuristic => {
            let edges = spec.host.edge_vec();
            let probs = edges.iter().map(|&e| heuristic(t, e)).collect();
            Ok(EdgeProbabilities {
                edges,
                probs,
                fractions: None,
            })
        }
        EstimatorHandle::Empirical { samples, method, seed } => {
            let edges = spec.host.edge_vec();
            let mut rng = RngStream::from_seed(*seed);
            let draws = sample_factors(spec, *method, *samples, &mut rng)?;
            let mut hits = vec![0usize; edges.len()];
            for g in &draws {
                for e in g.edges() {
                    let i = edges.binary_search(&e).expect("factor edge lies in host");
                    hits[i] += 1;
                }
            }
            let probs = hits.iter().map(|&h| h as f64 / draws.len().max(1) as f64).collect();
            Ok(EdgeProbabilities {
                edges,
                probs,
                fractions: None,
            })
        }
    }
}

/// [`edge_probabilities`] through the chosen route. Under `ViaComplement` the
/// estimator runs on `t′ = deg(S) − t` and every value is flipped.
pub fn edge_probabilities_routed(
    spec: &HostedFactorSpec,
    est: &EstimatorHandle,
    route: ProbRoute,
) -> Result<EdgeProbabilities, EdgeProbError> {
    match route {
        ProbRoute::Direct => edge_probabilities(spec, est),
        ProbRoute::ViaComplement => {
            let comp = spec.complementary().ok_or(EdgeProbError::EmptySupport)?;
            let mut p = edge_probabilities(&comp, est)?;
            match &mut p.fractions {
                Some(fr) => {
                    for (f, v) in fr.iter_mut().zip(p.probs.iter_mut()) {
                        *f = f.complement();
                        *v = f.value();
                    }
                }
                None => p.probs.iter_mut().for_each(|v| *v = 1.0 - *v),
            }
            // a zero-target endpoint can never be used, whatever the flip says
            let t = spec.target.values();
            for (e, v) in p.edges.iter().zip(p.probs.iter_mut()) {
                if t[e.0] == 0 || t[e.1] == 0 {
                    *v = 0.0;
                }
            }
            Ok(p)
        }
    }
}

fn require_host_edge(spec: &HostedFactorSpec, jk: Edge) -> Result<(), EdgeProbError> {
    if spec.host.contains(jk) {
        Ok(())
    } else {
        Err(EdgeProbError::NotInHost(jk))
    }
}

/// `P(jk ∈ S_t)` under the estimator.
pub fn conditional_edge_prob(spec: &HostedFactorSpec, jk: Edge, est: &EstimatorHandle) -> Result<f64, EdgeProbError> {
    require_host_edge(spec, jk)?;
    let t = spec.target.values();
    if t[jk.0] == 0 || t[jk.1] == 0 {
        return Ok(0.0);
    }
    match est {
        EstimatorHandle::Exact => Ok(exact_edge_fraction(spec, jk)?.value()),
        EstimatorHandle::Heuristic => Ok(heuristic(t, jk)),
        _ => Ok(edge_probabilities(spec, est)?.get(jk).expect("host edge")),
    }
}

/// Exact `(#factors containing jk) / (#factors)`.
pub fn exact_edge_fraction(spec: &HostedFactorSpec, jk: Edge) -> Result<Fraction, EdgeProbError> {
    require_host_edge(spec, jk)?;
    let counts = exact_counts(spec)?;
    if counts.total == 0 {
        return Err(EdgeProbError::EmptySupport);
    }
    Ok(Fraction::new(counts.containing(jk), counts.total))
}

/// `1 − P(jk ∈ S_t)`, which equals `P(jk ∈ S_{t′})` for `t′ = deg(S) − t`.
pub fn complement_edge_prob(spec: &HostedFactorSpec, jk: Edge, est: &EstimatorHandle) -> Result<f64, EdgeProbError> {
    match est {
        EstimatorHandle::Exact => {
            require_host_edge(spec, jk)?;
            Ok(exact_edge_fraction(spec, jk)?.complement().value())
        }
        _ => Ok(1.0 - conditional_edge_prob(spec, jk, est)?),
    }
}

/// `η_jk = 1 − p_jk / max_candidates p` over a candidate edge set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaTable {
    pub entries: BTreeMap<Edge, f64>,
    pub max_prob_edge: Edge,
    pub max_prob: f64,
}

impl EtaTable {
    /// Builds the table from already-computed probabilities.
    pub fn from_probabilities(probs: &EdgeProbabilities, candidates: &[Edge]) -> Result<EtaTable, EdgeProbError> {
        if candidates.is_empty() {
            return Err(EdgeProbError::NoCandidates);
        }
        let idx: Vec<usize> = candidates
            .iter()
            .map(|&e| probs.index_of(e).ok_or(EdgeProbError::NotInHost(e)))
            .collect::<Result<_, _>>()?;
        let (best_pos, _) = idx
            .iter()
            .enumerate()
            .max_by(|a, b| probs.probs[*a.1].total_cmp(&probs.probs[*b.1]).then(b.0.cmp(&a.0)))
            .expect("nonempty");
        let best = idx[best_pos];
        let max_prob = probs.probs[best];
        if max_prob <= 0.0 {
            return Err(EdgeProbError::AllZeroProbabilities);
        }
        let entries = match &probs.fractions {
            Some(fr) => {
                let top = fr[best];
                idx.iter()
                    .map(|&i| {
                        // (c_max − c)/c_max on a common denominator; exact zero at the max
                        let cross = fr[i].num as u128 * top.den as u128;
                        let top_cross = top.num as u128 * fr[i].den as u128;
                        let eta = (top_cross as f64 - cross as f64) / top_cross as f64;
                        (probs.edges[i], eta.clamp(0.0, 1.0))
                    })
                    .collect()
            }
            None => idx
                .iter()
                .map(|&i| (probs.edges[i], (1.0 - probs.probs[i] / max_prob).clamp(0.0, 1.0)))
                .collect(),
        };
        Ok(EtaTable {
            entries,
            max_prob_edge: probs.edges[best],
            max_prob,
        })
    }

    pub fn eta(&self, e: Edge) -> Option<f64> {
        self.entries.get(&e).copied()
    }

    pub fn max_eta(&self) -> f64 {
        self.entries.values().copied().fold(0.0, f64::max)
    }
}

/// η over `candidates`, each of which must be a host edge.
pub fn eta_table(
    spec: &HostedFactorSpec,
    candidates: &[Edge],
    est: &EstimatorHandle,
) -> Result<EtaTable, EdgeProbError> {
    for &e in candidates {
        require_host_edge(spec, e)?;
    }
    let probs = edge_probabilities(spec, est)?;
    EtaTable::from_probabilities(&probs, candidates)
}
