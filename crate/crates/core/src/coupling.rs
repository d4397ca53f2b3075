//! The sequential coupling of three graphs `(G_ζ, G, G_0)`.
//!
//! Each first-phase step draws one uniform pair `jk` of `K_n` and one coin `a`. The
//! pair always goes into `M_0`; it goes into `M_ζ` exactly when `a > ζ`, whatever
//! happens to `G`. Both draws come from the *process* stream, and nothing else
//! does, so `(M_ζ, M_0)` is a function of that stream alone. Fresh factor samples
//! and the completion phase use a separate *aux* stream.
//!
//! With a host filter `H` the coupled graph lives in `H̄ = K_n − H`: a drawn pair of
//! `H` never enters `G`, and η is taken over `H̄ − G`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edgeprob::{edge_probabilities_routed, EdgeProbError, EdgeProbabilities, EstimatorHandle, ProbRoute};
use crate::graph::{DegreeSequence, Edge, GraphError, HostedFactorSpec, MultiGraph, SimpleGraph};
use crate::sampling::{poisson_steps, uniform_edge, uniform_factor, FactorSampleMethod, RngStream, SamplingError};

pub const PROCESS_STREAM: u64 = 0;
pub const AUX_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CouplingError {
    #[error("invalid coupling config: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Estimator(#[from] EdgeProbError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    /// A residual degree would go negative, or no candidate can be added although
    /// `G` is incomplete. Never happens under the exact estimator.
    #[error("infeasible coupling state at step {step}: {msg}")]
    InfeasibleState { step: u64, msg: String },
    #[error("invariant {name} violated at step {step}")]
    Invariant { name: &'static str, step: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CheckLevel {
    /// Subgraph invariants after every step.
    #[default]
    PerStep,
    /// Only after the first phase and at the end.
    PhaseBoundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingConfig {
    pub n: usize,
    pub target: DegreeSequence,
    /// Pairs excluded from `G`. `None` means the host is `K_n`.
    pub host_filter: Option<SimpleGraph>,
    pub zeta: f64,
    pub mu: f64,
    /// Overrides the Poisson draw of the step count.
    pub fixed_steps: Option<u64>,
    pub estimator: EstimatorHandle,
    pub route: ProbRoute,
    pub ind_sample_method: FactorSampleMethod,
    pub run_completion: bool,
    pub checks: CheckLevel,
    /// End the first phase as soon as `|G|` reaches this many edges.
    pub stop_at_edges: Option<usize>,
}

impl CouplingConfig {
    /// Exact estimator, enumeration for fresh samples, per-step checks, completion on.
    pub fn new(n: usize, target: DegreeSequence, zeta: f64, mu: f64) -> Self {
        CouplingConfig {
            n,
            target,
            host_filter: None,
            zeta,
            mu,
            fixed_steps: None,
            estimator: EstimatorHandle::Exact,
            route: ProbRoute::Direct,
            ind_sample_method: FactorSampleMethod::Enumerate,
            run_completion: true,
            checks: CheckLevel::PerStep,
            stop_at_edges: None,
        }
    }

    /// The factor spec `G` targets: `(K_n − H, target)`.
    pub fn base_spec(&self) -> Result<HostedFactorSpec, CouplingError> {
        if !(0.0..=1.0).contains(&self.zeta) {
            return Err(CouplingError::Config(format!("zeta = {} outside [0, 1]", self.zeta)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(CouplingError::Config(format!(
                "mu = {} must be finite and >= 0",
                self.mu
            )));
        }
        if self.target.len() != self.n {
            return Err(GraphError::VertexCountMismatch {
                left: self.n,
                right: self.target.len(),
            }
            .into());
        }
        let host = match &self.host_filter {
            None => SimpleGraph::complete(self.n),
            Some(h) => {
                if h.n() != self.n {
                    return Err(GraphError::VertexCountMismatch {
                        left: self.n,
                        right: h.n(),
                    }
                    .into());
                }
                h.complement()
            }
        };
        Ok(HostedFactorSpec::new(host, self.target.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingState {
    pub step: u64,
    pub m_zeta: MultiGraph,
    pub m_up: MultiGraph,
    pub g_zeta: SimpleGraph,
    pub g0: SimpleGraph,
    /// `G^(ι)`; equal to `simplify(M^(ι))` since `M` never repeats an edge.
    pub greg: SimpleGraph,
    pub residual: DegreeSequence,
    pub ind_sample_triggered: bool,
    /// `G` became a full factor during the first phase.
    pub saturated: bool,
    pub ind_sample_step: Option<u64>,
    /// Largest η over all candidates seen in any step.
    pub max_eta_seen: f64,
    /// Steps in which some candidate had `η > ζ`.
    pub eta_exceed_count: u64,
}

impl CouplingState {
    pub fn new(n: usize, target: &DegreeSequence) -> Self {
        CouplingState {
            step: 0,
            m_zeta: MultiGraph::empty(n),
            m_up: MultiGraph::empty(n),
            g_zeta: SimpleGraph::empty(n),
            g0: SimpleGraph::empty(n),
            greg: SimpleGraph::empty(n),
            residual: target.clone(),
            ind_sample_triggered: false,
            saturated: false,
            ind_sample_step: None,
            max_eta_seen: 0.0,
            eta_exceed_count: 0,
        }
    }

    /// The first phase stopped following the coupled rule.
    pub fn left_coupling(&self) -> bool {
        self.ind_sample_triggered || self.saturated
    }
}

/// What one step did to `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepEvent {
    /// `jk ∈ G` already.
    Repeat,
    /// `jk ∈ H`, not available to `G`.
    Filtered,
    /// `a > ζ`: added to `G` and `M_ζ`.
    AcceptedBoth { eta: f64 },
    /// `η ≤ a ≤ ζ`: added to `G` only.
    AcceptedRegular { eta: f64 },
    /// `a < η`.
    Rejected { eta: f64 },
    /// `η > ζ`: IndSample from here on.
    Triggered { eta: f64 },
    /// `G` is already a full factor; nothing can be added.
    Saturated,
    /// Past the trigger: only `M_0` and `M_ζ` move.
    Tail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleOutput {
    pub g_zeta: SimpleGraph,
    pub g: SimpleGraph,
    pub g0: SimpleGraph,
    /// `G^(I)` before any completion; equal to `g` when completion is off.
    pub g_first_phase: SimpleGraph,
    pub m_zeta: MultiGraph,
    pub m_up: MultiGraph,
    /// `η > ζ` was hit, or `G` saturated; `G` then did not come from the coupled rule.
    pub via_ind_sample: bool,
    pub eta_triggered: bool,
    pub saturated: bool,
    pub ind_sample_step: Option<u64>,
    pub steps_planned: u64,
    pub steps_run: u64,
    pub completion_steps: u64,
    pub max_eta_seen: f64,
    pub eta_exceed_count: u64,
}

/// A validated coupling.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub cfg: CouplingConfig,
    pub spec: HostedFactorSpec,
}

impl Coupling {
    pub fn new(cfg: CouplingConfig) -> Result<Self, CouplingError> {
        let spec = cfg.base_spec()?;
        Ok(Coupling { cfg, spec })
    }

    fn residual_spec(&self, state: &CouplingState) -> HostedFactorSpec {
        HostedFactorSpec {
            host: self.spec.host.difference(&state.greg),
            target: state.residual.clone(),
        }
    }

    fn probabilities(&self, state: &CouplingState) -> Result<(HostedFactorSpec, EdgeProbabilities), CouplingError> {
        let spec = self.residual_spec(state);
        let p = edge_probabilities_routed(&spec, &self.cfg.estimator, self.cfg.route)?;
        Ok((spec, p))
    }

    fn add_to_greg(&self, state: &mut CouplingState, e: Edge) -> Result<(), CouplingError> {
        let mut r = state.residual.values().to_vec();
        for v in [e.0, e.1] {
            if r[v] == 0 {
                return Err(CouplingError::InfeasibleState {
                    step: state.step,
                    msg: format!("residual degree of vertex {v} would go negative"),
                });
            }
            r[v] -= 1;
        }
        state.residual = DegreeSequence::new(r).expect("residual of a valid target");
        state.greg.insert(e);
        Ok(())
    }

    /// One first-phase step, or one IndSample tail step once triggered.
    pub fn step(&self, state: &mut CouplingState, process: &mut RngStream) -> Result<StepEvent, CouplingError> {
        let jk = uniform_edge(self.cfg.n, process);
        let a: f64 = process.random();
        state.step += 1;
        state.m_up.add(jk);
        state.g0.insert(jk);
        let zeta = self.cfg.zeta;
        if a > zeta {
            state.m_zeta.add(jk);
            state.g_zeta.insert(jk);
        }
        if state.left_coupling() {
            return Ok(StepEvent::Tail);
        }
        let event = if state.greg.contains(jk) {
            StepEvent::Repeat
        } else if !self.spec.host.contains(jk) {
            StepEvent::Filtered
        } else if state.residual.is_zero() {
            state.saturated = true;
            state.ind_sample_step = Some(state.step);
            StepEvent::Saturated
        } else {
            let (_, probs) = self.probabilities(state)?;
            let (eta, max_eta) = eta_of(&probs, jk).ok_or_else(|| CouplingError::InfeasibleState {
                step: state.step,
                msg: "incomplete G but every candidate has probability zero".into(),
            })?;
            state.max_eta_seen = state.max_eta_seen.max(max_eta);
            if max_eta > zeta {
                state.eta_exceed_count += 1;
            }
            if eta > zeta {
                state.ind_sample_triggered = true;
                state.ind_sample_step = Some(state.step);
                StepEvent::Triggered { eta }
            } else if a > zeta {
                self.add_to_greg(state, jk)?;
                StepEvent::AcceptedBoth { eta }
            } else if a >= eta {
                self.add_to_greg(state, jk)?;
                StepEvent::AcceptedRegular { eta }
            } else {
                StepEvent::Rejected { eta }
            }
        };
        if self.cfg.checks == CheckLevel::PerStep {
            self.check_state(state)?;
        }
        Ok(event)
    }

    /// `G ⊆ G_0`, `G ∩ H = ∅`, `G` hits no negative residual, and `G_ζ ⊆ G ∪ H`.
    pub fn check_state(&self, state: &CouplingState) -> Result<(), CouplingError> {
        let fail = |name| Err(CouplingError::Invariant { name, step: state.step });
        if state.m_up.total_multiplicity() != state.step {
            return fail("M_0 has one unit per step");
        }
        if state.left_coupling() {
            return Ok(());
        }
        if !state.greg.is_subgraph_of(&state.g0)? {
            return fail("G ⊆ G_0");
        }
        if !state.greg.is_subgraph_of(&self.spec.host)? {
            return fail("G ∩ H = ∅");
        }
        if state.greg.residual_degrees(&self.cfg.target)? != state.residual {
            return fail("residual = target − deg(G)");
        }
        let lower_ok = match &self.cfg.host_filter {
            None => state.g_zeta.is_subgraph_of(&state.greg)?,
            Some(h) => state.g_zeta.is_subgraph_of(&state.greg.union(h)?)?,
        };
        if !lower_ok {
            return fail("G_ζ ⊆ G ∪ H");
        }
        Ok(())
    }

    /// Step count, then steps until done, triggered, or the edge stop is reached.
    pub fn run_first_phase(&self, process: &mut RngStream) -> Result<(CouplingState, u64), CouplingError> {
        let planned = match self.cfg.fixed_steps {
            Some(k) => k,
            None => poisson_steps(self.cfg.mu, process),
        };
        let mut state = CouplingState::new(self.cfg.n, &self.cfg.target);
        while state.step < planned && !state.left_coupling() {
            if let Some(m) = self.cfg.stop_at_edges {
                if state.greg.edge_count() >= m {
                    break;
                }
            }
            self.step(&mut state, process)?;
        }
        Ok((state, planned))
    }

    /// Runs the remaining steps up to `planned` on `M_0`, `M_ζ` only and picks `G`:
    /// a fresh uniform factor after an η trigger, the saturated `G` itself otherwise.
    pub fn ind_sample_continue(
        &self,
        state: &mut CouplingState,
        planned: u64,
        process: &mut RngStream,
        aux: &mut RngStream,
    ) -> Result<SimpleGraph, CouplingError> {
        debug_assert!(state.left_coupling());
        while state.step < planned {
            self.step(state, process)?;
        }
        if state.ind_sample_triggered {
            Ok(uniform_factor(&self.spec, self.cfg.ind_sample_method, aux)?)
        } else {
            Ok(state.greg.clone())
        }
    }

    /// Adds edges to `G` alone, each with probability proportional to its conditional
    /// inclusion probability, until `G` is a full factor. Returns the step count.
    pub fn completion_phase(&self, state: &mut CouplingState, aux: &mut RngStream) -> Result<u64, CouplingError> {
        let mut added = 0;
        while !state.residual.is_zero() {
            let (_, probs) = self.probabilities(state)?;
            let i = pick_proportional(&probs, aux).ok_or_else(|| CouplingError::InfeasibleState {
                step: state.step,
                msg: "residual degrees remain but every candidate has probability zero".into(),
            })?;
            self.add_to_greg(state, probs.edges[i])?;
            added += 1;
        }
        Ok(added)
    }

    /// The whole procedure on the two sub-streams of `rng`.
    pub fn run(&self, rng: &RngStream) -> Result<TripleOutput, CouplingError> {
        let mut process = rng.substream(PROCESS_STREAM);
        let mut aux = rng.substream(AUX_STREAM);
        self.run_with_streams(&mut process, &mut aux)
    }

    pub fn run_with_streams(
        &self,
        process: &mut RngStream,
        aux: &mut RngStream,
    ) -> Result<TripleOutput, CouplingError> {
        let (mut state, planned) = self.run_first_phase(process)?;
        self.check_state(&state)?;
        let g_first_phase = state.greg.clone();
        let mut completion_steps = 0;
        let g = if state.left_coupling() {
            self.ind_sample_continue(&mut state, planned, process, aux)?
        } else {
            if self.cfg.run_completion {
                completion_steps = self.completion_phase(&mut state, aux)?;
            }
            state.greg.clone()
        };
        if (self.cfg.run_completion || state.left_coupling())
            && (g.degree_sequence() != self.cfg.target || !g.is_subgraph_of(&self.spec.host)?)
        {
            return Err(CouplingError::Invariant {
                name: "G is a target factor of the host",
                step: state.step,
            });
        }
        Ok(TripleOutput {
            g_zeta: state.g_zeta,
            g,
            g0: state.g0,
            g_first_phase,
            m_zeta: state.m_zeta,
            m_up: state.m_up,
            via_ind_sample: state.ind_sample_triggered || state.saturated,
            eta_triggered: state.ind_sample_triggered,
            saturated: state.saturated,
            ind_sample_step: state.ind_sample_step,
            steps_planned: planned,
            steps_run: state.step,
            completion_steps,
            max_eta_seen: state.max_eta_seen,
            eta_exceed_count: state.eta_exceed_count,
        })
    }
}

pub fn run_coupling(cfg: &CouplingConfig, rng: &RngStream) -> Result<TripleOutput, CouplingError> {
    Coupling::new(cfg.clone())?.run(rng)
}

/// `(η_jk, max over candidates of η)`, with every edge of `probs` a candidate.
/// `None` when all probabilities are zero.
fn eta_of(probs: &EdgeProbabilities, jk: Edge) -> Option<(f64, f64)> {
    let i = probs.index_of(jk)?;
    match &probs.fractions {
        Some(fr) => {
            // common denominator: η = (c_max − c)/c_max exactly
            let top = fr.iter().map(|f| f.num as u128 * fr[0].den as u128).max()?;
            let bottom = fr.iter().map(|f| f.num as u128 * fr[0].den as u128).min()?;
            if top == 0 {
                return None;
            }
            let c = fr[i].num as u128 * fr[0].den as u128;
            let eta = (top - c) as f64 / top as f64;
            Some((eta, (top - bottom) as f64 / top as f64))
        }
        None => {
            let max = probs.probs.iter().copied().fold(0.0, f64::max);
            if max <= 0.0 {
                return None;
            }
            let min = probs.probs.iter().copied().fold(f64::INFINITY, f64::min);
            let eta = (1.0 - probs.probs[i] / max).clamp(0.0, 1.0);
            Some((eta, (1.0 - min / max).clamp(0.0, 1.0)))
        }
    }
}

/// Index drawn with probability proportional to its weight; integer weights in exact mode.
fn pick_proportional(probs: &EdgeProbabilities, rng: &mut RngStream) -> Option<usize> {
    match &probs.fractions {
        Some(fr) => {
            // all fractions share the support size as denominator
            let total: u64 = fr.iter().map(|f| f.num).sum();
            if total == 0 {
                return None;
            }
            let mut u = rng.random_range(0..total);
            for (i, f) in fr.iter().enumerate() {
                if u < f.num {
                    return Some(i);
                }
                u -= f.num;
            }
            unreachable!("u < total")
        }
        None => {
            let total: f64 = probs.probs.iter().sum();
            if total <= 0.0 {
                return None;
            }
            let mut u = rng.random::<f64>() * total;
            let mut last = None;
            for (i, &p) in probs.probs.iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                if u < p {
                    return Some(i);
                }
                u -= p;
                last = Some(i);
            }
            last
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edgeprob::eta_table;

    fn cfg(n: usize, d: usize, zeta: f64, steps: u64) -> CouplingConfig {
        let mut c = CouplingConfig::new(n, DegreeSequence::constant(n, d).unwrap(), zeta, 0.0);
        c.fixed_steps = Some(steps);
        c
    }

    #[test]
    fn zero_steps_then_completion() {
        let out = run_coupling(&cfg(5, 2, 0.5, 0), &RngStream::from_seed(1)).unwrap();
        assert!(out.g0.is_empty() && out.g_zeta.is_empty() && out.g_first_phase.is_empty());
        assert_eq!(out.completion_steps, 5);
        assert_eq!(out.g.degree_sequence(), DegreeSequence::constant(5, 2).unwrap());
    }

    #[test]
    fn up_multiplicity_is_step_count() {
        for seed in 0..50 {
            let out = run_coupling(&cfg(5, 2, 0.3, 17), &RngStream::from_seed(seed)).unwrap();
            assert_eq!(out.m_up.total_multiplicity(), 17);
            assert_eq!(out.steps_run, 17);
        }
    }

    #[test]
    fn zeta_zero_lower_equals_upper() {
        for seed in 0..50 {
            let out = run_coupling(&cfg(5, 2, 0.0, 8), &RngStream::from_seed(seed)).unwrap();
            assert_eq!(out.g_zeta, out.g0);
        }
    }

    #[test]
    fn zeta_one_has_empty_lower() {
        for seed in 0..50 {
            let out = run_coupling(&cfg(5, 2, 1.0, 8), &RngStream::from_seed(seed)).unwrap();
            assert!(out.g_zeta.is_empty());
            assert!(!out.via_ind_sample || out.saturated);
        }
    }

    #[test]
    fn first_step_never_triggers() {
        let c = Coupling::new(cfg(6, 3, 0.0, 1)).unwrap();
        for seed in 0..200 {
            let mut st = CouplingState::new(6, &c.cfg.target);
            let ev = c.step(&mut st, &mut RngStream::from_seed(seed)).unwrap();
            assert!(!matches!(ev, StepEvent::Triggered { .. }), "{ev:?}");
        }
    }

    #[test]
    fn sandwich_without_trigger() {
        let mut c = cfg(5, 2, 0.5, 6);
        c.run_completion = false;
        for seed in 0..300 {
            let out = run_coupling(&c, &RngStream::from_seed(seed)).unwrap();
            if !out.via_ind_sample {
                assert!(out.g_zeta.is_subgraph_of(&out.g).unwrap());
                assert!(out.g.is_subgraph_of(&out.g0).unwrap());
            }
        }
    }

    #[test]
    fn coupling_eta_matches_table() {
        let spec = HostedFactorSpec::new(
            SimpleGraph::complete(5).difference(&SimpleGraph::from_pairs(5, &[(0, 1)])),
            DegreeSequence::new(vec![1, 1, 2, 2, 2]).unwrap(),
        )
        .unwrap();
        let probs = edge_probabilities_routed(&spec, &EstimatorHandle::Exact, ProbRoute::Direct).unwrap();
        let table = eta_table(&spec, &spec.host.edge_vec(), &EstimatorHandle::Exact).unwrap();
        for e in spec.host.edges() {
            let (eta, max) = eta_of(&probs, e).unwrap();
            assert!((eta - table.eta(e).unwrap()).abs() < 1e-15);
            assert!((max - table.max_eta()).abs() < 1e-15);
        }
    }

    #[test]
    fn filtered_pairs_stay_out_of_g() {
        let h = SimpleGraph::from_pairs(5, &[(0, 1), (2, 3), (1, 4)]);
        let target = h
            .complement()
            .degree_sequence()
            .checked_sub(&DegreeSequence::constant(5, 0).unwrap())
            .unwrap();
        let target = DegreeSequence::new(target.values().iter().map(|&x| x.min(2)).collect()).unwrap();
        let mut c = CouplingConfig::new(5, target.clone(), 0.5, 0.0);
        c.host_filter = Some(h.clone());
        c.fixed_steps = Some(10);
        if c.base_spec().is_ok() {
            for seed in 0..100 {
                match run_coupling(&c, &RngStream::from_seed(seed)) {
                    Ok(out) => {
                        assert!(out.g.is_disjoint_from(&h).unwrap());
                        if !out.via_ind_sample {
                            assert!(out.g_zeta.is_subgraph_of(&out.g.union(&h).unwrap()).unwrap());
                        }
                    }
                    Err(CouplingError::Estimator(EdgeProbError::EmptySupport)) => break,
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn config_rejects_overfull_target() {
        let mut c = cfg(6, 3, 0.5, 0);
        c.host_filter = Some(SimpleGraph::from_pairs(6, &[(0, 1), (0, 2), (0, 3)]));
        assert!(matches!(c.base_spec(), Err(CouplingError::Graph(_))));
        let c = cfg(5, 2, 1.5, 0);
        assert!(matches!(c.base_spec(), Err(CouplingError::Config(_))));
    }

    #[test]
    fn saturation_keeps_the_full_factor() {
        // ζ = 1 forces every η ≤ ζ, so long runs saturate G
        let mut c = cfg(4, 1, 1.0, 400);
        c.run_completion = false;
        let mut saw = false;
        for seed in 0..40 {
            let out = run_coupling(&c, &RngStream::from_seed(seed)).unwrap();
            if out.saturated {
                saw = true;
                assert!(!out.eta_triggered);
                assert_eq!(out.g, out.g_first_phase);
                assert_eq!(out.g.edge_count(), 2);
                assert_eq!(out.m_up.total_multiplicity(), 400);
            }
        }
        assert!(saw);
    }
}
