//! The two-stage scheme.
//!
//! Stage 1 runs the first `I` steps of the coupling for `d·1` on `K_n` and keeps
//! `(H_ζ, H, H_0)`. Stage 2 couples a `t′`-factor of `H̄` with `(M_ζ, M_0)` under
//! the filter `H`. Complementing the stage-2 output gives the final triple
//! `G^L = H_ζ`, `G = H ∪ (H̄ − G₂)`, `G^U = H_0 ∪ (K_n − G₂ζ)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coupling::{CheckLevel, Coupling, CouplingConfig, CouplingError, TripleOutput};
use crate::edgeprob::{EstimatorHandle, ProbRoute};
use crate::graph::{pair_count, DegreeSequence, GraphError, SimpleGraph};
use crate::params::{
    poisson_density, select_params_with_c, solve_mu_stage1, solve_mu_stage2, zeta_stage1, zeta_stage2, ParamsError,
};
use crate::sampling::{derive_trial_stream, FactorSampleMethod, RngStream};

pub const STAGE1_STREAM: u64 = 1;
pub const STAGE2_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("t′ computed two ways disagrees: {direct} vs {via_h}")]
    TPrimeMismatch {
        direct: DegreeSequence,
        via_h: DegreeSequence,
    },
    #[error("complement duality broken: G₂ζ ⊆ H ∪ G₂ is {lhs} but G̃ ⊆ H̃ is {rhs}")]
    DualityMismatch { lhs: bool, rhs: bool },
}

/// Knobs of a sandwich run. Unset slacks come from the two-case parameter selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    #[serde(rename = "C")]
    pub c: f64,
    pub xi1: Option<f64>,
    pub xi: Option<f64>,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub zeta1: Option<f64>,
    /// Fixed stage-2 ζ instead of the value from the realized Δ(t).
    pub zeta2: Option<f64>,
    pub fixed_steps1: Option<u64>,
    pub fixed_steps2: Option<u64>,
    pub estimator: EstimatorHandle,
    pub stage2_route: ProbRoute,
    pub ind_sample_method: FactorSampleMethod,
    pub checks: CheckLevel,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            c: crate::params::DEFAULT_C,
            xi1: None,
            xi: None,
            mu1: None,
            mu2: None,
            zeta1: None,
            zeta2: None,
            fixed_steps1: None,
            fixed_steps2: None,
            estimator: EstimatorHandle::Exact,
            stage2_route: ProbRoute::Direct,
            ind_sample_method: FactorSampleMethod::Enumerate,
            checks: CheckLevel::PerStep,
        }
    }
}

impl SchemeConfig {
    pub fn with_slacks(c: f64, xi1: f64, xi: f64) -> Self {
        SchemeConfig {
            c,
            xi1: Some(xi1),
            xi: Some(xi),
            ..Default::default()
        }
    }
}

/// Parameters known before stage 1 runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub n: usize,
    pub d: usize,
    #[serde(rename = "C")]
    pub c: f64,
    pub xi1: f64,
    pub xi: f64,
    pub mu1: f64,
    pub zeta1: f64,
    pub mu2: f64,
    /// `1 − e^{−μ₁/C(n,2)}`, the law of `H_0`.
    pub q1: f64,
    /// `1 − e^{−μ₁(1−ζ₁)/C(n,2)}`, the law of `H_ζ`.
    pub p1: f64,
}

pub fn resolve_params(n: usize, d: usize, cfg: &SchemeConfig) -> Result<ResolvedParams, SchemeError> {
    let (xi1, xi) = match (cfg.xi1, cfg.xi) {
        (Some(a), Some(b)) => (a, b),
        (a, b) => {
            let sel = select_params_with_c(n as u64, d as u64, cfg.c)?;
            (a.unwrap_or(sel.xi1), b.unwrap_or(sel.xi))
        }
    };
    let zeta1 = match cfg.zeta1 {
        Some(z) => z,
        None => zeta_stage1(xi1, cfg.c)?,
    };
    let mu1 = match cfg.mu1 {
        Some(m) => m,
        None => solve_mu_stage1(n as u64, d as u64, xi1)?,
    };
    let mu2 = match cfg.mu2 {
        Some(m) => m,
        None => solve_mu_stage2(n as u64, xi)?,
    };
    Ok(ResolvedParams {
        n,
        d,
        c: cfg.c,
        xi1,
        xi,
        mu1,
        zeta1,
        mu2,
        q1: poisson_density(n as u64, mu1),
        p1: poisson_density(n as u64, mu1 * (1.0 - zeta1)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOneOutput {
    pub h_zeta: SimpleGraph,
    pub h: SimpleGraph,
    pub h0: SimpleGraph,
    /// `d·1 − deg(H)`.
    pub t: DegreeSequence,
    pub via_ind_sample: bool,
    pub eta_triggered: bool,
    pub saturated: bool,
    pub realized_p1: f64,
    pub realized_q1: f64,
    pub steps: u64,
}

fn density(g: &SimpleGraph) -> f64 {
    g.edge_count() as f64 / pair_count(g.n()) as f64
}

pub fn stage1_config(p: &ResolvedParams, cfg: &SchemeConfig) -> Result<CouplingConfig, SchemeError> {
    let mut c = CouplingConfig::new(p.n, DegreeSequence::constant(p.n, p.d)?, p.zeta1, p.mu1);
    c.estimator = cfg.estimator;
    c.ind_sample_method = cfg.ind_sample_method;
    c.checks = cfg.checks;
    c.fixed_steps = cfg.fixed_steps1;
    c.run_completion = false;
    Ok(c)
}

/// Stage 1 on `rng`. After a trigger `H` is the fresh `d`-regular sample, so `t = 0`.
pub fn run_stage1(p: &ResolvedParams, cfg: &SchemeConfig, rng: &RngStream) -> Result<StageOneOutput, SchemeError> {
    let out = Coupling::new(stage1_config(p, cfg)?)?.run(rng)?;
    Ok(stage_one_from(p.d, out)?)
}

pub fn stage_one_from(d: usize, out: TripleOutput) -> Result<StageOneOutput, GraphError> {
    let n = out.g.n();
    let t = out.g.residual_degrees(&DegreeSequence::constant(n, d)?)?;
    Ok(StageOneOutput {
        realized_p1: density(&out.g_zeta),
        realized_q1: density(&out.g0),
        h_zeta: out.g_zeta,
        h: out.g,
        h0: out.g0,
        t,
        via_ind_sample: out.via_ind_sample,
        eta_triggered: out.eta_triggered,
        saturated: out.saturated,
        steps: out.steps_run,
    })
}

/// `t′ = (n−1−d)·1`, checked against `((n−1)·1 − h) − t`.
pub fn compute_t_prime(n: usize, d: usize, h: &SimpleGraph, t: &DegreeSequence) -> Result<DegreeSequence, SchemeError> {
    let direct = DegreeSequence::constant(n, n - 1 - d)?;
    let co_degrees = h.complement().degree_sequence();
    let via_h = co_degrees
        .checked_sub(t)
        .ok_or_else(|| GraphError::InvalidDegreeSequence(format!("t = {t} exceeds the degrees of H̄ = {co_degrees}")))?;
    if direct != via_h {
        return Err(SchemeError::TPrimeMismatch { direct, via_h });
    }
    Ok(direct)
}

/// `ζ₂ = CΔ(t)/(ξn)`; zero when `t = 0`, where stage 2 has nothing left to choose.
pub fn stage2_zeta(p: &ResolvedParams, cfg: &SchemeConfig, t: &DegreeSequence) -> Result<f64, SchemeError> {
    if let Some(z) = cfg.zeta2 {
        return Ok(z);
    }
    let delta = t.max() as u64;
    if delta == 0 {
        return Ok(0.0);
    }
    Ok(zeta_stage2(delta, p.xi, p.n as u64, p.c)?)
}

pub fn stage2_config(
    p: &ResolvedParams,
    cfg: &SchemeConfig,
    stage1: &StageOneOutput,
) -> Result<CouplingConfig, SchemeError> {
    let t_prime = compute_t_prime(p.n, p.d, &stage1.h, &stage1.t)?;
    let zeta2 = stage2_zeta(p, cfg, &stage1.t)?;
    let mut c = CouplingConfig::new(p.n, t_prime, zeta2, p.mu2);
    c.host_filter = Some(stage1.h.clone());
    c.estimator = cfg.estimator;
    c.route = cfg.stage2_route;
    c.ind_sample_method = cfg.ind_sample_method;
    c.checks = cfg.checks;
    c.fixed_steps = cfg.fixed_steps2;
    Ok(c)
}

pub fn run_stage2(
    p: &ResolvedParams,
    cfg: &SchemeConfig,
    stage1: &StageOneOutput,
    rng: &RngStream,
) -> Result<(TripleOutput, f64), SchemeError> {
    let c = stage2_config(p, cfg, stage1)?;
    let zeta2 = c.zeta;
    Ok((Coupling::new(c)?.run(rng)?, zeta2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TProperties {
    pub delta_t: usize,
    pub range_t: usize,
    /// `r(t) ≤ Δ(t)^{2/3}`.
    pub range_bound_holds: bool,
}

impl TProperties {
    pub fn of(t: &DegreeSequence) -> Self {
        let (delta_t, range_t) = (t.max(), t.range());
        TProperties {
            delta_t,
            range_t,
            range_bound_holds: range_t as f64 <= (delta_t as f64).powf(2.0 / 3.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichResult {
    pub gl: SimpleGraph,
    pub gmid: SimpleGraph,
    pub gu: SimpleGraph,
    /// `H̄ − G₂`, the part of the regular graph not in `H`.
    pub g_tilde: SimpleGraph,
    /// `K_n − G₂ζ`.
    pub h_tilde: SimpleGraph,
    pub contains_lower: bool,
    pub contains_upper: bool,
    pub any_ind_sample: bool,
    pub stage1: StageOneOutput,
    pub stage2: TripleOutput,
    pub t_properties: TProperties,
    pub zeta2: f64,
    /// Law of `G^L`.
    pub p1_target: f64,
    pub q1: f64,
    /// Exact law of `H̃`: `e^{−μ₂(1−ζ₂)/C(n,2)}`.
    pub q2: f64,
    /// `1 − (1−q₁)(1−q₂)`.
    pub p_target: f64,
}

/// Complements and unions; checks the partition and duality identities.
pub fn assemble_sandwich(
    p: &ResolvedParams,
    stage1: StageOneOutput,
    stage2: TripleOutput,
    zeta2: f64,
) -> Result<SandwichResult, SchemeError> {
    let h_bar = stage1.h.complement();
    let g_tilde = stage2.g.complement_in(&h_bar)?;
    let h_tilde = stage2.g_zeta.complement();
    let gl = stage1.h_zeta.clone();
    let gmid = stage1.h.union(&g_tilde)?;
    let gu = stage1.h0.union(&h_tilde)?;
    debug_assert!(stage1.h.is_disjoint_from(&g_tilde)?);

    let lhs = stage2.g_zeta.is_subgraph_of(&stage1.h.union(&stage2.g)?)?;
    let rhs = g_tilde.is_subgraph_of(&h_tilde)?;
    if lhs != rhs {
        return Err(SchemeError::DualityMismatch { lhs, rhs });
    }
    if gmid.degree_sequence() != DegreeSequence::constant(p.n, p.d)? {
        return Err(CouplingError::Invariant {
            name: "G is d-regular",
            step: stage2.steps_run,
        }
        .into());
    }
    let q2 = 1.0 - poisson_density(p.n as u64, p.mu2 * (1.0 - zeta2));
    Ok(SandwichResult {
        contains_lower: gl.is_subgraph_of(&gmid)?,
        contains_upper: gmid.is_subgraph_of(&gu)?,
        any_ind_sample: stage1.via_ind_sample || stage2.via_ind_sample,
        t_properties: TProperties::of(&stage1.t),
        gl,
        gmid,
        gu,
        g_tilde,
        h_tilde,
        stage1,
        stage2,
        zeta2,
        p1_target: p.p1,
        q1: p.q1,
        q2,
        p_target: 1.0 - (1.0 - p.q1) * (1.0 - q2),
    })
}

/// Both stages on their own sub-streams of the trial stream `rng`.
pub fn run_sandwich_on(p: &ResolvedParams, cfg: &SchemeConfig, rng: &RngStream) -> Result<SandwichResult, SchemeError> {
    let stage1 = run_stage1(p, cfg, &rng.substream(STAGE1_STREAM))?;
    let (stage2, zeta2) = run_stage2(p, cfg, &stage1, &rng.substream(STAGE2_STREAM))?;
    assemble_sandwich(p, stage1, stage2, zeta2)
}

/// Trial `index` of the run seeded by `master`.
pub fn run_sandwich(
    n: usize,
    d: usize,
    master: u64,
    index: u64,
    cfg: &SchemeConfig,
) -> Result<SandwichResult, SchemeError> {
    let p = resolve_params(n, d, cfg)?;
    run_sandwich_on(&p, cfg, &derive_trial_stream(master, index))
}
