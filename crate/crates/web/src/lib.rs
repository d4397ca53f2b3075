//! WebAssembly bindings for the browser demo. Each export returns a JSON string;
//! the plain functions underneath are what the native tests call.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use sandwich_core::edgeprob::{edge_probabilities, EstimatorHandle, EtaTable};
use sandwich_core::graph::{DegreeSequence, HostedFactorSpec, SimpleGraph};
use sandwich_core::params::{select_params_with_c, validate_selected, ConstraintReport, StageParams};
use sandwich_core::scheme::{run_sandwich, SchemeConfig};

/// Exact counting keeps the page responsive up to here.
pub const MAX_N: usize = 8;

pub type Pair = [usize; 2];

fn pairs(g: &SimpleGraph) -> Vec<Pair> {
    g.edges().map(|e| [e.0, e.1]).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichView {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub trial: u64,
    pub lower: Vec<Pair>,
    pub middle: Vec<Pair>,
    pub upper: Vec<Pair>,
    /// The stage-1 partial regular graph.
    pub partial: Vec<Pair>,
    pub contains_lower: bool,
    pub contains_upper: bool,
    pub stage1_ind_sample: bool,
    pub stage2_ind_sample: bool,
    pub zeta1: f64,
    pub zeta2: f64,
    /// Edge density of the law of the lower graph.
    pub p_lower: f64,
    /// Edge density of the law of the upper graph.
    pub p_upper: f64,
}

fn check_n(n: usize) -> Result<(), String> {
    if n > MAX_N {
        return Err(format!("the demo counts factors exactly and stops at n = {MAX_N}"));
    }
    Ok(())
}

pub fn sandwich_view(
    n: usize,
    d: usize,
    seed: u64,
    trial: u64,
    c: f64,
    xi1: f64,
    xi: f64,
) -> Result<SandwichView, String> {
    check_n(n)?;
    let cfg = SchemeConfig::with_slacks(c, xi1, xi);
    let r = run_sandwich(n, d, seed, trial, &cfg).map_err(|e| e.to_string())?;
    Ok(SandwichView {
        n,
        d,
        seed,
        trial,
        lower: pairs(&r.gl),
        middle: pairs(&r.gmid),
        upper: pairs(&r.gu),
        partial: pairs(&r.stage1.h),
        contains_lower: r.contains_lower,
        contains_upper: r.contains_upper,
        stage1_ind_sample: r.stage1.via_ind_sample,
        stage2_ind_sample: r.stage2.via_ind_sample,
        zeta1: c * xi1,
        zeta2: r.zeta2,
        p_lower: r.p1_target,
        p_upper: r.p_target,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamsView {
    pub params: StageParams,
    pub constraints: ConstraintReport,
}

pub fn params_view(n: u64, d: u64, c: f64) -> Result<ParamsView, String> {
    let params = select_params_with_c(n, d, c).map_err(|e| e.to_string())?;
    let constraints = validate_selected(&params);
    Ok(ParamsView { params, constraints })
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeRow {
    pub edge: Pair,
    pub probability: f64,
    pub fraction: String,
    pub eta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeTableView {
    pub n: usize,
    pub target: Vec<usize>,
    pub factors: u64,
    pub max_eta: f64,
    pub edges: Vec<EdgeRow>,
}

/// Exact edge probabilities and η over every host edge. An empty `host` means `K_n`.
pub fn edge_table(target: &str, host: &str) -> Result<EdgeTableView, String> {
    let t: Vec<usize> = target
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| format!("target: `{s}` is not a non-negative integer"))
        })
        .collect::<Result<_, _>>()?;
    let n = t.len();
    check_n(n)?;
    let host = if host.trim().is_empty() {
        SimpleGraph::complete(n)
    } else {
        SimpleGraph::parse_edge_list(host).map_err(|e| format!("host: {e}"))?
    };
    let target = DegreeSequence::new(t).map_err(|e| e.to_string())?;
    let spec = HostedFactorSpec::new(host, target).map_err(|e| e.to_string())?;
    let probs = edge_probabilities(&spec, &EstimatorHandle::Exact).map_err(|e| e.to_string())?;
    let eta = EtaTable::from_probabilities(&probs, &probs.edges).map_err(|e| e.to_string())?;
    let fractions = probs.fractions.as_ref().expect("exact estimator keeps fractions");
    Ok(EdgeTableView {
        n,
        target: spec.target.values().to_vec(),
        factors: fractions.first().map_or(0, |f| f.den),
        max_eta: eta.max_eta(),
        edges: probs
            .edges
            .iter()
            .zip(&probs.probs)
            .zip(fractions)
            .map(|((&e, &p), f)| EdgeRow {
                edge: [e.0, e.1],
                probability: p,
                fraction: f.to_string(),
                eta: eta.eta(e).expect("every host edge is a candidate"),
            })
            .collect(),
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.map(|v| serde_json::to_string(&v).expect("view serializes"))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn run_sandwich_demo(
    n: usize,
    d: usize,
    seed: u32,
    trial: u32,
    c: f64,
    xi1: f64,
    xi: f64,
) -> Result<String, JsError> {
    to_json(sandwich_view(n, d, seed as u64, trial as u64, c, xi1, xi))
}

#[wasm_bindgen]
pub fn stage_params(n: f64, d: f64, c: f64) -> Result<String, JsError> {
    if !(n >= 0.0 && d >= 0.0 && n.fract() == 0.0 && d.fract() == 0.0) {
        return Err(JsError::new("n and d must be non-negative integers"));
    }
    to_json(params_view(n as u64, d as u64, c))
}

#[wasm_bindgen]
pub fn edge_probabilities_demo(target: &str, host: &str) -> Result<String, JsError> {
    to_json(edge_table(target, host))
}
