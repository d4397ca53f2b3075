//! Statistical checks for the distributional claims: chi-square against an exact
//! support, per-pair edge frequencies, pairwise correlations, containment rates.

use std::collections::HashMap;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::edgeprob::{conditional_edge_prob, EdgeProbError, EstimatorHandle};
use crate::graph::{all_pairs, Edge, HostedFactorSpec, SimpleGraph};
use crate::sampling::{FactorSampleMethod, RngStream};
use crate::scheme::SandwichResult;

pub const MIN_EXPECTED_CELL: f64 = 5.0;
pub const MIN_MARGIN_GRAPHS: usize = 1000;
pub const MIN_INDEPENDENCE_GRAPHS: usize = 5000;
pub const CORRELATION_SUBSAMPLE: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("empty support")]
    EmptySupport,
    #[error("support and weights differ in length ({support} vs {weights})")]
    WeightMismatch { support: usize, weights: usize },
    #[error("sampled graph outside the support: {0}")]
    OutsideSupport(String),
    #[error("smallest expected cell {0} is below {MIN_EXPECTED_CELL}; chi-square refused")]
    ExpectedTooSmall(f64),
    #[error("need at least {need} graphs, got {got}")]
    TooFewGraphs { need: usize, got: usize },
    #[error("no results to aggregate")]
    EmptyInput,
    #[error(transparent)]
    Estimator(#[from] EdgeProbError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTestReport {
    pub support_size: usize,
    pub trials: u64,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub min_expected_cell: f64,
}

impl DistributionTestReport {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

/// Pearson chi-square of `observed` against expected counts proportional to `weights`.
pub fn chi_square_test(observed: &[u64], weights: &[f64]) -> Result<DistributionTestReport, VerifyError> {
    if observed.is_empty() {
        return Err(VerifyError::EmptySupport);
    }
    if observed.len() != weights.len() {
        return Err(VerifyError::WeightMismatch {
            support: observed.len(),
            weights: weights.len(),
        });
    }
    let trials: u64 = observed.iter().sum();
    let wsum: f64 = weights.iter().sum();
    let expected: Vec<f64> = weights.iter().map(|w| w / wsum * trials as f64).collect();
    let min_expected = expected.iter().copied().fold(f64::INFINITY, f64::min);
    if observed.len() == 1 {
        return Ok(DistributionTestReport {
            support_size: 1,
            trials,
            chi_square: 0.0,
            degrees_of_freedom: 0,
            p_value: 1.0,
            min_expected_cell: min_expected,
        });
    }
    if min_expected < MIN_EXPECTED_CELL {
        return Err(VerifyError::ExpectedTooSmall(min_expected));
    }
    let chi: f64 = observed
        .iter()
        .zip(&expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = observed.len() - 1;
    let p = ChiSquared::new(dof as f64).expect("dof >= 1").sf(chi);
    Ok(DistributionTestReport {
        support_size: observed.len(),
        trials,
        chi_square: chi,
        degrees_of_freedom: dof,
        p_value: p.clamp(0.0, 1.0),
        min_expected_cell: min_expected,
    })
}

/// Tallies of graphs over a labeled support.
#[derive(Debug, Clone)]
pub struct SupportCounter {
    index: HashMap<SimpleGraph, usize>,
    pub counts: Vec<u64>,
}

impl SupportCounter {
    pub fn new(support: &[SimpleGraph]) -> Result<Self, VerifyError> {
        if support.is_empty() {
            return Err(VerifyError::EmptySupport);
        }
        let index = support.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect();
        Ok(SupportCounter {
            index,
            counts: vec![0; support.len()],
        })
    }

    pub fn add(&mut self, g: &SimpleGraph) -> Result<(), VerifyError> {
        let i = *self
            .index
            .get(g)
            .ok_or_else(|| VerifyError::OutsideSupport(format!("{:?}", g.edge_vec())))?;
        self.counts[i] += 1;
        Ok(())
    }
}

pub fn distribution_test_from_samples(
    samples: &[SimpleGraph],
    support: &[SimpleGraph],
    weights: Option<&[f64]>,
) -> Result<DistributionTestReport, VerifyError> {
    let mut counter = SupportCounter::new(support)?;
    for g in samples {
        counter.add(g)?;
    }
    let uniform = vec![1.0; support.len()];
    chi_square_test(&counter.counts, weights.unwrap_or(&uniform))
}

/// Draws `trials` graphs from `sampler` and tests them against the uniform law on `support`.
pub fn exact_distribution_test<F>(
    sampler: F,
    support: &[SimpleGraph],
    trials: u64,
    rng: &mut RngStream,
) -> Result<DistributionTestReport, VerifyError>
where
    F: FnMut(&mut RngStream) -> SimpleGraph,
{
    exact_distribution_test_weighted(sampler, support, None, trials, rng)
}

pub fn exact_distribution_test_weighted<F>(
    mut sampler: F,
    support: &[SimpleGraph],
    weights: Option<&[f64]>,
    trials: u64,
    rng: &mut RngStream,
) -> Result<DistributionTestReport, VerifyError>
where
    F: FnMut(&mut RngStream) -> SimpleGraph,
{
    let mut counter = SupportCounter::new(support)?;
    for _ in 0..trials {
        counter.add(&sampler(rng))?;
    }
    let uniform = vec![1.0; support.len()];
    chi_square_test(&counter.counts, weights.unwrap_or(&uniform))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeMarginReport {
    pub graphs: usize,
    pub target_p: f64,
    pub band_half_width: f64,
    pub frequencies: Vec<(Edge, f64)>,
    pub outside_band: Vec<Edge>,
    pub max_abs_deviation: f64,
    pub mean_density: f64,
    pub pass: bool,
}

/// Per-pair frequencies against `target_p ± 4·√(p(1−p)/trials)`.
pub fn edge_margin_test(graphs: &[SimpleGraph], target_p: f64) -> Result<EdgeMarginReport, VerifyError> {
    if graphs.len() < MIN_MARGIN_GRAPHS {
        return Err(VerifyError::TooFewGraphs {
            need: MIN_MARGIN_GRAPHS,
            got: graphs.len(),
        });
    }
    let n = graphs[0].n();
    let pairs: Vec<Edge> = all_pairs(n).collect();
    let trials = graphs.len() as f64;
    let band = 4.0 * (target_p * (1.0 - target_p) / trials).sqrt();
    let mut frequencies = Vec::with_capacity(pairs.len());
    let mut outside = Vec::new();
    let mut max_dev: f64 = 0.0;
    for &e in &pairs {
        let f = graphs.iter().filter(|g| g.contains(e)).count() as f64 / trials;
        let dev = (f - target_p).abs();
        max_dev = max_dev.max(dev);
        // the band is empty at p ∈ {0, 1}, where only an exact match passes
        if dev > band {
            outside.push(e);
        }
        frequencies.push((e, f));
    }
    let mean_density = frequencies.iter().map(|x| x.1).sum::<f64>() / pairs.len().max(1) as f64;
    Ok(EdgeMarginReport {
        graphs: graphs.len(),
        target_p,
        band_half_width: band,
        pass: outside.is_empty(),
        frequencies,
        outside_band: outside,
        max_abs_deviation: max_dev,
        mean_density,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub pairs_tested: usize,
    pub max_abs_correlation: f64,
    pub mean_abs_correlation: f64,
}

impl IndependenceReport {
    pub fn passes(&self, threshold: f64) -> bool {
        self.max_abs_correlation < threshold
    }
}

fn indicator_columns(graphs: &[SimpleGraph], pairs: &[Edge]) -> Vec<Vec<bool>> {
    pairs
        .iter()
        .map(|&e| graphs.iter().map(|g| g.contains(e)).collect())
        .collect()
}

/// Sample correlation, or `None` when either column is constant.
fn correlation(x: &[bool], y: &[bool]) -> Option<f64> {
    let n = x.len() as f64;
    let (mut sx, mut sy, mut sxy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (a, b) = (a as u8 as f64, b as u8 as f64);
        sx += a;
        sy += b;
        sxy += a * b;
    }
    let (mx, my) = (sx / n, sy / n);
    let cov = sxy / n - mx * my;
    let vx = mx - mx * mx;
    let vy = my - my * my;
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    Some((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

fn summarize(pairs: &[(usize, usize)], a: &[Vec<bool>], b: &[Vec<bool>]) -> IndependenceReport {
    let cors: Vec<f64> = pairs
        .iter()
        .filter_map(|&(i, j)| correlation(&a[i], &b[j]))
        .map(f64::abs)
        .collect();
    IndependenceReport {
        pairs_tested: cors.len(),
        max_abs_correlation: cors.iter().copied().fold(0.0, f64::max),
        mean_abs_correlation: if cors.is_empty() {
            0.0
        } else {
            cors.iter().sum::<f64>() / cors.len() as f64
        },
    }
}

fn subsample(all: Vec<(usize, usize)>, seed: u64) -> Vec<(usize, usize)> {
    if all.len() <= CORRELATION_SUBSAMPLE {
        return all;
    }
    let mut rng = RngStream::from_seed(seed);
    let mut idx = sample(&mut rng, all.len(), CORRELATION_SUBSAMPLE).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| all[i]).collect()
}

/// Correlations between distinct pair indicators within one ensemble; at most
/// [`CORRELATION_SUBSAMPLE`] pair-of-pairs, chosen by `seed`.
pub fn pairwise_independence_test(graphs: &[SimpleGraph], seed: u64) -> Result<IndependenceReport, VerifyError> {
    if graphs.len() < MIN_INDEPENDENCE_GRAPHS {
        return Err(VerifyError::TooFewGraphs {
            need: MIN_INDEPENDENCE_GRAPHS,
            got: graphs.len(),
        });
    }
    let pairs: Vec<Edge> = all_pairs(graphs[0].n()).collect();
    let cols = indicator_columns(graphs, &pairs);
    let m = pairs.len();
    let all: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    Ok(summarize(&subsample(all, seed), &cols, &cols))
}

/// Correlations between pair indicators of `a[i]` and of `b[i]`, over all pairs of pairs.
pub fn cross_independence_test(a: &[SimpleGraph], b: &[SimpleGraph]) -> Result<IndependenceReport, VerifyError> {
    let len = a.len().min(b.len());
    if len < MIN_INDEPENDENCE_GRAPHS || a.len() != b.len() {
        return Err(VerifyError::TooFewGraphs {
            need: MIN_INDEPENDENCE_GRAPHS.max(a.len().max(b.len())),
            got: len,
        });
    }
    let pairs: Vec<Edge> = all_pairs(a[0].n()).collect();
    let ca = indicator_columns(a, &pairs);
    let cb = indicator_columns(b, &pairs);
    let m = pairs.len();
    let all: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    Ok(summarize(&all, &ca, &cb))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentRates {
    pub trials: usize,
    pub lower: f64,
    pub upper: f64,
    pub both: f64,
    pub any_ind_sample: f64,
    /// Trials without any IndSample that failed containment. Zero by construction.
    pub no_trigger_failures: usize,
    /// Trials with IndSample that were contained anyway.
    pub contained_despite_trigger: usize,
}

pub fn containment_rate(results: &[SandwichResult]) -> Result<ContainmentRates, VerifyError> {
    if results.is_empty() {
        return Err(VerifyError::EmptyInput);
    }
    let n = results.len() as f64;
    let frac = |f: &dyn Fn(&SandwichResult) -> bool| results.iter().filter(|r| f(r)).count() as f64 / n;
    let both = |r: &SandwichResult| r.contains_lower && r.contains_upper;
    Ok(ContainmentRates {
        trials: results.len(),
        lower: frac(&|r| r.contains_lower),
        upper: frac(&|r| r.contains_upper),
        both: frac(&both),
        any_ind_sample: frac(&|r| r.any_ind_sample),
        no_trigger_failures: results.iter().filter(|r| !r.any_ind_sample && !both(r)).count(),
        contained_despite_trigger: results.iter().filter(|r| r.any_ind_sample && both(r)).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDeviation {
    pub edge: Edge,
    pub exact: f64,
    pub heuristic: f64,
    pub empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecDeviation {
    pub target: Vec<usize>,
    pub edges: Vec<EdgeDeviation>,
    /// `|heuristic − exact| / exact` over edges with positive exact probability.
    pub max_rel_heuristic: f64,
    pub mean_rel_heuristic: f64,
    pub max_abs_empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorDeviationReport {
    pub specs: Vec<SpecDeviation>,
    pub max_rel_heuristic: f64,
    pub max_abs_empirical: f64,
}

/// Exact vs heuristic vs empirical (`samples` enumeration draws per spec) for every host edge.
pub fn estimator_deviation_report(
    specs: &[HostedFactorSpec],
    samples: usize,
    seed: u64,
) -> Result<EstimatorDeviationReport, VerifyError> {
    let mut out = Vec::with_capacity(specs.len());
    for (k, spec) in specs.iter().enumerate() {
        let empirical = EstimatorHandle::Empirical {
            samples,
            method: FactorSampleMethod::Enumerate,
            seed: seed.wrapping_add(k as u64),
        };
        let emp = crate::edgeprob::edge_probabilities(spec, &empirical)?;
        let mut edges = Vec::new();
        for e in spec.host.edges() {
            edges.push(EdgeDeviation {
                edge: e,
                exact: conditional_edge_prob(spec, e, &EstimatorHandle::Exact)?,
                heuristic: conditional_edge_prob(spec, e, &EstimatorHandle::Heuristic)?,
                empirical: emp.get(e).expect("host edge"),
            });
        }
        let rel: Vec<f64> = edges
            .iter()
            .filter(|x| x.exact > 0.0)
            .map(|x| (x.heuristic - x.exact).abs() / x.exact)
            .collect();
        out.push(SpecDeviation {
            target: spec.target.values().to_vec(),
            max_rel_heuristic: rel.iter().copied().fold(0.0, f64::max),
            mean_rel_heuristic: if rel.is_empty() {
                0.0
            } else {
                rel.iter().sum::<f64>() / rel.len() as f64
            },
            max_abs_empirical: edges.iter().map(|x| (x.empirical - x.exact).abs()).fold(0.0, f64::max),
            edges,
        });
    }
    Ok(EstimatorDeviationReport {
        max_rel_heuristic: out.iter().map(|s| s.max_rel_heuristic).fold(0.0, f64::max),
        max_abs_empirical: out.iter().map(|s| s.max_abs_empirical).fold(0.0, f64::max),
        specs: out,
    })
}

/// One row of the `test,statistic,threshold,pass` summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub test: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// `x` with 12 significant digits, plain notation unless the exponent is extreme.
pub fn fmt_sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        format!("{:.*}", (11 - exp).max(0) as usize, x)
    } else {
        format!("{x:.11e}")
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from("test,statistic,threshold,pass\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.test,
            fmt_sig12(r.statistic),
            fmt_sig12(r.threshold),
            r.pass
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DegreeSequence;
    use crate::sampling::{enumerate_factors, gnp};
    use rand::Rng;

    fn cycles5() -> Vec<SimpleGraph> {
        let spec = HostedFactorSpec::new(SimpleGraph::complete(5), DegreeSequence::constant(5, 2).unwrap()).unwrap();
        enumerate_factors(&spec).unwrap()
    }

    #[test]
    fn uniform_passes_and_biased_fails() {
        let support = cycles5();
        let s = support.clone();
        let r = exact_distribution_test(
            move |rng| s[rng.random_range(0..s.len())].clone(),
            &support,
            60_000,
            &mut RngStream::from_seed(5),
        )
        .unwrap();
        assert!(r.passes(1e-3), "{r:?}");
        assert_eq!(r.degrees_of_freedom, 11);

        // outcome 0 carries weight 2
        let s = support.clone();
        let r = exact_distribution_test(
            move |rng| {
                let k = rng.random_range(0..13);
                s[if k == 12 { 0 } else { k }].clone()
            },
            &support,
            60_000,
            &mut RngStream::from_seed(6),
        )
        .unwrap();
        assert!(r.p_value < 1e-6, "{r:?}");
    }

    #[test]
    fn degenerate_and_refused() {
        let g = SimpleGraph::complete(3);
        let r = distribution_test_from_samples(&vec![g.clone(); 10], std::slice::from_ref(&g), None).unwrap();
        assert_eq!(r.p_value, 1.0);
        let support = cycles5();
        assert!(matches!(
            distribution_test_from_samples(&support[..3], &support, None),
            Err(VerifyError::ExpectedTooSmall(_))
        ));
        assert!(matches!(
            distribution_test_from_samples(&[SimpleGraph::empty(5)], &support, None),
            Err(VerifyError::OutsideSupport(_))
        ));
    }

    #[test]
    fn margins_and_correlation() {
        let empty = vec![SimpleGraph::empty(4); 1000];
        assert!(edge_margin_test(&empty, 0.0).unwrap().pass);
        let mut rng = RngStream::from_seed(9);
        let gs: Vec<_> = (0..50_000).map(|_| gnp(6, 0.48, &mut rng)).collect();
        assert!(edge_margin_test(&gs, 0.48).unwrap().pass);
        let ind = pairwise_independence_test(&gs, 1).unwrap();
        assert_eq!(ind.pairs_tested, 105);
        assert!(ind.passes(0.05), "{ind:?}");
        let cross = cross_independence_test(&gs, &gs).unwrap();
        assert!((cross.max_abs_correlation - 1.0).abs() < 1e-12);
        assert!(edge_margin_test(&gs[..10], 0.5).is_err());
    }

    #[test]
    fn containment_needs_input() {
        assert_eq!(containment_rate(&[]), Err(VerifyError::EmptyInput));
    }

    #[test]
    fn deviation_on_k5() {
        let spec = HostedFactorSpec::new(SimpleGraph::complete(5), DegreeSequence::constant(5, 2).unwrap()).unwrap();
        let r = estimator_deviation_report(&[spec], 100_000, 3).unwrap();
        assert!((r.max_rel_heuristic - 0.2).abs() < 1e-12);
        assert!(r.max_abs_empirical < 0.01);
        let zero = HostedFactorSpec::new(SimpleGraph::complete(4), DegreeSequence::zeros(4)).unwrap();
        let r = estimator_deviation_report(&[zero], 100, 3).unwrap();
        assert!(r.specs[0]
            .edges
            .iter()
            .all(|e| e.exact == 0.0 && e.heuristic == 0.0 && e.empirical == 0.0));
    }

    #[test]
    fn csv_digits() {
        assert_eq!(fmt_sig12(0.5), "0.500000000000");
        assert_eq!(fmt_sig12(123.0), "123.000000000");
        let csv = summary_csv(&[SummaryRow {
            test: "x".into(),
            statistic: 1.0,
            threshold: 0.001,
            pass: true,
        }]);
        assert_eq!(
            csv,
            "test,statistic,threshold,pass\nx,1.00000000000,0.00100000000000,true\n"
        );
    }
}
