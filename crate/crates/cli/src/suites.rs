//! The `verify` suites. Each returns gating rows; informational figures go to stdout.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use sandwich_core::graph::{DegreeSequence, HostedFactorSpec, SimpleGraph};
use sandwich_core::sampling::{derive_trial_stream, enumerate_factors_with_budget, ENUMERATION_BUDGET};
use sandwich_core::scheme::{run_sandwich_on, run_stage1, run_stage2, STAGE1_STREAM, STAGE2_STREAM};
use sandwich_core::verify::{
    containment_rate, cross_independence_test, distribution_test_from_samples, edge_margin_test,
    estimator_deviation_report, pairwise_independence_test, SummaryRow, VerifyError,
};

use crate::config::{ExperimentArgs, Plan, Stage, EXACT_MAX_N};
use crate::{par_trials, thread_pool, CliError};

pub const ALPHA: f64 = 1e-3;
pub const CORRELATION_THRESHOLD: f64 = 0.05;
pub const REPLAY_TRIALS: usize = 200;
pub const DEVIATION_SPECS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Marginals,
    Uniformity,
    Independence,
    Containment,
    Estimators,
    All,
}

fn refuse(e: VerifyError) -> CliError {
    CliError::Config(format!("suite refused: {e}"))
}

fn row(test: &str, statistic: f64, threshold: f64, pass: bool) -> SummaryRow {
    SummaryRow {
        test: test.into(),
        statistic,
        threshold,
        pass,
    }
}

struct Ctx<'a> {
    plan: &'a Plan,
    pool: rayon::ThreadPool,
}

impl Ctx<'_> {
    fn stage1_graphs(&self) -> Result<Vec<(SimpleGraph, SimpleGraph)>, CliError> {
        let (p, cfg, seed) = (&self.plan.params, &self.plan.scheme, self.plan.cfg.seed);
        par_trials(&self.pool, self.plan.cfg.trials, |i| {
            let s1 = run_stage1(p, cfg, &derive_trial_stream(seed, i).substream(STAGE1_STREAM))?;
            Ok((s1.h_zeta, s1.h0))
        })
    }

    fn sandwiches<T: Send>(
        &self,
        f: impl Fn(sandwich_core::scheme::SandwichResult) -> T + Sync,
    ) -> Result<Vec<T>, CliError> {
        let (p, cfg, seed) = (&self.plan.params, &self.plan.scheme, self.plan.cfg.seed);
        par_trials(&self.pool, self.plan.cfg.trials, |i| {
            Ok(f(run_sandwich_on(p, cfg, &derive_trial_stream(seed, i))?))
        })
    }
}

fn marginals(ctx: &Ctx) -> Result<Vec<SummaryRow>, CliError> {
    let p = &ctx.plan.params;
    let (h_zeta, h0): (Vec<_>, Vec<_>) = ctx.stage1_graphs()?.into_iter().unzip();
    let mut rows = Vec::new();
    for (name, graphs, target) in [("h0", &h0, p.q1), ("h_zeta", &h_zeta, p.p1)] {
        let m = edge_margin_test(graphs, target).map_err(refuse)?;
        println!(
            "marginals: {name} mean density {:.6} against {target:.6}, band ±{:.6}",
            m.mean_density, m.band_half_width
        );
        rows.push(row(
            &format!("marginals.{name}.max_abs_deviation"),
            m.max_abs_deviation,
            m.band_half_width,
            m.pass,
        ));
        let ind = pairwise_independence_test(graphs, ctx.plan.cfg.seed).map_err(refuse)?;
        rows.push(row(
            &format!("marginals.{name}.max_abs_correlation"),
            ind.max_abs_correlation,
            CORRELATION_THRESHOLD,
            ind.passes(CORRELATION_THRESHOLD),
        ));
    }
    Ok(rows)
}

fn uniformity(ctx: &Ctx) -> Result<Vec<SummaryRow>, CliError> {
    let (plan, p) = (ctx.plan, &ctx.plan.params);
    if !plan.scheme.estimator.is_exact() {
        return Err(CliError::Config(
            "uniformity needs the exact estimator; approximate estimators do not preserve the law".into(),
        ));
    }
    if plan.cfg.stage == Stage::One {
        return Err(CliError::Config(
            "uniformity tests the assembled G, which stage one does not build".into(),
        ));
    }
    let spec = HostedFactorSpec::new(
        SimpleGraph::complete(p.n),
        DegreeSequence::constant(p.n, p.d).expect("n·d even"),
    )
    .expect("K_n hosts every regular target");
    let support = enumerate_factors_with_budget(&spec, ENUMERATION_BUDGET)
        .map_err(|e| CliError::Config(format!("support not enumerable: {e}")))?;
    let expected = plan.cfg.trials as f64 / support.len() as f64;
    if expected < sandwich_core::verify::MIN_EXPECTED_CELL {
        return Err(refuse(VerifyError::ExpectedTooSmall(expected)));
    }
    let samples = ctx.sandwiches(|r| r.gmid)?;
    let rep = distribution_test_from_samples(&samples, &support, None).map_err(refuse)?;
    println!(
        "uniformity: {} labeled {}-regular graphs, chi-square {:.3} on {} df",
        rep.support_size, p.d, rep.chi_square, rep.degrees_of_freedom
    );
    Ok(vec![row("uniformity.p_value", rep.p_value, ALPHA, rep.passes(ALPHA))])
}

fn independence(ctx: &Ctx) -> Result<Vec<SummaryRow>, CliError> {
    let (plan, p, cfg) = (ctx.plan, &ctx.plan.params, &ctx.plan.scheme);
    let (h0, h_tilde): (Vec<_>, Vec<_>) = ctx.sandwiches(|r| (r.stage1.h0, r.h_tilde))?.into_iter().unzip();
    let ind = cross_independence_test(&h0, &h_tilde).map_err(refuse)?;
    let seed = plan.cfg.seed;
    let replays = plan.cfg.trials.min(REPLAY_TRIALS);
    let offset = plan.cfg.trials as u64;
    let mismatches = par_trials(&ctx.pool, replays, |i| {
        let own = run_stage1(p, cfg, &derive_trial_stream(seed, i).substream(STAGE1_STREAM))?;
        let other = run_stage1(p, cfg, &derive_trial_stream(seed, i + offset).substream(STAGE1_STREAM))?;
        let s2 = derive_trial_stream(seed, i).substream(STAGE2_STREAM);
        let (a, zeta2) = run_stage2(p, cfg, &own, &s2)?;
        // ζ₂ follows the realized Δ(t); hold it fixed so only the stage-1 graph changes
        let mut fixed = cfg.clone();
        fixed.zeta2 = Some(zeta2);
        let (b, _) = run_stage2(p, &fixed, &other, &s2)?;
        Ok((a.m_zeta != b.m_zeta || a.m_up != b.m_up) as usize)
    })?
    .into_iter()
    .sum::<usize>();
    println!("independence: {replays} stage-2 replays under a swapped stage-1 outcome, {mismatches} differ");
    Ok(vec![
        row(
            "independence.replay_mismatches",
            mismatches as f64,
            0.0,
            mismatches == 0,
        ),
        row(
            "independence.max_abs_correlation",
            ind.max_abs_correlation,
            CORRELATION_THRESHOLD,
            ind.passes(CORRELATION_THRESHOLD),
        ),
    ])
}

fn containment(ctx: &Ctx) -> Result<Vec<SummaryRow>, CliError> {
    let results = ctx.sandwiches(|r| r)?;
    let c = containment_rate(&results).map_err(refuse)?;
    println!(
        "containment: lower {:.6}, upper {:.6}, both {:.6}, IndSample {:.6}, contained despite IndSample {}",
        c.lower, c.upper, c.both, c.any_ind_sample, c.contained_despite_trigger
    );
    Ok(vec![row(
        "containment.no_trigger_failures",
        c.no_trigger_failures as f64,
        0.0,
        c.no_trigger_failures == 0,
    )])
}

fn estimators(ctx: &Ctx) -> Result<Vec<SummaryRow>, CliError> {
    let p = &ctx.plan.params;
    if p.n > EXACT_MAX_N {
        return Err(CliError::Config(format!(
            "estimators compares against exact counts, capped at n ≤ {EXACT_MAX_N}"
        )));
    }
    let mut specs = vec![HostedFactorSpec::new(
        SimpleGraph::complete(p.n),
        DegreeSequence::constant(p.n, p.d).expect("n·d even"),
    )
    .expect("K_n hosts every regular target")];
    let (plan, cfg) = (ctx.plan, &ctx.plan.scheme);
    for i in 0..plan.cfg.trials as u64 {
        if specs.len() >= DEVIATION_SPECS {
            break;
        }
        let s1 = run_stage1(p, cfg, &derive_trial_stream(plan.cfg.seed, i).substream(STAGE1_STREAM))
            .map_err(|source| CliError::Trial { trial: i, source })?;
        if s1.t.is_zero() {
            continue;
        }
        let spec = HostedFactorSpec::unchecked(s1.h.complement(), s1.t).expect("same vertex count");
        if !specs.contains(&spec) {
            specs.push(spec);
        }
    }
    let samples = plan.cfg.trials;
    let rep = estimator_deviation_report(&specs, samples, plan.cfg.seed).map_err(refuse)?;
    let bound = 2.5 / (samples as f64).sqrt();
    println!(
        "estimators: {} specs, heuristic max relative deviation {:.6}",
        rep.specs.len(),
        rep.max_rel_heuristic
    );
    Ok(vec![row(
        "estimators.empirical_max_abs_deviation",
        rep.max_abs_empirical,
        bound,
        rep.max_abs_empirical <= bound,
    )])
}

pub fn run_suite(suite: Suite, plan: &Plan) -> Result<Vec<SummaryRow>, CliError> {
    let ctx = Ctx {
        plan,
        pool: thread_pool(plan.cfg.threads)?,
    };
    match suite {
        Suite::Marginals => marginals(&ctx),
        Suite::Uniformity => uniformity(&ctx),
        Suite::Independence => independence(&ctx),
        Suite::Containment => containment(&ctx),
        Suite::Estimators => estimators(&ctx),
        Suite::All => {
            let mut rows = Vec::new();
            for s in [
                Suite::Marginals,
                Suite::Uniformity,
                Suite::Independence,
                Suite::Containment,
                Suite::Estimators,
            ] {
                rows.extend(run_suite(s, plan)?);
            }
            Ok(rows)
        }
    }
}

/// Prints one line per gating row; `Ok(true)` iff all pass.
pub fn cmd_verify(suite: Suite, args: &ExperimentArgs) -> Result<bool, CliError> {
    let cfg = args.load()?;
    let plan = cfg.plan()?;
    let rows = run_suite(suite, &plan)?;
    for r in &rows {
        println!(
            "{} {}: statistic {} threshold {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.test,
            sandwich_core::verify::fmt_sig12(r.statistic),
            sandwich_core::verify::fmt_sig12(r.threshold)
        );
    }
    if let Some(out) = &cfg.out_path {
        std::fs::write(out, sandwich_core::verify::summary_csv(&rows))
            .map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    }
    Ok(rows.iter().all(|r| r.pass))
}
