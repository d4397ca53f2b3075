//! Per-trial records and the summary computed from them.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use sandwich_core::graph::pair_count;
use sandwich_core::sampling::{derive_trial_seed, derive_trial_stream};
use sandwich_core::scheme::{run_sandwich_on, run_stage1, SchemeError, TProperties, STAGE1_STREAM};
use sandwich_core::verify::fmt_sig12;

use crate::config::{Plan, Stage};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct StageOneSummary {
    pub edges_h: usize,
    pub delta_t: usize,
    pub range_t: usize,
    pub via_ind_sample: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct StageTwoSummary {
    pub edges_g: usize,
    pub via_ind_sample: bool,
    pub eta_exceed_count: u64,
    pub max_eta_seen: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SandwichFlags {
    pub contains_lower: bool,
    pub contains_upper: bool,
    pub any_ind_sample: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Densities {
    #[serde(rename = "GL")]
    pub gl: f64,
    #[serde(rename = "GU")]
    pub gu: f64,
}

/// One JSON line per trial. A section is present iff its stage ran.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub seed_derived: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage1: Option<StageOneSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage2: Option<StageTwoSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sandwich: Option<SandwichFlags>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub densities: Option<Densities>,
}

pub fn run_trial(plan: &Plan, index: u64) -> Result<TrialRecord, SchemeError> {
    let (p, cfg) = (&plan.params, &plan.scheme);
    let rng = derive_trial_stream(plan.cfg.seed, index);
    let mut rec = TrialRecord {
        trial_index: index,
        seed_derived: derive_trial_seed(plan.cfg.seed, index),
        stage1: None,
        stage2: None,
        sandwich: None,
        densities: None,
    };
    let stage_one = |h: &sandwich_core::scheme::StageOneOutput| {
        let tp = TProperties::of(&h.t);
        StageOneSummary {
            edges_h: h.h.edge_count(),
            delta_t: tp.delta_t,
            range_t: tp.range_t,
            via_ind_sample: h.via_ind_sample,
        }
    };
    if plan.cfg.stage == Stage::One {
        let s1 = run_stage1(p, cfg, &rng.substream(STAGE1_STREAM))?;
        rec.stage1 = Some(stage_one(&s1));
        return Ok(rec);
    }
    let r = run_sandwich_on(p, cfg, &rng)?;
    if plan.cfg.stage == Stage::Full {
        rec.stage1 = Some(stage_one(&r.stage1));
    }
    rec.stage2 = Some(StageTwoSummary {
        edges_g: r.stage2.g.edge_count(),
        via_ind_sample: r.stage2.via_ind_sample,
        eta_exceed_count: r.stage2.eta_exceed_count,
        max_eta_seen: r.stage2.max_eta_seen,
    });
    rec.sandwich = Some(SandwichFlags {
        contains_lower: r.contains_lower,
        contains_upper: r.contains_upper,
        any_ind_sample: r.any_ind_sample,
    });
    let pairs = pair_count(p.n) as f64;
    rec.densities = Some(Densities {
        gl: r.gl.edge_count() as f64 / pairs,
        gu: r.gu.edge_count() as f64 / pairs,
    });
    Ok(rec)
}

pub fn write_records<W: Write>(records: &[TrialRecord], mut w: W) -> Result<(), CliError> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| CliError::Io(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn read_records<R: BufRead>(r: R) -> Result<Vec<TrialRecord>, CliError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| CliError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CliError::Io(format!("record line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

/// Aggregates over a run. Rates are `None` when the stage they describe did not run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunSummary {
    pub n: usize,
    pub d: usize,
    pub zeta_mult: f64,
    pub estimator: String,
    pub approximate: bool,
    pub stage: Stage,
    pub trials: usize,
    pub lower_rate: Option<f64>,
    pub upper_rate: Option<f64>,
    pub both_rate: Option<f64>,
    pub any_ind_sample_rate: Option<f64>,
    pub no_trigger_failures: Option<usize>,
    pub stage1_ind_sample_rate: Option<f64>,
    pub stage2_ind_sample_rate: Option<f64>,
    pub mean_delta_t: Option<f64>,
    pub range_bound_rate: Option<f64>,
    pub mean_density_gl: Option<f64>,
    pub mean_density_gu: Option<f64>,
}

fn mean_of<T>(xs: &[T], f: impl Fn(&T) -> f64) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().map(f).sum::<f64>() / xs.len() as f64)
}

fn rate<T>(xs: &[T], f: impl Fn(&T) -> bool) -> Option<f64> {
    mean_of(xs, |x| f(x) as u8 as f64)
}

pub fn summarize(plan: &Plan, records: &[TrialRecord]) -> RunSummary {
    let s1: Vec<&StageOneSummary> = records.iter().filter_map(|r| r.stage1.as_ref()).collect();
    let s2: Vec<&StageTwoSummary> = records.iter().filter_map(|r| r.stage2.as_ref()).collect();
    let sw: Vec<&SandwichFlags> = records.iter().filter_map(|r| r.sandwich.as_ref()).collect();
    let dens: Vec<&Densities> = records.iter().filter_map(|r| r.densities.as_ref()).collect();
    RunSummary {
        n: plan.cfg.n,
        d: plan.cfg.d,
        zeta_mult: plan.cfg.zeta_mult,
        estimator: plan.scheme.estimator.label(),
        approximate: plan.approximate(),
        stage: plan.cfg.stage,
        trials: records.len(),
        lower_rate: rate(&sw, |f| f.contains_lower),
        upper_rate: rate(&sw, |f| f.contains_upper),
        both_rate: rate(&sw, |f| f.contains_lower && f.contains_upper),
        any_ind_sample_rate: rate(&sw, |f| f.any_ind_sample),
        no_trigger_failures: (!sw.is_empty()).then(|| {
            sw.iter()
                .filter(|f| !f.any_ind_sample && !(f.contains_lower && f.contains_upper))
                .count()
        }),
        stage1_ind_sample_rate: rate(&s1, |s| s.via_ind_sample),
        stage2_ind_sample_rate: rate(&s2, |s| s.via_ind_sample),
        mean_delta_t: mean_of(&s1, |s| s.delta_t as f64),
        range_bound_rate: rate(&s1, |s| s.range_t as f64 <= (s.delta_t as f64).powf(2.0 / 3.0)),
        mean_density_gl: mean_of(&dens, |x| x.gl),
        mean_density_gu: mean_of(&dens, |x| x.gu),
    }
}

pub const SUMMARY_CSV_HEADER: [&str; 18] = [
    "n",
    "d",
    "zeta_mult",
    "estimator",
    "stage",
    "trials",
    "lower_rate",
    "upper_rate",
    "both_rate",
    "any_ind_sample_rate",
    "no_trigger_failures",
    "stage1_ind_sample_rate",
    "stage2_ind_sample_rate",
    "mean_delta_t",
    "range_bound_rate",
    "mean_density_gl",
    "mean_density_gu",
    "error",
];

fn opt_real(x: Option<f64>) -> String {
    x.map(fmt_sig12).unwrap_or_default()
}

fn stage_name(s: Stage) -> &'static str {
    match s {
        Stage::One => "one",
        Stage::Two => "two",
        Stage::Full => "full",
    }
}

impl RunSummary {
    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.d.to_string(),
            fmt_sig12(self.zeta_mult),
            self.estimator.clone(),
            stage_name(self.stage).into(),
            self.trials.to_string(),
            opt_real(self.lower_rate),
            opt_real(self.upper_rate),
            opt_real(self.both_rate),
            opt_real(self.any_ind_sample_rate),
            self.no_trigger_failures.map(|x| x.to_string()).unwrap_or_default(),
            opt_real(self.stage1_ind_sample_rate),
            opt_real(self.stage2_ind_sample_rate),
            opt_real(self.mean_delta_t),
            opt_real(self.range_bound_rate),
            opt_real(self.mean_density_gl),
            opt_real(self.mean_density_gu),
            String::new(),
        ]
    }
}

pub fn summary_csv(rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(SUMMARY_CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
