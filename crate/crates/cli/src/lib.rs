//! `sandwich`: run, sweep and verify sandwich-coupling experiments from the shell.
//!
//! Exit codes: 0 on success, 1 on configuration or usage errors (and failed
//! verification suites), 2 when a trial breaks a hard invariant.

pub mod commands;
pub mod config;
pub mod record;
pub mod suites;

use rayon::prelude::*;
use thiserror::Error;

use sandwich_core::coupling::CouplingError;
use sandwich_core::scheme::SchemeError;

use crate::config::Plan;
use crate::record::{run_trial, TrialRecord};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("trial {trial}: {source}")]
    Trial { trial: u64, source: SchemeError },
    #[error("{0}")]
    Failed(String),
    #[error("{0}")]
    InvariantBroken(String),
}

pub fn is_invariant_violation(e: &SchemeError) -> bool {
    matches!(
        e,
        SchemeError::Coupling(CouplingError::Invariant { .. } | CouplingError::InfeasibleState { .. })
            | SchemeError::TPrimeMismatch { .. }
            | SchemeError::DualityMismatch { .. }
    )
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Trial { source, .. } if is_invariant_violation(source) => 2,
            CliError::InvariantBroken(_) => 2,
            _ => 1,
        }
    }
}

pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        b = b.num_threads(t);
    }
    b.build().map_err(|e| CliError::Config(e.to_string()))
}

/// Runs `f` on trials `0..count` in parallel; results are in index order and the
/// error reported is the one with the smallest index.
pub fn par_trials<T, F>(pool: &rayon::ThreadPool, count: usize, f: F) -> Result<Vec<T>, CliError>
where
    T: Send,
    F: Fn(u64) -> Result<T, SchemeError> + Sync,
{
    let results: Vec<Result<T, SchemeError>> = pool.install(|| (0..count as u64).into_par_iter().map(&f).collect());
    results
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|source| CliError::Trial {
                trial: i as u64,
                source,
            })
        })
        .collect()
}

pub fn run_records(plan: &Plan, pool: &rayon::ThreadPool) -> Result<Vec<TrialRecord>, CliError> {
    par_trials(pool, plan.cfg.trials, |i| run_trial(plan, i))
}
