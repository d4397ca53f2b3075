//! `run`, `sweep`, `params` and `probe`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use sandwich_core::edgeprob::{conditional_edge_prob, exact_edge_fraction};
use sandwich_core::graph::{DegreeSequence, Edge, HostedFactorSpec, SimpleGraph};
use sandwich_core::params::{select_params_with_c, validate_constraints_with_ratio, ConstraintReport, StageParams};
use sandwich_core::params::{DEFAULT_C, DEFAULT_DOMINANCE_RATIO};

use crate::config::{parse_estimator, ExperimentArgs, ExperimentConfig, Format};
use crate::record::{read_records, summarize, summary_csv, write_records, RunSummary, SUMMARY_CSV_HEADER};
use crate::{is_invariant_violation, run_records, thread_pool, CliError};

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

pub fn summary_path(out: &Path, format: Format) -> PathBuf {
    let ext = match format {
        Format::Json => "summary.json",
        Format::Csv => "summary.csv",
    };
    PathBuf::from(format!("{}.{ext}", out.display()))
}

pub fn render_summary(s: &RunSummary, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(s).expect("summary serializes") + "\n"),
        Format::Csv => summary_csv(&[s.csv_fields()]),
    }
}

/// Writes the trial records, then summarizes by reading them back.
pub fn cmd_run(args: &ExperimentArgs) -> Result<(), CliError> {
    let cfg = args.load()?;
    let plan = cfg.plan()?;
    let pool = thread_pool(cfg.threads)?;
    let records = run_records(&plan, &pool)?;
    match &cfg.out_path {
        Some(out) => {
            let f = File::create(out).map_err(io_err(out))?;
            write_records(&records, BufWriter::new(f))?;
            drop(records);
            let back = read_records(BufReader::new(File::open(out).map_err(io_err(out))?))?;
            let path = summary_path(out, cfg.format);
            std::fs::write(&path, render_summary(&summarize(&plan, &back), cfg.format)?).map_err(io_err(&path))?;
            eprintln!(
                "wrote {} records to {} and {}",
                back.len(),
                out.display(),
                path.display()
            );
        }
        None => {
            write_records(&records, std::io::stdout().lock())?;
            eprint!("{}", render_summary(&summarize(&plan, &records), cfg.format)?);
        }
    }
    Ok(())
}

/// Grid axes. An absent axis takes the template's value; an empty one empties the grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Grid {
    pub n: Option<Vec<usize>>,
    pub d: Option<Vec<usize>>,
    pub zeta_mult: Option<Vec<f64>>,
    pub estimator: Option<Vec<String>>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub base: ExperimentArgs,
    /// JSON grid file with optional `n`, `d`, `zetaMult`, `estimator` arrays.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub ds: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub zeta_mults: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
}

fn error_row(cfg: &ExperimentConfig, err: &CliError) -> Vec<String> {
    let mut row = vec![String::new(); SUMMARY_CSV_HEADER.len()];
    row[0] = cfg.n.to_string();
    row[1] = cfg.d.to_string();
    row[2] = sandwich_core::verify::fmt_sig12(cfg.zeta_mult);
    row[3] = cfg.estimator.clone();
    row[4] = format!("{:?}", cfg.stage).to_lowercase();
    row[5] = cfg.trials.to_string();
    row[SUMMARY_CSV_HEADER.len() - 1] = err.to_string();
    row
}

/// One summary row per grid point, `n` outermost and `estimator` innermost.
/// Every point reuses the template seed.
pub fn sweep_rows(template: &ExperimentConfig, grid: &Grid) -> Result<(Vec<Vec<String>>, bool), CliError> {
    let pool = thread_pool(template.threads)?;
    let ns = grid.n.clone().unwrap_or_else(|| vec![template.n]);
    let ds = grid.d.clone().unwrap_or_else(|| vec![template.d]);
    let ms = grid.zeta_mult.clone().unwrap_or_else(|| vec![template.zeta_mult]);
    let es = grid
        .estimator
        .clone()
        .unwrap_or_else(|| vec![template.estimator.clone()]);
    let mut rows = Vec::new();
    let mut invariant_broken = false;
    for &n in &ns {
        for &d in &ds {
            for &m in &ms {
                for e in &es {
                    let cfg = ExperimentConfig {
                        n,
                        d,
                        zeta_mult: m,
                        estimator: e.clone(),
                        ..template.clone()
                    };
                    let point = cfg.plan().and_then(|plan| {
                        let records = run_records(&plan, &pool)?;
                        Ok(summarize(&plan, &records))
                    });
                    rows.push(match point {
                        Ok(s) => s.csv_fields(),
                        Err(err) => {
                            if let CliError::Trial { source, .. } = &err {
                                invariant_broken |= is_invariant_violation(source);
                            }
                            error_row(&cfg, &err)
                        }
                    });
                }
            }
        }
    }
    Ok((rows, invariant_broken))
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<bool, CliError> {
    let template = args.base.load()?;
    let mut grid = match &args.grid {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Grid::default(),
    };
    if args.ns.is_some() {
        grid.n = args.ns.clone();
    }
    if args.ds.is_some() {
        grid.d = args.ds.clone();
    }
    if args.zeta_mults.is_some() {
        grid.zeta_mult = args.zeta_mults.clone();
    }
    if args.estimators.is_some() {
        grid.estimator = args.estimators.clone();
    }
    let (rows, invariant_broken) = sweep_rows(&template, &grid)?;
    let csv = summary_csv(&rows)?;
    match &template.out_path {
        Some(out) => std::fs::write(out, csv).map_err(io_err(out))?,
        None => std::io::stdout()
            .lock()
            .write_all(csv.as_bytes())
            .map_err(|e| CliError::Io(e.to_string()))?,
    }
    Ok(invariant_broken)
}

#[derive(Debug, Clone, Args)]
pub struct ParamsArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub d: u64,
    /// The constant in `ζ = C·ξ`.
    #[arg(long = "C", default_value_t = DEFAULT_C)]
    pub c: f64,
    /// How large a ratio counts as `≫`.
    #[arg(long, default_value_t = DEFAULT_DOMINANCE_RATIO)]
    pub dominance_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamsReport {
    pub params: StageParams,
    pub constraints: ConstraintReport,
}

pub fn params_report(args: &ParamsArgs) -> Result<ParamsReport, CliError> {
    let params = select_params_with_c(args.n, args.d, args.c).map_err(|e| CliError::Config(e.to_string()))?;
    let constraints = validate_constraints_with_ratio(
        params.n as f64,
        params.d as f64,
        params.xi1,
        params.f,
        params.sigma,
        args.dominance_ratio,
    );
    Ok(ParamsReport { params, constraints })
}

pub fn cmd_params(args: &ParamsArgs) -> Result<(), CliError> {
    let report = params_report(args)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct ProbeArgs {
    /// Host graph in edge-list format.
    #[arg(long)]
    pub host: PathBuf,
    /// Target degrees, whitespace or comma separated.
    #[arg(long)]
    pub target: String,
    /// The pair to probe, e.g. "0 1".
    #[arg(long)]
    pub edge: String,
    #[arg(long, default_value = "exact")]
    pub estimator: String,
    /// Seed of the empirical estimator.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_list(s: &str, what: &str) -> Result<Vec<usize>, CliError> {
    s.split(|c: char| c.is_whitespace() || c == ',' || c == '-')
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse()
                .map_err(|_| CliError::Config(format!("{what}: `{x}` is not a non-negative integer")))
        })
        .collect()
}

pub fn probe(args: &ProbeArgs) -> Result<String, CliError> {
    let text = std::fs::read_to_string(&args.host).map_err(io_err(&args.host))?;
    let host =
        SimpleGraph::parse_edge_list(&text).map_err(|e| CliError::Config(format!("{}: {e}", args.host.display())))?;
    let target = DegreeSequence::new(parse_list(&args.target, "target")?)
        .map_err(|e| CliError::Config(format!("target: {e}")))?;
    let ends = parse_list(&args.edge, "edge")?;
    let [u, v] = ends[..] else {
        return Err(CliError::Config(format!(
            "edge: expected two vertices, got `{}`",
            args.edge
        )));
    };
    if u == v || u.max(v) >= host.n() {
        return Err(CliError::Config(format!(
            "edge: `{}` is not a pair of {} vertices",
            args.edge,
            host.n()
        )));
    }
    let spec = HostedFactorSpec::unchecked(host, target).map_err(|e| CliError::Config(format!("target: {e}")))?;
    let jk = Edge::new(u, v);
    let est = parse_estimator(&args.estimator, args.seed)?;
    if est.is_exact() {
        let frac = exact_edge_fraction(&spec, jk).map_err(|e| CliError::Config(e.to_string()))?;
        let shown = if frac.num == 0 {
            "0".to_string()
        } else {
            frac.to_string()
        };
        Ok(format!("{shown} ({} of {} factors)", frac.num, frac.den))
    } else {
        let p = conditional_edge_prob(&spec, jk, &est).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(format!("{p} ({})", est.label()))
    }
}
