//! Strategy runs and their artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use gridswitch::branchbound::MipOptions;
use gridswitch::coordinator::{run_parallel, trace_csv, ClockMode, RunOptions, RunReport, WorkerConfig};
use gridswitch::model::{solve_sdcopf, Topology};
use gridswitch::netio::{load_case, NetworkOptions};
use gridswitch::simplex::SimplexOptions;
use gridswitch::Network;
use log::info;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Internal(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) => 1,
            RunError::Data(_) => 2,
            RunError::Internal(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Branch-and-bound on the full model, no start.
    Otsp,
    /// As `otsp`, started from the all-lines-closed DC OPF.
    #[value(name = "otsp-x0")]
    #[serde(rename = "otsp-x0")]
    OtspX0,
    /// Master plus restricted-model workers.
    #[value(name = "p-otsp")]
    #[serde(rename = "p-otsp")]
    POtsp,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Otsp => "otsp",
            Strategy::OtspX0 => "otsp-x0",
            Strategy::POtsp => "p-otsp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ClockKind {
    Wall,
    Simulated,
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub case: PathBuf,
    pub strategy: Strategy,
    pub time_limit: f64,
    pub gap_tol: f64,
    pub workers: Vec<WorkerConfig>,
    pub seed: u64,
    pub clock: ClockKind,
    pub zero_pmin: bool,
    pub linearize: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub case: String,
    pub strategy: Strategy,
    pub ct_s: f64,
    pub gap_pct: Option<f64>,
    pub delta_z_pct: Option<f64>,
    pub z_dcopf: Option<f64>,
    pub z_final: Option<f64>,
    pub status: String,
    pub nodes: usize,
}

/// Parse `n0:dn[,n0:dn...]`.
pub fn parse_workers(s: &str) -> Result<Vec<(usize, usize)>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (a, b) = p.split_once(':').ok_or_else(|| format!("worker spec {p:?} is not n0:dn"))?;
            let n0 = a.trim().parse().map_err(|_| format!("bad n0 in {p:?}"))?;
            let dn = b.trim().parse().map_err(|_| format!("bad dn in {p:?}"))?;
            Ok((n0, dn))
        })
        .collect()
}

pub fn load_network(spec: &RunSpec) -> Result<Network, RunError> {
    let path = &spec.case;
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path).map_err(|e| RunError::Data(format!("cannot read {}: {e}", path.display())))?;
        return Network::from_json(&text).map_err(|e| RunError::Data(format!("{}: {e}", path.display())));
    }
    let opts = NetworkOptions { zero_pmin: spec.zero_pmin, linearize: spec.linearize, ..Default::default() };
    load_case(path, &opts).map_err(|e| RunError::Data(format!("{}: {e}", path.display())))
}

fn case_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn validate(spec: &RunSpec) -> Result<(), RunError> {
    if spec.strategy == Strategy::POtsp && spec.workers.is_empty() {
        return Err(RunError::Usage("p-otsp needs at least one worker".into()));
    }
    if !(spec.time_limit > 0.0) {
        return Err(RunError::Usage("time limit must be positive".into()));
    }
    if !(spec.gap_tol >= 0.0) {
        return Err(RunError::Usage("gap tolerance must be non-negative".into()));
    }
    for w in &spec.workers {
        w.validate().map_err(RunError::Usage)?;
    }
    Ok(())
}

pub fn execute(spec: &RunSpec, net: &Network) -> Result<(Summary, RunReport), RunError> {
    validate(spec)?;
    let z_dcopf = solve_sdcopf(net, &Topology::all(net.num_branches()), &SimplexOptions::default())
        .map_err(|e| RunError::Internal(e.to_string()))?
        .map(|d| d.solution.objective);
    let opts = RunOptions {
        mip: MipOptions { time_limit: spec.time_limit, gap_tol: spec.gap_tol, ..Default::default() },
        master_mipstart: spec.strategy == Strategy::OtspX0,
        clock: match spec.clock {
            ClockKind::Wall => ClockMode::Wall,
            ClockKind::Simulated => ClockMode::simulated(spec.seed),
        },
    };
    let workers: &[WorkerConfig] = if spec.strategy == Strategy::POtsp { &spec.workers } else { &[] };
    info!("{} on {}: {} workers", spec.strategy.as_str(), spec.case.display(), workers.len());
    let rep = run_parallel(Arc::new(net.clone()), &opts, workers);
    let z_final = rep.z_final();
    let delta_z_pct = match (z_dcopf, z_final) {
        (Some(z0), Some(z)) if z0.abs() > 0.0 => Some(100.0 * (z0 - z) / z0),
        _ => None,
    };
    let summary = Summary {
        case: case_name(&spec.case),
        strategy: spec.strategy,
        ct_s: rep.result.elapsed,
        gap_pct: rep.result.gap,
        delta_z_pct,
        z_dcopf,
        z_final,
        status: format!("{:?}", rep.result.status),
        nodes: rep.result.nodes,
    };
    Ok((summary, rep))
}

fn io_err(path: &Path, e: std::io::Error) -> RunError {
    RunError::Internal(format!("cannot write {}: {e}", path.display()))
}

pub fn write_artifacts(dir: &Path, summary: &Summary, rep: &RunReport) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let p = dir.join("summary.json");
    let json = serde_json::to_string_pretty(summary).map_err(|e| RunError::Internal(e.to_string()))?;
    fs::write(&p, json + "\n").map_err(|e| io_err(&p, e))?;
    let p = dir.join("trace.csv");
    fs::write(&p, trace_csv(&rep.trace)).map_err(|e| io_err(&p, e))?;
    Ok(())
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "-".into())
}

/// Rows of a comparison; `Err` rows keep their strategy and message.
pub type CompareRow = (Strategy, Result<Summary, String>);

/// Cost gap to the cheapest final objective among the rows, in $/h.
fn dz_bar(rows: &[CompareRow]) -> Vec<Option<f64>> {
    let best = rows
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok().and_then(|s| s.z_final))
        .min_by(f64::total_cmp);
    rows.iter()
        .map(|(_, r)| match (r.as_ref().ok().and_then(|s| s.z_final), best) {
            (Some(z), Some(b)) => Some(z - b),
            _ => None,
        })
        .collect()
}

pub fn compare_markdown(case: &str, rows: &[CompareRow]) -> String {
    let mut s = format!("# {case}\n\n| strategy | ct [s] | gap [%] | Δz [%] | Δz̄ [$/h] |\n|---|---:|---:|---:|---:|\n");
    for ((strategy, r), bar) in rows.iter().zip(dz_bar(rows)) {
        match r {
            Ok(x) => {
                let _ = writeln!(
                    s,
                    "| {} | {:.2} | {} | {} | {} |",
                    strategy.as_str(),
                    x.ct_s,
                    opt(x.gap_pct, 4),
                    opt(x.delta_z_pct, 4),
                    opt(bar, 2)
                );
            }
            Err(e) => {
                let _ = writeln!(s, "| {} | error: {} | | | |", strategy.as_str(), e.replace('|', "/"));
            }
        }
    }
    s
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut s = String::from("strategy,ct_s,gap_pct,delta_z_pct,dz_bar,z_final,error\n");
    for ((strategy, r), bar) in rows.iter().zip(dz_bar(rows)) {
        let blank = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        match r {
            Ok(x) => {
                let _ = writeln!(
                    s,
                    "{},{:.6},{},{},{},{},",
                    strategy.as_str(),
                    x.ct_s,
                    blank(x.gap_pct),
                    blank(x.delta_z_pct),
                    blank(bar),
                    blank(x.z_final)
                );
            }
            Err(e) => {
                let _ = writeln!(s, "{},,,,,,\"{}\"", strategy.as_str(), e.replace('"', "'"));
            }
        }
    }
    s
}
