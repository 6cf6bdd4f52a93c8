//! Density and load sweeps, CSV rows and seed aggregates.

use std::fmt::Write as _;

use orsim_core::simcore::{run_scenario, MetricsRow, Policy, ScenarioError};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::config::ExperimentConfig;

pub const CSV_HEADER: &str =
    "policy,nodes,cbr,seed,mean_delay_ms,pdr,throughput,dup_per_delivery,failures";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Density,
    Load,
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Sweep::Density => "density",
            Sweep::Load => "load",
        }
    }
}

/// One replication: `policy` on the `(nodes, cbr)` scenario with `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Job {
    pub policy: Policy,
    pub nodes: usize,
    pub cbr: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowResult {
    pub job: Job,
    pub outcome: Result<MetricsRow, ScenarioError>,
}

fn error_kind(e: &ScenarioError) -> &'static str {
    match e {
        ScenarioError::Invalid { .. } => "invalid",
        ScenarioError::NoPackets => "no-packets",
        ScenarioError::Topology(_) => "topology",
    }
}

impl RowResult {
    pub fn csv_line(&self) -> String {
        let j = &self.job;
        match &self.outcome {
            Ok(m) => format!(
                "{},{},{},{},{},{},{},{},{}",
                j.policy,
                j.nodes,
                j.cbr,
                j.seed,
                m.mean_delay_ms,
                m.pdr,
                m.throughput,
                m.dup_per_delivery,
                m.failures.total()
            ),
            Err(e) => format!(
                "{},{},{},{},NaN,NaN,NaN,NaN,error:{}",
                j.policy,
                j.nodes,
                j.cbr,
                j.seed,
                error_kind(e)
            ),
        }
    }
}

/// Jobs in canonical order: scenario, then policy, then seed.
pub fn jobs(config: &ExperimentConfig, sweep: Sweep) -> Vec<Job> {
    let scenarios: Vec<(usize, usize)> = match sweep {
        Sweep::Density => config
            .node_counts
            .iter()
            .map(|&n| (n, config.density_cbr))
            .collect(),
        Sweep::Load => config
            .cbr_connections
            .iter()
            .map(|&c| (config.load_nodes, c))
            .collect(),
    };
    let mut out = Vec::new();
    for (nodes, cbr) in scenarios {
        for &policy in &config.policies {
            for &seed in &config.seeds {
                out.push(Job {
                    policy,
                    nodes,
                    cbr,
                    seed,
                });
            }
        }
    }
    out
}

pub fn run_job(config: &ExperimentConfig, job: Job) -> RowResult {
    let scenario = config.scenario(job.policy, job.nodes, job.cbr);
    RowResult {
        job,
        outcome: run_scenario(&scenario, job.seed),
    }
}

/// Runs every job on the current rayon pool; results keep job order.
pub fn run_sweep(config: &ExperimentConfig, sweep: Sweep) -> Vec<RowResult> {
    jobs(config, sweep)
        .into_par_iter()
        .map(|job| run_job(config, job))
        .collect()
}

pub fn to_csv(rows: &[RowResult]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// Mean and 95% Student-t half-width; NaN inputs are skipped.
pub fn mean_ci(values: &[f64]) -> (f64, f64, usize) {
    let xs: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0, n);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    (mean, t * (var / n as f64).sqrt(), n)
}

/// Per `(policy, scenario)` means with 95% confidence half-widths, one
/// gnuplot data block per policy.
pub fn to_aggregate(rows: &[RowResult], sweep: Sweep) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} sweep; columns: nodes cbr runs mean_delay_ms ci95 pdr ci95 throughput ci95 dup_per_delivery ci95",
        sweep.name()
    );
    let mut policies: Vec<Policy> = Vec::new();
    for r in rows {
        if !policies.contains(&r.job.policy) {
            policies.push(r.job.policy);
        }
    }
    for (bi, policy) in policies.iter().enumerate() {
        if bi > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# policy {policy}");
        let mut scenarios: Vec<(usize, usize)> = Vec::new();
        for r in rows.iter().filter(|r| r.job.policy == *policy) {
            if !scenarios.contains(&(r.job.nodes, r.job.cbr)) {
                scenarios.push((r.job.nodes, r.job.cbr));
            }
        }
        for (nodes, cbr) in scenarios {
            let ok: Vec<&MetricsRow> = rows
                .iter()
                .filter(|r| r.job.policy == *policy && r.job.nodes == nodes && r.job.cbr == cbr)
                .filter_map(|r| r.outcome.as_ref().ok())
                .collect();
            let _ = write!(out, "{nodes} {cbr} {}", ok.len());
            let metrics: [fn(&MetricsRow) -> f64; 4] = [
                |m| m.mean_delay_ms,
                |m| m.pdr,
                |m| m.throughput,
                |m| m.dup_per_delivery,
            ];
            for f in metrics {
                let vals: Vec<f64> = ok.iter().map(|m| f(m)).collect();
                let (mean, ci, _) = mean_ci(&vals);
                let _ = write!(out, " {mean} {ci}");
            }
            out.push('\n');
        }
    }
    out
}
