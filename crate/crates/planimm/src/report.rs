//! JSON and CSV report shapes written by the CLI.

use planimm_core::compat::CompatReport;
use planimm_core::geodesic::{ReconstructOptions, ReconstructionReport};
use planimm_core::metric::Lemma1Report;
use planimm_core::solver::{SolveReport, StepRecord, Termination, UniquenessReport};
use planimm_core::{AnalyticMap, Grid2};
use serde::Serialize;

use crate::checks::ConvergenceRow;

#[derive(Debug, Serialize)]
pub struct OpsReport {
    pub map: AnalyticMap,
    pub min_ratio: f64,
    pub rows: Vec<ConvergenceRow>,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct Lemma1Output {
    pub map: AnalyticMap,
    pub grid: Grid2,
    pub tolerance: f64,
    #[serde(flatten)]
    pub report: Lemma1Report,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct FailureEntry {
    pub node: (usize, usize),
    pub direction: usize,
    pub error: String,
}

#[derive(Debug, Serialize)]
pub struct ReconstructionOutput {
    pub map: AnalyticMap,
    pub grid: Grid2,
    pub k: usize,
    pub options: ReconstructOptions,
    pub failures: Vec<FailureEntry>,
    pub failed_nodes: Vec<(usize, usize)>,
    pub max_spread: f64,
    pub mean_spread: f64,
    pub max_length_mismatch: f64,
    pub max_oracle_error: f64,
    pub mean_oracle_error: f64,
    pub passed: bool,
}

impl ReconstructionOutput {
    pub fn new(
        map: &AnalyticMap,
        r: &ReconstructionReport,
        options: ReconstructOptions,
        max_oracle_error: f64,
        mean_oracle_error: f64,
        passed: bool,
    ) -> Self {
        Self {
            map: *map,
            grid: r.grid,
            k: r.directions,
            options,
            failures: r
                .failures
                .iter()
                .map(|f| FailureEntry { node: f.node, direction: f.direction, error: f.error.to_string() })
                .collect(),
            failed_nodes: r.failed_nodes.clone(),
            max_spread: r.max_spread,
            mean_spread: r.mean_spread,
            max_length_mismatch: r.max_length_mismatch,
            max_oracle_error,
            mean_oracle_error,
            passed,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SolveOutput {
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub residual_max: f64,
    pub residual_norm: f64,
    pub steps: Vec<StepRecord>,
    pub compatibility: CompatReport,
    /// Sup distance from the solution to the samples the targets came from.
    pub oracle_distance: f64,
}

impl SolveOutput {
    pub fn new(r: &SolveReport, compatibility: CompatReport, oracle_distance: f64) -> Self {
        Self {
            converged: r.converged,
            termination: r.termination,
            iterations: r.iterations,
            residual_max: r.residual_max,
            residual_norm: r.residual_norm,
            steps: r.steps.clone(),
            compatibility,
            oracle_distance,
        }
    }
}

pub fn history_csv(r: &SolveReport) -> String {
    let mut s = String::from("iteration,residual_norm\n");
    for (k, v) in r.residual_history.iter().enumerate() {
        s += &format!("{k},{v:e}\n");
    }
    s
}

#[derive(Debug, Serialize)]
pub struct StartSummary {
    pub index: usize,
    pub converged: bool,
    pub termination: Option<Termination>,
    pub iterations: Option<usize>,
    pub residual_max: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct UniquenessOutput {
    pub starts: Vec<StartSummary>,
    pub converged: Vec<usize>,
    pub distances: Vec<Vec<f64>>,
    pub max_pairwise_distance: f64,
    pub inconclusive: bool,
    pub tolerance: f64,
    pub passed: bool,
}

impl UniquenessOutput {
    pub fn new(r: &UniquenessReport, tolerance: f64, passed: bool) -> Self {
        let starts = r
            .starts
            .iter()
            .map(|s| match &s.result {
                Ok(rep) => StartSummary {
                    index: s.index,
                    converged: rep.converged,
                    termination: Some(rep.termination),
                    iterations: Some(rep.iterations),
                    residual_max: Some(rep.residual_max),
                    error: None,
                },
                Err(e) => StartSummary {
                    index: s.index,
                    converged: false,
                    termination: None,
                    iterations: None,
                    residual_max: None,
                    error: Some(e.to_string()),
                },
            })
            .collect();
        Self {
            starts,
            converged: r.converged.clone(),
            distances: r.distances.clone(),
            max_pairwise_distance: r.max_pairwise_distance,
            inconclusive: r.inconclusive,
            tolerance,
            passed,
        }
    }
}

/// Distance matrix between converged starts, labelled by start index.
pub fn distances_csv(r: &UniquenessReport) -> String {
    let mut s = String::from("start");
    for c in &r.converged {
        s += &format!(",{c}");
    }
    s.push('\n');
    for (c, row) in r.converged.iter().zip(&r.distances) {
        s += &c.to_string();
        for d in row {
            s += &format!(",{d:e}");
        }
        s.push('\n');
    }
    s
}

#[derive(Debug, Serialize)]
pub struct CompatOutput {
    #[serde(flatten)]
    pub report: CompatReport,
    pub threshold: f64,
    pub passed: bool,
}
