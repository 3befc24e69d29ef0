//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use planimm_core::compat::{compatibility_defect, CompatReport, DEFAULT_COMPAT_THRESHOLD};
use planimm_core::counterexample3d::run_counterexample;
use planimm_core::field::curl;
use planimm_core::geodesic::{
    oracle_error, reconstruct_map, BoundaryData, Interpolation, ReconstructOptions, DEFAULT_RECONSTRUCTION_TOLERANCE,
};
use planimm_core::metric::{induced_metric, verify_lemma1};
use planimm_core::solver::{smooth_perturbation, solve, uniqueness_experiment, Prescription, SolveReport};
use planimm_core::{AnalyticMap, Grid2, MapField, ScalarField};
use serde::Serialize;

use crate::checks;
use crate::config::{ConfigError, ExperimentConfig};
use crate::fieldfile::{self, FieldData, FieldFileError};
use crate::report;

#[derive(Debug, Parser)]
#[command(name = "planimm", version, about = "Planar immersion toolkit")]
pub struct Cli {
    /// Directory for reports and field files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print errors as JSON on stderr.
    #[arg(long, global = true)]
    pub json_errors: bool,
    /// Worker thread cap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// identity, rotation, scale, shear, sinusoidal; `rotation(0.5)` also accepted.
    #[arg(long)]
    pub map: String,
    /// Map parameters, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub params: Vec<f64>,
}

impl MapArgs {
    fn resolve(&self) -> Result<AnalyticMap, CliError> {
        parse_map(&self.map, &self.params)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Random-sample check of the Clifford algebra identities.
    VerifyAlgebra {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Refinement table for the discrete Jacobian and curl.
    VerifyOps {
        #[arg(long, default_value = "sinusoidal(0.1)")]
        map: String,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        params: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "17,33,65")]
        grids: Vec<usize>,
        #[arg(long, default_value_t = 3.0)]
        min_ratio: f64,
    },
    /// Node-by-node comparison of the eigen-expansion metric with dφᵀdφ.
    VerifyLemma1 {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        grid: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Rebuild a map from its induced metric and boundary values by geodesic shooting.
    Reconstruct {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        grid: usize,
        #[arg(long, default_value_t = 8)]
        directions: usize,
        #[arg(long, default_value_t = DEFAULT_RECONSTRUCTION_TOLERANCE)]
        tolerance: f64,
        /// Bicubic instead of bilinear Christoffel interpolation.
        #[arg(long)]
        bicubic: bool,
    },
    /// Recover a map from its Jacobian, curl and boundary values.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve from several perturbed starts and compare the solutions.
    Uniqueness {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check that integrated curl matches the boundary circulation.
    Compat {
        #[arg(long, requires = "grid", conflicts_with_all = ["curl_file", "boundary_file"])]
        map: Option<String>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        params: Vec<f64>,
        #[arg(long)]
        grid: Option<usize>,
        /// Replace the map's curl with a constant.
        #[arg(long, allow_negative_numbers = true, requires = "map")]
        curl_const: Option<f64>,
        #[arg(long, requires = "boundary_file")]
        curl_file: Option<PathBuf>,
        #[arg(long, requires = "curl_file")]
        boundary_file: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_COMPAT_THRESHOLD)]
        threshold: f64,
    },
    /// Equal Jacobian and curl with different metrics in three dimensions.
    Counterexample3d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Usage,
    Config,
    Check,
    Io,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Check => 1,
            _ => 2,
        }
    }

    fn to_json(&self) -> String {
        serde_json::json!({ "error": { "kind": self.kind, "exit_code": self.exit_code(), "message": self.message } })
            .to_string()
    }
}

impl From<planimm_core::Error> for CliError {
    fn from(e: planimm_core::Error) -> Self {
        use planimm_core::Error as E;
        let kind = match e {
            E::Defective | E::DefectiveNodes(_) | E::Incompatible { .. } | E::ImmersionLost(_) => ErrorKind::Check,
            _ => ErrorKind::Config,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::new(ErrorKind::Config, e.to_string())
    }
}

impl From<FieldFileError> for CliError {
    fn from(e: FieldFileError) -> Self {
        Self::new(ErrorKind::Config, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(ErrorKind::Io, e.to_string())
    }
}

/// `name` or `name(p1, p2, ...)`, plus any `--params`.
pub fn parse_map(spec: &str, extra: &[f64]) -> Result<AnalyticMap, CliError> {
    let spec = spec.trim();
    let (name, mut params) = match spec.split_once('(') {
        Some((name, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| CliError::new(ErrorKind::Usage, format!("unbalanced parentheses in {spec:?}")))?;
            let params = inner
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError::new(ErrorKind::Usage, format!("bad map parameters in {spec:?}")))?;
            (name.trim(), params)
        }
        None => (spec, Vec::new()),
    };
    params.extend_from_slice(extra);
    Ok(AnalyticMap::from_name(name, &params)?)
}

/// Where artifacts go; `None` keeps everything on stdout.
struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    fn new(dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self { dir })
    }

    fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        if let Some(p) = self.path(name) {
            fs::write(p, serde_json::to_string_pretty(value).expect("report serializes") + "\n")?;
        }
        Ok(())
    }

    fn text(&self, name: &str, text: &str) -> Result<(), CliError> {
        if let Some(p) = self.path(name) {
            fs::write(p, text)?;
        }
        Ok(())
    }

    fn field(&self, name: &str, field: FieldData) -> Result<(), CliError> {
        if let Some(p) = self.path(name) {
            fieldfile::save(&p, &field)?;
        }
        Ok(())
    }
}

fn check(passed: bool, what: impl Into<String>) -> Result<(), CliError> {
    if passed {
        Ok(())
    } else {
        Err(CliError::new(ErrorKind::Check, what))
    }
}

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let json_errors = args.iter().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return if e.kind() == K::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 };
            }
            if json_errors {
                let rendered = e.to_string();
                let first = rendered.lines().next().unwrap_or_default().trim_start_matches("error: ");
                eprintln!("{}", CliError::new(ErrorKind::Usage, first).to_json());
            } else {
                let _ = e.print();
            }
            return 2;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err((e, json)) => {
            if json {
                eprintln!("{}", e.to_json());
            } else {
                eprintln!("error: {}", e.message);
            }
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), (CliError, bool)> {
    let json = cli.json_errors;
    execute(cli).map_err(|e| (e, json))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::new(ErrorKind::Usage, "--threads must be at least 1"));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = Output::new(cli.out)?;
    match cli.command {
        Command::VerifyAlgebra { samples, seed } => verify_algebra(&out, samples, seed),
        Command::VerifyOps { map, params, grids, min_ratio } => verify_ops(&out, &parse_map(&map, &params)?, &grids, min_ratio),
        Command::VerifyLemma1 { map, grid, tol } => verify_lemma1_cmd(&out, &map.resolve()?, grid, tol),
        Command::Reconstruct { map, grid, directions, tolerance, bicubic } => {
            let interpolation = if bicubic { Interpolation::Bicubic } else { Interpolation::Bilinear };
            reconstruct(&out, &map.resolve()?, grid, directions, ReconstructOptions { interpolation, tolerance })
        }
        Command::Solve { config } => solve_cmd(&out, &config),
        Command::Uniqueness { config } => uniqueness_cmd(&out, &config),
        Command::Compat { map, params, grid, curl_const, curl_file, boundary_file, threshold } => {
            let (crl, boundary) = match (map, curl_file, boundary_file) {
                (Some(map), None, None) => {
                    let map = parse_map(&map, &params)?;
                    let grid = Grid2::unit_square(grid.expect("clap requires --grid"))?;
                    let f = map.sample(&grid)?;
                    let crl = match curl_const {
                        Some(c) => ScalarField::constant(grid, c),
                        None => curl(&f),
                    };
                    (crl, BoundaryData::from_map_field(&f))
                }
                (None, Some(c), Some(b)) => {
                    (fieldfile::load_scalar(&c)?, BoundaryData::from_map_field(&fieldfile::load_map(&b)?))
                }
                _ => {
                    return Err(CliError::new(
                        ErrorKind::Usage,
                        "compat needs either --map with --grid, or --curl-file with --boundary-file",
                    ))
                }
            };
            compat(&out, &crl, &boundary, threshold)
        }
        Command::Counterexample3d => counterexample(&out),
    }
}

fn verify_algebra(out: &Output, samples: usize, seed: u64) -> Result<(), CliError> {
    let r = checks::algebra_suite(samples, seed);
    for c in &r.checks {
        println!("{:<4} {:<44} {:.3e}", if c.passed { "ok" } else { "FAIL" }, c.name, c.max_deviation);
    }
    out.json("algebra.json", &r)?;
    check(r.passed(), "algebra identities exceed tolerance")
}

fn verify_ops(out: &Output, map: &AnalyticMap, grids: &[usize], min_ratio: f64) -> Result<(), CliError> {
    if grids.len() < 2 {
        return Err(CliError::new(ErrorKind::Usage, "--grids needs at least two sizes"));
    }
    let rows = checks::operator_convergence(map, grids)?;
    let csv = checks::convergence_csv(&rows);
    print!("{csv}");
    let passed = checks::convergence_passes(&rows, min_ratio);
    out.text("ops_convergence.csv", &csv)?;
    out.json("ops.json", &report::OpsReport { map: *map, min_ratio, rows, passed })?;
    check(passed, format!("error ratios below {min_ratio}"))
}

fn verify_lemma1_cmd(out: &Output, map: &AnalyticMap, n: usize, tol: f64) -> Result<(), CliError> {
    let f = map.sample(&Grid2::unit_square(n)?)?;
    let r = verify_lemma1(&f)?;
    let passed = r.max_discrepancy < tol;
    println!("nodes {}  max discrepancy {:.3e}  max (tr, det) mismatch {:.3e}", r.nodes, r.max_discrepancy, r.max_char_mismatch);
    out.json("lemma1.json", &report::Lemma1Output { map: *map, grid: *f.grid(), tolerance: tol, report: r, passed })?;
    check(passed, format!("discrepancy above {tol:e}"))
}

fn reconstruct(out: &Output, map: &AnalyticMap, n: usize, k: usize, options: ReconstructOptions) -> Result<(), CliError> {
    let grid = Grid2::unit_square(n)?;
    let f = map.sample(&grid)?;
    let metric = induced_metric(&f)?;
    let (rec, r) = reconstruct_map(&metric, &BoundaryData::from_map_field(&f), k, &options)?;
    let (max_err, mean_err) = oracle_error(&rec, map);
    let passed = r.failed_nodes.is_empty() && max_err < options.tolerance && r.max_spread < options.tolerance;
    println!(
        "directions {k}  failed nodes {}  max spread {:.3e}  max oracle error {:.3e}",
        r.failed_nodes.len(),
        r.max_spread,
        max_err
    );
    out.json("reconstruction.json", &report::ReconstructionOutput::new(map, &r, options, max_err, mean_err, passed))?;
    out.field("metric.field", FieldData::Metric(metric))?;
    out.field("reconstructed.field", FieldData::Map(rec))?;
    check(passed, "reconstruction outside tolerance")
}

/// Coons blend of the boundary plus the seeded perturbation for `start`.
fn initial_guess(p: &Prescription, sigma: f64, seed: u64, start: u64) -> Result<MapField, CliError> {
    let blend = p.boundary().coons_blend();
    let delta = smooth_perturbation(&p.grid(), sigma, seed, start);
    Ok(MapField::new(p.grid(), blend.values().iter().zip(&delta).map(|(a, b)| *a + *b).collect())?)
}

fn load_experiment(out: &Output, path: &Path) -> Result<(crate::config::Experiment, Prescription), CliError> {
    let cfg = ExperimentConfig::load(path)?;
    let exp = cfg.validate()?;
    out.text("config.json", &(cfg.normalized_json() + "\n"))?;
    let p = Prescription::from_map(&exp.map, &exp.grid)?;
    Ok((exp, p))
}

fn solve_cmd(out: &Output, config: &Path) -> Result<(), CliError> {
    let (exp, p) = load_experiment(out, config)?;
    let init = initial_guess(&p, exp.sigma, exp.seed, 0)?;
    let r: SolveReport = solve(&p, &init, &exp.solver)?;
    let oracle = r.solution.sup_distance(&exp.map.sample(&exp.grid)?)?;
    println!(
        "{:?} after {} iterations  residual max {:.3e}  distance to sampled map {:.3e}",
        r.termination, r.iterations, r.residual_max, oracle
    );
    out.json("solve.json", &report::SolveOutput::new(&r, p.compatibility(), oracle))?;
    out.text("residual_history.csv", &report::history_csv(&r))?;
    out.field("solution.field", FieldData::Map(r.solution.clone()))?;
    check(r.converged, format!("solver stopped without converging ({:?})", r.termination))
}

fn uniqueness_cmd(out: &Output, config: &Path) -> Result<(), CliError> {
    let (exp, p) = load_experiment(out, config)?;
    let r = uniqueness_experiment(&p, exp.n_starts, exp.sigma, exp.seed, &exp.solver)?;
    println!(
        "{}/{} starts converged  max pairwise distance {:.3e}",
        r.converged.len(),
        exp.n_starts,
        r.max_pairwise_distance
    );
    let passed = !r.inconclusive && r.max_pairwise_distance < exp.uniqueness_tol;
    out.json("uniqueness.json", &report::UniquenessOutput::new(&r, exp.uniqueness_tol, passed))?;
    out.text("distances.csv", &report::distances_csv(&r))?;
    for s in &r.starts {
        if let Ok(rep) = &s.result {
            if rep.converged {
                out.field(&format!("solution_{:02}.field", s.index), FieldData::Map(rep.solution.clone()))?;
            }
        }
    }
    if r.inconclusive {
        return Err(CliError::new(ErrorKind::Check, "fewer than two starts converged; inconclusive"));
    }
    check(passed, format!("converged solutions differ by {:.3e}", r.max_pairwise_distance))
}

fn compat(out: &Output, crl: &ScalarField, boundary: &BoundaryData, threshold: f64) -> Result<(), CliError> {
    let r: CompatReport = compatibility_defect(crl, boundary)?;
    println!("integral of curl {:.12e}  boundary circulation {:.12e}", r.interior_integral, r.boundary_integral);
    println!("defect {:.3e}  relative {:.3e}", r.defect, r.relative_defect);
    let passed = r.is_compatible(threshold);
    out.json("compat.json", &report::CompatOutput { report: r, threshold, passed })?;
    check(passed, format!("relative defect {:.3e} not below {threshold:e}", r.relative_defect))
}

fn counterexample(out: &Output) -> Result<(), CliError> {
    let r = run_counterexample();
    for c in &r.checks {
        println!("{:<4} {}", if c.passed { "ok" } else { "FAIL" }, c.name);
    }
    out.json("counterexample3d.json", &r)?;
    check(r.passed(), "counterexample values differ")
}
