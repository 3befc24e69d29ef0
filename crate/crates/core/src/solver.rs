//! Recovery of a map from prescribed Jacobian determinant, curl and boundary
//! values by Levenberg–Marquardt, and the multi-start uniqueness experiment.
//!
//! Unknowns are the interior node values (two per node); boundary nodes are
//! fixed to the boundary data. The objective stacks two blocks of equations:
//!
//! * node rows: `Jac φ − jac*` and `curl φ − curl*` at every interior node,
//!   using the central differences of [`crate::field`];
//! * cell rows: the same quantities at cell centres from the four-corner box
//!   stencil.
//!
//! Central differences never couple a node to its direct neighbours, and on
//! grids with an odd node count the sublattice of nodes with both indices odd
//! touches no boundary node, so translating that sublattice leaves every node
//! row unchanged. The cell rows remove that family.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::band::BandMatrix;
use crate::compat::{compatibility_defect, CompatReport, DEFAULT_COMPAT_THRESHOLD};
use crate::field::{self, Grid2, MapField, Mat2, ScalarField, IMMERSION_THRESHOLD};
use crate::ga2::Vector2;
use crate::geodesic::BoundaryData;
use crate::maps::AnalyticMap;
use crate::math;
use crate::par;
use crate::{Error, Result};

/// Largest tolerated distance between an initial guess and the boundary data.
const BOUNDARY_TOLERANCE: f64 = 1e-10;

/// Jacobian and curl at cell centres, cell `(i, j)` spanning nodes `i..=i+1`,
/// `j..=j+1`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CellTargets {
    pub jac: Vec<f64>,
    pub curl: Vec<f64>,
}

/// Box-stencil differential at the centre of cell `(i, j)`.
pub fn cell_differential(f: &MapField, i: usize, j: usize) -> Mat2 {
    let g = f.grid();
    let (p00, p10, p01, p11) = (f.get(i, j), f.get(i + 1, j), f.get(i, j + 1), f.get(i + 1, j + 1));
    let dx = (1.0 / (2.0 * g.hx())) * ((p10 - p00) + (p11 - p01));
    let dy = (1.0 / (2.0 * g.hy())) * ((p01 - p00) + (p11 - p10));
    Mat2::from_columns(dx, dy)
}

/// Cell-centred Jacobian and curl of a sampled map.
pub fn cell_jac_curl(f: &MapField) -> CellTargets {
    let g = f.grid();
    let (cx, cy) = (g.nx - 1, g.ny - 1);
    let mut jac = Vec::with_capacity(cx * cy);
    let mut curl = Vec::with_capacity(cx * cy);
    for j in 0..cy {
        for i in 0..cx {
            let d = cell_differential(f, i, j);
            jac.push(d.det());
            curl.push(d.m[1][0] - d.m[0][1]);
        }
    }
    CellTargets { jac, curl }
}

/// Prescribed Jacobian determinant, curl and boundary values.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prescription {
    jac_target: ScalarField,
    curl_target: ScalarField,
    boundary: BoundaryData,
    cell_targets: Option<CellTargets>,
}

impl Prescription {
    /// Node-only prescription. Without cell targets the solver uses node rows
    /// alone, which leave one sublattice undetermined on odd grids.
    pub fn new(jac_target: ScalarField, curl_target: ScalarField, boundary: BoundaryData) -> Result<Self> {
        if jac_target.grid() != curl_target.grid() || jac_target.grid() != boundary.grid() {
            return Err(Error::GridMismatch);
        }
        let g = *jac_target.grid();
        if let Some((k, v)) = jac_target
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| math::abs(**v) < IMMERSION_THRESHOLD)
        {
            return Err(Error::NotImmersion { min_abs_det: math::abs(*v), node: g.node_of(k) });
        }
        Ok(Self { jac_target, curl_target, boundary, cell_targets: None })
    }

    /// Adds cell-centre targets (length `(nx−1)(ny−1)` each).
    pub fn with_cell_targets(mut self, cells: CellTargets) -> Result<Self> {
        let g = self.grid();
        let want = (g.nx - 1) * (g.ny - 1);
        for len in [cells.jac.len(), cells.curl.len()] {
            if len != want {
                return Err(Error::LengthMismatch { expected: want, got: len });
            }
        }
        self.cell_targets = Some(cells);
        Ok(self)
    }

    /// Targets generated from samples with the solver's own discrete operators,
    /// so the samples solve the discrete problem exactly.
    pub fn from_samples(f: &MapField) -> Result<Self> {
        Self::new(field::jacobian_det(f), field::curl(f), BoundaryData::from_map_field(f))?
            .with_cell_targets(cell_jac_curl(f))
    }

    pub fn from_map(map: &AnalyticMap, grid: &Grid2) -> Result<Self> {
        Self::from_samples(&map.sample(grid)?)
    }

    pub fn grid(&self) -> Grid2 {
        *self.jac_target.grid()
    }

    pub fn jac_target(&self) -> &ScalarField {
        &self.jac_target
    }

    pub fn curl_target(&self) -> &ScalarField {
        &self.curl_target
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    pub fn cell_targets(&self) -> Option<&CellTargets> {
        self.cell_targets.as_ref()
    }

    pub fn compatibility(&self) -> CompatReport {
        compatibility_defect(&self.curl_target, &self.boundary).expect("grids checked at construction")
    }
}

fn check_boundary(f: &MapField, p: &Prescription) -> Result<()> {
    let (deviation, node) = p.boundary.max_deviation(f)?;
    if deviation > BOUNDARY_TOLERANCE {
        return Err(Error::BoundaryMismatch { deviation, node });
    }
    Ok(())
}

/// `[Jac φ − jac*, curl φ − curl*]` at each interior node, in storage order.
pub fn residual(f: &MapField, p: &Prescription) -> Result<Vec<f64>> {
    check_boundary(f, p)?;
    Ok(node_residual(f, p))
}

fn node_residual(f: &MapField, p: &Prescription) -> Vec<f64> {
    let g = f.grid();
    let mut r = Vec::with_capacity(2 * g.interior_len());
    for (i, j) in g.interior_nodes() {
        let d = f.differential_at(i, j);
        r.push(d.det() - p.jac_target.get(i, j));
        r.push((d.m[1][0] - d.m[0][1]) - p.curl_target.get(i, j));
    }
    r
}

/// Node rows followed by cell rows (when the prescription has cell targets).
pub fn full_residual(f: &MapField, p: &Prescription) -> Result<Vec<f64>> {
    check_boundary(f, p)?;
    let mut r = node_residual(f, p);
    if let Some(cells) = &p.cell_targets {
        let c = cell_jac_curl(f);
        for k in 0..cells.jac.len() {
            r.push(c.jac[k] - cells.jac[k]);
            r.push(c.curl[k] - cells.curl[k]);
        }
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Converged when the residual max-norm drops below this.
    pub residual_tol: f64,
    /// Or when `‖δ‖ / ‖x‖` drops below this.
    pub step_tol: f64,
    pub initial_damping: f64,
    /// Upper bound on `relative_defect` accepted before solving.
    pub compat_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            residual_tol: 1e-10,
            step_tol: 1e-12,
            initial_damping: 1e-3,
            compat_threshold: DEFAULT_COMPAT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Termination {
    ResidualTolerance,
    StepTolerance,
    IterationLimit,
    /// Damping ran away without finding a decrease.
    Stagnated,
    /// Every trial step lost the immersion property until damping ran away.
    ImmersionLost,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepRecord {
    pub iteration: usize,
    pub damping: f64,
    /// Residual 2-norm after the step.
    pub residual_norm: f64,
    pub step_norm: f64,
    /// Trials rejected because they broke the immersion threshold.
    pub immersion_rejections: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolveReport {
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub residual_max: f64,
    pub residual_norm: f64,
    /// Residual 2-norm before the first step and after each accepted step.
    pub residual_history: Vec<f64>,
    pub steps: Vec<StepRecord>,
    pub solution: MapField,
}

struct Layout {
    grid: Grid2,
    /// Unknown block per flat node, `None` on the boundary.
    unknown: Vec<Option<usize>>,
    interior: Vec<usize>,
}

impl Layout {
    fn new(grid: Grid2) -> Self {
        let mut unknown = vec![None; grid.len()];
        let mut interior = Vec::with_capacity(grid.interior_len());
        for (i, j) in grid.interior_nodes() {
            let k = grid.index(i, j);
            unknown[k] = Some(interior.len());
            interior.push(k);
        }
        Self { grid, unknown, interior }
    }

    fn gather(&self, f: &MapField) -> Vec<f64> {
        self.interior.iter().flat_map(|&k| [f.values()[k].x, f.values()[k].y]).collect()
    }

    fn scatter(&self, base: &MapField, x: &[f64]) -> MapField {
        let mut out = base.clone();
        let vals = out.values_mut();
        for (n, &k) in self.interior.iter().enumerate() {
            vals[k] = Vector2::new(x[2 * n], x[2 * n + 1]);
        }
        out
    }
}

/// Rows of `∂(Jac, curl)/∂(unknowns)` for one stencil with weights
/// `(node, w_x, w_y)` feeding `D₁`, `D₂`. Boundary nodes are skipped.
fn stencil_rows(layout: &Layout, d: &Mat2, stencil: &[(usize, f64, f64)], jac_row: &mut Vec<(usize, f64)>, curl_row: &mut Vec<(usize, f64)>) {
    let (a, b, c, e) = (d.m[0][0], d.m[0][1], d.m[1][0], d.m[1][1]);
    jac_row.clear();
    curl_row.clear();
    for &(node, wx, wy) in stencil {
        if let Some(u) = layout.unknown[node] {
            // Jac = a e − b c, curl = c − b
            jac_row.push((2 * u, e * wx - c * wy));
            jac_row.push((2 * u + 1, a * wy - b * wx));
            if wy != 0.0 {
                curl_row.push((2 * u, -wy));
            }
            if wx != 0.0 {
                curl_row.push((2 * u + 1, wx));
            }
        }
    }
}

/// Accumulates `JᵀJ` and `Jᵀr` from sparse rows.
fn accumulate(a: &mut BandMatrix, g: &mut [f64], row: &[(usize, f64)], r: f64) {
    for &(ci, vi) in row {
        g[ci] += vi * r;
        for &(cj, vj) in row {
            if cj <= ci {
                a.add_lower(ci, cj, vi * vj);
            }
        }
    }
}

fn normal_equations(layout: &Layout, f: &MapField, p: &Prescription, r: &[f64]) -> (BandMatrix, Vec<f64>) {
    let grid = &layout.grid;
    let n = 2 * layout.interior.len();
    let bw = 4 * (grid.nx - 2) + 3;
    let mut a = BandMatrix::zeros(n, bw);
    let mut g = vec![0.0; n];
    let (hx2, hy2) = (1.0 / (2.0 * grid.hx()), 1.0 / (2.0 * grid.hy()));
    let mut jac_row = Vec::with_capacity(8);
    let mut curl_row = Vec::with_capacity(8);

    for (row, (i, j)) in grid.interior_nodes().enumerate() {
        let d = f.differential_at(i, j);
        let stencil = [
            (grid.index(i + 1, j), hx2, 0.0),
            (grid.index(i - 1, j), -hx2, 0.0),
            (grid.index(i, j + 1), 0.0, hy2),
            (grid.index(i, j - 1), 0.0, -hy2),
        ];
        stencil_rows(layout, &d, &stencil, &mut jac_row, &mut curl_row);
        accumulate(&mut a, &mut g, &jac_row, r[2 * row]);
        accumulate(&mut a, &mut g, &curl_row, r[2 * row + 1]);
    }
    if p.cell_targets.is_some() {
        let offset = 2 * grid.interior_len();
        let mut row = 0;
        for j in 0..grid.ny - 1 {
            for i in 0..grid.nx - 1 {
                let d = cell_differential(f, i, j);
                let stencil = [
                    (grid.index(i, j), -hx2, -hy2),
                    (grid.index(i + 1, j), hx2, -hy2),
                    (grid.index(i, j + 1), -hx2, hy2),
                    (grid.index(i + 1, j + 1), hx2, hy2),
                ];
                stencil_rows(layout, &d, &stencil, &mut jac_row, &mut curl_row);
                accumulate(&mut a, &mut g, &jac_row, r[offset + 2 * row]);
                accumulate(&mut a, &mut g, &curl_row, r[offset + 2 * row + 1]);
                row += 1;
            }
        }
    }
    (a, g)
}

fn norm2(v: &[f64]) -> f64 {
    math::sqrt(v.iter().map(|x| x * x).sum())
}

fn norm_max(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(math::abs(*x)))
}

const MAX_DAMPING: f64 = 1e16;

/// Damped Gauss–Newton from `init` on the interior unknowns.
///
/// Errors are reserved for unusable input (grid or boundary mismatch,
/// non-immersive start, incompatible prescription); non-convergence is
/// reported through [`SolveReport::converged`].
pub fn solve(p: &Prescription, init: &MapField, options: &SolverOptions) -> Result<SolveReport> {
    if init.grid() != &p.grid() {
        return Err(Error::GridMismatch);
    }
    check_boundary(init, p)?;
    field::check_immersion(init)?;
    let compat = p.compatibility();
    if !compat.is_compatible(options.compat_threshold) {
        return Err(Error::Incompatible {
            relative_defect: compat.relative_defect,
            threshold: options.compat_threshold,
        });
    }

    let layout = Layout::new(p.grid());
    let mut current = init.clone();
    let mut x = layout.gather(&current);
    let mut r = full_residual(&current, p)?;
    let mut cost = norm2(&r);
    let mut damping = options.initial_damping;
    let mut history = vec![cost];
    let mut steps = Vec::new();
    let mut termination = Termination::IterationLimit;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        if norm_max(&r) < options.residual_tol {
            termination = Termination::ResidualTolerance;
            break;
        }
        let (a, g) = normal_equations(&layout, &current, p, &r);
        let diag = a.diagonal();
        let scale = diag.iter().fold(0.0f64, |m, d| m.max(*d)).max(f64::MIN_POSITIVE);
        let mut immersion_rejections = 0;
        let mut accepted = None;

        while damping <= MAX_DAMPING {
            let mut damped = a.clone();
            for (k, d) in diag.iter().enumerate() {
                damped.add_lower(k, k, damping * d.max(1e-12 * scale));
            }
            let Some(chol) = damped.cholesky() else {
                damping *= 10.0;
                continue;
            };
            let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
            let delta = chol.solve(&neg_g);
            let trial_x: Vec<f64> = x.iter().zip(&delta).map(|(a, b)| a + b).collect();
            let trial = layout.scatter(&current, &trial_x);
            if field::min_abs_det(&trial).0 < IMMERSION_THRESHOLD {
                immersion_rejections += 1;
                damping *= 10.0;
                continue;
            }
            let trial_r = full_residual(&trial, p)?;
            let trial_cost = norm2(&trial_r);
            if trial_cost.is_finite() && trial_cost <= cost {
                accepted = Some((trial, trial_x, trial_r, trial_cost, norm2(&delta)));
                break;
            }
            damping *= 10.0;
        }

        let Some((trial, trial_x, trial_r, trial_cost, step_norm)) = accepted else {
            termination = if immersion_rejections > 0 { Termination::ImmersionLost } else { Termination::Stagnated };
            break;
        };
        iterations += 1;
        steps.push(StepRecord { iteration: iterations, damping, residual_norm: trial_cost, step_norm, immersion_rejections });
        history.push(trial_cost);
        let rel_step = step_norm / norm2(&trial_x).max(f64::MIN_POSITIVE);
        current = trial;
        x = trial_x;
        r = trial_r;
        cost = trial_cost;
        damping = (damping / 10.0).max(1e-15);
        if rel_step < options.step_tol {
            termination = Termination::StepTolerance;
            break;
        }
    }
    if termination == Termination::IterationLimit && norm_max(&r) < options.residual_tol {
        termination = Termination::ResidualTolerance;
    }

    Ok(SolveReport {
        converged: matches!(termination, Termination::ResidualTolerance | Termination::StepTolerance),
        termination,
        iterations,
        residual_max: norm_max(&r),
        residual_norm: cost,
        residual_history: history,
        steps,
        solution: current,
    })
}

/// Smooth interior perturbation `Σ c_kl sin(kπξ) sin(lπη) / (k l)` over
/// `k, l ≤ 3`, rescaled so each component's nodal sup-norm equals `sigma`.
pub fn smooth_perturbation(grid: &Grid2, sigma: f64, seed: u64, stream: u64) -> Vec<Vector2> {
    if sigma == 0.0 {
        return vec![Vector2::ZERO; grid.len()];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut uniform = || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) * 2.0 - 1.0;
    let mut coeffs = [[[0.0; 3]; 3]; 2];
    for comp in coeffs.iter_mut() {
        for row in comp.iter_mut() {
            for c in row.iter_mut() {
                *c = uniform();
            }
        }
    }
    let pi = core::f64::consts::PI;
    let mut out: Vec<Vector2> = (0..grid.len())
        .map(|k| {
            let (i, j) = grid.node_of(k);
            let xi = i as f64 / (grid.nx - 1) as f64;
            let eta = j as f64 / (grid.ny - 1) as f64;
            let mut v = [0.0; 2];
            for (comp, cs) in coeffs.iter().enumerate() {
                for (a, row) in cs.iter().enumerate() {
                    for (b, c) in row.iter().enumerate() {
                        let (ka, kb) = ((a + 1) as f64, (b + 1) as f64);
                        v[comp] += c * math::sin(ka * pi * xi) * math::sin(kb * pi * eta) / (ka * kb);
                    }
                }
            }
            if grid.is_boundary(i, j) {
                v = [0.0; 2];
            }
            Vector2::new(v[0], v[1])
        })
        .collect();
    let (mx, my) = out.iter().fold((0.0f64, 0.0f64), |(a, b), v| (a.max(math::abs(v.x)), b.max(math::abs(v.y))));
    let (sx, sy) = (if mx > 0.0 { sigma / mx } else { 0.0 }, if my > 0.0 { sigma / my } else { 0.0 });
    for v in out.iter_mut() {
        *v = Vector2::new(v.x * sx, v.y * sy);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartOutcome {
    pub index: usize,
    /// Solver report, or the reason the start could not be run.
    pub result: core::result::Result<SolveReport, Error>,
}

impl StartOutcome {
    pub fn converged(&self) -> bool {
        matches!(&self.result, Ok(r) if r.converged)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    pub starts: Vec<StartOutcome>,
    /// Indices of converged starts, ascending.
    pub converged: Vec<usize>,
    /// Pairwise sup-distances between converged solutions (in `converged` order).
    pub distances: Vec<Vec<f64>>,
    pub max_pairwise_distance: f64,
    /// Fewer than two starts converged.
    pub inconclusive: bool,
}

/// Solves from `n_starts` perturbed Coons blends of the boundary data and
/// measures how far apart the converged solutions are.
pub fn uniqueness_experiment(
    p: &Prescription,
    n_starts: usize,
    sigma: f64,
    seed: u64,
    options: &SolverOptions,
) -> Result<UniquenessReport> {
    if n_starts < 2 {
        return Err(Error::InvalidArgument("need at least 2 starts".into()));
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument("sigma must be finite and non-negative".into()));
    }
    let grid = p.grid();
    let blend = p.boundary.coons_blend();
    let starts = par::map_range(n_starts, |s| {
        let delta = smooth_perturbation(&grid, sigma, seed, s as u64);
        let values = blend.values().iter().zip(&delta).map(|(a, b)| *a + *b).collect();
        let result = MapField::new(grid, values).and_then(|init| solve(p, &init, options));
        StartOutcome { index: s, result }
    });

    let converged: Vec<usize> = starts.iter().filter(|s| s.converged()).map(|s| s.index).collect();
    let solution = |s: usize| match &starts[s].result {
        Ok(r) => &r.solution,
        Err(_) => unreachable!("only converged starts are compared"),
    };
    let m = converged.len();
    let mut distances = vec![vec![0.0; m]; m];
    let mut max_pairwise_distance: f64 = 0.0;
    for a in 0..m {
        for b in a + 1..m {
            let d = solution(converged[a]).sup_distance(solution(converged[b]))?;
            distances[a][b] = d;
            distances[b][a] = d;
            max_pairwise_distance = max_pairwise_distance.max(d);
        }
    }
    Ok(UniquenessReport { inconclusive: m < 2, starts, converged, distances, max_pairwise_distance })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid2 {
        Grid2::unit_square(n).unwrap()
    }

    #[test]
    fn residual_examples() {
        let g = grid(9);
        let id = AnalyticMap::Identity.sample(&g).unwrap();
        let p = Prescription::from_map(&AnalyticMap::Identity, &g).unwrap();
        let r = residual(&id, &p).unwrap();
        assert_eq!(r.len(), 2 * 49);
        assert!(r.iter().all(|v| *v == 0.0));

        let rot = AnalyticMap::Rotation { theta: 0.3 };
        let p = Prescription::from_map(&rot, &g).unwrap();
        assert!(residual(&rot.sample(&g).unwrap(), &p).unwrap().iter().all(|v| v.abs() < 1e-14));
        assert!(full_residual(&rot.sample(&g).unwrap(), &p).unwrap().iter().all(|v| v.abs() < 1e-14));

        // identity interior, rotation targets: curl residual is −2 sin 0.3
        let mixed = Prescription::new(
            ScalarField::constant(g, 1.0),
            ScalarField::constant(g, 2.0 * 0.3f64.sin()),
            BoundaryData::from_map(&rot, &g).unwrap(),
        )
        .unwrap();
        let guess = BoundaryData::from_map(&rot, &g).unwrap().coons_blend();
        let mut f = id.clone();
        for (i, j) in g.interior_nodes() {
            f.values_mut()[g.index(i, j)] = id.get(i, j);
        }
        assert!(matches!(residual(&f, &mixed), Err(Error::BoundaryMismatch { .. })));
        let id_p = Prescription::new(
            ScalarField::constant(g, 1.0),
            ScalarField::constant(g, 2.0 * 0.3f64.sin()),
            BoundaryData::from_map(&AnalyticMap::Identity, &g).unwrap(),
        )
        .unwrap();
        let r = residual(&id, &id_p).unwrap();
        for pair in r.chunks(2) {
            assert_eq!(pair[0], 0.0);
            assert!((pair[1] + 2.0 * 0.3f64.sin()).abs() < 1e-15);
            assert!((pair[1] + 0.5910).abs() < 1e-4);
        }
        assert!(residual(&guess, &mixed).is_ok());
    }

    #[test]
    fn odd_sublattice_translation_is_invisible_to_node_rows() {
        let g = grid(9);
        let map = AnalyticMap::Sinusoidal { amplitude: 0.05 };
        let p = Prescription::from_map(&map, &g).unwrap();
        let mut f = map.sample(&g).unwrap();
        for (i, j) in g.interior_nodes() {
            if i % 2 == 1 && j % 2 == 1 {
                f.values_mut()[g.index(i, j)] = f.get(i, j) + Vector2::new(0.01, -0.02);
            }
        }
        assert!(norm_max(&residual(&f, &p).unwrap()) < 1e-14);
        assert!(norm_max(&full_residual(&f, &p).unwrap()) > 1e-3);
    }

    #[test]
    fn identity_converges_immediately() {
        let g = grid(9);
        let p = Prescription::from_map(&AnalyticMap::Identity, &g).unwrap();
        let r = solve(&p, &AnalyticMap::Identity.sample(&g).unwrap(), &SolverOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn rotation_recovered_from_blend() {
        let g = grid(17);
        let rot = AnalyticMap::Rotation { theta: 0.4 };
        let p = Prescription::from_map(&rot, &g).unwrap();
        // identity interior with the rotated boundary
        let mut init = AnalyticMap::Identity.sample(&g).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                if g.is_boundary(i, j) {
                    init.values_mut()[g.index(i, j)] = rot.value(g.point(i, j).x, g.point(i, j).y);
                }
            }
        }
        let r = solve(&p, &init, &SolverOptions::default()).unwrap();
        assert!(r.converged, "{:?}", r.termination);
        assert!(r.solution.sup_distance(&rot.sample(&g).unwrap()).unwrap() < 1e-8);
        assert!(r.residual_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn preconditions() {
        let g = grid(9);
        let b = BoundaryData::from_map(&AnalyticMap::Identity, &g).unwrap();
        let p = Prescription::new(ScalarField::constant(g, 1.0), ScalarField::constant(g, 1.0), b.clone()).unwrap();
        let init = b.coons_blend();
        assert!(matches!(solve(&p, &init, &SolverOptions::default()), Err(Error::Incompatible { .. })));

        assert!(matches!(
            Prescription::new(ScalarField::constant(g, 0.0), ScalarField::constant(g, 0.0), b.clone()),
            Err(Error::NotImmersion { .. })
        ));
        let p = Prescription::from_map(&AnalyticMap::Identity, &g).unwrap();
        let shifted = AnalyticMap::Affine { a: Mat2::IDENTITY, b: Vector2::new(0.1, 0.0) }.sample(&g).unwrap();
        assert!(matches!(solve(&p, &shifted, &SolverOptions::default()), Err(Error::BoundaryMismatch { .. })));
    }

    #[test]
    fn perturbations_are_seeded_and_scaled() {
        let g = grid(11);
        let a = smooth_perturbation(&g, 0.1, 7, 2);
        let b = smooth_perturbation(&g, 0.1, 7, 2);
        let c = smooth_perturbation(&g, 0.1, 7, 3);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let mx = a.iter().fold(0.0f64, |m, v| m.max(v.x.abs()));
        assert!((mx - 0.1).abs() < 1e-15);
        assert!(smooth_perturbation(&g, 0.0, 1, 1).iter().all(|v| *v == Vector2::ZERO));
    }

    #[test]
    fn identity_experiment_without_perturbation() {
        let g = grid(9);
        let p = Prescription::from_map(&AnalyticMap::Identity, &g).unwrap();
        let r = uniqueness_experiment(&p, 3, 0.0, 1, &SolverOptions::default()).unwrap();
        assert_eq!(r.converged, vec![0, 1, 2]);
        assert_eq!(r.max_pairwise_distance, 0.0);
        assert!(uniqueness_experiment(&p, 1, 0.0, 1, &SolverOptions::default()).is_err());
    }

    #[test]
    fn rotation_experiment_is_unique() {
        let g = grid(17);
        let p = Prescription::from_map(&AnalyticMap::Rotation { theta: 0.4 }, &g).unwrap();
        let r = uniqueness_experiment(&p, 5, 0.05, 11, &SolverOptions::default()).unwrap();
        assert_eq!(r.converged.len(), 5);
        assert!(r.max_pairwise_distance < 1e-8);
        for a in 0..5 {
            assert_eq!(r.distances[a][a], 0.0);
            for b in 0..5 {
                assert_eq!(r.distances[a][b], r.distances[b][a]);
            }
        }
    }
}
