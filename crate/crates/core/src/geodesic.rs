//! Geodesic shooting under a sampled metric and reconstruction of a map from
//! its metric and boundary values.
//!
//! For the metric induced by an immersion, `φ` is a local isometry onto its
//! image, so `φ ∘ γ` is a straight segment traversed at constant speed for
//! every geodesic `γ`. Shooting both ways from an interior point until the
//! boundary is hit gives two boundary points whose images (known) and
//! g-distances (measured) pin down `φ` at the starting point.

use alloc::vec::Vec;

use crate::field::{partial_x, partial_y, Grid2, MapField};
use crate::ga2::Vector2;
use crate::maps::AnalyticMap;
use crate::math;
use crate::metric::{Metric2, MetricField};
use crate::par;
use crate::{Error, Result};

/// Levi-Civita symbols at a point, `gamma[k][i][j] = Γᵏᵢⱼ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Christoffel {
    pub gamma: [[[f64; 2]; 2]; 2],
}

impl Christoffel {
    /// `−Γᵏᵢⱼ vⁱ vʲ`.
    #[inline]
    pub fn acceleration(&self, v: [f64; 2]) -> [f64; 2] {
        let q = |k: usize| {
            let g = &self.gamma[k];
            g[0][0] * v[0] * v[0] + 2.0 * g[0][1] * v[0] * v[1] + g[1][1] * v[1] * v[1]
        };
        [-q(0), -q(1)]
    }

    fn packed(&self) -> [f64; 6] {
        let g = &self.gamma;
        [g[0][0][0], g[0][0][1], g[0][1][1], g[1][0][0], g[1][0][1], g[1][1][1]]
    }

    fn unpack(p: [f64; 6]) -> Self {
        Self { gamma: [[[p[0], p[1]], [p[1], p[2]]], [[p[3], p[4]], [p[4], p[5]]]] }
    }
}

/// Christoffel symbols at a node, with metric derivatives from the field
/// stencils.
pub fn christoffel(g: &MetricField, i: usize, j: usize) -> Result<Christoffel> {
    let grid = g.grid();
    if !grid.contains_node(i, j) {
        return Err(Error::NodeOutOfRange(i, j));
    }
    let v = g.values();
    let comp = |c: usize| {
        move |k: usize| match c {
            0 => v[k].g11,
            1 => v[k].g12,
            _ => v[k].g22,
        }
    };
    // dg[a] = ∂_a g
    let dg = [
        Metric2::new(partial_x(grid, i, j, comp(0)), partial_x(grid, i, j, comp(1)), partial_x(grid, i, j, comp(2))),
        Metric2::new(partial_y(grid, i, j, comp(0)), partial_y(grid, i, j, comp(1)), partial_y(grid, i, j, comp(2))),
    ];
    let inv = g.get(i, j).inverse().ok_or(Error::SingularMetric(i, j))?;
    Ok(christoffel_from_parts(&inv, &dg))
}

/// `Γᵏᵢⱼ = ½ gᵏˡ (∂ᵢ g_jl + ∂ⱼ g_il − ∂ₗ g_ij)`.
pub fn christoffel_from_parts(inv: &Metric2, dg: &[Metric2; 2]) -> Christoffel {
    let mut out = Christoffel::default();
    for k in 0..2 {
        for a in 0..2 {
            for b in 0..2 {
                let mut s = 0.0;
                for l in 0..2 {
                    s += inv.get(k, l) * (dg[a].get(b, l) + dg[b].get(a, l) - dg[l].get(a, b));
                }
                out.gamma[k][a][b] = 0.5 * s;
            }
        }
    }
    out
}

/// How Christoffel symbols are interpolated between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Interpolation {
    #[default]
    Bilinear,
    /// Catmull-Rom bicubic, clamped at the edges.
    Bicubic,
}

/// Metric and Christoffel symbols precomputed on the nodes, ready for
/// evaluation anywhere in the rectangle.
#[derive(Debug, Clone)]
pub struct GeodesicField {
    grid: Grid2,
    metric: Vec<Metric2>,
    gamma: Vec<[f64; 6]>,
    interpolation: Interpolation,
}

impl GeodesicField {
    pub fn new(g: &MetricField, interpolation: Interpolation) -> Result<Self> {
        let grid = *g.grid();
        let gamma = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.node_of(k);
                christoffel(g, i, j).map(|c| c.packed())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, metric: g.values().to_vec(), gamma, interpolation })
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    /// Cell index and local coordinate along one axis, clamped to the grid.
    #[inline]
    fn locate(t: f64, t0: f64, h: f64, n: usize) -> (usize, f64) {
        let s = (t - t0) / h;
        let c = if s <= 0.0 { 0 } else { (s as usize).min(n - 2) };
        (c, (s - c as f64).clamp(0.0, 1.0))
    }

    fn bilinear<const N: usize>(&self, p: Vector2, read: impl Fn(usize) -> [f64; N]) -> [f64; N] {
        let g = &self.grid;
        let (ci, u) = Self::locate(p.x, g.x0, g.hx(), g.nx);
        let (cj, w) = Self::locate(p.y, g.y0, g.hy(), g.ny);
        let k00 = g.index(ci, cj);
        let (a, b, c, d) = (read(k00), read(k00 + 1), read(k00 + g.nx), read(k00 + g.nx + 1));
        let mut out = [0.0; N];
        for n in 0..N {
            let bottom = a[n] + u * (b[n] - a[n]);
            let top = c[n] + u * (d[n] - c[n]);
            out[n] = bottom + w * (top - bottom);
        }
        out
    }

    fn bicubic<const N: usize>(&self, p: Vector2, read: impl Fn(usize) -> [f64; N]) -> [f64; N] {
        let g = &self.grid;
        let (ci, u) = Self::locate(p.x, g.x0, g.hx(), g.nx);
        let (cj, w) = Self::locate(p.y, g.y0, g.hy(), g.ny);
        let wu = catmull_rom_weights(u);
        let ww = catmull_rom_weights(w);
        let clamp = |c: isize, n: usize| c.clamp(0, n as isize - 1) as usize;
        let mut out = [0.0; N];
        for (b, wb) in ww.iter().enumerate() {
            let jj = clamp(cj as isize + b as isize - 1, g.ny);
            for (a, wa) in wu.iter().enumerate() {
                let ii = clamp(ci as isize + a as isize - 1, g.nx);
                let v = read(g.index(ii, jj));
                for n in 0..N {
                    out[n] += wa * wb * v[n];
                }
            }
        }
        out
    }

    /// Christoffel symbols at an arbitrary point (clamped into the rectangle).
    pub fn christoffel_at(&self, p: Vector2) -> Christoffel {
        let read = |k: usize| self.gamma[k];
        Christoffel::unpack(match self.interpolation {
            Interpolation::Bilinear => self.bilinear(p, read),
            Interpolation::Bicubic => self.bicubic(p, read),
        })
    }

    /// Bilinearly interpolated metric.
    pub fn metric_at(&self, p: Vector2) -> Metric2 {
        let m = self.bilinear(p, |k| {
            let g = self.metric[k];
            [g.g11, g.g12, g.g22]
        });
        Metric2::new(m[0], m[1], m[2])
    }

    /// Positive inside, zero on the boundary, negative outside.
    #[inline]
    fn inset(&self, p: Vector2) -> f64 {
        let g = &self.grid;
        (p.x - g.x0).min(g.x1 - p.x).min(p.y - g.y0).min(g.y1 - p.y)
    }

    fn clamp_to_rect(&self, p: Vector2) -> Vector2 {
        let g = &self.grid;
        Vector2::new(p.x.clamp(g.x0, g.x1), p.y.clamp(g.y0, g.y1))
    }

    fn speed(&self, p: Vector2, v: Vector2) -> f64 {
        math::sqrt(self.metric_at(p).inner([v.x, v.y], [v.x, v.y]))
    }

    #[inline]
    fn rhs(&self, s: &State) -> State {
        let a = self.christoffel_at(s.p).acceleration([s.v.x, s.v.y]);
        State { p: s.v, v: Vector2::new(a[0], a[1]) }
    }

    fn rk4(&self, s: &State, h: f64) -> State {
        let k1 = self.rhs(s);
        let k2 = self.rhs(&s.axpy(0.5 * h, &k1));
        let k3 = self.rhs(&s.axpy(0.5 * h, &k2));
        let k4 = self.rhs(&s.axpy(h, &k3));
        State {
            p: s.p + (h / 6.0) * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p),
            v: s.v + (h / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v),
        }
    }

    /// RK4 step size used by [`shoot`]: a quarter of the finer spacing.
    pub fn step_size(&self) -> f64 {
        self.grid.hx().min(self.grid.hy()) / 4.0
    }

    /// Step ceiling used by [`shoot`].
    pub fn max_steps(&self) -> usize {
        64 * (self.grid.nx + self.grid.ny)
    }
}

fn catmull_rom_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

#[derive(Debug, Clone, Copy)]
struct State {
    p: Vector2,
    v: Vector2,
}

impl State {
    #[inline]
    fn axpy(&self, h: f64, d: &State) -> State {
        State { p: self.p + h * d.p, v: self.v + h * d.v }
    }

    fn is_finite(&self) -> bool {
        self.p.is_finite() && self.v.is_finite()
    }
}

/// A unit-speed geodesic from an interior point to the boundary.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeodesicTrace {
    /// Positions at each full step, starting point first. Empty unless recorded.
    pub points: Vec<Vector2>,
    /// Velocities matching `points`.
    pub velocities: Vec<Vector2>,
    pub exit_point: Vector2,
    /// g-length from the start to `exit_point`.
    pub arc_length: f64,
    pub step_size: f64,
}

/// Integrates the geodesic equation from `x` in direction `v` until the
/// trajectory leaves the rectangle.
///
/// `v` is rescaled to unit g-speed, and the velocity is renormalized after
/// every step so the integration parameter is the g-arc length.
pub fn shoot(field: &GeodesicField, x: Vector2, v: Vector2) -> Result<GeodesicTrace> {
    shoot_impl(field, x, v, true)
}

fn shoot_impl(field: &GeodesicField, x: Vector2, v: Vector2, record: bool) -> Result<GeodesicTrace> {
    if !(x.is_finite() && field.inset(x) > 0.0) {
        return Err(Error::NotInterior(x.x, x.y));
    }
    if !v.is_finite() || v == Vector2::ZERO {
        return Err(Error::ZeroDirection);
    }
    let speed = field.speed(x, v);
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(Error::ZeroDirection);
    }
    let h = field.step_size();
    let ceiling = field.max_steps();
    let mut state = State { p: x, v: (1.0 / speed) * v };
    let mut t = 0.0;
    let mut points = Vec::new();
    let mut velocities = Vec::new();
    if record {
        points.push(state.p);
        velocities.push(state.v);
    }

    for _ in 0..ceiling {
        let next = field.rk4(&state, h);
        if !next.is_finite() {
            return Err(Error::NonFiniteState);
        }
        if field.inset(next.p) > 0.0 {
            let sp = field.speed(next.p, next.v);
            if !(sp > 0.0 && sp.is_finite()) {
                return Err(Error::NonFiniteState);
            }
            state = State { p: next.p, v: (1.0 / sp) * next.v };
            t += h;
            if record {
                points.push(state.p);
                velocities.push(state.v);
            }
            continue;
        }

        // bracket the crossing inside the last step
        let (mut lo, mut hi) = (0.0, h);
        let (mut p_lo, mut p_hi) = (state.p, next.p);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            let p = field.rk4(&state, mid).p;
            if field.inset(p) > 0.0 {
                lo = mid;
                p_lo = p;
            } else {
                hi = mid;
                p_hi = p;
            }
        }
        let (s_lo, s_hi) = (field.inset(p_lo), field.inset(p_hi));
        let frac = if s_lo - s_hi > 0.0 { s_lo / (s_lo - s_hi) } else { 1.0 };
        let exit_point = field.clamp_to_rect(p_lo + frac * (p_hi - p_lo));
        return Ok(GeodesicTrace {
            points,
            velocities,
            exit_point,
            arc_length: t + lo + frac * (hi - lo),
            step_size: h,
        });
    }
    Err(Error::StepCeiling(ceiling))
}

/// Boundary values of a map on the four edges of the grid rectangle,
/// interpolated by local cubics through the boundary nodes.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundaryData {
    grid: Grid2,
    /// `j = 0`, indexed by `i`.
    bottom: Vec<Vector2>,
    /// `j = ny − 1`, indexed by `i`.
    top: Vec<Vector2>,
    /// `i = 0`, indexed by `j`.
    left: Vec<Vector2>,
    /// `i = nx − 1`, indexed by `j`.
    right: Vec<Vector2>,
}

impl BoundaryData {
    pub fn new(
        grid: Grid2,
        bottom: Vec<Vector2>,
        top: Vec<Vector2>,
        left: Vec<Vector2>,
        right: Vec<Vector2>,
    ) -> Result<Self> {
        for (edge, n) in [(&bottom, grid.nx), (&top, grid.nx), (&left, grid.ny), (&right, grid.ny)] {
            if edge.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: edge.len() });
            }
            if !edge.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite boundary value".into()));
            }
        }
        let (nx, ny) = (grid.nx, grid.ny);
        let corner_gap = [
            (bottom[0] - left[0]).norm(),
            (bottom[nx - 1] - right[0]).norm(),
            (top[0] - left[ny - 1]).norm(),
            (top[nx - 1] - right[ny - 1]).norm(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if corner_gap > 1e-12 {
            return Err(Error::CornerMismatch(corner_gap));
        }
        Ok(Self { grid, bottom, top, left, right })
    }

    /// Boundary trace of a sampled map.
    pub fn from_map_field(f: &MapField) -> Self {
        let g = *f.grid();
        Self {
            grid: g,
            bottom: (0..g.nx).map(|i| f.get(i, 0)).collect(),
            top: (0..g.nx).map(|i| f.get(i, g.ny - 1)).collect(),
            left: (0..g.ny).map(|j| f.get(0, j)).collect(),
            right: (0..g.ny).map(|j| f.get(g.nx - 1, j)).collect(),
        }
    }

    pub fn from_map(map: &AnalyticMap, grid: &Grid2) -> Result<Self> {
        Ok(Self::from_map_field(&map.sample(grid)?))
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    pub fn bottom(&self) -> &[Vector2] {
        &self.bottom
    }

    pub fn top(&self) -> &[Vector2] {
        &self.top
    }

    pub fn left(&self) -> &[Vector2] {
        &self.left
    }

    pub fn right(&self) -> &[Vector2] {
        &self.right
    }

    /// Value at a boundary node. Panics for interior nodes.
    pub fn node_value(&self, i: usize, j: usize) -> Vector2 {
        let g = &self.grid;
        if j == 0 {
            self.bottom[i]
        } else if j + 1 == g.ny {
            self.top[i]
        } else if i == 0 {
            self.left[j]
        } else if i + 1 == g.nx {
            self.right[j]
        } else {
            panic!("({i}, {j}) is not a boundary node")
        }
    }

    /// Interpolated value at the boundary point nearest to `p`.
    pub fn eval(&self, p: Vector2) -> Vector2 {
        let g = &self.grid;
        let d = [p.y - g.y0, g.y1 - p.y, p.x - g.x0, g.x1 - p.x];
        let edge = (0..4).fold(0, |best, k| if math::abs(d[k]) < math::abs(d[best]) { k } else { best });
        match edge {
            0 => cubic(&self.bottom, (p.x - g.x0) / g.hx()),
            1 => cubic(&self.top, (p.x - g.x0) / g.hx()),
            2 => cubic(&self.left, (p.y - g.y0) / g.hy()),
            _ => cubic(&self.right, (p.y - g.y0) / g.hy()),
        }
    }

    /// Largest distance between `f`'s boundary nodes and this data.
    pub fn max_deviation(&self, f: &MapField) -> Result<(f64, (usize, usize))> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let g = &self.grid;
        let mut worst = (0.0, (0, 0));
        for j in 0..g.ny {
            for i in 0..g.nx {
                if g.is_boundary(i, j) {
                    let d = (f.get(i, j) - self.node_value(i, j)).norm();
                    if d > worst.0 {
                        worst = (d, (i, j));
                    }
                }
            }
        }
        Ok(worst)
    }

    /// Transfinite (Coons) blend of the four edges over the whole grid.
    pub fn coons_blend(&self) -> MapField {
        let g = self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let values = (0..g.len())
            .map(|k| {
                let (i, j) = g.node_of(k);
                if g.is_boundary(i, j) {
                    return self.node_value(i, j);
                }
                let u = i as f64 / (nx - 1) as f64;
                let w = j as f64 / (ny - 1) as f64;
                let edges = (1.0 - w) * self.bottom[i] + w * self.top[i] + (1.0 - u) * self.left[j] + u * self.right[j];
                let corners = (1.0 - u) * (1.0 - w) * self.bottom[0]
                    + u * (1.0 - w) * self.bottom[nx - 1]
                    + (1.0 - u) * w * self.top[0]
                    + u * w * self.top[nx - 1];
                edges - corners
            })
            .collect();
        MapField::new(g, values).expect("blend of finite data is finite")
    }
}

/// Four-point Lagrange cubic through uniform samples at parameter `s`
/// (in node units). Three-node edges fall back to the quadratic.
fn cubic(samples: &[Vector2], s: f64) -> Vector2 {
    let n = samples.len();
    let s = s.clamp(0.0, (n - 1) as f64);
    if n == 3 {
        let t = s;
        let w = [0.5 * (t - 1.0) * (t - 2.0), -t * (t - 2.0), 0.5 * t * (t - 1.0)];
        return w[0] * samples[0] + w[1] * samples[1] + w[2] * samples[2];
    }
    let k = (s as usize).clamp(1, n - 3);
    let t = s - (k - 1) as f64;
    let w = [
        -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
        t * (t - 2.0) * (t - 3.0) / 2.0,
        -t * (t - 1.0) * (t - 3.0) / 2.0,
        t * (t - 1.0) * (t - 2.0) / 6.0,
    ];
    w[0] * samples[k - 1] + w[1] * samples[k] + w[2] * samples[k + 1] + w[3] * samples[k + 2]
}

/// One point recovered from a pair of opposite geodesics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointReconstruction {
    pub value: Vector2,
    pub exit_p: Vector2,
    pub exit_q: Vector2,
    pub s_p: f64,
    pub s_q: f64,
    /// `| |φ(p) − φ(q)| − (s_p + s_q) |`.
    pub length_mismatch: f64,
}

/// Default bound for the segment-length consistency check.
pub const DEFAULT_RECONSTRUCTION_TOLERANCE: f64 = 5e-3;

/// Recovers `φ(x)` from exits `p` (along `v`) and `q` (along `−v`):
/// `φ(x) = φ(p) + s_p/(s_p+s_q) (φ(q) − φ(p))`.
pub fn reconstruct_point(
    field: &GeodesicField,
    boundary: &BoundaryData,
    x: Vector2,
    v: Vector2,
    tolerance: f64,
) -> Result<PointReconstruction> {
    let fwd = shoot_impl(field, x, v, false)?;
    let bwd = shoot_impl(field, x, -v, false)?;
    let (phi_p, phi_q) = (boundary.eval(fwd.exit_point), boundary.eval(bwd.exit_point));
    let total = fwd.arc_length + bwd.arc_length;
    let length_mismatch = math::abs((phi_q - phi_p).norm() - total);
    let limit = 10.0 * tolerance;
    if length_mismatch > limit {
        return Err(Error::SegmentInconsistent { mismatch: length_mismatch, limit });
    }
    Ok(PointReconstruction {
        value: phi_p + (fwd.arc_length / total) * (phi_q - phi_p),
        exit_p: fwd.exit_point,
        exit_q: bwd.exit_point,
        s_p: fwd.arc_length,
        s_q: bwd.arc_length,
        length_mismatch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReconstructOptions {
    pub interpolation: Interpolation,
    pub tolerance: f64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self { interpolation: Interpolation::Bilinear, tolerance: DEFAULT_RECONSTRUCTION_TOLERANCE }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionFailure {
    pub node: (usize, usize),
    pub direction: usize,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    pub grid: Grid2,
    pub directions: usize,
    pub failures: Vec<DirectionFailure>,
    /// Interior nodes where every direction failed; their value is the Coons blend.
    pub failed_nodes: Vec<(usize, usize)>,
    /// Max pairwise distance between direction estimates, per interior node.
    pub spread: Vec<f64>,
    pub max_spread: f64,
    pub mean_spread: f64,
    pub max_length_mismatch: f64,
}

/// Reconstructs `φ` at every interior node as the mean over `k` directions
/// equispaced on `[0, π)`; boundary nodes take the boundary data.
pub fn reconstruct_map(
    g: &MetricField,
    boundary: &BoundaryData,
    k: usize,
    options: &ReconstructOptions,
) -> Result<(MapField, ReconstructionReport)> {
    if k < 2 {
        return Err(Error::InvalidArgument("need at least 2 directions".into()));
    }
    if g.grid() != boundary.grid() {
        return Err(Error::GridMismatch);
    }
    let field = GeodesicField::new(g, options.interpolation)?;
    let grid = *g.grid();
    let dirs: Vec<Vector2> = (0..k)
        .map(|d| {
            let a = core::f64::consts::PI * d as f64 / k as f64;
            Vector2::new(math::cos(a), math::sin(a))
        })
        .collect();
    let nodes: Vec<(usize, usize)> = grid.interior_nodes().collect();

    let per_node = par::map_range(nodes.len(), |n| {
        let (i, j) = nodes[n];
        let x = grid.point(i, j);
        dirs.iter()
            .map(|v| reconstruct_point(&field, boundary, x, *v, options.tolerance))
            .collect::<Vec<_>>()
    });

    let mut out = boundary.coons_blend();
    let mut report = ReconstructionReport {
        grid,
        directions: k,
        failures: Vec::new(),
        failed_nodes: Vec::new(),
        spread: Vec::with_capacity(nodes.len()),
        max_spread: 0.0,
        mean_spread: 0.0,
        max_length_mismatch: 0.0,
    };
    for (&(i, j), results) in nodes.iter().zip(per_node) {
        let mut ok = Vec::with_capacity(k);
        for (d, r) in results.into_iter().enumerate() {
            match r {
                Ok(p) => {
                    report.max_length_mismatch = report.max_length_mismatch.max(p.length_mismatch);
                    ok.push(p.value);
                }
                Err(error) => report.failures.push(DirectionFailure { node: (i, j), direction: d, error }),
            }
        }
        if ok.is_empty() {
            report.failed_nodes.push((i, j));
            report.spread.push(0.0);
            continue;
        }
        let inv = 1.0 / ok.len() as f64;
        let mean = ok.iter().fold(Vector2::ZERO, |s, v| s + inv * *v);
        let mut spread: f64 = 0.0;
        for a in 0..ok.len() {
            for b in a + 1..ok.len() {
                spread = spread.max((ok[a] - ok[b]).norm());
            }
        }
        out.values_mut()[grid.index(i, j)] = mean;
        report.spread.push(spread);
        report.max_spread = report.max_spread.max(spread);
    }
    if !report.spread.is_empty() {
        report.mean_spread = report.spread.iter().sum::<f64>() / report.spread.len() as f64;
    }
    Ok((out, report))
}

/// Max and mean distance to an analytic map over interior nodes.
pub fn oracle_error(f: &MapField, map: &AnalyticMap) -> (f64, f64) {
    let g = f.grid();
    let mut max: f64 = 0.0;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (i, j) in g.interior_nodes() {
        let p = g.point(i, j);
        let e = (f.get(i, j) - map.value(p.x, p.y)).norm();
        max = max.max(e);
        sum += e;
        n += 1;
    }
    (max, if n > 0 { sum / n as f64 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::induced_metric;

    fn euclid(n: usize) -> MetricField {
        MetricField::constant(Grid2::unit_square(n).unwrap(), Metric2::EUCLIDEAN).unwrap()
    }

    #[test]
    fn flat_metrics_have_no_christoffel_symbols() {
        let g = euclid(9);
        assert_eq!(christoffel(&g, 4, 4).unwrap(), Christoffel::default());
        let g = MetricField::constant(Grid2::unit_square(9).unwrap(), Metric2::new(4.0, 0.0, 9.0)).unwrap();
        assert_eq!(christoffel(&g, 0, 8).unwrap(), Christoffel::default());
        assert_eq!(christoffel(&g, 9, 0), Err(Error::NodeOutOfRange(9, 0)));
    }

    #[test]
    fn straight_shots_in_flat_metric() {
        let f = GeodesicField::new(&euclid(17), Interpolation::Bilinear).unwrap();
        let t = shoot(&f, Vector2::new(0.5, 0.5), Vector2::new(3.0, 0.0)).unwrap();
        assert!((t.exit_point - Vector2::new(1.0, 0.5)).norm() < 1e-12);
        assert!((t.arc_length - 0.5).abs() < 1e-12);
        let t = shoot(&f, Vector2::new(0.5, 0.5), Vector2::new(1.0, 1.0)).unwrap();
        assert!((t.exit_point - Vector2::new(1.0, 1.0)).norm() < 1e-11);
        assert!((t.arc_length - core::f64::consts::SQRT_2 / 2.0).abs() < 1e-11);
        assert_eq!(t.points.len(), t.velocities.len());
    }

    #[test]
    fn shoot_rejects_bad_input() {
        let f = GeodesicField::new(&euclid(5), Interpolation::Bilinear).unwrap();
        assert_eq!(shoot(&f, Vector2::new(0.0, 0.5), Vector2::E1), Err(Error::NotInterior(0.0, 0.5)));
        assert_eq!(shoot(&f, Vector2::new(0.5, 0.5), Vector2::ZERO), Err(Error::ZeroDirection));
    }

    #[test]
    fn scaled_metric_measures_g_length() {
        // φ = (2x, 3y): moving along x at parameter speed 1 has g-speed 2
        let grid = Grid2::unit_square(9).unwrap();
        let g = induced_metric(&AnalyticMap::Scale { a: 2.0, b: 3.0 }.sample(&grid).unwrap()).unwrap();
        let f = GeodesicField::new(&g, Interpolation::Bicubic).unwrap();
        let t = shoot(&f, Vector2::new(0.25, 0.5), Vector2::new(0.0, -1.0)).unwrap();
        assert!((t.exit_point - Vector2::new(0.25, 0.0)).norm() < 1e-12);
        assert!((t.arc_length - 1.5).abs() < 1e-12);
    }

    #[test]
    fn cubic_boundary_interpolation_is_exact_on_cubics() {
        let grid = Grid2::new(6, 4, 0.0, 0.0, 2.0, 1.0).unwrap();
        let f = MapField::from_fn(grid, |x, y| Vector2::new(x * x * x - x, y * y + x)).unwrap();
        let b = BoundaryData::from_map_field(&f);
        for p in [Vector2::new(0.37, 0.0), Vector2::new(1.93, 1.0), Vector2::new(0.0, 0.41), Vector2::new(2.0, 0.77)] {
            let want = Vector2::new(p.x * p.x * p.x - p.x, p.y * p.y + p.x);
            assert!((b.eval(p) - want).norm() < 1e-12, "{p:?}");
        }
        let blend = b.coons_blend();
        assert_eq!(b.max_deviation(&blend).unwrap().0, 0.0);
    }

    #[test]
    fn corner_mismatch_is_rejected() {
        let grid = Grid2::unit_square(3).unwrap();
        let e = alloc::vec![Vector2::ZERO; 3];
        let mut bad = e.clone();
        bad[0] = Vector2::new(1.0, 0.0);
        assert!(matches!(
            BoundaryData::new(grid, e.clone(), e.clone(), bad, e),
            Err(Error::CornerMismatch(_))
        ));
    }

    #[test]
    fn reconstruct_point_examples() {
        let grid = Grid2::unit_square(33).unwrap();
        let f = GeodesicField::new(&euclid(33), Interpolation::Bilinear).unwrap();
        let id = BoundaryData::from_map(&AnalyticMap::Identity, &grid).unwrap();
        let x = Vector2::new(0.3, 0.7);
        for v in [Vector2::E1, Vector2::new(1.0, 2.0), Vector2::new(-0.3, 0.1)] {
            let r = reconstruct_point(&f, &id, x, v, DEFAULT_RECONSTRUCTION_TOLERANCE).unwrap();
            assert!((r.value - x).norm() < 1e-12);
        }
        let rot = AnalyticMap::Rotation { theta: 0.5 };
        let b = BoundaryData::from_map(&rot, &grid).unwrap();
        for x in [Vector2::new(0.3, 0.7), Vector2::new(0.9, 0.15)] {
            let r = reconstruct_point(&f, &b, x, Vector2::new(1.0, 0.3), DEFAULT_RECONSTRUCTION_TOLERANCE).unwrap();
            assert!((r.value - rot.value(x.x, x.y)).norm() < 1e-6);
        }
    }

    #[test]
    fn mismatched_boundary_is_flagged() {
        let grid = Grid2::unit_square(17).unwrap();
        let f = GeodesicField::new(&euclid(17), Interpolation::Bilinear).unwrap();
        let b = BoundaryData::from_map(&AnalyticMap::Scale { a: 2.0, b: 2.0 }, &grid).unwrap();
        let r = reconstruct_point(&f, &b, Vector2::new(0.5, 0.5), Vector2::E1, 1e-3);
        assert!(matches!(r, Err(Error::SegmentInconsistent { .. })));
    }

    #[test]
    fn reconstruct_map_affine_examples() {
        let grid = Grid2::unit_square(17).unwrap();
        let g = euclid(17);
        let id = BoundaryData::from_map(&AnalyticMap::Identity, &grid).unwrap();
        let (m, rep) = reconstruct_map(&g, &id, 4, &ReconstructOptions::default()).unwrap();
        assert!(rep.max_spread < 1e-8 && rep.failures.is_empty());
        assert!(oracle_error(&m, &AnalyticMap::Identity).0 < 1e-8);
        let rot = AnalyticMap::Rotation { theta: 0.5 };
        let b = BoundaryData::from_map(&rot, &grid).unwrap();
        let (m, rep) = reconstruct_map(&g, &b, 4, &ReconstructOptions::default()).unwrap();
        assert!(rep.max_spread < 1e-6);
        assert!(oracle_error(&m, &rot).0 < 1e-6);
        assert!(reconstruct_map(&g, &b, 1, &ReconstructOptions::default()).is_err());
    }
}
