//! Sampled maps on rectangular grids and their first-order operators.
//!
//! Derivatives use central differences at interior nodes and second-order
//! one-sided three-point stencils on boundary rows and columns, so every
//! operator is exact on quadratic data. Nodes are stored row-major with `j`
//! (the y index) outer.

use alloc::vec::Vec;
use core::ops::Mul;

use crate::ga2::{j_rotate, Multivector2, Vector2};
use crate::math;
use crate::par;
use crate::{Error, Result};

/// Maps with `min |det dφ|` below this are not treated as immersions.
pub const IMMERSION_THRESHOLD: f64 = 1e-8;

/// Node grid on the rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Grid2 {
    pub fn new(nx: usize, ny: usize, x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::GridTooSmall { nx, ny });
        }
        if ![x0, y0, x1, y1].iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidGrid("non-finite corner"));
        }
        if x1 <= x0 || y1 <= y0 {
            return Err(Error::InvalidGrid("need x1 > x0 and y1 > y0"));
        }
        Ok(Self { nx, ny, x0, y0, x1, y1 })
    }

    /// `n × n` nodes on the unit square.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(n, n, 0.0, 0.0, 1.0, 1.0)
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx - 1) as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        (self.y1 - self.y0) / (self.ny - 1) as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn node_of(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    /// Coordinates of node `(i, j)`. The last node lands exactly on `x1`/`y1`.
    #[inline]
    pub fn point(&self, i: usize, j: usize) -> Vector2 {
        let x = if i + 1 == self.nx { self.x1 } else { self.x0 + i as f64 * self.hx() };
        let y = if j + 1 == self.ny { self.y1 } else { self.y0 + j as f64 * self.hy() };
        Vector2::new(x, y)
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    pub fn contains_node(&self, i: usize, j: usize) -> bool {
        i < self.nx && j < self.ny
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    /// Interior nodes in storage order.
    pub fn interior_nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..self.ny - 1).flat_map(move |j| (1..self.nx - 1).map(move |i| (i, j)))
    }

    pub fn interior_len(&self) -> usize {
        (self.nx - 2) * (self.ny - 2)
    }
}

/// Three-point derivative along one axis of a sampled line `f(0..n)`.
#[inline]
pub fn stencil_derivative(n: usize, h: f64, k: usize, f: impl Fn(usize) -> f64) -> f64 {
    let two_h = 2.0 * h;
    if k == 0 {
        (-3.0 * f(0) + 4.0 * f(1) - f(2)) / two_h
    } else if k + 1 == n {
        (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / two_h
    } else {
        (f(k + 1) - f(k - 1)) / two_h
    }
}

/// `∂/∂x` of nodal data at node `(i, j)`; `f` reads by flat index.
#[inline]
pub fn partial_x(grid: &Grid2, i: usize, j: usize, f: impl Fn(usize) -> f64) -> f64 {
    let row = j * grid.nx;
    stencil_derivative(grid.nx, grid.hx(), i, |k| f(row + k))
}

/// `∂/∂y` of nodal data at node `(i, j)`; `f` reads by flat index.
#[inline]
pub fn partial_y(grid: &Grid2, i: usize, j: usize, f: impl Fn(usize) -> f64) -> f64 {
    let nx = grid.nx;
    stencil_derivative(grid.ny, grid.hy(), j, |k| f(k * nx + i))
}

/// Real 2×2 matrix, `m[row][col]`. For a differential, column `c` is `∂φ/∂x_c`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const IDENTITY: Self = Self { m: [[1.0, 0.0], [0.0, 1.0]] };

    #[inline]
    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self { m: [[a11, a12], [a21, a22]] }
    }

    #[inline]
    pub fn from_columns(c0: Vector2, c1: Vector2) -> Self {
        Self::new(c0.x, c1.x, c0.y, c1.y)
    }

    #[inline]
    pub fn column(&self, c: usize) -> Vector2 {
        Vector2::new(self.m[0][c], self.m[1][c])
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    #[inline]
    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    #[inline]
    pub fn apply(&self, v: Vector2) -> Vector2 {
        Vector2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }

    /// Max-norm (largest absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        let r0 = math::abs(self.m[0][0]) + math::abs(self.m[0][1]);
        let r1 = math::abs(self.m[1][0]) + math::abs(self.m[1][1]);
        r0.max(r1)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                d = d.max(math::abs(self.m[r][c] - other.m[r][c]));
            }
        }
        d
    }

    /// Left multiplication by J, row-wise `(a, b) -> (b, -a)` on each column.
    pub fn j_left(&self) -> Self {
        Self::from_columns(j_rotate(self.column(0)), j_rotate(self.column(1)))
    }
}

impl Mul for Mat2 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Real value per node.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalarField {
    grid: Grid2,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid2, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let (i, j) = grid.node_of(k);
            return Err(Error::NonFinite(i, j));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid2, value: f64) -> Self {
        Self { grid, values: alloc::vec![value; grid.len()] }
    }

    pub fn from_fn(grid: Grid2, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.node_of(k);
                let p = grid.point(i, j);
                f(p.x, p.y)
            })
            .collect();
        Self::new(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(math::abs(*v)))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max(math::abs(a - b))))
    }
}

/// A sampled map `φ: grid → ℝ²`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MapField {
    grid: Grid2,
    values: Vec<Vector2>,
}

impl MapField {
    pub fn new(grid: Grid2, values: Vec<Vector2>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let (i, j) = grid.node_of(k);
            return Err(Error::NonFinite(i, j));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid2, f: impl Fn(f64, f64) -> Vector2) -> Result<Self> {
        let values = (0..grid.len())
            .map(|k| {
                let (i, j) = grid.node_of(k);
                let p = grid.point(i, j);
                f(p.x, p.y)
            })
            .collect();
        Self::new(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Vector2] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Vector2] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Vector2 {
        self.values[self.grid.index(i, j)]
    }

    /// Largest Euclidean distance between corresponding nodes.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((*a - *b).norm())))
    }

    /// `dφ` at a node, without bounds checks.
    #[inline]
    pub(crate) fn differential_at(&self, i: usize, j: usize) -> Mat2 {
        let g = &self.grid;
        let v = &self.values;
        Mat2::new(
            partial_x(g, i, j, |k| v[k].x),
            partial_y(g, i, j, |k| v[k].x),
            partial_x(g, i, j, |k| v[k].y),
            partial_y(g, i, j, |k| v[k].y),
        )
    }

    /// `dφ` at every node in storage order.
    pub fn differentials(&self) -> Vec<Mat2> {
        par::map_range(self.grid.len(), |k| {
            let (i, j) = self.grid.node_of(k);
            self.differential_at(i, j)
        })
    }
}

/// `dφ` at node `(i, j)`: column `c` is `∂φ/∂x_c`.
pub fn differential(f: &MapField, i: usize, j: usize) -> Result<Mat2> {
    if !f.grid.contains_node(i, j) {
        return Err(Error::NodeOutOfRange(i, j));
    }
    Ok(f.differential_at(i, j))
}

fn scalar_from_differentials(f: &MapField, op: impl Fn(&Mat2) -> f64) -> ScalarField {
    let values = f.differentials().iter().map(op).collect();
    ScalarField { grid: f.grid, values }
}

/// Jacobian determinant `det dφ` per node.
pub fn jacobian_det(f: &MapField) -> ScalarField {
    scalar_from_differentials(f, Mat2::det)
}

/// Jacobian determinant read off the bivector `φ_x ∧ φ_y = J det dφ`.
pub fn jacobian_det_clifford(f: &MapField) -> ScalarField {
    scalar_from_differentials(f, |d| {
        let wedge = Multivector2::vector(d.column(0)) * Multivector2::vector(d.column(1));
        wedge.grade(2).b
    })
}

/// Planar curl `∂₁φ² − ∂₂φ¹`, which equals `div(Jφ)`.
pub fn curl(f: &MapField) -> ScalarField {
    scalar_from_differentials(f, |d| d.m[1][0] - d.m[0][1])
}

/// Divergence `∂₁φ¹ + ∂₂φ²`.
pub fn divergence(f: &MapField) -> ScalarField {
    scalar_from_differentials(f, Mat2::trace)
}

/// The dual map `Jφ`, node-wise [`j_rotate`].
pub fn dual_map(f: &MapField) -> MapField {
    MapField { grid: f.grid, values: f.values.iter().map(|v| j_rotate(*v)).collect() }
}

/// Smallest `|det dφ|` over all nodes and where it occurs.
pub fn min_abs_det(f: &MapField) -> (f64, (usize, usize)) {
    let jac = jacobian_det(f);
    let mut best = (f64::INFINITY, (0, 0));
    for (k, d) in jac.values.iter().enumerate() {
        if math::abs(*d) < best.0 {
            best = (math::abs(*d), f.grid.node_of(k));
        }
    }
    best
}

/// Errors unless `min |det dφ| ≥ IMMERSION_THRESHOLD`.
pub fn check_immersion(f: &MapField) -> Result<()> {
    let (min_abs_det, node) = min_abs_det(f);
    if min_abs_det < IMMERSION_THRESHOLD {
        return Err(Error::NotImmersion { min_abs_det, node });
    }
    Ok(())
}
