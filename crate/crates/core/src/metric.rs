//! Induced metrics and their reconstruction from the eigen-structure of
//! `d(Jφ)`.
//!
//! The trace and determinant of `d(Jφ)` are the curl and Jacobian determinant
//! of `φ`, which fixes its characteristic polynomial. Given eigenpairs
//! `(λᵢ, fᵢ)` of `d(Jφ)` and the dual covectors `ωⁱ`, the metric is
//! `g(v, w) = Σᵢⱼ λᵢ λⱼ ṽⁱ w̃ʲ fᵢ·fⱼ` with `ṽⁱ = ωⁱ(v)` and a complex-bilinear
//! (not Hermitian) dot product.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::field::{self, Grid2, MapField, Mat2, ScalarField, IMMERSION_THRESHOLD};
use crate::math;
use crate::par;
use crate::{Error, Result};

type C = Complex64;

/// Symmetric 2×2 tensor `[[g11, g12], [g12, g22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Metric2 {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl Metric2 {
    pub const EUCLIDEAN: Self = Self { g11: 1.0, g12: 0.0, g22: 1.0 };

    pub const fn new(g11: f64, g12: f64, g22: f64) -> Self {
        Self { g11, g12, g22 }
    }

    /// `mᵀ m`.
    pub fn gram(m: &Mat2) -> Self {
        let (c0, c1) = (m.column(0), m.column(1));
        Self::new(c0.dot(c0), c0.dot(c1), c1.dot(c1))
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.g11 * self.g22 - self.g12 * self.g12
    }

    pub fn is_positive_definite(&self) -> bool {
        self.g11 > 0.0 && self.det() > 0.0
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Self::new(self.g22 / d, -self.g12 / d, self.g11 / d))
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        match (a, b) {
            (0, 0) => self.g11,
            (1, 1) => self.g22,
            _ => self.g12,
        }
    }

    /// `g(v, w)`.
    #[inline]
    pub fn inner(&self, v: [f64; 2], w: [f64; 2]) -> f64 {
        self.g11 * v[0] * w[0] + self.g12 * (v[0] * w[1] + v[1] * w[0]) + self.g22 * v[1] * w[1]
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        math::abs(self.g11 - other.g11)
            .max(math::abs(self.g12 - other.g12))
            .max(math::abs(self.g22 - other.g22))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let t = self.g11 + self.g22;
        let r = math::hypot(self.g11 - self.g22, 2.0 * self.g12);
        [(t - r) / 2.0, (t + r) / 2.0]
    }
}

/// A metric per grid node.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricField {
    grid: Grid2,
    values: Vec<Metric2>,
}

impl MetricField {
    /// Validates finiteness and positive definiteness at every node.
    pub fn new(grid: Grid2, values: Vec<Metric2>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        for (k, g) in values.iter().enumerate() {
            let (i, j) = grid.node_of(k);
            if ![g.g11, g.g12, g.g22].iter().all(|c| c.is_finite()) {
                return Err(Error::NonFinite(i, j));
            }
            if !g.is_positive_definite() {
                return Err(Error::SingularMetric(i, j));
            }
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid2, g: Metric2) -> Result<Self> {
        Self::new(grid, alloc::vec![g; grid.len()])
    }

    #[inline]
    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Metric2] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Metric2 {
        self.values[self.grid.index(i, j)]
    }
}

/// `g = dφᵀ dφ` at every node. Rejects maps that are not immersions.
pub fn induced_metric(f: &MapField) -> Result<MetricField> {
    field::check_immersion(f)?;
    let values = f.differentials().iter().map(Metric2::gram).collect();
    MetricField::new(*f.grid(), values)
}

/// Trace and determinant of `d(Jφ)` at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CharData {
    pub trace: f64,
    pub det: f64,
}

impl CharData {
    /// Roots of `λ² − tλ + d`, ordered by (real, imaginary).
    pub fn roots(&self) -> [Complex64; 2] {
        let disc = self.trace * self.trace - 4.0 * self.det;
        let half_t = self.trace / 2.0;
        if disc >= 0.0 {
            let r = math::sqrt(disc) / 2.0;
            [C::new(half_t - r, 0.0), C::new(half_t + r, 0.0)]
        } else {
            let r = math::sqrt(-disc) / 2.0;
            [C::new(half_t, -r), C::new(half_t, r)]
        }
    }

    /// Zero determinant means `d(Jφ)` is rank deficient.
    pub fn is_degenerate(&self) -> bool {
        math::abs(self.det) < IMMERSION_THRESHOLD
    }
}

/// Pairs prescribed curl and Jacobian into characteristic data of `d(Jφ)`:
/// trace = curl, det = Jac.
pub fn char_data_from_prescription(jac: &ScalarField, crl: &ScalarField) -> Result<Vec<CharData>> {
    if jac.grid() != crl.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(jac
        .values()
        .iter()
        .zip(crl.values())
        .map(|(&det, &trace)| CharData { trace, det })
        .collect())
}

/// Eigenpairs of a real 2×2 matrix with dual covectors.
///
/// `f[i]` is the eigenvector of `lambda[i]`, `omega[i]` the covector with
/// `omega[i](f[j]) = δᵢⱼ`. When `defective` is set the covectors are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenData {
    pub lambda: [Complex64; 2],
    pub f: [[Complex64; 2]; 2],
    pub omega: [[Complex64; 2]; 2],
    pub defective: bool,
}

impl EigenData {
    /// `Σ λᵢ ωⁱ ⊗ fᵢ` as a complex matrix `[row][col]`.
    pub fn reconstruct(&self) -> [[Complex64; 2]; 2] {
        let mut m = [[C::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for (r, row) in m.iter_mut().enumerate() {
                for (c, entry) in row.iter_mut().enumerate() {
                    *entry += self.lambda[i] * self.f[i][r] * self.omega[i][c];
                }
            }
        }
        m
    }
}

/// Scales `v` so its largest-modulus component is exactly 1. Ties go to the
/// later component.
fn normalize(v: [C; 2]) -> [C; 2] {
    let k = if v[1].norm() >= v[0].norm() { 1 } else { 0 };
    let p = v[k];
    let mut out = [v[0] / p, v[1] / p];
    out[k] = C::new(1.0, 0.0);
    out
}

/// Kernel vector of `m − λI`, taken from whichever row gives the larger vector.
fn eigenvector(m: &Mat2, lambda: C) -> [C; 2] {
    let a = C::new(m.m[0][0], 0.0) - lambda;
    let b = C::new(m.m[0][1], 0.0);
    let c = C::new(m.m[1][0], 0.0);
    let d = C::new(m.m[1][1], 0.0) - lambda;
    let from_row0 = [b, -a];
    let from_row1 = [-d, c];
    let n0 = from_row0[0].norm_sqr() + from_row0[1].norm_sqr();
    let n1 = from_row1[0].norm_sqr() + from_row1[1].norm_sqr();
    normalize(if n0 >= n1 { from_row0 } else { from_row1 })
}

fn dual_basis(f: &[[C; 2]; 2]) -> [[C; 2]; 2] {
    // rows of the inverse of the matrix whose columns are f[0], f[1]
    let det = f[0][0] * f[1][1] - f[1][0] * f[0][1];
    [[f[1][1] / det, -f[1][0] / det], [-f[0][1] / det, f[0][0] / det]]
}

fn order_key(a: &C, b: &C) -> core::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Eigen-decomposition of a real 2×2 matrix, complex eigenvalues allowed.
pub fn eigendecompose(m: &Mat2) -> EigenData {
    let t = m.trace();
    let d = m.det();
    let disc = t * t - 4.0 * d;
    let tol_defect = 1e-10 * (1.0 + m.norm_inf());
    let zero = C::new(0.0, 0.0);

    if math::abs(disc) < tol_defect {
        let lambda = C::new(t / 2.0, 0.0);
        let shifted = Mat2::new(m.m[0][0] - t / 2.0, m.m[0][1], m.m[1][0], m.m[1][1] - t / 2.0);
        if shifted.norm_inf() < tol_defect {
            // scalar multiple of the identity: every vector is an eigenvector
            let one = C::new(1.0, 0.0);
            let f = [[one, zero], [zero, one]];
            return EigenData { lambda: [lambda; 2], f, omega: f, defective: false };
        }
        let f0 = eigenvector(m, lambda);
        return EigenData { lambda: [lambda; 2], f: [f0, f0], omega: [[zero; 2]; 2], defective: true };
    }

    let (lambda, f) = if disc > 0.0 {
        // stable quadratic roots
        let q = -0.5 * (-t + libm::copysign(math::sqrt(disc), -t));
        let mut roots = [q, if q != 0.0 { d / q } else { t - q }];
        roots.sort_by(f64::total_cmp);
        let lambda = [C::new(roots[0], 0.0), C::new(roots[1], 0.0)];
        (lambda, [eigenvector(m, lambda[0]), eigenvector(m, lambda[1])])
    } else {
        let l0 = C::new(t / 2.0, -math::sqrt(-disc) / 2.0);
        let f0 = eigenvector(m, l0);
        let f1 = [f0[0].conj(), f0[1].conj()];
        ([l0, l0.conj()], [f0, f1])
    };
    debug_assert!(order_key(&lambda[0], &lambda[1]).is_le());
    EigenData { lambda, f, omega: dual_basis(&f), defective: false }
}

/// Metric `Σᵢⱼ λᵢλⱼ ṽⁱ w̃ʲ fᵢ·fⱼ` in the standard basis.
pub fn metric_from_eigendata(e: &EigenData) -> Result<Metric2> {
    if e.defective {
        return Err(Error::Defective);
    }
    let dot = |a: &[C; 2], b: &[C; 2]| a[0] * b[0] + a[1] * b[1];
    let mut g = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let w = e.lambda[i] * e.lambda[j] * dot(&e.f[i], &e.f[j]);
            for (a, row) in g.iter_mut().enumerate() {
                for (b, entry) in row.iter_mut().enumerate() {
                    *entry += w * e.omega[i][a] * e.omega[j][b];
                }
            }
        }
    }
    let scale = g.iter().flatten().fold(1.0f64, |s, z| s.max(math::abs(z.re)));
    let residue = g.iter().flatten().fold(0.0f64, |s, z| s.max(math::abs(z.im)));
    if residue >= 1e-9 * scale {
        return Err(Error::ImaginaryResidue(residue));
    }
    Ok(Metric2::new(g[0][0].re, 0.5 * (g[0][1].re + g[1][0].re), g[1][1].re))
}

/// Outcome of the node-by-node metric check on a concrete map.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Lemma1Report {
    /// Largest entry difference between the eigen-expansion metric and `dφᵀdφ`.
    pub max_discrepancy: f64,
    /// Largest mismatch of `(tr, det) d(Jφ)` against `(curl, Jac)`.
    pub max_char_mismatch: f64,
    pub nodes: usize,
}

/// Checks at every node that the metric rebuilt from the eigendata of
/// `d(Jφ)` equals the induced metric, and that `(tr, det) d(Jφ)` match the
/// curl and Jacobian of `φ`.
pub fn verify_lemma1(f: &MapField) -> Result<Lemma1Report> {
    let direct = induced_metric(f)?;
    let dual = field::dual_map(f);
    let dual_diffs = dual.differentials();
    let chars = char_data_from_prescription(&field::jacobian_det(f), &field::curl(f))?;
    let grid = *f.grid();

    let per_node = par::map_range(grid.len(), |k| {
        let m = &dual_diffs[k];
        let ch = &chars[k];
        let char_mismatch = math::abs(m.trace() - ch.trace).max(math::abs(m.det() - ch.det));
        let e = eigendecompose(m);
        if e.defective {
            return Err(k);
        }
        let g = metric_from_eigendata(&e).map_err(|_| k)?;
        Ok((g.max_abs_diff(&direct.values()[k]), char_mismatch))
    });

    let mut defective = Vec::new();
    let mut report = Lemma1Report { max_discrepancy: 0.0, max_char_mismatch: 0.0, nodes: grid.len() };
    for r in per_node {
        match r {
            Ok((disc, ch)) => {
                report.max_discrepancy = report.max_discrepancy.max(disc);
                report.max_char_mismatch = report.max_char_mismatch.max(ch);
            }
            Err(k) => defective.push(grid.node_of(k)),
        }
    }
    if !defective.is_empty() {
        return Err(Error::DefectiveNodes(defective));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ga2::Vector2;
    use crate::maps::AnalyticMap;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn close(a: C, b: C, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn identity_example_eigendata() {
        let m = Mat2::new(0.0, 1.0, -1.0, 0.0);
        let e = eigendecompose(&m);
        assert!(!e.defective);
        assert_eq!(e.lambda, [c(0.0, -1.0), c(0.0, 1.0)]);
        // λ = −i ↔ f = (i, 1), λ = i ↔ f = (−i, 1)
        assert!(close(e.f[0][0], c(0.0, 1.0), 1e-15) && close(e.f[0][1], c(1.0, 0.0), 1e-15));
        assert!(close(e.f[1][0], c(0.0, -1.0), 1e-15) && close(e.f[1][1], c(1.0, 0.0), 1e-15));
        // ω = ½(∓i dx + dy)
        assert!(close(e.omega[0][0], c(0.0, -0.5), 1e-15) && close(e.omega[0][1], c(0.5, 0.0), 1e-15));
        assert!(close(e.omega[1][0], c(0.0, 0.5), 1e-15) && close(e.omega[1][1], c(0.5, 0.0), 1e-15));
        let g = metric_from_eigendata(&e).unwrap();
        assert!(g.max_abs_diff(&Metric2::EUCLIDEAN) < 1e-10);
    }

    #[test]
    fn diagonal_and_jordan() {
        let e = eigendecompose(&Mat2::new(2.0, 0.0, 0.0, 3.0));
        assert_eq!(e.lambda, [c(2.0, 0.0), c(3.0, 0.0)]);
        assert_eq!(e.f[0], [c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(e.f[1], [c(0.0, 0.0), c(1.0, 0.0)]);
        let g = metric_from_eigendata(&e).unwrap();
        assert_eq!(g.eigenvalues(), [4.0, 9.0]);

        let e = eigendecompose(&Mat2::new(1.0, 1.0, 0.0, 1.0));
        assert!(e.defective);
        assert_eq!(metric_from_eigendata(&e), Err(Error::Defective));

        let e = eigendecompose(&Mat2::new(2.0, 0.0, 0.0, 2.0));
        assert!(!e.defective);
        assert!(metric_from_eigendata(&e).unwrap().max_abs_diff(&Metric2::new(4.0, 0.0, 4.0)) < 1e-14);
    }

    #[test]
    fn eigendata_metric_matches_affine_induced_metric() {
        // dφ = [[0, −3], [2, 0]] gives d(Jφ) = diag(2, 3)
        let a = Mat2::new(0.0, -3.0, 2.0, 0.0);
        assert_eq!(a.j_left(), Mat2::new(2.0, 0.0, 0.0, 3.0));
        let f = AnalyticMap::Affine { a, b: Vector2::ZERO }.sample(&Grid2::unit_square(5).unwrap()).unwrap();
        let direct = induced_metric(&f).unwrap().get(2, 2);
        let g = metric_from_eigendata(&eigendecompose(&a.j_left())).unwrap();
        assert!(g.max_abs_diff(&direct) < 1e-12);
        assert_eq!(direct, Metric2::new(4.0, 0.0, 9.0));
    }

    #[test]
    fn char_data_roots() {
        let g = Grid2::unit_square(3).unwrap();
        let ch = char_data_from_prescription(&ScalarField::constant(g, 1.0), &ScalarField::constant(g, 0.0)).unwrap();
        assert_eq!(ch[0], CharData { trace: 0.0, det: 1.0 });
        assert_eq!(ch[0].roots(), [c(0.0, -1.0), c(0.0, 1.0)]);

        let theta: f64 = 0.7;
        let ch = CharData { trace: 2.0 * theta.sin(), det: 1.0 };
        let r = ch.roots();
        assert!(close(r[1], c(theta.sin(), theta.cos()), 1e-14));
        assert!(close(r[0], c(theta.sin(), -theta.cos()), 1e-14));
        let rot = AnalyticMap::Rotation { theta }.jacobian(0.0, 0.0).j_left();
        let e = eigendecompose(&rot);
        assert!(close(e.lambda[0], r[0], 1e-14) && close(e.lambda[1], r[1], 1e-14));

        assert!(CharData { trace: 1.0, det: 0.0 }.is_degenerate());
        let other = Grid2::unit_square(4).unwrap();
        assert_eq!(
            char_data_from_prescription(&ScalarField::constant(g, 1.0), &ScalarField::constant(other, 0.0)),
            Err(Error::GridMismatch)
        );
    }

    #[test]
    fn induced_metric_examples() {
        let grid = Grid2::unit_square(9).unwrap();
        for (map, want) in [
            (AnalyticMap::Identity, Metric2::EUCLIDEAN),
            (AnalyticMap::Rotation { theta: 1.1 }, Metric2::EUCLIDEAN),
            (AnalyticMap::Scale { a: 2.0, b: 3.0 }, Metric2::new(4.0, 0.0, 9.0)),
        ] {
            let g = induced_metric(&map.sample(&grid).unwrap()).unwrap();
            assert!(g.values().iter().all(|v| v.max_abs_diff(&want) < 1e-12), "{map:?}");
        }
        let flat = MapField::from_fn(grid, |x, _| Vector2::new(x, 0.0)).unwrap();
        assert!(matches!(induced_metric(&flat), Err(Error::NotImmersion { .. })));
    }

    #[test]
    fn dual_map_has_same_metric() {
        let f = AnalyticMap::Sinusoidal { amplitude: 0.1 }.sample(&Grid2::unit_square(17).unwrap()).unwrap();
        let a = induced_metric(&f).unwrap();
        let b = induced_metric(&field::dual_map(&f)).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!(x.max_abs_diff(y) < 1e-12);
        }
    }

    #[test]
    fn verify_lemma1_examples() {
        let grid = Grid2::unit_square(33).unwrap();
        for map in [AnalyticMap::Identity, AnalyticMap::Rotation { theta: 0.7 }] {
            let r = verify_lemma1(&map.sample(&grid).unwrap()).unwrap();
            assert!(r.max_discrepancy < 1e-10);
            assert_eq!(r.max_char_mismatch, 0.0);
        }
        let grid = Grid2::unit_square(65).unwrap();
        let r = verify_lemma1(&AnalyticMap::Sinusoidal { amplitude: 0.1 }.sample(&grid).unwrap()).unwrap();
        assert!(r.max_discrepancy < 1e-8, "{r:?}");
    }

    #[test]
    fn verify_lemma1_reports_defective_nodes() {
        // dφ = [[0,−1],[1,1]] gives the Jordan block d(Jφ) = [[1,1],[0,1]]
        let a = Mat2::new(0.0, -1.0, 1.0, 1.0);
        assert_eq!(a.j_left(), Mat2::new(1.0, 1.0, 0.0, 1.0));
        let f = AnalyticMap::Affine { a, b: Vector2::ZERO }.sample(&Grid2::unit_square(4).unwrap()).unwrap();
        match verify_lemma1(&f) {
            Err(Error::DefectiveNodes(nodes)) => assert_eq!(nodes.len(), 16),
            other => panic!("{other:?}"),
        }
    }

    fn arb_mat() -> impl Strategy<Value = Mat2> {
        prop::array::uniform4(-3.0..3.0f64).prop_map(|v| Mat2::new(v[0], v[1], v[2], v[3]))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn eigen_metric_equals_gram(m in arb_mat()) {
            let e = eigendecompose(&m);
            prop_assume!(!e.defective);
            let t = e.lambda[0] + e.lambda[1];
            let d = e.lambda[0] * e.lambda[1];
            prop_assert!((t.re - m.trace()).abs() < 1e-10 && (d - c(m.det(), 0.0)).norm() < 1e-10);
            for i in 0..2 {
                for j in 0..2 {
                    let pair = e.omega[i][0] * e.f[j][0] + e.omega[i][1] * e.f[j][1];
                    let want = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((pair - c(want, 0.0)).norm() < 1e-10);
                }
            }
            let rec = e.reconstruct();
            for r in 0..2 {
                for col in 0..2 {
                    prop_assert!((rec[r][col] - c(m.m[r][col], 0.0)).norm() < 1e-10);
                }
            }
            let g = metric_from_eigendata(&e).unwrap();
            prop_assert!(g.max_abs_diff(&Metric2::gram(&m)) < 1e-8);
            if m.det().abs() > 1e-6 {
                prop_assert!(g.is_positive_definite());
            }
        }

        #[test]
        fn eigenpairs_transfer_to_differential(m in arb_mat()) {
            // with d(Jφ) = m, dφ = −J m; then dφ f = λ (−J f)
            let dphi = m.j_left().j_left().j_left();
            let e = eigendecompose(&m);
            prop_assume!(!e.defective);
            for i in 0..2 {
                let f = e.f[i];
                let lhs = [
                    c(dphi.m[0][0], 0.0) * f[0] + c(dphi.m[0][1], 0.0) * f[1],
                    c(dphi.m[1][0], 0.0) * f[0] + c(dphi.m[1][1], 0.0) * f[1],
                ];
                // −J (a, b) = (−b, a)
                let rhs = [-e.lambda[i] * f[1], e.lambda[i] * f[0]];
                prop_assert!((lhs[0] - rhs[0]).norm() < 1e-10 && (lhs[1] - rhs[1]).norm() < 1e-10);
            }
        }
    }
}
