//! Two affine maps of ℝ³ with equal Jacobian determinant and curl but
//! different induced metrics, so the planar uniqueness argument has no
//! direct three-dimensional analogue.

pub type Mat3 = [[f64; 3]; 3];

/// `x ↦ A x + b` on ℝ³. `a[r][c] = ∂φ^r/∂x_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AffineMap3 {
    pub a: Mat3,
    pub b: [f64; 3],
}

impl AffineMap3 {
    pub fn jacobian_det(&self) -> f64 {
        let a = &self.a;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }

    /// `(∂₂φ³ − ∂₃φ², ∂₃φ¹ − ∂₁φ³, ∂₁φ² − ∂₂φ¹)`.
    pub fn curl(&self) -> [f64; 3] {
        let a = &self.a;
        [a[2][1] - a[1][2], a[0][2] - a[2][0], a[1][0] - a[0][1]]
    }

    /// `AᵀA`.
    pub fn induced_metric(&self) -> Mat3 {
        let mut g = [[0.0; 3]; 3];
        for (i, row) in g.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = (0..3).map(|r| self.a[r][i] * self.a[r][j]).sum();
            }
        }
        g
    }
}

/// `φ(x, y, z) = (y, z, x)`.
pub fn phi() -> AffineMap3 {
    AffineMap3 { a: [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]], b: [0.0; 3] }
}

/// `ψ(x, y, z) = (y − x, z, x)`.
pub fn psi() -> AffineMap3 {
    AffineMap3 { a: [[-1.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]], b: [0.0; 3] }
}

/// Expected values: Jacobians 1, curls −(1, 1, 1).
pub const EXPECTED_JAC: f64 = 1.0;
pub const EXPECTED_CURL: [f64; 3] = [-1.0, -1.0, -1.0];
pub const EXPECTED_PHI_METRIC: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
/// `2dx² − 2dxdy + dy² + dz²`.
pub const EXPECTED_PSI_METRIC: Mat3 = [[2.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CounterexampleCheck {
    pub name: &'static str,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CounterexampleReport {
    pub jac_phi: f64,
    pub jac_psi: f64,
    pub curl_phi: [f64; 3],
    pub curl_psi: [f64; 3],
    pub metric_phi: Mat3,
    pub metric_psi: Mat3,
    pub checks: alloc::vec::Vec<CounterexampleCheck>,
}

impl CounterexampleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Evaluates both maps and compares every quantity exactly.
pub fn run_counterexample() -> CounterexampleReport {
    let (p, s) = (phi(), psi());
    let (jac_phi, jac_psi) = (p.jacobian_det(), s.jacobian_det());
    let (curl_phi, curl_psi) = (p.curl(), s.curl());
    let (metric_phi, metric_psi) = (p.induced_metric(), s.induced_metric());
    let check = |name, passed| CounterexampleCheck { name, passed };
    let checks = alloc::vec![
        check("Jac phi = 1", jac_phi == EXPECTED_JAC),
        check("Jac psi = 1", jac_psi == EXPECTED_JAC),
        check("curl phi = -(1,1,1)", curl_phi == EXPECTED_CURL),
        check("curl psi = -(1,1,1)", curl_psi == EXPECTED_CURL),
        check("phi metric = dx^2 + dy^2 + dz^2", metric_phi == EXPECTED_PHI_METRIC),
        check("psi metric = 2dx^2 - 2dxdy + dy^2 + dz^2", metric_psi == EXPECTED_PSI_METRIC),
        check("metrics differ", metric_phi != metric_psi),
    ];
    CounterexampleReport { jac_phi, jac_psi, curl_phi, curl_psi, metric_phi, metric_psi, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_counterexample() {
        let r = run_counterexample();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.metric_psi, [[2.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    }

    #[test]
    fn curl_convention_on_rotation_field() {
        // φ = (−y, x, 0) has curl (0, 0, 2) in the right-handed convention
        let m = AffineMap3 { a: [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]], b: [0.0; 3] };
        assert_eq!(m.curl(), [0.0, 0.0, 2.0]);
    }
}
