//! The necessary compatibility condition between curl and boundary values:
//! `∫_M curl dA = −∮_{∂M} φ·T ds`, with `T = J n` for the outward normal `n`.
//!
//! With `J` rotating clockwise, `−φ·T` on each edge is the counterclockwise
//! tangential component, so the right-hand side is the usual circulation.

use crate::field::ScalarField;
use crate::ga2::{j_rotate, Vector2};
use crate::geodesic::BoundaryData;
use crate::math;
use crate::{Error, Result};

/// Default solver precondition on [`CompatReport::relative_defect`].
pub const DEFAULT_COMPAT_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompatReport {
    /// `∫_M curl dA` by the trapezoidal rule.
    pub interior_integral: f64,
    /// `−∮ φ·T ds` by the trapezoidal rule.
    pub boundary_integral: f64,
    /// `interior_integral − boundary_integral`.
    pub defect: f64,
    /// `|defect|` over `∫|curl| dA + ∮|φ·T| ds`.
    pub relative_defect: f64,
}

impl CompatReport {
    pub fn is_compatible(&self, threshold: f64) -> bool {
        self.relative_defect < threshold
    }
}

fn trapezoid(h: f64, values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    let mut s = 0.0;
    for (k, v) in values.enumerate() {
        let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
        s += w * v;
    }
    s * h
}

/// Compares the integrated curl with the boundary circulation.
pub fn compatibility_defect(crl: &ScalarField, b: &BoundaryData) -> Result<CompatReport> {
    let g = crl.grid();
    if g != b.grid() {
        return Err(Error::GridMismatch);
    }
    let (hx, hy) = (g.hx(), g.hy());
    let row = |j: usize, abs: bool| {
        trapezoid(hx, (0..g.nx).map(move |i| {
            let v = crl.get(i, j);
            if abs { math::abs(v) } else { v }
        }))
    };
    let interior_integral = trapezoid(hy, (0..g.ny).map(|j| row(j, false)));
    let interior_abs = trapezoid(hy, (0..g.ny).map(|j| row(j, true)));

    // (samples, outward normal, spacing)
    let edges: [(&[Vector2], Vector2, f64); 4] = [
        (b.bottom(), Vector2::new(0.0, -1.0), hx),
        (b.right(), Vector2::new(1.0, 0.0), hy),
        (b.top(), Vector2::new(0.0, 1.0), hx),
        (b.left(), Vector2::new(-1.0, 0.0), hy),
    ];
    let mut boundary_integral = 0.0;
    let mut boundary_abs = 0.0;
    for (samples, n, h) in edges {
        let t = j_rotate(n);
        boundary_integral -= trapezoid(h, samples.iter().map(|v| v.dot(t)));
        boundary_abs += trapezoid(h, samples.iter().map(|v| math::abs(v.dot(t))));
    }

    let defect = interior_integral - boundary_integral;
    let scale = interior_abs + boundary_abs;
    let relative_defect = if defect == 0.0 {
        0.0
    } else if scale > 0.0 {
        math::abs(defect) / scale
    } else {
        f64::INFINITY
    };
    Ok(CompatReport { interior_integral, boundary_integral, defect, relative_defect })
}
