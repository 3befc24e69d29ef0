//! Self-checks behind `verify-algebra` and `verify-ops`.

use planimm_core::field::{curl, jacobian_det};
use planimm_core::ga2::{j_rotate, Multivector2, Vector2};
use planimm_core::{AnalyticMap, Grid2};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::Serialize;

pub const ALGEBRA_TOL: f64 = 1e-12;
/// Errors below this count as exact and are exempt from the ratio test.
pub const ROUNDOFF_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct NamedCheck {
    pub name: &'static str,
    pub max_deviation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgebraReport {
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub checks: Vec<NamedCheck>,
}

impl AlgebraReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn uniform(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0) * scale
}

pub fn algebra_suite(samples: usize, seed: u64) -> AlgebraReport {
    let (e1, e2, j, one) = (Multivector2::E1, Multivector2::E2, Multivector2::J, Multivector2::ONE);
    let generators = [e1 * e1 - one, e2 * e2 - one, e1 * e2 + e2 * e1, j * j + one]
        .iter()
        .fold(0.0f64, |m, d| m.max(d.max_abs_diff(Multivector2::ZERO)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dev = [0.0f64; 6];
    for _ in 0..samples {
        let mut mv = || Multivector2::new(uniform(&mut rng, 1.0), uniform(&mut rng, 1.0), uniform(&mut rng, 1.0), uniform(&mut rng, 1.0));
        let (a, b, c) = (mv(), mv(), mv());
        let (v, w) = (Vector2::new(a.v1, a.v2), Vector2::new(b.v1, b.v2));
        let (mv_v, mv_w) = (Multivector2::vector(v), Multivector2::vector(w));
        let wj = (mv_w * j).to_vector();
        let d = [
            (mv_v * mv_w).max_abs_diff(Multivector2::new(v.dot(w), 0.0, 0.0, v.wedge(w))),
            (j * Multivector2::scalar(v.dot(w)))
                .max_abs_diff(Multivector2::bivector(v.wedge(wj)))
                .max((j * Multivector2::bivector(v.wedge(w))).max_abs_diff(Multivector2::scalar(v.dot(wj)))),
            (j * j * a).max_abs_diff(-a),
            (mv_v * j).max_abs_diff(-(j * mv_v)).max(((j * mv_v).to_vector() - j_rotate(v)).norm()),
            ((a * b) * c).max_abs_diff(a * (b * c)),
            (a.grade(0) + a.grade(1) + a.grade(2)).max_abs_diff(a),
        ];
        for (m, x) in dev.iter_mut().zip(d) {
            *m = m.max(x.abs());
        }
    }
    let names = [
        "vector product = inner + outer",
        "duality J(v.w) = v^(wJ), J(v^w) = v.(wJ)",
        "J^2 = -1",
        "vJ = -Jv",
        "associativity",
        "grade decomposition",
    ];
    let mut checks = vec![NamedCheck { name: "generator relations", max_deviation: generators, passed: generators == 0.0 }];
    for (name, d) in names.into_iter().zip(dev) {
        checks.push(NamedCheck { name, max_deviation: d, passed: d <= ALGEBRA_TOL });
    }
    AlgebraReport { samples, seed, tolerance: ALGEBRA_TOL, checks }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub jac_error: f64,
    pub curl_error: f64,
    /// Error ratio against the previous (coarser) row.
    pub jac_ratio: Option<f64>,
    pub curl_ratio: Option<f64>,
}

/// Max-norm error of the discrete Jacobian and curl against the closed form
/// on `n × n` unit-square grids.
pub fn operator_convergence(map: &AnalyticMap, sizes: &[usize]) -> planimm_core::Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in sizes {
        let g = Grid2::unit_square(n)?;
        let f = map.sample(&g)?;
        let (jac, crl) = (jacobian_det(&f), curl(&f));
        let (mut je, mut ce) = (0.0f64, 0.0f64);
        for k in 0..g.len() {
            let (i, j) = g.node_of(k);
            let p = g.point(i, j);
            je = je.max((jac.values()[k] - map.jac(p.x, p.y)).abs());
            ce = ce.max((crl.values()[k] - map.curl(p.x, p.y)).abs());
        }
        let prev = rows.last();
        rows.push(ConvergenceRow {
            n,
            h: g.hx(),
            jac_error: je,
            curl_error: ce,
            jac_ratio: prev.map(|p| p.jac_error / je),
            curl_ratio: prev.map(|p| p.curl_error / ce),
        });
    }
    Ok(rows)
}

/// Each refinement step cuts the error by at least `min_ratio`, unless the
/// coarser error is already at round-off.
pub fn convergence_passes(rows: &[ConvergenceRow], min_ratio: f64) -> bool {
    rows.windows(2).all(|w| {
        let ok = |coarse: f64, fine: f64| coarse <= ROUNDOFF_FLOOR || coarse / fine >= min_ratio;
        ok(w[0].jac_error, w[1].jac_error) && ok(w[0].curl_error, w[1].curl_error)
    })
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let opt = |r: Option<f64>| r.map(|v| format!("{v:.6}")).unwrap_or_default();
    let mut s = String::from("n,h,jac_error,curl_error,jac_ratio,curl_ratio\n");
    for r in rows {
        s += &format!("{},{:e},{:e},{:e},{},{}\n", r.n, r.h, r.jac_error, r.curl_error, opt(r.jac_ratio), opt(r.curl_ratio));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algebra_suite_passes() {
        let r = algebra_suite(2000, 3);
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.checks.len(), 7);
    }

    #[test]
    fn sinusoidal_operators_are_second_order() {
        let rows = operator_convergence(&AnalyticMap::Sinusoidal { amplitude: 0.1 }, &[17, 33, 65]).unwrap();
        assert!(convergence_passes(&rows, 3.0));
        assert!(rows[2].jac_ratio.unwrap() > 3.5);
        let csv = convergence_csv(&rows);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(1).unwrap().ends_with(",,"));
    }

    #[test]
    fn affine_maps_are_exempt_from_ratios() {
        let rows = operator_convergence(&AnalyticMap::Shear { k: 0.5 }, &[9, 17]).unwrap();
        assert!(rows.iter().all(|r| r.jac_error <= ROUNDOFF_FLOOR));
        assert!(convergence_passes(&rows, 3.0));
    }
}
