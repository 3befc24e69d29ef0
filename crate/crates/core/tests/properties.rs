use planimm_core::compat::compatibility_defect;
use planimm_core::field::curl;
use planimm_core::geodesic::BoundaryData;
use planimm_core::solver::{smooth_perturbation, solve, Prescription, SolverOptions};
use planimm_core::{AnalyticMap, Grid2, MapField, Vector2};

fn smooth(n: usize) -> MapField {
    MapField::from_fn(Grid2::unit_square(n).unwrap(), |x, y| Vector2::new(x + 0.1 * (2.0 * y + x).sin(), y + 0.1 * x.exp() * y * y)).unwrap()
}

#[test]
fn compat_defect_is_second_order() {
    let defects: Vec<f64> = [9, 17, 33, 65]
        .iter()
        .map(|&n| {
            let f = smooth(n);
            compatibility_defect(&curl(&f), &BoundaryData::from_map_field(&f)).unwrap().defect.abs()
        })
        .collect();
    for w in defects.windows(2) {
        assert!(w[0] / w[1] >= 3.0, "{defects:?}");
    }
}

fn perturbed_start(p: &Prescription, seed: u64) -> MapField {
    let blend = p.boundary().coons_blend();
    let delta = smooth_perturbation(&p.grid(), 0.1, seed, 0);
    MapField::new(p.grid(), blend.values().iter().zip(&delta).map(|(a, b)| *a + *b).collect()).unwrap()
}

#[test]
fn solve_is_deterministic_and_monotone() {
    let p = Prescription::from_map(&AnalyticMap::Sinusoidal { amplitude: 0.1 }, &Grid2::unit_square(17).unwrap()).unwrap();
    let init = perturbed_start(&p, 5);
    let a = solve(&p, &init, &SolverOptions::default()).unwrap();
    let b = solve(&p, &init, &SolverOptions::default()).unwrap();
    assert_eq!(a, b);
    assert!(a.converged);
    assert!(a.residual_history.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(a.residual_history.len(), a.iterations + 1);
}

#[test]
fn solution_recovers_samples_on_rectangle() {
    let grid = Grid2::new(13, 9, 1.0, -0.5, 2.5, 0.5).unwrap();
    let map = AnalyticMap::Shear { k: 0.3 };
    let p = Prescription::from_map(&map, &grid).unwrap();
    let r = solve(&p, &p.boundary().coons_blend(), &SolverOptions::default()).unwrap();
    assert!(r.converged);
    assert!(r.solution.sup_distance(&map.sample(&grid).unwrap()).unwrap() < 1e-9);
}

#[test]
fn iteration_limit_reports_non_convergence() {
    let p = Prescription::from_map(&AnalyticMap::Sinusoidal { amplitude: 0.1 }, &Grid2::unit_square(17).unwrap()).unwrap();
    let opts = SolverOptions { max_iterations: 1, ..SolverOptions::default() };
    let r = solve(&p, &perturbed_start(&p, 9), &opts).unwrap();
    assert!(!r.converged);
    assert_eq!(r.iterations, 1);
}
