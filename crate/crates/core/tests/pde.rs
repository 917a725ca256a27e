use pmm_core::pde::{
    max_stable_dt, pde_step, robin_coefficients, solve, stationary_profile, uniform_times,
    weak_form_residual, BoundaryCondition, DensityGrid, TestFunction,
};
use proptest::prelude::*;
use std::f64::consts::PI;

fn smooth(alpha: f64, beta: f64) -> impl Fn(f64) -> f64 + Copy {
    move |u| alpha + (beta - alpha) * u + 0.15 * (PI * u).sin()
}

/// Max difference between a grid and a finer grid on the shared nodes.
fn gap(coarse: &[f64], fine: &[f64]) -> f64 {
    coarse
        .iter()
        .enumerate()
        .map(|(i, v)| (v - fine[2 * i]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn self_convergence_order() {
    let bc = BoundaryCondition::dirichlet(0.2, 0.8).unwrap();
    let g = smooth(0.2, 0.8);
    let fields: Vec<_> = [64, 128, 256, 512]
        .iter()
        .map(|&j| solve(g, &bc, 0.05, j, &[0.05]).unwrap().last().values)
        .collect();
    let e: Vec<f64> = fields.windows(2).map(|w| gap(&w[0], &w[1])).collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.9, "order {order} from {e:?}");
    }
}

#[test]
fn stationary_profiles_are_fixed_points() {
    for bc in [
        BoundaryCondition::dirichlet(0.2, 0.8).unwrap(),
        BoundaryCondition::robin(1.0, 0.2, 0.8).unwrap(),
        BoundaryCondition::robin(4.0, 0.7, 0.1).unwrap(),
    ] {
        // one-step change per unit time, as a function of the grid
        let defect = |j: usize| {
            let grid = DensityGrid::stationary(&bc, j).unwrap();
            let dt = max_stable_dt(grid.du, &bc);
            let next = pde_step(&grid, dt, &bc).unwrap();
            next.values
                .iter()
                .zip(&grid.values)
                .map(|(a, b)| (a - b).abs() / dt)
                .fold(0.0, f64::max)
        };
        let d: Vec<f64> = [32, 64, 128].iter().map(|&j| defect(j)).collect();
        for w in d.windows(2) {
            if w[0] > 1e-9 {
                assert!((w[0] / w[1]).log2() >= 1.9, "{bc:?}: {d:?}");
            }
        }
    }
}

#[test]
fn robin_flux_matches_at_stationarity() {
    let (kappa, alpha, beta) = (1.5, 0.25, 0.7);
    let (a, b) = robin_coefficients(kappa, alpha, beta);
    let bc = BoundaryCondition::robin(kappa, alpha, beta).unwrap();
    let errs: Vec<f64> = [32usize, 64, 128]
        .iter()
        .map(|&j| {
            let du = 1.0 / j as f64;
            let r = |i: usize| stationary_profile(&bc, i as f64 * du).unwrap();
            // one-sided second-order difference of ρ² at u = 0
            let d = (-3.0 * r(0).powi(2) + 4.0 * r(1).powi(2) - r(2).powi(2)) / (2.0 * du);
            (d - kappa * (r(0) - alpha)).abs()
        })
        .collect();
    assert!((a - kappa * (b.sqrt() - alpha)).abs() < 1e-14);
    assert!(errs.iter().all(|&e| e < 1e-10), "{errs:?}");
}

#[test]
fn neumann_conserves_mass() {
    let bc = BoundaryCondition::neumann(0.2, 0.8).unwrap();
    let field = solve(|u| 0.1 + 0.8 * u * u, &bc, 0.5, 128, &uniform_times(0.5, 10)).unwrap();
    let du = field.du();
    let mass = |v: &Vec<f64>| du * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]));
    let m0 = mass(&field.values[0]);
    for v in &field.values {
        assert!((mass(v) - m0).abs() < 1e-10);
    }
}

#[test]
fn weak_residual_decreases_under_refinement() {
    let horizon = 0.05;
    let times = uniform_times(horizon, 2000);
    let g = smooth(0.2, 0.8);
    let cases = [
        (BoundaryCondition::dirichlet(0.2, 0.8).unwrap(), vec![TestFunction::sine(1), TestFunction::sine(2), TestFunction::decaying_sine(1, 3.0)]),
        (
            BoundaryCondition::robin(1.0, 0.2, 0.8).unwrap(),
            vec![TestFunction::cosine(1), TestFunction::polynomial([0.5, -1.0, 2.0, 0.3]), TestFunction::sine(2)],
        ),
    ];
    for (bc, tests) in cases {
        let fields: Vec<_> = [16, 32, 64].iter().map(|&j| solve(g, &bc, horizon, j, &times).unwrap()).collect();
        for test in &tests {
            let r: Vec<f64> = fields.iter().map(|f| weak_form_residual(f, g, test, horizon).unwrap().abs()).collect();
            assert!(r.windows(2).all(|w| w[1] < w[0]), "{bc:?} {test:?}: {r:?}");
        }
    }
}

#[test]
fn solution_depends_continuously_on_data() {
    let bc = BoundaryCondition::robin(1.0, 0.3, 0.6).unwrap();
    let g = smooth(0.3, 0.6);
    let base = solve(g, &bc, 0.2, 64, &[0.2]).unwrap().last().values;
    let dist = |delta: f64| {
        let h = move |u: f64| g(u) + delta * (2.0 * PI * u).sin().powi(2);
        let v = solve(h, &bc, 0.2, 64, &[0.2]).unwrap().last().values;
        v.iter().zip(&base).map(|(a, b)| (a - b).abs()).sum::<f64>() / 64.0
    };
    let d: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&x| dist(x)).collect();
    assert!(d.windows(2).all(|w| w[1] < 0.2 * w[0]), "{d:?}");
    assert!(d[2] < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stays_in_range(
        alpha in 0.01f64..0.99,
        beta in 0.01f64..0.99,
        c in prop::array::uniform4(0.0f64..1.0),
        kappa in prop::option::of(0.0f64..5.0),
    ) {
        let bc = match kappa {
            Some(k) => BoundaryCondition::robin(k, alpha, beta).unwrap(),
            None => BoundaryCondition::dirichlet(alpha, beta).unwrap(),
        };
        // piecewise-linear data through random nodes, matching the boundary values
        let nodes = [alpha, c[0], c[1], c[2], c[3], beta];
        let g = move |u: f64| {
            let s = u * 5.0;
            let i = (s.floor() as usize).min(4);
            nodes[i] + (s - i as f64) * (nodes[i + 1] - nodes[i])
        };
        let field = solve(g, &bc, 0.02, 48, &[0.01, 0.02]).unwrap();
        for row in &field.values {
            prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
