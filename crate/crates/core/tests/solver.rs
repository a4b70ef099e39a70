mod common;

use nalgebra::{Matrix2, Vector2};
use obstacle_core::problem::{scenarios, BoundaryData, ObstacleProblem, ProblemSpec};
use obstacle_core::solve::{assemble, psor, solve_active_set_with, solve_psor_with, PsorOptions, SolverOptions};
use obstacle_core::Point;
use proptest::prelude::*;

const SOLVABLE: [&str; 6] = ["half_space", "radial", "disc", "holder_half_space", "holder_radial", "rotated"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn psor_sweeps_never_raise_the_energy(which in 0usize..6, res in 5usize..24, omega in 0.2f64..1.95) {
        let problem = ObstacleProblem::from_spec(&scenarios::by_name(SOLVABLE[which], res).unwrap()).unwrap();
        let system = assemble(&problem).unwrap();
        let mut trace = Vec::new();
        let opts = PsorOptions { omega, tol: 1e-9, max_sweeps: 20_000 };
        psor(system.stiffness(), system.load(), vec![0.0; system.unknowns().len()], opts, Some(&mut trace)).unwrap();
        for pair in trace.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-13 * pair[0].abs().max(1e-300), "{} -> {}", pair[0], pair[1]);
        }
    }
}

#[test]
fn psor_and_active_set_agree_on_every_scenario() {
    let opts = SolverOptions::default();
    for name in SOLVABLE {
        let problem = ObstacleProblem::from_spec(&scenarios::by_name(name, 33).unwrap()).unwrap();
        let a = solve_active_set_with(&problem, &opts).unwrap();
        let p = solve_psor_with(&problem, &opts).unwrap();
        let gap = a.u.values().iter().zip(p.u.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(gap <= 10.0 * opts.tol, "{name}: {gap:e}");
    }
}

fn larger_data(spec: &ProblemSpec, boundary: BoundaryData) -> ProblemSpec {
    ProblemSpec { boundary, ..spec.clone() }
}

#[test]
fn raising_boundary_data_raises_the_solution() {
    let e = Vector2::new(1.0, 0.0);
    let pairs = [
        (
            scenarios::half_space(49),
            BoundaryData::HalfSpace { direction: e, offset: -0.1 },
        ),
        (
            scenarios::radial(49),
            BoundaryData::Quadratic { q: Matrix2::identity() * 0.6, center: Point::zeros() },
        ),
        (
            scenarios::disc(49),
            BoundaryData::DiscContact { center: Point::zeros(), radius: 0.4 },
        ),
    ];
    for (low, high) in pairs {
        let high = larger_data(&low, high);
        let grid = low.grid().unwrap();
        for k in 0..grid.len() {
            let (i, j) = grid.ij(k);
            let x = grid.node(i, j);
            assert!(high.boundary.value(x) >= low.boundary.value(x));
        }
        let a = common::solve_spec(&low).solution;
        let b = common::solve_spec(&high).solution;
        for (u, v) in a.u.values().iter().zip(b.u.values()) {
            assert!(v >= u, "{v} < {u}");
        }
    }
}

#[test]
fn error_against_tilted_half_space_is_second_order() {
    let data = BoundaryData::HalfSpace {
        direction: Vector2::new(0.3f64.cos(), 0.3f64.sin()),
        offset: 0.1,
    };
    let errors: Vec<f64> = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]
        .iter()
        .map(|&h| {
            let spec = larger_data(&scenarios::half_space(scenarios::resolution_for(h)), data.clone());
            let u = common::solve_spec(&spec).solution.u;
            let grid = u.grid().clone();
            (0..grid.len())
                .map(|k| {
                    let (i, j) = grid.ij(k);
                    (u.values()[k] - data.value(grid.node(i, j))).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    for pair in errors.windows(2) {
        let factor = pair[0] / pair[1];
        assert!((3.0..=5.0).contains(&factor), "{errors:?}");
    }
}
