#![allow(dead_code)]

use obstacle_core::geometry::{extract_free_boundary, CoincidenceGeometry};
use obstacle_core::monotone::OmegaSpec;
use obstacle_core::normalize::{build_frame, NormalizedFrame};
use obstacle_core::problem::{check_hypotheses, scenarios, HypothesisReport, ObstacleProblem, ProblemSpec};
use obstacle_core::solve::{solve_active_set_with, DiscreteSolution, SolverOptions};
use obstacle_core::Point;

pub struct Solved {
    pub problem: ObstacleProblem,
    pub solution: DiscreteSolution,
}

pub fn solve_spec(spec: &ProblemSpec) -> Solved {
    let problem = ObstacleProblem::from_spec(spec).unwrap();
    let solution = solve_active_set_with(&problem, &SolverOptions::default()).unwrap();
    Solved { problem, solution }
}

pub fn solve(name: &str, h: f64) -> Solved {
    solve_spec(&scenarios::by_name(name, scenarios::resolution_for(h)).unwrap())
}

/// Everything needed to analyse one free-boundary point.
pub struct Point0 {
    pub solved: Solved,
    pub hypotheses: HypothesisReport,
    pub geometry: CoincidenceGeometry,
    pub frame: NormalizedFrame,
    pub omega: OmegaSpec,
    pub snap_distance: f64,
}

pub fn at_point(solved: Solved, target: Point) -> Point0 {
    let hypotheses = check_hypotheses(&solved.problem).unwrap();
    let geometry = extract_free_boundary(&solved.solution).unwrap();
    let (x0, snap_distance) = geometry.snap(target);
    let frame = build_frame(&solved.problem, &solved.solution, x0).unwrap();
    let omega = OmegaSpec::new(hypotheses.omega_f.clone(), 2, solved.problem.p());
    Point0 {
        solved,
        hypotheses,
        geometry,
        frame,
        omega,
        snap_distance,
    }
}

pub fn at_origin(name: &str, h: f64) -> Point0 {
    at_point(solve(name, h), Point::zeros())
}
