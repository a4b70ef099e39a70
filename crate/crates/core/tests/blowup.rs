mod common;

use nalgebra::{Matrix2, Vector2};
use obstacle_core::blowup::{classify_point, fit_profile, probes, reference_energies, rescale, FitKind, Verdict};
use obstacle_core::field::{Evaluator, FnEvaluator, Jet};
use obstacle_core::monotone::{default_radii, monneau_curve, verdict, weiss_energy_of};
use obstacle_core::normalize::{CoefficientSource, FrameInputs, NormalizedFrame};
use obstacle_core::problem::{scenarios, CoefficientFamily};
use obstacle_core::Point;
use std::sync::Arc;

fn half_space(e: Vector2<f64>) -> FnEvaluator {
    FnEvaluator::new(move |x: Point| {
        let s = x.dot(&e).max(0.0);
        Jet {
            value: 0.5 * s * s,
            grad: e * s,
            hess: if s > 0.0 { e * e.transpose() } else { Matrix2::zeros() },
        }
    })
}

fn quadratic(q: Matrix2<f64>) -> FnEvaluator {
    FnEvaluator::new(move |x: Point| Jet {
        value: 0.5 * x.dot(&(q * x)),
        grad: q * x,
        hess: q,
    })
}

#[test]
fn rescaling_fixes_homogeneous_solutions() {
    let profiles: Vec<Arc<dyn Evaluator>> = vec![
        Arc::new(half_space(Vector2::new(0.8, -0.6))),
        Arc::new(quadratic(Matrix2::new(0.7, 0.2, 0.2, 0.3))),
    ];
    for u in profiles {
        let inputs = FrameInputs {
            u: u.clone(),
            coefficients: CoefficientSource::Analytic(CoefficientFamily::Identity.into()),
            f: Arc::new(FnEvaluator::new(|_| Jet { value: 1.0, ..Jet::zero() })),
            lower: Point::new(-1.0, -1.0),
            upper: Point::new(1.0, 1.0),
            spacing: 1.0 / 256.0,
        };
        let frame = NormalizedFrame::new(inputs, Point::zeros()).unwrap();
        for r in [0.05, 0.1, 0.3] {
            let it = rescale(&frame, r, 3.0, None).unwrap();
            for (x, jet) in probes().iter().zip(&it.samples) {
                let exact = u.jet(*x).unwrap();
                assert!((jet.value - exact.value).abs() <= 1e-12);
                assert!((jet.grad - exact.grad).norm() <= 1e-12);
            }
        }
    }
}

#[test]
fn fitted_profiles_carry_the_reference_energies() {
    let (regular, singular) = reference_energies(2).unwrap();
    for (name, kind, reference) in [("half_space", FitKind::HalfSpace, regular), ("radial", FitKind::Polynomial, singular)] {
        let p = common::at_origin(name, 1.0 / 64.0);
        let r = default_radii(&p.frame)[2];
        let fit = fit_profile(&rescale(&p.frame, r, p.solved.problem.p(), None).unwrap()).unwrap();
        assert_eq!(fit.kind, kind, "{name}");
        let energy = match fit.kind {
            FitKind::HalfSpace => weiss_energy_of(&half_space(fit.direction), 1.0).unwrap(),
            FitKind::Polynomial => weiss_energy_of(&quadratic(fit.q), 1.0).unwrap(),
        };
        assert!((energy.value - reference).abs() <= fit.residual + 0.01 * reference, "{name}");
    }
}

#[test]
fn singular_fit_gives_a_monotone_monneau_curve() {
    let c: Vec<f64> = [1.0 / 64.0, 1.0 / 128.0]
        .iter()
        .map(|&h| {
            let p = common::at_origin("holder_radial", h);
            let radii = default_radii(&p.frame);
            let result = classify_point(&p.frame, &p.omega, &radii).unwrap();
            assert_eq!(result.verdict, Verdict::Singular);
            let fit = result.fit.expect("profile fit");
            assert_eq!(fit.kind, FitKind::Polynomial);
            let report = verdict(&monneau_curve(&p.frame, &fit.q, &radii).unwrap(), &p.omega, None).unwrap();
            let corrected = report.corrected(report.c_min);
            assert!(corrected.windows(2).all(|w| w[1] >= w[0] - 1e-12));
            report.c_min
        })
        .collect();
    assert!(c[1] <= 1.5 * c[0] + 1e-12, "{c:?}");
}

#[test]
fn common_scaling_of_coefficients_and_data_changes_nothing() {
    let spec = scenarios::holder_half_space(129);
    let base = common::at_point(common::solve_spec(&spec), Point::zeros());
    let scaled = common::at_point(common::solve_spec(&scenarios::scaled(&spec, 3.0)), Point::zeros());
    assert_eq!(base.frame.x0, scaled.frame.x0);
    assert!((base.frame.l - scaled.frame.l).abs().max() <= 1e-14);
    let a = classify_point(&base.frame, &base.omega, &default_radii(&base.frame)).unwrap();
    let b = classify_point(&scaled.frame, &scaled.omega, &default_radii(&scaled.frame)).unwrap();
    assert_eq!(a.verdict, b.verdict);
    let tol = a.monotonicity.curve.quadrature_error[0] + b.monotonicity.curve.quadrature_error[0] + 1e-9;
    assert!((a.phi0 - b.phi0).abs() <= tol, "{} vs {}", a.phi0, b.phi0);
}
