use proptest::prelude::*;
use sublin_core::lipschitz::LipschitzFn;
use sublin_core::models::{maximal_expectation, MaximalDistribution};
use sublin_core::pde::{closed_form, error_vs_closed_form, lipschitz_in_time_check, solve, Boundary, PdeProblem};
use sublin_core::Error;

fn problem(lo: f64, hi: f64, phi: LipschitzFn, dx: f64, cfl: f64) -> PdeProblem {
    let eta = MaximalDistribution::new(lo, hi).unwrap();
    PdeProblem::for_region(eta, 0.1, phi, (-1.0, 1.0), dx, cfl).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn comparison_principle(lo in -1.0f64..0.5, width in 0.1f64..1.0, c in -1.0f64..1.0, cfl in 0.3f64..1.0) {
        let low = LipschitzFn::neg_abs();
        let bump = LipschitzFn::bump(c, 0.5).unwrap();
        let high = LipschitzFn::new("-|x| + bump", 2.0, move |x: f64| -x.abs() + bump.eval(x)).unwrap();
        let a = solve(&problem(lo, lo + width, low, 0.05, cfl).with_boundary(Boundary::Constant)).unwrap();
        let b = solve(&problem(lo, lo + width, high, 0.05, cfl).with_boundary(Boundary::Constant)).unwrap();
        for (ra, rb) in a.values.iter().zip(&b.values) {
            for (va, vb) in ra.iter().zip(rb) {
                prop_assert!(va <= &(vb + 1e-12));
            }
        }
    }

    #[test]
    fn time_increments_respect_the_lipschitz_bound(lo in -1.0f64..0.5, width in 0.1f64..1.0, cfl in 0.3f64..1.0) {
        let phi = LipschitzFn::clipped_quadratic(1.0).unwrap();
        let p = problem(lo, lo + width, phi.clone(), 0.05, cfl).with_boundary(Boundary::Constant);
        let sol = solve(&p).unwrap();
        let speed = p.eta.max_abs_mean();
        let report = lipschitz_in_time_check(&sol, phi.lipschitz() * speed, phi.lipschitz());
        prop_assert!(report.passed, "{report:?}");
    }
}

#[test]
fn terminal_layer_is_the_data() {
    let phi = LipschitzFn::bump(0.2, 0.7).unwrap();
    let sol = solve(&problem(-1.0, 1.0, phi.clone(), 0.02, 1.0)).unwrap();
    let last = sol.values.last().unwrap();
    for (x, v) in sol.xs.iter().zip(last) {
        assert_eq!(*v, phi.eval(*x));
    }
}

#[test]
fn value_at_h_zero_is_the_maximal_expectation() {
    let eta = MaximalDistribution::new(-1.0, 1.0).unwrap();
    let phi = LipschitzFn::bump(0.3, 1.0).unwrap();
    let p = PdeProblem::for_region(eta, 0.1, phi.clone(), (-0.5, 0.5), 0.005, 1.0).unwrap();
    let sol = solve(&p).unwrap();
    let target = maximal_expectation(&eta, &phi).unwrap();
    assert!((sol.value_at(0.1, 0.0) - target).abs() < 0.02);
    assert!((closed_form(&eta, 0.1, &phi, 0.1, 0.0).unwrap() - target).abs() < 1e-9);
}

#[test]
fn refinement_reduces_the_error() {
    let eta = MaximalDistribution::new(-1.0, 1.0).unwrap();
    let phi = LipschitzFn::bump(0.0, 0.8).unwrap();
    let errors: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&dx| {
            let p = PdeProblem::for_region(eta, 0.1, phi.clone(), (-1.0, 1.0), dx, 1.0).unwrap();
            error_vs_closed_form(&solve(&p).unwrap(), &p, (-1.0, 1.0), 4).unwrap().max_error
        })
        .collect();
    assert!(errors[1] < errors[0] && errors[2] < errors[1], "{errors:?}");
}

#[test]
fn cfl_violation_is_an_input_error() {
    let eta = MaximalDistribution::new(-2.0, 1.0).unwrap();
    let r = PdeProblem::new(eta, 0.1, LipschitzFn::neg_abs(), (-3.0, 3.0), 0.01, 0.01);
    assert!(matches!(r, Err(Error::Input(_))));
}

#[test]
fn residual_stays_within_its_bound() {
    let sol = solve(&problem(-1.0, 1.0, LipschitzFn::neg_abs(), 0.02, 1.0)).unwrap();
    assert!(!sol.residual_flag, "{} vs {}", sol.max_residual, sol.residual_bound);
}
