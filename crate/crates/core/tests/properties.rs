use constraint_morse::constrained::{constrained_gradient, GradientMethod};
use constraint_morse::constraint::{general_constraint_map, normalization_map, ortho_normalization_map, ConstraintSpec, ScalarMap, UChoice};
use constraint_morse::field::Field;
use constraint_morse::functional::LocalDensity;
use constraint_morse::grid::{build_grid, Boundary, Grid};
use proptest::prelude::*;

const N: usize = 9;

fn box_grid() -> Grid<f64> {
    build_grid(N + 2, 0.0, 1.0, Boundary::DirichletZero).unwrap()
}

fn open_grid() -> Grid<f64> {
    build_grid(N, 0.0, 1.0, Boundary::None).unwrap()
}

fn complex_field() -> impl Strategy<Value = Field<f64>> {
    (prop::collection::vec(-2.0..2.0_f64, N), prop::collection::vec(-2.0..2.0_f64, N))
        .prop_filter("nonzero", |(a, b)| a.iter().chain(b).any(|v| v.abs() > 1e-3))
        .prop_map(|(a, b)| Field::from_real_parts(&a, &b))
}

fn positive_density() -> impl Strategy<Value = Field<f64>> {
    prop::collection::vec(0.6..0.8_f64, N).prop_map(Field::Real)
}

fn max_diff(a: &Field<f64>, b: &Field<f64>) -> f64 {
    a.sub(b).max_abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn normalization_hits_target(psi in complex_field(), n in 0.2..5.0_f64) {
        let g = box_grid();
        let out = normalization_map(&psi, n, &g).unwrap();
        let w = g.dof_weights();
        prop_assert!((out.dot(&out, w) - n).abs() < 1e-10 * n.max(1.0));
        let again = normalization_map(&out, n, &g).unwrap();
        prop_assert!(max_diff(&again, &out) < 1e-12);
    }

    #[test]
    fn normalization_is_scale_free(psi in complex_field(), k in prop_oneof![-5.0..-0.1_f64, 0.1..5.0_f64]) {
        let g = box_grid();
        let a = normalization_map(&psi, 1.0, &g).unwrap();
        let b = normalization_map(&psi.scale(k), 1.0, &g).unwrap();
        let sign = k.signum();
        prop_assert!(max_diff(&a, &b.scale(sign)) < 1e-12);
    }

    #[test]
    fn ortho_map_is_orthogonal_and_idempotent(psi in complex_field(), seed in complex_field()) {
        let g = box_grid();
        let w = g.dof_weights();
        let b0 = normalization_map(&seed, 1.0, &g).unwrap();
        let out = ortho_normalization_map(&psi, std::slice::from_ref(&b0), &g);
        prop_assume!(out.is_ok());
        let out = out.unwrap();
        prop_assert!(out.complex_dot(&b0, w).norm() < 1e-12);
        prop_assert!((out.dot(&out, w) - 1.0).abs() < 1e-10);
        let again = ortho_normalization_map(&out, &[b0], &g).unwrap();
        prop_assert!(max_diff(&again, &out) < 1e-12);
    }

    #[test]
    fn integral_maps_hit_target(rho in positive_density(), c in 0.3..0.6_f64, square in any::<bool>(), a15 in any::<bool>()) {
        let g = open_grid();
        let f = if square { ScalarMap::square() } else { ScalarMap::identity() };
        let u = if a15 { UChoice::A15 } else { UChoice::Uniform };
        let spec = ConstraintSpec::IntegralOf { f: f.clone(), target: c, u };
        let out = general_constraint_map(&rho, &spec, &g).unwrap();
        let vals: Vec<f64> = out.as_real().unwrap().iter().map(|&r| f.value(r)).collect();
        prop_assert!((g.integrate(&vals) - c).abs() < 1e-10);
        let again = general_constraint_map(&out, &spec, &g).unwrap();
        prop_assert!(max_diff(&again, &out) < 1e-12);
    }

    /// Different admissible weights change the constrained gradient only along `δC/δρ`.
    #[test]
    fn u_choice_shifts_gradient_along_normal(rho in positive_density(), c in 0.35..0.55_f64) {
        let g = open_grid();
        let functional = LocalDensity::quartic(&g, 1.0, 1.0);
        let with = |u: UChoice<f64>| ConstraintSpec::IntegralOf { f: ScalarMap::square(), target: c, u };
        let rho = general_constraint_map(&rho, &with(UChoice::Uniform), &g).unwrap();
        let a = constrained_gradient(&functional, &rho, &with(UChoice::A15), GradientMethod::Analytic).unwrap();
        let b = constrained_gradient(&functional, &rho, &with(UChoice::Uniform), GradientMethod::Analytic).unwrap();
        let ratio: Vec<f64> = a
            .gradient
            .sub(&b.gradient)
            .as_real()
            .unwrap()
            .iter()
            .zip(rho.as_real().unwrap())
            .map(|(d, r)| d / (2.0 * r))
            .collect();
        let spread = ratio.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)) - ratio.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        prop_assert!(spread < 1e-8, "spread {spread:e}");
        prop_assert!((ratio[0] - (b.multiplier - a.multiplier)).abs() < 1e-8);
    }
}

#[test]
fn u_choices_agree_at_stationary_points() {
    let g = open_grid();
    let functional = LocalDensity::quartic(&g, 1.0, 1.0);
    let rho = Field::Real(vec![0.7; N]);
    let target = 0.49;
    for u in [UChoice::A15, UChoice::Uniform] {
        let spec = ConstraintSpec::IntegralOf { f: ScalarMap::square(), target, u };
        let gc = constrained_gradient(&functional, &rho, &spec, GradientMethod::Analytic).unwrap();
        assert!(gc.gradient.max_abs() < 1e-12, "{:?}", gc.gradient);
    }
}
