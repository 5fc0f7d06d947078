use roughpath_core::diagnostics::{condition_sums, Verdict};
use roughpath_core::generate::{self, Analytic};
use roughpath_core::integrator::{integrate, integrate_state_only, ConvergenceConfig};
use roughpath_core::ode::{solve, FnField, OdeProblem, SolverConfig};
use roughpath_core::{DyadicPath, QuadratureConfig, ScalarField};

#[test]
fn state_only_limit_agrees_with_closed_form_on_brownian_paths() {
    let quad = QuadratureConfig::default();
    for seed in 0..5 {
        let g = generate::brownian(14, seed).unwrap();
        let st = integrate_state_only(|x| x, &g, 0.0, 1.0, &quad).unwrap();
        let exact = (g.end() * g.end() - g.start() * g.start()) / 2.0;
        assert!((st - exact).abs() < 1e-10);
        let full = integrate(&ScalarField::state_only(|x| x), &g, 0.0, 1.0, &ConvergenceConfig::default()).unwrap();
        assert!((full.value - exact).abs() < 1e-4, "seed {seed}: {} vs {exact}", full.value);
    }
}

#[test]
fn ode_with_state_only_field_recovers_the_primitive_on_brownian_drivers() {
    let quad = QuadratureConfig::default();
    for seed in [4, 5] {
        let x = generate::brownian(14, seed).unwrap();
        let f = FnField::new(1, 1, |_, _, _, _: &[f64], x: &[f64]| 1.0 / (1.0 + x[0] * x[0]));
        let p = OdeProblem::new(Box::new(f), vec![x.clone()], vec![0.25], 0.3).unwrap();
        let sol = solve(&p, &SolverConfig::default()).unwrap();
        for (j, t) in sol.times.iter().enumerate().step_by(64) {
            let want = 0.25 + integrate_state_only(|u| 1.0 / (1.0 + u * u), &x, 0.0, *t, &quad).unwrap();
            assert!((sol.values[0][j] - want).abs() < 1e-9);
        }
    }
}

#[test]
fn smooth_paths_have_converging_condition_series() {
    for kind in [Analytic::Linear, Analytic::Square, Analytic::Sine] {
        let g = generate::analytic(kind, 14).unwrap();
        let r = condition_sums(&g.pyramid(), 0.5).unwrap();
        assert_eq!(r.verdict, Verdict::Converging, "{kind:?}");
    }
}

#[test]
fn coarsened_path_integrates_like_the_original_for_smooth_data() {
    let g = DyadicPath::from_fn(16, |t| (2.0 * t).sin()).unwrap();
    let c = g.coarsen(13).unwrap();
    let f = ScalarField::new(|t, x| t * x);
    let cfg = ConvergenceConfig::default();
    let a = integrate(&f, &g, 0.0, 1.0, &cfg).unwrap().value;
    let b = integrate(&f, &c, 0.0, 1.0, &cfg).unwrap().value;
    assert!((a - b).abs() < 1e-6, "{a} {b}");
}
