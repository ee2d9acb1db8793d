use hblab_core::heavy_ball::step;
use hblab_core::lyapunov::theorem2_region;
use hblab_core::restart::{
    adaptive_run, apply_restart, descent_check_eps, run_with_policy, StopRule, DEFAULT_EPS,
};
use hblab_core::{DiagonalQuadratic, Event, HbParams, NonconvexPl, Objective, RestartPolicy};
use proptest::collection::vec;
use proptest::prelude::*;
use std::sync::OnceLock;

fn nonconvex() -> &'static NonconvexPl {
    static F: OnceLock<NonconvexPl> = OnceLock::new();
    F.get_or_init(NonconvexPl::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn descent_check_holds_above_true_l(
        eig in vec(0.01f64..1e3, 4), x in vec(-5.0f64..5.0, 4), y in vec(-5.0f64..5.0, 4),
        over in 1.0f64..4.0, s in -20.0f64..20.0, t in -20.0f64..20.0,
    ) {
        let q = DiagonalQuadratic::new(eig).unwrap();
        prop_assert!(descent_check_eps(&q, &x, &y, over * q.l(), 1e-9).unwrap());
        let f = nonconvex();
        prop_assert!(descent_check_eps(f, &[s], &[t], over * f.lipschitz_hint().unwrap(), 1e-9).unwrap());
    }

    #[test]
    fn restart_then_step_is_gradient_step(
        eig in vec(0.01f64..1e3, 3), x in vec(-5.0f64..5.0, 3), y in vec(-5.0f64..5.0, 3),
        alpha in 1e-4f64..1e-2, beta in 0.0f64..0.99,
    ) {
        let q = DiagonalQuadratic::new(eig).unwrap();
        let params = HbParams::new(alpha, beta).unwrap();
        let (cur, prev) = apply_restart(&x, &y);
        prop_assert_eq!(&cur, &x);
        prop_assert_eq!(&prev, &x);
        let next = step(&q, &cur, &prev, params).unwrap();
        let g = q.gradient(&x);
        let gd: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - alpha * gi).collect();
        prop_assert_eq!(next, gd);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn doublings_stay_within_bracket(
        log_kappa in 0.0f64..4.0, n in 2usize..6, seed in any::<u64>(),
        shrink in 0.0f64..12.0, x in vec(-1.0f64..1.0, 6),
    ) {
        let q = DiagonalQuadratic::log_uniform(1.0, 10f64.powf(log_kappa), n, seed).unwrap();
        let l0 = q.l() / 2f64.powf(shrink);
        let out = adaptive_run(&q, &x[..n], l0, DEFAULT_EPS, 1_000_000).unwrap();
        prop_assert!(out.converged);
        let bracket = (q.l() / l0).log2().ceil().max(0.0) as u32;
        prop_assert!(out.doublings <= bracket + 1, "{} doublings, bracket {}", out.doublings, bracket);
        prop_assert_eq!(out.l_estimate, l0 * 2f64.powi(out.doublings as i32));
        // Back-to-back doublings share the tag of the next accepted iterate.
        prop_assert!(out.trajectory.count_events(Event::LDoubled) <= out.doublings as usize);
        prop_assert_eq!(out.trajectory.params_history.len(), out.doublings as usize + 1);
        for entry in &out.trajectory.params_history {
            let l = entry.l_estimate.unwrap();
            prop_assert!(theorem2_region(entry.params.alpha, entry.params.beta, l));
        }
        let v: Vec<f64> = out.trajectory.records[1..].iter().map(|r| r.v.unwrap()).collect();
        prop_assert!(v.windows(2).all(|w| w[1] <= w[0] + 1e-12 * v[0].max(1.0)));
    }

    #[test]
    fn gradient_scheme_silent_on_gradient_descent(
        eig in vec(0.01f64..1e3, 1..6), frac in 0.01f64..0.999, x in vec(-5.0f64..5.0, 6),
    ) {
        let q = DiagonalQuadratic::new(eig).unwrap();
        let n = q.dim();
        let params = HbParams::new(frac / q.l(), 0.0).unwrap();
        let run = run_with_policy(&q, &x[..n], &x[..n], params, RestartPolicy::GradientScheme,
            Some(q.l()), 500, StopRule::GradNorm(0.0)).unwrap();
        prop_assert_eq!(run.restarts, 0);
        prop_assert!(!run.diverged);
    }
}
