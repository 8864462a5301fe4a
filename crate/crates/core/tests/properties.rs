use proptest::prelude::*;
use storage_core::benchmarks::{ar1_loglik, fit_ar1, fit_garch, hamilton_filter, Ar1Params, MsAr1Params, MsRegime};
use storage_core::{nelder_mead_maximize, NelderMeadOptions, ParamTransform, Params};

fn admissible() -> impl Strategy<Value = Params> {
    (-0.999f64..0.999, -5.0f64..5.0, -5.0f64..-1e-3, 2e-4f64..1.0).prop_map(|(rho, a, b, delta)| Params {
        rho,
        a,
        b,
        delta,
        r: 0.004,
    })
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-12 * (1.0 + y.abs())
}

proptest! {
    #[test]
    fn transform_round_trips(p in admissible()) {
        let t = ParamTransform::new(p.r, None);
        let back = t.to_params(&t.to_unconstrained(&p).unwrap());
        prop_assert!(close(back.rho, p.rho), "rho {} -> {}", p.rho, back.rho);
        prop_assert!(close(back.a, p.a));
        prop_assert!(close(back.b, p.b));
        prop_assert!(close(back.delta, p.delta), "delta {} -> {}", p.delta, back.delta);
        prop_assert_eq!(back.r, p.r);
    }

    // beyond |phi| ~ 19 tanh rounds to +-1 and the objective is -inf there
    #[test]
    fn transform_image_is_admissible(phi in prop::collection::vec(-18.0f64..18.0, 4)) {
        let p = ParamTransform::new(0.01, None).to_params(&phi);
        prop_assert!(p.rho.abs() <= 1.0 && p.b < 0.0 && p.delta > 0.0 && p.delta <= 1.0);
        prop_assert!(p.validate().is_ok());
    }

    #[test]
    fn hamilton_probabilities_sum_to_one(
        seed in 0u64..1000,
        p11 in 0.01f64..0.99,
        p21 in 0.01f64..0.99,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let prices: Vec<f64> = (0..60).map(|_| 1.0 + 0.3 * rng.random::<f64>()).collect();
        let params = MsAr1Params {
            regimes: [MsRegime { rho: 0.5, a: 0.9, b: -0.1 }, MsRegime { rho: 0.8, a: 1.2, b: -0.2 }],
            p11,
            p21,
        };
        let (ll, filtered) = hamilton_filter(&prices, &params);
        prop_assert!(ll.is_finite());
        for pr in filtered {
            prop_assert!((pr[0] + pr[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn best_vertex_never_worsens(c in prop::collection::vec(-3.0f64..3.0, 3), scale in 0.1f64..10.0) {
        let f = |x: &[f64]| -scale * x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>() - (x[0] * x[1]).sin();
        let res = nelder_mead_maximize(f, &[0.0, 0.0, 0.0], &NelderMeadOptions::default()).unwrap();
        prop_assert!(res.best_trace.windows(2).all(|w| w[1] >= w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn garch_nests_ar1(seed in 0u64..10_000, rho in -0.9f64..0.95, arch in 0.0f64..0.4) {
        use rand::{Rng, SeedableRng};
        use rand_distr::StandardNormal;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut p = 1.0;
        let mut var: f64 = 0.01;
        let prices: Vec<f64> = (0..200)
            .map(|_| {
                let e: f64 = rng.sample(StandardNormal);
                let shock = var.sqrt() * e;
                var = 0.01 * (1.0 - arch) + arch * shock * shock;
                p = 1.0 + rho * (p - 1.0) + shock;
                p
            })
            .collect();
        let ar = fit_ar1(&prices).unwrap();
        let garch = fit_garch(&prices).unwrap();
        prop_assert!(garch.loglik >= ar.loglik - 1e-9, "garch {} ar1 {}", garch.loglik, ar.loglik);
        // the AR(1) fit is the exact maximizer: nearby points are no better
        let base = ar1_loglik(&prices, &ar.params);
        for (dr, da) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
            let q = Ar1Params { rho: ar.params.rho + dr, a: ar.params.a + da, b: ar.params.b };
            prop_assert!(ar1_loglik(&prices, &q) <= base + 1e-9);
        }
    }
}
