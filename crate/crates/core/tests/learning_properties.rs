//! SVM optimality and GA determinism.

use proptest::prelude::*;
use sbsid_core::ga::{run_ga, GaConfig, Gene};
use sbsid_core::parallel::Sequential;
use sbsid_core::svm::{primal_objective, train_binary};
use sbsid_core::Matrix;

fn labelled_1d() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    prop::collection::vec((-3.0f64..3.0, any::<bool>()), 3..12)
        .prop_filter("both classes", |v| v.iter().any(|p| p.1) && v.iter().any(|p| !p.1))
        .prop_map(|v| {
            let x = v.iter().map(|p| p.0).collect();
            let y = v.iter().map(|p| if p.1 { 1.0 } else { -1.0 }).collect();
            (x, y)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn svm_satisfies_kkt((x, y) in labelled_1d(), c in 0.1f64..5.0) {
        let xm = Matrix::from_vec(x.len(), 1, x.clone()).unwrap();
        let m = train_binary(&xm, &y, c).unwrap();
        let alpha = m.alpha();
        prop_assert_eq!(alpha.len(), x.len());
        let balance: f64 = alpha.iter().zip(&y).map(|(a, yi)| a * yi).sum();
        prop_assert!(balance.abs() < 1e-6 * (1.0 + c));
        let w: f64 = alpha.iter().zip(&y).zip(&x).map(|((a, yi), xi)| a * yi * xi).sum();
        prop_assert!((w - m.w()[0]).abs() < 1e-6 * (1.0 + w.abs()));
        let tol = 1e-2;
        for i in 0..x.len() {
            prop_assert!(alpha[i] >= 0.0 && alpha[i] <= c + 1e-12);
            let margin = y[i] * m.decision_value(&[x[i]]).unwrap();
            if alpha[i] < 1e-9 {
                prop_assert!(margin >= 1.0 - tol, "free point {i} has margin {margin}");
            } else if alpha[i] > c - 1e-9 {
                prop_assert!(margin <= 1.0 + tol, "bound point {i} has margin {margin}");
            } else {
                prop_assert!((margin - 1.0).abs() <= tol, "support point {i} has margin {margin}");
            }
        }
    }

    #[test]
    fn svm_is_no_worse_than_a_grid_search((x, y) in labelled_1d(), c in 0.1f64..5.0) {
        let xm = Matrix::from_vec(x.len(), 1, x.clone()).unwrap();
        let m = train_binary(&xm, &y, c).unwrap();
        let found = m.primal_objective(&xm, &y);
        let mut best = f64::INFINITY;
        for i in 0..=300 {
            let w = -15.0 + 0.1 * i as f64;
            for j in 0..=300 {
                let b = -15.0 + 0.1 * j as f64;
                best = best.min(primal_objective(&[w], b, c, &xm, &y));
            }
        }
        prop_assert!(found <= best + 1e-3 * (1.0 + best), "{found} > grid {best}");
    }

    #[test]
    fn ga_is_deterministic_and_stays_in_bounds(
        seed in any::<u64>(),
        pop in 4usize..20,
        gens in 1usize..8,
        lo in -10i64..0,
        span in 0i64..10,
    ) {
        let genes = [
            Gene::Int { min: lo, max: lo + span },
            Gene::Real { min: -1.0, max: 2.0 },
        ];
        let config = GaConfig { population_size: pop, generations: gens, seed, ..GaConfig::default() };
        let f = |g: &[f64]| -(g[0] - 3.0).powi(2) - (g[1] - 0.5).powi(2);
        let a = run_ga(f, &genes, &config, &Sequential).unwrap();
        let b = run_ga(f, &genes, &config, &Sequential).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(genes.iter().zip(&a.best).all(|(g, v)| g.contains(*v)));
        prop_assert_eq!(a.per_generation_best.len(), gens);
        prop_assert!(a.per_generation_best.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(*a.per_generation_best.last().unwrap(), a.best_fitness);
        prop_assert_eq!(f(&a.best), a.best_fitness);
    }
}
