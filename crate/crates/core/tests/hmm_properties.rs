//! Forward and Viterbi against exhaustive enumeration of state paths.

use proptest::prelude::*;
use sbsid_core::features::FeatureSequence;
use sbsid_core::gaussian::{log_sum_exp, Covariance, Gaussian};
use sbsid_core::gmm::GmmModel;
use sbsid_core::hmm::HmmModel;
use sbsid_core::Matrix;

#[derive(Clone, Debug)]
struct Case {
    stay: Vec<f64>,
    means: Vec<Vec<Vec<f64>>>,
    vars: Vec<Vec<Vec<f64>>>,
    weights: Vec<Vec<f64>>,
    frames: Vec<Vec<f64>>,
}

fn case() -> impl Strategy<Value = Case> {
    (1usize..=3, 1usize..=2, 1usize..=2, 1usize..=5).prop_flat_map(|(s, d, m, t)| {
        (
            prop::collection::vec(0.05f64..0.95, s),
            prop::collection::vec(prop::collection::vec(prop::collection::vec(-2.0f64..2.0, d), m), s),
            prop::collection::vec(prop::collection::vec(prop::collection::vec(0.2f64..3.0, d), m), s),
            prop::collection::vec(prop::collection::vec(0.1f64..1.0, m), s),
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, d), t),
        )
            .prop_map(|(stay, means, vars, weights, frames)| Case {
                stay,
                means,
                vars,
                weights,
                frames,
            })
    })
}

fn build(c: &Case) -> (HmmModel, Vec<GmmModel>, Matrix) {
    let s = c.stay.len();
    let mut a = Matrix::zeros(s, s);
    for i in 0..s {
        if i + 1 < s {
            a.set(i, i, c.stay[i]);
            a.set(i, i + 1, 1.0 - c.stay[i]);
        } else {
            a.set(i, i, 1.0);
        }
    }
    let emissions: Vec<GmmModel> = (0..s)
        .map(|i| {
            let total: f64 = c.weights[i].iter().sum();
            let w = c.weights[i].iter().map(|x| x / total).collect();
            let comps = c.means[i]
                .iter()
                .zip(&c.vars[i])
                .map(|(m, v)| Gaussian::new(m.clone(), Covariance::Diagonal(v.clone())).unwrap())
                .collect();
            GmmModel::new(w, comps).unwrap()
        })
        .collect();
    let mut initial = vec![0.0; s];
    initial[0] = 1.0;
    (HmmModel::new(initial, a.clone(), emissions.clone()).unwrap(), emissions, a)
}

/// Log-probability of every complete state path.
fn all_paths(c: &Case, emissions: &[GmmModel], a: &Matrix) -> Vec<(Vec<usize>, f64)> {
    let s = c.stay.len();
    let t = c.frames.len();
    let mut out = Vec::new();
    for code in 0..s.pow(t as u32) {
        let path: Vec<usize> = (0..t).map(|k| (code / s.pow(k as u32)) % s).collect();
        if path[0] != 0 {
            continue;
        }
        let mut lp = emissions[0].score(&c.frames[0]).unwrap();
        for k in 1..t {
            lp += a.get(path[k - 1], path[k]).ln() + emissions[path[k]].score(&c.frames[k]).unwrap();
        }
        if lp.is_finite() {
            out.push((path, lp));
        }
    }
    out
}

proptest! {
    #[test]
    fn forward_matches_path_enumeration(c in case()) {
        let (model, emissions, a) = build(&c);
        let seq = FeatureSequence::new(Matrix::from_rows(&c.frames).unwrap()).unwrap();
        let paths = all_paths(&c, &emissions, &a);
        let brute = log_sum_exp(&paths.iter().map(|p| p.1).collect::<Vec<_>>());
        let ll = model.log_likelihood(&seq).unwrap();
        prop_assert!((ll - brute).abs() < 1e-9 * (1.0 + brute.abs()), "{ll} vs {brute}");
    }

    #[test]
    fn viterbi_finds_the_best_path(c in case()) {
        let (model, emissions, a) = build(&c);
        let seq = FeatureSequence::new(Matrix::from_rows(&c.frames).unwrap()).unwrap();
        let paths = all_paths(&c, &emissions, &a);
        let best = paths.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let (path, lp) = model.viterbi(&seq).unwrap();
        prop_assert!((lp - best).abs() < 1e-9 * (1.0 + best.abs()));
        let own = paths.iter().find(|p| p.0 == path).map(|p| p.1);
        prop_assert!(own.is_some_and(|v| (v - lp).abs() < 1e-9 * (1.0 + lp.abs())));
        prop_assert!(lp <= model.log_likelihood(&seq).unwrap() + 1e-12);
    }

    #[test]
    fn mixture_order_does_not_change_the_likelihood(c in case()) {
        let (model, _, _) = build(&c);
        let mut rev = c.clone();
        for i in 0..rev.stay.len() {
            rev.means[i].reverse();
            rev.vars[i].reverse();
            rev.weights[i].reverse();
        }
        let (other, _, _) = build(&rev);
        let seq = FeatureSequence::new(Matrix::from_rows(&c.frames).unwrap()).unwrap();
        let (x, y) = (model.log_likelihood(&seq).unwrap(), other.log_likelihood(&seq).unwrap());
        prop_assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
    }
}
