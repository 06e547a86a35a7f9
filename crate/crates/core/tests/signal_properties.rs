use proptest::prelude::*;
use sbsid_core::dsp::{de_emphasize, design_bandpass, frame_and_window, hamming, ms_to_samples, pre_emphasize};
use sbsid_core::features::{append_deltas, FeatureSequence};
use sbsid_core::Matrix;

fn signal(n: impl Into<prop::collection::SizeRange>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #[test]
    fn bandpass_is_linear(
        (x, y) in (1usize..400).prop_flat_map(|n| (signal(n), signal(n))),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        low in 100.0f64..3000.0,
        width in 200.0f64..3000.0,
    ) {
        let f = design_bandpass(low, low + width, 16_000).unwrap();
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (fx, fy) = (f.filtfilt(&x), f.filtfilt(&y));
        for (k, v) in f.filtfilt(&mix).iter().enumerate() {
            prop_assert!((v - (a * fx[k] + b * fy[k])).abs() < 1e-9);
        }
        let (ax, ay) = (f.apply(&x), f.apply(&y));
        for (k, v) in f.apply(&mix).iter().enumerate() {
            prop_assert!((v - (a * ax[k] + b * ay[k])).abs() < 1e-9);
        }
    }

    #[test]
    fn hamming_is_symmetric_and_bounded(len in 1usize..2000) {
        let w = hamming(len);
        prop_assert_eq!(w.len(), len);
        for n in 0..len {
            prop_assert!((w[n] - w[len - 1 - n]).abs() < 1e-12);
            prop_assert!(w[n] >= 0.08 - 1e-12 && w[n] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn frame_count_matches_the_formula(n in 400usize..6000, frame_ms in 5.0f64..40.0, hop_ms in 2.0f64..20.0) {
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.01).sin()).collect();
        let l = ms_to_samples(frame_ms, 16_000);
        let h = ms_to_samples(hop_ms, 16_000);
        prop_assume!(n >= l);
        let framed = frame_and_window(&x, 16_000, frame_ms, hop_ms).unwrap();
        prop_assert_eq!(framed.n_frames(), (n - l) / h + 1);
        prop_assert_eq!(framed.frame_len(), l);
        let w = hamming(l);
        let last = framed.n_frames() - 1;
        for (k, v) in framed.frame(last).iter().enumerate() {
            prop_assert!((v - x[last * h + k] * w[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn emphasis_round_trips(x in signal(0..500), alpha in 0.0f64..0.99) {
        let back = de_emphasize(&pre_emphasize(&x, alpha).unwrap(), alpha);
        prop_assert_eq!(back.len(), x.len());
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn deltas_are_linear(
        (t, d) in (5usize..30, 1usize..5),
        seed in prop::collection::vec(-5.0f64..5.0, 300),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        window in 1usize..3,
    ) {
        let n = t * d;
        let x = Matrix::from_vec(t, d, seed[..n].to_vec()).unwrap();
        let y = Matrix::from_vec(t, d, seed[n..2 * n].iter().rev().cloned().collect()).unwrap();
        let mix = Matrix::from_vec(t, d, x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| a * p + b * q).collect()).unwrap();
        let f = |m: Matrix| append_deltas(&FeatureSequence::new(m).unwrap(), window).unwrap();
        let (dx, dy, dm) = (f(x), f(y), f(mix));
        prop_assert_eq!(dm.dim(), 3 * d);
        for ((p, q), r) in dx.matrix().as_slice().iter().zip(dy.matrix().as_slice()).zip(dm.matrix().as_slice()) {
            prop_assert!((r - (a * p + b * q)).abs() < 1e-9);
        }
        // A constant sequence has zero deltas.
        let flat = f(Matrix::from_vec(t, d, vec![1.5; n]).unwrap());
        for row in flat.frames() {
            prop_assert!(row[d..].iter().all(|v| v.abs() < 1e-12));
        }
    }
}
