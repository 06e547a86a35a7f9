//! Deterministic Lloyd k-means used to seed mixture components.

use alloc::vec;
use alloc::vec::Vec;

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Centroids seeded at evenly spaced points of `data` (in the given order),
/// refined for at most `iters` Lloyd steps. An empty cluster is re-seeded at
/// the point farthest from its current centroid.
pub(crate) fn kmeans(data: &[&[f64]], k: usize, iters: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let n = data.len();
    debug_assert!(k >= 1 && n >= k);
    let dim = data[0].len();
    let mut centroids: Vec<Vec<f64>> = (0..k).map(|i| data[i * n / k].to_vec()).collect();
    let mut assign = vec![usize::MAX; n];
    for _ in 0..iters.max(1) {
        let mut changed = false;
        for (i, x) in data.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = dist_sq(x, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (x, &c) in data.iter().zip(&assign) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(x.iter()) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (dst, s) in centroids[c].iter_mut().zip(&sums[c]) {
                    *dst = s / counts[c] as f64;
                }
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .filter(|&i| counts[assign[i]] > 1)
                    .max_by(|&a, &b| {
                        dist_sq(data[a], &centroids[assign[a]])
                            .total_cmp(&dist_sq(data[b], &centroids[assign[b]]))
                            .then(b.cmp(&a))
                    })
                    .expect("n >= k leaves a cluster with two points");
                centroids[c] = data[far].to_vec();
                counts[assign[far]] -= 1;
                assign[far] = c;
                counts[c] = 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    (centroids, assign)
}
