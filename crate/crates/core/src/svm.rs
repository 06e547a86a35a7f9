//! Soft-margin linear SVM trained in the dual by SMO, plus a one-vs-rest
//! multiclass wrapper with input standardization.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Matrix, Result};

pub const DEFAULT_C: f64 = 1.0;
/// Maximal allowed KKT violation at convergence.
pub const DEFAULT_TOL: f64 = 1e-3;
const MIN_CURVATURE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    w: Vec<f64>,
    b: f64,
    c: f64,
    /// Dual values, one per training example. Empty for models rebuilt from
    /// their primal form.
    alpha: Vec<f64>,
}

impl SvmModel {
    pub fn from_primal(w: Vec<f64>, b: f64, c: f64) -> Result<Self> {
        if w.is_empty() || w.iter().any(|v| !v.is_finite()) || !b.is_finite() || !(c > 0.0) {
            return Err(Error::InvalidArgument("SVM needs finite w, b and C > 0".into()));
        }
        Ok(SvmModel {
            w,
            b,
            c,
            alpha: Vec::new(),
        })
    }

    /// Rebuilds a model with its dual values, e.g. from a saved store.
    pub fn with_alpha(mut self, alpha: Vec<f64>) -> Result<Self> {
        if alpha.iter().any(|a| !(0.0..=self.c).contains(a)) {
            return Err(Error::InvalidArgument("SVM dual values must lie in [0, C]".into()));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Indices of training examples with non-zero dual value.
    pub fn support(&self) -> Vec<usize> {
        (0..self.alpha.len()).filter(|&i| self.alpha[i] > 0.0).collect()
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.w.len() {
            return Err(Error::Shape {
                expected: self.w.len(),
                got: x.len(),
            });
        }
        Ok(dot(&self.w, x) + self.b)
    }

    /// `1/2 |w|^2 + C sum max(0, 1 - y (w.x + b))`.
    pub fn primal_objective(&self, x: &Matrix, y: &[f64]) -> f64 {
        primal_objective(&self.w, self.b, self.c, x, y)
    }
}

pub fn primal_objective(w: &[f64], b: f64, c: f64, x: &Matrix, y: &[f64]) -> f64 {
    let slack: f64 = x
        .iter_rows()
        .zip(y)
        .map(|(xi, &yi)| (1.0 - yi * (dot(w, xi) + b)).max(0.0))
        .sum();
    0.5 * dot(w, w) + c * slack
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

pub fn train_binary(x: &Matrix, y: &[f64], c: f64) -> Result<SvmModel> {
    train_binary_tol(x, y, c, DEFAULT_TOL)
}

/// SMO with maximal-violating-pair working-set selection on the linear
/// Gram matrix. Labels must be exactly -1 or +1.
pub fn train_binary_tol(x: &Matrix, y: &[f64], c: f64, tol: f64) -> Result<SvmModel> {
    let n = x.rows();
    if y.len() != n {
        return Err(Error::Shape { expected: n, got: y.len() });
    }
    if !(c > 0.0 && c.is_finite()) || !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("C = {c} and tol = {tol} must be positive")));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidArgument("labels must be -1 or +1".into()));
    }
    if !(y.contains(&1.0) && y.contains(&-1.0)) {
        return Err(Error::Training("SVM needs examples of both classes".into()));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("SVM inputs must be finite".into()));
    }
    let mut q = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = y[i] * y[j] * dot(x.row(i), x.row(j));
            q.set(i, j, v);
            q.set(j, i, v);
        }
    }
    let mut a = vec![0.0; n];
    // gradient of 1/2 a'Qa - e'a
    let mut g = vec![-1.0; n];
    let in_up = |a: &[f64], t: usize| (y[t] > 0.0 && a[t] < c) || (y[t] < 0.0 && a[t] > 0.0);
    let in_low = |a: &[f64], t: usize| (y[t] < 0.0 && a[t] < c) || (y[t] > 0.0 && a[t] > 0.0);
    let max_iter = (100 * n).max(100_000);
    for _ in 0..max_iter {
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * g[t];
            if in_up(&a, t) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(&a, t) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tol {
            break;
        }
        let (old_i, old_j) = (a[i], a[j]);
        if y[i] != y[j] {
            let quad = (q.get(i, i) + q.get(j, j) + 2.0 * q.get(i, j)).max(MIN_CURVATURE);
            let delta = (-g[i] - g[j]) / quad;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > 0.0 {
                if a[i] > c {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if a[j] > c {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            let quad = (q.get(i, i) + q.get(j, j) - 2.0 * q.get(i, j)).max(MIN_CURVATURE);
            let delta = (g[i] - g[j]) / quad;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c {
                if a[i] > c {
                    a[i] = c;
                    a[j] = sum - c;
                }
            } else if a[j] < 0.0 {
                a[j] = 0.0;
                a[i] = sum;
            }
            if sum > c {
                if a[j] > c {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = sum;
            }
        }
        let (di, dj) = (a[i] - old_i, a[j] - old_j);
        for t in 0..n {
            g[t] += q.get(t, i) * di + q.get(t, j) * dj;
        }
    }
    // bias from free vectors, else the midpoint of the feasible interval
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut n_free = 0usize;
    for t in 0..n {
        let yg = y[t] * g[t];
        if a[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if a[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    let rho = if n_free > 0 {
        free_sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    let mut w = vec![0.0; x.cols()];
    for t in 0..n {
        if a[t] != 0.0 {
            for (wk, xk) in w.iter_mut().zip(x.row(t)) {
                *wk += a[t] * y[t] * xk;
            }
        }
    }
    Ok(SvmModel { w, b: -rho, c, alpha: a })
}

/// One-vs-rest linear SVMs over standardized inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct OvrClassifier {
    classes: Vec<u32>,
    models: Vec<SvmModel>,
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl OvrClassifier {
    pub fn from_parts(classes: Vec<u32>, models: Vec<SvmModel>, mean: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        let dim = mean.len();
        if classes.len() != models.len() || classes.len() < 2 {
            return Err(Error::Shape {
                expected: classes.len(),
                got: models.len(),
            });
        }
        if scale.len() != dim || models.iter().any(|m| m.dim() != dim) {
            return Err(Error::Shape {
                expected: dim,
                got: scale.len(),
            });
        }
        if scale.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidArgument("standardization scales must be positive".into()));
        }
        Ok(OvrClassifier {
            classes,
            models,
            mean,
            scale,
        })
    }

    pub fn classes(&self) -> &[u32] {
        &self.classes
    }

    pub fn models(&self) -> &[SvmModel] {
        &self.models
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn standardize(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.standardize(x)?;
        self.models.iter().map(|m| m.decision_value(&z)).collect()
    }
}

/// Trains one binary SVM per distinct label (ascending) against the rest.
pub fn train_ovr(x: &Matrix, labels: &[u32], c: f64) -> Result<OvrClassifier> {
    let n = x.rows();
    if labels.len() != n {
        return Err(Error::Shape { expected: n, got: labels.len() });
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Training("one-vs-rest needs at least two classes".into()));
    }
    let dim = x.cols();
    let mut mean = vec![0.0; dim];
    for row in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / n as f64;
        }
    }
    let mut scale = vec![0.0; dim];
    for row in x.iter_rows() {
        for ((s, v), m) in scale.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m) / n as f64;
        }
    }
    for s in scale.iter_mut() {
        *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
    }
    let mut z = Matrix::zeros(n, dim);
    for (i, row) in x.iter_rows().enumerate() {
        for k in 0..dim {
            z.set(i, k, (row[k] - mean[k]) / scale[k]);
        }
    }
    let models = classes
        .iter()
        .map(|&class| {
            let y: Vec<f64> = labels.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
            train_binary(&z, &y, c)
        })
        .collect::<Result<Vec<_>>>()?;
    OvrClassifier::from_parts(classes, models, mean, scale)
}

/// Class with the largest decision value; ties go to the lowest index.
pub fn predict_ovr(classifier: &OvrClassifier, x: &[f64]) -> Result<u32> {
    let values = classifier.decision_values(x)?;
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    Ok(classifier.classes[best])
}
