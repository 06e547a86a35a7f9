//! Multivariate Gaussian densities with spherical, diagonal or full
//! covariance, and the weighted sufficient statistics used by EM.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Matrix, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CovarianceType {
    Spherical,
    Diagonal,
    Full,
}

impl CovarianceType {
    pub fn as_str(self) -> &'static str {
        match self {
            CovarianceType::Spherical => "spherical",
            CovarianceType::Diagonal => "diagonal",
            CovarianceType::Full => "full",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "spherical" => Some(CovarianceType::Spherical),
            "diagonal" | "diag" => Some(CovarianceType::Diagonal),
            "full" => Some(CovarianceType::Full),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Covariance {
    Spherical(f64),
    Diagonal(Vec<f64>),
    Full(Matrix),
}

impl Covariance {
    pub fn kind(&self) -> CovarianceType {
        match self {
            Covariance::Spherical(_) => CovarianceType::Spherical,
            Covariance::Diagonal(_) => CovarianceType::Diagonal,
            Covariance::Full(_) => CovarianceType::Full,
        }
    }

    /// Variance along dimension `d`.
    pub fn variance(&self, d: usize) -> f64 {
        match self {
            Covariance::Spherical(v) => *v,
            Covariance::Diagonal(v) => v[d],
            Covariance::Full(m) => m.get(d, d),
        }
    }
}

/// Lower Cholesky factor; `None` if `a` is not positive definite.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l.set(i, i, s.sqrt());
            } else {
                l.set(i, j, s / l.get(j, j));
            }
        }
    }
    Some(l)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gaussian {
    mean: Vec<f64>,
    cov: Covariance,
    chol: Option<Matrix>,
    log_norm: f64,
}

impl Gaussian {
    pub fn new(mean: Vec<f64>, cov: Covariance) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidArgument("zero-dimensional Gaussian".into()));
        }
        let (log_det, chol) = match &cov {
            Covariance::Spherical(v) => {
                if !(*v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidArgument(format!("spherical variance {v} not positive")));
                }
                (d as f64 * v.ln(), None)
            }
            Covariance::Diagonal(v) => {
                if v.len() != d {
                    return Err(Error::Shape { expected: d, got: v.len() });
                }
                if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(Error::InvalidArgument("diagonal variance not positive".into()));
                }
                (v.iter().map(|x| x.ln()).sum(), None)
            }
            Covariance::Full(m) => {
                if m.rows() != d || m.cols() != d {
                    return Err(Error::Shape { expected: d * d, got: m.rows() * m.cols() });
                }
                let l = cholesky(m)
                    .ok_or_else(|| Error::InvalidArgument("covariance is not positive definite".into()))?;
                let log_det = 2.0 * (0..d).map(|i| l.get(i, i).ln()).sum::<f64>();
                (log_det, Some(l))
            }
        };
        let log_norm = -0.5 * (d as f64 * (2.0 * PI).ln() + log_det);
        Ok(Gaussian { mean, cov, chol, log_norm })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Covariance {
        &self.cov
    }

    /// Squared Mahalanobis distance of `x` from the mean.
    pub fn mahalanobis_sq(&self, x: &[f64]) -> f64 {
        match (&self.cov, &self.chol) {
            (Covariance::Spherical(v), _) => {
                x.iter().zip(&self.mean).map(|(a, m)| (a - m) * (a - m)).sum::<f64>() / v
            }
            (Covariance::Diagonal(v), _) => x
                .iter()
                .zip(&self.mean)
                .zip(v)
                .map(|((a, m), s)| (a - m) * (a - m) / s)
                .sum(),
            (Covariance::Full(_), Some(l)) => {
                // forward-substitute L z = x - mean
                let d = self.dim();
                let mut z = vec![0.0; d];
                let mut acc = 0.0;
                for i in 0..d {
                    let mut s = x[i] - self.mean[i];
                    let row = l.row(i);
                    for k in 0..i {
                        s -= row[k] * z[k];
                    }
                    z[i] = s / row[i];
                    acc += z[i] * z[i];
                }
                acc
            }
            (Covariance::Full(_), None) => unreachable!("full covariance always carries its factor"),
        }
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        self.log_norm - 0.5 * self.mahalanobis_sq(x)
    }
}

/// Weighted first and second moments of a set of vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub weight: f64,
    pub sum: Vec<f64>,
    /// Per-dimension sums of squares, or the full D x D outer-product sum.
    pub sq: Vec<f64>,
    full: bool,
}

impl Moments {
    pub fn new(dim: usize, cov_type: CovarianceType) -> Self {
        let full = cov_type == CovarianceType::Full;
        Moments {
            weight: 0.0,
            sum: vec![0.0; dim],
            sq: vec![0.0; if full { dim * dim } else { dim }],
            full,
        }
    }

    pub fn add(&mut self, x: &[f64], w: f64) {
        if w == 0.0 {
            return;
        }
        self.weight += w;
        let d = self.sum.len();
        for i in 0..d {
            self.sum[i] += w * x[i];
        }
        if self.full {
            for i in 0..d {
                let wx = w * x[i];
                for j in 0..=i {
                    self.sq[i * d + j] += wx * x[j];
                }
            }
        } else {
            for i in 0..d {
                self.sq[i] += w * x[i] * x[i];
            }
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        self.weight += other.weight;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sq.iter_mut().zip(&other.sq) {
            *a += b;
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        self.sum.iter().map(|s| s / self.weight).collect()
    }

    /// Maximum-likelihood Gaussian from the moments. Diagonal and spherical
    /// variances are clamped to at least `floor`; full covariances get `floor`
    /// added to the diagonal.
    pub fn estimate(&self, cov_type: CovarianceType, floor: f64) -> Result<Gaussian> {
        if !(self.weight > 0.0) {
            return Err(Error::Fit("component has no responsibility".into()));
        }
        let d = self.sum.len();
        let mean = self.mean();
        let var = |i: usize| -> f64 {
            let sq = if self.full { self.sq[i * d + i] } else { self.sq[i] };
            (sq / self.weight - mean[i] * mean[i]).max(0.0)
        };
        let cov = match cov_type {
            CovarianceType::Spherical => {
                let v = (0..d).map(var).sum::<f64>() / d as f64;
                Covariance::Spherical(v.max(floor))
            }
            CovarianceType::Diagonal => Covariance::Diagonal((0..d).map(|i| var(i).max(floor)).collect()),
            CovarianceType::Full => {
                if !self.full {
                    return Err(Error::InvalidArgument("full covariance needs full moments".into()));
                }
                let mut m = Matrix::zeros(d, d);
                for i in 0..d {
                    for j in 0..=i {
                        let c = self.sq[i * d + j] / self.weight - mean[i] * mean[j];
                        m.set(i, j, c);
                        m.set(j, i, c);
                    }
                }
                let mut reg = floor;
                loop {
                    let mut r = m.clone();
                    for i in 0..d {
                        r.set(i, i, m.get(i, i).max(0.0) + reg);
                    }
                    if cholesky(&r).is_some() {
                        break Covariance::Full(r);
                    }
                    reg *= 10.0;
                    if reg > 1e6 {
                        return Err(Error::Fit("covariance cannot be regularised".into()));
                    }
                }
            }
        };
        Gaussian::new(mean, cov)
    }
}

/// `log(sum(exp(v)))`, robust to `-inf` entries.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
