//! Gaussian mixture models: log-sum-exp scoring and k-means seeded EM.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::gaussian::{log_sum_exp, Covariance, CovarianceType, Gaussian, Moments};
use crate::kmeans::kmeans;
use crate::{Error, Matrix, Result};

/// Responsibility below which a component counts as dead and is re-seeded.
pub const DEAD_COMPONENT: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct GmmModel {
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    components: Vec<Gaussian>,
}

impl GmmModel {
    pub fn new(weights: Vec<f64>, components: Vec<Gaussian>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::Shape {
                expected: components.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("mixture weights must be a probability vector".into()));
        }
        let dim = components[0].dim();
        let kind = components[0].covariance().kind();
        for c in &components {
            if c.dim() != dim {
                return Err(Error::Shape { expected: dim, got: c.dim() });
            }
            if c.covariance().kind() != kind {
                return Err(Error::InvalidArgument("mixed covariance types in one mixture".into()));
            }
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(GmmModel {
            weights,
            log_weights,
            components,
        })
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[Gaussian] {
        &self.components
    }

    pub fn cov_type(&self) -> CovarianceType {
        self.components[0].covariance().kind()
    }

    /// Writes `ln P_i + ln b_i(x)` per component into `out`; returns their log-sum-exp.
    pub(crate) fn component_log_probs(&self, x: &[f64], out: &mut [f64]) -> f64 {
        for ((o, lw), c) in out.iter_mut().zip(&self.log_weights).zip(&self.components) {
            *o = lw + c.log_density(x);
        }
        log_sum_exp(out)
    }

    pub(crate) fn score_unchecked(&self, x: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.components.len()];
        self.component_log_probs(x, &mut buf)
    }

    /// `ln sum_i P_i b_i(x)`.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Shape { expected: self.dim(), got: x.len() });
        }
        Ok(self.score_unchecked(x))
    }

    /// Sum of frame scores, `L_s(X) = ln P(X | lambda_s)` for independent frames.
    pub fn score_sequence(&self, frames: &Matrix) -> Result<f64> {
        if frames.cols() != self.dim() {
            return Err(Error::Shape { expected: self.dim(), got: frames.cols() });
        }
        let mut buf = vec![0.0; self.components.len()];
        Ok(frames.iter_rows().map(|x| self.component_log_probs(x, &mut buf)).sum())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmConfig {
    pub max_iters: usize,
    /// Relative log-likelihood improvement below which EM stops.
    pub tol: f64,
    pub variance_floor: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iters: 100,
            tol: 1e-6,
            variance_floor: 1e-6,
        }
    }
}

/// Mixture seeded from a hard partition of the rows.
pub(crate) fn seed_mixture(
    rows: &[&[f64]],
    n_components: usize,
    cov_type: CovarianceType,
    floor: f64,
) -> Result<GmmModel> {
    let dim = rows[0].len();
    let (_, assign) = kmeans(rows, n_components, 10);
    let mut moments = vec![Moments::new(dim, cov_type); n_components];
    for (x, &c) in rows.iter().zip(&assign) {
        moments[c].add(x, 1.0);
    }
    let n = rows.len() as f64;
    let weights = moments.iter().map(|m| m.weight / n).collect();
    let components = moments
        .iter()
        .map(|m| m.estimate(cov_type, floor))
        .collect::<Result<Vec<_>>>()?;
    GmmModel::new(weights, components)
}

/// Re-seeds dead components at the worst-explained points (`worst` sorted
/// ascending by log-likelihood), borrowing half the weight and the covariance
/// of the heaviest live component.
pub(crate) fn reseed_dead(
    weights: &mut [f64],
    components: &mut [Gaussian],
    occupancy: &[f64],
    worst: &[&[f64]],
) -> Result<()> {
    let mut next = worst.iter();
    for m in 0..weights.len() {
        if occupancy[m] >= DEAD_COMPONENT {
            continue;
        }
        let Some(point) = next.next() else { break };
        let heavy = (0..weights.len())
            .filter(|&i| occupancy[i] >= DEAD_COMPONENT)
            .max_by(|&a, &b| weights[a].total_cmp(&weights[b]).then(b.cmp(&a)));
        let Some(heavy) = heavy else { break };
        let cov: Covariance = components[heavy].covariance().clone();
        components[m] = Gaussian::new(point.to_vec(), cov)?;
        weights[heavy] /= 2.0;
        weights[m] = weights[heavy];
    }
    Ok(())
}

/// EM for a mixture of `n_components` Gaussians.
///
/// Returns the fitted model and the data log-likelihood of the seed model
/// followed by one entry per re-estimation.
pub fn fit_em(
    data: &Matrix,
    n_components: usize,
    cov_type: CovarianceType,
    config: &EmConfig,
) -> Result<(GmmModel, Vec<f64>)> {
    if n_components == 0 || data.rows() < n_components {
        return Err(Error::Fit(format!(
            "{} rows cannot support {n_components} components",
            data.rows()
        )));
    }
    if data.cols() == 0 {
        return Err(Error::Fit("data has zero columns".into()));
    }
    if config.max_iters == 0 || !(config.variance_floor > 0.0) {
        return Err(Error::Fit("EM needs max_iters >= 1 and a positive variance floor".into()));
    }
    let rows: Vec<&[f64]> = data.iter_rows().collect();
    let n = rows.len();
    let k = n_components;
    let dim = data.cols();
    let mut model = seed_mixture(&rows, k, cov_type, config.variance_floor)?;

    let mut resp = Matrix::zeros(n, k);
    let mut point_ll = vec![0.0; n];
    let e_step = |model: &GmmModel, resp: &mut Matrix, point_ll: &mut [f64]| -> f64 {
        let mut total = 0.0;
        for (i, x) in rows.iter().enumerate() {
            let r = resp.row_mut(i);
            let lse = model.component_log_probs(x, r);
            for v in r.iter_mut() {
                *v = (*v - lse).exp();
            }
            point_ll[i] = lse;
            total += lse;
        }
        total
    };

    let mut lls = vec![e_step(&model, &mut resp, &mut point_ll)];
    for _ in 0..config.max_iters {
        let mut moments = vec![Moments::new(dim, cov_type); k];
        for (i, x) in rows.iter().enumerate() {
            for (m, mom) in moments.iter_mut().enumerate() {
                mom.add(x, resp.get(i, m));
            }
        }
        let occupancy: Vec<f64> = moments.iter().map(|m| m.weight).collect();
        let mut weights: Vec<f64> = occupancy.iter().map(|o| o / n as f64).collect();
        let mut components = model.components.clone();
        for (m, mom) in moments.iter().enumerate() {
            if occupancy[m] >= DEAD_COMPONENT {
                components[m] = mom.estimate(cov_type, config.variance_floor)?;
            }
        }
        if occupancy.iter().any(|&o| o < DEAD_COMPONENT) {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| point_ll[a].total_cmp(&point_ll[b]).then(a.cmp(&b)));
            let worst: Vec<&[f64]> = order.iter().map(|&i| rows[i]).collect();
            reseed_dead(&mut weights, &mut components, &occupancy, &worst)?;
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        model = GmmModel::new(weights, components)?;
        let prev = *lls.last().unwrap();
        let ll = e_step(&model, &mut resp, &mut point_ll);
        lls.push(ll);
        if (ll - prev) / prev.abs().max(f64::MIN_POSITIVE) < config.tol {
            break;
        }
    }
    Ok((model, lls))
}
