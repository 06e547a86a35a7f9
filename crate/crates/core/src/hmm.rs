//! Left-to-right continuous-density HMMs: forward scoring, Viterbi decoding
//! and Baum-Welch re-estimation with Gaussian-mixture emissions.
//!
//! Every recursion runs in the log domain with a max-shift per frame. The
//! topology is strictly left-to-right with self-loops: state `i` may only
//! stay or advance to `i + 1`, and paths always start in state 0.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::borrow::Borrow;
use core::cmp::Ordering;

#[allow(unused_imports)]
use num_traits::Float;

use crate::features::FeatureSequence;
use crate::gaussian::{log_sum_exp, CovarianceType, Moments};
use crate::gmm::{reseed_dead, seed_mixture, GmmModel, DEAD_COMPONENT};
use crate::{Error, Matrix, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct HmmModel {
    initial: Vec<f64>,
    transitions: Matrix,
    emissions: Vec<GmmModel>,
    log_initial: Vec<f64>,
    log_transitions: Matrix,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub max_iters: usize,
    pub ll_tol: f64,
    pub variance_floor: f64,
    pub cov_type: CovarianceType,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_iters: 40,
            ll_tol: 1e-5,
            variance_floor: 1e-4,
            cov_type: CovarianceType::Diagonal,
        }
    }
}

fn ln_or_neg_inf(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}

impl HmmModel {
    /// Assembles a model and checks every structural invariant.
    pub fn new(initial: Vec<f64>, transitions: Matrix, emissions: Vec<GmmModel>) -> Result<Self> {
        let s = initial.len();
        if s == 0 || emissions.len() != s || transitions.rows() != s || transitions.cols() != s {
            return Err(Error::Shape {
                expected: s,
                got: emissions.len(),
            });
        }
        let log_initial = initial.iter().map(|&p| ln_or_neg_inf(p)).collect();
        let mut log_transitions = Matrix::zeros(s, s);
        for i in 0..s {
            for j in 0..s {
                log_transitions.set(i, j, ln_or_neg_inf(transitions.get(i, j)));
            }
        }
        let model = HmmModel {
            initial,
            transitions,
            emissions,
            log_initial,
            log_transitions,
        };
        model.check_invariants()?;
        Ok(model)
    }

    pub fn check_invariants(&self) -> Result<()> {
        let s = self.n_states();
        let dim = self.emissions[0].dim();
        if self.initial[0] != 1.0 || self.initial[1..].iter().any(|&p| p != 0.0) {
            return Err(Error::InvalidArgument("initial mass must sit on state 0".into()));
        }
        for i in 0..s {
            let row = self.transitions.row(i);
            if row.iter().any(|p| !(*p >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("transition row {i} is not stochastic")));
            }
            if row
                .iter()
                .enumerate()
                .any(|(j, &p)| (j < i || j > i + 1) && p != 0.0)
            {
                return Err(Error::InvalidArgument(format!(
                    "transition row {i} violates the left-to-right mask"
                )));
            }
            if self.emissions[i].dim() != dim {
                return Err(Error::Shape {
                    expected: dim,
                    got: self.emissions[i].dim(),
                });
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.initial.len()
    }

    pub fn dim(&self) -> usize {
        self.emissions[0].dim()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transitions(&self) -> &Matrix {
        &self.transitions
    }

    pub fn emissions(&self) -> &[GmmModel] {
        &self.emissions
    }

    fn check_dim(&self, seq: &FeatureSequence) -> Result<()> {
        if seq.dim() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                got: seq.dim(),
            });
        }
        Ok(())
    }

    /// T x S matrix of `ln b_s(x_t)`.
    fn emission_log_probs(&self, seq: &FeatureSequence) -> Matrix {
        let s = self.n_states();
        let mut out = Matrix::zeros(seq.n_frames(), s);
        for (t, x) in seq.frames().enumerate() {
            for (j, e) in self.emissions.iter().enumerate() {
                out.set(t, j, e.score_unchecked(x));
            }
        }
        out
    }

    fn forward(&self, b: &Matrix) -> Matrix {
        let (t_len, s) = (b.rows(), self.n_states());
        let mut alpha = Matrix::zeros(t_len, s);
        for j in 0..s {
            alpha.set(0, j, self.log_initial[j] + b.get(0, j));
        }
        let mut terms = vec![0.0; s];
        for t in 1..t_len {
            for j in 0..s {
                for i in 0..s {
                    terms[i] = alpha.get(t - 1, i) + self.log_transitions.get(i, j);
                }
                alpha.set(t, j, log_sum_exp(&terms) + b.get(t, j));
            }
        }
        alpha
    }

    fn backward(&self, b: &Matrix) -> Matrix {
        let (t_len, s) = (b.rows(), self.n_states());
        let mut beta = Matrix::zeros(t_len, s);
        let mut terms = vec![0.0; s];
        for t in (0..t_len - 1).rev() {
            for i in 0..s {
                for j in 0..s {
                    terms[j] = self.log_transitions.get(i, j) + b.get(t + 1, j) + beta.get(t + 1, j);
                }
                beta.set(t, i, log_sum_exp(&terms));
            }
        }
        beta
    }

    /// `ln P(X | model)` by the forward recursion.
    pub fn log_likelihood(&self, seq: &FeatureSequence) -> Result<f64> {
        self.check_dim(seq)?;
        let alpha = self.forward(&self.emission_log_probs(seq));
        Ok(log_sum_exp(alpha.row(alpha.rows() - 1)))
    }

    /// Most likely state path and its joint log-probability. Ties prefer the
    /// lower state index.
    pub fn viterbi(&self, seq: &FeatureSequence) -> Result<(Vec<usize>, f64)> {
        self.check_dim(seq)?;
        let b = self.emission_log_probs(seq);
        let (t_len, s) = (b.rows(), self.n_states());
        let mut delta = Matrix::zeros(t_len, s);
        let mut back = vec![0usize; t_len * s];
        for j in 0..s {
            delta.set(0, j, self.log_initial[j] + b.get(0, j));
        }
        for t in 1..t_len {
            for j in 0..s {
                let mut best = f64::NEG_INFINITY;
                let mut arg = 0;
                for i in 0..s {
                    let v = delta.get(t - 1, i) + self.log_transitions.get(i, j);
                    if v > best {
                        best = v;
                        arg = i;
                    }
                }
                delta.set(t, j, best + b.get(t, j));
                back[t * s + j] = arg;
            }
        }
        let mut state = 0;
        for j in 1..s {
            if delta.get(t_len - 1, j) > delta.get(t_len - 1, state) {
                state = j;
            }
        }
        let score = delta.get(t_len - 1, state);
        let mut path = vec![0; t_len];
        for t in (0..t_len).rev() {
            path[t] = state;
            if t > 0 {
                state = back[t * s + state];
            }
        }
        Ok((path, score))
    }
}

/// Indices of `seqs` sorted by content, so accumulation order does not
/// depend on the order the caller supplied.
fn canonical_order<S: Borrow<FeatureSequence>>(seqs: &[S]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..seqs.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (seqs[a].borrow().matrix(), seqs[b].borrow().matrix());
        x.rows()
            .cmp(&y.rows())
            .then_with(|| {
                x.as_slice()
                    .iter()
                    .zip(y.as_slice())
                    .map(|(p, q)| p.total_cmp(q))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
            .then(a.cmp(&b))
    });
    idx
}

fn usable<S: Borrow<FeatureSequence>>(seqs: &[S], n_states: usize) -> Vec<&FeatureSequence> {
    canonical_order(seqs)
        .into_iter()
        .map(|i| seqs[i].borrow())
        .filter(|s| s.n_frames() >= n_states)
        .collect()
}

/// Left-to-right model seeded by uniform time segmentation: frame `t` of a
/// `T`-frame sequence belongs to state `floor(t * S / T)`, and each state's
/// frames seed its mixture through k-means. Transitions start at 0.5 stay /
/// 0.5 advance (1.0 stay in the last state).
pub fn init_model<S: Borrow<FeatureSequence>>(
    n_states: usize,
    n_mix: usize,
    config: &TrainConfig,
    sequences: &[S],
) -> Result<HmmModel> {
    if n_states == 0 || n_mix == 0 {
        return Err(Error::Init("need at least one state and one mixture".into()));
    }
    let seqs = usable(sequences, n_states);
    if seqs.is_empty() {
        return Err(Error::Init(format!("no sequence has at least {n_states} frames")));
    }
    let dim = seqs[0].dim();
    if seqs.iter().any(|s| s.dim() != dim) {
        return Err(Error::Init("sequences differ in dimension".into()));
    }
    let mut per_state: Vec<Vec<&[f64]>> = vec![Vec::new(); n_states];
    for seq in &seqs {
        let t_len = seq.n_frames();
        for (t, x) in seq.frames().enumerate() {
            per_state[t * n_states / t_len].push(x);
        }
    }
    let mut emissions = Vec::with_capacity(n_states);
    for (s, frames) in per_state.iter().enumerate() {
        if frames.len() < n_mix {
            return Err(Error::Init(format!(
                "state {s} has {} frames, fewer than {n_mix} mixtures",
                frames.len()
            )));
        }
        emissions.push(seed_mixture(frames, n_mix, config.cov_type, config.variance_floor).map_err(|e| Error::Init(format!("{e}")))?);
    }
    let mut transitions = Matrix::zeros(n_states, n_states);
    for i in 0..n_states {
        if i + 1 < n_states {
            transitions.set(i, i, 0.5);
            transitions.set(i, i + 1, 0.5);
        } else {
            transitions.set(i, i, 1.0);
        }
    }
    let mut initial = vec![0.0; n_states];
    initial[0] = 1.0;
    HmmModel::new(initial, transitions, emissions)
}

/// Sufficient statistics of one E-step over a set of sequences.
struct Stats {
    ll: f64,
    trans: Matrix,
    mix: Vec<Vec<Moments>>,
    /// Per state: the frame with the lowest emission log-likelihood.
    worst: Vec<(f64, Vec<f64>)>,
}

impl Stats {
    fn new(model: &HmmModel, cov_type: CovarianceType) -> Self {
        let s = model.n_states();
        Stats {
            ll: 0.0,
            trans: Matrix::zeros(s, s),
            mix: model
                .emissions
                .iter()
                .map(|e| vec![Moments::new(model.dim(), cov_type); e.n_components()])
                .collect(),
            worst: vec![(f64::INFINITY, Vec::new()); s],
        }
    }

    fn accumulate(&mut self, model: &HmmModel, seq: &FeatureSequence) {
        let s = model.n_states();
        let t_len = seq.n_frames();
        let max_mix = model.emissions.iter().map(|e| e.n_components()).max().unwrap_or(1);
        // per (t, state): component log terms and emission log-likelihood
        let mut comp = vec![0.0; t_len * s * max_mix];
        let mut b = Matrix::zeros(t_len, s);
        for (t, x) in seq.frames().enumerate() {
            for (j, e) in model.emissions.iter().enumerate() {
                let off = (t * s + j) * max_mix;
                let lse = e.component_log_probs(x, &mut comp[off..off + e.n_components()]);
                b.set(t, j, lse);
                if lse < self.worst[j].0 {
                    self.worst[j] = (lse, x.to_owned());
                }
            }
        }
        let alpha = model.forward(&b);
        let beta = model.backward(&b);
        let ll = log_sum_exp(alpha.row(t_len - 1));
        self.ll += ll;
        for t in 0..t_len {
            let x = seq.frame(t);
            for j in 0..s {
                let gamma = (alpha.get(t, j) + beta.get(t, j) - ll).exp();
                if gamma == 0.0 {
                    continue;
                }
                let e = &model.emissions[j];
                let off = (t * s + j) * max_mix;
                let bj = b.get(t, j);
                for m in 0..e.n_components() {
                    let r = gamma * (comp[off + m] - bj).exp();
                    self.mix[j][m].add(x, r);
                }
            }
            if t + 1 < t_len {
                for i in 0..s {
                    for j in i..(i + 2).min(s) {
                        let lx = alpha.get(t, i)
                            + model.log_transitions.get(i, j)
                            + b.get(t + 1, j)
                            + beta.get(t + 1, j)
                            - ll;
                        let v = self.trans.get(i, j) + lx.exp();
                        self.trans.set(i, j, v);
                    }
                }
            }
        }
    }
}

fn e_step(model: &HmmModel, seqs: &[&FeatureSequence], cov_type: CovarianceType) -> Stats {
    let mut stats = Stats::new(model, cov_type);
    for seq in seqs {
        stats.accumulate(model, seq);
    }
    stats
}

fn m_step(model: &HmmModel, stats: &Stats, config: &TrainConfig) -> Result<HmmModel> {
    let s = model.n_states();
    let mut transitions = model.transitions.clone();
    for i in 0..s {
        let total: f64 = stats.trans.row(i).iter().sum();
        if total > 0.0 {
            for j in 0..s {
                transitions.set(i, j, stats.trans.get(i, j) / total);
            }
        }
    }
    let mut emissions = Vec::with_capacity(s);
    for j in 0..s {
        let occupancy: Vec<f64> = stats.mix[j].iter().map(|m| m.weight).collect();
        let total: f64 = occupancy.iter().sum();
        if !(total > 0.0) {
            emissions.push(model.emissions[j].clone());
            continue;
        }
        let mut weights: Vec<f64> = occupancy.iter().map(|o| o / total).collect();
        let mut components = model.emissions[j].components().to_vec();
        for (m, mom) in stats.mix[j].iter().enumerate() {
            if occupancy[m] >= DEAD_COMPONENT {
                components[m] = mom.estimate(config.cov_type, config.variance_floor)?;
            }
        }
        if occupancy.iter().any(|&o| o < DEAD_COMPONENT) && !stats.worst[j].1.is_empty() {
            let worst = [stats.worst[j].1.as_slice()];
            reseed_dead(&mut weights, &mut components, &occupancy, &worst)?;
        }
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
        emissions.push(GmmModel::new(weights, components)?);
    }
    HmmModel::new(model.initial.clone(), transitions, emissions)
}

/// Baum-Welch re-estimation. Returns the trained model and the total
/// log-likelihood of the starting model followed by one value per
/// re-estimation. Stops after `max_iters` re-estimations or once the
/// relative improvement drops below `ll_tol`.
pub fn train_baum_welch<S: Borrow<FeatureSequence>>(
    model: &HmmModel,
    sequences: &[S],
    config: &TrainConfig,
) -> Result<(HmmModel, Vec<f64>)> {
    if config.max_iters == 0 {
        return Err(Error::Training("max_iters must be at least 1".into()));
    }
    if !(config.variance_floor > 0.0) {
        return Err(Error::Training("variance floor must be positive".into()));
    }
    let seqs = usable(sequences, model.n_states());
    if seqs.is_empty() {
        return Err(Error::Training(format!(
            "every sequence is shorter than {} states",
            model.n_states()
        )));
    }
    for seq in &seqs {
        model.check_dim(seq)?;
    }
    let mut current = model.clone();
    let mut stats = e_step(&current, &seqs, config.cov_type);
    let mut lls = vec![stats.ll];
    for _ in 0..config.max_iters {
        let next = m_step(&current, &stats, config)?;
        let next_stats = e_step(&next, &seqs, config.cov_type);
        let prev = stats.ll;
        lls.push(next_stats.ll);
        current = next;
        stats = next_stats;
        if (stats.ll - prev) / prev.abs().max(f64::MIN_POSITIVE) < config.ll_tol {
            break;
        }
    }
    Ok((current, lls))
}

/// [`init_model`] followed by [`train_baum_welch`].
pub fn fit<S: Borrow<FeatureSequence>>(
    n_states: usize,
    n_mix: usize,
    config: &TrainConfig,
    sequences: &[S],
) -> Result<HmmModel> {
    let init = init_model(n_states, n_mix, config, sequences)?;
    Ok(train_baum_welch(&init, sequences, config)?.0)
}
