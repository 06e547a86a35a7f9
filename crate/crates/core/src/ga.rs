//! Real/integer-coded genetic algorithm with tournament selection, uniform
//! and blend crossover, per-gene redraw mutation and elitism. Two fitness
//! adapters sit on top: decision-threshold tuning and per-band HMM
//! architecture search.

use alloc::format;
use alloc::vec::Vec;
use core::borrow::Borrow;

#[allow(unused_imports)]
use num_traits::Float;

use crate::decision::{false_acceptance_rate, false_rejection_rate};
use crate::features::FeatureSequence;
use crate::hmm::{self, HmmModel, TrainConfig};
use crate::parallel::Executor;
use crate::rng::Stream;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elitism_count: usize,
    pub tournament_size: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 50,
            generations: 25,
            crossover_rate: 0.8,
            mutation_rate: 0.05,
            elitism_count: 2,
            tournament_size: 3,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let rate_ok = |r: f64| (0.0..=1.0).contains(&r);
        if self.population_size < 2 {
            return Err(Error::GaConfig("population must be at least 2".into()));
        }
        if self.generations < 1 {
            return Err(Error::GaConfig("need at least one generation".into()));
        }
        if !rate_ok(self.crossover_rate) || !rate_ok(self.mutation_rate) {
            return Err(Error::GaConfig("rates must lie in [0, 1]".into()));
        }
        if self.elitism_count >= self.population_size {
            return Err(Error::GaConfig("elitism must be smaller than the population".into()));
        }
        if self.tournament_size < 1 {
            return Err(Error::GaConfig("tournament size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Bounds of one gene, inclusive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gene {
    Int { min: i64, max: i64 },
    Real { min: f64, max: f64 },
}

impl Gene {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Gene::Int { min, max } => min <= max,
            Gene::Real { min, max } => min.is_finite() && max.is_finite() && min <= max,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::GaConfig(format!("invalid gene bounds {self:?}")))
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match *self {
            Gene::Int { min, max } => v.fract() == 0.0 && v >= min as f64 && v <= max as f64,
            Gene::Real { min, max } => v >= min && v <= max,
        }
    }

    fn clamp(&self, v: f64) -> f64 {
        match *self {
            Gene::Int { min, max } => v.round().clamp(min as f64, max as f64),
            Gene::Real { min, max } => v.clamp(min, max),
        }
    }

    fn draw(&self, rng: &mut Stream) -> f64 {
        match *self {
            Gene::Int { min, max } => (min + rng.below((max - min + 1) as usize) as i64) as f64,
            Gene::Real { min, max } => rng.uniform_range(min, max),
        }
    }

    /// A value from stratum `s` of `n` equal slices of the range.
    fn stratified(&self, s: usize, n: usize, rng: &mut Stream) -> f64 {
        let u = (s as f64 + rng.uniform()) / n as f64;
        match *self {
            Gene::Int { min, max } => {
                let span = (max - min + 1) as f64;
                self.clamp((min as f64 + (u * span).floor()).min(max as f64))
            }
            Gene::Real { min, max } => self.clamp(min + u * (max - min)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaResult {
    pub best: Vec<f64>,
    pub best_fitness: f64,
    /// Best fitness seen up to and including each generation; the initial
    /// population is generation 1.
    pub per_generation_best: Vec<f64>,
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::NEG_INFINITY
    } else {
        f
    }
}

/// Indices sorted by fitness, best first, lower index on ties.
fn ranking(fitness: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fitness.len()).collect();
    idx.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
    idx
}

fn tournament(fitness: &[f64], size: usize, rng: &mut Stream) -> usize {
    let mut best = rng.below(fitness.len());
    for _ in 1..size {
        let c = rng.below(fitness.len());
        if fitness[c] > fitness[best] || (fitness[c] == fitness[best] && c < best) {
            best = c;
        }
    }
    best
}

/// Maximizes `fitness` over the box given by `genes`. Integer genes are
/// carried as integral `f64` values. The initial population is stratified
/// per gene; every later generation keeps the `elitism_count` best
/// unchanged and fills the rest with mutated offspring of tournament winners.
pub fn run_ga<F, E>(fitness: F, genes: &[Gene], config: &GaConfig, exec: &E) -> Result<GaResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
    E: Executor,
{
    config.validate()?;
    if genes.is_empty() {
        return Err(Error::GaConfig("no genes".into()));
    }
    for g in genes {
        g.validate()?;
    }
    let n = config.population_size;
    let mut rng = Stream::new(config.seed, 0);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(genes.len());
    for g in genes {
        let mut strata: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut strata);
        columns.push(strata.into_iter().map(|s| g.stratified(s, n, &mut rng)).collect());
    }
    let mut population: Vec<Vec<f64>> = (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
    let mut scores: Vec<f64> = exec.map(&population, |c| sanitize(fitness(c)));

    let mut order = ranking(&scores);
    let mut best = population[order[0]].clone();
    let mut best_fitness = scores[order[0]];
    let mut per_generation_best = alloc::vec![best_fitness];

    for generation in 1..config.generations {
        let mut rng = Stream::new(config.seed, generation as u64);
        let mut next: Vec<Vec<f64>> = order[..config.elitism_count]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        let elite_scores: Vec<f64> = order[..config.elitism_count].iter().map(|&i| scores[i]).collect();
        while next.len() < n {
            let a = &population[tournament(&scores, config.tournament_size, &mut rng)];
            let b = &population[tournament(&scores, config.tournament_size, &mut rng)];
            let mut child = a.clone();
            if rng.uniform() < config.crossover_rate {
                for (k, g) in genes.iter().enumerate() {
                    child[k] = match g {
                        Gene::Int { .. } => {
                            if rng.uniform() < 0.5 {
                                a[k]
                            } else {
                                b[k]
                            }
                        }
                        Gene::Real { .. } => {
                            let beta = rng.uniform_range(-0.25, 1.25);
                            g.clamp(a[k] + beta * (b[k] - a[k]))
                        }
                    };
                }
            }
            for (k, g) in genes.iter().enumerate() {
                if rng.uniform() < config.mutation_rate {
                    child[k] = g.draw(&mut rng);
                }
            }
            next.push(child);
        }
        let fresh = exec.map(&next[config.elitism_count..], |c| sanitize(fitness(c)));
        scores = elite_scores.into_iter().chain(fresh).collect();
        population = next;
        order = ranking(&scores);
        if scores[order[0]] > best_fitness {
            best_fitness = scores[order[0]];
            best = population[order[0]].clone();
        }
        per_generation_best.push(best_fitness);
    }
    Ok(GaResult {
        best,
        best_fitness,
        per_generation_best,
    })
}

/// Decision gap at `tau`: genuine acceptance minus impostor acceptance, in
/// percentage points.
pub fn threshold_fitness(tau: f64, genuine_lrs: &[f64], impostor_lrs: &[f64]) -> Result<f64> {
    if genuine_lrs.is_empty() || impostor_lrs.is_empty() {
        return Err(Error::Metric("threshold fitness needs both populations".into()));
    }
    Ok((100.0 - false_rejection_rate(genuine_lrs, tau)?) - false_acceptance_rate(impostor_lrs, tau)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdTuning {
    pub tau: f64,
    pub fitness: f64,
    pub per_generation_best: Vec<f64>,
}

/// Range searched for thresholds: the pooled LR range plus a small margin.
pub fn threshold_bounds(genuine_lrs: &[f64], impostor_lrs: &[f64]) -> Result<(f64, f64)> {
    let grid = crate::decision::tau_grid(genuine_lrs, impostor_lrs, 2)?;
    Ok((grid[0], grid[1]))
}

/// Moves `tau` to the middle of the gap between the pooled LRs that
/// bracket it; the accept set, and so the fitness, stays the same.
fn snap_to_gap(tau: f64, genuine_lrs: &[f64], impostor_lrs: &[f64]) -> f64 {
    let mut pooled: Vec<f64> = genuine_lrs.iter().chain(impostor_lrs).copied().collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();
    match pooled.iter().position(|&v| v >= tau) {
        Some(k) if k > 0 => {
            let mid = 0.5 * (pooled[k - 1] + pooled[k]);
            if mid > pooled[k - 1] && mid <= pooled[k] {
                mid
            } else {
                tau
            }
        }
        _ => tau,
    }
}

pub fn tune_threshold<E: Executor>(
    genuine_lrs: &[f64],
    impostor_lrs: &[f64],
    config: &GaConfig,
    exec: &E,
) -> Result<ThresholdTuning> {
    let (lo, hi) = threshold_bounds(genuine_lrs, impostor_lrs)?;
    let genes = [Gene::Real { min: lo, max: hi }];
    let result = run_ga(
        |c| threshold_fitness(c[0], genuine_lrs, impostor_lrs).unwrap_or(f64::NEG_INFINITY),
        &genes,
        config,
        exec,
    )?;
    let tau = snap_to_gap(result.best[0], genuine_lrs, impostor_lrs);
    Ok(ThresholdTuning {
        tau,
        fitness: threshold_fitness(tau, genuine_lrs, impostor_lrs)?,
        per_generation_best: result.per_generation_best,
    })
}

pub const STATE_BOUNDS: (i64, i64) = (1, 8);
pub const MIXTURE_BOUNDS: (i64, i64) = (1, 32);

/// Trains one HMM per speaker with the given architecture and returns the
/// identification rate on the validation sequences. Any training failure
/// scores 0.
pub fn architecture_fitness<S: Borrow<FeatureSequence>>(
    n_states: usize,
    n_mix: usize,
    train: &[(u32, Vec<S>)],
    validation: &[(u32, S)],
    config: &TrainConfig,
) -> f64 {
    if validation.is_empty() || train.len() < 2 {
        return 0.0;
    }
    let models: Result<Vec<HmmModel>> = train
        .iter()
        .map(|(_, seqs)| hmm::fit(n_states, n_mix, config, seqs))
        .collect();
    let Ok(models) = models else {
        return 0.0;
    };
    let mut correct = 0usize;
    for (truth, seq) in validation {
        let mut best = f64::NEG_INFINITY;
        let mut who = None;
        for ((speaker, _), m) in train.iter().zip(&models) {
            match m.log_likelihood(seq.borrow()) {
                Ok(ll) if ll > best => {
                    best = ll;
                    who = Some(*speaker);
                }
                Ok(_) => {}
                Err(_) => return 0.0,
            }
        }
        if who == Some(*truth) {
            correct += 1;
        }
    }
    100.0 * correct as f64 / validation.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArchitectureTuning {
    pub n_states: usize,
    pub n_mix: usize,
    pub fitness: f64,
    pub per_generation_best: Vec<f64>,
}

pub fn tune_architecture<S, E>(
    train: &[(u32, Vec<S>)],
    validation: &[(u32, S)],
    config: &TrainConfig,
    ga: &GaConfig,
    exec: &E,
) -> Result<ArchitectureTuning>
where
    S: Borrow<FeatureSequence> + Sync,
    E: Executor,
{
    let genes = [
        Gene::Int {
            min: STATE_BOUNDS.0,
            max: STATE_BOUNDS.1,
        },
        Gene::Int {
            min: MIXTURE_BOUNDS.0,
            max: MIXTURE_BOUNDS.1,
        },
    ];
    let result = run_ga(
        |c| architecture_fitness(c[0] as usize, c[1] as usize, train, validation, config),
        &genes,
        ga,
        exec,
    )?;
    Ok(ArchitectureTuning {
        n_states: result.best[0] as usize,
        n_mix: result.best[1] as usize,
        fitness: result.best_fitness,
        per_generation_best: result.per_generation_best,
    })
}
