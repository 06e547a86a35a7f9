//! Mergers that turn a per-band score matrix into one speaker decision:
//! majority vote, weighted and unweighted LCLR, per-speaker GMMs and
//! one-vs-rest SVMs, plus the classical + sub-band combined vote.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::gaussian::CovarianceType;
use crate::gmm::{fit_em, EmConfig, GmmModel};
use crate::svm::{predict_ovr, train_ovr, OvrClassifier};
use crate::{Error, Matrix, Result};

pub const DEFAULT_GMM_COMPONENTS: usize = 20;

/// Per-band, per-speaker length-normalized log-likelihoods of one utterance.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    scores: Matrix,
    band_ids: Vec<usize>,
    speaker_ids: Vec<u32>,
}

impl ScoreMatrix {
    pub fn new(scores: Matrix, band_ids: Vec<usize>, speaker_ids: Vec<u32>) -> Result<Self> {
        if scores.rows() == 0 || scores.rows() != band_ids.len() {
            return Err(Error::Shape {
                expected: band_ids.len(),
                got: scores.rows(),
            });
        }
        if scores.cols() < 2 || scores.cols() != speaker_ids.len() {
            return Err(Error::Shape {
                expected: speaker_ids.len().max(2),
                got: scores.cols(),
            });
        }
        if scores.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("score matrix entries must be finite".into()));
        }
        Ok(ScoreMatrix {
            scores,
            band_ids,
            speaker_ids,
        })
    }

    pub fn n_bands(&self) -> usize {
        self.scores.rows()
    }

    pub fn n_speakers(&self) -> usize {
        self.scores.cols()
    }

    pub fn scores(&self) -> &Matrix {
        &self.scores
    }

    pub fn band(&self, b: usize) -> &[f64] {
        self.scores.row(b)
    }

    pub fn band_ids(&self) -> &[usize] {
        &self.band_ids
    }

    pub fn speaker_ids(&self) -> &[u32] {
        &self.speaker_ids
    }

    /// Row-major flattening: all of band 0's speakers, then band 1's, ...
    pub fn flatten(&self) -> &[f64] {
        self.scores.as_slice()
    }

    /// Same matrix without one speaker's column.
    pub fn without_speaker(&self, col: usize) -> Result<ScoreMatrix> {
        if col >= self.n_speakers() {
            return Err(Error::Index {
                index: col,
                len: self.n_speakers(),
            });
        }
        let rows: Vec<Vec<f64>> = self
            .scores
            .iter_rows()
            .map(|r| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, v)| *v).collect())
            .collect();
        let mut speakers = self.speaker_ids.clone();
        speakers.remove(col);
        ScoreMatrix::new(Matrix::from_rows(&rows)?, self.band_ids.clone(), speakers)
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandWeights(Vec<f64>);

impl BandWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Weight("weights must be non-negative and finite".into()));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Weight(format!("weights sum to {sum}, not 1")));
        }
        Ok(BandWeights(w))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Weight("need at least one band".into()));
        }
        Ok(BandWeights(vec![1.0 / n as f64; n]))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `w_i = IR_i / sum_j IR_j`.
pub fn compute_weights(band_rates: &[f64]) -> Result<BandWeights> {
    if band_rates.is_empty() || band_rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
        return Err(Error::Weight("identification rates must be non-negative".into()));
    }
    let total: f64 = band_rates.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Weight("all identification rates are zero".into()));
    }
    Ok(BandWeights(band_rates.iter().map(|r| r / total).collect()))
}

/// Per-speaker `sum_i w_i * score_i`.
pub fn lclr_combine(scores: &ScoreMatrix, weights: &BandWeights) -> Result<Vec<f64>> {
    if weights.len() != scores.n_bands() {
        return Err(Error::Shape {
            expected: scores.n_bands(),
            got: weights.len(),
        });
    }
    let mut out = vec![0.0; scores.n_speakers()];
    for (b, &w) in weights.as_slice().iter().enumerate() {
        for (o, s) in out.iter_mut().zip(scores.band(b)) {
            *o += w * s;
        }
    }
    Ok(out)
}

pub fn unweighted_lclr(scores: &ScoreMatrix) -> Vec<f64> {
    let w = BandWeights::uniform(scores.n_bands()).expect("score matrices have at least one band");
    lclr_combine(scores, &w).expect("uniform weights match the band count")
}

/// Speaker with the most votes. Tied counts go to whichever tied speaker was
/// voted for by the highest-priority classifier; `priority` lists classifier
/// indices from highest to lowest priority and must be a permutation.
pub fn majority_vote(decisions: &[u32], priority: &[usize]) -> Result<u32> {
    if decisions.is_empty() {
        return Err(Error::Vote("no decisions to vote on".into()));
    }
    let mut seen = vec![false; decisions.len()];
    if priority.len() != decisions.len()
        || priority.iter().any(|&p| p >= decisions.len() || core::mem::replace(&mut seen[p], true))
    {
        return Err(Error::Vote(format!(
            "priority ordering {priority:?} is not a permutation of {} classifiers",
            decisions.len()
        )));
    }
    let count = |s: u32| decisions.iter().filter(|&&d| d == s).count();
    let top = decisions.iter().map(|&d| count(d)).max().unwrap_or(0);
    let winner = priority
        .iter()
        .map(|&p| decisions[p])
        .find(|&s| count(s) == top)
        .expect("some classifier voted for a top speaker");
    Ok(winner)
}

/// Majority vote over the baseline decision followed by the sub-band ones;
/// classifier 0 is the baseline in `ordering`.
pub fn combined_vote(baseline: u32, subband: &[u32], ordering: &[usize]) -> Result<u32> {
    let mut pool = Vec::with_capacity(subband.len() + 1);
    pool.push(baseline);
    pool.extend_from_slice(subband);
    majority_vote(&pool, ordering)
}

/// Per-band argmax speaker ids (lowest index on ties).
pub fn band_decisions(scores: &ScoreMatrix) -> Vec<u32> {
    (0..scores.n_bands())
        .map(|b| scores.speaker_ids[argmax(scores.band(b))])
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum MergerKind {
    None,
    Vote,
    WeightedLclr,
    UnweightedLclr,
    Gmm,
    Svm,
}

impl MergerKind {
    pub const ALL: [MergerKind; 6] = [
        MergerKind::None,
        MergerKind::Vote,
        MergerKind::WeightedLclr,
        MergerKind::UnweightedLclr,
        MergerKind::Gmm,
        MergerKind::Svm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MergerKind::None => "none",
            MergerKind::Vote => "vote",
            MergerKind::WeightedLclr => "weighted_lclr",
            MergerKind::UnweightedLclr => "unweighted_lclr",
            MergerKind::Gmm => "gmm",
            MergerKind::Svm => "svm",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        MergerKind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Merger {
    /// Single-band pass-through.
    None,
    Vote { priority: Vec<usize> },
    WeightedLclr { weights: BandWeights },
    UnweightedLclr,
    /// One model per speaker, in the score matrix's speaker order.
    Gmm { speakers: Vec<u32>, models: Vec<GmmModel> },
    Svm { classifier: OvrClassifier },
}

impl Merger {
    pub fn kind(&self) -> MergerKind {
        match self {
            Merger::None => MergerKind::None,
            Merger::Vote { .. } => MergerKind::Vote,
            Merger::WeightedLclr { .. } => MergerKind::WeightedLclr,
            Merger::UnweightedLclr => MergerKind::UnweightedLclr,
            Merger::Gmm { .. } => MergerKind::Gmm,
            Merger::Svm { .. } => MergerKind::Svm,
        }
    }

    /// Per-speaker scores used for likelihood-ratio confidence: the
    /// weighted sum for weighted LCLR, the unweighted sum for every other
    /// kind (the single row when there is only one band).
    pub fn confidence_scores(&self, scores: &ScoreMatrix) -> Result<Vec<f64>> {
        match self {
            Merger::WeightedLclr { weights } => lclr_combine(scores, weights),
            _ => Ok(unweighted_lclr(scores)),
        }
    }
}

fn group_by_label(vectors: &Matrix, labels: &[u32]) -> Result<Vec<(u32, Vec<usize>)>> {
    if labels.len() != vectors.rows() {
        return Err(Error::Shape {
            expected: vectors.rows(),
            got: labels.len(),
        });
    }
    let mut speakers = labels.to_vec();
    speakers.sort_unstable();
    speakers.dedup();
    Ok(speakers
        .into_iter()
        .map(|s| (s, (0..labels.len()).filter(|&i| labels[i] == s).collect()))
        .collect())
}

/// One spherical GMM per speaker over that speaker's flattened score
/// vectors. Speakers come out in ascending id order.
pub fn train_gmm_merger(vectors: &Matrix, labels: &[u32], n_components: usize, config: &EmConfig) -> Result<Merger> {
    let groups = group_by_label(vectors, labels)?;
    if groups.len() < 2 {
        return Err(Error::Fit("GMM merger needs at least two speakers".into()));
    }
    let mut speakers = Vec::with_capacity(groups.len());
    let mut models = Vec::with_capacity(groups.len());
    for (speaker, idx) in groups {
        if idx.len() < n_components {
            return Err(Error::Fit(format!(
                "speaker {speaker} has {} score vectors, fewer than {n_components} components",
                idx.len()
            )));
        }
        let rows: Vec<&[f64]> = idx.iter().map(|&i| vectors.row(i)).collect();
        let data = Matrix::from_rows(&rows)?;
        let (model, _) = fit_em(&data, n_components, CovarianceType::Spherical, config)?;
        speakers.push(speaker);
        models.push(model);
    }
    Ok(Merger::Gmm { speakers, models })
}

pub fn train_svm_merger(vectors: &Matrix, labels: &[u32], c: f64) -> Result<Merger> {
    Ok(Merger::Svm {
        classifier: train_ovr(vectors, labels, c)?,
    })
}

/// Final speaker id for one score matrix.
pub fn identify(merger: &Merger, scores: &ScoreMatrix) -> Result<u32> {
    let speakers = scores.speaker_ids();
    match merger {
        Merger::None => {
            if scores.n_bands() != 1 {
                return Err(Error::State(format!(
                    "no merger configured for {} bands",
                    scores.n_bands()
                )));
            }
            Ok(speakers[argmax(scores.band(0))])
        }
        Merger::Vote { priority } => majority_vote(&band_decisions(scores), priority),
        Merger::WeightedLclr { weights } => Ok(speakers[argmax(&lclr_combine(scores, weights)?)]),
        Merger::UnweightedLclr => Ok(speakers[argmax(&unweighted_lclr(scores))]),
        Merger::Gmm { speakers, models } => {
            let x = scores.flatten();
            let mut values = Vec::with_capacity(models.len());
            for m in models {
                values.push(m.score(x)?);
            }
            Ok(speakers[argmax(&values)])
        }
        Merger::Svm { classifier } => predict_ovr(classifier, scores.flatten()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sm(rows: &[&[f64]]) -> ScoreMatrix {
        let n = rows[0].len();
        ScoreMatrix::new(
            Matrix::from_rows(rows).unwrap(),
            (0..rows.len()).collect(),
            (1..=n as u32).collect(),
        )
        .unwrap()
    }

    #[test]
    fn weights_from_rates() {
        let w = compute_weights(&[88.0, 80.5]).unwrap();
        assert!((w.as_slice()[0] - 0.522255).abs() < 1e-6);
        assert!((w.as_slice()[1] - 0.477745).abs() < 1e-6);
        let eq = compute_weights(&[5.0, 5.0, 5.0, 5.0]).unwrap();
        assert!(eq.as_slice().iter().all(|&v| v == 0.25));
        assert!(matches!(compute_weights(&[0.0, 0.0]), Err(Error::Weight(_))));
    }

    #[test]
    fn lclr_by_hand() {
        let s = sm(&[&[-10.0, -20.0], &[-30.0, -6.0]]);
        let w = BandWeights::new(vec![0.6, 0.4]).unwrap();
        let c = lclr_combine(&s, &w).unwrap();
        assert!((c[0] + 18.0).abs() < 1e-12 && (c[1] + 14.4).abs() < 1e-12);
        assert_eq!(identify(&Merger::WeightedLclr { weights: w }, &s).unwrap(), 2);
        let bad = BandWeights::new(vec![1.0]).unwrap();
        assert!(matches!(lclr_combine(&s, &bad), Err(Error::Shape { .. })));
    }

    #[test]
    fn lclr_tie_goes_low() {
        let s = sm(&[&[-1.0, -1.0, -2.0]]);
        assert_eq!(identify(&Merger::UnweightedLclr, &s).unwrap(), 1);
    }

    #[test]
    fn vote_examples() {
        assert_eq!(majority_vote(&[7, 7, 8], &[0, 1, 2]).unwrap(), 7);
        assert_eq!(majority_vote(&[7, 8], &[0, 1]).unwrap(), 7);
        assert_eq!(majority_vote(&[1, 2, 3], &[2, 0, 1]).unwrap(), 3);
        assert!(matches!(majority_vote(&[], &[]), Err(Error::Vote(_))));
        assert!(matches!(majority_vote(&[1, 2], &[0, 0]), Err(Error::Vote(_))));
    }

    #[test]
    fn combined_vote_examples() {
        // baseline A; weighted, unweighted, vote say B, A... ordering favours weighted
        assert_eq!(combined_vote(1, &[2, 1, 2], &[1, 0, 2, 3]).unwrap(), 2);
        assert_eq!(combined_vote(4, &[4, 4], &[0, 1, 2]).unwrap(), 4);
        assert_eq!(combined_vote(9, &[], &[0]).unwrap(), 9);
    }

    #[test]
    fn none_merger_needs_one_band() {
        let s = sm(&[&[-1.0, -2.0], &[-3.0, -1.0]]);
        assert!(matches!(identify(&Merger::None, &s), Err(Error::State(_))));
        let one = sm(&[&[-3.0, -1.0]]);
        assert_eq!(identify(&Merger::None, &one).unwrap(), 2);
    }

    #[test]
    fn without_speaker_drops_column() {
        let s = sm(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let d = s.without_speaker(1).unwrap();
        assert_eq!(d.speaker_ids(), &[1, 3]);
        assert_eq!(d.flatten(), &[1.0, 3.0, 4.0, 6.0]);
    }

    #[test]
    fn merger_kind_round_trip() {
        for k in MergerKind::ALL {
            assert_eq!(MergerKind::parse(k.as_str()), Some(k));
        }
    }
}
