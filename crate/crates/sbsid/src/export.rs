//! CSV exports for plotting and inspection.

use std::path::Path;

use sbsid_core::decision::{CurvePoint, EvalReport, Histograms};
use sbsid_core::dsp::BandPlan;
use sbsid_core::features::FeatureSequence;
use sbsid_core::fusion::ScoreMatrix;
use sbsid_core::recognizer::Outcome;

use crate::error::{Error, Result};

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        detail: e.to_string(),
    }
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        let r: Vec<String> = r.into_iter().collect();
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(Error::io(path))
}

pub fn write_far_frr(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    write_rows(
        path,
        &["tau", "far", "frr"],
        curve
            .iter()
            .map(|p| [p.tau.to_string(), p.far.to_string(), p.frr.to_string()]),
    )
}

pub fn write_histograms(path: &Path, h: &Histograms) -> Result<()> {
    write_rows(
        path,
        &["bin", "low", "high", "genuine", "impostor"],
        h.bins.iter().enumerate().map(|(i, b)| {
            [
                i.to_string(),
                b.low.to_string(),
                b.high.to_string(),
                b.genuine_mass.to_string(),
                b.impostor_mass.to_string(),
            ]
        }),
    )
}

/// `metric,value` summary of one evaluation.
pub fn write_metrics(path: &Path, r: &EvalReport) -> Result<()> {
    let rows: Vec<(&str, String)> = vec![
        ("identification_rate", r.identification_rate.to_string()),
        ("true_rejection_rate", r.true_rejection_rate.to_string()),
        ("reliability", r.reliability.to_string()),
        ("decision_gap", r.decision_gap.to_string()),
        ("tau", r.tau.to_string()),
        ("genuine_acceptance", r.genuine_acceptance.to_string()),
        ("impostor_acceptance", r.impostor_acceptance.to_string()),
        ("genuine_trials", r.genuine_lrs.len().to_string()),
        ("impostor_trials", r.impostor_lrs.len().to_string()),
        ("genuine_mode_bin", r.histograms.genuine_mode().to_string()),
        ("impostor_mode_bin", r.histograms.impostor_mode().to_string()),
    ];
    write_rows(path, &["metric", "value"], rows.into_iter().map(|(k, v)| [k.to_string(), v]))
}

pub fn write_ga_convergence(path: &Path, per_generation_best: &[f64]) -> Result<()> {
    write_rows(
        path,
        &["generation", "best_fitness"],
        per_generation_best
            .iter()
            .enumerate()
            .map(|(g, v)| [g.to_string(), v.to_string()]),
    )
}

/// One row per trial: who spoke, who was identified, confidence, decision.
pub fn write_outcomes(path: &Path, outcomes: &[Outcome]) -> Result<()> {
    write_rows(
        path,
        &["speaker_id", "utterance_id", "enrolled", "identified", "lr", "decision"],
        outcomes.iter().map(|o| {
            [
                o.key.0.to_string(),
                o.key.1.to_string(),
                o.enrolled.to_string(),
                o.identification.speaker.to_string(),
                o.identification.confidence.lr.to_string(),
                o.identification.decision.as_str().to_string(),
            ]
        }),
    )
}

pub fn write_scores(path: &Path, s: &ScoreMatrix) -> Result<()> {
    let mut rows = Vec::new();
    for (b, &band) in s.band_ids().iter().enumerate() {
        for (j, &spk) in s.speaker_ids().iter().enumerate() {
            rows.push([band.to_string(), spk.to_string(), s.band(b)[j].to_string()]);
        }
    }
    write_rows(path, &["band", "speaker", "score"], rows)
}

/// One row per frame.
pub fn write_features(path: &Path, f: &FeatureSequence) -> Result<()> {
    let mut header = vec!["frame".to_string()];
    header.extend((0..f.dim()).map(|d| format!("f{d}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(
        path,
        &header,
        f.frames().enumerate().map(|(t, row)| {
            std::iter::once(t.to_string())
                .chain(row.iter().map(|v| v.to_string()))
                .collect::<Vec<_>>()
        }),
    )
}

/// Second-order sections of every band filter (`a0` is always 1). Full-range
/// bands have no filter and no rows.
pub fn write_filter_sos(path: &Path, plan: &BandPlan) -> Result<()> {
    let mut rows = Vec::new();
    for b in 0..plan.len() {
        let (lo, hi) = plan.bands()[b];
        if let Some(f) = plan.filter(b)? {
            for (i, s) in f.sections.iter().enumerate() {
                rows.push(vec![
                    b.to_string(),
                    lo.to_string(),
                    hi.to_string(),
                    i.to_string(),
                    s.b0.to_string(),
                    s.b1.to_string(),
                    s.b2.to_string(),
                    "1".to_string(),
                    s.a1.to_string(),
                    s.a2.to_string(),
                ]);
            }
        }
    }
    write_rows(
        path,
        &["band", "low_hz", "high_hz", "section", "b0", "b1", "b2", "a0", "a1", "a2"],
        rows,
    )
}

/// One row of the merger comparison table.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub store: String,
    pub merger: String,
    pub bands: usize,
    pub identification_rate: f64,
    pub reliability: f64,
    pub decision_gap: f64,
    pub tau: f64,
}

pub fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    write_rows(
        path,
        &["store", "merger", "bands", "identification_rate", "reliability", "decision_gap", "tau"],
        rows.iter().map(|r| {
            [
                r.store.clone(),
                r.merger.clone(),
                r.bands.to_string(),
                r.identification_rate.to_string(),
                r.reliability.to_string(),
                r.decision_gap.to_string(),
                r.tau.to_string(),
            ]
        }),
    )
}

/// The combined classical + sub-band vote, appended to a comparison table.
pub fn write_combined_vote(path: &Path, members: &[String], rate: f64) -> Result<()> {
    write_rows(
        path,
        &["members", "identification_rate"],
        [[members.join("+"), rate.to_string()]],
    )
}
