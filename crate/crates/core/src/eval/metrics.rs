use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::kg::Concept;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LabelScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold instances carrying the label.
    pub support: usize,
}

/// Per-label scores and their support-weighted averages.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PrfReport {
    pub per_label: BTreeMap<String, LabelScores>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Multi-label precision, recall and F1 per label, averaged with weights
/// proportional to each label's gold support. Undefined ratios count as 0.
pub fn weighted_prf<L: Ord + Display>(
    predictions: &[BTreeSet<L>],
    gold: &[BTreeSet<L>],
) -> Result<PrfReport, EvalError> {
    if predictions.len() != gold.len() {
        return Err(EvalError::LengthMismatch { left: predictions.len(), right: gold.len() });
    }
    // (true positives, predicted, gold) per label
    let mut tally: BTreeMap<&L, (usize, usize, usize)> = BTreeMap::new();
    for (pred, truth) in predictions.iter().zip(gold) {
        for l in pred {
            let e = tally.entry(l).or_default();
            e.1 += 1;
            if truth.contains(l) {
                e.0 += 1;
            }
        }
        for l in truth {
            tally.entry(l).or_default().2 += 1;
        }
    }
    let mut report = PrfReport::default();
    for (label, (tp, predicted, support)) in tally {
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        let w = support as f64;
        report.precision += w * precision;
        report.recall += w * recall;
        report.f1 += w * f1;
        report.support += support;
        report.per_label.insert(label.to_string(), LabelScores { precision, recall, f1, support });
    }
    if report.support > 0 {
        let total = report.support as f64;
        report.precision /= total;
        report.recall /= total;
        report.f1 /= total;
    }
    Ok(report)
}

/// Fraction of instances whose gold target is among the first `k` beam entries.
pub fn hits_at_k(beams: &[Vec<Concept>], gold: &[Concept], k: usize) -> Result<f64, EvalError> {
    if beams.len() != gold.len() {
        return Err(EvalError::LengthMismatch { left: beams.len(), right: gold.len() });
    }
    if k == 0 {
        return Err(EvalError::InvalidParams("k must be at least 1".into()));
    }
    if beams.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let hits = beams.iter().zip(gold).filter(|(beam, g)| beam.iter().take(k).any(|c| c == *g)).count();
    Ok(hits as f64 / beams.len() as f64)
}

/// Cohen's kappa for two annotators labelling the same items. When chance
/// agreement is already total (a single label used throughout) the result is 1.
pub fn cohens_kappa<L: Ord>(a1: &[L], a2: &[L]) -> Result<f64, EvalError> {
    if a1.len() != a2.len() {
        return Err(EvalError::LengthMismatch { left: a1.len(), right: a2.len() });
    }
    if a1.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = a1.len() as f64;
    let observed = a1.iter().zip(a2).filter(|(x, y)| x == y).count() as f64 / n;
    let mut marginals: BTreeMap<&L, (usize, usize)> = BTreeMap::new();
    for l in a1 {
        marginals.entry(l).or_default().0 += 1;
    }
    for l in a2 {
        marginals.entry(l).or_default().1 += 1;
    }
    let expected: f64 = marginals.values().map(|&(x, y)| (x as f64 / n) * (y as f64 / n)).sum();
    if expected >= 1.0 {
        return Ok(1.0);
    }
    Ok((observed - expected) / (1.0 - expected))
}
