//! Discrimination and calibration of probabilistic predictions.

use std::cmp::Ordering;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{EvalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub probability: f64,
    pub label: bool,
}

/// Validated predictions: every probability finite and in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbPredictionSet {
    items: Vec<Prediction>,
}

impl ProbPredictionSet {
    pub fn new(items: Vec<Prediction>) -> Result<Self> {
        if let Some((i, p)) = items
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.probability.is_finite() && (0.0..=1.0).contains(&p.probability)))
        {
            return Err(EvalError::InvalidPrediction {
                index: i,
                value: p.probability,
            });
        }
        Ok(Self { items })
    }

    pub fn from_pairs(probabilities: &[f64], labels: &[bool]) -> Result<Self> {
        if probabilities.len() != labels.len() {
            return Err(EvalError::LengthMismatch(probabilities.len(), labels.len()));
        }
        Self::new(
            probabilities
                .iter()
                .zip(labels)
                .map(|(&probability, &label)| Prediction { probability, label })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Prediction] {
        &self.items
    }

    /// Reads `prediction,label` CSV (header required; label is `0` or `1`).
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut items = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if i == 0 {
                if line != "prediction,label" {
                    return Err(EvalError::Format {
                        line: 1,
                        message: "expected header `prediction,label`".into(),
                    });
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| EvalError::Format {
                line: i + 1,
                message,
            };
            let (p, l) = line
                .split_once(',')
                .ok_or_else(|| bad("expected two comma-separated fields".into()))?;
            let probability: f64 = p
                .trim()
                .parse()
                .map_err(|_| bad(format!("`{p}` is not a number")))?;
            let label = match l.trim() {
                "0" => false,
                "1" => true,
                other => return Err(bad(format!("label `{other}` is not 0 or 1"))),
            };
            items.push(Prediction { probability, label });
        }
        Self::new(items)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "prediction,label")?;
        for p in &self.items {
            writeln!(out, "{},{}", p.probability, u8::from(p.label))?;
        }
        Ok(())
    }
}

/// Area under the ROC curve: the probability that a random positive outscores a random
/// negative, ties counting one half.
pub fn auroc(preds: &ProbPredictionSet) -> Result<f64> {
    let scores: Vec<f64> = preds.items.iter().map(|p| p.probability).collect();
    let labels: Vec<bool> = preds.items.iter().map(|p| p.label).collect();
    auroc_scores(&scores, &labels)
}

/// [`auroc`] for arbitrary real scores.
///
/// Concordant pairs are counted in half-units as integers, so the result is the exact
/// ratio rounded once.
pub fn auroc_scores(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EvalError::UndefinedMetric("NaN score".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count() as u64;
    let negatives = labels.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::UndefinedMetric(
            "AUROC needs at least one positive and one negative label".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Walk groups of equal score in ascending order.
    let mut half_units: u64 = 0;
    let mut negatives_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let mut j = i;
        let (mut pos, mut neg) = (0u64, 0u64);
        while j < order.len() && scores[order[j]].total_cmp(&s) == Ordering::Equal {
            if labels[order[j]] {
                pos += 1;
            } else {
                neg += 1;
            }
            j += 1;
        }
        half_units += pos * (2 * negatives_below + neg);
        negatives_below += neg;
        i = j;
    }
    Ok(half_units as f64 / (2 * positives * negatives) as f64)
}

/// Neumaier-compensated sum.
pub(crate) fn stable_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Mean absolute gap between observed event rate and mean prediction over `n_bins`
/// equal-count bins of ascending predicted probability, weighted by bin size.
///
/// With `N` predictions bin `b` holds sorted positions `[b·N/n_bins, (b+1)·N/n_bins)`;
/// empty bins (when `n_bins > N`) are skipped.
pub fn calibration_eavg(preds: &ProbPredictionSet, n_bins: usize) -> Result<f64> {
    if n_bins == 0 {
        return Err(EvalError::UndefinedMetric(
            "n_bins must be at least 1".into(),
        ));
    }
    if preds.is_empty() {
        return Err(EvalError::UndefinedMetric("no predictions".into()));
    }
    let mut sorted = preds.items.clone();
    sorted.sort_by(|a, b| a.probability.total_cmp(&b.probability));
    let n = sorted.len();
    let weighted_gaps = (0..n_bins).filter_map(|b| {
        let bin = &sorted[b * n / n_bins..(b + 1) * n / n_bins];
        if bin.is_empty() {
            return None;
        }
        let size = bin.len() as f64;
        let observed = bin.iter().filter(|p| p.label).count() as f64 / size;
        let predicted = stable_sum(bin.iter().map(|p| p.probability)) / size;
        Some(size * (observed - predicted).abs())
    });
    Ok(stable_sum(weighted_gaps) / n as f64)
}
