//! Aggregated score reports across diagnostic splits.

use super::{aggregate, recall_by_type, score_sample, MatchCounts, ScoreError, Segmenter};
use crate::edit::{EditSet, ErrorType, Paragraph};
use crate::Split;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Precision / recall / F1 triple; zero when a denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Prf {
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf { precision, recall, f1 }
    }
}

/// Recalled/total tally for one error type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TypeTally {
    pub recalled: usize,
    pub total: usize,
}

impl TypeTally {
    pub fn recall(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.recalled as f64 / self.total as f64
        }
    }
}

/// Predicted edit and character totals backing a split's edit rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EditRateTally {
    pub edits: usize,
    pub chars: usize,
}

impl EditRateTally {
    /// Edits per 100 characters, micro-aggregated over the split.
    pub fn per_100_chars(&self) -> f64 {
        if self.chars == 0 {
            0.0
        } else {
            100.0 * self.edits as f64 / self.chars as f64
        }
    }
}

/// Detection and correction scores for one split.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SplitScores {
    pub n: usize,
    pub detection: Prf,
    pub correction: Prf,
}

/// The full evaluation report: overall and per-split P/R/F1 for detection and
/// correction, per-type recall, per-split edit rates and the false-positive
/// count on the error-free split.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreReport {
    pub overall: SplitScores,
    pub splits: BTreeMap<Split, SplitScores>,
    pub recall_by_type: BTreeMap<ErrorType, TypeTally>,
    pub edit_rates: BTreeMap<Split, EditRateTally>,
    pub error_free_false_positives: usize,
}

/// Accumulates per-sample counts into a [`ScoreReport`].
///
/// Aggregation is micro everywhere: counts are summed within each split and
/// over the whole corpus, then turned into ratios once.
#[derive(Default)]
pub struct ReportBuilder {
    overall: MatchCounts,
    n_overall: usize,
    per_split: BTreeMap<Split, (MatchCounts, usize)>,
    recall: BTreeMap<ErrorType, TypeTally>,
    rates: BTreeMap<Split, EditRateTally>,
    error_free_fp: usize,
}

impl ReportBuilder {
    pub fn new() -> Self {
        ReportBuilder::default()
    }

    pub fn add_sample(
        &mut self,
        split: Split,
        gold: &EditSet,
        pred: &EditSet,
        text: &Paragraph,
        segmenter: &dyn Segmenter,
    ) -> Result<(), ScoreError> {
        let counts = score_sample(gold, pred, text, segmenter)?;
        let typed = recall_by_type(gold, pred, text, segmenter)?;
        self.overall = self.overall.merge(counts);
        self.n_overall += 1;
        let entry = self.per_split.entry(split).or_default();
        entry.0 = entry.0.merge(counts);
        entry.1 += 1;
        for (t, tally) in typed {
            let agg = self.recall.entry(t).or_default();
            agg.recalled += tally.recalled;
            agg.total += tally.total;
        }
        let rate = self.rates.entry(split).or_default();
        rate.edits += pred.len();
        rate.chars += text.char_len();
        if split == Split::ErrorFree {
            self.error_free_fp += counts.det_fp;
        }
        Ok(())
    }

    pub fn finish(self) -> ScoreReport {
        let (detection, correction) = aggregate([self.overall]);
        let overall = SplitScores { n: self.n_overall, detection, correction };
        let splits = self
            .per_split
            .into_iter()
            .map(|(split, (counts, n))| {
                let (detection, correction) = aggregate([counts]);
                (split, SplitScores { n, detection, correction })
            })
            .collect();
        ScoreReport {
            overall,
            splits,
            recall_by_type: self.recall,
            edit_rates: self.rates,
            error_free_false_positives: self.error_free_fp,
        }
    }
}
