//! Cropped-word recognition scoring: word accuracy and total edit distance
//! per subset.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::e2e::{balanced_average, fmt_real};
use crate::error::{Error, Result, Violation};
use crate::model::{normalize_transcription, EvalConfig};
use crate::vocab::{CroppedWordRecord, SubsetLabel};

/// Unit-cost Levenshtein distance over Unicode codepoints.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (short, long) = if a.len() <= b.len() { (&a, &b) } else { (&b, &a) };
    if short.is_empty() {
        return long.len();
    }
    let mut row: Vec<usize> = (0..=short.len()).collect();
    for (i, &lc) in long.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &sc) in short.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = (diag + usize::from(lc != sc)).min(above + 1).min(row[j] + 1);
            diag = above;
        }
    }
    row[short.len()]
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RecognitionSubmission {
    pub predictions: BTreeMap<String, String>,
}

pub fn parse_rec_submission(text: &str, source_name: &str) -> Result<RecognitionSubmission> {
    #[derive(Deserialize)]
    struct Raw {
        word_id: String,
        prediction: String,
    }
    let mut sub = RecognitionSubmission::default();
    let mut violations = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = if i == 0 { line.trim_start_matches('\u{feff}') } else { line };
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Raw>(line) {
            Ok(r) => {
                if sub.predictions.insert(r.word_id.clone(), r.prediction).is_some() {
                    violations.push(Violation::new(i + 1, "word_id", format!("duplicate {:?}", r.word_id)));
                }
            }
            Err(e) => violations.push(Violation::new(i + 1, "", e.to_string())),
        }
    }
    if violations.is_empty() {
        Ok(sub)
    } else {
        Err(Error::Schema { source_name: source_name.into(), violations })
    }
}

pub fn read_rec_submission(path: &Path) -> Result<RecognitionSubmission> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rec_submission(&text, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecognitionMetrics {
    pub word_accuracy: f64,
    pub total_edit_distance: usize,
    pub n_words: usize,
    pub correct: usize,
}

impl RecognitionMetrics {
    /// Accuracy of an empty subset is 1.
    fn from_totals(n_words: usize, correct: usize, total_edit_distance: usize) -> Self {
        let word_accuracy = if n_words == 0 { 1.0 } else { correct as f64 / n_words as f64 };
        Self { word_accuracy, total_edit_distance, n_words, correct }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecReport {
    pub metrics_iv: RecognitionMetrics,
    pub metrics_oov: RecognitionMetrics,
    pub total_word_accuracy: f64,
}

impl RecReport {
    pub fn total_edit_distance(&self) -> usize {
        self.metrics_iv.total_edit_distance + self.metrics_oov.total_edit_distance
    }

    pub fn to_json(&self, percent: bool) -> Value {
        let sub = |m: &RecognitionMetrics| {
            json!({
                "n_words": m.n_words,
                "correct": m.correct,
                "word_accuracy": fmt_real(m.word_accuracy, percent),
                "total_edit_distance": m.total_edit_distance,
            })
        };
        json!({
            "task": "recognition",
            "words": self.metrics_iv.n_words + self.metrics_oov.n_words,
            "total_word_accuracy": fmt_real(self.total_word_accuracy, percent),
            "iv": sub(&self.metrics_iv),
            "oov": sub(&self.metrics_oov),
        })
    }
}

/// Per-word scoring result, in ground-truth order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WordOutcome {
    pub word_id: String,
    pub subset: SubsetLabel,
    pub correct: bool,
    pub edit_distance: usize,
}

/// Scores every ground-truth word. Unknown prediction ids always fail;
/// missing predictions count as empty strings unless `strict`.
pub fn score_words(gt: &[CroppedWordRecord], sub: &RecognitionSubmission, cfg: &EvalConfig, strict: bool) -> Result<Vec<WordOutcome>> {
    let known: HashSet<&str> = gt.iter().map(|r| r.word_id.as_str()).collect();
    let unknown: Vec<String> = sub.predictions.keys().filter(|k| !known.contains(k.as_str())).cloned().collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownIds(unknown));
    }
    if strict {
        let missing: Vec<String> =
            gt.iter().filter(|r| !sub.predictions.contains_key(&r.word_id)).map(|r| r.word_id.clone()).collect();
        if !missing.is_empty() {
            return Err(Error::MissingPredictions(missing));
        }
    }
    Ok(gt
        .par_iter()
        .map(|r| {
            let truth = normalize_transcription(&r.transcription, cfg);
            let pred = normalize_transcription(sub.predictions.get(&r.word_id).map(String::as_str).unwrap_or(""), cfg);
            let edit_distance = if pred == truth { 0 } else { edit_distance(&pred, &truth) };
            WordOutcome { word_id: r.word_id.clone(), subset: r.subset, correct: pred == truth, edit_distance }
        })
        .collect())
}

pub fn report_from_outcomes(outcomes: &[WordOutcome]) -> RecReport {
    let tally = |s: SubsetLabel| {
        let (n, c, ed) = outcomes
            .iter()
            .filter(|o| o.subset == s)
            .fold((0, 0, 0), |(n, c, ed), o| (n + 1, c + usize::from(o.correct), ed + o.edit_distance));
        RecognitionMetrics::from_totals(n, c, ed)
    };
    let metrics_iv = tally(SubsetLabel::IV);
    let metrics_oov = tally(SubsetLabel::OOV);
    RecReport { total_word_accuracy: balanced_average(metrics_iv.word_accuracy, metrics_oov.word_accuracy), metrics_iv, metrics_oov }
}

pub fn score_submission(gt: &[CroppedWordRecord], sub: &RecognitionSubmission, cfg: &EvalConfig, strict: bool) -> Result<RecReport> {
    Ok(report_from_outcomes(&score_words(gt, sub, cfg, strict)?))
}

/// Orders named reports by total word accuracy (best first), then by total
/// edit distance (lowest first).
pub fn rank_reports<T>(reports: &mut [(T, RecReport)]) {
    reports.sort_by(|a, b| {
        b.1.total_word_accuracy
            .total_cmp(&a.1.total_word_accuracy)
            .then(a.1.total_edit_distance().cmp(&b.1.total_edit_distance()))
    });
}
