//! End-to-end (detection + recognition) evaluation.
//!
//! Detections are matched one-to-one to care ground truth in two greedy
//! passes over pairs clearing the IoU threshold: first pairs whose
//! transcriptions agree, then the remainder regardless of transcription.
//! Unmatched detections lying mostly inside a don't-care region are
//! suppressed. Counting then conditions on the IV/OOV subset of each ground
//! truth, treating the opposite subset as don't-care, while false positives
//! stay identical across modes.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result, Violation};
use crate::geometry::{self, BBox};
use crate::ingest::Corpus;
use crate::model::{effective_dontcare, normalize_transcription, EvalConfig, Point2D, Polygon, Split, TextInstance};
use crate::vocab::{instance_subsets, SubsetLabel, Vocabulary};

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub polygon: Polygon,
    pub transcription: String,
    /// Accepted but not used for scoring.
    pub confidence: Option<f64>,
}

impl Detection {
    pub fn new(polygon: Polygon, transcription: impl Into<String>, confidence: Option<f64>) -> Result<Self> {
        if geometry::polygon_area(&polygon) == 0.0 {
            return Err(Error::Degenerate("detection polygon has zero area"));
        }
        Ok(Self { polygon, transcription: transcription.into(), confidence })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub det_index: usize,
    pub gt_index: usize,
    pub iou: f64,
    pub transcription_correct: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchLedger {
    pub pairs: Vec<MatchPair>,
    pub suppressed_dets: Vec<usize>,
    pub unmatched_dets: Vec<usize>,
    /// Care ground truth not taking part in any pair.
    pub unmatched_gts: Vec<usize>,
}

impl MatchLedger {
    pub fn correct_pairs(&self) -> impl Iterator<Item = &MatchPair> {
        self.pairs.iter().filter(|p| p.transcription_correct)
    }
}

/// Ledger of one image, as written by the ledger dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageLedger {
    pub image_id: String,
    #[serde(flatten)]
    pub ledger: MatchLedger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    All,
    IV,
    OOV,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::All, Mode::IV, Mode::OOV];

    fn admits(self, subset: SubsetLabel) -> bool {
        match self {
            Mode::All => true,
            Mode::IV => subset == SubsetLabel::IV,
            Mode::OOV => subset == SubsetLabel::OOV,
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Mode::All => "all",
            Mode::IV => "iv",
            Mode::OOV => "oov",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::All => "All",
            Mode::IV => "IV",
            Mode::OOV => "OOV",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl std::ops::Add for EvalCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { tp: self.tp + o.tp, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_ }
    }
}

impl std::iter::Sum for EvalCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsetMetrics {
    pub precision: f64,
    pub recall: f64,
    pub hmean: f64,
}

impl SubsetMetrics {
    /// Precision is 1 with nothing to count on the detection side, recall is
    /// 1 with nothing to count on the ground-truth side.
    pub fn from_counts(c: EvalCounts) -> Self {
        let precision = if c.tp + c.fp == 0 { 1.0 } else { c.tp as f64 / (c.tp + c.fp) as f64 };
        let recall = if c.tp + c.fn_ == 0 { 1.0 } else { c.tp as f64 / (c.tp + c.fn_) as f64 };
        Self { precision, recall, hmean: hmean(precision, recall) }
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn hmean(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Unweighted mean of the IV and OOV scores.
pub fn balanced_average(iv: f64, oov: f64) -> f64 {
    (iv + oov) / 2.0
}

struct Candidate {
    det: usize,
    gt: usize,
    iou: f64,
    same_text: bool,
}

fn take_greedy(cands: &mut [&Candidate], det_used: &mut [bool], gt_used: &mut [bool], correct: bool, out: &mut Vec<MatchPair>) {
    cands.sort_by(|a, b| b.iou.total_cmp(&a.iou).then(a.gt.cmp(&b.gt)).then(a.det.cmp(&b.det)));
    for c in cands.iter() {
        if !det_used[c.det] && !gt_used[c.gt] {
            det_used[c.det] = true;
            gt_used[c.gt] = true;
            out.push(MatchPair { det_index: c.det, gt_index: c.gt, iou: c.iou, transcription_correct: correct });
        }
    }
}

/// One-to-one matching of detections to the care ground truth of one image.
pub fn match_image(gts: &[TextInstance], dets: &[Detection], cfg: &EvalConfig) -> Result<MatchLedger> {
    let mut ids = HashSet::with_capacity(gts.len());
    for g in gts {
        if !ids.insert(g.instance_id.as_str()) {
            return Err(Error::DuplicateInstance { image_id: String::new(), instance_id: g.instance_id.clone() });
        }
    }
    let care: Vec<bool> = gts.iter().map(|g| !effective_dontcare(g, cfg)).collect();
    let gt_text: Vec<Option<String>> = gts
        .iter()
        .zip(&care)
        .map(|(g, &c)| if c { g.transcription.as_deref().map(|t| normalize_transcription(t, cfg)) } else { None })
        .collect();
    let gt_box: Vec<BBox> = gts.iter().map(|g| g.polygon.bbox()).collect();
    let gt_area: Vec<f64> = gts.iter().map(|g| geometry::polygon_area(&g.polygon)).collect();
    let det_box: Vec<BBox> = dets.iter().map(|d| d.polygon.bbox()).collect();
    let det_text: Vec<String> = dets.iter().map(|d| normalize_transcription(&d.transcription, cfg)).collect();

    let mut candidates = Vec::new();
    for (di, d) in dets.iter().enumerate() {
        for gi in 0..gts.len() {
            if !care[gi] || gt_area[gi] == 0.0 || !det_box[di].overlaps(&gt_box[gi]) {
                continue;
            }
            let s = geometry::overlap_scores(&d.polygon, &gts[gi].polygon)?;
            if cfg.clears_iou(s.iou) {
                let same_text = gt_text[gi].as_deref() == Some(det_text[di].as_str());
                candidates.push(Candidate { det: di, gt: gi, iou: s.iou, same_text });
            }
        }
    }

    let mut det_used = vec![false; dets.len()];
    let mut gt_used = vec![false; gts.len()];
    let mut pairs = Vec::new();
    let mut pass1: Vec<&Candidate> = candidates.iter().filter(|c| c.same_text).collect();
    take_greedy(&mut pass1, &mut det_used, &mut gt_used, true, &mut pairs);
    let mut pass2: Vec<&Candidate> = candidates.iter().filter(|c| !det_used[c.det] && !gt_used[c.gt]).collect();
    take_greedy(&mut pass2, &mut det_used, &mut gt_used, false, &mut pairs);

    let dontcare: Vec<usize> = (0..gts.len()).filter(|&g| !care[g] && gt_area[g] > 0.0).collect();
    let mut suppressed_dets = Vec::new();
    let mut unmatched_dets = Vec::new();
    for (di, d) in dets.iter().enumerate() {
        if det_used[di] {
            continue;
        }
        let mut suppressed = false;
        for &g in &dontcare {
            if det_box[di].overlaps(&gt_box[g])
                && geometry::overlap_scores(&d.polygon, &gts[g].polygon)?.inter_over_det > cfg.dontcare_overlap_threshold
            {
                suppressed = true;
                break;
            }
        }
        if suppressed {
            suppressed_dets.push(di);
        } else {
            unmatched_dets.push(di);
        }
    }
    let unmatched_gts = (0..gts.len()).filter(|&g| care[g] && !gt_used[g]).collect();
    Ok(MatchLedger { pairs, suppressed_dets, unmatched_dets, unmatched_gts })
}

/// Counts for one subset mode. `subsets[g]` is `None` for don't-care ground truth.
pub fn count_mode(ledger: &MatchLedger, subsets: &[Option<SubsetLabel>], mode: Mode) -> EvalCounts {
    let mut correct = vec![false; subsets.len()];
    for p in ledger.correct_pairs() {
        correct[p.gt_index] = true;
    }
    let tp = ledger.correct_pairs().filter(|p| subsets[p.gt_index].is_some_and(|s| mode.admits(s))).count();
    let fn_ = subsets
        .iter()
        .zip(&correct)
        .filter(|(s, &c)| !c && s.is_some_and(|s| mode.admits(s)))
        .count();
    let fp = ledger.pairs.iter().filter(|p| !p.transcription_correct).count() + ledger.unmatched_dets.len();
    EvalCounts { tp, fp, fn_ }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeCounts {
    pub all: EvalCounts,
    pub iv: EvalCounts,
    pub oov: EvalCounts,
}

impl ModeCounts {
    pub fn of(ledger: &MatchLedger, subsets: &[Option<SubsetLabel>]) -> Self {
        Self {
            all: count_mode(ledger, subsets, Mode::All),
            iv: count_mode(ledger, subsets, Mode::IV),
            oov: count_mode(ledger, subsets, Mode::OOV),
        }
    }

    pub fn get(&self, mode: Mode) -> EvalCounts {
        match mode {
            Mode::All => self.all,
            Mode::IV => self.iv,
            Mode::OOV => self.oov,
        }
    }
}

impl std::ops::Add for ModeCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { all: self.all + o.all, iv: self.iv + o.iv, oov: self.oov + o.oov }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct E2EReport {
    pub images: usize,
    pub counts: ModeCounts,
    pub metrics_all: SubsetMetrics,
    pub metrics_iv: SubsetMetrics,
    pub metrics_oov: SubsetMetrics,
    pub average_hmean: f64,
}

impl E2EReport {
    /// Micro-aggregated metrics from corpus-level counts.
    pub fn from_counts(images: usize, counts: ModeCounts) -> Self {
        let metrics_all = SubsetMetrics::from_counts(counts.all);
        let metrics_iv = SubsetMetrics::from_counts(counts.iv);
        let metrics_oov = SubsetMetrics::from_counts(counts.oov);
        Self {
            images,
            counts,
            metrics_all,
            metrics_iv,
            metrics_oov,
            average_hmean: balanced_average(metrics_iv.hmean, metrics_oov.hmean),
        }
    }

    pub fn metrics(&self, mode: Mode) -> SubsetMetrics {
        match mode {
            Mode::All => self.metrics_all,
            Mode::IV => self.metrics_iv,
            Mode::OOV => self.metrics_oov,
        }
    }

    /// Report document. Reals are fractions rounded to 6 decimals, or
    /// percentages rounded to 2 decimals when `percent` is set.
    pub fn to_json(&self, percent: bool) -> Value {
        let fmt = |x: f64| fmt_real(x, percent);
        let mut doc = serde_json::Map::new();
        doc.insert("task".into(), json!("end-to-end"));
        doc.insert("images".into(), json!(self.images));
        doc.insert("average_hmean".into(), fmt(self.average_hmean));
        for mode in Mode::ALL {
            let c = self.counts.get(mode);
            let m = self.metrics(mode);
            doc.insert(
                mode.key().into(),
                json!({
                    "tp": c.tp, "fp": c.fp, "fn": c.fn_,
                    "precision": fmt(m.precision), "recall": fmt(m.recall), "hmean": fmt(m.hmean),
                }),
            );
        }
        Value::Object(doc)
    }
}

/// Rounds a fraction for reports.
pub fn fmt_real(x: f64, percent: bool) -> Value {
    let v = if percent { (x * 100.0 * 100.0).round() / 100.0 } else { (x * 1e6).round() / 1e6 };
    json!(v)
}

/// A parsed Task 1 submission: detections per image id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Submission {
    pub images: BTreeMap<String, Vec<Detection>>,
}

pub fn parse_submission(text: &str, source_name: &str) -> Result<Submission> {
    #[derive(Deserialize)]
    struct RawDet {
        polygon: Vec<[f64; 2]>,
        transcription: String,
        #[serde(default)]
        confidence: Option<f64>,
    }
    #[derive(Deserialize)]
    struct RawImage {
        image_id: String,
        detections: Vec<RawDet>,
    }
    let mut sub = Submission::default();
    let mut violations = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = if i == 0 { line.trim_start_matches('\u{feff}') } else { line };
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawImage = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                violations.push(Violation::new(line_no, "", e.to_string()));
                continue;
            }
        };
        let mut dets = Vec::with_capacity(raw.detections.len());
        for (k, d) in raw.detections.into_iter().enumerate() {
            let path = format!("detections[{k}].polygon");
            let det = Polygon::new(d.polygon.iter().map(|p| Point2D::new(p[0], p[1])).collect())
                .and_then(|p| Detection::new(p, d.transcription, d.confidence));
            match det {
                Ok(det) => dets.push(det),
                Err(e) => violations.push(Violation::new(line_no, path, e.to_string())),
            }
        }
        if sub.images.insert(raw.image_id.clone(), dets).is_some() {
            violations.push(Violation::new(line_no, "image_id", format!("duplicate {:?}", raw.image_id)));
        }
    }
    if violations.is_empty() {
        Ok(sub)
    } else {
        Err(Error::Schema { source_name: source_name.into(), violations })
    }
}

pub fn read_submission(path: &Path) -> Result<Submission> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_submission(&text, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct E2EEvaluation {
    pub report: E2EReport,
    pub ledgers: Vec<ImageLedger>,
}

/// Evaluates a submission against the images of `split`. Images absent from
/// the submission are scored with no detections; unknown image ids fail.
pub fn evaluate(corpus: &Corpus, split: Split, vocab: &Vocabulary, submission: &Submission, cfg: &EvalConfig) -> Result<E2EEvaluation> {
    let unknown: Vec<String> = submission
        .images
        .keys()
        .filter(|id| corpus.get(id).is_none_or(|img| img.split != split))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownIds(unknown));
    }
    let images: Vec<_> = corpus.split(split).collect();
    let per_image: Vec<(ImageLedger, ModeCounts)> = images
        .par_iter()
        .map(|img| {
            let dets = submission.images.get(&img.image_id).map(Vec::as_slice).unwrap_or(&[]);
            let ledger = match_image(&img.instances, dets, cfg).map_err(|e| match e {
                Error::DuplicateInstance { instance_id, .. } => Error::DuplicateInstance { image_id: img.image_id.clone(), instance_id },
                other => other,
            })?;
            let counts = ModeCounts::of(&ledger, &instance_subsets(img, vocab, cfg));
            Ok((ImageLedger { image_id: img.image_id.clone(), ledger }, counts))
        })
        .collect::<Result<_>>()?;
    let counts = per_image.iter().fold(ModeCounts::default(), |acc, (_, c)| acc + *c);
    Ok(E2EEvaluation {
        report: E2EReport::from_counts(images.len(), counts),
        ledgers: per_image.into_iter().map(|(l, _)| l).collect(),
    })
}

pub fn parse_ledgers(text: &str, source_name: &str) -> Result<Vec<ImageLedger>> {
    let mut out = Vec::new();
    let mut violations = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(l) => out.push(l),
            Err(e) => violations.push(Violation::new(i + 1, "", e.to_string())),
        }
    }
    if violations.is_empty() {
        Ok(out)
    } else {
        Err(Error::Schema { source_name: source_name.into(), violations })
    }
}

/// Orders named reports by average Hmean, best first; ties keep input order.
pub fn rank_reports<T>(reports: &mut [(T, E2EReport)]) {
    reports.sort_by(|a, b| b.1.average_hmean.total_cmp(&a.1.average_hmean));
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt(id: usize, x: f64, t: &str) -> TextInstance {
        TextInstance::new(Polygon::from_box(x, 0., 10., 10.).unwrap(), Some(t.into()), true, "d", id.to_string())
    }

    fn det(x: f64, w: f64, t: &str) -> Detection {
        Detection::new(Polygon::from_box(x, 0., w, 10.).unwrap(), t, None).unwrap()
    }

    /// Detection spanning `[0, w]` against a GT spanning `[0, 10]`: IoU = w/10 for w ≤ 10.
    fn det_with_iou(iou: f64, t: &str) -> Detection {
        det(0.0, 10.0 * iou, t)
    }

    #[test]
    fn single_correct_match() {
        let cfg = EvalConfig::default();
        let l = match_image(&[gt(0, 0., "stop")], &[det_with_iou(0.8, "stop")], &cfg).unwrap();
        assert_eq!(l.pairs.len(), 1);
        assert!(l.pairs[0].transcription_correct);
        assert!((l.pairs[0].iou - 0.8).abs() < 1e-12);
    }

    #[test]
    fn below_threshold_is_fp_and_fn() {
        let cfg = EvalConfig::default();
        let l = match_image(&[gt(0, 0., "stop")], &[det_with_iou(0.4, "stop")], &cfg).unwrap();
        assert!(l.pairs.is_empty());
        assert_eq!(l.unmatched_dets, [0]);
        assert_eq!(l.unmatched_gts, [0]);
        let c = count_mode(&l, &[Some(SubsetLabel::IV)], Mode::All);
        assert_eq!(c, EvalCounts { tp: 0, fp: 1, fn_: 1 });
    }

    #[test]
    fn exactly_half_iou_does_not_match() {
        let cfg = EvalConfig::default();
        let l = match_image(&[gt(0, 0., "stop")], &[det_with_iou(0.5, "stop")], &cfg).unwrap();
        assert!(l.pairs.is_empty());
        let inclusive = EvalConfig { threshold_inclusive: true, ..cfg };
        assert_eq!(match_image(&[gt(0, 0., "stop")], &[det_with_iou(0.5, "stop")], &inclusive).unwrap().pairs.len(), 1);
    }

    #[test]
    fn transcription_pass_wins_over_higher_iou() {
        let cfg = EvalConfig::default();
        // det0 spans [0, 10]; a GT shifted by x has IoU (10 - x) / (10 + x).
        let gts = [gt(0, 10.0 / 19.0, "cat"), gt(1, 2.5, "car")];
        let dets = [det(0.0, 10.0, "car")];
        let l = match_image(&gts, &dets, &cfg).unwrap();
        assert_eq!(l.pairs.len(), 1);
        assert_eq!((l.pairs[0].gt_index, l.pairs[0].transcription_correct), (1, true));
        assert!((l.pairs[0].iou - 0.6).abs() < 1e-12);
        assert_eq!(l.unmatched_gts, [0]);
    }

    #[test]
    fn wrong_transcription_pairs_in_second_pass() {
        let cfg = EvalConfig::default();
        let l = match_image(&[gt(0, 0., "stop")], &[det_with_iou(0.9, "shop")], &cfg).unwrap();
        assert_eq!(l.pairs.len(), 1);
        assert!(!l.pairs[0].transcription_correct);
        assert!(l.unmatched_gts.is_empty());
        let iv = [Some(SubsetLabel::IV)];
        assert_eq!(count_mode(&l, &iv, Mode::All), EvalCounts { tp: 0, fp: 1, fn_: 1 });
        assert_eq!(count_mode(&l, &iv, Mode::IV), EvalCounts { tp: 0, fp: 1, fn_: 1 });
        assert_eq!(count_mode(&l, &iv, Mode::OOV), EvalCounts { tp: 0, fp: 1, fn_: 0 });
    }

    #[test]
    fn dontcare_suppression_uses_detection_area() {
        let cfg = EvalConfig::default();
        let big = TextInstance::new(Polygon::from_box(0., 0., 100., 100.).unwrap(), None, false, "d", "0");
        // Small detection inside: IoU 0.01 but fully covered.
        let l = match_image(std::slice::from_ref(&big), &[det(10., 10., "x")], &cfg).unwrap();
        assert_eq!(l.suppressed_dets, [0]);
        assert!(l.unmatched_dets.is_empty());
        assert_eq!(count_mode(&l, &[None], Mode::All), EvalCounts::default());
        // Out-of-alphabet GT is don't-care as well.
        let foreign = TextInstance::new(Polygon::from_box(0., 0., 10., 10.).unwrap(), Some("日本".into()), true, "d", "0");
        let l = match_image(&[foreign], &[det(0., 10., "日本")], &cfg).unwrap();
        assert!(l.pairs.is_empty());
        assert_eq!(l.suppressed_dets, [0]);
    }

    #[test]
    fn duplicate_instance_ids_fail() {
        let cfg = EvalConfig::default();
        assert!(matches!(match_image(&[gt(0, 0., "a"), gt(0, 20., "b")], &[], &cfg), Err(Error::DuplicateInstance { .. })));
    }

    #[test]
    fn subset_modes() {
        let cfg = EvalConfig::default();
        let gts = [gt(0, 0., "iv"), gt(1, 20., "oov")];
        let dets = [det(0., 10., "iv"), det(20., 10., "oov")];
        let l = match_image(&gts, &dets, &cfg).unwrap();
        let all_iv = [Some(SubsetLabel::IV), Some(SubsetLabel::IV)];
        assert_eq!(count_mode(&l, &all_iv, Mode::OOV), EvalCounts { tp: 0, fp: 0, fn_: 0 });
        let mixed = [Some(SubsetLabel::IV), Some(SubsetLabel::OOV)];
        assert_eq!(count_mode(&l, &mixed, Mode::OOV), EvalCounts { tp: 1, fp: 0, fn_: 0 });
        assert_eq!(count_mode(&l, &mixed, Mode::All), EvalCounts { tp: 2, fp: 0, fn_: 0 });
    }

    #[test]
    fn hmean_values() {
        assert!((hmean(0.6717, 0.5204) - 0.5864).abs() < 5e-5);
        assert!((hmean(0.758, 0.306) - 0.436).abs() < 5e-4);
        assert_eq!(hmean(0.0, 0.0), 0.0);
        assert!((balanced_average(0.5788, 0.2690) - 0.4239).abs() < 5e-5);
    }

    #[test]
    fn degenerate_report() {
        let r = E2EReport::from_counts(0, ModeCounts::default());
        for m in Mode::ALL {
            assert_eq!(r.metrics(m), SubsetMetrics { precision: 1.0, recall: 1.0, hmean: 1.0 });
        }
        assert_eq!(r.average_hmean, 1.0);
    }

    #[test]
    fn report_rounds_to_six_decimals() {
        let c = EvalCounts { tp: 1, fp: 2, fn_: 0 };
        let r = E2EReport::from_counts(1, ModeCounts { all: c, iv: c, oov: c });
        let doc = r.to_json(false);
        assert_eq!(doc["all"]["precision"], json!(0.333333));
        assert_eq!(r.to_json(true)["all"]["precision"], json!(33.33));
        assert_eq!(doc["all"]["fn"], json!(0));
    }

    #[test]
    fn submission_parsing() {
        let ok = r#"{"image_id":"a","detections":[{"polygon":[[0,0],[1,0],[1,1],[0,1]],"transcription":"x","confidence":0.9}]}"#;
        let s = parse_submission(ok, "mem").unwrap();
        assert_eq!(s.images["a"][0].confidence, Some(0.9));
        let flat = r#"{"image_id":"a","detections":[{"polygon":[[0,0],[1,0],[2,0]],"transcription":"x"}]}"#;
        assert!(parse_submission(flat, "mem").is_err());
        assert!(parse_submission(&format!("{ok}\n{ok}"), "mem").is_err());
    }

    #[test]
    fn ledger_json_roundtrip() {
        let cfg = EvalConfig::default();
        let ledger = match_image(&[gt(0, 0., "a")], &[det(0., 9., "a"), det(50., 5., "b")], &cfg).unwrap();
        let il = ImageLedger { image_id: "img".into(), ledger };
        let line = serde_json::to_string(&il).unwrap();
        assert_eq!(parse_ledgers(&line, "mem").unwrap(), vec![il]);
    }
}
