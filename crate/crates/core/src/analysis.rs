//! Diagnostic analyses over evaluation outcomes and corpora: success rate by
//! word length, by regex-defined word category, spatial heatmaps of text
//! centroids, words-per-image histograms and OOV word-length histograms.
//!
//! Every table is emitted as comma-separated text with a header row.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use regex::Regex;
use serde::Serialize;

use crate::e2e::ImageLedger;
use crate::error::{Error, Result};
use crate::geometry;
use crate::ingest::Corpus;
use crate::model::{EvalConfig, ImageAnnotation, Point2D};
use crate::rec::WordOutcome;
use crate::vocab::{care_word, instance_subsets, CroppedWordRecord, SubsetLabel, Vocabulary};

/// Success or failure on one care word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Outcome {
    pub word: String,
    pub dataset: String,
    pub subset: SubsetLabel,
    pub success: bool,
}

const SUBSETS: [SubsetLabel; 2] = [SubsetLabel::IV, SubsetLabel::OOV];

/// Outcomes for every care ground-truth word of the ledgered images: success
/// means the word was in a transcription-correct pair.
pub fn outcomes_from_ledgers(
    corpus: &Corpus,
    ledgers: &[ImageLedger],
    vocab: &Vocabulary,
    cfg: &EvalConfig,
    dataset: Option<&str>,
) -> Result<Vec<Outcome>> {
    let mut out = Vec::new();
    let mut unknown = Vec::new();
    for l in ledgers {
        let Some(img) = corpus.get(&l.image_id) else {
            unknown.push(l.image_id.clone());
            continue;
        };
        if dataset.is_some_and(|d| d != img.dataset) {
            continue;
        }
        let mut hit = vec![false; img.instances.len()];
        for p in l.ledger.correct_pairs() {
            if let Some(h) = hit.get_mut(p.gt_index) {
                *h = true;
            }
        }
        for ((inst, subset), success) in img.instances.iter().zip(instance_subsets(img, vocab, cfg)).zip(hit) {
            if let (Some(subset), Some(word)) = (subset, care_word(inst, cfg)) {
                out.push(Outcome { word, dataset: inst.dataset.clone(), subset, success });
            }
        }
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownIds(unknown));
    }
    Ok(out)
}

/// Joins recognition outcomes back to their ground-truth records.
pub fn outcomes_from_rec(gt: &[CroppedWordRecord], scored: &[WordOutcome], dataset: Option<&str>) -> Vec<Outcome> {
    let by_id: HashMap<&str, &WordOutcome> = scored.iter().map(|o| (o.word_id.as_str(), o)).collect();
    gt.iter()
        .filter(|r| dataset.is_none_or(|d| d == r.dataset))
        .filter_map(|r| {
            let o = by_id.get(r.word_id.as_str())?;
            Some(Outcome { word: r.transcription.clone(), dataset: r.dataset.clone(), subset: r.subset, success: o.correct })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthBucket {
    pub length: usize,
    pub subset: SubsetLabel,
    pub n: usize,
    pub successes: usize,
    /// `None` for an empty bucket.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthProfile {
    pub max_bucket: usize,
    pub buckets: Vec<LengthBucket>,
}

pub const MIN_LENGTH_BUCKET: usize = 2;

impl LengthProfile {
    pub fn bucket(&self, length: usize, subset: SubsetLabel) -> Option<&LengthBucket> {
        self.buckets.iter().find(|b| b.length == length && b.subset == subset)
    }

    pub fn total(&self) -> usize {
        self.buckets.iter().map(|b| b.n).sum()
    }
}

/// Mean success per (length, subset). Lengths above `max_bucket` fall in the
/// last bucket; words shorter than two characters are left out.
pub fn length_profile(outcomes: &[Outcome], max_bucket: usize) -> LengthProfile {
    let max_bucket = max_bucket.max(MIN_LENGTH_BUCKET);
    let mut tally: BTreeMap<(usize, SubsetLabel), (usize, usize)> = BTreeMap::new();
    for o in outcomes {
        let len = o.word.chars().count();
        if len < MIN_LENGTH_BUCKET {
            continue;
        }
        let e = tally.entry((len.min(max_bucket), o.subset)).or_default();
        e.0 += 1;
        e.1 += usize::from(o.success);
    }
    let buckets = (MIN_LENGTH_BUCKET..=max_bucket)
        .flat_map(|length| SUBSETS.map(|subset| (length, subset)))
        .map(|(length, subset)| {
            let (n, successes) = tally.get(&(length, subset)).copied().unwrap_or_default();
            LengthBucket { length, subset, n, successes, rate: (n > 0).then(|| successes as f64 / n as f64) }
        })
        .collect();
    LengthProfile { max_bucket, buckets }
}

#[derive(Debug, Clone)]
pub struct CategoryRule {
    pub name: String,
    pub pattern: String,
    pub priority: i64,
    regex: Regex,
}

impl CategoryRule {
    pub fn new(name: impl Into<String>, pattern: impl Into<String>, priority: i64) -> Result<Self> {
        let (name, pattern) = (name.into(), pattern.into());
        let regex = Regex::new(&pattern).map_err(|e| Error::Rule(format!("{name}: {e}")))?;
        Ok(Self { name, pattern, priority, regex })
    }

    pub fn is_match(&self, word: &str) -> bool {
        self.regex.is_match(word)
    }
}

/// Fallback category when no rule matches.
pub const OTHER: &str = "other";

/// Bundled rule set, in the rule-file format.
pub const DEFAULT_RULES: &str = include_str!("default_rules.tsv");

/// Rules ordered by ascending priority.
#[derive(Debug, Clone)]
pub struct CategoryRules {
    rules: Vec<CategoryRule>,
}

impl CategoryRules {
    pub fn new(mut rules: Vec<CategoryRule>) -> Result<Self> {
        rules.sort_by_key(|r| r.priority);
        if let Some(w) = rules.windows(2).find(|w| w[0].priority == w[1].priority) {
            return Err(Error::Rule(format!("rules {:?} and {:?} share priority {}", w[0].name, w[1].name, w[0].priority)));
        }
        Ok(Self { rules })
    }

    /// Parses `priority<TAB>name<TAB>pattern` lines; `#` lines are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut f = line.splitn(3, '\t');
            let (Some(p), Some(name), Some(pattern)) = (f.next(), f.next(), f.next()) else {
                return Err(Error::Rule(format!("line {}: expected priority, name and pattern separated by tabs", i + 1)));
            };
            let priority = p.trim().parse().map_err(|_| Error::Rule(format!("line {}: bad priority {p:?}", i + 1)))?;
            rules.push(CategoryRule::new(name.trim(), pattern, priority)?);
        }
        Self::new(rules)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn rules(&self) -> &[CategoryRule] {
        &self.rules
    }

    /// Category names in priority order, followed by the fallback.
    pub fn names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for r in &self.rules {
            if !names.contains(&r.name.as_str()) {
                names.push(&r.name);
            }
        }
        if !names.contains(&OTHER) {
            names.push(OTHER);
        }
        names
    }
}

impl Default for CategoryRules {
    fn default() -> Self {
        Self::parse(DEFAULT_RULES).expect("bundled rules are valid")
    }
}

pub fn categorize<'r>(word: &str, rules: &'r CategoryRules) -> &'r str {
    rules.rules.iter().find(|r| r.is_match(word)).map_or(OTHER, |r| r.name.as_str())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryRow {
    pub category: String,
    pub subset: SubsetLabel,
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
}

/// Success rate per (category, subset); empty rows are omitted.
pub fn category_accuracy(outcomes: &[Outcome], rules: &CategoryRules) -> Vec<CategoryRow> {
    let mut tally: HashMap<(&str, SubsetLabel), (usize, usize)> = HashMap::new();
    for o in outcomes {
        let e = tally.entry((categorize(&o.word, rules), o.subset)).or_default();
        e.0 += 1;
        e.1 += usize::from(o.success);
    }
    rules
        .names()
        .into_iter()
        .flat_map(|c| SUBSETS.map(|s| (c, s)))
        .filter_map(|(c, s)| {
            let &(n, correct) = tally.get(&(c, s))?;
            Some(CategoryRow { category: c.to_owned(), subset: s, n, correct, accuracy: correct as f64 / n as f64 })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpatialHeatmap {
    pub dataset: String,
    pub grid: usize,
    /// Row-major counts; row 0 is the top of the image.
    pub counts: Vec<u64>,
}

impl SpatialHeatmap {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn cell(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.grid + col]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in self.counts.chunks(self.grid.max(1)) {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }
}

fn anchor(img: &ImageAnnotation, i: usize) -> Point2D {
    let poly = &img.instances[i].polygon;
    geometry::centroid(poly).unwrap_or_else(|_| {
        let v = poly.vertices();
        let n = v.len() as f64;
        Point2D::new(v.iter().map(|p| p.x).sum::<f64>() / n, v.iter().map(|p| p.y).sum::<f64>() / n)
    })
}

fn cell_index(coord: f64, extent: u32, grid: usize) -> usize {
    let u = coord / f64::from(extent);
    ((u * grid as f64).floor().max(0.0) as usize).min(grid - 1)
}

/// Centroids of care instances binned on a `grid`×`grid` lattice over the
/// unit-normalized frame. Out-of-frame centroids land in border cells.
pub fn spatial_heatmap(corpus: &Corpus, dataset: Option<&str>, grid: usize, cfg: &EvalConfig) -> SpatialHeatmap {
    let grid = grid.max(1);
    let mut counts = vec![0u64; grid * grid];
    for img in corpus.images().iter().filter(|i| dataset.is_none_or(|d| d == i.dataset)) {
        for (i, inst) in img.instances.iter().enumerate() {
            if care_word(inst, cfg).is_none() {
                continue;
            }
            let c = anchor(img, i);
            counts[cell_index(c.y, img.height, grid) * grid + cell_index(c.x, img.width, grid)] += 1;
        }
    }
    SpatialHeatmap { dataset: dataset.unwrap_or("all").to_owned(), grid, counts }
}

pub const WORDS_PER_IMAGE_BINS: usize = 150;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WordCountHistogram {
    /// Images with no care words.
    pub zero: usize,
    /// `bins[k - 1]` counts images with exactly `k` care words, `k` in 1..=150.
    pub bins: Vec<usize>,
    /// Images with more than 150 care words.
    pub overflow: usize,
}

impl Default for WordCountHistogram {
    fn default() -> Self {
        Self { zero: 0, bins: vec![0; WORDS_PER_IMAGE_BINS], overflow: 0 }
    }
}

impl WordCountHistogram {
    pub fn add(&mut self, words: usize) {
        match words {
            0 => self.zero += 1,
            k if k <= WORDS_PER_IMAGE_BINS => self.bins[k - 1] += 1,
            _ => self.overflow += 1,
        }
    }

    pub fn images(&self) -> usize {
        self.zero + self.bins.iter().sum::<usize>() + self.overflow
    }
}

/// Care words per image, one histogram per dataset tag.
pub fn words_per_image_histogram(corpus: &Corpus, cfg: &EvalConfig) -> BTreeMap<String, WordCountHistogram> {
    let mut out: BTreeMap<String, WordCountHistogram> = BTreeMap::new();
    for img in corpus.images() {
        let n = img.instances.iter().filter(|t| care_word(t, cfg).is_some()).count();
        out.entry(img.dataset.clone()).or_default().add(n);
    }
    out
}

/// Counts of OOV words per (dataset, character length).
pub fn oov_length_histogram(crops: &[CroppedWordRecord]) -> BTreeMap<String, BTreeMap<usize, usize>> {
    let mut out: BTreeMap<String, BTreeMap<usize, usize>> = BTreeMap::new();
    for r in crops.iter().filter(|r| r.subset == SubsetLabel::OOV) {
        *out.entry(r.dataset.clone()).or_default().entry(r.transcription.chars().count()).or_insert(0) += 1;
    }
    out
}

// ---------------------------------------------------------------------------
// CSV rendering
// ---------------------------------------------------------------------------

fn rate(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

pub fn length_profile_csv(rows: &[(&str, &LengthProfile)]) -> String {
    let mut s = String::from("task,length,subset,n,successes,rate\n");
    for (task, p) in rows {
        for b in &p.buckets {
            let len = if b.length == p.max_bucket { format!("{}+", b.length) } else { b.length.to_string() };
            writeln!(s, "{task},{len},{},{},{},{}", b.subset, b.n, b.successes, rate(b.rate)).unwrap();
        }
    }
    s
}

pub fn category_csv(rows: &[(&str, &[CategoryRow])]) -> String {
    let mut s = String::from("task,category,subset,n,correct,accuracy\n");
    for (task, table) in rows {
        for r in table.iter() {
            writeln!(s, "{task},{},{},{},{},{:.6}", r.category, r.subset, r.n, r.correct, r.accuracy).unwrap();
        }
    }
    s
}

pub fn words_per_image_csv(hist: &BTreeMap<String, WordCountHistogram>) -> String {
    let mut s = String::from("dataset,words,images\n");
    for (ds, h) in hist {
        writeln!(s, "{ds},0,{}", h.zero).unwrap();
        for (k, n) in h.bins.iter().enumerate() {
            writeln!(s, "{ds},{},{n}", k + 1).unwrap();
        }
        writeln!(s, "{ds},>{WORDS_PER_IMAGE_BINS},{}", h.overflow).unwrap();
    }
    s
}

pub fn oov_length_csv(hist: &BTreeMap<String, BTreeMap<usize, usize>>) -> String {
    let mut s = String::from("dataset,length,count\n");
    for (ds, h) in hist {
        for (len, n) in h {
            writeln!(s, "{ds},{len},{n}").unwrap();
        }
    }
    s
}
