//! In-vocabulary dictionary construction and OOV-constrained split selection.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::ingest::Corpus;
use crate::model::{effective_dontcare, is_in_alphabet, normalize_transcription, EvalConfig, ImageAnnotation, Split, TextInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SubsetLabel {
    IV,
    OOV,
}

impl SubsetLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SubsetLabel::IV => "IV",
            SubsetLabel::OOV => "OOV",
        }
    }
}

impl fmt::Display for SubsetLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubsetLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "IV" => Ok(SubsetLabel::IV),
            "OOV" => Ok(SubsetLabel::OOV),
            other => Err(Error::Config(format!("unknown subset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct VocabularySources {
    pub corpus_word_count: usize,
    pub lexicon_word_count: usize,
}

/// The in-vocabulary word set. Words are stored normalized and non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    words: BTreeSet<String>,
    pub sources: VocabularySources,
}

impl Vocabulary {
    pub fn from_words<I, S>(words: I, cfg: &EvalConfig) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: BTreeSet<String> =
            words.into_iter().map(|w| normalize_transcription(w.as_ref(), cfg)).filter(|w| !w.is_empty()).collect();
        let sources = VocabularySources { corpus_word_count: words.len(), lexicon_word_count: 0 };
        Self { words, sources }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in sorted order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// One word per line, sorted, newline-terminated.
    pub fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        for w in &self.words {
            writeln!(out, "{w}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }

    /// Loads a word list (same format as a lexicon).
    pub fn load(path: &Path, cfg: &EvalConfig) -> Result<Self> {
        Ok(Self::from_words(read_lexicon(path)?, cfg))
    }
}

/// Reads a one-word-per-line UTF-8 lexicon.
pub fn read_lexicon(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.trim_start_matches('\u{feff}').lines().map(|l| l.trim_end_matches('\r').to_owned()).collect())
}

/// Normalized transcription of a care instance, or `None` for don't-care.
pub fn care_word(inst: &TextInstance, cfg: &EvalConfig) -> Option<String> {
    if effective_dontcare(inst, cfg) {
        return None;
    }
    inst.transcription.as_deref().map(|t| normalize_transcription(t, cfg))
}

fn pool_words<'a>(images: impl ParallelIterator<Item = &'a ImageAnnotation>, cfg: &EvalConfig) -> BTreeSet<String> {
    images
        .map(|img| img.instances.iter().filter_map(|t| care_word(t, cfg)).collect::<BTreeSet<String>>())
        .reduce(BTreeSet::new, |mut a, mut b| {
            if a.len() < b.len() {
                std::mem::swap(&mut a, &mut b);
            }
            a.extend(b);
            a
        })
}

/// Care transcriptions of the train and validation splits, united with the
/// normalized lexicon entries.
pub fn build_vocabulary<S: AsRef<str>>(corpus: &Corpus, lexicon: &[S], cfg: &EvalConfig) -> Vocabulary {
    let corpus_words = pool_words(corpus.images().par_iter().filter(|i| i.split != Split::Test), cfg);
    let lexicon_words: BTreeSet<String> =
        lexicon.iter().map(|w| normalize_transcription(w.as_ref(), cfg)).filter(|w| !w.is_empty()).collect();
    let sources = VocabularySources { corpus_word_count: corpus_words.len(), lexicon_word_count: lexicon_words.len() };
    let mut words = corpus_words;
    words.extend(lexicon_words);
    Vocabulary { words, sources }
}

/// IV/OOV label for a normalized, in-alphabet word.
pub fn classify_word(word: &str, vocab: &Vocabulary, cfg: &EvalConfig) -> Result<SubsetLabel> {
    if !is_in_alphabet(word, &cfg.alphabet) {
        return Err(Error::OutOfAlphabet(word.to_owned()));
    }
    Ok(if vocab.contains(word) { SubsetLabel::IV } else { SubsetLabel::OOV })
}

/// Per-instance subset labels for an image; `None` marks don't-care.
pub fn instance_subsets(img: &ImageAnnotation, vocab: &Vocabulary, cfg: &EvalConfig) -> Vec<Option<SubsetLabel>> {
    img.instances
        .iter()
        .map(|t| care_word(t, cfg).map(|w| if vocab.contains(&w) { SubsetLabel::IV } else { SubsetLabel::OOV }))
        .collect()
}

/// Test-split images holding at least one OOV care word, sorted by id.
pub fn select_test_images(corpus: &Corpus, vocab: &Vocabulary, cfg: &EvalConfig) -> Vec<String> {
    corpus
        .split(Split::Test)
        .filter(|img| instance_subsets(img, vocab, cfg).contains(&Some(SubsetLabel::OOV)))
        .map(|img| img.image_id.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationSelection {
    pub validation: Vec<String>,
    /// Pool images not selected for validation.
    pub train: Vec<String>,
}

/// Images from the train+validation pool holding a care word that occurs
/// exactly once in the pool, truncated to `cap` in image-id order. The rest
/// of the pool goes to train.
pub fn select_validation_images(corpus: &Corpus, cap: usize, cfg: &EvalConfig) -> ValidationSelection {
    let pool: Vec<&ImageAnnotation> = corpus.images().iter().filter(|i| i.split != Split::Test).collect();
    let per_image: Vec<Vec<String>> =
        pool.par_iter().map(|img| img.instances.iter().filter_map(|t| care_word(t, cfg)).collect()).collect();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for w in per_image.iter().flatten() {
        *counts.entry(w.as_str()).or_insert(0) += 1;
    }
    let mut sel = ValidationSelection::default();
    for (img, words) in pool.iter().zip(&per_image) {
        let qualifies = words.iter().any(|w| counts[w.as_str()] == 1);
        if qualifies && sel.validation.len() < cap {
            sel.validation.push(img.image_id.clone());
        } else {
            sel.train.push(img.image_id.clone());
        }
    }
    sel
}

/// The OOV corpus: pool images relabeled train/validation per `selection`,
/// plus the selected test images. Unselected test images are dropped.
pub fn apply_splits(corpus: &Corpus, test_ids: &[String], selection: &ValidationSelection) -> Result<Corpus> {
    let test: BTreeSet<&str> = test_ids.iter().map(String::as_str).collect();
    let val: BTreeSet<&str> = selection.validation.iter().map(String::as_str).collect();
    let images = corpus
        .images()
        .iter()
        .filter_map(|img| {
            let split = match img.split {
                Split::Test => test.contains(img.image_id.as_str()).then_some(Split::Test)?,
                _ if val.contains(img.image_id.as_str()) => Split::Validation,
                _ => Split::Train,
            };
            Some(ImageAnnotation { split, ..img.clone() })
        })
        .collect();
    Corpus::new(images)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CroppedWordRecord {
    pub word_id: String,
    pub transcription: String,
    pub dataset: String,
    pub subset: SubsetLabel,
}

/// One record per care instance in the split, keyed `{image_id}#{instance_id}`.
pub fn export_cropped_words(corpus: &Corpus, vocab: &Vocabulary, split: Split, cfg: &EvalConfig) -> Vec<CroppedWordRecord> {
    corpus
        .split(split)
        .flat_map(|img| {
            img.instances.iter().filter_map(move |t| {
                let word = care_word(t, cfg)?;
                let subset = if vocab.contains(&word) { SubsetLabel::IV } else { SubsetLabel::OOV };
                Some(CroppedWordRecord {
                    word_id: format!("{}#{}", img.image_id, t.instance_id),
                    transcription: word,
                    dataset: t.dataset.clone(),
                    subset,
                })
            })
        })
        .collect()
}

pub fn write_crops(records: &[CroppedWordRecord], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn parse_crops(text: &str, source_name: &str) -> Result<Vec<CroppedWordRecord>> {
    let mut out = Vec::new();
    let mut violations = Vec::new();
    let mut seen = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<CroppedWordRecord>(line) {
            Ok(r) => {
                if seen.insert(r.word_id.clone(), i + 1).is_some() {
                    violations.push(Violation::new(i + 1, "word_id", format!("duplicate {:?}", r.word_id)));
                } else {
                    out.push(r);
                }
            }
            Err(e) => violations.push(Violation::new(i + 1, "", e.to_string())),
        }
    }
    if violations.is_empty() {
        Ok(out)
    } else {
        Err(Error::Schema { source_name: source_name.into(), violations })
    }
}

pub fn read_crops(path: &Path) -> Result<Vec<CroppedWordRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_crops(&text, &path.display().to_string())
}
