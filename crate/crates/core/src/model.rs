//! Canonical domain types shared by every stage of the benchmark: points,
//! polygons, annotated text instances, the character alphabet and the
//! evaluation configuration, plus the transcription comparison key.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::geometry;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// A simple polygon stored counter-clockwise.
///
/// Construction checks vertex count and finiteness, repairs self-intersecting
/// input by replacing it with its convex hull (flagged through
/// [`Polygon::was_repaired`]) and reverses clockwise input. Zero-area
/// polygons are representable; operations that need a positive area
/// (overlap scores, centroids) reject them.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2D>,
    repaired: bool,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2D>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::Polygon(format!("{} vertices, need at least 3", vertices.len())));
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(Error::Polygon(format!("vertex {i} is not finite")));
        }
        let (mut vertices, repaired) = if geometry::is_self_intersecting(&vertices) {
            (geometry::convex_hull(&vertices), true)
        } else {
            (vertices, false)
        };
        if geometry::signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices, repaired })
    }

    pub fn from_xy(coords: &[(f64, f64)]) -> Result<Self> {
        Self::new(coords.iter().map(|&(x, y)| Point2D::new(x, y)).collect())
    }

    /// Axis-aligned box `[x, y, w, h]` as a 4-vertex polygon.
    pub fn from_box(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        Self::from_xy(&[(x, y), (x + w, y), (x + w, y + h), (x, y + h)])
    }

    pub fn vertices(&self) -> &[Point2D] {
        &self.vertices
    }

    pub fn was_repaired(&self) -> bool {
        self.repaired
    }

    pub fn area(&self) -> f64 {
        geometry::polygon_area(self)
    }

    pub fn bbox(&self) -> geometry::BBox {
        geometry::BBox::of(&self.vertices)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextInstance {
    pub polygon: Polygon,
    pub transcription: Option<String>,
    pub legible: bool,
    pub dataset: String,
    pub instance_id: String,
}

impl TextInstance {
    /// Builds an instance, forcing `legible = false` when there is no transcription.
    pub fn new(
        polygon: Polygon,
        transcription: Option<String>,
        legible: bool,
        dataset: impl Into<String>,
        instance_id: impl Into<String>,
    ) -> Self {
        let legible = legible && transcription.is_some();
        Self { polygon, transcription, legible, dataset: dataset.into(), instance_id: instance_id.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageAnnotation {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    pub dataset: String,
    pub split: Split,
    pub instances: Vec<TextInstance>,
}

impl ImageAnnotation {
    /// Index of the first vertex (instance, vertex) outside the frame slack of 10% per side.
    pub fn first_out_of_frame(&self) -> Option<(usize, usize)> {
        let (w, h) = (f64::from(self.width), f64::from(self.height));
        let (x0, x1, y0, y1) = (-0.1 * w, 1.1 * w, -0.1 * h, 1.1 * h);
        self.instances.iter().enumerate().find_map(|(i, inst)| {
            inst.polygon
                .vertices()
                .iter()
                .position(|p| p.x < x0 || p.x > x1 || p.y < y0 || p.y > y1)
                .map(|j| (i, j))
        })
    }
}

/// Set of codepoints a word must be drawn from to be scored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    allowed: BTreeSet<char>,
}

/// Punctuation admitted by the default alphabet. Space is excluded.
pub const DEFAULT_PUNCTUATION: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]_`{|}~";

impl Alphabet {
    pub fn new(chars: impl IntoIterator<Item = char>) -> Result<Self> {
        let allowed: BTreeSet<char> = chars.into_iter().collect();
        if allowed.is_empty() {
            return Err(Error::Alphabet("alphabet is empty".into()));
        }
        Ok(Self { allowed })
    }

    /// Latin letters, digits and [`DEFAULT_PUNCTUATION`].
    pub fn latin_default() -> Self {
        let allowed = ('a'..='z').chain('A'..='Z').chain('0'..='9').chain(DEFAULT_PUNCTUATION.chars()).collect();
        Self { allowed }
    }

    /// Parses the alphabet file format: a single line listing every allowed codepoint.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.strip_prefix('\u{feff}').unwrap_or(text);
        let line = text.lines().next().unwrap_or("");
        if text.lines().skip(1).any(|l| !l.is_empty()) {
            return Err(Error::Alphabet("expected a single line of codepoints".into()));
        }
        Self::new(line.chars())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn contains(&self, c: char) -> bool {
        self.allowed.contains(&c)
    }

    pub fn len(&self) -> usize {
        self.allowed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allowed.is_empty()
    }

    pub fn chars(&self) -> impl Iterator<Item = char> + '_ {
        self.allowed.iter().copied()
    }

    /// The alphabet serialized in its file format (sorted codepoints, one line).
    pub fn to_line(&self) -> String {
        self.allowed.iter().collect()
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Self::latin_default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    pub dontcare_overlap_threshold: f64,
    /// Accept `iou >= threshold` instead of the strict `>`.
    pub threshold_inclusive: bool,
    pub case_sensitive: bool,
    pub heatmap_grid: usize,
    pub length_max_bucket: usize,
    pub validation_cap: usize,
    pub alphabet: Alphabet,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            dontcare_overlap_threshold: 0.5,
            threshold_inclusive: false,
            case_sensitive: true,
            heatmap_grid: 64,
            length_max_bucket: 25,
            validation_cap: 5000,
            alphabet: Alphabet::latin_default(),
        }
    }
}

const CONFIG_KEYS: &[&str] = &[
    "iou_threshold",
    "dontcare_overlap_threshold",
    "threshold_inclusive",
    "case_sensitive",
    "heatmap_grid",
    "length_max_bucket",
    "validation_cap",
];

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("iou_threshold", self.iou_threshold),
            ("dontcare_overlap_threshold", self.dontcare_overlap_threshold),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Config(format!("{name} must be in (0, 1], got {v}")));
            }
        }
        if self.heatmap_grid == 0 {
            return Err(Error::Config("heatmap_grid must be positive".into()));
        }
        if self.length_max_bucket < 2 {
            return Err(Error::Config("length_max_bucket must be at least 2".into()));
        }
        Ok(())
    }

    /// Reads `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(key.trim(), value.trim()).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", n + 1)),
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_kv(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
        }
        match key {
            "iou_threshold" => self.iou_threshold = num(key, value)?,
            "dontcare_overlap_threshold" => self.dontcare_overlap_threshold = num(key, value)?,
            "threshold_inclusive" => self.threshold_inclusive = num(key, value)?,
            "case_sensitive" => self.case_sensitive = num(key, value)?,
            "heatmap_grid" => self.heatmap_grid = num(key, value)?,
            "length_max_bucket" => self.length_max_bucket = num(key, value)?,
            "validation_cap" => self.validation_cap = num(key, value)?,
            other => {
                return Err(Error::Config(format!(
                    "unknown key {other:?} (expected one of {})",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Snapshot in the config-file format, keys in a fixed order.
    pub fn to_kv(&self) -> String {
        format!(
            "iou_threshold = {}\ndontcare_overlap_threshold = {}\nthreshold_inclusive = {}\n\
             case_sensitive = {}\nheatmap_grid = {}\nlength_max_bucket = {}\nvalidation_cap = {}\n",
            self.iou_threshold,
            self.dontcare_overlap_threshold,
            self.threshold_inclusive,
            self.case_sensitive,
            self.heatmap_grid,
            self.length_max_bucket,
            self.validation_cap,
        )
    }

    /// Whether an overlap value clears the matching threshold.
    pub fn clears_iou(&self, iou: f64) -> bool {
        if self.threshold_inclusive {
            iou >= self.iou_threshold
        } else {
            iou > self.iou_threshold
        }
    }
}

/// Comparison key for transcriptions: NFC, trimmed, lowercased only when
/// evaluation is case-insensitive.
pub fn normalize_transcription(raw: &str, cfg: &EvalConfig) -> String {
    let composed: String = if cfg.case_sensitive {
        raw.nfc().collect()
    } else {
        raw.to_lowercase().nfc().collect()
    };
    composed.trim().to_owned()
}

/// True iff `word` is non-empty and every codepoint is in the alphabet.
pub fn is_in_alphabet(word: &str, alphabet: &Alphabet) -> bool {
    !word.is_empty() && word.chars().all(|c| alphabet.contains(c))
}

/// An instance is excluded from scoring when it is illegible, has no
/// transcription, or its normalized transcription leaves the alphabet.
pub fn effective_dontcare(inst: &TextInstance, cfg: &EvalConfig) -> bool {
    match (&inst.transcription, inst.legible) {
        (Some(t), true) => !is_in_alphabet(&normalize_transcription(t, cfg), &cfg.alphabet),
        _ => true,
    }
}
