//! Corpus reading and writing.
//!
//! The canonical corpus is a line-delimited JSON file with one image per
//! line. Dataset-specific adapters (ICDAR-style quad-per-line text files and
//! COCO-Text-style attribute-keyed JSON) convert into it.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result, Violation};
use crate::model::{ImageAnnotation, Point2D, Polygon, Split, TextInstance};

/// Transcription used by ICDAR-style files to mark unreadable text.
pub const UNREADABLE_MARK: &str = "###";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    images: Vec<ImageAnnotation>,
    provenance: BTreeMap<String, usize>,
}

impl Corpus {
    /// Assembles a corpus sorted by `image_id`; ids must be unique.
    pub fn new(mut images: Vec<ImageAnnotation>) -> Result<Self> {
        images.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        let dups: Vec<String> = images
            .windows(2)
            .filter(|w| w[0].image_id == w[1].image_id)
            .map(|w| w[0].image_id.clone())
            .collect();
        if !dups.is_empty() {
            return Err(Error::Schema {
                source_name: "corpus".into(),
                violations: dups.into_iter().map(|id| Violation::new(0, "image_id", format!("duplicate {id:?}"))).collect(),
            });
        }
        let mut provenance = BTreeMap::new();
        for img in &images {
            *provenance.entry(img.dataset.clone()).or_insert(0) += 1;
        }
        Ok(Self { images, provenance })
    }

    pub fn images(&self) -> &[ImageAnnotation] {
        &self.images
    }

    pub fn into_images(self) -> Vec<ImageAnnotation> {
        self.images
    }

    /// Image count per dataset tag.
    pub fn provenance(&self) -> &BTreeMap<String, usize> {
        &self.provenance
    }

    pub fn get(&self, image_id: &str) -> Option<&ImageAnnotation> {
        self.images
            .binary_search_by(|img| img.image_id.as_str().cmp(image_id))
            .ok()
            .map(|i| &self.images[i])
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn instance_count(&self) -> usize {
        self.images.iter().map(|i| i.instances.len()).sum()
    }

    /// Number of instances whose polygon was replaced by its convex hull.
    pub fn repaired_count(&self) -> usize {
        self.images.iter().flat_map(|i| &i.instances).filter(|t| t.polygon.was_repaired()).count()
    }

    /// Merges several corpora; fails on colliding image ids.
    pub fn merge(parts: impl IntoIterator<Item = Corpus>) -> Result<Self> {
        Self::new(parts.into_iter().flat_map(|c| c.images).collect())
    }

    /// Images of one split, in corpus order.
    pub fn split(&self, split: Split) -> impl Iterator<Item = &ImageAnnotation> {
        self.images.iter().filter(move |i| i.split == split)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatsRow {
    pub dataset: String,
    pub split: Split,
    pub images: usize,
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CorpusStats {
    pub rows: Vec<StatsRow>,
    pub total_images: usize,
    pub total_instances: usize,
}

impl CorpusStats {
    pub fn split_images(&self, split: Split) -> usize {
        self.rows.iter().filter(|r| r.split == split).map(|r| r.images).sum()
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<20} {:<10} {:>10} {:>12}", "dataset", "split", "images", "instances")?;
        for r in &self.rows {
            writeln!(f, "{:<20} {:<10} {:>10} {:>12}", r.dataset, r.split.as_str(), r.images, r.instances)?;
        }
        write!(f, "{:<20} {:<10} {:>10} {:>12}", "total", "", self.total_images, self.total_instances)
    }
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut acc: BTreeMap<(String, Split), (usize, usize)> = BTreeMap::new();
    for img in corpus.images() {
        let e = acc.entry((img.dataset.clone(), img.split)).or_default();
        e.0 += 1;
        e.1 += img.instances.len();
    }
    let rows: Vec<StatsRow> = acc
        .into_iter()
        .map(|((dataset, split), (images, instances))| StatsRow { dataset, split, images, instances })
        .collect();
    CorpusStats {
        total_images: rows.iter().map(|r| r.images).sum(),
        total_instances: rows.iter().map(|r| r.instances).sum(),
        rows,
    }
}

// ---------------------------------------------------------------------------
// Canonical format
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CanonicalInstance<'a> {
    instance_id: &'a str,
    polygon: Vec<[f64; 2]>,
    transcription: Option<&'a str>,
    legible: bool,
}

#[derive(Serialize)]
struct CanonicalImage<'a> {
    image_id: &'a str,
    width: u32,
    height: u32,
    dataset: &'a str,
    split: Split,
    instances: Vec<CanonicalInstance<'a>>,
}

/// Serializes one image as a canonical record (no trailing newline).
pub fn to_canonical_line(img: &ImageAnnotation) -> String {
    let rec = CanonicalImage {
        image_id: &img.image_id,
        width: img.width,
        height: img.height,
        dataset: &img.dataset,
        split: img.split,
        instances: img
            .instances
            .iter()
            .map(|t| CanonicalInstance {
                instance_id: &t.instance_id,
                polygon: t.polygon.vertices().iter().map(|p| [p.x, p.y]).collect(),
                transcription: t.transcription.as_deref(),
                legible: t.legible,
            })
            .collect(),
    };
    serde_json::to_string(&rec).expect("canonical record serializes")
}

pub fn write_canonical_to(corpus: &Corpus, mut out: impl Write) -> std::io::Result<()> {
    for img in corpus.images() {
        writeln!(out, "{}", to_canonical_line(img))?;
    }
    Ok(())
}

pub fn write_canonical(corpus: &Corpus, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_canonical_to(corpus, &mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_canonical(path: &Path) -> Result<Corpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_canonical(&text, &path.display().to_string())
}

/// Parses canonical text, collecting every malformed line before failing.
pub fn parse_canonical(text: &str, source_name: &str) -> Result<Corpus> {
    let mut images = Vec::new();
    let mut violations = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = if idx == 0 { line.trim_start_matches('\u{feff}') } else { line };
        if line.trim().is_empty() {
            continue;
        }
        match parse_canonical_record(line, line_no) {
            Ok(img) => {
                if let Some(prev) = seen.insert(img.image_id.clone(), line_no) {
                    violations.push(Violation::new(
                        line_no,
                        "image_id",
                        format!("duplicate {:?} (first seen on line {prev})", img.image_id),
                    ));
                } else {
                    images.push(img);
                }
            }
            Err(mut v) => violations.append(&mut v),
        }
    }
    if !violations.is_empty() {
        return Err(Error::Schema { source_name: source_name.into(), violations });
    }
    Corpus::new(images)
}

fn parse_canonical_record(line: &str, line_no: usize) -> Result<ImageAnnotation, Vec<Violation>> {
    let value: Value = serde_json::from_str(line).map_err(|e| vec![Violation::new(line_no, "", format!("invalid JSON: {e}"))])?;
    let mut v = Vec::new();
    let Some(obj) = value.as_object() else {
        return Err(vec![Violation::new(line_no, "", "record is not an object")]);
    };
    let string = |key: &str, v: &mut Vec<Violation>| match obj.get(key) {
        Some(Value::String(s)) => Some(s.clone()),
        Some(_) => {
            v.push(Violation::new(line_no, key, "expected a string"));
            None
        }
        None => {
            v.push(Violation::new(line_no, key, "missing field"));
            None
        }
    };
    let dim = |key: &str, v: &mut Vec<Violation>| match obj.get(key) {
        Some(n) => match n.as_u64().filter(|&n| n > 0 && n <= u64::from(u32::MAX)) {
            Some(n) => Some(n as u32),
            None => {
                v.push(Violation::new(line_no, key, "expected a positive integer"));
                None
            }
        },
        None => {
            v.push(Violation::new(line_no, key, "missing field"));
            None
        }
    };
    let image_id = string("image_id", &mut v);
    let dataset = string("dataset", &mut v);
    let width = dim("width", &mut v);
    let height = dim("height", &mut v);
    let split = string("split", &mut v).and_then(|s| match s.parse::<Split>() {
        Ok(sp) => Some(sp),
        Err(_) => {
            v.push(Violation::new(line_no, "split", format!("unknown split {s:?}")));
            None
        }
    });
    let mut instances = Vec::new();
    match obj.get("instances") {
        Some(Value::Array(items)) => {
            let mut ids = HashSet::new();
            for (i, item) in items.iter().enumerate() {
                let base = format!("instances[{i}]");
                match parse_instance(item, &base, line_no, dataset.as_deref().unwrap_or(""), i) {
                    Ok(inst) => {
                        if !ids.insert(inst.instance_id.clone()) {
                            v.push(Violation::new(line_no, format!("{base}.instance_id"), "duplicate instance id"));
                        }
                        instances.push(inst);
                    }
                    Err(mut e) => v.append(&mut e),
                }
            }
        }
        Some(_) => v.push(Violation::new(line_no, "instances", "expected an array")),
        None => v.push(Violation::new(line_no, "instances", "missing field")),
    }
    if !v.is_empty() {
        return Err(v);
    }
    let img = ImageAnnotation {
        image_id: image_id.unwrap(),
        width: width.unwrap(),
        height: height.unwrap(),
        dataset: dataset.unwrap(),
        split: split.unwrap(),
        instances,
    };
    if let Some((i, j)) = img.first_out_of_frame() {
        return Err(vec![Violation::new(
            line_no,
            format!("instances[{i}].polygon[{j}]"),
            format!("vertex outside the {}x{} frame slack", img.width, img.height),
        )]);
    }
    Ok(img)
}

fn parse_instance(item: &Value, base: &str, line_no: usize, dataset: &str, index: usize) -> Result<TextInstance, Vec<Violation>> {
    let mut v = Vec::new();
    let Some(obj) = item.as_object() else {
        return Err(vec![Violation::new(line_no, base, "expected an object")]);
    };
    let polygon = match obj.get("polygon") {
        Some(Value::Array(pts)) => {
            let path = format!("{base}.polygon");
            let mut coords = Vec::with_capacity(pts.len());
            for (j, p) in pts.iter().enumerate() {
                match p.as_array().map(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>()) {
                    Some(Some(xy)) if xy.len() == 2 => coords.push(Point2D::new(xy[0], xy[1])),
                    _ => v.push(Violation::new(line_no, format!("{path}[{j}]"), "expected [x, y] numbers")),
                }
            }
            if pts.len() < 3 {
                v.push(Violation::new(line_no, &path, format!("{} points, need at least 3", pts.len())));
                None
            } else if v.is_empty() {
                match Polygon::new(coords) {
                    Ok(p) => Some(p),
                    Err(e) => {
                        v.push(Violation::new(line_no, &path, e.to_string()));
                        None
                    }
                }
            } else {
                None
            }
        }
        Some(_) => {
            v.push(Violation::new(line_no, format!("{base}.polygon"), "expected an array of points"));
            None
        }
        None => {
            v.push(Violation::new(line_no, format!("{base}.polygon"), "missing field"));
            None
        }
    };
    let transcription = match obj.get("transcription") {
        Some(Value::String(s)) => Some(s.clone()),
        Some(Value::Null) => None,
        Some(_) => {
            v.push(Violation::new(line_no, format!("{base}.transcription"), "expected a string or null"));
            None
        }
        None => {
            v.push(Violation::new(line_no, format!("{base}.transcription"), "missing field"));
            None
        }
    };
    let legible = match obj.get("legible") {
        Some(Value::Bool(b)) => *b,
        Some(_) => {
            v.push(Violation::new(line_no, format!("{base}.legible"), "expected a boolean"));
            false
        }
        None => {
            v.push(Violation::new(line_no, format!("{base}.legible"), "missing field"));
            false
        }
    };
    let instance_id = match obj.get("instance_id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(Value::Null) | None => index.to_string(),
        Some(_) => {
            v.push(Violation::new(line_no, format!("{base}.instance_id"), "expected a string"));
            String::new()
        }
    };
    if !v.is_empty() {
        return Err(v);
    }
    Ok(TextInstance::new(polygon.unwrap(), transcription, legible, dataset, instance_id))
}

// ---------------------------------------------------------------------------
// Adapters
// ---------------------------------------------------------------------------

/// Frame size that keeps every vertex within the 10% slack when the source
/// format carries no image dimensions.
fn inferred_size(instances: &[TextInstance]) -> (u32, u32) {
    let (mut max_x, mut max_y, mut min_x, mut min_y) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for p in instances.iter().flat_map(|t| t.polygon.vertices()) {
        max_x = max_x.max(p.x);
        max_y = max_y.max(p.y);
        min_x = min_x.min(p.x);
        min_y = min_y.min(p.y);
    }
    let fit = |max: f64, min: f64| max.ceil().max((-10.0 * min).ceil()).clamp(1.0, f64::from(u32::MAX)) as u32;
    (fit(max_x, min_x), fit(max_y, min_y))
}

/// Parses one `x1,y1,...,x4,y4,transcription` line.
pub fn parse_quad_line(line: &str, dataset: &str, instance_id: &str) -> Result<TextInstance, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() < 9 {
        return Err(format!("expected 8 coordinates and a transcription, found {} field(s)", fields.len()));
    }
    let mut coords = [0.0f64; 8];
    for (k, f) in fields[..8].iter().enumerate() {
        coords[k] = f
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|c| c.is_finite())
            .ok_or_else(|| format!("coordinate {} is not a finite number: {f:?}", k + 1))?;
    }
    let polygon = Polygon::from_xy(&[(coords[0], coords[1]), (coords[2], coords[3]), (coords[4], coords[5]), (coords[6], coords[7])])
        .map_err(|e| e.to_string())?;
    let text = fields[8..].join(",");
    let transcription = (text.trim() != UNREADABLE_MARK).then_some(text);
    let legible = transcription.is_some();
    Ok(TextInstance::new(polygon, transcription, legible, dataset, instance_id))
}

/// Reads a `stem,width,height` CSV of image sizes.
pub fn read_sizes(path: &Path) -> Result<HashMap<String, (u32, u32)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    let mut violations = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        match (f.len(), f.get(1).and_then(|w| w.parse::<u32>().ok()), f.get(2).and_then(|h| h.parse::<u32>().ok())) {
            (3, Some(w), Some(h)) if w > 0 && h > 0 => {
                out.insert(f[0].to_owned(), (w, h));
            }
            _ => violations.push(Violation::new(i + 1, "", "expected stem,width,height")),
        }
    }
    if violations.is_empty() {
        Ok(out)
    } else {
        Err(Error::Schema { source_name: path.display().to_string(), violations })
    }
}

fn image_stem(file_name: &str) -> String {
    let stem = Path::new(file_name).file_stem().and_then(|s| s.to_str()).unwrap_or(file_name);
    stem.strip_prefix("gt_").unwrap_or(stem).to_owned()
}

/// Adapter for directories of ICDAR-style ground-truth files, one `.txt` per
/// image. Image ids become `{dataset_tag}/{stem}` with any `gt_` prefix removed.
pub fn adapt_quad_per_line(
    gt_dir: &Path,
    dataset_tag: &str,
    split: Split,
    sizes: Option<&HashMap<String, (u32, u32)>>,
) -> Result<Corpus> {
    let mut files: Vec<_> = std::fs::read_dir(gt_dir)
        .map_err(|e| Error::io(gt_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("txt")))
        .collect();
    files.sort();

    let mut images = Vec::with_capacity(files.len());
    let mut violations = Vec::new();
    for path in files {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_owned();
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let text = String::from_utf8_lossy(&bytes);
        let text = text.trim_start_matches('\u{feff}');
        let stem = image_stem(&name);
        let mut instances = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            match parse_quad_line(line, dataset_tag, &instances.len().to_string()) {
                Ok(inst) => instances.push(inst),
                Err(msg) => violations.push(Violation::new(i + 1, name.clone(), msg)),
            }
        }
        let (width, height) = sizes.and_then(|s| s.get(&stem).copied()).unwrap_or_else(|| inferred_size(&instances));
        images.push(ImageAnnotation {
            image_id: format!("{dataset_tag}/{stem}"),
            width,
            height,
            dataset: dataset_tag.to_owned(),
            split,
            instances,
        });
    }
    if !violations.is_empty() {
        return Err(Error::Schema { source_name: gt_dir.display().to_string(), violations });
    }
    Corpus::new(images)
}

fn id_order(a: &str, b: &str) -> std::cmp::Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.cmp(b),
    }
}

fn value_key(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn flat_polygon(v: &Value) -> Option<Vec<Point2D>> {
    let nums: Vec<f64> = v.as_array()?.iter().map(Value::as_f64).collect::<Option<_>>()?;
    (nums.len() >= 6 && nums.len().is_multiple_of(2)).then(|| nums.chunks(2).map(|c| Point2D::new(c[0], c[1])).collect())
}

fn nested_polygon(v: &Value) -> Option<Vec<Point2D>> {
    v.as_array()?
        .iter()
        .map(|p| {
            let a = p.as_array()?;
            (a.len() == 2).then_some(())?;
            Some(Point2D::new(a[0].as_f64()?, a[1].as_f64()?))
        })
        .collect()
}

/// Adapter for COCO-Text-style files: `{"imgs": {id: {...}}, "anns": {id: {...}}}`.
///
/// Each annotation carries `image_id`, a polygon (`mask` as a flat coordinate
/// list, or `polygon` as point pairs) or an axis-aligned `bbox` `[x, y, w, h]`,
/// `utf8_string`, and `legibility` (`legible`/`illegible`). Images carry
/// `width`, `height`, `set` (`train`/`val`/`test`) and optionally `file_name`.
pub fn adapt_cocotext_style(json_path: &Path, dataset_tag: &str) -> Result<Corpus> {
    let text = std::fs::read_to_string(json_path).map_err(|e| Error::io(json_path, e))?;
    let root: Value = serde_json::from_str(text.trim_start_matches('\u{feff}'))?;
    let src = json_path.display().to_string();
    let schema = |path: &str, msg: &str| Error::Schema { source_name: src.clone(), violations: vec![Violation::new(0, path, msg)] };
    let imgs = root.get("imgs").and_then(Value::as_object).ok_or_else(|| schema("imgs", "missing object"))?;
    let anns = root.get("anns").and_then(Value::as_object).ok_or_else(|| schema("anns", "missing object"))?;

    let mut violations = Vec::new();
    let mut images: BTreeMap<String, ImageAnnotation> = BTreeMap::new();
    let mut img_keys: Vec<&String> = imgs.keys().collect();
    img_keys.sort_by(|a, b| id_order(a, b));
    for key in img_keys {
        let rec = &imgs[key];
        let path = format!("imgs.{key}");
        let dim = |k: &str| rec.get(k).and_then(Value::as_u64).filter(|&n| n > 0 && n <= u64::from(u32::MAX)).map(|n| n as u32);
        let split = match rec.get("set").and_then(Value::as_str) {
            Some("train") => Some(Split::Train),
            Some("val") | Some("validation") => Some(Split::Validation),
            Some("test") => Some(Split::Test),
            other => {
                violations.push(Violation::new(0, format!("{path}.set"), format!("unknown split {other:?}")));
                None
            }
        };
        let (Some(width), Some(height)) = (dim("width"), dim("height")) else {
            violations.push(Violation::new(0, &path, "width/height must be positive integers"));
            continue;
        };
        let Some(split) = split else { continue };
        let stem = rec.get("file_name").and_then(Value::as_str).map(image_stem).unwrap_or_else(|| key.clone());
        images.insert(
            key.clone(),
            ImageAnnotation { image_id: format!("{dataset_tag}/{stem}"), width, height, dataset: dataset_tag.to_owned(), split, instances: Vec::new() },
        );
    }

    let mut ann_keys: Vec<&String> = anns.keys().collect();
    ann_keys.sort_by(|a, b| id_order(a, b));
    for key in ann_keys {
        let rec = &anns[key];
        let path = format!("anns.{key}");
        let Some(img_key) = rec.get("image_id").and_then(value_key) else {
            violations.push(Violation::new(0, format!("{path}.image_id"), "missing image reference"));
            continue;
        };
        let points = rec
            .get("mask")
            .and_then(flat_polygon)
            .or_else(|| rec.get("polygon").and_then(|p| nested_polygon(p).or_else(|| flat_polygon(p))))
            .or_else(|| {
                let b: Vec<f64> = rec.get("bbox")?.as_array()?.iter().map(Value::as_f64).collect::<Option<_>>()?;
                (b.len() == 4).then(|| {
                    let (x, y, w, h) = (b[0], b[1], b[2], b[3]);
                    vec![Point2D::new(x, y), Point2D::new(x + w, y), Point2D::new(x + w, y + h), Point2D::new(x, y + h)]
                })
            });
        let Some(points) = points else {
            violations.push(Violation::new(0, &path, "no usable mask, polygon or bbox"));
            continue;
        };
        let polygon = match Polygon::new(points) {
            Ok(p) => p,
            Err(e) => {
                violations.push(Violation::new(0, format!("{path}.polygon"), e.to_string()));
                continue;
            }
        };
        let legible = match rec.get("legibility").and_then(Value::as_str) {
            Some("legible") => true,
            Some("illegible") => false,
            other => {
                violations.push(Violation::new(0, format!("{path}.legibility"), format!("unknown legibility {other:?}")));
                continue;
            }
        };
        let transcription = rec.get("utf8_string").and_then(Value::as_str).filter(|s| !s.is_empty()).map(str::to_owned);
        let Some(img) = images.get_mut(&img_key) else {
            violations.push(Violation::new(0, format!("{path}.image_id"), format!("dangling image reference {img_key:?}")));
            continue;
        };
        img.instances.push(TextInstance::new(polygon, transcription, legible, dataset_tag, key.clone()));
    }
    if !violations.is_empty() {
        return Err(Error::Schema { source_name: src, violations });
    }
    Corpus::new(images.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = r#"{"image_id":"a/1","width":100,"height":50,"dataset":"a","split":"test","instances":[{"polygon":[[0,0],[10,0],[10,5],[0,5]],"transcription":"word","legible":true}]}"#;

    #[test]
    fn reads_one_record() {
        let c = parse_canonical(LINE, "mem").unwrap();
        assert_eq!(c.len(), 1);
        let img = &c.images()[0];
        assert_eq!(img.instances[0].transcription.as_deref(), Some("word"));
        assert_eq!(img.instances[0].instance_id, "0");
        assert_eq!(img.instances[0].dataset, "a");
    }

    #[test]
    fn two_point_polygon_names_field() {
        let bad = LINE.replace("[[0,0],[10,0],[10,5],[0,5]]", "[[0,0],[10,0]]");
        let Err(Error::Schema { violations, .. }) = parse_canonical(&format!("{LINE}\n{}", bad.replace("a/1", "a/2")), "mem") else {
            panic!("expected schema error")
        };
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].line, 2);
        assert_eq!(violations[0].path, "instances[0].polygon");
    }

    #[test]
    fn collects_all_violations() {
        let text = "{\"image_id\": 3}\nnot json\n";
        let Err(Error::Schema { violations, .. }) = parse_canonical(text, "mem") else { panic!() };
        assert!(violations.iter().any(|v| v.line == 1 && v.path == "image_id"));
        assert!(violations.iter().any(|v| v.line == 1 && v.path == "width"));
        assert!(violations.iter().any(|v| v.line == 2));
    }

    #[test]
    fn rejects_out_of_frame_and_duplicates() {
        let far = LINE.replace("[10,5],[0,5]", "[10,500],[0,5]");
        assert!(parse_canonical(&far, "mem").is_err());
        assert!(parse_canonical(&format!("{LINE}\n{LINE}"), "mem").is_err());
    }

    #[test]
    fn provenance_counts() {
        let mut text = String::new();
        for ds in ["x", "y", "z"] {
            for n in 0..2 {
                text += &LINE.replace("\"a/1\"", &format!("\"{ds}/{n}\"")).replace("\"dataset\":\"a\"", &format!("\"dataset\":\"{ds}\""));
                text.push('\n');
            }
        }
        let c = parse_canonical(&text, "mem").unwrap();
        assert_eq!(c.provenance().len(), 3);
        assert!(c.provenance().values().all(|&n| n == 2));
    }

    #[test]
    fn quad_lines() {
        let i = parse_quad_line("0,0,10,0,10,5,0,5,word", "ic15", "0").unwrap();
        assert_eq!(i.transcription.as_deref(), Some("word"));
        assert!(i.legible);
        assert_eq!(i.polygon.vertices().len(), 4);
        let i = parse_quad_line("0,0,10,0,10,5,0,5,###", "ic15", "0").unwrap();
        assert!(!i.legible && i.transcription.is_none());
        let i = parse_quad_line("0,0,10,0,10,5,0,5,a,b", "ic15", "0").unwrap();
        assert_eq!(i.transcription.as_deref(), Some("a,b"));
        assert!(parse_quad_line("0,0,10,0,10,5,0,word", "ic15", "0").is_err());
        assert!(parse_quad_line("0,0,10,0,10,x,0,5,word", "ic15", "0").is_err());
    }

    #[test]
    fn stats() {
        assert_eq!(corpus_stats(&Corpus::default()), CorpusStats::default());
        let mut text = String::new();
        for (id, split) in [("a/1", "train"), ("a/2", "train"), ("a/3", "test")] {
            text += &LINE.replace("a/1", id).replace("\"test\"", &format!("\"{split}\""));
            text.push('\n');
        }
        let s = corpus_stats(&parse_canonical(&text, "mem").unwrap());
        assert_eq!(s.split_images(Split::Train), 2);
        assert_eq!(s.split_images(Split::Test), 1);
        assert_eq!(s.total_images, 3);
        assert_eq!(s.total_instances, 3);
    }

    #[test]
    fn canonical_line_roundtrip() {
        let c = parse_canonical(LINE, "mem").unwrap();
        let again = parse_canonical(&to_canonical_line(&c.images()[0]), "mem").unwrap();
        assert_eq!(c, again);
    }
}
