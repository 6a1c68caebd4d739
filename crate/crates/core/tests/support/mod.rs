//! Random scene and corpus generators plus brute-force oracles, shared by the
//! integration and acceptance tests.
#![allow(dead_code)]

use std::collections::HashMap;

use oovbench_core::e2e::Detection;
use oovbench_core::geometry::overlap_scores;
use oovbench_core::model::{effective_dontcare, EvalConfig, ImageAnnotation, Polygon, Split, TextInstance};
use oovbench_core::vocab::SubsetLabel;
use rand::seq::SliceRandom;
use rand::Rng;

pub const WORDS: &[&str] = &["stop", "shop", "cat", "car", "EXIT", "Exit", "$4.99", "open", "24h", "zx81"];

pub struct Scene {
    pub gts: Vec<TextInstance>,
    pub dets: Vec<Detection>,
    pub subsets: Vec<Option<SubsetLabel>>,
}

fn rect(rng: &mut impl Rng, x: f64, y: f64, w: f64, h: f64) -> Polygon {
    // Occasionally rotate slightly to exercise general clipping.
    if rng.gen_bool(0.3) {
        let t: f64 = rng.gen_range(-0.3..0.3);
        let (s, c) = t.sin_cos();
        let (cx, cy) = (x + w / 2.0, y + h / 2.0);
        let pts: Vec<(f64, f64)> = [(-w / 2.0, -h / 2.0), (w / 2.0, -h / 2.0), (w / 2.0, h / 2.0), (-w / 2.0, h / 2.0)]
            .iter()
            .map(|&(dx, dy)| (cx + dx * c - dy * s, cy + dx * s + dy * c))
            .collect();
        Polygon::from_xy(&pts).unwrap()
    } else {
        Polygon::from_box(x, y, w, h).unwrap()
    }
}

/// A scene of up to `max_gt` ground truths in a small canvas and up to
/// `max_det` detections, most derived from jittered ground truth.
pub fn random_scene(rng: &mut impl Rng, max_gt: usize, max_det: usize, words: &[&str], cfg: &EvalConfig) -> Scene {
    let n_gt = rng.gen_range(0..=max_gt);
    let n_det = rng.gen_range(0..=max_det);
    let mut raw = Vec::with_capacity(n_gt);
    let mut gts = Vec::with_capacity(n_gt);
    for i in 0..n_gt {
        let (w, h) = (rng.gen_range(8.0..30.0), rng.gen_range(5.0..15.0));
        let (x, y) = (rng.gen_range(0.0..60.0), rng.gen_range(0.0..60.0));
        raw.push((x, y, w, h));
        let (t, legible) = match rng.gen_range(0..10) {
            0 => (None, false),
            1 => (Some("\u{65e5}\u{672c}".to_owned()), true),
            2 => (Some(words.choose(rng).unwrap().to_string()), false),
            _ => (Some(words.choose(rng).unwrap().to_string()), true),
        };
        gts.push(TextInstance::new(rect(rng, x, y, w, h), t, legible, "synth", i.to_string()));
    }
    let mut dets = Vec::with_capacity(n_det);
    for _ in 0..n_det {
        let (poly, text) = if !raw.is_empty() && rng.gen_bool(0.8) {
            let k = rng.gen_range(0..raw.len());
            let (x, y, w, h) = raw[k];
            let (dx, dy) = (rng.gen_range(-0.3..0.3) * w, rng.gen_range(-0.3..0.3) * h);
            let s = rng.gen_range(0.8..1.25);
            let text = match (&gts[k].transcription, rng.gen_bool(0.6)) {
                (Some(t), true) => t.clone(),
                _ => words.choose(rng).unwrap().to_string(),
            };
            (rect(rng, x + dx, y + dy, w * s, h * s), text)
        } else {
            let (w, h) = (rng.gen_range(5.0..30.0), rng.gen_range(5.0..15.0));
            let (x, y) = (rng.gen_range(0.0..70.0), rng.gen_range(0.0..70.0));
            (rect(rng, x, y, w, h), words.choose(rng).unwrap().to_string())
        };
        dets.push(Detection::new(poly, text, rng.gen_bool(0.5).then(|| rng.gen())).unwrap());
    }
    let subsets = gts
        .iter()
        .map(|g| (!effective_dontcare(g, cfg)).then(|| if rng.gen_bool(0.5) { SubsetLabel::IV } else { SubsetLabel::OOV }))
        .collect();
    Scene { gts, dets, subsets }
}

/// Candidate (det, gt) pairs clearing the threshold against care ground truth.
pub fn candidate_pairs(scene: &Scene, cfg: &EvalConfig) -> Vec<(usize, usize, bool)> {
    let mut out = Vec::new();
    for (d, det) in scene.dets.iter().enumerate() {
        for (g, gt) in scene.gts.iter().enumerate() {
            if effective_dontcare(gt, cfg) {
                continue;
            }
            let Ok(s) = overlap_scores(&det.polygon, &gt.polygon) else { continue };
            if cfg.clears_iou(s.iou) {
                let same = gt.transcription.as_deref().map(str::trim) == Some(det.transcription.trim());
                out.push((d, g, same));
            }
        }
    }
    out
}

/// Maximum number of disjoint transcription-correct pairs, by exhaustive search.
pub fn max_correct_matching(n_det: usize, pairs: &[(usize, usize, bool)]) -> usize {
    let mut by_det: Vec<Vec<usize>> = vec![Vec::new(); n_det];
    for &(d, g, same) in pairs {
        if same {
            by_det[d].push(g);
        }
    }
    fn go(d: usize, by_det: &[Vec<usize>], used: &mut Vec<usize>) -> usize {
        if d == by_det.len() {
            return 0;
        }
        let mut best = go(d + 1, by_det, used);
        for &g in &by_det[d] {
            if !used.contains(&g) {
                used.push(g);
                best = best.max(1 + go(d + 1, by_det, used));
                used.pop();
            }
        }
        best
    }
    go(0, &by_det, &mut Vec::new())
}

/// Plain recursive Levenshtein distance with memoization on suffix positions.
pub fn edit_distance_oracle(a: &str, b: &str) -> usize {
    fn go(a: &[char], b: &[char], memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        if let Some(&v) = memo.get(&(a.len(), b.len())) {
            return v;
        }
        let sub = go(&a[1..], &b[1..], memo) + usize::from(a[0] != b[0]);
        let del = go(&a[1..], b, memo) + 1;
        let ins = go(a, &b[1..], memo) + 1;
        let v = sub.min(del).min(ins);
        memo.insert((a.len(), b.len()), v);
        v
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    go(&a, &b, &mut HashMap::new())
}

/// All strings over `alphabet` of length `0..=max_len`.
pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..max_len {
        frontier = frontier
            .iter()
            .flat_map(|s| alphabet.iter().map(move |c| format!("{s}{c}")))
            .collect();
        out.extend(frontier.iter().cloned());
    }
    out
}

/// A random corpus over a small word pool so that words repeat across images.
pub fn random_corpus(rng: &mut impl Rng, n_images: usize, pool: &[&str]) -> Vec<ImageAnnotation> {
    (0..n_images)
        .map(|i| {
            let dataset = if i % 2 == 0 { "even" } else { "odd" };
            let split = match rng.gen_range(0..3) {
                0 => Split::Train,
                1 => Split::Validation,
                _ => Split::Test,
            };
            let n = rng.gen_range(0..6);
            let instances = (0..n)
                .map(|k| {
                    let legible = rng.gen_bool(0.85);
                    let t = pool.choose(rng).map(|w| w.to_string());
                    TextInstance::new(Polygon::from_box(k as f64 * 12.0, 5.0, 10.0, 8.0).unwrap(), t, legible, dataset, k.to_string())
                })
                .collect();
            ImageAnnotation {
                image_id: format!("img{i:04}"),
                width: 100,
                height: 40,
                dataset: dataset.into(),
                split,
                instances,
            }
        })
        .collect()
}
