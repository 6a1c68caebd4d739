//! Command-line pipeline: ingest annotations, build the vocabulary, derive the
//! splits, score submissions and emit analysis tables. Every command writes a
//! run manifest with input and output digests.

pub mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use oovbench_core::analysis::{self, CategoryRules, Outcome};
use oovbench_core::e2e::{self, ImageLedger};
use oovbench_core::ingest::{self, corpus_stats, Corpus};
use oovbench_core::rec;
use oovbench_core::vocab::{self, Vocabulary};
use oovbench_core::{Alphabet, EvalConfig, Split};
use serde_json::json;

use manifest::{manifest_path_for, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "oovbench", version, about = "Out-of-vocabulary scene-text benchmark tools")]
pub struct Cli {
    #[command(flatten)]
    pub shared: Shared,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Shared {
    /// Evaluation config, `key = value` per line.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Alphabet file: one line holding every admissible character.
    #[arg(long, global = true, value_name = "FILE")]
    pub alphabet: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert source annotations into a canonical corpus file.
    Ingest(IngestArgs),
    /// Build the in-vocabulary word list from train/validation words and a lexicon.
    BuildVocab(BuildVocabArgs),
    /// Select OOV test images and singleton validation images, export cropped words.
    MakeSplits(MakeSplitsArgs),
    /// Score an end-to-end spotting submission.
    EvalE2e(EvalE2eArgs),
    /// Score a cropped-word recognition submission.
    EvalRec(EvalRecArgs),
    /// Length, category, spatial and histogram analyses.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Adapter {
    /// Directory of per-image `x1,y1,...,x4,y4,text` files.
    Quad,
    /// COCO-Text-style JSON with `imgs` and `anns`.
    Cocotext,
    /// Canonical line-delimited corpus files (merged).
    Canonical,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, value_enum)]
    pub adapter: Adapter,
    /// Input directory or file; repeat to merge several.
    #[arg(long = "in", value_name = "PATH", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Dataset tag for quad and cocotext inputs.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Split assigned to quad inputs.
    #[arg(long, default_value = "test")]
    pub split: Split,
    /// CSV of `stem,width,height` for quad inputs.
    #[arg(long, value_name = "FILE")]
    pub sizes: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildVocabArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Extra word list, one word per line.
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MakeSplitsArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub vocab: PathBuf,
    /// Overrides `validation_cap` from the config.
    #[arg(long)]
    pub cap: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalE2eArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub vocab: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub submission: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: Split,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Also write per-image match ledgers, one JSON object per line.
    #[arg(long, value_name = "FILE")]
    pub dump_ledger: Option<PathBuf>,
    /// Report percentages with 2 decimals instead of fractions.
    #[arg(long)]
    pub percent: bool,
}

#[derive(Debug, Args)]
pub struct EvalRecArgs {
    /// Cropped-word ground truth from make-splits.
    #[arg(long, value_name = "FILE")]
    pub gt: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub submission: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Fail when a ground-truth word has no prediction.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub percent: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub vocab: PathBuf,
    /// Ledger dump from eval-e2e.
    #[arg(long, value_name = "FILE")]
    pub ledger: Option<PathBuf>,
    /// Cropped-word ground truth, with --rec-submission.
    #[arg(long, value_name = "FILE", requires = "rec_submission")]
    pub rec_gt: Option<PathBuf>,
    #[arg(long, value_name = "FILE", requires = "rec_gt")]
    pub rec_submission: Option<PathBuf>,
    /// Category rules: `priority<TAB>name<TAB>regex` per line.
    #[arg(long, value_name = "FILE")]
    pub rules: Option<PathBuf>,
    /// Restrict every table to one dataset tag.
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long, default_value = "test")]
    pub split: Split,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

/// Runs a parsed command line inside a pool of the requested size.
pub fn run(cli: Cli, argv: Vec<String>) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.shared.workers).build().context("starting worker pool")?;
    pool.install(|| dispatch(cli, argv))
}

fn dispatch(cli: Cli, argv: Vec<String>) -> Result<()> {
    let cfg = load_config(&cli.shared)?;
    let mut m = RunManifest::new(argv, &cfg);
    for p in cli.shared.config.iter().chain(&cli.shared.alphabet) {
        m.input(p)?;
    }
    match cli.command {
        Command::Ingest(a) => ingest(a, &cfg, m),
        Command::BuildVocab(a) => build_vocab(a, &cfg, m),
        Command::MakeSplits(a) => make_splits(a, &cfg, m),
        Command::EvalE2e(a) => eval_e2e(a, &cfg, m),
        Command::EvalRec(a) => eval_rec(a, &cfg, m),
        Command::Analyze(a) => analyze(a, &cfg, m),
    }
}

fn load_config(shared: &Shared) -> Result<EvalConfig> {
    let mut cfg = match &shared.config {
        Some(p) => EvalConfig::load(p)?,
        None => EvalConfig::default(),
    };
    if let Some(p) = &shared.alphabet {
        cfg.alphabet = Alphabet::load(p)?;
    }
    Ok(cfg)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn json_text(v: &serde_json::Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn ingest(a: IngestArgs, _cfg: &EvalConfig, mut m: RunManifest) -> Result<()> {
    let sizes = a.sizes.as_deref().map(ingest::read_sizes).transpose()?;
    if let Some(p) = &a.sizes {
        m.input(p)?;
    }
    let tag = || a.dataset.as_deref().context("--dataset is required for this adapter");
    let mut parts = Vec::with_capacity(a.inputs.len());
    for input in &a.inputs {
        m.input(input)?;
        parts.push(match a.adapter {
            Adapter::Quad => ingest::adapt_quad_per_line(input, tag()?, a.split, sizes.as_ref())?,
            Adapter::Cocotext => ingest::adapt_cocotext_style(input, tag()?)?,
            Adapter::Canonical => ingest::read_canonical(input)?,
        });
    }
    let corpus = Corpus::merge(parts)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    ingest::write_canonical(&corpus, &a.out)?;
    println!("{}", corpus_stats(&corpus));
    if corpus.repaired_count() > 0 {
        eprintln!("note: {} self-intersecting polygon(s) replaced by their convex hull", corpus.repaired_count());
    }
    m.output(&a.out)?;
    m.write(&manifest_path_for(&a.out))
}

fn build_vocab(a: BuildVocabArgs, cfg: &EvalConfig, mut m: RunManifest) -> Result<()> {
    m.input(&a.corpus)?;
    let corpus = ingest::read_canonical(&a.corpus)?;
    let lexicon = match &a.lexicon {
        Some(p) => {
            m.input(p)?;
            vocab::read_lexicon(p)?
        }
        None => Vec::new(),
    };
    let v = vocab::build_vocabulary(&corpus, &lexicon, cfg);
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    v.save(&a.out)?;
    eprintln!(
        "vocabulary: {} words ({} from corpus, {} from lexicon)",
        v.len(),
        v.sources.corpus_word_count,
        v.sources.lexicon_word_count
    );
    m.output(&a.out)?;
    m.write(&manifest_path_for(&a.out))
}

fn id_list(ids: &[String]) -> String {
    ids.iter().map(|id| format!("{id}\n")).collect()
}

fn make_splits(a: MakeSplitsArgs, cfg: &EvalConfig, mut m: RunManifest) -> Result<()> {
    m.input(&a.corpus)?;
    m.input(&a.vocab)?;
    let corpus = ingest::read_canonical(&a.corpus)?;
    let v = Vocabulary::load(&a.vocab, cfg)?;
    let test = vocab::select_test_images(&corpus, &v, cfg);
    let sel = vocab::select_validation_images(&corpus, a.cap.unwrap_or(cfg.validation_cap), cfg);
    let out = vocab::apply_splits(&corpus, &test, &sel)?;

    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let mut written = Vec::new();
    for (name, ids) in [("test_images.txt", &test), ("validation_images.txt", &sel.validation), ("train_images.txt", &sel.train)] {
        let p = a.out_dir.join(name);
        write_text(&p, &id_list(ids))?;
        written.push(p);
    }
    let p = a.out_dir.join("corpus.jsonl");
    ingest::write_canonical(&out, &p)?;
    written.push(p);
    for split in [Split::Train, Split::Validation, Split::Test] {
        let p = a.out_dir.join(format!("crops_{}.jsonl", split.as_str()));
        vocab::write_crops(&vocab::export_cropped_words(&out, &v, split, cfg), &p)?;
        written.push(p);
    }
    eprintln!("splits: {} test, {} validation, {} train", test.len(), sel.validation.len(), sel.train.len());
    for p in &written {
        m.output(p)?;
    }
    m.write(&a.out_dir.join("manifest.json"))
}

fn eval_e2e(a: EvalE2eArgs, cfg: &EvalConfig, mut m: RunManifest) -> Result<()> {
    for p in [&a.corpus, &a.vocab, &a.submission] {
        m.input(p)?;
    }
    let corpus = ingest::read_canonical(&a.corpus)?;
    let v = Vocabulary::load(&a.vocab, cfg)?;
    let sub = e2e::read_submission(&a.submission)?;
    let result = e2e::evaluate(&corpus, a.split, &v, &sub, cfg)?;
    let report = result.report.to_json(a.percent);
    write_text(&a.out, &json_text(&report)?)?;
    m.output(&a.out)?;
    if let Some(p) = &a.dump_ledger {
        let mut text = String::new();
        for l in &result.ledgers {
            text.push_str(&serde_json::to_string(l)?);
            text.push('\n');
        }
        write_text(p, &text)?;
        m.output(p)?;
    }
    eprintln!(
        "average hmean {} (iv {}, oov {})",
        report["average_hmean"], report["iv"]["hmean"], report["oov"]["hmean"]
    );
    m.write(&manifest_path_for(&a.out))
}

fn eval_rec(a: EvalRecArgs, cfg: &EvalConfig, mut m: RunManifest) -> Result<()> {
    m.input(&a.gt)?;
    m.input(&a.submission)?;
    let gt = vocab::read_crops(&a.gt)?;
    let sub = rec::read_rec_submission(&a.submission)?;
    let report = rec::score_submission(&gt, &sub, cfg, a.strict)?.to_json(a.percent);
    write_text(&a.out, &json_text(&report)?)?;
    eprintln!("total word accuracy {}", report["total_word_accuracy"]);
    m.output(&a.out)?;
    m.write(&manifest_path_for(&a.out))
}

fn read_ledgers(path: &Path) -> Result<Vec<ImageLedger>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading ledger dump {}", path.display()))?;
    Ok(e2e::parse_ledgers(&text, &path.display().to_string())?)
}

fn analyze(a: AnalyzeArgs, cfg: &EvalConfig, mut m: RunManifest) -> Result<()> {
    if a.ledger.is_none() && a.rec_gt.is_none() {
        bail!("analyze needs a ledger dump (--ledger) or recognition results (--rec-gt with --rec-submission)");
    }
    for p in [Some(&a.corpus), Some(&a.vocab), a.ledger.as_ref(), a.rec_gt.as_ref(), a.rec_submission.as_ref(), a.rules.as_ref()]
        .into_iter()
        .flatten()
    {
        m.input(p)?;
    }
    let corpus = ingest::read_canonical(&a.corpus)?;
    let v = Vocabulary::load(&a.vocab, cfg)?;
    let rules = match &a.rules {
        Some(p) => CategoryRules::load(p)?,
        None => CategoryRules::default(),
    };
    let ds = a.dataset.as_deref();

    let mut tasks: Vec<(&str, Vec<Outcome>)> = Vec::new();
    if let Some(p) = &a.ledger {
        tasks.push(("e2e", analysis::outcomes_from_ledgers(&corpus, &read_ledgers(p)?, &v, cfg, ds)?));
    }
    if let (Some(gt_path), Some(sub_path)) = (&a.rec_gt, &a.rec_submission) {
        let gt = vocab::read_crops(gt_path)?;
        let scored = rec::score_words(&gt, &rec::read_rec_submission(sub_path)?, cfg, false)?;
        tasks.push(("rec", analysis::outcomes_from_rec(&gt, &scored, ds)));
    }

    let profiles: Vec<_> = tasks.iter().map(|(t, o)| (*t, analysis::length_profile(o, cfg.length_max_bucket))).collect();
    let categories: Vec<_> = tasks.iter().map(|(t, o)| (*t, analysis::category_accuracy(o, &rules))).collect();

    let images: Vec<_> = corpus.split(a.split).filter(|i| ds.is_none_or(|d| d == i.dataset)).cloned().collect();
    let scope = Corpus::new(images)?;
    let words_per_image = analysis::words_per_image_histogram(&scope, cfg);
    let oov_lengths = analysis::oov_length_histogram(&vocab::export_cropped_words(&scope, &v, a.split, cfg));

    let mut heatmaps = vec![analysis::spatial_heatmap(&scope, None, cfg.heatmap_grid, cfg)];
    for tag in scope.provenance().keys() {
        heatmaps.push(analysis::spatial_heatmap(&scope, Some(tag), cfg.heatmap_grid, cfg));
    }

    let dir = &a.out_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let profile_rows: Vec<_> = profiles.iter().map(|(t, p)| (*t, p)).collect();
    let category_rows: Vec<_> = categories.iter().map(|(t, c)| (*t, c.as_slice())).collect();
    let mut files: Vec<(PathBuf, String)> = vec![
        (dir.join("length_profile.csv"), analysis::length_profile_csv(&profile_rows)),
        (dir.join("category_accuracy.csv"), analysis::category_csv(&category_rows)),
        (dir.join("words_per_image.csv"), analysis::words_per_image_csv(&words_per_image)),
        (dir.join("oov_length.csv"), analysis::oov_length_csv(&oov_lengths)),
    ];
    for h in &heatmaps {
        files.push((dir.join(format!("heatmap_{}.csv", file_safe(&h.dataset))), h.to_csv()));
    }

    let summary = json!({
        "split": a.split.as_str(),
        "dataset": ds,
        "images": scope.len(),
        "tasks": tasks.iter().map(|(t, o)| {
            let n = |s| o.iter().filter(|x| x.subset == s).count();
            let ok = |s| o.iter().filter(|x| x.subset == s && x.success).count();
            (t.to_string(), json!({
                "iv": {"n": n(vocab::SubsetLabel::IV), "successes": ok(vocab::SubsetLabel::IV)},
                "oov": {"n": n(vocab::SubsetLabel::OOV), "successes": ok(vocab::SubsetLabel::OOV)},
            }))
        }).collect::<BTreeMap<_, _>>(),
        "heatmap_grid": cfg.heatmap_grid,
        "heatmaps": heatmaps.iter().map(|h| (h.dataset.clone(), h.total())).collect::<BTreeMap<_, _>>(),
        "images_per_dataset": words_per_image.iter().map(|(d, h)| (d.clone(), h.images())).collect::<BTreeMap<_, _>>(),
    });
    files.push((dir.join("summary.json"), json_text(&summary)?));

    for (p, text) in &files {
        write_text(p, text)?;
        m.output(p)?;
    }
    eprintln!("analysis: {} file(s) in {}", files.len(), dir.display());
    m.write(&dir.join("manifest.json"))
}

fn file_safe(tag: &str) -> String {
    tag.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}
