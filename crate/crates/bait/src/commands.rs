//! The batch commands behind the `bait` binary. Each takes a resolved
//! [`RunConfig`] and an output directory, writes its artifacts there
//! together with the config it ran under, and returns a summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use bait_core::augment::arc::adapt_arc;
use bait_core::augment::{balanced_class_weights, synthesize_flipped_samples, FlipDirections, NegationMethod};
use bait_core::data::{class_distribution, headline_split, ClassDistribution, SamplePair, StanceLabel};
use bait_core::hpo::{apply_config, default_space, tune, SearchSpace, TrialRecord};
use bait_core::model::{AnyModel, Classifier, ModelConfig, ModelKind};
use bait_core::pipeline::{evaluate, BaitModel, EvaluationReport};
use bait_core::train::{train_relatednet, train_stage2, EpochMetrics, Example, TrainReport, TrainingConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::RunConfig;
use crate::corpus::{
    load_arc_csv, load_bodies_csv, load_sidecar, load_stances_csv, load_unlabeled_csv, write_bodies_csv,
    write_sidecar, write_stances_csv, HeadlineTable,
};
use crate::dataset::{EmbeddedCorpus, StoreSet};
use crate::error::{BaitError, Result};
use crate::lexicon::{load_lm, load_parses, load_wordnet};

/// Default share of headlines held out for validation.
pub const VALIDATION_FRACTION: f64 = 0.3;

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BaitError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| BaitError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn write_resolved(out_dir: &Path, command: &str, cfg: &RunConfig) -> Result<()> {
    write_text(&out_dir.join(format!("{command}.conf")), &cfg.render())
}

/// Stores of a directory plus its headline sidecar.
pub fn load_store_dir(dir: &Path) -> Result<(StoreSet, HeadlineTable)> {
    let stores = StoreSet::load(dir)?;
    let sidecar = load_sidecar(dir.join(StoreSet::SIDECAR))?;
    if sidecar.len() != stores.sim_head.len() || sidecar.len() != stores.nli_head.len() {
        return Err(BaitError::Integrity(format!(
            "{}: sidecar lists {} headlines but the head stores hold {} / {}",
            dir.display(),
            sidecar.len(),
            stores.sim_head.len(),
            stores.nli_head.len()
        )));
    }
    Ok((stores, sidecar))
}

/// Samples of a stances file keyed by sidecar ids.
fn load_samples(cfg: &RunConfig, stances_key: &str, sidecar: &HeadlineTable) -> Result<Vec<SamplePair>> {
    let path = cfg.require_path(stances_key)?;
    load_stances_csv(&path)?.resolve_against(sidecar).map_err(|e| match e {
        BaitError::Integrity(m) => BaitError::Integrity(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// A seeded sample of `n` pairs, kept in input order.
pub fn subsample(samples: &[SamplePair], n: usize, seed: u64) -> Vec<SamplePair> {
    if n >= samples.len() {
        return samples.to_vec();
    }
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut chosen = idx[..n].to_vec();
    chosen.sort_unstable();
    chosen.into_iter().map(|i| samples[i]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionRow {
    pub stance: StanceLabel,
    pub count: usize,
    pub percent: f64,
}

fn distribution_rows(d: &ClassDistribution) -> Vec<DistributionRow> {
    StanceLabel::ALL
        .iter()
        .map(|&s| DistributionRow { stance: s, count: d.count(s), percent: 100.0 * d.proportion(s) })
        .collect()
}

fn render_distribution(title: &str, d: &ClassDistribution) -> String {
    let mut out = format!("{title}\n  {:<10} {:>8} {:>7}\n", "stance", "count", "%");
    for r in distribution_rows(d) {
        let _ = writeln!(out, "  {:<10} {:>8} {:>7.1}", r.stance.as_str(), r.count, r.percent);
    }
    let _ = writeln!(out, "  {:<10} {:>8}", "total", d.total());
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestReport {
    pub samples: usize,
    pub headlines: usize,
    pub bodies: Option<usize>,
    pub distribution: Vec<DistributionRow>,
    pub test_samples: Option<usize>,
    pub test_distribution: Option<Vec<DistributionRow>>,
    /// Samples dropped for zero-sentence bodies, when stores were checked.
    pub dropped_samples: Option<usize>,
    pub sim_dim: Option<usize>,
    pub nli_dim: Option<usize>,
}

/// Loads the CSVs (and stores, when configured), cross-checks ids and
/// dimensions, and reports the stance distribution.
pub fn cmd_ingest(cfg: &RunConfig, out_dir: &Path) -> Result<(IngestReport, String)> {
    create_dir(out_dir)?;
    write_resolved(out_dir, "ingest", cfg)?;
    let stances = load_stances_csv(cfg.require_path("stances")?)?;
    let mut all = stances.samples.clone();
    let bodies = match cfg.path("bodies") {
        Some(_) => {
            let bodies = load_bodies_csv(cfg.require_path("bodies")?)?;
            if let Some(s) = stances.samples.iter().find(|s| !bodies.contains_key(&s.body_id)) {
                return Err(BaitError::Integrity(format!("stance row refers to unknown Body ID {}", s.body_id)));
            }
            Some(bodies.len())
        }
        None => None,
    };
    let test = match cfg.path("test_stances") {
        Some(_) => Some(load_stances_csv(cfg.require_path("test_stances")?)?),
        None => None,
    };
    if let Some(t) = &test {
        all.extend(&t.samples);
    }
    let mut text = String::new();
    let mut report = IngestReport {
        samples: stances.samples.len(),
        headlines: stances.headlines.len(),
        bodies,
        distribution: distribution_rows(&class_distribution(&stances.samples)?),
        test_samples: test.as_ref().map(|t| t.samples.len()),
        test_distribution: test.as_ref().map(|t| class_distribution(&t.samples).map(|d| distribution_rows(&d))).transpose()?,
        dropped_samples: None,
        sim_dim: None,
        nli_dim: None,
    };
    text.push_str(&render_distribution("training stances", &class_distribution(&stances.samples)?));
    if let Some(t) = &test {
        text.push_str(&render_distribution("test stances", &class_distribution(&t.samples)?));
        text.push_str(&render_distribution("all stances", &class_distribution(&all)?));
    }
    if let Some(b) = bodies {
        let _ = writeln!(text, "bodies: {b}");
    }
    if cfg.path("stores").is_some() {
        let (stores, sidecar) = load_store_dir(&cfg.require_path("stores")?)?;
        stores.check_dims(cfg.usize("sim_dim", stores.sim_dim())?, cfg.usize("nli_dim", stores.nli_dim())?)?;
        let mut resolved = stances.resolve_against(&sidecar)?;
        if let Some(t) = &test {
            if cfg.path("test_stores").is_none() {
                resolved.extend(t.resolve_against(&sidecar)?);
            }
        }
        let corpus = EmbeddedCorpus::build(&stores, resolved.iter().map(|s| (s.headline_id, s.body_id)), cfg.body_cap()?)?;
        let kept = corpus.keep_embeddable(&resolved);
        report.dropped_samples = Some(resolved.len() - kept.len());
        report.sim_dim = Some(stores.sim_dim());
        report.nli_dim = Some(stores.nli_dim());
        let _ = writeln!(
            text,
            "stores: SIM {} / NLI {}, {} samples embeddable, {} dropped",
            stores.sim_dim(),
            stores.nli_dim(),
            kept.len(),
            resolved.len() - kept.len()
        );
    }
    write_json(&out_dir.join("ingest.json"), &report)?;
    Ok((report, text))
}

/// Everything a training or tuning run reads.
pub struct TrainingData {
    pub kind: ModelKind,
    pub stores: StoreSet,
    pub train: Vec<SamplePair>,
    pub validation: Vec<SamplePair>,
    /// Synthetic samples, added to the training part only.
    pub synthetic: Vec<SamplePair>,
    pub arc: Option<(StoreSet, Vec<SamplePair>)>,
    pub body_cap: usize,
}

impl TrainingData {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let kind = cfg.model_kind()?;
        let seed = cfg.seed()?;
        let (stores, sidecar) = load_store_dir(&cfg.require_path("stores")?)?;
        let (model, _) = cfg.model_and_training(kind)?;
        check_model_dims(&model, &stores).map_err(BaitError::Integrity)?;
        let mut samples = load_samples(cfg, "stances", &sidecar)?;
        if let Some(n) = cfg.get("subsample") {
            let n: usize = n.parse().map_err(|_| BaitError::Config(format!("subsample = {n:?}")))?;
            samples = subsample(&samples, n, seed);
        }
        let fraction = cfg.f64("validation_fraction", VALIDATION_FRACTION)?;
        let split = headline_split(&samples, fraction, seed)?;
        let synthetic = match cfg.path("synthetic_stances") {
            Some(_) => load_samples(cfg, "synthetic_stances", &sidecar)?,
            None => Vec::new(),
        };
        let arc = match cfg.path("arc_stances") {
            Some(_) => {
                let (arc_stores, arc_sidecar) = load_store_dir(&cfg.require_path("arc_stores")?)?;
                check_model_dims(&model, &arc_stores).map_err(BaitError::Integrity)?;
                let arc_samples = load_samples(cfg, "arc_stances", &arc_sidecar)?;
                Some((arc_stores, arc_samples))
            }
            None => None,
        };
        Ok(TrainingData {
            kind,
            stores,
            train: split.train,
            validation: split.validation,
            synthetic,
            arc,
            body_cap: cfg.body_cap()?,
        })
    }

    /// Runs `f` over the embedded training and validation examples.
    pub fn with_examples<R>(&self, f: impl FnOnce(&[Example<'_>], &[Example<'_>]) -> Result<R>) -> Result<R> {
        let keys = self.train.iter().chain(&self.validation).chain(&self.synthetic).map(|s| (s.headline_id, s.body_id));
        let corpus = EmbeddedCorpus::build(&self.stores, keys, self.body_cap)?;
        let arc_corpus = match &self.arc {
            Some((stores, samples)) => {
                Some(EmbeddedCorpus::build(stores, samples.iter().map(|s| (s.headline_id, s.body_id)), self.body_cap)?)
            }
            None => None,
        };
        let stage2 = self.kind != ModelKind::RelatedNet;
        let keep = |c: &EmbeddedCorpus<'_>, s: &[SamplePair]| -> Vec<SamplePair> {
            c.keep_embeddable(s).into_iter().filter(|p| !stage2 || p.stance.is_related()).collect()
        };
        let mut train = corpus.examples(&keep(&corpus, &self.train))?;
        train.extend(corpus.examples(&keep(&corpus, &self.synthetic))?);
        if let (Some(c), Some((_, samples))) = (&arc_corpus, &self.arc) {
            train.extend(c.examples(&keep(c, samples))?);
        }
        let val = corpus.examples(&keep(&corpus, &self.validation))?;
        f(&train, &val)
    }
}

fn check_model_dims(model: &ModelConfig, stores: &StoreSet) -> std::result::Result<(), String> {
    let (sim, nli) = match model {
        ModelConfig::RelatedNet(c) => (c.sim_dim, None),
        ModelConfig::TopKNet(c) => (c.sim_dim, Some(c.nli_dim)),
        ModelConfig::AgreemNet(c) => (c.sim_dim, Some(c.nli_dim)),
    };
    if sim != stores.sim_dim() || nli.is_some_and(|n| n != stores.nli_dim()) {
        return Err(format!(
            "{} expects SIM {sim}{} but the stores are SIM {} / NLI {}",
            model.kind().as_str(),
            nli.map_or(String::new(), |n| format!(" / NLI {n}")),
            stores.sim_dim(),
            stores.nli_dim()
        ));
    }
    Ok(())
}

/// Gold labels in the model's output space.
fn class_counts(kind: ModelKind, examples: &[Example<'_>]) -> Vec<usize> {
    let mut counts = vec![0; if kind == ModelKind::RelatedNet { 2 } else { 3 }];
    for e in examples {
        let c = match kind {
            ModelKind::RelatedNet => usize::from(e.stance.is_related()),
            _ => e.stance.stage2_index().expect("stage-2 examples are related"),
        };
        counts[c] += 1;
    }
    counts
}

/// Initializes and trains one model.
pub fn train_model(
    model: &ModelConfig,
    training: &TrainingConfig,
    train: &[Example<'_>],
    val: &[Example<'_>],
    seed: u64,
) -> Result<TrainReport<AnyModel>> {
    let init = model.init(&mut ChaCha8Rng::seed_from_u64(seed))?;
    let report = match init {
        AnyModel::RelatedNet(m) => {
            let r = train_relatednet(m, train, val, training, seed)?;
            TrainReport {
                model: AnyModel::RelatedNet(r.model),
                best_epoch: r.best_epoch,
                best_val_uaca: r.best_val_uaca,
                epochs: r.epochs,
            }
        }
        other => train_stage2(other, train, val, training, seed)?,
    };
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSummary {
    pub model: ModelKind,
    pub parameter_count: usize,
    pub seed: u64,
    pub config: ModelConfig,
    pub training: TrainingConfig,
    pub train_samples: usize,
    pub validation_samples: usize,
    pub class_counts: Vec<usize>,
    pub class_weights: Option<Vec<f64>>,
    pub best_epoch: usize,
    pub best_val_uaca: f64,
    pub epochs: Vec<EpochMetrics>,
    pub checkpoint: PathBuf,
}

pub fn cmd_train(cfg: &RunConfig, out_dir: &Path) -> Result<TrainSummary> {
    create_dir(out_dir)?;
    let kind = cfg.model_kind()?;
    write_resolved(out_dir, &format!("train_{}", kind.as_str()), cfg)?;
    let data = TrainingData::load(cfg)?;
    let (model_cfg, mut training) = cfg.model_and_training(kind)?;
    let seed = cfg.seed()?;
    let summary = data.with_examples(|train, val| {
        let counts = class_counts(kind, train);
        if cfg.bool("weighted_loss")? {
            let w = balanced_class_weights(&counts).map_err(BaitError::Run)?;
            log::info!("class counts {counts:?}, weights {w:?}");
            training.class_weights = Some(w);
        }
        let report = train_model(&model_cfg, &training, train, val, seed)?;
        let checkpoint = out_dir.join(format!("{}.ckpt", kind.as_str()));
        save_checkpoint(&checkpoint, &report.model)?;
        Ok(TrainSummary {
            model: kind,
            parameter_count: report.model.parameter_count(),
            seed,
            config: model_cfg,
            training: training.clone(),
            train_samples: train.len(),
            validation_samples: val.len(),
            class_counts: counts,
            class_weights: training.class_weights.clone(),
            best_epoch: report.best_epoch,
            best_val_uaca: report.best_val_uaca,
            epochs: report.epochs,
            checkpoint,
        })
    })?;
    write_json(&out_dir.join(format!("{}_metrics.json", kind.as_str())), &summary)?;
    Ok(summary)
}

/// Loads both checkpoints and checks them against the stores.
fn load_bait(cfg: &RunConfig, stores: &StoreSet) -> Result<BaitModel> {
    let related = load_checkpoint(cfg.require_path("relatednet")?)?;
    let stage2 = load_checkpoint(cfg.require_path("stage2")?)?;
    let AnyModel::RelatedNet(related) = related else {
        return Err(BaitError::Mismatch(format!("`relatednet` holds a {} checkpoint", related.kind().as_str())));
    };
    check_model_dims(&ModelConfig::RelatedNet(related.config), stores).map_err(BaitError::Mismatch)?;
    check_model_dims(&stage2.config(), stores).map_err(BaitError::Mismatch)?;
    let model = BaitModel::new(related, stage2).map_err(|e| BaitError::Mismatch(e.to_string()))?;
    Ok(model.with_threshold(cfg.f64("threshold", bait_core::pipeline::DEFAULT_THRESHOLD)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub samples: usize,
    pub dropped_samples: usize,
    pub majority_baseline: f64,
    #[serde(flatten)]
    pub report: EvaluationReport,
}

/// Accuracy of always predicting the most frequent gold class.
pub fn majority_baseline(gold: &[StanceLabel]) -> f64 {
    let mut counts = [0usize; 4];
    for g in gold {
        counts[g.index()] += 1;
    }
    *counts.iter().max().unwrap_or(&0) as f64 / gold.len().max(1) as f64
}

pub fn render_confusion(m: &[[usize; 4]; 4]) -> String {
    let mut out = format!("{:<12}", "gold\\pred");
    for s in StanceLabel::ALL {
        let _ = write!(out, "{:>10}", s.as_str());
    }
    out.push('\n');
    for (s, row) in StanceLabel::ALL.iter().zip(m) {
        let _ = write!(out, "{:<12}", s.as_str());
        for v in row {
            let _ = write!(out, "{v:>10}");
        }
        out.push('\n');
    }
    out
}

pub fn render_report(r: &EvalSummary) -> String {
    let mut out = String::new();
    for (s, acc) in StanceLabel::ALL.iter().zip(r.report.per_class_accuracy) {
        let shown = acc.map_or("n/a".to_string(), |a| format!("{:.1}%", 100.0 * a));
        let _ = writeln!(out, "{:<10} {shown:>7}", s.as_str());
    }
    let _ = writeln!(out, "{:<10} {:>6.1}%", "overall", 100.0 * r.report.overall_accuracy);
    let _ = writeln!(out, "{:<10} {:>6.1}%", "fnc score", r.report.fnc_score);
    let _ = writeln!(out, "{:<10} {:>6.1}%  (majority class)", "baseline", 100.0 * r.majority_baseline);
    out.push_str(&render_confusion(&r.report.confusion_matrix));
    out
}

/// Hierarchical prediction over a labelled test set.
pub fn cmd_eval(cfg: &RunConfig, out_dir: &Path) -> Result<EvalSummary> {
    create_dir(out_dir)?;
    write_resolved(out_dir, "eval", cfg)?;
    let store_key = if cfg.path("test_stores").is_some() { "test_stores" } else { "stores" };
    let (stores, sidecar) = load_store_dir(&cfg.require_path(store_key)?)?;
    let model = load_bait(cfg, &stores)?;
    let stances_key = if cfg.path("test_stances").is_some() { "test_stances" } else { "stances" };
    let samples = load_samples(cfg, stances_key, &sidecar)?;
    let corpus = EmbeddedCorpus::build(&stores, samples.iter().map(|s| (s.headline_id, s.body_id)), cfg.body_cap()?)?;
    let kept = corpus.keep_embeddable(&samples);
    let examples = corpus.examples(&kept)?;
    let pairs: Vec<_> = examples.iter().map(|e| e.pair).collect();
    let gold: Vec<StanceLabel> = kept.iter().map(|s| s.stance).collect();
    let pred = model.predict(&pairs).map_err(BaitError::Run)?;
    let report = evaluate(&pred, &gold).map_err(BaitError::Run)?;
    let summary = EvalSummary {
        samples: kept.len(),
        dropped_samples: samples.len() - kept.len(),
        majority_baseline: majority_baseline(&gold),
        report,
    };
    write_json(&out_dir.join("report.json"), &summary)?;
    Ok(summary)
}

/// Labels a stances-format CSV without a `Stance` column. Pairs whose body
/// has no sentences are labelled unrelated.
pub fn cmd_predict(cfg: &RunConfig, out_dir: &Path) -> Result<PathBuf> {
    create_dir(out_dir)?;
    write_resolved(out_dir, "predict", cfg)?;
    let (stores, sidecar) = load_store_dir(&cfg.require_path("stores")?)?;
    let model = load_bait(cfg, &stores)?;
    let rows = load_unlabeled_csv(cfg.require_path("input")?)?;
    let keys = rows
        .iter()
        .map(|r| {
            sidecar
                .id(&r.headline)
                .map(|h| (h, r.body_id))
                .ok_or_else(|| BaitError::Integrity(format!("headline {:?} is not in the sidecar", r.headline)))
        })
        .collect::<Result<Vec<_>>>()?;
    let corpus = EmbeddedCorpus::build(&stores, keys.iter().copied(), cfg.body_cap()?)?;
    let embeddable: Vec<usize> = (0..keys.len()).filter(|&i| !corpus.empty_bodies.contains(&keys[i].1)).collect();
    let pairs: Vec<_> = embeddable.iter().map(|&i| corpus.pair(keys[i].0, keys[i].1).expect("embedded")).collect();
    let pred = model.predict(&pairs).map_err(BaitError::Run)?;
    let mut labels = vec![StanceLabel::Unrelated; rows.len()];
    for (&i, p) in embeddable.iter().zip(pred) {
        labels[i] = p;
    }
    if embeddable.len() < rows.len() {
        log::warn!("{} rows have empty bodies and are labelled unrelated", rows.len() - embeddable.len());
    }
    let path = out_dir.join("predictions.csv");
    write_stances_csv(&path, rows.iter().zip(&labels).map(|(r, &l)| (r.headline.as_str(), r.body_id, Some(l))))?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentSummary {
    pub synthetic_samples: Option<usize>,
    pub method_counts: Option<BTreeMap<String, usize>>,
    pub missing_parses: Option<usize>,
    pub not_negated: Option<usize>,
    pub arc_samples: Option<usize>,
    pub arc_distribution: Option<Vec<DistributionRow>>,
}

/// Negation synthesis (when `parses` is set) and ARC adaptation (when
/// `arc` is set).
pub fn cmd_augment(cfg: &RunConfig, out_dir: &Path) -> Result<AugmentSummary> {
    create_dir(out_dir)?;
    write_resolved(out_dir, "augment", cfg)?;
    let seed = cfg.seed()?;
    let mut summary = AugmentSummary {
        synthetic_samples: None,
        method_counts: None,
        missing_parses: None,
        not_negated: None,
        arc_samples: None,
        arc_distribution: None,
    };
    if cfg.path("parses").is_some() {
        let wn = load_wordnet(cfg.require_path("wordnet")?)?;
        let lm = load_lm(cfg.require_path("lm_corpus")?)?;
        let parses = load_parses(cfg.require_path("parses")?)?;
        let stances = load_stances_csv(cfg.require_path("stances")?)?;
        // Parses are keyed by sidecar ids when stores are configured.
        let (headlines, samples) = match cfg.path("stores") {
            Some(_) => {
                let sidecar = load_sidecar(cfg.require_path("stores")?.join(StoreSet::SIDECAR))?;
                let samples = stances.resolve_against(&sidecar)?;
                (sidecar, samples)
            }
            None => (stances.headlines.clone(), stances.samples.clone()),
        };
        let directions = FlipDirections { agree_to_disagree: true, disagree_to_agree: cfg.bool("flip_disagree")? };
        let synth = synthesize_flipped_samples(&samples, &parses, &wn, &lm, directions, headlines.len() as u32);
        let new_text: BTreeMap<u32, &str> = synth.headlines().collect();
        write_stances_csv(
            out_dir.join("synthetic_stances.csv"),
            synth.samples.iter().map(|s| (new_text[&s.headline_id], s.body_id, Some(s.stance))),
        )?;
        let mut extended = headlines.clone();
        for (id, text) in synth.headlines() {
            let got = extended.intern(text);
            if got != id {
                return Err(BaitError::Integrity(format!("negated headline {text:?} duplicates headline {got}")));
            }
        }
        write_sidecar(out_dir.join("headlines.txt"), &extended)?;
        let log_path = out_dir.join("synthesis_log.jsonl");
        let mut log_text = String::new();
        for entry in &synth.log {
            log_text.push_str(&serde_json::to_string(entry)?);
            log_text.push('\n');
        }
        write_text(&log_path, &log_text)?;
        summary.synthetic_samples = Some(synth.samples.len());
        summary.method_counts =
            Some(NegationMethod::ALL.iter().map(|m| (m.as_str().to_string(), synth.method_counts[*m as usize])).collect());
        summary.missing_parses = Some(synth.missing_parses.len());
        summary.not_negated = Some(synth.not_negated.len());
    }
    if cfg.path("arc").is_some() {
        let records = load_arc_csv(cfg.require_path("arc")?)?;
        let adapted = adapt_arc(&records, seed, 0, 0)?;
        write_stances_csv(
            out_dir.join("arc_stances.csv"),
            adapted.samples.iter().map(|s| (adapted.headlines[&s.headline_id].as_str(), s.body_id, Some(s.stance))),
        )?;
        write_bodies_csv(out_dir.join("arc_bodies.csv"), adapted.bodies.iter().map(|(&id, t)| (id, t.as_str())))?;
        summary.arc_samples = Some(adapted.samples.len());
        summary.arc_distribution = Some(distribution_rows(&class_distribution(&adapted.samples)?));
    }
    if summary.synthetic_samples.is_none() && summary.arc_samples.is_none() {
        return Err(BaitError::Config("augment needs `parses` (negation) or `arc` (ARC adaptation)".into()));
    }
    write_json(&out_dir.join("augment.json"), &summary)?;
    Ok(summary)
}

/// Trials already recorded in a JSON-lines history file.
pub fn read_history(path: &Path) -> Result<Vec<TrialRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = fs::File::open(path).map_err(|e| BaitError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| BaitError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TrialRecord = serde_json::from_str(&line)
            .map_err(|e| BaitError::Config(format!("{}: line {}: {e}", path.display(), i + 1)))?;
        out.push(record);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneSummary {
    pub model: ModelKind,
    pub trials: usize,
    pub best: TrialRecord,
    pub history: PathBuf,
}

/// Bayesian search over the configured space, maximizing validation
/// unweighted average class accuracy. Trials already in
/// `tune_history.jsonl` are reused.
pub fn cmd_tune(cfg: &RunConfig, out_dir: &Path) -> Result<TuneSummary> {
    create_dir(out_dir)?;
    let kind = cfg.model_kind()?;
    write_resolved(out_dir, &format!("tune_{}", kind.as_str()), cfg)?;
    let space = match cfg.path("space") {
        Some(_) => {
            let p = cfg.require_path("space")?;
            let text = fs::read_to_string(&p).map_err(|e| BaitError::io(&p, e))?;
            SearchSpace::parse(&text).map_err(|source| BaitError::Input { path: p, source })?
        }
        None => default_space(kind),
    };
    let budget = cfg.usize("budget", 0)?;
    if budget == 0 {
        return Err(BaitError::Config("`budget` must be set to at least 1".into()));
    }
    let (base_model, base_training) = cfg.model_and_training(kind)?;
    // Reject names the model does not have before any training happens.
    apply_config(&space.decode(&vec![0.5; space.encoded_dim()])?, &mut base_model.clone(), &mut base_training.clone())?;
    let history_path = out_dir.join("tune_history.jsonl");
    let history = read_history(&history_path)?;
    if history.len() > budget {
        return Err(BaitError::Config(format!("history already holds {} trials, more than budget {budget}", history.len())));
    }
    let seed = cfg.seed()?;
    let data = TrainingData::load(cfg)?;
    let weighted = cfg.bool("weighted_loss")?;
    let start = Instant::now();
    let result = data.with_examples(|train, val| {
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&history_path)
            .map_err(|e| BaitError::io(&history_path, e))?;
        let mut persist_error = None;
        let result = tune(
            &space,
            budget,
            seed,
            history,
            |config, trial_seed| {
                let mut model = base_model;
                let mut training = base_training.clone();
                apply_config(config, &mut model, &mut training)?;
                if weighted {
                    training.class_weights = Some(balanced_class_weights(&class_counts(kind, train))?);
                }
                let report = train_model(&model, &training, train, val, trial_seed)
                    .map_err(|e| bait_core::Error::Numerical(e.to_string()))?;
                Ok(report.best_val_uaca)
            },
            || start.elapsed().as_secs_f64(),
            |record| {
                let line = serde_json::to_string(record).map_err(|e| bait_core::Error::Contract(e.to_string()))?;
                if let Err(e) = writeln!(file, "{line}").and_then(|_| file.flush()) {
                    persist_error = Some(e);
                    return Err(bait_core::Error::Contract("could not append to the tuning history".into()));
                }
                log::info!("trial objective {:?} config {:?}", record.objective, record.config);
                Ok(())
            },
        );
        if let Some(e) = persist_error {
            return Err(BaitError::io(&history_path, e));
        }
        Ok(result?)
    })?;
    let summary = TuneSummary { model: kind, trials: result.history.len(), best: result.best, history: history_path };
    write_json(&out_dir.join("tune_best.json"), &summary)?;
    Ok(summary)
}
