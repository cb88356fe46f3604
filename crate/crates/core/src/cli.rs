//! Run manifests and the pipeline commands behind the `semgap` binary.
//!
//! File layout under the archive directory (written by the extraction sidecar):
//!
//! ```text
//! <archive_dir>/<model>/<task>-<split>-vectors.hsx
//! <archive_dir>/<model>/<task>-<split>-logits-<template>.hsx
//! ```
//!
//! and under the output directory:
//!
//! ```text
//! <out>/<model>/<task>/{probe,query}.eval.json
//! <out>/<model>/<task>/{probe,query}.calibration.json
//! <out>/<model>/<task>/probe.model.hsx
//! <out>/<model>/<task>/query.templates.json, query.results.jsonl
//! ```
//!
//! `<model>` is the model id with `/` replaced by `__`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{
    parse_bats, parse_conll, parse_wic, AnalogyQuestion, NerSentence, NerTag, Task, WicInstance,
};
use crate::error::{Error, Result};
use crate::eval::{
    accuracy, calibration_report, confusion_matrix, ner_prf, CalibrationReport, EvalReport, Method,
    Prediction, DEFAULT_BINS,
};
use crate::features::{build_analogy_rows, ner_row, wic_features, FeatureRow, WordVector};
use crate::probe::{argmax, group_positive_probabilities, holdout_split, train_probe, DevMetric, ProbeModel, TrainConfig};
use crate::query::{
    default_prompt_bank, load_prompt_bank, select_best_prompt, select_surface_variant, templates_for,
    CandidateSet, ModelFamily, PromptTemplate, QueryResult,
};
use crate::report::{gap_entries, render_gap_summary, render_table, ResultsMatrix, TableFormat};
use crate::tensorstore::{read_archive_file, write_archive_file, TensorArchive};

pub const OUT_ENV: &str = "SEMGAP_OUT";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: String,
    pub family: ModelFamily,
}

/// A dataset split: a single file, or WiC's data + gold pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SplitSource {
    File(PathBuf),
    Paired { data: PathBuf, gold: PathBuf },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskDatasets {
    pub train: Option<SplitSource>,
    pub dev: Option<SplitSource>,
    pub test: Option<SplitSource>,
    /// Context-sentence bank for analogy words (read by the sidecar).
    pub contexts: Option<PathBuf>,
}

/// Optional overrides of [`TrainConfig`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeOverrides {
    pub learning_rate: Option<f64>,
    pub max_epochs: Option<usize>,
    pub l2_lambda: Option<f64>,
    pub early_stop_patience: Option<usize>,
    pub tolerance: Option<f64>,
    pub standardize: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub models: Vec<ModelSpec>,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub datasets: BTreeMap<Task, TaskDatasets>,
    pub prompt_bank: Option<PathBuf>,
    pub archive_dir: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub probe: ProbeOverrides,
    pub calibration_bins: Option<usize>,
}

impl RunManifest {
    /// Load a TOML or JSON manifest (by extension; `.json` is JSON, anything
    /// else TOML). Relative paths resolve against the manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        let text = fs::read_to_string(path)?;
        let mut manifest: RunManifest = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text)?
        } else {
            toml::from_str(&text).map_err(|e| Error::invalid(format!("manifest: {e}")))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        manifest.resolve_paths(base);
        manifest.validate()?;
        Ok(manifest)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.archive_dir);
        fix(&mut self.output_dir);
        if let Some(p) = &mut self.prompt_bank {
            fix(p);
        }
        for ds in self.datasets.values_mut() {
            for split in [&mut ds.train, &mut ds.dev, &mut ds.test].into_iter().flatten() {
                match split {
                    SplitSource::File(p) => fix(p),
                    SplitSource::Paired { data, gold } => {
                        fix(data);
                        fix(gold);
                    }
                }
            }
            if let Some(p) = &mut ds.contexts {
                fix(p);
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::invalid("manifest lists no models"));
        }
        if let Some(bins) = self.calibration_bins.filter(|&b| b == 0) {
            return Err(Error::invalid(format!("calibration_bins must be positive, got {bins}")));
        }
        Ok(())
    }

    pub fn model(&self, id: &str) -> Result<&ModelSpec> {
        self.models
            .iter()
            .find(|m| m.id == id)
            .ok_or_else(|| Error::invalid(format!("model `{id}` is not in the manifest")))
    }

    pub fn train_config(&self, task: Task) -> TrainConfig {
        let d = TrainConfig::default();
        let o = &self.probe;
        TrainConfig {
            learning_rate: o.learning_rate.unwrap_or(d.learning_rate),
            max_epochs: o.max_epochs.unwrap_or(d.max_epochs),
            l2_lambda: o.l2_lambda.unwrap_or(d.l2_lambda),
            seed: self.seed,
            early_stop_patience: o.early_stop_patience.unwrap_or(d.early_stop_patience),
            tolerance: o.tolerance.unwrap_or(d.tolerance),
            standardize: o.standardize.unwrap_or(d.standardize),
            dev_metric: match task {
                Task::Analogy => DevMetric::GroupArgmax,
                _ => DevMetric::RowAccuracy,
            },
            class_labels: task.class_labels(),
        }
    }

    pub fn bins(&self) -> usize {
        self.calibration_bins.unwrap_or(DEFAULT_BINS)
    }

    pub fn prompt_bank(&self) -> Result<Vec<PromptTemplate>> {
        match &self.prompt_bank {
            Some(path) => load_prompt_bank(open(path)?),
            None => Ok(default_prompt_bank()),
        }
    }

    fn split(&self, task: Task, split: &str) -> Option<&SplitSource> {
        let ds = self.datasets.get(&task)?;
        match split {
            "train" => ds.train.as_ref(),
            "dev" => ds.dev.as_ref(),
            "test" => ds.test.as_ref(),
            _ => None,
        }
    }

    fn require_split(&self, task: Task, split: &str) -> Result<&SplitSource> {
        self.split(task, split).ok_or_else(|| {
            Error::invalid(format!("manifest has no `{split}` split for task {task}"))
        })
    }
}

pub fn model_slug(id: &str) -> String {
    id.replace('/', "__")
}

pub fn vectors_archive_path(archive_dir: &Path, model: &str, task: Task, split: &str) -> PathBuf {
    archive_dir
        .join(model_slug(model))
        .join(format!("{task}-{split}-vectors.hsx"))
}

pub fn logits_archive_path(archive_dir: &Path, model: &str, task: Task, split: &str, template: &str) -> PathBuf {
    archive_dir
        .join(model_slug(model))
        .join(format!("{task}-{split}-logits-{template}.hsx"))
}

pub fn task_output_dir(out: &Path, model: &str, task: Task) -> PathBuf {
    out.join(model_slug(model)).join(task.as_str())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

/// Parsed records of one split.
pub enum SplitData {
    Wic(Vec<WicInstance>),
    Ner(Vec<NerSentence>),
    Analogy(Vec<AnalogyQuestion>),
}

pub fn load_split(task: Task, source: &SplitSource) -> Result<SplitData> {
    match (task, source) {
        (Task::Wic, SplitSource::Paired { data, gold }) => {
            Ok(SplitData::Wic(parse_wic(open(data)?, open(gold)?)?))
        }
        (Task::Ner, SplitSource::File(path)) => Ok(SplitData::Ner(parse_conll(open(path)?)?)),
        (Task::Analogy, SplitSource::File(path)) => Ok(SplitData::Analogy(parse_bats(open(path)?)?)),
        (task, _) => Err(Error::invalid(format!(
            "task {task} needs {} split source",
            if task == Task::Wic { "a {data, gold}" } else { "a single-file" }
        ))),
    }
}

fn vector_from(archive: &TensorArchive, name: &str, dim: &mut Option<usize>) -> Result<WordVector> {
    let record = archive.require(name)?;
    let (instance, role) = name.rsplit_once('/').unwrap_or((name, ""));
    let v = WordVector::from_f32(&record.data, instance, role)?;
    match *dim {
        Some(d) if d != v.dim() => {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: v.dim(),
            })
        }
        _ => *dim = Some(v.dim()),
    }
    Ok(v)
}

fn check_hidden_size(archive: &TensorArchive, dim: Option<usize>, path: &Path) -> Result<()> {
    let declared = archive.metadata().get("hidden_size").and_then(|h| h.parse::<usize>().ok());
    match (declared, dim) {
        (Some(h), Some(d)) if h != d => Err(Error::Data {
            name: path.display().to_string(),
            message: format!("vectors have dimension {d} but hidden_size is {h}"),
        }),
        _ => Ok(()),
    }
}

/// Feature rows for one split, read from its word-vector archive.
/// Analogy rows are grouped by question; `augment` adds the permuted
/// positive for training.
pub fn build_rows(data: &SplitData, archive: &TensorArchive, augment: bool) -> Result<Vec<FeatureRow>> {
    let mut dim = None;
    let mut rows = Vec::new();
    match data {
        SplitData::Wic(instances) => {
            for inst in instances {
                let h1 = vector_from(archive, &format!("wic/{}/word1", inst.id), &mut dim)?;
                let h2 = vector_from(archive, &format!("wic/{}/word2", inst.id), &mut dim)?;
                rows.push(FeatureRow {
                    features: wic_features(&h1, &h2)?,
                    label: inst.gold.class_index(),
                    group_id: inst.id.clone(),
                });
            }
        }
        SplitData::Ner(sentences) => {
            for (s, sentence) in sentences.iter().enumerate() {
                for (w, tag) in sentence.gold_tags.iter().enumerate() {
                    let h = vector_from(archive, &format!("ner/{s}/{w}"), &mut dim)?;
                    rows.push(ner_row(&h, tag.class_index(), format!("{s}/{w}")));
                }
            }
        }
        SplitData::Analogy(questions) => {
            let mut vectors = HashMap::new();
            for q in questions {
                for word in q.words() {
                    if !vectors.contains_key(word) {
                        let v = vector_from(archive, &format!("analogy/word/{word}"), &mut dim)?;
                        vectors.insert(word.to_string(), v);
                    }
                }
                rows.extend(build_analogy_rows(q, &vectors, augment)?);
            }
        }
    }
    check_hidden_size(archive, dim, Path::new("vectors"))?;
    Ok(rows)
}

fn predictions_from_probe(model: &ProbeModel, data: &SplitData, rows: &[FeatureRow]) -> Result<Vec<Prediction>> {
    match data {
        SplitData::Analogy(_) => {
            // One prediction per question; confidence is the chosen pair's
            // positive probability normalised over the four choices.
            let (groups, gold) = group_positive_probabilities(model, rows)?;
            let mut ids = Vec::new();
            for r in rows {
                if ids.last() != Some(&r.group_id) {
                    ids.push(r.group_id.clone());
                }
            }
            Ok(groups
                .iter()
                .zip(gold)
                .zip(ids)
                .map(|((probs, gold), id)| {
                    let best = argmax(probs);
                    let total: f64 = probs.iter().sum();
                    Prediction {
                        id,
                        predicted: best,
                        gold,
                        confidence: probs[best] / total,
                    }
                })
                .collect())
        }
        _ => rows
            .iter()
            .map(|r| {
                let p = model.predict_proba(&r.features)?;
                let best = argmax(&p);
                Ok(Prediction {
                    id: r.group_id.clone(),
                    predicted: best,
                    gold: r.label,
                    confidence: p[best],
                })
            })
            .collect(),
    }
}

fn eval_report(
    task: Task,
    method: Method,
    model_id: &str,
    predictions: &[Prediction],
    template_id: Option<String>,
) -> Result<EvalReport> {
    let (ner, class_labels, confusion) = match task {
        Task::Ner => (
            Some(ner_prf(predictions, NerTag::OUTSIDE)?),
            Some(task.class_labels()),
            Some(confusion_matrix(predictions, NerTag::ALL.len())?),
        ),
        Task::Wic => (
            None,
            Some(task.class_labels()),
            Some(confusion_matrix(predictions, 2)?),
        ),
        Task::Analogy => (None, None, None),
    };
    Ok(EvalReport {
        task: task.as_str().to_string(),
        method,
        model_id: model_id.to_string(),
        count: predictions.len(),
        accuracy: accuracy(predictions)?,
        ner,
        template_id,
        class_labels,
        confusion,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug)]
pub struct ProbeOutcome {
    pub eval: EvalReport,
    pub calibration: CalibrationReport,
    pub model: ProbeModel,
    pub files: Vec<PathBuf>,
}

/// Train the task's probe on the train split (dev split or seeded holdout for
/// early stopping), evaluate on test, and write the report, calibration and
/// serialized model.
pub fn cmd_probe(manifest: &RunManifest, task: Task, model_id: &str) -> Result<ProbeOutcome> {
    manifest.model(model_id)?;
    let load = |split: &str, augment: bool| -> Result<Option<(SplitData, Vec<FeatureRow>)>> {
        let Some(source) = manifest.split(task, split) else {
            return Ok(None);
        };
        let path = vectors_archive_path(&manifest.archive_dir, model_id, task, split);
        let archive = read_archive_file(&path)?;
        let data = load_split(task, source)?;
        let rows = build_rows(&data, &archive, augment)?;
        Ok(Some((data, rows)))
    };
    manifest.require_split(task, "train")?;
    manifest.require_split(task, "test")?;
    let augment = task == Task::Analogy;
    let (_, mut train_rows) = load("train", augment)?.expect("checked");
    let mut dev_rows = load("dev", false)?.map(|(_, rows)| rows).unwrap_or_default();
    let (test_data, test_rows) = load("test", false)?.expect("checked");

    let config = manifest.train_config(task);
    if dev_rows.is_empty() {
        // Hold out whole groups before augmentation so dev groups keep
        // exactly their original rows.
        let plain: Vec<FeatureRow> = if augment {
            load("train", false)?.expect("checked").1
        } else {
            train_rows.clone()
        };
        let (_, dev) = holdout_split(&plain, config.seed);
        if dev.len() < plain.len() {
            let held: BTreeSet<&str> = dev.iter().map(|r| r.group_id.as_str()).collect();
            train_rows.retain(|r| !held.contains(r.group_id.as_str()));
        }
        dev_rows = dev;
    }
    let mut model = train_probe(&train_rows, &dev_rows, &config)?;
    model.trained_on.task = task.as_str().to_string();
    model.trained_on.model_id = model_id.to_string();

    let predictions = predictions_from_probe(&model, &test_data, &test_rows)?;
    let eval = eval_report(task, Method::Probe, model_id, &predictions, None)?;
    let calibration = calibration_report(&predictions, manifest.bins(), task.as_str(), model_id, Method::Probe)?;

    let dir = task_output_dir(&manifest.output_dir, model_id, task);
    fs::create_dir_all(&dir)?;
    let files = vec![
        dir.join("probe.eval.json"),
        dir.join("probe.calibration.json"),
        dir.join("probe.model.hsx"),
    ];
    write_json(&files[0], &eval)?;
    write_json(&files[1], &calibration)?;
    let (records, meta) = model.to_archive()?;
    write_archive_file(&files[2], &records, &meta)?;
    Ok(ProbeOutcome {
        eval,
        calibration,
        model,
        files,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateScore {
    pub template_id: String,
    /// Accuracy for WiC/analogy, F1 for NER.
    pub score: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateSummary {
    pub model_id: String,
    pub task: Task,
    pub family: ModelFamily,
    pub surface_variant: usize,
    pub templates: Vec<TemplateScore>,
    pub selected: String,
}

#[derive(Debug)]
pub struct QueryOutcome {
    pub eval: EvalReport,
    pub calibration: CalibrationReport,
    pub summary: TemplateSummary,
    pub files: Vec<PathBuf>,
}

/// (instance id used in logit record names, gold class) per query instance.
fn query_items(data: &SplitData) -> Vec<(String, usize)> {
    match data {
        SplitData::Wic(instances) => instances
            .iter()
            .map(|i| (i.id.clone(), i.gold.class_index()))
            .collect(),
        SplitData::Ner(sentences) => sentences
            .iter()
            .enumerate()
            .flat_map(|(s, sent)| {
                sent.gold_tags
                    .iter()
                    .enumerate()
                    .map(move |(w, t)| (format!("{s}/{w}"), t.class_index()))
            })
            .collect(),
        SplitData::Analogy(questions) => questions.iter().map(|q| (q.id.clone(), q.gold_index)).collect(),
    }
}

/// Candidate scores of one record as surface variants x candidates.
fn variant_rows(archive: &TensorArchive, name: &str, candidates: usize) -> Result<Vec<Vec<f64>>> {
    let record = archive.require(name)?;
    let widen = |s: &[f32]| s.iter().map(|&v| f64::from(v)).collect::<Vec<f64>>();
    match record.shape[..] {
        [c] if c == candidates => Ok(vec![widen(&record.data)]),
        [v, c] if c == candidates => Ok((0..v).map(|i| widen(record.row(i).unwrap())).collect()),
        _ => Err(Error::Data {
            name: name.to_string(),
            message: format!(
                "expected shape [{candidates}] or [variants, {candidates}], got {:?}",
                record.shape
            ),
        }),
    }
}

/// Score every template's answer-slot logits on the test split, keep the best
/// template, and write its report, calibration, per-template scores and the
/// per-instance results.
pub fn cmd_query(manifest: &RunManifest, task: Task, model_id: &str) -> Result<QueryOutcome> {
    let spec = manifest.model(model_id)?;
    let bank = manifest.prompt_bank()?;
    let templates = templates_for(&bank, task);
    if templates.is_empty() {
        return Err(Error::invalid(format!("prompt bank has no {task} templates")));
    }
    let data = load_split(task, manifest.require_split(task, "test")?)?;
    let items = query_items(&data);
    if items.is_empty() {
        return Err(Error::invalid(format!("{task} test split is empty")));
    }
    let candidates = CandidateSet::for_task(task);

    let mut scores: Vec<(String, Vec<Vec<Vec<f64>>>)> = Vec::new();
    for t in &templates {
        let path = logits_archive_path(&manifest.archive_dir, model_id, task, "test", &t.id);
        let archive = read_archive_file(&path)?;
        let per_item = items
            .iter()
            .map(|(id, _)| variant_rows(&archive, &format!("logits/{}/{id}", t.id), candidates.len()))
            .collect::<Result<Vec<_>>>()?;
        scores.push((t.id.clone(), per_item));
    }
    let all: Vec<Vec<Vec<f64>>> = scores.iter().flat_map(|(_, s)| s.iter().cloned()).collect();
    let variant = select_surface_variant(&all)?;

    let mut per_template = Vec::new();
    let mut results: BTreeMap<String, (Vec<QueryResult>, Vec<Prediction>)> = BTreeMap::new();
    for (template_id, per_item) in &scores {
        let mut qr = Vec::with_capacity(items.len());
        let mut preds = Vec::with_capacity(items.len());
        for ((id, gold), rows) in items.iter().zip(per_item) {
            let r = candidates.score(id, template_id, &rows[variant])?;
            preds.push(Prediction {
                id: id.clone(),
                predicted: r.predicted_class,
                gold: *gold,
                confidence: r.confidence,
            });
            qr.push(r);
        }
        let acc = accuracy(&preds)?;
        let score = match task {
            Task::Ner => ner_prf(&preds, NerTag::OUTSIDE)?.f1,
            _ => acc,
        };
        per_template.push(TemplateScore {
            template_id: template_id.clone(),
            score,
            accuracy: acc,
        });
        results.insert(template_id.clone(), (qr, preds));
    }
    let ranked: Vec<(String, f64)> = per_template.iter().map(|t| (t.template_id.clone(), t.score)).collect();
    let (selected, _) = select_best_prompt(&ranked)?;
    let (query_results, predictions) = results.remove(&selected).expect("scored");

    let eval = eval_report(task, Method::Query, model_id, &predictions, Some(selected.clone()))?;
    let calibration = calibration_report(&predictions, manifest.bins(), task.as_str(), model_id, Method::Query)?;
    let summary = TemplateSummary {
        model_id: model_id.to_string(),
        task,
        family: spec.family,
        surface_variant: variant,
        templates: per_template,
        selected,
    };

    let dir = task_output_dir(&manifest.output_dir, model_id, task);
    fs::create_dir_all(&dir)?;
    let files = vec![
        dir.join("query.eval.json"),
        dir.join("query.calibration.json"),
        dir.join("query.templates.json"),
        dir.join("query.results.jsonl"),
    ];
    write_json(&files[0], &eval)?;
    write_json(&files[1], &calibration)?;
    write_json(&files[2], &summary)?;
    let mut lines = Vec::new();
    crate::corpus::write_json_lines(&query_results, &mut lines)?;
    fs::write(&files[3], lines)?;
    Ok(QueryOutcome {
        eval,
        calibration,
        summary,
        files,
    })
}

/// Collect every `*.eval.json` under the output directory and write the
/// results tables, gap summary and reliability CSVs.
pub fn cmd_report(manifest: &RunManifest) -> Result<Vec<PathBuf>> {
    let out = &manifest.output_dir;
    let mut eval_files = Vec::new();
    collect_eval_files(out, &mut eval_files)?;
    eval_files.sort();
    if eval_files.is_empty() {
        return Err(Error::MissingInput(out.join("<model>/<task>/{probe,query}.eval.json")));
    }
    let mut reports = Vec::new();
    let mut calibrations = Vec::new();
    for path in &eval_files {
        let report: EvalReport = serde_json::from_reader(open(path)?)?;
        let name = path.file_name().unwrap().to_string_lossy().replace(".eval.json", ".calibration.json");
        let cal_path = path.with_file_name(name);
        if cal_path.exists() {
            let cal: CalibrationReport = serde_json::from_reader(open(&cal_path)?)?;
            calibrations.push(cal);
        }
        reports.push(report);
    }
    let order: Vec<String> = manifest.models.iter().map(|m| m.id.clone()).collect();
    let matrix = ResultsMatrix::from_reports(&reports, &order)?;

    let mut written = Vec::new();
    for format in [TableFormat::Markdown, TableFormat::Csv, TableFormat::Latex] {
        let path = out.join(format!("results.{}", format.extension()));
        fs::write(&path, render_table(&matrix, format)?)?;
        written.push(path);
    }
    if !gap_entries(&matrix).is_empty() {
        let path = out.join("gap_summary.md");
        fs::write(&path, render_gap_summary(&matrix)?)?;
        written.push(path);
    }
    for cal in &calibrations {
        let task: Task = cal.task.parse()?;
        let suffix = if task == Task::Wic { String::new() } else { format!("_{task}") };
        let path = out.join(format!(
            "calibration_{}_{}{suffix}.csv",
            model_slug(&cal.model_id),
            cal.source.as_str()
        ));
        let mut buf = Vec::new();
        cal.write_csv(&mut buf)?;
        fs::write(&path, buf)?;
        written.push(path);
    }
    Ok(written)
}

fn collect_eval_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if !dir.is_dir() {
        return Ok(());
    }
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_eval_files(&path, out)?;
        } else if path
            .file_name()
            .is_some_and(|n| n == "probe.eval.json" || n == "query.eval.json")
        {
            out.push(path);
        }
    }
    Ok(())
}

/// Canonical JSON-lines dump of one corpus file.
pub fn cmd_corpus_dump(task: Task, source: &SplitSource, sink: impl std::io::Write) -> Result<usize> {
    use crate::corpus::write_json_lines;
    match load_split(task, source)? {
        SplitData::Wic(r) => write_json_lines(&r, sink).map(|_| r.len()),
        SplitData::Ner(r) => write_json_lines(&r, sink).map(|_| r.len()),
        SplitData::Analogy(r) => write_json_lines(&r, sink).map(|_| r.len()),
    }
}
