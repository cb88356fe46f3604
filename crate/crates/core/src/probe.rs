//! Linear probe: softmax(W x + b) trained by full-batch gradient descent on
//! mean cross-entropy with an L2 penalty on W.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::analogy_group_accuracy;
use crate::features::FeatureRow;
use crate::tensorstore::{base_metadata, TensorArchive, TensorRecord};

/// How the dev split scores a candidate set of parameters for early stopping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DevMetric {
    /// Per-row argmax accuracy.
    #[default]
    RowAccuracy,
    /// Per-group argmax of the positive-class (index 1) probability; groups
    /// of four rows, one positive.
    GroupArgmax,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub l2_lambda: f64,
    pub seed: u64,
    pub early_stop_patience: usize,
    pub tolerance: f64,
    pub standardize: bool,
    pub dev_metric: DevMetric,
    /// Ordered class names; inferred as "0".."C-1" when empty.
    pub class_labels: Vec<String>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            max_epochs: 200,
            l2_lambda: 1e-4,
            seed: 0,
            early_stop_patience: 10,
            tolerance: 1e-7,
            standardize: true,
            dev_metric: DevMetric::RowAccuracy,
            class_labels: Vec::new(),
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max_epochs must be positive"));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(Error::invalid("l2_lambda must be non-negative"));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::invalid("tolerance must be non-negative"));
        }
        Ok(())
    }
}

/// Per-dimension z-score taken from the training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    fn fit(rows: &[FeatureRow], dim: usize) -> Self {
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for row in rows {
            for (m, x) in mean.iter_mut().zip(&row.features) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in rows {
            for ((v, x), m) in var.iter_mut().zip(&row.features).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        let mut s = Standardizer { mean, scale };
        round_to_f32(&mut s.mean);
        round_to_f32(&mut s.scale);
        s
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }
}

fn round_to_f32(values: &mut [f64]) {
    values.iter_mut().for_each(|v| *v = f64::from(*v as f32));
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub task: String,
    pub model_id: String,
    pub hidden_size: Option<usize>,
    pub config: Option<TrainConfig>,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_dev_accuracy: f64,
    /// Training loss after each accepted step, starting at the zero model.
    pub loss_history: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeModel {
    /// C x F, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub class_labels: Vec<String>,
    pub feature_dim: usize,
    pub standardizer: Option<Standardizer>,
    pub trained_on: TrainingInfo,
}

impl ProbeModel {
    pub fn zeros(class_labels: Vec<String>, feature_dim: usize) -> Result<Self> {
        if class_labels.len() < 2 {
            return Err(Error::invalid("a probe needs at least two classes"));
        }
        Ok(ProbeModel {
            weights: vec![0.0; class_labels.len() * feature_dim],
            bias: vec![0.0; class_labels.len()],
            class_labels,
            feature_dim,
            standardizer: None,
            trained_on: TrainingInfo::default(),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Flat parameter vector: W row-major, then b.
    pub fn parameters(&self) -> Vec<f64> {
        self.weights.iter().chain(&self.bias).copied().collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_parameters() {
            return Err(Error::DimensionMismatch {
                expected: self.num_parameters(),
                actual: params.len(),
            });
        }
        let (w, b) = params.split_at(self.weights.len());
        self.weights.copy_from_slice(w);
        self.bias.copy_from_slice(b);
        Ok(())
    }

    fn check_input(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                actual: features.len(),
            });
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("probe input contains non-finite values"));
        }
        Ok(())
    }

    fn logits_into(&self, x: &[f64], out: &mut [f64]) {
        let f = self.feature_dim;
        for (c, logit) in out.iter_mut().enumerate() {
            let row = &self.weights[c * f..(c + 1) * f];
            *logit = self.bias[c] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
        }
    }

    pub fn predict_proba(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.check_input(features)?;
        let standardized;
        let x = match &self.standardizer {
            Some(s) => {
                standardized = s.apply(features);
                &standardized[..]
            }
            None => features,
        };
        let mut out = vec![0.0; self.num_classes()];
        self.logits_into(x, &mut out);
        softmax_in_place(&mut out);
        Ok(out)
    }

    pub fn predict(&self, features: &[f64]) -> Result<usize> {
        self.predict_proba(features).map(|p| argmax(&p))
    }

    /// Serialize to archive tensors `probe/weights`, `probe/bias` (plus the
    /// standardizer, when present) and header metadata.
    pub fn to_archive(&self) -> Result<(Vec<TensorRecord>, BTreeMap<String, String>)> {
        let to_f32 = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<f32>>();
        let mut records = vec![
            TensorRecord::new(
                "probe/weights",
                vec![self.num_classes(), self.feature_dim],
                to_f32(&self.weights),
            )?,
            TensorRecord::vector("probe/bias", to_f32(&self.bias))?,
        ];
        if let Some(s) = &self.standardizer {
            records.push(TensorRecord::vector("probe/feature_mean", to_f32(&s.mean))?);
            records.push(TensorRecord::vector("probe/feature_scale", to_f32(&s.scale))?);
        }
        let info = &self.trained_on;
        let mut meta = base_metadata(
            &info.model_id,
            &info.task,
            info.hidden_size.unwrap_or(self.feature_dim),
        );
        meta.insert("probe/class_labels".into(), serde_json::to_string(&self.class_labels)?);
        meta.insert("probe/training".into(), serde_json::to_string(info)?);
        Ok((records, meta))
    }

    pub fn from_archive(archive: &TensorArchive) -> Result<Self> {
        let weights = archive.require("probe/weights")?;
        let bias = archive.require("probe/bias")?;
        let meta = archive.metadata();
        let class_labels: Vec<String> = serde_json::from_str(
            meta.get("probe/class_labels")
                .ok_or_else(|| Error::Format("probe archive lacks class labels".into()))?,
        )?;
        let trained_on: TrainingInfo = match meta.get("probe/training") {
            Some(raw) => serde_json::from_str(raw)?,
            None => TrainingInfo::default(),
        };
        let [c, f] = weights.shape[..] else {
            return Err(Error::Format("probe/weights must be rank 2".into()));
        };
        if c != class_labels.len() || bias.data.len() != c || c < 2 {
            return Err(Error::Format("probe tensor shapes disagree with class labels".into()));
        }
        let widen = |v: &[f32]| v.iter().map(|&x| f64::from(x)).collect::<Vec<f64>>();
        let standardizer = match (archive.get("probe/feature_mean"), archive.get("probe/feature_scale")) {
            (Some(m), Some(s)) if m.data.len() == f && s.data.len() == f => Some(Standardizer {
                mean: widen(&m.data),
                scale: widen(&s.data),
            }),
            (None, None) => None,
            _ => return Err(Error::Format("probe standardizer tensors malformed".into())),
        };
        Ok(ProbeModel {
            weights: widen(&weights.data),
            bias: widen(&bias.data),
            class_labels,
            feature_dim: f,
            standardizer,
            trained_on,
        })
    }
}

fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        sum += *l;
    }
    logits.iter_mut().for_each(|l| *l /= sum);
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// (predicted class, its probability), lowest index on ties.
pub fn probe_confidence(model: &ProbeModel, features: &[f64]) -> Result<(usize, f64)> {
    let p = model.predict_proba(features)?;
    let best = argmax(&p);
    Ok((best, p[best]))
}

/// Mean negative log-likelihood plus `l2_lambda / 2 * ||W||^2`, with its
/// analytic gradient in [`ProbeModel::parameters`] layout.
pub fn cross_entropy_loss(model: &ProbeModel, rows: &[FeatureRow], l2_lambda: f64) -> Result<(f64, Vec<f64>)> {
    if rows.is_empty() {
        return Err(Error::invalid("cross-entropy needs at least one row"));
    }
    let mut inputs = Vec::with_capacity(rows.len() * model.feature_dim);
    let mut labels = Vec::with_capacity(rows.len());
    for row in rows {
        model.check_input(&row.features)?;
        if row.label >= model.num_classes() {
            return Err(Error::invalid(format!(
                "label {} out of range for {} classes",
                row.label,
                model.num_classes()
            )));
        }
        match &model.standardizer {
            Some(s) => inputs.extend(s.apply(&row.features)),
            None => inputs.extend_from_slice(&row.features),
        }
        labels.push(row.label);
    }
    let data = Dataset {
        inputs,
        labels,
        dim: model.feature_dim,
    };
    Ok(loss_and_gradient(model, &data, l2_lambda))
}

struct Dataset {
    inputs: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
}

impl Dataset {
    fn len(&self) -> usize {
        self.labels.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }
}

fn loss_and_gradient(model: &ProbeModel, data: &Dataset, l2_lambda: f64) -> (f64, Vec<f64>) {
    let c = model.num_classes();
    let f = model.feature_dim;
    let mut grad = vec![0.0; model.num_parameters()];
    let mut nll = 0.0;
    let mut logits = vec![0.0; c];
    for i in 0..data.len() {
        let x = data.row(i);
        let y = data.labels[i];
        model.logits_into(x, &mut logits);
        let top = argmax(&logits);
        let max = logits[top];
        // log-sum-exp as max + ln(1 + rest) keeps precision when p_y -> 1
        let rest: f64 = logits
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != top)
            .map(|(_, l)| (l - max).exp())
            .sum();
        let log_sum = rest.ln_1p();
        let log_z = max + log_sum;
        nll += (max - logits[y]) + log_sum;
        for k in 0..c {
            let residual = (logits[k] - log_z).exp() - if k == y { 1.0 } else { 0.0 };
            let gw = &mut grad[k * f..(k + 1) * f];
            for (g, xv) in gw.iter_mut().zip(x) {
                *g += residual * xv;
            }
            grad[c * f + k] += residual;
        }
    }
    let n = data.len() as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    let mut penalty = 0.0;
    for (g, w) in grad.iter_mut().zip(&model.weights) {
        *g += l2_lambda * w;
        penalty += w * w;
    }
    (nll / n + 0.5 * l2_lambda * penalty, grad)
}

fn infer_classes(rows: &[FeatureRow], config: &TrainConfig) -> Result<Vec<String>> {
    let max_label = rows.iter().map(|r| r.label).max().unwrap_or(0);
    if config.class_labels.is_empty() {
        Ok((0..=max_label.max(1)).map(|c| c.to_string()).collect())
    } else if max_label >= config.class_labels.len() {
        Err(Error::invalid(format!(
            "label {max_label} out of range for {} classes",
            config.class_labels.len()
        )))
    } else {
        Ok(config.class_labels.clone())
    }
}

/// Split off roughly 10% of the groups (seeded) as a dev set.
pub fn holdout_split(rows: &[FeatureRow], seed: u64) -> (Vec<FeatureRow>, Vec<FeatureRow>) {
    let groups: BTreeSet<&str> = rows.iter().map(|r| r.group_id.as_str()).collect();
    if groups.len() < 2 {
        return (rows.to_vec(), rows.to_vec());
    }
    let mut groups: Vec<&str> = groups.into_iter().collect();
    groups.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_dev = (groups.len() / 10).max(1);
    let dev: BTreeSet<&str> = groups[..n_dev].iter().copied().collect();
    rows.iter()
        .cloned()
        .partition(|r| !dev.contains(r.group_id.as_str()))
}

/// Dev-split score of a model under the configured metric.
pub fn dev_score(model: &ProbeModel, rows: &[FeatureRow], metric: DevMetric) -> Result<f64> {
    match metric {
        DevMetric::RowAccuracy => {
            let mut correct = 0usize;
            for row in rows {
                if model.predict(&row.features)? == row.label {
                    correct += 1;
                }
            }
            Ok(correct as f64 / rows.len().max(1) as f64)
        }
        DevMetric::GroupArgmax => {
            let (groups, gold) = group_positive_probabilities(model, rows)?;
            analogy_group_accuracy(&groups, &gold)
        }
    }
}

/// Positive-class probabilities per group (in first-seen order) and the index
/// of each group's positive row.
pub fn group_positive_probabilities(
    model: &ProbeModel,
    rows: &[FeatureRow],
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let mut order: Vec<&str> = Vec::new();
    let mut grouped: BTreeMap<&str, (Vec<f64>, Option<usize>)> = BTreeMap::new();
    for row in rows {
        let entry = grouped.entry(&row.group_id).or_insert_with(|| {
            order.push(&row.group_id);
            (Vec::new(), None)
        });
        let p = model.predict_proba(&row.features)?;
        if row.label == 1 {
            entry.1 = Some(entry.0.len());
        }
        entry.0.push(p[1]);
    }
    let mut probs = Vec::with_capacity(order.len());
    let mut gold = Vec::with_capacity(order.len());
    for id in order {
        let (p, g) = grouped.remove(id).unwrap();
        gold.push(g.ok_or_else(|| Error::Data {
            name: id.to_string(),
            message: "group has no positive row".into(),
        })?);
        probs.push(p);
    }
    Ok((probs, gold))
}

/// Train from zero parameters with full-batch gradient descent. A step that
/// raises the training loss is rejected and the learning rate halved, so the
/// accepted loss sequence never increases. Parameters with the best dev score
/// are kept (latest on ties); training stops after `early_stop_patience`
/// accepted steps scoring below the best, or when the loss improves by less
/// than `tolerance`. When `dev_rows` is empty, 10% of the training groups are held
/// out by seed.
pub fn train_probe(
    train_rows: &[FeatureRow],
    dev_rows: &[FeatureRow],
    config: &TrainConfig,
) -> Result<ProbeModel> {
    config.validate()?;
    if train_rows.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let (train_rows, dev_rows) = if dev_rows.is_empty() {
        holdout_split(train_rows, config.seed)
    } else {
        (train_rows.to_vec(), dev_rows.to_vec())
    };
    let dim = train_rows[0].features.len();
    for row in train_rows.iter().chain(&dev_rows) {
        if row.features.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: row.features.len(),
            });
        }
    }
    let classes = infer_classes(&train_rows, config)?;
    let distinct: BTreeSet<usize> = train_rows.iter().map(|r| r.label).collect();
    if distinct.len() < 2 {
        return Err(Error::invalid("training set contains a single class"));
    }
    if let Some(bad) = dev_rows.iter().find(|r| r.label >= classes.len()) {
        return Err(Error::invalid(format!("dev label {} out of range", bad.label)));
    }

    let standardizer = config.standardize.then(|| Standardizer::fit(&train_rows, dim));
    let prep = |rows: &[FeatureRow]| -> Vec<FeatureRow> {
        rows.iter()
            .map(|r| FeatureRow {
                features: match &standardizer {
                    Some(s) => s.apply(&r.features),
                    None => r.features.clone(),
                },
                label: r.label,
                group_id: r.group_id.clone(),
            })
            .collect()
    };
    let train = prep(&train_rows);
    let dev = prep(&dev_rows);
    let data = Dataset {
        inputs: train.iter().flat_map(|r| r.features.iter().copied()).collect(),
        labels: train.iter().map(|r| r.label).collect(),
        dim,
    };

    let mut model = ProbeModel::zeros(classes, dim)?;
    let (mut loss, mut grad) = loss_and_gradient(&model, &data, config.l2_lambda);
    let mut history = vec![loss];
    let mut lr = config.learning_rate;
    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    let mut stale = 0;
    let mut epochs = 0;

    while epochs < config.max_epochs {
        epochs += 1;
        let params = model.parameters();
        let mut candidate = model.clone();
        let stepped: Vec<f64> = params.iter().zip(&grad).map(|(p, g)| p - lr * g).collect();
        candidate.set_parameters(&stepped)?;
        let (new_loss, new_grad) = loss_and_gradient(&candidate, &data, config.l2_lambda);
        if !new_loss.is_finite() || new_loss > loss {
            lr /= 2.0;
            if lr < 1e-12 {
                break;
            }
            continue;
        }
        let improvement = loss - new_loss;
        model = candidate;
        loss = new_loss;
        grad = new_grad;
        history.push(loss);

        // Equal dev accuracy keeps the later (lower-loss) parameters; only a
        // drop counts against patience.
        let score = dev_score(&model, &dev, config.dev_metric)?;
        match &best {
            Some((best_score, _, _)) if score < *best_score => stale += 1,
            _ => {
                best = Some((score, model.parameters(), epochs));
                stale = 0;
            }
        }
        if stale >= config.early_stop_patience || improvement < config.tolerance {
            break;
        }
    }

    let (best_score, best_params, best_epoch) = match best {
        Some(b) => b,
        None => {
            let score = dev_score(&model, &dev, config.dev_metric)?;
            (score, model.parameters(), 0)
        }
    };
    let mut params = best_params;
    round_to_f32(&mut params);
    model.set_parameters(&params)?;
    model.standardizer = standardizer;
    model.trained_on = TrainingInfo {
        config: Some(config.clone()),
        epochs_run: epochs,
        best_epoch,
        best_dev_accuracy: best_score,
        loss_history: history,
        ..TrainingInfo::default()
    };
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(features: &[f64], label: usize) -> FeatureRow {
        FeatureRow {
            features: features.to_vec(),
            label,
            group_id: String::new(),
        }
    }

    fn model_with(weights: Vec<f64>, bias: Vec<f64>, dim: usize) -> ProbeModel {
        let c = bias.len();
        let mut m = ProbeModel::zeros((0..c).map(|i| i.to_string()).collect(), dim).unwrap();
        m.weights = weights;
        m.bias = bias;
        m
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = ProbeModel::zeros(vec!["a".into(), "b".into()], 3).unwrap();
        assert_eq!(m.predict_proba(&[1.0, -4.0, 2.0]).unwrap(), [0.5, 0.5]);
    }

    #[test]
    fn two_class_softmax_value() {
        let m = model_with(vec![0.0, 0.0], vec![2.0, 0.0], 1);
        let p = m.predict_proba(&[0.0]).unwrap();
        let e2 = 2f64.exp();
        assert!((p[0] - e2 / (e2 + 1.0)).abs() < 1e-15);
        assert!((p[0] - 0.8808).abs() < 1e-4 && (p[1] - 0.1192).abs() < 1e-4);
    }

    #[test]
    fn softmax_shift_invariance() {
        let a = model_with(vec![0.3, -0.2, 0.1], vec![2.0, 0.0, -1.0], 1);
        let b = model_with(vec![0.3, -0.2, 0.1], vec![1002.0, 1000.0, 999.0], 1);
        let pa = a.predict_proba(&[0.7]).unwrap();
        let pb = b.predict_proba(&[0.7]).unwrap();
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(pb.iter().all(|p| p.is_finite()));
    }

    #[test]
    fn predict_dimension_mismatch() {
        let m = ProbeModel::zeros(vec!["a".into(), "b".into()], 3).unwrap();
        assert!(matches!(m.predict_proba(&[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(ProbeModel::zeros(vec!["only".into()], 3).is_err());
    }

    #[test]
    fn confidence_tie_and_argmax() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.15, 0.05]), 1);
        let m = ProbeModel::zeros(vec!["a".into(), "b".into()], 1).unwrap();
        assert_eq!(probe_confidence(&m, &[3.0]).unwrap(), (0, 0.5));
    }

    #[test]
    fn uniform_loss_is_ln2_plus_penalty() {
        let m = ProbeModel::zeros(vec!["a".into(), "b".into()], 2).unwrap();
        let (loss, grad) = cross_entropy_loss(&m, &[row(&[1.0, 2.0], 1)], 0.5).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(grad.len(), 6);
        // With nonzero weights the penalty shows up on top of the data term.
        let m = model_with(vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 0.0], 2);
        let (loss, _) = cross_entropy_loss(&m, &[row(&[3.0, 9.0], 0)], 0.5).unwrap();
        assert!((loss - (std::f64::consts::LN_2 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn near_zero_loss_limit() {
        // logit gap of 30 -> p = 1 - eps with eps ~ 9.4e-14
        let m = model_with(vec![0.0, 0.0], vec![30.0, 0.0], 1);
        let (loss, grad) = cross_entropy_loss(&m, &[row(&[1.0], 0)], 0.0).unwrap();
        let eps = 1.0 / (1.0 + 30f64.exp());
        assert!((loss - eps).abs() < 1e-15);
        assert!(grad.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn loss_rejects_bad_label() {
        let m = ProbeModel::zeros(vec!["a".into(), "b".into()], 1).unwrap();
        assert!(cross_entropy_loss(&m, &[row(&[1.0], 2)], 0.0).is_err());
        assert!(cross_entropy_loss(&m, &[], 0.0).is_err());
    }

    #[test]
    fn train_errors() {
        let cfg = TrainConfig::default();
        assert!(train_probe(&[], &[], &cfg).is_err());
        let single = [row(&[1.0], 1), row(&[2.0], 1)];
        assert!(train_probe(&single, &single, &cfg).is_err());
    }

    #[test]
    fn holdout_keeps_groups_together() {
        let rows: Vec<FeatureRow> = (0..40)
            .map(|i| FeatureRow {
                features: vec![i as f64],
                label: i % 2,
                group_id: format!("g{}", i / 4),
            })
            .collect();
        let (train, dev) = holdout_split(&rows, 7);
        assert_eq!(train.len() + dev.len(), 40);
        assert_eq!(dev.len(), 4);
        let dev_group = &dev[0].group_id;
        assert!(dev.iter().all(|r| &r.group_id == dev_group));
        assert!(train.iter().all(|r| &r.group_id != dev_group));
        assert_eq!(holdout_split(&rows, 7), (train, dev));
    }

    #[test]
    fn archive_roundtrip_is_bit_exact() {
        let rows: Vec<FeatureRow> = (0..30)
            .map(|i| {
                let x = i as f64 / 7.0;
                row(&[x, (x * 3.1).sin() * 5.0, 2.0], usize::from(x > 2.0))
            })
            .collect();
        let model = train_probe(&rows, &rows, &TrainConfig::default()).unwrap();
        let (records, meta) = model.to_archive().unwrap();
        let mut bytes = Vec::new();
        crate::tensorstore::write_archive(&records, &meta, &mut bytes).unwrap();
        let back = ProbeModel::from_archive(&crate::tensorstore::decode_archive(&bytes).unwrap()).unwrap();
        assert_eq!(back, model);
    }
}
