//! Accuracy, token-level NER precision/recall/F1 and calibration.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub predicted: usize,
    pub gold: usize,
    pub confidence: f64,
}

impl Prediction {
    pub fn is_correct(&self) -> bool {
        self.predicted == self.gold
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Query,
    Probe,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Query => "query",
            Method::Probe => "probe",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Query => "Query",
            Method::Probe => "Probe",
        })
    }
}

pub fn accuracy(predictions: &[Prediction]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::invalid("accuracy of an empty prediction set"));
    }
    let correct = predictions.iter().filter(|p| p.is_correct()).count();
    Ok(correct as f64 / predictions.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecallF1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Token-level micro precision/recall/F1 over every class except `outside`.
pub fn ner_prf(predictions: &[Prediction], outside: usize) -> Result<PrecisionRecallF1> {
    if predictions.is_empty() {
        return Err(Error::invalid("NER scores of an empty prediction set"));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for p in predictions {
        let pred_entity = p.predicted != outside;
        let gold_entity = p.gold != outside;
        if pred_entity && p.predicted == p.gold {
            tp += 1;
            continue;
        }
        if pred_entity {
            fp += 1;
        }
        if gold_entity {
            fn_ += 1;
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(PrecisionRecallF1 {
        precision,
        recall,
        f1,
    })
}

/// Row = gold class, column = predicted class.
pub fn confusion_matrix(predictions: &[Prediction], num_classes: usize) -> Result<Vec<Vec<usize>>> {
    let mut m = vec![vec![0; num_classes]; num_classes];
    for p in predictions {
        if p.gold >= num_classes || p.predicted >= num_classes {
            return Err(Error::invalid(format!(
                "prediction {} has a class outside 0..{num_classes}",
                p.id
            )));
        }
        m[p.gold][p.predicted] += 1;
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    /// `None` for empty bins.
    pub mean_confidence: Option<f64>,
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub task: String,
    pub model_id: String,
    pub source: Method,
    pub bins: Vec<CalibrationBin>,
    pub ece: f64,
}

impl CalibrationReport {
    /// `bin_lower,bin_upper,count,mean_confidence,accuracy`; empty bins leave
    /// the last two fields blank.
    pub fn write_csv(&self, mut sink: impl Write) -> Result<()> {
        writeln!(sink, "bin_lower,bin_upper,count,mean_confidence,accuracy")?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for b in &self.bins {
            writeln!(
                sink,
                "{},{},{},{},{}",
                b.lower,
                b.upper,
                b.count,
                opt(b.mean_confidence),
                opt(b.accuracy)
            )?;
        }
        Ok(())
    }
}

pub const DEFAULT_BINS: usize = 10;

fn bin_index(confidence: f64, num_bins: usize) -> usize {
    ((confidence * num_bins as f64).floor() as usize).min(num_bins - 1)
}

/// Equal-width reliability bins over (0, 1] and the expected calibration
/// error `sum_b (n_b / n) * |acc_b - conf_b|`. Confidence 1.0 lands in the
/// top bin.
pub fn calibration(predictions: &[Prediction], num_bins: usize) -> Result<(Vec<CalibrationBin>, f64)> {
    if predictions.is_empty() {
        return Err(Error::invalid("calibration of an empty prediction set"));
    }
    if num_bins == 0 {
        return Err(Error::invalid("bin count must be positive"));
    }
    let mut counts = vec![0usize; num_bins];
    let mut conf_sum = vec![0.0; num_bins];
    let mut correct = vec![0usize; num_bins];
    for p in predictions {
        if !(p.confidence > 0.0 && p.confidence <= 1.0) {
            return Err(Error::Data {
                name: p.id.clone(),
                message: format!("confidence {} outside (0, 1]", p.confidence),
            });
        }
        let b = bin_index(p.confidence, num_bins);
        counts[b] += 1;
        conf_sum[b] += p.confidence;
        correct[b] += usize::from(p.is_correct());
    }
    let total = predictions.len() as f64;
    let mut ece = 0.0;
    let bins = (0..num_bins)
        .map(|b| {
            let lower = b as f64 / num_bins as f64;
            let upper = (b + 1) as f64 / num_bins as f64;
            if counts[b] == 0 {
                return CalibrationBin {
                    lower,
                    upper,
                    count: 0,
                    mean_confidence: None,
                    accuracy: None,
                };
            }
            let n = counts[b] as f64;
            let mean_conf = conf_sum[b] / n;
            let acc = correct[b] as f64 / n;
            ece += n / total * (acc - mean_conf).abs();
            CalibrationBin {
                lower,
                upper,
                count: counts[b],
                mean_confidence: Some(mean_conf),
                accuracy: Some(acc),
            }
        })
        .collect();
    Ok((bins, ece))
}

pub fn calibration_report(
    predictions: &[Prediction],
    num_bins: usize,
    task: &str,
    model_id: &str,
    source: Method,
) -> Result<CalibrationReport> {
    let (bins, ece) = calibration(predictions, num_bins)?;
    Ok(CalibrationReport {
        task: task.to_string(),
        model_id: model_id.to_string(),
        source,
        bins,
        ece,
    })
}

/// Fraction of groups whose highest positive probability (lowest index on
/// ties) sits on the gold choice.
pub fn analogy_group_accuracy(groups: &[Vec<f64>], gold: &[usize]) -> Result<f64> {
    if groups.len() != gold.len() {
        return Err(Error::Alignment(format!(
            "{} groups but {} gold indices",
            groups.len(),
            gold.len()
        )));
    }
    if groups.is_empty() {
        return Err(Error::invalid("no analogy groups"));
    }
    let mut correct = 0usize;
    for (i, (probs, &g)) in groups.iter().zip(gold).enumerate() {
        if probs.len() != 4 {
            return Err(Error::Data {
                name: format!("group {i}"),
                message: format!("expected 4 choices, found {}", probs.len()),
            });
        }
        if crate::probe::argmax(probs) == g {
            correct += 1;
        }
    }
    Ok(correct as f64 / groups.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub method: Method,
    pub model_id: String,
    pub count: usize,
    pub accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ner: Option<PrecisionRecallF1>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<Vec<Vec<usize>>>,
}
