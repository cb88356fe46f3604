//! Probe inputs built from word-level hidden vectors.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::AnalogyQuestion;
use crate::error::{Error, Result};
use crate::tensorstore::{TensorArchive, TensorRecord};

/// A word's contextual vector (mean over its subword tokens).
#[derive(Clone, Debug, PartialEq)]
pub struct WordVector {
    pub values: Vec<f64>,
    /// (instance id, role tag)
    pub source: (String, String),
}

impl WordVector {
    pub fn new(values: Vec<f64>) -> Self {
        WordVector {
            values,
            source: (String::new(), String::new()),
        }
    }

    pub fn from_f32(values: &[f32], instance: &str, role: &str) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data {
                name: format!("{instance}/{role}"),
                message: format!("non-finite entry at {pos}"),
            });
        }
        Ok(WordVector {
            values: values.iter().map(|&v| f64::from(v)).collect(),
            source: (instance.to_string(), role.to_string()),
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub features: Vec<f64>,
    pub label: usize,
    pub group_id: String,
}

fn check_dims(expected: usize, vectors: &[&WordVector]) -> Result<()> {
    match vectors.iter().find(|v| v.dim() != expected) {
        Some(v) => Err(Error::DimensionMismatch {
            expected,
            actual: v.dim(),
        }),
        None => Ok(()),
    }
}

/// Elementwise mean of a word's token vectors.
pub fn average_token_vectors(token_vectors: &[Vec<f64>]) -> Result<WordVector> {
    let first = token_vectors.first().ok_or_else(|| {
        Error::Alignment("word produced zero tokens; nothing to average".to_string())
    })?;
    let dim = first.len();
    let mut sum = vec![0.0; dim];
    for v in token_vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
    }
    let m = token_vectors.len() as f64;
    sum.iter_mut().for_each(|s| *s /= m);
    Ok(WordVector::new(sum))
}

/// `[h1 ; h2 ; |h1 - h2|]`
pub fn wic_features(h1: &WordVector, h2: &WordVector) -> Result<Vec<f64>> {
    check_dims(h1.dim(), &[h2])?;
    let mut out = Vec::with_capacity(3 * h1.dim());
    out.extend_from_slice(&h1.values);
    out.extend_from_slice(&h2.values);
    out.extend(h1.values.iter().zip(&h2.values).map(|(a, b)| (a - b).abs()));
    Ok(out)
}

/// Elementwise `|[ha - hb ; hc - hd ; (ha - hb) + (hd - hc)]|`
pub fn analogy_features(
    ha: &WordVector,
    hb: &WordVector,
    hc: &WordVector,
    hd: &WordVector,
) -> Result<Vec<f64>> {
    let dim = ha.dim();
    check_dims(dim, &[hb, hc, hd])?;
    let mut first = Vec::with_capacity(dim);
    let mut second = Vec::with_capacity(dim);
    let mut third = Vec::with_capacity(dim);
    for i in 0..dim {
        let ab = ha.values[i] - hb.values[i];
        let cd = hc.values[i] - hd.values[i];
        let dc = hd.values[i] - hc.values[i];
        first.push(ab.abs());
        second.push(cd.abs());
        third.push((ab + dc).abs());
    }
    first.extend(second);
    first.extend(third);
    Ok(first)
}

/// NER rows feed the averaged word vector straight to the probe.
pub fn ner_row(h: &WordVector, label: usize, group_id: impl Into<String>) -> FeatureRow {
    FeatureRow {
        features: h.values.clone(),
        label,
        group_id: group_id.into(),
    }
}

/// One row per choice (label 1 on the gold choice). With `augment`, the gold
/// analogy is also emitted in its permuted form (a, c)-(b, d).
pub fn build_analogy_rows(
    question: &AnalogyQuestion,
    vectors: &HashMap<String, WordVector>,
    augment: bool,
) -> Result<Vec<FeatureRow>> {
    let lookup = |word: &str| {
        vectors.get(word).ok_or_else(|| Error::Data {
            name: word.to_string(),
            message: format!("no word vector for analogy question {}", question.id),
        })
    };
    let ha = lookup(&question.stem.0)?;
    let hb = lookup(&question.stem.1)?;

    let mut rows = Vec::with_capacity(if augment { 5 } else { 4 });
    for (i, (c, d)) in question.choices.iter().enumerate() {
        let hc = lookup(c)?;
        let hd = lookup(d)?;
        rows.push(FeatureRow {
            features: analogy_features(ha, hb, hc, hd)?,
            label: usize::from(i == question.gold_index),
            group_id: question.id.clone(),
        });
    }
    if augment {
        let (c, d) = question.gold_pair();
        rows.push(FeatureRow {
            features: analogy_features(ha, lookup(c)?, hb, lookup(d)?)?,
            label: 1,
            group_id: question.id.clone(),
        });
    }
    Ok(rows)
}

/// Pack rows into tensors `features/<task>/<split>` ([n, F]) and
/// `features/<task>/<split>/labels` ([n]); group ids travel in metadata.
pub fn export_feature_records(
    task: &str,
    split: &str,
    rows: &[FeatureRow],
) -> Result<(Vec<TensorRecord>, BTreeMap<String, String>)> {
    let name = format!("features/{task}/{split}");
    let mut meta = BTreeMap::new();
    if rows.is_empty() {
        return Ok((Vec::new(), meta));
    }
    let dim = rows[0].features.len();
    let mut data = Vec::with_capacity(rows.len() * dim);
    for row in rows {
        if row.features.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: row.features.len(),
            });
        }
        data.extend(row.features.iter().map(|&v| v as f32));
    }
    let labels = rows.iter().map(|r| r.label as f32).collect();
    let groups: Vec<&str> = rows.iter().map(|r| r.group_id.as_str()).collect();
    meta.insert(format!("groups/{task}/{split}"), serde_json::to_string(&groups)?);
    Ok((
        vec![
            TensorRecord::new(name.clone(), vec![rows.len(), dim], data)?,
            TensorRecord::vector(format!("{name}/labels"), labels)?,
        ],
        meta,
    ))
}

pub fn import_feature_records(
    archive: &TensorArchive,
    task: &str,
    split: &str,
) -> Result<Vec<FeatureRow>> {
    let name = format!("features/{task}/{split}");
    let matrix = archive.require(&name)?;
    let labels = archive.require(&format!("{name}/labels"))?;
    let groups: Vec<String> = match archive.metadata().get(&format!("groups/{task}/{split}")) {
        Some(raw) => serde_json::from_str(raw)?,
        None => Vec::new(),
    };
    let [n, _] = matrix.shape[..] else {
        return Err(Error::Data {
            name,
            message: format!("expected a rank-2 matrix, got shape {:?}", matrix.shape),
        });
    };
    if labels.data.len() != n || (!groups.is_empty() && groups.len() != n) {
        return Err(Error::Data {
            name,
            message: "row count disagrees with labels or groups".to_string(),
        });
    }
    (0..n)
        .map(|i| {
            let label = labels.data[i];
            if label < 0.0 || label.fract() != 0.0 {
                return Err(Error::Data {
                    name: format!("{name}/labels"),
                    message: format!("label {label} at row {i} is not a class index"),
                });
            }
            Ok(FeatureRow {
                features: matrix.row(i).unwrap().iter().map(|&v| f64::from(v)).collect(),
                label: label as usize,
                group_id: groups.get(i).cloned().unwrap_or_else(|| i.to_string()),
            })
        })
        .collect()
}
