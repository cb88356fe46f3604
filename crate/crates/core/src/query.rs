//! Prompt rendering, answer-slot semantics and candidate scoring.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnalogyQuestion, NerSentence, NerTag, Task, WicInstance, WicLabel};
use crate::error::{Error, Result};
use crate::probe::argmax;

pub const ANSWER_SLOT: &str = "[MASK]";
/// Target sentinel used for encoder-decoder models.
pub const SENTINEL: &str = "<extra_id_0>";

const DEFAULT_BANK: &str = include_str!("../data/prompts.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    Encoder,
    Decoder,
    EncoderDecoder,
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "encoder" => Ok(ModelFamily::Encoder),
            "decoder" => Ok(ModelFamily::Decoder),
            "encoder-decoder" => Ok(ModelFamily::EncoderDecoder),
            other => Err(Error::invalid(format!("unknown model family `{other}`"))),
        }
    }
}

fn allowed_placeholders(task: Task) -> Vec<String> {
    match task {
        Task::Wic => vec!["sentence1".into(), "sentence2".into(), "word".into()],
        Task::Ner => vec!["sentence".into(), "word".into()],
        Task::Analogy => {
            let mut names = vec!["stem1".to_string(), "stem2".to_string()];
            for n in 1..=4 {
                names.push(format!("choice{n}a"));
                names.push(format!("choice{n}b"));
            }
            names
        }
    }
}

/// A `{name}` token in a template body: (byte start, byte end, name).
fn placeholders(body: &str) -> Vec<(usize, usize, &str)> {
    let mut out = Vec::new();
    let bytes = body.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let rest = &body[i + 1..];
            let len = rest
                .bytes()
                .take_while(|b| b.is_ascii_alphanumeric() || *b == b'_')
                .count();
            if len > 0 && rest.as_bytes().get(len) == Some(&b'}') {
                out.push((i, i + len + 2, &rest[..len]));
                i += len + 2;
                continue;
            }
        }
        i += 1;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTemplate")]
pub struct PromptTemplate {
    pub id: String,
    pub task: Task,
    pub body: String,
}

#[derive(Deserialize)]
struct RawTemplate {
    id: String,
    task: Task,
    body: String,
}

impl TryFrom<RawTemplate> for PromptTemplate {
    type Error = Error;

    fn try_from(raw: RawTemplate) -> Result<Self> {
        PromptTemplate::new(raw.id, raw.task, raw.body)
    }
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, task: Task, body: impl Into<String>) -> Result<Self> {
        let template = PromptTemplate {
            id: id.into(),
            task,
            body: body.into(),
        };
        if template.id.is_empty() {
            return Err(Error::invalid("prompt template id is empty"));
        }
        let slots = template.body.matches(ANSWER_SLOT).count();
        if slots != 1 {
            return Err(Error::invalid(format!(
                "template `{}` must contain {ANSWER_SLOT} exactly once, found {slots}",
                template.id
            )));
        }
        let allowed = allowed_placeholders(task);
        if let Some((_, _, name)) = placeholders(&template.body)
            .into_iter()
            .find(|(_, _, name)| !allowed.iter().any(|a| a == name))
        {
            return Err(Error::invalid(format!(
                "template `{}` uses placeholder {{{name}}} not defined for task {task}",
                template.id
            )));
        }
        Ok(template)
    }
}

/// Parse a prompt bank: a JSON list of `{id, task, body}`.
pub fn load_prompt_bank(reader: impl Read) -> Result<Vec<PromptTemplate>> {
    let bank: Vec<PromptTemplate> = serde_json::from_reader(reader)?;
    let mut seen = BTreeSet::new();
    for t in &bank {
        if !seen.insert(t.id.as_str()) {
            return Err(Error::invalid(format!("duplicate template id `{}`", t.id)));
        }
    }
    Ok(bank)
}

/// The WiC, NER and analogy templates shipped with the crate.
pub fn default_prompt_bank() -> Vec<PromptTemplate> {
    load_prompt_bank(DEFAULT_BANK.as_bytes()).expect("bundled prompt bank is valid")
}

pub fn templates_for(bank: &[PromptTemplate], task: Task) -> Vec<&PromptTemplate> {
    bank.iter().filter(|t| t.task == task).collect()
}

/// An instance a template can be rendered against.
#[derive(Clone, Copy, Debug)]
pub enum QueryInstance<'a> {
    Wic(&'a WicInstance),
    Ner {
        sentence: &'a NerSentence,
        word_index: usize,
    },
    Analogy(&'a AnalogyQuestion),
}

impl QueryInstance<'_> {
    pub fn task(&self) -> Task {
        match self {
            QueryInstance::Wic(_) => Task::Wic,
            QueryInstance::Ner { .. } => Task::Ner,
            QueryInstance::Analogy(_) => Task::Analogy,
        }
    }

    fn value(&self, name: &str) -> Option<String> {
        match self {
            QueryInstance::Wic(w) => match name {
                "sentence1" => Some(w.sentence1.clone()),
                "sentence2" => Some(w.sentence2.clone()),
                "word" => Some(w.target_word.clone()),
                _ => None,
            },
            QueryInstance::Ner {
                sentence,
                word_index,
            } => match name {
                "sentence" => Some(sentence.text()),
                "word" => sentence.tokens.get(*word_index).cloned(),
                _ => None,
            },
            QueryInstance::Analogy(q) => match name {
                "stem1" => Some(q.stem.0.clone()),
                "stem2" => Some(q.stem.1.clone()),
                _ => {
                    let rest = name.strip_prefix("choice")?;
                    let n: usize = rest.get(..1)?.parse().ok()?;
                    let pair = q.choices.get(n.checked_sub(1)?)?;
                    match rest.get(1..)? {
                        "a" => Some(pair.0.clone()),
                        "b" => Some(pair.1.clone()),
                        _ => None,
                    }
                }
            },
        }
    }
}

/// Where the extractor reads the answer distribution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SlotDescriptor {
    /// Encoder: the mask token at this byte offset of the prompt.
    MaskToken { byte_offset: usize },
    /// Decoder: the next-token distribution after `prefix` (prompt cut at the slot).
    NextToken { prefix: String },
    /// Encoder-decoder: the first target position, with the slot replaced by a sentinel in `input`.
    FirstTarget { input: String, sentinel: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub text: String,
    pub slot: SlotDescriptor,
}

/// Substitute every placeholder verbatim and describe the answer slot for
/// the given model family.
pub fn render_prompt(
    template: &PromptTemplate,
    instance: &QueryInstance<'_>,
    family: ModelFamily,
) -> Result<RenderedPrompt> {
    if instance.task() != template.task {
        return Err(Error::invalid(format!(
            "template `{}` is for {} but the instance is {}",
            template.id,
            template.task,
            instance.task()
        )));
    }
    let body = &template.body;
    let mut text = String::with_capacity(body.len() + 64);
    let mut last = 0;
    for (start, end, name) in placeholders(body) {
        let value = instance.value(name).ok_or_else(|| {
            Error::invalid(format!("placeholder {{{name}}} left unfilled in `{}`", template.id))
        })?;
        if value.is_empty() {
            return Err(Error::invalid(format!(
                "placeholder {{{name}}} in `{}` has an empty value",
                template.id
            )));
        }
        text.push_str(&body[last..start]);
        text.push_str(&value);
        last = end;
    }
    text.push_str(&body[last..]);

    // The slot is located in the template body, so instance text that happens
    // to contain the marker cannot move it.
    let slot_in_body = body.find(ANSWER_SLOT).expect("validated template");
    let shift: isize = placeholders(&body[..slot_in_body])
        .iter()
        .map(|(s, e, name)| instance.value(name).map_or(0, |v| v.len()) as isize - (e - s) as isize)
        .sum();
    let offset = (slot_in_body as isize + shift) as usize;
    debug_assert_eq!(&text[offset..offset + ANSWER_SLOT.len()], ANSWER_SLOT);

    let slot = match family {
        ModelFamily::Encoder => SlotDescriptor::MaskToken { byte_offset: offset },
        ModelFamily::Decoder => SlotDescriptor::NextToken {
            prefix: text[..offset].to_string(),
        },
        ModelFamily::EncoderDecoder => SlotDescriptor::FirstTarget {
            input: format!(
                "{}{}{}",
                &text[..offset],
                SENTINEL,
                &text[offset + ANSWER_SLOT.len()..]
            ),
            sentinel: SENTINEL.to_string(),
        },
    };
    Ok(RenderedPrompt { text, slot })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub class: usize,
    pub answer: String,
}

/// Ordered answer candidates, each mapped onto a class index of the task.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn new(candidates: Vec<Candidate>) -> Result<Self> {
        if candidates.len() < 2 {
            return Err(Error::invalid("a candidate set needs at least two answers"));
        }
        let distinct: BTreeSet<&str> = candidates.iter().map(|c| c.answer.as_str()).collect();
        if distinct.len() != candidates.len() {
            return Err(Error::invalid("candidate answers must be distinct"));
        }
        Ok(CandidateSet { candidates })
    }

    pub fn for_task(task: Task) -> Self {
        let c = |class: usize, answer: &str| Candidate {
            class,
            answer: answer.to_string(),
        };
        let candidates = match task {
            Task::Wic => vec![
                c(WicLabel::Same.class_index(), "Yes"),
                c(WicLabel::Different.class_index(), "No"),
            ],
            Task::Ner => vec![
                c(NerTag::Loc.class_index(), "location"),
                c(NerTag::Per.class_index(), "person"),
                c(NerTag::Org.class_index(), "organization"),
                c(NerTag::Misc.class_index(), "miscellaneous"),
            ],
            Task::Analogy => vec![c(0, "A"), c(1, "B"), c(2, "C"), c(3, "D")],
        };
        CandidateSet { candidates }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn answers(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.answer.as_str()).collect()
    }

    /// Score one instance; `raw_scores` follow candidate order.
    pub fn score(&self, id: &str, template_id: &str, raw_scores: &[f64]) -> Result<QueryResult> {
        if raw_scores.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: raw_scores.len(),
            });
        }
        let scored = score_candidates(raw_scores).map_err(|e| match e {
            Error::Data { name, message } => {
                let idx: usize = name.parse().unwrap_or(0);
                Error::Data {
                    name: format!("{id}: candidate `{}`", self.candidates[idx].answer),
                    message,
                }
            }
            other => other,
        })?;
        Ok(QueryResult {
            id: id.to_string(),
            template_id: template_id.to_string(),
            raw_scores: raw_scores.to_vec(),
            probabilities: scored.probabilities,
            predicted_candidate: scored.best,
            predicted_class: self.candidates[scored.best].class,
            confidence: scored.confidence,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateScores {
    pub probabilities: Vec<f64>,
    pub best: usize,
    pub confidence: f64,
}

/// Softmax restricted to the candidates; argmax with lowest-index ties.
pub fn score_candidates(raw_scores: &[f64]) -> Result<CandidateScores> {
    if raw_scores.len() < 2 {
        return Err(Error::invalid("need at least two candidate scores"));
    }
    if let Some(i) = raw_scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::Data {
            name: i.to_string(),
            message: format!("candidate score {} is not finite", raw_scores[i]),
        });
    }
    let max = raw_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = raw_scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let probabilities: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    let best = argmax(&probabilities);
    Ok(CandidateScores {
        confidence: probabilities[best],
        probabilities,
        best,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub id: String,
    pub template_id: String,
    pub raw_scores: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub predicted_candidate: usize,
    pub predicted_class: usize,
    pub confidence: f64,
}

/// Best template by accuracy; ties keep the earliest template.
pub fn select_best_prompt(accuracies: &[(String, f64)]) -> Result<(String, f64)> {
    let mut best: Option<&(String, f64)> = None;
    for entry in accuracies {
        if best.is_none_or(|b| entry.1 > b.1) {
            best = Some(entry);
        }
    }
    best.cloned()
        .ok_or_else(|| Error::invalid("no template accuracies to choose from"))
}

/// Pick between surface-form variants of the candidates (e.g. bare and
/// space-prefixed). `scores[i][v]` holds instance `i`'s candidate scores
/// under variant `v`; the variant with the larger total candidate
/// log-likelihood (sum over instances of log-sum-exp) wins, first on ties.
pub fn select_surface_variant(scores: &[Vec<Vec<f64>>]) -> Result<usize> {
    let variants = scores.first().map_or(0, Vec::len);
    if variants == 0 {
        return Err(Error::invalid("no surface variants to choose from"));
    }
    let mut totals = vec![0.0; variants];
    for (i, inst) in scores.iter().enumerate() {
        if inst.len() != variants {
            return Err(Error::Data {
                name: format!("instance {i}"),
                message: format!("expected {variants} variants, found {}", inst.len()),
            });
        }
        for (total, row) in totals.iter_mut().zip(inst) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            *total += max + row.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        }
    }
    Ok(argmax(&totals))
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelFamily::Encoder => "encoder",
            ModelFamily::Decoder => "decoder",
            ModelFamily::EncoderDecoder => "encoder-decoder",
        })
    }
}
