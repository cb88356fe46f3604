//! Benchmark corpora: WiC sentence pairs, CoNLL2003 NER sentences and the
//! four-choice BATS analogy questions.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The three benchmark tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Wic,
    Ner,
    Analogy,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::Wic, Task::Ner, Task::Analogy];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Wic => "wic",
            Task::Ner => "ner",
            Task::Analogy => "analogy",
        }
    }

    /// Ordered class names of the probe's label space.
    pub fn class_labels(self) -> Vec<String> {
        let names: &[&str] = match self {
            Task::Wic => &WicLabel::CLASS_NAMES,
            Task::Ner => &NerTag::CLASS_NAMES,
            Task::Analogy => &["negative", "positive"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wic" => Ok(Task::Wic),
            "ner" => Ok(Task::Ner),
            "analogy" | "bats" => Ok(Task::Analogy),
            other => Err(Error::invalid(format!("unknown task `{other}`"))),
        }
    }
}

/// Gold label of a WiC pair. `Same` is the positive class (index 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WicLabel {
    Different,
    Same,
}

impl WicLabel {
    pub const CLASS_NAMES: [&'static str; 2] = ["Different", "Same"];

    pub fn class_index(self) -> usize {
        match self {
            WicLabel::Different => 0,
            WicLabel::Same => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WicInstance {
    pub id: String,
    pub target_word: String,
    pub pos: String,
    pub sentence1: String,
    pub sentence2: String,
    pub word_index1: usize,
    pub word_index2: usize,
    pub gold: WicLabel,
}

impl WicInstance {
    pub fn word1(&self) -> Option<&str> {
        self.sentence1.split_whitespace().nth(self.word_index1)
    }

    pub fn word2(&self) -> Option<&str> {
        self.sentence2.split_whitespace().nth(self.word_index2)
    }

    /// Full invariant check, including the loose surface match between the
    /// indexed words and the (lemmatised) target.
    pub fn check_invariants(&self) -> Result<()> {
        for (sentence, word) in [(1, self.word1()), (2, self.word2())] {
            let word = word.ok_or_else(|| Error::Data {
                name: self.id.clone(),
                message: format!("word index out of range in sentence{sentence}"),
            })?;
            if !loose_surface_match(&self.target_word, word) {
                return Err(Error::Data {
                    name: self.id.clone(),
                    message: format!(
                        "word `{word}` in sentence{sentence} does not match target `{}`",
                        self.target_word
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Case-insensitive comparison of the first three characters of the target
/// lemma against the inflected surface form.
pub fn loose_surface_match(lemma: &str, surface: &str) -> bool {
    let prefix: String = lemma.chars().take(3).collect::<String>().to_lowercase();
    surface.to_lowercase().starts_with(&prefix)
}

/// Per-word NER class. IOB prefixes are stripped at parse time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NerTag {
    #[serde(rename = "PER")]
    Per,
    #[serde(rename = "LOC")]
    Loc,
    #[serde(rename = "ORG")]
    Org,
    #[serde(rename = "MISC")]
    Misc,
    O,
}

impl NerTag {
    pub const ALL: [NerTag; 5] = [NerTag::Per, NerTag::Loc, NerTag::Org, NerTag::Misc, NerTag::O];
    pub const CLASS_NAMES: [&'static str; 5] = ["PER", "LOC", "ORG", "MISC", "O"];
    /// Class index of `O` in the 5-class label space.
    pub const OUTSIDE: usize = 4;

    pub fn class_index(self) -> usize {
        self as usize
    }

    pub fn from_class_index(index: usize) -> Option<NerTag> {
        NerTag::ALL.get(index).copied()
    }

    pub fn is_entity(self) -> bool {
        self != NerTag::O
    }

    pub fn as_str(self) -> &'static str {
        NerTag::CLASS_NAMES[self.class_index()]
    }
}

impl fmt::Display for NerTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NerTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PER" => Ok(NerTag::Per),
            "LOC" => Ok(NerTag::Loc),
            "ORG" => Ok(NerTag::Org),
            "MISC" => Ok(NerTag::Misc),
            "O" => Ok(NerTag::O),
            other => Err(Error::invalid(format!("unknown NER tag `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NerSentence {
    pub tokens: Vec<String>,
    pub gold_tags: Vec<NerTag>,
}

impl NerSentence {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalogyQuestion {
    pub id: String,
    pub stem: (String, String),
    pub choices: [(String, String); 4],
    pub gold_index: usize,
}

impl AnalogyQuestion {
    /// The ten words of the question in stem, choice order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        std::iter::once(&self.stem)
            .chain(self.choices.iter())
            .flat_map(|(a, b)| [a.as_str(), b.as_str()])
    }

    pub fn gold_pair(&self) -> &(String, String) {
        &self.choices[self.gold_index]
    }
}

/// Corpus-level counts gathered while parsing CoNLL data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConllStats {
    pub sentences: usize,
    pub tokens: usize,
    pub entity_spans: usize,
    pub entity_tokens: usize,
}

/// Parse the official WiC layout: a tab-separated data file and a gold file
/// with one `T`/`F` per line.
pub fn parse_wic(data: impl BufRead, gold: impl BufRead) -> Result<Vec<WicInstance>> {
    let data_lines = data.lines().collect::<std::io::Result<Vec<_>>>()?;
    let gold_lines = gold.lines().collect::<std::io::Result<Vec<_>>>()?;
    let data_lines = trim_trailing_blank(data_lines);
    let gold_lines = trim_trailing_blank(gold_lines);
    if data_lines.len() != gold_lines.len() {
        return Err(Error::Alignment(format!(
            "{} data lines but {} gold labels",
            data_lines.len(),
            gold_lines.len()
        )));
    }

    data_lines
        .iter()
        .zip(&gold_lines)
        .enumerate()
        .map(|(n, (line, gold))| parse_wic_line(n, line, gold))
        .collect()
}

fn trim_trailing_blank(mut lines: Vec<String>) -> Vec<String> {
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    lines
}

fn parse_wic_line(n: usize, line: &str, gold: &str) -> Result<WicInstance> {
    let line_no = n + 1;
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 5 {
        return Err(Error::parse(
            line_no,
            format!("expected 5 tab-separated fields, found {}", fields.len()),
        ));
    }
    let (i1, i2) = fields[2]
        .split_once('-')
        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
        .ok_or_else(|| Error::parse(line_no, format!("malformed index field `{}`", fields[2])))?;
    let gold = match gold.trim() {
        "T" => WicLabel::Same,
        "F" => WicLabel::Different,
        other => return Err(Error::parse(line_no, format!("gold label `{other}` is not T or F"))),
    };
    let instance = WicInstance {
        id: n.to_string(),
        target_word: fields[0].to_string(),
        pos: fields[1].to_string(),
        sentence1: fields[3].to_string(),
        sentence2: fields[4].to_string(),
        word_index1: i1,
        word_index2: i2,
        gold,
    };
    if instance.target_word.is_empty() {
        return Err(Error::parse(line_no, "empty target word"));
    }
    if instance.word1().is_none() || instance.word2().is_none() {
        return Err(Error::parse(
            line_no,
            format!("word index {i1}-{i2} beyond sentence length"),
        ));
    }
    Ok(instance)
}

pub fn parse_conll(stream: impl BufRead) -> Result<Vec<NerSentence>> {
    parse_conll_with_stats(stream).map(|(sentences, _)| sentences)
}

/// Parse CoNLL2003 column data. Spans are counted from the raw IOB tags
/// (IOB1 or IOB2) before the prefixes are stripped.
pub fn parse_conll_with_stats(stream: impl BufRead) -> Result<(Vec<NerSentence>, ConllStats)> {
    let mut sentences = Vec::new();
    let mut stats = ConllStats::default();
    let mut current = NerSentence {
        tokens: Vec::new(),
        gold_tags: Vec::new(),
    };
    let mut docstart = false;
    let mut spans = 0;
    let mut prev: Option<NerTag> = None;

    let mut flush = |current: &mut NerSentence, docstart: &mut bool, spans: &mut usize| {
        if !current.tokens.is_empty() && !*docstart {
            stats.sentences += 1;
            stats.tokens += current.tokens.len();
            stats.entity_tokens += current.gold_tags.iter().filter(|t| t.is_entity()).count();
            stats.entity_spans += *spans;
            sentences.push(std::mem::replace(
                current,
                NerSentence {
                    tokens: Vec::new(),
                    gold_tags: Vec::new(),
                },
            ));
        } else {
            current.tokens.clear();
            current.gold_tags.clear();
        }
        *docstart = false;
        *spans = 0;
    };

    for (n, line) in stream.lines().enumerate() {
        let line = line?;
        let line_no = n + 1;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            flush(&mut current, &mut docstart, &mut spans);
            prev = None;
            continue;
        }
        if cols.len() != 4 {
            return Err(Error::parse(
                line_no,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        }
        if cols[0] == "-DOCSTART-" {
            docstart = true;
            continue;
        }
        let (begins, tag) = parse_iob(cols[3]).map_err(|e| Error::parse(line_no, e.to_string()))?;
        if tag.is_entity() && (begins || prev != Some(tag)) {
            spans += 1;
        }
        prev = Some(tag);
        current.tokens.push(cols[0].to_string());
        current.gold_tags.push(tag);
    }
    flush(&mut current, &mut docstart, &mut spans);
    Ok((sentences, stats))
}

/// Returns (explicit span start, bare class).
fn parse_iob(raw: &str) -> Result<(bool, NerTag)> {
    if raw == "O" {
        return Ok((false, NerTag::O));
    }
    let (begins, class) = match raw.split_once('-') {
        Some(("B", class)) => (true, class),
        Some(("I", class)) => (false, class),
        _ => return Err(Error::invalid(format!("unknown NER tag `{raw}`"))),
    };
    match class.parse::<NerTag>() {
        Ok(NerTag::O) | Err(_) => Err(Error::invalid(format!("unknown NER tag `{raw}`"))),
        Ok(tag) => Ok((begins, tag)),
    }
}

#[derive(Deserialize)]
struct RawAnalogy {
    stem: Vec<String>,
    choice: Vec<Vec<String>>,
    answer: i64,
}

/// Parse the multiple-choice BATS derivative, one JSON object per line.
pub fn parse_bats(stream: impl BufRead) -> Result<Vec<AnalogyQuestion>> {
    let mut out = Vec::new();
    for (n, line) in stream.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = n + 1;
        let raw: RawAnalogy = serde_json::from_str(&line)
            .map_err(|e| Error::parse(line_no, format!("invalid JSON: {e}")))?;
        let pair = |words: &[String], what: &str| -> Result<(String, String)> {
            match words {
                [a, b] if !a.is_empty() && !b.is_empty() => Ok((a.clone(), b.clone())),
                _ => Err(Error::parse(
                    line_no,
                    format!("{what} must be two non-empty words"),
                )),
            }
        };
        if raw.choice.len() != 4 {
            return Err(Error::parse(
                line_no,
                format!("expected 4 choices, found {}", raw.choice.len()),
            ));
        }
        if !(0..4).contains(&raw.answer) {
            return Err(Error::parse(
                line_no,
                format!("answer {} out of range 0..=3", raw.answer),
            ));
        }
        let stem = pair(&raw.stem, "stem")?;
        let choices = [
            pair(&raw.choice[0], "choice 0")?,
            pair(&raw.choice[1], "choice 1")?,
            pair(&raw.choice[2], "choice 2")?,
            pair(&raw.choice[3], "choice 3")?,
        ];
        out.push(AnalogyQuestion {
            id: out.len().to_string(),
            stem,
            choices,
            gold_index: raw.answer as usize,
        });
    }
    Ok(out)
}

/// Context sentences per word, used to build BATS word vectors.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContextBank {
    contexts: BTreeMap<String, Vec<String>>,
}

impl ContextBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, word: impl Into<String>, sentences: Vec<String>) -> Result<()> {
        let word = word.into();
        validate_contexts(&word, &sentences)?;
        self.contexts.insert(word, sentences);
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<&[String]> {
        self.contexts.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.contexts.iter().map(|(w, s)| (w.as_str(), s.as_slice()))
    }

    /// Load a `{word: [sentence, ...]}` JSON object and validate it.
    pub fn from_json(reader: impl std::io::Read) -> Result<Self> {
        let bank: ContextBank = serde_json::from_reader(reader)?;
        for (word, sentences) in &bank.contexts {
            validate_contexts(word, sentences)?;
        }
        Ok(bank)
    }
}

fn validate_contexts(word: &str, sentences: &[String]) -> Result<()> {
    if word.is_empty() {
        return Err(Error::invalid("context bank word is empty"));
    }
    let needle = word.to_lowercase();
    for sentence in sentences {
        if !sentence
            .split_whitespace()
            .any(|tok| tok.to_lowercase() == needle)
        {
            return Err(Error::Data {
                name: word.to_string(),
                message: format!("context `{sentence}` does not contain the word"),
            });
        }
    }
    Ok(())
}

const CONTEXT_TEMPLATES: [&str; 8] = [
    "The word {w} appears here .",
    "People often discuss {w} today .",
    "She wrote {w} on the board .",
    "We talked about {w} yesterday .",
    "Everyone knows {w} well .",
    "He mentioned {w} twice .",
    "This sentence is about {w} .",
    "They asked me about {w} again .",
];

/// Deterministic template contexts for words without generated sentences.
pub fn fallback_contexts<S: AsRef<str>>(words: &[S], k: usize) -> Result<ContextBank> {
    if k == 0 {
        return Err(Error::invalid("context count must be at least 1"));
    }
    let mut bank = ContextBank::new();
    for word in words {
        let word = word.as_ref();
        if word.trim().is_empty() {
            return Err(Error::invalid("cannot build contexts for an empty word"));
        }
        let sentences = (0..k)
            .map(|i| {
                let template = CONTEXT_TEMPLATES[i % CONTEXT_TEMPLATES.len()];
                let round = i / CONTEXT_TEMPLATES.len();
                let sentence = template.replace("{w}", word);
                if round == 0 {
                    sentence
                } else {
                    format!("Example {round} : {sentence}")
                }
            })
            .collect();
        bank.insert(word, sentences)?;
    }
    Ok(bank)
}

/// Canonical JSON-lines dump: one compact object per record.
pub fn write_json_lines<T: Serialize>(records: &[T], mut sink: impl Write) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut sink, record)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_json_lines<T: serde::de::DeserializeOwned>(stream: impl BufRead) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (n, line) in stream.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(n + 1, e.to_string()))?);
    }
    Ok(out)
}
