//! Synthetic benchmark fixtures with planted structure: word-vector archives
//! a linear probe can separate, and answer-slot logits whose argmax is right
//! on an exactly known fraction of instances.

#![allow(dead_code)]

pub mod archives;
pub mod metrics;
pub mod oracles;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semgap::cli::{logits_archive_path, vectors_archive_path};
use semgap::corpus::{NerTag, Task};
use semgap::tensorstore::{base_metadata, write_archive_file, TensorRecord};

pub const MODEL: &str = "synthetic/encoder";
pub const DIM: usize = 8;
pub const WIC_TEST: usize = 200;
/// Fraction of WiC test instances on which each template's argmax is correct.
pub const WIC_PLANTED: [(&str, f64); 2] = [("wic-a", 0.55), ("wic-b", 0.70)];
pub const ANALOGY_TEST: usize = 100;
pub const ANALOGY_PLANTED: f64 = 0.40;

pub struct Fixture {
    pub root: PathBuf,
    pub manifest: PathBuf,
}

fn noise(rng: &mut ChaCha8Rng, scale: f64) -> Vec<f64> {
    (0..DIM).map(|_| rng.gen_range(-1.0..1.0) * scale).collect()
}

fn f32s(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

fn write_vectors(root: &Path, task: Task, split: &str, records: Vec<TensorRecord>) {
    let path = vectors_archive_path(&root.join("archives"), MODEL, task, split);
    write_archive_file(&path, &records, &base_metadata(MODEL, task.as_str(), DIM)).unwrap();
}

fn write_logits(root: &Path, task: Task, template: &str, records: Vec<TensorRecord>) {
    let path = logits_archive_path(&root.join("archives"), MODEL, task, "test", template);
    let mut meta = base_metadata(MODEL, task.as_str(), DIM);
    meta.insert("template".into(), template.into());
    write_archive_file(&path, &records, &meta).unwrap();
}

/// Indices `0..n` in a seeded order; the first `round(n * frac)` are the
/// instances a template gets right.
fn planted_correct(n: usize, frac: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let k = (n as f64 * frac).round() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut out = vec![false; n];
    for &i in &idx[..k] {
        out[i] = true;
    }
    out
}

/// Logit vector over `c` candidates whose argmax is `winner`.
fn logits_with_winner(c: usize, winner: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let mut v: Vec<f32> = (0..c).map(|_| rng.gen_range(-3.0..0.0)).collect();
    v[winner] = rng.gen_range(0.5..4.0);
    v
}

fn wic(root: &Path, rng: &mut ChaCha8Rng) {
    let dir = root.join("wic");
    fs::create_dir_all(&dir).unwrap();
    for (split, n) in [("train", 300), ("dev", 60), ("test", WIC_TEST)] {
        let mut data = String::new();
        let mut gold = String::new();
        let mut records = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let same = rng.gen_bool(0.5);
            labels.push(same);
            let word = format!("word{i}");
            writeln!(data, "{word}\tN\t1-2\tThe {word} is here .\tA red {word} there .").unwrap();
            gold.push_str(if same { "T\n" } else { "F\n" });
            let h1 = noise(rng, 1.0);
            let h2: Vec<f64> = if same {
                h1.iter().zip(noise(rng, 0.05)).map(|(a, e)| a + e).collect()
            } else {
                noise(rng, 1.0)
            };
            records.push(TensorRecord::vector(format!("wic/{i}/word1"), f32s(&h1)).unwrap());
            records.push(TensorRecord::vector(format!("wic/{i}/word2"), f32s(&h2)).unwrap());
        }
        fs::write(dir.join(format!("{split}.data.txt")), data).unwrap();
        fs::write(dir.join(format!("{split}.gold.txt")), gold).unwrap();
        write_vectors(root, Task::Wic, split, records);

        if split == "test" {
            // candidates: [Yes (Same), No (Different)]
            for (template, frac) in WIC_PLANTED {
                let correct = planted_correct(n, frac, rng);
                let records = (0..n)
                    .map(|i| {
                        let gold_candidate = if labels[i] { 0 } else { 1 };
                        let winner = if correct[i] { gold_candidate } else { 1 - gold_candidate };
                        TensorRecord::vector(format!("logits/{template}/{i}"), logits_with_winner(2, winner, rng))
                            .unwrap()
                    })
                    .collect();
                write_logits(root, Task::Wic, template, records);
            }
        }
    }
}

fn ner(root: &Path, rng: &mut ChaCha8Rng) {
    let dir = root.join("ner");
    fs::create_dir_all(&dir).unwrap();
    let centroids: Vec<Vec<f64>> = (0..5).map(|_| noise(rng, 3.0)).collect();
    for (split, n_sent) in [("train", 60), ("test", 30)] {
        let mut text = String::from("-DOCSTART- -X- -X- O\n\n");
        let mut records = Vec::new();
        let mut tags_all = Vec::new();
        for s in 0..n_sent {
            let len = rng.gen_range(3..9);
            let mut prev = NerTag::O;
            for w in 0..len {
                let tag = if rng.gen_bool(0.6) { NerTag::O } else { NerTag::ALL[rng.gen_range(0..4)] };
                let iob = match tag {
                    NerTag::O => "O".to_string(),
                    t if t == prev => format!("I-{t}"),
                    t => format!("B-{t}"),
                };
                prev = tag;
                writeln!(text, "tok{s}_{w} NN I-NP {iob}").unwrap();
                let c = &centroids[tag.class_index()];
                let v: Vec<f64> = c.iter().zip(noise(rng, 0.5)).map(|(a, e)| a + e).collect();
                records.push(TensorRecord::vector(format!("ner/{s}/{w}"), f32s(&v)).unwrap());
                tags_all.push(tag);
            }
            text.push('\n');
        }
        fs::write(dir.join(format!("{split}.txt")), text).unwrap();
        write_vectors(root, Task::Ner, split, records);
        if split == "test" {
            // Every token gets one of the four entity candidates.
            let mut i = 0;
            let mut records = Vec::new();
            let text = fs::read_to_string(dir.join("test.txt")).unwrap();
            let sentences = semgap::corpus::parse_conll(text.as_bytes()).unwrap();
            for (s, sent) in sentences.iter().enumerate() {
                for w in 0..sent.tokens.len() {
                    let winner = rng.gen_range(0..4);
                    records.push(
                        TensorRecord::vector(format!("logits/ner-1/{s}/{w}"), logits_with_winner(4, winner, rng))
                            .unwrap(),
                    );
                    i += 1;
                }
            }
            assert_eq!(i, tags_all.len());
            write_logits(root, Task::Ner, "ner-1", records);
        }
    }
}

fn analogy(root: &Path, rng: &mut ChaCha8Rng) {
    let dir = root.join("bats");
    fs::create_dir_all(&dir).unwrap();
    for (split, n) in [("train", 120), ("test", ANALOGY_TEST)] {
        let mut lines = String::new();
        let mut words: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut golds = Vec::new();
        for q in 0..n {
            let w = |tag: &str| format!("{split}{q}{tag}");
            let a = noise(rng, 1.0);
            let b = noise(rng, 1.0);
            let offset: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let gold = rng.gen_range(0..4);
            golds.push(gold);
            let mut choice = Vec::new();
            for i in 0..4 {
                let d = noise(rng, 1.0);
                let c: Vec<f64> = if i == gold {
                    d.iter().zip(&offset).zip(noise(rng, 0.05)).map(|((d, o), e)| d + o + e).collect()
                } else {
                    noise(rng, 1.0)
                };
                words.insert(w(&format!("c{i}")), c);
                words.insert(w(&format!("d{i}")), d);
                choice.push(format!(r#"["{}","{}"]"#, w(&format!("c{i}")), w(&format!("d{i}"))));
            }
            words.insert(w("a"), a);
            words.insert(w("b"), b);
            writeln!(
                lines,
                r#"{{"stem":["{}","{}"],"choice":[{}],"answer":{gold}}}"#,
                w("a"),
                w("b"),
                choice.join(",")
            )
            .unwrap();
        }
        fs::write(dir.join(format!("{split}.jsonl")), lines).unwrap();
        let records = words
            .iter()
            .map(|(word, v)| TensorRecord::vector(format!("analogy/word/{word}"), f32s(v)).unwrap())
            .collect();
        write_vectors(root, Task::Analogy, split, records);
        if split == "test" {
            for (template, frac) in [("analogy-1", ANALOGY_PLANTED), ("analogy-2", 0.25)] {
                let correct = planted_correct(n, frac, rng);
                let records = (0..n)
                    .map(|q| {
                        let winner = if correct[q] { golds[q] } else { (golds[q] + 1 + rng.gen_range(0..3)) % 4 };
                        TensorRecord::vector(format!("logits/{template}/{q}"), logits_with_winner(4, winner, rng))
                            .unwrap()
                    })
                    .collect();
                write_logits(root, Task::Analogy, template, records);
            }
        }
    }
}

const PROMPTS: &str = r#"[
  {"id": "wic-a", "task": "wic", "body": "{sentence1}\n{sentence2}\nDoes the word \"{word}\" mean the same thing in the above two sentences?\nAnswer:[MASK]"},
  {"id": "wic-b", "task": "wic", "body": "Sentence 1: {sentence1}\nSentence 2: {sentence2}\nDoes {word} mean the same thing in these two sentences?\nAnswer:[MASK]"},
  {"id": "ner-1", "task": "ner", "body": "{sentence}. The word {word} in the previous sentence is labelled as [MASK]"},
  {"id": "analogy-1", "task": "analogy", "body": "{stem1} is to {stem2} as:\nA) {choice1a} is to {choice1b}\nB) {choice2a} is to {choice2b}\nC) {choice3a} is to {choice3b}\nD) {choice4a} is to {choice4b}\nAnswer:[MASK]"},
  {"id": "analogy-2", "task": "analogy", "body": "Which of the following pairs has the most similar relation with {stem1}, {stem2}?\nA) {choice1a}, {choice1b}\nB) {choice2a}, {choice2b}\nC) {choice3a}, {choice3b}\nD) {choice4a}, {choice4b}\nAnswer:[MASK]"}
]"#;

const MANIFEST: &str = r#"
tasks = ["wic", "ner", "analogy"]
archive_dir = "archives"
output_dir = "out"
prompt_bank = "prompts.json"
seed = 11

[[models]]
id = "synthetic/encoder"
family = "encoder"

[datasets.wic]
train = { data = "wic/train.data.txt", gold = "wic/train.gold.txt" }
dev = { data = "wic/dev.data.txt", gold = "wic/dev.gold.txt" }
test = { data = "wic/test.data.txt", gold = "wic/test.gold.txt" }

[datasets.ner]
train = "ner/train.txt"
test = "ner/test.txt"

[datasets.analogy]
train = "bats/train.jsonl"
test = "bats/test.jsonl"
"#;

impl Fixture {
    pub fn build(root: &Path) -> Fixture {
        let mut rng = ChaCha8Rng::seed_from_u64(20240611);
        wic(root, &mut rng);
        ner(root, &mut rng);
        analogy(root, &mut rng);
        fs::write(root.join("prompts.json"), PROMPTS).unwrap();
        let manifest = root.join("run.toml");
        fs::write(&manifest, MANIFEST).unwrap();
        Fixture {
            root: root.to_path_buf(),
            manifest,
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.root.join("out")
    }
}
