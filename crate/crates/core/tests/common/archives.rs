//! Random records and hand-corrupted archive bytes.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use semgap::tensorstore::{base_metadata, write_archive, TensorRecord};
use semgap::Error;

pub fn meta() -> BTreeMap<String, String> {
    base_metadata("fixture/model", "wic", 4)
}

/// `n` records with rank 1..=3 shapes and arbitrary finite values.
pub fn random_records(n: usize, seed: u64) -> Vec<TensorRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let rank = rng.gen_range(1..=3);
            let shape: Vec<usize> = (0..rank).map(|_| rng.gen_range(1..6)).collect();
            let len = shape.iter().product();
            let data = (0..len)
                .map(|_| loop {
                    let v = f32::from_bits(rng.gen());
                    if v.is_finite() {
                        break v;
                    }
                })
                .collect();
            TensorRecord::new(format!("rec/{i}/{}", rng.gen::<u16>()), shape, data).unwrap()
        })
        .collect()
}

pub fn encode(records: &[TensorRecord]) -> Vec<u8> {
    let mut bytes = Vec::new();
    write_archive(records, &meta(), &mut bytes).unwrap();
    bytes
}

/// Parsed header JSON and payload of an encoded archive.
pub fn split(bytes: &[u8]) -> (Value, Vec<u8>) {
    let len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let header = serde_json::from_slice(&bytes[8..8 + len]).unwrap();
    (header, bytes[8 + len..].to_vec())
}

pub fn join(header: &Value, payload: &[u8]) -> Vec<u8> {
    let h = serde_json::to_vec(header).unwrap();
    let mut out = b"HSX1".to_vec();
    out.extend_from_slice(&(h.len() as u32).to_le_bytes());
    out.extend_from_slice(&h);
    out.extend_from_slice(payload);
    out
}

fn patched(base: &[u8], edit: impl FnOnce(&mut Value)) -> Vec<u8> {
    let (mut header, payload) = split(base);
    edit(&mut header);
    join(&header, &payload)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Format,
    Corruption,
    Data,
}

pub fn class_of(e: &Error) -> Option<ErrorClass> {
    match e {
        Error::Format(_) => Some(ErrorClass::Format),
        Error::Corruption(_) => Some(ErrorClass::Corruption),
        Error::Data { .. } => Some(ErrorClass::Data),
        _ => None,
    }
}

/// Named corrupt archives and the error class each must produce.
pub fn corrupted_fixtures() -> Vec<(&'static str, Vec<u8>, ErrorClass)> {
    let records = vec![
        TensorRecord::new("a", vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
        TensorRecord::vector("b", vec![5.0, 6.0]).unwrap(),
    ];
    let base = encode(&records);
    let mut out = Vec::new();

    let mut bad_magic = base.clone();
    bad_magic[..4].copy_from_slice(b"HSX2");
    out.push(("bad magic", bad_magic, ErrorClass::Format));

    out.push(("empty file", Vec::new(), ErrorClass::Format));
    out.push(("magic only", b"HSX1\x10".to_vec(), ErrorClass::Corruption));

    let mut long_header = base.clone();
    long_header[4..8].copy_from_slice(&(base.len() as u32).to_le_bytes());
    out.push(("header length past EOF", long_header, ErrorClass::Corruption));

    out.push((
        "offset past EOF",
        patched(&base, |h| h["manifest"][1]["offset"] = Value::from(4096)),
        ErrorClass::Corruption,
    ));
    out.push((
        "overlapping offsets",
        patched(&base, |h| h["manifest"][1]["offset"] = Value::from(4)),
        ErrorClass::Corruption,
    ));
    out.push((
        "shape larger than payload",
        patched(&base, |h| h["manifest"][1]["shape"] = serde_json::json!([3])),
        ErrorClass::Corruption,
    ));

    let mut garbled = base.clone();
    garbled[8] = b'[';
    out.push(("unreadable header JSON", garbled, ErrorClass::Format));

    out.push((
        "unknown version",
        patched(&base, |h| h["version"] = Value::from(2)),
        ErrorClass::Format,
    ));
    out.push((
        "missing model_id",
        patched(&base, |h| {
            h["metadata"].as_object_mut().unwrap().remove("model_id");
        }),
        ErrorClass::Format,
    ));
    out.push((
        "zero dimension",
        patched(&base, |h| h["manifest"][1]["shape"] = serde_json::json!([0])),
        ErrorClass::Format,
    ));

    let (header, mut payload) = split(&base);
    payload[16..20].copy_from_slice(&f32::NAN.to_le_bytes());
    out.push(("NaN payload", join(&header, &payload), ErrorClass::Data));

    out
}
