//! `.hsx` tensor archives.
//!
//! Layout: `HSX1` | u32 LE header length | compact JSON header
//! `{"version":1,"metadata":{..},"manifest":[{"name","shape","offset"}]}` |
//! little-endian f32 payload. Offsets are relative to the payload start.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"HSX1";
pub const FORMAT_VERSION: u32 = 1;
pub const REQUIRED_METADATA: [&str; 4] = ["model_id", "task", "hidden_size", "format_version"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl TensorRecord {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let record = TensorRecord {
            name: name.into(),
            shape,
            data,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn vector(name: impl Into<String>, data: Vec<f32>) -> Result<Self> {
        let len = data.len();
        Self::new(name, vec![len], data)
    }

    pub fn validate(&self) -> Result<()> {
        let data_err = |message: String| Error::Data {
            name: self.name.clone(),
            message,
        };
        if self.name.is_empty() {
            return Err(Error::invalid("tensor name is empty"));
        }
        if self.shape.is_empty() || self.shape.contains(&0) {
            return Err(data_err(format!(
                "shape {:?} must be non-empty with positive dimensions",
                self.shape
            )));
        }
        let expected = element_count(&self.shape)
            .ok_or_else(|| data_err(format!("shape {:?} overflows", self.shape)))?;
        if expected != self.data.len() {
            return Err(data_err(format!(
                "shape {:?} needs {expected} values, found {}",
                self.shape,
                self.data.len()
            )));
        }
        if let Some(pos) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(data_err(format!("non-finite value at element {pos}")));
        }
        Ok(())
    }

    /// Row `i` of a rank-2 tensor.
    pub fn row(&self, i: usize) -> Option<&[f32]> {
        match self.shape.as_slice() {
            [rows, cols] if i < *rows => Some(&self.data[i * cols..(i + 1) * cols]),
            _ => None,
        }
    }
}

fn element_count(shape: &[usize]) -> Option<usize> {
    shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    metadata: BTreeMap<String, String>,
    manifest: Vec<ManifestEntry>,
}

/// A loaded archive. Immutable once read.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TensorArchive {
    metadata: BTreeMap<String, String>,
    records: Vec<TensorRecord>,
    index: HashMap<String, usize>,
}

impl TensorArchive {
    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn records(&self) -> &[TensorRecord] {
        &self.records
    }

    pub fn get(&self, name: &str) -> Option<&TensorRecord> {
        self.index.get(name).map(|&i| &self.records[i])
    }

    /// Lookup that fails with a data error naming the missing tensor.
    pub fn require(&self, name: &str) -> Result<&TensorRecord> {
        self.get(name).ok_or_else(|| Error::Data {
            name: name.to_string(),
            message: "tensor not present in archive".to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn manifest(&self) -> Vec<ManifestEntry> {
        manifest_for(&self.records)
    }

    pub fn into_records(self) -> Vec<TensorRecord> {
        self.records
    }
}

fn manifest_for(records: &[TensorRecord]) -> Vec<ManifestEntry> {
    let mut offset = 0u64;
    records
        .iter()
        .map(|r| {
            let entry = ManifestEntry {
                name: r.name.clone(),
                shape: r.shape.clone(),
                offset,
            };
            offset += 4 * r.data.len() as u64;
            entry
        })
        .collect()
}

/// Metadata map with the required keys filled in.
pub fn base_metadata(model_id: &str, task: &str, hidden_size: usize) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("model_id".to_string(), model_id.to_string()),
        ("task".to_string(), task.to_string()),
        ("hidden_size".to_string(), hidden_size.to_string()),
        ("format_version".to_string(), FORMAT_VERSION.to_string()),
    ])
}

fn check_required_metadata(metadata: &BTreeMap<String, String>) -> Result<()> {
    match REQUIRED_METADATA.iter().find(|k| !metadata.contains_key(**k)) {
        Some(key) => Err(Error::Format(format!("metadata key `{key}` is missing"))),
        None => Ok(()),
    }
}

/// Serialize `records` to `sink`; returns the number of bytes written.
/// All validation happens before the first byte is written.
pub fn write_archive(
    records: &[TensorRecord],
    metadata: &BTreeMap<String, String>,
    mut sink: impl Write,
) -> Result<u64> {
    check_required_metadata(metadata)?;
    let mut seen = HashSet::new();
    for record in records {
        record.validate()?;
        if !seen.insert(record.name.as_str()) {
            return Err(Error::Data {
                name: record.name.clone(),
                message: "duplicate tensor name".to_string(),
            });
        }
    }

    let header = Header {
        version: FORMAT_VERSION,
        metadata: metadata.clone(),
        manifest: manifest_for(records),
    };
    let header = serde_json::to_vec(&header)?;
    let header_len = u32::try_from(header.len())
        .map_err(|_| Error::invalid("archive header exceeds 4 GiB"))?;

    let mut bytes = Vec::with_capacity(8 + header.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&header_len.to_le_bytes());
    bytes.extend_from_slice(&header);
    sink.write_all(&bytes)?;

    let mut written = bytes.len() as u64;
    let mut buf = Vec::new();
    for record in records {
        buf.clear();
        buf.extend(record.data.iter().flat_map(|v| v.to_le_bytes()));
        sink.write_all(&buf)?;
        written += buf.len() as u64;
    }
    sink.flush()?;
    Ok(written)
}

pub fn read_archive(mut source: impl Read) -> Result<TensorArchive> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    decode_archive(&bytes)
}

pub fn decode_archive(bytes: &[u8]) -> Result<TensorArchive> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing HSX1 magic bytes".to_string()));
    }
    if bytes.len() < 8 {
        return Err(Error::Corruption("truncated before header length".to_string()));
    }
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let payload_start = 8usize
        .checked_add(header_len)
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| {
            Error::Corruption(format!("header length {header_len} runs past end of file"))
        })?;
    let header: Header = serde_json::from_slice(&bytes[8..payload_start])
        .map_err(|e| Error::Format(format!("unreadable header: {e}")))?;
    if header.version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported archive version {}",
            header.version
        )));
    }
    check_required_metadata(&header.metadata)?;

    let payload = &bytes[payload_start..];
    let mut records = Vec::with_capacity(header.manifest.len());
    let mut index = HashMap::with_capacity(header.manifest.len());
    let mut next_free = 0u64;
    for entry in header.manifest {
        if entry.offset < next_free {
            return Err(Error::Corruption(format!(
                "tensor `{}` at offset {} overlaps the previous tensor",
                entry.name, entry.offset
            )));
        }
        let count = element_count(&entry.shape)
            .filter(|_| !entry.shape.is_empty() && !entry.shape.contains(&0))
            .ok_or_else(|| {
                Error::Format(format!("tensor `{}` has invalid shape {:?}", entry.name, entry.shape))
            })?;
        let end = (count as u64)
            .checked_mul(4)
            .and_then(|n| n.checked_add(entry.offset))
            .filter(|&end| end <= payload.len() as u64)
            .ok_or_else(|| {
                Error::Corruption(format!(
                    "tensor `{}` extends past end of payload ({} bytes)",
                    entry.name,
                    payload.len()
                ))
            })?;
        let raw = &payload[entry.offset as usize..end as usize];
        let data: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data {
                name: entry.name,
                message: format!("non-finite value at element {pos}"),
            });
        }
        if index.insert(entry.name.clone(), records.len()).is_some() {
            return Err(Error::Format(format!("duplicate tensor name `{}`", entry.name)));
        }
        next_free = end;
        records.push(TensorRecord {
            name: entry.name,
            shape: entry.shape,
            data,
        });
    }

    Ok(TensorArchive {
        metadata: header.metadata,
        records,
        index,
    })
}

/// Write an archive atomically (temporary file in the target directory, then rename).
pub fn write_archive_file(
    path: &Path,
    records: &[TensorRecord],
    metadata: &BTreeMap<String, String>,
) -> Result<u64> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    let n = write_archive(records, metadata, std::io::BufWriter::new(tmp.as_file_mut()))?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(n)
}

pub fn read_archive_file(path: &Path) -> Result<TensorArchive> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    decode_archive(&fs::read(path)?)
}
