//! Binary model file shared by taggers and judges.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      8 bytes  "DISFLMOD"
//! version    u32      FORMAT_VERSION
//! kind       u8       1 = tagger, 2 = judge
//! header     u32 len + JSON (backend id, training metadata)
//! table      u64 n + n * (u64 key, u32 count), sorted by key
//! weights    u32 bits + 2^bits * f32
//! checksum   u64      FNV-1a of every preceding byte
//! ```
//!
//! Saving the same model twice yields identical bytes.

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::fnv1a;
use crate::linear::{FitReport, TrainConfig, Weights};
use crate::ngram::NgramCounts;

/// Training provenance stored in every model header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub config: TrainConfig,
    pub corpus_fingerprint: String,
    pub fit: FitReport,
    /// Parameter fingerprint of the model training started from, if any.
    pub init_fingerprint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub backend: String,
    pub metadata: TrainingMetadata,
}

pub const MAGIC: &[u8; 8] = b"DISFLMOD";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ModelKind {
    Tagger = 1,
    Judge = 2,
}

impl ModelKind {
    fn from_u8(v: u8) -> Result<Self> {
        match v {
            1 => Ok(ModelKind::Tagger),
            2 => Ok(ModelKind::Judge),
            other => Err(Error::ModelFormat(format!("unknown model kind {other}"))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            ModelKind::Tagger => "tagger",
            ModelKind::Judge => "judge",
        }
    }
}

/// Serialized table + weights, without header or framing. Used for
/// parameter fingerprints.
pub fn parameter_bytes(table: &NgramCounts, weights: &Weights) -> Vec<u8> {
    let entries = table.sorted_entries();
    let mut out = Vec::with_capacity(12 * entries.len() + 4 * weights.values().len() + 16);
    out.write_u64::<LittleEndian>(entries.len() as u64).unwrap();
    for (k, c) in entries {
        out.write_u64::<LittleEndian>(k).unwrap();
        out.write_u32::<LittleEndian>(c).unwrap();
    }
    out.write_u32::<LittleEndian>(u32::from(weights.bits()))
        .unwrap();
    for &v in weights.values() {
        out.write_f32::<LittleEndian>(v).unwrap();
    }
    out
}

pub fn fingerprint(table: &NgramCounts, weights: &Weights) -> String {
    format!("{:016x}", fnv1a(&parameter_bytes(table, weights)))
}

pub fn encode<H: Serialize>(
    kind: ModelKind,
    header: &H,
    table: &NgramCounts,
    weights: &Weights,
) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(header)?;
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.write_u32::<LittleEndian>(FORMAT_VERSION).unwrap();
    out.write_u8(kind as u8).unwrap();
    out.write_u32::<LittleEndian>(header.len() as u32).unwrap();
    out.extend_from_slice(&header);
    out.extend_from_slice(&parameter_bytes(table, weights));
    let sum = fnv1a(&out);
    out.write_u64::<LittleEndian>(sum).unwrap();
    Ok(out)
}

fn corrupt(what: &str) -> Error {
    Error::ModelFormat(format!("truncated or corrupt file ({what})"))
}

pub fn decode<H: DeserializeOwned>(
    expected: ModelKind,
    bytes: &[u8],
) -> Result<(H, NgramCounts, Weights)> {
    if bytes.len() < MAGIC.len() + 4 + 1 + 8 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::ModelFormat("not a model file (bad magic)".into()));
    }
    let mut cur = Cursor::new(&bytes[MAGIC.len()..]);
    let version = cur
        .read_u32::<LittleEndian>()
        .map_err(|_| corrupt("version"))?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().unwrap());
    if fnv1a(body) != stored {
        return Err(Error::ModelFormat("checksum mismatch".into()));
    }

    let kind = ModelKind::from_u8(cur.read_u8().map_err(|_| corrupt("kind"))?)?;
    if kind != expected {
        return Err(Error::ModelFormat(format!(
            "expected a {} model, found a {} model",
            expected.name(),
            kind.name()
        )));
    }
    let header_len = cur
        .read_u32::<LittleEndian>()
        .map_err(|_| corrupt("header"))? as usize;
    let mut header = vec![0u8; header_len];
    cur.read_exact(&mut header).map_err(|_| corrupt("header"))?;
    let header: H = serde_json::from_slice(&header)
        .map_err(|e| Error::ModelFormat(format!("bad header: {e}")))?;

    let n = cur
        .read_u64::<LittleEndian>()
        .map_err(|_| corrupt("table"))?;
    let remaining = (body.len() - MAGIC.len()) as u64 - cur.position();
    if n.saturating_mul(12) > remaining {
        return Err(corrupt("table size"));
    }
    let mut entries = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let k = cur
            .read_u64::<LittleEndian>()
            .map_err(|_| corrupt("table"))?;
        let c = cur
            .read_u32::<LittleEndian>()
            .map_err(|_| corrupt("table"))?;
        entries.push((k, c));
    }
    let bits = cur
        .read_u32::<LittleEndian>()
        .map_err(|_| corrupt("weights"))?;
    if !(1..=28).contains(&bits) {
        return Err(corrupt("weight dimension"));
    }
    let len = 1usize << bits;
    let mut values = vec![0f32; len];
    cur.read_f32_into::<LittleEndian>(&mut values)
        .map_err(|_| corrupt("weights"))?;
    if cur.position() as usize != body.len() - MAGIC.len() {
        return Err(corrupt("trailing bytes"));
    }
    Ok((
        header,
        NgramCounts::from_entries(entries),
        Weights::from_values(values)?,
    ))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngram::bounded_hashes;

    fn sample() -> (NgramCounts, Weights) {
        let mut t = NgramCounts::new();
        t.add(&bounded_hashes(&["a", "b"]), 1..=2);
        let w = Weights::from_values((0..256).map(|i| (i as f32).sin()).collect()).unwrap();
        (t, w)
    }

    #[test]
    fn round_trip() {
        let (t, w) = sample();
        let bytes = encode(ModelKind::Tagger, &"hdr", &t, &w).unwrap();
        let (h, t2, w2): (String, _, _) = decode(ModelKind::Tagger, &bytes).unwrap();
        assert_eq!(h, "hdr");
        assert_eq!(t2, t);
        assert_eq!(w2, w);
        assert_eq!(encode(ModelKind::Tagger, &"hdr", &t2, &w2).unwrap(), bytes);
    }

    #[test]
    fn rejects_corruption_kind_and_version() {
        let (t, w) = sample();
        let bytes = encode(ModelKind::Tagger, &"hdr", &t, &w).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode::<String>(ModelKind::Tagger, &bad).is_err());

        let mut flipped = bytes.clone();
        let mid = flipped.len() / 2;
        flipped[mid] ^= 0x40;
        assert!(decode::<String>(ModelKind::Tagger, &flipped).is_err());

        assert!(decode::<String>(ModelKind::Tagger, &bytes[..bytes.len() - 3]).is_err());
        assert!(decode::<String>(ModelKind::Judge, &bytes).is_err());

        let mut v2 = bytes.clone();
        v2[8] = 2;
        assert!(matches!(
            decode::<String>(ModelKind::Tagger, &v2),
            Err(Error::ModelVersion { found: 2, .. })
        ));
    }
}
