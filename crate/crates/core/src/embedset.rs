//! Labeled embedding datasets and the `.vlca` binary container.
//!
//! Layout (all integers little-endian, no padding):
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `"VLCA"`                |
//! | 4      | 2    | version (`u16`, currently 1)  |
//! | 6      | 4    | `N` vector length (`u32`)     |
//! | 10     | 4    | `C` class count (`u32`)       |
//! | 14     | 8    | `M` record count (`u64`)      |
//! | 22     | 4    | `P` provenance length (`u32`) |
//! | 26     | P    | UTF-8 provenance              |
//!
//! followed by `M` records of one `u32` label and `N` `f32` entries each.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"VLCA";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 26;

#[derive(Debug, Error)]
pub enum EmbedsetError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic {found:?}, expected \"VLCA\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("header truncated: got {0} of {HEADER_LEN} bytes")]
    TruncatedHeader(usize),
    #[error("payload truncated: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },
    #[error("{extra} trailing bytes after the declared records")]
    TrailingBytes { extra: u64 },
    #[error("declared sizes overflow the addressable payload")]
    SizeOverflow,
    #[error("provenance is not valid UTF-8")]
    InvalidProvenance,
    #[error("provenance is {0} bytes, larger than a u32 length allows")]
    ProvenanceTooLong(usize),
    #[error("n_dim must be positive")]
    ZeroDim,
    #[error("n_classes must be positive")]
    ZeroClasses,
    #[error("record {record}: vector length {found}, expected {expected}")]
    DimensionMismatch {
        record: usize,
        expected: usize,
        found: usize,
    },
    #[error("record {record}: non-finite value at component {component}")]
    NonFinite { record: usize, component: usize },
    #[error("record {record}: label {label} out of range for {n_classes} classes")]
    LabelOutOfRange {
        record: usize,
        label: u32,
        n_classes: u32,
    },
    #[error("index {index} out of range for {len} records")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("index {0} selected more than once")]
    DuplicateIndex(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub vector: Vec<f32>,
    pub label: u32,
}

impl EmbeddingRecord {
    pub fn new(vector: Vec<f32>, label: u32) -> Self {
        Self { vector, label }
    }
}

/// An ordered, validated collection of fixed-length labeled vectors.
///
/// Immutable once constructed; every constructor checks dimensions,
/// finiteness and label range.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    n_dim: u32,
    n_classes: u32,
    records: Vec<EmbeddingRecord>,
    provenance: String,
}

impl EmbeddingSet {
    pub fn new(
        n_dim: u32,
        n_classes: u32,
        records: Vec<EmbeddingRecord>,
        provenance: impl Into<String>,
    ) -> Result<Self, EmbedsetError> {
        let set = Self {
            n_dim,
            n_classes,
            records,
            provenance: provenance.into(),
        };
        set.validate()?;
        Ok(set)
    }

    fn validate(&self) -> Result<(), EmbedsetError> {
        if self.n_dim == 0 {
            return Err(EmbedsetError::ZeroDim);
        }
        if self.n_classes == 0 {
            return Err(EmbedsetError::ZeroClasses);
        }
        if self.provenance.len() > u32::MAX as usize {
            return Err(EmbedsetError::ProvenanceTooLong(self.provenance.len()));
        }
        for (i, r) in self.records.iter().enumerate() {
            self.check_record(i, r)?;
        }
        Ok(())
    }

    fn check_record(&self, i: usize, r: &EmbeddingRecord) -> Result<(), EmbedsetError> {
        if r.vector.len() != self.n_dim as usize {
            return Err(EmbedsetError::DimensionMismatch {
                record: i,
                expected: self.n_dim as usize,
                found: r.vector.len(),
            });
        }
        if let Some(component) = r.vector.iter().position(|v| !v.is_finite()) {
            return Err(EmbedsetError::NonFinite {
                record: i,
                component,
            });
        }
        if r.label >= self.n_classes {
            return Err(EmbedsetError::LabelOutOfRange {
                record: i,
                label: r.label,
                n_classes: self.n_classes,
            });
        }
        Ok(())
    }

    pub fn n_dim(&self) -> usize {
        self.n_dim as usize
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes as usize
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Size in bytes of the serialized form.
    pub fn encoded_len(&self) -> u64 {
        HEADER_LEN as u64
            + self.provenance.len() as u64
            + self.records.len() as u64 * record_len(self.n_dim)
    }

    /// Returns a new set holding exactly `indices`, in the order given.
    pub fn select(&self, indices: &[usize]) -> Result<Self, EmbedsetError> {
        let mut seen = HashSet::with_capacity(indices.len());
        let mut records = Vec::with_capacity(indices.len());
        for &index in indices {
            if index >= self.records.len() {
                return Err(EmbedsetError::IndexOutOfRange {
                    index,
                    len: self.records.len(),
                });
            }
            if !seen.insert(index) {
                return Err(EmbedsetError::DuplicateIndex(index));
            }
            records.push(self.records[index].clone());
        }
        Ok(Self {
            n_dim: self.n_dim,
            n_classes: self.n_classes,
            records,
            provenance: self.provenance.clone(),
        })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), EmbedsetError> {
        self.validate()?;
        let mut header = Vec::with_capacity(HEADER_LEN + self.provenance.len());
        header.extend_from_slice(MAGIC);
        header.extend_from_slice(&VERSION.to_le_bytes());
        header.extend_from_slice(&self.n_dim.to_le_bytes());
        header.extend_from_slice(&self.n_classes.to_le_bytes());
        header.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        header.extend_from_slice(&(self.provenance.len() as u32).to_le_bytes());
        header.extend_from_slice(self.provenance.as_bytes());
        w.write_all(&header)?;

        let mut buf = Vec::with_capacity(record_len(self.n_dim) as usize);
        for r in &self.records {
            buf.clear();
            buf.extend_from_slice(&r.label.to_le_bytes());
            for v in &r.vector {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, EmbedsetError> {
        let mut out = Vec::with_capacity(self.encoded_len() as usize);
        self.write_to(&mut out)?;
        Ok(out)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, EmbedsetError> {
        let mut header = [0u8; HEADER_LEN];
        let got = read_up_to(&mut r, &mut header)?;
        if got >= 4 && &header[0..4] != MAGIC {
            return Err(EmbedsetError::BadMagic {
                found: header[0..4].try_into().unwrap(),
            });
        }
        if got < HEADER_LEN {
            return Err(EmbedsetError::TruncatedHeader(got));
        }
        let version = u16::from_le_bytes(header[4..6].try_into().unwrap());
        if version != VERSION {
            return Err(EmbedsetError::UnsupportedVersion(version));
        }
        let n_dim = u32::from_le_bytes(header[6..10].try_into().unwrap());
        let n_classes = u32::from_le_bytes(header[10..14].try_into().unwrap());
        let count = u64::from_le_bytes(header[14..22].try_into().unwrap());
        let prov_len = u32::from_le_bytes(header[22..26].try_into().unwrap()) as u64;
        if n_dim == 0 {
            return Err(EmbedsetError::ZeroDim);
        }
        if n_classes == 0 {
            return Err(EmbedsetError::ZeroClasses);
        }

        let payload_len = count
            .checked_mul(record_len(n_dim))
            .and_then(|p| p.checked_add(prov_len))
            .ok_or(EmbedsetError::SizeOverflow)?;

        // Read one byte past the declared length so trailing garbage is caught
        // without trusting `count` for the allocation size.
        let mut body = Vec::new();
        r.by_ref()
            .take(payload_len.saturating_add(1))
            .read_to_end(&mut body)?;
        let found = body.len() as u64;
        if found < payload_len {
            return Err(EmbedsetError::TruncatedPayload {
                expected: payload_len,
                found,
            });
        }
        if found > payload_len {
            let mut rest = Vec::new();
            r.read_to_end(&mut rest)?;
            return Err(EmbedsetError::TrailingBytes {
                extra: found - payload_len + rest.len() as u64,
            });
        }

        let (prov, records_bytes) = body.split_at(prov_len as usize);
        let provenance =
            String::from_utf8(prov.to_vec()).map_err(|_| EmbedsetError::InvalidProvenance)?;

        let n = n_dim as usize;
        let mut records = Vec::with_capacity(count as usize);
        for chunk in records_bytes.chunks_exact(record_len(n_dim) as usize) {
            let label = u32::from_le_bytes(chunk[0..4].try_into().unwrap());
            let vector: Vec<f32> = chunk[4..]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect();
            debug_assert_eq!(vector.len(), n);
            records.push(EmbeddingRecord { vector, label });
        }
        Self::new(n_dim, n_classes, records, provenance)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EmbedsetError> {
        let f = File::create(path)?;
        self.write_to(BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbedsetError> {
        let f = File::open(path)?;
        Self::read_from(BufReader::new(f))
    }
}

fn record_len(n_dim: u32) -> u64 {
    4 + 4 * n_dim as u64
}

/// Fills as much of `buf` as the reader provides, returning the byte count.
pub(crate) fn read_up_to<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}
