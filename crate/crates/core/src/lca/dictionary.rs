use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::LcaError;
use crate::embedset::{read_up_to, EmbeddingSet};

const MAGIC: &[u8; 4] = b"VDIC";
const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 8;

/// Norms at or below this are treated as zero at build time.
pub const MIN_NORM: f64 = 1e-12;
/// Allowed deviation of a stored atom from unit length.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// Exemplar dictionary: one unit-length atom per training record.
///
/// Atoms are stored row-major (`len() x n_dim()`) in `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: Vec<f64>,
    atom_labels: Vec<u32>,
    raw_norms: Vec<f64>,
    n_dim: usize,
    n_classes: usize,
}

impl Dictionary {
    /// Normalizes every record of `train` into an atom, keeping record order.
    pub fn build(train: &EmbeddingSet) -> Result<Self, LcaError> {
        let rows = train
            .records()
            .iter()
            .map(|r| r.vector.iter().map(|&v| v as f64).collect::<Vec<_>>());
        let labels = train.records().iter().map(|r| r.label).collect();
        Self::from_rows(rows, labels, train.n_dim(), train.n_classes())
    }

    /// Builds a dictionary from raw rows, normalizing each one.
    pub fn from_rows<I, R>(
        rows: I,
        atom_labels: Vec<u32>,
        n_dim: usize,
        n_classes: usize,
    ) -> Result<Self, LcaError>
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[f64]>,
    {
        if n_dim == 0 {
            return Err(LcaError::InvalidParam {
                field: "n_dim",
                reason: "must be positive".into(),
            });
        }
        let mut atoms = Vec::with_capacity(atom_labels.len() * n_dim);
        let mut raw_norms = Vec::with_capacity(atom_labels.len());
        for (index, row) in rows.into_iter().enumerate() {
            let row = row.as_ref();
            if row.len() != n_dim {
                return Err(LcaError::DimensionMismatch {
                    expected: n_dim,
                    found: row.len(),
                });
            }
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(LcaError::NonFinite("dictionary source row"));
            }
            if norm <= MIN_NORM {
                return Err(LcaError::ZeroNorm { index });
            }
            atoms.extend(row.iter().map(|v| v / norm));
            raw_norms.push(norm);
        }
        if raw_norms.is_empty() {
            return Err(LcaError::EmptyDictionary);
        }
        if raw_norms.len() != atom_labels.len() {
            return Err(LcaError::DimensionMismatch {
                expected: raw_norms.len(),
                found: atom_labels.len(),
            });
        }
        let dict = Self {
            atoms,
            atom_labels,
            raw_norms,
            n_dim,
            n_classes,
        };
        dict.check_labels()?;
        Ok(dict)
    }

    fn check_labels(&self) -> Result<(), LcaError> {
        if self.n_classes == 0 {
            return Err(LcaError::InvalidParam {
                field: "n_classes",
                reason: "must be positive".into(),
            });
        }
        if let Some(i) = self
            .atom_labels
            .iter()
            .position(|&l| l as usize >= self.n_classes)
        {
            return Err(LcaError::Corrupt(format!(
                "atom {i} label {} out of range for {} classes",
                self.atom_labels[i], self.n_classes
            )));
        }
        Ok(())
    }

    /// Number of atoms (`M`).
    pub fn len(&self) -> usize {
        self.raw_norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw_norms.is_empty()
    }

    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.n_dim..(i + 1) * self.n_dim]
    }

    pub fn atoms(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.atoms.chunks_exact(self.n_dim)
    }

    pub fn atom_labels(&self) -> &[u32] {
        &self.atom_labels
    }

    pub fn raw_norms(&self) -> &[f64] {
        &self.raw_norms
    }

    /// Atom count per class.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_classes];
        for &l in &self.atom_labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Reorders atoms so that new atom `k` is old atom `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self, LcaError> {
        let mut seen = vec![false; self.len()];
        if order.len() != self.len() || !order.iter().all(|&i| i < seen.len() && !std::mem::replace(&mut seen[i], true)) {
            return Err(LcaError::InvalidParam {
                field: "order",
                reason: "not a permutation of the atom indices".into(),
            });
        }
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for &i in order {
            atoms.extend_from_slice(self.atom(i));
        }
        Ok(Self {
            atoms,
            atom_labels: order.iter().map(|&i| self.atom_labels[i]).collect(),
            raw_norms: order.iter().map(|&i| self.raw_norms[i]).collect(),
            n_dim: self.n_dim,
            n_classes: self.n_classes,
        })
    }

    /// Serializes as `"VDIC"`, version `u16`, `N u32`, `C u32`, `M u64`, then
    /// per atom: label `u32`, raw norm `f64`, `N` x `f64`; little-endian.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), LcaError> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.n_dim as u32).to_le_bytes())?;
        w.write_all(&(self.n_classes as u32).to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(12 + 8 * self.n_dim);
        for (i, atom) in self.atoms().enumerate() {
            buf.clear();
            buf.extend_from_slice(&self.atom_labels[i].to_le_bytes());
            buf.extend_from_slice(&self.raw_norms[i].to_le_bytes());
            for v in atom {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, LcaError> {
        let mut header = [0u8; HEADER_LEN];
        let got = read_up_to(&mut r, &mut header)?;
        if got >= 4 && &header[0..4] != MAGIC {
            return Err(LcaError::BadMagic {
                expected: "VDIC",
                found: header[0..4].try_into().unwrap(),
            });
        }
        if got < HEADER_LEN {
            return Err(LcaError::Truncated {
                expected: HEADER_LEN as u64,
                found: got as u64,
            });
        }
        let version = u16::from_le_bytes(header[4..6].try_into().unwrap());
        if version != VERSION {
            return Err(LcaError::UnsupportedVersion(version));
        }
        let n_dim = u32::from_le_bytes(header[6..10].try_into().unwrap()) as usize;
        let n_classes = u32::from_le_bytes(header[10..14].try_into().unwrap()) as usize;
        let count = u64::from_le_bytes(header[14..22].try_into().unwrap());
        if n_dim == 0 {
            return Err(LcaError::Corrupt("n_dim is zero".into()));
        }
        let rec = 12 + 8 * n_dim as u64;
        let payload = count
            .checked_mul(rec)
            .ok_or_else(|| LcaError::Corrupt("declared size overflows".into()))?;
        let mut body = Vec::new();
        r.take(payload.saturating_add(1)).read_to_end(&mut body)?;
        let found = body.len() as u64;
        if found < payload {
            return Err(LcaError::Truncated {
                expected: payload,
                found,
            });
        }
        if found > payload {
            return Err(LcaError::TrailingBytes(found - payload));
        }

        let mut atoms = Vec::with_capacity(count as usize * n_dim);
        let mut atom_labels = Vec::with_capacity(count as usize);
        let mut raw_norms = Vec::with_capacity(count as usize);
        for (i, chunk) in body.chunks_exact(rec as usize).enumerate() {
            atom_labels.push(u32::from_le_bytes(chunk[0..4].try_into().unwrap()));
            let norm = f64::from_le_bytes(chunk[4..12].try_into().unwrap());
            if !(norm.is_finite() && norm > 0.0) {
                return Err(LcaError::Corrupt(format!("atom {i} has raw norm {norm}")));
            }
            raw_norms.push(norm);
            let start = atoms.len();
            atoms.extend(
                chunk[12..]
                    .chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().unwrap())),
            );
            let sq: f64 = atoms[start..].iter().map(|v| v * v).sum();
            if !sq.is_finite() || (sq.sqrt() - 1.0).abs() > UNIT_NORM_TOL {
                return Err(LcaError::Corrupt(format!("atom {i} is not unit length")));
            }
        }
        if raw_norms.is_empty() {
            return Err(LcaError::EmptyDictionary);
        }
        let dict = Self {
            atoms,
            atom_labels,
            raw_norms,
            n_dim,
            n_classes,
        };
        dict.check_labels()?;
        Ok(dict)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LcaError> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LcaError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}
