use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use super::{Dictionary, LcaError};
use crate::embedset::read_up_to;

const MAGIC: &[u8; 4] = b"VGRM";
const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 8;

pub const SYMMETRY_TOL: f64 = 1e-9;
pub const DIAGONAL_TOL: f64 = 1e-6;

/// Dense symmetric matrix of atom inner products, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Gramian {
    m: usize,
    data: Vec<f64>,
}

impl Gramian {
    /// Computes all pairwise atom dot products.
    ///
    /// Rows are distributed across the rayon pool; each worker fills the
    /// upper-triangle part of its own rows (`j >= i`) with one sequential dot
    /// product per entry, and the lower triangle is then mirrored serially.
    /// Every entry therefore has a single fixed summation order and the result
    /// is bitwise identical for any thread count.
    pub fn compute(dict: &Dictionary) -> Result<Self, LcaError> {
        let m = dict.len();
        let mut data = vec![0.0f64; m * m];
        data.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let ai = dict.atom(i);
            for (j, v) in row.iter_mut().enumerate().skip(i) {
                *v = dot(ai, dict.atom(j));
            }
        });
        for i in 1..m {
            for j in 0..i {
                data[i * m + j] = data[j * m + i];
            }
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(LcaError::NonFinite("gramian"));
        }
        Ok(Self { m, data })
    }

    /// Wraps a full row-major matrix, rejecting non-square or asymmetric input.
    pub fn from_full(m: usize, data: Vec<f64>) -> Result<Self, LcaError> {
        if data.len() != m * m {
            return Err(LcaError::DimensionMismatch {
                expected: m * m,
                found: data.len(),
            });
        }
        let g = Self { m, data };
        g.check_symmetric()?;
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn check_symmetric(&self) -> Result<(), LcaError> {
        for i in 0..self.m {
            for j in (i + 1)..self.m {
                if (self.get(i, j) - self.get(j, i)).abs() > SYMMETRY_TOL {
                    return Err(LcaError::Corrupt(format!("gramian asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    /// Checks symmetry (1e-9) and unit diagonal (1e-6).
    pub fn check_invariants(&self) -> Result<(), LcaError> {
        self.check_symmetric()?;
        for i in 0..self.m {
            if (self.get(i, i) - 1.0).abs() > DIAGONAL_TOL {
                return Err(LcaError::Corrupt(format!(
                    "gramian diagonal entry {i} is {}",
                    self.get(i, i)
                )));
            }
        }
        Ok(())
    }

    pub fn to_packed(&self) -> PackedGramian {
        let mut upper = Vec::with_capacity(self.m * (self.m + 1) / 2);
        for i in 0..self.m {
            upper.extend(self.row(i)[i..].iter().map(|&v| v as f32));
        }
        PackedGramian { m: self.m, upper }
    }

    /// Loads a `.gram` cache and checks it against `dict`.
    pub fn load_for(path: impl AsRef<Path>, dict: &Dictionary) -> Result<Self, LcaError> {
        let packed = PackedGramian::load(path)?;
        if packed.len() != dict.len() {
            return Err(LcaError::GramianMismatch {
                expected: dict.len() as u64,
                found: packed.len() as u64,
            });
        }
        let g = packed.to_full();
        g.check_invariants()?;
        Ok(g)
    }
}

/// Upper triangle of a Gramian in `f32`, the layout of the `.gram` cache.
///
/// File: `"VGRM"`, version `u16`, `M u64`, then `M(M+1)/2` `f32` values,
/// row-major over `j >= i`; little-endian throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedGramian {
    m: usize,
    upper: Vec<f32>,
}

impl PackedGramian {
    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // rows 0..i hold m + (m-1) + ... + (m-i+1) entries
        i * self.m - i * (i.saturating_sub(1)) / 2 + (j - i)
    }

    /// Triangle lookup without rehydrating the full matrix.
    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.upper[self.offset(i, j)]
    }

    pub fn to_full(&self) -> Gramian {
        let m = self.m;
        let mut data = vec![0.0f64; m * m];
        let mut k = 0;
        for i in 0..m {
            for j in i..m {
                let v = self.upper[k] as f64;
                data[i * m + j] = v;
                data[j * m + i] = v;
                k += 1;
            }
        }
        Gramian { m, data }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), LcaError> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.m as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.upper.len() * 4);
        for v in &self.upper {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, LcaError> {
        let mut header = [0u8; HEADER_LEN];
        let got = read_up_to(&mut r, &mut header)?;
        if got >= 4 && &header[0..4] != MAGIC {
            return Err(LcaError::BadMagic {
                expected: "VGRM",
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
        let m = u64::from_le_bytes(header[6..14].try_into().unwrap());
        let payload = m
            .checked_add(1)
            .and_then(|p| p.checked_mul(m))
            .map(|p| p / 2)
            .and_then(|p| p.checked_mul(4))
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
        let upper: Vec<f32> = body
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        if upper.iter().any(|v| !v.is_finite()) {
            return Err(LcaError::NonFinite("gramian cache"));
        }
        Ok(Self {
            m: m as usize,
            upper,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LcaError> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LcaError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
