//! Binary container for embedding matrices.
//!
//! Layout: `b"NTKE"`, a version byte, row and column counts as little-endian
//! `u32`, then row-major little-endian `f32` entries.

use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

pub const NTKE_MAGIC: &[u8; 4] = b"NTKE";
pub const NTKE_VERSION: u8 = 1;
const HEADER_LEN: usize = 13;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub rows: usize,
    pub dims: usize,
    pub data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dims = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dims);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dims {
                return Err(Error::invalid(format!(
                    "row {i} has {} dims, expected {dims}",
                    r.len()
                )));
            }
            data.extend(r.iter().map(|&x| x as f32));
        }
        Self::new(rows.len(), dims, data)
    }

    pub fn new(rows: usize, dims: usize, data: Vec<f32>) -> Result<Self> {
        if u32::try_from(rows).is_err() || u32::try_from(dims).is_err() {
            return Err(Error::invalid("matrix too large for the NTKE header"));
        }
        if rows.checked_mul(dims) != Some(data.len()) {
            return Err(Error::invalid(format!(
                "{} entries do not fill a {rows} x {dims} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, dims, data })
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dims..(i + 1) * self.dims]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(NTKE_MAGIC);
        out.push(NTKE_VERSION);
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.dims as u32).to_le_bytes());
        for x in &self.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..4] != NTKE_MAGIC {
            return Err(Error::Format("missing NTKE header".into()));
        }
        if bytes[4] != NTKE_VERSION {
            return Err(Error::Format(format!("unsupported NTKE version {}", bytes[4])));
        }
        let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let (rows, dims) = (word(5), word(9));
        let body = &bytes[HEADER_LEN..];
        if rows.checked_mul(dims).and_then(|n| n.checked_mul(4)) != Some(body.len()) {
            return Err(Error::Format(format!(
                "NTKE body has {} bytes, header declares {rows} x {dims}",
                body.len()
            )));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { rows, dims, data })
    }
}

pub fn write_ntke(path: &Path, m: &EmbeddingMatrix) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&m.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_ntke(path: &Path) -> Result<EmbeddingMatrix> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    EmbeddingMatrix::from_bytes(&bytes)
}
