//! The little-endian binary embedding store.
//!
//! ```text
//! "BAIT" | u8 version=1 | u8 space | u8 unit | u8 reserved=0 | u32 dim | u32 count
//! count × ( u32 id | u16 rows | rows·dim × f32 )
//! ```
//!
//! Space 0 is SIM and 1 is NLI; unit 0 is headlines and 1 is bodies. Space 2
//! marks a model checkpoint (see [`crate::checkpoint`]).

use std::fs;
use std::path::Path;

use bait_core::data::{EmbeddingSpace, EmbeddingStore, TextUnit};
use bait_core::nn::Matrix;

use crate::error::{BaitError, Result, StoreError};

pub const MAGIC: [u8; 4] = *b"BAIT";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 16;
pub(crate) const SPACE_PARAMS: u8 = 2;

/// Forward-only reader over a byte buffer.
pub(crate) struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Cursor { bytes, pos: 0 }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8], StoreError> {
        if self.remaining() < n {
            return Err(StoreError::Truncated { offset: self.pos, needed: n - self.remaining() });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub(crate) fn u8(&mut self) -> Result<u8, StoreError> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16, StoreError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32, StoreError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f32s(&mut self, n: usize) -> Result<Vec<f32>, StoreError> {
        let raw = self.take(n.checked_mul(4).ok_or(StoreError::Layout("record size overflows".into()))?)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

/// Raw header fields shared by stores and checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Header {
    pub space: u8,
    pub unit: u8,
    pub dim: u32,
    pub count: u32,
}

pub(crate) fn read_header(c: &mut Cursor<'_>) -> Result<Header, StoreError> {
    let magic: [u8; 4] = c.take(4)?.try_into().unwrap();
    if magic != MAGIC {
        return Err(StoreError::BadMagic(magic));
    }
    let version = c.u8()?;
    if version != VERSION {
        return Err(StoreError::BadVersion(version));
    }
    let space = c.u8()?;
    let unit = c.u8()?;
    let _reserved = c.u8()?;
    let dim = c.u32()?;
    let count = c.u32()?;
    Ok(Header { space, unit, dim, count })
}

pub(crate) fn write_header(out: &mut Vec<u8>, h: Header) {
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&[VERSION, h.space, h.unit, 0]);
    out.extend_from_slice(&h.dim.to_le_bytes());
    out.extend_from_slice(&h.count.to_le_bytes());
}

pub(crate) fn write_f32s(out: &mut Vec<u8>, values: &[f32]) {
    out.reserve(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn space_byte(space: EmbeddingSpace) -> u8 {
    match space {
        EmbeddingSpace::Sim => 0,
        EmbeddingSpace::Nli => 1,
    }
}

fn unit_byte(unit: TextUnit) -> u8 {
    match unit {
        TextUnit::Head => 0,
        TextUnit::Body => 1,
    }
}

/// Decodes a store from bytes.
pub fn decode_store(bytes: &[u8]) -> Result<EmbeddingStore, StoreError> {
    let mut c = Cursor::new(bytes);
    let h = read_header(&mut c)?;
    let space = match h.space {
        0 => EmbeddingSpace::Sim,
        1 => EmbeddingSpace::Nli,
        b => return Err(StoreError::BadSpace(b)),
    };
    let unit = match h.unit {
        0 => TextUnit::Head,
        1 => TextUnit::Body,
        b => return Err(StoreError::BadUnit(b)),
    };
    let dim = h.dim as usize;
    if dim == 0 {
        return Err(StoreError::Layout("dimension 0".into()));
    }
    let mut store = EmbeddingStore::new(space, unit, dim);
    for _ in 0..h.count {
        let id = c.u32()?;
        let rows = c.u16()? as usize;
        if unit == TextUnit::Head && rows != 1 {
            return Err(StoreError::HeadRows { id, rows });
        }
        let values = c.f32s(rows * dim)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StoreError::NonFinite(id));
        }
        if store.get(id).is_some() {
            return Err(StoreError::DuplicateId(id));
        }
        let m = Matrix::from_vec(rows, dim, values).map_err(|e| StoreError::Layout(e.to_string()))?;
        store.insert(id, m).map_err(|e| StoreError::Layout(e.to_string()))?;
    }
    if c.remaining() > 0 {
        // A single-record store whose payload is wider than advertised leaves
        // exactly the surplus behind.
        if h.count == 1 && c.remaining() % 4 == 0 {
            let rows = store.iter().next().map_or(1, |(_, m)| m.rows().max(1));
            let extra = c.remaining() / 4;
            if extra % rows == 0 {
                return Err(StoreError::Dimension {
                    id: store.iter().next().map(|(id, _)| id),
                    expected: dim,
                    found: dim + extra / rows,
                });
            }
        }
        return Err(StoreError::Trailing(c.remaining()));
    }
    Ok(store)
}

/// Encodes a store; records are written in ascending id order.
pub fn encode_store(store: &EmbeddingStore) -> Result<Vec<u8>, StoreError> {
    let mut out = Vec::with_capacity(HEADER_LEN);
    let count = u32::try_from(store.len()).map_err(|_| StoreError::Layout("too many records".into()))?;
    let dim = u32::try_from(store.dim()).map_err(|_| StoreError::Layout("dimension too large".into()))?;
    write_header(&mut out, Header { space: space_byte(store.space), unit: unit_byte(store.unit), dim, count });
    for (id, m) in store.iter() {
        if m.cols() != store.dim() {
            return Err(StoreError::Dimension { id: Some(id), expected: store.dim(), found: m.cols() });
        }
        let rows = u16::try_from(m.rows()).map_err(|_| StoreError::Layout(format!("record {id} has too many rows")))?;
        out.extend_from_slice(&id.to_le_bytes());
        out.extend_from_slice(&rows.to_le_bytes());
        write_f32s(&mut out, m.as_slice());
    }
    Ok(out)
}

pub fn load_embedding_store(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| BaitError::io(path, e))?;
    decode_store(&bytes).map_err(|source| BaitError::Store { path: path.into(), source })
}

pub fn write_embedding_store(path: impl AsRef<Path>, store: &EmbeddingStore) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_store(store).map_err(|source| BaitError::Store { path: path.into(), source })?;
    fs::write(path, bytes).map_err(|e| BaitError::io(path, e))
}
