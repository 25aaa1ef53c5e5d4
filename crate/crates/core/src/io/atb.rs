//! `ATRC` activation-trace tensor files.
//!
//! Layout (all little-endian):
//!
//! | offset | type  | field                  |
//! |--------|-------|------------------------|
//! | 0      | [u8;4]| magic `ATRC`           |
//! | 4      | u32   | version (= 1)          |
//! | 8      | u32   | width                  |
//! | 12     | u32   | height                 |
//! | 16     | u32   | d (features per pixel) |
//! | 20     | u32   | reserved (= 0)         |
//! | 24     | f32[] | width·height·d values, row-major by y, x, feature |

use thiserror::Error;

use crate::types::{PixelSample, TraceMatrix};

pub const MAGIC: &[u8; 4] = b"ATRC";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AtbError {
    #[error("bad magic, expected ATRC")]
    BadMagic,
    #[error("unsupported ATB version {0}")]
    UnsupportedVersion(u32),
    #[error("reserved header field is {0}, expected 0")]
    ReservedNonZero(u32),
    #[error("tensor dimensions must be positive, got {width}x{height}x{d}")]
    ZeroDimension { width: u32, height: u32, d: u32 },
    #[error("payload truncated: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("{0} unexpected bytes after payload")]
    TrailingBytes(usize),
    #[error("non-finite value {value} at pixel ({x}, {y}), feature {feature}")]
    NonFinite { value: f32, x: u32, y: u32, feature: u32 },
    #[error("payload has {len} values, header implies {expected}")]
    PayloadLength { len: usize, expected: usize },
    #[error("pixel ({x}, {y}) outside {width}x{height} tensor")]
    OutOfBounds { x: u32, y: u32, width: u32, height: u32 },
}

/// The upsampled feature layer of one image: a `d`-length trace per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct AtTensorFile {
    width: u32,
    height: u32,
    d: u32,
    payload: Vec<f32>,
}

impl AtTensorFile {
    pub fn new(width: u32, height: u32, d: u32, payload: Vec<f32>) -> Result<Self, AtbError> {
        if width == 0 || height == 0 || d == 0 {
            return Err(AtbError::ZeroDimension { width, height, d });
        }
        let expected = width as usize * height as usize * d as usize;
        if payload.len() != expected {
            return Err(AtbError::PayloadLength { len: payload.len(), expected });
        }
        if let Some(pos) = payload.iter().position(|v| !v.is_finite()) {
            let pixel = pos / d as usize;
            return Err(AtbError::NonFinite {
                value: payload[pos],
                x: (pixel % width as usize) as u32,
                y: (pixel / width as usize) as u32,
                feature: (pos % d as usize) as u32,
            });
        }
        Ok(AtTensorFile { width, height, d, payload })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn payload(&self) -> &[f32] {
        &self.payload
    }

    pub fn trace(&self, x: u32, y: u32) -> Result<&[f32], AtbError> {
        if x >= self.width || y >= self.height {
            return Err(AtbError::OutOfBounds { x, y, width: self.width, height: self.height });
        }
        let d = self.d as usize;
        let start = (y as usize * self.width as usize + x as usize) * d;
        Ok(&self.payload[start..start + d])
    }

    /// Widened traces of the sampled pixels, one row per sample in order.
    /// Returns `Ok(None)` for an empty sample list.
    pub fn gather(&self, samples: &[PixelSample]) -> Result<Option<TraceMatrix>, AtbError> {
        if samples.is_empty() {
            return Ok(None);
        }
        let mut values = Vec::with_capacity(samples.len() * self.d as usize);
        for s in samples {
            values.extend(self.trace(s.x, s.y)?.iter().map(|&v| v as f64));
        }
        let m = TraceMatrix::from_flat(samples.len(), self.d as usize, values).expect("validated payload");
        Ok(Some(m))
    }
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

pub fn parse_atb(bytes: &[u8]) -> Result<AtTensorFile, AtbError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(AtbError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(AtbError::TruncatedPayload { expected: HEADER_LEN, found: bytes.len() });
    }
    let version = read_u32(bytes, 4);
    if version != VERSION {
        return Err(AtbError::UnsupportedVersion(version));
    }
    let (width, height, d) = (read_u32(bytes, 8), read_u32(bytes, 12), read_u32(bytes, 16));
    let reserved = read_u32(bytes, 20);
    if reserved != 0 {
        return Err(AtbError::ReservedNonZero(reserved));
    }
    if width == 0 || height == 0 || d == 0 {
        return Err(AtbError::ZeroDimension { width, height, d });
    }
    let count = width as usize * height as usize * d as usize;
    let expected = HEADER_LEN + count * 4;
    if bytes.len() < expected {
        return Err(AtbError::TruncatedPayload { expected, found: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(AtbError::TrailingBytes(bytes.len() - expected));
    }
    let payload = bytes[HEADER_LEN..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    AtTensorFile::new(width, height, d, payload)
}

pub fn write_atb(tensor: &AtTensorFile) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + tensor.payload.len() * 4);
    out.extend_from_slice(MAGIC);
    for v in [VERSION, tensor.width, tensor.height, tensor.d, 0] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in &tensor.payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}
