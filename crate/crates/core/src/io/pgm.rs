//! Binary PGM (`P5`) masks. Pixel value `k` is class id `k`.

use thiserror::Error;

use crate::types::{ClassId, ClassMask, ClassSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PgmError {
    #[error("bad PGM header: {0}")]
    BadHeader(String),
    #[error("maxval {0} exceeds 255")]
    MaxvalTooLarge(u32),
    #[error("pixel data truncated: expected {expected} bytes, found {found}")]
    TruncatedPixels { expected: usize, found: usize },
    #[error("pixel ({x}, {y}) has undeclared class id {id}")]
    UnknownClassId { id: u8, x: u32, y: u32 },
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, PgmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PgmError::BadHeader(format!("missing or invalid {what}")))
    }
}

/// Parses a binary PGM into a mask. With `classes`, every pixel must be a
/// declared class id.
pub fn parse_pgm_mask(bytes: &[u8], classes: Option<&ClassSet>) -> Result<ClassMask, PgmError> {
    if !bytes.starts_with(b"P5") {
        return Err(PgmError::BadHeader("expected P5 magic".into()));
    }
    let mut h = Header { bytes, pos: 2 };
    if !h.bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(PgmError::BadHeader("expected whitespace after magic".into()));
    }
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::BadHeader(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 {
        return Err(PgmError::BadHeader("maxval is zero".into()));
    }
    if maxval > 255 {
        return Err(PgmError::MaxvalTooLarge(maxval));
    }
    match bytes.get(h.pos) {
        Some(b) if b.is_ascii_whitespace() => h.pos += 1,
        _ => return Err(PgmError::BadHeader("expected single whitespace before pixel data".into())),
    }
    let expected = width as usize * height as usize;
    let data = &bytes[h.pos..];
    if data.len() < expected {
        return Err(PgmError::TruncatedPixels { expected, found: data.len() });
    }
    let pixels = data[..expected].to_vec();
    if let Some(set) = classes {
        if let Some(i) = pixels.iter().position(|&p| !set.contains(ClassId(p))) {
            return Err(PgmError::UnknownClassId { id: pixels[i], x: (i % width as usize) as u32, y: (i / width as usize) as u32 });
        }
    }
    Ok(ClassMask::new(width, height, pixels).expect("dimensions checked"))
}

/// Encodes 8-bit gray pixels as binary PGM with maxval 255.
pub fn encode_pgm(width: u32, height: u32, pixels: &[u8]) -> Vec<u8> {
    debug_assert_eq!(pixels.len(), width as usize * height as usize);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn write_pgm_mask(mask: &ClassMask) -> Vec<u8> {
    encode_pgm(mask.width(), mask.height(), mask.pixels())
}
