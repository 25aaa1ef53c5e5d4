//! Shared domain types. Everything here validates on construction and is
//! immutable afterwards.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TypeError {
    #[error("non-finite value {value} at row {row}, column {col}")]
    NonFinite { value: f64, row: usize, col: usize },
    #[error("trace matrix is empty")]
    EmptyMatrix,
    #[error("row {row} has {len} values, expected {expected}")]
    Ragged { row: usize, len: usize, expected: usize },
    #[error("payload has {len} values, expected {expected}")]
    PayloadLength { len: usize, expected: usize },
    #[error("class group `{0}` has no members")]
    EmptyGroup(String),
    #[error("class group `{name}` lists class {class} twice")]
    DuplicateMember { name: String, class: ClassId },
    #[error("class {0} is not declared")]
    UnknownClass(ClassId),
    #[error("mask dimensions must be positive, got {width}x{height}")]
    BadDimensions { width: u32, height: u32 },
    #[error("pixel ({x}, {y}) lies outside a {width}x{height} mask")]
    OutOfBounds { x: u32, y: u32, width: u32, height: u32 },
    #[error("pixel ({x}, {y}) has class {found}, sample claims {claimed}")]
    ClassMismatch { x: u32, y: u32, found: ClassId, claimed: ClassId },
    #[error("invalid score record: {0}")]
    BadScore(String),
    #[error("IoU {0} outside [0, 1]")]
    BadIou(f64),
}

/// Segmentation class label. Masks are 8-bit PGM, so ids live in `0..=255`;
/// which ids are valid is decided by the manifest's [`ClassSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u8);

impl ClassId {
    pub fn get(self) -> u8 {
        self.0
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u8> for ClassId {
    fn from(v: u8) -> Self {
        ClassId(v)
    }
}

/// The declared class ids of a dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassSet(BTreeSet<ClassId>);

impl ClassSet {
    pub fn new(ids: impl IntoIterator<Item = ClassId>) -> Self {
        ClassSet(ids.into_iter().collect())
    }

    pub fn contains(&self, id: ClassId) -> bool {
        self.0.contains(&id)
    }

    pub fn check(&self, id: ClassId) -> Result<ClassId, TypeError> {
        if self.contains(id) {
            Ok(id)
        } else {
            Err(TypeError::UnknownClass(id))
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A named union of classes evaluated jointly (e.g. all lane markings).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassGroup {
    name: String,
    members: Vec<ClassId>,
}

impl ClassGroup {
    pub fn new(name: impl Into<String>, members: Vec<ClassId>) -> Result<Self, TypeError> {
        let name = name.into();
        if members.is_empty() {
            return Err(TypeError::EmptyGroup(name));
        }
        let mut seen = BTreeSet::new();
        for &m in &members {
            if !seen.insert(m) {
                return Err(TypeError::DuplicateMember { name, class: m });
            }
        }
        Ok(ClassGroup { name, members })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn members(&self) -> &[ClassId] {
        &self.members
    }

    pub fn contains(&self, id: ClassId) -> bool {
        self.members.contains(&id)
    }
}

/// `n x d` activation traces, one row per sampled pixel. Stored widened to f64.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl TraceMatrix {
    /// Builds a matrix from row vectors, rejecting empty, ragged or non-finite input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, TypeError> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        if rows.is_empty() || d == 0 {
            return Err(TypeError::EmptyMatrix);
        }
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(TypeError::Ragged { row: i, len: r.len(), expected: d });
            }
            values.extend_from_slice(r);
        }
        Self::from_flat(rows.len(), d, values)
    }

    /// Builds a matrix from a row-major payload of length `n * d`.
    pub fn from_flat(n: usize, d: usize, values: Vec<f64>) -> Result<Self, TypeError> {
        if n == 0 || d == 0 {
            return Err(TypeError::EmptyMatrix);
        }
        if values.len() != n * d {
            return Err(TypeError::PayloadLength { len: values.len(), expected: n * d });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(TypeError::NonFinite { value: values[pos], row: pos / d, col: pos % d });
        }
        Ok(TraceMatrix { n, d, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

/// Per-pixel class labels of one image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMask {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl ClassMask {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, TypeError> {
        if width == 0 || height == 0 {
            return Err(TypeError::BadDimensions { width, height });
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(TypeError::PayloadLength { len: pixels.len(), expected });
        }
        Ok(ClassMask { width, height, pixels })
    }

    /// Like [`ClassMask::new`], additionally requiring every pixel to be a declared class.
    pub fn with_classes(width: u32, height: u32, pixels: Vec<u8>, classes: &ClassSet) -> Result<Self, TypeError> {
        let mask = Self::new(width, height, pixels)?;
        for &p in &mask.pixels {
            classes.check(ClassId(p))?;
        }
        Ok(mask)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> ClassId {
        ClassId(self.pixels[y as usize * self.width as usize + x as usize])
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn same_dims(&self, other: &ClassMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn count(&self, class: ClassId) -> usize {
        self.pixels.iter().filter(|&&p| p == class.0).count()
    }
}

/// A pixel location together with the class it was sampled for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PixelSample {
    pub x: u32,
    pub y: u32,
    pub class: ClassId,
}

impl PixelSample {
    /// Checks the sample against the mask it claims to come from.
    pub fn checked(mask: &ClassMask, x: u32, y: u32, class: ClassId) -> Result<Self, TypeError> {
        if x >= mask.width() || y >= mask.height() {
            return Err(TypeError::OutOfBounds { x, y, width: mask.width(), height: mask.height() });
        }
        let found = mask.get(x, y);
        if found != class {
            return Err(TypeError::ClassMismatch { x, y, found, claimed: class });
        }
        Ok(PixelSample { x, y, class })
    }
}

/// Image-level SA of one class: the mean over its sampled pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub image_id: String,
    pub class: ClassId,
    pub sa: f64,
    pub pixel_count: usize,
}

impl ScoreRecord {
    pub fn new(image_id: impl Into<String>, class: ClassId, sa: f64, pixel_count: usize) -> Result<Self, TypeError> {
        if pixel_count == 0 {
            return Err(TypeError::BadScore("pixel_count must be at least 1".into()));
        }
        if !sa.is_finite() {
            return Err(TypeError::BadScore(format!("sa {sa} is not finite")));
        }
        Ok(ScoreRecord { image_id: image_id.into(), class, sa, pixel_count })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IouRecord {
    pub image_id: String,
    pub target: String,
    pub iou: f64,
}

impl IouRecord {
    pub fn new(image_id: impl Into<String>, target: impl Into<String>, iou: f64) -> Result<Self, TypeError> {
        if !(0.0..=1.0).contains(&iou) {
            return Err(TypeError::BadIou(iou));
        }
        Ok(IouRecord { image_id: image_id.into(), target: target.into(), iou })
    }
}
