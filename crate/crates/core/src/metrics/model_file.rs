//! `SAM1` fitted-model files.
//!
//! `"SAM1"`, `u8` kind (0 = MDSA, 1 = LSA), `u32` class id, then little-endian:
//!
//! * MDSA: `u32 d`, `d` f64 mean, `d²` f64 inverse covariance, f64 lambda, `u64 n_fit`
//! * LSA: `u32 d`, `u32 d_kept`, `d` mask bytes, `d_kept` f64 bandwidth,
//!   f64 density floor, `u64 m`, `m·d_kept` f64 traces

use thiserror::Error;

use crate::metrics::{LsaModel, MdsaModel, SaModel};
use crate::types::{ClassId, TraceMatrix};

pub const MAGIC: &[u8; 4] = b"SAM1";
const KIND_MDSA: u8 = 0;
const KIND_LSA: u8 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelFileError {
    #[error("not a SAM model file")]
    BadMagic,
    #[error("model file version `{0}` is not supported (expected SAM1)")]
    VersionMismatch(String),
    #[error("corrupt model payload: {0}")]
    CorruptPayload(String),
}

pub fn save_model(model: &SaModel) -> Vec<u8> {
    let mut out = MAGIC.to_vec();
    match model {
        SaModel::Mdsa(m) => {
            out.push(KIND_MDSA);
            out.extend_from_slice(&(m.class().get() as u32).to_le_bytes());
            out.extend_from_slice(&(m.d() as u32).to_le_bytes());
            for v in m.mu().iter().chain(m.s_inv()).chain([&m.shrinkage_lambda()]) {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out.extend_from_slice(&m.n_fit().to_le_bytes());
        }
        SaModel::Lsa(m) => {
            out.push(KIND_LSA);
            out.extend_from_slice(&(m.class().get() as u32).to_le_bytes());
            out.extend_from_slice(&(m.d() as u32).to_le_bytes());
            out.extend_from_slice(&(m.d_kept() as u32).to_le_bytes());
            out.extend(m.var_mask().iter().map(|&k| k as u8));
            for v in m.bandwidth().iter().chain([&m.density_floor()]) {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out.extend_from_slice(&(m.m() as u64).to_le_bytes());
            for v in m.traces() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelFileError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| ModelFileError::CorruptPayload(format!("truncated at byte {} (need {n} more)", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ModelFileError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, ModelFileError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ModelFileError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, ModelFileError> {
        let len = n.checked_mul(8).ok_or_else(|| ModelFileError::CorruptPayload("length overflow".into()))?;
        Ok(self.take(len)?.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

fn corrupt(e: impl std::fmt::Display) -> ModelFileError {
    ModelFileError::CorruptPayload(e.to_string())
}

pub fn load_model(bytes: &[u8]) -> Result<SaModel, ModelFileError> {
    if bytes.len() < 4 || &bytes[..3] != b"SAM" {
        return Err(ModelFileError::BadMagic);
    }
    if &bytes[..4] != MAGIC {
        return Err(ModelFileError::VersionMismatch(String::from_utf8_lossy(&bytes[..4]).into_owned()));
    }
    let mut r = Reader { bytes, pos: 4 };
    let kind = r.u8()?;
    let class_raw = r.u32()?;
    let class = ClassId(u8::try_from(class_raw).map_err(|_| corrupt(format!("class id {class_raw} out of range")))?);
    let model = match kind {
        KIND_MDSA => {
            let d = r.u32()? as usize;
            let mu = r.f64s(d)?;
            let s_inv = r.f64s(d.checked_mul(d).ok_or_else(|| corrupt("dimension overflow"))?)?;
            let lambda = r.f64s(1)?[0];
            let n_fit = r.u64()?;
            SaModel::Mdsa(MdsaModel::from_parts(class, mu, s_inv, lambda, n_fit).map_err(corrupt)?)
        }
        KIND_LSA => {
            let d = r.u32()? as usize;
            let d_kept = r.u32()? as usize;
            let mask_bytes = r.take(d)?;
            if mask_bytes.iter().any(|&b| b > 1) {
                return Err(corrupt("variance mask bytes must be 0 or 1"));
            }
            let var_mask: Vec<bool> = mask_bytes.iter().map(|&b| b == 1).collect();
            if var_mask.iter().filter(|&&k| k).count() != d_kept {
                return Err(corrupt("d_kept disagrees with variance mask"));
            }
            let bandwidth = r.f64s(d_kept)?;
            let floor = r.f64s(1)?[0];
            let m = usize::try_from(r.u64()?).map_err(corrupt)?;
            let traces = r.f64s(m.checked_mul(d_kept).ok_or_else(|| corrupt("trace count overflow"))?)?;
            let traces = TraceMatrix::from_flat(m, d_kept, traces).map_err(corrupt)?;
            SaModel::Lsa(LsaModel::from_parts(class, var_mask, bandwidth, floor, &traces).map_err(corrupt)?)
        }
        k => return Err(corrupt(format!("unknown model kind {k}"))),
    };
    if r.pos != bytes.len() {
        return Err(corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(model)
}
