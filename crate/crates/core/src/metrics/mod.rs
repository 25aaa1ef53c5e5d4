//! Surprise Adequacy models.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::types::{ClassId, TraceMatrix};

pub mod linalg;
pub mod lsa;
pub mod mdsa;
pub mod model_file;

pub use lsa::{fit_lsa, LsaModel, DEFAULT_DENSITY_FLOOR, DEFAULT_VAR_THRESHOLD};
pub use mdsa::{fit_mdsa, MdsaModel};
pub use model_file::{load_model, save_model, ModelFileError};

/// Rows per partial sum in parallel fitting.
pub(crate) const FIT_CHUNK_ROWS: usize = 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("need at least {min} traces, got {n}")]
    TooFewTraces { n: usize, min: usize },
    #[error("every feature fell below the variance threshold")]
    AllFeaturesFiltered,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite input")]
    NonFinite,
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

pub(crate) fn check_query(trace: &[f64], d: usize) -> Result<(), MetricError> {
    if trace.len() != d {
        return Err(MetricError::DimensionMismatch { expected: d, found: trace.len() });
    }
    if trace.iter().any(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Mdsa,
    Lsa,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mdsa => "mdsa",
            Method::Lsa => "lsa",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mdsa" => Ok(Method::Mdsa),
            "lsa" => Ok(Method::Lsa),
            other => Err(format!("unknown SA method `{other}` (expected mdsa or lsa)")),
        }
    }
}

/// A fitted per-class model of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum SaModel {
    Mdsa(MdsaModel),
    Lsa(LsaModel),
}

impl SaModel {
    pub fn fit(method: Method, traces: &TraceMatrix, class: ClassId, var_threshold: f64) -> Result<Self, MetricError> {
        Ok(match method {
            Method::Mdsa => SaModel::Mdsa(fit_mdsa(traces, class)?),
            Method::Lsa => SaModel::Lsa(fit_lsa(traces, class, var_threshold)?),
        })
    }

    pub fn method(&self) -> Method {
        match self {
            SaModel::Mdsa(_) => Method::Mdsa,
            SaModel::Lsa(_) => Method::Lsa,
        }
    }

    pub fn class(&self) -> ClassId {
        match self {
            SaModel::Mdsa(m) => m.class(),
            SaModel::Lsa(m) => m.class(),
        }
    }

    /// Query length.
    pub fn d(&self) -> usize {
        match self {
            SaModel::Mdsa(m) => m.d(),
            SaModel::Lsa(m) => m.d(),
        }
    }

    pub fn score(&self, trace: &[f64]) -> Result<f64, MetricError> {
        match self {
            SaModel::Mdsa(m) => m.score(trace),
            SaModel::Lsa(m) => m.score(trace),
        }
    }

    pub fn score_batch(&self, traces: &TraceMatrix) -> Result<Vec<f64>, MetricError> {
        match self {
            SaModel::Mdsa(m) => m.score_batch(traces),
            SaModel::Lsa(m) => m.score_batch(traces),
        }
    }

    pub fn score_batch_seq(&self, traces: &TraceMatrix) -> Result<Vec<f64>, MetricError> {
        match self {
            SaModel::Mdsa(m) => m.score_batch_seq(traces),
            SaModel::Lsa(m) => m.score_batch_seq(traces),
        }
    }
}
