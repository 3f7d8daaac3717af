//! JSON model files written by covariance estimation and read by filtering.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::covariance::{KronCovModel, SampleCovariance};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// An estimated covariance: Kronecker factors, or a dense sample covariance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelFile {
    Kron {
        method: String,
        model: KronCovModel,
    },
    Dense {
        p: usize,
        q: usize,
        n: usize,
        #[serde(with = "super::serde_matrix")]
        s: ComplexMatrix,
    },
}

impl ModelFile {
    pub fn dense(s: &SampleCovariance) -> Self {
        ModelFile::Dense {
            p: s.p,
            q: s.q,
            n: s.n,
            s: s.s.clone(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            ModelFile::Kron { model, .. } => (model.p(), model.q()),
            ModelFile::Dense { p, q, .. } => (*p, *q),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let m: ModelFile = serde_json::from_str(&text)?;
        match &m {
            ModelFile::Kron { model, .. } if !model.a.is_square() || !model.b.is_square() => {
                Err(Error::Format("model factors must be square".into()))
            }
            ModelFile::Dense { p, q, s, .. } if s.shape() != (p * q, p * q) => {
                Err(Error::Format(format!("dense model is {}x{}, expected pq={}", s.nrows(), s.ncols(), p * q)))
            }
            _ => Ok(m),
        }
    }
}
