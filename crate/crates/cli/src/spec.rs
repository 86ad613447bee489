//! The JSON system description read by every command.
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "maps": [
//!     { "matrix": [[0.3, 0.0], [0.0, 0.3]], "translation": [0.0, 1.0], "weight": 0.5 },
//!     { "matrix": [[0.3, 0.0], [0.0, 0.3]], "translation": [1.0, 0.0], "weight": 0.5 }
//!   ],
//!   "meta": { "name": "example" }
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use affdim_core::{AffineIfs, Matrix, Vector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::report::to_json;

/// Tolerance on the total of the map weights.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IfsSpecFile {
    pub dimension: usize,
    pub maps: Vec<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    /// Row-major `d × d`.
    pub matrix: Vec<Vec<f64>>,
    pub translation: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

impl IfsSpecFile {
    /// Parses and validates; errors name the line/column or the field.
    pub fn parse(text: &str) -> CliResult<Self> {
        let spec: IfsSpecFile =
            serde_json::from_str(text).map_err(|e| CliError::input(format!("malformed spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a spec file, returning it with the SHA-256 of its bytes.
    pub fn load(path: &Path) -> CliResult<(Self, String)> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::input(format!("cannot read spec {}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| CliError::input(format!("spec {} is not UTF-8", path.display())))?;
        let spec = Self::parse(text).map_err(|e| CliError::input(format!("{}: {}", path.display(), e.message)))?;
        Ok((spec, sha256_hex(&bytes)))
    }

    pub fn validate(&self) -> CliResult<()> {
        let d = self.dimension;
        if d == 0 {
            return Err(CliError::input("dimension: must be at least 1"));
        }
        if self.maps.len() < 2 {
            return Err(CliError::input(format!("maps: at least two maps required, found {}", self.maps.len())));
        }
        for (i, m) in self.maps.iter().enumerate() {
            if m.matrix.len() != d {
                return Err(CliError::input(format!(
                    "maps[{i}].matrix: expected {d} rows, found {}",
                    m.matrix.len()
                )));
            }
            for (r, row) in m.matrix.iter().enumerate() {
                if row.len() != d {
                    return Err(CliError::input(format!(
                        "maps[{i}].matrix[{r}]: expected {d} entries, found {}",
                        row.len()
                    )));
                }
            }
            if m.translation.len() != d {
                return Err(CliError::input(format!(
                    "maps[{i}].translation: expected {d} entries, found {}",
                    m.translation.len()
                )));
            }
            if let Some(w) = m.weight {
                if !(w > 0.0 && w.is_finite()) {
                    return Err(CliError::input(format!("maps[{i}].weight: must be positive, got {w}")));
                }
            }
        }
        let given = self.maps.iter().filter(|m| m.weight.is_some()).count();
        if given != 0 && given != self.maps.len() {
            return Err(CliError::input(format!(
                "maps[].weight: given on {given} of {} maps; give all or none",
                self.maps.len()
            )));
        }
        if given > 0 {
            let total: f64 = self.maps.iter().filter_map(|m| m.weight).sum();
            if (total - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(CliError::input(format!(
                    "maps[].weight: weights sum to {total}, expected 1 within {WEIGHT_SUM_TOL:e}"
                )));
            }
        }
        Ok(())
    }

    /// Builds the system. Weights are rescaled to sum to exactly one.
    pub fn to_ifs(&self) -> CliResult<AffineIfs> {
        self.validate()?;
        let d = self.dimension;
        let matrices = self
            .maps
            .iter()
            .map(|m| Matrix::from_fn(d, d, |r, c| m.matrix[r][c]))
            .collect();
        let translations = self.maps.iter().map(|m| Vector::from_vec(m.translation.clone())).collect();
        let weights = if self.maps[0].weight.is_some() {
            let w: Vec<f64> = self.maps.iter().filter_map(|m| m.weight).collect();
            let total: f64 = w.iter().sum();
            Some(w.iter().map(|x| x / total).collect())
        } else {
            None
        };
        Ok(AffineIfs::new(matrices, translations, weights)?)
    }

    pub fn from_ifs(ifs: &AffineIfs, meta: Option<BTreeMap<String, String>>) -> Self {
        let d = ifs.dim();
        let maps = (0..ifs.len())
            .map(|i| {
                let a = &ifs.matrices()[i];
                MapSpec {
                    matrix: (0..d).map(|r| (0..d).map(|c| a[(r, c)]).collect()).collect(),
                    translation: ifs.translations()[i].iter().copied().collect(),
                    weight: ifs.weights().map(|w| w[i]),
                }
            })
            .collect();
        Self {
            dimension: d,
            maps,
            meta,
        }
    }

    /// Canonical serialization.
    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
