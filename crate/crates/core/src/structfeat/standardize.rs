use serde::{Deserialize, Serialize};

use super::features::StructuralFeatureVector;
use crate::{Error, Result};

pub const SIGMA_FLOOR: f64 = 1e-8;

/// Per-column affine standardization fitted on training-graph features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStandardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Column means and population standard deviations (floored at
/// [`SIGMA_FLOOR`]) of `rows`.
pub fn fit_standardizer(rows: &[Vec<f64>]) -> Result<FeatureStandardizer> {
    if rows.len() < 2 {
        return Err(Error::Precondition(format!(
            "standardizer needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let d = rows[0].len();
    if let Some(bad) = rows.iter().position(|r| r.len() != d) {
        return Err(Error::Shape {
            layer: format!("standardizer row {bad}"),
            expected: d,
            got: rows[bad].len(),
        });
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for r in rows {
        for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let std = var.iter().map(|v| (v / n).sqrt().max(SIGMA_FLOOR)).collect();
    Ok(FeatureStandardizer { mean, std })
}

impl FeatureStandardizer {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, raw: &StructuralFeatureVector) -> Result<StructuralFeatureVector> {
        if raw.standardized {
            return Err(Error::Contract("features are already standardized".into()));
        }
        if raw.values.len() != self.dim() {
            return Err(Error::Shape {
                layer: "standardizer".into(),
                expected: self.dim(),
                got: raw.values.len(),
            });
        }
        Ok(StructuralFeatureVector {
            values: self.apply_slice(&raw.values),
            standardized: true,
        })
    }

    pub fn apply_slice(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }
}
