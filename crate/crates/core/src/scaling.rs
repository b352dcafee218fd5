//! Per-feature min-max scaling to `[0, 1]`.
//!
//! The W-step favours features with small discretisation error, so the
//! relative scale of features matters. Bounds are taken from training data
//! only and reused on new data, which may fall outside `[0, 1]`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Result};
use crate::linalg::Matrix;
use crate::model::FeatureMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(x: &FeatureMatrix) -> Self {
        let d = x.dim();
        let mut lo = alloc::vec![f64::INFINITY; d];
        let mut hi = alloc::vec![f64::NEG_INFINITY; d];
        for sample in x.values().columns() {
            for (i, &v) in sample.iter().enumerate() {
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
        Self { lo, hi }
    }

    /// Restores a scaler from stored bounds.
    pub fn from_bounds(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_dim("scaler bounds", lo.len(), hi.len())?;
        for (d, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l <= h) {
                return Err(invalid("scaler bounds", format!("feature {d}: [{l}, {h}]")));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// Maps each feature affinely so the training range becomes `[0, 1]`.
    /// Constant features map to 0.
    pub fn transform(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        check_dim("feature rows", self.lo.len(), x.dim())?;
        let scaled = Matrix::from_fn(x.dim(), x.len(), |d, t| {
            let range = self.hi[d] - self.lo[d];
            if range > 0.0 {
                (x.values()[(d, t)] - self.lo[d]) / range
            } else {
                0.0
            }
        });
        let out = FeatureMatrix::new(scaled)?;
        match x.feature_names() {
            Some(names) => out.with_names(names.to_vec()),
            None => Ok(out),
        }
    }
}
